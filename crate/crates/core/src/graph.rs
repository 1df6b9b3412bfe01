//! The address cluster graph: clusters as vertices, aggregated transfers
//! between them as directed edges.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::BsqAmount;
use crate::cluster::{ClusterId, Clustering};
use crate::identity::{ClusterTagging, Role, RoleMap};
use crate::model::{recipient_of, Address, Corpus, Transaction, TxType, Txid};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("transfer {txid} has inputs in clusters {first} and {other}")]
    InconsistentClustering {
        txid: Txid,
        first: ClusterId,
        other: ClusterId,
    },
    #[error("address {address} of transaction {txid} is not in the clustering")]
    UnknownAddress { txid: Txid, address: Address },
    #[error("transfer {0} has no inputs or no outputs")]
    MalformedTransfer(Txid),
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("unsupported export format {0:?} (expected dot, graphml or csv)")]
    UnsupportedFormat(String),
    #[error("graphml: {0}")]
    GraphMl(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vertex {
    pub role: Role,
    /// BSQ paid to the cluster's addresses by all regular transactions.
    pub total_received: BsqAmount,
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub count: u64,
    pub total: BsqAmount,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterGraph {
    pub vertices: BTreeMap<ClusterId, Vertex>,
    pub edges: BTreeMap<(ClusterId, ClusterId), Edge>,
}

/// Sender cluster, recipient cluster and amount of one transfer. The
/// amount is the first output's BSQ; change is excluded.
pub fn transfer_endpoints(
    clustering: &Clustering,
    tx: &Transaction,
) -> Result<(ClusterId, ClusterId, BsqAmount), GraphError> {
    let lookup = |address: &Address| {
        clustering
            .cluster_of(address)
            .ok_or_else(|| GraphError::UnknownAddress {
                txid: tx.txid,
                address: address.clone(),
            })
    };
    let mut inputs = tx.inputs.iter();
    let first = inputs
        .next()
        .ok_or(GraphError::MalformedTransfer(tx.txid))?;
    let sender = lookup(&first.address)?;
    for input in inputs {
        let other = lookup(&input.address)?;
        if other != sender {
            return Err(GraphError::InconsistentClustering {
                txid: tx.txid,
                first: sender,
                other,
            });
        }
    }
    let recipient_address = recipient_of(tx).map_err(|_| GraphError::MalformedTransfer(tx.txid))?;
    let recipient = lookup(recipient_address)?;
    Ok((sender, recipient, tx.outputs[0].bsq))
}

/// BSQ received per cluster over all regular transaction outputs.
pub fn received_by_cluster(
    clustering: &Clustering,
    corpus: &Corpus,
) -> HashMap<ClusterId, BsqAmount> {
    let mut received: HashMap<ClusterId, BsqAmount> = HashMap::new();
    for tx in corpus.regular() {
        for out in tx.outputs.iter().filter(|o| !o.bsq.is_zero()) {
            if let Some(c) = clustering.cluster_of(&out.address) {
                *received.entry(c).or_default() += out.bsq;
            }
        }
    }
    received
}

pub fn build_cluster_graph(
    clustering: &Clustering,
    corpus: &Corpus,
    roles: &RoleMap,
    tagging: &ClusterTagging,
) -> Result<ClusterGraph, GraphError> {
    let received = received_by_cluster(clustering, corpus);
    let vertices = clustering
        .cluster_ids()
        .map(|c| {
            let vertex = Vertex {
                role: roles.get(&c).copied().unwrap_or(Role::User),
                total_received: received.get(&c).copied().unwrap_or_default(),
                tags: tagging.tags_of(&c),
            };
            (c, vertex)
        })
        .collect();
    let mut edges: BTreeMap<(ClusterId, ClusterId), Edge> = BTreeMap::new();
    for tx in corpus.regular().filter(|t| t.tx_type == TxType::Transfer) {
        let (sender, recipient, amount) = transfer_endpoints(clustering, tx)?;
        let edge = edges.entry((sender, recipient)).or_insert(Edge {
            count: 0,
            total: BsqAmount::ZERO,
        });
        edge.count += 1;
        edge.total += amount;
    }
    Ok(ClusterGraph { vertices, edges })
}

/// Keeps edges whose total strictly exceeds `min_edge_total`, and the
/// vertices they touch.
pub fn filter_graph(g: &ClusterGraph, min_edge_total: BsqAmount) -> ClusterGraph {
    let edges: BTreeMap<_, _> = g
        .edges
        .iter()
        .filter(|(_, e)| e.total > min_edge_total)
        .map(|(k, e)| (k.clone(), *e))
        .collect();
    let touched: BTreeSet<&ClusterId> = edges.keys().flat_map(|(s, r)| [s, r]).collect();
    let vertices = g
        .vertices
        .iter()
        .filter(|(c, _)| touched.contains(c))
        .map(|(c, v)| (c.clone(), v.clone()))
        .collect();
    ClusterGraph { vertices, edges }
}

/// Weakly connected components, each sorted, in order of smallest member.
pub fn weak_components(g: &ClusterGraph) -> Vec<Vec<ClusterId>> {
    let mut adjacency: BTreeMap<&ClusterId, Vec<&ClusterId>> =
        g.vertices.keys().map(|c| (c, Vec::new())).collect();
    for (s, r) in g.edges.keys() {
        adjacency.entry(s).or_default().push(r);
        adjacency.entry(r).or_default().push(s);
    }
    let mut seen: BTreeSet<&ClusterId> = BTreeSet::new();
    let mut components = Vec::new();
    for &start in adjacency.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut component = vec![start.clone()];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if seen.insert(w) {
                    component.push(w.clone());
                    queue.push_back(w);
                }
            }
        }
        component.sort();
        components.push(component);
    }
    components
}

/// The subgraph induced by the largest weakly connected component; ties go
/// to the component with the smallest member id.
pub fn largest_component(g: &ClusterGraph) -> Result<ClusterGraph, GraphError> {
    let components = weak_components(g);
    // components arrive ordered by smallest member, so the first maximum wins
    let best = components
        .into_iter()
        .reduce(|best, c| if c.len() > best.len() { c } else { best })
        .ok_or(GraphError::EmptyGraph)?;
    let keep: BTreeSet<&ClusterId> = best.iter().collect();
    Ok(ClusterGraph {
        vertices: g
            .vertices
            .iter()
            .filter(|(c, _)| keep.contains(c))
            .map(|(c, v)| (c.clone(), v.clone()))
            .collect(),
        edges: g
            .edges
            .iter()
            .filter(|((s, r), _)| keep.contains(s) && keep.contains(r))
            .map(|(k, e)| (k.clone(), *e))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    GraphMl,
    Csv,
}

impl FromStr for ExportFormat {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "graphml" => Ok(ExportFormat::GraphMl),
            "csv" => Ok(ExportFormat::Csv),
            _ => Err(GraphError::UnsupportedFormat(s.to_string())),
        }
    }
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn tags_json(tags: &BTreeSet<String>) -> String {
    serde_json::to_string(tags).expect("strings serialize")
}

/// Serializes the graph. Vertices carry `role`, `color`, `size` (the
/// received BSQ, so proportional to it) and `tag`; edges carry `count` and
/// `total`. Output is sorted and byte-stable.
pub fn export_graph(g: &ClusterGraph, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Dot => export_dot(g).into_bytes(),
        ExportFormat::GraphMl => export_graphml(g).into_bytes(),
        ExportFormat::Csv => export_csv(g).into_bytes(),
    }
}

fn export_dot(g: &ClusterGraph) -> String {
    let mut out = String::from("digraph cluster_graph {\n  node [style=filled];\n");
    for (id, v) in &g.vertices {
        let tags: Vec<&str> = v.tags.iter().map(String::as_str).collect();
        let label = if tags.is_empty() {
            id.to_string()
        } else {
            format!("{id}\n{}", tags.join(", "))
        };
        let _ = writeln!(
            out,
            "  {} [role={}, fillcolor={}, size={}, tag={}, label={}];",
            dot_quote(id.as_str()),
            dot_quote(v.role.as_str()),
            dot_quote(v.role.color()),
            dot_quote(&v.total_received.to_string()),
            dot_quote(&tags_json(&v.tags)),
            dot_quote(&label),
        );
    }
    for ((s, r), e) in &g.edges {
        let _ = writeln!(
            out,
            "  {} -> {} [count={}, total={}];",
            dot_quote(s.as_str()),
            dot_quote(r.as_str()),
            e.count,
            dot_quote(&e.total.to_string()),
        );
    }
    out.push_str("}\n");
    out
}

fn export_graphml(g: &ClusterGraph) -> String {
    use quick_xml::escape::escape;
    let mut out = String::from(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
        "  <key id=\"role\" for=\"node\" attr.name=\"role\" attr.type=\"string\"/>\n",
        "  <key id=\"color\" for=\"node\" attr.name=\"color\" attr.type=\"string\"/>\n",
        "  <key id=\"size\" for=\"node\" attr.name=\"size\" attr.type=\"double\"/>\n",
        "  <key id=\"tag\" for=\"node\" attr.name=\"tag\" attr.type=\"string\"/>\n",
        "  <key id=\"count\" for=\"edge\" attr.name=\"count\" attr.type=\"long\"/>\n",
        "  <key id=\"total\" for=\"edge\" attr.name=\"total\" attr.type=\"double\"/>\n",
        "  <graph id=\"cluster_graph\" edgedefault=\"directed\">\n",
    ));
    for (id, v) in &g.vertices {
        let _ = writeln!(
            out,
            "    <node id=\"{}\"><data key=\"role\">{}</data><data key=\"color\">{}</data><data key=\"size\">{}</data><data key=\"tag\">{}</data></node>",
            escape(id.as_str()),
            v.role.as_str(),
            v.role.color(),
            v.total_received,
            escape(tags_json(&v.tags)),
        );
    }
    for ((s, r), e) in &g.edges {
        let _ = writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\"><data key=\"count\">{}</data><data key=\"total\">{}</data></edge>",
            escape(s.as_str()),
            escape(r.as_str()),
            e.count,
            e.total,
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn export_csv(g: &ClusterGraph) -> String {
    use crate::ingest::{write_table, Cell};
    let rows: Vec<Vec<Cell>> = g
        .edges
        .iter()
        .map(|((s, r), e)| {
            vec![
                Cell::from(&s.0),
                Cell::from(&r.0),
                Cell::Int(e.count),
                Cell::Bsq(e.total),
            ]
        })
        .collect();
    let mut out = Vec::new();
    write_table(&["sender", "recipient", "count", "total"], &rows, &mut out).expect("fixed schema");
    String::from_utf8(out).expect("csv of utf-8 cells")
}

#[derive(Deserialize)]
struct GraphMlDoc {
    graph: GraphMlGraph,
}

#[derive(Deserialize)]
struct GraphMlGraph {
    #[serde(default)]
    node: Vec<GraphMlItem>,
    #[serde(default)]
    edge: Vec<GraphMlItem>,
}

#[derive(Deserialize)]
struct GraphMlItem {
    #[serde(rename = "@id")]
    id: Option<String>,
    #[serde(rename = "@source")]
    source: Option<String>,
    #[serde(rename = "@target")]
    target: Option<String>,
    #[serde(default)]
    data: Vec<GraphMlData>,
}

#[derive(Deserialize)]
struct GraphMlData {
    #[serde(rename = "@key")]
    key: String,
    #[serde(rename = "$text", default)]
    value: String,
}

/// Reads back a GraphML document written by [`export_graph`].
pub fn parse_graphml(text: &str) -> Result<ClusterGraph, GraphError> {
    let bad = |what: String| GraphError::GraphMl(what);
    let doc: GraphMlDoc = quick_xml::de::from_str(text).map_err(|e| bad(e.to_string()))?;
    let data_of = |item: &GraphMlItem, key: &str| -> Result<String, GraphError> {
        item.data
            .iter()
            .find(|d| d.key == key)
            .map(|d| d.value.clone())
            .ok_or_else(|| bad(format!("missing data key {key:?}")))
    };
    let cluster = |s: Option<&String>| -> Result<ClusterId, GraphError> {
        let s = s.ok_or_else(|| bad("missing identifier".into()))?;
        Address::new(s)
            .map(ClusterId)
            .map_err(|e| bad(e.to_string()))
    };
    let amount = |s: String| s.parse::<BsqAmount>().map_err(|e| bad(e.to_string()));

    let mut g = ClusterGraph::default();
    for node in &doc.graph.node {
        let role_name = data_of(node, "role")?;
        let role = Role::from_name(&role_name)
            .ok_or_else(|| bad(format!("unknown role {role_name:?}")))?;
        let tags: BTreeSet<String> =
            serde_json::from_str(&data_of(node, "tag")?).map_err(|e| bad(format!("tag: {e}")))?;
        let vertex = Vertex {
            role,
            total_received: amount(data_of(node, "size")?)?,
            tags,
        };
        g.vertices.insert(cluster(node.id.as_ref())?, vertex);
    }
    for edge in &doc.graph.edge {
        let count = data_of(edge, "count")?
            .parse::<u64>()
            .map_err(|e| bad(format!("count: {e}")))?;
        let total = amount(data_of(edge, "total")?)?;
        g.edges.insert(
            (
                cluster(edge.source.as_ref())?,
                cluster(edge.target.as_ref())?,
            ),
            Edge { count, total },
        );
    }
    Ok(g)
}
