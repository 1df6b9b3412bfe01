//! Identity evidence on clusters: tag normalization and propagation,
//! conflict and shared-tag detection, genesis-ordering tag mapping, and
//! role assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterId, Clustering};
use crate::ingest::{TagRecord, TagSource};
use crate::model::{Address, Corpus, Transaction, TxType, Txid};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentityError {
    #[error("tag is empty after trimming")]
    EmptyTag,
    #[error("spreadsheet has {entries} entries but the genesis transaction has {outputs} outputs")]
    LengthMismatch { entries: usize, outputs: usize },
    #[error("transaction {0} is not the genesis transaction")]
    NotGenesis(Txid),
}

/// A tag after trimming, case folding and whitespace collapsing, with the
/// raw spellings that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedTag {
    pub canonical: String,
    pub raw_variants: BTreeSet<String>,
}

fn fold(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

pub fn normalize_tag(raw: &str) -> Result<NormalizedTag, IdentityError> {
    let canonical = fold(raw);
    if canonical.is_empty() {
        return Err(IdentityError::EmptyTag);
    }
    Ok(NormalizedTag {
        canonical,
        raw_variants: BTreeSet::from([raw.trim().to_string()]),
    })
}

/// Manual spelling corrections: variant spellings mapped onto a canonical
/// spelling before tags are compared.
#[derive(Debug, Clone, Default)]
pub struct AliasMap {
    to_canonical: HashMap<String, String>,
}

impl AliasMap {
    pub fn new<I, S>(pairs: I) -> Result<Self, IdentityError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut to_canonical = HashMap::new();
        for (canonical, variant) in pairs {
            let canonical = normalize_tag(canonical.as_ref())?.canonical;
            let variant = normalize_tag(variant.as_ref())?.canonical;
            to_canonical.insert(variant, canonical);
        }
        Ok(AliasMap { to_canonical })
    }

    pub fn resolve(&self, raw: &str) -> Result<String, IdentityError> {
        let folded = normalize_tag(raw)?.canonical;
        Ok(self.to_canonical.get(&folded).cloned().unwrap_or(folded))
    }
}

/// Attaches the i-th spreadsheet entry's tag to the i-th genesis output.
pub fn map_genesis_spreadsheet(
    entries: &[(String, Address)],
    genesis: &Transaction,
) -> Result<Vec<TagRecord>, IdentityError> {
    if genesis.tx_type != TxType::Genesis {
        return Err(IdentityError::NotGenesis(genesis.txid));
    }
    if entries.len() != genesis.outputs.len() {
        return Err(IdentityError::LengthMismatch {
            entries: entries.len(),
            outputs: genesis.outputs.len(),
        });
    }
    Ok(entries
        .iter()
        .zip(&genesis.outputs)
        .map(|((tag, _prelaunch), out)| TagRecord {
            address: out.address.clone(),
            tag: tag.clone(),
            source: TagSource::GenesisMapping,
        })
        .collect())
}

/// Everything known about one canonical tag on one cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagEvidence {
    pub tag: NormalizedTag,
    pub sources: BTreeSet<TagSource>,
    pub addresses: BTreeSet<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ResolvedTag {
    address: Address,
    canonical: String,
    raw: String,
    source: TagSource,
}

/// Tags propagated from addresses to their clusters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterTagging {
    pub by_cluster: BTreeMap<ClusterId, BTreeMap<String, TagEvidence>>,
    /// Clusters carrying two or more distinct canonical tags.
    pub conflicts: BTreeSet<ClusterId>,
    /// Canonical tags carried by two or more clusters.
    pub shared: BTreeMap<String, BTreeSet<ClusterId>>,
    /// Tagged addresses absent from the clustering.
    pub unknown_addresses: BTreeSet<Address>,
    resolved: Vec<ResolvedTag>,
}

impl ClusterTagging {
    pub fn tagged_cluster_count(&self) -> usize {
        self.by_cluster.len()
    }

    pub fn tags_of(&self, cluster: &ClusterId) -> BTreeSet<String> {
        self.by_cluster
            .get(cluster)
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default()
    }

    fn rebuild(clustering: &Clustering, resolved: Vec<ResolvedTag>) -> ClusterTagging {
        let mut by_cluster: BTreeMap<ClusterId, BTreeMap<String, TagEvidence>> = BTreeMap::new();
        let mut unknown_addresses = BTreeSet::new();
        for r in &resolved {
            let Some(cluster) = clustering.cluster_of(&r.address) else {
                unknown_addresses.insert(r.address.clone());
                continue;
            };
            let evidence = by_cluster
                .entry(cluster)
                .or_default()
                .entry(r.canonical.clone())
                .or_insert_with(|| TagEvidence {
                    tag: NormalizedTag {
                        canonical: r.canonical.clone(),
                        raw_variants: BTreeSet::new(),
                    },
                    sources: BTreeSet::new(),
                    addresses: BTreeSet::new(),
                });
            evidence.tag.raw_variants.insert(r.raw.clone());
            evidence.sources.insert(r.source);
            evidence.addresses.insert(r.address.clone());
        }
        let conflicts = by_cluster
            .iter()
            .filter(|(_, tags)| tags.len() >= 2)
            .map(|(c, _)| c.clone())
            .collect();
        let mut carriers: BTreeMap<String, BTreeSet<ClusterId>> = BTreeMap::new();
        for (cluster, tags) in &by_cluster {
            for tag in tags.keys() {
                carriers
                    .entry(tag.clone())
                    .or_default()
                    .insert(cluster.clone());
            }
        }
        carriers.retain(|_, clusters| clusters.len() >= 2);
        ClusterTagging {
            by_cluster,
            conflicts,
            shared: carriers,
            unknown_addresses,
            resolved,
        }
    }
}

/// Propagates each address tag to the address's cluster.
pub fn assign_tags(clustering: &Clustering, tags: &[TagRecord]) -> ClusterTagging {
    assign_tags_with(clustering, tags, &AliasMap::default())
}

/// As [`assign_tags`], applying manual spelling corrections first.
pub fn assign_tags_with(
    clustering: &Clustering,
    tags: &[TagRecord],
    aliases: &AliasMap,
) -> ClusterTagging {
    let resolved = tags
        .iter()
        .filter_map(|t| match aliases.resolve(&t.tag) {
            Ok(canonical) => Some(ResolvedTag {
                address: t.address.clone(),
                canonical,
                raw: t.tag.trim().to_string(),
                source: t.source,
            }),
            Err(_) => {
                log::warn!("ignoring empty tag on {}", t.address);
                None
            }
        })
        .collect();
    ClusterTagging::rebuild(clustering, resolved)
}

/// Unions every set of clusters that share a canonical tag, then
/// recomputes the tagging on the coarser clustering.
pub fn merge_by_shared_tags(
    clustering: &Clustering,
    tagging: &ClusterTagging,
) -> (Clustering, ClusterTagging) {
    if tagging.shared.is_empty() {
        return (clustering.clone(), tagging.clone());
    }
    let merged = clustering.coarsen(tagging.shared.values().map(|ids| ids.iter().map(|c| &c.0)));
    let retagged = ClusterTagging::rebuild(&merged, tagging.resolved.clone());
    (merged, retagged)
}

/// Pairs of distinct canonical tags one edit apart, for manual review.
pub fn spelling_review(tagging: &ClusterTagging) -> Vec<(String, String)> {
    let tags: BTreeSet<&String> = tagging.by_cluster.values().flat_map(|m| m.keys()).collect();
    let tags: Vec<&String> = tags.into_iter().collect();
    let mut pairs = Vec::new();
    for (i, a) in tags.iter().enumerate() {
        for b in &tags[i + 1..] {
            if a.chars().count().abs_diff(b.chars().count()) <= 1 && strsim::levenshtein(a, b) == 1
            {
                pairs.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Proposer,
    Generator,
    User,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Proposer => "proposer",
            Role::Generator => "generator",
            Role::User => "user",
        }
    }

    /// Vertex color used in graph exports.
    pub fn color(self) -> &'static str {
        match self {
            Role::Proposer => "red",
            Role::Generator => "blue",
            Role::User => "white",
        }
    }

    pub fn from_name(s: &str) -> Option<Role> {
        [Role::Proposer, Role::Generator, Role::User]
            .into_iter()
            .find(|r| r.as_str() == s)
    }

    /// Proposers and generators, the "insider" side of the market.
    pub fn is_insider(self) -> bool {
        self != Role::User
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type RoleMap = BTreeMap<ClusterId, Role>;

pub fn default_proposer_types() -> BTreeSet<TxType> {
    BTreeSet::from([TxType::Proposal])
}

/// Proposer if the cluster holds an output address of a transaction whose
/// type is in `proposer_types`; otherwise generator if it holds a genesis
/// output address; otherwise user.
pub fn assign_roles(
    clustering: &Clustering,
    corpus: &Corpus,
    proposer_types: &BTreeSet<TxType>,
) -> RoleMap {
    let mut proposers = HashSet::new();
    let mut generators = HashSet::new();
    for tx in corpus.regular() {
        let target = if proposer_types.contains(&tx.tx_type) {
            &mut proposers
        } else if tx.tx_type == TxType::Genesis {
            &mut generators
        } else {
            continue;
        };
        for out in &tx.outputs {
            if let Some(c) = clustering.cluster_of(&out.address) {
                target.insert(c);
            }
        }
    }
    clustering
        .cluster_ids()
        .map(|c| {
            let role = if proposers.contains(&c) {
                Role::Proposer
            } else if generators.contains(&c) {
                Role::Generator
            } else {
                Role::User
            };
            (c, role)
        })
        .collect()
}
