//! Union-find and the address clustering heuristics.
//!
//! The BSQ heuristic: every address on either side of a self-transfer
//! belongs to one participant; a transfer's inputs and all outputs but the
//! first belong to the sender. The multi-input heuristic is the usual
//! Bitcoin rule that co-spent inputs share an owner.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Address, Corpus, Transaction, TxType};

/// Disjoint-set forest over dense `u32` ids with path compression and
/// union by rank.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(len: usize) -> Self {
        assert!(
            len <= u32::MAX as usize,
            "too many elements for a u32 forest"
        );
        DisjointSet {
            parent: (0..len as u32).collect(),
            rank: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    /// Joins the sets of `a` and `b`; returns false if they were already one.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
        true
    }

    pub fn same(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }
}

/// A cluster's canonical id: its lexicographically smallest member address.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterId(pub Address);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl ClusterId {
    pub fn as_str(&self) -> &str {
        self.0.as_str()
    }
}

/// A partition of an address universe in canonical form: two clusterings
/// are equal iff they describe the same partition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clustering {
    /// Sorted, deduplicated universe.
    members: Vec<Address>,
    /// For each member, the index of its cluster's smallest member.
    canon: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("address {0} appears in more than one group")]
pub struct OverlappingGroups(pub Address);

impl Clustering {
    /// Every address as its own cluster.
    pub fn singletons(mut members: Vec<Address>) -> Self {
        members.sort_unstable();
        members.dedup();
        let canon = (0..members.len() as u32).collect();
        Clustering { members, canon }
    }

    /// Reads a finished forest over a sorted universe.
    fn from_forest(members: Vec<Address>, mut forest: DisjointSet) -> Self {
        let mut first_of_root = vec![u32::MAX; members.len()];
        let canon = (0..members.len() as u32)
            .map(|i| {
                let root = forest.find(i) as usize;
                if first_of_root[root] == u32::MAX {
                    first_of_root[root] = i;
                }
                first_of_root[root]
            })
            .collect();
        Clustering { members, canon }
    }

    /// Builds a clustering from explicit disjoint groups.
    pub fn from_groups<I>(groups: I) -> Result<Self, OverlappingGroups>
    where
        I: IntoIterator<Item = Vec<Address>>,
    {
        let mut pairs: Vec<(Address, Address)> = Vec::new();
        for group in groups {
            let Some(min) = group.iter().min().cloned() else {
                continue;
            };
            pairs.extend(group.into_iter().map(|a| (a, min.clone())));
        }
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(OverlappingGroups(w[0].0.clone()));
        }
        let members: Vec<Address> = pairs.iter().map(|(a, _)| a.clone()).collect();
        let canon = pairs
            .iter()
            .map(|(_, min)| members.binary_search(min).expect("min is a member") as u32)
            .collect();
        Ok(Clustering { members, canon })
    }

    /// Number of addresses.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.canon
            .iter()
            .enumerate()
            .filter(|&(i, &c)| i as u32 == c)
            .count()
    }

    /// The sorted address universe.
    pub fn addresses(&self) -> &[Address] {
        &self.members
    }

    pub fn index_of(&self, address: &Address) -> Option<usize> {
        self.members.binary_search(address).ok()
    }

    pub fn cluster_of(&self, address: &Address) -> Option<ClusterId> {
        self.index_of(address)
            .map(|i| ClusterId(self.members[self.canon[i] as usize].clone()))
    }

    pub fn contains(&self, address: &Address) -> bool {
        self.index_of(address).is_some()
    }

    /// `(address, cluster)` for every address, ordered by address.
    pub fn assignments(&self) -> impl Iterator<Item = (&Address, &Address)> + '_ {
        self.members
            .iter()
            .zip(&self.canon)
            .map(|(a, &c)| (a, &self.members[c as usize]))
    }

    pub fn cluster_ids(&self) -> impl Iterator<Item = ClusterId> + '_ {
        self.canon
            .iter()
            .enumerate()
            .filter(|&(i, &c)| i as u32 == c)
            .map(|(i, _)| ClusterId(self.members[i].clone()))
    }

    /// Members of every cluster, keyed and sorted.
    pub fn clusters(&self) -> BTreeMap<ClusterId, Vec<Address>> {
        let mut out: BTreeMap<ClusterId, Vec<Address>> = BTreeMap::new();
        for (a, c) in self.assignments() {
            out.entry(ClusterId(c.clone())).or_default().push(a.clone());
        }
        out
    }

    /// Rows for `clusters.csv`: ordered by cluster id, then address.
    pub fn sorted_rows(&self) -> Vec<(&Address, &Address)> {
        // members are sorted, so index order is address order
        let mut order: Vec<(u32, u32)> = self
            .canon
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32))
            .collect();
        order.sort_unstable();
        order
            .into_iter()
            .map(|(c, i)| (&self.members[i as usize], &self.members[c as usize]))
            .collect()
    }

    fn forest(&self) -> DisjointSet {
        let mut forest = DisjointSet::new(self.members.len());
        for (i, &c) in self.canon.iter().enumerate() {
            forest.union(i as u32, c);
        }
        forest
    }

    /// Unions the clusters touched by each group. Addresses outside the
    /// universe are ignored.
    pub fn coarsen<'a, I, G>(&self, groups: I) -> Clustering
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = &'a Address>,
    {
        let mut forest = self.forest();
        for group in groups {
            let mut ids = group.into_iter().filter_map(|a| self.index_of(a));
            if let Some(first) = ids.next() {
                for other in ids {
                    forest.union(first as u32, other as u32);
                }
            }
        }
        Clustering::from_forest(self.members.clone(), forest)
    }
}

/// Which clustering rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Heuristic {
    #[default]
    Bsq,
    MultiInput,
    Merged,
}

impl FromStr for Heuristic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bsq" => Ok(Heuristic::Bsq),
            "multi-input" => Ok(Heuristic::MultiInput),
            "merged" => Ok(Heuristic::Merged),
            other => Err(format!(
                "unknown heuristic {other:?} (expected bsq, multi-input or merged)"
            )),
        }
    }
}

/// Addresses the BSQ heuristic places with the transaction's inputs, or
/// `None` if the transaction contributes nothing.
pub fn bsq_owner_group(tx: &Transaction) -> Option<Vec<&Address>> {
    let outputs = match tx.tx_type {
        TxType::Genesis | TxType::Irregular => return None,
        TxType::Transfer => tx.outputs.get(1..).unwrap_or(&[]),
        _ => &tx.outputs[..],
    };
    Some(
        tx.inputs
            .iter()
            .map(|i| &i.address)
            .chain(outputs.iter().map(|o| &o.address))
            .collect(),
    )
}

fn multi_input_group(tx: &Transaction) -> Option<Vec<&Address>> {
    if tx.tx_type == TxType::Irregular {
        return None;
    }
    Some(tx.inputs.iter().map(|i| &i.address).collect())
}

/// Every address referenced anywhere in the corpus, sorted.
pub fn address_universe(corpus: &Corpus) -> Vec<Address> {
    let mut all: Vec<Address> = corpus
        .transactions()
        .par_iter()
        .flat_map_iter(|tx| tx.addresses().cloned().collect::<Vec<_>>())
        .collect();
    all.par_sort_unstable();
    all.dedup();
    all
}

const EXTRACT_CHUNK: usize = 1 << 16;

fn cluster_with<F>(corpus: &Corpus, rule: F) -> Clustering
where
    F: Fn(&Transaction) -> Option<Vec<&Address>> + Sync,
{
    let members = address_universe(corpus);
    let mut forest = DisjointSet::new(members.len());
    let intern = |a: &Address| members.binary_search(a).expect("universe covers corpus") as u32;
    // Constraint extraction runs in parallel per chunk; unions are applied
    // sequentially so the forest has a single owner.
    for chunk in corpus.transactions().chunks(EXTRACT_CHUNK) {
        let groups: Vec<Vec<u32>> = chunk
            .par_iter()
            .filter_map(|tx| rule(tx).map(|g| g.into_iter().map(intern).collect()))
            .collect();
        for group in groups {
            if let Some((&first, rest)) = group.split_first() {
                for &other in rest {
                    forest.union(first, other);
                }
            }
        }
    }
    Clustering::from_forest(members, forest)
}

/// Clusters with the BSQ self-transfer heuristic.
pub fn cluster_bsq(corpus: &Corpus) -> Clustering {
    cluster_with(corpus, bsq_owner_group)
}

/// Clusters with the multi-input heuristic.
pub fn cluster_multi_input(corpus: &Corpus) -> Clustering {
    cluster_with(corpus, multi_input_group)
}

/// The finest partition coarser than both `a` and `b`, over the union of
/// their universes.
pub fn merge_clusterings(a: &Clustering, b: &Clustering) -> Clustering {
    let mut members: Vec<Address> = a.members.iter().chain(&b.members).cloned().collect();
    members.sort_unstable();
    members.dedup();
    let mut forest = DisjointSet::new(members.len());
    for side in [a, b] {
        for (addr, canon) in side.assignments() {
            let i = members.binary_search(addr).expect("member") as u32;
            let j = members.binary_search(canon).expect("member") as u32;
            forest.union(i, j);
        }
    }
    Clustering::from_forest(members, forest)
}

pub fn cluster(corpus: &Corpus, heuristic: Heuristic) -> Clustering {
    match heuristic {
        Heuristic::Bsq => cluster_bsq(corpus),
        Heuristic::MultiInput => cluster_multi_input(corpus),
        Heuristic::Merged => merge_clusterings(&cluster_bsq(corpus), &cluster_multi_input(corpus)),
    }
}
