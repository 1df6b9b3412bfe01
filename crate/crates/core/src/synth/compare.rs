//! Partition comparison, between two clusterings or against ground truth.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::cluster::{ClusterId, Clustering};
use crate::model::Address;

use super::GroundTruth;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompareError {
    #[error("address {0} is in one clustering but not the other")]
    UniverseMismatch(Address),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PartitionDiff {
    pub equal: bool,
    pub left_clusters: usize,
    pub right_clusters: usize,
    /// Right-hand clusters that intersect two or more left-hand clusters.
    pub merges: usize,
    /// Left-hand clusters that intersect two or more right-hand clusters.
    pub splits: usize,
    /// Smallest address whose cluster differs, if any.
    pub first_difference: Option<Address>,
}

/// Compares two clusterings of the same universe.
pub fn compare_partitions(
    left: &Clustering,
    right: &Clustering,
) -> Result<PartitionDiff, CompareError> {
    if let Some(a) = left.addresses().iter().find(|a| !right.contains(a)) {
        return Err(CompareError::UniverseMismatch(a.clone()));
    }
    if let Some(a) = right.addresses().iter().find(|a| !left.contains(a)) {
        return Err(CompareError::UniverseMismatch(a.clone()));
    }
    let mut left_parts: HashMap<&Address, BTreeSet<&Address>> = HashMap::new();
    let mut right_parts: HashMap<&Address, BTreeSet<&Address>> = HashMap::new();
    let mut first_difference = None;
    // both assignment lists are ordered by address over the same universe
    for ((a, l), (_, r)) in left.assignments().zip(right.assignments()) {
        right_parts.entry(r).or_default().insert(l);
        left_parts.entry(l).or_default().insert(r);
        if first_difference.is_none() && left_parts[l].len() + right_parts[r].len() > 2 {
            first_difference = Some(a.clone());
        }
    }
    let merges = right_parts.values().filter(|s| s.len() > 1).count();
    let splits = left_parts.values().filter(|s| s.len() > 1).count();
    Ok(PartitionDiff {
        equal: merges == 0 && splits == 0,
        left_clusters: left_parts.len(),
        right_clusters: right_parts.len(),
        merges,
        splits,
        first_difference,
    })
}

/// How a clustering errs against the true owners.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TruthScore {
    /// Clusters holding addresses of two or more participants.
    pub false_positive_clusters: Vec<ClusterId>,
    /// Participants whose addresses span two or more clusters.
    pub false_negative_participants: Vec<String>,
    /// Address pairs clustered together but owned by different participants.
    pub false_positive_pairs: u64,
    /// Address pairs owned by one participant but clustered apart.
    pub false_negative_pairs: u64,
    /// Clustered addresses the truth does not know.
    pub unowned_addresses: usize,
}

impl TruthScore {
    pub fn is_sound(&self) -> bool {
        self.false_positive_clusters.is_empty()
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

pub fn score_against_truth(clustering: &Clustering, truth: &GroundTruth) -> TruthScore {
    let owners = truth.owners();
    // cluster -> owner -> count
    let mut table: BTreeMap<&Address, BTreeMap<&str, u64>> = BTreeMap::new();
    let mut unowned_addresses = 0;
    for (a, c) in clustering.assignments() {
        match owners.get(a) {
            Some(p) => *table.entry(c).or_default().entry(p.as_str()).or_default() += 1,
            None => unowned_addresses += 1,
        }
    }
    let mut score = TruthScore {
        unowned_addresses,
        ..TruthScore::default()
    };
    let mut spread: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for (c, by_owner) in &table {
        if by_owner.len() > 1 {
            score.false_positive_clusters.push(ClusterId((*c).clone()));
        }
        let size: u64 = by_owner.values().sum();
        let same: u64 = by_owner.values().map(|&k| pairs(k)).sum();
        score.false_positive_pairs += pairs(size) - same;
        for (&p, &k) in by_owner {
            let entry = spread.entry(p).or_default();
            entry.0 += k;
            entry.1 += pairs(k);
        }
    }
    let mut clusters_per_owner: BTreeMap<&str, usize> = BTreeMap::new();
    for by_owner in table.values() {
        for &p in by_owner.keys() {
            *clusters_per_owner.entry(p).or_default() += 1;
        }
    }
    score.false_negative_participants = clusters_per_owner
        .into_iter()
        .filter(|&(_, n)| n > 1)
        .map(|(p, _)| p.to_string())
        .collect();
    score.false_negative_pairs = spread
        .values()
        .map(|&(total, together)| pairs(total) - together)
        .sum();
    score
}
