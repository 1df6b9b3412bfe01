//! Reference BSQ clustering: explicit adjacency lists and breadth-first
//! search, no union-find. Slow and obvious on purpose.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::cluster::Clustering;
use crate::model::{Address, Corpus, TxType};

pub fn oracle_cluster(corpus: &Corpus) -> Clustering {
    let mut adjacency: BTreeMap<&Address, BTreeSet<&Address>> = BTreeMap::new();
    for tx in corpus.transactions() {
        for a in tx
            .inputs
            .iter()
            .map(|i| &i.address)
            .chain(tx.outputs.iter().map(|o| &o.address))
        {
            adjacency.entry(a).or_default();
        }
        let owned: Vec<&Address> = match tx.tx_type {
            TxType::Genesis | TxType::Irregular => continue,
            TxType::Transfer => tx
                .inputs
                .iter()
                .map(|i| &i.address)
                .chain(
                    tx.outputs
                        .iter()
                        .filter(|o| o.index != 0)
                        .map(|o| &o.address),
                )
                .collect(),
            _ => tx
                .inputs
                .iter()
                .map(|i| &i.address)
                .chain(tx.outputs.iter().map(|o| &o.address))
                .collect(),
        };
        // a star around the first owned address connects them all
        if let Some((&hub, rest)) = owned.split_first() {
            for &a in rest {
                adjacency.entry(hub).or_default().insert(a);
                adjacency.entry(a).or_default().insert(hub);
            }
        }
    }

    let mut seen: BTreeSet<&Address> = BTreeSet::new();
    let mut groups = Vec::new();
    for &start in adjacency.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut group = vec![start.clone()];
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for &b in &adjacency[a] {
                if seen.insert(b) {
                    group.push(b.clone());
                    queue.push_back(b);
                }
            }
        }
        groups.push(group);
    }
    Clustering::from_groups(groups).expect("components are disjoint")
}
