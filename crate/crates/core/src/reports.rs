//! Market, supply and top-transactor reports.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::amount::BsqAmount;
use crate::cluster::{ClusterId, Clustering};
use crate::graph::{received_by_cluster, transfer_endpoints, GraphError};
use crate::identity::{ClusterTagging, Role, RoleMap};
use crate::ingest::Cell;
use crate::model::{burn_amount, minted_amount, Corpus, ModelError, TxType};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("conservation violated: minted - burnt = {expected} but unspent colored outputs hold {unspent}")]
    ConservationViolation { expected: String, unspent: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Transfer counts by (sender side, recipient side), where the insider side
/// is proposers and generators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MarketBreakdown {
    pub pg_to_user: u64,
    pub user_to_user: u64,
    pub pg_to_pg: u64,
    pub user_to_pg: u64,
    pub insider_share: f64,
}

impl MarketBreakdown {
    pub fn total(&self) -> u64 {
        self.pg_to_user + self.user_to_user + self.pg_to_pg + self.user_to_pg
    }

    pub const SCHEMA: [&'static str; 6] = [
        "pg_to_user",
        "user_to_user",
        "pg_to_pg",
        "user_to_pg",
        "total",
        "insider_share",
    ];

    pub fn rows(&self) -> Vec<Vec<Cell>> {
        vec![vec![
            Cell::Int(self.pg_to_user),
            Cell::Int(self.user_to_user),
            Cell::Int(self.pg_to_pg),
            Cell::Int(self.user_to_pg),
            Cell::Int(self.total()),
            Cell::Ratio(self.insider_share),
        ]]
    }
}

pub fn market_breakdown(
    clustering: &Clustering,
    corpus: &Corpus,
    roles: &RoleMap,
) -> Result<MarketBreakdown, ReportError> {
    let insider = |c: &ClusterId| roles.get(c).is_some_and(|r| r.is_insider());
    let mut m = MarketBreakdown::default();
    for tx in corpus.regular().filter(|t| t.tx_type == TxType::Transfer) {
        let (sender, recipient, _) = transfer_endpoints(clustering, tx)?;
        let slot = match (insider(&sender), insider(&recipient)) {
            (true, false) => &mut m.pg_to_user,
            (false, false) => &mut m.user_to_user,
            (true, true) => &mut m.pg_to_pg,
            (false, true) => &mut m.user_to_pg,
        };
        *slot += 1;
    }
    let total = m.total();
    if total > 0 {
        m.insider_share = (m.pg_to_user + m.pg_to_pg + m.user_to_pg) as f64 / total as f64;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SupplyStats {
    pub minted: BsqAmount,
    pub burnt: BsqAmount,
    pub circulating: BsqAmount,
}

impl SupplyStats {
    pub const SCHEMA: [&'static str; 3] = ["minted", "burnt", "circulating"];

    pub fn rows(&self) -> Vec<Vec<Cell>> {
        vec![vec![
            Cell::Bsq(self.minted),
            Cell::Bsq(self.burnt),
            Cell::Bsq(self.circulating),
        ]]
    }
}

/// Totals issuance and burn over the corpus and cross-checks the
/// difference against the BSQ held by unspent colored outputs.
///
/// Burn by irregular transactions is counted: those transactions destroy
/// BSQ on chain whether or not they are analysed otherwise.
pub fn supply_stats(corpus: &Corpus) -> Result<SupplyStats, ReportError> {
    let mut minted: u128 = 0;
    let mut burnt: u128 = 0;
    for tx in corpus.transactions() {
        minted += minted_amount(tx).0 as u128;
        burnt += burn_amount(tx)?.0 as u128;
    }
    let unspent: u128 = corpus.unspent_colored().map(|(_, o)| o.bsq.0 as u128).sum();
    let violation = || ReportError::ConservationViolation {
        expected: format!("{minted} - {burnt}"),
        unspent: unspent.to_string(),
    };
    let circulating = minted.checked_sub(burnt).ok_or_else(violation)?;
    if circulating != unspent {
        return Err(violation());
    }
    let amount = |v: u128| u64::try_from(v).map(BsqAmount).map_err(|_| violation());
    Ok(SupplyStats {
        minted: amount(minted)?,
        burnt: amount(burnt)?,
        circulating: amount(circulating)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransactorRecord {
    pub cluster: ClusterId,
    pub total_received: BsqAmount,
    pub role: Role,
    pub tags: BTreeSet<String>,
}

pub const TOP_SCHEMA: [&str; 5] = ["rank", "cluster_id", "total_received", "role", "tags"];

pub fn top_rows(records: &[TransactorRecord]) -> Vec<Vec<Cell>> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                Cell::Int(i as u64 + 1),
                Cell::from(&r.cluster.0),
                Cell::Bsq(r.total_received),
                Cell::from(r.role.as_str()),
                Cell::Text(r.tags.iter().cloned().collect::<Vec<_>>().join(";")),
            ]
        })
        .collect()
}

/// The `k` clusters that received the most BSQ, ties broken by cluster id.
pub fn top_transactors(
    clustering: &Clustering,
    corpus: &Corpus,
    roles: &RoleMap,
    tagging: &ClusterTagging,
    k: usize,
) -> Vec<TransactorRecord> {
    let received = received_by_cluster(clustering, corpus);
    let mut ranked: Vec<(ClusterId, BsqAmount)> = clustering
        .cluster_ids()
        .map(|c| {
            let t = received.get(&c).copied().unwrap_or_default();
            (c, t)
        })
        .collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(cluster, total_received)| TransactorRecord {
            role: roles.get(&cluster).copied().unwrap_or(Role::User),
            tags: tagging.tags_of(&cluster),
            cluster,
            total_received,
        })
        .collect()
}
