//! Address clustering, identity tagging and flow analysis for BSQ
//! colored-coin transactions.

pub mod amount;
pub mod cluster;
pub mod graph;
pub mod identity;
pub mod ingest;
pub mod model;
pub mod reports;
pub mod synth;

pub use amount::{BsqAmount, SatAmount};
pub use cluster::{
    cluster, cluster_bsq, cluster_multi_input, merge_clusterings, ClusterId, Clustering,
    DisjointSet, Heuristic,
};
pub use graph::{
    build_cluster_graph, export_graph, filter_graph, largest_component, parse_graphml,
    weak_components, ClusterGraph, Edge, ExportFormat, GraphError, Vertex,
};
pub use identity::{
    assign_roles, assign_tags, assign_tags_with, default_proposer_types, map_genesis_spreadsheet,
    merge_by_shared_tags, normalize_tag, spelling_review, AliasMap, ClusterTagging, IdentityError,
    Role, RoleMap,
};
pub use ingest::{
    parse_alias_file, parse_clusters, parse_corpus, parse_genesis_spreadsheet, parse_tag_db,
    serialize_corpus, tag_db_rows, write_clusters, write_table, Cell, IngestError, ParsedCorpus,
    TagRecord, TagSource,
};
pub use model::{
    burn_amount, is_self_transfer, minted_amount, recipient_of, validate_transaction, Address,
    Corpus, OutPoint, Transaction, TxInput, TxOutput, TxType, Txid, ValidationResult, Violation,
};
pub use reports::{
    market_breakdown, supply_stats, top_transactors, MarketBreakdown, ReportError, SupplyStats,
    TransactorRecord,
};
pub use synth::{
    compare_partitions, generate, oracle_cluster, score_against_truth, GroundTruth, SynthConfig,
    SynthError, SynthOutput,
};
