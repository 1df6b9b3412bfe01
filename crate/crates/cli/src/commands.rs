use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use bsqlens_core::ingest::{genesis_spreadsheet_rows, GENESIS_SPREADSHEET_SCHEMA, TAG_DB_SCHEMA};
use bsqlens_core::reports::{top_rows, TOP_SCHEMA};
use bsqlens_core::synth::{Adversarial, GroundTruth};
use bsqlens_core::*;

use crate::output::{emit, sink, table_bytes, with_path, write_csv};
use crate::{
    ClusterArgs, Command, CorpusArgs, Failure, OptionalTagArgs, ReportKind, RoleArgs, SynthArgs,
    TableFormat, TagExtras,
};

pub fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Validate { corpus, out } => validate(&corpus, out.as_deref()),
        Command::Cluster {
            corpus,
            heuristic,
            out,
        } => {
            let corpus = load_corpus(&corpus)?;
            let clustering = cluster(&corpus, heuristic);
            write_clusters(&clustering, sink(out.as_deref())?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tag {
            corpus,
            clusters,
            tags,
            no_merge,
            out_dir,
        } => {
            let corpus = load_corpus(&corpus)?;
            let clustering = load_clustering(&clusters, &corpus)?;
            let (records, aliases) = load_tags(Some(&tags.tags), &tags.extra, &corpus)?;
            tag(&clustering, &records, &aliases, no_merge, &out_dir)
        }
        Command::Roles {
            corpus,
            clusters,
            roles,
            out,
        } => {
            let corpus = load_corpus(&corpus)?;
            let clustering = load_clustering(&clusters, &corpus)?;
            let roles = role_map(&clustering, &corpus, &roles);
            let rows: Vec<Vec<Cell>> = roles
                .iter()
                .map(|(c, r)| vec![Cell::from(&c.0), Cell::from(r.as_str())])
                .collect();
            emit(
                out.as_deref(),
                &table_bytes(&["cluster_id", "role"], &rows, TableFormat::Csv)?,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Graph {
            corpus,
            clusters,
            roles,
            tags,
            min_edge_bsq,
            largest_component: largest,
            format,
            out,
        } => {
            let corpus = load_corpus(&corpus)?;
            let clustering = load_clustering(&clusters, &corpus)?;
            let roles = role_map(&clustering, &corpus, &roles);
            let tagging = optional_tagging(&clustering, &tags, &corpus)?;
            let graph = build_cluster_graph(&clustering, &corpus, &roles, &tagging)
                .context("building graph")?;
            let mut graph = filter_graph(&graph, min_edge_bsq);
            if largest {
                graph = largest_component(&graph).context("selecting largest component")?;
            }
            emit(out.as_deref(), &export_graph(&graph, format))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Report {
            kind,
            corpus,
            clusters,
            roles,
            tags,
            k,
            format,
            out,
        } => {
            let corpus = load_corpus(&corpus)?;
            let bytes = match kind {
                ReportKind::Supply => {
                    let s = supply_stats(&corpus).map_err(|e| Failure::new("conservation", e))?;
                    table_bytes(&SupplyStats::SCHEMA, &s.rows(), format)?
                }
                ReportKind::Market => {
                    let clustering = load_clustering(&clusters, &corpus)?;
                    let roles = role_map(&clustering, &corpus, &roles);
                    let m = market_breakdown(&clustering, &corpus, &roles)
                        .context("market breakdown")?;
                    table_bytes(&MarketBreakdown::SCHEMA, &m.rows(), format)?
                }
                ReportKind::Top => {
                    let clustering = load_clustering(&clusters, &corpus)?;
                    let roles = role_map(&clustering, &corpus, &roles);
                    let tagging = optional_tagging(&clustering, &tags, &corpus)?;
                    let top = top_transactors(&clustering, &corpus, &roles, &tagging, k as usize);
                    table_bytes(&TOP_SCHEMA, &top_rows(&top), format)?
                }
            };
            emit(out.as_deref(), &bytes)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth(args) => synth(&args),
        Command::OracleDiff {
            corpus,
            clusters,
            truth,
        } => {
            let corpus = load_corpus(&corpus)?;
            let clustering = load_clustering(&clusters, &corpus)?;
            let truth = truth.as_deref().map(load_truth).transpose()?;
            oracle_diff(&corpus, &clustering, truth.as_ref())
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| with_path(e, path))
}

fn load_corpus(args: &CorpusArgs) -> Result<Corpus, Failure> {
    let parsed = parse_corpus(open(&args.txs)?, !args.lenient)?;
    if parsed.skipped_lines > 0 || !parsed.rejected.is_empty() {
        log::warn!(
            "{}: skipped {} malformed lines and {} invalid transactions",
            args.txs.display(),
            parsed.skipped_lines,
            parsed.rejected.len()
        );
    }
    Ok(parsed.corpus)
}

fn load_clustering(args: &ClusterArgs, corpus: &Corpus) -> Result<Clustering, Failure> {
    match &args.clusters {
        Some(path) => Ok(parse_clusters(open(path)?)?),
        None => Ok(cluster(corpus, args.heuristic)),
    }
}

fn load_truth(path: &Path) -> Result<GroundTruth, Failure> {
    serde_json::from_reader(open(path)?)
        .map_err(|e| Failure::new("parse", anyhow!("{}: {e}", path.display())))
}

fn role_map(clustering: &Clustering, corpus: &Corpus, args: &RoleArgs) -> RoleMap {
    let types: BTreeSet<TxType> = args.proposer_types.iter().copied().collect();
    assign_roles(clustering, corpus, &types)
}

fn load_tags(
    tags: Option<&Path>,
    extra: &TagExtras,
    corpus: &Corpus,
) -> Result<(Vec<TagRecord>, AliasMap), Failure> {
    let mut records = match tags {
        Some(path) => parse_tag_db(open(path)?)?,
        None => Vec::new(),
    };
    if let Some(path) = &extra.genesis_spreadsheet {
        let entries = parse_genesis_spreadsheet(open(path)?)?;
        let genesis = corpus
            .transactions()
            .iter()
            .find(|t| t.tx_type == TxType::Genesis)
            .ok_or_else(|| {
                anyhow!("corpus has no genesis transaction to map the spreadsheet onto")
            })?;
        let mapped =
            map_genesis_spreadsheet(&entries, genesis).context("mapping genesis spreadsheet")?;
        for record in mapped {
            if !records
                .iter()
                .any(|r| r.address == record.address && r.tag == record.tag)
            {
                records.push(record);
            }
        }
    }
    let aliases = match &extra.aliases {
        Some(path) => AliasMap::new(parse_alias_file(open(path)?)?).context("reading aliases")?,
        None => AliasMap::default(),
    };
    Ok((records, aliases))
}

fn optional_tagging(
    clustering: &Clustering,
    args: &OptionalTagArgs,
    corpus: &Corpus,
) -> Result<ClusterTagging, Failure> {
    if args.tags.is_none() && args.extra.genesis_spreadsheet.is_none() {
        return Ok(ClusterTagging::default());
    }
    let (records, aliases) = load_tags(args.tags.as_deref(), &args.extra, corpus)?;
    Ok(assign_tags_with(clustering, &records, &aliases))
}

fn validate(args: &CorpusArgs, out: Option<&Path>) -> Result<ExitCode, Failure> {
    let schema = ["txid", "violation", "detail"];
    let report = |failures: &[(Txid, Vec<Violation>)]| -> Result<Vec<u8>, Failure> {
        let rows: Vec<Vec<Cell>> = failures
            .iter()
            .flat_map(|(txid, vs)| {
                vs.iter().map(move |v| {
                    vec![
                        Cell::Text(txid.to_string()),
                        Cell::from(v.code()),
                        Cell::Text(v.to_string()),
                    ]
                })
            })
            .collect();
        table_bytes(&schema, &rows, TableFormat::Csv)
    };
    match parse_corpus(open(&args.txs)?, !args.lenient) {
        Ok(parsed) => {
            emit(out, &report(&parsed.rejected)?)?;
            eprintln!(
                "{} transactions valid, {} rejected, {} lines skipped",
                parsed.corpus.len(),
                parsed.rejected.len(),
                parsed.skipped_lines
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(IngestError::Validation(e)) => {
            emit(out, &report(&e.failures)?)?;
            Err(Failure::new(
                "validation",
                anyhow!("{} transactions failed validation", e.failures.len()),
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn tag(
    clustering: &Clustering,
    records: &[TagRecord],
    aliases: &AliasMap,
    no_merge: bool,
    out_dir: &Path,
) -> Result<ExitCode, Failure> {
    fs::create_dir_all(out_dir).map_err(|e| with_path(e, out_dir))?;
    let tagging = assign_tags_with(clustering, records, aliases);
    if !tagging.unknown_addresses.is_empty() {
        log::warn!(
            "{} tagged addresses do not occur in the corpus",
            tagging.unknown_addresses.len()
        );
    }
    let shared_rows = |t: &ClusterTagging| -> Vec<Vec<Cell>> {
        t.shared
            .iter()
            .flat_map(|(tag, ids)| {
                ids.iter()
                    .map(move |c| vec![Cell::from(tag.as_str()), Cell::from(&c.0)])
            })
            .collect()
    };
    write_csv(
        &out_dir.join("merged.csv"),
        &["tag", "cluster_id"],
        &shared_rows(&tagging),
    )?;

    let (merged, after) = if no_merge {
        (clustering.clone(), tagging.clone())
    } else {
        merge_by_shared_tags(clustering, &tagging)
    };
    write_clusters(&merged, sink(Some(&out_dir.join("clusters.csv")))?)?;

    let mut tagging_rows = Vec::new();
    for (cluster, tags) in &after.by_cluster {
        for (tag, evidence) in tags {
            for source in &evidence.sources {
                tagging_rows.push(vec![
                    Cell::from(&cluster.0),
                    Cell::from(tag.as_str()),
                    Cell::from(source.as_str()),
                ]);
            }
        }
    }
    write_csv(
        &out_dir.join("tagging.csv"),
        &["cluster_id", "tag", "source"],
        &tagging_rows,
    )?;

    let conflict_rows: Vec<Vec<Cell>> = after
        .conflicts
        .iter()
        .flat_map(|c| {
            after
                .tags_of(c)
                .into_iter()
                .map(move |t| vec![Cell::from(&c.0), Cell::Text(t)])
        })
        .collect();
    write_csv(
        &out_dir.join("conflicts.csv"),
        &["cluster_id", "tag"],
        &conflict_rows,
    )?;
    write_csv(
        &out_dir.join("shared.csv"),
        &["tag", "cluster_id"],
        &shared_rows(&after),
    )?;

    let review: Vec<Vec<Cell>> = spelling_review(&after)
        .into_iter()
        .map(|(a, b)| vec![Cell::Text(a), Cell::Text(b)])
        .collect();
    write_csv(
        &out_dir.join("review.csv"),
        &["tag", "similar_tag"],
        &review,
    )?;

    println!("clusters_before_merge: {}", clustering.cluster_count());
    println!("clusters_after_merge: {}", merged.cluster_count());
    println!("tagged_clusters: {}", after.tagged_cluster_count());
    println!("conflicting_clusters: {}", after.conflicts.len());
    println!("shared_tags: {}", after.shared.len());
    Ok(ExitCode::SUCCESS)
}

fn synth(args: &SynthArgs) -> Result<ExitCode, Failure> {
    let mut config = SynthConfig {
        participants: args.participants,
        tx_count: args.tx_count,
        seed: args.seed,
        adversarial: Adversarial {
            disguised_transfers: args.disguised_transfers,
            dummy_transfers: args.dummy_transfers,
            coinjoin: args.coinjoin,
        },
        migrations: args.migrations,
        alias_conflicts: args.alias_conflicts,
        ..SynthConfig::default()
    };
    if !args.mix.is_empty() {
        config.type_mix = args.mix.iter().copied().collect();
    }
    let out = generate(&config).map_err(|e| Failure::new("config", e))?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| with_path(e, dir))?;

    let mut corpus = Vec::new();
    serialize_corpus(&out.corpus, &mut corpus)?;
    emit(Some(&dir.join("corpus.jsonl")), &corpus)?;
    write_csv(
        &dir.join("tags.csv"),
        &TAG_DB_SCHEMA,
        &tag_db_rows(&out.tags),
    )?;
    write_csv(
        &dir.join("genesis_spreadsheet.csv"),
        &GENESIS_SPREADSHEET_SCHEMA,
        &genesis_spreadsheet_rows(&out.genesis_spreadsheet),
    )?;
    let mut truth = serde_json::to_vec_pretty(&out.truth).map_err(std::io::Error::from)?;
    truth.push(b'\n');
    emit(Some(&dir.join("ground_truth.json")), &truth)?;
    Ok(ExitCode::SUCCESS)
}

fn oracle_diff(
    corpus: &Corpus,
    clustering: &Clustering,
    truth: Option<&GroundTruth>,
) -> Result<ExitCode, Failure> {
    let oracle = oracle_cluster(corpus);
    let diff = compare_partitions(&oracle, clustering).map_err(|e| Failure::new("data", e))?;
    if diff.equal {
        println!("partitions equal");
    } else {
        println!("partitions differ");
        println!("merges: {}", diff.merges);
        println!("splits: {}", diff.splits);
        if let Some(a) = &diff.first_difference {
            println!("first_difference: {a}");
        }
    }
    println!("clusters: {}", diff.right_clusters);
    if let Some(truth) = truth {
        let score = score_against_truth(clustering, truth);
        println!(
            "false_positive_clusters: {}",
            score.false_positive_clusters.len()
        );
        println!(
            "false_negative_participants: {}",
            score.false_negative_participants.len()
        );
        println!("false_positive_pairs: {}", score.false_positive_pairs);
        println!("false_negative_pairs: {}", score.false_negative_pairs);
    }
    if diff.equal {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
