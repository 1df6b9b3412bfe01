//! Acceptance suite. Prints one PASS, FAIL or SKIP line per criterion and
//! exits non-zero if any criterion fails.
//!
//! The real-corpus check runs only when `BSQLENS_REAL_TXS` points at the
//! extracted corpus; `BSQLENS_REAL_TAGS`, `BSQLENS_REAL_ALIASES` and
//! `BSQLENS_REAL_GENESIS_SPREADSHEET` supply the identity inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use bsqlens_core::synth::{InjectedEvent, LedgerKind, SynthRng};
use bsqlens_core::*;
use tempfile::TempDir;

const ORACLE_CORPORA: u64 = 100;
const ORACLE_MAX_TXS: usize = 10_000;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const PERF_TXS: usize = 1_000_000;
const PERF_PARTICIPANTS: usize = 2_000;
const PERF_TIME_BUDGET: Duration = Duration::from_secs(60);
const PERF_MEMORY_BUDGET_KIB: u64 = 2 * 1024 * 1024;
const THREAD_COUNTS: [&str; 3] = ["1", "2", "4"];

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn pass_if(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("oracle_equivalence", oracle_equivalence),
        ("soundness_completeness", soundness_completeness),
        ("conservation", conservation),
        ("tag_pipeline", tag_pipeline),
        ("coinjoin_reproduction", coinjoin_reproduction),
        ("countermeasure_reproduction", countermeasure_reproduction),
        ("market_graph_consistency", market_graph_consistency),
        ("cli_determinism", cli_determinism),
        ("performance", performance),
        ("real_corpus", real_corpus),
    ];
    let mut failed = 0;
    panic::set_hook(Box::new(|_| {}));
    for (name, check) in checks {
        let verdict = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::Fail(format!("panicked: {msg}"))
        });
        match verdict {
            Verdict::Pass(d) => println!("PASS {name}: {d}"),
            Verdict::Skip(d) => println!("SKIP {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn config(seed: u64, participants: usize, tx_count: usize) -> SynthConfig {
    SynthConfig {
        seed,
        participants,
        tx_count,
        ..SynthConfig::default()
    }
}

/// Configs spanning sizes up to the oracle limit and every generator mode.
fn varied_config(i: u64) -> SynthConfig {
    let tx_count = 100 + (i as usize * (ORACLE_MAX_TXS - 100)) / (ORACLE_CORPORA as usize - 1);
    let mut c = config(1000 + i, 10 + (i as usize * 7) % 90, tx_count);
    match i % 4 {
        1 => c.adversarial.disguised_transfers = true,
        2 => c.adversarial.dummy_transfers = true,
        3 => {
            c.adversarial.coinjoin = true;
            c.migrations = 2;
            c.alias_conflicts = 2;
            c.type_mix.insert(TxType::Irregular, 40);
        }
        _ => {}
    }
    c
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut txs = 0;
    for i in 0..ORACLE_CORPORA {
        let out = generate(&varied_config(i)).expect("feasible config");
        txs += out.corpus.len();
        let diff = compare_partitions(&oracle_cluster(&out.corpus), &cluster_bsq(&out.corpus))
            .expect("same universe");
        if !diff.equal {
            mismatches.push(i);
        }
    }
    let elapsed = start.elapsed();
    pass_if(
        mismatches.is_empty() && elapsed < ORACLE_BUDGET,
        format!(
            "{ORACLE_CORPORA} corpora, {txs} txs, mismatches {mismatches:?}, {:.1}s (budget {}s)",
            elapsed.as_secs_f64(),
            ORACLE_BUDGET.as_secs()
        ),
    )
}

fn soundness_completeness() -> Verdict {
    let mut false_positive_clusters = 0;
    let mut split_constraints = 0;
    let mut constraints = 0;
    for seed in 0..20 {
        let mut c = config(2000 + seed, 20 + seed as usize * 5, 3000);
        c.migrations = 1;
        c.alias_conflicts = 1;
        let out = generate(&c).unwrap();
        let clustering = cluster_bsq(&out.corpus);
        false_positive_clusters += score_against_truth(&clustering, &out.truth)
            .false_positive_clusters
            .len();
        for tx in out.corpus.transactions() {
            let owned: Vec<&Address> = match tx.tx_type {
                TxType::Genesis | TxType::Irregular => continue,
                TxType::Transfer => tx
                    .inputs
                    .iter()
                    .map(|i| &i.address)
                    .chain(tx.outputs.iter().skip(1).map(|o| &o.address))
                    .collect(),
                _ => tx.addresses().collect(),
            };
            constraints += 1;
            let ids: BTreeSet<ClusterId> = owned
                .iter()
                .filter_map(|a| clustering.cluster_of(a))
                .collect();
            if ids.len() != 1 {
                split_constraints += 1;
            }
        }
    }
    pass_if(
        false_positive_clusters == 0 && split_constraints == 0,
        format!(
            "20 corpora: {false_positive_clusters} false-positive clusters, \
             {split_constraints}/{constraints} self-transfer constraints split"
        ),
    )
}

fn conservation() -> Verdict {
    let mut corpora = 0;
    let mut txs = 0usize;
    let mut identity_failures = 0usize;
    let mut supply_failures = Vec::new();
    for i in 0..ORACLE_CORPORA {
        let out = generate(&varied_config(i)).unwrap();
        corpora += 1;
        let mut minted = 0u128;
        let mut burnt = 0u128;
        for tx in out.corpus.transactions() {
            txs += 1;
            let m = minted_amount(tx).0 as u128;
            let Ok(b) = burn_amount(tx) else {
                identity_failures += 1;
                continue;
            };
            if tx.input_bsq() + m != tx.output_bsq() + b.0 as u128 {
                identity_failures += 1;
            }
            minted += m;
            burnt += b.0 as u128;
        }
        let unspent: u128 = out
            .corpus
            .unspent_colored()
            .map(|(_, o)| o.bsq.0 as u128)
            .sum();
        let ledger_ok = out
            .truth
            .ledger
            .iter()
            .all(|e| e.inputs_bsq + e.minted == e.outputs_bsq + e.burnt);
        if minted.checked_sub(burnt) != Some(unspent)
            || supply_stats(&out.corpus).is_err()
            || !ledger_ok
        {
            supply_failures.push(i);
        }
    }
    pass_if(
        identity_failures == 0 && supply_failures.is_empty(),
        format!(
            "{corpora} corpora: per-tx identity {}/{txs} hold, supply mismatches {supply_failures:?}",
            txs - identity_failures
        ),
    )
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bsqlens"));
    cmd.stderr(Stdio::null());
    cmd
}

fn run(args: &[&str]) -> std::process::Output {
    let out = bin()
        .args(args)
        .stderr(Stdio::piped())
        .output()
        .expect("binary runs");
    assert!(
        out.status.code() == Some(0),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

fn tag_pipeline() -> Verdict {
    let mut problems = Vec::new();
    let mut total_migrations = 0;
    for (seed, migrations, aliases) in [(1u64, 1usize, 1usize), (2, 3, 2), (3, 6, 4), (4, 0, 3)] {
        let dir = TempDir::new().unwrap();
        let (m, a) = (migrations.to_string(), aliases.to_string());
        let seed_s = seed.to_string();
        run(&[
            "synth",
            "--seed",
            &seed_s,
            "--participants",
            "60",
            "--tx-count",
            "4000",
            "--migrations",
            &m,
            "--alias-conflicts",
            &a,
            "--out-dir",
            p(dir.path()),
        ]);
        let tag_dir = dir.path().join("tag");
        let summary = run(&[
            "tag",
            "--txs",
            p(&dir.path().join("corpus.jsonl")),
            "--tags",
            p(&dir.path().join("tags.csv")),
            "--genesis-spreadsheet",
            p(&dir.path().join("genesis_spreadsheet.csv")),
            "--out-dir",
            p(&tag_dir),
        ]);
        let summary: BTreeMap<String, usize> = String::from_utf8(summary.stdout)
            .unwrap()
            .lines()
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_string(), v.parse().unwrap()))
            .collect();
        total_migrations += migrations;
        let reduction = summary["clusters_before_merge"] - summary["clusters_after_merge"];
        if reduction != migrations {
            problems.push(format!(
                "seed {seed}: merge removed {reduction} clusters, expected {migrations}"
            ));
        }
        if summary["shared_tags"] != 0
            || fs::read_to_string(tag_dir.join("shared.csv")).unwrap() != "tag,cluster_id\n"
        {
            problems.push(format!("seed {seed}: shared tags remain after merge"));
        }

        let clusters =
            parse_clusters(fs::File::open(tag_dir.join("clusters.csv")).unwrap()).unwrap();
        let conflicts: BTreeSet<(String, String)> =
            fs::read_to_string(tag_dir.join("conflicts.csv"))
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| {
                    let (c, t) = l.split_once(',').unwrap();
                    (c.to_string(), t.to_string())
                })
                .collect();
        let truth: synth::GroundTruth = serde_json::from_reader(BufReader::new(
            fs::File::open(dir.path().join("ground_truth.json")).unwrap(),
        ))
        .unwrap();
        let mut injected = 0;
        for event in &truth.injected_events {
            if let InjectedEvent::AliasConflict { address, tags, .. } = event {
                injected += 1;
                let cluster = clusters.cluster_of(address).unwrap().0.to_string();
                for tag in tags {
                    let canonical = normalize_tag(tag).unwrap().canonical;
                    if !conflicts.contains(&(cluster.clone(), canonical.clone())) {
                        problems.push(format!(
                            "seed {seed}: alias {canonical:?} missing from conflicts.csv"
                        ));
                    }
                }
            }
        }
        if injected != aliases {
            problems.push(format!(
                "seed {seed}: {injected} alias events, expected {aliases}"
            ));
        }
    }
    pass_if(
        problems.is_empty(),
        if problems.is_empty() {
            format!("4 corpora, {total_migrations} migrations merged exactly, all aliases in conflicts.csv")
        } else {
            problems.join("; ")
        },
    )
}

fn coinjoin_reproduction() -> Verdict {
    let mut rows = Vec::new();
    let mut ok = true;
    for seed in 0..10 {
        let mut c = config(3000 + seed, 30, 2000);
        c.adversarial.coinjoin = true;
        let out = generate(&c).unwrap();
        let bsq = cluster_bsq(&out.corpus);
        let merged = merge_clusterings(&bsq, &cluster_multi_input(&out.corpus));
        let bsq_fp = score_against_truth(&bsq, &out.truth)
            .false_positive_clusters
            .len();
        let merged_fp = score_against_truth(&merged, &out.truth)
            .false_positive_clusters
            .len();
        ok &= bsq_fp == 0 && merged_fp >= 1;
        rows.push(format!("{bsq_fp}/{merged_fp}"));
    }
    pass_if(
        ok,
        format!(
            "false-positive clusters bsq/merged per seed: {}",
            rows.join(" ")
        ),
    )
}

fn countermeasure_reproduction() -> Verdict {
    let mut ok = true;
    let (mut dummy_fn, mut dummy_fp, mut disguised_fp) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..10 {
        let mut c = config(4000 + seed, 30, 2000);
        c.adversarial.dummy_transfers = true;
        let out = generate(&c).unwrap();
        let baseline = generate(&config(4000 + seed, 30, 2000)).unwrap();
        let plain = score_against_truth(&cluster_bsq(&baseline.corpus), &baseline.truth);
        let s = score_against_truth(&cluster_bsq(&out.corpus), &out.truth);
        let dummies = out
            .truth
            .count_events(|e| matches!(e, InjectedEvent::DummyTransfer { .. }));
        ok &= dummies > 0 && s.false_negative_pairs > 0 && s.false_positive_clusters.is_empty();
        ok &= s.false_negative_participants.len() >= plain.false_negative_participants.len();
        dummy_fn.push(s.false_negative_participants.len());
        dummy_fp.push(s.false_positive_clusters.len());

        let mut c = config(4000 + seed, 30, 2000);
        c.adversarial.disguised_transfers = true;
        let out = generate(&c).unwrap();
        let s = score_against_truth(&cluster_bsq(&out.corpus), &out.truth);
        let disguised = out
            .truth
            .ledger
            .iter()
            .filter(|e| e.kind == LedgerKind::DisguisedTransfer)
            .count();
        ok &= disguised > 0 && !s.false_positive_clusters.is_empty();
        disguised_fp.push(s.false_positive_clusters.len());
    }
    pass_if(
        ok,
        format!(
            "dummy: FN participants {dummy_fn:?}, FP clusters {dummy_fp:?}; disguised: FP clusters {disguised_fp:?}"
        ),
    )
}

fn market_graph_consistency() -> Verdict {
    let mut problems = Vec::new();
    let mut thresholds_checked = 0;
    let mut rng = SynthRng::new(99);
    for seed in 0..10 {
        let mut c = config(5000 + seed, 60, 5000);
        c.migrations = 2;
        c.alias_conflicts = 1;
        let out = generate(&c).unwrap();
        for heuristic in [Heuristic::Bsq, Heuristic::Merged] {
            let clustering = cluster(&out.corpus, heuristic);
            let roles = assign_roles(&clustering, &out.corpus, &default_proposer_types());
            let tagging = assign_tags(&clustering, &out.tags);
            let m = market_breakdown(&clustering, &out.corpus, &roles).unwrap();
            let transfers = out
                .corpus
                .regular()
                .filter(|t| t.tx_type == TxType::Transfer)
                .count() as u64;
            if m.total() != transfers {
                problems.push(format!(
                    "seed {seed}: market counts {} != {transfers} transfers",
                    m.total()
                ));
            }
            let g = build_cluster_graph(&clustering, &out.corpus, &roles, &tagging).unwrap();
            let edge_count: u64 = g.edges.values().map(|e| e.count).sum();
            if edge_count != transfers {
                problems.push(format!("seed {seed}: graph carries {edge_count} transfers"));
            }
            let max_total = g.edges.values().map(|e| e.total.0).max().unwrap_or(0);
            for _ in 0..20 {
                let a = rng.between(0, max_total + 1);
                let b = rng.between(0, max_total + 1);
                let (lo, hi) = (a.min(b), a.max(b));
                let low = filter_graph(&g, BsqAmount(lo));
                let high = filter_graph(&g, BsqAmount(hi));
                thresholds_checked += 1;
                let nested = high.edges.keys().all(|k| low.edges.contains_key(k))
                    && high.vertices.keys().all(|k| low.vertices.contains_key(k));
                let strict = high.edges.values().all(|e| e.total.0 > hi);
                if !nested || !strict || filter_graph(&high, BsqAmount(hi)) != high {
                    problems.push(format!("seed {seed}: filter not monotone at {lo}/{hi}"));
                }
            }
            for view in [g.clone(), filter_graph(&g, BsqAmount::from_bsq(3000))] {
                let xml = String::from_utf8(export_graph(&view, ExportFormat::GraphMl)).unwrap();
                if parse_graphml(&xml).ok().as_ref() != Some(&view) {
                    problems.push(format!("seed {seed}: GraphML round trip differs"));
                }
                if let Ok(big) = largest_component(&view) {
                    let xml = String::from_utf8(export_graph(&big, ExportFormat::GraphMl)).unwrap();
                    if parse_graphml(&xml).ok().as_ref() != Some(&big) {
                        problems.push(format!(
                            "seed {seed}: GraphML round trip of component differs"
                        ));
                    }
                }
            }
        }
    }
    pass_if(
        problems.is_empty(),
        if problems.is_empty() {
            format!("20 clusterings: market sums match, {thresholds_checked} threshold pairs monotone, GraphML round-trips")
        } else {
            problems.join("; ")
        },
    )
}

/// Stdout and every output file of one invocation.
type Run = (Vec<u8>, BTreeMap<PathBuf, Vec<u8>>);

/// Every file under `dir` with its bytes, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    files
}

fn cli_determinism() -> Verdict {
    let inputs = TempDir::new().unwrap();
    run(&[
        "synth",
        "--seed",
        "42",
        "--participants",
        "80",
        "--tx-count",
        "6000",
        "--migrations",
        "3",
        "--alias-conflicts",
        "2",
        "--coinjoin",
        "--dummy-transfers",
        "--out-dir",
        p(inputs.path()),
    ]);
    let corpus = inputs.path().join("corpus.jsonl");
    let tags = inputs.path().join("tags.csv");
    let sheet = inputs.path().join("genesis_spreadsheet.csv");
    let truth = inputs.path().join("ground_truth.json");
    let (corpus, tags, sheet, truth) = (p(&corpus), p(&tags), p(&sheet), p(&truth));

    // `{out}` is replaced by a fresh directory per run
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "synth",
            "--seed",
            "7",
            "--participants",
            "40",
            "--tx-count",
            "3000",
            "--disguised-transfers",
            "--migrations",
            "2",
            "--alias-conflicts",
            "1",
            "--out-dir",
            "{out}",
        ],
        vec!["validate", "--txs", corpus],
        vec!["cluster", "--txs", corpus, "--heuristic", "bsq"],
        vec!["cluster", "--txs", corpus, "--heuristic", "multi-input"],
        vec!["cluster", "--txs", corpus, "--heuristic", "merged"],
        vec![
            "tag",
            "--txs",
            corpus,
            "--tags",
            tags,
            "--genesis-spreadsheet",
            sheet,
            "--out-dir",
            "{out}",
        ],
        vec![
            "roles",
            "--txs",
            corpus,
            "--proposer-types",
            "PROPOSAL,COMPENSATION_REQUEST",
        ],
        vec!["graph", "--txs", corpus, "--tags", tags, "--format", "dot"],
        vec![
            "graph",
            "--txs",
            corpus,
            "--tags",
            tags,
            "--format",
            "graphml",
            "--min-edge-bsq",
            "3000.00",
        ],
        vec![
            "graph",
            "--txs",
            corpus,
            "--format",
            "csv",
            "--largest-component",
            "--heuristic",
            "merged",
        ],
        vec!["report", "market", "--txs", corpus],
        vec!["report", "market", "--txs", corpus, "--format", "json"],
        vec!["report", "supply", "--txs", corpus],
        vec!["report", "supply", "--txs", corpus, "--format", "json"],
        vec![
            "report", "top", "--txs", corpus, "--tags", tags, "--k", "25",
        ],
        vec![
            "report", "top", "--txs", corpus, "--tags", tags, "--k", "25", "--format", "json",
        ],
        vec!["oracle-diff", "--txs", corpus, "--truth", truth],
    ];
    let mut problems = Vec::new();
    let mut runs = 0;
    for command in &commands {
        let mut reference: Option<Run> = None;
        let variants: Vec<Option<&str>> = [None, None]
            .into_iter()
            .chain(THREAD_COUNTS.iter().map(|t| Some(*t)))
            .collect();
        for threads in variants {
            let out_dir = TempDir::new().unwrap();
            let mut args: Vec<&str> = command
                .iter()
                .map(|a| if *a == "{out}" { p(out_dir.path()) } else { *a })
                .collect();
            if let Some(t) = threads {
                args.extend(["--threads", t]);
            }
            let out = run(&args);
            runs += 1;
            let result = (out.stdout, snapshot(out_dir.path()));
            match &reference {
                None => reference = Some(result),
                Some(r) if *r != result => problems.push(format!(
                    "{} differs with --threads {threads:?}",
                    command[..2].join(" ")
                )),
                Some(_) => {}
            }
        }
    }
    pass_if(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} commands x {} runs each byte-identical ({runs} runs)",
                commands.len(),
                2 + THREAD_COUNTS.len()
            )
        } else {
            problems.join("; ")
        },
    )
}

/// Runs the command and returns its wall time, peak resident set in KiB and
/// whether it exited cleanly. The child is reaped by `wait4`.
#[allow(clippy::zombie_processes)]
fn measure(args: &[&str]) -> (Duration, u64, bool) {
    let start = Instant::now();
    let child = bin()
        .args(args)
        .stdout(Stdio::null())
        .spawn()
        .expect("binary runs");
    let mut status = 0;
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let pid = child.id() as libc::pid_t;
    let waited = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
    let elapsed = start.elapsed();
    let ok = waited == pid && libc::WIFEXITED(status) && libc::WEXITSTATUS(status) == 0;
    (elapsed, usage.ru_maxrss as u64, ok)
}

fn performance() -> Verdict {
    let dir = TempDir::new().unwrap();
    let (txs, participants) = (PERF_TXS.to_string(), PERF_PARTICIPANTS.to_string());
    let (gen_time, gen_rss, gen_ok) = measure(&[
        "synth",
        "--seed",
        "1",
        "--participants",
        &participants,
        "--tx-count",
        &txs,
        "--out-dir",
        p(dir.path()),
    ]);
    if !gen_ok {
        return Verdict::Fail("synth of the performance corpus failed".into());
    }
    let clusters = dir.path().join("clusters.csv");
    let (time, rss, ok) = measure(&[
        "cluster",
        "--txs",
        p(&dir.path().join("corpus.jsonl")),
        "--heuristic",
        "bsq",
        "--out",
        p(&clusters),
    ]);
    let rows = fs::read_to_string(&clusters)
        .map(|s| s.lines().count().saturating_sub(1))
        .unwrap_or(0);
    pass_if(
        ok && time < PERF_TIME_BUDGET && rss < PERF_MEMORY_BUDGET_KIB,
        format!(
            "parse+validate+cluster+write of {PERF_TXS} txs ({rows} addresses): {:.1}s, peak {} MiB \
             (budget {}s, {} MiB); generation took {:.1}s, {} MiB",
            time.as_secs_f64(),
            rss / 1024,
            PERF_TIME_BUDGET.as_secs(),
            PERF_MEMORY_BUDGET_KIB / 1024,
            gen_time.as_secs_f64(),
            gen_rss / 1024
        ),
    )
}

fn expect(problems: &mut Vec<String>, what: &str, found: String, expected: String) {
    if found != expected {
        problems.push(format!("{what}: found {found}, expected {expected}"));
    }
}

fn real_corpus() -> Verdict {
    let Some(txs) = std::env::var_os("BSQLENS_REAL_TXS").map(PathBuf::from) else {
        return Verdict::Skip("BSQLENS_REAL_TXS not set; the real corpus is not shipped".into());
    };
    let corpus = match parse_corpus(BufReader::new(fs::File::open(&txs).unwrap()), true) {
        Ok(parsed) => parsed.corpus,
        Err(e) => return Verdict::Fail(format!("cannot load {}: {e}", txs.display())),
    };
    let mut problems = Vec::new();

    let type_counts: [(TxType, usize); 12] = [
        (TxType::TradeFee, 27285),
        (TxType::Transfer, 2095),
        (TxType::CompensationRequest, 269),
        (TxType::BlindVote, 239),
        (TxType::VoteReveal, 236),
        (TxType::Proposal, 87),
        (TxType::Lockup, 39),
        (TxType::AssetListingFee, 22),
        (TxType::ProofOfBurn, 22),
        (TxType::Unlock, 11),
        (TxType::ReimbursementRequest, 5),
        (TxType::Genesis, 1),
    ];
    let mut counts: BTreeMap<TxType, usize> = BTreeMap::new();
    for tx in corpus.regular() {
        *counts.entry(tx.tx_type).or_default() += 1;
    }
    for (t, n) in type_counts {
        expect(
            &mut problems,
            t.as_str(),
            counts.get(&t).copied().unwrap_or(0).to_string(),
            n.to_string(),
        );
    }

    let clustering = cluster_bsq(&corpus);
    expect(
        &mut problems,
        "addresses",
        clustering.len().to_string(),
        "109719".into(),
    );
    expect(
        &mut problems,
        "clusters",
        clustering.cluster_count().to_string(),
        "1027".into(),
    );
    let roles = assign_roles(&clustering, &corpus, &default_proposer_types());
    let role_count = |r: Role| roles.values().filter(|&&x| x == r).count().to_string();
    expect(&mut problems, "users", role_count(Role::User), "775".into());
    expect(
        &mut problems,
        "generators",
        role_count(Role::Generator),
        "178".into(),
    );
    expect(
        &mut problems,
        "proposers",
        role_count(Role::Proposer),
        "74".into(),
    );

    let env_path = |k: &str| std::env::var_os(k).map(PathBuf::from);
    let mut records = match env_path("BSQLENS_REAL_TAGS") {
        Some(p) => parse_tag_db(fs::File::open(p).unwrap()).unwrap(),
        None => Vec::new(),
    };
    if let Some(p) = env_path("BSQLENS_REAL_GENESIS_SPREADSHEET") {
        let entries = parse_genesis_spreadsheet(fs::File::open(p).unwrap()).unwrap();
        let genesis = corpus
            .transactions()
            .iter()
            .find(|t| t.tx_type == TxType::Genesis)
            .unwrap();
        records.extend(map_genesis_spreadsheet(&entries, genesis).unwrap());
    }
    let aliases = match env_path("BSQLENS_REAL_ALIASES") {
        Some(p) => AliasMap::new(parse_alias_file(fs::File::open(p).unwrap()).unwrap()).unwrap(),
        None => AliasMap::default(),
    };
    let tagging = assign_tags_with(&clustering, &records, &aliases);
    let (merged, after) = merge_by_shared_tags(&clustering, &tagging);
    expect(
        &mut problems,
        "clusters after merge",
        merged.cluster_count().to_string(),
        "1015".into(),
    );
    expect(
        &mut problems,
        "tagged clusters",
        after.tagged_cluster_count().to_string(),
        "84".into(),
    );

    let merged_roles = assign_roles(&merged, &corpus, &default_proposer_types());
    match market_breakdown(&merged, &corpus, &merged_roles) {
        Ok(m) => expect(
            &mut problems,
            "transfer breakdown",
            format!(
                "{}/{}/{}/{}",
                m.pg_to_user, m.user_to_user, m.pg_to_pg, m.user_to_pg
            ),
            "971/621/350/153".into(),
        ),
        Err(e) => problems.push(format!("market: {e}")),
    }
    match supply_stats(&corpus) {
        Ok(s) => expect(
            &mut problems,
            "supply",
            format!("{}/{}/{}", s.minted, s.burnt, s.circulating),
            "4529424.22/681210.40/3848213.82".into(),
        ),
        Err(e) => problems.push(format!("supply: {e}")),
    }
    pass_if(
        problems.is_empty(),
        if problems.is_empty() {
            "all headline counts reproduced".into()
        } else {
            problems.join("; ")
        },
    )
}
