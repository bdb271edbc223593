//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use specrev_cli::{revise_report, run, Cli, EXIT_OK};
use specrev_core::benchgen::{generate_instance, run_campaign, BenchConfig, CampaignReport, InstanceFilter};
use specrev_core::instance::{Instance, InstanceFile};
use specrev_core::oracle::feasible_at_threshold;
use specrev_core::{arpp, build_graph, check_emptiness, Objective, RemovalSet, RevisionGraph, RevisionOutcome};

const TOL: f64 = 1e-9;

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn example1() -> Instance {
    Instance::read(&workspace_root().join("fixtures/example1.json")).expect("fixture loads")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Union of edge labels along a node sequence.
fn path_labels(g: &RevisionGraph, nodes: &[(&str, &str)]) -> RemovalSet {
    let mut set = g.empty_set();
    for w in nodes.windows(2) {
        let u = g.node_id(w[0].0, w[0].1).expect("node");
        let v = g.node_id(w[1].0, w[1].1).expect("node");
        let e = g.edge_between(u, v).expect("edge on path");
        set.union_with(&g.edge(e).label);
    }
    set
}

fn criterion1() -> Outcome {
    let started = Instant::now();
    let inst = example1();
    let g = build_graph(&inst.system, &inst.spec);
    let sum = arpp(&g, Objective::Sum).removals(&g).map(|s| g.sum_theta(&s));
    let max = arpp(&g, Objective::Max).removals(&g).map(|s| g.max_theta(&s));

    let (t0s0, t0s1, t1s0, t2s0) = (("t0", "s0"), ("t0", "s1"), ("t1", "s0"), ("t2", "s0"));
    let paths: [&[(&str, &str)]; 4] = [
        &[t0s0, t0s0, t0s0],
        &[t0s0, t0s1, t0s0, t0s1],
        &[t0s0, t1s0, t1s0, t1s0],
        &[t0s0, t1s0, t1s0, t2s0, t2s0],
    ];
    let costs: Vec<(f64, f64)> = paths
        .iter()
        .map(|p| {
            let s = path_labels(&g, p);
            (g.sum_theta(&s), g.max_theta(&s))
        })
        .collect();
    let expected = [(5.0, 5.0), (5.0, 5.0), (3.0, 3.0), (8.0, 5.0)];
    let paths_ok = costs
        .iter()
        .zip(expected)
        .all(|(&(s, m), (es, em))| (s - es).abs() <= TOL && (m - em).abs() <= TOL);
    let elapsed = started.elapsed().as_secs_f64();
    let pass = sum.is_some_and(|c| (c - 3.0).abs() <= TOL)
        && max.is_some_and(|c| (c - 3.0).abs() <= TOL)
        && paths_ok
        && elapsed < 1.0;
    outcome(
        pass,
        format!("sum {sum:?}, max {max:?}, paths p1..p4 (sum, max) {costs:?}, {elapsed:.3}s"),
    )
}

fn campaign_config(product_nodes: usize, seed: u64, sum_oracle: bool) -> BenchConfig {
    BenchConfig {
        seed,
        product_nodes,
        trials: 200,
        sum_oracle,
        oracle_max_subsets: 1_000_000,
        ..Default::default()
    }
}

const ORACLE_SIZES: [usize; 3] = [9, 16, 25];
const ORACLE_SEED: u64 = 2024;

fn dump_instance(cfg: &BenchConfig, trial: usize, tag: &str) -> String {
    let dir = std::env::temp_dir().join("specrev-acceptance");
    let _ = fs::create_dir_all(&dir);
    let path = dir.join(format!("{tag}-n{}-seed{}-trial{trial}.json", cfg.product_nodes, cfg.seed));
    if let Ok((system, spec)) = generate_instance(cfg, trial) {
        let meta = serde_json::json!({ "seed": cfg.seed, "trial": trial, "product_nodes": cfg.product_nodes });
        let _ = fs::write(&path, InstanceFile::from_instance(&Instance { system, spec }, Some(meta)).to_json());
    }
    path.display().to_string()
}

fn criterion2(reports: &mut Vec<String>) -> Outcome {
    let started = Instant::now();
    let mut instances = 0;
    let mut mismatches = Vec::new();
    for n in ORACLE_SIZES {
        let cfg = campaign_config(n, ORACLE_SEED, false);
        let report = run_campaign(&cfg).expect("campaign runs");
        instances += report.trials.iter().filter(|r| r.max_exact.is_some()).count();
        for &t in &report.aggregate.max_mismatches {
            mismatches.push(dump_instance(&cfg, t, "max-mismatch"));
        }
        reports.push(report.to_jsonl());
    }
    let elapsed = started.elapsed().as_secs_f64();
    outcome(
        instances >= 500 && mismatches.is_empty() && elapsed < 120.0,
        format!("{instances} instances compared, mismatches {mismatches:?}, {elapsed:.1}s"),
    )
}

fn criterion3(reports: &mut Vec<String>) -> Outcome {
    let started = Instant::now();
    let mut violations = Vec::new();
    let mut compared = 0;
    let mut nine: Option<CampaignReport> = None;
    for n in ORACLE_SIZES {
        let cfg = campaign_config(n, ORACLE_SEED, true);
        let report = run_campaign(&cfg).expect("campaign runs");
        compared += report.trials.iter().filter(|r| r.sum_sound.is_some()).count();
        for &t in &report.aggregate.sum_violations {
            violations.push(dump_instance(&cfg, t, "sum-violation"));
        }
        reports.push(report.to_jsonl());
        if n == 9 {
            nine = Some(report);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ratio = nine.expect("9-node campaign").aggregate.ratio;
    let pass = violations.is_empty()
        && ratio.avg.is_some_and(|a| a <= 1.1)
        && ratio.max.is_some_and(|m| m <= 2.0)
        && elapsed < 600.0;
    outcome(
        pass,
        format!(
            "{compared} instances with oracle optimum, violations {violations:?}, 9-node ratio avg {:?} max {:?} over {}, {elapsed:.1}s",
            ratio.avg, ratio.max, ratio.count
        ),
    )
}

fn criterion4(reports: &mut Vec<String>) -> Outcome {
    let cfg = campaign_config(196, 42, false);
    let report = run_campaign(&cfg).expect("campaign runs");
    let t = &report.timing_aggregate;
    let (sum_avg, max_avg) = (t.arpp_sum.avg.unwrap_or(f64::INFINITY), t.arpp_max.avg.unwrap_or(f64::INFINITY));
    let a = &report.aggregate;
    reports.push(report.to_jsonl());
    outcome(
        sum_avg < 5000.0 && max_avg < 5000.0 && a.arpp_sum_succ == a.trials && a.arpp_max_succ == a.trials,
        format!(
            "ARPP avg {sum_avg} ms (Sum), {max_avg} ms (Max) per trial; succ {}/{} and {}/{}",
            a.arpp_sum_succ, a.trials, a.arpp_max_succ, a.trials
        ),
    )
}

fn criterion5() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let sizes = [1usize, 4, 9, 16, 25, 36];
    let mut counts = [0usize; 3];
    let mut failures = Vec::new();
    for i in 0..1000 {
        let cfg = BenchConfig {
            seed: 7,
            product_nodes: sizes[i % sizes.len()],
            filter: InstanceFilter::Any,
            ..Default::default()
        };
        let (system, spec) = generate_instance(&cfg, i).expect("generation");
        let g = build_graph(&system, &spec);
        let inst = Instance { system, spec };
        let inst_path = dir.path().join("instance.json");
        fs::write(&inst_path, InstanceFile::from_instance(&inst, None).to_json()).expect("write");
        for objective in [Objective::Sum, Objective::Max] {
            let ok = match arpp(&g, objective) {
                RevisionOutcome::Revised { .. } => {
                    counts[1] += 1;
                    let report = revise_report(&inst, objective);
                    let rev_path = dir.path().join("revision.json");
                    fs::write(&rev_path, serde_json::to_string(&report).expect("json")).expect("write");
                    let cli = Cli::try_parse_from([
                        "specrev".as_ref(),
                        "verify".as_ref(),
                        inst_path.as_os_str(),
                        rev_path.as_os_str(),
                    ])
                    .expect("arguments parse");
                    matches!(run(cli, &mut std::io::sink()), Ok(EXIT_OK))
                }
                RevisionOutcome::AlreadySatisfiable { .. } => {
                    counts[0] += 1;
                    check_emptiness(&g, true).is_some()
                }
                RevisionOutcome::NoRevisionExists => {
                    counts[2] += 1;
                    check_emptiness(&g, false).is_none() && feasible_at_threshold(&g, f64::INFINITY).is_none()
                }
            };
            if !ok {
                failures.push(dump_instance(&cfg, i, "validity"));
            }
        }
    }
    outcome(
        failures.is_empty() && counts.iter().all(|&c| c > 0),
        format!(
            "1000 instances x 2 objectives: {} already satisfiable, {} revised, {} no revision; failures {failures:?}",
            counts[0], counts[1], counts[2]
        ),
    )
}

fn example1_reports() -> Vec<String> {
    let inst = example1();
    [Objective::Sum, Objective::Max]
        .into_iter()
        .map(|o| serde_json::to_string(&revise_report(&inst, o)).expect("json"))
        .collect()
}

fn criterion6(first: &[String]) -> Outcome {
    let mut again = example1_reports();
    criterion2(&mut again);
    criterion3(&mut again);
    criterion4(&mut again);
    let identical = first == again.as_slice();
    let bytes: usize = first.iter().map(String::len).sum();
    outcome(identical, format!("{} reports, {bytes} bytes, identical: {identical}", first.len()))
}

fn criterion7() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("bench");
    let cli = Cli::try_parse_from([
        "specrev".as_ref(),
        "bench".as_ref(),
        "--product-nodes".as_ref(),
        "9,100".as_ref(),
        "--trials".as_ref(),
        "200".as_ref(),
        "--seed".as_ref(),
        "42".as_ref(),
        "--oracle-max-subsets".as_ref(),
        "20000".as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
    ])
    .expect("arguments parse");
    let mut stdout = Vec::new();
    if !matches!(run(cli, &mut stdout), Ok(EXIT_OK)) {
        return outcome(false, "bench command failed");
    }
    let text = fs::read_to_string(out.join("report.txt")).unwrap_or_default();
    let jsonl = fs::read_to_string(out.join("report.jsonl")).unwrap_or_default();
    let aggregates: Vec<serde_json::Value> = jsonl
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .filter(|v| v["type"] == "aggregate")
        .collect();

    let headers = ["bf_succ", "sum_succ", "ratio_avg", "r1_avg", "r2_avg", "max_succ"];
    let shape = aggregates.len() == 2
        && headers.iter().all(|h| text.contains(h))
        && text.contains("Revision sizes")
        && aggregates.iter().all(|a| {
            ["ratio", "ratio1", "ratio2", "size_ratio"]
                .iter()
                .all(|k| ["min", "avg", "max"].iter().all(|f| a[k].get(f).is_some()))
        });
    // every aggregate number in the JSON appears verbatim in the text
    let agree = aggregates.iter().all(|a| {
        ["ratio", "ratio1", "ratio2", "size_ratio"].iter().all(|k| {
            ["min", "avg", "max"].iter().all(|f| match a[k][f].as_f64() {
                Some(v) => text.contains(&v.to_string()),
                None => true,
            })
        })
    });
    let hundred = aggregates.iter().find(|a| a["product_nodes"] == 100);
    let r1 = hundred.and_then(|a| a["ratio1"]["avg"].as_f64());
    let size = hundred.and_then(|a| a["size_ratio"]["avg"].as_f64());
    let printed = String::from_utf8_lossy(&stdout) == text;
    outcome(
        shape && agree && printed && r1.is_some_and(|r| r > 1.0) && size.is_some_and(|s| s > 1.0),
        format!("layout ok: {shape}, text/json agree: {agree}, 100-node RATIO1 avg {r1:?}, size ratio avg {size:?}"),
    )
}

fn main() -> ExitCode {
    // libtest passes filter arguments; honor `--list` so tooling does not run the suite
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut reports = example1_reports();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |n, name, f: &mut dyn FnMut() -> Outcome| {
        let started = Instant::now();
        let o = f();
        println!(
            "criterion {n} [{name}]: {} ({:.1}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            o.detail
        );
        results.push((n, name, o));
    };
    record(1, "example 1 reproduction", &mut criterion1);
    record(2, "min-max oracle equivalence", &mut || criterion2(&mut reports));
    record(3, "min-sum approximation soundness", &mut || criterion3(&mut reports));
    record(4, "performance envelope", &mut || criterion4(&mut reports));
    record(5, "validity on fuzzed instances", &mut criterion5);
    record(6, "determinism", &mut || criterion6(&reports));
    record(7, "table shape", &mut criterion7);

    let failed: Vec<u32> = results.iter().filter(|(_, _, o)| !o.pass).map(|(n, _, _)| *n).collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failed {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
