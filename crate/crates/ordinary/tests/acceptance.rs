//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod support;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use ordinary::catalog::Catalog;
use ordinary::cli::{run, EXIT_MISMATCH, EXIT_OK};
use ordinary::corpus::{shipped_corpus, CorpusEntry};
use ordinary::engine::{run_density, DensityReport, EngineConfig};
use ordinary::records::{read_records, RecordLine};
use ordinary_core::arith::{primes_up_to, Prime};
use ordinary_core::frobenius::{cartier_manin, hasse_invariant, FrobeniusRecord};
use ordinary_core::groups::{component_constancy, predicted_density, trace_wedge2, AnalysisConfig, Mat4};
use ordinary_core::surfaces::{ReductionStatus, SurfaceModel};

const BOUND: u64 = 100_000;
const WINDOW: f64 = 0.02;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn cli(args: &[String]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("ordinary".to_string()).chain(args.iter().cloned()), &mut out, &mut err);
    (code, String::from_utf8_lossy(&err).into_owned())
}

fn args(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

/// One single-threaded `verify` run at the full bound.
struct VerifyRun {
    label: String,
    group: String,
    code: i32,
    report: Option<DensityReport>,
    report_path: PathBuf,
    records_path: PathBuf,
    elapsed: Duration,
    stderr: String,
}

fn verify_run(dir: &Path, tag: &str, entry: &CorpusEntry, group: &str) -> VerifyRun {
    let report_path = dir.join(format!("{tag}.json"));
    let records_path = dir.join(format!("{tag}.jsonl"));
    let start = Instant::now();
    let (code, stderr) = cli(&args(&[
        "verify",
        "--curve",
        &entry.spec,
        "--group",
        group,
        "--bound",
        &BOUND.to_string(),
        "--threads",
        "1",
        "--out",
        &path_str(&report_path),
        "--records",
        &path_str(&records_path),
    ]));
    let elapsed = start.elapsed();
    let report = fs::read_to_string(&report_path).ok().and_then(|t| serde_json::from_str(&t).ok());
    VerifyRun {
        label: entry.label.clone(),
        group: group.into(),
        code,
        report,
        report_path,
        records_path,
        elapsed,
        stderr,
    }
}

fn analysis() -> AnalysisConfig {
    AnalysisConfig::default()
}

fn realizable_catalog() -> Vec<ordinary_core::groups::GroupEntry> {
    Catalog::shipped().entries.into_iter().filter(|e| e.realizable).collect()
}

fn criterion_1() -> Outcome {
    let expected = [
        ("usp4", Ratio::new(1, 1)),
        ("su2xsu2", Ratio::new(1, 1)),
        ("su2-diag", Ratio::new(1, 1)),
        ("u1xu1-c2", Ratio::new(1, 2)),
        ("su2xu1-c2", Ratio::new(1, 2)),
        ("u1-diag-c2", Ratio::new(1, 2)),
        ("u1xu1-c4", Ratio::new(1, 4)),
    ];
    let start = Instant::now();
    let entries = realizable_catalog();
    let mut failures = Vec::new();
    if entries.len() != expected.len() {
        failures.push(format!("{} realizable entries, expected {}", entries.len(), expected.len()));
    }
    for (id, want) in expected {
        let Some(entry) = entries.iter().find(|e| e.id == id) else {
            failures.push(format!("{id} missing"));
            continue;
        };
        match predicted_density(entry, &analysis()) {
            Ok(pred) if pred.density == want => {}
            Ok(pred) => failures.push(format!("{id}: {} != {want}", pred.density)),
            Err(e) => failures.push(format!("{id}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let again: Vec<_> = entries.iter().map(|e| predicted_density(e, &analysis()).ok()).collect();
    let first: Vec<_> = entries.iter().map(|e| predicted_density(e, &analysis()).ok()).collect();
    if again != first {
        failures.push("verdicts differ between identical runs".into());
    }
    if elapsed >= Duration::from_secs(10) {
        failures.push(format!("took {elapsed:.2?}"));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("densities 1,1,1,1/2,1/2,1/2,1/4 in {elapsed:.2?}, deterministic")
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_2() -> Outcome {
    let t = trace_wedge2(&Mat4::identity());
    let mut failures = Vec::new();
    if t.re != 6.0 || t.im != 0.0 {
        failures.push(format!("trace_wedge2(I) = {t}"));
    }
    for entry in Catalog::shipped().entries {
        match component_constancy(&entry, 0, &analysis()) {
            Ok(v) if !v.constant => {}
            Ok(_) => failures.push(format!("{}: identity component constant", entry.id)),
            Err(e) => failures.push(format!("{}: {e}", entry.id)),
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "trace_wedge2(I) = 6 exactly; all 8 identity components nonconstant".to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    let mut constant = 0;
    for entry in realizable_catalog() {
        let pred = match predicted_density(&entry, &analysis()) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("{}: {e}", entry.id));
                continue;
            }
        };
        for v in pred.verdicts.iter().filter(|v| v.constant) {
            constant += 1;
            let value = v.value.unwrap_or(f64::NAN);
            let n = value.round();
            if !((value - n).abs() <= 1e-6 && (-6.0..=6.0).contains(&n)) || v.admissible != Some(true) {
                failures.push(format!("{}[{}] = {value}", entry.id, v.component_index));
            }
            if (value - 2.0).abs() > 1e-6 {
                failures.push(format!("{}[{}] = {value}, not 2", entry.id, v.component_index));
            }
        }
    }
    if constant == 0 {
        failures.push("no constant components".into());
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{constant} constant components, all admissible with value 2")
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_4(runs: &[VerifyRun], total: Duration) -> Outcome {
    let window = |label: &str| -> (f64, f64) {
        match label {
            "x5+1" | "(x3-x)x(x3+1)" => (0.25 - WINDOW, 0.25 + WINDOW),
            "x6+1" | "(x3-x)x(x3+x+1)" => (0.50 - WINDOW, 0.50 + WINDOW),
            _ => (0.98, 1.0),
        }
    };
    let mut failures = Vec::new();
    let mut shown = Vec::new();
    for r in runs {
        let Some(report) = &r.report else {
            failures.push(format!("{}: no report ({})", r.label, r.stderr.trim()));
            continue;
        };
        let v = report.empirical_value.unwrap_or(f64::NAN);
        let (lo, hi) = window(&r.label);
        shown.push(format!("{} {:.4} ({:.1?})", r.label, v, r.elapsed));
        if !(lo..=hi).contains(&v) {
            failures.push(format!("{}: {v:.4} outside [{lo}, {hi}]", r.label));
        }
        if r.elapsed >= Duration::from_secs(120) {
            failures.push(format!("{}: {:.1?} single-threaded", r.label, r.elapsed));
        }
    }
    if total >= Duration::from_secs(600) {
        failures.push(format!("runs took {total:.1?} in total"));
    }
    let detail = if failures.is_empty() { shown.join(", ") } else { failures.join("; ") };
    outcome(failures.is_empty(), detail)
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for entry in shipped_corpus() {
        let mut records: Vec<FrobeniusRecord> = Vec::new();
        if let Err(e) = run_density(&entry.model, 499, &EngineConfig::default(), &mut records) {
            failures.push(format!("{}: {e}", entry.label));
            continue;
        }
        for r in records.iter().filter(|r| r.status == ReductionStatus::Good) {
            let p = r.p as i64;
            let (Some(a1), Some(a2), Some(tr), Some(det)) = (r.a1, r.a2, r.hw_trace, r.hw_det) else {
                failures.push(format!("{} p={}: missing data", entry.label, r.p));
                continue;
            };
            checked += 1;
            if (det != 0) != (a2.rem_euclid(p) != 0) {
                failures.push(format!("{} p={}: det {det}, a2 {a2}", entry.label, r.p));
            }
            if tr as i64 != a1.rem_euclid(p) {
                failures.push(format!("{} p={}: trace {tr}, a1 {a1}", entry.label, r.p));
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} (surface, p) pairs, zero exceptions")
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_6(runs: &[VerifyRun]) -> Outcome {
    let mut failures = Vec::new();
    let mut a1_checked = 0u64;
    let mut a2_checked = 0u64;
    let mut below = 0u64;
    for r in runs {
        let records: Vec<RecordLine> = match read_records(&r.records_path) {
            Ok((_, recs)) => recs,
            Err(e) => {
                failures.push(format!("{}: {e}", r.label));
                continue;
            }
        };
        for rec in &records {
            let p = rec.p as i128;
            if let Some(a1) = rec.a1 {
                a1_checked += 1;
                // |a1| <= 4 sqrt(p) without rounding
                if (a1 as i128).pow(2) > 16 * p {
                    failures.push(format!("{} p={}: a1 = {a1}", r.label, rec.p));
                }
            }
            if let Some(a2) = rec.a2 {
                a2_checked += 1;
                let a2 = a2 as i128;
                if !(-6 * p..=6 * p).contains(&a2) {
                    failures.push(format!("{} p={}: a2 = {a2}", r.label, rec.p));
                }
                if a2 < -2 * p {
                    below += 1;
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!(
            "{a1_checked} a1 and {a2_checked} a2 values within bounds; a2 < -2p {}",
            if below == 0 { "never occurred".to_string() } else { format!("occurred {below} times") }
        )
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut components = 0;
    for entry in Catalog::shipped().entries.iter().filter(|e| e.kind.is_torus()) {
        for (i, g) in entry.coset_reps.iter().enumerate() {
            components += 1;
            let exact = support::exact_constant_value(g, entry.kind);
            match component_constancy(entry, i, &analysis()) {
                Ok(v) => {
                    let agree = match (exact, v.value) {
                        (None, None) => !v.constant,
                        (Some(x), Some(y)) => v.constant && (x - y).abs() < 1e-6,
                        _ => false,
                    };
                    if !agree {
                        failures.push(format!("{}[{i}]: exact {exact:?}, numeric {:?}", entry.id, v.value));
                    }
                }
                Err(e) => failures.push(format!("{}[{i}]: {e}", entry.id)),
            }
        }
    }

    let mut matrices = 0;
    for entry in shipped_corpus() {
        for p in primes_up_to(50).into_iter().filter(|p| p.get() > 2) {
            if entry.model.reduction_status(p.get()) != ReductionStatus::Good {
                continue;
            }
            let q = p.get();
            let m = (q - 1) / 2;
            match &entry.model {
                SurfaceModel::Genus2(c) => match cartier_manin(c.coeffs(), p) {
                    Ok(cm) => {
                        matrices += 1;
                        let h = support::shifted_power_mod(c.coeffs(), cm.shift, m, q);
                        let want = [
                            [support::coeff(&h, q - 1), support::coeff(&h, q - 2)],
                            [support::coeff(&h, 2 * q - 1), support::coeff(&h, 2 * q - 2)],
                        ];
                        if cm.matrix.entries != want {
                            failures.push(format!("{} p={q}: {:?} != {want:?}", entry.label, cm.matrix.entries));
                        }
                    }
                    Err(e) => failures.push(format!("{} p={q}: {e}", entry.label)),
                },
                SurfaceModel::Product(prod) => {
                    for e in [&prod.e1, &prod.e2] {
                        match hasse_invariant(e, Prime::new(q).unwrap()) {
                            Ok((value, shift)) => {
                                matrices += 1;
                                let h = support::shifted_power_mod(&e.cubic(), shift, m, q);
                                if value != support::coeff(&h, q - 1) {
                                    failures.push(format!("{} p={q}: Hasse invariant {value}", entry.label));
                                }
                            }
                            Err(err) => failures.push(format!("{} p={q}: {err}", entry.label)),
                        }
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{components} torus components agree with the Laurent oracle; {matrices} Cartier-Manin/Hasse values agree with repeated squaring")
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_8(runs: &[VerifyRun], mispaired: &VerifyRun) -> Outcome {
    let mut failures = Vec::new();
    for r in runs {
        if r.code != EXIT_OK {
            failures.push(format!("{} vs {}: exit {}", r.label, r.group, r.code));
        }
    }
    if mispaired.code != EXIT_MISMATCH {
        failures.push(format!("{} vs {}: exit {}", mispaired.label, mispaired.group, mispaired.code));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} curated pairings exit 0; x5+1 vs usp4 exits 1", runs.len())
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_9(dir: &Path, x5p1: &VerifyRun) -> Outcome {
    let mut failures = Vec::new();
    let read = |p: &Path| fs::read(p).unwrap_or_default();

    for (i, entry) in Catalog::shipped().entries.iter().enumerate() {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let path = dir.join(format!("analyze-{i}-{k}.txt"));
                cli(&args(&["analyze-group", "--group", &entry.id, "--out", &path_str(&path)]));
                read(&path)
            })
            .collect();
        if outs[0].is_empty() || outs[0] != outs[1] {
            failures.push(format!("analyze-group {} not reproducible", entry.id));
        }
    }
    for group in ["usp4", "u1xu1-c4"] {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let path = dir.join(format!("moments-{group}-{k}.json"));
                let a = ["moments", "--group", group, "--k", "4", "--samples", "20000", "--seed", "7"];
                let mut a = args(&a);
                a.extend(args(&["--out", &path_str(&path)]));
                cli(&a);
                read(&path)
            })
            .collect();
        if outs[0].is_empty() || outs[0] != outs[1] {
            failures.push(format!("moments {group} not reproducible"));
        }
    }

    // same run with another thread count
    let report = dir.join("threads.json");
    let records = dir.join("threads.jsonl");
    let spec = x5p1.report.as_ref().map(|r| r.surface.clone()).unwrap_or_default();
    let base = |extra: &[&str]| {
        let mut a = args(&["verify", "--curve", &spec, "--group", &x5p1.group, "--bound", &BOUND.to_string()]);
        a.extend(args(extra));
        a
    };
    cli(&base(&["--threads", "3", "--out", &path_str(&report), "--records", &path_str(&records)]));
    if read(&report) != read(&x5p1.report_path) || read(&records) != read(&x5p1.records_path) {
        failures.push("verify output depends on thread count".into());
    }

    // interrupt near the middle, then resume
    let report = dir.join("resumed.json");
    let records = dir.join("resumed.jsonl");
    let checkpoint = dir.join("resume.ckpt");
    let (code, _) = cli(&base(&[
        "--threads",
        "1",
        "--records",
        &path_str(&records),
        "--checkpoint",
        &path_str(&checkpoint),
        "--halt-after",
        "50000",
    ]));
    let halted_at = ordinary::engine::checkpoint_read(&checkpoint).map(|c| c.last_p).unwrap_or(0);
    if code != EXIT_OK || !(50_000..BOUND).contains(&halted_at) {
        failures.push(format!("halt: exit {code}, checkpoint at {halted_at}"));
    }
    cli(&base(&[
        "--threads",
        "1",
        "--records",
        &path_str(&records),
        "--resume",
        &path_str(&checkpoint),
        "--out",
        &path_str(&report),
    ]));
    let resumed: Option<DensityReport> = serde_json::from_slice(&read(&report)).ok();
    if resumed.is_none() || resumed != x5p1.report {
        failures.push("resumed counters differ from the fresh run".into());
    }
    if read(&report) != read(&x5p1.report_path) || read(&records) != read(&x5p1.records_path) {
        failures.push("resumed output not byte-identical to the fresh run".into());
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("analyze-group, moments and verify outputs byte-identical; resume from p = {halted_at} equals fresh run")
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let names = [
        "group-side densities are exactly 1, 1/2, 1/4",
        "identity trace is 6, identity components nonconstant",
        "constant components take admissible values",
        "empirical densities at bound 1e5",
        "Hasse-Witt and point counts agree for p <= 499",
        "Weil bounds on every record",
        "numeric verdicts and recurrence match exact oracles",
        "verify mode matches curated pairings only",
        "determinism and resume",
    ];

    let mut results = vec![criterion_1(), criterion_2(), criterion_3()];

    let corpus = shipped_corpus();
    let start = Instant::now();
    let runs: Vec<VerifyRun> =
        corpus.iter().enumerate().map(|(i, e)| verify_run(dir.path(), &format!("verify-{i}"), e, &e.group)).collect();
    let total = start.elapsed();
    let x5p1 = corpus.iter().find(|e| e.label == "x5+1").expect("x5+1 in corpus");
    let mispaired = verify_run(dir.path(), "mispaired", x5p1, "usp4");

    results.push(criterion_4(&runs, total));
    results.push(criterion_5());
    results.push(criterion_6(&runs));
    results.push(criterion_7());
    results.push(criterion_8(&runs, &mispaired));
    let x5p1_run = runs.iter().find(|r| r.label == "x5+1").expect("x5+1 run");
    results.push(criterion_9(dir.path(), x5p1_run));

    println!();
    for (i, (name, r)) in names.iter().zip(&results).enumerate() {
        println!("criterion {} {}: {name}: {}", i + 1, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
