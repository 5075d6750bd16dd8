//! Prime-range runs: parallel per-prime evaluation, ordered record output,
//! checkpoints, density reports and comparison with a predicted density.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use ordinary_core::arith::{primes_up_to, Prime};
use ordinary_core::frobenius::{ordinary_test, FrobeniusConfig, FrobeniusError, FrobeniusRecord};
use ordinary_core::groups::{predicted_density, validate_entry, AnalysisConfig, DensityPrediction, GroupEntry, GroupError};
use ordinary_core::surfaces::SurfaceModel;
use ordinary_core::tally::{A2OverP, DensityCounters};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{NullSink, RecordSink};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
/// Widening of the Wilson interval used by `match`; see [`attach_prediction`].
pub const DEFAULT_MATCH_SLACK: f64 = 0.02;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("checkpoint {path} is corrupt: {detail}")]
    Corrupt { path: String, detail: String },
    #[error("checkpoint {path} has format_version {found}, expected {CHECKPOINT_FORMAT_VERSION}")]
    Version { path: String, found: u64 },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
    #[error("writing records: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint does not match this run: {0}")]
    ResumeMismatch(String),
    #[error("group `{group}` fails validation check {check}: {detail}")]
    Validation { group: String, check: String, detail: String },
    #[error("group analysis: {0}")]
    Group(#[from] GroupError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub frobenius: FrobeniusConfig,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Primes evaluated between checkpoints.
    pub batch: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { frobenius: FrobeniusConfig::default(), threads: 0, batch: 512 }
    }
}

/// Serialized [`DensityCounters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterState {
    pub good: u64,
    pub ordinary: u64,
    pub bad_disc: u64,
    pub bad_model: u64,
    pub excluded: u64,
    pub a2_known: u64,
    pub a2_below_minus_2p: u64,
    pub manin_checked: u64,
    pub roots_checked: u64,
    pub min_a2: Option<i64>,
    pub min_a2_p: Option<u64>,
}

impl From<&DensityCounters> for CounterState {
    fn from(c: &DensityCounters) -> Self {
        CounterState {
            good: c.good,
            ordinary: c.ordinary,
            bad_disc: c.bad_disc,
            bad_model: c.bad_model,
            excluded: c.excluded,
            a2_known: c.a2_known,
            a2_below_minus_2p: c.a2_below_minus_2p,
            manin_checked: c.manin_checked,
            roots_checked: c.roots_checked,
            min_a2: c.min_a2_over_p.map(|m| m.a2),
            min_a2_p: c.min_a2_over_p.map(|m| m.p),
        }
    }
}

impl From<&CounterState> for DensityCounters {
    fn from(s: &CounterState) -> Self {
        DensityCounters {
            good: s.good,
            ordinary: s.ordinary,
            bad_disc: s.bad_disc,
            bad_model: s.bad_model,
            excluded: s.excluded,
            a2_known: s.a2_known,
            a2_below_minus_2p: s.a2_below_minus_2p,
            manin_checked: s.manin_checked,
            roots_checked: s.roots_checked,
            min_a2_over_p: s.min_a2.zip(s.min_a2_p).map(|(a2, p)| A2OverP { a2, p }),
        }
    }
}

/// State after every prime up to `last_p` has been counted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunCheckpoint {
    pub format_version: u32,
    pub surface: String,
    pub bound: u64,
    pub naive_max_fp: u64,
    pub naive_max_fp2: u64,
    pub last_p: u64,
    pub counters: CounterState,
}

/// Writes via a temporary file and rename, so a crash leaves either the old
/// or the new checkpoint.
pub fn checkpoint_write(path: &Path, checkpoint: &RunCheckpoint) -> Result<(), CheckpointError> {
    let io_err = |source| CheckpointError::Io { path: path.display().to_string(), source };
    let mut text = serde_json::to_string_pretty(checkpoint).expect("checkpoint serializes");
    text.push('\n');
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn checkpoint_read(path: &Path) -> Result<RunCheckpoint, CheckpointError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io { path: name.clone(), source })?;
    let corrupt = |detail: String| CheckpointError::Corrupt { path: name.clone(), detail };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing format_version".into()))?;
    if version != CHECKPOINT_FORMAT_VERSION as u64 {
        return Err(CheckpointError::Version { path: name, found: version });
    }
    serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))
}

/// Summary of a run, optionally with a predicted density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityReport {
    pub format_version: u32,
    pub surface: String,
    pub bound: u64,
    pub good_primes: u64,
    pub ordinary_count: u64,
    pub skipped_primes: u64,
    pub bad_disc: u64,
    pub bad_model: u64,
    /// `ordinary_count/good_primes` as counted (not reduced); null without good primes.
    pub empirical: Option<String>,
    pub empirical_value: Option<f64>,
    pub wilson95_low: f64,
    pub wilson95_high: f64,
    pub group: Option<String>,
    pub predicted: Option<String>,
    pub predicted_value: Option<f64>,
    /// Predicted density lies in `[wilson95_low, wilson95_high]`.
    pub strict_match: Option<bool>,
    pub match_slack: Option<f64>,
    /// Predicted density lies in the Wilson interval widened by `match_slack`.
    #[serde(rename = "match")]
    pub matched: Option<bool>,
    /// Primes where the full `a2` was computed.
    pub a2_primes: u64,
    pub min_a2_over_p_observed: Option<f64>,
    pub min_a2_over_p_at: Option<u64>,
    /// Number of primes with `a2 < -2p`.
    pub a2_below_minus_2p: u64,
    /// Primes where Cartier-Manin data was cross-checked against counts.
    pub manin_checked: u64,
    pub roots_checked: u64,
}

impl DensityReport {
    pub fn from_counters(surface: &str, bound: u64, c: &DensityCounters) -> Self {
        let (low, high) = c.wilson95();
        // raw counts, not reduced
        let nonempty = c.good > 0;
        DensityReport {
            format_version: REPORT_FORMAT_VERSION,
            surface: surface.into(),
            bound,
            good_primes: c.good,
            ordinary_count: c.ordinary,
            skipped_primes: c.skipped(),
            bad_disc: c.bad_disc,
            bad_model: c.bad_model,
            empirical: nonempty.then(|| format!("{}/{}", c.ordinary, c.good)),
            empirical_value: nonempty.then(|| c.ordinary as f64 / c.good as f64),
            wilson95_low: low,
            wilson95_high: high,
            group: None,
            predicted: None,
            predicted_value: None,
            strict_match: None,
            match_slack: None,
            matched: None,
            a2_primes: c.a2_known,
            min_a2_over_p_observed: c.min_a2_over_p.map(A2OverP::value),
            min_a2_over_p_at: c.min_a2_over_p.map(|m| m.p),
            a2_below_minus_2p: c.a2_below_minus_2p,
            manin_checked: c.manin_checked,
            roots_checked: c.roots_checked,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Records the prediction and the match verdicts.
///
/// A density-one surface still has sporadic non-ordinary primes (a set of
/// density zero), and a single one puts the Wilson upper bound below 1, so
/// `strict_match` can never hold for a predicted 1. `match` therefore
/// widens the interval by `slack` on both sides.
pub fn attach_prediction(report: &mut DensityReport, group: &str, predicted: Ratio<u64>, slack: f64) {
    let value = *predicted.numer() as f64 / *predicted.denom() as f64;
    report.group = Some(group.into());
    report.predicted = Some(predicted.to_string());
    report.predicted_value = Some(value);
    report.strict_match = Some(report.wilson95_low <= value && value <= report.wilson95_high);
    report.match_slack = Some(slack);
    report.matched = Some(report.wilson95_low - slack <= value && value <= report.wilson95_high + slack);
}

#[derive(Debug, Clone, Default)]
pub struct RunControl {
    /// Written after every batch.
    pub checkpoint: Option<PathBuf>,
    /// Continue after this checkpoint instead of starting fresh.
    pub resume: Option<RunCheckpoint>,
    /// Stop at the first batch boundary at or beyond this prime.
    pub halt_after: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Finished(DensityReport),
    Halted(RunCheckpoint),
}

pub fn run_density(
    model: &SurfaceModel,
    bound: u64,
    config: &EngineConfig,
    sink: &mut dyn RecordSink,
) -> Result<DensityReport, EngineError> {
    match run_density_controlled(model, bound, config, sink, &RunControl::default())? {
        RunOutcome::Finished(report) => Ok(report),
        RunOutcome::Halted(_) => unreachable!("no halt requested"),
    }
}

/// Evaluates every odd prime up to `bound` (after the resume point, if
/// any). Primes are processed in batches: each batch is mapped in parallel,
/// then its records are checked, counted and written in increasing order,
/// so output is independent of the thread count. The first integrity error
/// (smallest p) aborts the run.
pub fn run_density_controlled(
    model: &SurfaceModel,
    bound: u64,
    config: &EngineConfig,
    sink: &mut dyn RecordSink,
    control: &RunControl,
) -> Result<RunOutcome, EngineError> {
    let surface = model.to_string();
    let fcfg = config.frobenius;
    let (mut counters, start_after) = match &control.resume {
        Some(cp) => {
            let expected = (surface.as_str(), bound, fcfg.naive_max_fp, fcfg.naive_max_fp2);
            let found = (cp.surface.as_str(), cp.bound, cp.naive_max_fp, cp.naive_max_fp2);
            if expected != found {
                return Err(EngineError::ResumeMismatch(format!(
                    "run is (surface, bound, naive_max_fp, naive_max_fp2) = {expected:?}, checkpoint has {found:?}"
                )));
            }
            (DensityCounters::from(&cp.counters), cp.last_p)
        }
        None => (DensityCounters::default(), 0),
    };
    let primes: Vec<Prime> = primes_up_to(bound).into_iter().filter(|p| p.get() > start_after).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| EngineError::ThreadPool(e.to_string()))?;
    let batches: Vec<&[Prime]> = primes.chunks(config.batch.max(1)).collect();
    for (i, batch) in batches.iter().enumerate() {
        let results: Vec<Result<FrobeniusRecord, FrobeniusError>> =
            pool.install(|| batch.par_iter().map(|&p| ordinary_test(model, p, &fcfg)).collect());
        for result in results {
            let record = result?;
            record.check_invariants()?;
            counters.add(&record);
            sink.write(&record)?;
        }
        sink.flush()?;
        let last_p = batch.last().expect("chunks are nonempty").get();
        let checkpoint = RunCheckpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            surface: surface.clone(),
            bound,
            naive_max_fp: fcfg.naive_max_fp,
            naive_max_fp2: fcfg.naive_max_fp2,
            last_p,
            counters: CounterState::from(&counters),
        };
        if let Some(path) = &control.checkpoint {
            checkpoint_write(path, &checkpoint)?;
        }
        let more = i + 1 < batches.len();
        if more && control.halt_after.is_some_and(|h| last_p >= h) {
            return Ok(RunOutcome::Halted(checkpoint));
        }
    }
    Ok(RunOutcome::Finished(DensityReport::from_counters(&surface, bound, &counters)))
}

/// Validates the entry and computes its predicted density.
pub fn predict(entry: &GroupEntry, analysis: &AnalysisConfig) -> Result<DensityPrediction, EngineError> {
    let report = validate_entry(entry);
    if let Some(fail) = report.first_failure() {
        return Err(EngineError::Validation {
            group: entry.id.clone(),
            check: fail.name.into(),
            detail: fail.detail.clone(),
        });
    }
    Ok(predicted_density(entry, analysis)?)
}

/// Empirical density of `model` up to `bound` next to the density predicted
/// by `entry`.
pub fn compare(
    model: &SurfaceModel,
    entry: &GroupEntry,
    bound: u64,
    config: &EngineConfig,
    analysis: &AnalysisConfig,
    slack: f64,
) -> Result<DensityReport, EngineError> {
    let prediction = predict(entry, analysis)?;
    let mut report = run_density(model, bound, config, &mut NullSink)?;
    attach_prediction(&mut report, &entry.id, prediction.density, slack);
    Ok(report)
}
