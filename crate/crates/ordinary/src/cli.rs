//! The `ordinary` command line.
//!
//! Exit codes: 0 success or match, 1 verified mismatch, 2 usage or parse
//! error, 3 data-integrity or validation failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ordinary_core::frobenius::FrobeniusConfig;
use ordinary_core::groups::{moment_estimate, AnalysisConfig, GroupEntry, MAX_MOMENT};
use ordinary_core::surfaces::{parse_surface, SurfaceModel};
use serde::Serialize;

use crate::catalog::{Catalog, CatalogError};
use crate::engine::{
    attach_prediction, checkpoint_read, predict, run_density_controlled, EngineConfig, EngineError, RunControl,
    RunOutcome, DEFAULT_MATCH_SLACK,
};
use crate::records::{reopen_records, JsonLinesSink, NullSink, RecordSink};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTEGRITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ordinary", version, about = "Density of ordinary primes for abelian surfaces over Q")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write per-prime Frobenius records (JSON Lines).
    Frobenius {
        #[command(flatten)]
        run: RunArgs,
        /// Records file, `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Measure the density of ordinary primes.
    Density {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        persist: PersistArgs,
    },
    /// Per-component constancy verdicts and predicted density of a group.
    AnalyzeGroup {
        #[command(flatten)]
        group: GroupArgs,
        /// Seed for identity-component sampling.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Output file, `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Compare a surface's empirical density with a group's prediction.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        persist: PersistArgs,
        /// Seed for identity-component sampling.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Widening of the Wilson interval when deciding `match`.
        #[arg(long, default_value_t = DEFAULT_MATCH_SLACK)]
        match_slack: f64,
    },
    /// Monte Carlo moment of tr(wedge^2) under Haar measure on a group.
    Moments {
        #[command(flatten)]
        group: GroupArgs,
        /// Moment order (at most 8).
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Output file, `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Surface, `genus2:[f0,...,fd]` or `product:[a1,b1];[a2,b2]`.
    #[arg(long)]
    pub curve: String,
    /// Largest prime considered.
    #[arg(long, default_value_t = 100_000)]
    pub bound: u64,
    /// Count points over F_p up to this prime.
    #[arg(long, default_value_t = 20_000)]
    pub naive_max_fp: u64,
    /// Count points over F_{p^2} up to this prime.
    #[arg(long, default_value_t = 499)]
    pub naive_max_fp2: u64,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PersistArgs {
    /// Report file, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Also write per-prime records here.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Write a checkpoint here after every batch of primes.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Continue from this checkpoint (and keep updating it).
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop at the first checkpoint at or past this prime, as if interrupted.
    #[arg(long)]
    pub halt_after: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct GroupArgs {
    /// Catalog file; the shipped catalog when omitted.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Group id in the catalog.
    #[arg(long)]
    pub group: String,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn integrity(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INTEGRITY, message: message.into() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Io(_) | EngineError::ThreadPool(_) => EXIT_USAGE,
            _ => EXIT_INTEGRITY,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Frobenius { run, out } => cmd_frobenius(&run, &out, stdout),
        Command::Density { run, persist } => cmd_density(&run, &persist, None, stdout, stderr),
        Command::AnalyzeGroup { group, seed, out } => cmd_analyze_group(&group, seed, &out, stdout),
        Command::Verify { run, group, persist, seed, match_slack } => {
            cmd_density(&run, &persist, Some((&group, seed, match_slack)), stdout, stderr)
        }
        Command::Moments { group, k, samples, seed, out } => cmd_moments(&group, k, samples, seed, &out, stdout),
    }
}

fn prepare_run(run: &RunArgs) -> Result<(SurfaceModel, EngineConfig), Failure> {
    let model = parse_surface(&run.curve).map_err(|e| Failure::usage(format!("--curve: {e}")))?;
    if run.bound == 0 || run.naive_max_fp == 0 || run.naive_max_fp2 == 0 {
        return Err(Failure::usage("--bound, --naive-max-fp and --naive-max-fp2 must be positive"));
    }
    if run.naive_max_fp2 > run.naive_max_fp {
        return Err(Failure::usage("--naive-max-fp2 must not exceed --naive-max-fp"));
    }
    let config = EngineConfig {
        frobenius: FrobeniusConfig { naive_max_fp: run.naive_max_fp, naive_max_fp2: run.naive_max_fp2 },
        threads: run.threads,
        ..EngineConfig::default()
    };
    Ok((model, config))
}

fn write_output(path: &Path, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    if path.as_os_str() == "-" {
        stdout.write_all(text.as_bytes())?;
    } else {
        std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_frobenius(run: &RunArgs, out: &Path, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let (model, config) = prepare_run(run)?;
    let surface = model.to_string();
    let control = RunControl::default();
    if out.as_os_str() == "-" {
        let mut sink = JsonLinesSink::new(&mut *stdout, &surface)?;
        run_density_controlled(&model, run.bound, &config, &mut sink, &control)?;
        sink.flush()?;
    } else {
        let mut sink = JsonLinesSink::new(create(out)?, &surface)?;
        run_density_controlled(&model, run.bound, &config, &mut sink, &control)?;
        sink.flush()?;
    }
    Ok(EXIT_OK)
}

fn load_group(args: &GroupArgs) -> Result<GroupEntry, Failure> {
    let catalog = match &args.catalog {
        Some(path) => Catalog::load(path)?,
        None => Catalog::shipped(),
    };
    Ok(catalog.get(&args.group)?.clone())
}

fn analysis(seed: u64) -> AnalysisConfig {
    AnalysisConfig { seed, ..AnalysisConfig::default() }
}

fn cmd_density(
    run: &RunArgs,
    persist: &PersistArgs,
    verify: Option<(&GroupArgs, u64, f64)>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let (model, config) = prepare_run(run)?;
    // predict first: a bad group should fail before the long run
    let prediction = match verify {
        Some((group, seed, slack)) => {
            if !(slack >= 0.0 && slack.is_finite()) {
                return Err(Failure::usage("--match-slack must be a non-negative number"));
            }
            let entry = load_group(group)?;
            let pred = predict(&entry, &analysis(seed))?;
            Some((entry.id, pred.density, slack))
        }
        None => None,
    };
    let surface = model.to_string();
    let resume = match &persist.resume {
        Some(path) => Some(checkpoint_read(path).map_err(EngineError::from)?),
        None => None,
    };
    let control = RunControl {
        checkpoint: persist.checkpoint.clone().or_else(|| persist.resume.clone()),
        resume: resume.clone(),
        halt_after: persist.halt_after,
    };
    let mut sink: Box<dyn RecordSink> = match (&persist.records, &resume) {
        (None, _) => Box::new(NullSink),
        (Some(path), None) => Box::new(JsonLinesSink::new(create(path)?, &surface)?),
        (Some(path), Some(cp)) => Box::new(
            reopen_records(path, &surface, cp.last_p)
                .map_err(|e| Failure::integrity(format!("{}: {e}", path.display())))?,
        ),
    };
    let outcome = run_density_controlled(&model, run.bound, &config, sink.as_mut(), &control)?;
    sink.flush()?;
    let mut report = match outcome {
        RunOutcome::Finished(report) => report,
        RunOutcome::Halted(cp) => {
            let _ = writeln!(stderr, "halted after p = {}; resume with --resume", cp.last_p);
            return Ok(EXIT_OK);
        }
    };
    let mut code = EXIT_OK;
    if let Some((id, density, slack)) = prediction {
        attach_prediction(&mut report, &id, density, slack);
        if report.matched != Some(true) {
            code = EXIT_MISMATCH;
        }
    }
    write_output(&persist.out, &report.to_json(), stdout)?;
    Ok(code)
}

fn cmd_analyze_group(args: &GroupArgs, seed: u64, out: &Path, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let entry = load_group(args)?;
    let pred = predict(&entry, &analysis(seed))?;
    let mut text = String::new();
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    text += &format!("group       {}\n", entry.id);
    text += &format!("kind        {}\n", entry.kind);
    text += &format!("realizable  {}\n", entry.realizable);
    text += &format!("components  {}\n", entry.component_count());
    text += &format!("{:<10} {:<9} {:<13} {:<11} {:<8} {}\n", "component", "constant", "value", "admissible", "samples", "span_rank");
    for v in &pred.verdicts {
        text += &format!(
            "{:<10} {:<9} {:<13} {:<11} {:<8} {}\n",
            v.component_index,
            v.constant,
            opt(v.value.map(|x| format!("{x:.9}"))),
            opt(v.admissible.map(|a| a.to_string())),
            v.samples_used,
            v.span_rank
        );
    }
    for w in &pred.warnings {
        text += &format!("warning     {w}\n");
    }
    text += &format!("predicted_density {}\n", pred.density);
    write_output(out, &text, stdout)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct MomentsOutput<'a> {
    group: &'a str,
    k: u32,
    samples: usize,
    seed: u64,
    mean: f64,
    std_error: f64,
}

fn cmd_moments(
    args: &GroupArgs,
    k: u32,
    samples: usize,
    seed: u64,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    if k > MAX_MOMENT {
        return Err(Failure::usage(format!("--k must be at most {MAX_MOMENT}")));
    }
    if samples == 0 {
        return Err(Failure::usage("--samples must be positive"));
    }
    let entry = load_group(args)?;
    let est = moment_estimate(&entry, k, samples, seed).map_err(|e| Failure::integrity(e.to_string()))?;
    let output = MomentsOutput { group: &entry.id, k, samples: est.samples, seed, mean: est.mean, std_error: est.std_error };
    let mut text = serde_json::to_string(&output).expect("moments serialize");
    text.push('\n');
    write_output(out, &text, stdout)?;
    Ok(EXIT_OK)
}
