//! Command line front end behind the `fts-sentinel` binary.
//!
//! Exit codes: 0 on success, 2 for configuration and input errors, 3 for
//! numerical failures.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{emit_report, run_experiment, ExperimentConfig};
use crate::funcspace::GridFunction;
use crate::gausslimit::{estimate_lrv, sup_draws, upper_quantile, CovKernel, LagBandwidth};
use crate::linalg::{eigen_factor, CovMatrix};
use crate::metrics::{prokhorov_discrete, wasserstein2_gaussian, EmpiricalMeasure, GroundNorm};
use crate::monitor::{init_monitor, Decision, PostAlarm};
use crate::synth::{generate_series, reconstruct, GeneratorConfig, ReconstructionConfig};

#[derive(Debug, Parser)]
#[command(
    name = "fts-sentinel",
    version,
    about = "Functional time series simulation and open-ended change monitoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a latent functional series as JSON lines.
    Gen(GenArgs),
    /// Rebuild functions from sparse noisy observations.
    Reconstruct(ReconstructArgs),
    /// Monte Carlo threshold q for a long-run covariance kernel.
    Threshold(ThresholdArgs),
    /// Run the CUSUM detector over a stream.
    Monitor(MonitorArgs),
    /// Distances between measures.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Size, power, decay or threshold study from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Generator configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Number of functions.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// Reconstruction configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Latent functions, one per line.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Kernel JSON; alternatively estimate it with `--series`.
    #[arg(long, conflicts_with = "series", required_unless_present = "series")]
    kernel: Option<PathBuf>,
    /// Series (JSON lines) to estimate the kernel from.
    #[arg(long)]
    series: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 20_000)]
    n_rep: usize,
    #[arg(long, default_value_t = crate::gausslimit::DEFAULT_LAMBDA_RESOLUTION)]
    resolution: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct MonitorArgs {
    /// Training functions, one per line.
    #[arg(long)]
    training: PathBuf,
    /// Monitored functions, one per line.
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    q: f64,
    /// Maximum number of monitored functions.
    #[arg(long)]
    horizon: Option<usize>,
    /// Treat input after an alarm as an error instead of ignoring it.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Max,
    Euclidean,
}

#[derive(Debug, Subcommand)]
enum MetricsCommand {
    /// Exact Prokhorov distance between two finite measures.
    Prokhorov {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value = "max")]
        norm: NormArg,
    },
    /// 2-Wasserstein distance between centred Gaussians.
    W2gauss {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

/// Parses `args` (including the program name) and runs the command;
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Threshold(a) => threshold(a),
        Command::Monitor(a) => monitor(a),
        Command::Metrics(m) => metrics(m),
        Command::Experiment(a) => experiment(a),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

/// One JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Json {
            context: format!("{}:{}", path.display(), i + 1),
            source,
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut w: W) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Writes to `dir/name` (creating `dir`) or to stdout.
fn emit(out: Option<&Path>, name: &str, body: &[u8]) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(path, e))
        }
        None => io::stdout().write_all(body).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let mut cfg: GeneratorConfig = read_json(&a.config)?;
    if let Some(s) = a.common.seed {
        cfg.seed = s;
    }
    let series = generate_series(&cfg, a.n)?;
    let mut body = Vec::new();
    write_jsonl(&series, &mut body).map_err(|e| Error::io("<buffer>", e))?;
    emit(a.common.out.as_deref(), "series.jsonl", &body)
}

fn reconstruct_cmd(a: ReconstructArgs) -> Result<()> {
    let cfg: ReconstructionConfig = read_json(&a.config)?;
    cfg.validate()?;
    let latent: Vec<GridFunction> = read_jsonl(&a.input)?;
    let base = a.common.seed.unwrap_or(0);
    let mut estimates = Vec::with_capacity(latent.len());
    let mut records = Vec::with_capacity(latent.len());
    for (i, x) in latent.iter().enumerate() {
        let (est, rec) = reconstruct(x, &cfg, crate::seed::derive(base, i as u64))?;
        estimates.push(est);
        records.push(rec);
    }
    let mut body = Vec::new();
    write_jsonl(&estimates, &mut body).map_err(|e| Error::io("<buffer>", e))?;
    emit(a.common.out.as_deref(), "reconstructed.jsonl", &body)?;
    if a.common.out.is_some() {
        let mut obs = Vec::new();
        write_jsonl(&records, &mut obs).map_err(|e| Error::io("<buffer>", e))?;
        emit(a.common.out.as_deref(), "observations.jsonl", &obs)?;
    }
    Ok(())
}

fn threshold(a: ThresholdArgs) -> Result<()> {
    let kernel: CovKernel = match (&a.kernel, &a.series) {
        (Some(path), _) => read_json(path)?,
        (None, Some(path)) => estimate_lrv(&read_jsonl::<GridFunction>(path)?, LagBandwidth::Auto, true)?,
        (None, None) => return Err(Error::config("either --kernel or --series is required")),
    };
    if a.n_rep < 100 {
        return Err(Error::config("--n-rep must be at least 100"));
    }
    let seed = a.common.seed.unwrap_or(0);
    let draws = sup_draws(&kernel, a.n_rep, a.resolution, seed)?;
    let q = upper_quantile(&draws, a.alpha)?;
    let body = format!(
        "alpha,q,n_rep,resolution,seed\n{},{},{},{},{}\n",
        a.alpha, q, a.n_rep, a.resolution, seed
    );
    emit(a.common.out.as_deref(), "threshold.csv", body.as_bytes())
}

fn monitor(a: MonitorArgs) -> Result<()> {
    let training: Vec<GridFunction> = read_jsonl(&a.training)?;
    let stream: Vec<GridFunction> = read_jsonl(&a.stream)?;
    let mode = if a.strict { PostAlarm::Strict } else { PostAlarm::Audit };
    let mut state = init_monitor(&training, a.q)?.with_mode(mode);
    let horizon = a.horizon.unwrap_or(stream.len());
    if horizon == 0 {
        return Err(Error::config("--horizon must be at least 1"));
    }
    let mut body = String::from("k,gamma,alarmed\n");
    for x in stream.iter().take(horizon) {
        if state.alarmed() {
            // audit mode ignores the rest, strict mode refuses it
            state.step(x)?;
            break;
        }
        let decision = state.step(x)?;
        body.push_str(&format!(
            "{},{},{}\n",
            state.k(),
            state.gamma()?,
            decision == Decision::Alarm
        ));
    }
    emit(a.out.as_deref(), "monitor.csv", body.as_bytes())
}

fn norm(n: NormArg) -> GroundNorm {
    match n {
        NormArg::Max => GroundNorm::Max,
        NormArg::Euclidean => GroundNorm::Euclidean,
    }
}

fn metrics(m: MetricsCommand) -> Result<()> {
    let start = Instant::now();
    let line = match m {
        MetricsCommand::Prokhorov { a, b, norm: n } => {
            let pa: EmpiricalMeasure = read_json(&a)?;
            let pb: EmpiricalMeasure = read_json(&b)?;
            let v = prokhorov_discrete(&pa, &pb, norm(n))?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            format!("{v},{},{},{ms:.3}\n", pa.dim(), pa.len().max(pb.len()))
        }
        MetricsCommand::W2gauss { a, b } => {
            let sa: CovMatrix = read_json(&a)?;
            let sb: CovMatrix = read_json(&b)?;
            let v = wasserstein2_gaussian(&sa, &sb)?;
            let rank = |s: &CovMatrix| eigen_factor(s.matrix(), 1e-12).map(|f| f.ncols());
            let r = rank(&sa)?.max(rank(&sb)?);
            let ms = start.elapsed().as_secs_f64() * 1e3;
            format!("{v},{},{r},{ms:.3}\n", sa.dim())
        }
    };
    io::stdout()
        .write_all(line.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.common.seed {
        cfg.master_seed = s;
    }
    let report = run_experiment(&cfg)?;
    match a.common.out.as_deref() {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            emit_report(&report, &dir.join("report.csv"))?;
        }
        None => report
            .rows
            .write_csv(io::stdout().lock())
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    let s = &report.summary;
    if let (Some(rate), Some(se)) = (s.rejection_rate, s.mc_se) {
        eprintln!(
            "rejection rate {rate:.4} (MC SE {se:.4}), q = {:.4}{}",
            s.threshold.unwrap_or(f64::NAN),
            if s.truncated_lower_bound {
                ", truncated horizon: lower bound"
            } else {
                ""
            }
        );
    }
    Ok(())
}
