//! Monte Carlo studies: false-alarm rate, power, decay of the distance to
//! the Gaussian limit, and threshold tables.
//!
//! Every random draw derives from `(master_seed, purpose, index)` through
//! [`seed::stream_seed`], and replications are collected in index order,
//! so a report is a pure function of its configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::GridFunction;
use crate::gausslimit::{
    estimate_lrv, spacetime_cov, sup_draws, upper_quantile, CovKernel, LagBandwidth, QUANTILE_RANK_TOL,
};
use crate::linalg::{self, CovMatrix};
use crate::metrics::{empirical_cov, prokhorov_discrete, wasserstein2_gaussian, EmpiricalMeasure, GroundNorm};
use crate::monitor::{init_monitor, run_monitor};
use crate::partialsum::{build_partial_sum, discretize, make_grid, vectorize, Centering};
use crate::seed::{self, Purpose};
use crate::synth::{apply_change, generate_series, reconstruct, ChangeSpec, GeneratorConfig, ReconstructionConfig};

/// Largest product grid accepted by the decay experiment.
pub const MAX_DECAY_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Size,
    Power,
    Decay,
    Threshold,
}

/// Where the long-run kernel behind the threshold comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Calibration {
    /// Bartlett estimate from an independent series (length `N` unless
    /// given).
    Estimated {
        #[serde(default)]
        length: Option<usize>,
    },
    /// The generator's true kernel.
    Oracle,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration::Estimated { length: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_sigma_mesh")]
    pub sigma_mesh: f64,
    #[serde(default = "default_c_count")]
    pub c_count: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rho: default_rho(),
            sigma_mesh: default_sigma_mesh(),
            c_count: default_c_count(),
        }
    }
}

/// Mean change given either as two functions or as a constant shift of
/// a zero mean on the generator grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChangeConfig {
    Shift { shift: f64, k_star: usize },
    Explicit(ChangeSpec),
}

impl ChangeConfig {
    pub fn spec(&self, generator: &GeneratorConfig) -> Result<ChangeSpec> {
        match self {
            ChangeConfig::Explicit(spec) => Ok(spec.clone()),
            ChangeConfig::Shift { shift, k_star } => {
                let zero = GridFunction::zeros(generator.interval, generator.n_nodes, generator.d)?;
                let mu2 = GridFunction::constant(generator.interval, generator.n_nodes, &vec![*shift; generator.d])?;
                ChangeSpec::new(zero, mu2, *k_star)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Its `seed` field is ignored: experiment seeds come from `master_seed`.
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub reconstruction: Option<ReconstructionConfig>,
    #[serde(default)]
    pub change: Option<ChangeConfig>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "default_horizon_factor")]
    pub horizon_factor: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub n_rep: usize,
    #[serde(default = "default_quantile_reps")]
    pub quantile_reps: usize,
    #[serde(default = "default_lambda_resolution")]
    pub lambda_resolution: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub calibration: Calibration,
    /// Sample sizes of the decay experiment.
    #[serde(default)]
    pub n_list: Vec<usize>,
    /// Levels of the threshold table; `[alpha]` when empty.
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// Atom cap for the Prokhorov comparison in the decay experiment.
    #[serde(default = "default_prokhorov_atoms")]
    pub prokhorov_atoms: usize,
}

fn default_rho() -> f64 {
    0.1
}
fn default_sigma_mesh() -> f64 {
    0.4
}
fn default_c_count() -> f64 {
    8.0
}
fn default_horizon_factor() -> f64 {
    5.0
}
fn default_alpha() -> f64 {
    0.1
}
fn default_quantile_reps() -> usize {
    20_000
}
fn default_lambda_resolution() -> usize {
    crate::gausslimit::DEFAULT_LAMBDA_RESOLUTION
}
fn default_prokhorov_atoms() -> usize {
    512
}

impl ExperimentConfig {
    /// A size experiment with defaults for everything not listed.
    pub fn new(experiment: ExperimentKind, generator: GeneratorConfig, n: usize, n_rep: usize) -> Self {
        Self {
            experiment,
            generator,
            reconstruction: None,
            change: None,
            n,
            horizon_factor: default_horizon_factor(),
            alpha: default_alpha(),
            n_rep,
            quantile_reps: default_quantile_reps(),
            lambda_resolution: default_lambda_resolution(),
            grid: GridSpec::default(),
            master_seed: 0,
            calibration: Calibration::default(),
            n_list: Vec::new(),
            alphas: Vec::new(),
            prokhorov_atoms: default_prokhorov_atoms(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "experiment config".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if let Some(r) = &self.reconstruction {
            r.validate()?;
        }
        if self.n == 0 {
            return Err(Error::config("N must be at least 1"));
        }
        if self.n_rep == 0 {
            return Err(Error::config("n_rep must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha = {} not in (0, 1)", self.alpha)));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::config("every entry of alphas must lie in (0, 1)"));
        }
        if !(self.horizon_factor > 0.0 && self.horizon_factor.is_finite()) {
            return Err(Error::config("horizon_factor must be positive"));
        }
        if self.quantile_reps < 100 {
            return Err(Error::config("quantile_reps must be at least 100"));
        }
        if self.lambda_resolution == 0 {
            return Err(Error::config("lambda_resolution must be at least 1"));
        }
        if let Calibration::Estimated { length: Some(0) } = self.calibration {
            return Err(Error::config("calibration length must be at least 1"));
        }
        Ok(())
    }

    /// Monitoring steps after training: `ceil(horizon_factor * N)`.
    pub fn horizon(&self) -> usize {
        (self.horizon_factor * self.n as f64).ceil() as usize
    }

    fn change_spec(&self) -> Result<Option<ChangeSpec>> {
        self.change.as_ref().map(|c| c.spec(&self.generator)).transpose()
    }
}

/// One monitored replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub rep: usize,
    pub alarmed: bool,
    pub alarm_k: Option<usize>,
    /// `alarm_k - k_star` under a change.
    pub delay: Option<i64>,
    pub max_gamma: f64,
    pub steps_run: usize,
    pub truncated: bool,
}

/// Distances at one sample size of the decay experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub lambda_points: usize,
    pub u_points: usize,
    pub total_points: usize,
    pub d_w2: f64,
    pub prokhorov: f64,
    pub atoms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub alpha: f64,
    pub q: f64,
    pub n_rep: usize,
    pub resolution: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rows", rename_all = "snake_case")]
pub enum ReportRows {
    Monitoring(Vec<MonitorRow>),
    Decay(Vec<DecayRow>),
    Threshold(Vec<ThresholdRow>),
}

impl ReportRows {
    pub fn len(&self) -> usize {
        match self {
            ReportRows::Monitoring(r) => r.len(),
            ReportRows::Decay(r) => r.len(),
            ReportRows::Threshold(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        match self {
            ReportRows::Monitoring(rows) => {
                writeln!(w, "rep,alarmed,alarm_k,delay,max_gamma,steps_run,truncated")?;
                for r in rows {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        r.rep,
                        r.alarmed,
                        opt(r.alarm_k),
                        opt(r.delay),
                        r.max_gamma,
                        r.steps_run,
                        r.truncated
                    )?;
                }
            }
            ReportRows::Decay(rows) => {
                writeln!(w, "n,lambda_points,u_points,total_points,d_w2,prokhorov,atoms")?;
                for r in rows {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        r.n, r.lambda_points, r.u_points, r.total_points, r.d_w2, r.prokhorov, r.atoms
                    )?;
                }
            }
            ReportRows::Threshold(rows) => {
                writeln!(w, "alpha,q,n_rep,resolution,seed")?;
                for r in rows {
                    writeln!(w, "{},{},{},{},{}", r.alpha, r.q, r.n_rep, r.resolution, r.seed)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub threshold: Option<f64>,
    pub kernel_source: Option<String>,
    pub horizon: Option<usize>,
    /// Set when monitoring stopped at a finite horizon: the rejection rate
    /// then under-estimates the open-ended false-alarm probability.
    pub truncated_lower_bound: bool,
    pub rejection_rate: Option<f64>,
    pub mc_se: Option<f64>,
    pub mean_delay: Option<f64>,
    /// 10%, 50% and 90% delay quantiles among alarmed replications.
    pub delay_quantiles: Option<[f64; 3]>,
    /// Least-squares slope of `log D(N)` on `log N` (descriptive).
    pub decay_loglog_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: ReportRows,
    pub summary: Summary,
    pub wall_ms: f64,
}

/// Runs whichever experiment `cfg.experiment` names.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        ExperimentKind::Size => run_size_experiment(cfg),
        ExperimentKind::Power => run_power_experiment(cfg),
        ExperimentKind::Decay => run_decay_experiment(cfg, &cfg.n_list),
        ExperimentKind::Threshold => run_threshold_experiment(cfg),
    }
}

/// False-alarm rate under the null, with the threshold calibrated on an
/// independent stream.
pub fn run_size_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let change = cfg.change_spec()?;
    if change.as_ref().is_some_and(|c| !c.is_null()) {
        return Err(Error::config("size experiments need no change (or mu1 = mu2)"));
    }
    run_monitoring(cfg, change.as_ref())
}

/// Rejection rate and detection delay under a mean change.
pub fn run_power_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let change = cfg.change_spec()?;
    match &change {
        Some(c) if !c.is_null() => run_monitoring(cfg, change.as_ref()),
        _ => Err(Error::config("power experiments need a change with mu1 != mu2")),
    }
}

/// Simulated latent series mapped through the configured reconstruction.
fn observed_series(
    cfg: &ExperimentConfig,
    len: usize,
    generator_seed: u64,
    reconstruction_seed: u64,
    change: Option<&ChangeSpec>,
) -> Result<Vec<GridFunction>> {
    let mut latent = generate_series(&cfg.generator.with_seed(generator_seed), len)?;
    if let Some(c) = change {
        latent = apply_change(&latent, c, cfg.n)?;
    }
    match &cfg.reconstruction {
        None => Ok(latent),
        Some(rc) => latent
            .iter()
            .enumerate()
            .map(|(i, x)| Ok(reconstruct(x, rc, seed::derive(reconstruction_seed, i as u64))?.0))
            .collect(),
    }
}

/// Kernel for the threshold and a label for the report.
pub fn calibration_kernel(cfg: &ExperimentConfig) -> Result<(CovKernel, String)> {
    match cfg.calibration {
        Calibration::Oracle => {
            let c = cfg.generator.long_run_kernel()?;
            let c = match &cfg.reconstruction {
                None => c,
                Some(rc) => {
                    let g = &cfg.generator;
                    let (target, n) = rc.target_grid(&GridFunction::zeros(g.interval, g.n_nodes, g.d)?)?;
                    c.resample(target, n)?
                }
            };
            Ok((c, "oracle".into()))
        }
        Calibration::Estimated { length } => {
            let len = length.unwrap_or(cfg.n);
            let series = observed_series(
                cfg,
                len,
                seed::stream_seed(cfg.master_seed, Purpose::Calibration, 0),
                seed::stream_seed(cfg.master_seed, Purpose::Calibration, 1),
                None,
            )?;
            let c = estimate_lrv(&series, LagBandwidth::Auto, true)?;
            Ok((c, format!("estimated(length={len})")))
        }
    }
}

fn run_monitoring(cfg: &ExperimentConfig, change: Option<&ChangeSpec>) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (kernel, source) = calibration_kernel(cfg)?;
    let quantile_seed = seed::stream_seed(cfg.master_seed, Purpose::Quantile, 0);
    let draws = sup_draws(&kernel, cfg.quantile_reps, cfg.lambda_resolution, quantile_seed)?;
    let q = upper_quantile(&draws, cfg.alpha)?;
    let horizon = cfg.horizon();
    let rows: Vec<MonitorRow> = (0..cfg.n_rep)
        .into_par_iter()
        .map(|rep| {
            let series = observed_series(
                cfg,
                cfg.n + horizon,
                seed::stream_seed(cfg.master_seed, Purpose::Replication, rep as u64),
                seed::stream_seed(cfg.master_seed, Purpose::Reconstruction, rep as u64),
                change,
            )?;
            let (train, stream) = series.split_at(cfg.n);
            let mut state = init_monitor(train, q)?;
            let r = run_monitor(&mut state, stream, horizon)?;
            let delay = change
                .filter(|c| !c.is_null())
                .and_then(|c| r.alarm_k.map(|k| k as i64 - c.k_star as i64));
            Ok(MonitorRow {
                rep,
                alarmed: r.alarmed,
                alarm_k: r.alarm_k,
                delay,
                max_gamma: r.max_gamma,
                steps_run: r.steps_run,
                truncated: r.truncated,
            })
        })
        .collect::<Result<_>>()?;

    let alarms = rows.iter().filter(|r| r.alarmed).count();
    let rate = alarms as f64 / rows.len() as f64;
    let mut delays: Vec<f64> = rows.iter().filter_map(|r| r.delay).map(|d| d as f64).collect();
    delays.sort_by(f64::total_cmp);
    let mean_delay = (!delays.is_empty()).then(|| delays.iter().sum::<f64>() / delays.len() as f64);
    let delay_quantiles = (!delays.is_empty()).then(|| {
        let at = |p: f64| delays[((p * delays.len() as f64).ceil() as usize).clamp(1, delays.len()) - 1];
        [at(0.1), at(0.5), at(0.9)]
    });
    let summary = Summary {
        threshold: Some(q),
        kernel_source: Some(source),
        horizon: Some(horizon),
        truncated_lower_bound: rows.iter().any(|r| r.truncated),
        rejection_rate: Some(rate),
        mc_se: Some((rate * (1.0 - rate) / rows.len() as f64).sqrt()),
        mean_delay,
        delay_quantiles,
        decay_loglog_slope: None,
    };
    Ok(ExperimentReport {
        config: cfg.clone(),
        rows: ReportRows::Monitoring(rows),
        summary,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// For each `N`: the Gaussian-fit distance `D(N)` between the law of the
/// discretised partial-sum field and its Brownian limit on the same grid,
/// plus the Prokhorov distance between a subsample of the field vectors
/// and an equally large Gaussian cloud.
pub fn run_decay_experiment(cfg: &ExperimentConfig, n_list: &[usize]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    if n_list.is_empty() {
        return Err(Error::config("decay experiment needs a non-empty n_list"));
    }
    if n_list.iter().any(|&n| n < 8) || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("n_list must be increasing with every N >= 8"));
    }
    if cfg.change_spec()?.is_some_and(|c| !c.is_null()) {
        return Err(Error::config("decay experiments run under the null"));
    }
    let kernel = cfg.generator.long_run_kernel()?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let grid = make_grid(n, cfg.grid.rho, cfg.grid.sigma_mesh, cfg.grid.c_count)?;
        if grid.total_points() > MAX_DECAY_POINTS {
            return Err(Error::config(format!(
                "grid for N = {n} has {} points (limit {MAX_DECAY_POINTS})",
                grid.total_points()
            )));
        }
        let limit = limit_cov(&kernel, &grid.lambda_points, &grid.u_points)?;
        let vectors: Vec<Vec<f64>> = (0..cfg.n_rep)
            .into_par_iter()
            .map(|rep| {
                let series = observed_series(
                    cfg,
                    n,
                    seed::derive(
                        seed::stream_seed(cfg.master_seed, Purpose::Replication, rep as u64),
                        n as u64,
                    ),
                    seed::derive(
                        seed::stream_seed(cfg.master_seed, Purpose::Reconstruction, rep as u64),
                        n as u64,
                    ),
                    None,
                )?;
                // the generator is centred, and so are its linear reconstructions
                let zero = GridFunction::zeros(*series[0].interval(), series[0].n_nodes(), series[0].dim())?;
                let means = vec![zero; n];
                let field = build_partial_sum(&series, Centering::Exact(&means))?;
                Ok(vectorize(&discretize(&field, &grid)))
            })
            .collect::<Result<_>>()?;
        let d_w2 = wasserstein2_gaussian(&empirical_cov(&vectors)?, &limit)?;

        let atoms = cfg.prokhorov_atoms.min(cfg.n_rep);
        let mut rng = seed::rng(seed::stream_seed(cfg.master_seed, Purpose::Subsample, n as u64));
        let sample: Vec<Vec<f64>> = index::sample(&mut rng, vectors.len(), atoms)
            .into_iter()
            .map(|i| vectors[i].clone())
            .collect();
        let factor = linalg::eigen_factor(limit.matrix(), QUANTILE_RANK_TOL)?;
        let mut rng = seed::rng(seed::stream_seed(cfg.master_seed, Purpose::Gaussian, n as u64));
        let cloud: Vec<Vec<f64>> = (0..atoms)
            .map(|_| {
                let z = nalgebra::DVector::from_fn(factor.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
                (&factor * z).iter().copied().collect()
            })
            .collect();
        let prokhorov = prokhorov_discrete(
            &EmpiricalMeasure::uniform(sample)?,
            &EmpiricalMeasure::uniform(cloud)?,
            GroundNorm::Max,
        )?;
        rows.push(DecayRow {
            n,
            lambda_points: grid.lambda_points.len(),
            u_points: grid.u_points.len(),
            total_points: grid.total_points(),
            d_w2,
            prokhorov,
            atoms,
        });
    }
    let summary = Summary {
        decay_loglog_slope: loglog_slope(&rows),
        ..Summary::default()
    };
    Ok(ExperimentReport {
        config: cfg.clone(),
        rows: ReportRows::Decay(rows),
        summary,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Space-time covariance of the limit of the zero-extended field: rows
/// for `u` outside the kernel interval are zero.
fn limit_cov(kernel: &CovKernel, lambda_points: &[f64], u_points: &[f64]) -> Result<CovMatrix> {
    let inside: Vec<usize> = (0..u_points.len())
        .filter(|&i| kernel.interval().contains(u_points[i]))
        .collect();
    let kept: Vec<f64> = inside.iter().map(|&i| u_points[i]).collect();
    let small = spacetime_cov(kernel, lambda_points, &kept)?;
    let d = kernel.dim();
    let full_index = |k: usize| {
        let (l, rest) = (k / (kept.len() * d), k % (kept.len() * d));
        (l * u_points.len() + inside[rest / d]) * d + rest % d
    };
    let dim = lambda_points.len() * u_points.len() * d;
    let mut out = nalgebra::DMatrix::zeros(dim, dim);
    for i in 0..small.dim() {
        for j in 0..small.dim() {
            out[(full_index(i), full_index(j))] = small.matrix()[(i, j)];
        }
    }
    CovMatrix::new(out)
}

fn loglog_slope(rows: &[DecayRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.d_w2 > 0.0)
        .map(|r| ((r.n as f64).ln(), r.d_w2.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Thresholds `q_{1-alpha}` for every configured level from one set of
/// `quantile_reps` draws.
pub fn run_threshold_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (kernel, source) = calibration_kernel(cfg)?;
    let quantile_seed = seed::stream_seed(cfg.master_seed, Purpose::Quantile, 0);
    let draws = sup_draws(&kernel, cfg.quantile_reps, cfg.lambda_resolution, quantile_seed)?;
    let alphas = if cfg.alphas.is_empty() {
        vec![cfg.alpha]
    } else {
        cfg.alphas.clone()
    };
    let rows = alphas
        .iter()
        .map(|&alpha| {
            Ok(ThresholdRow {
                alpha,
                q: upper_quantile(&draws, alpha)?,
                n_rep: cfg.quantile_reps,
                resolution: cfg.lambda_resolution,
                seed: quantile_seed,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport {
        config: cfg.clone(),
        rows: ReportRows::Threshold(rows),
        summary: Summary {
            kernel_source: Some(source),
            ..Summary::default()
        },
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config: ExperimentConfig,
    seeds: SeedEcho,
    summary: Summary,
    wall_ms: f64,
}

#[derive(Serialize, Deserialize)]
struct SeedEcho {
    master_seed: u64,
    calibration: u64,
    quantile: u64,
}

/// Path of the JSON file written next to a report CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes the rows as CSV at `path` and the configuration, seeds and
/// summary to the sidecar JSON.
pub fn emit_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut csv = Vec::new();
    report.rows.write_csv(&mut csv).map_err(|e| Error::io(path, e))?;
    fs::write(path, csv).map_err(|e| Error::io(path, e))?;
    let master = report.config.master_seed;
    let sidecar = Sidecar {
        config: report.config.clone(),
        seeds: SeedEcho {
            master_seed: master,
            calibration: seed::stream_seed(master, Purpose::Calibration, 0),
            quantile: seed::stream_seed(master, Purpose::Quantile, 0),
        },
        summary: report.summary.clone(),
        wall_ms: report.wall_ms,
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(|source| Error::Json {
        context: "report sidecar".into(),
        source,
    })?;
    let side = sidecar_path(path);
    fs::write(&side, json).map_err(|e| Error::io(side, e))
}

/// Reads the configuration back from a sidecar written by [`emit_report`].
pub fn load_sidecar_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|source| Error::Json {
        context: format!("sidecar {}", path.display()),
        source,
    })?;
    sidecar.config.validate()?;
    Ok(sidecar.config)
}
