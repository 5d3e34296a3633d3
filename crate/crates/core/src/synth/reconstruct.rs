use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{GridFunction, Interval};
use crate::seed;

/// Denominator below which the Nadaraya-Watson estimate falls back to the
/// response of the nearest design point.
pub const NW_DENOMINATOR_FLOOR: f64 = 1e-12;

/// Tolerance on the trapezoid mass of a latent density.
pub const DENSITY_MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Nw,
    Grid,
    Kde,
}

/// Bandwidth as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed {
        h: f64,
    },
    /// `h = c * m^(-b)`
    Power {
        c: f64,
        b: f64,
    },
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::Power { c: 1.0, b: 0.2 }
    }
}

impl BandwidthRule {
    pub fn bandwidth(&self, sample_size: usize) -> Result<f64> {
        let h = match *self {
            BandwidthRule::Fixed { h } => h,
            BandwidthRule::Power { c, b } => c * (sample_size as f64).powf(-b),
        };
        if h > 0.0 && h.is_finite() {
            Ok(h)
        } else {
            Err(Error::config(format!("bandwidth {h} must be positive")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignDensity {
    #[default]
    Uniform,
    /// Normal centred on the interval with sd = width / 6, truncated to it.
    Gaussian,
}

fn default_noise() -> f64 {
    0.1
}

/// How sparse observations are turned back into functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub scheme: Scheme,
    /// Points per curve (`M`); for `kde` the sample size when no random
    /// range is configured.
    pub m: usize,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    /// Interval on which the estimate is returned; defaults to the latent
    /// interval.
    #[serde(default)]
    pub target: Option<Interval>,
    /// Nodes of the target grid; defaults to the latent node density.
    #[serde(default)]
    pub target_nodes: Option<usize>,
    #[serde(default)]
    pub design: DesignDensity,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    /// Random sample size `D ~ Uniform{lo..=hi}` for `kde`.
    #[serde(default)]
    pub sample_size_range: Option<(usize, usize)>,
}

impl ReconstructionConfig {
    pub fn new(scheme: Scheme, m: usize) -> Self {
        Self {
            scheme,
            m,
            bandwidth: BandwidthRule::default(),
            target: None,
            target_nodes: None,
            design: DesignDensity::Uniform,
            noise_sigma: default_noise(),
            sample_size_range: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::config("M must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise_sigma must be non-negative"));
        }
        if let Some((lo, hi)) = self.sample_size_range {
            if lo == 0 || lo > hi {
                return Err(Error::config("sample_size_range needs 1 <= lo <= hi"));
            }
        }
        if let Some(t) = &self.target {
            t.validate()?;
        }
        Ok(())
    }

    /// Target interval and node count for a given latent grid.
    pub fn target_grid(&self, latent: &GridFunction) -> Result<(Interval, usize)> {
        let target = self.target.unwrap_or(*latent.interval());
        if !latent.interval().contains_interval(&target) {
            return Err(Error::domain(format!(
                "target [{}, {}] outside the latent interval [{}, {}]",
                target.lower,
                target.upper,
                latent.interval().lower,
                latent.interval().upper
            )));
        }
        let n = self
            .target_nodes
            .unwrap_or_else(|| ((target.width() / latent.mesh()).round() as usize + 1).max(2));
        if n < 2 {
            return Err(Error::config("target grid needs at least two nodes"));
        }
        Ok((target, n))
    }
}

/// The raw sparse data behind one reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationRecord {
    Nw {
        design_points: Vec<f64>,
        /// `M x d`, point-major.
        responses: Vec<f64>,
        noise_sigma: f64,
    },
    Grid {
        node_values: Vec<f64>,
        m: usize,
    },
    Kde {
        sample_points: Vec<f64>,
        d: usize,
    },
}

fn gauss_kernel(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn draw_design(rng: &mut seed::Rng, interval: &Interval, density: DesignDensity) -> f64 {
    match density {
        DesignDensity::Uniform => rng.gen_range(interval.lower..=interval.upper),
        DesignDensity::Gaussian => {
            let centre = 0.5 * (interval.lower + interval.upper);
            let normal = Normal::new(centre, interval.width() / 6.0).expect("positive sd");
            loop {
                let u: f64 = rng.sample(normal);
                if u >= interval.lower && u <= interval.upper {
                    return u;
                }
            }
        }
    }
}

/// Noisy point observations smoothed by the Nadaraya-Watson estimator with
/// a Gaussian kernel.
pub fn reconstruct_nw(
    latent: &GridFunction,
    cfg: &ReconstructionConfig,
    design_density: DesignDensity,
    noise_sigma: f64,
    seed: u64,
) -> Result<(GridFunction, ObservationRecord)> {
    cfg.validate()?;
    if cfg.scheme != Scheme::Nw {
        return Err(Error::config("reconstruct_nw needs scheme = nw"));
    }
    let (target, n_target) = cfg.target_grid(latent)?;
    let h = cfg.bandwidth.bandwidth(cfg.m)?;
    let d = latent.dim();
    let mut rng = seed::rng(seed);
    let mut design = Vec::with_capacity(cfg.m);
    let mut responses = Vec::with_capacity(cfg.m * d);
    for _ in 0..cfg.m {
        let u = draw_design(&mut rng, latent.interval(), design_density);
        design.push(u);
        for x in latent.eval(u)? {
            let eps: f64 = rng.sample(StandardNormal);
            responses.push(x + noise_sigma * eps);
        }
    }
    let mut values = vec![0.0; n_target * d];
    let mut weights = vec![0.0; cfg.m];
    for (j, out) in values.chunks_mut(d).enumerate() {
        let u = target.node(j, n_target);
        let mut denom = 0.0;
        for (w, &um) in weights.iter_mut().zip(&design) {
            *w = gauss_kernel((u - um) / h) / h;
            denom += *w;
        }
        if denom < NW_DENOMINATOR_FLOOR {
            let nearest = design
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - u).abs().total_cmp(&(b.1 - u).abs()))
                .map(|(i, _)| i)
                .expect("M >= 1");
            out.copy_from_slice(&responses[nearest * d..(nearest + 1) * d]);
        } else {
            for (m, w) in weights.iter().enumerate() {
                for (o, y) in out.iter_mut().zip(&responses[m * d..(m + 1) * d]) {
                    *o += w * y;
                }
            }
            out.iter_mut().for_each(|o| *o /= denom);
        }
    }
    let estimate = GridFunction::new(target, n_target, d, values)?;
    Ok((
        estimate,
        ObservationRecord::Nw {
            design_points: design,
            responses,
            noise_sigma,
        },
    ))
}

/// Linear interpolation of the values at `lower + m * width / M`,
/// `m = 0..=M`, returned on the latent grid.
pub fn reconstruct_grid(latent: &GridFunction, m: usize) -> Result<(GridFunction, ObservationRecord)> {
    if m == 0 {
        return Err(Error::config("M must be at least 1"));
    }
    let iv = *latent.interval();
    let d = latent.dim();
    let mut samples = vec![0.0; (m + 1) * d];
    for (j, chunk) in samples.chunks_mut(d).enumerate() {
        latent.eval_into(iv.node(j, m + 1), chunk)?;
    }
    let coarse = GridFunction::new(iv, m + 1, d, samples)?;
    let estimate = coarse.resample(iv, latent.n_nodes())?;
    Ok((
        estimate,
        ObservationRecord::Grid {
            node_values: coarse.into_values(),
            m,
        },
    ))
}

/// Checks non-negativity and unit trapezoid mass of a scalar density.
pub fn check_density(density: &GridFunction) -> Result<()> {
    if density.dim() != 1 {
        return Err(Error::config("a density must be scalar (d = 1)"));
    }
    if density.values().iter().any(|&v| v < 0.0) {
        return Err(Error::domain("density has negative values"));
    }
    let mass = density.integral()[0];
    if (mass - 1.0).abs() > DENSITY_MASS_TOL {
        return Err(Error::domain(format!("density integrates to {mass}, not 1")));
    }
    Ok(())
}

/// Exact inverse-CDF sampling from a piecewise-linear density.
pub(crate) struct GridSampler {
    lower: f64,
    mesh: f64,
    dens: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridSampler {
    pub(crate) fn new(density: &GridFunction) -> Self {
        let mesh = density.mesh();
        let dens = density.values().to_vec();
        let mut cdf = Vec::with_capacity(dens.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in dens.windows(2) {
            acc += 0.5 * mesh * (w[0] + w[1]);
            cdf.push(acc);
        }
        Self {
            lower: density.interval().lower,
            mesh,
            dens,
            cdf,
        }
    }

    pub(crate) fn quantile(&self, p: f64) -> f64 {
        let total = *self.cdf.last().expect("non-empty");
        let target = (p * total).clamp(0.0, total);
        // last node j with cdf[j] <= target, restricted to a real cell
        let j = self
            .cdf
            .partition_point(|&c| c <= target)
            .saturating_sub(1)
            .min(self.dens.len() - 2);
        let r = target - self.cdf[j];
        let f0 = self.dens[j];
        let slope_half = (self.dens[j + 1] - f0) / (2.0 * self.mesh);
        let disc = (f0 * f0 + 4.0 * slope_half * r).max(0.0);
        let denom = f0 + disc.sqrt();
        let s = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        self.lower + (j as f64 + (s / self.mesh).clamp(0.0, 1.0)) * self.mesh
    }
}

/// Draws `sample_size` points from `latent_density` and returns the Gaussian
/// kernel density estimate on the target grid of `cfg`.
pub fn reconstruct_kde(
    latent_density: &GridFunction,
    sample_size: usize,
    cfg: &ReconstructionConfig,
    seed: u64,
) -> Result<(GridFunction, ObservationRecord)> {
    if sample_size == 0 {
        return Err(Error::config("KDE sample size must be at least 1"));
    }
    check_density(latent_density)?;
    let (target, n_target) = cfg.target_grid(latent_density)?;
    let h = cfg.bandwidth.bandwidth(sample_size)?;
    let sampler = GridSampler::new(latent_density);
    let mut rng = seed::rng(seed);
    let points: Vec<f64> = (0..sample_size).map(|_| sampler.quantile(rng.gen::<f64>())).collect();
    let values = kde_values(&points, h, &target, n_target);
    let estimate = GridFunction::new(target, n_target, 1, values)?;
    Ok((
        estimate,
        ObservationRecord::Kde {
            sample_points: points,
            d: sample_size,
        },
    ))
}

pub(crate) fn kde_values(points: &[f64], h: f64, target: &Interval, n_target: usize) -> Vec<f64> {
    let scale = 1.0 / (points.len() as f64 * h);
    (0..n_target)
        .map(|j| {
            let u = target.node(j, n_target);
            scale * points.iter().map(|p| gauss_kernel((u - p) / h)).sum::<f64>()
        })
        .collect()
}

/// Dispatches on `cfg.scheme`; for `kde` the latent function must be a
/// density and a random sample size is drawn when configured.
pub fn reconstruct(
    latent: &GridFunction,
    cfg: &ReconstructionConfig,
    seed: u64,
) -> Result<(GridFunction, ObservationRecord)> {
    match cfg.scheme {
        Scheme::Nw => reconstruct_nw(latent, cfg, cfg.design, cfg.noise_sigma, seed),
        Scheme::Grid => {
            let (estimate, record) = reconstruct_grid(latent, cfg.m)?;
            match cfg.target {
                Some(t) if t != *latent.interval() => {
                    let (t, n) = cfg.target_grid(latent)?;
                    Ok((estimate.resample(t, n)?, record))
                }
                _ => Ok((estimate, record)),
            }
        }
        Scheme::Kde => {
            let size = match cfg.sample_size_range {
                Some((lo, hi)) => {
                    let mut rng = seed::rng(seed::derive(seed, 0xd5));
                    rng.gen_range(lo..=hi)
                }
                None => cfg.m,
            };
            reconstruct_kde(latent, size, cfg, seed)
        }
    }
}
