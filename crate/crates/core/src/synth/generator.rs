use std::f64::consts::{PI, SQRT_2};

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{GridFunction, Interval};
use crate::gausslimit::CovKernel;
use crate::seed;

/// Dependence structure of the basis coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Independent Gaussian coefficients.
    IidGaussBasis,
    /// Equal-weight moving average of order `q` over the innovations.
    FmaQ,
    /// Coefficient-wise AR(1) with parameter `rho`.
    Far1,
}

/// Latent functional time series built from a Fourier basis expansion.
///
/// The `k`-th coefficient has stationary standard deviation
/// `scale * k^(-basis_decay)`. On a compact interval the basis is the real
/// Fourier system (sine/cosine pairs, no constant); on a truncation of the
/// line it is the half-period sine system, so that the zero extension
/// stays continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub n_basis: usize,
    pub basis_decay: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "one_usize")]
    pub d: usize,
    pub interval: Interval,
    pub n_nodes: usize,
    /// MA order `q` for [`GeneratorKind::FmaQ`], AR coefficient for
    /// [`GeneratorKind::Far1`]; ignored otherwise.
    #[serde(default)]
    pub q_or_rho: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl GeneratorConfig {
    pub fn iid(interval: Interval, n_nodes: usize, n_basis: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::IidGaussBasis,
            n_basis,
            basis_decay: 2.0,
            scale: 1.0,
            d: 1,
            interval,
            n_nodes,
            q_or_rho: 0.0,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.interval.validate()?;
        if self.n_nodes < 2 {
            return Err(Error::config("generator needs n_nodes >= 2"));
        }
        if self.d == 0 || self.n_basis == 0 {
            return Err(Error::config("generator needs d >= 1 and n_basis >= 1"));
        }
        if !(self.basis_decay > 0.0 && self.basis_decay.is_finite()) {
            return Err(Error::config("basis_decay must be positive"));
        }
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(Error::config("scale must be finite and non-negative"));
        }
        match self.kind {
            GeneratorKind::Far1 if !(self.q_or_rho.abs() < 1.0) => {
                Err(Error::config(format!("far1 needs |rho| < 1, got {}", self.q_or_rho)))
            }
            GeneratorKind::FmaQ if !(self.q_or_rho >= 0.0 && self.q_or_rho.fract() == 0.0 && self.q_or_rho < 1e6) => {
                Err(Error::config(format!(
                    "fma_q needs a non-negative integer order, got {}",
                    self.q_or_rho
                )))
            }
            _ => Ok(()),
        }
    }

    /// Stationary standard deviation of coefficient `k` (0-based).
    pub fn coefficient_sd(&self, k: usize) -> f64 {
        self.scale * ((k + 1) as f64).powf(-self.basis_decay)
    }

    /// Basis function `k` (0-based) evaluated at `u`.
    pub fn basis(&self, k: usize, u: f64) -> f64 {
        let t = (u - self.interval.lower) / self.interval.width();
        if self.interval.truncation_of_line {
            SQRT_2 * ((k + 1) as f64 * PI * t).sin()
        } else {
            let freq = (k / 2 + 1) as f64;
            if k % 2 == 0 {
                SQRT_2 * (2.0 * PI * freq * t).sin()
            } else {
                SQRT_2 * (2.0 * PI * freq * t).cos()
            }
        }
    }

    /// Ratio of the long-run variance to the marginal variance of every
    /// coefficient.
    pub fn long_run_factor(&self) -> f64 {
        match self.kind {
            GeneratorKind::IidGaussBasis => 1.0,
            GeneratorKind::FmaQ => self.q_or_rho + 1.0,
            GeneratorKind::Far1 => (1.0 + self.q_or_rho) / (1.0 - self.q_or_rho),
        }
    }

    /// The population long-run covariance kernel of the latent series on
    /// the generator grid.
    pub fn long_run_kernel(&self) -> Result<CovKernel> {
        self.validate()?;
        let n = self.n_nodes;
        let d = self.d;
        let p = n * d;
        let basis = self.basis_matrix();
        let factor = self.long_run_factor();
        let mut matrix = nalgebra::DMatrix::zeros(p, p);
        for g in 0..n {
            for h in 0..n {
                let mut acc = 0.0;
                for k in 0..self.n_basis {
                    let sd = self.coefficient_sd(k);
                    acc += factor * sd * sd * basis[g * self.n_basis + k] * basis[h * self.n_basis + k];
                }
                for c in 0..d {
                    matrix[(g * d + c, h * d + c)] = acc;
                }
            }
        }
        CovKernel::new(self.interval, n, d, matrix, 0, false)
    }

    fn basis_matrix(&self) -> Vec<f64> {
        let nodes = self.interval.nodes(self.n_nodes);
        let mut out = Vec::with_capacity(self.n_nodes * self.n_basis);
        for &u in &nodes {
            for k in 0..self.n_basis {
                out.push(self.basis(k, u));
            }
        }
        out
    }
}

/// Streams latent functions for a fixed configuration.
pub struct Generator {
    cfg: GeneratorConfig,
    basis: Vec<f64>,
    sds: Vec<f64>,
    rng: seed::Rng,
    // per (component, coefficient): AR state, or the last q+1 innovations
    state: Vec<f64>,
    ma_window: usize,
    step: usize,
}

impl Generator {
    pub fn new(cfg: &GeneratorConfig) -> Result<Self> {
        cfg.validate()?;
        let n_coef = cfg.d * cfg.n_basis;
        let ma_window = match cfg.kind {
            GeneratorKind::FmaQ => cfg.q_or_rho as usize + 1,
            _ => 1,
        };
        let mut rng = seed::rng(cfg.seed);
        let mut state = vec![0.0; n_coef * ma_window];
        // start in the stationary law
        for s in state.iter_mut() {
            *s = rng.sample(StandardNormal);
        }
        Ok(Self {
            basis: cfg.basis_matrix(),
            sds: (0..cfg.n_basis).map(|k| cfg.coefficient_sd(k)).collect(),
            cfg: cfg.clone(),
            rng,
            state,
            ma_window,
            step: 0,
        })
    }

    fn advance(&mut self) -> Vec<f64> {
        let n_coef = self.cfg.d * self.cfg.n_basis;
        let mut coef = vec![0.0; n_coef];
        match self.cfg.kind {
            GeneratorKind::IidGaussBasis => {
                for c in coef.iter_mut() {
                    *c = self.rng.sample(StandardNormal);
                }
            }
            GeneratorKind::Far1 => {
                let rho = self.cfg.q_or_rho;
                let innov = (1.0 - rho * rho).sqrt();
                for (c, s) in coef.iter_mut().zip(self.state.iter_mut()) {
                    if self.step > 0 {
                        let z: f64 = self.rng.sample(StandardNormal);
                        *s = rho * *s + innov * z;
                    }
                    *c = *s;
                }
            }
            GeneratorKind::FmaQ => {
                let w = self.ma_window;
                let slot = self.step % w;
                let norm = 1.0 / (w as f64).sqrt();
                for (i, c) in coef.iter_mut().enumerate() {
                    let window = &mut self.state[i * w..(i + 1) * w];
                    if self.step > 0 {
                        window[slot] = self.rng.sample(StandardNormal);
                    }
                    *c = norm * window.iter().sum::<f64>();
                }
            }
        }
        self.step += 1;
        coef
    }

    /// Draws the next latent function.
    pub fn next_function(&mut self) -> GridFunction {
        let coef = self.advance();
        let (n, d, nb) = (self.cfg.n_nodes, self.cfg.d, self.cfg.n_basis);
        let mut values = vec![0.0; n * d];
        for g in 0..n {
            let row = &self.basis[g * nb..(g + 1) * nb];
            for c in 0..d {
                let a = &coef[c * nb..(c + 1) * nb];
                values[g * d + c] = row.iter().zip(a).zip(&self.sds).map(|((b, z), sd)| b * z * sd).sum();
            }
        }
        GridFunction::new(self.cfg.interval, n, d, values).expect("generator produces finite values")
    }
}

/// Generates `n` latent functions; deterministic in `cfg.seed`.
pub fn generate_series(cfg: &GeneratorConfig, n: usize) -> Result<Vec<GridFunction>> {
    if n == 0 {
        return Err(Error::config("series length must be at least 1"));
    }
    let mut gen = Generator::new(cfg)?;
    Ok((0..n).map(|_| gen.next_function()).collect())
}

/// First-basis coefficient path, used by diagnostics.
pub fn coefficient_path(cfg: &GeneratorConfig, n: usize) -> Result<Vec<f64>> {
    let mut gen = Generator::new(cfg)?;
    Ok((0..n).map(|_| gen.advance()[0] * gen.sds[0]).collect())
}
