//! The Gaussian limit: long-run covariance kernels, the space-time
//! covariance of the Brownian motion on a product grid, path simulation and
//! Monte Carlo quantiles of `sup |W|`.
//!
//! Kernel matrices are indexed like [`GridFunction`] values: entry
//! `(g * d + k, h * d + l)` holds `c[k, l](u_g, u_h)`.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{locate, GridFunction, Interval};
use crate::linalg::{self, CovMatrix};
use crate::partialsum::{CenteringMode, PartialSumField};
use crate::seed;

/// Default lambda steps used when simulating `sup |W|`.
pub const DEFAULT_LAMBDA_RESOLUTION: usize = 512;

/// Relative eigenvalue cut-off of the factor used in quantile simulation.
pub const QUANTILE_RANK_TOL: f64 = 1e-12;

/// A discretised covariance kernel on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CovKernel {
    interval: Interval,
    n_nodes: usize,
    d: usize,
    matrix: DMatrix<f64>,
    lag_bandwidth: usize,
    psd_projected: bool,
}

impl CovKernel {
    pub fn new(
        interval: Interval,
        n_nodes: usize,
        d: usize,
        matrix: DMatrix<f64>,
        lag_bandwidth: usize,
        psd_projected: bool,
    ) -> Result<Self> {
        interval.validate()?;
        let p = n_nodes * d;
        if n_nodes < 2 || d == 0 || matrix.nrows() != p || matrix.ncols() != p {
            return Err(Error::config(format!(
                "kernel matrix must be {p} x {p} for {n_nodes} nodes and d = {d}"
            )));
        }
        let matrix = CovMatrix::new(matrix)?.into_matrix();
        Ok(Self {
            interval,
            n_nodes,
            d,
            matrix,
            lag_bandwidth,
            psd_projected,
        })
    }

    /// The zero kernel on a grid.
    pub fn zeros(interval: Interval, n_nodes: usize, d: usize) -> Result<Self> {
        Self::new(interval, n_nodes, d, DMatrix::zeros(n_nodes * d, n_nodes * d), 0, true)
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn u_grid(&self) -> Vec<f64> {
        self.interval.nodes(self.n_nodes)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn lag_bandwidth(&self) -> usize {
        self.lag_bandwidth
    }

    pub fn psd_projected(&self) -> bool {
        self.psd_projected
    }

    pub fn scaled(&self, s: f64) -> CovKernel {
        CovKernel {
            matrix: &self.matrix * s,
            ..self.clone()
        }
    }

    /// Kernel with negative eigenvalues clamped to zero.
    pub fn projected(&self) -> CovKernel {
        CovKernel {
            matrix: linalg::psd_project(&self.matrix),
            psd_projected: true,
            ..self.clone()
        }
    }

    /// The kernel seen through linear interpolation onto another grid.
    pub fn resample(&self, target: Interval, n_nodes: usize) -> Result<CovKernel> {
        let a = self.interpolation_matrix(&target.nodes(n_nodes))?;
        let mut m = &a * &self.matrix * a.transpose();
        linalg::symmetrize(&mut m);
        CovKernel::new(target, n_nodes, self.d, m, self.lag_bandwidth, self.psd_projected)
    }

    /// Interpolation weights of `u` on the kernel grid; `None` when `u`
    /// lies outside a line truncation (kernel is zero there).
    fn u_stencil(&self, u: f64) -> Result<Option<(usize, f64)>> {
        if !self.interval.contains(u) {
            if self.interval.truncation_of_line {
                return Ok(None);
            }
            return Err(Error::domain(format!(
                "u = {u} outside the kernel span [{}, {}]",
                self.interval.lower, self.interval.upper
            )));
        }
        let mesh = self.interval.width() / (self.n_nodes - 1) as f64;
        Ok(Some(locate(self.interval.lower, mesh, self.n_nodes, u)))
    }

    /// Bilinear interpolation of all `d x d` blocks at `(u, v)`.
    pub fn eval(&self, u: f64, v: f64) -> Result<DMatrix<f64>> {
        let pts = self.interpolation_matrix(&[u, v])?;
        let full = &pts * &self.matrix * pts.transpose();
        Ok(full.view((0, self.d), (self.d, self.d)).into_owned())
    }

    /// `A` with `A C A'` the kernel at the given points (`len * d` rows).
    fn interpolation_matrix(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.d;
        let mut a = DMatrix::zeros(points.len() * d, self.n_nodes * d);
        for (i, &u) in points.iter().enumerate() {
            if let Some((g, t)) = self.u_stencil(u)? {
                for c in 0..d {
                    a[(i * d + c, g * d + c)] = 1.0 - t;
                    if t > 0.0 {
                        a[(i * d + c, (g + 1) * d + c)] = t;
                    }
                }
            }
        }
        Ok(a)
    }
}

#[derive(Serialize, Deserialize)]
struct CovKernelRepr {
    lower: f64,
    upper: f64,
    #[serde(default)]
    line_truncation: bool,
    n_nodes: usize,
    d: usize,
    #[serde(default)]
    lag_bandwidth: usize,
    #[serde(default)]
    psd_projected: bool,
    matrix: Vec<Vec<f64>>,
}

impl Serialize for CovKernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CovKernelRepr {
            lower: self.interval.lower,
            upper: self.interval.upper,
            line_truncation: self.interval.truncation_of_line,
            n_nodes: self.n_nodes,
            d: self.d,
            lag_bandwidth: self.lag_bandwidth,
            psd_projected: self.psd_projected,
            matrix: linalg::rows(&self.matrix),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CovKernel {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CovKernelRepr::deserialize(de)?;
        let interval = Interval {
            lower: r.lower,
            upper: r.upper,
            truncation_of_line: r.line_truncation,
        };
        let m = linalg::from_rows(r.n_nodes * r.d, &r.matrix).map_err(D::Error::custom)?;
        CovKernel::new(interval, r.n_nodes, r.d, m, r.lag_bandwidth, r.psd_projected).map_err(D::Error::custom)
    }
}

/// Lag window truncation for [`estimate_lrv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagBandwidth {
    /// `floor(N^(1/3))`
    #[default]
    Auto,
    Fixed(usize),
}

impl LagBandwidth {
    pub fn resolve(self, n: usize) -> usize {
        let b = match self {
            LagBandwidth::Auto => {
                let mut b = (n as f64).cbrt().floor() as usize;
                // guard against cbrt roundoff just below an integer
                if (b + 1).pow(3) <= n {
                    b += 1;
                }
                b
            }
            LagBandwidth::Fixed(b) => b,
        };
        b.min(n.saturating_sub(1))
    }
}

/// Bartlett lag-window estimate of the long-run covariance kernel,
/// symmetrised and projected onto the PSD cone.
///
/// With `demean = false` the series is taken as already centred.
pub fn estimate_lrv(series: &[GridFunction], bandwidth: LagBandwidth, demean: bool) -> Result<CovKernel> {
    let n = series.len();
    if n < 2 {
        return Err(Error::config("long-run variance needs at least two observations"));
    }
    let first = &series[0];
    let p = first.values().len();
    for x in series {
        first.check_same_grid(x)?;
    }
    let mut data = DMatrix::from_fn(n, p, |t, j| series[t].values()[j]);
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("series has non-finite values"));
    }
    if demean {
        for j in 0..p {
            let m = data.column(j).mean();
            data.column_mut(j).add_scalar_mut(-m);
        }
    }
    let b = bandwidth.resolve(n);
    let inv_n = 1.0 / n as f64;
    let mut c = data.transpose() * &data * inv_n;
    for lag in 1..=b {
        let w = 1.0 - lag as f64 / (b as f64 + 1.0);
        let lead = data.rows(lag, n - lag);
        let lagged = data.rows(0, n - lag);
        let gamma = lead.transpose() * lagged * inv_n;
        c += (&gamma + gamma.transpose()) * w;
    }
    linalg::symmetrize(&mut c);
    let projected = linalg::psd_project(&c);
    CovKernel::new(*first.interval(), first.n_nodes(), first.dim(), projected, b, true)
}

/// Covariance of the Brownian motion on the product grid:
/// `min(lambda, lambda') * c(u, u')`, lambda-major then `u` then component.
pub fn spacetime_cov(c: &CovKernel, lambda_points: &[f64], u_points: &[f64]) -> Result<CovMatrix> {
    if let Some(l) = lambda_points.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::domain(format!("lambda = {l} outside [0, 1]")));
    }
    let a = c.interpolation_matrix(u_points)?;
    let cu = &a * c.matrix() * a.transpose();
    let block = cu.nrows();
    let dim = lambda_points.len() * block;
    let mut out = DMatrix::zeros(dim, dim);
    for (i, &li) in lambda_points.iter().enumerate() {
        for (j, &lj) in lambda_points.iter().enumerate() {
            let m = li.min(lj);
            if m == 0.0 {
                continue;
            }
            out.view_mut((i * block, j * block), (block, block))
                .copy_from(&(&cu * m));
        }
    }
    CovMatrix::new(out)
}

/// Draws Brownian paths `W(lambda, .)` with covariance `lambda * c`.
pub struct BrownianSampler {
    interval: Interval,
    n_nodes: usize,
    d: usize,
    factor: DMatrix<f64>,
}

impl BrownianSampler {
    /// Factor via the Cholesky jitter ladder, eigen fallback.
    pub fn new(c: &CovKernel) -> Result<Self> {
        let (factor, _) = linalg::factor_psd(c.matrix())?;
        Ok(Self::with_factor(c, factor))
    }

    /// Rank-revealing eigen factor; cheaper when the kernel has low rank.
    pub fn low_rank(c: &CovKernel, rel_tol: f64) -> Result<Self> {
        let factor = linalg::eigen_factor(c.matrix(), rel_tol)?;
        Ok(Self::with_factor(c, factor))
    }

    fn with_factor(c: &CovKernel, factor: DMatrix<f64>) -> Self {
        Self {
            interval: c.interval,
            n_nodes: c.n_nodes,
            d: c.d,
            factor,
        }
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    fn check_lambda(lambda_grid: &[f64]) -> Result<()> {
        if lambda_grid.first() != Some(&0.0) {
            return Err(Error::domain("lambda grid must start at 0"));
        }
        if lambda_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("lambda grid must be strictly increasing"));
        }
        Ok(())
    }

    pub fn sample(&self, lambda_grid: &[f64], seed: u64) -> Result<PartialSumField> {
        Self::check_lambda(lambda_grid)?;
        let p = self.n_nodes * self.d;
        let r = self.rank();
        let mut rng = seed::rng(seed);
        let mut values = vec![0.0; lambda_grid.len() * p];
        let mut z = vec![0.0; r];
        for (j, w) in lambda_grid.windows(2).enumerate() {
            let step = (w[1] - w[0]).sqrt();
            z.iter_mut()
                .for_each(|x| *x = rng.sample::<f64, _>(StandardNormal) * step);
            let (prev, next) = values[j * p..(j + 2) * p].split_at_mut(p);
            for (i, out) in next.iter_mut().enumerate() {
                let row = self.factor.row(i);
                *out = prev[i] + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(PartialSumField::from_parts(
            lambda_grid.to_vec(),
            self.interval,
            self.n_nodes,
            self.d,
            values,
            CenteringMode::Gaussian,
        ))
    }

    /// `max_{j, g} |W(j / resolution, u_g)|` for one path.
    pub fn sup_abs(&self, resolution: usize, seed: u64) -> f64 {
        let p = self.n_nodes * self.d;
        let r = self.rank();
        if r == 0 {
            return 0.0;
        }
        let mut rng = seed::rng(seed);
        let step = (1.0 / resolution as f64).sqrt();
        let mut coef = vec![0.0; r];
        let mut best = 0.0_f64;
        // factor is column-major: accumulate column by column
        let mut w = vec![0.0; p];
        for _ in 0..resolution {
            for x in coef.iter_mut() {
                *x = rng.sample::<f64, _>(StandardNormal) * step;
            }
            for (k, &a) in coef.iter().enumerate() {
                let col = self.factor.column(k);
                for (wi, ci) in w.iter_mut().zip(col.iter()) {
                    *wi += a * ci;
                }
            }
            best = w.iter().fold(best, |m, v| m.max(v.abs()));
        }
        best
    }
}

/// Simulates one path on `lambda_grid` with the Cholesky-ladder factor.
pub fn sample_brownian(c: &CovKernel, lambda_grid: &[f64], seed: u64) -> Result<PartialSumField> {
    BrownianSampler::new(c)?.sample(lambda_grid, seed)
}

/// Monte Carlo draws of `sup_{lambda, u} |W(lambda, u)|`, in replication
/// order.
pub fn sup_draws(c: &CovKernel, n_rep: usize, lambda_resolution: usize, seed: u64) -> Result<Vec<f64>> {
    if lambda_resolution == 0 {
        return Err(Error::config("lambda resolution must be at least 1"));
    }
    let sampler = BrownianSampler::low_rank(c, QUANTILE_RANK_TOL)?;
    Ok((0..n_rep as u64)
        .into_par_iter()
        .map(|r| sampler.sup_abs(lambda_resolution, seed::derive(seed, r)))
        .collect())
}

/// Empirical `(1 - alpha)`-quantile (inverse-CDF convention) of `draws`.
pub fn upper_quantile(draws: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha = {alpha} not in (0, 1)")));
    }
    if draws.is_empty() {
        return Err(Error::Empty("quantile of no draws"));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((1.0 - alpha) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[idx.clamp(1, sorted.len()) - 1])
}

/// The threshold `q_{1-alpha}`: the upper `alpha`-quantile of
/// `sup_{lambda in [0,1]} ||W(lambda)||`, deterministic in `seed`.
pub fn sup_quantile(c: &CovKernel, alpha: f64, n_rep: usize, lambda_resolution: usize, seed: u64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha = {alpha} not in (0, 1)")));
    }
    if n_rep < 100 {
        return Err(Error::config("sup_quantile needs at least 100 replications"));
    }
    upper_quantile(&sup_draws(c, n_rep, lambda_resolution, seed)?, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_series, GeneratorConfig, GeneratorKind};

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn two_node_kernel(var: f64) -> CovKernel {
        CovKernel::new(
            unit(),
            2,
            1,
            DMatrix::from_row_slice(2, 2, &[var, 0.0, 0.0, var]),
            0,
            true,
        )
        .unwrap()
    }

    #[test]
    fn zero_series_gives_zero_kernel() {
        let z = vec![GridFunction::zeros(unit(), 5, 2).unwrap(); 30];
        let k = estimate_lrv(&z, LagBandwidth::Auto, true).unwrap();
        assert_eq!(k.matrix().amax(), 0.0);
        assert_eq!(k.lag_bandwidth(), 3);
        assert!(k.psd_projected());
    }

    #[test]
    fn lrv_rejects_short_series() {
        let z = vec![GridFunction::zeros(unit(), 5, 1).unwrap()];
        assert!(estimate_lrv(&z, LagBandwidth::Auto, true).is_err());
    }

    #[test]
    fn auto_bandwidth() {
        assert_eq!(LagBandwidth::Auto.resolve(20_000), 27);
        assert_eq!(LagBandwidth::Auto.resolve(27), 3);
        assert_eq!(LagBandwidth::Auto.resolve(200), 5);
        assert_eq!(LagBandwidth::Fixed(10).resolve(4), 3);
    }

    #[test]
    fn iid_lrv_recovers_variance() {
        // nodes carry independent N(0, 4) values: one basis function per node
        let mut rng = seed::rng(5);
        let series: Vec<_> = (0..20_000)
            .map(|_| {
                let v: Vec<f64> = (0..3).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
                GridFunction::new(unit(), 3, 1, v).unwrap()
            })
            .collect();
        // sd of the lag-0 estimate is 4 sqrt(2/N) ~ 0.04; Bartlett with b lags
        // inflates it by sqrt(1 + 2b/3) (b = 27 here, sd ~ 0.17)
        let k0 = estimate_lrv(&series, LagBandwidth::Fixed(0), true).unwrap();
        let kb = estimate_lrv(&series, LagBandwidth::Auto, true).unwrap();
        for g in 0..3 {
            assert!((k0.matrix()[(g, g)] - 4.0).abs() < 0.2, "{}", k0.matrix()[(g, g)]);
            assert!((kb.matrix()[(g, g)] - 4.0).abs() < 0.85, "{}", kb.matrix()[(g, g)]);
        }
    }

    #[test]
    fn ar1_lrv_matches_analytic_value() {
        let cfg = GeneratorConfig {
            kind: GeneratorKind::Far1,
            q_or_rho: 0.5,
            ..GeneratorConfig::iid(unit(), 5, 1, 12)
        };
        let series = generate_series(&cfg, 50_000).unwrap();
        let k = estimate_lrv(&series, LagBandwidth::Auto, true).unwrap();
        let truth = cfg.long_run_kernel().unwrap();
        // innovation variance sigma^2 (1 - rho^2); long-run sigma^2 (1 - rho^2) / (1 - rho)^2
        let g = 1;
        let rel = (k.matrix()[(g, g)] - truth.matrix()[(g, g)]).abs() / truth.matrix()[(g, g)];
        assert!(rel < 0.05, "relative error {rel}");
    }

    #[test]
    fn lrv_is_symmetric_and_psd() {
        let cfg = GeneratorConfig {
            kind: GeneratorKind::FmaQ,
            q_or_rho: 3.0,
            d: 2,
            ..GeneratorConfig::iid(unit(), 9, 6, 4)
        };
        let s = generate_series(&cfg, 60).unwrap();
        let k = estimate_lrv(&s, LagBandwidth::Fixed(8), true).unwrap();
        assert_eq!(k.matrix(), &k.matrix().transpose());
        let m = CovMatrix::new(k.matrix().clone()).unwrap();
        assert!(m.min_eigenvalue() >= -1e-10 * m.trace());
    }

    #[test]
    fn spacetime_examples() {
        let k = CovKernel::new(
            unit(),
            2,
            1,
            DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]),
            0,
            true,
        )
        .unwrap();
        let s = spacetime_cov(&k, &[0.0, 0.25, 0.75, 1.0], &[0.3]).unwrap();
        let m = s.matrix();
        assert_eq!(m[(3, 3)], 2.0);
        assert!((0..4).all(|j| m[(0, j)] == 0.0 && m[(j, 0)] == 0.0));
        assert_eq!(m[(1, 2)], 0.5);
        assert!(spacetime_cov(&k, &[0.5], &[1.5]).is_err());
        // line truncations extend the kernel by zero
        let line = CovKernel::new(
            Interval::line_truncation(1.0).unwrap(),
            2,
            1,
            DMatrix::identity(2, 2),
            0,
            true,
        )
        .unwrap();
        let s = spacetime_cov(&line, &[1.0], &[2.0, 1.0]).unwrap();
        assert_eq!(s.matrix()[(0, 0)], 0.0);
        assert_eq!(s.matrix()[(1, 1)], 1.0);
    }

    #[test]
    fn bilinear_kernel_interpolation() {
        let k = CovKernel::new(
            unit(),
            2,
            1,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 3.0]),
            0,
            true,
        )
        .unwrap();
        let v = k.eval(0.5, 1.0).unwrap()[(0, 0)];
        assert!((v - 0.5 * (0.5 + 3.0)).abs() < 1e-15);
    }

    #[test]
    fn spacetime_cov_is_psd_for_psd_kernels() {
        let mut rng = seed::rng(8);
        for _ in 0..20 {
            let a = DMatrix::from_fn(6, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
            let k = CovKernel::new(unit(), 6, 1, &a * a.transpose(), 0, true).unwrap();
            let lambdas: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
            let us: Vec<f64> = (0..5).map(|_| rng.gen::<f64>()).collect();
            let s = spacetime_cov(&k, &lambdas, &us).unwrap();
            assert!(s.min_eigenvalue() >= -1e-10 * s.trace().max(1.0));
        }
    }

    #[test]
    fn zero_kernel_paths_and_quantiles_vanish() {
        let z = CovKernel::zeros(unit(), 4, 1).unwrap();
        let w = sample_brownian(&z, &[0.0, 0.5, 1.0], 1).unwrap();
        assert_eq!(w.sup_abs(), 0.0);
        assert_eq!(sup_quantile(&z, 0.05, 100, 64, 1).unwrap(), 0.0);
        assert_eq!(sup_quantile(&z, 0.5, 100, 64, 1).unwrap(), 0.0);
    }

    #[test]
    fn brownian_rejects_bad_lambda_grids() {
        let k = two_node_kernel(1.0);
        assert!(sample_brownian(&k, &[0.1, 0.5], 0).is_err());
        assert!(sample_brownian(&k, &[0.0, 0.5, 0.5], 0).is_err());
    }

    #[test]
    fn brownian_marginal_variance() {
        let cfg = GeneratorConfig::iid(unit(), 6, 3, 0);
        let k = cfg.long_run_kernel().unwrap();
        let sampler = BrownianSampler::new(&k).unwrap();
        let n = 20_000;
        let mut acc = vec![0.0; 6];
        for r in 0..n {
            let w = sampler.sample(&[0.0, 0.3, 1.0], seed::derive(2, r)).unwrap();
            for (a, v) in acc.iter_mut().zip(w.row(1)) {
                *a += v * v / n as f64;
            }
        }
        for g in 0..6 {
            let target = 0.3 * k.matrix()[(g, g)];
            // variance of a squared normal: 2 sigma^4
            let se = (2.0 * target * target / n as f64).sqrt();
            assert!((acc[g] - target).abs() <= 5.0 * se + 1e-15, "node {g}");
        }
    }

    #[test]
    fn quantile_rejects_bad_arguments() {
        let k = two_node_kernel(1.0);
        assert!(sup_quantile(&k, 0.0, 100, 16, 0).is_err());
        assert!(sup_quantile(&k, 1.0, 100, 16, 0).is_err());
        assert!(sup_quantile(&k, 0.1, 99, 16, 0).is_err());
    }

    #[test]
    fn quantile_monotone_in_alpha_and_scales_exactly() {
        let cfg = GeneratorConfig::iid(unit(), 11, 4, 0);
        let k = cfg.long_run_kernel().unwrap();
        let qs: Vec<f64> = [0.01, 0.05, 0.1, 0.2, 0.5]
            .iter()
            .map(|&a| sup_quantile(&k, a, 500, 64, 9).unwrap())
            .collect();
        assert!(qs.windows(2).all(|w| w[0] >= w[1]), "{qs:?}");
        let q1 = sup_quantile(&k, 0.1, 500, 64, 9).unwrap();
        let q4 = sup_quantile(&k.scaled(4.0), 0.1, 500, 64, 9).unwrap();
        assert_eq!(q4, 2.0 * q1);
    }

    /// `P(sup_{[0,1]} |B| < x)` by the alternating series over reflections.
    fn sup_abs_bm_cdf(x: f64) -> f64 {
        let pi = std::f64::consts::PI;
        4.0 / pi
            * (0..200)
                .map(|k| {
                    let m = (2 * k + 1) as f64;
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign / m * (-m * m * pi * pi / (8.0 * x * x)).exp()
                })
                .sum::<f64>()
    }

    fn sup_abs_bm_quantile(level: f64) -> f64 {
        let (mut lo, mut hi) = (0.5, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sup_abs_bm_cdf(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn scalar_quantile_matches_reflection_series() {
        let q_cont = sup_abs_bm_quantile(0.95);
        assert!((q_cont - 2.2414).abs() < 1e-3);
        let k = CovKernel::new(
            unit(),
            2,
            1,
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            0,
            true,
        )
        .unwrap();
        // the discrete-time maximum over 512 steps sits below the continuous
        // one by about beta / sqrt(512), beta = -zeta(1/2) / sqrt(2 pi)
        let beta = 0.5826;
        let q512 = sup_quantile(&k, 0.05, 100_000, 512, 2024).unwrap();
        assert!(q512 < q_cont);
        assert!((q512 + beta / 512f64.sqrt() - q_cont).abs() <= 0.02, "{q512}");
        // resolution sweep: finer lambda grids close the gap
        let q4096 = sup_quantile(&k, 0.05, 20_000, 4096, 2025).unwrap();
        assert!((q4096 - q_cont).abs() <= 0.03, "{q4096}");
    }

    #[test]
    fn kernel_json_roundtrip() {
        let k = GeneratorConfig::iid(unit(), 4, 2, 0).long_run_kernel().unwrap();
        let s = serde_json::to_string(&k).unwrap();
        let back: CovKernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back.n_nodes(), 4);
        assert!((back.matrix() - k.matrix()).amax() < 1e-15);
    }
}
