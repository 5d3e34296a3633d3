//! Partial-sum fields `P_N(lambda, u)`, their linear interpolation in
//! `lambda`, and the discretisation onto the product grid on
//! `[0, 1] x [-N^rho, N^rho]`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{locate, GridFunction, Interval};
use crate::synth::mean_estimate;

/// Centring applied when building a partial-sum field.
#[derive(Debug, Clone, Copy)]
pub enum Centering<'a> {
    /// One centre per observation (e.g. the generator's known means).
    Exact(&'a [GridFunction]),
    /// The sample mean of the series itself.
    Empirical,
    None,
}

/// Label recorded with a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteringMode {
    Exact,
    Empirical,
    Uncentered,
    /// A Gaussian sample path rather than a partial sum.
    Gaussian,
}

/// Values of a field on `lambda_grid x u_grid`, stored lambda-major, then
/// node, then component.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumField {
    n: usize,
    lambda: Vec<f64>,
    interval: Interval,
    n_nodes: usize,
    d: usize,
    values: Vec<f64>,
    centering: CenteringMode,
}

impl PartialSumField {
    pub(crate) fn from_parts(
        lambda: Vec<f64>,
        interval: Interval,
        n_nodes: usize,
        d: usize,
        values: Vec<f64>,
        centering: CenteringMode,
    ) -> Self {
        debug_assert_eq!(values.len(), lambda.len() * n_nodes * d);
        Self {
            n: lambda.len() - 1,
            lambda,
            interval,
            n_nodes,
            d,
            values,
            centering,
        }
    }

    /// Number of summands (rows minus one).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn u_grid(&self) -> Vec<f64> {
        self.interval.nodes(self.n_nodes)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn centering(&self) -> CenteringMode {
        self.centering
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row `k` (all nodes and components at `lambda_k`).
    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.n_nodes * self.d;
        &self.values[k * w..(k + 1) * w]
    }

    /// Row `k` as a function of `u`.
    pub fn row_function(&self, k: usize) -> GridFunction {
        GridFunction::new(self.interval, self.n_nodes, self.d, self.row(k).to_vec()).expect("rows are finite")
    }

    /// Maximum absolute value over all stored entries.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn u_weights(&self, u: f64) -> Option<(usize, f64)> {
        if !self.interval.contains(u) {
            return None;
        }
        let mesh = self.interval.width() / (self.n_nodes - 1) as f64;
        Some(locate(self.interval.lower, mesh, self.n_nodes, u))
    }

    fn lambda_weights(&self, lambda: f64) -> (usize, f64) {
        let last = self.lambda.len() - 1;
        if lambda >= self.lambda[last] {
            return (last, 0.0);
        }
        let j = self.lambda.partition_point(|&l| l <= lambda).saturating_sub(1);
        let t = (lambda - self.lambda[j]) / (self.lambda[j + 1] - self.lambda[j]);
        (j, t)
    }

    fn interpolate(&self, (k, s): (usize, f64), (g, t): (usize, f64), out: &mut [f64]) {
        let d = self.d;
        let at = |row: usize, node: usize, c: usize| self.values[(row * self.n_nodes + node) * d + c];
        for (c, o) in out.iter_mut().enumerate() {
            let in_row = |row: usize| {
                let a = at(row, g, c);
                if t == 0.0 {
                    a
                } else {
                    a + t * (at(row, g + 1, c) - a)
                }
            };
            let lo = in_row(k);
            *o = if s == 0.0 { lo } else { lo + s * (in_row(k + 1) - lo) };
        }
    }

    pub fn to_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,lambda,u_index,u,component,value")?;
        let nodes = self.u_grid();
        for (k, &lambda) in self.lambda.iter().enumerate() {
            for (g, &u) in nodes.iter().enumerate() {
                for c in 0..self.d {
                    let v = self.values[(k * self.n_nodes + g) * self.d + c];
                    writeln!(w, "{k},{lambda},{g},{u},{c},{v}")?;
                }
            }
        }
        Ok(())
    }
}

/// `values[k] = N^(-1/2) * sum_{i <= k} (X_i - centre_i)`.
pub fn build_partial_sum(series: &[GridFunction], centering: Centering<'_>) -> Result<PartialSumField> {
    let first = series.first().ok_or(Error::Empty("partial sum of an empty series"))?;
    for x in series {
        first.check_same_grid(x)?;
    }
    let n = series.len();
    let empirical;
    let (centres, mode): (Option<&[GridFunction]>, _) = match centering {
        Centering::Exact(c) => {
            if c.len() != n {
                return Err(Error::config(format!(
                    "{} centres supplied for {} observations",
                    c.len(),
                    n
                )));
            }
            for x in c {
                first.check_same_grid(x)?;
            }
            (Some(c), CenteringMode::Exact)
        }
        Centering::Empirical => {
            empirical = vec![mean_estimate(series)?; 1];
            (Some(&empirical[..]), CenteringMode::Empirical)
        }
        Centering::None => (None, CenteringMode::Uncentered),
    };
    let width = first.values().len();
    let scale = 1.0 / (n as f64).sqrt();
    let mut values = vec![0.0; (n + 1) * width];
    for (i, x) in series.iter().enumerate() {
        let centre = centres.map(|c| if c.len() == 1 { &c[0] } else { &c[i] });
        let (prev, next) = values[i * width..(i + 2) * width].split_at_mut(width);
        for (g, out) in next.iter_mut().enumerate() {
            let c = centre.map_or(0.0, |c| c.values()[g]);
            *out = prev[g] + (x.values()[g] - c) * scale;
        }
    }
    let lambda = (0..=n).map(|k| k as f64 / n as f64).collect();
    Ok(PartialSumField::from_parts(
        lambda,
        *first.interval(),
        first.n_nodes(),
        first.dim(),
        values,
        mode,
    ))
}

/// Linear interpolation in `lambda` between rows and in `u` between nodes.
pub fn eval_linear(field: &PartialSumField, lambda: f64, u: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) || lambda > *field.lambda.last().expect("rows") {
        return Err(Error::domain(format!("lambda = {lambda} outside [0, 1]")));
    }
    let uw = field
        .u_weights(u)
        .ok_or_else(|| Error::domain(format!("u = {u} outside the field's interval")))?;
    let mut out = vec![0.0; field.d];
    field.interpolate(field.lambda_weights(lambda), uw, &mut out);
    Ok(out)
}

/// A field on `[0, 1] x R` that can be evaluated pointwise.
pub trait SpaceTimeField {
    fn dim(&self) -> usize;
    fn value_into(&self, lambda: f64, u: f64, out: &mut [f64]);
}

impl SpaceTimeField for PartialSumField {
    fn dim(&self) -> usize {
        self.d
    }

    /// Linear interpolation, extended by zero outside the `u` interval.
    fn value_into(&self, lambda: f64, u: f64, out: &mut [f64]) {
        match self.u_weights(u) {
            Some(uw) => self.interpolate(self.lambda_weights(lambda.clamp(0.0, 1.0)), uw, out),
            None => out.fill(0.0),
        }
    }
}

/// Scalar field given by a closure.
pub struct FnField<F>(pub F);

impl<F: Fn(f64, f64) -> f64> SpaceTimeField for FnField<F> {
    fn dim(&self) -> usize {
        1
    }

    fn value_into(&self, lambda: f64, u: f64, out: &mut [f64]) {
        out[0] = (self.0)(lambda, u);
    }
}

/// Cell-centred product grid on `[0, 1] x [-N^rho, N^rho]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGrid {
    pub n: usize,
    pub rho: f64,
    pub sigma_mesh: f64,
    pub c_count: f64,
    pub half_width: f64,
    pub lambda_points: Vec<f64>,
    pub u_points: Vec<f64>,
}

impl DiscretizationGrid {
    pub fn total_points(&self) -> usize {
        self.lambda_points.len() * self.u_points.len()
    }

    /// Required mesh `N^(-sigma_mesh)`.
    pub fn mesh_bound(&self) -> f64 {
        (self.n as f64).powf(-self.sigma_mesh)
    }

    /// Gridpoint count bound `c_count * N^(rho + 2 sigma_mesh)`.
    pub fn count_bound(&self) -> f64 {
        self.c_count * (self.n as f64).powf(self.rho + 2.0 * self.sigma_mesh)
    }

    /// Index of the closest gridpoint in max-distance, ties going to the
    /// smaller `lambda` and then the smaller `u`.
    pub fn nearest(&self, lambda: f64, u: f64) -> (usize, usize) {
        let dl = min_dist(&self.lambda_points, lambda);
        let du = min_dist(&self.u_points, u);
        let reach = dl.max(du);
        let tie = 1e-12 * (1.0 + reach);
        let first_within = |pts: &[f64], x: f64| {
            pts.iter()
                .position(|p| (p - x).abs() <= reach + tie)
                .expect("the nearest point is within reach")
        };
        (
            first_within(&self.lambda_points, lambda),
            first_within(&self.u_points, u),
        )
    }
}

fn min_dist(pts: &[f64], x: f64) -> f64 {
    pts.iter().fold(f64::INFINITY, |m, p| m.min((p - x).abs()))
}

fn ceil_tol(x: f64) -> usize {
    (x - 1e-9 * x.max(1.0)).ceil().max(1.0) as usize
}

/// Builds the grid with `ceil(N^s)` lambda-points and `ceil(2 N^(rho+s))`
/// u-points, each placed at the centres of equal cells.
pub fn make_grid(n: usize, rho: f64, sigma_mesh: f64, c_count: f64) -> Result<DiscretizationGrid> {
    if n == 0 {
        return Err(Error::config("N must be at least 1"));
    }
    if !(rho > 0.0 && rho < sigma_mesh && sigma_mesh < 1.0) {
        return Err(Error::config(format!(
            "need 0 < rho < sigma_mesh < 1, got rho = {rho}, sigma_mesh = {sigma_mesh}"
        )));
    }
    let nf = n as f64;
    let half_width = nf.powf(rho);
    let n_lambda = ceil_tol(nf.powf(sigma_mesh));
    let n_u = ceil_tol(2.0 * nf.powf(rho + sigma_mesh));
    let lambda_points = (0..n_lambda).map(|i| (i as f64 + 0.5) / n_lambda as f64).collect();
    let u_points = (0..n_u)
        .map(|j| -half_width + (j as f64 + 0.5) * 2.0 * half_width / n_u as f64)
        .collect();
    let grid = DiscretizationGrid {
        n,
        rho,
        sigma_mesh,
        c_count,
        half_width,
        lambda_points,
        u_points,
    };
    if grid.total_points() as f64 > grid.count_bound() {
        return Err(Error::config(format!(
            "{} gridpoints exceed the bound {:.3} (increase c_count)",
            grid.total_points(),
            grid.count_bound()
        )));
    }
    Ok(grid)
}

/// A field sampled at the gridpoints; zero for `|u| > N^rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedField {
    pub grid: DiscretizationGrid,
    pub d: usize,
    values: Vec<f64>,
}

impl DiscretizedField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn query(&self, lambda: f64, u: f64) -> Vec<f64> {
        if u.abs() > self.grid.half_width {
            return vec![0.0; self.d];
        }
        let (i, j) = self.grid.nearest(lambda, u);
        let at = (i * self.grid.u_points.len() + j) * self.d;
        self.values[at..at + self.d].to_vec()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl SpaceTimeField for DiscretizedField {
    fn dim(&self) -> usize {
        self.d
    }

    fn value_into(&self, lambda: f64, u: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.query(lambda, u));
    }
}

pub fn discretize<F: SpaceTimeField + ?Sized>(field: &F, grid: &DiscretizationGrid) -> DiscretizedField {
    let d = field.dim();
    let mut values = vec![0.0; grid.total_points() * d];
    let mut chunks = values.chunks_mut(d);
    for &lambda in &grid.lambda_points {
        for &u in &grid.u_points {
            field.value_into(lambda, u, chunks.next().expect("sized"));
        }
    }
    DiscretizedField {
        grid: grid.clone(),
        d,
        values,
    }
}

/// Canonical vector: lambda-major, then `u`, then component.
pub fn vectorize(field: &DiscretizedField) -> Vec<f64> {
    field.values.clone()
}
