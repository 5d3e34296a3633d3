//! Distances between probability measures.
//!
//! * [`prokhorov_discrete`]: exact Prokhorov distance between finitely
//!   supported measures, through Strassen's coupling characterisation:
//!   `pi <= eps` iff some coupling moves at most `eps` mass over pairs
//!   further apart than `eps`. The minimal deficit for a radius is a
//!   bipartite max-flow.
//! * [`wasserstein_discrete`]: exact `W_q` by min-cost flow.
//! * [`wasserstein2_gaussian`]: the closed trace formula for centred
//!   Gaussians, built on [`psd_sqrt`].

mod flow;
mod gaussian;

pub use flow::FlowGraph;
pub use gaussian::{empirical_cov, psd_sqrt, trace_norm, wasserstein2_gaussian};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest support handled by the exact transport solver.
pub const MAX_TRANSPORT_ATOMS: usize = 512;

/// Tolerance on the total mass of an [`EmpiricalMeasure`].
pub const MASS_TOL: f64 = 1e-12;

/// Ground metric on `R^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundNorm {
    #[default]
    Max,
    Euclidean,
}

impl GroundNorm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            GroundNorm::Max => diffs.fold(0.0, f64::max),
            GroundNorm::Euclidean => diffs.map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Finitely many weighted atoms in `R^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let m = Self { atoms, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn dirac(x: Vec<f64>) -> Self {
        Self {
            atoms: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::Empty("measure without atoms"));
        }
        if self.atoms.len() != self.weights.len() {
            return Err(Error::config("one weight per atom is required"));
        }
        let q = self.atoms[0].len();
        if self.atoms.iter().any(|a| a.len() != q) {
            return Err(Error::config("atoms must share one dimension"));
        }
        if self.atoms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::numeric("atoms must be finite"));
        }
        if self.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::config("weights must be positive"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::config(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

fn check_pair(p1: &EmpiricalMeasure, p2: &EmpiricalMeasure) -> Result<()> {
    p1.validate()?;
    p2.validate()?;
    if p1.dim() != p2.dim() {
        return Err(Error::config(format!(
            "dimension mismatch: {} vs {}",
            p1.dim(),
            p2.dim()
        )));
    }
    Ok(())
}

fn distance_matrix(p1: &EmpiricalMeasure, p2: &EmpiricalMeasure, norm: GroundNorm) -> Vec<f64> {
    let mut out = Vec::with_capacity(p1.len() * p2.len());
    for a in &p1.atoms {
        for b in &p2.atoms {
            out.push(norm.distance(a, b));
        }
    }
    out
}

/// Smallest mass that cannot be matched within distance `radius`.
fn unmatched_mass(p1: &EmpiricalMeasure, p2: &EmpiricalMeasure, dist: &[f64], radius: f64) -> f64 {
    let (n, m) = (p1.len(), p2.len());
    let (src, sink) = (n + m, n + m + 1);
    let mut g = FlowGraph::new(n + m + 2);
    for (i, &w) in p1.weights.iter().enumerate() {
        g.add_edge(src, i, w);
    }
    for (j, &w) in p2.weights.iter().enumerate() {
        g.add_edge(n + j, sink, w);
    }
    for i in 0..n {
        for j in 0..m {
            if dist[i * m + j] <= radius {
                g.add_edge(i, n + j, p1.weights[i]);
            }
        }
    }
    // measured against the represented total so rounding in the weights
    // does not leave a phantom deficit
    let total = p1.weights.iter().sum::<f64>().min(p2.weights.iter().sum());
    (total - g.max_flow(src, sink)).max(0.0)
}

/// Exact Prokhorov distance between two finite measures.
///
/// The deficit `delta(eps)` is a step function that only changes at
/// pairwise distances `d_k`, so the infimum of `{eps : delta(eps) <= eps}`
/// is either the first `d_k` with `delta(d_k) <= d_k` or the deficit just
/// before it. The crossing index is found by bisection.
pub fn prokhorov_discrete(p1: &EmpiricalMeasure, p2: &EmpiricalMeasure, norm: GroundNorm) -> Result<f64> {
    check_pair(p1, p2)?;
    let dist = distance_matrix(p1, p2, norm);
    let mut radii: Vec<f64> = dist.iter().copied().filter(|&d| d < 1.0).collect();
    radii.push(0.0);
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let deficit = |k: usize| unmatched_mass(p1, p2, &dist, radii[k]);
    // first k with deficit(k) <= radii[k]; radius 1 is always feasible
    let (mut lo, mut hi) = (0usize, radii.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if deficit(mid) <= radii[mid] {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut best = radii.get(lo).copied().unwrap_or(1.0);
    if lo > 0 {
        best = best.min(deficit(lo - 1));
    }
    Ok(best.min(1.0))
}

/// Exact `W_q` between finite measures by min-cost flow on the complete
/// bipartite atom graph.
pub fn wasserstein_discrete(p1: &EmpiricalMeasure, p2: &EmpiricalMeasure, q: f64, norm: GroundNorm) -> Result<f64> {
    check_pair(p1, p2)?;
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::config(format!("W_q needs q >= 1, got {q}")));
    }
    if p1.len() > MAX_TRANSPORT_ATOMS || p2.len() > MAX_TRANSPORT_ATOMS {
        return Err(Error::config(format!(
            "exact transport is limited to {MAX_TRANSPORT_ATOMS} atoms per measure"
        )));
    }
    let dist = distance_matrix(p1, p2, norm);
    let (n, m) = (p1.len(), p2.len());
    let (src, sink) = (n + m, n + m + 1);
    let mut g = FlowGraph::new(n + m + 2);
    for (i, &w) in p1.weights.iter().enumerate() {
        g.add_edge_with_cost(src, i, w, 0.0);
    }
    for (j, &w) in p2.weights.iter().enumerate() {
        g.add_edge_with_cost(n + j, sink, w, 0.0);
    }
    for i in 0..n {
        for j in 0..m {
            g.add_edge_with_cost(i, n + j, p1.weights[i], dist[i * m + j].powf(q));
        }
    }
    let (flow, cost) = g.min_cost_flow(src, sink, 1.0);
    if (flow - 1.0).abs() > 1e-9 {
        return Err(Error::numeric(format!("transport moved {flow} instead of 1")));
    }
    Ok(cost.max(0.0).powf(1.0 / q))
}

/// `(pi, W_q)` for the same pair under the same ground metric; the
/// Prokhorov distance satisfies `pi^2 <= W_q`.
pub fn prokhorov_w2_bound_check(
    p1: &EmpiricalMeasure,
    p2: &EmpiricalMeasure,
    q: f64,
    norm: GroundNorm,
) -> Result<(f64, f64)> {
    Ok((
        prokhorov_discrete(p1, p2, norm)?,
        wasserstein_discrete(p1, p2, q, norm)?,
    ))
}
