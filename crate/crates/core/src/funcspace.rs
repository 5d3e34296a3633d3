//! Grid representation of continuous functions `I -> R^d`.
//!
//! A [`GridFunction`] stores values on `n_nodes` evenly spaced nodes of an
//! [`Interval`] and is linearly interpolated in between. The sup-norm is
//! taken over nodes, which is exact for piecewise-linear functions. An
//! interval flagged as a truncation of the real line extends the function
//! by zero outside `[lower, upper]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative distance (in units of the mesh) below which a point is treated
/// as lying on a node.
const NODE_SNAP: f64 = 1e-9;

/// A compact interval, optionally standing in for the whole real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    #[serde(default, rename = "line_truncation")]
    pub truncation_of_line: bool,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        Self::build(lower, upper, false)
    }

    /// `[-half_width, half_width]` used as a truncation of the real line.
    pub fn line_truncation(half_width: f64) -> Result<Self> {
        Self::build(-half_width, half_width, true)
    }

    fn build(lower: f64, upper: f64, truncation_of_line: bool) -> Result<Self> {
        let iv = Self {
            lower,
            upper,
            truncation_of_line,
        };
        iv.validate()?;
        Ok(iv)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return Err(Error::config("interval endpoints must be finite"));
        }
        if self.lower >= self.upper {
            return Err(Error::config(format!(
                "interval lower {} must be below upper {}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, u: f64) -> bool {
        let slack = NODE_SNAP * self.width();
        u >= self.lower - slack && u <= self.upper + slack
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.contains(other.lower) && self.contains(other.upper)
    }

    /// Node `j` of an `n`-node uniform grid.
    pub fn node(&self, j: usize, n: usize) -> f64 {
        if j + 1 == n {
            self.upper
        } else {
            self.lower + j as f64 * self.width() / (n - 1) as f64
        }
    }

    pub fn nodes(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.node(j, n)).collect()
    }
}

/// Thresholds for the regularity diagnostics of generated functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    /// Hölder exponent, in `(1/2, 1]`.
    pub xi: f64,
    /// Exponent of the tail decay `exp(-y^kappa)`.
    pub kappa: f64,
}

impl DiagnosticsConfig {
    pub fn new(xi: f64, kappa: f64) -> Result<Self> {
        if !(xi > 0.5 && xi <= 1.0) {
            return Err(Error::config(format!("xi = {xi} not in (1/2, 1]")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::config(format!("kappa = {kappa} must be positive")));
        }
        Ok(Self { xi, kappa })
    }
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { xi: 0.75, kappa: 2.0 }
    }
}

/// A function on a uniform grid, values stored node-major then component.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    interval: Interval,
    n_nodes: usize,
    d: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(interval: Interval, n_nodes: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        interval.validate()?;
        if n_nodes < 2 {
            return Err(Error::config("a grid needs at least two nodes"));
        }
        if d == 0 {
            return Err(Error::config("dimension d must be at least 1"));
        }
        if values.len() != n_nodes * d {
            return Err(Error::config(format!(
                "expected {} values for {} nodes x {} components, got {}",
                n_nodes * d,
                n_nodes,
                d,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("grid function values must be finite"));
        }
        Ok(Self {
            interval,
            n_nodes,
            d,
            values,
        })
    }

    pub fn zeros(interval: Interval, n_nodes: usize, d: usize) -> Result<Self> {
        Self::new(interval, n_nodes, d, vec![0.0; n_nodes * d])
    }

    pub fn constant(interval: Interval, n_nodes: usize, value: &[f64]) -> Result<Self> {
        let values = (0..n_nodes).flat_map(|_| value.iter().copied()).collect();
        Self::new(interval, n_nodes, value.len(), values)
    }

    /// Samples a scalar function at the grid nodes.
    pub fn from_fn(interval: Interval, n_nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        interval.validate()?;
        if n_nodes < 2 {
            return Err(Error::config("a grid needs at least two nodes"));
        }
        let values = interval.nodes(n_nodes).into_iter().map(f).collect();
        Self::new(interval, n_nodes, 1, values)
    }

    /// A function sharing this grid, with the given values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.interval, self.n_nodes, self.d, values)
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, j: usize) -> f64 {
        self.interval.node(j, self.n_nodes)
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.interval.nodes(self.n_nodes)
    }

    pub fn mesh(&self) -> f64 {
        self.interval.width() / (self.n_nodes - 1) as f64
    }

    /// Values of all components at node `j`.
    pub fn at_node(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.interval == other.interval && self.n_nodes == other.n_nodes && self.d == other.d
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}] x {} nodes (d={}) vs [{}, {}] x {} nodes (d={})",
                self.interval.lower,
                self.interval.upper,
                self.n_nodes,
                self.d,
                other.interval.lower,
                other.interval.upper,
                other.n_nodes,
                other.d
            )))
        }
    }

    /// Evaluates all components at `u`, writing into `out`.
    pub fn eval_into(&self, u: f64, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.d);
        if !self.interval.contains(u) {
            if self.interval.truncation_of_line {
                out.fill(0.0);
                return Ok(());
            }
            return Err(Error::domain(format!(
                "u = {u} outside [{}, {}]",
                self.interval.lower, self.interval.upper
            )));
        }
        let (j, t) = locate(self.interval.lower, self.mesh(), self.n_nodes, u);
        let left = self.at_node(j);
        if t == 0.0 {
            out.copy_from_slice(left);
        } else {
            let right = self.at_node(j + 1);
            for ((o, a), b) in out.iter_mut().zip(left).zip(right) {
                *o = a + t * (b - a);
            }
        }
        Ok(())
    }

    pub fn eval(&self, u: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.d];
        self.eval_into(u, &mut out)?;
        Ok(out)
    }

    /// Resamples onto `n_nodes` uniform nodes of `target`.
    pub fn resample(&self, target: Interval, n_nodes: usize) -> Result<GridFunction> {
        if n_nodes < 2 {
            return Err(Error::config("a grid needs at least two nodes"));
        }
        let mut values = vec![0.0; n_nodes * self.d];
        for (j, chunk) in values.chunks_mut(self.d).enumerate() {
            self.eval_into(target.node(j, n_nodes), chunk)?;
        }
        GridFunction::new(target, n_nodes, self.d, values)
    }

    /// Returns both functions on a common grid, the finer of the two.
    pub fn align(&self, other: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        if self.interval != other.interval || self.d != other.d {
            return Err(Error::GridMismatch(
                "alignment requires a shared interval and dimension".into(),
            ));
        }
        let n = self.n_nodes.max(other.n_nodes);
        Ok((self.resample(self.interval, n)?, other.resample(self.interval, n)?))
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add_assign(&mut self, other: &GridFunction) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        GridFunction::new(self.interval, self.n_nodes, self.d, values)
    }

    /// Trapezoid integral of each component.
    pub fn integral(&self) -> Vec<f64> {
        let h = self.mesh();
        let mut acc = vec![0.0; self.d];
        for j in 0..self.n_nodes {
            let w = if j == 0 || j + 1 == self.n_nodes { 0.5 } else { 1.0 };
            for (a, v) in acc.iter_mut().zip(self.at_node(j)) {
                *a += w * h * v;
            }
        }
        acc
    }
}

/// Cell index and fractional offset of `u` on a uniform grid; snaps to nodes.
pub(crate) fn locate(lower: f64, mesh: f64, n_nodes: usize, u: f64) -> (usize, f64) {
    let pos = ((u - lower) / mesh).clamp(0.0, (n_nodes - 1) as f64);
    let nearest = pos.round();
    if (pos - nearest).abs() <= NODE_SNAP {
        let j = nearest as usize;
        return (j, 0.0);
    }
    let j = (pos.floor() as usize).min(n_nodes - 2);
    (j, pos - j as f64)
}

/// Maximum absolute value over nodes and components.
pub fn sup_norm(f: &GridFunction) -> f64 {
    f.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Sup-norm of `f - g` after bringing both onto the finer grid.
pub fn sup_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if f.same_grid(g) {
        return Ok(f
            .values
            .iter()
            .zip(&g.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())));
    }
    let (a, b) = f.align(g)?;
    sup_distance(&a, &b)
}

/// Restriction of `f` to `sub`, sampled at the same node density.
pub fn restrict(f: &GridFunction, sub: &Interval) -> Result<GridFunction> {
    sub.validate()?;
    if !f.interval.contains_interval(sub) {
        return Err(Error::domain(format!(
            "[{}, {}] is not contained in [{}, {}]",
            sub.lower, sub.upper, f.interval.lower, f.interval.upper
        )));
    }
    if sub.lower == f.interval.lower && sub.upper == f.interval.upper {
        return Ok(GridFunction {
            interval: *sub,
            ..f.clone()
        });
    }
    let n = ((sub.width() / f.mesh()).round() as usize + 1).max(2);
    f.resample(*sub, n)
}

/// `max_{u != v} |f(u) - f(v)| / |u - v|^xi` over node pairs.
pub fn holder_quotient(f: &GridFunction, xi: f64) -> f64 {
    let nodes = f.nodes();
    let mut best = 0.0_f64;
    for i in 0..f.n_nodes {
        let a = f.at_node(i);
        for j in i + 1..f.n_nodes {
            let b = f.at_node(j);
            let diff = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            if diff > 0.0 {
                best = best.max(diff / (nodes[j] - nodes[i]).powf(xi));
            }
        }
    }
    best
}

/// `sup_{|u| > y} |f(u)|` over nodes; only defined on line truncations.
pub fn tail_sup(f: &GridFunction, y: f64) -> Result<f64> {
    if !f.interval.truncation_of_line {
        return Err(Error::domain(
            "tail_sup requires an interval that truncates the real line",
        ));
    }
    if !(y >= 0.0) {
        return Err(Error::domain(format!("tail level y = {y} must be >= 0")));
    }
    let mut best = 0.0_f64;
    for j in 0..f.n_nodes {
        if f.node(j).abs() > y {
            best = f.at_node(j).iter().fold(best, |m, v| m.max(v.abs()));
        }
    }
    Ok(best)
}

#[derive(Serialize, Deserialize)]
struct GridFunctionRepr {
    lower: f64,
    upper: f64,
    #[serde(default)]
    line_truncation: bool,
    d: usize,
    values: Vec<Vec<f64>>,
}

impl Serialize for GridFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridFunctionRepr {
            lower: self.interval.lower,
            upper: self.interval.upper,
            line_truncation: self.interval.truncation_of_line,
            d: self.d,
            values: self.values.chunks(self.d).map(<[f64]>::to_vec).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = GridFunctionRepr::deserialize(de)?;
        if repr.values.iter().any(|row| row.len() != repr.d) {
            return Err(D::Error::custom("every node row must have d entries"));
        }
        let n = repr.values.len();
        let interval = Interval {
            lower: repr.lower,
            upper: repr.upper,
            truncation_of_line: repr.line_truncation,
        };
        GridFunction::new(interval, n, repr.d, repr.values.concat()).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn interval_rejects_empty_or_infinite() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let z = GridFunction::zeros(unit(), 11, 3).unwrap();
        assert_eq!(sup_norm(&z), 0.0);
        let c = GridFunction::constant(unit(), 5, &[3.0, -5.0]).unwrap();
        assert_eq!(sup_norm(&c), 5.0);
        let lin = GridFunction::from_fn(Interval::new(-2.0, 1.0).unwrap(), 101, |u| u).unwrap();
        assert_eq!(sup_norm(&lin), 2.0);
    }

    #[test]
    fn eval_interpolates_and_extends_by_zero() {
        let f = GridFunction::from_fn(unit(), 3, |u| 2.0 * u).unwrap();
        assert_eq!(f.eval(0.25).unwrap(), vec![0.5]);
        assert!(f.eval(1.5).is_err());
        let g = GridFunction::from_fn(Interval::line_truncation(1.0).unwrap(), 3, |_| 1.0).unwrap();
        assert_eq!(g.eval(4.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn restrict_identity_is_node_identical() {
        let f = GridFunction::from_fn(unit(), 21, |u| (3.0 * u).sin()).unwrap();
        assert_eq!(restrict(&f, &unit()).unwrap(), f);
    }

    #[test]
    fn restrict_constant() {
        let f = GridFunction::constant(unit(), 11, &[2.0]).unwrap();
        let r = restrict(&f, &Interval::new(0.2, 0.7).unwrap()).unwrap();
        assert!(r.values().iter().all(|&v| v == 2.0));
        assert_eq!(r.n_nodes(), 6);
    }

    #[test]
    fn restrict_reproduces_affine_functions() {
        let f = GridFunction::from_fn(unit(), 101, |u| u).unwrap();
        let sub = Interval::new(0.25, 0.75).unwrap();
        let r = restrict(&f, &sub).unwrap();
        // dense analytic comparison, including off-node points
        let mut worst = 0.0_f64;
        for i in 0..=1000 {
            let u = 0.25 + 0.5 * i as f64 / 1000.0;
            worst = worst.max((r.eval(u).unwrap()[0] - u).abs());
        }
        assert!(worst < 1e-14, "{worst}");
        assert_eq!(r.at_node(0)[0], 0.25);
        assert_eq!(r.at_node(r.n_nodes() - 1)[0], 0.75);
    }

    #[test]
    fn restrict_outside_errors() {
        let f = GridFunction::zeros(unit(), 11, 1).unwrap();
        assert!(restrict(&f, &Interval::new(0.5, 1.5).unwrap()).is_err());
    }

    #[test]
    fn holder_examples() {
        let c = GridFunction::constant(unit(), 11, &[4.0]).unwrap();
        assert_eq!(holder_quotient(&c, 0.8), 0.0);
        let id = GridFunction::from_fn(unit(), 11, |u| u).unwrap();
        assert!((holder_quotient(&id, 1.0) - 1.0).abs() < 1e-12);
        // exhaustive oracle: |u - v|^(1 - xi) over all node pairs
        let nodes = id.nodes();
        let mut oracle = 0.0_f64;
        for a in &nodes {
            for b in &nodes {
                if a != b {
                    oracle = oracle.max((a - b).abs().powf(0.4));
                }
            }
        }
        assert!((oracle - 1.0).abs() < 1e-12);
        assert!((holder_quotient(&id, 0.6) - oracle).abs() < 1e-12);
    }

    #[test]
    fn tail_sup_examples() {
        let line = Interval::line_truncation(10.0).unwrap();
        let bump = GridFunction::from_fn(line, 2001, |u| (-u * u).exp()).unwrap();
        assert_eq!(tail_sup(&bump, 10.0).unwrap(), 0.0);
        let t = tail_sup(&bump, 3.0).unwrap();
        // dense evaluation of exp(-u^2) just beyond |u| = 3 on the grid
        let first_node_beyond = 3.0 + bump.mesh();
        assert!((t - (-first_node_beyond * first_node_beyond).exp()).abs() < 1e-15);
        assert!(t <= (-9.0_f64).exp());
        let z = GridFunction::zeros(line, 11, 1).unwrap();
        assert_eq!(tail_sup(&z, 0.0).unwrap(), 0.0);
        let compact = GridFunction::zeros(unit(), 11, 1).unwrap();
        assert!(tail_sup(&compact, 0.0).is_err());
    }

    #[test]
    fn json_layout() {
        let f = GridFunction::constant(unit(), 2, &[1.0, 2.0]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"lower":0.0,"upper":1.0,"line_truncation":false,"d":2,"values":[[1.0,2.0],[1.0,2.0]]}"#
        );
        let back: GridFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<GridFunction>(r#"{"lower":0,"upper":1,"d":2,"values":[[1.0],[2.0]]}"#).is_err());
    }

    #[test]
    fn align_resamples_onto_finer_grid() {
        let a = GridFunction::from_fn(unit(), 3, |u| u).unwrap();
        let b = GridFunction::from_fn(unit(), 5, |u| u).unwrap();
        assert!(a.add(&b).is_err());
        assert!(sup_distance(&a, &b).unwrap() < 1e-15);
        let (ra, rb) = a.align(&b).unwrap();
        assert_eq!(ra.n_nodes(), 5);
        assert_eq!(rb, b);
    }

    fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0..100.0f64, n)
    }

    proptest! {
        #[test]
        fn sup_norm_is_a_norm(a in values(17), b in values(17), s in -5.0..5.0f64) {
            let f = GridFunction::new(unit(), 17, 1, a).unwrap();
            let g = GridFunction::new(unit(), 17, 1, b).unwrap();
            prop_assert!((sup_norm(&f.scale(s)) - s.abs() * sup_norm(&f)).abs() <= 1e-12 * (1.0 + sup_norm(&f)));
            prop_assert!(sup_norm(&f.add(&g).unwrap()) <= sup_norm(&f) + sup_norm(&g) + 1e-12);
        }

        #[test]
        fn nested_restriction_commutes(a in values(41), lo in 0usize..10, hi in 30usize..41) {
            let f = GridFunction::new(unit(), 41, 1, a).unwrap();
            let outer = Interval::new(lo as f64 / 40.0, hi as f64 / 40.0).unwrap();
            let inner = Interval::new((lo + 5) as f64 / 40.0, (hi - 5) as f64 / 40.0).unwrap();
            let twice = restrict(&restrict(&f, &outer).unwrap(), &inner).unwrap();
            let once = restrict(&f, &inner).unwrap();
            prop_assert_eq!(twice.n_nodes(), once.n_nodes());
            for (x, y) in twice.values().iter().zip(once.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn holder_bounds_adjacent_increments(a in values(21), xi in 0.51..1.0f64) {
            let f = GridFunction::new(unit(), 21, 1, a).unwrap();
            let h = holder_quotient(&f, xi);
            let max_inc = f.values().windows(2).fold(0.0_f64, |m, w| m.max((w[1] - w[0]).abs()));
            prop_assert!(h * f.mesh().powf(xi) >= max_inc * (1.0 - 1e-12));
        }

        #[test]
        fn tail_sup_non_increasing(a in values(31), y1 in 0.0..3.0f64, dy in 0.0..3.0f64) {
            let f = GridFunction::new(Interval::line_truncation(3.0).unwrap(), 31, 1, a).unwrap();
            prop_assert!(tail_sup(&f, y1 + dy).unwrap() <= tail_sup(&f, y1).unwrap());
        }
    }
}
