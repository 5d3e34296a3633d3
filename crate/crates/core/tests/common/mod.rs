#![allow(dead_code)]

use fts_sentinel::metrics::{EmpiricalMeasure, GroundNorm};
use fts_sentinel::seed::Rng;
use rand::Rng as _;

pub fn random_measure(rng: &mut Rng, max_atoms: usize, dim: usize, spread: f64) -> EmpiricalMeasure {
    let n = rng.gen_range(1..=max_atoms);
    let atoms = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..spread)).collect())
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    EmpiricalMeasure::new(atoms, raw.iter().map(|w| w / total).collect()).unwrap()
}

/// `max_A P(A) - Q(A^eps)` over subsets of the support of `P`, with the
/// closed neighbourhood.
fn worst_gap(p: &EmpiricalMeasure, q: &EmpiricalMeasure, norm: GroundNorm, eps: f64) -> f64 {
    let mut worst = 0.0f64;
    for mask in 1u32..(1 << p.len()) {
        let set: Vec<usize> = (0..p.len()).filter(|i| mask >> i & 1 == 1).collect();
        let pa: f64 = set.iter().map(|&i| p.weights()[i]).sum();
        let qa: f64 = (0..q.len())
            .filter(|&j| set.iter().any(|&i| norm.distance(&p.atoms()[i], &q.atoms()[j]) <= eps))
            .map(|j| q.weights()[j])
            .sum();
        worst = worst.max(pa - qa);
    }
    worst
}

/// Prokhorov distance straight from the set definition: the smallest
/// `eps` in `[0, 1]` with `P(A) <= Q(A^eps) + eps` and the reverse for all
/// `A`. Feasibility only changes at pairwise distances or at gap values,
/// so checking those candidates is exhaustive.
pub fn prokhorov_by_sets(p: &EmpiricalMeasure, q: &EmpiricalMeasure, norm: GroundNorm) -> f64 {
    let mut radii = vec![0.0, 1.0];
    for a in p.atoms() {
        for b in q.atoms() {
            radii.push(norm.distance(a, b));
        }
    }
    let mut candidates = radii.clone();
    for &r in &radii {
        candidates.push(worst_gap(p, q, norm, r));
        candidates.push(worst_gap(q, p, norm, r));
    }
    candidates
        .into_iter()
        .filter(|c| (0.0..=1.0).contains(c))
        .filter(|&c| worst_gap(p, q, norm, c) <= c + 1e-13 && worst_gap(q, p, norm, c) <= c + 1e-13)
        .fold(1.0, f64::min)
}
