//! Distances between measures: exact Prokhorov and Wasserstein for finite
//! measures, the Gaussian 2-Wasserstein formula, and the inequalities that
//! link them.

use fts_sentinel::linalg::CovMatrix;
use fts_sentinel::metrics::{
    empirical_cov, prokhorov_discrete, prokhorov_w2_bound_check, psd_sqrt, trace_norm, wasserstein2_gaussian,
    EmpiricalMeasure, GroundNorm,
};
use nalgebra::DMatrix;

fn main() -> fts_sentinel::Result<()> {
    let p = EmpiricalMeasure::new(
        vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![0.4, 0.9]],
        vec![0.5, 0.3, 0.2],
    )?;
    let q = EmpiricalMeasure::uniform(vec![vec![0.1, 0.0], vec![0.9, 0.3], vec![2.0, 2.0], vec![0.5, 0.8]])?;
    for norm in [GroundNorm::Max, GroundNorm::Euclidean] {
        let (pi, w2) = prokhorov_w2_bound_check(&p, &q, 2.0, norm)?;
        println!("{norm:?}: pi = {pi:.4}, W2 = {w2:.4}, pi^2 <= W2: {}", pi * pi <= w2);
    }
    let far = EmpiricalMeasure::dirac(vec![5.0, 5.0]);
    println!(
        "pi to a distant point mass: {}",
        prokhorov_discrete(&p, &far, GroundNorm::Max)?
    );

    let a = CovMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]))?;
    let b = CovMatrix::from_diagonal(&[1.0, 3.0])?;
    println!("\nW2(N(0, A), N(0, B)) = {:.6}", wasserstein2_gaussian(&a, &b)?);
    let gap = (psd_sqrt(&a)?.matrix() - psd_sqrt(&b)?.matrix()).norm_squared();
    println!(
        "||A^1/2 - B^1/2||_F^2 = {gap:.4} <= ||A - B||_Tr = {:.4}",
        trace_norm(&(a.matrix() - b.matrix()))
    );

    let samples: Vec<Vec<f64>> = (0..1000)
        .map(|i| {
            let t = i as f64 / 1000.0 * std::f64::consts::TAU;
            vec![t.cos(), 0.5 * t.sin()]
        })
        .collect();
    println!(
        "covariance of a sampled ellipse: {:?}",
        empirical_cov(&samples)?.matrix().as_slice()
    );
    Ok(())
}
