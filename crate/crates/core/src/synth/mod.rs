//! Latent functional time series, change-point alternatives and sparse
//! reconstructions.

mod generator;
mod reconstruct;

pub use generator::{coefficient_path, generate_series, Generator, GeneratorConfig, GeneratorKind};
pub use reconstruct::{
    check_density, reconstruct, reconstruct_grid, reconstruct_kde, reconstruct_nw, BandwidthRule, DesignDensity,
    ObservationRecord, ReconstructionConfig, Scheme, DENSITY_MASS_TOL, NW_DENOMINATOR_FLOOR,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::GridFunction;

/// Mean before and after a change at index `N + k_star`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeSpec {
    pub mu1: GridFunction,
    pub mu2: GridFunction,
    pub k_star: usize,
}

impl ChangeSpec {
    pub fn new(mu1: GridFunction, mu2: GridFunction, k_star: usize) -> Result<Self> {
        mu1.check_same_grid(&mu2)?;
        Ok(Self { mu1, mu2, k_star })
    }

    /// No change: both means equal `mu`.
    pub fn null(mu: GridFunction) -> Self {
        Self {
            mu2: mu.clone(),
            mu1: mu,
            k_star: 0,
        }
    }

    pub fn is_null(&self) -> bool {
        self.mu1 == self.mu2
    }

    /// Mean of observation `i` (1-based) when training has length `n_train`.
    pub fn mean_at(&self, i: usize, n_train: usize) -> &GridFunction {
        if i <= n_train + self.k_star {
            &self.mu1
        } else {
            &self.mu2
        }
    }
}

/// Adds `mu1` to observations `1..=N + k_star` and `mu2` to the rest.
pub fn apply_change(series: &[GridFunction], spec: &ChangeSpec, n_train: usize) -> Result<Vec<GridFunction>> {
    spec.mu1.check_same_grid(&spec.mu2)?;
    series
        .iter()
        .enumerate()
        .map(|(i, x)| x.add(spec.mean_at(i + 1, n_train)))
        .collect()
}

/// Pointwise average of a non-empty slice on a shared grid.
pub fn mean_estimate(series: &[GridFunction]) -> Result<GridFunction> {
    let first = series.first().ok_or(Error::Empty("mean of an empty slice"))?;
    let mut acc = vec![0.0; first.values().len()];
    for x in series {
        first.check_same_grid(x)?;
        for (a, v) in acc.iter_mut().zip(x.values()) {
            *a += v;
        }
    }
    let n = series.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    first.with_values(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{holder_quotient, sup_distance, sup_norm, Interval};
    use crate::seed;
    use std::f64::consts::PI;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn far1(rho: f64, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            kind: GeneratorKind::Far1,
            q_or_rho: rho,
            ..GeneratorConfig::iid(unit(), 21, 4, seed)
        }
    }

    #[test]
    fn zero_variance_generates_zeros() {
        let cfg = GeneratorConfig {
            scale: 0.0,
            ..GeneratorConfig::iid(unit(), 11, 5, 3)
        };
        let s = generate_series(&cfg, 7).unwrap();
        assert_eq!(s.len(), 7);
        assert!(s.iter().all(|f| sup_norm(f) == 0.0));
    }

    #[test]
    fn generation_is_deterministic() {
        for kind in [GeneratorKind::IidGaussBasis, GeneratorKind::FmaQ, GeneratorKind::Far1] {
            let cfg = GeneratorConfig {
                kind,
                q_or_rho: if kind == GeneratorKind::FmaQ { 2.0 } else { 0.3 },
                d: 2,
                ..GeneratorConfig::iid(unit(), 11, 5, 42)
            };
            assert_eq!(generate_series(&cfg, 20).unwrap(), generate_series(&cfg, 20).unwrap());
            assert_ne!(
                generate_series(&cfg, 5).unwrap(),
                generate_series(&cfg.with_seed(43), 5).unwrap()
            );
        }
    }

    #[test]
    fn invalid_generators_are_rejected() {
        assert!(generate_series(&far1(1.0, 0), 3).is_err());
        let bad_q = GeneratorConfig {
            kind: GeneratorKind::FmaQ,
            q_or_rho: 1.5,
            ..GeneratorConfig::iid(unit(), 11, 3, 0)
        };
        assert!(generate_series(&bad_q, 3).is_err());
        assert!(generate_series(&GeneratorConfig::iid(unit(), 11, 3, 0), 0).is_err());
    }

    fn lag_corr(x: &[f64], lag: usize) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>();
        let c = x.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum::<f64>();
        c / v
    }

    #[test]
    fn far1_lag_one_correlation() {
        let path = coefficient_path(&far1(0.5, 11), 10_000).unwrap();
        let r = lag_corr(&path, 1);
        assert!((r - 0.5).abs() < 0.03, "lag-1 correlation {r}");
    }

    #[test]
    fn fma_autocorrelation_cuts_off() {
        let cfg = GeneratorConfig {
            kind: GeneratorKind::FmaQ,
            q_or_rho: 2.0,
            ..GeneratorConfig::iid(unit(), 11, 3, 5)
        };
        let path = coefficient_path(&cfg, 20_000).unwrap();
        // equal-weight MA(2): rho(1) = 2/3, rho(2) = 1/3, rho(3) = 0
        assert!((lag_corr(&path, 1) - 2.0 / 3.0).abs() < 0.03);
        assert!((lag_corr(&path, 2) - 1.0 / 3.0).abs() < 0.03);
        assert!(lag_corr(&path, 3).abs() < 0.03);
    }

    #[test]
    fn generator_is_stationary_across_halves() {
        let cfg = far1(0.3, 99);
        let s = generate_series(&cfg, 20_000).unwrap();
        let p = 21;
        let cov = |part: &[GridFunction]| {
            let n = part.len() as f64;
            let mut c = vec![0.0; p * p];
            let mut c2 = vec![0.0; p * p];
            for f in part {
                let v = f.values();
                for a in 0..p {
                    for b in 0..p {
                        let x = v[a] * v[b];
                        c[a * p + b] += x / n;
                        c2[a * p + b] += x * x / n;
                    }
                }
            }
            (c, c2)
        };
        let (c1, s1) = cov(&s[..10_000]);
        let (c2, s2) = cov(&s[10_000..]);
        // naive second-moment SE inflated by the AR(1) factor (1 + rho^2) / (1 - rho^2)
        let infl = (1.0 + 0.09) / (1.0 - 0.09);
        for i in 0..p * p {
            let var1 = (s1[i] - c1[i] * c1[i]) / 10_000.0 * infl;
            let var2 = (s2[i] - c2[i] * c2[i]) / 10_000.0 * infl;
            let se = (var1 + var2).sqrt();
            assert!((c1[i] - c2[i]).abs() <= 5.0 * se + 1e-12, "entry {i}");
        }
    }

    #[test]
    fn long_run_kernel_matches_far1_formula() {
        let cfg = far1(0.5, 0);
        let k = cfg.long_run_kernel().unwrap();
        let u = 0.3;
        let expected: f64 = (0..4)
            .map(|j| 3.0 * cfg.coefficient_sd(j).powi(2) * cfg.basis(j, u).powi(2))
            .sum();
        let g = 6; // node 6 of 21 on [0, 1] is 0.3
        assert!((k.matrix()[(g, g)] - expected).abs() < 1e-12);
    }

    #[test]
    fn line_truncation_basis_vanishes_at_the_ends() {
        let cfg = GeneratorConfig::iid(Interval::line_truncation(3.0).unwrap(), 31, 6, 1);
        for f in generate_series(&cfg, 5).unwrap() {
            assert!(f.at_node(0)[0].abs() < 1e-12);
            assert!(f.at_node(30)[0].abs() < 1e-12);
        }
    }

    #[test]
    fn apply_change_examples() {
        let cfg = GeneratorConfig::iid(unit(), 11, 3, 8);
        let s = generate_series(&cfg, 6).unwrap();
        let zero = GridFunction::zeros(unit(), 11, 1).unwrap();
        assert_eq!(apply_change(&s, &ChangeSpec::null(zero.clone()), 3).unwrap(), s);

        let mu = GridFunction::from_fn(unit(), 11, |u| u * u).unwrap();
        let shifted = apply_change(&s, &ChangeSpec::null(mu.clone()), 3).unwrap();
        for (a, b) in shifted.iter().zip(&s) {
            assert!(sup_distance(&a.sub(b).unwrap(), &mu).unwrap() < 1e-15);
        }

        let quiet = vec![zero.clone(); 5];
        let delta = GridFunction::constant(unit(), 11, &[0.7]).unwrap();
        let spec = ChangeSpec::new(zero.clone(), delta.clone(), 0).unwrap();
        let out = apply_change(&quiet, &spec, 2).unwrap();
        assert_eq!(out[1], zero);
        assert_eq!(out[2], delta);
        assert_eq!(out[4], delta);

        let coarse = GridFunction::zeros(unit(), 5, 1).unwrap();
        assert!(ChangeSpec::new(zero, coarse, 0).is_err());
    }

    #[test]
    fn nw_reproduces_constants_and_single_points() {
        let c = GridFunction::constant(unit(), 21, &[2.5]).unwrap();
        let cfg = ReconstructionConfig::new(Scheme::Nw, 30);
        let (est, rec) = reconstruct_nw(&c, &cfg, DesignDensity::Uniform, 0.0, 4).unwrap();
        assert!(est.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(matches!(rec, ObservationRecord::Nw { ref design_points, .. } if design_points.len() == 30));

        let f = GridFunction::from_fn(unit(), 21, |u| (5.0 * u).sin()).unwrap();
        let one = ReconstructionConfig {
            bandwidth: BandwidthRule::Fixed { h: 0.01 },
            ..ReconstructionConfig::new(Scheme::Nw, 1)
        };
        let (est, rec) = reconstruct_nw(&f, &one, DesignDensity::Gaussian, 0.0, 9).unwrap();
        let ObservationRecord::Nw { design_points, .. } = rec else {
            panic!()
        };
        let at = f.eval(design_points[0]).unwrap()[0];
        assert!(est.values().iter().all(|v| (v - at).abs() < 1e-12));
    }

    #[test]
    fn nw_rejects_target_outside_latent() {
        let f = GridFunction::zeros(unit(), 11, 1).unwrap();
        let cfg = ReconstructionConfig {
            target: Some(Interval::new(0.5, 2.0).unwrap()),
            ..ReconstructionConfig::new(Scheme::Nw, 10)
        };
        assert!(reconstruct_nw(&f, &cfg, DesignDensity::Uniform, 0.1, 0).is_err());
    }

    #[test]
    fn nw_error_shrinks_with_more_points() {
        let f = GridFunction::from_fn(unit(), 51, |u| (2.0 * PI * u).sin()).unwrap();
        let mean_err = |m: usize| {
            let cfg = ReconstructionConfig {
                bandwidth: BandwidthRule::Fixed { h: 0.05 },
                noise_sigma: 0.1,
                ..ReconstructionConfig::new(Scheme::Nw, m)
            };
            (0..200)
                .map(|r| {
                    let (est, _) = reconstruct(&f, &cfg, seed::derive(17, r)).unwrap();
                    sup_distance(&est, &f).unwrap()
                })
                .sum::<f64>()
                / 200.0
        };
        let big = mean_err(2000);
        let small = mean_err(100);
        assert!(big < small, "{big} vs {small}");
    }

    #[test]
    fn grid_reconstruction_is_exact_for_affine_and_aligned() {
        let affine = GridFunction::from_fn(unit(), 37, |u| 3.0 * u - 1.0).unwrap();
        for m in [1, 2, 5, 13, 36] {
            let (est, _) = reconstruct_grid(&affine, m).unwrap();
            assert!(sup_distance(&est, &affine).unwrap() < 1e-14);
        }
        let wiggly = GridFunction::from_fn(unit(), 21, |u| (9.0 * u).cos()).unwrap();
        let (est, rec) = reconstruct_grid(&wiggly, 40).unwrap();
        assert_eq!(est, wiggly);
        let ObservationRecord::Grid { node_values, m } = rec else {
            panic!()
        };
        assert_eq!((node_values.len(), m), (41, 40));
    }

    #[test]
    fn grid_reconstruction_interpolation_bound() {
        let f = GridFunction::from_fn(unit(), 2001, |u| (2.0 * PI * u).sin()).unwrap();
        let (est, _) = reconstruct_grid(&f, 10).unwrap();
        let bound = (2.0 * PI).powi(2) / (8.0 * 100.0);
        let mut worst = 0.0_f64;
        for i in 0..=20_000 {
            let u = i as f64 / 20_000.0;
            worst = worst.max((est.eval(u).unwrap()[0] - (2.0 * PI * u).sin()).abs());
        }
        assert!(worst <= bound, "{worst} > {bound}");
    }

    #[test]
    fn grid_reconstruction_respects_holder_bound() {
        let cfg = GeneratorConfig {
            basis_decay: 2.5,
            ..GeneratorConfig::iid(unit(), 201, 12, 21)
        };
        let xi = 0.75;
        for latent in generate_series(&cfg, 30).unwrap() {
            let h = holder_quotient(&latent, xi);
            for m in [4, 10, 25, 50, 100] {
                let (est, _) = reconstruct_grid(&latent, m).unwrap();
                let err = sup_distance(&est, &latent).unwrap();
                assert!(err <= h * (m as f64).powf(-xi) + 1e-12);
            }
        }
    }

    #[test]
    fn grid_reconstruction_error_decreases_in_m() {
        let cfg = GeneratorConfig::iid(unit(), 401, 20, 2);
        let series = generate_series(&cfg, 100).unwrap();
        let mean_err = |m: usize| {
            series
                .iter()
                .map(|f| sup_distance(&reconstruct_grid(f, m).unwrap().0, f).unwrap())
                .sum::<f64>()
                / 100.0
        };
        let errs: Vec<f64> = [5, 25, 100, 400].iter().map(|&m| mean_err(m)).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn grid_estimators_become_approximately_stationary() {
        let cfg = GeneratorConfig {
            basis_decay: 1.0,
            ..GeneratorConfig::iid(unit(), 801, 30, 6)
        };
        let latent = generate_series(&cfg, 400).unwrap();
        let cov = |fs: &[GridFunction]| {
            let p = fs[0].n_nodes();
            let mut c = vec![0.0; p * p];
            for f in fs {
                let v = f.values();
                for a in 0..p {
                    for b in 0..p {
                        c[a * p + b] += v[a] * v[b];
                    }
                }
            }
            c
        };
        let base = cov(&latent);
        let deviation = |m: usize| {
            let est: Vec<_> = latent.iter().map(|f| reconstruct_grid(f, m).unwrap().0).collect();
            cov(&est)
                .iter()
                .zip(&base)
                .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
        };
        let devs: Vec<f64> = [25, 100, 400].iter().map(|&m| deviation(m)).collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
    }

    fn std_normal_density(nodes: usize) -> GridFunction {
        GridFunction::from_fn(Interval::line_truncation(8.0).unwrap(), nodes, |u| {
            (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
        })
        .unwrap()
    }

    #[test]
    fn kde_mass_and_single_point() {
        let dens = std_normal_density(1601);
        let cfg = ReconstructionConfig::new(Scheme::Kde, 500);
        let (est, _) = reconstruct(&dens, &cfg, 3).unwrap();
        assert!((est.integral()[0] - 1.0).abs() < 1e-3);

        let fixed = ReconstructionConfig {
            bandwidth: BandwidthRule::Fixed { h: 0.3 },
            ..cfg.clone()
        };
        let (est, rec) = reconstruct_kde(&dens, 1, &fixed, 5).unwrap();
        let ObservationRecord::Kde { sample_points, d } = rec else {
            panic!()
        };
        assert_eq!(d, 1);
        let x = sample_points[0];
        for (j, v) in est.values().iter().enumerate() {
            let z = (est.node(j) - x) / 0.3;
            let bump = (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * 0.3);
            assert!((v - bump).abs() < 1e-14);
        }
    }

    #[test]
    fn kde_rejects_invalid_densities() {
        let cfg = ReconstructionConfig::new(Scheme::Kde, 10);
        let unnormalised = GridFunction::constant(unit(), 11, &[2.0]).unwrap();
        assert!(reconstruct_kde(&unnormalised, 10, &cfg, 0).is_err());
        let negative = GridFunction::from_fn(unit(), 11, |u| 2.0 * (u - 0.5) + 1.0 - 0.0001).unwrap();
        let mut vals = negative.values().to_vec();
        vals[0] = -0.1;
        let negative = negative.with_values(vals).unwrap();
        assert!(reconstruct_kde(&negative, 10, &cfg, 0).is_err());
    }

    #[test]
    fn inverse_cdf_sampler_matches_the_density() {
        // triangular density 2u on [0, 1]: quantile sqrt(p)
        let tri = GridFunction::from_fn(unit(), 2, |u| 2.0 * u).unwrap();
        let s = reconstruct::GridSampler::new(&tri);
        for p in [0.0, 0.1, 0.25, 0.5, 0.9, 1.0] {
            assert!((s.quantile(p) - f64::sqrt(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_sup_error_at_large_sample() {
        let dens = std_normal_density(1601);
        let cfg = ReconstructionConfig {
            target: Some(Interval::line_truncation(4.0).unwrap()),
            target_nodes: Some(81),
            ..ReconstructionConfig::new(Scheme::Kde, 50_000)
        };
        let hits = (0..100)
            .filter(|&r| {
                let (est, _) = reconstruct(&dens, &cfg, seed::derive(33, r)).unwrap();
                let err = est.nodes().iter().zip(est.values()).fold(0.0_f64, |m, (u, v)| {
                    m.max((v - (-0.5 * u * u).exp() / (2.0 * PI).sqrt()).abs())
                });
                err < 0.02
            })
            .count();
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn random_sample_size_stays_in_range() {
        let dens = std_normal_density(401);
        let cfg = ReconstructionConfig {
            sample_size_range: Some((20, 40)),
            ..ReconstructionConfig::new(Scheme::Kde, 1)
        };
        for s in 0..20 {
            let (_, rec) = reconstruct(&dens, &cfg, s).unwrap();
            let ObservationRecord::Kde { d, sample_points } = rec else {
                panic!()
            };
            assert!((20..=40).contains(&d));
            assert_eq!(sample_points.len(), d);
        }
    }

    #[test]
    fn mean_estimate_examples() {
        let f = GridFunction::from_fn(unit(), 11, |u| u.exp()).unwrap();
        assert_eq!(mean_estimate(std::slice::from_ref(&f)).unwrap(), f);
        let z = mean_estimate(&[f.clone(), f.scale(-1.0)]).unwrap();
        assert_eq!(sup_norm(&z), 0.0);
        assert!(mean_estimate(&[]).is_err());

        let cfg = GeneratorConfig::iid(unit(), 21, 6, 77);
        let s = generate_series(&cfg, 10_000).unwrap();
        let m = mean_estimate(&s).unwrap();
        let kernel = cfg.long_run_kernel().unwrap();
        let max_sd = (0..21).map(|g| kernel.matrix()[(g, g)].sqrt()).fold(0.0_f64, f64::max);
        assert!(sup_norm(&m) <= 4.0 * max_sd / 100.0);
    }
}
