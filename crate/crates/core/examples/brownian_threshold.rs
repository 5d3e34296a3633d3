//! Estimates a long-run covariance kernel and turns it into monitoring
//! thresholds by simulating the supremum of the limiting Brownian motion.

use fts_sentinel::gausslimit::{estimate_lrv, sample_brownian, sup_draws, upper_quantile, LagBandwidth};
use fts_sentinel::synth::{generate_series, GeneratorConfig};
use fts_sentinel::Interval;

fn main() -> fts_sentinel::Result<()> {
    let cfg = GeneratorConfig::iid(Interval::new(0.0, 1.0)?, 33, 8, 5);
    let truth = cfg.long_run_kernel()?;
    let estimate = estimate_lrv(&generate_series(&cfg, 400)?, LagBandwidth::Auto, true)?;

    let path = sample_brownian(&truth, &[0.0, 0.25, 0.5, 0.75, 1.0], 1)?;
    println!("one path: sup over the grid {:.3}", path.sup_abs());

    for (name, kernel) in [("true kernel", &truth), ("estimated kernel", &estimate)] {
        let draws = sup_draws(kernel, 5000, 256, 99)?;
        print!("{name:>16}:");
        for alpha in [0.01, 0.05, 0.10] {
            print!("  q_{:.2} = {:.3}", 1.0 - alpha, upper_quantile(&draws, alpha)?);
        }
        println!();
    }
    Ok(())
}
