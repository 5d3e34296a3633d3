//! Distance between the law of the discretised partial-sum field and its
//! Gaussian limit as the sample size grows.

use fts_sentinel::experiment::{run_decay_experiment, ExperimentConfig, ExperimentKind, ReportRows};
use fts_sentinel::synth::{GeneratorConfig, GeneratorKind};
use fts_sentinel::Interval;

fn main() -> fts_sentinel::Result<()> {
    let generator = GeneratorConfig {
        kind: GeneratorKind::Far1,
        q_or_rho: 0.9,
        ..GeneratorConfig::iid(Interval::new(0.0, 1.0)?, 33, 2, 0)
    };
    let mut cfg = ExperimentConfig::new(ExperimentKind::Decay, generator, 64, 1000);
    cfg.master_seed = 5;
    let report = run_decay_experiment(&cfg, &[32, 64, 128, 256, 512])?;

    println!("{:>5} {:>7} {:>9} {:>9}", "N", "points", "D(N)", "pi(N)");
    if let ReportRows::Decay(rows) = &report.rows {
        for r in rows {
            println!("{:>5} {:>7} {:>9.4} {:>9.3}", r.n, r.total_points, r.d_w2, r.prokhorov);
        }
    }
    if let Some(slope) = report.summary.decay_loglog_slope {
        println!("log D(N) ~ {slope:.2} log N (descriptive)");
    }
    Ok(())
}
