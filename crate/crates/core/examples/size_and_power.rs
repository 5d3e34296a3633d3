//! A small false-alarm and power study through the experiment harness,
//! written to CSV with a JSON sidecar that reproduces it.
//!
//! Usage: `cargo run --release --example size_and_power -- [out_dir]`

use std::path::PathBuf;

use fts_sentinel::experiment::{
    emit_report, run_experiment, Calibration, ChangeConfig, ExperimentConfig, ExperimentKind,
};
use fts_sentinel::synth::{GeneratorConfig, ReconstructionConfig, Scheme};
use fts_sentinel::Interval;

fn main() -> fts_sentinel::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "target/size_and_power".into()),
    );
    std::fs::create_dir_all(&out).map_err(|e| fts_sentinel::Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let generator = GeneratorConfig::iid(Interval::new(0.0, 1.0)?, 33, 8, 0);
    let mut size = ExperimentConfig::new(ExperimentKind::Size, generator, 100, 300);
    size.quantile_reps = 5000;
    size.master_seed = 9;
    // a calibration stretch of only N curves makes q itself noisy
    size.calibration = Calibration::Estimated { length: Some(2000) };

    let mut sparse = size.clone();
    sparse.reconstruction = Some(ReconstructionConfig::new(Scheme::Grid, 10));

    let mut power = size.clone();
    power.experiment = ExperimentKind::Power;
    power.change = Some(ChangeConfig::Shift { shift: 0.5, k_star: 20 });

    for (name, cfg) in [("size", &size), ("size_sparse_m10", &sparse), ("power", &power)] {
        let report = run_experiment(cfg)?;
        let s = &report.summary;
        println!(
            "{name:>16}: q = {:.3}, rejection rate {:.3} +- {:.3}, mean delay {:?}, {:.1} s",
            s.threshold.unwrap_or(f64::NAN),
            s.rejection_rate.unwrap_or(f64::NAN),
            s.mc_se.unwrap_or(f64::NAN),
            s.mean_delay,
            report.wall_ms / 1e3
        );
        emit_report(&report, &out.join(format!("{name}.csv")))?;
    }
    println!("reports written to {}", out.display());
    Ok(())
}
