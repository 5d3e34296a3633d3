//! Simulates latent functional series with the three dependence
//! structures and compares their long-run variance at one point.
//!
//! Run with `cargo run --release --example simulate_series`.

use fts_sentinel::funcspace::{holder_quotient, sup_norm};
use fts_sentinel::gausslimit::{estimate_lrv, LagBandwidth};
use fts_sentinel::synth::{generate_series, GeneratorConfig, GeneratorKind};
use fts_sentinel::Interval;

fn main() -> fts_sentinel::Result<()> {
    let unit = Interval::new(0.0, 1.0)?;
    let base = GeneratorConfig::iid(unit, 65, 12, 42);

    for (kind, param) in [
        (GeneratorKind::IidGaussBasis, 0.0),
        (GeneratorKind::FmaQ, 3.0),
        (GeneratorKind::Far1, 0.6),
    ] {
        let cfg = GeneratorConfig {
            kind,
            q_or_rho: param,
            ..base.clone()
        };
        let series = generate_series(&cfg, 4000)?;

        let worst = series.iter().map(sup_norm).fold(0.0, f64::max);
        let rough = series.iter().map(|x| holder_quotient(x, 0.75)).fold(0.0, f64::max);

        let truth = cfg.long_run_kernel()?;
        let est = estimate_lrv(&series, LagBandwidth::Auto, true)?;
        let mid = 32;
        println!(
            "{kind:?}(param {param}): max sup-norm {worst:.2}, max Holder-0.75 quotient {rough:.1}, \
             c(0.5, 0.5) true {:.3} / Bartlett (b = {}) {:.3}",
            truth.matrix()[(mid, mid)],
            est.lag_bandwidth(),
            est.matrix()[(mid, mid)],
        );
    }

    // one curve as JSON, the interchange format used by the CLI
    let first = &generate_series(&base, 1)?[0];
    let json = serde_json::to_string(first).expect("serialisable");
    println!("\nfirst curve: {}...", &json[..json.len().min(100)]);
    Ok(())
}
