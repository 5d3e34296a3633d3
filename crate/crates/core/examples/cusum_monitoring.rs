//! Trains the CUSUM detector on a stable period and monitors two streams:
//! one without a change and one with a mean shift after 50 observations.

use fts_sentinel::gausslimit::{estimate_lrv, sup_quantile, LagBandwidth};
use fts_sentinel::monitor::{init_monitor, run_monitor};
use fts_sentinel::synth::{apply_change, generate_series, ChangeSpec, GeneratorConfig};
use fts_sentinel::{GridFunction, Interval};

fn main() -> fts_sentinel::Result<()> {
    let unit = Interval::new(0.0, 1.0)?;
    let cfg = GeneratorConfig::iid(unit, 33, 8, 2024);
    let n = 200;

    // the threshold comes from an independent calibration stretch
    let calibration = generate_series(&cfg.with_seed(1), n)?;
    let kernel = estimate_lrv(&calibration, LagBandwidth::Auto, true)?;
    let q = sup_quantile(&kernel, 0.05, 5000, 256, 17)?;
    println!("threshold q_0.95 = {q:.3}");

    let series = generate_series(&cfg, 6 * n)?;
    let (train, stream) = series.split_at(n);
    let mut state = init_monitor(train, q)?.with_history();
    let calm = run_monitor(&mut state, stream, 5 * n)?;
    println!("no change: {calm:?}");

    let bump = GridFunction::from_fn(unit, 33, |u| 0.8 * (std::f64::consts::PI * u).sin())?;
    let change = ChangeSpec::new(GridFunction::zeros(unit, 33, 1)?, bump, 50)?;
    let shifted = apply_change(&series, &change, n)?;
    let mut state = init_monitor(&shifted[..n], q)?.with_history();
    let hit = run_monitor(&mut state, &shifted[n..], 5 * n)?;
    println!("change at k* = 50: {hit:?}");
    if let (Some(k), Some(h)) = (hit.alarm_k, state.gamma_history()) {
        let tail: Vec<String> = h.iter().skip(k.saturating_sub(5)).map(|g| format!("{g:.3}")).collect();
        println!("last gammas before the alarm: {}", tail.join(" "));
    }
    Ok(())
}
