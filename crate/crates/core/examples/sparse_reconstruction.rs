//! Rebuilds latent curves from sparse observations and shows how the
//! sup-norm error shrinks as the number of points per curve grows.

use fts_sentinel::funcspace::sup_distance;
use fts_sentinel::synth::{
    generate_series, reconstruct, reconstruct_kde, BandwidthRule, GeneratorConfig, ReconstructionConfig, Scheme,
};
use fts_sentinel::{GridFunction, Interval};

fn main() -> fts_sentinel::Result<()> {
    let unit = Interval::new(0.0, 1.0)?;
    let latent = generate_series(&GeneratorConfig::iid(unit, 201, 8, 7), 50)?;

    println!("{:>6} {:>12} {:>12}", "M", "grid error", "NW error");
    for m in [5, 10, 20, 50, 100, 200] {
        let grid = ReconstructionConfig::new(Scheme::Grid, m);
        let mut nw = ReconstructionConfig::new(Scheme::Nw, m);
        nw.noise_sigma = 0.05;
        // the default h = M^(-1/5) oversmooths curves with this many harmonics
        nw.bandwidth = BandwidthRule::Power { c: 0.1, b: 0.2 };
        let (mut eg, mut en) = (0.0, 0.0);
        for (i, x) in latent.iter().enumerate() {
            eg += sup_distance(&reconstruct(x, &grid, i as u64)?.0, x)?;
            en += sup_distance(&reconstruct(x, &nw, i as u64)?.0, x)?;
        }
        let n = latent.len() as f64;
        println!("{m:>6} {:>12.4} {:>12.4}", eg / n, en / n);
    }

    // density curves observed through samples
    let bump = GridFunction::from_fn(unit, 201, |u| u * (1.0 - u))?;
    let density = bump.scale(1.0 / bump.integral()[0]);
    let mut kde = ReconstructionConfig::new(Scheme::Kde, 0);
    kde.bandwidth = BandwidthRule::Power { c: 0.5, b: 0.2 };
    println!("\n{:>6} {:>12}", "D", "KDE error");
    for size in [50, 500, 5000] {
        let (est, _) = reconstruct_kde(&density, size, &kde, 3)?;
        println!("{size:>6} {:>12.4}", sup_distance(&est, &density)?);
    }
    Ok(())
}
