//! Builds the partial-sum field of a short series, evaluates it between
//! time points and projects it onto the product grid used for
//! distributional comparisons.

use fts_sentinel::partialsum::{build_partial_sum, discretize, eval_linear, make_grid, vectorize, Centering};
use fts_sentinel::synth::{generate_series, GeneratorConfig, GeneratorKind};
use fts_sentinel::Interval;

fn main() -> fts_sentinel::Result<()> {
    let line = Interval::line_truncation(3.0)?;
    let cfg = GeneratorConfig {
        kind: GeneratorKind::Far1,
        q_or_rho: 0.5,
        ..GeneratorConfig::iid(line, 121, 6, 11)
    };
    let n = 256;
    let series = generate_series(&cfg, n)?;

    let field = build_partial_sum(&series, Centering::Empirical)?;
    println!(
        "P_N over {} time points, centring {:?}",
        field.lambda_grid().len(),
        field.centering()
    );
    println!("sup |P_N| = {:.4}", field.sup_abs());
    // the empirical centring pins the end point to zero
    println!("P_N(1, 0) = {:.2e}", eval_linear(&field, 1.0, 0.0)?[0]);
    println!("P_N(0.3, 0.5) = {:.4}", eval_linear(&field, 0.3, 0.5)?[0]);

    for rho in [0.1, 0.3] {
        let grid = make_grid(n, rho, 0.4, 8.0)?;
        let disc = discretize(&field, &grid);
        println!(
            "rho = {rho}: {} x {} grid on [0, 1] x [-{:.2}, {:.2}], {} points (bound {:.0}), sup {:.4}, |vec| = {}",
            grid.lambda_points.len(),
            grid.u_points.len(),
            grid.half_width,
            grid.half_width,
            grid.total_points(),
            grid.count_bound(),
            disc.sup_abs(),
            vectorize(&disc).len(),
        );
    }

    let mut csv = Vec::new();
    field.to_csv(&mut csv).expect("in-memory write");
    let text = String::from_utf8(csv).expect("utf8");
    println!(
        "\nCSV preview:\n{}",
        text.lines().take(4).collect::<Vec<_>>().join("\n")
    );
    Ok(())
}
