//! Convergence of the eignet operator for |sin θ| on nested centers.
//!
//! Run with `cargo run --release --example approximation_rates`.

use eignet::eignet::{g_operator, g_operator_discrete, KernelG};
use eignet::harness::{fit_slope, nested_ladder, Target, TargetSpec};
use eignet::manifold::{Manifold, ManifoldKind};
use eignet::spectral::{lp_norm_samples, Mask, Norm, Samples};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind = ManifoldKind::Circle;
    let sweep = [16, 32, 64, 128, 256];
    let target = Target::new(TargetSpec::AbsSin, kind, 4096, 0)?;
    let kernel = KernelG::with_tolerance(kind, Mask::new(4.0), 1e-8, 2048)?;
    let grid = Manifold::circle(0).dense_grid(kernel.n_g());
    let truth = target.eval_many(&grid.points);
    let sup = |psi: &[f64]| {
        let d: Vec<f64> = truth.iter().zip(psi).map(|(a, b)| a - b).collect();
        lp_norm_samples(&d, &grid.weights, Norm::Inf)
    };

    println!("{:>5} {:>7} {:>12} {:>12}", "m", "|C_m|", "continuous", "from samples");
    let mut cont = Vec::new();
    let mut disc = Vec::new();
    for rung in nested_ladder(kind, &sweep, 0)? {
        let m = rung.m as f64;
        let psi = g_operator(&target.coefficients(rung.m), m, &rung.rule, &kernel)?;
        let e = sup(&psi.eval_many(&grid.points));
        let pts = rung.centers.points();
        let samples = Samples::new(pts, &target.eval_many(pts));
        let psi_d = g_operator_discrete(&samples, m, &rung.rule, &rung.rule, &kernel)?;
        let ed = sup(&psi_d.eval_many(&grid.points));
        println!("{:>5} {:>7} {:>12.3e} {:>12.3e}", rung.m, rung.centers.len(), e, ed);
        cont.push((m, e));
        disc.push((m, ed));
    }
    println!("slopes: {:.3} (continuous), {:.3} (samples)", fit_slope(&cont)?.slope, fit_slope(&disc)?.slope);
    Ok(())
}
