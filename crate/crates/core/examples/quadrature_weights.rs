//! Minimum-norm quadrature weights on the circle and on a scattered sphere set.
//!
//! Run with `cargo run --example quadrature_weights`.

use eignet::geometry::{greedy_separate, PointSet};
use eignet::manifold::{Manifold, ManifoldKind};
use eignet::quadrature::{order_sweep, solve_weights, verify_exactness};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let circle = Manifold::circle(64);
    let nodes = PointSet::equispaced_circle(64);
    for order in [30.0, 63.0, 64.0] {
        let rule = solve_weights(&circle, &nodes, order)?;
        println!(
            "circle N=64 order {order:>4}: residual {:.2e} exact={} method={:?}",
            rule.residual,
            rule.is_exact(),
            rule.method
        );
    }
    let rule = solve_weights(&circle, &nodes, 30.0)?;
    let check = verify_exactness(&rule, 30.0, 10, 1);
    println!("  products of Π_15 pairs: max error {:.2e}", check.product_error);

    let sphere = Manifold::sphere(0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let raw = PointSet::new(ManifoldKind::Sphere, (0..2000).map(|_| sphere.random_point(&mut rng)).collect())?;
    let (centers, cert) = greedy_separate(&raw, 0.08)?;
    println!(
        "\nsphere: {} random points thinned to {} (q = {:.4}, δ ≤ {:.4})",
        cert.input_size, cert.output_size, cert.separation, cert.coverage
    );
    let sweep = order_sweep(&Manifold::sphere(40), &centers, 40)?;
    println!(
        "  largest exact order {} (mesh norm {:.4}, order × mesh {:.2})",
        sweep.max_order, sweep.mesh_norm, sweep.ratio
    );
    let rule = solve_weights(&Manifold::sphere(sweep.max_order), &centers, sweep.max_order as f64)?;
    let c = rule.certificate(true);
    println!(
        "  rule: residual {:.2e}, max|w| {:.3e}, max|w|/q² {:.3}, weight sum {:.12}",
        c.residual,
        c.max_abs_weight,
        c.weight_bound_constant.unwrap_or(f64::NAN),
        c.weight_sum
    );
    if let Some(r) = c.regularity {
        println!("  ‖Σ|w|δ‖ regularity at d = {:.3}: {:.3}", r.d, r.value);
    }
    Ok(())
}
