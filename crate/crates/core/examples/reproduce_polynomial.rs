//! Building an eignet that reproduces a diffusion polynomial.
//!
//! The kernel is truncated where its closed-form tail drops below 1e-12, and
//! the eignet is built with an exact reference grid and with a 64-node rule.
//!
//! Run with `cargo run --example reproduce_polynomial`.

use eignet::eignet::{build_eignet, KernelG};
use eignet::geometry::PointSet;
use eignet::manifold::{Manifold, ManifoldKind};
use eignet::quadrature::{solve_weights, QuadratureRule};
use eignet::spectral::{lp_norm, Mask, Norm, SpectralVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind = ManifoldKind::Circle;
    let kernel = KernelG::with_tolerance(kind, Mask::new(4.0), 1e-12, 1 << 16)?;
    let h = kernel.header();
    println!("kernel β = {}, N_G = {}, tail ≤ {:.2e}", h.beta, h.n_g, h.tail_bound);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = SpectralVector::from_fn(kind, 16, |_, _| StandardNormal.sample(&mut rng));

    let grid = Manifold::circle(0).reference_grid(h.n_g + 16);
    let exact = QuadratureRule::from_grid(kind, &grid, (2 * (h.n_g + 16)) as f64);
    let net = build_eignet(&p, &exact, &kernel)?;
    let err = lp_norm(&p.sub(&net.to_spectral())?, Norm::Inf).value;
    println!("reference grid ({} nodes): ‖P - Ψ‖_∞ = {err:.2e}", exact.centers.len());

    let nodes = PointSet::equispaced_circle(64);
    let rule = solve_weights(&Manifold::circle(32), &nodes, 32.0)?;
    let net = build_eignet(&p, &rule, &kernel)?;
    let err = lp_norm(&p.sub(&net.to_spectral())?, Norm::Inf).value;
    println!("64-node rule:             ‖P - Ψ‖_∞ = {err:.2e}");
    println!("first coefficients: {:?}", &net.coeffs()[..4]);
    Ok(())
}
