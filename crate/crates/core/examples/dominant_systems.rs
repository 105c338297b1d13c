//! Certified solves of diagonally dominant systems.
//!
//! Run with `cargo run --example dominant_systems`.

use eignet::eignet::dominant::{diag_dominant_solve, dominance_gamma};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 2.0]);
    let y = DVector::from_vec(vec![1.0, -1.0]);
    let gamma = dominance_gamma(&a);
    let s = diag_dominant_solve(&a, &y, gamma, 2.0)?;
    println!("γ = {gamma}, solution = {:?}", s.solution.as_slice());
    for b in &s.bounds {
        println!("  p = {:?}: ‖a‖ = {:.6}  ≤  {:.6}", b.p, b.solution_norm, b.bound);
    }

    let n = 6;
    let tri = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 4.0,
        1 => -1.0,
        _ => 0.0,
    });
    let y = DVector::from_fn(n, |i, _| (i as f64).sin());
    let gamma = dominance_gamma(&tri);
    let s = diag_dominant_solve(&tri, &y, gamma, 4.0)?;
    println!("\ntridiagonal: γ = {gamma}, bound factor {:.3}", 1.0 / ((1.0 - gamma) * 4.0));
    for b in &s.bounds {
        println!("  p = {:?}: ‖a‖ = {:.6}  ≤  {:.6}", b.p, b.solution_norm, b.bound);
    }

    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    match diag_dominant_solve(&bad, &DVector::from_vec(vec![1.0, 1.0]), 0.5, 1.0) {
        Ok(_) => println!("unexpected acceptance"),
        Err(e) => println!("\nrejected: {e}"),
    }
    Ok(())
}
