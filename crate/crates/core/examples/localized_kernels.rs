//! Localization of the filtered kernels Φ_L(h; ρ) and the Christoffel sums.
//!
//! Run with `cargo run --example localized_kernels`.

use eignet::manifold::{Manifold, Point};
use eignet::spectral::{phi_kernel_at_distance, CutoffFunction, CutoffKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cutoff = CutoffFunction::default();
    let h = cutoff.component(CutoffKind::H);
    for m in [Manifold::circle(0), Manifold::sphere(0)] {
        println!("{}: |Φ_L(h; ρ)| / L^α", m.name());
        print!("{:>6}", "ρ");
        let levels = [8.0, 16.0, 32.0, 64.0];
        for l in levels {
            print!("{:>12}", format!("L={l}"));
        }
        println!();
        for rho in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0] {
            print!("{rho:>6}");
            for l in levels {
                let v = phi_kernel_at_distance(&m, &h, l, rho).abs() / f64::powf(l, m.alpha());
                print!("{v:>12.3e}");
            }
            println!();
        }
        let x = match m.name() {
            "circle" => Point::circle(1.3),
            _ => Point::sphere(1.3, 0.4),
        };
        let sums: Vec<f64> = [1.0, 4.0, 9.5].iter().map(|&l| m.christoffel_sum(&x, l)).collect::<Result<_, _>>()?;
        println!("Christoffel sums at L = 1, 4, 9.5: {sums:?}\n");
    }
    println!("g̃ at t = 1/16, 1/4, 1/2, 3/4: {:?}", [1.0 / 16.0, 0.25, 0.5, 0.75].map(|t| cutoff.g_tilde(t)));
    Ok(())
}
