//! Writes a rule, an eignet with its kernel header, and a spectral vector as
//! CSV/JSON into a temporary directory, then reads them back.
//!
//! Run with `cargo run --example serialization`.

use std::fs::File;

use eignet::eignet::{build_eignet, KernelG};
use eignet::geometry::PointSet;
use eignet::io;
use eignet::manifold::{Manifold, ManifoldKind};
use eignet::quadrature::solve_weights;
use eignet::spectral::{Mask, SpectralVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("eignet-serialization-example");
    std::fs::create_dir_all(&dir)?;
    let kind = ManifoldKind::Circle;
    let centers = PointSet::equispaced_circle(12);
    let rule = solve_weights(&Manifold::circle(8), &centers, 8.0)?;
    let kernel = KernelG::with_tolerance(kind, Mask::new(4.0), 1e-6, 4096)?;
    let p = SpectralVector::from_fn(kind, 2, |j, _| if j == 1 { 1.0 } else { 0.0 });
    let net = build_eignet(&p, &rule, &kernel)?;

    io::to_file(&dir.join("rule.csv"), |w| io::write_rule(w, &rule))?;
    io::to_file(&dir.join("eignet.csv"), |w| io::write_eignet(w, &net))?;
    io::to_file(&dir.join("eignet.json"), |w| io::write_json(w, &kernel.header()))?;
    io::to_file(&dir.join("p.csv"), |w| io::write_spectral(w, &p))?;

    let (back, coeffs) = io::read_eignet_table(File::open(dir.join("eignet.csv"))?)?;
    let q = io::read_spectral(File::open(dir.join("p.csv"))?, kind)?;
    println!("wrote {}", dir.display());
    println!("eignet round trip: {} centers, coefficients equal = {}", back.len(), coeffs == net.coeffs());
    println!("spectral round trip equal = {}", q == p);
    print!("{}", std::fs::read_to_string(dir.join("eignet.json"))?);
    Ok(())
}
