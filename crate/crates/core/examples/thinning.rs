//! Greedy thinning of a point cloud and a nested sequence of separated sets.
//!
//! Run with `cargo run --example thinning`.

use eignet::geometry::{greedy_separate, nested_separate, PointSet};
use eignet::manifold::{Manifold, ManifoldKind, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = Manifold::sphere(0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let stream: Vec<Point> = (0..4000).map(|_| m.random_point(&mut rng)).collect();

    println!("{:>8} {:>8} {:>10} {:>10}", "eps", "kept", "q", "coverage");
    let cloud = PointSet::new(ManifoldKind::Sphere, stream.clone())?;
    for eps in [0.4, 0.2, 0.1, 0.05] {
        let (_, c) = greedy_separate(&cloud, eps)?;
        println!("{eps:>8} {:>8} {:>10.4} {:>10.4}", c.output_size, c.separation, c.coverage);
    }

    let prefixes: Vec<PointSet> = [100, 400, 1600]
        .iter()
        .map(|&n| PointSet::new(ManifoldKind::Sphere, stream[..n].to_vec()))
        .collect::<Result<_, _>>()?;
    println!("\nnested prefixes of the same stream:");
    for (set, cert) in nested_separate(&prefixes)? {
        println!(
            "  level {}: {} -> {} points, mesh {:.4}, q {:.4}, δ/q {:.2}",
            cert.level,
            cert.input_size,
            set.len(),
            cert.mesh,
            cert.separation,
            cert.mesh / cert.separation
        );
    }
    Ok(())
}
