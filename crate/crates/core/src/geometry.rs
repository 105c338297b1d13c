//! Finite point sets: minimal separation, mesh norm, greedy thinning,
//! nested refinement, and the regularity functional of discrete measures.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::num::NonZero;
use std::sync::{Arc, OnceLock};

use kiddo::immutable::float::kdtree::ImmutableKdTree;
use kiddo::SquaredEuclidean;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifold::{raw_distance, Manifold, ManifoldKind, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("minimal separation needs at least two points")]
    Singleton,
    #[error("point set is empty")]
    Empty,
    #[error("point {index} is on the {found}, expected the {expected}")]
    WrongManifold {
        index: usize,
        expected: &'static str,
        found: &'static str,
    },
    #[error("point {second} duplicates point {first}")]
    Duplicate { first: usize, second: usize },
    #[error("level {level} is not contained in level {next}")]
    NotNested { level: usize, next: usize },
    #[error("thinning radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("measure has {points} support points but {masses} masses")]
    LengthMismatch { points: usize, masses: usize },
}

pub(crate) fn coord_key(p: &Point) -> (u64, u64) {
    match *p {
        Point::Circle { theta } => (theta.to_bits(), 0),
        Point::Sphere { colat, lon } => (colat.to_bits(), lon.to_bits()),
    }
}

/// Sets at least this large answer sphere distance queries through a k-d tree.
const INDEX_THRESHOLD: usize = 64;

/// Chordal slack on tree queries; every candidate is re-checked with the
/// geodesic distance.
const CHORD_SLACK: f64 = 1e-9;

fn unit(p: &Point) -> [f64; 3] {
    match *p {
        Point::Sphere { colat, lon } => Point::unit_vector(colat, lon),
        Point::Circle { theta } => [theta.cos(), theta.sin(), 0.0],
    }
}

fn chord(rho: f64) -> f64 {
    2.0 * (rho.min(std::f64::consts::PI) / 2.0).sin()
}

/// K-d tree over the unit vectors of a sphere point set.
struct SphereIndex {
    tree: ImmutableKdTree<f64, u32, 3, 32>,
    points: Vec<Point>,
}

impl std::fmt::Debug for SphereIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphereIndex").field("points", &self.points.len()).finish()
    }
}

impl SphereIndex {
    fn new(points: &[Point]) -> Self {
        let coords: Vec<[f64; 3]> = points.iter().map(unit).collect();
        Self {
            tree: ImmutableKdTree::new_from_slice(&coords),
            points: points.to_vec(),
        }
    }

    /// Indices with `ρ(x, y) ≤ r`.
    fn within(&self, x: &Point, r: f64) -> Vec<usize> {
        let c = chord(r) + CHORD_SLACK;
        self.tree
            .within_unsorted::<SquaredEuclidean>(&unit(x), c * c)
            .into_iter()
            .map(|n| n.item as usize)
            .filter(|&i| raw_distance(x, &self.points[i]) <= r)
            .collect()
    }

    /// Smallest geodesic distance from `x` to the set, skipping index `skip`.
    fn nearest(&self, x: &Point, skip: Option<usize>) -> f64 {
        let q = unit(x);
        let hits = self.tree.nearest_n::<SquaredEuclidean>(&q, NonZero::new(2).expect("nonzero"));
        let Some(hit) = hits.iter().find(|n| Some(n.item as usize) != skip) else {
            return f64::INFINITY;
        };
        let d0 = raw_distance(x, &self.points[hit.item as usize]);
        let c = chord(d0) + CHORD_SLACK;
        self.tree
            .within_unsorted::<SquaredEuclidean>(&q, c * c)
            .into_iter()
            .filter(|n| Some(n.item as usize) != skip)
            .map(|n| raw_distance(x, &self.points[n.item as usize]))
            .fold(d0, f64::min)
    }
}

/// An ordered set of distinct points on one manifold.
#[derive(Debug, Clone)]
pub struct PointSet {
    kind: ManifoldKind,
    points: Vec<Point>,
    separation: OnceLock<f64>,
    mesh: OnceLock<MeshNorm>,
    index: OnceLock<Arc<SphereIndex>>,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.points == other.points
    }
}

impl PointSet {
    pub fn new(kind: ManifoldKind, points: Vec<Point>) -> Result<Self, GeometryError> {
        let mut seen = std::collections::HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.kind() != kind {
                return Err(GeometryError::WrongManifold {
                    index: i,
                    expected: kind.name(),
                    found: p.kind().name(),
                });
            }
            if let Some(&first) = seen.get(&coord_key(p)) {
                return Err(GeometryError::Duplicate { first, second: i });
            }
            seen.insert(coord_key(p), i);
        }
        Ok(Self::from_unique(kind, points))
    }

    fn from_unique(kind: ManifoldKind, points: Vec<Point>) -> Self {
        Self {
            kind,
            points,
            separation: OnceLock::new(),
            mesh: OnceLock::new(),
            index: OnceLock::new(),
        }
    }

    fn sphere_index(&self) -> Option<&SphereIndex> {
        (self.kind == ManifoldKind::Sphere && self.points.len() >= INDEX_THRESHOLD)
            .then(|| self.index.get_or_init(|| Arc::new(SphereIndex::new(&self.points))).as_ref())
    }

    /// `n` equispaced angles `2πi/n` on the circle.
    pub fn equispaced_circle(n: usize) -> Self {
        let pts = (0..n).map(|i| Point::circle(TAU * i as f64 / n as f64)).collect();
        Self::from_unique(ManifoldKind::Circle, pts)
    }

    /// Circle points from raw angles (wrapped into `[0, 2π)`).
    pub fn circle_angles(angles: &[f64]) -> Result<Self, GeometryError> {
        Self::new(
            ManifoldKind::Circle,
            angles.iter().map(|&t| Point::circle(t)).collect(),
        )
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.iter().any(|q| coord_key(q) == coord_key(p))
    }

    /// `q(C) = min_{x≠y} ρ(x, y)`, computed exactly.
    pub fn min_separation(&self) -> Result<f64, GeometryError> {
        if self.points.len() < 2 {
            return Err(GeometryError::Singleton);
        }
        Ok(*self.separation.get_or_init(|| match self.kind {
            ManifoldKind::Circle => {
                let gaps = circle_gaps(&self.points);
                gaps.into_iter().fold(f64::INFINITY, f64::min)
            }
            ManifoldKind::Sphere if self.sphere_index().is_some() => {
                let idx = self.sphere_index().expect("checked");
                (0..self.points.len())
                    .into_par_iter()
                    .map(|i| idx.nearest(&self.points[i], Some(i)))
                    .reduce(|| f64::INFINITY, f64::min)
            }
            ManifoldKind::Sphere => {
                let pts = &self.points;
                (0..pts.len())
                    .into_par_iter()
                    .map(|i| {
                        pts[i + 1..]
                            .iter()
                            .map(|q| raw_distance(&pts[i], q))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .reduce(|| f64::INFINITY, f64::min)
            }
        }))
    }

    /// `ρ(x, C)`.
    pub fn distance_to(&self, x: &Point) -> f64 {
        if let Some(idx) = self.sphere_index() {
            return idx.nearest(x, None);
        }
        self.points
            .iter()
            .map(|p| raw_distance(x, p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Mesh norm relative to the whole manifold.
    ///
    /// On the circle this is exact (half the largest gap). On the sphere the
    /// supremum is taken over a probe grid eight times denser than the set's
    /// nominal spacing; the result is a lower bound within `resolution`.
    pub fn mesh_norm(&self) -> Result<MeshNorm, GeometryError> {
        if self.points.is_empty() {
            return Err(GeometryError::Empty);
        }
        Ok(*self.mesh.get_or_init(|| match self.kind {
            ManifoldKind::Circle => {
                let largest = circle_gaps(&self.points)
                    .into_iter()
                    .fold(0.0_f64, f64::max);
                MeshNorm {
                    value: largest / 2.0,
                    resolution: 0.0,
                }
            }
            ManifoldKind::Sphere => {
                let m = Manifold::new(self.kind, 0);
                let spacing = m.nominal_spacing(self.points.len()) / 8.0;
                let probes = m.probe_points(spacing);
                let mut value = probes
                    .par_iter()
                    .map(|x| self.distance_to(x))
                    .reduce(|| 0.0, f64::max);
                value = value.min(m.diameter());
                MeshNorm {
                    value,
                    resolution: spacing,
                }
            }
        }))
    }

    /// `δ(C, K) = sup_{x ∈ K} ρ(x, C)` for a finite `K`, exact.
    pub fn mesh_norm_relative(&self, k: &PointSet) -> Result<f64, GeometryError> {
        if self.points.is_empty() {
            return Err(GeometryError::Empty);
        }
        Ok(k.points
            .par_iter()
            .map(|x| self.distance_to(x))
            .reduce(|| 0.0, f64::max))
    }
}

/// Gaps between consecutive sorted angles, including the wraparound gap.
fn circle_gaps(points: &[Point]) -> Vec<f64> {
    let mut angles: Vec<f64> = points
        .iter()
        .map(|p| match *p {
            Point::Circle { theta } => theta,
            _ => f64::NAN,
        })
        .collect();
    angles.sort_by(|a, b| a.total_cmp(b));
    if angles.len() == 1 {
        return vec![TAU];
    }
    let mut gaps: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(TAU - angles[angles.len() - 1] + angles[0]);
    gaps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshNorm {
    pub value: f64,
    /// Probe spacing; zero when the value is exact.
    pub resolution: f64,
}

/// Outcome of [`greedy_separate`], with both inequalities checked directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThinningCertificate {
    pub epsilon: f64,
    pub input_size: usize,
    pub output_size: usize,
    /// `q(C̃)`; infinite for a singleton output.
    pub separation: f64,
    /// `δ(C̃, C)`.
    pub coverage: f64,
    pub holds: bool,
}

/// Greedy thinning in input order: a point is kept when it lies farther than
/// `ε` from every point kept so far. The result satisfies
/// `δ(C̃, C) ≤ ε ≤ q(C̃)`.
pub fn greedy_separate(
    c: &PointSet,
    epsilon: f64,
) -> Result<(PointSet, ThinningCertificate), GeometryError> {
    if !(epsilon > 0.0) {
        return Err(GeometryError::BadRadius(epsilon));
    }
    let kept = greedy_indices(c.points(), &[], epsilon);
    let out = PointSet::from_unique(c.kind, kept.iter().map(|&i| c.points[i]).collect());
    let cert = certify_thinning(c, &out, epsilon);
    Ok((out, cert))
}

fn greedy_indices(candidates: &[Point], already: &[Point], epsilon: f64) -> Vec<usize> {
    let sphere = candidates.first().is_some_and(|p| p.kind() == ManifoldKind::Sphere);
    if sphere && candidates.len() >= INDEX_THRESHOLD {
        return greedy_indices_indexed(candidates, already, epsilon);
    }
    let mut kept_pts: Vec<Point> = Vec::new();
    let mut kept = Vec::new();
    for (i, x) in candidates.iter().enumerate() {
        let far = kept_pts
            .iter()
            .chain(already.iter())
            .all(|y| raw_distance(x, y) > epsilon);
        if far {
            kept.push(i);
            kept_pts.push(*x);
        }
    }
    kept
}

/// Same rule as the scan: a candidate survives unless an earlier kept point
/// (or a point of `already`) lies within `ε`, so keeping a point blocks its
/// `ε`-neighbourhood.
fn greedy_indices_indexed(candidates: &[Point], already: &[Point], epsilon: f64) -> Vec<usize> {
    let idx = SphereIndex::new(candidates);
    let mut blocked = vec![false; candidates.len()];
    for y in already {
        for j in idx.within(y, epsilon) {
            blocked[j] = true;
        }
    }
    let mut kept = Vec::new();
    for i in 0..candidates.len() {
        if blocked[i] {
            continue;
        }
        kept.push(i);
        for j in idx.within(&candidates[i], epsilon) {
            blocked[j] = true;
        }
    }
    kept
}

fn certify_thinning(c: &PointSet, out: &PointSet, epsilon: f64) -> ThinningCertificate {
    let separation = out.min_separation().unwrap_or(f64::INFINITY);
    let coverage = out.mesh_norm_relative(c).unwrap_or(f64::INFINITY);
    ThinningCertificate {
        epsilon,
        input_size: c.len(),
        output_size: out.len(),
        separation,
        coverage,
        holds: separation >= epsilon && coverage <= epsilon,
    }
}

/// Per-level record of [`nested_separate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCertificate {
    pub level: usize,
    pub input_size: usize,
    pub output_size: usize,
    pub input_mesh: f64,
    pub mesh: f64,
    pub separation: f64,
    /// Probe resolution of the mesh-norm estimates (zero on the circle).
    pub resolution: f64,
    /// False when the level could not be refined and the previous output was
    /// carried forward unchanged.
    pub refined: bool,
    /// `δ(C̃_m) ≤ 2 q(C̃_m)`.
    pub quasi_uniform: bool,
}

/// Thins a nested sequence `C_0 ⊆ C_1 ⊆ …` into a nested sequence
/// `C̃_m ⊆ C_m` with `δ(C̃_m) ≤ 2 q(C̃_m)` on every level.
///
/// Level 0 is thinned greedily at `ε = δ(C_0)`. Each later level keeps the
/// previous output and adds, greedily at `ε = δ(C_m)`, the points of `C_m`
/// that are at least `ε` away from it. A level whose mesh norm exceeds the
/// separation of the previous output cannot be merged this way and reuses
/// the previous output (flagged `refined = false`).
pub fn nested_separate(
    seq: &[PointSet],
) -> Result<Vec<(PointSet, LevelCertificate)>, GeometryError> {
    for (m, w) in seq.windows(2).enumerate() {
        let next: HashSet<(u64, u64)> = w[1].points.iter().map(coord_key).collect();
        if w[0].points.iter().any(|p| !next.contains(&coord_key(p))) {
            return Err(GeometryError::NotNested {
                level: m,
                next: m + 1,
            });
        }
    }
    let mut out: Vec<(PointSet, LevelCertificate)> = Vec::with_capacity(seq.len());
    for (m, cm) in seq.iter().enumerate() {
        let mesh_in = cm.mesh_norm()?;
        let eps = mesh_in.value;
        let (set, refined) = match out.last() {
            None => {
                if cm.len() == 1 {
                    (cm.clone(), true)
                } else {
                    (greedy_separate(cm, eps)?.0, true)
                }
            }
            Some((prev, _)) => {
                let q_prev = prev.min_separation().unwrap_or(f64::INFINITY);
                if eps <= q_prev {
                    let prev_keys: HashSet<(u64, u64)> =
                        prev.points.iter().map(coord_key).collect();
                    let candidates: Vec<Point> = cm
                        .points
                        .iter()
                        .filter(|p| !prev_keys.contains(&coord_key(p)))
                        .filter(|p| prev.distance_to(p) >= eps)
                        .copied()
                        .collect();
                    let added = greedy_indices(&candidates, prev.points(), eps);
                    let mut pts = prev.points.clone();
                    pts.extend(added.into_iter().map(|i| candidates[i]));
                    (PointSet::from_unique(cm.kind, pts), true)
                } else {
                    (prev.clone(), false)
                }
            }
        };
        let mesh = set.mesh_norm()?;
        let separation = set.min_separation().unwrap_or(f64::INFINITY);
        let cert = LevelCertificate {
            level: m,
            input_size: cm.len(),
            output_size: set.len(),
            input_mesh: mesh_in.value,
            mesh: mesh.value,
            separation,
            resolution: mesh.resolution,
            refined,
            quasi_uniform: mesh.value <= 2.0 * separation,
        };
        out.push((set, cert));
    }
    Ok(out)
}

/// A finitely supported signed measure `ν = Σ W_x δ_x`.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub support: PointSet,
    pub masses: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: PointSet, masses: Vec<f64>) -> Result<Self, GeometryError> {
        if support.len() != masses.len() {
            return Err(GeometryError::LengthMismatch {
                points: support.len(),
                masses: masses.len(),
            });
        }
        Ok(Self { support, masses })
    }

    /// Same mass at every point of `support`.
    pub fn uniform(support: PointSet, mass: f64) -> Self {
        let n = support.len();
        Self {
            support,
            masses: vec![mass; n],
        }
    }

    pub fn total_variation(&self) -> f64 {
        self.masses.iter().map(|m| m.abs()).sum()
    }

    /// Sum of measures; coinciding support points are merged.
    pub fn add(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure, GeometryError> {
        if self.support.kind != other.support.kind {
            return Err(GeometryError::WrongManifold {
                index: 0,
                expected: self.support.kind.name(),
                found: other.support.kind.name(),
            });
        }
        let mut pts = self.support.points.clone();
        let mut masses = self.masses.clone();
        let mut index: std::collections::HashMap<(u64, u64), usize> =
            pts.iter().enumerate().map(|(i, p)| (coord_key(p), i)).collect();
        for (p, &w) in other.support.points.iter().zip(&other.masses) {
            match index.get(&coord_key(p)) {
                Some(&i) => masses[i] += w,
                None => {
                    index.insert(coord_key(p), pts.len());
                    pts.push(*p);
                    masses.push(w);
                }
            }
        }
        Ok(DiscreteMeasure {
            support: PointSet::from_unique(self.support.kind, pts),
            masses,
        })
    }

    /// `|ν|(B(x, r))`.
    pub fn ball_variation(&self, x: &Point, r: f64) -> f64 {
        self.support
            .points
            .iter()
            .zip(&self.masses)
            .filter(|(p, _)| raw_distance(x, p) <= r)
            .map(|(_, w)| w.abs())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityEstimate {
    pub d: f64,
    /// Supremum of `|ν|(B(x,r)) / (μ(B(x,r)) + d^α)` over the probed family.
    pub value: f64,
    /// Spacing of the probe grid of centers.
    pub resolution: f64,
    pub radii: usize,
    pub centers: usize,
}

/// Lower-bound estimate of `‖ν‖_{M_d}`.
///
/// Centers: the support of `ν` plus a probe grid with spacing
/// `min(d, nominal support spacing) / 2`. Radii: `d·2^i` covering
/// `[d/8, diameter]`, plus the diameter itself.
pub fn regularity_norm(nu: &DiscreteMeasure, d: f64) -> Result<RegularityEstimate, GeometryError> {
    if !(d > 0.0) {
        return Err(GeometryError::BadRadius(d));
    }
    let m = Manifold::new(nu.support.kind, 0);
    let diam = m.diameter();
    let mut radii = Vec::new();
    let mut r = d / 8.0;
    while r < diam {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(diam);
    let spacing = d.min(m.nominal_spacing(nu.support.len().max(1))) / 2.0;
    let mut centers = nu.support.points.clone();
    centers.extend(m.probe_points(spacing));
    let denom_shift = d.powf(m.alpha());

    let abs_masses: Vec<f64> = nu.masses.iter().map(|w| w.abs()).collect();
    let value = centers
        .par_iter()
        .map(|x| {
            let mut dist: Vec<(f64, f64)> = nu
                .support
                .points
                .iter()
                .zip(&abs_masses)
                .map(|(p, &w)| (raw_distance(x, p), w))
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut best = 0.0_f64;
            let mut acc = 0.0;
            let mut k = 0;
            for &r in &radii {
                while k < dist.len() && dist[k].0 <= r {
                    acc += dist[k].1;
                    k += 1;
                }
                best = best.max(acc / (m.ball_measure_radius(r) + denom_shift));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(RegularityEstimate {
        d,
        value,
        resolution: spacing,
        radii: radii.len(),
        centers: centers.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn angles(set: &PointSet) -> Vec<f64> {
        set.points().iter().map(|p| p.coords()[0]).collect()
    }

    #[test]
    fn separation_examples() {
        let c = PointSet::equispaced_circle(8);
        assert!((c.min_separation().unwrap() - TAU / 8.0).abs() < 1e-15);
        let c = PointSet::circle_angles(&[0.0, 1.0, 2.0]).unwrap();
        assert!((c.min_separation().unwrap() - 1.0).abs() < 1e-15);
        let c = PointSet::circle_angles(&[0.1, TAU - 0.1]).unwrap();
        assert!((c.min_separation().unwrap() - 0.2).abs() < 1e-12);
        let c = PointSet::circle_angles(&[0.3]).unwrap();
        assert_eq!(c.min_separation(), Err(GeometryError::Singleton));
    }

    #[test]
    fn duplicates_rejected() {
        assert!(matches!(
            PointSet::circle_angles(&[0.5, 1.0, 0.5]),
            Err(GeometryError::Duplicate { first: 0, second: 2 })
        ));
    }

    #[test]
    fn mesh_norm_examples() {
        for n in [4, 7, 32] {
            let c = PointSet::equispaced_circle(n);
            assert!((c.mesh_norm().unwrap().value - PI / n as f64).abs() < 1e-14);
            assert_eq!(c.mesh_norm_relative(&c).unwrap(), 0.0);
        }
        let c = PointSet::circle_angles(&[0.0, PI]).unwrap();
        assert!((c.mesh_norm().unwrap().value - PI / 2.0).abs() < 1e-15);
        let empty = PointSet::new(ManifoldKind::Circle, vec![]).unwrap();
        assert_eq!(empty.mesh_norm(), Err(GeometryError::Empty));
    }

    #[test]
    fn greedy_hand_trace() {
        let c = PointSet::circle_angles(&[0.0, 0.1, 1.0, 1.05, 2.0]).unwrap();
        let (out, cert) = greedy_separate(&c, 0.2).unwrap();
        assert_eq!(angles(&out), vec![0.0, 1.0, 2.0]);
        assert!(cert.holds);
    }

    #[test]
    fn greedy_keeps_well_separated_sets() {
        let c = PointSet::equispaced_circle(12);
        let q = c.min_separation().unwrap();
        let (out, _) = greedy_separate(&c, 0.9 * q).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn greedy_at_mesh_norm_is_quasi_uniform() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ang: Vec<f64> = (0..300).map(|_| rng.random::<f64>() * TAU).collect();
        let c = PointSet::circle_angles(&ang).unwrap();
        let delta = c.mesh_norm().unwrap().value;
        let (out, cert) = greedy_separate(&c, delta).unwrap();
        assert!(cert.holds);
        let d_out = out.mesh_norm().unwrap().value;
        assert!(delta <= d_out + 1e-15 && d_out <= 2.0 * delta + 1e-15);
        assert!(d_out <= 2.0 * out.min_separation().unwrap());
    }

    #[test]
    fn nested_hand_example() {
        let c0 = PointSet::circle_angles(&[0.0, PI]).unwrap();
        let c1 = PointSet::circle_angles(&[0.0, PI, PI / 2.0, 1.5 * PI, 0.01]).unwrap();
        let out = nested_separate(&[c0, c1]).unwrap();
        let lvl1 = &out[1].0;
        assert_eq!(lvl1.len(), 4);
        assert!(!lvl1.contains(&Point::circle(0.01)));
        assert!(lvl1.contains(&Point::circle(PI / 2.0)));
        assert!(lvl1.contains(&Point::circle(1.5 * PI)));
        assert!(out.iter().all(|(_, c)| c.quasi_uniform && c.refined));
    }

    #[test]
    fn nested_rejects_non_nested() {
        let c0 = PointSet::circle_angles(&[0.0, 1.0]).unwrap();
        let c1 = PointSet::circle_angles(&[0.0, 2.0]).unwrap();
        assert!(matches!(
            nested_separate(&[c0, c1]),
            Err(GeometryError::NotNested { level: 0, next: 1 })
        ));
    }

    #[test]
    fn regularity_of_single_mass() {
        let s = PointSet::circle_angles(&[1.0]).unwrap();
        let nu = DiscreteMeasure::uniform(s, 1.0);
        let est = regularity_norm(&nu, 0.1).unwrap();
        // smallest radius d/8: 1 / (d/(8π) + d)
        let expect = 1.0 / (0.1 / 8.0 / PI + 0.1);
        assert!((est.value - expect).abs() < 1e-12);
        assert!((est.value - 10.0).abs() < 0.5);
    }

    #[test]
    fn regularity_of_grid_measure_is_near_one() {
        let m = Manifold::circle(0);
        let g = m.reference_grid(400);
        let s = PointSet::new(ManifoldKind::Circle, g.points).unwrap();
        let nu = DiscreteMeasure::new(s, g.weights).unwrap();
        let est = regularity_norm(&nu, 0.05).unwrap();
        assert!((est.value - 1.0).abs() < 0.1, "{}", est.value);
    }

    #[test]
    fn regularity_of_separation_masses_is_bounded() {
        for n in [16, 64, 256] {
            let s = PointSet::equispaced_circle(n);
            let q = s.min_separation().unwrap();
            let nu = DiscreteMeasure::uniform(s, q);
            let est = regularity_norm(&nu, q).unwrap();
            assert!(est.value < 8.0, "n={n} value={}", est.value);
        }
    }

    #[test]
    fn sphere_mesh_norm_of_octahedron() {
        let pts = vec![
            Point::sphere(0.0, 0.0),
            Point::sphere(PI, 0.0),
            Point::sphere(PI / 2.0, 0.0),
            Point::sphere(PI / 2.0, PI / 2.0),
            Point::sphere(PI / 2.0, PI),
            Point::sphere(PI / 2.0, 1.5 * PI),
        ];
        let c = PointSet::new(ManifoldKind::Sphere, pts).unwrap();
        // Farthest points are face centres: angle acos(1/√3) from each vertex.
        let exact = (1.0 / 3f64.sqrt()).acos();
        let est = c.mesh_norm().unwrap();
        assert!(est.value <= exact + 1e-12);
        assert!(est.value >= exact - est.resolution);
        assert!((c.min_separation().unwrap() - PI / 2.0).abs() < 1e-12);
    }

    fn random_sphere(n: usize, seed: u64) -> Vec<Point> {
        use rand::SeedableRng;
        let m = Manifold::sphere(0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| m.random_point(&mut rng)).collect()
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn indexed_queries_match_scans(seed in 0u64..1000, eps in 0.05f64..0.6) {
            let pts = random_sphere(400, seed);
            let set = PointSet::new(ManifoldKind::Sphere, pts.clone()).unwrap();
            let brute_sep = (0..pts.len())
                .flat_map(|i| (i + 1..pts.len()).map(move |j| (i, j)))
                .map(|(i, j)| raw_distance(&pts[i], &pts[j]))
                .fold(f64::INFINITY, f64::min);
            proptest::prop_assert_eq!(set.min_separation().unwrap(), brute_sep);
            for x in random_sphere(50, seed + 1) {
                let brute = pts.iter().map(|y| raw_distance(&x, y)).fold(f64::INFINITY, f64::min);
                proptest::prop_assert_eq!(set.distance_to(&x), brute);
            }
            let scan = {
                let mut kept: Vec<usize> = Vec::new();
                for (i, x) in pts.iter().enumerate() {
                    if kept.iter().all(|&k| raw_distance(x, &pts[k]) > eps) {
                        kept.push(i);
                    }
                }
                kept
            };
            proptest::prop_assert_eq!(greedy_indices(&pts, &[], eps), scan);
        }
    }
}
