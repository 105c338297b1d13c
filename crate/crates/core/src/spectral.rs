//! Smooth cutoffs, masks of type β, spectral coefficient vectors, and the
//! coefficient-multiplier operators built from them.

use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::coord_key;
use crate::manifold::{fill_sphere_legendre, Grid, Manifold, ManifoldKind, Point};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("no sample at rule center {index} ({coords:?})")]
    MissingSample { index: usize, coords: Vec<f64> },
    #[error("expected {expected} samples, got {found}")]
    SampleCount { expected: usize, found: usize },
    #[error("coefficient count {0} is not a full set of levels")]
    RaggedCoefficients(usize),
    #[error("spectral vectors live on different manifolds")]
    MixedManifold,
    #[error("point is on the {found}, expected the {expected}")]
    WrongManifold {
        expected: &'static str,
        found: &'static str,
    },
}

/// `s(u) = exp(-1/u)` for `u > 0`, zero otherwise.
fn smooth_ramp(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth step from 0 (at `u ≤ 0`) to 1 (at `u ≥ 1`).
fn smooth_step(u: f64) -> f64 {
    let a = smooth_ramp(u);
    let b = smooth_ramp(1.0 - u);
    a / (a + b)
}

/// The fixed `C^∞` low-pass cutoff `h` and its dyadic differences.
///
/// `h(t) = 1` for `|t| ≤ 1/2`, `h(t) = 0` for `|t| ≥ 1`, and
/// `h(t) = χ(2(1 - |t|))` in between, with `χ` the standard smooth step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    /// Smoothness order `S` used in localization bounds (must exceed α).
    pub smoothness: u32,
    /// `k*`, the dyadic depth of `g̃`.
    pub k_star: u32,
}

impl Default for CutoffFunction {
    fn default() -> Self {
        Self {
            smoothness: 4,
            k_star: 2,
        }
    }
}

impl CutoffFunction {
    pub fn h(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= 0.5 {
            1.0
        } else if a >= 1.0 {
            0.0
        } else {
            smooth_step(2.0 * (1.0 - a))
        }
    }

    /// `g(t) = h(t) - h(2t)`, supported in `1/4 < |t| < 1`.
    pub fn g(&self, t: f64) -> f64 {
        self.h(t) - self.h(2.0 * t)
    }

    /// `g̃(t) = h(t) - h(2^{k*+1} t)`.
    pub fn g_tilde(&self, t: f64) -> f64 {
        self.h(t) - self.h(2f64.powi(self.k_star as i32 + 1) * t)
    }

    pub fn component(&self, kind: CutoffKind) -> Cutoff {
        Cutoff {
            function: *self,
            kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffKind {
    H,
    G,
    GTilde,
}

/// A compactly supported multiplier `H`, applied as `H(ℓ_j / L)`.
pub trait Filter: Sync {
    fn value(&self, t: f64) -> f64;
    /// `H(t) = 0` for `|t| ≥ support`.
    fn support(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    pub function: CutoffFunction,
    pub kind: CutoffKind,
}

impl Filter for Cutoff {
    fn value(&self, t: f64) -> f64 {
        match self.kind {
            CutoffKind::H => self.function.h(t),
            CutoffKind::G => self.function.g(t),
            CutoffKind::GTilde => self.function.g_tilde(t),
        }
    }

    fn support(&self) -> f64 {
        1.0
    }
}

/// Pointwise product of a filter with the dilated mask `b_L(t) = b(L t)`.
pub struct MaskedFilter<'a, F: Filter> {
    pub filter: &'a F,
    pub mask: &'a Mask,
    pub scale: f64,
}

impl<F: Filter> Filter for MaskedFilter<'_, F> {
    fn value(&self, t: f64) -> f64 {
        self.filter.value(t) * self.mask.eval(self.scale * t)
    }

    fn support(&self) -> f64 {
        self.filter.support()
    }
}

/// Slowly varying factor `F_b` of a mask.
#[derive(Clone)]
pub enum MaskShape {
    Constant(f64),
    /// `F_b` with its limit at `-∞` (which defines `b(0)`) and a bound on `|F_b|`.
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        limit: f64,
        sup: f64,
    },
}

impl fmt::Debug for MaskShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskShape::Constant(c) => write!(f, "Constant({c})"),
            MaskShape::Custom { limit, sup, .. } => {
                write!(f, "Custom {{ limit: {limit}, sup: {sup} }}")
            }
        }
    }
}

/// A mask of type β: `b(t) = (1 + |t|)^{-β} F_b(log |t|)`.
#[derive(Debug, Clone)]
pub struct Mask {
    pub beta: f64,
    pub shape: MaskShape,
}

impl Mask {
    /// `b(t) = (1 + |t|)^{-β}`.
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            shape: MaskShape::Constant(1.0),
        }
    }

    pub fn with_shape<F>(beta: f64, f: F, limit: f64, sup: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            beta,
            shape: MaskShape::Custom {
                f: Arc::new(f),
                limit,
                sup,
            },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        let factor = match &self.shape {
            MaskShape::Constant(c) => *c,
            MaskShape::Custom { f, limit, .. } => {
                if a == 0.0 {
                    *limit
                } else {
                    f(a.ln())
                }
            }
        };
        (1.0 + a).powf(-self.beta) * factor
    }

    /// Upper bound on `|F_b|`.
    pub fn shape_bound(&self) -> f64 {
        match &self.shape {
            MaskShape::Constant(c) => c.abs(),
            MaskShape::Custom { sup, .. } => *sup,
        }
    }

    /// `b_r(t) = (1 + |t|)^r b(t)`, a mask of type `β - r`.
    pub fn raised(&self, r: f64) -> Mask {
        Mask {
            beta: self.beta - r,
            shape: self.shape.clone(),
        }
    }
}

/// Points per parallel work unit in [`SpectralVector::analyze`]; fixed so
/// that summation order, and hence every bit of the result, is reproducible.
const ANALYZE_CHUNK: usize = 256;

/// Finitely many coefficients `⟨f, φ_j⟩`, indexed by eigen index, covering
/// every index up to a whole level.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    manifold: Manifold,
    coeffs: Vec<f64>,
}

impl SpectralVector {
    pub fn zeros(kind: ManifoldKind, level: usize) -> Self {
        let manifold = Manifold::new(kind, level);
        Self {
            coeffs: vec![0.0; manifold.basis_len(level)],
            manifold,
        }
    }

    /// Coefficients in eigen-index order; the count must fill whole levels.
    pub fn from_coeffs(kind: ManifoldKind, coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        let n = coeffs.len();
        if n == 0 {
            return Err(SpectralError::RaggedCoefficients(0));
        }
        let probe = Manifold::new(kind, 0);
        let level = probe.level_of(n - 1);
        if probe.basis_len(level) != n {
            return Err(SpectralError::RaggedCoefficients(n));
        }
        Ok(Self {
            manifold: Manifold::new(kind, level),
            coeffs,
        })
    }

    /// Builds coefficients from a per-index generator `(j, level) -> c_j`.
    pub fn from_fn(kind: ManifoldKind, level: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let manifold = Manifold::new(kind, level);
        let coeffs = (0..manifold.basis_len(level))
            .map(|j| f(j, manifold.level_of(j)))
            .collect();
        Self { manifold, coeffs }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.manifold.kind
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn max_level(&self) -> usize {
        self.manifold.max_level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn level_of(&self, j: usize) -> usize {
        self.manifold.level_of(j)
    }

    /// Largest level carrying a nonzero coefficient (0 for the zero vector).
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .map(|j| self.manifold.level_of(j))
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Zero-padded or truncated copy with maximum level `level`.
    pub fn resized(&self, level: usize) -> Self {
        let manifold = Manifold::new(self.manifold.kind, level);
        let n = manifold.basis_len(level);
        let mut coeffs = vec![0.0; n];
        let m = n.min(self.coeffs.len());
        coeffs[..m].copy_from_slice(&self.coeffs[..m]);
        Self { manifold, coeffs }
    }

    /// Multiplies coefficient `j` by `factor(ℓ_j)`.
    pub fn map_levels(&self, mut factor: impl FnMut(usize) -> f64) -> Self {
        let cache: Vec<f64> = (0..=self.max_level()).map(&mut factor).collect();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| c * cache[self.manifold.level_of(j)])
            .collect();
        Self {
            manifold: self.manifold,
            coeffs,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpectralError> {
        if self.kind() != other.kind() {
            return Err(SpectralError::MixedManifold);
        }
        let level = self.max_level().max(other.max_level());
        let mut out = self.resized(level);
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            manifold: self.manifold,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `Σ_j c_j φ_j(x)`.
    pub fn synth_eval(&self, x: &Point) -> Result<f64, SpectralError> {
        if x.kind() != self.kind() {
            return Err(SpectralError::WrongManifold {
                expected: self.kind().name(),
                found: x.kind().name(),
            });
        }
        let level = self.degree();
        let vals = self.manifold.basis_values(x, level);
        Ok(vals.iter().zip(&self.coeffs).map(|(v, c)| v * c).sum())
    }

    /// Evaluates at many points (same manifold assumed). On the sphere,
    /// consecutive points sharing a colatitude reuse one Legendre sweep.
    pub fn synth_many(&self, points: &[Point]) -> Vec<f64> {
        if self.kind() == ManifoldKind::Sphere {
            return self.synth_rings(points);
        }
        let level = self.degree();
        let n = self.manifold.basis_len(level);
        let coeffs = &self.coeffs[..n];
        let m = self.manifold;
        points
            .par_iter()
            .map_init(
                || vec![0.0; n],
                |buf, x| {
                    m.fill_basis(x, level, buf);
                    buf.iter().zip(coeffs).map(|(v, c)| v * c).sum()
                },
            )
            .collect()
    }

    fn synth_rings(&self, points: &[Point]) -> Vec<f64> {
        let level = self.degree();
        let n = self.manifold.basis_len(level);
        let c = &self.coeffs[..n];
        let colat = |p: &Point| match *p {
            Point::Sphere { colat, .. } => colat,
            _ => f64::NAN,
        };
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=points.len() {
            if i == points.len() || colat(&points[i]) != colat(&points[start]) {
                runs.push(start..i);
                start = i;
            }
        }
        let rings: Vec<Vec<f64>> = runs
            .into_par_iter()
            .map_init(
                || (vec![0.0; n], vec![0.0; level + 1], vec![0.0; level + 1]),
                |(leg, cos_part, sin_part), run| {
                    fill_sphere_legendre(colat(&points[run.start]), level, leg);
                    for m in 0..=level {
                        let (mut a, mut b) = (0.0, 0.0);
                        for l in m..=level {
                            let base = l * l + l;
                            a += c[base + m] * leg[base + m];
                            if m > 0 {
                                b += c[base - m] * leg[base + m];
                            }
                        }
                        cos_part[m] = a;
                        sin_part[m] = b;
                    }
                    points[run]
                        .iter()
                        .map(|p| {
                            let lon = match *p {
                                Point::Sphere { lon, .. } => lon,
                                _ => f64::NAN,
                            };
                            let (s1, c1) = lon.sin_cos();
                            let (mut sm, mut cm) = (s1, c1);
                            let mut tail = 0.0;
                            for m in 1..=level {
                                if m % 64 == 0 {
                                    (sm, cm) = (m as f64 * lon).sin_cos();
                                }
                                tail += cos_part[m] * cm + sin_part[m] * sm;
                                let cn = cm * c1 - sm * s1;
                                sm = sm * c1 + cm * s1;
                                cm = cn;
                            }
                            cos_part[0] + SQRT_2 * tail
                        })
                        .collect()
                },
            )
            .collect();
        rings.concat()
    }

    /// Projection `Σ_i w_i f(x_i) φ_j(x_i)` for all `ℓ_j ≤ level`.
    pub fn analyze(kind: ManifoldKind, level: usize, grid: &Grid, values: &[f64]) -> Self {
        let m = Manifold::new(kind, level);
        let n = m.basis_len(level);
        let partials: Vec<Vec<f64>> = grid
            .points
            .par_chunks(ANALYZE_CHUNK)
            .zip(grid.weights.par_chunks(ANALYZE_CHUNK))
            .zip(values.par_chunks(ANALYZE_CHUNK))
            .map(|((xs, ws), fs)| {
                let mut acc = vec![0.0; n];
                let mut buf = vec![0.0; n];
                for ((x, w), f) in xs.iter().zip(ws).zip(fs) {
                    m.fill_basis(x, level, &mut buf);
                    let s = w * f;
                    for (a, v) in acc.iter_mut().zip(&buf) {
                        *a += s * v;
                    }
                }
                acc
            })
            .collect();
        let mut coeffs = vec![0.0; n];
        for part in &partials {
            for (c, p) in coeffs.iter_mut().zip(part) {
                *c += p;
            }
        }
        Self {
            manifold: m,
            coeffs,
        }
    }
}

/// `Φ_L(H; x, y) = Σ_j H(ℓ_j / L) φ_j(x) φ_j(y)`, as a finite zonal sum.
pub fn phi_kernel_eval(
    manifold: &Manifold,
    filter: &impl Filter,
    l: f64,
    x: &Point,
    y: &Point,
) -> Result<f64, crate::manifold::ManifoldError> {
    let rho = manifold.geodesic_distance(x, y)?;
    Ok(phi_kernel_at_distance(manifold, filter, l, rho))
}

/// `Φ_L(H; x, y)` as a function of `ρ(x, y)`.
pub fn phi_kernel_at_distance(manifold: &Manifold, filter: &impl Filter, l: f64, rho: f64) -> f64 {
    let coeffs = filter_level_values(filter, l);
    manifold.zonal_sum(&coeffs, rho)
}

/// `H(ℓ / L)` for every level `ℓ` inside the support.
pub fn filter_level_values(filter: &impl Filter, l: f64) -> Vec<f64> {
    let top = (l * filter.support()).ceil().max(0.0) as usize;
    (0..=top).map(|lev| filter.value(lev as f64 / l)).collect()
}

/// `σ_L(H; f)`: coefficient `j` multiplied by `H(ℓ_j / L)`, truncated to the
/// filter support.
pub fn sigma_continuous(f: &SpectralVector, l: f64, filter: &impl Filter) -> SpectralVector {
    let top = ((l * filter.support()).ceil() as usize).min(f.max_level());
    f.resized(top).map_levels(|lev| filter.value(lev as f64 / l))
}

/// Function values attached to points, looked up by canonical coordinates.
#[derive(Debug, Clone, Default)]
pub struct Samples {
    values: HashMap<(u64, u64), f64>,
}

impl Samples {
    pub fn new(points: &[Point], values: &[f64]) -> Self {
        Self {
            values: points
                .iter()
                .zip(values)
                .map(|(p, &v)| (coord_key(p), v))
                .collect(),
        }
    }

    pub fn from_fn(points: &[Point], f: impl Fn(&Point) -> f64) -> Self {
        let vals: Vec<f64> = points.iter().map(f).collect();
        Self::new(points, &vals)
    }

    pub fn get(&self, p: &Point) -> Option<f64> {
        self.values.get(&coord_key(p)).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values aligned to `points`, or the first missing index.
    pub fn aligned(&self, points: &[Point]) -> Result<Vec<f64>, SpectralError> {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                self.get(p).ok_or_else(|| SpectralError::MissingSample {
                    index: i,
                    coords: p.coords(),
                })
            })
            .collect()
    }
}

/// `σ_L(C; W; f)`: inner products discretized by the rule, then filtered.
pub fn sigma_discrete(
    samples: &Samples,
    rule: &QuadratureRule,
    l: f64,
    filter: &impl Filter,
) -> Result<SpectralVector, SpectralError> {
    let values = rule_aligned(samples, rule)?;
    let top = (l * filter.support()).ceil().max(0.0) as usize;
    let grid = Grid {
        points: rule.centers.points().to_vec(),
        weights: rule.weights.clone(),
    };
    let raw = SpectralVector::analyze(rule.centers.kind(), top, &grid, &values);
    Ok(raw.map_levels(|lev| filter.value(lev as f64 / l)))
}

fn rule_aligned(samples: &Samples, rule: &QuadratureRule) -> Result<Vec<f64>, SpectralError> {
    samples.aligned(rule.centers.points())
}

/// `(Δ*)^r f`: coefficient `j` multiplied by `(1 + ℓ_j)^r`.
pub fn delta_star(f: &SpectralVector, r: f64) -> SpectralVector {
    f.map_levels(|lev| (1.0 + lev as f64).powf(r))
}

/// `D_G f`: coefficient `j` divided by `b(ℓ_j)`.
pub fn dg_apply(f: &SpectralVector, mask: &Mask) -> SpectralVector {
    f.map_levels(|lev| 1.0 / mask.eval(lev as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    Inf,
}

impl Norm {
    /// Conjugate-exponent reciprocal `1/p'`.
    pub fn dual_reciprocal(self) -> f64 {
        match self {
            Norm::L1 => 0.0,
            Norm::L2 => 0.5,
            Norm::Inf => 1.0,
        }
    }

    pub fn reciprocal(self) -> f64 {
        1.0 - self.dual_reciprocal()
    }

    pub fn of_vector(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" => Ok(Norm::L1),
            "2" => Ok(Norm::L2),
            "inf" | "∞" => Ok(Norm::Inf),
            other => Err(format!("unsupported norm `{other}` (use 1, 2, inf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Number of grid points used; zero when the value is exact.
    pub grid_points: usize,
}

/// `‖f‖_{L^p(μ)}`. `p = 2` is exact (Parseval); `p = 1` uses the dense grid
/// quadrature; `p = ∞` is the dense-grid maximum, a lower bound.
pub fn lp_norm(f: &SpectralVector, p: Norm) -> NormEstimate {
    if p == Norm::L2 {
        return NormEstimate {
            value: f.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt(),
            grid_points: 0,
        };
    }
    let grid = f.manifold.dense_grid(f.degree());
    let vals = f.synth_many(&grid.points);
    NormEstimate {
        value: lp_norm_samples(&vals, &grid.weights, p),
        grid_points: grid.len(),
    }
}

/// Discrete `L^p` norm of sampled values against quadrature weights.
pub fn lp_norm_samples(values: &[f64], weights: &[f64], p: Norm) -> f64 {
    match p {
        Norm::L1 => values.iter().zip(weights).map(|(v, w)| w * v.abs()).sum(),
        Norm::L2 => values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt(),
        Norm::Inf => values.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn h() -> Cutoff {
        CutoffFunction::default().component(CutoffKind::H)
    }

    #[test]
    fn ring_synthesis_matches_pointwise() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let m = Manifold::sphere(12);
        let f = SpectralVector::from_fn(ManifoldKind::Sphere, 12, |j, _| ((j * 7 % 11) as f64 - 5.0) / 3.0);
        let mut pts = m.dense_grid(6).points;
        pts.extend((0..40).map(|_| m.random_point(&mut rng)));
        for (p, v) in pts.iter().zip(f.synth_many(&pts)) {
            assert!((f.synth_eval(p).unwrap() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cutoff_shape() {
        let c = CutoffFunction::default();
        assert_eq!(c.h(0.0), 1.0);
        assert_eq!(c.h(0.5), 1.0);
        assert_eq!(c.h(-0.5), 1.0);
        assert_eq!(c.h(1.0), 0.0);
        assert_eq!(c.h(3.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let v = c.h(t);
            assert!(v <= prev + 1e-16);
            assert_eq!(v, c.h(-t));
            prev = v;
        }
    }

    #[test]
    fn g_support_and_g_tilde_plateau() {
        let c = CutoffFunction::default();
        for i in 0..=2000 {
            let t = i as f64 / 1000.0;
            if t <= 0.25 || t >= 1.0 {
                assert_eq!(c.g(t), 0.0, "t={t}");
            }
            if (0.125..=0.5).contains(&t) {
                assert_eq!(c.g_tilde(t), 1.0, "t={t}");
            }
            assert!(c.g_tilde(t) >= 0.0);
        }
    }

    #[test]
    fn phi_kernel_small_cases() {
        let m = Manifold::circle(8);
        let hf = h();
        for &(a, b) in &[(0.0, 0.0), (0.3, 2.0), (1.0, 5.5)] {
            let x = Point::circle(a);
            let y = Point::circle(b);
            assert!((phi_kernel_eval(&m, &hf, 1.0, &x, &y).unwrap() - 1.0).abs() < 1e-15);
            let expect = 1.0 + 2.0 * (a - b).cos();
            assert!((phi_kernel_eval(&m, &hf, 2.0, &x, &y).unwrap() - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn sigma_keeps_low_and_kills_high() {
        let f = SpectralVector::from_fn(ManifoldKind::Circle, 10, |j, _| 1.0 + j as f64);
        let s = sigma_continuous(&f, 8.0, &h());
        for j in 0..f.manifold.basis_len(4) {
            assert_eq!(s.coeffs()[j], f.coeffs()[j]);
        }
        assert_eq!(s.max_level(), 8);
        assert_eq!(s.coeffs()[15], 0.0);
        assert_eq!(s.coeffs()[16], 0.0);
    }

    #[test]
    fn delta_star_and_dg() {
        let f = SpectralVector::from_fn(ManifoldKind::Circle, 3, |_, _| 1.0);
        assert_eq!(delta_star(&f, 0.0), f);
        let d = delta_star(&f, 2.0);
        assert_eq!(d.coeffs()[0], 1.0);
        assert_eq!(d.coeffs()[1], 4.0);
        let mask = Mask::new(4.0);
        let g = dg_apply(&f, &mask);
        assert_eq!(g.coeffs()[0], 1.0);
        assert!((g.coeffs()[2] - 16.0).abs() < 1e-12);
        let back = g.map_levels(|l| mask.eval(l as f64));
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn synth_examples() {
        let mut f = SpectralVector::zeros(ManifoldKind::Circle, 2);
        f.coeffs_mut()[0] = 1.0;
        assert_eq!(f.synth_eval(&Point::circle(2.2)).unwrap(), 1.0);
        f.coeffs_mut()[1] = 1.0;
        assert!((f.synth_eval(&Point::circle(0.0)).unwrap() - (1.0 + SQRT_2)).abs() < 1e-15);
    }

    #[test]
    fn analyze_synth_round_trip() {
        for kind in [ManifoldKind::Circle, ManifoldKind::Sphere] {
            let f = SpectralVector::from_fn(kind, 6, |j, l| ((j * 7 % 5) as f64 - 2.0) / (1.0 + l as f64));
            let m = Manifold::new(kind, 6);
            let grid = m.reference_grid(6);
            let vals = f.synth_many(&grid.points);
            let g = SpectralVector::analyze(kind, 6, &grid, &vals);
            for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
                assert!((a - b).abs() < 1e-10);
            }
            let again = g.synth_many(&grid.points);
            for (a, b) in vals.iter().zip(&again) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn norms_of_basis_functions() {
        let mut one = SpectralVector::zeros(ManifoldKind::Circle, 1);
        one.coeffs_mut()[0] = 1.0;
        for p in [Norm::L1, Norm::L2, Norm::Inf] {
            assert!((lp_norm(&one, p).value - 1.0).abs() < 1e-12);
        }
        let mut c = SpectralVector::zeros(ManifoldKind::Circle, 1);
        c.coeffs_mut()[1] = 1.0;
        assert!((lp_norm(&c, Norm::L2).value - 1.0).abs() < 1e-15);
        assert!((lp_norm(&c, Norm::Inf).value - SQRT_2).abs() < 1e-12);
        // ‖√2 cos‖₁ = 2√2/π
        assert!((lp_norm(&c, Norm::L1).value - 2.0 * SQRT_2 / PI).abs() < 1e-4);
    }

    #[test]
    fn sigma_discrete_examples() {
        let m = Manifold::circle(40);
        let grid = m.reference_grid(12);
        let rule = QuadratureRule::from_grid(ManifoldKind::Circle, &grid, 24.0);
        let p = SpectralVector::from_fn(ManifoldKind::Circle, 4, |j, _| (j as f64).sin());
        let samples = Samples::new(&grid.points, &p.synth_many(&grid.points));
        let s = sigma_discrete(&samples, &rule, 8.0, &h()).unwrap();
        for j in 0..s.coeffs().len() {
            let expect = p.coeffs().get(j).copied().unwrap_or(0.0);
            assert!((s.coeffs()[j] - expect).abs() < 1e-9);
        }
        let ones = Samples::from_fn(&grid.points, |_| 1.0);
        let s = sigma_discrete(&ones, &rule, 8.0, &h()).unwrap();
        assert!((s.coeffs()[0] - 1.0).abs() < 1e-14);
        assert!(s.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
        let partial = Samples::new(&grid.points[1..], &vec![0.0; grid.len() - 1]);
        assert!(matches!(
            sigma_discrete(&partial, &rule, 8.0, &h()),
            Err(SpectralError::MissingSample { index: 0, .. })
        ));
    }

    #[test]
    fn mask_basics() {
        let b = Mask::new(4.0);
        assert_eq!(b.eval(0.0), 1.0);
        assert!((b.eval(1.0) - 1.0 / 16.0).abs() < 1e-16);
        let mut prev = 2.0;
        for i in 0..100 {
            let v = b.eval(i as f64 * 0.37);
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
        let r = b.raised(1.0);
        assert!((r.eval(3.0) - 4.0 * b.eval(3.0)).abs() < 1e-16);
    }

    #[test]
    fn ragged_coefficients_rejected() {
        assert!(SpectralVector::from_coeffs(ManifoldKind::Circle, vec![1.0, 2.0]).is_err());
        assert!(SpectralVector::from_coeffs(ManifoldKind::Sphere, vec![1.0; 4]).is_ok());
    }
}
