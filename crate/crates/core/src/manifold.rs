//! Concrete compact manifolds: the unit circle S¹ and the unit sphere S².
//!
//! Each model supplies the geodesic distance, the normalized (probability)
//! volume measure of geodesic balls, an orthonormal eigenbasis enumerated
//! level-major, and exact product quadrature grids used as integration
//! oracles throughout the crate.
//!
//! Eigen index enumeration:
//!
//! * circle: `0 -> 1`, `2k-1 -> √2 cos kθ`, `2k -> √2 sin kθ`, level `k`;
//! * sphere: `(l, m)` lexicographic with `m = -l..=l`, index `l² + l + m`,
//!   level `l`. Real harmonics are normalized against `dσ / 4π`.

use std::f64::consts::{PI, SQRT_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("points live on different manifolds ({0} vs {1})")]
    MixedManifold(&'static str, &'static str),
    #[error("point is on the {found}, expected the {expected}")]
    WrongManifold {
        expected: &'static str,
        found: &'static str,
    },
    #[error("ball radius must be nonnegative, got {0}")]
    NegativeRadius(f64),
    #[error("eigen index {index} exceeds configured maximum {max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("heat kernel time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("unknown manifold name `{0}` (expected `circle` or `sphere`)")]
    UnknownName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Circle,
    Sphere,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Circle => "circle",
            ManifoldKind::Sphere => "sphere",
        }
    }
}

impl std::str::FromStr for ManifoldKind {
    type Err = ManifoldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "circle" => Ok(ManifoldKind::Circle),
            "sphere" => Ok(ManifoldKind::Sphere),
            other => Err(ManifoldError::UnknownName(other.to_string())),
        }
    }
}

/// A point in intrinsic coordinates, normalized into canonical ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Circle { theta: f64 },
    Sphere { colat: f64, lon: f64 },
}

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl Point {
    pub fn circle(theta: f64) -> Self {
        Point::Circle {
            theta: wrap_angle(theta),
        }
    }

    /// Colatitude outside `[0, π]` is reflected through the pole. At the
    /// poles the longitude is canonicalized to zero.
    pub fn sphere(colat: f64, lon: f64) -> Self {
        let mut c = colat.rem_euclid(TAU);
        let mut l = lon;
        if c > PI {
            c = TAU - c;
            l += PI;
        }
        if c == 0.0 || c == PI {
            l = 0.0;
        }
        Point::Sphere {
            colat: c,
            lon: wrap_angle(l),
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        match self {
            Point::Circle { .. } => ManifoldKind::Circle,
            Point::Sphere { .. } => ManifoldKind::Sphere,
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        match *self {
            Point::Circle { theta } => vec![theta],
            Point::Sphere { colat, lon } => vec![colat, lon],
        }
    }

    pub fn from_coords(kind: ManifoldKind, coords: &[f64]) -> Option<Self> {
        match (kind, coords) {
            (ManifoldKind::Circle, [t]) => Some(Point::circle(*t)),
            (ManifoldKind::Sphere, [c, l]) => Some(Point::sphere(*c, *l)),
            _ => None,
        }
    }

    pub(crate) fn unit_vector(colat: f64, lon: f64) -> [f64; 3] {
        let (st, ct) = colat.sin_cos();
        let (sp, cp) = lon.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Geodesic distance without the manifold check. Both points must be of the
/// same kind; mismatches return `NaN`.
pub(crate) fn raw_distance(x: &Point, y: &Point) -> f64 {
    match (*x, *y) {
        (Point::Circle { theta: a }, Point::Circle { theta: b }) => {
            let d = (a - b).abs();
            d.min(TAU - d)
        }
        (Point::Sphere { colat: c1, lon: l1 }, Point::Sphere { colat: c2, lon: l2 }) => {
            // atan2 form stays accurate for both tiny and antipodal separations.
            let u = Point::unit_vector(c1, l1);
            let v = Point::unit_vector(c2, l2);
            let cross = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
            let c = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            s.atan2(c)
        }
        _ => f64::NAN,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (weights sum to 2), nodes
/// in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of a quadrature rule on a manifold.
#[derive(Debug, Clone)]
pub struct Grid {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A concrete manifold model with a configured maximum eigen level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Manifold {
    pub kind: ManifoldKind,
    pub max_level: usize,
}

impl Manifold {
    pub fn new(kind: ManifoldKind, max_level: usize) -> Self {
        Self { kind, max_level }
    }

    pub fn circle(max_level: usize) -> Self {
        Self::new(ManifoldKind::Circle, max_level)
    }

    pub fn sphere(max_level: usize) -> Self {
        Self::new(ManifoldKind::Sphere, max_level)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Ball-measure exponent: `μ(B(x,r)) ~ r^α`.
    pub fn alpha(&self) -> f64 {
        match self.kind {
            ManifoldKind::Circle => 1.0,
            ManifoldKind::Sphere => 2.0,
        }
    }

    /// Constant `A` of the product assumption: `Π_L · Π_L ⊆ Π_{AL}`.
    pub fn product_factor(&self) -> f64 {
        2.0
    }

    /// Product-assumption defect `ε_L`; zero for both models.
    pub fn product_defect(&self, _level: f64) -> f64 {
        0.0
    }

    pub fn diameter(&self) -> f64 {
        PI
    }

    fn check(&self, x: &Point) -> Result<(), ManifoldError> {
        if x.kind() != self.kind {
            return Err(ManifoldError::WrongManifold {
                expected: self.name(),
                found: x.kind().name(),
            });
        }
        Ok(())
    }

    pub fn geodesic_distance(&self, x: &Point, y: &Point) -> Result<f64, ManifoldError> {
        if x.kind() != y.kind() {
            return Err(ManifoldError::MixedManifold(x.kind().name(), y.kind().name()));
        }
        self.check(x)?;
        Ok(raw_distance(x, y))
    }

    /// `μ(B(x, r))` for the normalized volume measure.
    pub fn ball_measure(&self, x: &Point, r: f64) -> Result<f64, ManifoldError> {
        self.check(x)?;
        if r < 0.0 || r.is_nan() {
            return Err(ManifoldError::NegativeRadius(r));
        }
        Ok(self.ball_measure_radius(r))
    }

    pub(crate) fn ball_measure_radius(&self, r: f64) -> f64 {
        match self.kind {
            ManifoldKind::Circle => (r / PI).min(1.0),
            ManifoldKind::Sphere => (1.0 - r.min(PI).cos()) / 2.0,
        }
    }

    /// Number of eigen indices with level `≤ level`.
    pub fn basis_len(&self, level: usize) -> usize {
        match self.kind {
            ManifoldKind::Circle => 2 * level + 1,
            ManifoldKind::Sphere => (level + 1) * (level + 1),
        }
    }

    /// Number of eigen indices with level `≤ t` for real `t` (zero if `t < 0`).
    pub fn count_up_to(&self, t: f64) -> usize {
        if t < 0.0 {
            0
        } else {
            self.basis_len(t.floor() as usize)
        }
    }

    pub fn level_of(&self, j: usize) -> usize {
        match self.kind {
            ManifoldKind::Circle => j.div_ceil(2),
            ManifoldKind::Sphere => {
                let mut l = (j as f64).sqrt() as usize;
                while (l + 1) * (l + 1) <= j {
                    l += 1;
                }
                while l * l > j {
                    l -= 1;
                }
                l
            }
        }
    }

    /// Multiplicity of eigen level `l`.
    pub fn level_dim(&self, l: usize) -> usize {
        match self.kind {
            ManifoldKind::Circle => {
                if l == 0 {
                    1
                } else {
                    2
                }
            }
            ManifoldKind::Sphere => 2 * l + 1,
        }
    }

    /// Largest eigen level strictly below `t`; `None` if `t ≤ 0`.
    pub fn top_level_below(&self, t: f64) -> Option<usize> {
        if t <= 0.0 {
            None
        } else {
            Some((t.ceil() as usize).saturating_sub(1))
        }
    }

    pub fn basis_eval(&self, j: usize, x: &Point) -> Result<f64, ManifoldError> {
        self.check(x)?;
        let max = self.basis_len(self.max_level) - 1;
        if j > max {
            return Err(ManifoldError::IndexOutOfRange { index: j, max });
        }
        let level = self.level_of(j);
        let mut buf = vec![0.0; self.basis_len(level)];
        self.fill_basis(x, level, &mut buf);
        Ok(buf[j])
    }

    /// All basis values `φ_j(x)` with `ℓ_j ≤ level`, written into `out`
    /// (which must hold at least `basis_len(level)` entries). The point must
    /// belong to this manifold.
    pub fn fill_basis(&self, x: &Point, level: usize, out: &mut [f64]) {
        match *x {
            Point::Circle { theta } => {
                out[0] = 1.0;
                if level == 0 {
                    return;
                }
                let (s1, c1) = theta.sin_cos();
                let (mut s, mut c) = (s1, c1);
                for k in 1..=level {
                    // Re-seed periodically so the rotation recurrence stays at
                    // round-off level for high degrees.
                    if k % 64 == 0 {
                        let (sk, ck) = (k as f64 * theta).sin_cos();
                        s = sk;
                        c = ck;
                    }
                    out[2 * k - 1] = SQRT_2 * c;
                    out[2 * k] = SQRT_2 * s;
                    let cn = c * c1 - s * s1;
                    s = s * c1 + c * s1;
                    c = cn;
                }
            }
            Point::Sphere { colat, lon } => fill_sphere_harmonics(colat, lon, level, out),
        }
    }

    pub fn basis_values(&self, x: &Point, level: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.basis_len(level)];
        self.fill_basis(x, level, &mut out);
        out
    }

    /// `Σ_{ℓ_j ≤ L} φ_j(x)²`.
    pub fn christoffel_sum(&self, x: &Point, level: f64) -> Result<f64, ManifoldError> {
        self.check(x)?;
        if level < 0.0 {
            return Ok(0.0);
        }
        let l = level.floor() as usize;
        Ok(self.basis_values(x, l).iter().map(|v| v * v).sum())
    }

    /// `Σ_ℓ c_ℓ Z_ℓ(ρ)` where `Z_ℓ(ρ(x,y)) = Σ_{ℓ_j = ℓ} φ_j(x) φ_j(y)` is the
    /// reproducing kernel of level `ℓ` (addition theorem).
    pub fn zonal_sum(&self, level_coeffs: &[f64], rho: f64) -> f64 {
        if level_coeffs.is_empty() {
            return 0.0;
        }
        match self.kind {
            ManifoldKind::Circle => {
                let mut acc = level_coeffs[0];
                let (s1, c1) = rho.sin_cos();
                let (mut s, mut c) = (s1, c1);
                for (k, &coef) in level_coeffs.iter().enumerate().skip(1) {
                    if k % 64 == 0 {
                        let (sk, ck) = (k as f64 * rho).sin_cos();
                        s = sk;
                        c = ck;
                    }
                    acc += 2.0 * coef * c;
                    let cn = c * c1 - s * s1;
                    s = s * c1 + c * s1;
                    c = cn;
                }
                acc
            }
            ManifoldKind::Sphere => {
                let x = rho.cos();
                let mut acc = level_coeffs[0];
                let (mut p0, mut p1) = (1.0, x);
                for (l, &coef) in level_coeffs.iter().enumerate().skip(1) {
                    if l >= 2 {
                        let lf = l as f64;
                        let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
                        p0 = p1;
                        p1 = p2;
                    }
                    acc += coef * (2.0 * l as f64 + 1.0) * p1;
                }
                acc
            }
        }
    }

    /// Truncated heat kernel `Σ exp(-ℓ_j² t) φ_j(x) φ_j(y)`, summed until the
    /// level factor drops below `1e-16` or the level reaches
    /// `min(trunc, max_level)`.
    pub fn heat_kernel(
        &self,
        x: &Point,
        y: &Point,
        t: f64,
        trunc: usize,
    ) -> Result<f64, ManifoldError> {
        if t <= 0.0 || t.is_nan() {
            return Err(ManifoldError::NonPositiveTime(t));
        }
        let rho = self.geodesic_distance(x, y)?;
        let cap = trunc.min(self.max_level);
        let mut coeffs = Vec::new();
        for l in 0..=cap {
            let f = (-((l * l) as f64) * t).exp();
            if f < 1e-16 {
                break;
            }
            coeffs.push(f);
        }
        Ok(self.zonal_sum(&coeffs, rho))
    }

    /// A product rule exact for every `P₁P₂` with `P₁, P₂ ∈ Π_order`.
    ///
    /// Circle: `2·order + 1` equispaced nodes. Sphere: `order + 1`
    /// Gauss–Legendre nodes in `cos(colatitude)` times `2·order + 1`
    /// equispaced longitudes.
    pub fn reference_grid(&self, order: usize) -> Grid {
        match self.kind {
            ManifoldKind::Circle => equispaced_circle_grid(2 * order + 1),
            ManifoldKind::Sphere => sphere_product_grid(order + 1, 2 * order + 1),
        }
    }

    /// Dense evaluation grid for functions of degree `degree`: 16× the
    /// Nyquist point count, at least 1024 on the circle (on the sphere, 4× per
    /// coordinate). Also an exact
    /// quadrature for products of degree-`degree` polynomials.
    pub fn dense_grid(&self, degree: usize) -> Grid {
        match self.kind {
            ManifoldKind::Circle => equispaced_circle_grid((16 * (2 * degree + 1)).max(1024)),
            ManifoldKind::Sphere => sphere_product_grid(4 * (degree + 1), 4 * (2 * degree + 1)),
        }
    }

    /// Nominal spacing of an `n`-point quasi-uniform set.
    pub fn nominal_spacing(&self, n: usize) -> f64 {
        let n = n.max(1) as f64;
        match self.kind {
            ManifoldKind::Circle => TAU / n,
            ManifoldKind::Sphere => (4.0 * PI / n).sqrt(),
        }
    }

    /// Probe points with spacing at most `spacing` (used for sup estimates).
    pub fn probe_points(&self, spacing: f64) -> Vec<Point> {
        match self.kind {
            ManifoldKind::Circle => {
                let n = (TAU / spacing).ceil().max(1.0) as usize;
                (0..n).map(|i| Point::circle(TAU * i as f64 / n as f64)).collect()
            }
            ManifoldKind::Sphere => {
                let rings = (PI / spacing).ceil().max(1.0) as usize;
                let mut pts = vec![Point::sphere(0.0, 0.0)];
                for i in 1..rings {
                    let colat = PI * i as f64 / rings as f64;
                    let circ = TAU * colat.sin();
                    let n = (circ / spacing).ceil().max(1.0) as usize;
                    for k in 0..n {
                        pts.push(Point::sphere(colat, TAU * k as f64 / n as f64));
                    }
                }
                pts.push(Point::sphere(PI, 0.0));
                pts
            }
        }
    }

    /// A point drawn from the normalized volume measure.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self.kind {
            ManifoldKind::Circle => Point::circle(rng.random::<f64>() * TAU),
            ManifoldKind::Sphere => {
                let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
                Point::sphere(z.clamp(-1.0, 1.0).acos(), rng.random::<f64>() * TAU)
            }
        }
    }
}

fn equispaced_circle_grid(n: usize) -> Grid {
    let n = n.max(1);
    Grid {
        points: (0..n).map(|i| Point::circle(TAU * i as f64 / n as f64)).collect(),
        weights: vec![1.0 / n as f64; n],
    }
}

fn sphere_product_grid(n_colat: usize, n_lon: usize) -> Grid {
    let (nodes, gw) = gauss_legendre(n_colat.max(1));
    let n_lon = n_lon.max(1);
    let mut points = Vec::with_capacity(nodes.len() * n_lon);
    let mut weights = Vec::with_capacity(nodes.len() * n_lon);
    for (z, w) in nodes.iter().zip(&gw) {
        let colat = z.clamp(-1.0, 1.0).acos();
        for k in 0..n_lon {
            points.push(Point::sphere(colat, TAU * k as f64 / n_lon as f64));
            weights.push(w / 2.0 / n_lon as f64);
        }
    }
    Grid { points, weights }
}

/// Real spherical harmonics normalized against the probability measure, so
/// that `Σ_m Y_{l,m}(x)² = 2l + 1`.
fn fill_sphere_harmonics(colat: f64, lon: f64, level: usize, out: &mut [f64]) {
    fill_sphere_legendre(colat, level, out);
    for m in 1..=level {
        let (sm, cm) = (m as f64 * lon).sin_cos();
        for l in m..=level {
            let p = out[l * l + l + m];
            out[l * l + l + m] = SQRT_2 * p * cm;
            out[l * l + l - m] = SQRT_2 * p * sm;
        }
    }
}

/// Normalized associated Legendre values `p̄_l^m(cos colat)`, `0 ≤ m ≤ l ≤
/// level`, written at index `l² + l + m`. The `m < 0` slots are untouched.
pub(crate) fn fill_sphere_legendre(colat: f64, level: usize, out: &mut [f64]) {
    let (st, ct) = colat.sin_cos();
    let idx = |l: usize, m: usize| l * l + l + m;
    // p̄_m^m along the diagonal, then upward recurrence in l for each m.
    let mut pmm = 1.0;
    for m in 0..=level {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * st;
        }
        out[idx(m, m)] = pmm;
        if m == level {
            break;
        }
        let mf = m as f64;
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * mf + 3.0).sqrt() * ct * pmm;
        out[idx(m + 1, m)] = p_cur;
        for l in (m + 2)..=level {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let p_next = a * (ct * p_cur - b * p_prev);
            p_prev = p_cur;
            p_cur = p_next;
            out[idx(l, m)] = p_cur;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circle_distances() {
        let m = Manifold::circle(8);
        let d = m
            .geodesic_distance(&Point::circle(0.0), &Point::circle(PI / 2.0))
            .unwrap();
        assert!((d - PI / 2.0).abs() < 1e-15);
        let d = m
            .geodesic_distance(&Point::circle(0.1), &Point::circle(TAU - 0.1))
            .unwrap();
        assert!((d - 0.2).abs() < 1e-12);
    }

    #[test]
    fn sphere_pole_to_equator() {
        let m = Manifold::sphere(4);
        let d = m
            .geodesic_distance(&Point::sphere(0.0, 0.0), &Point::sphere(PI / 2.0, 1.3))
            .unwrap();
        assert!((d - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn mixed_points_rejected() {
        let m = Manifold::circle(4);
        assert!(matches!(
            m.geodesic_distance(&Point::circle(0.0), &Point::sphere(0.0, 0.0)),
            Err(ManifoldError::MixedManifold(..))
        ));
    }

    #[test]
    fn ball_measures() {
        let c = Manifold::circle(4);
        let s = Manifold::sphere(4);
        let x = Point::circle(0.3);
        assert_eq!(c.ball_measure(&x, 0.0).unwrap(), 0.0);
        assert!((c.ball_measure(&x, PI / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(c.ball_measure(&x, 10.0).unwrap(), 1.0);
        let y = Point::sphere(1.0, 2.0);
        assert!((s.ball_measure(&y, PI / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            c.ball_measure(&x, -1.0),
            Err(ManifoldError::NegativeRadius(_))
        ));
    }

    #[test]
    fn ball_measure_power_bounds() {
        // c₁ r^α ≤ μ(B(x,r)) ≤ c₂ r^α on (0, 1]
        let c = Manifold::circle(1);
        let s = Manifold::sphere(1);
        for i in 1..=100 {
            let r = i as f64 / 100.0;
            let mc = c.ball_measure_radius(r) / r;
            assert!((mc - 1.0 / PI).abs() < 1e-14);
            let ms = s.ball_measure_radius(r) / (r * r);
            assert!(ms <= 0.25 + 1e-15 && ms >= (1.0 - 1f64.cos()) / 2.0 - 1e-15);
        }
    }

    #[test]
    fn circle_basis_values() {
        let m = Manifold::circle(4);
        let x = Point::circle(0.0);
        assert_eq!(m.basis_eval(0, &Point::circle(1.234)).unwrap(), 1.0);
        assert!((m.basis_eval(1, &x).unwrap() - SQRT_2).abs() < 1e-15);
        assert!(matches!(
            m.basis_eval(9, &x),
            Err(ManifoldError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn constant_harmonic_is_one() {
        let m = Manifold::sphere(3);
        for &(c, l) in &[(0.0, 0.0), (1.0, 2.0), (PI, 0.0), (2.5, 5.5)] {
            assert_eq!(m.basis_eval(0, &Point::sphere(c, l)).unwrap(), 1.0);
        }
    }

    #[test]
    fn levels_are_monotone_and_start_at_zero() {
        for m in [Manifold::circle(20), Manifold::sphere(20)] {
            assert_eq!(m.level_of(0), 0);
            let n = m.basis_len(20);
            for j in 1..n {
                assert!(m.level_of(j) >= m.level_of(j - 1));
            }
            assert_eq!(m.level_of(n - 1), 20);
            assert_eq!(m.count_up_to(20.5), n);
        }
    }

    #[test]
    fn reference_grid_orthonormality() {
        for m in [Manifold::circle(12), Manifold::sphere(8)] {
            let order = m.max_level;
            let grid = m.reference_grid(order);
            let n = m.basis_len(order);
            let vals: Vec<Vec<f64>> = grid.points.iter().map(|p| m.basis_values(p, order)).collect();
            for j in 0..n {
                for k in 0..n {
                    let ip: f64 = vals
                        .iter()
                        .zip(&grid.weights)
                        .map(|(v, w)| w * v[j] * v[k])
                        .sum();
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-10, "{} j={j} k={k} ip={ip}", m.name());
                }
            }
        }
    }

    #[test]
    fn circle_reference_grid_shape() {
        let g = Manifold::circle(4).reference_grid(4);
        assert_eq!(g.len(), 9);
        assert!(g.weights.iter().all(|&w| (w - 1.0 / 9.0).abs() < 1e-16));
    }

    #[test]
    fn christoffel_sums() {
        let c = Manifold::circle(10);
        let s = Manifold::sphere(10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = c.random_point(&mut rng);
            assert!((c.christoffel_sum(&x, 3.0).unwrap() - 7.0).abs() < 1e-12);
            assert!((c.christoffel_sum(&x, 0.5).unwrap() - 1.0).abs() < 1e-15);
            let y = s.random_point(&mut rng);
            assert!((s.christoffel_sum(&y, 2.0).unwrap() - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_kernel_values() {
        let c = Manifold::circle(64);
        let x = Point::circle(0.4);
        assert!((c.heat_kernel(&x, &x, 100.0, 64).unwrap() - 1.0).abs() < 1e-10);
        let oracle: f64 = 1.0 + 2.0 * (1..40).map(|k| (-((k * k) as f64)).exp()).sum::<f64>();
        let v = c.heat_kernel(&x, &x, 1.0, 64).unwrap();
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 1.772637).abs() < 1e-6);
        assert!(c.heat_kernel(&x, &x, 0.0, 64).is_err());

        let grid = c.reference_grid(64);
        let integral: f64 = grid
            .points
            .iter()
            .zip(&grid.weights)
            .map(|(y, w)| w * c.heat_kernel(&x, y, 0.05, 64).unwrap())
            .sum();
        assert!((integral - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zonal_sum_matches_addition_theorem() {
        let s = Manifold::sphere(9);
        let x = Point::sphere(0.7, 1.1);
        let y = Point::sphere(2.1, 4.0);
        let rho = s.geodesic_distance(&x, &y).unwrap();
        let vx = s.basis_values(&x, 9);
        let vy = s.basis_values(&y, 9);
        for l in 0..=9 {
            let mut coeffs = vec![0.0; l + 1];
            coeffs[l] = 1.0;
            let direct: f64 = (l * l..(l + 1) * (l + 1)).map(|j| vx[j] * vy[j]).sum();
            assert!((s.zonal_sum(&coeffs, rho) - direct).abs() < 1e-11);
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(7);
        for deg in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn point_normalization() {
        let p = Point::circle(-0.5);
        assert!(matches!(p, Point::Circle { theta } if (theta - (TAU - 0.5)).abs() < 1e-15));
        let q = Point::sphere(PI + 0.2, 0.0);
        if let Point::Sphere { colat, lon } = q {
            assert!((colat - (PI - 0.2)).abs() < 1e-14);
            assert!((lon - PI).abs() < 1e-14);
        }
    }
}
