//! Kernels of type β, eignets `Σ a_y G(·, y)`, and the operators that build
//! them from polynomials, functions and samples.

pub mod dominant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PointSet;
use crate::manifold::{Manifold, ManifoldError, ManifoldKind, Point};
use crate::quadrature::QuadratureRule;
use crate::spectral::{
    dg_apply, lp_norm, sigma_continuous, sigma_discrete, CutoffFunction, CutoffKind, Filter, Mask,
    Norm, Samples, SpectralError, SpectralVector,
};

pub use dominant::{diag_dominant_solve, dominance_gamma, DominanceError, DominantSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EignetError {
    #[error("polynomial degree {degree} exceeds kernel truncation N_G = {n_g}")]
    DegreeExceedsKernel { degree: usize, n_g: usize },
    #[error("rule certified to order {certified} (residual {residual:e}) but order {required} is required")]
    UnderCertified {
        required: f64,
        certified: f64,
        residual: f64,
    },
    #[error("eignet is identically zero")]
    ZeroNet,
    #[error("{centers} centers but {coeffs} coefficients")]
    LengthMismatch { centers: usize, coeffs: usize },
    #[error("kernel lives on {kernel}, data on {data}")]
    WrongManifold {
        kernel: &'static str,
        data: &'static str,
    },
    #[error("mask of type {beta} has no summable tail on the {manifold}")]
    NotSummable { beta: f64, manifold: &'static str },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// `G(x, y) = Σ_{ℓ_j ≤ N_G} b(ℓ_j) φ_j(x) φ_j(y)`.
#[derive(Debug, Clone)]
pub struct KernelG {
    mask: Mask,
    kind: ManifoldKind,
    n_g: usize,
    level_values: Vec<f64>,
    tail_bound: f64,
}

/// Serializable description of a kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelHeader {
    pub manifold: ManifoldKind,
    pub beta: f64,
    pub n_g: usize,
    pub tail_bound: f64,
}

/// Closed-form bound on `sup_{x,y} |G(x,y) - G_N(x,y)|` for a mask of type β.
///
/// Uses `|Z_ℓ| ≤ dim(level ℓ)` and an integral comparison for the tail sum.
pub fn kernel_tail_bound(kind: ManifoldKind, mask: &Mask, n: usize) -> f64 {
    let beta = mask.beta;
    let sup = mask.shape_bound();
    let n1 = 1.0 + n as f64;
    match kind {
        ManifoldKind::Circle if beta > 1.0 => 2.0 * sup * n1.powf(1.0 - beta) / (beta - 1.0),
        ManifoldKind::Sphere if beta > 2.0 => 2.0 * sup * n1.powf(2.0 - beta) / (beta - 2.0),
        _ => f64::INFINITY,
    }
}

impl KernelG {
    pub fn new(kind: ManifoldKind, mask: Mask, n_g: usize) -> Self {
        let level_values = (0..=n_g).map(|l| mask.eval(l as f64)).collect();
        let tail_bound = kernel_tail_bound(kind, &mask, n_g);
        Self {
            mask,
            kind,
            n_g,
            level_values,
            tail_bound,
        }
    }

    /// Smallest `N_G ≤ cap` whose tail bound is at most `tol`; if none, `N_G =
    /// cap` and the achieved bound is recorded in [`KernelG::tail_bound`].
    pub fn with_tolerance(
        kind: ManifoldKind,
        mask: Mask,
        tol: f64,
        cap: usize,
    ) -> Result<Self, EignetError> {
        if kernel_tail_bound(kind, &mask, 0).is_infinite() {
            return Err(EignetError::NotSummable {
                beta: mask.beta,
                manifold: kind.name(),
            });
        }
        let (mut lo, mut hi) = (0usize, cap);
        if kernel_tail_bound(kind, &mask, cap) > tol {
            return Ok(Self::new(kind, mask, cap));
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if kernel_tail_bound(kind, &mask, mid) <= tol {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(Self::new(kind, mask, lo))
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn manifold(&self) -> Manifold {
        Manifold::new(self.kind, self.n_g)
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    /// `b(ℓ)` for `ℓ = 0..=N_G`.
    pub fn level_values(&self) -> &[f64] {
        &self.level_values
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Same truncation, mask replaced by `b_r(t) = (1+|t|)^r b(t)`.
    pub fn raised(&self, r: f64) -> Self {
        Self::new(self.kind, self.mask.raised(r), self.n_g)
    }

    pub fn header(&self) -> KernelHeader {
        KernelHeader {
            manifold: self.kind,
            beta: self.mask.beta,
            n_g: self.n_g,
            tail_bound: self.tail_bound,
        }
    }

    /// `G(x, y)` as a function of `ρ(x, y)`.
    pub fn at_distance(&self, rho: f64) -> f64 {
        self.manifold().zonal_sum(&self.level_values, rho)
    }

    pub fn eval(&self, x: &Point, y: &Point) -> Result<f64, EignetError> {
        self.check(x)?;
        let rho = self.manifold().geodesic_distance(x, y)?;
        Ok(self.at_distance(rho))
    }

    fn check(&self, x: &Point) -> Result<(), EignetError> {
        if x.kind() != self.kind {
            return Err(EignetError::WrongManifold {
                kernel: self.kind.name(),
                data: x.kind().name(),
            });
        }
        Ok(())
    }
}

pub fn kernel_g_eval(k: &KernelG, x: &Point, y: &Point) -> Result<f64, EignetError> {
    k.eval(x, y)
}

/// `Ψ = Σ_{y ∈ C} a_y G(·, y)`.
#[derive(Debug, Clone)]
pub struct Eignet {
    centers: PointSet,
    coeffs: Vec<f64>,
    kernel: KernelG,
}

/// Centers per parallel work unit in [`Eignet::to_spectral`].
const SPECTRAL_CHUNK: usize = 64;

impl Eignet {
    pub fn new(centers: PointSet, coeffs: Vec<f64>, kernel: KernelG) -> Result<Self, EignetError> {
        if centers.len() != coeffs.len() {
            return Err(EignetError::LengthMismatch {
                centers: centers.len(),
                coeffs: coeffs.len(),
            });
        }
        if centers.kind() != kernel.kind {
            return Err(EignetError::WrongManifold {
                kernel: kernel.kind.name(),
                data: centers.kind().name(),
            });
        }
        Ok(Self {
            centers,
            coeffs,
            kernel,
        })
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn kernel(&self) -> &KernelG {
        &self.kernel
    }

    /// The same centers and coefficients over another kernel.
    pub fn with_kernel(&self, kernel: KernelG) -> Result<Self, EignetError> {
        Self::new(self.centers.clone(), self.coeffs.clone(), kernel)
    }

    /// Direct sum of kernel translates.
    pub fn eval(&self, x: &Point) -> Result<f64, EignetError> {
        self.kernel.check(x)?;
        let m = self.kernel.manifold();
        Ok(self
            .centers
            .points()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &a)| a != 0.0)
            .map(|(y, a)| a * self.kernel.at_distance(m.geodesic_distance(x, y).unwrap_or(0.0)))
            .sum())
    }

    /// Values at many points, through the spectral form.
    pub fn eval_many(&self, points: &[Point]) -> Vec<f64> {
        self.to_spectral().synth_many(points)
    }

    /// `⟨Ψ, φ_j⟩ = b(ℓ_j) Σ_y a_y φ_j(y)` for `ℓ_j ≤ N_G`.
    pub fn to_spectral(&self) -> SpectralVector {
        let m = self.kernel.manifold();
        let n_g = self.kernel.n_g;
        let n = m.basis_len(n_g);
        let partials: Vec<Vec<f64>> = self
            .centers
            .points()
            .par_chunks(SPECTRAL_CHUNK)
            .zip(self.coeffs.par_chunks(SPECTRAL_CHUNK))
            .map(|(ys, amps)| {
                let mut acc = vec![0.0; n];
                let mut buf = vec![0.0; n];
                for (y, &a) in ys.iter().zip(amps) {
                    if a == 0.0 {
                        continue;
                    }
                    m.fill_basis(y, n_g, &mut buf);
                    for (s, v) in acc.iter_mut().zip(&buf) {
                        *s += a * v;
                    }
                }
                acc
            })
            .collect();
        let mut sums = vec![0.0; n];
        for part in &partials {
            for (s, p) in sums.iter_mut().zip(part) {
                *s += p;
            }
        }
        SpectralVector::from_coeffs(self.kernel.kind, sums)
            .expect("whole levels")
            .map_levels(|l| self.kernel.level_values[l])
    }

    pub fn coeff_norm(&self, p: Norm) -> f64 {
        p.of_vector(&self.coeffs)
    }
}

pub fn eval_eignet(net: &Eignet, x: &Point) -> Result<f64, EignetError> {
    net.eval(x)
}

pub fn eignet_to_spectral(net: &Eignet) -> SpectralVector {
    net.to_spectral()
}

/// `𝔾(C; W; P) = Σ_{y ∈ C} w_y (D_G P)(y) G(·, y)`.
pub fn build_eignet(p: &SpectralVector, rule: &QuadratureRule, k: &KernelG) -> Result<Eignet, EignetError> {
    if p.kind() != k.kind || rule.centers.kind() != k.kind {
        return Err(EignetError::WrongManifold {
            kernel: k.kind.name(),
            data: if p.kind() != k.kind { p.kind() } else { rule.centers.kind() }.name(),
        });
    }
    if p.degree() > k.n_g {
        return Err(EignetError::DegreeExceedsKernel {
            degree: p.degree(),
            n_g: k.n_g,
        });
    }
    let density = dg_apply(p, &k.mask).resized(p.degree());
    let values = density.synth_many(rule.centers.points());
    let coeffs = values.iter().zip(&rule.weights).map(|(v, w)| v * w).collect();
    Eignet::new(rule.centers.clone(), coeffs, k.clone())
}

/// Order a rule must integrate exactly for the operators at scale `L`:
/// `2A · ℓ*`, with `ℓ*` the top level passed by the low-pass filter.
pub fn required_rule_order(manifold: &Manifold, l: f64) -> f64 {
    match manifold.top_level_below(l) {
        Some(top) => 2.0 * manifold.product_factor() * top as f64,
        None => 0.0,
    }
}

fn check_rule(rule: &QuadratureRule, l: f64) -> Result<(), EignetError> {
    let m = Manifold::new(rule.centers.kind(), 0);
    let required = required_rule_order(&m, l);
    if rule.covers(required) {
        Ok(())
    } else {
        Err(EignetError::UnderCertified {
            required,
            certified: rule.certified_order,
            residual: rule.residual,
        })
    }
}

fn default_h() -> impl Filter {
    CutoffFunction::default().component(CutoffKind::H)
}

/// `𝔾_L(f) = 𝔾(C*; W*; σ_L(f))` with the default low-pass cutoff.
pub fn g_operator(
    f: &SpectralVector,
    l: f64,
    rule_star: &QuadratureRule,
    k: &KernelG,
) -> Result<Eignet, EignetError> {
    g_operator_with(f, l, rule_star, k, &default_h())
}

pub fn g_operator_with(
    f: &SpectralVector,
    l: f64,
    rule_star: &QuadratureRule,
    k: &KernelG,
    filter: &impl Filter,
) -> Result<Eignet, EignetError> {
    check_rule(rule_star, l)?;
    build_eignet(&sigma_continuous(f, l, filter), rule_star, k)
}

/// `𝔾̃_L(C; W; f) = 𝔾(C*; W*; σ_L(C; W; f))` from samples of `f` on `C`.
pub fn g_operator_discrete(
    samples: &Samples,
    l: f64,
    rule: &QuadratureRule,
    rule_star: &QuadratureRule,
    k: &KernelG,
) -> Result<Eignet, EignetError> {
    check_rule(rule, l)?;
    check_rule(rule_star, l)?;
    let p = sigma_discrete(samples, rule, l, &default_h())?;
    build_eignet(&p, rule_star, k)
}

/// `‖a‖_{ℓ^p} / ‖Ψ‖_p`.
pub fn coeff_norm_ratio(net: &Eignet, p: Norm) -> Result<f64, EignetError> {
    let num = net.coeff_norm(p);
    let den = lp_norm(&net.to_spectral(), p).value;
    if num == 0.0 || den == 0.0 {
        return Err(EignetError::ZeroNet);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::delta_star;
    use proptest::prelude::*;
    use std::f64::consts::{PI, SQRT_2, TAU};

    fn circle_kernel(n_g: usize) -> KernelG {
        KernelG::new(ManifoldKind::Circle, Mask::new(4.0), n_g)
    }

    fn equispaced_rule(n: usize) -> QuadratureRule {
        let g = crate::manifold::Grid {
            points: (0..n).map(|i| Point::circle(TAU * i as f64 / n as f64)).collect(),
            weights: vec![1.0 / n as f64; n],
        };
        QuadratureRule::from_grid(ManifoldKind::Circle, &g, (n - 1) as f64)
    }

    #[test]
    fn kernel_diagonal_value() {
        let k = circle_kernel(512);
        let x = Point::circle(0.7);
        let zeta4 = PI.powi(4) / 90.0;
        let exact = 1.0 + 2.0 * (zeta4 - 1.0);
        let v = k.eval(&x, &x).unwrap();
        assert!((v - exact).abs() <= k.tail_bound(), "{v} vs {exact}");
        assert!((v - 1.1646).abs() < 1e-4);
    }

    #[test]
    fn kernel_symmetry_and_truncation() {
        let k = circle_kernel(64);
        let k2 = circle_kernel(128);
        for (a, b) in [(0.1, 2.0), (3.0, 5.5), (0.0, PI)] {
            let (x, y) = (Point::circle(a), Point::circle(b));
            assert_eq!(k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap());
            let d = (k.eval(&x, &y).unwrap() - k2.eval(&x, &y).unwrap()).abs();
            assert!(d <= k.tail_bound());
        }
        // closed-form tail 2·65^{-3}/3
        assert!((k.tail_bound() - 2.0 / 3.0 * 65f64.powi(-3)).abs() < 1e-18);
    }

    #[test]
    fn tolerance_picks_smallest_truncation() {
        let k = KernelG::with_tolerance(ManifoldKind::Circle, Mask::new(4.0), 1e-8, 4096).unwrap();
        assert!(k.tail_bound() <= 1e-8);
        assert!(kernel_tail_bound(ManifoldKind::Circle, k.mask(), k.n_g() - 1) > 1e-8);
        let s = KernelG::with_tolerance(ManifoldKind::Sphere, Mask::new(4.0), 1e-8, 64).unwrap();
        assert_eq!(s.n_g(), 64);
        assert!((s.tail_bound() - 65f64.powi(-2)).abs() < 1e-15);
        assert!(KernelG::with_tolerance(ManifoldKind::Sphere, Mask::new(2.0), 1e-3, 64).is_err());
    }

    #[test]
    fn sphere_kernel_matches_basis_sum() {
        let k = KernelG::new(ManifoldKind::Sphere, Mask::new(4.0), 12);
        let m = k.manifold();
        let (x, y) = (Point::sphere(0.3, 1.0), Point::sphere(2.0, 4.0));
        let bx = m.basis_values(&x, 12);
        let by = m.basis_values(&y, 12);
        let direct: f64 = (0..bx.len())
            .map(|j| k.level_values()[m.level_of(j)] * bx[j] * by[j])
            .sum();
        assert!((direct - k.eval(&x, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn exact_measure_reproduces_polynomials() {
        let k = circle_kernel(64);
        let m = Manifold::circle(64);
        let grid = m.reference_grid(48);
        let rule = QuadratureRule::from_grid(ManifoldKind::Circle, &grid, 96.0);
        let p = SpectralVector::from_fn(ManifoldKind::Circle, 16, |j, _| ((j * 7) as f64).cos());
        let net = build_eignet(&p, &rule, &k).unwrap();
        let probe = m.dense_grid(64);
        let got = net.eval_many(&probe.points);
        let want = p.synth_many(&probe.points);
        let err = got.iter().zip(&want).fold(0.0_f64, |e, (a, b)| e.max((a - b).abs()));
        assert!(err <= k.tail_bound() + 1e-10, "{err}");
    }

    #[test]
    fn single_point_rule_gives_kernel_translate() {
        let k = circle_kernel(32);
        let y0 = Point::circle(1.0);
        let rule = QuadratureRule::from_grid(
            ManifoldKind::Circle,
            &crate::manifold::Grid {
                points: vec![y0],
                weights: vec![1.0],
            },
            0.0,
        );
        let p = SpectralVector::from_coeffs(ManifoldKind::Circle, vec![1.0]).unwrap();
        let net = build_eignet(&p, &rule, &k).unwrap();
        assert_eq!(net.coeffs(), &[1.0]);
        let x = Point::circle(2.5);
        assert_eq!(net.eval(&x).unwrap(), k.eval(&x, &y0).unwrap());
    }

    #[test]
    fn cosine_on_64_point_rule_matches_alias_oracle() {
        // Error of 𝔾(ν; √2cos) on 64 equispaced nodes: levels 64n ± 1 alias
        // onto level 1, each contributing b(ℓ)/b(1)·√2cos(ℓθ).
        let k = circle_kernel(512);
        let rule = equispaced_rule(64);
        let p = SpectralVector::from_fn(ManifoldKind::Circle, 1, |j, _| if j == 1 { 1.0 } else { 0.0 });
        let net = build_eignet(&p, &rule, &k).unwrap();
        let b = |l: f64| (1.0 + l).powi(-4);
        let alias = |t: f64| {
            let mut s = 0.0;
            let mut n = 1;
            while 64 * n - 1 <= 512 {
                for l in [64 * n - 1, 64 * n + 1] {
                    if l <= 512 {
                        s += b(l as f64) / b(1.0) * SQRT_2 * (l as f64 * t).cos();
                    }
                }
                n += 1;
            }
            s
        };
        let mut err: f64 = 0.0;
        let mut oracle: f64 = 0.0;
        for i in 0..4096 {
            let t = TAU * i as f64 / 4096.0;
            let x = Point::circle(t);
            let e = net.eval(&x).unwrap() - SQRT_2 * t.cos();
            err = err.max(e.abs());
            oracle = oracle.max(alias(t).abs());
            assert!((e - alias(t)).abs() < 1e-12);
        }
        assert!((err - oracle).abs() < 1e-12);
        assert!(err > 1e-6 && err < 3e-6, "{err}");
    }

    #[test]
    fn spectral_form_examples() {
        let k = circle_kernel(16);
        let c = PointSet::circle_angles(&[0.0]).unwrap();
        let net = Eignet::new(c.clone(), vec![1.0], k.clone()).unwrap();
        let s = net.to_spectral();
        assert!((s.coeffs()[1] - SQRT_2 / 16.0).abs() < 1e-15);
        let zero = Eignet::new(c, vec![0.0], k.clone()).unwrap();
        assert!(zero.to_spectral().is_zero());
        assert_eq!(zero.eval(&Point::circle(1.0)).unwrap(), 0.0);
        assert_eq!(coeff_norm_ratio(&zero, Norm::Inf), Err(EignetError::ZeroNet));

        let c = PointSet::circle_angles(&[0.3, 2.0, 4.1]).unwrap();
        let net = Eignet::new(c, vec![1.0, -0.5, 2.0], k.clone()).unwrap();
        let grid = Manifold::circle(16).reference_grid(16);
        let vals: Vec<f64> = grid.points.iter().map(|x| net.eval(x).unwrap()).collect();
        let analyzed = SpectralVector::analyze(ManifoldKind::Circle, 16, &grid, &vals);
        for (a, b) in analyzed.coeffs().iter().zip(net.to_spectral().coeffs()) {
            assert!((a - b).abs() < 1e-10);
        }
        for x in &grid.points[..8] {
            let many = net.eval_many(std::slice::from_ref(x))[0];
            assert!((many - net.eval(x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_is_linear_in_centers() {
        let k = circle_kernel(32);
        let x = Point::circle(0.9);
        let a = Eignet::new(PointSet::circle_angles(&[1.0]).unwrap(), vec![1.0], k.clone()).unwrap();
        let b = Eignet::new(PointSet::circle_angles(&[2.0]).unwrap(), vec![1.0], k.clone()).unwrap();
        let ab = Eignet::new(PointSet::circle_angles(&[1.0, 2.0]).unwrap(), vec![1.0, 1.0], k).unwrap();
        let sum = a.eval(&x).unwrap() + b.eval(&x).unwrap();
        assert!((ab.eval(&x).unwrap() - sum).abs() < 1e-15);
    }

    #[test]
    fn coeff_ratio_examples() {
        let k = circle_kernel(64);
        let c = PointSet::circle_angles(&[0.0]).unwrap();
        let net = Eignet::new(c.clone(), vec![1.0], k.clone()).unwrap();
        let g0 = k.at_distance(0.0);
        // G(·, y) peaks at y
        assert!((coeff_norm_ratio(&net, Norm::Inf).unwrap() - 1.0 / g0).abs() < 1e-12);
        let twice = Eignet::new(c, vec![2.0], k).unwrap();
        for p in [Norm::L1, Norm::L2, Norm::Inf] {
            let r1 = coeff_norm_ratio(&net, p).unwrap();
            let r2 = coeff_norm_ratio(&twice, p).unwrap();
            assert!((r1 - r2).abs() < 1e-12 * r1);
        }
    }

    #[test]
    fn operator_rejects_bad_inputs() {
        let k = circle_kernel(8);
        let rule = equispaced_rule(64);
        let p = SpectralVector::from_fn(ManifoldKind::Circle, 9, |_, l| if l == 9 { 1.0 } else { 0.0 });
        assert!(matches!(
            build_eignet(&p, &rule, &k),
            Err(EignetError::DegreeExceedsKernel { degree: 9, n_g: 8 })
        ));
        let k = circle_kernel(128);
        let f = SpectralVector::zeros(ManifoldKind::Circle, 40);
        assert!(g_operator(&f, 16.0, &rule, &k).is_ok());
        assert!(matches!(
            g_operator(&f, 17.0, &rule, &k),
            Err(EignetError::UnderCertified { .. })
        ));
        let zero = g_operator(&f, 16.0, &rule, &k).unwrap();
        assert!(zero.coeffs().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn operators_reproduce_low_degree() {
        let k = circle_kernel(256);
        let rule = equispaced_rule(64);
        let f = SpectralVector::from_fn(ManifoldKind::Circle, 7, |j, _| 1.0 / (1.0 + j as f64));
        let probe = Manifold::circle(256).dense_grid(256);
        let want = f.synth_many(&probe.points);
        let cont = g_operator(&f, 16.0, &rule, &k).unwrap().eval_many(&probe.points);
        let samples = Samples::new(rule.centers.points(), &f.synth_many(rule.centers.points()));
        let disc = g_operator_discrete(&samples, 16.0, &rule, &rule, &k)
            .unwrap()
            .eval_many(&probe.points);
        // aliasing at levels ≥ 64 - 7 bounds the error
        let alias = 2.0 * (58f64).powi(-4) / (8f64).powi(-4) * 3.0;
        for ((w, c), d) in want.iter().zip(&cont).zip(&disc) {
            assert!((w - c).abs() < alias);
            assert!((w - d).abs() < alias);
        }
    }

    fn circle_poly() -> impl Strategy<Value = SpectralVector> {
        prop::collection::vec(-1.0f64..1.0, 21)
            .prop_map(|c| SpectralVector::from_coeffs(ManifoldKind::Circle, c).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn build_is_linear(p1 in circle_poly(), p2 in circle_poly()) {
            let k = circle_kernel(64);
            let rule = equispaced_rule(48);
            let a = build_eignet(&p1, &rule, &k).unwrap();
            let b = build_eignet(&p2, &rule, &k).unwrap();
            let ab = build_eignet(&p1.add(&p2).unwrap(), &rule, &k).unwrap();
            for ((x, y), z) in a.coeffs().iter().zip(b.coeffs()).zip(ab.coeffs()) {
                prop_assert!((x + y - z).abs() <= 1e-12 * (1.0 + z.abs()));
            }
        }

        #[test]
        fn delta_star_commutes_with_raised_mask(
            angles in prop::collection::btree_set(0u32..1000, 1..12),
            seed in prop::collection::vec(-1.0f64..1.0, 12),
            r in 0.5f64..3.0,
        ) {
            let angles: Vec<f64> = angles.iter().map(|&a| TAU * a as f64 / 1000.0).collect();
            let coeffs = seed[..angles.len()].to_vec();
            let net = Eignet::new(PointSet::circle_angles(&angles).unwrap(), coeffs, circle_kernel(48)).unwrap();
            let lhs = delta_star(&net.to_spectral(), r);
            let raised = net.with_kernel(net.kernel().raised(r)).unwrap().to_spectral();
            for (a, b) in lhs.coeffs().iter().zip(raised.coeffs()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
