//! Marcinkiewicz–Zygmund quadrature: minimum-norm weights that integrate
//! every diffusion polynomial of a given order exactly, plus the checks that
//! certify them.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{regularity_norm, DiscreteMeasure, PointSet, RegularityEstimate};
use crate::manifold::{Grid, Manifold, ManifoldKind};
use crate::spectral::{lp_norm_samples, Norm, SpectralVector};

/// Exactness threshold for a rule to count as certified.
pub const EXACTNESS_TOL: f64 = 1e-9;
/// Relative pivot threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("no centers given")]
    Empty,
    #[error("quadrature order must be nonnegative, got {0}")]
    NegativeOrder(f64),
    #[error("rule is not exact at order {order}: residual {residual:e} (method {method:?})")]
    Infeasible {
        order: f64,
        residual: f64,
        method: SolveMethod,
    },
}

/// Which formulation produced the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Minimum `Σ w²` subject to the exactness constraints.
    Constrained,
    /// Minimum-norm minimizer of `Σ_k (Σ_x w_x φ_k(x) - δ_{k0})²`.
    ResidualMinimized,
    /// Weights supplied by an exact product grid.
    ReferenceGrid,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub centers: PointSet,
    pub weights: Vec<f64>,
    /// Order `L` the weights were solved for.
    pub certified_order: f64,
    /// `max_{ℓ_k ≤ L} |Σ w_x φ_k(x) - δ_{k0}|`.
    pub residual: f64,
    pub method: SolveMethod,
    /// Numerical rank of the constraint matrix.
    pub rank: usize,
    pub constraints: usize,
}

/// Serializable summary of a rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleCertificate {
    pub manifold: ManifoldKind,
    pub centers: usize,
    pub order: f64,
    pub residual: f64,
    pub exact: bool,
    pub method: SolveMethod,
    pub rank: usize,
    pub constraints: usize,
    pub min_separation: Option<f64>,
    pub mesh_norm: Option<f64>,
    pub max_abs_weight: f64,
    /// `max |w| / q^α`.
    pub weight_bound_constant: Option<f64>,
    pub regularity: Option<RegularityEstimate>,
    pub weight_sum: f64,
}

impl QuadratureRule {
    /// Wraps an exact product grid (e.g. [`Manifold::reference_grid`]) as a
    /// rule. `order` is the order the grid integrates exactly.
    pub fn from_grid(kind: ManifoldKind, grid: &Grid, order: f64) -> Self {
        let centers = PointSet::new(kind, grid.points.clone()).expect("grid points are distinct");
        let n = grid.len();
        Self {
            centers,
            weights: grid.weights.clone(),
            certified_order: order,
            residual: 0.0,
            method: SolveMethod::ReferenceGrid,
            rank: n,
            constraints: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.residual <= EXACTNESS_TOL
    }

    /// True when the rule is exact to at least `order`.
    pub fn covers(&self, order: f64) -> bool {
        self.is_exact() && self.certified_order >= order
    }

    pub fn require_exact(&self) -> Result<(), QuadratureError> {
        if self.is_exact() {
            Ok(())
        } else {
            Err(QuadratureError::Infeasible {
                order: self.certified_order,
                residual: self.residual,
                method: self.method,
            })
        }
    }

    pub fn manifold(&self) -> Manifold {
        Manifold::new(self.centers.kind(), self.certified_order.max(0.0).floor() as usize)
    }

    /// The signed measure `Σ w_y δ_y`.
    pub fn measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::new(self.centers.clone(), self.weights.clone()).expect("aligned")
    }

    /// The measure `Σ |w_y| δ_y`.
    pub fn abs_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::new(
            self.centers.clone(),
            self.weights.iter().map(|w| w.abs()).collect(),
        )
        .expect("aligned")
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// `max |w| / q(C)^α`, if the set has at least two points.
    pub fn weight_bound_constant(&self) -> Option<f64> {
        let q = self.centers.min_separation().ok()?;
        let alpha = self.manifold().alpha();
        Some(self.max_abs_weight() / q.powf(alpha))
    }

    /// Certificate; `with_regularity` also estimates `‖Σ|w_y|δ_y‖_{M_{1/L}}`.
    pub fn certificate(&self, with_regularity: bool) -> RuleCertificate {
        let regularity = if with_regularity {
            let d = if self.certified_order > 0.0 {
                (1.0 / self.certified_order).min(self.manifold().diameter())
            } else {
                self.manifold().diameter()
            };
            regularity_norm(&self.abs_measure(), d).ok()
        } else {
            None
        };
        RuleCertificate {
            manifold: self.centers.kind(),
            centers: self.centers.len(),
            order: self.certified_order,
            residual: self.residual,
            exact: self.is_exact(),
            method: self.method,
            rank: self.rank,
            constraints: self.constraints,
            min_separation: self.centers.min_separation().ok(),
            mesh_norm: self.centers.mesh_norm().ok().map(|m| m.value),
            max_abs_weight: self.max_abs_weight(),
            weight_bound_constant: self.weight_bound_constant(),
            regularity,
            weight_sum: self.weights.iter().sum(),
        }
    }
}

/// Constraint matrix `A[k, i] = φ_k(x_i)` for `ℓ_k ≤ order`.
fn constraint_matrix(manifold: &Manifold, centers: &PointSet, order: usize) -> DMatrix<f64> {
    let k = manifold.basis_len(order);
    let n = centers.len();
    let columns: Vec<Vec<f64>> = centers
        .points()
        .par_iter()
        .map(|x| manifold.basis_values(x, order))
        .collect();
    DMatrix::from_fn(k, n, |r, c| columns[c][r])
}

fn max_residual(a: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let aw = a * w;
    aw.iter()
        .enumerate()
        .map(|(k, v)| (v - if k == 0 { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

fn numerical_rank(r_diag: impl Iterator<Item = f64>) -> (usize, bool) {
    let d: Vec<f64> = r_diag.map(f64::abs).collect();
    let max = d.iter().cloned().fold(0.0, f64::max);
    let rank = d.iter().filter(|&&v| v > RANK_TOL * max).count();
    (rank, rank == d.len() && max > 0.0)
}

/// Minimum-norm weights integrating `Π_L` exactly on `centers`.
///
/// Solved through a Householder QR factorization of the constraint matrix
/// (or its transpose when there are more centers than constraints). If the
/// system is rank deficient or the exact solve misses [`EXACTNESS_TOL`], the
/// weights fall back to the minimum-norm least-squares solution (via SVD) and
/// the rule is marked [`SolveMethod::ResidualMinimized`] with its achieved
/// residual. Callers decide whether to accept it with
/// [`QuadratureRule::require_exact`].
pub fn solve_weights(
    manifold: &Manifold,
    centers: &PointSet,
    order: f64,
) -> Result<QuadratureRule, QuadratureError> {
    if centers.is_empty() {
        return Err(QuadratureError::Empty);
    }
    if !(order >= 0.0) {
        return Err(QuadratureError::NegativeOrder(order));
    }
    let lvl = order.floor() as usize;
    let a = constraint_matrix(manifold, centers, lvl);
    let (k, n) = a.shape();
    let mut e0 = DVector::zeros(k);
    e0[0] = 1.0;

    let exact = if k <= n {
        // A = Rᵀ Qᵀ with Aᵀ = Q R; w = Q R⁻ᵀ e₀.
        let qr = a.transpose().qr();
        let r = qr.r();
        let (rank, full) = numerical_rank(r.diagonal().iter().copied());
        let w = if full {
            r.transpose()
                .solve_lower_triangular(&e0)
                .map(|z| qr.q() * z)
        } else {
            None
        };
        (w, rank)
    } else {
        // Overdetermined but possibly consistent: least squares by QR.
        let qr = a.clone().qr();
        let r = qr.r();
        let (rank, full) = numerical_rank(r.diagonal().iter().copied());
        let w = if full {
            let mut rhs = e0.clone();
            qr.q_tr_mul(&mut rhs);
            let top = rhs.rows(0, n).into_owned();
            r.solve_upper_triangular(&top)
        } else {
            None
        };
        (w, rank)
    };

    if let (Some(w), rank) = exact {
        let residual = max_residual(&a, &w);
        if residual <= EXACTNESS_TOL {
            return Ok(QuadratureRule {
                centers: centers.clone(),
                weights: w.iter().copied().collect(),
                certified_order: order,
                residual,
                method: SolveMethod::Constrained,
                rank,
                constraints: k,
            });
        }
    }

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count();
    let w = svd
        .solve(&e0, RANK_TOL * smax)
        .unwrap_or_else(|_| DVector::zeros(n));
    let residual = max_residual(&a, &w);
    Ok(QuadratureRule {
        centers: centers.clone(),
        weights: w.iter().copied().collect(),
        certified_order: order,
        residual,
        method: SolveMethod::ResidualMinimized,
        rank,
        constraints: k,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub order: f64,
    /// `max_{ℓ_k ≤ order} |Σ w φ_k - δ_{k0}|`.
    pub max_residual: f64,
    /// Largest error over random products `P₁P₂`, `P₁, P₂ ∈ Π_{order/2}`.
    pub product_error: f64,
    pub trials: usize,
}

/// Checks a rule against the exactness conditions at `order`.
///
/// Product integrals `∫P₁P₂ dμ` are known exactly from orthonormality
/// (`Σ_j c¹_j c²_j`), so the spot check needs no numerical integration.
pub fn verify_exactness(rule: &QuadratureRule, order: f64, trials: usize, seed: u64) -> ExactnessReport {
    let kind = rule.centers.kind();
    let lvl = order.max(0.0).floor() as usize;
    let manifold = Manifold::new(kind, lvl);
    let a = constraint_matrix(&manifold, &rule.centers, lvl);
    let w = DVector::from_column_slice(&rule.weights);
    let max_residual = max_residual(&a, &w);

    let half = (order / 2.0).max(0.0).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut product_error: f64 = 0.0;
    for _ in 0..trials {
        let p1 = SpectralVector::from_fn(kind, half, |_, _| StandardNormal.sample(&mut rng));
        let p2 = SpectralVector::from_fn(kind, half, |_, _| StandardNormal.sample(&mut rng));
        let exact: f64 = p1.coeffs().iter().zip(p2.coeffs()).map(|(a, b)| a * b).sum();
        let v1 = p1.synth_many(rule.centers.points());
        let v2 = p2.synth_many(rule.centers.points());
        let approx: f64 = rule
            .weights
            .iter()
            .zip(v1.iter().zip(&v2))
            .map(|(w, (a, b))| w * a * b)
            .sum();
        product_error = product_error.max((approx - exact).abs());
    }
    ExactnessReport {
        order,
        max_residual,
        product_error,
        trials,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MzReport {
    pub order: f64,
    pub mesh_norm: f64,
    pub trials: usize,
    /// `Σ_x μ(B(x, δ))`, the ratio for `P ≡ 1`.
    pub constant_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Empirical constants of `‖P‖₁ ≤ 2 Σ_x μ(B(x,δ)) |P(x)| ≤ c₁ ‖P‖₁`.
///
/// Reports the min and max of `Σ μ(B(x,δ))|P(x)| / ‖P‖₁` over random
/// `P ∈ Π_L` with standard normal coefficients; `‖P‖₁` uses the dense grid.
pub fn mz_check(centers: &PointSet, order: f64, trials: usize, seed: u64) -> Result<MzReport, QuadratureError> {
    if centers.is_empty() {
        return Err(QuadratureError::Empty);
    }
    let kind = centers.kind();
    let lvl = order.max(0.0).floor() as usize;
    let manifold = Manifold::new(kind, lvl);
    let delta = centers.mesh_norm().expect("nonempty").value;
    let ball = manifold.ball_measure_radius(delta);
    let grid = manifold.dense_grid(lvl);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for _ in 0..trials {
        let p = SpectralVector::from_fn(kind, lvl, |_, _| StandardNormal.sample(&mut rng));
        let at_centers = p.synth_many(centers.points());
        let discrete: f64 = at_centers.iter().map(|v| ball * v.abs()).sum();
        let l1 = lp_norm_samples(&p.synth_many(&grid.points), &grid.weights, Norm::L1);
        let ratio = discrete / l1;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(MzReport {
        order,
        mesh_norm: delta,
        trials,
        constant_ratio: ball * centers.len() as f64,
        min_ratio: lo,
        max_ratio: hi,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderSweep {
    pub mesh_norm: f64,
    /// Largest integer order with residual ≤ [`EXACTNESS_TOL`].
    pub max_order: usize,
    /// `max_order · δ(C)`: the empirical constant in `L ≤ c δ(C)⁻¹`.
    pub ratio: f64,
    pub residuals: Vec<(usize, f64)>,
}

/// Increases the order from 0 until exactness fails (or `limit` is reached).
pub fn order_sweep(manifold: &Manifold, centers: &PointSet, limit: usize) -> Result<OrderSweep, QuadratureError> {
    let delta = centers.mesh_norm().map_err(|_| QuadratureError::Empty)?.value;
    let mut residuals = Vec::new();
    let mut max_order = 0;
    for l in 0..=limit {
        let rule = solve_weights(manifold, centers, l as f64)?;
        residuals.push((l, rule.residual));
        if rule.is_exact() {
            max_order = l;
        } else {
            break;
        }
    }
    Ok(OrderSweep {
        mesh_norm: delta,
        max_order,
        ratio: max_order as f64 * delta,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Point;
    use rand::Rng;
    use std::f64::consts::TAU;

    #[test]
    fn equispaced_weights_are_uniform() {
        let m = Manifold::circle(16);
        let c = PointSet::equispaced_circle(16);
        let rule = solve_weights(&m, &c, 7.0).unwrap();
        assert_eq!(rule.method, SolveMethod::Constrained);
        for w in &rule.weights {
            assert!((w - 1.0 / 16.0).abs() < 1e-14);
        }
        // brute-force substitution
        let uniform = QuadratureRule {
            weights: vec![1.0 / 16.0; 16],
            ..rule.clone()
        };
        assert!(verify_exactness(&uniform, 7.0, 0, 0).max_residual <= 1e-12);
    }

    #[test]
    fn single_point_rule() {
        let m = Manifold::circle(0);
        let c = PointSet::circle_angles(&[1.3]).unwrap();
        let rule = solve_weights(&m, &c, 0.0).unwrap();
        assert!((rule.weights[0] - 1.0).abs() < 1e-15);
        assert!(rule.is_exact());
    }

    #[test]
    fn trapezoid_exactness_and_aliasing() {
        let c = PointSet::equispaced_circle(16);
        let rule = QuadratureRule {
            centers: c,
            weights: vec![1.0 / 16.0; 16],
            certified_order: 15.0,
            residual: 0.0,
            method: SolveMethod::ReferenceGrid,
            rank: 16,
            constraints: 0,
        };
        let ok = verify_exactness(&rule, 15.0, 20, 1);
        assert!(ok.max_residual <= 1e-12);
        assert!(ok.product_error <= 1e-12);
        let bad = verify_exactness(&rule, 16.0, 0, 1);
        assert!(bad.max_residual >= 0.5);
        assert!((bad.max_residual - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reference_grid_rule_is_exact() {
        for m in [Manifold::circle(10), Manifold::sphere(6)] {
            let g = m.reference_grid(6);
            let rule = QuadratureRule::from_grid(m.kind, &g, 6.0);
            let rep = verify_exactness(&rule, 12.0, 5, 2);
            assert!(rep.max_residual <= 1e-12, "{} {}", m.name(), rep.max_residual);
        }
    }

    #[test]
    fn scattered_circle_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ang: Vec<f64> = (0..400).map(|_| rng.random::<f64>() * TAU).collect();
        let raw = PointSet::circle_angles(&ang).unwrap();
        let (c, _) = crate::geometry::greedy_separate(&raw, 0.06).unwrap();
        let delta = c.mesh_norm().unwrap().value;
        let order = (0.5 / delta).floor();
        let m = Manifold::circle(order as usize);
        let rule = solve_weights(&m, &c, order).unwrap();
        assert!(rule.is_exact(), "residual {}", rule.residual);
        let cert = rule.certificate(true);
        assert!(cert.weight_bound_constant.unwrap() < 10.0);
        assert!(cert.regularity.unwrap().value < 10.0);
    }

    #[test]
    fn infeasible_order_is_reported() {
        let m = Manifold::circle(10);
        let c = PointSet::equispaced_circle(8);
        let rule = solve_weights(&m, &c, 8.0).unwrap();
        assert_eq!(rule.method, SolveMethod::ResidualMinimized);
        assert!(rule.residual > 0.5);
        assert!(rule.require_exact().is_err());
    }

    #[test]
    fn sphere_rule_integrates_products() {
        let m = Manifold::sphere(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point> = (0..600).map(|_| m.random_point(&mut rng)).collect();
        let raw = PointSet::new(ManifoldKind::Sphere, pts).unwrap();
        let (c, _) = crate::geometry::greedy_separate(&raw, 0.2).unwrap();
        let rule = solve_weights(&m, &c, 8.0).unwrap();
        assert!(rule.is_exact(), "residual {}", rule.residual);
        let rep = verify_exactness(&rule, 8.0, 10, 3);
        assert!(rep.product_error < 1e-8);
    }

    #[test]
    fn mz_ratios_on_equispaced_sets() {
        let c = PointSet::equispaced_circle(64);
        let rep = mz_check(&c, 16.0, 50, 9).unwrap();
        assert!(rep.min_ratio >= 0.5, "{rep:?}");
        assert!((rep.constant_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_finds_trapezoid_limit() {
        let m = Manifold::circle(20);
        let c = PointSet::equispaced_circle(9);
        let s = order_sweep(&m, &c, 12).unwrap();
        assert_eq!(s.max_order, 8);
        assert_eq!(s.residuals.last().unwrap().0, 9);
    }
}
