//! Solving diagonally dominant systems with a certified norm bound
//! `‖A⁻¹y‖_p ≤ ((1-γ)λ)⁻¹ ‖y‖_p`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::Norm;

/// Relative slack on the certified inequality, for round-off in the solve.
pub const CERT_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DominanceError {
    #[error("matrix is {rows}x{cols}, right-hand side has {rhs} entries")]
    Shape { rows: usize, cols: usize, rhs: usize },
    #[error("γ = {0} is outside [0, 1)")]
    BadGamma(f64),
    #[error("λ = {lambda} must lie in (0, min|A_ii| = {min_diag}]")]
    BadLambda { lambda: f64, min_diag: f64 },
    #[error("row {index}: off-diagonal sum {off} exceeds γ|A_ii| = {allowed}")]
    RowViolation { index: usize, off: f64, allowed: f64 },
    #[error("column {index}: off-diagonal sum {off} exceeds γ|A_ii| = {allowed}")]
    ColumnViolation { index: usize, off: f64, allowed: f64 },
    #[error("matrix is numerically singular")]
    Singular,
    #[error("certificate violated for p = {p:?}: {lhs} > {rhs}")]
    CertificateViolated { p: Norm, lhs: f64, rhs: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormBound {
    pub p: Norm,
    /// `‖A⁻¹y‖_p`.
    pub solution_norm: f64,
    /// `((1-γ)λ)⁻¹ ‖y‖_p`.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct DominantSolution {
    pub solution: DVector<f64>,
    pub gamma: f64,
    pub lambda: f64,
    pub bounds: Vec<NormBound>,
}

/// Smallest `γ` for which `A` is both row and column diagonally dominant,
/// i.e. `max_j Σ_{i≠j} |A_ji| / |A_jj|` over rows and columns.
pub fn dominance_gamma(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows().min(a.ncols());
    let mut gamma: f64 = 0.0;
    for j in 0..n {
        let d = a[(j, j)].abs();
        let row: f64 = (0..a.ncols()).filter(|&i| i != j).map(|i| a[(j, i)].abs()).sum();
        let col: f64 = (0..a.nrows()).filter(|&i| i != j).map(|i| a[(i, j)].abs()).sum();
        if d == 0.0 {
            return f64::INFINITY;
        }
        gamma = gamma.max(row / d).max(col / d);
    }
    gamma
}

/// Row-only dominance ratio `max_j Σ_{i≠j} |A_ji| / |A_jj|`; infinite when
/// a diagonal entry vanishes.
pub fn row_dominance(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|j| {
            let d = a[(j, j)].abs();
            if d == 0.0 {
                return f64::INFINITY;
            }
            let off: f64 = (0..a.ncols()).filter(|&i| i != j).map(|i| a[(j, i)].abs()).sum();
            off / d
        })
        .fold(0.0, f64::max)
}

/// Solves `A a = y` after verifying row and column dominance with ratio
/// `γ`, and checks `‖a‖_p ≤ ((1-γ)λ)⁻¹‖y‖_p` for `p ∈ {1, 2, ∞}`.
///
/// `λ` may be any positive lower bound on `min_i |A_ii|`.
pub fn diag_dominant_solve(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    gamma: f64,
    lambda: f64,
) -> Result<DominantSolution, DominanceError> {
    let n = a.nrows();
    if a.ncols() != n || y.len() != n {
        return Err(DominanceError::Shape {
            rows: n,
            cols: a.ncols(),
            rhs: y.len(),
        });
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(DominanceError::BadGamma(gamma));
    }
    let min_diag = (0..n).map(|i| a[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(lambda > 0.0 && lambda <= min_diag) {
        return Err(DominanceError::BadLambda { lambda, min_diag });
    }
    for j in 0..n {
        let d = a[(j, j)].abs();
        let allowed = gamma * d;
        let off: f64 = (0..n).filter(|&i| i != j).map(|i| a[(j, i)].abs()).sum();
        if off / d > gamma {
            return Err(DominanceError::RowViolation { index: j, off, allowed });
        }
        let off: f64 = (0..n).filter(|&i| i != j).map(|i| a[(i, j)].abs()).sum();
        if off / d > gamma {
            return Err(DominanceError::ColumnViolation { index: j, off, allowed });
        }
    }
    let solution = a.clone().lu().solve(y).ok_or(DominanceError::Singular)?;
    let factor = 1.0 / ((1.0 - gamma) * lambda);
    let sol: Vec<f64> = solution.iter().copied().collect();
    let rhs: Vec<f64> = y.iter().copied().collect();
    let mut bounds = Vec::with_capacity(3);
    for p in [Norm::L1, Norm::L2, Norm::Inf] {
        let lhs = p.of_vector(&sol);
        let bound = factor * p.of_vector(&rhs);
        if lhs > bound * (1.0 + CERT_SLACK) {
            return Err(DominanceError::CertificateViolated { p, lhs, rhs: bound });
        }
        bounds.push(NormBound {
            p,
            solution_norm: lhs,
            bound,
        });
    }
    Ok(DominantSolution {
        solution,
        gamma,
        lambda,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_by_two_equality_case() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 2.0]);
        let y = DVector::from_vec(vec![1.0, -1.0]);
        let s = diag_dominant_solve(&a, &y, 0.25, 2.0).unwrap();
        let inf = s.bounds.iter().find(|b| b.p == Norm::Inf).unwrap();
        assert!((inf.bound - 2.0 / 3.0).abs() < 1e-12);
        assert!((inf.solution_norm - 2.0 / 3.0).abs() < 1e-12);
        // A⁻¹ = (1/3.75)[[2, -0.5], [-0.5, 2]]
        assert!((s.solution[0] - 2.5 / 3.75).abs() < 1e-15);
        assert!((s.solution[1] + 2.5 / 3.75).abs() < 1e-15);
    }

    #[test]
    fn identity_bound_is_norm_of_rhs() {
        let a = DMatrix::identity(4, 4);
        let y = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        let s = diag_dominant_solve(&a, &y, 0.0, 1.0).unwrap();
        for b in &s.bounds {
            assert_eq!(b.solution_norm, b.bound);
        }
    }

    #[test]
    fn violations_name_the_index() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 0.0, 1.0, 0.9, 0.0, 0.0, 5.0]);
        let y = DVector::from_vec(vec![1.0; 3]);
        assert!(matches!(
            diag_dominant_solve(&a, &y, 0.5, 1.0),
            Err(DominanceError::RowViolation { index: 1, .. })
        ));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.9, 4.0]);
        let y = DVector::from_vec(vec![1.0; 2]);
        assert!(matches!(
            diag_dominant_solve(&a, &y, 0.5, 1.0),
            Err(DominanceError::ColumnViolation { index: 0, .. })
        ));
        let a = DMatrix::identity(2, 2);
        assert!(matches!(
            diag_dominant_solve(&a, &y, 0.0, 2.0),
            Err(DominanceError::BadLambda { .. })
        ));
        assert!(matches!(diag_dominant_solve(&a, &y, 1.0, 1.0), Err(DominanceError::BadGamma(_))));
    }

    #[test]
    fn zero_diagonal_is_not_dominant() {
        let a = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(row_dominance(&a), f64::INFINITY);
        assert_eq!(dominance_gamma(&a), f64::INFINITY);
    }

    #[test]
    fn random_dominant_matrices_obey_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = 20;
            let gamma = rng.random_range(0.05..0.95);
            let mut a: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            for j in 0..n {
                let row: f64 = (0..n).filter(|&i| i != j).map(|i| a[(j, i)].abs()).sum();
                let col: f64 = (0..n).filter(|&i| i != j).map(|i| a[(i, j)].abs()).sum();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                a[(j, j)] = sign * row.max(col) / gamma * rng.random_range(1.0..2.0);
            }
            assert!(dominance_gamma(&a) <= gamma);
            let lambda = (0..n).map(|i| a[(i, i)].abs()).fold(f64::INFINITY, f64::min);
            let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let s = diag_dominant_solve(&a, &y, gamma, lambda).unwrap();
            for b in &s.bounds {
                assert!(b.solution_norm <= b.bound * (1.0 + CERT_SLACK));
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn computed_gamma_is_accepted(seed in 0u64..10_000, n in 2usize..10, spread in 0.01f64..0.2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(n, n, |i, j| {
                if i == j { rng.random_range(0.5..3.0) } else { rng.random_range(-spread..spread) }
            });
            let gamma = dominance_gamma(&a);
            proptest::prop_assume!(gamma < 1.0);
            let lambda = a.diagonal().amin();
            let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            proptest::prop_assert!(diag_dominant_solve(&a, &y, gamma, lambda).is_ok());
        }
    }
}
