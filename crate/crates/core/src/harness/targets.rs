//! Target functions with known expansions and smoothness.

use std::f64::consts::{PI, SQRT_2};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::manifold::{Manifold, ManifoldKind, Point};
use crate::spectral::{Norm, SpectralVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Standard normal coefficients up to `degree`.
    BandLimited { degree: usize },
    /// `|sin θ|` on the circle.
    AbsSin,
    /// Coefficient `±ℓ_j^{-s}` on every index of level `ℓ_j ≥ 1`.
    SpectralPower {
        s: f64,
        #[serde(default)]
        random_signs: bool,
    },
    /// `Σ_l (1+l)^{-s} Z_l(ρ(x, north pole))` on the sphere.
    Zonal { s: f64 },
}

/// A target realized to a finite `truth_level`, with exact point values
/// where a closed form exists.
#[derive(Debug, Clone)]
pub struct Target {
    spec: TargetSpec,
    kind: ManifoldKind,
    truth: SpectralVector,
}

/// `|sin θ| = 2/π - (4/π) Σ_{k≥1} cos(2kθ)/(4k²-1)`, in the `√2 cos` basis.
fn abs_sin_coeff(level: usize) -> f64 {
    if level == 0 {
        2.0 / PI
    } else if level % 2 == 1 {
        0.0
    } else {
        let k = (level / 2) as f64;
        -(4.0 / PI) / (4.0 * k * k - 1.0) / SQRT_2
    }
}

impl Target {
    pub fn new(
        spec: TargetSpec,
        kind: ManifoldKind,
        truth_level: usize,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        let m = Manifold::new(kind, truth_level);
        let truth = match &spec {
            TargetSpec::BandLimited { degree } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                SpectralVector::from_fn(kind, *degree, |_, _| StandardNormal.sample(&mut rng))
            }
            TargetSpec::AbsSin => {
                if kind != ManifoldKind::Circle {
                    return Err(HarnessError::Config("abs-sin is a circle target".into()));
                }
                SpectralVector::from_fn(kind, truth_level, |j, l| {
                    if j % 2 == 1 || j == 0 {
                        abs_sin_coeff(l)
                    } else {
                        0.0
                    }
                })
            }
            TargetSpec::SpectralPower { s, random_signs } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                SpectralVector::from_fn(kind, truth_level, |_, l| {
                    if l == 0 {
                        return 0.0;
                    }
                    let sign = if *random_signs {
                        let u: f64 = StandardNormal.sample(&mut rng);
                        u.signum()
                    } else {
                        1.0
                    };
                    sign * (l as f64).powf(-s)
                })
            }
            TargetSpec::Zonal { s } => {
                if kind != ManifoldKind::Sphere {
                    return Err(HarnessError::Config("zonal is a sphere target".into()));
                }
                SpectralVector::from_fn(kind, truth_level, |j, l| {
                    if j == l * l + l {
                        (1.0 + l as f64).powf(-s) * ((2 * l + 1) as f64).sqrt()
                    } else {
                        0.0
                    }
                })
            }
        };
        debug_assert_eq!(truth.kind(), m.kind);
        Ok(Self { spec, kind, truth })
    }

    pub fn spec(&self) -> &TargetSpec {
        &self.spec
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    /// Expansion up to the truth level.
    pub fn truth(&self) -> &SpectralVector {
        &self.truth
    }

    /// Coefficients `⟨f, φ_j⟩` for `ℓ_j ≤ level` (exact for `level` up to the
    /// truth level).
    pub fn coefficients(&self, level: usize) -> SpectralVector {
        self.truth.resized(level)
    }

    /// Values, from the closed form where one exists and otherwise from the
    /// truth expansion.
    pub fn eval_many(&self, points: &[Point]) -> Vec<f64> {
        match &self.spec {
            TargetSpec::AbsSin => points
                .iter()
                .map(|p| match p {
                    Point::Circle { theta } => theta.sin().abs(),
                    _ => f64::NAN,
                })
                .collect(),
            TargetSpec::Zonal { s } => {
                let m = Manifold::sphere(self.truth.max_level());
                let levels: Vec<f64> = (0..=m.max_level)
                    .map(|l| (1.0 + l as f64).powf(-s))
                    .collect();
                points
                    .iter()
                    .map(|p| match p {
                        Point::Sphere { colat, .. } => m.zonal_sum(&levels, *colat),
                        _ => f64::NAN,
                    })
                    .collect()
            }
            _ => self.truth.synth_many(points),
        }
    }

    /// Nominal smoothness index `γ` with `f ∈ H^p_γ`, or `None` for
    /// band-limited targets.
    pub fn smoothness(&self, p: Norm) -> Option<f64> {
        let sphere = self.kind == ManifoldKind::Sphere;
        match &self.spec {
            TargetSpec::BandLimited { .. } => None,
            TargetSpec::AbsSin => Some(match p {
                Norm::Inf => 1.0,
                Norm::L2 => 1.5,
                Norm::L1 => 2.0,
            }),
            TargetSpec::SpectralPower { s, random_signs } => {
                let half_dim = if sphere { 1.0 } else { 0.5 };
                Some(match (p, random_signs) {
                    (Norm::Inf, false) => s - 2.0 * half_dim,
                    _ => s - half_dim,
                })
            }
            TargetSpec::Zonal { s } => Some(match p {
                Norm::Inf => s - 2.0,
                _ => s - 1.0,
            }),
        }
    }
}
