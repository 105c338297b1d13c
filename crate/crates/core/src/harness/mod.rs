//! Numerical experiments: rate fits, stability constants and scaling laws,
//! each reduced to CSV rows and a pass/fail summary.

pub mod experiments;
pub mod targets;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eignet::{required_rule_order, EignetError, KernelG, KernelHeader};
use crate::geometry::{nested_separate, GeometryError, LevelCertificate, PointSet};
use crate::manifold::{Manifold, ManifoldKind, Point};
use crate::quadrature::{solve_weights, QuadratureError, QuadratureRule, RuleCertificate};
use crate::spectral::{
    delta_star, lp_norm, sigma_continuous, CutoffFunction, CutoffKind, Mask, Norm, SpectralVector,
};

pub use experiments::{
    bernstein_experiment, coeff_bound_experiment, localization_experiment, mz_experiment,
    rate_experiment, recovery_experiment, run_experiment, simultaneous_experiment,
    stability_experiment,
};
pub use targets::{Target, TargetSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parameter regime violated: {0}")]
    Regime(String),
    #[error("slope fit needs at least 4 positive points, got {0}")]
    TooFewPoints(usize),
    #[error("rule for m = {m} on {centers} centers misses order {order}: residual {residual:e}")]
    Certification {
        m: usize,
        centers: usize,
        order: f64,
        residual: f64,
    },
    #[error(transparent)]
    Eignet(#[from] EignetError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Rates,
    CoeffBound,
    Bernstein,
    Simultaneous,
    Localization,
    MzCheck,
    Stability,
    Recovery,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::Rates,
        ExperimentName::CoeffBound,
        ExperimentName::Bernstein,
        ExperimentName::Simultaneous,
        ExperimentName::Localization,
        ExperimentName::MzCheck,
        ExperimentName::Stability,
        ExperimentName::Recovery,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Rates => "rates",
            ExperimentName::CoeffBound => "coeff-bound",
            ExperimentName::Bernstein => "bernstein",
            ExperimentName::Simultaneous => "simultaneous",
            ExperimentName::Localization => "localization",
            ExperimentName::MzCheck => "mz-check",
            ExperimentName::Stability => "stability",
            ExperimentName::Recovery => "recovery",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|e| e.as_str()).collect();
                HarnessError::Config(format!("unknown experiment `{s}` (one of {})", names.join(", ")))
            })
    }
}

/// Default upper MZ ceiling on the sphere, where `Σ_x μ(B(x, δ))` is the
/// covering density of the center set rather than 1.
pub const SPHERE_MZ_CEILING: f64 = 4.0;

/// Parameters of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldKind,
    pub target: TargetSpec,
    /// Mask type.
    pub beta: f64,
    /// Smoothness / derivative order.
    pub r: f64,
    /// Lower derivative order (simultaneous approximation).
    pub gamma: f64,
    pub p: Norm,
    /// `m` values (rates, stability, simultaneous, mz-check), center counts
    /// `N` (coeff-bound, bernstein, recovery) or `L` values (localization).
    pub sweep: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Kernel tail tolerance relative to `‖f‖₂`.
    pub kernel_tol: f64,
    /// Upper limit on the kernel truncation `N_G` (default 2048 on the
    /// circle, 64 on the sphere).
    pub kernel_cap: Option<usize>,
    /// Level at which series targets are truncated (default 4096 on the
    /// circle, 128 on the sphere).
    pub truth_level: Option<usize>,
    /// Allowed deviation of fitted slopes from the theorem exponent.
    pub slack: f64,
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
    /// Upper limit for reported constants (stability, MZ ratios).
    pub ceiling: f64,
    /// Allowed ratio between largest and smallest localization constant.
    pub spread: f64,
    /// Also run the fully discrete operator in rate experiments with `p = ∞`.
    pub discrete: bool,
    pub cutoff: CutoffFunction,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            manifold: ManifoldKind::Circle,
            target: TargetSpec::AbsSin,
            beta: 4.0,
            r: 2.0,
            gamma: 1.0,
            p: Norm::Inf,
            sweep: vec![16, 32, 64, 128, 256],
            trials: 50,
            seed: 0,
            kernel_tol: 1e-8,
            kernel_cap: None,
            truth_level: None,
            slack: 0.3,
            slope_min: None,
            slope_max: None,
            ceiling: 10.0,
            spread: 2.0,
            discrete: true,
            cutoff: CutoffFunction::default(),
        }
    }
}

impl ExperimentConfig {
    /// Defaults matched to the experiment.
    pub fn for_experiment(name: ExperimentName) -> Self {
        let base = Self::default();
        match name {
            ExperimentName::Rates => base,
            ExperimentName::CoeffBound => Self { r: 0.0, ..base },
            ExperimentName::Bernstein => Self { r: 1.0, ..base },
            ExperimentName::Simultaneous => Self {
                target: TargetSpec::SpectralPower {
                    s: 4.0,
                    random_signs: false,
                },
                p: Norm::L2,
                ..base
            },
            ExperimentName::Localization => Self {
                sweep: vec![8, 16, 32, 64],
                ..base
            },
            ExperimentName::MzCheck => Self {
                sweep: vec![8, 16, 32, 64],
                p: Norm::L1,
                ceiling: 2.0,
                ..base
            },
            ExperimentName::Stability => Self {
                sweep: vec![8, 16, 32, 64, 128],
                trials: 100,
                ..base
            },
            ExperimentName::Recovery => Self {
                sweep: vec![8, 16, 32, 64],
                trials: 20,
                ..base
            },
        }
    }

    /// Overlays the keys of a JSON object on the experiment defaults.
    pub fn from_json(name: ExperimentName, overrides: &serde_json::Value) -> Result<Self, HarnessError> {
        let mut base = serde_json::to_value(Self::for_experiment(name)).expect("serializable");
        match overrides {
            serde_json::Value::Object(map) => {
                let obj = base.as_object_mut().expect("object");
                for (k, v) in map {
                    obj.insert(k.clone(), v.clone());
                }
            }
            serde_json::Value::Null => {}
            _ => return Err(HarnessError::Config("config must be a JSON object".into())),
        }
        let mut cfg: Self = serde_json::from_value(base).map_err(|e| HarnessError::Config(e.to_string()))?;
        if cfg.manifold == ManifoldKind::Sphere {
            let given = |k: &str| overrides.get(k).is_some();
            if !given("sweep") {
                cfg.sweep = Self::sphere_sweep(name);
            }
            if !given("target") && cfg.target == TargetSpec::AbsSin {
                cfg.target = TargetSpec::Zonal { s: 3.5 };
            }
            if !given("ceiling") && name == ExperimentName::MzCheck {
                cfg.ceiling = SPHERE_MZ_CEILING;
            }
        }
        Ok(cfg)
    }

    /// Desk-scale sweeps for the sphere: harmonic degrees for operator
    /// experiments, center counts for net experiments.
    pub fn sphere_sweep(name: ExperimentName) -> Vec<usize> {
        match name {
            ExperimentName::CoeffBound | ExperimentName::Bernstein => vec![8, 16, 32, 64, 128, 256],
            ExperimentName::Recovery => vec![16, 32, 64, 128, 256],
            ExperimentName::Localization => vec![4, 8, 16, 32],
            _ => vec![2, 3, 4, 6, 8],
        }
    }

    pub fn manifold(&self) -> Manifold {
        Manifold::new(self.manifold, 0)
    }

    /// `α / p'`.
    pub fn alpha_over_dual(&self) -> f64 {
        self.manifold().alpha() * self.p.dual_reciprocal()
    }

    pub fn kernel_cap(&self) -> usize {
        self.kernel_cap.unwrap_or(match self.manifold {
            ManifoldKind::Circle => 2048,
            ManifoldKind::Sphere => 64,
        })
    }

    pub fn truth_level(&self) -> usize {
        self.truth_level.unwrap_or(match self.manifold {
            ManifoldKind::Circle => 4096,
            ManifoldKind::Sphere => 128,
        })
    }

    pub fn mask(&self) -> Mask {
        Mask::new(self.beta)
    }

    fn check_sweep(&self, min_len: usize) -> Result<(), HarnessError> {
        if self.sweep.len() < min_len {
            return Err(HarnessError::Config(format!(
                "sweep needs at least {min_len} values"
            )));
        }
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) || self.sweep[0] == 0 {
            return Err(HarnessError::Config("sweep must be positive and increasing".into()));
        }
        Ok(())
    }

    /// Checks the parameter regime of the theorem the experiment tests.
    pub fn validate(&self, name: ExperimentName) -> Result<(), HarnessError> {
        self.check_sweep(1)?;
        if self.trials == 0 && !matches!(name, ExperimentName::Localization) {
            return Err(HarnessError::Config("trials must be positive".into()));
        }
        let a = self.alpha_over_dual();
        let top = self.beta - a;
        if self.beta <= a {
            return Err(HarnessError::Regime(format!(
                "need β > α/p' ({} > {a})",
                self.beta
            )));
        }
        match name {
            ExperimentName::Bernstein if !(self.r > 0.0 && self.r < top) => Err(HarnessError::Regime(
                format!("need 0 < r < β - α/p' = {top}, got r = {}", self.r),
            )),
            ExperimentName::Simultaneous
                if !(self.gamma > 0.0 && self.gamma < top && self.gamma <= self.r && self.r < self.beta) =>
            {
                Err(HarnessError::Regime(format!(
                    "need 0 < γ < β - α/p' = {top} and γ ≤ r < β, got γ = {}, r = {}",
                    self.gamma, self.r
                )))
            }
            ExperimentName::Rates => {
                let t = Target::new(self.target.clone(), self.manifold, 1, self.seed)?;
                match t.smoothness(self.p) {
                    Some(g) if !(g > 0.0 && g < top) => Err(HarnessError::Regime(format!(
                        "target smoothness {g} outside (0, β - α/p' = {top})"
                    ))),
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scale: f64,
    pub error: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
    /// Ratio of largest to smallest scale.
    pub span: f64,
}

/// Least squares fit of `log value = slope · log scale + intercept`.
pub fn fit_slope(pairs: &[(f64, f64)]) -> Result<SlopeFit, HarnessError> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(s, v)| *s > 0.0 && *v > 0.0 && s.is_finite() && v.is_finite())
        .map(|(s, v)| (s.ln(), v.ln()))
        .collect();
    if pts.len() < 4 || pts.len() != pairs.len() {
        return Err(HarnessError::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
        points: pts.len(),
        span: (hi - lo).exp(),
    })
}

/// Minimum scale span for a slope fit to be reported.
pub const MIN_SPAN: f64 = 4.0;

/// A labelled series of `(scale, error, constant)` rows with its slope fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub label: String,
    pub rows: Vec<Row>,
    /// Present when there are at least 4 positive rows spanning [`MIN_SPAN`].
    pub fit: Option<SlopeFit>,
}

impl RateReport {
    pub fn new(label: impl Into<String>, rows: Vec<Row>) -> Self {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.scale, r.error)).collect();
        let fit = fit_slope(&pairs).ok().filter(|f| f.span >= MIN_SPAN * (1.0 - 1e-12));
        Self {
            label: label.into(),
            rows,
            fit,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Largest value in the `constant` column.
    pub fn max_constant(&self) -> f64 {
        self.rows.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.constant))
    }
}

/// A named assertion `min ≤ value ≤ max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: Option<f64>, min: Option<f64>, max: Option<f64>) -> Self {
        let passed = match value {
            Some(v) => v.is_finite() && min.is_none_or(|m| v >= m) && max.is_none_or(|m| v <= m),
            None => false,
        };
        Self {
            name: name.into(),
            value,
            min,
            max,
            passed,
        }
    }
}

/// Everything the numbers in a report rest on.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Certificates {
    pub kernel: Option<KernelHeader>,
    pub cutoff: Option<CutoffFunction>,
    pub levels: Vec<LevelCertificate>,
    pub rules: Vec<RuleCertificate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentName,
    pub config: ExperimentConfig,
    pub series: Vec<RateReport>,
    pub checks: Vec<Check>,
    pub certificates: Certificates,
    pub passed: bool,
}

impl ExperimentReport {
    fn new(
        experiment: ExperimentName,
        config: &ExperimentConfig,
        series: Vec<RateReport>,
        checks: Vec<Check>,
        certificates: Certificates,
    ) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            experiment,
            config: config.clone(),
            series,
            checks,
            certificates,
            passed,
        }
    }

    pub fn series(&self, label: &str) -> Option<&RateReport> {
        self.series.iter().find(|s| s.label == label)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Computable upper realization of the K-functional `ω_r(p; f, 1/L)`:
/// `‖f - σ_L f‖_p + L^{-r} ‖(Δ*)^r σ_L f‖_p`.
///
/// Equivalent to `ω_r` up to constants; the infimum itself is not computed.
pub fn kfunc_realization(f: &SpectralVector, r: f64, p: Norm, l: f64) -> f64 {
    let h = CutoffFunction::default().component(CutoffKind::H);
    let s = sigma_continuous(f, l, &h);
    let diff = f.sub(&s).expect("same manifold");
    lp_norm(&diff, p).value + l.powf(-r) * lp_norm(&delta_star(&s, r), p).value
}

/// Center set, certified rule and thinning record for one `m`.
#[derive(Debug, Clone)]
pub struct Rung {
    pub m: usize,
    pub centers: PointSet,
    pub rule: QuadratureRule,
    pub level: LevelCertificate,
}

/// Candidate points per constraint on the sphere.
const SPHERE_OVERSAMPLING: usize = 24;

/// Nested center sets `C_m` with `q(C_m) ∼ 1/m`, each carrying a rule of
/// order `2A(⌈m⌉ - 1)`.
///
/// On the circle the candidates are `4m` equispaced points; on the sphere
/// they are prefixes of one seeded uniform stream, sized to oversample the
/// exactness constraints. Both pass through [`nested_separate`].
pub fn nested_ladder(kind: ManifoldKind, sweep: &[usize], seed: u64) -> Result<Vec<Rung>, HarnessError> {
    let probe = Manifold::new(kind, 0);
    let orders: Vec<f64> = sweep.iter().map(|&m| required_rule_order(&probe, m as f64)).collect();
    let candidates: Vec<PointSet> = match kind {
        ManifoldKind::Circle => sweep.iter().map(|&m| PointSet::equispaced_circle(4 * m)).collect(),
        ManifoldKind::Sphere => {
            let sizes: Vec<usize> = orders
                .iter()
                .map(|&o| (SPHERE_OVERSAMPLING * (o as usize + 1).pow(2)).max(8))
                .collect();
            let total = sizes.iter().copied().max().unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stream: Vec<Point> = (0..total).map(|_| probe.random_point(&mut rng)).collect();
            sizes
                .iter()
                .map(|&n| PointSet::new(kind, stream[..n].to_vec()))
                .collect::<Result<_, _>>()?
        }
    };
    let thinned = nested_separate(&candidates)?;
    sweep
        .iter()
        .zip(orders)
        .zip(thinned)
        .map(|((&m, order), (centers, level))| {
            let manifold = Manifold::new(kind, order as usize);
            let rule = solve_weights(&manifold, &centers, order)?;
            if !rule.is_exact() {
                return Err(HarnessError::Certification {
                    m,
                    centers: centers.len(),
                    order,
                    residual: rule.residual,
                });
            }
            Ok(Rung {
                m,
                centers,
                rule,
                level,
            })
        })
        .collect()
}

/// Kernel for a run: smallest `N_G` meeting `tol` (capped), but at least
/// `min_level`.
pub fn run_kernel(cfg: &ExperimentConfig, tol: f64, min_level: usize) -> Result<KernelG, HarnessError> {
    let k = KernelG::with_tolerance(cfg.manifold, cfg.mask(), tol, cfg.kernel_cap())?;
    if k.n_g() >= min_level {
        Ok(k)
    } else {
        Ok(KernelG::new(cfg.manifold, cfg.mask(), min_level))
    }
}
