//! Command-line driver: `quadrature`, `approximate` and `experiment <name>`.
//!
//! Each run writes into `<out>/<command>-s<seed>-<hash>/`, where the hash is
//! taken over the command, the resolved seed and the raw config bytes, so a
//! rerun with the same inputs rewrites the same files with the same bytes.
//! `summary.json` and `manifest.json` are written even when the run fails.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eignet::{g_operator, g_operator_discrete, required_rule_order, EignetError, KernelG, KernelHeader};
use crate::geometry::{greedy_separate, GeometryError, PointSet};
use crate::harness::{run_experiment, Certificates, ExperimentConfig, ExperimentName, HarnessError, Target, TargetSpec};
use crate::io::{self, IoError};
use crate::manifold::{Manifold, ManifoldKind, Point};
use crate::quadrature::{order_sweep, solve_weights, verify_exactness, QuadratureError, QuadratureRule, RuleCertificate};
use crate::spectral::{lp_norm, lp_norm_samples, Mask, Norm, Samples, SpectralError, SpectralVector};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eignet", version, about = "Eignet construction and verification on the circle and sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Parent directory for run directories.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve and certify quadrature weights on a point set.
    Quadrature,
    /// Build an eignet approximation from a target, samples or coefficients.
    Approximate,
    /// Run a named experiment.
    Experiment { name: String },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Eignet(#[from] EignetError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl CliError {
    /// Bad inputs exit 2; failed certifications exit 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Harness(HarnessError::Certification { .. })
            | CliError::Eignet(EignetError::UnderCertified { .. })
            | CliError::Quadrature(QuadratureError::Infeasible { .. }) => EXIT_FAIL,
            _ => EXIT_USAGE,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(IoError::Io(e))
    }
}

/// How a point set is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PointSource {
    /// `n` equispaced angles (circle only).
    Equispaced { n: usize },
    /// One point: `θ = 0` or the north pole.
    Single,
    /// `n` uniform random points from the run seed, greedily thinned at
    /// `epsilon` when given.
    Random {
        n: usize,
        #[serde(default)]
        epsilon: Option<f64>,
    },
    /// CSV point file.
    File { path: PathBuf },
}

impl PointSource {
    pub fn resolve(&self, kind: ManifoldKind, seed: u64, base: &Path) -> Result<PointSet, CliError> {
        let set = match self {
            PointSource::Equispaced { n } => {
                if kind != ManifoldKind::Circle || *n == 0 {
                    return Err(CliError::Config("equispaced points need the circle and n > 0".into()));
                }
                PointSet::equispaced_circle(*n)
            }
            PointSource::Single => PointSet::new(
                kind,
                vec![match kind {
                    ManifoldKind::Circle => Point::circle(0.0),
                    ManifoldKind::Sphere => Point::sphere(0.0, 0.0),
                }],
            )?,
            PointSource::Random { n, epsilon } => {
                let m = Manifold::new(kind, 0);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let raw = PointSet::new(kind, (0..*n).map(|_| m.random_point(&mut rng)).collect())?;
                match epsilon {
                    Some(e) => greedy_separate(&raw, *e)?.0,
                    None => raw,
                }
            }
            PointSource::File { path } => {
                let set = io::read_points(fs::File::open(base.join(path))?)?;
                if set.kind() != kind {
                    return Err(CliError::Config(format!(
                        "point file holds {} points, config says {}",
                        set.kind().name(),
                        kind.name()
                    )));
                }
                set
            }
        };
        if set.is_empty() {
            return Err(CliError::Config("point set is empty".into()));
        }
        Ok(set)
    }
}

fn default_circle() -> ManifoldKind {
    ManifoldKind::Circle
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_circle")]
    pub manifold: ManifoldKind,
    pub points: PointSource,
    pub order: f64,
    /// Also report the largest exact order up to this limit.
    #[serde(default)]
    pub sweep_limit: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

/// Where the function to approximate comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Source {
    Target(TargetSpec),
    /// CSV of `coords..., value`.
    Samples(PathBuf),
    /// CSV of `index, level, coefficient`.
    Spectral(PathBuf),
}

fn default_beta() -> f64 {
    4.0
}

fn default_kernel_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximateConfig {
    #[serde(default = "default_circle")]
    pub manifold: ManifoldKind,
    pub source: Source,
    /// Scale `L` of the operator.
    pub level: f64,
    /// Centers of the eignet; defaults to `4⌈L⌉` equispaced points on the
    /// circle, and to the sample points for sample input.
    #[serde(default)]
    pub centers: Option<PointSource>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_kernel_tol")]
    pub kernel_tol: f64,
    #[serde(default)]
    pub kernel_cap: Option<usize>,
    #[serde(default)]
    pub truth_level: Option<usize>,
    /// Fails the run when the sup error exceeds this.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

/// Record of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    /// Resolved configuration, or the raw JSON when it did not parse.
    pub config: Value,
    pub certificates: Value,
    pub outputs: Vec<String>,
    pub passed: bool,
    pub error: Option<String>,
}

/// What a command hands back to the driver.
struct Outcome {
    config: Value,
    certificates: Value,
    summary: Value,
    outputs: Vec<String>,
    passed: bool,
}

struct Ctx<'a> {
    dir: &'a Path,
    base: &'a Path,
    seed: u64,
    verbose: bool,
}

impl Ctx<'_> {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn file(&self, name: &str, outputs: &mut Vec<String>) -> PathBuf {
        outputs.push(name.to_string());
        self.dir.join(name)
    }
}

fn parse_config<T: for<'de> Deserialize<'de>>(raw: &Value, seed: u64) -> Result<T, CliError> {
    let mut v = raw.clone();
    if v.is_null() {
        v = json!({});
    }
    let obj = v
        .as_object_mut()
        .ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
    obj.insert("seed".into(), json!(seed));
    serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
}

fn cmd_quadrature(raw: &Value, ctx: &Ctx) -> Result<Outcome, CliError> {
    let cfg: QuadratureConfig = parse_config(raw, ctx.seed)?;
    let centers = cfg.points.resolve(cfg.manifold, cfg.seed, ctx.base)?;
    ctx.log(format!("solving order {} on {} centers", cfg.order, centers.len()));
    let manifold = Manifold::new(cfg.manifold, cfg.order.max(0.0) as usize);
    let rule = solve_weights(&manifold, &centers, cfg.order)?;
    let report = verify_exactness(&rule, cfg.order, 8, cfg.seed);
    let cert = rule.certificate(true);
    let sweep = match cfg.sweep_limit {
        Some(limit) => Some(order_sweep(&manifold, &centers, limit)?),
        None => None,
    };

    let mut outputs = Vec::new();
    io::to_file(&ctx.file("points.csv", &mut outputs), |w| io::write_points(w, &centers))?;
    io::to_file(&ctx.file("rule.csv", &mut outputs), |w| io::write_rule(w, &rule))?;
    io::to_file(&ctx.file("certificate.json", &mut outputs), |w| io::write_json(w, &cert))?;
    let passed = rule.is_exact();
    if !passed {
        ctx.log(format!("rule misses order {}: residual {:e}", cfg.order, rule.residual));
    }
    Ok(Outcome {
        config: serde_json::to_value(&cfg).expect("serializable"),
        certificates: json!({ "rules": [cert] }),
        summary: json!({
            "exact": passed,
            "residual": rule.residual,
            "method": rule.method,
            "exactness": report,
            "order_sweep": sweep,
        }),
        outputs,
        passed,
    })
}

/// Errors of an eignet against a reference, on a probe grid.
#[derive(Debug, Clone, Serialize)]
struct ErrorReport {
    sup: f64,
    l1: f64,
    l2: f64,
    probe_points: usize,
}

fn grid_errors(kind: ManifoldKind, degree: usize, f: impl Fn(&[Point]) -> Vec<f64>, psi: &SpectralVector) -> ErrorReport {
    let grid = Manifold::new(kind, degree).dense_grid(match kind {
        ManifoldKind::Circle => degree,
        ManifoldKind::Sphere => degree.min(32),
    });
    let truth = f(&grid.points);
    let approx = psi.synth_many(&grid.points);
    let diff: Vec<f64> = truth.iter().zip(&approx).map(|(a, b)| a - b).collect();
    ErrorReport {
        sup: lp_norm_samples(&diff, &grid.weights, Norm::Inf),
        l1: lp_norm_samples(&diff, &grid.weights, Norm::L1),
        l2: lp_norm_samples(&diff, &grid.weights, Norm::L2),
        probe_points: grid.len(),
    }
}

fn certified_rule(centers: &PointSet, level: f64) -> Result<QuadratureRule, CliError> {
    let m = Manifold::new(centers.kind(), 0);
    let order = required_rule_order(&m, level);
    let rule = solve_weights(&Manifold::new(centers.kind(), order as usize), centers, order)?;
    rule.require_exact()?;
    Ok(rule)
}

fn cmd_approximate(raw: &Value, ctx: &Ctx) -> Result<Outcome, CliError> {
    let cfg: ApproximateConfig = parse_config(raw, ctx.seed)?;
    if !(cfg.level >= 1.0) {
        return Err(CliError::Config(format!("level must be at least 1, got {}", cfg.level)));
    }
    let kind = cfg.manifold;
    let top = cfg.level.ceil() as usize;
    let mask = Mask::new(cfg.beta);
    let cap = cfg.kernel_cap.unwrap_or(match kind {
        ManifoldKind::Circle => 2048,
        ManifoldKind::Sphere => 64,
    });
    let default_centers = || match kind {
        ManifoldKind::Circle => Ok(PointSource::Equispaced { n: 4 * top }),
        ManifoldKind::Sphere => Err(CliError::Config("sphere runs need explicit centers".into())),
    };

    let mut samples_in = None;
    let (truth, closed): (Option<SpectralVector>, Option<Target>) = match &cfg.source {
        Source::Target(spec) => {
            let level = cfg.truth_level.unwrap_or(match kind {
                ManifoldKind::Circle => 4096,
                ManifoldKind::Sphere => 128,
            });
            let t = Target::new(spec.clone(), kind, level.max(top), cfg.seed)?;
            (Some(t.truth().clone()), Some(t))
        }
        Source::Spectral(path) => {
            let v = io::read_spectral(fs::File::open(ctx.base.join(path))?, kind)?;
            (Some(v), None)
        }
        Source::Samples(path) => {
            let (pts, vals) = io::read_samples(fs::File::open(ctx.base.join(path))?)?;
            if pts.kind() != kind {
                return Err(CliError::Config("sample file is on the wrong manifold".into()));
            }
            samples_in = Some((pts, vals));
            (None, None)
        }
    };

    let centers = match (&cfg.centers, &samples_in) {
        (Some(src), _) => src.resolve(kind, cfg.seed, ctx.base)?,
        (None, Some((pts, _))) => pts.clone(),
        (None, None) => default_centers()?.resolve(kind, cfg.seed, ctx.base)?,
    };
    ctx.log(format!("certifying rule on {} centers", centers.len()));
    let rule = certified_rule(&centers, cfg.level)?;

    let scale = truth.as_ref().map(|t| lp_norm(t, Norm::L2).value).unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let mut kernel = KernelG::with_tolerance(kind, mask, cfg.kernel_tol * scale, cap)?;
    if kernel.n_g() < top {
        kernel = KernelG::new(kind, kernel.mask().clone(), top);
    }

    let (net, errors) = match (&truth, &samples_in) {
        (Some(f), _) => {
            let net = g_operator(&f.resized(top.min(f.max_level())), cfg.level, &rule, &kernel)?;
            let psi = net.to_spectral();
            let deg = f.max_level().max(kernel.n_g()).max(4 * top);
            let errs = match &closed {
                Some(t) => grid_errors(kind, deg, |p| t.eval_many(p), &psi),
                None => grid_errors(kind, deg, |p| f.synth_many(p), &psi),
            };
            (net, json!({ "probe": errs, "l2_parseval": lp_norm(&f.sub(&psi)?, Norm::L2).value }))
        }
        (None, Some((pts, vals))) => {
            let samples = Samples::new(pts.points(), vals);
            let net = g_operator_discrete(&samples, cfg.level, &rule, &rule, &kernel)?;
            let at = net.eval_many(pts.points());
            let sup = vals.iter().zip(&at).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            (net, json!({ "sample_sup": sup }))
        }
        (None, None) => unreachable!("a source always yields truth or samples"),
    };
    let sup = errors["probe"]["sup"].as_f64().or(errors["sample_sup"].as_f64()).unwrap_or(f64::NAN);
    let passed = cfg.tolerance.is_none_or(|tol| sup <= tol);

    let header: KernelHeader = kernel.header();
    let mut outputs = Vec::new();
    io::to_file(&ctx.file("eignet.csv", &mut outputs), |w| io::write_eignet(w, &net))?;
    io::to_file(&ctx.file("eignet.json", &mut outputs), |w| io::write_json(w, &header))?;
    io::to_file(&ctx.file("rule.csv", &mut outputs), |w| io::write_rule(w, &rule))?;
    let rule_cert: RuleCertificate = rule.certificate(false);
    Ok(Outcome {
        config: serde_json::to_value(&cfg).expect("serializable"),
        certificates: json!({ "kernel": header, "rules": [rule_cert] }),
        summary: json!({
            "errors": errors,
            "sup_error": sup,
            "tolerance": cfg.tolerance,
            "centers": centers.len(),
        }),
        outputs,
        passed,
    })
}

fn cmd_experiment(name: ExperimentName, raw: &Value, ctx: &Ctx) -> Result<Outcome, CliError> {
    let mut overrides = raw.clone();
    if overrides.is_null() {
        overrides = json!({});
    }
    if let Some(obj) = overrides.as_object_mut() {
        obj.insert("seed".into(), json!(ctx.seed));
    }
    let cfg = ExperimentConfig::from_json(name, &overrides)?;
    ctx.log(format!("running {name}"));
    let report = run_experiment(name, &cfg)?;
    let mut outputs = Vec::new();
    for s in &report.series {
        let file = format!("{}.csv", s.label);
        io::to_file(&ctx.file(&file, &mut outputs), |w| io::write_rows(w, &s.rows))?;
    }
    for c in &report.checks {
        ctx.log(format!(
            "{} {}: {:?} in [{:?}, {:?}]",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.min,
            c.max
        ));
    }
    let certs: &Certificates = &report.certificates;
    Ok(Outcome {
        config: serde_json::to_value(&cfg).expect("serializable"),
        certificates: serde_json::to_value(certs).expect("serializable"),
        summary: json!({
            "experiment": name,
            "slopes": report.series.iter().map(|s| json!({"label": s.label, "fit": s.fit})).collect::<Vec<_>>(),
            "checks": report.checks,
            "passed": report.passed,
        }),
        outputs,
        passed: report.passed,
    })
}

/// Hex SHA-256 prefix over the command, seed and raw config bytes.
pub fn run_hash(command: &str, seed: u64, raw: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(seed.to_le_bytes());
    h.update(raw);
    h.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Run directory name for `command`.
pub fn run_dir_name(command: &str, seed: u64, raw: &[u8]) -> String {
    format!("{command}-s{seed}-{}", run_hash(command, seed, raw))
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> i32 {
    let command = match &cli.command {
        Command::Quadrature => "quadrature".to_string(),
        Command::Approximate => "approximate".to_string(),
        Command::Experiment { name } => format!("experiment-{name}"),
    };
    let name = match &cli.command {
        Command::Experiment { name } => match name.parse::<ExperimentName>() {
            Ok(n) => Some(n),
            Err(e) => {
                eprintln!("error: {e}");
                let known: Vec<&str> = ExperimentName::ALL.iter().map(|n| n.as_str()).collect();
                eprintln!("known experiments: {}", known.join(", "));
                return EXIT_USAGE;
            }
        },
        _ => None,
    };

    let (raw_bytes, read_err) = match &cli.config {
        Some(p) => match fs::read(p) {
            Ok(b) => (b, None),
            Err(e) => (Vec::new(), Some(format!("cannot read {}: {e}", p.display()))),
        },
        None => (Vec::new(), None),
    };
    let (raw, parse_err) = if raw_bytes.is_empty() {
        (Value::Null, None)
    } else {
        match serde_json::from_slice::<Value>(&raw_bytes) {
            Ok(v) => (v, None),
            Err(e) => (Value::Null, Some(format!("config is not JSON: {e}"))),
        }
    };
    let seed = cli.seed.or_else(|| raw.get("seed").and_then(Value::as_u64)).unwrap_or(0);
    let dir = cli.out.join(run_dir_name(&command, seed, &raw_bytes));
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_USAGE;
    }
    let base = cli
        .config
        .as_ref()
        .and_then(|p| p.parent())
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let ctx = Ctx {
        dir: &dir,
        base: &base,
        seed,
        verbose: cli.verbose,
    };

    let result = match read_err.or(parse_err) {
        Some(msg) => Err(CliError::Config(msg)),
        None => match (&cli.command, name) {
            (Command::Quadrature, _) => cmd_quadrature(&raw, &ctx),
            (Command::Approximate, _) => cmd_approximate(&raw, &ctx),
            (Command::Experiment { .. }, Some(n)) => cmd_experiment(n, &raw, &ctx),
            (Command::Experiment { .. }, None) => unreachable!("name parsed above"),
        },
    };

    let (manifest, summary, code) = match result {
        Ok(o) => {
            let code = if o.passed { EXIT_PASS } else { EXIT_FAIL };
            let mut outputs = o.outputs;
            outputs.extend(["summary.json".to_string(), "manifest.json".to_string()]);
            (
                RunManifest {
                    command: command.clone(),
                    version: env!("CARGO_PKG_VERSION").into(),
                    seed,
                    config_hash: run_hash(&command, seed, &raw_bytes),
                    config: o.config,
                    certificates: o.certificates,
                    outputs,
                    passed: o.passed,
                    error: None,
                },
                o.summary,
                code,
            )
        }
        Err(e) => {
            eprintln!("error: {e}");
            (
                RunManifest {
                    command: command.clone(),
                    version: env!("CARGO_PKG_VERSION").into(),
                    seed,
                    config_hash: run_hash(&command, seed, &raw_bytes),
                    config: raw,
                    certificates: Value::Null,
                    outputs: vec!["summary.json".into(), "manifest.json".into()],
                    passed: false,
                    error: Some(e.to_string()),
                },
                json!({ "passed": false, "error": e.to_string() }),
                e.exit_code(),
            )
        }
    };
    let summary = {
        let mut s = summary;
        if let Some(obj) = s.as_object_mut() {
            obj.insert("passed".into(), json!(manifest.passed));
            obj.insert("exit_code".into(), json!(code));
        }
        s
    };
    let written = io::to_file(&dir.join("summary.json"), |w| io::write_json(w, &summary))
        .and_then(|_| io::to_file(&dir.join("manifest.json"), |w| io::write_json(w, &manifest)));
    if let Err(e) = written {
        eprintln!("error: cannot write summary: {e}");
        return EXIT_USAGE;
    }
    if cli.verbose {
        eprintln!("wrote {}", dir.display());
    }
    println!("{}", dir.display());
    code
}
