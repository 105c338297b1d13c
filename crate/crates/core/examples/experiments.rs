//! Runs one harness experiment and prints its series and checks.
//!
//! Run with `cargo run --release --example experiments -- bernstein '{"r": 2, "p": "2"}'`.
//! The optional second argument is a JSON object of config overrides.

use eignet::harness::{run_experiment, ExperimentConfig, ExperimentName};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name: ExperimentName = args.next().as_deref().unwrap_or("rates").parse()?;
    let overrides: serde_json::Value = match args.next() {
        Some(s) => serde_json::from_str(&s)?,
        None => serde_json::Value::Null,
    };
    let cfg = ExperimentConfig::from_json(name, &overrides)?;
    let report = run_experiment(name, &cfg)?;
    for s in &report.series {
        println!("[{}]", s.label);
        println!("{:>12} {:>14} {:>14}", "scale", "error", "constant");
        for r in &s.rows {
            println!("{:>12.4} {:>14.6e} {:>14.6e}", r.scale, r.error, r.constant);
        }
        if let Some(f) = &s.fit {
            println!("slope {:.4} (rms log residual {:.3})", f.slope, f.residual);
        }
    }
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {:?} in [{:?}, {:?}]", c.name, c.value, c.min, c.max);
    }
    std::process::exit(if report.passed { 0 } else { 1 });
}
