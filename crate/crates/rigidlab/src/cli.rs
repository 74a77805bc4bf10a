//! Command-line front end: ingestion, computation, verification, and
//! JSON reporting.
//!
//! Exit codes: 0 on success (all checks hold), 1 when a requested check
//! fails, 2 on usage or parse errors. Every JSON output carries the run
//! manifest under the `manifest` key, and keys are emitted sorted.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::bounds::{self, BoundReport};
use crate::graph::{self, Graph, GraphKind};
use crate::linalg;
use crate::optimizer::{self, OptimizerConfig};
use crate::rigidity::{Configuration, Framework, COINCIDENCE_TOL};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "rigidlab", version, about = "Bar-joint framework spectra and d-dimensional algebraic connectivity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stiffness and Laplacian spectra of a framework.
    Spectrum {
        /// Graph file (`n <N>` header, then `i j` edges).
        graph: PathBuf,
        /// Configuration CSV (one row of d coordinates per vertex).
        config: PathBuf,
        /// Ambient dimension.
        #[arg(short = 'd', long = "dim", alias = "d")]
        d: usize,
    },
    /// Evaluate bound checks on a framework.
    Check {
        graph: PathBuf,
        config: PathBuf,
        #[arg(short = 'd', long = "dim", alias = "d")]
        d: usize,
        /// Which check to run. `lemma2` uses the first coordinate axis
        /// and the Fiedler vector as its direction and weight vector.
        #[arg(long, value_enum, default_value_t = WhichCheck::All)]
        which: WhichCheck,
    },
    /// Estimate the d-dimensional algebraic connectivity from below.
    Estimate {
        graph: PathBuf,
        #[arg(short = 'd', long = "dim", alias = "d")]
        d: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, env = "RIGIDLAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-iters", default_value_t = 500)]
        max_iters: usize,
    },
    /// Batch-verify the bounds on random frameworks.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long = "max-n", default_value_t = 8)]
        max_n: usize,
        #[arg(long = "max-d", default_value_t = 4)]
        max_d: usize,
        #[arg(long, env = "RIGIDLAB_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhichCheck {
    Lemma1,
    Lemma2,
    Jordan,
    Theorem,
    Witness,
    All,
}

fn manifest(command: &str, inputs: &[&Path], parameters: BTreeMap<String, Value>) -> Value {
    json!({
        "command": command,
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "parameters": parameters,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn read_graph(path: &Path) -> Result<Graph> {
    Graph::from_text(&std::fs::read_to_string(path)?)
}

fn read_framework(graph_path: &Path, config_path: &Path, d: usize) -> Result<Framework> {
    if d < 1 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let graph = read_graph(graph_path)?;
    let config = Configuration::from_csv(&std::fs::read_to_string(config_path)?)?;
    if config.dimension() != d {
        return Err(Error::InvalidInput(format!(
            "configuration has {} coordinates per row, expected d = {d}",
            config.dimension()
        )));
    }
    Framework::new(graph, config)
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("valid json"));
}

/// Dispatch a parsed command. `Ok(code)` is the process exit code;
/// errors map to exit code 2 in `main`.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Spectrum { graph, config, d } => cmd_spectrum(&graph, &config, d),
        Command::Check { graph, config, d, which } => cmd_check(&graph, &config, d, which),
        Command::Estimate { graph, d, restarts, seed, max_iters } => {
            cmd_estimate(&graph, d, restarts, seed, max_iters)
        }
        Command::Fuzz { samples, max_n, max_d, seed } => cmd_fuzz(samples, max_n, max_d, seed),
    }
}

fn cmd_spectrum(graph_path: &Path, config_path: &Path, d: usize) -> Result<u8> {
    let fw = read_framework(graph_path, config_path, d)?;
    let stiffness = linalg::eigh(&fw.stiffness_matrix())?;
    let laplacian = linalg::eigh(&fw.graph().laplacian())?;
    let (a1, _) = fw.graph().algebraic_connectivity()?;
    let rigidity_eigenvalue = fw.rigidity_eigenvalue()?;

    let mut params = BTreeMap::new();
    params.insert("d".into(), json!(d));
    params.insert("coincidence_tol".into(), json!(COINCIDENCE_TOL));
    let out = json!({
        "manifest": manifest("spectrum", &[graph_path, config_path], params),
        "n": fw.vertex_count(),
        "d": d,
        "m": fw.affine_hull_dim(),
        "D": fw.trivial_dim(),
        "stiffness_spectrum": stiffness.values().to_vec(),
        "rigidity_eigenvalue": rigidity_eigenvalue,
        "laplacian_spectrum": laplacian.values().to_vec(),
        "a1": a1,
    });
    print_json(&out);
    Ok(0)
}

fn skipped_report(name: &str, reason: &str) -> Value {
    json!({
        "name": name,
        "lhs": 0.0,
        "rhs": 0.0,
        "margin": 0.0,
        "holds": true,
        "skipped": true,
        "context": { "reason": reason },
    })
}

fn report_value(report: &BoundReport) -> Value {
    serde_json::to_value(report).expect("report serializes")
}

fn cmd_check(graph_path: &Path, config_path: &Path, d: usize, which: WhichCheck) -> Result<u8> {
    let fw = read_framework(graph_path, config_path, d)?;
    let mut selected: Vec<BoundReport> = Vec::new();
    let mut skipped: Vec<Value> = Vec::new();

    if matches!(which, WhichCheck::Lemma1 | WhichCheck::All) {
        if fw.affine_hull_dim() > 1 {
            skipped.push(skipped_report(
                "lemma1",
                "affine hull dimension exceeds 1; identity does not apply",
            ));
        } else {
            selected.push(bounds::lemma1_check(&fw, bounds::LEMMA1_TOL)?);
        }
    }
    if matches!(which, WhichCheck::Lemma2 | WhichCheck::All) {
        let (_, fiedler) = fw.graph().algebraic_connectivity()?;
        let mut x = Array1::zeros(d);
        x[0] = 1.0;
        selected.push(bounds::lemma2_check(&fw, &x, &fiedler, bounds::DEFAULT_TOL)?);
    }
    if matches!(which, WhichCheck::Jordan | WhichCheck::All) {
        selected.extend(bounds::jordan_bound_check(&fw)?);
    }
    if matches!(which, WhichCheck::Theorem | WhichCheck::All) {
        selected.push(bounds::theorem_check(&fw)?);
    }
    if matches!(which, WhichCheck::Witness | WhichCheck::All) {
        selected.extend(bounds::witness_verify(&fw)?);
    }

    let all_hold = selected.iter().all(|r| r.holds);
    let mut reports: Vec<Value> = selected.iter().map(report_value).collect();
    reports.extend(skipped);

    let mut params = BTreeMap::new();
    params.insert("d".into(), json!(d));
    params.insert("which".into(), json!(format!("{which:?}").to_lowercase()));
    params.insert("margin_tol".into(), json!(bounds::DEFAULT_TOL));
    params.insert("lemma1_tol".into(), json!(bounds::LEMMA1_TOL));
    let out = json!({
        "manifest": manifest("check", &[graph_path, config_path], params),
        "reports": reports,
        "all_hold": all_hold,
    });
    print_json(&out);
    Ok(if all_hold { 0 } else { 1 })
}

fn cmd_estimate(
    graph_path: &Path,
    d: usize,
    restarts: usize,
    seed: u64,
    max_iters: usize,
) -> Result<u8> {
    if d < 1 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let graph = read_graph(graph_path)?;
    let cfg = OptimizerConfig { restarts, seed, max_iters, ..OptimizerConfig::default() };
    let result = optimizer::estimate_ad(&graph, d, &cfg)?;

    let best_points: Vec<Vec<f64>> = (0..result.best_config.vertex_count())
        .map(|i| result.best_config.point(i).to_vec())
        .collect();
    let mut params = BTreeMap::new();
    params.insert("d".into(), json!(d));
    params.insert("restarts".into(), json!(restarts));
    params.insert("seed".into(), json!(seed));
    params.insert("max_iters".into(), json!(max_iters));
    params.insert("convergence_tol".into(), json!(cfg.convergence_tol));
    let out = json!({
        "manifest": manifest("estimate", &[graph_path], params),
        "n": graph.vertex_count(),
        "d": d,
        "restarts": restarts,
        "best_value": result.best_value,
        "a1": result.a1,
        "certificate": result.certificate,
        "violation": result.violation,
        "per_restart": result.per_restart,
        "best_configuration": best_points,
    });
    print_json(&out);
    println!(
        "a_d_lower={} a_1={} margin={}",
        result.best_value, result.a1, result.certificate
    );
    Ok(0)
}

/// Collapse a group of reports into one: the member with the smallest
/// margin represents the group, and the group holds only if every
/// member holds.
fn aggregate(name: &str, reports: Vec<BoundReport>) -> BoundReport {
    let holds = reports.iter().all(|r| r.holds);
    let worst = reports
        .into_iter()
        .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap())
        .expect("non-empty report group");
    let mut out = worst.clone();
    out.context.insert("sub_check".into(), json!(worst.name));
    out.name = name.to_string();
    out.holds = holds;
    out
}

fn cmd_fuzz(samples: usize, max_n: usize, max_d: usize, seed: u64) -> Result<u8> {
    if max_n < 2 || max_d < 1 {
        return Err(Error::InvalidInput(
            "fuzz needs max-n >= 2 and max-d >= 1".into(),
        ));
    }
    let mut checked = 0usize;
    let mut failed = 0usize;
    let mut failures: Vec<Value> = Vec::new();

    for sample in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(sample as u64 + 1);
        let n = rng.random_range(2..=max_n);
        let d = rng.random_range(1..=max_d);
        let prob = rng.random_range(0.15..0.95);
        let graph_seed = rng.random::<u64>();
        let graph = graph::generate(&GraphKind::ErdosRenyi { n, prob, seed: graph_seed })?;
        let config = Configuration::random(n, d, &mut rng);
        let fw = Framework::new(graph.clone(), config.clone())?;

        let mut x = Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
        let xn = x.dot(&x).sqrt();
        x /= xn;
        let v = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));

        let reports = vec![
            bounds::theorem_check(&fw)?,
            aggregate("jordan", bounds::jordan_bound_check(&fw)?),
            bounds::lemma2_check(&fw, &x, &v, bounds::DEFAULT_TOL)?,
            aggregate("witness", bounds::witness_verify(&fw)?),
        ];

        let mut sample_failed = false;
        for report in reports {
            checked += 1;
            if !report.holds {
                failed += 1;
                sample_failed = true;
                let mut value = report_value(&report);
                value["sample"] = json!(sample);
                failures.push(value);
            }
        }
        if sample_failed {
            // Persist the offending inputs so the failure can be replayed.
            let graph_file = format!("fuzz_fail_{sample}.graph");
            let config_file = format!("fuzz_fail_{sample}.csv");
            std::fs::write(&graph_file, graph.to_text())?;
            std::fs::write(&config_file, config.to_csv())?;
            failures.push(json!({
                "sample": sample,
                "graph_file": graph_file,
                "config_file": config_file,
                "d": d,
            }));
        }
    }

    let mut params = BTreeMap::new();
    params.insert("samples".into(), json!(samples));
    params.insert("max_n".into(), json!(max_n));
    params.insert("max_d".into(), json!(max_d));
    params.insert("seed".into(), json!(seed));
    params.insert("margin_tol".into(), json!(bounds::DEFAULT_TOL));
    let out = json!({
        "manifest": manifest("fuzz", &[], params),
        "summary": { "checked": checked, "failed": failed },
        "failures": failures,
    });
    print_json(&out);
    println!("checked={checked} failed={failed}");
    Ok(if failed == 0 { 0 } else { 1 })
}
