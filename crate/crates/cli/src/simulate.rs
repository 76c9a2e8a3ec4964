use std::fs;
use std::path::Path;

use gue::sim::{run_experiment, SimMetrics};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::failure::Failure;
use crate::SimulateArgs;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Serialize)]
struct MetricsRow {
    family: String,
    signal: f64,
    n: usize,
    alpha: f64,
    reps: usize,
    rejection_rate: f64,
    type2_rate: f64,
    empirical_fdr: f64,
}

#[derive(Serialize)]
struct RateRow {
    family: String,
    signal: f64,
    n: usize,
    tau: f64,
    mean_omega: f64,
    se_omega: f64,
}

#[derive(Serialize)]
struct Manifest {
    config_digest: String,
    seed: u64,
    tool_version: &'static str,
    timestamp: String,
}

fn io_failure(path: &Path, err: impl std::fmt::Display) -> Failure {
    Failure::runtime(format!("{}: {err}", path.display()))
}

pub fn run(args: SimulateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(taus) = args.taus {
        config.taus = Some(taus);
        config.tau_count = None;
    }
    if let Some(fraction) = args.split_fraction {
        config.split_fraction = fraction;
    }
    config.resolve_taus()?;
    config.validate()?;
    let cells = config.cells()?;

    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let resolved = config.to_toml();
    let resolved_path = args.out.join(RESOLVED_CONFIG);
    fs::write(&resolved_path, &resolved).map_err(|e| io_failure(&resolved_path, e))?;

    let mut metrics = Vec::with_capacity(cells.len());
    for cell in &cells {
        eprintln!(
            "running {} signal={} n={} reps={}",
            cell.family.family, cell.family.signal, cell.sim.n, cell.sim.reps
        );
        let m = run_experiment(&cell.family, &cell.sim).map_err(|e| {
            Failure::runtime(format!(
                "{} signal={} n={}: {e}",
                cell.family.family, cell.family.signal, cell.sim.n
            ))
        })?;
        metrics.push((m, cell.sim.taus.clone()));
    }

    write_metrics(&args.out.join("metrics.csv"), &metrics)?;
    write_rates(&args.out.join("learning_rates.csv"), &metrics)?;

    let manifest = Manifest {
        config_digest: hex::encode(Sha256::digest(resolved.as_bytes())),
        seed: config.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let manifest_path = args.out.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, body + "\n").map_err(|e| io_failure(&manifest_path, e))?;
    eprintln!("wrote results to {}", args.out.display());
    Ok(())
}

fn write_metrics(path: &Path, metrics: &[(SimMetrics, Vec<f64>)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    for (m, _) in metrics {
        w.serialize(MetricsRow {
            family: m.family.family.to_string(),
            signal: m.family.signal,
            n: m.n,
            alpha: m.alpha,
            reps: m.reps,
            rejection_rate: m.rejection_rate,
            type2_rate: m.type2_rate,
            empirical_fdr: m.empirical_fdr,
        })
        .map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

fn write_rates(path: &Path, metrics: &[(SimMetrics, Vec<f64>)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    for (m, taus) in metrics {
        for (tau, rate) in taus.iter().zip(&m.mean_omega_per_tau) {
            w.serialize(RateRow {
                family: m.family.family.to_string(),
                signal: m.family.signal,
                n: m.n,
                tau: *tau,
                mean_omega: rate.mean,
                se_omega: rate.se,
            })
            .map_err(|e| io_failure(path, e))?;
        }
    }
    w.flush().map_err(|e| io_failure(path, e))
}
