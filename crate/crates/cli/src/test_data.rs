use std::path::Path;

use gue::rng::{derive_seed, STREAM_CALIBRATION, STREAM_SPLIT};
use gue::sim::default_taus;
use gue::{
    calibrate_omega, ebh, global_test, gue_value, make_split, merge, solve_erm, CalibrationConfig,
    CheckLoss, Dataset, EValueSet, Error, NullSpec,
};
use serde::Serialize;

use crate::failure::{list, Failure};
use crate::TestArgs;

#[derive(Serialize)]
struct TauReport {
    tau: f64,
    omega: f64,
    log_gue: f64,
    gue: f64,
    under_covered: bool,
}

#[derive(Serialize)]
struct Report {
    rows: usize,
    target: usize,
    covariate: usize,
    alpha: f64,
    seed: u64,
    per_tau: Vec<TauReport>,
    transformed: Vec<f64>,
    discoveries: Vec<f64>,
    merged: f64,
    reject: bool,
}

/// Input problems exit with 2, numerical failures with 1.
fn classify(err: Error) -> Failure {
    match err {
        Error::DimensionMismatch { .. }
        | Error::EmptyDataset
        | Error::InvalidDataset(_)
        | Error::InvalidParameter { .. }
        | Error::TooFewRows { .. }
        | Error::RankDeficient { .. }
        | Error::NonFinite(_) => Failure::usage(err),
        other => Failure::runtime(other),
    }
}

/// Reads a numeric CSV. The first row is treated as a header when any of
/// its fields fails to parse as a number.
fn read_table(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(Failure::usage(format!(
                    "{}: row {} has a non-numeric field",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Failure::usage(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

pub fn run(args: TestArgs) -> Result<(), Failure> {
    let table = read_table(&args.data)?;
    let width = table[0].len();
    if let Some(i) = table.iter().position(|r| r.len() != width) {
        return Err(Failure::usage(format!("row {} has {} fields, expected {width}", i + 1, table[i].len())));
    }
    if width < 2 {
        return Err(Failure::usage("need a response column and at least one covariate"));
    }
    if args.target >= width {
        return Err(Failure::usage(format!("--target {} out of range (columns: {width})", args.target)));
    }
    let covariate_cols: Vec<usize> = (0..width).filter(|&c| c != args.target).collect();
    let covariate = args.covariate.unwrap_or(covariate_cols[0]);
    let Some(position) = covariate_cols.iter().position(|&c| c == covariate) else {
        return Err(Failure::usage(format!(
            "--covariate {covariate} must be a column other than the target (columns: {width})"
        )));
    };
    // Design column 0 is the intercept.
    let tested = position + 1;

    let taus = args.taus.clone().unwrap_or_else(default_taus);
    if taus.is_empty() {
        return Err(Failure::usage("--taus must not be empty"));
    }
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Failure::usage(format!("--taus: {t} must lie in (0, 1)")));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::usage(format!("--alpha: {} must lie in (0, 1)", args.alpha)));
    }

    let covariates: Vec<Vec<f64>> = table
        .iter()
        .map(|r| covariate_cols.iter().map(|&c| r[c]).collect())
        .collect();
    let response: Vec<f64> = table.iter().map(|r| r[args.target]).collect();
    let data = Dataset::from_covariates(&covariates, response).map_err(classify)?;
    // Surfaces rank problems before any resampling.
    solve_erm(&CheckLoss::new(0.5).map_err(classify)?, &data).map_err(classify)?;

    let split = make_split(data.n(), args.split_fraction, derive_seed(args.seed, STREAM_SPLIT))
        .map_err(classify)?;
    let null = NullSpec::zeroed(&[tested]).map_err(classify)?;
    let mut calibration = CalibrationConfig::new(args.alpha, derive_seed(args.seed, STREAM_CALIBRATION));
    calibration.bootstrap_reps = args.bootstrap_reps;
    calibration.split_fraction = args.split_fraction;
    if let Some(cap) = args.omega_cap {
        calibration.omega_cap = cap;
    }
    calibration.validate().map_err(classify)?;

    let mut per_tau = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let loss = CheckLoss::new(tau).map_err(classify)?;
        let rate = calibrate_omega(&loss, &data, &null, &calibration)
            .map_err(|e| Failure::runtime(format!("tau = {tau}: {e}")))?;
        let g = gue_value(&loss, &data, &split, &null, rate.omega)
            .map_err(|e| Failure::runtime(format!("tau = {tau}: {e}")))?;
        per_tau.push(TauReport {
            tau,
            omega: rate.omega,
            log_gue: g.log_gue,
            gue: g.evalue(),
            under_covered: rate.under_covered,
        });
    }

    let logs: Vec<f64> = per_tau.iter().map(|t| t.log_gue).collect();
    let set = EValueSet::from_log_values(&logs, (0..logs.len()).collect()).map_err(Failure::runtime)?;
    let result = ebh(&set, args.alpha).map_err(Failure::runtime)?;
    let merged = merge(&set);
    let reject = global_test(&merged, args.alpha).map_err(Failure::runtime)?;
    let report = Report {
        rows: data.n(),
        target: args.target,
        covariate,
        alpha: args.alpha,
        seed: args.seed,
        transformed: result.transformed.clone(),
        discoveries: result.discoveries.iter().map(|&i| taus[i]).collect(),
        merged: merged.value,
        reject,
        per_tau,
    };

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    println!("rows: {}  target column: {}  tested column: {}", report.rows, report.target, report.covariate);
    println!("{:>8} {:>12} {:>12} {:>12}", "tau", "omega", "log_gue", "gue");
    for t in &report.per_tau {
        let flag = if t.under_covered { " (under-covered)" } else { "" };
        println!("{:>8.4} {:>12.4} {:>12.4} {:>12.4e}{flag}", t.tau, t.omega, t.log_gue, t.gue);
    }
    println!("e-BH discoveries (tau): {}", list(&report.discoveries));
    println!("merged e-value: {}", report.merged);
    println!(
        "global test at alpha = {}: {}",
        report.alpha,
        if report.reject { "reject" } else { "fail to reject" }
    );
    Ok(())
}
