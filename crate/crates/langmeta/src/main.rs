//! Command-line experiment runner: closed-form bound tables, violation-rate
//! simulations, escape-time sweeps, oracle verification, and re-classification
//! of stored trajectories.
//!
//! Exit codes: 0 on success (all verdicts PASS), 1 on an oracle FAIL or a
//! violated precondition, 2 on usage or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nalgebra::DVector;

use langmeta::config::{ExperimentConfig, LandscapeSpec, OutputFormat};
use langmeta::dynamics::{run_discrete_langevin, Beta, LangevinConfig};
use langmeta::io::{read_trajectory_file, trajectory_to_csv};
use langmeta::landscape::{find_local_minimum, Landscape, LocalMinimum};
use langmeta::manifest::RunManifest;
use langmeta::metastability::{
    classify_trajectory, escape_time_sweep, run_violation_study, TubeSpec,
};
use langmeta::oracles;
use langmeta::rng::derive_replica_seed;
use langmeta::theory::{self, TheoryBounds};
use langmeta::Error;

#[derive(Parser)]
#[command(
    name = "langmeta",
    version,
    about = "Discrete-time Langevin dynamics: metastability bounds, simulations and verifiers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate every closed-form bound for a configuration.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// Also write the results (and a manifest) into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output formats, overriding the config (json, csv, md).
        #[arg(long, value_delimiter = ',')]
        format: Option<Vec<OutputFormat>>,
    },
    /// Run the replica study classifying trajectories against the two-event
    /// dichotomy.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run even when the configured (eta, beta) pair is inadmissible.
        #[arg(long)]
        override_admissibility: bool,
        #[arg(long, value_delimiter = ',')]
        format: Option<Vec<OutputFormat>>,
    },
    /// Escape-time sweep over inverse temperatures on a double-well family.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated inverse temperatures, overriding the config.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run named verification oracles (or all of them).
    Verify {
        /// Oracle names; see --all for the full set.
        names: Vec<String>,
        #[arg(long)]
        all: bool,
        /// Seed shared by every named oracle; defaults to each oracle's
        /// frozen seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-classify stored binary trajectory dumps against a configuration.
    Classify {
        #[arg(long)]
        config: PathBuf,
        /// Trajectory files produced by `simulate`.
        inputs: Vec<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_)
        | Error::InvalidConstants(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::BadTrajectoryFile(_)
        | Error::UnknownOracle(..) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Minimizer search started along +e1: converges to the origin for convex
/// families and to the positive well for the double-well families.
fn locate_minimum(landscape: &dyn Landscape) -> Result<LocalMinimum, Error> {
    let d = landscape.dim();
    let mut start = DVector::zeros(d);
    start[0] = 1.0;
    find_local_minimum(landscape, &start, 1e-10)
}

fn formats_of(cfg: &ExperimentConfig, flag: &Option<Vec<OutputFormat>>) -> Vec<OutputFormat> {
    flag.clone().unwrap_or_else(|| cfg.output.formats.clone())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Bounds {
            config,
            out,
            format,
        } => cmd_bounds(&config, out.as_deref(), &format),
        Cmd::Simulate {
            config,
            seed,
            replicas,
            out,
            override_admissibility,
            format,
        } => cmd_simulate(
            &config,
            seed,
            replicas,
            out.as_deref(),
            override_admissibility,
            &format,
        ),
        Cmd::Sweep {
            config,
            betas,
            seed,
            replicas,
            out,
        } => cmd_sweep(&config, betas, seed, replicas, out.as_deref()),
        Cmd::Verify {
            names,
            all,
            seed,
            out,
        } => cmd_verify(&names, all, seed, out.as_deref()),
        Cmd::Classify { config, inputs } => cmd_classify(&config, &inputs),
    }
}

fn cmd_bounds(
    config_path: &Path,
    out: Option<&Path>,
    format: &Option<Vec<OutputFormat>>,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(config_path)?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let landscape = cfg.landscape.build()?;
    let params = cfg.params.to_problem_params(landscape.as_ref())?;
    let bounds = TheoryBounds::evaluate(&params)?;
    let json = serde_json::to_string_pretty(&bounds)?;
    let table = bounds.render_table();
    println!("{json}");
    println!("{table}");
    if let Some(dir) = out {
        let mut manifest = RunManifest::new(&text, cfg.run.seed);
        for f in formats_of(&cfg, format) {
            match f {
                OutputFormat::Json => {
                    manifest.write_output(dir, "bounds.json", json.as_bytes())?
                }
                OutputFormat::Md => manifest.write_output(dir, "bounds.md", table.as_bytes())?,
                OutputFormat::Csv => {
                    let csv = bounds_csv(&bounds);
                    manifest.write_output(dir, "bounds.csv", csv.as_bytes())?;
                }
            }
        }
        manifest.write(dir)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn bounds_csv(b: &TheoryBounds) -> String {
    let v = serde_json::to_value(b).expect("bounds serialize");
    let mut out = String::from("name,value\n");
    if let serde_json::Value::Object(map) = v {
        for (k, val) in map {
            match val {
                serde_json::Value::Number(n) => {
                    if let Some(f) = n.as_f64() {
                        if n.is_u64() || n.is_i64() {
                            out.push_str(&format!("{k},{}\n", n));
                        } else {
                            out.push_str(&format!("{k},{f:.16e}\n"));
                        }
                    }
                }
                serde_json::Value::Null => out.push_str(&format!("{k},\n")),
                other => out.push_str(&format!("{k},{other}\n")),
            }
        }
    }
    out
}

fn cmd_simulate(
    config_path: &Path,
    seed: Option<u64>,
    replicas: Option<usize>,
    out: Option<&Path>,
    override_flag: bool,
    format: &Option<Vec<OutputFormat>>,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(config_path)?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let landscape = cfg.landscape.build()?;
    let params = cfg.params.to_problem_params(landscape.as_ref())?;
    let lm = locate_minimum(landscape.as_ref())?;
    let seed = seed.unwrap_or(cfg.run.seed);
    let replicas = replicas.unwrap_or(cfg.run.replicas);
    let override_adm = override_flag || cfg.run.override_admissibility;
    let started = Instant::now();
    let report = run_violation_study(
        landscape.as_ref(),
        &lm,
        &params,
        cfg.run.eta_beta,
        override_adm,
        replicas,
        seed,
    )?;
    let sim_ms = started.elapsed().as_millis() as u64;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(dir) = out.map(Path::to_path_buf).or_else(|| {
        (!cfg.output.directory.is_empty()).then(|| PathBuf::from(&cfg.output.directory))
    }) {
        let dir = dir.as_path();
        let mut manifest = RunManifest::new(&text, seed);
        manifest.record_timing("simulate", sim_ms);
        manifest.write_output(dir, "report.json", json.as_bytes())?;
        let formats = formats_of(&cfg, format);
        for i in 0..cfg.output.trajectory_dump.min(replicas) {
            let traj_cfg = LangevinConfig {
                eta: report.eta,
                beta: Beta::Finite(report.beta),
                horizon_k: report.horizon_k,
                initial_point: report.initial_point.clone(),
                seed: derive_replica_seed(seed, i as u64),
            };
            let traj = run_discrete_langevin(landscape.as_ref(), &traj_cfg)?;
            let bin_name = format!("trajectory_{i}.bin");
            let mut bytes = Vec::new();
            langmeta::io::write_trajectory_bin(&traj, &mut bytes)?;
            manifest.write_output(dir, &bin_name, &bytes)?;
            if formats.contains(&OutputFormat::Csv) {
                let csv = trajectory_to_csv(&traj);
                manifest.write_output(dir, &format!("trajectory_{i}.csv"), csv.as_bytes())?;
            }
        }
        manifest.write(dir)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    config_path: &Path,
    betas_flag: Option<Vec<f64>>,
    seed: Option<u64>,
    replicas: Option<usize>,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(config_path)?;
    let cfg = ExperimentConfig::from_json(&text)?;
    if !matches!(
        cfg.landscape,
        LandscapeSpec::DoubleWell { .. } | LandscapeSpec::TiltedDoubleWell { .. }
    ) {
        return Err(Error::ParamOutOfRange(
            "the escape-time sweep requires a double-well family".into(),
        ));
    }
    let landscape = cfg.landscape.build()?;
    let lm = locate_minimum(landscape.as_ref())?;
    let betas = betas_flag
        .or_else(|| cfg.run.betas.clone())
        .ok_or_else(|| Error::InvalidConfig("no betas given (flag or run.betas)".into()))?;
    let eta = cfg
        .run
        .eta
        .ok_or_else(|| Error::InvalidConfig("run.eta is required for the sweep".into()))?;
    let budget_k = cfg.run.budget_k.unwrap_or(500_000);
    let seed = seed.unwrap_or(cfg.run.seed);
    let replicas = replicas.unwrap_or(cfg.run.replicas);
    let started = Instant::now();
    let stats = escape_time_sweep(
        landscape.as_ref(),
        &lm,
        &betas,
        eta,
        budget_k,
        replicas,
        seed,
    )?;
    let sweep_ms = started.elapsed().as_millis() as u64;
    let fully_censored = stats.mean_escape.iter().any(Option::is_none);
    let json = serde_json::to_string_pretty(&stats)?;
    println!("{json}");
    if let Some((slope, intercept, r2)) = stats.regression {
        println!("regression: slope {slope:.6}, intercept {intercept:.6}, r2 {r2:.6}");
    } else {
        println!("regression: unavailable (fewer than two uncensored temperatures)");
    }
    if fully_censored {
        eprintln!("warning: at least one beta had every replica censored; partial result");
    }
    if let Some(dir) = out.map(Path::to_path_buf).or_else(|| {
        (!cfg.output.directory.is_empty()).then(|| PathBuf::from(&cfg.output.directory))
    }) {
        let dir = dir.as_path();
        let mut manifest = RunManifest::new(&text, seed);
        manifest.record_timing("sweep", sweep_ms);
        manifest.partial = fully_censored;
        manifest.write_output(dir, "sweep.json", json.as_bytes())?;
        let mut csv = String::from("beta,replica,escape_time,censored\n");
        for (bi, beta) in stats.betas.iter().enumerate() {
            for (ri, t) in stats.escape_times[bi].iter().enumerate() {
                match t {
                    Some(t) => csv.push_str(&format!("{beta:.16e},{ri},{t:.16e},0\n")),
                    None => csv.push_str(&format!("{beta:.16e},{ri},,1\n")),
                }
            }
        }
        manifest.write_output(dir, "sweep.csv", csv.as_bytes())?;
        manifest.write(dir)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    names: &[String],
    all: bool,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let names: Vec<String> = if all {
        oracles::ORACLE_NAMES.iter().map(|s| s.to_string()).collect()
    } else if names.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no oracle named; pass --all or one of: {}",
            oracles::ORACLE_NAMES.join(", ")
        )));
    } else {
        names.to_vec()
    };
    let mut all_pass = true;
    let mut manifest = RunManifest::new("", seed.unwrap_or(0));
    for name in &names {
        let s = match seed {
            Some(s) => s,
            None => oracles::default_seed(name)?,
        };
        let started = Instant::now();
        let verdict = oracles::run_named(name, s)?;
        manifest.record_timing(name, started.elapsed().as_millis() as u64);
        print!("{}", verdict.render());
        all_pass &= verdict.passed();
        if let Some(dir) = out {
            let json = serde_json::to_string_pretty(&verdict)?;
            manifest.write_output(dir, &format!("verdict_{name}.json"), json.as_bytes())?;
        }
    }
    if let Some(dir) = out {
        manifest.write(dir)?;
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_classify(config_path: &Path, inputs: &[PathBuf]) -> Result<ExitCode, Error> {
    if inputs.is_empty() {
        return Err(Error::InvalidConfig("no trajectory files given".into()));
    }
    let text = std::fs::read_to_string(config_path)?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let landscape = cfg.landscape.build()?;
    let params = cfg.params.to_problem_params(landscape.as_ref())?;
    let lm = locate_minimum(landscape.as_ref())?;
    let tube = TubeSpec::new(
        lm.location.clone(),
        lm.hessian.clone(),
        params.epsilon,
        params.r,
        params.constants.dissipativity_m,
    )?;
    let t_rec = theory::recurrence_time(&params)?;
    let t_esc = t_rec + params.t_dwell;
    let mut records = Vec::new();
    for path in inputs {
        let traj = read_trajectory_file(path)?;
        let classification = classify_trajectory(&traj, &tube, t_rec, t_esc)?;
        records.push(serde_json::json!({
            "file": path.display().to_string(),
            "classification": classification,
        }));
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::Value::Array(records))?
    );
    Ok(ExitCode::SUCCESS)
}
