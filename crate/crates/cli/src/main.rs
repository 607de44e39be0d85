use std::fs;
use std::io::{self, Write};
use std::path::{Path as FsPath, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use jdinfer_core::estimate::{bs_closed_form, minimize_contrast, EstimatorResult, Observations};
use jdinfer_core::experiment::{
    write_rows_csv, ExperimentConfig, OrderCheckConfig, OuOracleConfig,
};
use jdinfer_core::inference::{inference_report, plugin_h, McSettings};
use jdinfer_core::{
    build_derivative_system, derive_seed, euler_with_derivative, fisher_info, limit_path,
    order_check, run_bs_experiment, run_ou_oracle, sample_noise, write_experiment, FunctionalSpec,
    ModelSpec, TimeGrid,
};

#[derive(Parser)]
#[command(
    name = "jdinfer",
    version,
    about = "Plug-in inference for jump-diffusion path functionals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths of X and the derivative process Y as CSV.
    Simulate(SimulateArgs),
    /// Estimate θ from a CSV of observations (columns t, X).
    Estimate(EstimateArgs),
    /// Plug-in price with asymptotic variance and confidence interval.
    Price(PriceArgs),
    /// Run a replicated experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Check the convergence order of the derivative process.
    OrderCheck(OrderCheckArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model spec (JSON file).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Model name; only `black_scholes` has a contrast estimator.
    #[arg(long, default_value = "black_scholes")]
    model: String,
    #[arg(long)]
    epsilon: f64,
    /// Starting point for the minimiser, comma separated; the explicit
    /// estimator is used when absent.
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<f64>>,
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    config: PathBuf,
    /// Monte Carlo paths.
    #[arg(long = "B", alias = "paths", default_value_t = 10_000)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for output artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct OrderCheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PriceConfig {
    model: ModelSpec,
    functional: FunctionalSpec,
    steps: usize,
    /// Pricing point; the model params when absent.
    #[serde(default)]
    theta_hat: Option<Vec<f64>>,
    #[serde(default = "default_alpha")]
    alpha: f64,
    /// Diagonal of `Γ_n`; every coordinate at the model's noise scale when absent.
    #[serde(default)]
    rates: Option<Vec<f64>>,
    /// Reference point for the normalised statistic.
    #[serde(default)]
    theta0: Option<Vec<f64>>,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
enum ExperimentSpec {
    BlackScholes(ExperimentConfig),
    OuOracle(OuOracleConfig),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &FsPath) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let spec: ModelSpec = read_json(&args.model)?;
    let model = spec.build()?;
    let system = build_derivative_system(&model)?;
    let grid = TimeGrid::new(args.horizon, args.steps)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => {
            Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let p = model.dim();
    let mut header = vec!["path_id".to_string(), "t".into(), "X".into()];
    header.extend((1..=p).map(|i| format!("Y{i}")));
    w.write_record(&header)?;
    for id in 0..args.paths {
        let noise = sample_noise(
            &grid,
            &model.jump_measure,
            derive_seed(args.seed, id as u64),
        );
        let (x, y) = euler_with_derivative(&system, &spec.params, &noise)?;
        for k in 0..=grid.steps() {
            let mut rec = vec![
                id.to_string(),
                grid.time(k).to_string(),
                x.values[k].to_string(),
            ];
            rec.extend(y.at(k).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct ObservationRow {
    t: f64,
    #[serde(rename = "X")]
    x: f64,
}

fn read_observations(path: &FsPath, epsilon: f64) -> Result<Observations> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<ObservationRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    ensure!(rows.len() >= 2, "need at least two observations");
    ensure!(rows[0].t == 0.0, "observations must start at t = 0");
    let n = rows.len() - 1;
    let horizon = rows[n].t;
    let grid = TimeGrid::new(horizon, n)?;
    for (k, row) in rows.iter().enumerate() {
        ensure!(
            (row.t - grid.time(k)).abs() <= 1e-9 * horizon.max(1.0),
            "observation times must be equally spaced (row {k}, t = {})",
            row.t
        );
    }
    Ok(Observations::new(
        grid,
        rows.into_iter().map(|r| r.x).collect(),
        epsilon,
    )?)
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    if args.model != "black_scholes" && args.model != "bs" {
        bail!(
            "no contrast estimator for model `{}`; supported: black_scholes",
            args.model
        );
    }
    let obs = read_observations(&args.data, args.epsilon)?;
    let result: EstimatorResult = match &args.init {
        None => bs_closed_form(&obs)?,
        Some(init) => {
            ensure!(init.len() == 2, "--init takes two values (mu, sigma)");
            let model =
                jdinfer_core::bs_small_noise_model(init[0], init[1], args.epsilon, obs.samples[0])?;
            minimize_contrast(&obs, &model, init)?
        }
    };
    print_json(&result)
}

fn price(args: &PriceArgs) -> Result<()> {
    let cfg: PriceConfig = read_json(&args.config)?;
    let model = cfg.model.build()?;
    let system = build_derivative_system(&model)?;
    let functional = cfg.functional.build()?;
    let grid = TimeGrid::new(cfg.functional.horizon, cfg.steps)?;
    let mc = McSettings::new(grid, args.paths, args.seed)?;
    let theta = cfg
        .theta_hat
        .clone()
        .unwrap_or_else(|| cfg.model.params.clone());
    let x0 = model.x0(&theta);
    let info = fisher_info(&model, &theta, &limit_path(&model, &theta, grid, x0)?)?;
    let sigma: DMatrix<f64> = info
        .try_inverse()
        .context("Fisher information is singular")?;
    let rates = cfg
        .rates
        .clone()
        .unwrap_or_else(|| vec![model.noise_scale; theta.len()]);
    let reference = match &cfg.theta0 {
        Some(t0) => Some(plugin_h(&model, &functional, t0, &mc)?.mean),
        None => None,
    };
    let report = inference_report(
        &system,
        &functional,
        &theta,
        &sigma,
        &rates,
        cfg.alpha,
        &mc,
        reference,
    )?;
    print_json(&report)
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    match read_json::<ExperimentSpec>(&args.config)? {
        ExperimentSpec::BlackScholes(cfg) => {
            let out = run_bs_experiment(&cfg)?;
            write_experiment(&out, &args.out)?;
            print_json(&out.summary)
        }
        ExperimentSpec::OuOracle(cfg) => {
            let report = run_ou_oracle(&cfg)?;
            fs::create_dir_all(&args.out)?;
            fs::write(
                args.out.join("ou_oracle.json"),
                serde_json::to_string_pretty(&report)? + "\n",
            )?;
            print_json(&report)
        }
    }
}

fn run_order_check(args: &OrderCheckArgs) -> Result<()> {
    let cfg: OrderCheckConfig = read_json(&args.config)?;
    let report = order_check(&cfg)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        write_rows_csv(&dir.join("order_check.csv"), &report.rows)?;
    }
    print_json(&report)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Price(a) => price(a),
        Command::Experiment(a) => experiment(a),
        Command::OrderCheck(a) => run_order_check(a),
    }
}
