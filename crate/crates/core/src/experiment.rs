//! Replicated experiments: normality of the plug-in statistic in the
//! Black–Scholes model, the OU discounted-integral oracle and the
//! derivative-process order check.

use std::fs;
use std::path::Path as FsPath;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ModelSpec;
use crate::derivative::build_derivative_system;
use crate::error::{invalid, Error, Result};
use crate::estimate::{bs_closed_form, fisher_info, limit_path, Observations};
use crate::functional::Functional;
use crate::inference::{
    asymptotic_variance, bs_call_closed_form, confidence_interval, estimate_c, fastest_rate,
    numerical_gradient, ou_discounted_closed_form, price_with_gradient, GradientEstimate,
    McSettings,
};
use crate::model::{bs_small_noise_model, ou_jump_model, ou_mean};
use crate::simulate::{
    coupled_paths, derive_seed, euler_path, sample_noise, sup_norm, sup_norm_moment, TimeGrid,
};
use crate::stats::{ks_critical_value, ks_statistic, mean_sd, normal_quantile, ols_slope, simpson};

fn default_theta0() -> Vec<f64> {
    vec![0.2, 1.0]
}
fn default_x0() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_replications() -> usize {
    300
}
fn default_strike() -> f64 {
    0.75
}
fn default_rate() -> f64 {
    0.05
}
fn default_alpha() -> f64 {
    0.05
}
fn default_ks_alpha() -> f64 {
    0.01
}
fn default_reference_paths() -> usize {
    100_000
}

/// Settings of the Black–Scholes plug-in experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_theta0")]
    pub theta0: Vec<f64>,
    #[serde(default = "default_x0")]
    pub x0: f64,
    /// Observation count; also the step count of the pricing grid.
    pub n: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Noise scale; `None` means `1/√n`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Pricing paths per replication.
    pub paths: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_strike")]
    pub strike: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default)]
    pub smoothing: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_ks_alpha")]
    pub ks_alpha: f64,
    pub root_seed: u64,
    /// Paths for the reference gradient `C_θ0`.
    #[serde(default = "default_reference_paths")]
    pub reference_paths: usize,
    /// Steps for the reference gradient; defaults to `n`.
    #[serde(default)]
    pub reference_steps: Option<usize>,
}

impl ExperimentConfig {
    /// Reference-scale defaults at sample size `n`.
    pub fn bs_default(n: usize, paths: usize, replications: usize, root_seed: u64) -> Self {
        Self {
            theta0: default_theta0(),
            x0: default_x0(),
            n,
            horizon: default_horizon(),
            epsilon: None,
            paths,
            replications,
            strike: default_strike(),
            rate: default_rate(),
            smoothing: None,
            alpha: default_alpha(),
            ks_alpha: default_ks_alpha(),
            root_seed,
            reference_paths: default_reference_paths(),
            reference_steps: None,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(1.0 / (self.n as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 30 {
            return Err(Error::Config(format!(
                "need at least 30 replications, got {}",
                self.replications
            )));
        }
        if self.paths < 1000 {
            return Err(Error::Config(format!(
                "need at least 1000 pricing paths, got {}",
                self.paths
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if !(self.epsilon() > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.theta0.len() != 2 {
            return Err(Error::Config("theta0 must be (mu, sigma)".into()));
        }
        Ok(())
    }

    fn functional(&self) -> Result<Functional> {
        Functional::smoothed_call_terminal(self.strike, self.rate, self.horizon, self.smoothing)
    }
}

/// One replication of the four-step study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replication: usize,
    pub data_seed: u64,
    pub pricing_seed: u64,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub h_hat: f64,
    pub h_se_mc: f64,
    /// `ε⁻¹(Ĥ - H(θ0)) / √(C_θ0ᵀ I_θ0⁻¹ C_θ0)`
    pub z_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub n: usize,
    pub epsilon: f64,
    pub replications: usize,
    pub failures: Vec<FailureRecord>,
    pub h_theta0: f64,
    pub c_theta0: Vec<f64>,
    pub c_theta0_se: Vec<f64>,
    pub asy_var_theta0: f64,
    pub ks_statistic: f64,
    pub ks_alpha: f64,
    pub ks_critical: f64,
    pub ks_pass: bool,
    pub z_mean: f64,
    pub z_sd: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub rows: Vec<ReplicationRow>,
    pub summary: ExperimentSummary,
}

impl ExperimentOutput {
    pub fn z_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.z_hat).collect()
    }
}

/// The reference quantities at θ0 used to normalise every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub h: f64,
    pub c: GradientEstimate,
    pub asy_var: f64,
}

fn bs_sigma(
    model: &crate::model::JumpDiffusionModel,
    theta: &[f64],
    grid: TimeGrid,
    x0: f64,
) -> Result<DMatrix<f64>> {
    let info = fisher_info(model, theta, &limit_path(model, theta, grid, x0)?)?;
    info.try_inverse()
        .ok_or_else(|| invalid("Fisher information is singular"))
}

/// `H(θ0)` in closed form, `C_θ0` by Monte Carlo and `C_θ0ᵀ I_θ0⁻¹ C_θ0`.
pub fn bs_reference(config: &ExperimentConfig) -> Result<ReferencePoint> {
    let eps = config.epsilon();
    let theta0 = &config.theta0;
    let model = bs_small_noise_model(theta0[0], theta0[1], eps, config.x0)?;
    let system = build_derivative_system(&model)?;
    let functional = config.functional()?;
    let steps = config.reference_steps.unwrap_or(config.n);
    let grid = TimeGrid::new(config.horizon, steps)?;
    let mc = McSettings::new(
        grid,
        config.reference_paths,
        derive_seed(config.root_seed, u64::MAX),
    )?;
    let c = estimate_c(&system, &functional, theta0, &mc)?;
    let sigma = bs_sigma(&model, theta0, grid, config.x0)?;
    let rates = [eps, 1.0 / (config.n as f64).sqrt()];
    let asy_var = asymptotic_variance(&c.mean, &sigma, Some(&rates))?;
    let h = bs_call_closed_form(
        theta0,
        eps,
        config.x0,
        config.strike,
        config.rate,
        config.horizon,
    )?;
    Ok(ReferencePoint { h, c, asy_var })
}

fn replicate(
    config: &ExperimentConfig,
    reference: &ReferencePoint,
    r: usize,
) -> Result<ReplicationRow> {
    let eps = config.epsilon();
    let theta0 = &config.theta0;
    let truth = bs_small_noise_model(theta0[0], theta0[1], eps, config.x0)?;
    let grid = TimeGrid::new(config.horizon, config.n)?;

    let data_seed = derive_seed(config.root_seed, 2 * r as u64);
    let path = euler_path(
        &truth,
        theta0,
        &sample_noise(&grid, &truth.jump_measure, data_seed),
    )?;
    let est = bs_closed_form(&Observations::from_path(&path, eps)?)?;
    let theta_hat = est.theta_hat.as_slice();

    let pricing_seed = derive_seed(config.root_seed, 2 * r as u64 + 1);
    let model = bs_small_noise_model(theta0[0], theta0[1], eps, config.x0)?;
    let system = build_derivative_system(&model)?;
    let mc = McSettings::new(grid, config.paths, pricing_seed)?;
    let run = price_with_gradient(&system, &config.functional()?, theta_hat, &mc)?;

    let z_hat = (run.h.mean - reference.h) / (eps * reference.asy_var.sqrt());

    let sigma_hat = bs_sigma(&model, theta_hat, grid, config.x0)?;
    let asy_var = asymptotic_variance(&run.c.mean, &sigma_hat, Some(&est.rates))?;
    let (ci_lo, ci_hi) =
        confidence_interval(run.h.mean, asy_var, fastest_rate(&est.rates)?, config.alpha)?;

    Ok(ReplicationRow {
        replication: r,
        data_seed,
        pricing_seed,
        mu_hat: theta_hat[0],
        sigma_hat: theta_hat[1],
        h_hat: run.h.mean,
        h_se_mc: run.h.stderr,
        z_hat,
        ci_lo,
        ci_hi,
        covered: ci_lo <= reference.h && reference.h <= ci_hi,
    })
}

/// Runs `R` replications of: simulate data at θ0, estimate θ̂, price at θ̂,
/// standardise. Failed replications are recorded; more than 5% aborts.
pub fn run_bs_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let reference = bs_reference(config)?;
    let results: Vec<Result<ReplicationRow>> = (0..config.replications)
        .into_par_iter()
        .map(|r| replicate(config, &reference, r))
        .collect();

    let mut rows = Vec::with_capacity(config.replications);
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(FailureRecord {
                replication: r,
                message: e.to_string(),
            }),
        }
    }
    if failures.len() * 20 > config.replications {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total: config.replications,
        });
    }

    let z: Vec<f64> = rows.iter().map(|r| r.z_hat).collect();
    let (z_mean, z_sd) = mean_sd(&z);
    let ks = ks_statistic(&z);
    let ks_critical = ks_critical_value(z.len(), config.ks_alpha);
    let coverage = rows.iter().filter(|r| r.covered).count() as f64 / rows.len() as f64;
    let summary = ExperimentSummary {
        n: config.n,
        epsilon: config.epsilon(),
        replications: config.replications,
        failures,
        h_theta0: reference.h,
        c_theta0: reference.c.mean.clone(),
        c_theta0_se: reference.c.stderr.clone(),
        asy_var_theta0: reference.asy_var,
        ks_statistic: ks,
        ks_alpha: config.ks_alpha,
        ks_critical,
        ks_pass: ks < ks_critical,
        z_mean,
        z_sd,
        coverage,
    };
    Ok(ExperimentOutput { rows, summary })
}

/// Sorted `(Φ⁻¹((i - ½)/R), z_(i))` pairs.
pub fn qq_pairs(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let r = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, z)| (normal_quantile((i as f64 + 0.5) / r), z))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `count / (R · width)`, comparable with the normal density.
    pub density: f64,
}

/// Counts on fixed bins of width 0.25 over `[-4, 4]`; values outside are dropped.
pub fn histogram(samples: &[f64]) -> Vec<HistogramBin> {
    const WIDTH: f64 = 0.25;
    const BINS: usize = 32;
    let mut counts = [0usize; BINS];
    for &z in samples {
        if (-4.0..=4.0).contains(&z) {
            let k = (((z + 4.0) / WIDTH) as usize).min(BINS - 1);
            counts[k] += 1;
        }
    }
    let total = samples.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &count)| HistogramBin {
            lo: -4.0 + k as f64 * WIDTH,
            hi: -4.0 + (k + 1) as f64 * WIDTH,
            count,
            density: count as f64 / (total * WIDTH),
        })
        .collect()
}

pub fn write_rows_csv<T: Serialize>(path: &FsPath, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<T: for<'de> Deserialize<'de>>(path: &FsPath) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[derive(Serialize)]
struct QqRow {
    theoretical: f64,
    empirical: f64,
}

/// Writes `replications.csv`, `summary.json`, `qq.csv` and `histogram.csv`.
pub fn write_experiment(output: &ExperimentOutput, dir: &FsPath) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rows_csv(&dir.join("replications.csv"), &output.rows)?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&output.summary)? + "\n",
    )?;
    let z = output.z_values();
    let qq: Vec<QqRow> = qq_pairs(&z)
        .into_iter()
        .map(|(theoretical, empirical)| QqRow {
            theoretical,
            empirical,
        })
        .collect();
    write_rows_csv(&dir.join("qq.csv"), &qq)?;
    write_rows_csv(&dir.join("histogram.csv"), &histogram(&z))?;
    Ok(())
}

fn default_ou_theta() -> Vec<f64> {
    vec![1.0, 0.3, 0.5]
}
fn default_intensity() -> f64 {
    1.0
}
fn default_discount() -> f64 {
    0.05
}
fn default_ou_steps() -> usize {
    1000
}

/// Settings of the OU discounted-integral oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuOracleConfig {
    #[serde(default = "default_ou_theta")]
    pub theta: Vec<f64>,
    #[serde(default = "default_intensity")]
    pub intensity: f64,
    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default = "default_discount")]
    pub discount: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_ou_steps")]
    pub steps: usize,
    pub paths: usize,
    pub root_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuOracleReport {
    pub h_mc: f64,
    pub h_se: f64,
    pub h_closed_form: f64,
    pub h_quadrature: f64,
    /// `|Ĥ - H| / se`
    pub h_z: f64,
    pub c_mc: Vec<f64>,
    pub c_se: Vec<f64>,
    /// Central-difference gradient of the closed form.
    pub c_closed_form: Vec<f64>,
    pub c_rel_err: Vec<f64>,
    /// `|Ĉ_σ| / se_σ`
    pub sigma_component_z: f64,
}

/// Monte Carlo `H` and `C` for the OU jump model against the closed form.
pub fn run_ou_oracle(config: &OuOracleConfig) -> Result<OuOracleReport> {
    let th = &config.theta;
    if th.len() != 3 {
        return Err(Error::Config("theta must be (mu, sigma, eta)".into()));
    }
    let model = ou_jump_model(th[0], th[1], th[2], config.intensity, config.x0)?;
    let system = build_derivative_system(&model)?;
    let functional = Functional::discounted_integral(config.discount, config.horizon)?;
    let grid = TimeGrid::new(config.horizon, config.steps)?;
    let mc = McSettings::new(grid, config.paths, config.root_seed)?;
    let run = price_with_gradient(&system, &functional, th, &mc)?;

    let closed = |t: &[f64]| {
        ou_discounted_closed_form(
            t,
            config.intensity,
            config.x0,
            config.discount,
            config.horizon,
        )
    };
    let h_closed_form = closed(th)?;
    let h_quadrature = simpson(
        |t| (-config.discount * t).exp() * ou_mean(th[0], th[2], config.intensity, config.x0, t),
        0.0,
        config.horizon,
        4000,
    );
    let c_closed_form = numerical_gradient(closed, th)?;
    let c_rel_err = run
        .c
        .mean
        .iter()
        .zip(&c_closed_form)
        .map(|(m, c)| {
            if *c == 0.0 {
                m.abs()
            } else {
                ((m - c) / c).abs()
            }
        })
        .collect();
    Ok(OuOracleReport {
        h_mc: run.h.mean,
        h_se: run.h.stderr,
        h_closed_form,
        h_quadrature,
        h_z: (run.h.mean - h_closed_form).abs() / run.h.stderr,
        sigma_component_z: run.c.mean[1].abs() / run.c.stderr[1],
        c_mc: run.c.mean,
        c_se: run.c.stderr,
        c_closed_form,
        c_rel_err,
    })
}

fn default_moment() -> u32 {
    2
}

/// Settings of the derivative-process order check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderCheckConfig {
    pub model: ModelSpec,
    /// Parameter point; the model's params when absent.
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    /// Unit direction of the perturbation `u = s · direction`.
    pub direction: Vec<f64>,
    pub scales: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub root_seed: u64,
    #[serde(default = "default_moment")]
    pub moment: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub scale: f64,
    pub norm_u: f64,
    pub moment: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCheckReport {
    pub rows: Vec<OrderRow>,
    /// Log-log slope of the moment against `|u|`; absent when every moment is zero.
    pub slope: Option<f64>,
    pub max_moment: f64,
}

/// `E‖X^{θ+u} - X^θ - uᵀY^θ‖^p_T` over a ladder of `|u|`, all on the same
/// noise bundles.
pub fn order_check(config: &OrderCheckConfig) -> Result<OrderCheckReport> {
    let model = config.model.build()?;
    let system = build_derivative_system(&model)?;
    let theta = config
        .theta
        .clone()
        .unwrap_or_else(|| config.model.params.clone());
    if config.direction.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: config.direction.len(),
        });
    }
    if config.scales.len() < 2 {
        return Err(Error::Config("need at least two scales".into()));
    }
    let grid = TimeGrid::new(config.horizon, config.steps)?;
    let dir_norm = config.direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    let noises: Vec<_> = (0..config.paths as u64)
        .map(|i| sample_noise(&grid, &model.jump_measure, derive_seed(config.root_seed, i)))
        .collect();

    let mut rows = Vec::with_capacity(config.scales.len());
    for &s in &config.scales {
        let u: Vec<f64> = config.direction.iter().map(|d| s * d).collect();
        let norms: Vec<Result<f64>> = noises
            .par_iter()
            .map(|noise| {
                Ok(sup_norm(
                    &coupled_paths(&system, &theta, &u, noise)?.residual(&u),
                ))
            })
            .collect();
        let norms: Vec<f64> = norms.into_iter().collect::<Result<_>>()?;
        let m = sup_norm_moment(&norms, config.moment)?;
        rows.push(OrderRow {
            scale: s,
            norm_u: s.abs() * dir_norm,
            moment: m.mean,
            stderr: m.stderr,
        });
    }
    let max_moment = rows.iter().fold(0.0f64, |a, r| a.max(r.moment));
    let slope = if rows.iter().all(|r| r.moment > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.norm_u.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.moment.ln()).collect();
        Some(ols_slope(&xs, &ys))
    } else {
        None
    };
    Ok(OrderCheckReport {
        rows,
        slope,
        max_moment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn smoke_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::bs_default(50, 1000, 30, 11);
        c.reference_paths = 2000;
        c
    }

    #[test]
    fn smoke_run_emits_all_rows() {
        let out = run_bs_experiment(&smoke_config()).unwrap();
        assert_eq!(out.rows.len(), 30);
        assert!(out.summary.failures.is_empty());
        assert!((0.0..=1.0).contains(&out.summary.ks_statistic));
        assert!(out
            .rows
            .iter()
            .all(|r| r.ci_lo <= r.h_hat && r.h_hat <= r.ci_hi));
    }

    #[test]
    fn runs_are_reproducible() {
        let a = run_bs_experiment(&smoke_config()).unwrap();
        let b = run_bs_experiment(&smoke_config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_limits() {
        let mut c = smoke_config();
        c.replications = 29;
        assert!(run_bs_experiment(&c).is_err());
        let mut c = smoke_config();
        c.paths = 999;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_defaults_from_json() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"n":500,"paths":10000,"root_seed":1}"#).unwrap();
        assert_eq!(c.replications, 300);
        assert_eq!(c.theta0, vec![0.2, 1.0]);
        assert!((c.epsilon() - 1.0 / 500f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn histogram_edges() {
        let h = histogram(&[-4.0, -3.9, 0.0, 3.99, 4.0, 5.0]);
        assert_eq!(h.len(), 32);
        assert_eq!(h[0].count, 2);
        assert_eq!(h[16].count, 1);
        assert_eq!(h[31].count, 2);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 5);
    }

    #[test]
    fn qq_is_sorted() {
        let qq = qq_pairs(&[0.3, -1.0, 2.0]);
        assert!(qq.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        assert!(qq[1].0.abs() < 1e-15);
    }

    #[test]
    fn ou_oracle_without_jump_mean() {
        let c = OuOracleConfig {
            theta: vec![1.0, 0.3, 0.0],
            intensity: 1.0,
            x0: 1.0,
            discount: 0.05,
            horizon: 1.0,
            steps: 50,
            paths: 200,
            root_seed: 3,
        };
        let r = run_ou_oracle(&c).unwrap();
        assert!((r.h_closed_form - (1.0 - (-1.05f64).exp()) / 1.05).abs() < 1e-15);
        assert!((r.h_closed_form - r.h_quadrature).abs() < 1e-12);
    }

    #[test]
    fn order_check_levy_is_exact() {
        let cfg = OrderCheckConfig {
            model: serde_json::from_str(r#"{"model":"levy","params":[0.1,0.5,0.7],"x0":0.0}"#)
                .unwrap(),
            theta: None,
            direction: vec![0.6, 0.0, 0.8],
            scales: vec![0.1, 0.2],
            horizon: 1.0,
            steps: 20,
            paths: 100,
            root_seed: 2,
            moment: 2,
        };
        let r = order_check(&cfg).unwrap();
        assert!(r.max_moment < 1e-20);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn csv_round_trip(
            vals in proptest::collection::vec((any::<u64>(), -1e6f64..1e6, 1e-9f64..1e3, any::<bool>()), 1..20)
        ) {
            let rows: Vec<ReplicationRow> = vals
                .iter()
                .enumerate()
                .map(|(i, &(seed, a, b, cov))| ReplicationRow {
                    replication: i,
                    data_seed: seed,
                    pricing_seed: seed.rotate_left(7),
                    mu_hat: a,
                    sigma_hat: b,
                    h_hat: a / 3.0,
                    h_se_mc: b * 1e-7,
                    z_hat: -a / 7.0,
                    ci_lo: a - b,
                    ci_hi: a + b,
                    covered: cov,
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("rows.csv");
            write_rows_csv(&p, &rows).unwrap();
            let back: Vec<ReplicationRow> = read_rows_csv(&p).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
