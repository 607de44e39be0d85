//! Plug-in estimation of `H(θ) = E[h(X^θ)]` with asymptotic error bars.
//!
//! For an estimator with `Γ_n⁻¹(θ̂ - θ0) → N(0, Σ)`, the plug-in value
//! satisfies `γ⁻¹(H(θ̂) - H(θ0)) → N(0, Cᵀ Σ C)` where `C = E[φ'(X_*) Ỹ]` is
//! the pathwise gradient and γ the fastest rate in `Γ_n`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derivative::DerivativeSystem;
use crate::error::{invalid, Error, Result};
use crate::functional::Functional;
use crate::model::JumpDiffusionModel;
use crate::simulate::{
    derive_seed, euler_path, euler_with_derivative, sample_noise, McEstimate, TimeGrid,
};
use crate::stats::{compensated_sum, mean_stderr, normal_cdf, normal_quantile};

/// Monte Carlo settings shared by the pricing routines. Path `i` uses the
/// noise seed `derive_seed(root_seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub grid: TimeGrid,
    pub paths: usize,
    pub root_seed: u64,
}

impl McSettings {
    pub fn new(grid: TimeGrid, paths: usize, root_seed: u64) -> Result<Self> {
        if paths < 100 {
            return Err(invalid(format!("need at least 100 paths, got {paths}")));
        }
        Ok(Self {
            grid,
            paths,
            root_seed,
        })
    }
}

/// Componentwise Monte Carlo estimate of `C_θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// `H` and `C` from one set of coupled paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceWithGradient {
    pub h: McEstimate,
    pub c: GradientEstimate,
}

// runs `f` on every path in parallel and returns results in path order;
// the first failing path (by index) is reported
fn per_path<T, F>(mc: &McSettings, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let results: Vec<Result<T>> = (0..mc.paths as u64)
        .into_par_iter()
        .map(|i| {
            f(derive_seed(mc.root_seed, i)).map_err(|e| Error::PathFailed {
                path: i,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

fn summarize_vectors(rows: &[Vec<f64>], p: usize) -> GradientEstimate {
    let mut mean = Vec::with_capacity(p);
    let mut stderr = Vec::with_capacity(p);
    let mut col = vec![0.0; rows.len()];
    for i in 0..p {
        for (c, r) in col.iter_mut().zip(rows) {
            *c = r[i];
        }
        let (m, s) = mean_stderr(&col);
        mean.push(m);
        stderr.push(s);
    }
    GradientEstimate { mean, stderr }
}

/// `Ĥ = B⁻¹ Σ h(X^{θ̂, (i)})`
pub fn plugin_h(
    model: &JumpDiffusionModel,
    functional: &Functional,
    theta: &[f64],
    mc: &McSettings,
) -> Result<McEstimate> {
    model.param_box.check(theta)?;
    let values = per_path(mc, |seed| {
        let noise = sample_noise(&mc.grid, &model.jump_measure, seed);
        functional.eval(&euler_path(model, theta, &noise)?)
    })?;
    let (mean, stderr) = mean_stderr(&values);
    Ok(McEstimate { mean, stderr })
}

/// `Ĉ_θ = B⁻¹ Σ φ'(X_*) Ỹ` over paths of the joint `(X, Y)` scheme.
pub fn estimate_c(
    system: &DerivativeSystem<'_>,
    functional: &Functional,
    theta: &[f64],
    mc: &McSettings,
) -> Result<GradientEstimate> {
    Ok(price_with_gradient(system, functional, theta, mc)?.c)
}

/// `Ĥ` and `Ĉ` on common random numbers: both use the same paths.
pub fn price_with_gradient(
    system: &DerivativeSystem<'_>,
    functional: &Functional,
    theta: &[f64],
    mc: &McSettings,
) -> Result<PriceWithGradient> {
    let model = system.model();
    model.param_box.check(theta)?;
    let draws = per_path(mc, |seed| {
        let noise = sample_noise(&mc.grid, &model.jump_measure, seed);
        let (x, y) = euler_with_derivative(system, theta, &noise)?;
        Ok((functional.eval(&x)?, functional.pathwise_gradient(&x, &y)?))
    })?;
    let values: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let grads: Vec<Vec<f64>> = draws.into_iter().map(|d| d.1).collect();
    let (mean, stderr) = mean_stderr(&values);
    Ok(PriceWithGradient {
        h: McEstimate { mean, stderr },
        c: summarize_vectors(&grads, system.dim()),
    })
}

fn check_square(sigma: &DMatrix<f64>, p: usize) -> Result<()> {
    if sigma.nrows() != p || sigma.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: sigma.nrows().max(sigma.ncols()),
        });
    }
    for i in 0..p {
        for j in 0..i {
            let (a, b) = (sigma[(i, j)], sigma[(j, i)]);
            if (a - b).abs() > 1e-10 * a.abs().max(b.abs()).max(1.0) {
                return Err(invalid("covariance matrix is not symmetric"));
            }
        }
    }
    Ok(())
}

/// The fastest rate γ* among `rates` (the largest entry of `Γ_n`).
pub fn fastest_rate(rates: &[f64]) -> Result<f64> {
    let r = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("rates must be positive and finite"));
    }
    Ok(r)
}

/// `Ĉᵀ Σ Ĉ`. With `rates`, coordinates converging strictly faster than γ*
/// are zeroed; they vanish after scaling by γ*⁻¹.
pub fn asymptotic_variance(c: &[f64], sigma: &DMatrix<f64>, rates: Option<&[f64]>) -> Result<f64> {
    let p = c.len();
    check_square(sigma, p)?;
    let mut masked = c.to_vec();
    if let Some(rates) = rates {
        if rates.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: rates.len(),
            });
        }
        let top = fastest_rate(rates)?;
        for (m, r) in masked.iter_mut().zip(rates) {
            if (r - top).abs() > 1e-12 * top {
                *m = 0.0;
            }
        }
    }
    let v = compensated_sum((0..p).flat_map(|i| {
        let m = &masked;
        (0..p).map(move |j| m[i] * sigma[(i, j)] * m[j])
    }));
    // rounding can push a PSD form a hair below zero
    Ok(v.max(0.0))
}

/// `H ∓ z_{α/2} γ √v`
pub fn confidence_interval(h: f64, asy_var: f64, rate: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(asy_var >= 0.0) {
        return Err(invalid(format!(
            "asymptotic variance must be >= 0, got {asy_var}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let half = normal_quantile(1.0 - alpha / 2.0) * rate * asy_var.sqrt();
    Ok((h - half, h + half))
}

/// Central-difference gradient with steps `max(1e-6, 1e-6 |θ_i|)`.
pub fn numerical_gradient<F>(h: F, theta: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let step = (1e-6 * theta[i].abs()).max(1e-6);
        probe[i] = theta[i] + step;
        let up = h(&probe)?;
        probe[i] = theta[i] - step;
        let dn = h(&probe)?;
        probe[i] = theta[i];
        if !(up.is_finite() && dn.is_finite()) {
            return Err(invalid(format!("H is not finite near θ in coordinate {i}")));
        }
        grad.push((up - dn) / (2.0 * step));
    }
    Ok(grad)
}

/// `∇H(θ̂)ᵀ Σ ∇H(θ̂)` with a central-difference gradient.
pub fn delta_method_variance<F>(h: F, theta: &[f64], sigma: &DMatrix<f64>) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let grad = numerical_gradient(h, theta)?;
    asymptotic_variance(&grad, sigma, None)
}

/// Price of a European call under the model's own (physical) law,
/// `E[e^{-rT} (X_T - K)⁺]` for `dX = μX dt + εσX dW`:
///
/// ```text
/// e^{-(r-μ)T} [x Φ(d₁) - K e^{-μT} Φ(d₂)]
/// d₁ = (log(x/K) + (μ + ε²σ²/2)T) / (εσ√T),  d₂ = d₁ - εσ√T
/// ```
pub fn bs_call_closed_form(
    theta: &[f64],
    epsilon: f64,
    x: f64,
    strike: f64,
    rate: f64,
    horizon: f64,
) -> Result<f64> {
    if theta.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: theta.len(),
        });
    }
    if strike < 0.0 {
        return Err(invalid(format!("strike must be >= 0, got {strike}")));
    }
    if !(x > 0.0 && horizon > 0.0 && epsilon >= 0.0) {
        return Err(invalid("need x > 0, T > 0 and epsilon >= 0"));
    }
    let (mu, sigma) = (theta[0], theta[1]);
    let growth = (mu * horizon).exp();
    let discount = (-rate * horizon).exp();
    if strike == 0.0 {
        return Ok(x * growth * discount);
    }
    let s = epsilon * sigma.abs() * horizon.sqrt();
    if s == 0.0 {
        return Ok(discount * (x * growth - strike).max(0.0));
    }
    let d1 = ((x / strike).ln() + mu * horizon + 0.5 * s * s) / s;
    let d2 = d1 - s;
    Ok(discount * (x * growth * normal_cdf(d1) - strike * normal_cdf(d2)))
}

/// Discounted integral `∫₀ᵀ e^{-δt} E[X_t] dt` for the OU jump model:
///
/// ```text
/// x (1 - e^{-(μ+δ)T})/(μ+δ) + (λη/μ) [(1 - e^{-δT})/δ - (1 - e^{-(μ+δ)T})/(μ+δ)]
/// ```
///
/// `δ = 0` uses the limit `(1 - e^{-δT})/δ → T`.
pub fn ou_discounted_closed_form(
    theta: &[f64],
    intensity: f64,
    x: f64,
    discount: f64,
    horizon: f64,
) -> Result<f64> {
    if theta.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: theta.len(),
        });
    }
    let (mu, eta) = (theta[0], theta[2]);
    if !(mu > 0.0) {
        return Err(invalid(format!("mu must be positive, got {mu}")));
    }
    if !(discount >= 0.0 && horizon > 0.0) {
        return Err(invalid("need discount >= 0 and T > 0"));
    }
    let decay_integral = |rate: f64| {
        if rate == 0.0 {
            horizon
        } else {
            -(-rate * horizon).exp_m1() / rate
        }
    };
    let md = decay_integral(mu + discount);
    Ok(x * md + intensity * eta / mu * (decay_integral(discount) - md))
}

/// Output of the `price` workflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub theta: Vec<f64>,
    pub h_hat: f64,
    pub h_se_mc: f64,
    pub c_hat: Vec<f64>,
    pub c_se: Vec<f64>,
    pub asy_var: f64,
    pub rate: f64,
    pub alpha: f64,
    pub ci: (f64, f64),
    /// `γ⁻¹(Ĥ - H(θ0)) / √v`, when a reference θ0 is supplied.
    pub z_hat: Option<f64>,
}

/// Plug-in price, gradient, asymptotic variance and interval at θ̂.
///
/// `sigma` is the asymptotic covariance of `Γ_n⁻¹(θ̂ - θ0)` and `rates` the
/// diagonal of `Γ_n`. With `reference = Some(H(θ0))` the normalised
/// statistic is reported too.
pub fn inference_report(
    system: &DerivativeSystem<'_>,
    functional: &Functional,
    theta_hat: &[f64],
    sigma: &DMatrix<f64>,
    rates: &[f64],
    alpha: f64,
    mc: &McSettings,
    reference: Option<f64>,
) -> Result<InferenceReport> {
    let run = price_with_gradient(system, functional, theta_hat, mc)?;
    let asy_var = asymptotic_variance(&run.c.mean, sigma, Some(rates))?;
    let rate = fastest_rate(rates)?;
    let ci = confidence_interval(run.h.mean, asy_var, rate, alpha)?;
    let z_hat = reference.map(|h0| (run.h.mean - h0) / (rate * asy_var.sqrt()));
    Ok(InferenceReport {
        theta: theta_hat.to_vec(),
        h_hat: run.h.mean,
        h_se_mc: run.h.stderr,
        c_hat: run.c.mean,
        c_se: run.c.stderr,
        asy_var,
        rate,
        alpha,
        ci,
        z_hat,
    })
}
