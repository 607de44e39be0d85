//! Parametric one-dimensional jump-diffusions
//!
//! ```text
//! X_t = x(θ) + ∫ a(X_s, θ) ds + ∫ b(X_s, θ) dW_s + ∫∫ c(X_{s-}, z, θ) Ñ(ds, dz)
//! ```
//!
//! driven by a Brownian motion and a compensated compound-Poisson random
//! measure with a known Lévy density. Coefficients and their derivatives are
//! supplied as closures; the derivative closures are what the derivative
//! process is built from.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `(x, θ) -> value`
pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
/// `(x, θ, out)`: writes the θ-gradient into `out`.
pub type GradFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// `(x, z, θ) -> value`
pub type JumpFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;
/// `(x, z, θ, out)`
pub type JumpGradFn = Arc<dyn Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync>;
/// `θ -> x(θ)`
pub type InitialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `(θ, out)`: writes ẋ(θ).
pub type InitialGradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A finite parameter vector θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("parameter vector must have dimension >= 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("parameter {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `self + u`, dimension-checked.
    pub fn shifted(&self, u: &[f64]) -> Result<Self> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Self::new(self.0.iter().zip(u).map(|(a, b)| a + b).collect())
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Component-wise parameter box Θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(names: &[&str], lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if names.len() != lower.len() || lower.len() != upper.len() {
            return Err(invalid("parameter box: names and bounds differ in length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(invalid("parameter box: lower bound exceeds upper bound"));
        }
        Ok(Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.check(theta).is_ok()
    }

    pub fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        for (i, &v) in theta.iter().enumerate() {
            if !(self.lower[i] <= v && v <= self.upper[i]) {
                return Err(Error::OutOfBounds {
                    name: self.names[i].clone(),
                    value: v,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    pub fn project(&self, i: usize, v: f64) -> f64 {
        v.clamp(self.lower[i], self.upper[i])
    }
}

/// A coefficient `(x, θ) -> R` together with its derivatives.
#[derive(Clone)]
pub struct Coefficient {
    pub value: ScalarFn,
    pub grad_x: Option<ScalarFn>,
    pub grad_theta: Option<GradFn>,
}

impl Coefficient {
    pub fn new(value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            grad_x: None,
            grad_theta: None,
        }
    }

    pub fn with_grad_x(mut self, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.grad_x = Some(Arc::new(f));
        self
    }

    pub fn with_grad_theta(
        mut self,
        f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.grad_theta = Some(Arc::new(f));
        self
    }

    /// Identically zero, with zero derivatives.
    pub fn zero() -> Self {
        Self::new(|_, _| 0.0)
            .with_grad_x(|_, _| 0.0)
            .with_grad_theta(|_, _, out| out.fill(0.0))
    }

    #[inline]
    pub fn eval(&self, x: f64, theta: &[f64]) -> f64 {
        (self.value)(x, theta)
    }

    fn complete(&self) -> bool {
        self.grad_x.is_some() && self.grad_theta.is_some()
    }
}

/// Jump kernel `c(x, z, θ)`.
#[derive(Clone)]
pub enum JumpKernel {
    /// `c = intercept(x, θ) + slope(x, θ) · z`. The compensator follows from
    /// the jump measure's mean.
    Affine {
        intercept: Coefficient,
        slope: Coefficient,
    },
    /// Arbitrary kernel with a user-supplied compensator `∫ c(x, z, θ) ν(z) dz`
    /// (already multiplied by the intensity).
    General {
        kernel: JumpFn,
        grad_x: Option<JumpFn>,
        grad_theta: Option<JumpGradFn>,
        compensator: Coefficient,
    },
}

impl JumpKernel {
    #[inline]
    pub fn eval(&self, x: f64, z: f64, theta: &[f64]) -> f64 {
        match self {
            JumpKernel::Affine { intercept, slope } => {
                intercept.eval(x, theta) + slope.eval(x, theta) * z
            }
            JumpKernel::General { kernel, .. } => kernel(x, z, theta),
        }
    }

    /// `∫ c(x, z, θ) ν(z) dz`
    #[inline]
    pub fn compensator(&self, x: f64, theta: &[f64], measure: &JumpMeasure) -> f64 {
        match self {
            JumpKernel::Affine { intercept, slope } => {
                measure.intensity
                    * (intercept.eval(x, theta) + slope.eval(x, theta) * measure.sizes.mean())
            }
            JumpKernel::General { compensator, .. } => compensator.eval(x, theta),
        }
    }

    pub(crate) fn complete(&self) -> bool {
        match self {
            JumpKernel::Affine { intercept, slope } => intercept.complete() && slope.complete(),
            JumpKernel::General {
                grad_x,
                grad_theta,
                compensator,
                ..
            } => grad_x.is_some() && grad_theta.is_some() && compensator.complete(),
        }
    }
}

/// Distribution of compound-Poisson jump sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum JumpSizes {
    Constant { value: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { mean: f64 },
}

impl JumpSizes {
    pub fn mean(&self) -> f64 {
        match *self {
            JumpSizes::Constant { value } => value,
            JumpSizes::Normal { mean, .. } => mean,
            JumpSizes::Exponential { mean } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            JumpSizes::Constant { .. } => 0.0,
            JumpSizes::Normal { sd, .. } => sd * sd,
            JumpSizes::Exponential { mean } => mean * mean,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpSizes::Constant { value } => value.is_finite(),
            JumpSizes::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            JumpSizes::Exponential { mean } => mean.is_finite() && mean > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid jump size distribution {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpSizes::Constant { value } => value,
            JumpSizes::Normal { mean, sd } => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                mean + sd * z
            }
            JumpSizes::Exponential { mean } => {
                // mean > 0 was validated on construction
                let e = Exp::new(1.0 / mean).expect("positive rate");
                e.sample(rng)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    None,
    CompoundPoisson,
}

/// Known finite-activity Lévy measure `ν = λ · F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpMeasure {
    pub intensity: f64,
    pub sizes: JumpSizes,
}

impl JumpMeasure {
    pub fn none() -> Self {
        Self {
            intensity: 0.0,
            sizes: JumpSizes::Constant { value: 0.0 },
        }
    }

    pub fn compound_poisson(intensity: f64, sizes: JumpSizes) -> Result<Self> {
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(invalid(format!(
                "jump intensity must be >= 0, got {intensity}"
            )));
        }
        sizes.validate()?;
        Ok(Self { intensity, sizes })
    }

    pub fn kind(&self) -> JumpKind {
        if self.intensity > 0.0 {
            JumpKind::CompoundPoisson
        } else {
            JumpKind::None
        }
    }

    /// `∫ z ν(z) dz`
    pub fn compensator_mean(&self) -> f64 {
        self.intensity * self.sizes.mean()
    }
}

/// A parametric jump-diffusion. Immutable after construction; cloning is cheap.
#[derive(Clone)]
pub struct JumpDiffusionModel {
    pub name: String,
    pub initial: InitialFn,
    pub initial_grad: Option<InitialGradFn>,
    pub drift: Coefficient,
    pub diffusion: Coefficient,
    pub jump: Option<JumpKernel>,
    pub jump_measure: JumpMeasure,
    pub param_box: ParamBox,
    /// Declared linear-growth constant κ.
    pub growth_constant: f64,
    /// Structural noise scale ε; the diffusion equals ε times a unit-noise
    /// coefficient. 1 for models without a small-noise structure.
    pub noise_scale: f64,
    /// Default parameter point shipped with the model.
    pub nominal: ParamVector,
}

impl fmt::Debug for JumpDiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpDiffusionModel")
            .field("name", &self.name)
            .field("params", &self.param_box.names)
            .field("jump_measure", &self.jump_measure)
            .field("noise_scale", &self.noise_scale)
            .field("nominal", &self.nominal)
            .finish_non_exhaustive()
    }
}

impl JumpDiffusionModel {
    /// A model with constant initial value and zero dynamics; refine with the
    /// `with_*` methods.
    pub fn new(name: &str, param_box: ParamBox, nominal: ParamVector, x0: f64) -> Result<Self> {
        param_box.check(&nominal)?;
        Ok(Self {
            name: name.to_string(),
            initial: Arc::new(move |_| x0),
            initial_grad: Some(Arc::new(|_, out: &mut [f64]| out.fill(0.0))),
            drift: Coefficient::zero(),
            diffusion: Coefficient::zero(),
            jump: None,
            jump_measure: JumpMeasure::none(),
            param_box,
            growth_constant: 1.0,
            noise_scale: 1.0,
            nominal,
        })
    }

    pub fn with_drift(mut self, c: Coefficient) -> Self {
        self.drift = c;
        self
    }

    pub fn with_diffusion(mut self, c: Coefficient) -> Self {
        self.diffusion = c;
        self
    }

    pub fn with_jumps(mut self, kernel: JumpKernel, measure: JumpMeasure) -> Self {
        self.jump = Some(kernel);
        self.jump_measure = measure;
        self
    }

    pub fn with_growth_constant(mut self, kappa: f64) -> Self {
        self.growth_constant = kappa;
        self
    }

    pub fn dim(&self) -> usize {
        self.param_box.dim()
    }

    pub fn x0(&self, theta: &[f64]) -> f64 {
        (self.initial)(theta)
    }

    /// The jump kernel contributes only when the measure has mass.
    pub(crate) fn active_jump(&self) -> Option<&JumpKernel> {
        match self.jump_measure.kind() {
            JumpKind::None => None,
            JumpKind::CompoundPoisson => self.jump.as_ref(),
        }
    }
}

/// A point at which [`validate_model`] evaluates the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub x: f64,
    pub z: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthViolation {
    pub probe: usize,
    pub coefficient: &'static str,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub probes_checked: usize,
    pub violations: Vec<GrowthViolation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Spot-checks finiteness and linear growth of the coefficients.
///
/// The jump bound uses `κ (1 + |z|)(1 + |x|)`: for a finite jump measure the
/// small-jump factor `|z|` is not needed for the moment estimates, and kernels
/// such as `z + η` do not vanish at `z = 0`.
pub fn validate_model(model: &JumpDiffusionModel, probes: &[Probe]) -> Result<ValidationReport> {
    let kappa = model.growth_constant;
    let mut report = ValidationReport::default();
    for (i, p) in probes.iter().enumerate() {
        if !p.x.is_finite() || !p.z.is_finite() {
            return Err(invalid(format!("probe {i} is not finite")));
        }
        model.param_box.check(&p.theta)?;
        let a = model.drift.eval(p.x, &p.theta);
        let b = model.diffusion.eval(p.x, &p.theta);
        let finite = |v: f64, name: &'static str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonFiniteCoefficient {
                    coefficient: name,
                    probe: i,
                })
            }
        };
        finite(a, "drift")?;
        finite(b, "diffusion")?;
        let bound = kappa * (1.0 + p.x.abs());
        if a.abs() + b.abs() > bound {
            report.violations.push(GrowthViolation {
                probe: i,
                coefficient: "drift+diffusion",
                value: a.abs() + b.abs(),
                bound,
            });
        }
        if let Some(kernel) = model.active_jump() {
            let c = kernel.eval(p.x, p.z, &p.theta);
            finite(c, "jump")?;
            let bound = kappa * (1.0 + p.z.abs()) * (1.0 + p.x.abs());
            if c.abs() > bound {
                report.violations.push(GrowthViolation {
                    probe: i,
                    coefficient: "jump",
                    value: c.abs(),
                    bound,
                });
            }
        }
        report.probes_checked += 1;
    }
    Ok(report)
}

/// Deterministic 10 × 10 probe grid over `x ∈ [-5, 5]`, `z ∈ [-3, 3]` at the
/// model's nominal parameters.
pub fn default_probe_grid(model: &JumpDiffusionModel) -> Vec<Probe> {
    let mut out = Vec::with_capacity(100);
    for i in 0..10 {
        for j in 0..10 {
            out.push(Probe {
                x: -5.0 + 10.0 * i as f64 / 9.0,
                z: -3.0 + 6.0 * j as f64 / 9.0,
                theta: model.nominal.to_vec(),
            });
        }
    }
    out
}

/// Small-noise Black–Scholes model `dX = μX dt + εσX dW`, θ = (μ, σ).
///
/// `ε = 0` is accepted and yields the deterministic limit `dX = μX dt`.
pub fn bs_small_noise_model(
    mu: f64,
    sigma: f64,
    epsilon: f64,
    x0: f64,
) -> Result<JumpDiffusionModel> {
    if !(sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(x0 > 0.0) {
        return Err(invalid(format!("x0 must be positive, got {x0}")));
    }
    let bx = ParamBox::new(&["mu", "sigma"], vec![-5.0, 1e-8], vec![5.0, 10.0])?;
    let nominal = ParamVector::new(vec![mu, sigma])?;
    let eps = epsilon;
    let mut model = JumpDiffusionModel::new("black_scholes", bx, nominal, x0)?
        .with_drift(
            Coefficient::new(|x, t| t[0] * x)
                .with_grad_x(|_, t| t[0])
                .with_grad_theta(|x, _, out| {
                    out[0] = x;
                    out[1] = 0.0;
                }),
        )
        .with_diffusion(
            Coefficient::new(move |x, t| eps * t[1] * x)
                .with_grad_x(move |_, t| eps * t[1])
                .with_grad_theta(move |x, _, out| {
                    out[0] = 0.0;
                    out[1] = eps * x;
                }),
        )
        .with_growth_constant(5.0 + 10.0 * eps);
    model.noise_scale = if eps > 0.0 { eps } else { 1.0 };
    Ok(model)
}

/// Ornstein–Uhlenbeck process with compound-Poisson jumps of mean η,
/// `dX = -μX dt + σ dW + dZ^η`, θ = (μ, σ, η).
///
/// Written against the compensated measure of the centred jumps `Z⁰`:
/// drift `-μx + λη`, kernel `z + η`. Jump sizes of `Z⁰` are standard normal.
pub fn ou_jump_model(
    mu: f64,
    sigma: f64,
    eta: f64,
    intensity: f64,
    x0: f64,
) -> Result<JumpDiffusionModel> {
    ou_jump_model_with_sizes(
        mu,
        sigma,
        eta,
        intensity,
        x0,
        JumpSizes::Normal { mean: 0.0, sd: 1.0 },
    )
}

/// As [`ou_jump_model`] with a caller-chosen centred jump size law.
pub fn ou_jump_model_with_sizes(
    mu: f64,
    sigma: f64,
    eta: f64,
    intensity: f64,
    x0: f64,
    centred_sizes: JumpSizes,
) -> Result<JumpDiffusionModel> {
    if !(mu > 0.0) {
        return Err(invalid(format!("mu must be positive, got {mu}")));
    }
    if centred_sizes.mean() != 0.0 {
        return Err(invalid("OU jump sizes must be centred; η carries the mean"));
    }
    if !x0.is_finite() {
        return Err(invalid("x0 must be finite"));
    }
    let measure = JumpMeasure::compound_poisson(intensity, centred_sizes)?;
    let bx = ParamBox::new(
        &["mu", "sigma", "eta"],
        vec![1e-6, 0.0, -10.0],
        vec![50.0, 10.0, 10.0],
    )?;
    let nominal = ParamVector::new(vec![mu, sigma, eta])?;
    let lam = intensity;
    let model = JumpDiffusionModel::new("ou_jump", bx, nominal, x0)?
        .with_drift(
            Coefficient::new(move |x, t| -t[0] * x + lam * t[2])
                .with_grad_x(|_, t| -t[0])
                .with_grad_theta(move |x, _, out| {
                    out[0] = -x;
                    out[1] = 0.0;
                    out[2] = lam;
                }),
        )
        .with_diffusion(
            Coefficient::new(|_, t| t[1])
                .with_grad_x(|_, _| 0.0)
                .with_grad_theta(|_, _, out| {
                    out[0] = 0.0;
                    out[1] = 1.0;
                    out[2] = 0.0;
                }),
        )
        .with_jumps(
            JumpKernel::Affine {
                intercept: Coefficient::new(|_, t| t[2])
                    .with_grad_x(|_, _| 0.0)
                    .with_grad_theta(|_, _, out| {
                        out[0] = 0.0;
                        out[1] = 0.0;
                        out[2] = 1.0;
                    }),
                slope: Coefficient::new(|_, _| 1.0)
                    .with_grad_x(|_, _| 0.0)
                    .with_grad_theta(|_, _, out| out.fill(0.0)),
            },
            measure,
        )
        .with_growth_constant(50.0 + 10.0 + 10.0 * (1.0 + lam));
    Ok(model)
}

/// Lévy process `X_t = x0 + μt + σW_t + ηS_t` with `S` a unit-intensity
/// compound Poisson process of Exp(1) jumps (so `E[S_1] = 1`), θ = (μ, σ, η).
pub fn levy_model(mu: f64, sigma: f64, eta: f64, x0: f64) -> Result<JumpDiffusionModel> {
    let measure = JumpMeasure::compound_poisson(1.0, JumpSizes::Exponential { mean: 1.0 })?;
    levy_model_with_measure(mu, sigma, eta, x0, measure)
}

/// As [`levy_model`] with a caller-chosen measure for `S`.
pub fn levy_model_with_measure(
    mu: f64,
    sigma: f64,
    eta: f64,
    x0: f64,
    measure: JumpMeasure,
) -> Result<JumpDiffusionModel> {
    if eta == 0.0 {
        return Err(invalid("eta must be non-zero"));
    }
    if !(sigma >= 0.0) {
        return Err(invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    if !x0.is_finite() {
        return Err(invalid("x0 must be finite"));
    }
    let bx = ParamBox::new(
        &["mu", "sigma", "eta"],
        vec![-10.0, 0.0, -10.0],
        vec![10.0, 10.0, 10.0],
    )?;
    let nominal = ParamVector::new(vec![mu, sigma, eta])?;
    let m = measure.compensator_mean();
    let model = JumpDiffusionModel::new("levy", bx, nominal, x0)?
        .with_drift(
            Coefficient::new(move |_, t| t[0] + t[2] * m)
                .with_grad_x(|_, _| 0.0)
                .with_grad_theta(move |_, _, out| {
                    out[0] = 1.0;
                    out[1] = 0.0;
                    out[2] = m;
                }),
        )
        .with_diffusion(
            Coefficient::new(|_, t| t[1])
                .with_grad_x(|_, _| 0.0)
                .with_grad_theta(|_, _, out| {
                    out[0] = 0.0;
                    out[1] = 1.0;
                    out[2] = 0.0;
                }),
        )
        .with_jumps(
            JumpKernel::Affine {
                intercept: Coefficient::zero(),
                slope: Coefficient::new(|_, t| t[2])
                    .with_grad_x(|_, _| 0.0)
                    .with_grad_theta(|_, _, out| {
                        out[0] = 0.0;
                        out[1] = 0.0;
                        out[2] = 1.0;
                    }),
            },
            measure,
        )
        .with_growth_constant(10.0 + 10.0 * (1.0 + m.abs()) + 10.0);
    Ok(model)
}

/// Closed-form `E[X_t]` for the OU jump model.
pub fn ou_mean(mu: f64, eta: f64, intensity: f64, x0: f64, t: f64) -> f64 {
    x0 * (-mu * t).exp() + intensity * eta / mu * (1.0 - (-mu * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_model() -> JumpDiffusionModel {
        let bx = ParamBox::new(&["p"], vec![-1.0], vec![1.0]).unwrap();
        JumpDiffusionModel::new("zero", bx, ParamVector::new(vec![0.0]).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn zero_model_passes() {
        let m = zero_model();
        let r = validate_model(&m, &default_probe_grid(&m)).unwrap();
        assert!(r.passed());
        assert_eq!(r.probes_checked, 100);
    }

    #[test]
    fn bs_growth_at_unit_state() {
        let m = bs_small_noise_model(0.2, 1.0, 1.0, 1.0).unwrap();
        let probe = Probe {
            x: 1.0,
            z: 0.0,
            theta: vec![0.2, 1.0],
        };
        assert!(validate_model(&m, &[probe]).unwrap().passed());
        assert!((m.drift.eval(1.0, &[0.2, 1.0]).abs() - 0.2).abs() < 1e-15);
        assert!(0.2 <= m.growth_constant * 2.0);
    }

    #[test]
    fn quadratic_drift_violates_growth() {
        let m = zero_model().with_drift(Coefficient::new(|x, _| x * x));
        let probe = Probe {
            x: 10.0,
            z: 0.0,
            theta: vec![0.0],
        };
        let r = validate_model(&m, &[probe]).unwrap();
        assert!(!r.passed());
        assert_eq!(r.violations[0].coefficient, "drift+diffusion");
    }

    #[test]
    fn non_finite_coefficient_is_fatal() {
        let m = zero_model().with_diffusion(Coefficient::new(|x, _| 1.0 / (x - x)));
        let probe = Probe {
            x: 1.0,
            z: 0.0,
            theta: vec![0.0],
        };
        match validate_model(&m, &[probe]) {
            Err(Error::NonFiniteCoefficient { coefficient, probe }) => {
                assert_eq!(coefficient, "diffusion");
                assert_eq!(probe, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn built_in_models_pass_probe_grid() {
        for m in [
            bs_small_noise_model(0.2, 1.0, 500f64.sqrt().recip(), 1.0).unwrap(),
            ou_jump_model(1.0, 0.3, 0.5, 1.0, 1.0).unwrap(),
            levy_model(0.1, 0.2, 0.5, 1.0).unwrap(),
        ] {
            let r = validate_model(&m, &default_probe_grid(&m)).unwrap();
            assert!(r.passed(), "{}: {:?}", m.name, r.violations);
        }
    }

    #[test]
    fn bs_constructor_checks() {
        assert!(bs_small_noise_model(0.2, 0.0, 1.0, 1.0).is_err());
        assert!(bs_small_noise_model(0.2, 1.0, -1.0, 1.0).is_err());
        assert!(bs_small_noise_model(0.2, 1.0, 1.0, 0.0).is_err());
        let m = bs_small_noise_model(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(m.diffusion.eval(3.0, &[0.0, 1.0]), 0.0);
        assert_eq!(m.drift.eval(3.0, &[0.0, 1.0]), 0.0);
        let m = bs_small_noise_model(0.2, 1.0, 0.1, 1.0).unwrap();
        assert!((m.drift.eval(2.0, &[0.2, 1.0]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn ou_drift_and_checks() {
        let m = ou_jump_model(1.0, 0.3, 0.5, 1.0, 1.0).unwrap();
        assert!((m.drift.eval(1.0, &[1.0, 0.3, 0.5]) + 0.5).abs() < 1e-15);
        assert!(ou_jump_model(0.0, 0.3, 0.5, 1.0, 1.0).is_err());
        assert!(ou_jump_model(1.0, 0.3, 0.5, -1.0, 1.0).is_err());
        assert!(ou_jump_model_with_sizes(
            1.0,
            0.3,
            0.5,
            1.0,
            1.0,
            JumpSizes::Constant { value: 1.0 }
        )
        .is_err());
    }

    #[test]
    fn levy_is_state_independent() {
        let m = levy_model(0.1, 0.2, 0.5, 1.0).unwrap();
        assert!(levy_model(0.1, 0.2, 0.0, 1.0).is_err());
        let th = [0.1, 0.2, 0.5];
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!((m.drift.grad_x.as_ref().unwrap())(x, &th), 0.0);
            assert_eq!((m.diffusion.grad_x.as_ref().unwrap())(x, &th), 0.0);
            if let Some(JumpKernel::Affine { intercept, slope }) = &m.jump {
                assert_eq!((intercept.grad_x.as_ref().unwrap())(x, &th), 0.0);
                assert_eq!((slope.grad_x.as_ref().unwrap())(x, &th), 0.0);
            }
        }
    }

    #[test]
    fn measure_kind_tracks_intensity() {
        assert_eq!(JumpMeasure::none().kind(), JumpKind::None);
        let m = JumpMeasure::compound_poisson(2.0, JumpSizes::Exponential { mean: 0.5 }).unwrap();
        assert_eq!(m.kind(), JumpKind::CompoundPoisson);
        assert!((m.compensator_mean() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ou_mean_without_jumps_matches_quadrature_of_mean_ode() {
        // dm/dt = -μ m integrated with RK4 as an independent oracle
        let (mu, x0) = (1.3, 0.8);
        let steps = 10_000;
        let h = 1.0 / steps as f64;
        let mut m = x0;
        for _ in 0..steps {
            let f = |v: f64| -mu * v;
            let k1 = f(m);
            let k2 = f(m + 0.5 * h * k1);
            let k3 = f(m + 0.5 * h * k2);
            let k4 = f(m + h * k3);
            m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((ou_mean(mu, 0.7, 0.0, x0, 1.0) - m).abs() < 1e-12);
    }

    #[test]
    fn param_box_membership() {
        let m = bs_small_noise_model(0.2, 1.0, 0.1, 1.0).unwrap();
        assert!(m.param_box.contains(&[0.2, 1.0]));
        assert!(matches!(
            m.param_box.check(&[0.2, -1.0]),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(matches!(
            m.param_box.check(&[0.2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
