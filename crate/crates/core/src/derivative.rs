//! The derivative process `Y = ∂X/∂θ`.
//!
//! `Y` solves the linear SDE driven by the same noise as `X`, with
//!
//! ```text
//! A(x, y, θ) = ∇ₓa(x, θ) y + ȧ(x, θ)
//! B(x, y, θ) = ∇ₓb(x, θ) y + ḃ(x, θ)
//! C(x, y, z, θ) = ∇ₓc(x, z, θ) y + ċ(x, z, θ)
//! ```
//!
//! and `Y_0 = ẋ(θ)`.

use crate::error::{Error, Result};
use crate::model::{Coefficient, JumpDiffusionModel, JumpKernel};
use crate::simulate::NoiseBundle;

/// Coefficients of the derivative process of a model.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeSystem<'m> {
    model: &'m JumpDiffusionModel,
}

/// Checks that every derivative closure is present and wraps the model.
pub fn build_derivative_system(model: &JumpDiffusionModel) -> Result<DerivativeSystem<'_>> {
    let missing = |what: &'static str| Error::MissingDerivative {
        model: model.name.clone(),
        missing: what,
    };
    if model.initial_grad.is_none() {
        return Err(missing("initial-value gradient"));
    }
    check(&model.drift, "drift", &missing)?;
    check(&model.diffusion, "diffusion", &missing)?;
    if let Some(kernel) = model.active_jump() {
        if !kernel.complete() {
            return Err(missing("jump kernel derivatives"));
        }
    }
    Ok(DerivativeSystem { model })
}

fn check(
    c: &Coefficient,
    name: &'static str,
    missing: &dyn Fn(&'static str) -> Error,
) -> Result<()> {
    if c.grad_x.is_none() {
        return Err(missing(match name {
            "drift" => "drift x-derivative",
            _ => "diffusion x-derivative",
        }));
    }
    if c.grad_theta.is_none() {
        return Err(missing(match name {
            "drift" => "drift θ-gradient",
            _ => "diffusion θ-gradient",
        }));
    }
    Ok(())
}

// Completeness was verified when the system was built.
#[inline]
fn linear(c: &Coefficient, x: f64, y: &[f64], theta: &[f64], out: &mut [f64]) {
    let gx = (c.grad_x.as_ref().expect("checked"))(x, theta);
    (c.grad_theta.as_ref().expect("checked"))(x, theta, out);
    for (o, yi) in out.iter_mut().zip(y) {
        *o += gx * yi;
    }
}

impl<'m> DerivativeSystem<'m> {
    pub fn model(&self) -> &'m JumpDiffusionModel {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// `Y_0 = ẋ(θ)`
    pub fn initial(&self, theta: &[f64], out: &mut [f64]) {
        (self.model.initial_grad.as_ref().expect("checked"))(theta, out)
    }

    /// `A(x, y, θ)`
    #[inline]
    pub fn drift(&self, x: f64, y: &[f64], theta: &[f64], out: &mut [f64]) {
        linear(&self.model.drift, x, y, theta, out)
    }

    /// `B(x, y, θ)`
    #[inline]
    pub fn diffusion(&self, x: f64, y: &[f64], theta: &[f64], out: &mut [f64]) {
        linear(&self.model.diffusion, x, y, theta, out)
    }

    /// `C(x, y, z, θ)`; zero when the model has no active jumps.
    #[inline]
    pub fn jump(&self, x: f64, y: &[f64], z: f64, theta: &[f64], out: &mut [f64]) {
        match self.model.active_jump() {
            None => out.fill(0.0),
            Some(JumpKernel::Affine { intercept, slope }) => {
                let gx = (intercept.grad_x.as_ref().expect("checked"))(x, theta)
                    + z * (slope.grad_x.as_ref().expect("checked"))(x, theta);
                (intercept.grad_theta.as_ref().expect("checked"))(x, theta, out);
                let p = out.len();
                let mut tmp = [0.0; 8];
                let mut heap;
                let s: &mut [f64] = if p <= 8 {
                    &mut tmp[..p]
                } else {
                    heap = vec![0.0; p];
                    &mut heap
                };
                (slope.grad_theta.as_ref().expect("checked"))(x, theta, s);
                for i in 0..p {
                    out[i] += z * s[i] + gx * y[i];
                }
            }
            Some(JumpKernel::General {
                grad_x, grad_theta, ..
            }) => {
                let gx = (grad_x.as_ref().expect("checked"))(x, z, theta);
                (grad_theta.as_ref().expect("checked"))(x, z, theta, out);
                for (o, yi) in out.iter_mut().zip(y) {
                    *o += gx * yi;
                }
            }
        }
    }

    /// `∫ C(x, y, z, θ) ν(z) dz`
    #[inline]
    pub fn jump_compensator(&self, x: f64, y: &[f64], theta: &[f64], out: &mut [f64]) {
        let measure = &self.model.jump_measure;
        match self.model.active_jump() {
            None => out.fill(0.0),
            Some(JumpKernel::Affine { .. }) => {
                // affine kernel: the integral is C evaluated at the mean jump, times λ
                self.jump(x, y, measure.sizes.mean(), theta, out);
                for o in out.iter_mut() {
                    *o *= measure.intensity;
                }
            }
            Some(JumpKernel::General { compensator, .. }) => linear(compensator, x, y, theta, out),
        }
    }
}

/// Discretised closed-form derivative process of the OU jump model.
#[derive(Debug, Clone, PartialEq)]
pub struct OuClosedForm {
    pub x: Vec<f64>,
    /// `[Y¹, Y², Y³]` on the grid nodes.
    pub y: [Vec<f64>; 3],
}

/// Closed-form OU paths for θ = (μ, σ, η):
///
/// ```text
/// X_t  = x e^{-μt} + ∫ e^{-μ(t-s)} (σ dW_s + dZ^η_s)
/// Y¹_t = -∫ X_s e^{-μ(t-s)} ds
/// Y²_t = ∫ e^{-μ(t-s)} dW_s
/// Y³_t = (λ/μ)(1 - e^{-μt}) + ∫ e^{-μ(t-s)} dM_s,    M_t = N_t - λt
/// ```
///
/// All stochastic and Lebesgue integrals use left-point sums on the grid of
/// `noise`, the same nodes the Euler engine uses.
pub fn ou_derivative_closed_form(
    theta: &[f64],
    x0: f64,
    intensity: f64,
    noise: &NoiseBundle,
) -> Result<OuClosedForm> {
    if theta.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: theta.len(),
        });
    }
    let (mu, sigma, eta) = (theta[0], theta[1], theta[2]);
    if !(mu > 0.0) {
        return Err(crate::error::invalid(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let grid = noise.grid();
    let n = grid.steps();
    let dt = grid.dt();
    let decay = (-mu * dt).exp();

    let mut x = Vec::with_capacity(n + 1);
    let mut y1 = Vec::with_capacity(n + 1);
    let mut y2 = Vec::with_capacity(n + 1);
    let mut y3 = Vec::with_capacity(n + 1);

    // running left-point sums: S(t_k) = Σ_{j<k} e^{-μ(t_k - t_j)} ξ_j
    let (mut sx, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..=n {
        let t = grid.time(k);
        let xk = x0 * (-mu * t).exp() + sx;
        x.push(xk);
        y1.push(-s1);
        y2.push(s2);
        y3.push(intensity / mu * (1.0 - (-mu * t).exp()) + s3);
        if k == n {
            break;
        }
        let dw = noise.brownian()[k];
        let (_, sizes) = noise.jumps_in_step(k);
        let jump_count = sizes.len() as f64;
        let jump_sum: f64 = sizes.iter().map(|z| z + eta).sum();
        sx = decay * (sx + sigma * dw + jump_sum);
        s1 = decay * (s1 + xk * dt);
        s2 = decay * (s2 + dw);
        s3 = decay * (s3 + jump_count - intensity * dt);
    }
    Ok(OuClosedForm { x, y: [y1, y2, y3] })
}
