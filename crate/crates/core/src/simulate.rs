//! Noise sampling and Euler–Maruyama stepping with compound-Poisson jumps.
//!
//! A [`NoiseBundle`] holds one realisation of the driving noise on a grid.
//! Every path functional in the crate is a pure function of
//! `(model, θ, NoiseBundle)`, so reusing a bundle across parameter values
//! couples the resulting paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::derivative::DerivativeSystem;
use crate::error::{invalid, Error, Result};
use crate::model::{JumpDiffusionModel, JumpMeasure};
use crate::stats::mean_stderr;

/// Uniform grid `t_k = kT/n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(invalid("grid needs at least one step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Index of the node at time `t`, if `t` is a node.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt()).round();
        if k < 0.0 || k > self.steps as f64 {
            return None;
        }
        let k = k as usize;
        ((self.time(k) - t).abs() <= 1e-9 * self.horizon.max(1.0)).then_some(k)
    }
}

/// Counter-based seed derivation: child seeds are a hash of `(root, index)`,
/// so any subset of paths can be regenerated independently and in any order.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One realisation of the Brownian increments and the jumps on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBundle {
    seed: u64,
    grid: TimeGrid,
    brownian: Vec<f64>,
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
    /// `step_offsets[k]..step_offsets[k+1]` indexes jumps in `(t_k, t_{k+1}]`.
    step_offsets: Vec<usize>,
}

impl NoiseBundle {
    /// Builds a bundle from explicit increments and jumps.
    pub fn from_parts(
        seed: u64,
        grid: TimeGrid,
        brownian: Vec<f64>,
        jump_times: Vec<f64>,
        jump_sizes: Vec<f64>,
    ) -> Result<Self> {
        if brownian.len() != grid.steps() {
            return Err(Error::DimensionMismatch {
                expected: grid.steps(),
                got: brownian.len(),
            });
        }
        if jump_times.len() != jump_sizes.len() {
            return Err(invalid("jump times and sizes differ in length"));
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("jump times must be strictly increasing"));
        }
        if jump_times
            .iter()
            .any(|&t| !(t > 0.0 && t <= grid.horizon()))
        {
            return Err(invalid("jump times must lie in (0, T]"));
        }
        let dt = grid.dt();
        let mut step_offsets = vec![0usize; grid.steps() + 1];
        // count jumps per step, then prefix-sum
        let mut counts = vec![0usize; grid.steps()];
        for &t in &jump_times {
            let k = ((t / dt).ceil() as usize).clamp(1, grid.steps()) - 1;
            counts[k] += 1;
        }
        for k in 0..grid.steps() {
            step_offsets[k + 1] = step_offsets[k] + counts[k];
        }
        Ok(Self {
            seed,
            grid,
            brownian,
            jump_times,
            jump_sizes,
            step_offsets,
        })
    }

    /// No Brownian motion, no jumps.
    pub fn zero(grid: TimeGrid) -> Self {
        Self::from_parts(0, grid, vec![0.0; grid.steps()], Vec::new(), Vec::new())
            .expect("valid empty noise")
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn brownian(&self) -> &[f64] {
        &self.brownian
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_sizes(&self) -> &[f64] {
        &self.jump_sizes
    }

    /// Jumps (times, sizes) falling in `(t_k, t_{k+1}]`.
    #[inline]
    pub fn jumps_in_step(&self, k: usize) -> (&[f64], &[f64]) {
        let r = self.step_offsets[k]..self.step_offsets[k + 1];
        (&self.jump_times[r.clone()], &self.jump_sizes[r])
    }

    /// Brownian path `W_{t_k}` on the grid nodes.
    pub fn brownian_path(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.brownian.len() + 1);
        let mut acc = 0.0;
        w.push(0.0);
        for dw in &self.brownian {
            acc += dw;
            w.push(acc);
        }
        w
    }
}

/// Draws a bundle; fully determined by `seed`.
pub fn sample_noise(grid: &TimeGrid, jump: &JumpMeasure, seed: u64) -> NoiseBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = grid.dt().sqrt();
    let brownian: Vec<f64> = (0..grid.steps())
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sd * z
        })
        .collect();
    let rate = jump.intensity * grid.horizon();
    let count = if rate > 0.0 {
        Poisson::new(rate).expect("positive rate").sample(&mut rng) as usize
    } else {
        0
    };
    let mut jump_times: Vec<f64> = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            grid.horizon() * (1.0 - u)
        })
        .collect();
    jump_times.sort_by(|a, b| a.total_cmp(b));
    jump_times.dedup();
    let jump_sizes: Vec<f64> = jump_times
        .iter()
        .map(|_| jump.sizes.sample(&mut rng))
        .collect();
    NoiseBundle::from_parts(seed, *grid, brownian, jump_times, jump_sizes)
        .expect("sampled noise is well formed")
}

/// A scalar path on grid nodes; jump-bearing nodes hold post-jump values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl Path {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    /// `‖X‖_T` over grid nodes.
    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

/// A `p`-dimensional path stored row-major, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPath {
    pub grid: TimeGrid,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl VectorPath {
    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn terminal(&self) -> &[f64] {
        self.at(self.grid.steps())
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(i)
            .step_by(self.dim)
            .copied()
            .collect()
    }
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_inputs(model: &JumpDiffusionModel, theta: &[f64]) -> Result<()> {
    model.param_box.check(theta)
}

/// Euler–Maruyama path of `X^θ`:
///
/// ```text
/// X_{k+1} = X_k + a Δ + b ΔW_k + Σ_{jumps in (t_k, t_{k+1}]} c(X_k, z_j) - (∫ c ν) Δ
/// ```
pub fn euler_path(model: &JumpDiffusionModel, theta: &[f64], noise: &NoiseBundle) -> Result<Path> {
    check_inputs(model, theta)?;
    let grid = *noise.grid();
    let dt = grid.dt();
    let jump = model.active_jump();
    let mut values = Vec::with_capacity(grid.steps() + 1);
    let mut x = model.x0(theta);
    if !x.is_finite() {
        return Err(Error::Blowup { step: 0 });
    }
    values.push(x);
    for k in 0..grid.steps() {
        let mut next = x
            + model.drift.eval(x, theta) * dt
            + model.diffusion.eval(x, theta) * noise.brownian[k];
        if let Some(kernel) = jump {
            let (_, sizes) = noise.jumps_in_step(k);
            for &z in sizes {
                next += kernel.eval(x, z, theta);
            }
            next -= kernel.compensator(x, theta, &model.jump_measure) * dt;
        }
        if !next.is_finite() {
            return Err(Error::Blowup { step: k + 1 });
        }
        x = next;
        values.push(x);
    }
    Ok(Path { grid, values })
}

/// Jointly advances `(X^θ, Y^θ)` on the same grid and noise.
pub fn euler_with_derivative(
    system: &DerivativeSystem<'_>,
    theta: &[f64],
    noise: &NoiseBundle,
) -> Result<(Path, VectorPath)> {
    let model = system.model();
    check_inputs(model, theta)?;
    let grid = *noise.grid();
    let dt = grid.dt();
    let p = system.dim();
    let jump = model.active_jump();

    let mut xs = Vec::with_capacity(grid.steps() + 1);
    let mut ys = vec![0.0; (grid.steps() + 1) * p];
    let mut x = model.x0(theta);
    if !x.is_finite() {
        return Err(Error::Blowup { step: 0 });
    }
    xs.push(x);
    system.initial(theta, &mut ys[..p]);

    let mut a = vec![0.0; p];
    let mut b = vec![0.0; p];
    let mut c = vec![0.0; p];
    for k in 0..grid.steps() {
        let dw = noise.brownian[k];
        let (head, tail) = ys.split_at_mut((k + 1) * p);
        let y = &head[k * p..];
        let y_next = &mut tail[..p];

        system.drift(x, y, theta, &mut a);
        system.diffusion(x, y, theta, &mut b);
        for i in 0..p {
            y_next[i] = y[i] + a[i] * dt + b[i] * dw;
        }
        let mut next = x + model.drift.eval(x, theta) * dt + model.diffusion.eval(x, theta) * dw;

        if let Some(kernel) = jump {
            let (_, sizes) = noise.jumps_in_step(k);
            for &z in sizes {
                next += kernel.eval(x, z, theta);
                system.jump(x, y, z, theta, &mut c);
                for i in 0..p {
                    y_next[i] += c[i];
                }
            }
            next -= kernel.compensator(x, theta, &model.jump_measure) * dt;
            system.jump_compensator(x, y, theta, &mut c);
            for i in 0..p {
                y_next[i] -= c[i] * dt;
            }
        }
        if !next.is_finite() || y_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup { step: k + 1 });
        }
        x = next;
        xs.push(x);
    }
    Ok((
        Path { grid, values: xs },
        VectorPath {
            grid,
            dim: p,
            values: ys,
        },
    ))
}

/// `(X^θ, X^{θ+u}, Y^θ)` from one noise bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPaths {
    pub base: Path,
    pub shifted: Path,
    pub derivative: VectorPath,
}

impl CoupledPaths {
    /// `X^{θ+u} - X^θ - uᵀY^θ` on the grid nodes.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.base
            .values
            .iter()
            .zip(&self.shifted.values)
            .enumerate()
            .map(|(k, (x, xu))| {
                let y = self.derivative.at(k);
                xu - x - u.iter().zip(y).map(|(ui, yi)| ui * yi).sum::<f64>()
            })
            .collect()
    }
}

pub fn coupled_paths(
    system: &DerivativeSystem<'_>,
    theta: &[f64],
    u: &[f64],
    noise: &NoiseBundle,
) -> Result<CoupledPaths> {
    if u.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: u.len(),
        });
    }
    let (base, derivative) = euler_with_derivative(system, theta, noise)?;
    let shifted_theta: Vec<f64> = theta.iter().zip(u).map(|(t, d)| t + d).collect();
    let shifted = euler_path(system.model(), &shifted_theta, noise)?;
    Ok(CoupledPaths {
        base,
        shifted,
        derivative,
    })
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// `E‖R‖^p_T` from per-path sup norms `‖R‖_T`.
pub fn sup_norm_moment(sup_norms: &[f64], p: u32) -> Result<McEstimate> {
    if sup_norms.len() < 100 {
        return Err(invalid(format!(
            "need at least 100 paths, got {}",
            sup_norms.len()
        )));
    }
    if ![1, 2, 4].contains(&p) {
        return Err(invalid(format!(
            "moment exponent must be 1, 2 or 4, got {p}"
        )));
    }
    let powered: Vec<f64> = sup_norms.iter().map(|r| r.powi(p as i32)).collect();
    let (mean, stderr) = mean_stderr(&powered);
    Ok(McEstimate { mean, stderr })
}
