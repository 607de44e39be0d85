//! Path functionals `h(X) = φ(X_*)` and their pathwise gradients.
//!
//! `X_*` is a scalar reduction of the path (terminal value, time average or
//! discounted integral). Given the derivative path `Y`, the matching
//! reduction `Ỹ` yields one draw `G = φ'(X_*) Ỹ` whose mean is `C_θ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::simulate::{Path, TimeGrid, VectorPath};

/// Smoothed call payoff
/// `φ(x) = e^{-rT}/2 · (√((x-K)² + s²) + x - K)`.
pub fn smoothed_call(x: f64, strike: f64, smoothing: f64, rate: f64, horizon: f64) -> f64 {
    let d = x - strike;
    0.5 * (-rate * horizon).exp() * ((d * d + smoothing * smoothing).sqrt() + d)
}

/// `φ'(x) = e^{-rT}/2 · ((x-K)/√((x-K)² + s²) + 1)`.
pub fn smoothed_call_derivative(
    x: f64,
    strike: f64,
    smoothing: f64,
    rate: f64,
    horizon: f64,
) -> f64 {
    let d = x - strike;
    let r = (d * d + smoothing * smoothing).sqrt();
    let ratio = if r > 0.0 { d / r } else { 0.0 };
    0.5 * (-rate * horizon).exp() * (ratio + 1.0)
}

/// `sgn(z) = 1{z>0} - 1{z<0}`; zero at zero.
pub fn sgn(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Unsmoothed call gradient weight `e^{-rT} (sgn(x-K) + 1) / 2`.
pub fn call_gradient_weight(x: f64, strike: f64, rate: f64, horizon: f64) -> f64 {
    0.5 * (-rate * horizon).exp() * (sgn(x - strike) + 1.0)
}

/// Integrand `V` of a discounted integral.
#[derive(Clone)]
pub enum Integrand {
    Identity,
    Custom {
        value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Integrand {
    fn value(&self, x: f64) -> f64 {
        match self {
            Integrand::Identity => x,
            Integrand::Custom { value, .. } => value(x),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            Integrand::Identity => 1.0,
            Integrand::Custom { derivative, .. } => derivative(x),
        }
    }
}

impl std::fmt::Debug for Integrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Integrand::Identity => write!(f, "Identity"),
            Integrand::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// How a path is reduced to the scalar `X_*`.
#[derive(Debug, Clone)]
pub enum Reducer {
    Terminal,
    TimeAverage,
    DiscountedIntegral { discount: f64, integrand: Integrand },
}

/// Outer payoff `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    Identity,
    SmoothedCall {
        strike: f64,
        rate: f64,
        smoothing: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    Terminal,
    TimeAverage,
    DiscountedIntegral,
    SmoothedCallTerminal,
    SmoothedCallAverage,
}

/// `h(X) = φ(X_*)` on `[0, T]`.
#[derive(Debug, Clone)]
pub struct Functional {
    pub reducer: Reducer,
    pub payoff: Payoff,
    pub horizon: f64,
}

impl Functional {
    pub fn new(reducer: Reducer, payoff: Payoff, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if let Payoff::SmoothedCall {
            strike, smoothing, ..
        } = payoff
        {
            if !(smoothing > 0.0) {
                return Err(invalid("smoothing width must be positive"));
            }
            if strike < 0.0 {
                return Err(invalid("strike must be non-negative"));
            }
        }
        Ok(Self {
            reducer,
            payoff,
            horizon,
        })
    }

    pub fn terminal(horizon: f64) -> Result<Self> {
        Self::new(Reducer::Terminal, Payoff::Identity, horizon)
    }

    pub fn time_average(horizon: f64) -> Result<Self> {
        Self::new(Reducer::TimeAverage, Payoff::Identity, horizon)
    }

    pub fn discounted_integral(discount: f64, horizon: f64) -> Result<Self> {
        Self::new(
            Reducer::DiscountedIntegral {
                discount,
                integrand: Integrand::Identity,
            },
            Payoff::Identity,
            horizon,
        )
    }

    /// Smoothed European call on `X_T`; `smoothing = None` uses `1e-3 · K`.
    pub fn smoothed_call_terminal(
        strike: f64,
        rate: f64,
        horizon: f64,
        smoothing: Option<f64>,
    ) -> Result<Self> {
        let smoothing = smoothing.unwrap_or(1e-3 * strike);
        Self::new(
            Reducer::Terminal,
            Payoff::SmoothedCall {
                strike,
                rate,
                smoothing,
            },
            horizon,
        )
    }

    /// Smoothed call on the time average (Asian-type).
    pub fn smoothed_call_average(
        strike: f64,
        rate: f64,
        horizon: f64,
        smoothing: Option<f64>,
    ) -> Result<Self> {
        let smoothing = smoothing.unwrap_or(1e-3 * strike);
        Self::new(
            Reducer::TimeAverage,
            Payoff::SmoothedCall {
                strike,
                rate,
                smoothing,
            },
            horizon,
        )
    }

    pub fn kind(&self) -> FunctionalKind {
        match (&self.reducer, &self.payoff) {
            (Reducer::Terminal, Payoff::Identity) => FunctionalKind::Terminal,
            (Reducer::TimeAverage, Payoff::Identity) => FunctionalKind::TimeAverage,
            (Reducer::Terminal, Payoff::SmoothedCall { .. }) => {
                FunctionalKind::SmoothedCallTerminal
            }
            (Reducer::TimeAverage, Payoff::SmoothedCall { .. }) => {
                FunctionalKind::SmoothedCallAverage
            }
            (Reducer::DiscountedIntegral { .. }, _) => FunctionalKind::DiscountedIntegral,
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        match self.payoff {
            Payoff::Identity => x,
            Payoff::SmoothedCall {
                strike,
                rate,
                smoothing,
            } => smoothed_call(x, strike, smoothing, rate, self.horizon),
        }
    }

    pub fn phi_derivative(&self, x: f64) -> f64 {
        match self.payoff {
            Payoff::Identity => 1.0,
            Payoff::SmoothedCall {
                strike,
                rate,
                smoothing,
            } => smoothed_call_derivative(x, strike, smoothing, rate, self.horizon),
        }
    }

    fn end_index(&self, grid: &TimeGrid) -> Result<usize> {
        if grid.horizon() + 1e-12 * self.horizon < self.horizon {
            return Err(invalid(format!(
                "path covers [0, {}] but the functional needs [0, {}]",
                grid.horizon(),
                self.horizon
            )));
        }
        grid.node_index(self.horizon)
            .ok_or_else(|| invalid(format!("horizon {} is not a grid node", self.horizon)))
    }

    /// `X_*`
    pub fn reduce(&self, path: &Path) -> Result<f64> {
        let end = self.end_index(&path.grid)?;
        let dt = path.grid.dt();
        let xs = &path.values[..=end];
        Ok(match &self.reducer {
            Reducer::Terminal => xs[end],
            Reducer::TimeAverage => trapezoid(xs, dt) / self.horizon,
            Reducer::DiscountedIntegral {
                discount,
                integrand,
            } => {
                let w: Vec<f64> = xs
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| (-discount * path.grid.time(k)).exp() * integrand.value(x))
                    .collect();
                trapezoid(&w, dt)
            }
        })
    }

    /// `h(X) = φ(X_*)`
    pub fn eval(&self, path: &Path) -> Result<f64> {
        Ok(self.phi(self.reduce(path)?))
    }

    /// `Ỹ`, the reduction of the derivative path matching `X_*`.
    pub fn reduce_derivative(&self, x_path: &Path, y_path: &VectorPath) -> Result<Vec<f64>> {
        if x_path.grid != y_path.grid {
            return Err(invalid("X and Y paths are on different grids"));
        }
        if y_path.values.len() != (x_path.grid.steps() + 1) * y_path.dim {
            return Err(Error::DimensionMismatch {
                expected: (x_path.grid.steps() + 1) * y_path.dim,
                got: y_path.values.len(),
            });
        }
        let end = self.end_index(&x_path.grid)?;
        let dt = x_path.grid.dt();
        let p = y_path.dim;
        Ok(match &self.reducer {
            Reducer::Terminal => y_path.at(end).to_vec(),
            Reducer::TimeAverage => (0..p)
                .map(|i| trapezoid(&y_path.component(i)[..=end], dt) / self.horizon)
                .collect(),
            Reducer::DiscountedIntegral {
                discount,
                integrand,
            } => {
                let w: Vec<f64> = (0..=end)
                    .map(|k| {
                        (-discount * x_path.grid.time(k)).exp()
                            * integrand.derivative(x_path.values[k])
                    })
                    .collect();
                (0..p)
                    .map(|i| {
                        let f: Vec<f64> = (0..=end).map(|k| w[k] * y_path.at(k)[i]).collect();
                        trapezoid(&f, dt)
                    })
                    .collect()
            }
        })
    }

    /// One draw of `G_θ = φ'(X_*) Ỹ`.
    pub fn pathwise_gradient(&self, x_path: &Path, y_path: &VectorPath) -> Result<Vec<f64>> {
        let weight = self.phi_derivative(self.reduce(x_path)?);
        let mut g = self.reduce_derivative(x_path, y_path)?;
        for v in &mut g {
            *v *= weight;
        }
        Ok(g)
    }
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dt * (0.5 * (values[0] + values[n - 1]) + inner)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Path {
        Path {
            grid,
            values: grid.times().into_iter().map(f).collect(),
        }
    }

    #[test]
    fn terminal_identity_on_constant_path() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let f = Functional::terminal(1.0).unwrap();
        assert_eq!(f.eval(&path(g, |_| 1.0)).unwrap(), 1.0);
    }

    #[test]
    fn time_average_of_identity() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let f = Functional::time_average(1.0).unwrap();
        assert!((f.eval(&path(g, |t| t)).unwrap() - 0.5).abs() < 1e-14);
        // quadratic: trapezoid error is h²/12 · (f'(1) - f'(0)) = h²/6
        let v = f.eval(&path(g, |t| t * t)).unwrap();
        assert!((v - 1.0 / 3.0 - 1.0 / (6.0 * 64.0 * 64.0)).abs() < 1e-14);
    }

    #[test]
    fn short_grid_rejected() {
        let g = TimeGrid::new(0.5, 10).unwrap();
        assert!(Functional::terminal(1.0)
            .unwrap()
            .eval(&path(g, |t| t))
            .is_err());
        let g = TimeGrid::new(1.0, 3).unwrap();
        assert!(Functional::terminal(0.5)
            .unwrap()
            .eval(&path(g, |t| t))
            .is_err());
    }

    #[test]
    fn longer_grid_truncates_at_horizon() {
        let g = TimeGrid::new(2.0, 20).unwrap();
        let f = Functional::terminal(1.0).unwrap();
        assert!((f.eval(&path(g, |t| 3.0 * t)).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn smoothed_call_values() {
        let (k, s, r, t) = (0.75, 1e-3, 0.05f64, 1.0);
        let disc = (-r * t).exp();
        assert!((smoothed_call(k, k, s, r, t) - disc * s / 2.0).abs() < 1e-16);
        assert!((smoothed_call_derivative(k, k, s, r, t) - disc / 2.0).abs() < 1e-16);
        let x = 2.0 * k;
        assert!(
            (smoothed_call(x, k, s, r, t) - disc * (x - k)).abs()
                <= disc * s * s / (2.0 * (x - k)) + 1e-16
        );
    }

    #[test]
    fn smoothed_derivative_matches_finite_difference() {
        let (k, s, r, t) = (0.75, 0.05, 0.05, 1.0);
        for i in 0..20 {
            let x = 0.3 + 0.05 * i as f64;
            let h = 1e-5;
            let fd =
                (smoothed_call(x + h, k, s, r, t) - smoothed_call(x - h, k, s, r, t)) / (2.0 * h);
            let an = smoothed_call_derivative(x, k, s, r, t);
            assert!(((fd - an) / an.abs().max(1e-3)).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn gradient_rules() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let x = path(g, |t| 1.0 + t);
        let zero = VectorPath {
            grid: g,
            dim: 2,
            values: vec![0.0; 22],
        };
        let f = Functional::smoothed_call_terminal(0.75, 0.05, 1.0, None).unwrap();
        assert_eq!(f.pathwise_gradient(&x, &zero).unwrap(), vec![0.0, 0.0]);

        let y = VectorPath {
            grid: g,
            dim: 2,
            values: (0..22).map(|i| i as f64).collect(),
        };
        let id = Functional::terminal(1.0).unwrap();
        assert_eq!(id.pathwise_gradient(&x, &y).unwrap(), vec![20.0, 21.0]);

        // tiny smoothing reproduces (Y_T / 2)(sgn(X_T - K) + 1) at r = 0
        let f = Functional::smoothed_call_terminal(0.75, 0.0, 1.0, Some(1e-12)).unwrap();
        let gr = f.pathwise_gradient(&x, &y).unwrap();
        let w = call_gradient_weight(x.terminal(), 0.75, 0.0, 1.0);
        assert_eq!(w, 1.0);
        assert!((gr[0] - 20.0 * w).abs() < 1e-12 && (gr[1] - 21.0 * w).abs() < 1e-12);

        let bad = VectorPath {
            grid: TimeGrid::new(1.0, 5).unwrap(),
            dim: 2,
            values: vec![0.0; 12],
        };
        assert!(id.pathwise_gradient(&x, &bad).is_err());
    }

    #[test]
    fn sgn_tie_break() {
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(call_gradient_weight(0.75, 0.75, 0.0, 1.0), 0.5);
    }

    #[test]
    fn discounted_integral_gradient_uses_integrand_derivative() {
        let g = TimeGrid::new(1.0, 100).unwrap();
        let x = path(g, |_| 2.0);
        let y = VectorPath {
            grid: g,
            dim: 1,
            values: vec![1.0; 101],
        };
        let f = Functional::new(
            Reducer::DiscountedIntegral {
                discount: 0.0,
                integrand: Integrand::Custom {
                    value: Arc::new(|x| x * x),
                    derivative: Arc::new(|x| 2.0 * x),
                },
            },
            Payoff::Identity,
            1.0,
        )
        .unwrap();
        assert!((f.eval(&x).unwrap() - 4.0).abs() < 1e-12);
        assert!((f.pathwise_gradient(&x, &y).unwrap()[0] - 4.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn smoothing_sandwich(x in -5.0f64..5.0, s in 1e-6f64..1.0) {
            let (k, r, t) = (0.75, 0.05f64, 1.0);
            let disc = (-r * t).exp();
            let gap = smoothed_call(x, k, s, r, t) - disc * (x - k).max(0.0);
            prop_assert!(gap >= -1e-15);
            prop_assert!(gap <= disc * s / 2.0 + 1e-15);
        }

        #[test]
        fn eval_is_linear_in_path(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            let g = TimeGrid::new(1.0, 16).unwrap();
            let p1 = path(g, |t| (t * (seed as f64 + 1.0)).sin());
            let p2 = path(g, |t| t * t - 0.3);
            let combo = Path { grid: g, values: p1.values.iter().zip(&p2.values).map(|(u, v)| a * u + b * v).collect() };
            for f in [Functional::terminal(1.0).unwrap(), Functional::time_average(1.0).unwrap(), Functional::discounted_integral(0.05, 1.0).unwrap()] {
                let lhs = f.eval(&combo).unwrap();
                let rhs = a * f.eval(&p1).unwrap() + b * f.eval(&p2).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }

        #[test]
        fn gradient_reducer_is_linear_in_y(a in -3.0f64..3.0, seed in 0u64..1000) {
            let g = TimeGrid::new(1.0, 8).unwrap();
            let x = path(g, |t| 1.0 + t);
            let y1 = VectorPath { grid: g, dim: 1, values: (0..9).map(|i| ((i as u64 * 31 + seed) % 7) as f64).collect() };
            let y2 = VectorPath { grid: g, dim: 1, values: y1.values.iter().map(|v| a * v).collect() };
            let f = Functional::discounted_integral(0.1, 1.0).unwrap();
            let g1 = f.reduce_derivative(&x, &y1).unwrap()[0];
            let g2 = f.reduce_derivative(&x, &y2).unwrap()[0];
            prop_assert!((g2 - a * g1).abs() < 1e-12);
        }
    }
}
