//! JSON specifications for models and functionals.
//!
//! ```json
//! { "model": "black_scholes", "params": [0.2, 1.0], "epsilon": 0.0447, "x0": 1.0 }
//! { "model": "ou_jump", "params": [1.0, 0.3, 0.5], "jump": { "intensity": 1.0, "sd": 1.0 }, "x0": 1.0 }
//! { "kind": "smoothed_call_terminal", "K": 0.75, "r": 0.05, "T": 1.0 }
//! { "kind": "discounted_integral", "delta": 0.05, "T": 1.0, "V": "identity" }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{Functional, FunctionalKind, Integrand, Payoff, Reducer};
use crate::model::{
    bs_small_noise_model, levy_model_with_measure, ou_jump_model_with_sizes, JumpDiffusionModel,
    JumpMeasure, JumpSizes,
};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    #[serde(alias = "bs")]
    BlackScholes,
    #[serde(alias = "ou")]
    OuJump,
    Levy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub intensity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelName,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<JumpSpec>,
    pub x0: f64,
}

impl ModelSpec {
    pub fn build(&self) -> Result<JumpDiffusionModel> {
        let want = match self.model {
            ModelName::BlackScholes => 2,
            ModelName::OuJump | ModelName::Levy => 3,
        };
        if self.params.len() != want {
            return Err(config_err(format!(
                "{:?} takes {want} params, got {}",
                self.model,
                self.params.len()
            )));
        }
        let p = &self.params;
        match self.model {
            ModelName::BlackScholes => {
                let eps = self
                    .epsilon
                    .ok_or_else(|| config_err("black_scholes needs `epsilon`"))?;
                if !(eps > 0.0) {
                    return Err(config_err(format!("epsilon must be positive, got {eps}")));
                }
                bs_small_noise_model(p[0], p[1], eps, self.x0)
            }
            ModelName::OuJump => {
                let jump = self.jump.clone().unwrap_or(JumpSpec {
                    intensity: 1.0,
                    mean: None,
                    sd: None,
                });
                if jump.mean.is_some_and(|m| m != 0.0) {
                    return Err(config_err(
                        "ou_jump jump sizes are centred; the jump mean is the third param",
                    ));
                }
                let sizes = JumpSizes::Normal {
                    mean: 0.0,
                    sd: jump.sd.unwrap_or(1.0),
                };
                ou_jump_model_with_sizes(p[0], p[1], p[2], jump.intensity, self.x0, sizes)
            }
            ModelName::Levy => {
                let jump = self.jump.clone().unwrap_or(JumpSpec {
                    intensity: 1.0,
                    mean: None,
                    sd: None,
                });
                let sizes = match jump.sd {
                    Some(sd) => JumpSizes::Normal {
                        mean: jump.mean.unwrap_or(0.0),
                        sd,
                    },
                    None => JumpSizes::Exponential {
                        mean: jump.mean.unwrap_or(1.0),
                    },
                };
                let measure = JumpMeasure::compound_poisson(jump.intensity, sizes)?;
                levy_model_with_measure(p[0], p[1], p[2], self.x0, measure)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    #[serde(rename = "r", default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_smooth: Option<f64>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub integrand: Option<String>,
}

impl FunctionalSpec {
    pub fn build(&self) -> Result<Functional> {
        let t = self.horizon;
        let call = || -> Result<(f64, f64)> {
            let k = self
                .strike
                .ok_or_else(|| config_err("call payoff needs `K`"))?;
            Ok((k, self.rate.unwrap_or(0.0)))
        };
        match self.kind {
            FunctionalKind::Terminal => Functional::terminal(t),
            FunctionalKind::TimeAverage => Functional::time_average(t),
            FunctionalKind::DiscountedIntegral => {
                let discount = self
                    .delta
                    .ok_or_else(|| config_err("discounted_integral needs `delta`"))?;
                match self.integrand.as_deref() {
                    None | Some("identity") => {}
                    Some(other) => return Err(config_err(format!("unknown integrand `{other}`"))),
                }
                Functional::new(
                    Reducer::DiscountedIntegral {
                        discount,
                        integrand: Integrand::Identity,
                    },
                    Payoff::Identity,
                    t,
                )
            }
            FunctionalKind::SmoothedCallTerminal => {
                let (k, r) = call()?;
                Functional::smoothed_call_terminal(k, r, t, self.epsilon_smooth)
            }
            FunctionalKind::SmoothedCallAverage => {
                let (k, r) = call()?;
                Functional::smoothed_call_average(k, r, t, self.epsilon_smooth)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_black_scholes() {
        let s: ModelSpec = serde_json::from_str(
            r#"{"model":"black_scholes","params":[0.2,1.0],"epsilon":0.1,"x0":1.0}"#,
        )
        .unwrap();
        let m = s.build().unwrap();
        assert_eq!(m.dim(), 2);
        assert!((m.diffusion.eval(2.0, &[0.2, 1.0]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn black_scholes_needs_epsilon() {
        let s: ModelSpec =
            serde_json::from_str(r#"{"model":"bs","params":[0.2,1.0],"x0":1.0}"#).unwrap();
        assert!(matches!(s.build(), Err(Error::Config(_))));
    }

    #[test]
    fn parse_ou_and_levy() {
        let s: ModelSpec = serde_json::from_str(
            r#"{"model":"ou_jump","params":[1.0,0.3,0.5],"jump":{"intensity":2.0},"x0":1.0}"#,
        )
        .unwrap();
        let m = s.build().unwrap();
        assert_eq!(m.jump_measure.intensity, 2.0);
        let s: ModelSpec =
            serde_json::from_str(r#"{"model":"levy","params":[0.1,0.5,0.7],"x0":0.0}"#).unwrap();
        assert_eq!(s.build().unwrap().jump_measure.compensator_mean(), 1.0);
    }

    #[test]
    fn wrong_param_count() {
        let s: ModelSpec =
            serde_json::from_str(r#"{"model":"levy","params":[0.1,0.5],"x0":0.0}"#).unwrap();
        assert!(s.build().is_err());
    }

    #[test]
    fn parse_functionals() {
        let f: FunctionalSpec =
            serde_json::from_str(r#"{"kind":"smoothed_call_terminal","K":0.75,"r":0.05,"T":1.0}"#)
                .unwrap();
        assert_eq!(
            f.build().unwrap().kind(),
            FunctionalKind::SmoothedCallTerminal
        );
        let f: FunctionalSpec = serde_json::from_str(
            r#"{"kind":"discounted_integral","delta":0.05,"T":1.0,"V":"identity"}"#,
        )
        .unwrap();
        assert_eq!(
            f.build().unwrap().kind(),
            FunctionalKind::DiscountedIntegral
        );
        let f: FunctionalSpec =
            serde_json::from_str(r#"{"kind":"smoothed_call_terminal","T":1.0}"#).unwrap();
        assert!(f.build().is_err());
        assert!(
            serde_json::from_str::<FunctionalSpec>(r#"{"kind":"terminal","T":1.0,"bogus":1}"#)
                .is_err()
        );
    }
}
