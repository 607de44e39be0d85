//! Simulation, estimation and plug-in inference for parametric jump-diffusions.
//!
//! The pipeline: build a [`JumpDiffusionModel`], estimate θ from discrete
//! observations, then price a path functional at θ̂ by Monte Carlo while the
//! derivative process `Y = ∂X/∂θ` supplies the gradient `C_θ` that drives the
//! asymptotic error of the plug-in estimate.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod config;
pub mod derivative;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod functional;
pub mod inference;
pub mod model;
pub mod simulate;
pub mod stats;

pub use config::{FunctionalSpec, ModelSpec};
pub use derivative::{
    build_derivative_system, ou_derivative_closed_form, DerivativeSystem, OuClosedForm,
};
pub use error::{Error, Result};
pub use estimate::{
    bs_closed_form, contrast, contrast_gradient, fisher_info, limit_path, minimize_contrast,
    EstimatorResult, Observations,
};
pub use experiment::{
    order_check, run_bs_experiment, run_ou_oracle, write_experiment, ExperimentConfig,
    ExperimentOutput, OrderCheckConfig, OrderCheckReport, OuOracleConfig, OuOracleReport,
};
pub use functional::{smoothed_call, Functional, FunctionalKind, Integrand, Payoff, Reducer};
pub use inference::{
    asymptotic_variance, bs_call_closed_form, confidence_interval, delta_method_variance,
    estimate_c, inference_report, ou_discounted_closed_form, plugin_h, price_with_gradient,
    GradientEstimate, InferenceReport, McSettings, PriceWithGradient,
};
pub use model::{
    bs_small_noise_model, levy_model, ou_jump_model, validate_model, Coefficient,
    JumpDiffusionModel, JumpKernel, JumpMeasure, JumpSizes, ParamBox, ParamVector,
    ValidationReport,
};
pub use simulate::{
    coupled_paths, derive_seed, euler_path, euler_with_derivative, sample_noise, sup_norm_moment,
    CoupledPaths, McEstimate, NoiseBundle, Path, TimeGrid, VectorPath,
};
