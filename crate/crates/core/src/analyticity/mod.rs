//! Gevrey comparison function, empirical constants, the bootstrap check,
//! radius bounds and the analyticity-strip radius estimator.

mod bootstrap;
mod bounds;
mod calibration;
mod corollary;
mod radius;
mod weight;

pub use bootstrap::{verify_bootstrap, BootstrapReport, BootstrapRow, LambdaRule};
pub use bounds::{
    corollary_lambda, eta_constant, lambda_from_heat_norm, lambda_t_critical, lambda_t_subcritical, small_constant,
    t_eps_critical, t_eps_subcritical,
};
pub use calibration::{
    calibrate_heat_constant, calibrate_k_eps, calibrate_lemma_constant, k_eps_upper_bound, lemma_ratio,
    CalibratedConstants, LemmaCalibration, LemmaSample, Provenance,
};
pub use corollary::{corollary_experiment, radius_sample, CorollaryOptions, CorollaryReport, RadiusSample};
pub use radius::{estimate_radius, fit_shell_profile, FitOptions, RadiusEstimate};
pub use weight::{gevrey_weight_field, multiplier_inequality_check, ua_kato_norm, GevreyParams, MultiplierReport};
