//! Interaction-order analysis for the p-spin Curie-Weiss model.
//!
//! The model on `{-1, +1}^n` has mass proportional to `exp(beta * n * xbar^p)`
//! where `xbar` is the average spin. Everything here works through `xbar`:
//!
//! * [`landscape`]: the free-energy functional `H(x) = beta x^p - I(x)` and
//!   its stationary points and global maximizers on `[0, 1]`.
//! * [`phase`]: critical thresholds `beta*(p)`, critical magnetizations,
//!   the confusion values `s(p, q)`, identifiability slices and the
//!   estimability partition of the orders at a known `beta`.
//! * [`model`]: exact laws of the spin sum, exact samplers and the
//!   distance / likelihood-ratio diagnostics.
//! * [`estimator`]: the order estimator `p_hat(beta, delta)` and its exact
//!   success probability.
//! * [`experiments`]: reproducible consistency and impossibility curves.

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod landscape;
pub mod model;
pub mod phase;
pub mod samples;

mod numeric;

pub use error::{Error, Result};
pub use estimator::{
    candidate_set, estimate_p, success_probability_exact, Candidate, CandidateSet, Estimate,
    EstimateResult, OrderEstimator, DEFAULT_HARD_CAP,
};
pub use experiments::{
    contiguity_curve, success_curve, theta_confusion_demo, ConfusionDemo, ContiguityCurve,
    SuccessCurve,
};
pub use landscape::{
    analyze_landscape, entropy_i, free_energy_h, free_energy_h_prime, LandscapeSummary,
};
pub use model::{
    likelihood_ratio_profile, log_partition, magnetization_law, rademacher_law,
    sample_configuration, sample_magnetization, tv_distance, MagnetizationLaw, ModelParams,
    RatioProfile,
};
pub use phase::{
    beta_star, classify_phase, critical_point, is_confusable, m_star, nearest_lambda, order_sets,
    s_pq, theta_set, theta_slice, CriticalPoint, OrderSets, Phase, ThetaSet, ThetaSlice,
};

/// Default numerical tolerance used where an operation does not take one.
pub const DEFAULT_TOL: f64 = 1e-12;
