//! Shared fixtures for the criterion benches.

use spin_order::ModelParams;

/// `(beta, p)` pairs spanning sub-, near- and supercritical landscapes.
pub const LANDSCAPES: &[(f64, u32)] = &[
    (0.3, 3),
    (0.672_084_786_033_523, 3),
    (0.8, 3),
    (1.0, 2),
    (0.8, 12),
];

pub const SYSTEM_SIZES: &[usize] = &[100, 1_000, 10_000];

pub fn params(beta: f64, p: u32, n: usize) -> ModelParams {
    ModelParams::new(beta, p, n).expect("bench parameters are valid")
}
