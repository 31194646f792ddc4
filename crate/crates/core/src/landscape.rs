//! The free-energy functional `H(x) = beta x^p - I(x)` on `[0, 1]`.
//!
//! `I(x) = ((1+x) ln(1+x) + (1-x) ln(1-x)) / 2` is the entropy deficit of a
//! Rademacher variable with mean `x`. The spin average concentrates on the
//! global maximizers of `H`, so everything downstream is built on
//! [`analyze_landscape`].
//!
//! Points extremely close to 1 (orders beyond ~16 put their critical
//! magnetization within 1e-7 of 1) lose all relative precision in `x`. The
//! `*_complement` variants take `eps = 1 - x` instead.

use serde::Serialize;
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_max};

/// Number of grid points used to bracket sign changes of `H'`.
pub const GRID_POINTS: usize = 4096;
/// The bracketing grid stops at `1 - EDGE_GAP`; roots beyond it are found
/// in a dedicated tail bracket.
pub const EDGE_GAP: f64 = 1e-9;
/// Two candidates are co-maximizers when their `H` values differ by at most this.
pub const MAXIMIZER_VALUE_TOL: f64 = 1e-10;

/// Stationary structure of `H` for one `(beta, p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeSummary {
    pub beta: f64,
    pub p: u32,
    /// All zeros of `H'` in `[0, 1)`, ascending. Always starts with 0.
    pub stationary_points: Vec<f64>,
    /// The subset of `stationary_points` that are local maxima of `H`.
    pub local_maxima: Vec<f64>,
    pub global_max_value: f64,
    pub maximizers: Vec<f64>,
    /// Largest non-negative global maximizer.
    pub m_star: f64,
}

impl LandscapeSummary {
    pub fn has_positive_maximizer(&self) -> bool {
        self.m_star > 0.0
    }

    /// Largest positive local maximizer, whether or not it is global.
    pub fn positive_branch(&self) -> Option<f64> {
        self.local_maxima.iter().copied().rfind(|&x| x > 0.0)
    }
}

pub(crate) fn entropy(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.1 {
        // I(x) = sum_k x^(2k) / (2k (2k - 1))
        let x2 = a * a;
        let mut term = x2;
        let mut sum = 0.0;
        for k in 1..=18 {
            let k2 = 2.0 * k as f64;
            sum += term / (k2 * (k2 - 1.0));
            term *= x2;
        }
        sum
    } else if a < 0.5 {
        a * a.atanh() + 0.5 * (-a * a).ln_1p()
    } else {
        let minus = if a < 1.0 {
            (1.0 - a) * (1.0 - a).ln()
        } else {
            0.0
        };
        0.5 * ((1.0 + a) * (1.0 + a).ln() + minus)
    }
}

pub(crate) fn h(beta: f64, p: u32, x: f64) -> f64 {
    beta * x.powi(p as i32) - entropy(x)
}

pub(crate) fn h_prime(beta: f64, p: u32, x: f64) -> f64 {
    beta * p as f64 * x.powi(p as i32 - 1) - x.atanh()
}

/// `ln 2 - I(1 - eps)`, computed without cancellation for small `eps`.
pub(crate) fn entropy_gap(eps: f64) -> f64 {
    if eps <= 0.0 {
        return 0.0;
    }
    0.5 * eps * LN_2 - 0.5 * (2.0 - eps) * (-0.5 * eps).ln_1p() - 0.5 * eps * eps.ln()
}

/// `atanh(1 - eps)`.
pub(crate) fn atanh_complement(eps: f64) -> f64 {
    0.5 * ((2.0 - eps).ln() - eps.ln())
}

fn check_point(x: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    if !(lo..=hi).contains(&x) {
        return Err(Error::domain(format!(
            "{what}: x = {x} outside [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn check_params(beta: f64, p: u32) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!("beta must be positive, got {beta}")));
    }
    if p < 2 {
        return Err(Error::domain(format!(
            "interaction order must be >= 2, got {p}"
        )));
    }
    Ok(())
}

/// `I(x) = ((1+x) ln(1+x) + (1-x) ln(1-x)) / 2` with `0 ln 0 = 0`.
pub fn entropy_i(x: f64) -> Result<f64> {
    check_point(x, -1.0, 1.0, "entropy_i")?;
    Ok(entropy(x))
}

/// `H(x) = beta x^p - I(x)` for `x` in `[0, 1]`.
pub fn free_energy_h(beta: f64, p: u32, x: f64) -> Result<f64> {
    check_params(beta, p)?;
    check_point(x, 0.0, 1.0, "free_energy_h")?;
    Ok(h(beta, p, x))
}

/// `H'(x) = beta p x^(p-1) - atanh(x)` for `x` in `[0, 1)`.
pub fn free_energy_h_prime(beta: f64, p: u32, x: f64) -> Result<f64> {
    check_params(beta, p)?;
    if !(0.0..1.0).contains(&x) {
        return Err(Error::domain(format!(
            "free_energy_h_prime: x = {x} outside [0, 1)"
        )));
    }
    Ok(h_prime(beta, p, x))
}

/// `H(1 - eps)`; accurate when `1 - eps` is not representable to full precision.
pub fn free_energy_h_complement(beta: f64, p: u32, eps: f64) -> Result<f64> {
    check_params(beta, p)?;
    check_point(eps, 0.0, 1.0, "free_energy_h_complement")?;
    let xp = (p as f64 * (-eps).ln_1p()).exp();
    Ok(beta * xp - LN_2 + entropy_gap(eps))
}

/// `H'(1 - eps)` for `eps` in `(0, 1]`.
pub fn free_energy_h_prime_complement(beta: f64, p: u32, eps: f64) -> Result<f64> {
    check_params(beta, p)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain(format!("eps = {eps} outside (0, 1]")));
    }
    let xp1 = ((p as f64 - 1.0) * (-eps).ln_1p()).exp();
    Ok(beta * p as f64 * xp1 - atanh_complement(eps))
}

struct Bracket {
    lo: f64,
    hi: f64,
    positive_at_lo: bool,
}

/// Smallest `ln(1 - x)` searched; `1 - e^t` is 1 in floating point long before this.
const LOG_EPS_FLOOR: f64 = -745.0;

/// Bisection on one bracket. Brackets in the upper half are refined in
/// `t = ln(1 - x)` so that roots near 1 keep their relative precision in
/// `1 - x`; an absolute step of `tol` in `t` moves `x` by at most `tol`.
fn refine(beta: f64, p: u32, b: &Bracket, tol: f64) -> f64 {
    let x = if b.lo < 0.5 {
        bisect(|x| h_prime(beta, p, x), b.lo, b.hi, b.positive_at_lo, tol)
    } else {
        let g = |t: f64| {
            let eps = t.exp();
            beta * p as f64 * ((p as f64 - 1.0) * (-eps).ln_1p()).exp() - atanh_complement(eps)
        };
        let t_lo = if b.hi >= 1.0 {
            LOG_EPS_FLOOR
        } else {
            (1.0 - b.hi).ln()
        };
        let t = bisect(g, t_lo, (1.0 - b.lo).ln(), !b.positive_at_lo, tol);
        1.0 - t.exp()
    };
    x.min(1.0 - f64::EPSILON / 2.0)
}

/// Locates every stationary point of `H` on `[0, 1)` and the global maximizers.
///
/// Sign changes of `H'` are bracketed on a uniform grid of [`GRID_POINTS`]
/// points over `[0, 1 - EDGE_GAP]` and refined by bisection to `tol`. Cells
/// where `H'` has a grid-local extremum without a sign change are probed by
/// golden-section search, which catches pairs of roots closer together than
/// the grid spacing (the near-tangent landscapes around `beta*(p)`).
pub fn analyze_landscape(beta: f64, p: u32, tol: f64) -> Result<LandscapeSummary> {
    check_params(beta, p)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain(format!("tol must be positive, got {tol}")));
    }
    let f = |x: f64| h_prime(beta, p, x);
    let step = (1.0 - EDGE_GAP) / (GRID_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..GRID_POINTS).map(|i| i as f64 * step).collect();
    let ds: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    // H'(0) = 0 exactly; its sign just right of 0 is that of 2 beta - 1 for
    // p = 2 and negative otherwise.
    let positive_near_zero = p == 2 && 2.0 * beta > 1.0;
    let positive = |i: usize| {
        if i == 0 {
            positive_near_zero
        } else {
            ds[i] > 0.0
        }
    };

    let mut brackets = Vec::new();
    for i in 1..GRID_POINTS {
        if positive(i - 1) != positive(i) {
            brackets.push(Bracket {
                lo: xs[i - 1],
                hi: xs[i],
                positive_at_lo: positive(i - 1),
            });
        }
    }
    for i in 2..GRID_POINTS - 1 {
        let (a, b, c) = (ds[i - 1], ds[i], ds[i + 1]);
        let gtol = step * 1e-6;
        if a < 0.0 && b < 0.0 && c < 0.0 && a < b && b >= c {
            let (xh, vh) = golden_max(f, xs[i - 1], xs[i + 1], gtol);
            if vh > 0.0 {
                brackets.push(Bracket {
                    lo: xs[i - 1],
                    hi: xh,
                    positive_at_lo: false,
                });
                brackets.push(Bracket {
                    lo: xh,
                    hi: xs[i + 1],
                    positive_at_lo: true,
                });
            }
        } else if a > 0.0 && b > 0.0 && c > 0.0 && a > b && b <= c {
            let (xh, vh) = golden_max(|x| -f(x), xs[i - 1], xs[i + 1], gtol);
            if vh > 0.0 {
                brackets.push(Bracket {
                    lo: xs[i - 1],
                    hi: xh,
                    positive_at_lo: true,
                });
                brackets.push(Bracket {
                    lo: xh,
                    hi: xs[i + 1],
                    positive_at_lo: false,
                });
            }
        }
    }
    let last = GRID_POINTS - 1;
    if positive(last) {
        // H' -> -inf as x -> 1, so one more root hides in the edge gap.
        brackets.push(Bracket {
            lo: xs[last],
            hi: 1.0,
            positive_at_lo: true,
        });
    }

    let mut roots: Vec<(f64, bool)> = brackets
        .iter()
        .map(|b| (refine(beta, p, b, tol), b.positive_at_lo))
        .collect();
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));

    let zero_is_max = !positive_near_zero;
    let mut stationary_points = vec![0.0];
    let mut local_maxima = if zero_is_max { vec![0.0] } else { vec![] };
    for &(x, is_max) in &roots {
        if x > 0.0 {
            stationary_points.push(x);
            if is_max {
                local_maxima.push(x);
            }
        }
    }

    // 0 is always a candidate, even when it is a local minimum (p = 2 above 1/2).
    let mut candidates = vec![0.0];
    candidates.extend(local_maxima.iter().copied().filter(|&x| x > 0.0));
    let values: Vec<f64> = candidates.iter().map(|&x| h(beta, p, x)).collect();
    let global_max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let value_tol = MAXIMIZER_VALUE_TOL.max(tol);
    let maximizers: Vec<f64> = candidates
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v >= global_max_value - value_tol)
        .map(|(&x, _)| x)
        .collect();
    let m_star = maximizers.iter().copied().fold(0.0, f64::max);

    Ok(LandscapeSummary {
        beta,
        p,
        stationary_points,
        local_maxima,
        global_max_value,
        maximizers,
        m_star,
    })
}
