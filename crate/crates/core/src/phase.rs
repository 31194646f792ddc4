//! Thresholds, critical magnetizations and the identifiability structure of
//! the interaction order.
//!
//! `beta*(p)` is the largest `beta` at which `sup_{x>0} H(x)` is still 0.
//! Writing `R(m) = I(m) / m^p`, `H(m) >= 0` iff `beta >= R(m)`, so
//! `beta*(p) = inf_{m in (0,1]} R(m)`. For `p >= 3` the infimum is attained at
//! a unique interior `m_p` where `m atanh(m) = p I(m)` (the tangency system
//! `H = H' = 0`); for `p = 2` it is the `m -> 0` limit `1/2`.
//!
//! `m_p` approaches 1 like `4^-p`, so the tangency root is solved in
//! `t = ln(1 - m)`. This keeps `beta*(p)` strictly increasing in f64 up to
//! `p ~ 25`, where consecutive thresholds differ by ~1e-15.

use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::landscape::{
    analyze_landscape, atanh_complement, entropy, entropy_gap, free_energy_h_complement,
    free_energy_h_prime_complement, h, LandscapeSummary, MAXIMIZER_VALUE_TOL,
};
use crate::numeric::bisect;
use crate::DEFAULT_TOL;

/// Threshold and critical magnetization for one order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub p: u32,
    pub beta_star: f64,
    pub m_p: f64,
    /// `1 - m_p`, carried separately because `m_p` rounds to 1 for large `p`.
    pub one_minus_m_p: f64,
    /// Continuous transition (`p = 2`): there is no positive tangency point
    /// and `m_p` is reported as its limit 0.
    pub degenerate: bool,
}

impl CriticalPoint {
    /// `(H, H')` of `H_{beta*, p}` at `m_p`, evaluated in complement
    /// coordinates. Both vanish at an exact tangency.
    pub fn tangency_residuals(&self) -> (f64, f64) {
        if self.degenerate {
            return (0.0, 0.0);
        }
        let eps = self.one_minus_m_p;
        let hv = free_energy_h_complement(self.beta_star, self.p, eps).unwrap_or(f64::NAN);
        let hp = free_energy_h_prime_complement(self.beta_star, self.p, eps).unwrap_or(f64::NAN);
        (hv, hp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Subcritical,
    Boundary,
    Supercritical,
}

/// The finite slice `Theta_m` for `m` in `(0, 1)`, as `(p, beta_p)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSlice {
    pub m: f64,
    pub members: Vec<(u32, f64)>,
    /// Orders `p >= p_stop` were skipped: their `m_p` provably exceeds `m`.
    pub p_stop: u32,
}

/// `Theta_m` for `m` in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ThetaSet {
    /// `m = 0`: every `(beta, p)` with `p >= 3` and `beta < beta*(p)`.
    BelowThreshold,
    Finite(ThetaSlice),
}

/// Partition of `{2, ..., p_max}` at a known `beta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderSets {
    pub beta: f64,
    pub p_max: u32,
    /// `beta*(p) > beta`: the order cannot be estimated.
    pub u_set: Vec<u32>,
    /// `beta*(p) < beta` but `m_*(beta, p)` is shared with another order.
    pub l1_set: Vec<u32>,
    /// `beta*(p) < beta` and `m_*(beta, p)` is unique.
    pub l2_set: Vec<u32>,
    /// `|beta*(p) - beta| <= tol`.
    pub boundary_set: Vec<u32>,
}

fn check_order(p: u32) -> Result<()> {
    if p < 2 {
        return Err(Error::domain(format!(
            "interaction order must be >= 2, got {p}"
        )));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// Sign-carrying residual of the tangency equation at `m = 1 - e^t`:
/// `m atanh(m) - p I(m)`, positive exactly where `R` is increasing.
fn tangency_residual(p: u32, t: f64) -> f64 {
    let eps = t.exp();
    let m = -t.exp_m1();
    let (atanh_m, ent) = if m < 0.5 {
        (m.atanh(), entropy(m))
    } else {
        (atanh_complement(eps), LN_2 - entropy_gap(eps))
    };
    m * atanh_m - p as f64 * ent
}

/// `ln 2 - R(1 - eps)` without cancellation.
fn threshold_gap(p: u32, eps: f64) -> f64 {
    let gap = entropy_gap(eps);
    let u = (-(p as f64) * (-eps).ln_1p()).exp_m1();
    gap - u * (LN_2 - gap)
}

/// Smallest `ln(1 - m)` we resolve; below it `m_p` is 1 to every printed digit.
const T_FLOOR: f64 = -740.0;

fn solve_critical_point(p: u32, tol: f64) -> Result<CriticalPoint> {
    check_order(p)?;
    if p == 2 {
        return Ok(CriticalPoint {
            p,
            beta_star: 0.5,
            m_p: 0.0,
            one_minus_m_p: 1.0,
            degenerate: true,
        });
    }
    // m_p >= (2 beta*)^(1/(2-p)) >= (ln 4)^(-1/(p-2)); widen that slightly.
    let m_lo = 0.9 * 4f64.ln().powf(-1.0 / (p as f64 - 2.0));
    let t_hi = (-m_lo).ln_1p();
    if tangency_residual(p, t_hi) >= 0.0 {
        return Err(Error::Convergence(format!(
            "tangency residual non-negative at m = {m_lo} for p = {p}"
        )));
    }
    let eps = if tangency_residual(p, T_FLOOR) <= 0.0 {
        0.0
    } else {
        // residual is positive towards m = 1 (small t), negative at t_hi
        bisect(|t| tangency_residual(p, t), T_FLOOR, t_hi, true, tol).exp()
    };
    let beta_star = LN_2 - threshold_gap(p, eps);
    Ok(CriticalPoint {
        p,
        beta_star,
        m_p: 1.0 - eps,
        one_minus_m_p: eps,
        degenerate: false,
    })
}

type CacheKey = (u32, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, CriticalPoint>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, CriticalPoint>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Critical point of order `p`. `tol` bounds the width of the final bracket
/// on `ln(1 - m_p)`, i.e. the relative accuracy of `1 - m_p`.
pub fn critical_point(p: u32, tol: f64) -> Result<CriticalPoint> {
    check_order(p)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain(format!("tol must be positive, got {tol}")));
    }
    let key = (p, tol.to_bits());
    if let Some(cp) = cache().lock().expect("threshold cache poisoned").get(&key) {
        return Ok(*cp);
    }
    let cp = solve_critical_point(p, tol)?;
    cache()
        .lock()
        .expect("threshold cache poisoned")
        .insert(key, cp);
    Ok(cp)
}

pub fn beta_star(p: u32, tol: f64) -> Result<f64> {
    Ok(critical_point(p, tol)?.beta_star)
}

/// Largest non-negative global maximizer `m_*(beta, p)`.
pub fn m_star(beta: f64, p: u32, tol: f64) -> Result<f64> {
    Ok(analyze_landscape(beta, p, tol)?.m_star)
}

/// Closed-form `s(p, q)` and the shared stationary point `m = (p/q)^(1/(q-p))`.
pub fn s_pq(p: u32, q: u32) -> Result<(f64, f64)> {
    check_order(p)?;
    if q <= p {
        return Err(Error::domain(format!(
            "s_pq needs p < q, got p = {p}, q = {q}"
        )));
    }
    let ratio = p as f64 / q as f64;
    let gap = (q - p) as f64;
    let m = ratio.powf(1.0 / gap);
    let s = ratio.powf((1.0 - p as f64) / gap) * m.atanh() / p as f64;
    Ok((s, m))
}

pub fn classify_phase(beta: f64, p: u32, tol: f64) -> Result<Phase> {
    check_beta(beta)?;
    let bs = beta_star(p, DEFAULT_TOL)?;
    Ok(if beta < bs - tol {
        Phase::Subcritical
    } else if beta > bs + tol {
        Phase::Supercritical
    } else {
        Phase::Boundary
    })
}

/// Smallest `P >= 3` with `(ln 4)^(1/(2-P)) >= m`; `m_p >= m` for all `p >= P`.
pub fn slice_stopping_bound(m: f64) -> u32 {
    let need = 4f64.ln().ln() / -m.ln();
    let mut p = (2.0 + need.ceil()).max(3.0) as u32;
    // guard the ceil against rounding
    while p > 3 && 4f64.ln().powf(-1.0 / (p as f64 - 3.0)) >= m {
        p -= 1;
    }
    while 4f64.ln().powf(-1.0 / (p as f64 - 2.0)) < m {
        p += 1;
    }
    p
}

/// `Theta_m` restricted to orders `3 <= p < p_limit`.
pub fn theta_slice_up_to(m: f64, p_limit: u32) -> Result<ThetaSlice> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::domain(format!(
            "theta_slice needs m in (0, 1), got {m}"
        )));
    }
    let mut members = Vec::new();
    for p in 3..p_limit {
        let cp = critical_point(p, DEFAULT_TOL)?;
        if cp.m_p < m {
            let beta_p = m.atanh() / (p as f64 * m.powi(p as i32 - 1));
            members.push((p, beta_p));
        }
    }
    Ok(ThetaSlice {
        m,
        members,
        p_stop: p_limit,
    })
}

/// `Theta_m` for `m` in `(0, 1)`: every order `p >= 3` with `m_p < m`,
/// paired with the unique `beta_p = atanh(m) / (p m^(p-1))` placing the
/// maximizer at `m`.
pub fn theta_slice(m: f64) -> Result<ThetaSlice> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::domain(format!(
            "theta_slice needs m in (0, 1), got {m}"
        )));
    }
    theta_slice_up_to(m, slice_stopping_bound(m))
}

/// [`theta_slice`] extended to `m = 0`.
pub fn theta_set(m: f64) -> Result<ThetaSet> {
    if m == 0.0 {
        Ok(ThetaSet::BelowThreshold)
    } else {
        theta_slice(m).map(ThetaSet::Finite)
    }
}

fn near_maximizer(summary: &LandscapeSummary, m: f64) -> bool {
    summary.maximizers.iter().any(|&x| (x - m).abs() <= 1e-8)
}

/// Whether `p` and `q` share their largest global maximizer at this `beta`.
/// Requires `beta` within `tol` of `s(p, q)`; a numerical coincidence of
/// maximizers elsewhere is never reported.
pub fn is_confusable(beta: f64, p: u32, q: u32, tol: f64) -> Result<bool> {
    check_beta(beta)?;
    let (s, m) = s_pq(p, q)?;
    if (beta - s).abs() > tol {
        return Ok(false);
    }
    let a = analyze_landscape(beta, p, DEFAULT_TOL)?;
    if !near_maximizer(&a, m) || h(beta, p, m) < -MAXIMIZER_VALUE_TOL {
        return Ok(false);
    }
    let b = analyze_landscape(beta, q, DEFAULT_TOL)?;
    Ok(near_maximizer(&b, m) && h(beta, q, m) >= -MAXIMIZER_VALUE_TOL)
}

/// The pair `2 <= p < q <= p_max` minimizing `|beta - s(p, q)|`; ties go to
/// the lexicographically smallest pair.
pub fn nearest_lambda(beta: f64, p_max: u32) -> Result<(u32, u32, f64, f64)> {
    check_beta(beta)?;
    if p_max < 3 {
        return Err(Error::domain(format!(
            "nearest_lambda needs p_max >= 3, got {p_max}"
        )));
    }
    let mut best: Option<(u32, u32, f64, f64)> = None;
    for p in 2..p_max {
        for q in p + 1..=p_max {
            let (s, _) = s_pq(p, q)?;
            let d = (beta - s).abs();
            if best.is_none_or(|b| d < b.3) {
                best = Some((p, q, s, d));
            }
        }
    }
    Ok(best.expect("at least one pair"))
}

/// Absolute tolerance on `m_*` when grouping orders into `l1_set`.
pub const SHARED_MAXIMIZER_TOL: f64 = 1e-9;

pub fn order_sets(beta: f64, p_max: u32, tol: f64) -> Result<OrderSets> {
    check_beta(beta)?;
    check_order(p_max)?;
    let mut u_set = Vec::new();
    let mut boundary_set = Vec::new();
    let mut lower = Vec::new();
    for p in 2..=p_max {
        let bs = beta_star(p, DEFAULT_TOL)?;
        if (bs - beta).abs() <= tol {
            boundary_set.push(p);
        } else if bs > beta {
            u_set.push(p);
        } else {
            lower.push((p, m_star(beta, p, DEFAULT_TOL)?));
        }
    }
    debug_assert!(
        u_set.windows(2).all(|w| w[1] == w[0] + 1) && u_set.last().is_none_or(|&q| q == p_max),
        "u_set not an upward tail: {u_set:?}"
    );
    let mut shared = vec![false; lower.len()];
    for i in 0..lower.len() {
        for j in i + 1..lower.len() {
            let (p, mp) = lower[i];
            let (q, mq) = lower[j];
            if (mp - mq).abs() <= SHARED_MAXIMIZER_TOL
                && is_confusable(beta, p, q, tol.max(DEFAULT_TOL))?
            {
                shared[i] = true;
                shared[j] = true;
            }
        }
    }
    let (l1_set, l2_set) =
        lower
            .iter()
            .zip(&shared)
            .fold((vec![], vec![]), |(mut a, mut b), (&(p, _), &s)| {
                if s {
                    a.push(p)
                } else {
                    b.push(p)
                }
                (a, b)
            });
    Ok(OrderSets {
        beta,
        p_max,
        u_set,
        l1_set,
        l2_set,
        boundary_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_threshold_is_half_and_degenerate() {
        let cp = critical_point(2, 1e-12).unwrap();
        assert_eq!(cp.beta_star, 0.5);
        assert!(cp.degenerate);
        assert_eq!(cp.m_p, 0.0);
    }

    #[test]
    fn cubic_threshold_matches_high_precision_solve() {
        // 50-digit bisection of m atanh(m) = 3 I(m):
        // m_3 = 0.948059206908..., beta*(3) = 0.672084786033522938...
        let cp = critical_point(3, 1e-13).unwrap();
        assert!((cp.beta_star - 0.672_084_786_033_523).abs() < 1e-14);
        assert!((cp.m_p - 0.948_059_206_908).abs() < 1e-11);
        let cp4 = critical_point(4, 1e-13).unwrap();
        assert!((cp4.beta_star - 0.688_801_373_948_791).abs() < 1e-14);
        assert!(cp.beta_star < cp4.beta_star);
    }

    #[test]
    fn large_order_gap_matches_reference() {
        // ln 2 - beta*(24) = 3.55271e-15 and 1 - m_24 = 7.10543e-15 (50 digits)
        let cp = critical_point(24, 1e-12).unwrap();
        assert!((cp.one_minus_m_p / 7.10543e-15 - 1.0).abs() < 1e-4);
        assert!(cp.beta_star < LN_2);
    }

    #[test]
    fn critical_magnetization_lower_bound() {
        for p in 3..30 {
            let cp = critical_point(p, 1e-12).unwrap();
            let bound = (2.0 * cp.beta_star).powf(1.0 / (2.0 - p as f64));
            assert!(cp.m_p >= bound - 1e-12, "p={p}");
        }
    }

    #[test]
    fn tangency_root_is_unique() {
        for p in 3..60u32 {
            let ts: Vec<f64> = (0..20_000)
                .map(|i| T_FLOOR * (1.0 - i as f64 / 20_000.0) - 1e-9)
                .collect();
            let changes = ts
                .windows(2)
                .filter(|w| {
                    (tangency_residual(p, w[0]) > 0.0) != (tangency_residual(p, w[1]) > 0.0)
                })
                .count();
            assert_eq!(changes, 1, "p={p}");
        }
    }

    #[test]
    fn m_star_examples() {
        assert_eq!(m_star(0.3, 3, 1e-12).unwrap(), 0.0);
        assert!((m_star(0.8, 3, 1e-12).unwrap() - 0.9801).abs() < 5e-4);
        assert!(m_star(5.0, 3, 1e-12).unwrap() > 0.999);
    }

    #[test]
    fn s_pq_reference_values() {
        // 50-digit evaluations of the closed form
        let (s, m) = s_pq(2, 3).unwrap();
        assert!((s - 0.603_539_217_162_787_6).abs() < 1e-14);
        assert!((m - 2.0 / 3.0).abs() < 1e-15);
        let (s, m) = s_pq(2, 4).unwrap();
        assert!((s - 0.623_225_240_140_230_5).abs() < 1e-14);
        assert!((m - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(s_pq(3, 3).is_err());
        assert!(s_pq(4, 3).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_phase(0.3, 4, 1e-9).unwrap(), Phase::Subcritical);
        for p in 2..20 {
            assert_eq!(
                classify_phase(LN_2 + 0.1, p, 1e-9).unwrap(),
                Phase::Supercritical
            );
        }
        let b3 = beta_star(3, DEFAULT_TOL).unwrap();
        assert_eq!(classify_phase(b3, 3, 1e-9).unwrap(), Phase::Boundary);
    }

    #[test]
    fn landscape_at_threshold_has_two_maximizers() {
        for p in 3..10 {
            let cp = critical_point(p, 1e-12).unwrap();
            let s = analyze_landscape(cp.beta_star, p, 1e-14).unwrap();
            assert_eq!(s.maximizers.len(), 2, "p={p}: {:?}", s.maximizers);
            assert!(
                (s.positive_branch().unwrap() - cp.m_p).abs() < 1e-6,
                "p={p}"
            );
        }
    }

    #[test]
    fn stopping_bound_is_minimal() {
        for &m in &[0.2, 0.5, 0.9, 0.95, 0.99, 0.999] {
            let p = slice_stopping_bound(m);
            let b = |p: u32| 4f64.ln().powf(1.0 / (2.0 - p as f64));
            assert!(b(p) >= m);
            assert!(p == 3 || b(p - 1) < m, "m={m} p={p}");
        }
        assert_eq!(slice_stopping_bound(0.99), 35);
    }

    #[test]
    fn theta_slice_small_m_is_empty() {
        let s = theta_slice(0.2).unwrap();
        assert!(s.members.is_empty());
        let m3 = critical_point(3, DEFAULT_TOL).unwrap().m_p;
        assert!(0.2 <= m3);
        assert!(theta_slice(0.0).is_err());
        assert!(theta_slice(1.0).is_err());
        assert_eq!(theta_set(0.0).unwrap(), ThetaSet::BelowThreshold);
    }

    #[test]
    fn theta_slice_members_sorted_and_round_trip() {
        let s = theta_slice(0.995).unwrap();
        let ps: Vec<u32> = s.members.iter().map(|m| m.0).collect();
        assert_eq!(ps, vec![3, 4]);
        for &(p, b) in &s.members {
            assert!((m_star(b, p, 1e-13).unwrap() - 0.995).abs() < 1e-8);
        }
    }

    #[test]
    fn order_sets_examples() {
        let os = order_sets(0.8, 12, 1e-12).unwrap();
        assert!(os.u_set.is_empty());
        assert_eq!(os.l2_set, (2..=12).collect::<Vec<_>>());
        let os = order_sets(0.55, 20, 1e-12).unwrap();
        assert_eq!(os.u_set, (3..=20).collect::<Vec<_>>());
        assert_eq!(os.l2_set, vec![2]);
        let (s24, _) = s_pq(2, 4).unwrap();
        let os = order_sets(s24, 6, 1e-12).unwrap();
        // beta*(4) > s(2,4): 4 is not even in the lower set
        assert!(os.l1_set.is_empty());
        assert!(os.u_set.contains(&4));
    }

    #[test]
    fn confusable_examples() {
        assert!(!is_confusable(0.8, 2, 3, 1e-9).unwrap());
        let (s23, _) = s_pq(2, 3).unwrap();
        // subcritical for q = 3 at s(2,3) < beta*(3)
        assert_eq!(classify_phase(s23, 3, 1e-9).unwrap(), Phase::Subcritical);
        assert!(!is_confusable(s23, 2, 3, 1e-9).unwrap());
        assert!(is_confusable(0.8, 3, 2, 1e-9).is_err());
    }

    #[test]
    fn nearest_lambda_examples() {
        let (p, q, s, d) = nearest_lambda(0.60354, 6).unwrap();
        assert_eq!((p, q), (2, 3));
        assert!((s - 0.60354).abs() < 1e-5 && d < 1e-5);
        let (_, _, s, d) = nearest_lambda(10.0, 6).unwrap();
        assert!((d - (10.0 - s)).abs() < 1e-12 && d > 0.0);
        assert!(nearest_lambda(0.6, 2).is_err());
    }
}
