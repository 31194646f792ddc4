//! The interaction-order estimator
//!
//! ```text
//! p_hat(beta, delta) = argmin_{2 <= q <= q_cap, beta*(q) < beta} | m_*(beta, q)^2 - xbar^2 |
//! q_cap = floor( ln(2 beta + delta) / ln(1 / |xbar|) + 2 )
//! ```
//!
//! `beta` is known. Ties go to the smallest `q`, and an empty candidate set
//! yields [`Estimate::Abstain`] rather than an error.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{magnetization_law, ModelParams};
use crate::phase::{beta_star, m_star};
use crate::DEFAULT_TOL;

/// Used as `q_cap` when `|xbar| = 1` and as the overall ceiling on `q_cap`.
pub const DEFAULT_HARD_CAP: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimate {
    Order(u32),
    Abstain,
}

impl Estimate {
    pub fn order(self) -> Option<u32> {
        match self {
            Estimate::Order(q) => Some(q),
            Estimate::Abstain => None,
        }
    }
}

impl Serialize for Estimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Estimate::Order(q) => s.serialize_u32(*q),
            Estimate::Abstain => s.serialize_str("Abstain"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub q: u32,
    pub m_star: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSet {
    /// Candidate bound actually used (after the hard cap). May be below 2.
    pub q_cap: i64,
    pub orders: Vec<u32>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub p_hat: Estimate,
    pub q_cap: i64,
    pub candidates: Vec<Candidate>,
    pub delta: f64,
    pub warning: Option<String>,
}

fn check_inputs(beta: f64, delta: f64, xbar: f64, hard_cap: u32) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!("beta must be positive, got {beta}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if xbar.is_nan() || xbar.abs() > 1.0 {
        return Err(Error::domain(format!(
            "xbar must lie in [-1, 1], got {xbar}"
        )));
    }
    if hard_cap < 2 {
        return Err(Error::domain(format!(
            "hard cap must be >= 2, got {hard_cap}"
        )));
    }
    Ok(())
}

/// The real-valued bound on `q`, floored and clipped to `hard_cap`. Its
/// continuous limit at `xbar = 0` is 2; at `|xbar| = 1` it is unbounded.
pub fn q_cap(beta: f64, delta: f64, xbar: f64, hard_cap: u32) -> i64 {
    let a = xbar.abs();
    if a == 0.0 {
        2
    } else if a >= 1.0 {
        hard_cap as i64
    } else {
        let v = (2.0 * beta + delta).ln() / -a.ln() + 2.0;
        if v >= hard_cap as f64 {
            hard_cap as i64
        } else {
            v.floor() as i64
        }
    }
}

fn cap_warning(beta: f64, delta: f64) -> Option<String> {
    (2.0 * beta + delta <= 1.0).then(|| {
        format!(
            "2*beta + delta = {} <= 1 leaves no candidate for |xbar| < 1; use delta > {}",
            2.0 * beta + delta,
            1.0 - 2.0 * beta
        )
    })
}

/// Estimator for a fixed `(beta, delta, hard_cap)` with `beta*(q)` and
/// `m_*(beta, q)` tabulated once for every eligible order.
#[derive(Debug, Clone)]
pub struct OrderEstimator {
    beta: f64,
    delta: f64,
    hard_cap: u32,
    /// `(q, m_*(beta, q)^2)` for each `q <= hard_cap` with `beta*(q) < beta`, ascending.
    table: Vec<(u32, f64)>,
    m_stars: Vec<f64>,
}

impl OrderEstimator {
    pub fn new(beta: f64, delta: f64, hard_cap: u32) -> Result<Self> {
        check_inputs(beta, delta, 0.0, hard_cap)?;
        let mut table = Vec::new();
        let mut m_stars = Vec::new();
        for q in 2..=hard_cap {
            if beta_star(q, DEFAULT_TOL)? < beta {
                let m = m_star(beta, q, DEFAULT_TOL)?;
                table.push((q, m * m));
                m_stars.push(m);
            } else if beta < std::f64::consts::LN_2 {
                // thresholds increase in q: nothing further qualifies
                break;
            }
        }
        Ok(OrderEstimator {
            beta,
            delta,
            hard_cap,
            table,
            m_stars,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn eligible(&self, cap: i64) -> impl Iterator<Item = (usize, &(u32, f64))> + '_ {
        self.table
            .iter()
            .enumerate()
            .take_while(move |(_, (q, _))| (*q as i64) <= cap)
    }

    pub fn candidate_set(&self, xbar: f64) -> Result<CandidateSet> {
        check_inputs(self.beta, self.delta, xbar, self.hard_cap)?;
        let cap = q_cap(self.beta, self.delta, xbar, self.hard_cap);
        let orders = self.eligible(cap).map(|(_, (q, _))| *q).collect();
        Ok(CandidateSet {
            q_cap: cap,
            orders,
            warning: cap_warning(self.beta, self.delta),
        })
    }

    /// The estimate alone, without the candidate table.
    pub fn estimate_order(&self, xbar: f64) -> Estimate {
        let cap = q_cap(self.beta, self.delta, xbar, self.hard_cap);
        let x2 = xbar * xbar;
        let mut best: Option<(u32, f64)> = None;
        for (_, &(q, m2)) in self.eligible(cap) {
            let d = (m2 - x2).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((q, d));
            }
        }
        best.map_or(Estimate::Abstain, |(q, _)| Estimate::Order(q))
    }

    pub fn estimate(&self, xbar: f64) -> Result<EstimateResult> {
        check_inputs(self.beta, self.delta, xbar, self.hard_cap)?;
        let cap = q_cap(self.beta, self.delta, xbar, self.hard_cap);
        let x2 = xbar * xbar;
        let candidates: Vec<Candidate> = self
            .eligible(cap)
            .map(|(i, &(q, m2))| Candidate {
                q,
                m_star: self.m_stars[i],
                distance: (m2 - x2).abs(),
            })
            .collect();
        let p_hat = self.estimate_order(xbar);
        Ok(EstimateResult {
            p_hat,
            q_cap: cap,
            candidates,
            delta: self.delta,
            warning: cap_warning(self.beta, self.delta),
        })
    }
}

pub fn candidate_set(beta: f64, delta: f64, xbar: f64, hard_cap: u32) -> Result<CandidateSet> {
    check_inputs(beta, delta, xbar, hard_cap)?;
    OrderEstimator::new(beta, delta, hard_cap)?.candidate_set(xbar)
}

pub fn estimate_p(beta: f64, delta: f64, xbar: f64, hard_cap: u32) -> Result<EstimateResult> {
    check_inputs(beta, delta, xbar, hard_cap)?;
    OrderEstimator::new(beta, delta, hard_cap)?.estimate(xbar)
}

/// `P(p_hat = p)` under the model, summed exactly over the law of `xbar`
/// in support order.
pub fn success_probability_exact(params: &ModelParams, delta: f64, hard_cap: u32) -> Result<f64> {
    let est = OrderEstimator::new(params.beta, delta, hard_cap)?;
    success_probability_with(&est, params)
}

pub fn success_probability_with(est: &OrderEstimator, params: &ModelParams) -> Result<f64> {
    let law = magnetization_law(params)?;
    let target = Estimate::Order(params.p);
    Ok((0..law.len())
        .filter(|&i| est.estimate_order(law.xbar(i)) == target)
        .fold(0.0, |acc, i| acc + law.log_prob[i].exp()))
}
