//! Reproducible experiment harness.
//!
//! Exact columns are pure functions of the arguments. Monte Carlo columns
//! depend on the seed only through per-row seeds derived from
//! `(seed, row index)` and ChaCha streams indexed by replicate block, so
//! results are identical whether rows and blocks run serially or in
//! parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::estimator::{success_probability_with, Estimate, OrderEstimator, DEFAULT_HARD_CAP};
use crate::model::{
    likelihood_ratio_profile, magnetization_law, rademacher_law, sample_magnetization, tv_distance,
    MagnetizationLaw, ModelParams,
};
use crate::numeric::{linear_fit, logsumexp};
use crate::phase::{classify_phase, m_star, theta_slice, Phase};
use crate::DEFAULT_TOL;

/// Replicates drawn from one generator stream.
pub const MC_BLOCK: usize = 4096;
/// Rows whose success probability is this close to 1 are left out of the rate fit.
pub const FIT_FAILURE_FLOOR: f64 = 1e-15;

/// splitmix64 finalizer applied to `seed + index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for replicate block `block` of a row seeded with `row_seed`.
pub fn block_rng(row_seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(row_seed);
    rng.set_stream(block);
    rng
}

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::domain("n grid is empty"));
    }
    if n_grid.contains(&0) {
        return Err(Error::domain("n grid entries must be >= 1"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("n grid must be strictly ascending"));
    }
    Ok(())
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRow {
    pub n: usize,
    pub success_prob_exact: f64,
    pub mc_success_prob: Option<f64>,
    pub mc_reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessCurve {
    pub beta: f64,
    pub p: u32,
    pub delta: f64,
    pub hard_cap: u32,
    pub rows: Vec<SuccessRow>,
    /// Least-squares slope of `ln(1 - success)` against `n`.
    pub fitted_rate: Option<f64>,
    pub fit_r2: Option<f64>,
    pub fit_points: usize,
}

fn mc_success(
    est: &OrderEstimator,
    law: &MagnetizationLaw,
    p: u32,
    reps: usize,
    row_seed: u64,
) -> f64 {
    let blocks = reps.div_ceil(MC_BLOCK);
    let hits: usize = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = MC_BLOCK.min(reps - b * MC_BLOCK);
            let mut rng = block_rng(row_seed, b as u64);
            sample_magnetization(law, &mut rng, count)
                .into_iter()
                .filter(|&s| est.estimate_order(s as f64 / law.n as f64) == Estimate::Order(p))
                .count()
        })
        .sum();
    hits as f64 / reps as f64
}

/// Exact (and optionally Monte Carlo) success probability of `p_hat` over a
/// grid of system sizes, with the exponential failure rate fitted.
pub fn success_curve(
    beta: f64,
    p: u32,
    delta: f64,
    n_grid: &[usize],
    mc_reps: usize,
    seed: u64,
) -> Result<SuccessCurve> {
    check_grid(n_grid)?;
    let est = OrderEstimator::new(beta, delta, DEFAULT_HARD_CAP)?;
    let rows = n_grid
        .par_iter()
        .enumerate()
        .map(|(row, &n)| {
            let params = ModelParams::new(beta, p, n)?;
            let exact = success_probability_with(&est, &params)?;
            let row_seed = derive_seed(seed, row as u64);
            let mc = if mc_reps > 0 {
                let law = magnetization_law(&params)?;
                Some(mc_success(&est, &law, p, mc_reps, row_seed))
            } else {
                None
            };
            Ok(SuccessRow {
                n,
                success_prob_exact: exact,
                mc_success_prob: mc,
                mc_reps,
                seed: row_seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.success_prob_exact < 1.0 - FIT_FAILURE_FLOOR)
        .map(|r| (r.n as f64, (1.0 - r.success_prob_exact).ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys);
    Ok(SuccessCurve {
        beta,
        p,
        delta,
        hard_cap: DEFAULT_HARD_CAP,
        rows,
        fitted_rate: fit.map(|f| f.0),
        fit_r2: fit.map(|f| f.2).filter(|r| r.is_finite()),
        fit_points: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContiguityRow {
    pub n: usize,
    pub tv_to_product_law: f64,
    pub max_ratio_on_ek: f64,
    pub min_ratio_on_ek: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContiguityCurve {
    pub beta: f64,
    pub p: u32,
    pub phase: Phase,
    /// Mean of the comparison product law.
    pub m: f64,
    pub k: f64,
    pub rows: Vec<ContiguityRow>,
}

/// Distance between the model and the Rademacher(`m`) product law, and the
/// likelihood-ratio extremes on `E_K`, across system sizes. With `m = None`
/// the mean is 0 below threshold and `m_*(beta, p)` otherwise.
pub fn contiguity_curve(
    beta: f64,
    p: u32,
    m: Option<f64>,
    k: f64,
    n_grid: &[usize],
) -> Result<ContiguityCurve> {
    check_grid(n_grid)?;
    let phase = classify_phase(beta, p, DEFAULT_TOL)?;
    let m = match m {
        Some(m) => m,
        None if phase == Phase::Subcritical => 0.0,
        None => m_star(beta, p, DEFAULT_TOL)?,
    };
    let rows = n_grid
        .par_iter()
        .map(|&n| {
            let params = ModelParams::new(beta, p, n)?;
            let tv = tv_distance(&magnetization_law(&params)?, &rademacher_law(m, n)?)?;
            let ratio = likelihood_ratio_profile(&params, m, k)?;
            Ok(ContiguityRow {
                n,
                tv_to_product_law: tv,
                max_ratio_on_ek: ratio.max_ratio,
                min_ratio_on_ek: ratio.min_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContiguityCurve {
        beta,
        p,
        phase,
        m,
        k,
        rows,
    })
}

fn positive_part(law: &MagnetizationLaw) -> Vec<f64> {
    let first = law.index_of(0).map_or(law.n.div_ceil(2), |i| i + 1);
    let tail = &law.log_prob[first..];
    let z = logsumexp(tail);
    tail.iter().map(|l| (l - z).exp()).collect()
}

fn check_same_size(a: &MagnetizationLaw, b: &MagnetizationLaw) -> Result<()> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            left: a.n,
            right: b.n,
        });
    }
    Ok(())
}

/// TV distance between two laws conditioned on `xbar > 0`.
pub fn conditional_positive_tv(a: &MagnetizationLaw, b: &MagnetizationLaw) -> Result<f64> {
    check_same_size(a, b)?;
    let (pa, pb) = (positive_part(a), positive_part(b));
    Ok((0.5 * pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0))
}

/// Wasserstein-1 distance, on the `xbar` scale, between two laws
/// conditioned on `xbar > 0`.
///
/// TV compares the laws cell by cell and stays of order one whenever the
/// limiting Gaussian widths differ; this distance instead measures how far
/// apart the two concentration points are and vanishes as both collapse
/// onto the same magnetization.
pub fn conditional_positive_w1(a: &MagnetizationLaw, b: &MagnetizationLaw) -> Result<f64> {
    check_same_size(a, b)?;
    let (pa, pb) = (positive_part(a), positive_part(b));
    let spacing = 2.0 / a.n as f64;
    let (mut fa, mut fb, mut acc) = (0.0, 0.0, 0.0);
    for (x, y) in pa.iter().zip(&pb) {
        fa += x;
        fb += y;
        acc += (fa - fb).abs();
    }
    Ok(acc * spacing)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionRow {
    pub n: usize,
    pub tv_conditional_positive: f64,
    pub w1_conditional_positive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionDemo {
    pub m: f64,
    /// `(p, beta_p)` of the two slice members compared.
    pub first: (u32, f64),
    pub second: (u32, f64),
    pub rows: Vec<ConfusionRow>,
}

/// Takes the first two members of `Theta_m` and tracks how their laws,
/// conditioned on a positive magnetization, merge as `n` grows.
///
/// Both rows are reported because they behave differently: the W1 column
/// decays like `n^(-1/2)`, while TV levels off at the distance between two
/// centred normals whose widths come from the curvature of `H` at `m`.
pub fn theta_confusion_demo(m: f64, n_grid: &[usize]) -> Result<ConfusionDemo> {
    check_grid(n_grid)?;
    let slice = theta_slice(m)?;
    if slice.members.len() < 2 {
        return Err(Error::NotEnoughMembers {
            m,
            found: slice.members.len(),
        });
    }
    let (first, second) = (slice.members[0], slice.members[1]);
    let rows = n_grid
        .par_iter()
        .map(|&n| {
            let a = magnetization_law(&ModelParams::new(first.1, first.0, n)?)?;
            let b = magnetization_law(&ModelParams::new(second.1, second.0, n)?)?;
            Ok(ConfusionRow {
                n,
                tv_conditional_positive: conditional_positive_tv(&a, &b)?,
                w1_conditional_positive: conditional_positive_w1(&a, &b)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfusionDemo {
        m,
        first,
        second,
        rows,
    })
}

/// Provenance written next to every experiment output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub git_hash: String,
}

impl Manifest {
    pub fn new(experiment: &str, argv: &[String], seed: u64, git_hash: &str) -> Self {
        Manifest {
            experiment: experiment.to_string(),
            argv: argv.to_vec(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            git_hash: git_hash.to_string(),
        }
    }
}
