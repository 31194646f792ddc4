//! Exact laws of the spin sum `S = n xbar`.
//!
//! Both the Curie-Weiss measure and the Rademacher product measure give equal
//! mass to every configuration with the same spin sum, so each is fully
//! described by its law on the `n + 1` support points `s = -n, -n+2, ..., n`.
//! All arithmetic stays in log space until the final comparison.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, logsumexp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub beta: f64,
    pub p: u32,
    pub n: usize,
}

impl ModelParams {
    pub fn new(beta: f64, p: u32, n: usize) -> Result<Self> {
        let params = ModelParams { beta, p, n };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.p < 2 {
            return Err(Error::domain(format!(
                "interaction order must be >= 2, got {}",
                self.p
            )));
        }
        if self.n == 0 {
            return Err(Error::domain("n must be >= 1"));
        }
        Ok(())
    }
}

/// Law of the spin sum on `{-n, -n+2, ..., n}`; index `i` holds `s = 2i - n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagnetizationLaw {
    pub n: usize,
    pub log_prob: Vec<f64>,
    /// `ln Z_n` for model laws; the (vanishing) log normalizer for product laws.
    pub log_partition: f64,
}

impl MagnetizationLaw {
    fn from_unnormalized(n: usize, mut weights: Vec<f64>) -> Self {
        let log_partition = logsumexp(&weights);
        for w in &mut weights {
            *w -= log_partition;
        }
        MagnetizationLaw {
            n,
            log_prob: weights,
            log_partition,
        }
    }

    pub fn len(&self) -> usize {
        self.log_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_prob.is_empty()
    }

    pub fn spin(&self, i: usize) -> i64 {
        2 * i as i64 - self.n as i64
    }

    pub fn xbar(&self, i: usize) -> f64 {
        self.spin(i) as f64 / self.n as f64
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len()).map(|i| self.spin(i))
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_prob.iter().map(|l| l.exp()).collect()
    }

    /// Index of spin sum `s`, if it lies on the support.
    pub fn index_of(&self, s: i64) -> Option<usize> {
        let k = s + self.n as i64;
        (k >= 0 && k % 2 == 0 && k / 2 <= self.n as i64).then_some((k / 2) as usize)
    }

    pub fn mean_xbar(&self) -> f64 {
        (0..self.len())
            .map(|i| self.xbar(i) * self.log_prob[i].exp())
            .sum()
    }
}

fn model_weights(params: &ModelParams) -> Vec<f64> {
    let n = params.n;
    let nf = n as f64;
    (0..=n)
        .map(|k| {
            let x = (2 * k as i64 - n as i64) as f64 / nf;
            ln_binomial(n, k) + params.beta * nf * x.powi(params.p as i32)
        })
        .collect()
}

/// Exact law of the spin sum under `P(x) ∝ exp(beta n xbar^p)`.
pub fn magnetization_law(params: &ModelParams) -> Result<MagnetizationLaw> {
    params.validate()?;
    Ok(MagnetizationLaw::from_unnormalized(
        params.n,
        model_weights(params),
    ))
}

/// `ln Z_n(beta, p)`; identical to `magnetization_law(params).log_partition`.
pub fn log_partition(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    Ok(logsumexp(&model_weights(params)))
}

/// Law of the spin sum of `n` i.i.d. Rademacher variables with mean `m`.
pub fn rademacher_law(m: f64, n: usize) -> Result<MagnetizationLaw> {
    if m.is_nan() || m.abs() >= 1.0 {
        return Err(Error::domain(format!(
            "rademacher_law needs |m| < 1, got {m}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    let ln_up = m.ln_1p() - std::f64::consts::LN_2;
    let ln_down = (-m).ln_1p() - std::f64::consts::LN_2;
    let weights = (0..=n)
        .map(|k| ln_binomial(n, k) + (k as f64 * ln_up + (n - k) as f64 * ln_down))
        .collect();
    Ok(MagnetizationLaw::from_unnormalized(n, weights))
}

fn sampler(law: &MagnetizationLaw) -> WeightedIndex<f64> {
    WeightedIndex::new(law.probs()).expect("normalized law has positive total mass")
}

/// `count` i.i.d. spin sums from `law`, by inverse CDF over the support.
pub fn sample_magnetization<R: Rng + ?Sized>(
    law: &MagnetizationLaw,
    rng: &mut R,
    count: usize,
) -> Vec<i64> {
    let dist = sampler(law);
    (0..count).map(|_| law.spin(dist.sample(rng))).collect()
}

/// Exact sampler of full configurations: draw the spin sum, then a uniformly
/// random arrangement of that many `+1`s.
#[derive(Debug, Clone)]
pub struct ConfigurationSampler {
    params: ModelParams,
    law: MagnetizationLaw,
    dist: WeightedIndex<f64>,
}

impl ConfigurationSampler {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let law = magnetization_law(params)?;
        let dist = sampler(&law);
        Ok(ConfigurationSampler {
            params: *params,
            law,
            dist,
        })
    }

    pub fn law(&self) -> &MagnetizationLaw {
        &self.law
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i8> {
        let k = self.dist.sample(rng);
        let n = self.params.n;
        let mut spins: Vec<i8> = (0..n).map(|i| if i < k { 1 } else { -1 }).collect();
        spins.shuffle(rng);
        spins
    }
}

pub fn sample_configuration<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<Vec<i8>> {
    Ok(ConfigurationSampler::new(params)?.sample(rng))
}

pub fn tv_distance(a: &MagnetizationLaw, b: &MagnetizationLaw) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            left: a.n,
            right: b.n,
        });
    }
    let l1: f64 = a
        .log_prob
        .iter()
        .zip(&b.log_prob)
        .map(|(x, y)| (x.exp() - y.exp()).abs())
        .sum();
    Ok((0.5 * l1).min(1.0))
}

/// Extremes of `Q / P` over the window `E_K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioProfile {
    /// max over the two-sided window `|sqrt(n)(xbar - m)| <= K`
    pub max_ratio: f64,
    /// min over the same window
    pub min_ratio: f64,
    /// max over the one-sided event `sqrt(n)(xbar - m) <= K`
    pub one_sided_max: f64,
    pub window_points: usize,
}

/// Likelihood ratio between the Rademacher(`m`) product measure `Q` and the
/// model `P`, over spin sums close to `m`. Both measures are uniform within a
/// spin-sum class, so the configuration-level ratio equals the ratio of the
/// spin-sum laws.
pub fn likelihood_ratio_profile(params: &ModelParams, m: f64, k: f64) -> Result<RatioProfile> {
    if k.is_nan() || k <= 0.0 {
        return Err(Error::domain(format!("K must be positive, got {k}")));
    }
    let model = magnetization_law(params)?;
    let product = rademacher_law(m, params.n)?;
    let root_n = (params.n as f64).sqrt();
    let mut max_log = f64::NEG_INFINITY;
    let mut min_log = f64::INFINITY;
    let mut one_sided = f64::NEG_INFINITY;
    let mut window_points = 0;
    for i in 0..model.len() {
        let z = root_n * (model.xbar(i) - m);
        let lr = product.log_prob[i] - model.log_prob[i];
        if z <= k {
            one_sided = one_sided.max(lr);
        }
        if z.abs() <= k {
            window_points += 1;
            max_log = max_log.max(lr);
            min_log = min_log.min(lr);
        }
    }
    if window_points == 0 {
        return Err(Error::EmptyWindow { n: params.n, m, k });
    }
    Ok(RatioProfile {
        max_ratio: max_log.exp(),
        min_ratio: min_log.exp(),
        one_sided_max: one_sided.exp(),
        window_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn probs(beta: f64, p: u32, n: usize) -> Vec<f64> {
        magnetization_law(&ModelParams::new(beta, p, n).unwrap())
            .unwrap()
            .probs()
    }

    #[test]
    fn two_state_laws() {
        let beta: f64 = 0.7;
        let pr = probs(beta, 3, 1);
        let up = beta.exp() / (beta.exp() + (-beta).exp());
        assert!((pr[1] - up).abs() < 1e-15);
        let pr = probs(beta, 4, 1);
        assert!((pr[0] - 0.5).abs() < 1e-15 && (pr[1] - 0.5).abs() < 1e-15);
        let lz = log_partition(&ModelParams::new(beta, 4, 1).unwrap()).unwrap();
        assert!((lz - (2.0 * beta.exp()).ln()).abs() < 1e-14);
    }

    #[test]
    fn four_configuration_law() {
        let beta: f64 = 0.4;
        let pr = probs(beta, 2, 2);
        let w = [(2.0 * beta).exp(), 2.0, (2.0 * beta).exp()];
        let z: f64 = w.iter().sum();
        for i in 0..3 {
            assert!((pr[i] - w[i] / z).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_limit() {
        let params = ModelParams::new(1e-14, 3, 200).unwrap();
        let lz = log_partition(&params).unwrap();
        assert!((lz - 200.0 * std::f64::consts::LN_2).abs() < 1e-10);
        let law = magnetization_law(&params).unwrap();
        assert_eq!(law.log_partition, lz);
    }

    #[test]
    fn rademacher_examples() {
        let law = rademacher_law(0.0, 2).unwrap();
        let pr = law.probs();
        assert!(
            (pr[0] - 0.25).abs() < 1e-15
                && (pr[1] - 0.5).abs() < 1e-15
                && (pr[2] - 0.25).abs() < 1e-15
        );
        let law = rademacher_law(0.3, 500).unwrap();
        let mean: f64 = law
            .support()
            .zip(law.probs())
            .map(|(s, q)| s as f64 * q)
            .sum();
        assert!((mean - 150.0).abs() < 1e-9);
        assert!(rademacher_law(1.0, 5).is_err());
        assert!(rademacher_law(0.0, 0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 3, 10).is_err());
        assert!(ModelParams::new(0.5, 1, 10).is_err());
        assert!(ModelParams::new(0.5, 3, 0).is_err());
    }

    #[test]
    fn point_mass_sampling() {
        let law = magnetization_law(&ModelParams::new(200.0, 3, 20).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_magnetization(&law, &mut rng, 1000)
            .iter()
            .all(|&s| s == 20));
    }

    #[test]
    fn configuration_sum_matches() {
        let params = ModelParams::new(0.8, 3, 31).unwrap();
        let sampler = ConfigurationSampler::new(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = sampler.sample(&mut rng);
            assert_eq!(x.len(), 31);
            let s: i64 = x.iter().map(|&v| v as i64).sum();
            assert!(sampler.law().index_of(s).is_some());
        }
        let one = sample_configuration(&ModelParams::new(0.8, 3, 1).unwrap(), &mut rng).unwrap();
        assert!(one == vec![1] || one == vec![-1]);
    }

    #[test]
    fn tv_basic() {
        let a = rademacher_law(0.2, 10).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        let hi = magnetization_law(&ModelParams::new(500.0, 3, 10).unwrap()).unwrap();
        let mut lo = hi.clone();
        lo.log_prob.reverse();
        assert!((tv_distance(&hi, &lo).unwrap() - 1.0).abs() < 1e-12);
        let b = rademacher_law(0.2, 11).unwrap();
        assert_eq!(
            tv_distance(&a, &b),
            Err(Error::DimensionMismatch {
                left: 10,
                right: 11
            })
        );
    }

    #[test]
    fn ratio_profile_uniform_limit() {
        let params = ModelParams::new(1e-15, 3, 400).unwrap();
        let r = likelihood_ratio_profile(&params, 0.0, 3.0).unwrap();
        assert!((r.max_ratio - 1.0).abs() < 1e-9 && (r.min_ratio - 1.0).abs() < 1e-9);
        assert!(r.max_ratio >= r.min_ratio && r.min_ratio > 0.0);
        assert!(likelihood_ratio_profile(&params, 0.0, 0.0).is_err());
    }

    #[test]
    fn ratio_profile_empty_window() {
        // n = 1: support {-1, 1}; sqrt(1) |x - 0| = 1 > 0.5
        let params = ModelParams::new(0.5, 3, 1).unwrap();
        assert!(matches!(
            likelihood_ratio_profile(&params, 0.0, 0.5),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn index_round_trip() {
        let law = rademacher_law(0.0, 7).unwrap();
        for i in 0..law.len() {
            assert_eq!(law.index_of(law.spin(i)), Some(i));
        }
        assert_eq!(law.index_of(0), None);
        assert_eq!(law.index_of(9), None);
    }
}
