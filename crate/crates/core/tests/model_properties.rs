use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spin_order::model::ConfigurationSampler;
use spin_order::{
    analyze_landscape, log_partition, magnetization_law, rademacher_law, sample_magnetization,
    tv_distance, MagnetizationLaw, ModelParams,
};

/// Law of the spin sum by enumerating all 2^n configurations.
fn brute_force(beta: f64, p: u32, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let ups = mask.count_ones() as usize;
        let xbar = (2.0 * ups as f64 - n as f64) / n as f64;
        w[ups] += (beta * n as f64 * xbar.powi(p as i32)).exp();
    }
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[test]
fn matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let beta = rng.gen_range(0.01..2.0);
        let p = rng.gen_range(2..=8);
        let n = rng.gen_range(1..=12);
        let exact = brute_force(beta, p, n);
        let law = magnetization_law(&ModelParams::new(beta, p, n).unwrap()).unwrap();
        for (a, b) in law.probs().iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 1e-12, "max abs error {worst}");
}

#[test]
fn normalized_up_to_ten_thousand() {
    for &n in &[1, 10, 100, 1000, 10_000] {
        for &(beta, p) in &[(0.3, 2), (0.8, 3), (1.5, 4), (0.6, 7)] {
            let law = magnetization_law(&ModelParams::new(beta, p, n).unwrap()).unwrap();
            assert_eq!(law.len(), n + 1);
            assert!(logsumexp(&law.log_prob).abs() <= 1e-10);
        }
    }
}

proptest! {
    #[test]
    fn even_orders_are_symmetric(beta in 0.01f64..2.0, half in 1u32..5, n in 1usize..300) {
        let law = magnetization_law(&ModelParams::new(beta, 2 * half, n).unwrap()).unwrap();
        let rev: Vec<f64> = law.log_prob.iter().rev().copied().collect();
        prop_assert_eq!(&law.log_prob, &rev);
    }

    #[test]
    fn mean_zero_product_law_symmetric(n in 1usize..500) {
        let law = rademacher_law(0.0, n).unwrap();
        let rev: Vec<f64> = law.log_prob.iter().rev().copied().collect();
        prop_assert_eq!(&law.log_prob, &rev);
    }

    #[test]
    fn log_partition_consistent(beta in 0.01f64..2.0, p in 2u32..10, n in 1usize..2000) {
        let params = ModelParams::new(beta, p, n).unwrap();
        prop_assert_eq!(log_partition(&params).unwrap(), magnetization_law(&params).unwrap().log_partition);
    }
}

#[test]
fn supercritical_concentration() {
    for &(beta, p) in &[(0.9, 3), (1.0, 3), (1.0, 4), (1.2, 5)] {
        let m = analyze_landscape(beta, p, 1e-12).unwrap().m_star;
        // Even orders split their mass between +m and -m.
        let dist = |x: f64| {
            if p % 2 == 0 {
                (x.abs() - m).abs()
            } else {
                (x - m).abs()
            }
        };
        let outside = |n: usize| {
            let law = magnetization_law(&ModelParams::new(beta, p, n).unwrap()).unwrap();
            (0..law.len())
                .filter(|&i| dist(law.xbar(i)) > 0.05)
                .map(|i| law.log_prob[i].exp())
                .sum::<f64>()
        };
        let (a, b) = (outside(200), outside(800));
        assert!(b < a && a < 0.01, "beta={beta} p={p}: {a} {b}");
    }
}

#[test]
fn partition_function_theta_one() {
    let (beta, p) = (0.8, 3);
    let s = analyze_landscape(beta, p, 1e-13).unwrap();
    let ratios: Vec<f64> = [100usize, 500, 1000, 5000, 10_000]
        .iter()
        .map(|&n| {
            let lz = log_partition(&ModelParams::new(beta, p, n).unwrap()).unwrap();
            (lz - n as f64 * std::f64::consts::LN_2 - n as f64 * s.global_max_value).exp()
        })
        .collect();
    let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
    let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
    assert!(hi / lo <= 20.0, "{ratios:?}");
}

#[test]
fn free_energy_density_limit() {
    let (beta, p) = (0.8, 3);
    let hmax = analyze_landscape(beta, p, 1e-13).unwrap().global_max_value;
    let gaps: Vec<f64> = [100usize, 1000, 10_000]
        .iter()
        .map(|&n| {
            let lz = log_partition(&ModelParams::new(beta, p, n).unwrap()).unwrap();
            ((lz - n as f64 * std::f64::consts::LN_2) / n as f64 - hmax).abs()
        })
        .collect();
    assert!(
        gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-3,
        "{gaps:?}"
    );
}

#[test]
fn product_law_clt_variance() {
    let (m, n) = (0.4, 100_000usize);
    let law = rademacher_law(m, n).unwrap();
    let probs = law.probs();
    let mean: f64 = (0..law.len()).map(|i| law.xbar(i) * probs[i]).sum();
    let var: f64 = (0..law.len())
        .map(|i| (law.xbar(i) - mean).powi(2) * probs[i])
        .sum::<f64>()
        * n as f64;
    assert!((var - (1.0 - m * m)).abs() <= 1e-6, "{var}");
}

fn empirical(law: &MagnetizationLaw, draws: &[i64]) -> MagnetizationLaw {
    let mut counts = vec![0usize; law.len()];
    for &s in draws {
        counts[law.index_of(s).unwrap()] += 1;
    }
    let total = draws.len() as f64;
    MagnetizationLaw {
        n: law.n,
        log_prob: counts.iter().map(|&c| (c as f64 / total).ln()).collect(),
        log_partition: 0.0,
    }
}

#[test]
fn sampler_fidelity_and_determinism() {
    let law = magnetization_law(&ModelParams::new(0.8, 3, 50).unwrap()).unwrap();
    let draws = sample_magnetization(&law, &mut ChaCha8Rng::seed_from_u64(9), 200_000);
    let tv = tv_distance(&law, &empirical(&law, &draws)).unwrap();
    assert!(tv <= 0.01, "tv {tv}");
    let again = sample_magnetization(&law, &mut ChaCha8Rng::seed_from_u64(9), 200_000);
    assert_eq!(draws, again);
}

#[test]
fn first_spin_matches_mean_magnetization() {
    let params = ModelParams::new(0.8, 3, 40).unwrap();
    let sampler = ConfigurationSampler::new(&params).unwrap();
    let expected = sampler.law().mean_xbar();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let reps = 100_000;
    let mean = (0..reps)
        .map(|_| sampler.sample(&mut rng)[0] as f64)
        .sum::<f64>()
        / reps as f64;
    let se = ((1.0 - expected * expected) / reps as f64).sqrt();
    assert!((mean - expected).abs() <= 3.0 * se, "{mean} vs {expected}");
}

#[test]
fn subcritical_tv_to_uniform_product_shrinks() {
    let tv = |n: usize| {
        let model = magnetization_law(&ModelParams::new(0.5, 3, n).unwrap()).unwrap();
        tv_distance(&model, &rademacher_law(0.0, n).unwrap()).unwrap()
    };
    assert!(tv(2000) < tv(200));
}
