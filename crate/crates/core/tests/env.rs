use fedban::env::{ArmModel, ArmSet, BanditEnv};
use fedban::rng::stream;
use rand::Rng;

fn bernoulli(means: &[f64]) -> ArmSet {
    ArmSet::new(means.iter().map(|&mu| ArmModel::Bernoulli { mu }).collect()).unwrap()
}

#[test]
fn random_policy_regret() {
    // K = 2 with gap 0.4 and a fair coin policy: regret ~ 0.4 Bin(T, 1/2),
    // standard deviation 0.4 * 50 = 20, so +-60 is three sigma.
    let mut env = BanditEnv::new(bernoulli(&[0.7, 0.3]), 1).unwrap();
    let mut policy = stream(11, 100);
    let mut rewards = stream(11, 0);
    for _ in 0..10_000 {
        let arm = policy.gen_range(0..2);
        env.pull(0, arm, &mut rewards).unwrap();
        env.close_step();
    }
    let r = env.cumulative_regret();
    assert!((r - 2000.0).abs() <= 60.0, "regret {r}");
}

#[test]
fn trace_is_monotone_and_matches_counts() {
    let arms = bernoulli(&[0.9, 0.6, 0.5, 0.1]);
    let mut env = BanditEnv::new(arms, 3).unwrap();
    let mut rng = stream(12, 0);
    for _ in 0..500 {
        for agent in 0..3 {
            let arm = rng.gen_range(0..4);
            env.pull(agent, arm, &mut rng).unwrap();
        }
        env.close_step();
    }
    let tr = env.regret_trace();
    assert_eq!(tr.len(), 500);
    assert!(tr[0] >= 0.0);
    assert!(tr.windows(2).all(|w| w[1] >= w[0]));
    assert!((env.regret_from_counts() - env.cumulative_regret()).abs() < 1e-9);
    for arm in 0..4 {
        let per_agent: u64 = (0..3).map(|i| env.count(i, arm)).sum();
        assert_eq!(per_agent, env.arm_total(arm));
    }
    assert_eq!(env.action_histogram().iter().sum::<u64>(), 1500);
}

#[test]
fn gaussian_sample_mean() {
    let arm = ArmModel::Gaussian { mu: 0.5, sigma: 0.1 };
    let mut rng = stream(13, 0);
    let n = 100_000;
    let mean = (0..n).map(|_| arm.sample(&mut rng)).sum::<f64>() / n as f64;
    assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
}

#[test]
fn uniform_and_bernoulli_moments() {
    let mut rng = stream(14, 0);
    let n = 200_000;
    for arm in [ArmModel::Uniform { mu: 0.3 }, ArmModel::Bernoulli { mu: 0.3 }] {
        let xs: Vec<f64> = (0..n).map(|_| arm.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let se = (arm.variance() / n as f64).sqrt();
        assert!((mean - 0.3).abs() < 4.0 * se, "{arm:?}: mean {mean}");
        assert!((var - arm.variance()).abs() < 0.02 * arm.variance().max(0.01), "{arm:?}: var {var}");
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}
