//! Monte Carlo and dynamic-programming cross-checks of the update
//! directions, TD errors and rollout returns.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use detac::agents::Transition;
use detac::critic::{td_error, VCritic};
use detac::env::FiniteMdp;
use detac::nn::{Activation, MlpNet, MlpSpec, Mode};
use detac::oracle::{dp_solve, exact_advantage_1d, gaussian_expectation, performance_j, TabularPolicy};
use detac::policy::DeterministicPolicy;
use detac::seeded_rng;
use detac::updates::{cac_direction, cacla_direction, heaviside, penfac_actor_gradient, ro_accept, spg_direction};

const TARGET: f64 = 1.0;
const THETA: f64 = 0.0;
const SIGMA: f64 = 0.2;
const SAMPLES: usize = 1_000_000;

/// Mean single-sample direction against the quadrature of its expectation.
fn direction_matches_quadrature(
    direction: impl Fn(&DeterministicPolicy, f64, f64) -> f64,
    integrand: impl Fn(f64, f64) -> f64,
) {
    let policy = DeterministicPolicy::direct(vec![THETA], 1);
    let noise = Normal::new(THETA, SIGMA).unwrap();
    let mut rng = seeded_rng(21);
    let mut sum = 0.0;
    for _ in 0..SAMPLES {
        let a = noise.sample(&mut rng);
        sum += direction(&policy, a, exact_advantage_1d(TARGET, THETA, SIGMA, a));
    }
    let mc = sum / SAMPLES as f64;
    let quad = gaussian_expectation(
        |a| integrand(a, exact_advantage_1d(TARGET, THETA, SIGMA, a)),
        THETA,
        SIGMA,
        1e-10,
    );
    assert!(((mc - quad) / quad).abs() < 0.01, "monte carlo {mc} vs quadrature {quad}");
}

#[test]
fn cacla_mean_direction_matches_quadrature() {
    direction_matches_quadrature(
        |p, a, adv| cacla_direction(p, &[0.0], &[a], adv).unwrap().values[0],
        |a, adv| heaviside(adv) * (a - THETA),
    );
}

#[test]
fn cac_mean_direction_matches_quadrature() {
    direction_matches_quadrature(
        |p, a, adv| cac_direction(p, &[0.0], &[a], adv).unwrap().values[0],
        |a, adv| heaviside(adv) * adv * (a - THETA),
    );
}

#[test]
fn spg_mean_direction_matches_quadrature() {
    direction_matches_quadrature(
        |p, a, adv| spg_direction(p, SIGMA, &[0.0], &[a], adv).unwrap().values[0],
        |a, adv| adv * (a - THETA) / (SIGMA * SIGMA),
    );
}

#[test]
fn td_error_is_unbiased_for_the_exact_advantage() {
    let mut rng = seeded_rng(3);
    let mdp = FiniteMdp::random(4, 3, 0.9, &mut rng).unwrap();
    let policy = TabularPolicy::uniform(4, 3);
    let dp = dp_solve(&mdp, &policy).unwrap();
    let critic = VCritic::tabular(dp.v.clone());
    let n = 100_000;
    for (s, a) in [(0, 0), (1, 2), (3, 1)] {
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let (next, reward) = mdp.step(s, a, &mut rng).unwrap();
            let t = Transition {
                state: vec![s as f64],
                action: vec![a as f64],
                reward,
                next_state: vec![next as f64],
                terminal: false,
            };
            let delta = td_error(&critic, &t, mdp.gamma()).unwrap();
            sum += delta;
            sq += delta * delta;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = dp.advantage[s][a];
        assert!((mean - exact).abs() < 4.0 * se, "s={s} a={a}: {mean} vs {exact} (se {se})");
    }
}

#[test]
fn rollout_returns_match_dp_performance() {
    let mut rng = seeded_rng(11);
    let mdp = FiniteMdp::random(4, 3, 0.9, &mut rng).unwrap();
    let actions = TabularPolicy::random_deterministic(4, 3, &mut rng);
    let policy = TabularPolicy::deterministic(&actions, 3).unwrap();
    let j = performance_j(&mdp, &policy).unwrap();
    let episodes = 10_000;
    // γ^250 < 1e-11, far below the Monte Carlo error
    let horizon = 250;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..episodes {
        let mut s = mdp.reset(&mut rng);
        let (mut ret, mut discount) = (0.0, 1.0);
        for _ in 0..horizon {
            let (next, r) = mdp.step(s, actions[s], &mut rng).unwrap();
            ret += discount * r;
            discount *= mdp.gamma();
            s = next;
        }
        sum += ret;
        sq += ret * ret;
    }
    let mean = sum / episodes as f64;
    let se = ((sq / episodes as f64 - mean * mean) / episodes as f64).sqrt();
    assert!((mean - j).abs() < 3.0 * se, "rollouts {mean} vs dp {j} (se {se})");
}

#[test]
fn penalized_gradient_matches_finite_differences() {
    let mut rng = seeded_rng(17);
    let spec = MlpSpec::new(vec![2, 8, 8, 2], Activation::Tanh, Activation::Tanh);
    let mut policy = DeterministicPolicy::mlp(MlpNet::new(spec, &mut rng).unwrap());
    let n = 6;
    let states: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let actions: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let old: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]).collect();
    let advantages: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -0.5 } else { rng.random_range(0.1..2.0) }).collect();
    let beta = 0.7;
    let g = penfac_actor_gradient(&mut policy, &old, &states, &actions, &advantages, beta, Mode::Evaluation).unwrap();

    // CAC part frozen as a linear term in μ at the starting parameters
    let mu0 = policy.act_batch(&states, Mode::Evaluation).unwrap();
    let coeffs: Vec<Vec<f64>> = mu0
        .iter()
        .zip(&actions)
        .zip(&advantages)
        .map(|((m, a), &adv)| m.iter().zip(a).map(|(mi, ai)| adv.max(0.0) * (ai - mi)).collect())
        .collect();
    let objective = |p: &DeterministicPolicy| -> f64 {
        let mu = p.act_batch(&states, Mode::Evaluation).unwrap();
        let mut total = 0.0;
        for i in 0..n {
            for k in 0..2 {
                total += coeffs[i][k] * mu[i][k] - beta * (mu[i][k] - old[i][k]).powi(2);
            }
        }
        total / n as f64
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for j in 0..policy.n_params() {
        let mut probe = policy.clone();
        let base = probe.params()[j];
        probe.params_mut()[j] = base + h;
        let up = objective(&probe);
        probe.params_mut()[j] = base - h;
        let down = objective(&probe);
        let fd = (up - down) / (2.0 * h);
        let err = (fd - g.values[j]).abs() / fd.abs().max(g.values[j].abs()).max(1e-6);
        worst = worst.max(err);
    }
    assert!(worst < 1e-4, "max relative error {worst:e}");
}

#[test]
fn accepted_proposals_beat_the_mean_reward() {
    let theta = 0.3;
    let expected = -(theta - TARGET).powi(2) - SIGMA * SIGMA;
    let critic = VCritic::constant(expected);
    let noise = Normal::new(theta, SIGMA).unwrap();
    let mut rng = seeded_rng(4);
    let mut accepted = 0;
    for _ in 0..10_000 {
        let a = noise.sample(&mut rng);
        let reward = -(a - TARGET).powi(2);
        let proposal = Transition {
            state: vec![0.0],
            action: vec![a],
            reward,
            next_state: vec![0.0],
            terminal: true,
        };
        let kept = ro_accept(&critic, &[theta], &proposal, 0.99).unwrap();
        if kept == vec![a] {
            accepted += 1;
            assert!(reward > expected);
        } else {
            assert_eq!(kept, vec![theta]);
            assert!(reward <= expected);
        }
    }
    assert!(accepted > 0);
}
