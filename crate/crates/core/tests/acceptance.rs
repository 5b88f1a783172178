//! End-to-end acceptance run. Criteria execute sequentially in one test so
//! the wall-clock budgets are measured without competing test threads; each
//! prints a single PASS/FAIL line on stderr, bypassing output capture.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use detac::agents::{Agent, AgentConfig, AgentRule, BanditRule, Trajectory, Transition};
use detac::critic::{lambda_returns, VCritic};
use detac::env::{Environment, PointMass, PointMassParams, QuadraticBandit};
use detac::harness::{
    run_bandit_suite, run_experiment, run_gradcheck_suite, BanditSuiteConfig, ExperimentConfig,
    GRADCHECK_SEEDS, GRADCHECK_TOLERANCE, THEOREM1_TRIALS, VERIFY_SEED,
};
use detac::nn::{Activation, MlpNet, MlpSpec};
use detac::oracle::{estimate_gplus, run_lemma2_suite, run_theorem1_suite};
use detac::policy::DeterministicPolicy;
use detac::stats::{mean, rank_sum_greater, spearman};
use detac::updates::{cac_direction, cacla_direction};
use detac::{seeded_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Fail,
    /// Reported but not gating.
    SoftFail,
}

struct Outcome {
    id: u32,
    name: &'static str,
    verdict: Verdict,
    detail: String,
    elapsed: Duration,
}

fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn run(id: u32, name: &'static str, budget: Option<Duration>, f: impl FnOnce() -> Result<(Verdict, String)>) -> Outcome {
    let start = Instant::now();
    let (mut verdict, mut detail) = match f() {
        Ok(v) => v,
        Err(e) => (Verdict::Fail, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        if elapsed > b {
            verdict = Verdict::Fail;
            detail.push_str(&format!(" over budget of {:.0} s", b.as_secs_f64()));
        }
    }
    let tag = match verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::SoftFail => "SOFT-FAIL",
    };
    report(&format!(
        "criterion {id:>2} {tag:<9} {name}: {detail} [{:.1} s]",
        elapsed.as_secs_f64()
    ));
    Outcome {
        id,
        name,
        verdict,
        detail,
        elapsed,
    }
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn lemma2() -> Result<(Verdict, String)> {
    let r = run_lemma2_suite(VERIFY_SEED, 100)?;
    let max = r.max_residual();
    Ok((
        verdict(r.trials.len() == 100 && max < 1e-9),
        format!("max residual {max:.3e} over {} MDPs", r.trials.len()),
    ))
}

/// Closed form of `(1/σ²) E[H(A)·A·(a − θ)]` for `a = θ + σz`, where
/// `A = σ²(1 − z²) − 2dσz` with `d = θ − a*` is positive between the roots
/// of `z² + (2d/σ)z − 1`. Uses partial moments of the standard normal.
fn cac_closed_form(target: f64, theta: f64, sigma: f64) -> f64 {
    let n = Normal::standard();
    let d = theta - target;
    let c = d / sigma;
    let root = (c * c + 1.0).sqrt();
    let (z1, z2) = (-c - root, -c + root);
    let (p1, p2) = (n.pdf(z1), n.pdf(z2));
    let m1 = p1 - p2;
    let m2 = n.cdf(z2) - n.cdf(z1) + z1 * p1 - z2 * p2;
    let m3 = 2.0 * m1 + z1 * z1 * p1 - z2 * z2 * p2;
    sigma * (m1 - m3) - 2.0 * d * m2
}

fn lemma1() -> Result<(Verdict, String)> {
    let bandit = QuadraticBandit::new(vec![1.0])?;
    let sigmas = [0.5, 0.2, 0.1, 0.05];
    let suite = estimate_gplus(&bandit, 0.0, &sigmas)?;
    let mut ok = suite.estimates.len() == sigmas.len();
    let mut ratios = Vec::new();
    let mut worst_oracle_gap: f64 = 0.0;
    for e in &suite.estimates {
        let ratio = e.ratio.unwrap_or(f64::NAN);
        ok &= (-1e-4..=1.0 + 1e-4).contains(&ratio);
        worst_oracle_gap = worst_oracle_gap.max((e.delta_cac - cac_closed_form(1.0, 0.0, e.sigma)).abs());
        ratios.push(format!("{ratio:.4}"));
    }
    ok &= worst_oracle_gap < 1e-4;
    let at_optimum = estimate_gplus(&bandit, 1.0, &[0.01])?.estimates[0].delta_cac.abs();
    ok &= at_optimum < 1e-6;
    Ok((
        verdict(ok),
        format!(
            "ratios [{}], |quadrature − closed form| ≤ {worst_oracle_gap:.1e}, |Δ_CAC| at optimum {at_optimum:.1e}",
            ratios.join(", ")
        ),
    ))
}

fn theorem1() -> Result<(Verdict, String)> {
    let r = run_theorem1_suite(VERIFY_SEED, THEOREM1_TRIALS)?;
    let held = r.trials.iter().filter(|t| t.lhs <= t.rhs).count();
    Ok((
        verdict(held == 50 && r.trials.len() == 50),
        format!("{held}/{} trials with lhs ≤ rhs, {}", r.trials.len(), r.summary),
    ))
}

fn gradcheck() -> Result<(Verdict, String)> {
    let r = run_gradcheck_suite(VERIFY_SEED, GRADCHECK_SEEDS)?;
    let max = r.max_residual();
    Ok((
        verdict(r.passed() && max < GRADCHECK_TOLERANCE && GRADCHECK_SEEDS == 20),
        format!("max relative error {max:.3e} over {} checks", r.trials.len()),
    ))
}

fn random_trajectory(rng: &mut impl Rng) -> Trajectory {
    let len = rng.random_range(1..=40);
    let terminal = rng.random_bool(0.5);
    let mut traj = Trajectory::new();
    let mut state = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    for t in 0..len {
        let next_state = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        traj.push(Transition {
            state: state.clone(),
            action: vec![rng.random_range(-1.0..1.0)],
            reward: rng.random_range(-2.0..2.0),
            next_state: next_state.clone(),
            terminal: terminal && t + 1 == len,
        });
        state = next_state;
    }
    traj
}

fn lambda_endpoints() -> Result<(Verdict, String)> {
    let mut rng = seeded_rng(5);
    let gamma = 0.97;
    let mut mismatches = 0usize;
    let mut steps = 0usize;
    for _ in 0..100 {
        let spec = MlpSpec::new(vec![2, 16, 1], Activation::Tanh, Activation::Linear);
        let critic = VCritic::mlp(MlpNet::new(spec, &mut rng)?)?;
        let traj = random_trajectory(&mut rng);
        let td = lambda_returns(&traj, &critic, gamma, 0.0)?;
        let mc = lambda_returns(&traj, &critic, gamma, 1.0)?;
        let ts = &traj.transitions;
        let h = ts.len();
        // one-step targets straight from the critic
        let successors: Vec<Vec<f64>> = ts.iter().map(|tr| tr.next_state.clone()).collect();
        let next = critic.values(&successors)?;
        for (t, tr) in ts.iter().enumerate() {
            let boot = if tr.terminal { 0.0 } else { next[t] };
            if td.targets[t] != tr.reward + gamma * boot {
                mismatches += 1;
            }
        }
        // discounted reward-to-go, bootstrapped once at a horizon cut
        let mut g = if ts[h - 1].terminal {
            ts[h - 1].reward
        } else {
            ts[h - 1].reward + gamma * next[h - 1]
        };
        let mut returns = vec![g; h];
        for t in (0..h - 1).rev() {
            g = ts[t].reward + gamma * g;
            returns[t] = g;
        }
        mismatches += returns.iter().zip(&mc.targets).filter(|(a, b)| a != b).count();
        steps += h;
    }
    Ok((
        verdict(mismatches == 0),
        format!("{mismatches} inexact targets over 100 trajectories ({steps} steps, both endpoints)"),
    ))
}

fn bandit_reproduction() -> Result<(Verdict, String)> {
    let config = BanditSuiteConfig::default();
    let results = run_bandit_suite(&config)?;
    let mut ok = true;
    let mut parts = Vec::new();
    let small = results.iter().find(|r| r.dim == 1);
    let large = results.iter().find(|r| r.dim == 50);
    match small {
        Some(r) => {
            for rule in BanditRule::ALL {
                let finals = &r.rule(rule).finals;
                let worst = finals.iter().copied().fold(f64::INFINITY, f64::min);
                ok &= finals.len() == 20 && worst > -0.01;
                parts.push(format!("m=1 {rule} mean {:.2e} worst {worst:.2e}", mean(finals)));
            }
        }
        None => ok = false,
    }
    match large {
        Some(r) => {
            for better in [BanditRule::Cacla, BanditRule::Dpg] {
                match r.comparison(better, BanditRule::Spg) {
                    Some(c) => {
                        ok &= c.test.p_greater < 0.05;
                        parts.push(format!(
                            "m=50 {better} {:.3} vs spg {:.3} p={:.3e}",
                            mean(&r.rule(better).finals),
                            mean(&r.rule(BanditRule::Spg).finals),
                            c.test.p_greater
                        ));
                    }
                    None => ok = false,
                }
            }
        }
        None => ok = false,
    }
    Ok((verdict(ok), parts.join("; ")))
}

const PHASES: usize = 200;
const BURN_IN: usize = 50;
const RUN_SEEDS: u64 = 20;

struct PointMassRun {
    dhat: Vec<f64>,
    /// Deterministic return every ten phases, starting before learning.
    checkpoints: Vec<f64>,
    final_return: f64,
}

fn pointmass_run(rule: AgentRule, seed: u64) -> Result<PointMassRun> {
    let mut env = PointMass::new(PointMassParams::default())?;
    let mut rng = seeded_rng(seed);
    let mut eval_rng = seeded_rng(seed);
    eval_rng.set_stream(1);
    let config = AgentConfig::with_rule(rule);
    let episodes = PHASES * config.update_period;
    let mut agent = Agent::new(config, env.spec(), &mut rng)?;
    let mut checkpoints = vec![mean(&agent.evaluate(&mut env, 1, &mut eval_rng)?)];
    for episode in 1..=episodes {
        agent.run_training_episode(&mut env, &mut rng)?;
        if episode % (10 * agent.config().update_period) == 0 {
            checkpoints.push(mean(&agent.evaluate(&mut env, 1, &mut eval_rng)?));
        }
    }
    let final_return = mean(&agent.evaluate(&mut env, 10, &mut eval_rng)?);
    Ok(PointMassRun {
        dhat: agent.phases().iter().map(|p| p.dhat).collect(),
        checkpoints,
        final_return,
    })
}

fn pointmass_runs(rule: AgentRule) -> Result<Vec<PointMassRun>> {
    (0..RUN_SEEDS).map(|seed| pointmass_run(rule, seed)).collect()
}

fn containment(runs: &[PointMassRun]) -> Result<(Verdict, String)> {
    let d = AgentConfig::default().d_target;
    let (lo, hi) = (d / 1.5, d * 1.5);
    let mut inside = 0usize;
    let mut total = 0usize;
    let mut per_seed = Vec::new();
    for r in runs {
        let tail = &r.dhat[BURN_IN.min(r.dhat.len())..];
        let k = tail.iter().filter(|x| (lo..=hi).contains(*x)).count();
        per_seed.push(format!("{:.2}", k as f64 / tail.len().max(1) as f64));
        inside += k;
        total += tail.len();
    }
    let fraction = inside as f64 / total.max(1) as f64;
    Ok((
        verdict(runs.len() == 20 && total == 20 * (PHASES - BURN_IN) && fraction >= 0.6),
        format!(
            "{inside}/{total} post-burn-in phases in [{lo:.3}, {hi:.3}] = {fraction:.3}; per seed [{}]",
            per_seed.join(" ")
        ),
    ))
}

fn penfac_vs_nfac(penfac: &[PointMassRun], nfac: &[PointMassRun]) -> Result<(Verdict, String)> {
    let p: Vec<f64> = penfac.iter().map(|r| r.final_return).collect();
    let n: Vec<f64> = nfac.iter().map(|r| r.final_return).collect();
    let test = rank_sum_greater(&p, &n)?;
    let v = if test.p_greater < 0.05 {
        Verdict::Pass
    } else {
        Verdict::SoftFail
    };
    Ok((
        v,
        format!(
            "final return penfac {:.3} vs nfac {:.3}, one-sided p={:.3e}",
            mean(&p),
            mean(&n),
            test.p_greater
        ),
    ))
}

fn random_policy(rng: &mut impl Rng, batch_norm: bool) -> Result<DeterministicPolicy> {
    let spec = MlpSpec::new(vec![2, 64, 64, 1], Activation::LeakyRelu, Activation::Tanh).with_batch_norm(batch_norm);
    Ok(DeterministicPolicy::mlp(MlpNet::new(spec, rng)?))
}

fn gating() -> Result<(Verdict, String)> {
    let mut rng = seeded_rng(9);
    let policies = vec![
        random_policy(&mut rng, true)?,
        random_policy(&mut rng, false)?,
        DeterministicPolicy::direct(vec![0.3, -0.2, 0.1], 2),
    ];
    let mut violations = 0usize;
    let mut gated = 0usize;
    for i in 0..10_000 {
        let policy = &policies[i % policies.len()];
        let state = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let action: Vec<f64> = (0..policy.action_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let delta = match i % 5 {
            0 => 0.0,
            1 | 2 => -rng.random_range(0.0..10.0),
            _ => rng.random_range(1e-6..10.0),
        };
        let cacla = cacla_direction(policy, &state, &action, delta)?;
        let cac = cac_direction(policy, &state, &action, delta)?;
        let ok = if delta <= 0.0 {
            gated += 1;
            cacla.values.iter().chain(&cac.values).all(|v| *v == 0.0)
        } else {
            cacla.values.len() == cac.values.len()
                && cacla.values.iter().zip(&cac.values).all(|(a, c)| *c == delta * a)
        };
        violations += usize::from(!ok);
    }
    Ok((
        verdict(violations == 0),
        format!("{violations} violations over 10000 inputs ({gated} with δ ≤ 0)"),
    ))
}

fn reproducibility() -> Result<(Verdict, String)> {
    let tmp = |e: std::io::Error| Error::io(std::env::temp_dir(), e);
    let dirs = [tempfile::tempdir().map_err(tmp)?, tempfile::tempdir().map_err(tmp)?];
    let mut outputs = Vec::new();
    for dir in &dirs {
        let mut config: ExperimentConfig =
            "agent = penfac\nenv = pointmass\nseeds = 2\nseed_offset = 3\ntotal_steps = 3000\neval_interval = 1000\neval_episodes = 2\n"
                .parse()?;
        config.out = dir.path().to_path_buf();
        outputs.push(run_experiment(&config)?);
    }
    let mut identical = 0usize;
    let mut total = 0usize;
    for (a, b) in outputs[0].seed_files.iter().zip(&outputs[1].seed_files) {
        total += 1;
        let read = |p: &std::path::Path| std::fs::read(p).map_err(|e| Error::io(p, e));
        if read(a)? == read(b)? {
            identical += 1;
        }
    }
    Ok((
        verdict(total == 2 && identical == total),
        format!("{identical}/{total} per-seed CSVs byte-identical"),
    ))
}

#[test]
fn acceptance_criteria() {
    let mut outcomes = vec![
        run(1, "two-policy performance identity", secs(10), lemma2),
        run(2, "CAC/DPG sign agreement", secs(5), lemma1),
        run(3, "policy-gap bound", secs(60), theorem1),
        run(4, "gradient integrity", secs(30), gradcheck),
        run(5, "λ-return endpoints", None, lambda_endpoints),
        run(6, "bandit dimension sensitivity", secs(600), bandit_reproduction),
    ];

    let start = Instant::now();
    let penfac = pointmass_runs(AgentRule::Penfac);
    let penfac_time = start.elapsed();
    let nfac = pointmass_runs(AgentRule::Nfac);
    let both_time = start.elapsed();
    match (&penfac, &nfac) {
        (Ok(p), Ok(n)) => {
            let mut c7 = run(7, "trust-region containment", None, || containment(p));
            if penfac_time > Duration::from_secs(15 * 60) {
                c7.verdict = Verdict::Fail;
            }
            c7.elapsed += penfac_time;
            report(&format!("             penfac training time {:.1} s", penfac_time.as_secs_f64()));
            outcomes.push(c7);
            let mut c8 = run(8, "PeNFAC vs NFAC", None, || penfac_vs_nfac(p, n));
            if both_time > Duration::from_secs(30 * 60) {
                c8.verdict = Verdict::Fail;
            }
            c8.elapsed += both_time;
            report(&format!("             penfac + nfac training time {:.1} s", both_time.as_secs_f64()));
            outcomes.push(c8);
            // supplementary: does NFAC's deterministic return trend upward?
            let xs: Vec<f64> = (0..n[0].checkpoints.len()).map(|i| i as f64).collect();
            let ys: Vec<f64> = (0..xs.len()).map(|i| mean(&n.iter().map(|r| r.checkpoints[i]).collect::<Vec<_>>())).collect();
            if let Ok(c) = spearman(&xs, &ys) {
                report(&format!("             nfac checkpoint trend ρ={:.3} p={:.2e}", c.rho, c.p_positive));
            }
        }
        (p, n) => {
            let msg = format!("{:?} / {:?}", p.as_ref().err(), n.as_ref().err());
            outcomes.push(run(7, "trust-region containment", None, || Ok((Verdict::Fail, msg.clone()))));
            outcomes.push(run(8, "PeNFAC vs NFAC", None, || Ok((Verdict::Fail, msg))));
        }
    }

    outcomes.push(run(9, "Heaviside gating", None, gating));
    outcomes.push(run(10, "byte-identical reruns", None, reproducibility));

    let hard: Vec<String> = outcomes
        .iter()
        .filter(|o| o.verdict == Verdict::Fail)
        .map(|o| format!("{} ({}): {} [{:.1} s]", o.id, o.name, o.detail, o.elapsed.as_secs_f64()))
        .collect();
    let soft = outcomes.iter().filter(|o| o.verdict == Verdict::SoftFail).count();
    report(&format!(
        "acceptance: {} pass, {} soft-fail, {} fail",
        outcomes.iter().filter(|o| o.verdict == Verdict::Pass).count(),
        soft,
        hard.len()
    ));
    assert!(hard.is_empty(), "failed criteria:\n{}", hard.join("\n"));
}
