//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test -p rpsd --test acceptance -- --nocapture`).

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rpsd::error::Error;
use rpsd::model::{spike_weights, synthetic_classification, SmoothObjective};
use rpsd::oracle;
use rpsd::prox::{prox, sparsity_vector, Regularizer};
use rpsd::solver::{
    arpsd_run, inter_adaptation_time, reference_minimizer, rpsd_step, Adaptation, SelectionOption,
    SolverConfig,
};
use rpsd::subspace::{
    average_projection, draw_selection, Estimation, FamilyKind, Selection, SelectionLaw,
    SubspaceFamily,
};

fn dist_sq(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    (a - b).mapv(|d| d * d).sum()
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// The planted-support instance shared by criteria 6 and 9.
/// Frozen: three spikes at coordinates {9, 20, 22}, amplitude 3, 150
/// unit-norm sample rows, label noise 0.05.
fn qc_instance(l2_fraction: f64) -> (SmoothObjective, Regularizer) {
    let n = 30;
    let w = spike_weights(n, 3, 3.0, 2024);
    let data = synthetic_classification(150, &w, 0.05, 2025);
    let base = SmoothObjective::logistic_ridge(data.clone(), 0.0).unwrap();
    let (l0, _) = base.lipschitz_constants();
    let obj = SmoothObjective::logistic_ridge(data, l0 * l2_fraction).unwrap();
    let reg = Regularizer::l1(0.016).unwrap();
    (obj, reg)
}

#[test]
fn criterion_1_rate_bound_reproduction() {
    let start = Instant::now();
    let n = 20;
    let m = 60;
    let w = spike_weights(n, 4, 1.5, 7);
    let data = synthetic_classification(m, &w, 0.1, 8);
    let base = SmoothObjective::logistic_ridge(data.clone(), 0.0).unwrap();
    let (l0, _) = base.lipschitz_constants();
    // mu / L = (l0/9) / (l0 + l0/9) = 0.1 exactly
    let obj = SmoothObjective::logistic_ridge(data, l0 / 9.0).unwrap();
    let (l, mu) = obj.lipschitz_constants();
    assert!((mu / l - 0.1).abs() <= 1e-12);
    let gamma = 2.0 / (mu + l);
    let reg = Regularizer::l1(0.0).unwrap();

    let family = SubspaceFamily::axes(n).unwrap();
    let law = SelectionLaw::fixed_sample_size(2, vec![], 0);
    let proj = average_projection(&family, &law, Estimation::Exact).unwrap();

    // lambda_min = s/n = 0.1 exactly, checked against exhaustive enumeration
    let enumerated = oracle::enumerate_average_projection(&family, &law).unwrap();
    assert!(max_abs_diff(&proj.pbar_dense(), &enumerated) <= 1e-14);
    let (vals, _) = oracle::jacobi_eigh(&enumerated);
    let lam_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((lam_min - 0.1).abs() <= 1e-12, "lambda_min {lam_min}");
    assert!((proj.lambda_min() - 0.1).abs() <= 1e-12);

    let (xs, _) = reference_minimizer(&obj, &reg, gamma, 1e-13, 200_000).unwrap();

    let iters = 400usize;
    let seeds = 50u64;
    let mut mean_sq = vec![0.0f64; iters + 1];
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = prox(&reg, gamma, &Array1::zeros(n)).unwrap();
        let mut z = Array1::zeros(n);
        mean_sq[0] += dist_sq(&x, &xs);
        for slot in mean_sq.iter_mut().skip(1) {
            let sel = draw_selection(&family, &law, &mut rng).unwrap();
            rpsd_step(&mut x, &mut z, &obj, &reg, gamma, &family, &proj, &sel).unwrap();
            *slot += dist_sq(&x, &xs);
        }
    }
    for v in mean_sq.iter_mut() {
        *v /= seeds as f64;
    }

    // least-squares slope of log mean squared distance over [100, 400]
    let window: Vec<(f64, f64)> = (100..=iters).map(|k| (k as f64, mean_sq[k].ln())).collect();
    let count = window.len() as f64;
    let mean_k = window.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = window.iter().map(|p| p.1).sum::<f64>() / count;
    let slope = window
        .iter()
        .map(|p| (p.0 - mean_k) * (p.1 - mean_y))
        .sum::<f64>()
        / window
            .iter()
            .map(|p| (p.0 - mean_k) * (p.0 - mean_k))
            .sum::<f64>();

    let rate = 1.0 - proj.lambda_min() * 2.0 * gamma * mu * l / (mu + l);
    assert!(
        slope <= rate.ln() + 1e-3,
        "empirical decay {slope} slower than guaranteed {}",
        rate.ln()
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "criterion 1 took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 rate-bound-reproduction: PASS (slope {slope:.5} <= {:.5}, {elapsed:.2?})",
        rate.ln()
    );
}

#[test]
fn criterion_2_coordinate_descent_equivalence() {
    let start = Instant::now();
    let n = 10;
    let m = 40;
    let w = spike_weights(n, 3, 2.0, 21);
    let data = synthetic_classification(m, &w, 0.1, 22);
    let l2 = 1.0 / m as f64;
    let obj = SmoothObjective::logistic_ridge(data.clone(), l2).unwrap();
    let (l, _) = obj.lipschitz_constants();
    let gamma = 1.0 / l;
    let lambda1 = 0.01;
    let reg = Regularizer::l1(lambda1).unwrap();

    let family = SubspaceFamily::axes(n).unwrap();
    let law = SelectionLaw::fixed_sample_size(3, vec![], 0);
    let proj = average_projection(&family, &law, Estimation::Exact).unwrap();

    // matched seed: both trajectories consume the same selection stream
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let selections: Vec<Vec<usize>> = (0..1000)
        .map(|_| {
            draw_selection(&family, &law, &mut rng)
                .unwrap()
                .chosen()
                .to_vec()
        })
        .collect();

    let mut dense = Array2::zeros((m, n));
    for r in 0..m {
        let (idx, val) = data.features().row(r);
        for (&c, &v) in idx.iter().zip(val) {
            dense[[r, c]] = v;
        }
    }
    let cd_traj = oracle::coordinate_descent_l1_trajectory(
        &dense,
        data.labels(),
        l2,
        lambda1,
        gamma,
        &selections,
    );

    let mut x = prox(&reg, gamma, &Array1::zeros(n)).unwrap();
    let mut z = Array1::zeros(n);
    let mut worst: f64 = 0.0;
    for (step, chosen) in selections.iter().enumerate() {
        let sel = Selection::new(chosen.clone());
        rpsd_step(&mut x, &mut z, &obj, &reg, gamma, &family, &proj, &sel).unwrap();
        let diff = (&x - &cd_traj[step])
            .iter()
            .fold(0.0f64, |mx, d| mx.max(d.abs()));
        worst = worst.max(diff);
        assert!(diff <= 1e-10, "iterates diverged by {diff} at step {step}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 5, "criterion 2 took {elapsed:?}");
    println!(
        "ACCEPTANCE 2 coordinate-descent-equivalence: PASS (max deviation {worst:.2e}, {elapsed:.2?})"
    );
}

#[test]
fn criterion_3_averaged_projection_correctness() {
    let start = Instant::now();
    let mut checked = 0usize;
    for n in 3..=6usize {
        let family = SubspaceFamily::jumps(n).unwrap();
        let m = family.size();
        let mut laws = vec![
            SelectionLaw::bernoulli(vec![0.35; m], 0),
            SelectionLaw::bernoulli((0..m).map(|i| 0.2 + 0.8 * i as f64 / m as f64).collect(), 0),
            SelectionLaw::fixed_sample_size(1, vec![], 0),
            SelectionLaw::fixed_sample_size(m, vec![], 0),
        ];
        if m >= 2 {
            let mut probs = vec![0.5; m];
            probs[m - 1] = 1.0;
            laws.push(SelectionLaw::bernoulli(probs, 0));
            laws.push(SelectionLaw::fixed_sample_size(1, vec![0], 0));
        }
        for law in laws {
            let proj = average_projection(&family, &law, Estimation::Exact).unwrap();
            let reference = oracle::enumerate_average_projection(&family, &law).unwrap();
            let err = max_abs_diff(&proj.pbar_dense(), &reference);
            assert!(err <= 1e-12, "n = {n}: module pbar off by {err}");
            assert!(proj.lambda_max() <= 1.0 + 1e-10);
            assert!(proj.lambda_min() > 0.0);
            checked += 1;
        }
        // admissibility errors exactly when an inclusion probability is zero
        let mut probs = vec![0.4; m];
        probs[0] = 0.0;
        let zero_p = SelectionLaw::bernoulli(probs, 0);
        assert!(matches!(
            average_projection(&family, &zero_p, Estimation::Exact),
            Err(Error::Admissibility(_))
        ));
        let zero_s = SelectionLaw::fixed_sample_size(0, vec![], 0);
        assert!(matches!(
            average_projection(&family, &zero_s, Estimation::Exact),
            Err(Error::Admissibility(_))
        ));
    }
    let elapsed = start.elapsed();
    println!(
        "ACCEPTANCE 3 averaged-projection-correctness: PASS ({checked} laws vs enumeration, {elapsed:.2?})"
    );
}

#[test]
fn criterion_4_martingale_identity() {
    let start = Instant::now();
    let n = 6;
    let m = 40;
    let w = spike_weights(n, 2, 2.0, 31);
    let data = synthetic_classification(m, &w, 0.1, 32);
    let base = SmoothObjective::logistic_ridge(data.clone(), 0.0).unwrap();
    let (l0, _) = base.lipschitz_constants();
    let obj = SmoothObjective::logistic_ridge(data, l0 / 9.0).unwrap();
    let (l, mu) = obj.lipschitz_constants();
    let gamma = 2.0 / (mu + l);
    let reg = Regularizer::tv1d(0.01).unwrap();

    let family = SubspaceFamily::jumps(n).unwrap();
    let law = SelectionLaw::fixed_sample_size(2, vec![], 0);
    let proj = average_projection(&family, &law, Estimation::Exact).unwrap();

    let (xs, _) = reference_minimizer(&obj, &reg, gamma, 1e-13, 400_000).unwrap();
    let z_star = proj.apply_q(&(&xs - &obj.gradient(&xs).mapv(|g| gamma * g)));

    // freeze a state a few iterations in
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut x = prox(&reg, gamma, &Array1::zeros(n)).unwrap();
    let mut z = Array1::zeros(n);
    for _ in 0..5 {
        let sel = draw_selection(&family, &law, &mut rng).unwrap();
        rpsd_step(&mut x, &mut z, &obj, &reg, gamma, &family, &proj, &sel).unwrap();
    }
    let y = proj.apply_q(&(&x - &obj.gradient(&x).mapv(|g| gamma * g)));

    // expected value of ||z' - z*||^2 over the selection
    let znorm = dist_sq(&z, &z_star);
    let dy = &y - &z_star;
    let dz = &z - &z_star;
    let expected = znorm + dy.dot(&proj.apply_pbar(&dy)) - dz.dot(&proj.apply_pbar(&dz));

    let samples = 100_000usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for count in 1..=samples {
        let sel = draw_selection(&family, &law, &mut rng).unwrap();
        let projected_y = rpsd::subspace::apply_projection(&family, &sel, &y);
        let projected_z = rpsd::subspace::apply_projection(&family, &sel, &z);
        let z_next = &projected_y + &(&z - &projected_z);
        let d = dist_sq(&z_next, &z_star);
        let delta = d - mean;
        mean += delta / count as f64;
        m2 += delta * (d - mean);
    }
    let std_err = (m2 / (samples as f64 - 1.0)).sqrt() / (samples as f64).sqrt();
    let gap = (mean - expected).abs();
    assert!(
        gap <= 3.0 * std_err,
        "Monte-Carlo mean {mean} vs identity {expected} (3 SE = {})",
        3.0 * std_err
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 20, "criterion 4 took {elapsed:?}");
    println!(
        "ACCEPTANCE 4 martingale-identity: PASS (gap {gap:.3e} <= 3 SE {:.3e}, {elapsed:.2?})",
        3.0 * std_err
    );
}

#[test]
fn criterion_5_tv_prox_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut worst_gap: f64 = 0.0;
    for case in 0..200 {
        let n = 2 + case % 5; // dimensions 2..=6
        let u = Array1::from_iter((0..n).map(|_| rng.random::<f64>() * 6.0 - 3.0));
        let lambda1 = 0.1 + 1.4 * rng.random::<f64>();
        let gamma = 0.3 + 1.2 * rng.random::<f64>();
        let reg = Regularizer::tv1d(lambda1).unwrap();
        let fast = prox(&reg, gamma, &u).unwrap();
        let brute = oracle::brute_prox(&reg, gamma, &u).unwrap();

        let objective =
            |y: &Array1<f64>| reg.value(y) + (y - &u).mapv(|d| d * d).sum() / (2.0 * gamma);
        let gap = (objective(&fast) - objective(&brute)).abs();
        worst_gap = worst_gap.max(gap);
        assert!(gap <= 1e-8, "case {case}: objective gap {gap}");

        // flat segments are exact: a zero tolerance finds the same jumps as
        // the relative 1e-12 tolerance
        let strict = sparsity_vector(FamilyKind::Jumps, &fast, 0.0);
        let tolerant = sparsity_vector(FamilyKind::Jumps, &fast, 1e-12);
        assert_eq!(
            strict, tolerant,
            "case {case}: segments are not exactly flat"
        );
    }
    let elapsed = start.elapsed();
    println!(
        "ACCEPTANCE 5 tv-prox-exactness: PASS (200 instances, worst gap {worst_gap:.2e}, {elapsed:.2?})"
    );
}

#[test]
fn criterion_6_identification_and_adaptive_speedup() {
    let start = Instant::now();
    let (obj, reg) = qc_instance(1.0 / 99.0);
    let (l, mu) = obj.lipschitz_constants();
    let gamma = 2.0 / (mu + l);
    let n = obj.dim();
    let family = SubspaceFamily::axes(n).unwrap();

    let (xs, f_star) = reference_minimizer(&obj, &reg, gamma, 1e-13, 500_000).unwrap();
    let pattern_star = sparsity_vector(FamilyKind::Axes, &xs, 0.0);
    assert_eq!(
        pattern_star.ones(),
        vec![9, 20, 22],
        "frozen planted support"
    );
    // qualification: strict subgradient interiority off the support
    let grad_star = obj.gradient(&xs);
    for i in 0..n {
        if !pattern_star.get(i) {
            assert!(
                grad_star[i].abs() < reg.lambda1() * 0.999,
                "QC margin violated at coordinate {i}"
            );
        }
    }

    let max_iters = 2000;
    let tol = 1e-6;
    let mut wins = 0usize;
    for seed in 0..20u64 {
        let adaptive_cfg = SolverConfig::new(
            &obj,
            &family,
            SelectionOption::Option2 { s: 3 },
            Adaptation::IdentificationDriven,
            max_iters,
            seed,
        );
        let (xa, ma) = arpsd_run(&adaptive_cfg, &obj, &reg, &family).unwrap();

        // identification: the final pattern is exactly S(x*) and no
        // adaptation fires after the pattern settles
        let pat_a = sparsity_vector(FamilyKind::Axes, &xa, 0.0);
        assert_eq!(pat_a, pattern_star, "seed {seed}: wrong final pattern");
        let last_adapt = ma.adaptations.last().map(|e| e.iter).unwrap_or(0);
        for record in ma.records.iter().filter(|r| r.iter > last_adapt) {
            assert_eq!(
                record.pattern_size,
                pattern_star.count_ones(),
                "seed {seed}: pattern changed after the last adaptation"
            );
        }

        let explored_a = ma
            .records
            .iter()
            .find(|r| r.objective - f_star <= tol)
            .map(|r| r.subspaces_explored)
            .unwrap_or_else(|| panic!("seed {seed}: adaptive run never reached {tol}"));

        let plain_cfg = SolverConfig::new(
            &obj,
            &family,
            SelectionOption::Option2 { s: 3 },
            Adaptation::None,
            max_iters,
            seed,
        );
        let (_, mr) = arpsd_run(&plain_cfg, &obj, &reg, &family).unwrap();
        let explored_r = mr
            .records
            .iter()
            .find(|r| r.objective - f_star <= tol)
            .map(|r| r.subspaces_explored)
            .unwrap_or_else(|| panic!("seed {seed}: plain run never reached {tol}"));

        if explored_a < explored_r {
            wins += 1;
        }
    }
    assert!(wins >= 18, "adaptive run cheaper in only {wins}/20 seeds");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 6 took {elapsed:?}");
    println!(
        "ACCEPTANCE 6 identification-and-adaptive-speedup: PASS ({wins}/20 wins, {elapsed:.2?})"
    );
}

#[test]
fn criterion_8_adaptation_schedule_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    for case in 0..1000 {
        let a = 10.0f64.powf(rng.random::<f64>() * 6.0); // [1, 1e6)
        let alpha = 0.001 + 0.998 * rng.random::<f64>();
        let beta = alpha * (0.01 + 0.98 * rng.random::<f64>());
        let c = inter_adaptation_time(a, alpha, beta).unwrap();
        assert!(c >= 1);
        let shrink = 1.0 - alpha;
        assert!(
            a * shrink.powi(c as i32) <= 1.0 - beta,
            "case {case}: c = {c} does not satisfy the bound (a={a}, alpha={alpha}, beta={beta})"
        );
        if c > 1 {
            assert!(
                a * shrink.powi(c as i32 - 1) > 1.0 - beta,
                "case {case}: c = {c} is not minimal (a={a}, alpha={alpha}, beta={beta})"
            );
        }
    }
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 8 adaptation-schedule-correctness: PASS (1000 cases, {elapsed:.2?})");
}

#[test]
fn criterion_9_non_strongly_convex_convergence() {
    let start = Instant::now();
    let (obj, reg) = qc_instance(0.0);
    let (l, mu) = obj.lipschitz_constants();
    assert_eq!(mu, 0.0);
    let gamma = 1.0 / l;
    let n = obj.dim();
    let family = SubspaceFamily::axes(n).unwrap();

    let (_, f_star) = reference_minimizer(&obj, &reg, gamma, 1e-11, 400_000).unwrap();

    let config = SolverConfig::new(
        &obj,
        &family,
        SelectionOption::Option2 { s: 3 },
        Adaptation::None,
        100_000,
        0,
    );
    assert_eq!(config.gamma, gamma);
    let (_, metrics) = arpsd_run(&config, &obj, &reg, &family).unwrap();
    let crossing = metrics
        .records
        .iter()
        .find(|r| r.objective - f_star < 1e-6)
        .map(|r| r.iter);
    let k = crossing.expect("suboptimality 1e-6 not reached within 1e5 iterations");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 9 took {elapsed:?}");
    println!(
        "ACCEPTANCE 9 non-strongly-convex-convergence: PASS (crossed at iteration {k}, {elapsed:.2?})"
    );
}
