//! Acceptance suite: one line per criterion, exit status 1 on any unexpected failure.
//!
//! Run with `cargo test -p gazeattn-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use gazeattn_core::data::{synth_attention, AttentionTensor, INTERNAL_ROW_TOLERANCE};
use gazeattn_core::gaze::{
    dwell_vector, ground_truth_interaction, map_fixations, pair_contribution, parafoveal_augment, token_events,
    DEFAULT_ALPHA,
};
use gazeattn_core::interaction::{
    followup_interaction, followup_scores, rollout_interaction, to_line_level, FollowupOptions,
};
use gazeattn_core::metrics::{mann_whitney_u, spearman, top3};
use gazeattn_core::traversal::{fit_traversal_params, weibull_cdf, FitWeighting, TraversalParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot hold for a faithful implementation, with the reason.
const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "pair-contribution",
    "the closed form at alpha=0.1, gap 1 s, d_j 1 s is 0.86106665 (quadrature agrees to 1e-15), 1.05e-6 away from the stated 0.8610677",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn pair_contribution_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs: Vec<[f64; 5]> = (0..1000)
        .map(|_| {
            let t_i = rng.random_range(0.0..100.0);
            let d_i = rng.random_range(0.05..3.0);
            let gap = rng.random_range(0.0..20.0);
            [t_i, d_i, t_i + d_i + gap, rng.random_range(0.05..3.0), rng.random_range(0.01..1.0)]
        })
        .collect();
    let start = Instant::now();
    let closed: Vec<f64> = pairs
        .iter()
        .map(|p| pair_contribution(p[0], p[1], p[2], p[3], p[4]).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let worst = pairs
        .iter()
        .zip(&closed)
        .map(|(p, c)| {
            let end_i = p[0] + p[1];
            let q = common::integrate(&|t| (-p[4] * (t - end_i)).exp(), p[2], p[2] + p[3], 1e-14);
            (q - c).abs()
        })
        .fold(0.0, f64::max);
    let worked: f64 = pair_contribution(0.0, 1.0, 2.0, 1.0, 0.1).unwrap();
    let worked_err = (worked - 0.861_067_7).abs();
    check(
        worst <= 1e-9 && worked_err <= 1e-7 && elapsed < Duration::from_secs(1),
        format!(
            "max |closed - quadrature| = {worst:.2e} (<= 1e-9); worked value {worked:.10} vs 0.8610677, |diff| = {worked_err:.2e} (<= 1e-7); 1000 pairs in {elapsed:?} (< 1 s)"
        ),
    )
}

fn identical_layers(layers: usize, heads: usize, n: usize, m: usize) -> AttentionTensor<f64> {
    let one = synth_attention::<f64>(9, 1, heads, n, m);
    let values = one.values().repeat(layers);
    AttentionTensor::new(layers, heads, n, m, values, INTERNAL_ROW_TOLERANCE).unwrap()
}

fn followup_criterion() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let t = synth_attention::<f64>(seed, 4, 4, 64, 16);
        let fast = followup_interaction(&t, &FollowupOptions::default()).unwrap();
        let oracle = common::normalize(64, 64, &common::naive_followup(&t, 80));
        worst = fast
            .values()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(worst, f64::max);
    }

    let (l, n, m) = (4, 64, 16);
    let t = identical_layers(l, 4, n, m);
    let raw = followup_scores(&t, &FollowupOptions::default()).unwrap();
    let diag_exact = (0..n).all(|i| raw.get(i, i) == (l - 1) as f64);

    let t = synth_attention::<f64>(5, 4, 4, 64, 16);
    let full = followup_interaction(&t, &FollowupOptions::default()).unwrap();
    let g_eq_m = followup_interaction(
        &t,
        &FollowupOptions {
            layer_pairs: None,
            max_observers: Some(16),
        },
    )
    .unwrap();
    let truncation_ok = full == g_eq_m;

    let big = synth_attention::<f32>(11, 8, 8, 512, 64);
    let start = Instant::now();
    let out = followup_interaction(&big, &FollowupOptions::default()).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(out.n_rows(), 512);

    check(
        worst <= 1e-6 && diag_exact && truncation_ok && elapsed < Duration::from_secs(60),
        format!(
            "max |optimized - naive| = {worst:.2e} (<= 1e-6); identical-layer diagonal == L-1: {diag_exact}; g=m equals untruncated: {truncation_ok}; (8,8,512,64) in {elapsed:.2?} (< 60 s)"
        ),
    )
}

fn rollout_criterion() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let (n, m) = [(4, 0), (3, 1), (2, 2)][seed as usize % 3];
        let t = synth_attention::<f64>(seed, 3, 2, n, m);
        let fast = rollout_interaction(&t);
        let oracle = common::brute_rollout(&t);
        worst = fast
            .values()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(worst, f64::max);
    }
    check(worst <= 1e-9, format!("20 tensors (L=3, T=4), max |rollout - path enumeration| = {worst:.2e} (<= 1e-9)"))
}

fn stochasticity_criterion() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for seed in 0..200 {
        for (name, m) in common::emitted_matrices(seed) {
            checked += 1;
            if !common::rows_ok(&m, 1e-6) {
                bad.push(format!("{name}@{seed}"));
            }
        }
    }
    check(
        bad.is_empty(),
        format!("200 seeded inputs, {checked} matrices, rows stochastic within 1e-6 or zero-flagged; violations: {bad:?}"),
    )
}

fn metrics_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    let mut vectors = 0;
    while vectors < 100 {
        let len = rng.random_range(3..40);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(0..6) as f64).collect();
        let y: Vec<f64> = (0..len).map(|_| rng.random_range(0..4) as f64 * 0.5).collect();
        let Some(r) = spearman(&x, &y).unwrap() else { continue };
        worst = worst.max((r - common::spearman_ref(&x, &y)).abs());
        vectors += 1;
    }
    let tie = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap().unwrap();
    let tie_ok = (tie - 0.948_683).abs() <= 1e-6;

    let mut exact_ok = true;
    for _ in 0..60 {
        let n1 = rng.random_range(1..9);
        let n2 = rng.random_range(1..(17 - n1).min(12));
        let a: Vec<f64> = (0..n1).map(|_| rng.random_range(0..7) as f64).collect();
        let b: Vec<f64> = (0..n2).map(|_| rng.random_range(0..7) as f64).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        exact_ok &= r.exact && r.p == common::mwu_permutation_p(&a, &b) && r.u_a == common::u_pairs(&a, &b);
    }
    check(
        worst <= 1e-12 && tie_ok && exact_ok,
        format!(
            "spearman on 100 tie-bearing vectors, max |diff| = {worst:.2e} (<= 1e-12); worked tie case {tie:.7} (0.948683 +- 1e-6); exact Mann-Whitney p equals permutation enumeration on 60 samples: {exact_ok}"
        ),
    )
}

fn weibull_criterion() -> Outcome {
    let p = TraversalParams::default();
    let (k, lambda) = (p.forward_weibull.shape, p.forward_weibull.scale);
    let cdf_err = (weibull_cdf(lambda, k, lambda) - (1.0 - (-1.0f64).exp())).abs();

    let sessions = common::fixtures::weibull_sessions(23, p.forward_weibull, p.backward_weibull, 100_000, 2000);
    let fit = fit_traversal_params(&sessions, FitWeighting::Strength).unwrap();
    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    let recov = [
        rel(fit.params.forward_weibull.shape, p.forward_weibull.shape),
        rel(fit.params.forward_weibull.scale, p.forward_weibull.scale),
        rel(fit.params.backward_weibull.shape, p.backward_weibull.shape),
        rel(fit.params.backward_weibull.scale, p.backward_weibull.scale),
    ];
    let worst_rel = recov.iter().copied().fold(0.0, f64::max);

    let lin = fit_traversal_params(
        &common::fixtures::linear_sessions((0.85, -0.6), (0.05, 0.7)),
        FitWeighting::Strength,
    )
    .unwrap();
    let r2_err = (lin.forward_r_squared - 1.0).abs().max((lin.backward_r_squared - 1.0).abs());
    check(
        cdf_err <= 1e-12 && worst_rel <= 0.02 && r2_err <= 1e-12,
        format!(
            "|F(lambda) - (1 - 1/e)| = {cdf_err:.1e} (<= 1e-12); fitted forward ({:.5}, {:.3}) backward ({:.5}, {:.3}) from 1e5 weighted jumps, worst relative error {:.3}% (<= 2%); exact-linear masses |R^2 - 1| = {r2_err:.1e}",
            fit.params.forward_weibull.shape,
            fit.params.forward_weibull.scale,
            fit.params.backward_weibull.shape,
            fit.params.backward_weibull.scale,
            100.0 * worst_rel
        ),
    )
}

fn gaze_criterion() -> Outcome {
    let (a, vp, session, schedule) = common::fixtures::alternating_session(10);
    let mapped = map_fixations(&session.fixations, &session.scrolls, &vp).unwrap();
    let augmented = parafoveal_augment(&mapped.events, &vp, &a);
    let events = token_events(&augmented, &a);
    let gt = ground_truth_interaction::<f64>(&events, DEFAULT_ALPHA, a.n_tokens(), None).unwrap();
    let lines = to_line_level(&gt, &a).unwrap();
    let line1: Vec<usize> = (0..a.n_tokens())
        .filter(|&k| a.token_line(k) == 0 && lines.row(k).iter().any(|v| *v > 0.0))
        .collect();
    let top1_ok = !line1.is_empty() && line1.iter().all(|&k| top3(lines.row(k))[0] == 4);

    let (dwell, dropped) = dwell_vector::<f64>(&augmented, &a);
    let expected: f64 = augmented.iter().map(|e| e.d / 1000.0).sum();
    let conservation = (dwell.total() - expected).abs();
    check(
        mapped.dropped == 0 && top1_ok && dropped == 0 && conservation <= 1e-9,
        format!(
            "{} scheduled fixations, {} line-1 rows scored, top-1 target line 5 for all: {top1_ok}; |dwell total - event seconds| = {conservation:.1e} (<= 1e-9)",
            schedule.len(),
            line1.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("pair-contribution", pair_contribution_criterion),
        ("followup-attention", followup_criterion),
        ("rollout", rollout_criterion),
        ("stochasticity", stochasticity_criterion),
        ("metrics", metrics_criterion),
        ("weibull", weibull_criterion),
        ("gaze-end-to-end", gaze_criterion),
    ];
    let mut unexpected = Vec::new();
    for (name, run) in criteria {
        let o = run();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == name);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (known)",
            (false, None) => {
                unexpected.push(name);
                "FAIL"
            }
        };
        println!("[{tag}] {name}: {}", o.detail);
        if let (false, Some((_, why))) = (o.pass, known) {
            println!("        reason: {why}");
        }
    }
    println!(
        "[NOT REPRODUCIBLE] human-study figures: developer/model correlations, agreement distributions and Mann-Whitney tables over real sessions need the released eye-tracking data and exported model tensors; run `gazeattn run` with such inputs to compute them. Acceptance rests on the checks above."
    );
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
