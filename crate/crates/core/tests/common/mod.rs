//! Reference implementations used as test oracles. Each one follows the
//! definition directly, with no shared code from the library kernels.

#![allow(dead_code)]

use std::collections::BTreeMap;

use gazeattn_core::data::{AttentionTensor, InteractionMatrix, RowFlag, TokenAlignment, TokenSpan};

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

fn head_sum_at(t: &AttentionTensor<f64>, l: usize, r: usize, c: usize) -> f64 {
    (0..t.heads()).map(|h| t.get(l, h, r, c)).sum()
}

/// Pre-normalization follow-up scores by direct evaluation of every follower
/// vector, with `rows` observer rows in total.
pub fn naive_followup(t: &AttentionTensor<f64>, rows: usize) -> Vec<f64> {
    let n = t.n_prompt();
    let mut out = vec![0.0; n * n];
    for z in 0..t.layers() - 1 {
        for i in 0..n {
            for j in 0..n {
                let followers: Vec<usize> = (i.max(j) + 1..rows).collect();
                let fi: Vec<f64> = followers.iter().map(|&r| head_sum_at(t, z, r, i)).collect();
                let fj: Vec<f64> = followers.iter().map(|&r| head_sum_at(t, z + 1, r, j)).collect();
                let dot: f64 = fi.iter().zip(&fj).map(|(a, b)| a * b).sum();
                let na = fi.iter().map(|a| a * a).sum::<f64>().sqrt();
                let nb = fj.iter().map(|b| b * b).sum::<f64>().sqrt();
                if na > 0.0 && nb > 0.0 {
                    out[i * n + j] += dot / (na * nb);
                }
            }
        }
    }
    out
}

pub fn normalize(rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for r in 0..rows {
        let s: f64 = out[r * cols..(r + 1) * cols].iter().sum();
        if s > 0.0 {
            out[r * cols..(r + 1) * cols].iter_mut().for_each(|x| *x /= s);
        }
    }
    out
}

/// Rollout by enumerating every attention path `i = k_z → … → k_0 = j` through
/// the mixed per-layer matrices and summing over end layers.
pub fn brute_rollout(t: &AttentionTensor<f64>) -> Vec<f64> {
    let (l_count, total, n) = (t.layers(), t.total(), t.n_prompt());
    let mixed: Vec<Vec<f64>> = (0..l_count)
        .map(|l| {
            let raw: Vec<f64> = (0..total * total)
                .map(|k| head_sum_at(t, l, k / total, k % total))
                .collect();
            let a = normalize(total, total, &raw);
            let m: Vec<f64> = (0..total * total)
                .map(|k| 0.5 * a[k] + if k / total == k % total { 0.5 } else { 0.0 })
                .collect();
            normalize(total, total, &m)
        })
        .collect();
    let mut sum = vec![0.0; n * n];
    for z in 0..l_count {
        let hops = z;
        let paths = total.pow(hops as u32);
        for i in 0..n {
            for j in 0..n {
                for p in 0..paths {
                    let mut nodes = vec![i];
                    let mut code = p;
                    for _ in 0..hops {
                        nodes.push(code % total);
                        code /= total;
                    }
                    nodes.push(j);
                    let mut prod = 1.0;
                    for (step, w) in nodes.windows(2).enumerate() {
                        prod *= mixed[z - step][w[0] * total + w[1]];
                    }
                    sum[i * n + j] += prod;
                }
            }
        }
    }
    normalize(n, n, &sum)
}

/// Spearman correlation with ranks from pairwise counting.
pub fn spearman_ref(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// `U` from pairwise comparisons: wins count 1, ties 1/2.
pub fn u_pairs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x, y)))
        .map(|(x, y)| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 })
        .sum()
}

/// Two-sided exact p-value by enumerating every split of the pooled sample.
pub fn mwu_permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let observed = u_pairs(a, b);
    let (mut below, mut above, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let (mut ga, mut gb) = (Vec::new(), Vec::new());
        for (k, v) in pooled.iter().enumerate() {
            if mask >> k & 1 == 1 { ga.push(*v) } else { gb.push(*v) }
        }
        let u = u_pairs(&ga, &gb);
        total += 1;
        if u <= observed {
            below += 1;
        }
        if u >= observed {
            above += 1;
        }
    }
    (2.0 * below.min(above) as f64 / total as f64).min(1.0)
}

/// Splits text into identifier runs, space runs, newlines and single
/// punctuation characters.
pub fn tokenize(prompt: &str) -> TokenAlignment {
    fn class(c: char) -> u8 {
        if c.is_alphanumeric() || c == '_' {
            0
        } else if c == ' ' {
            1
        } else {
            2
        }
    }
    let mut ids = BTreeMap::new();
    let mut spans = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = prompt.char_indices().collect();
    for (k, &(pos, c)) in chars.iter().enumerate() {
        let end = pos + c.len_utf8();
        let next = chars.get(k + 1).map(|x| x.1);
        let joins = matches!(next, Some(nc) if class(nc) == class(c) && class(c) < 2);
        if !joins {
            let next_id = ids.len() as u32;
            let id = *ids.entry(&prompt[start..end]).or_insert(next_id);
            spans.push(TokenSpan { id, start, end });
            start = end;
        }
    }
    TokenAlignment::new(prompt.to_string(), spans).expect("contiguous spans")
}

/// True when every row sums to 1 within `tol` or is flagged zero and all zero.
pub fn rows_ok(m: &InteractionMatrix<f64>, tol: f64) -> bool {
    m.rows().enumerate().all(|(i, r)| {
        let s: f64 = r.iter().sum();
        match m.flag(i) {
            RowFlag::Zero => r.iter().all(|v| *v == 0.0),
            _ => (s - 1.0).abs() <= tol,
        }
    })
}

pub mod fixtures {
    use gazeattn_core::data::{normalize_rows, Granularity, InteractionMatrix, TokenAlignment};
    use gazeattn_core::gaze::{render_session, synth_viewport, ScheduledFixation, Session, Viewport};
    use gazeattn_core::traversal::WeibullParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Weibull};

    pub const SNIPPET: &str = "def total(xs):\n\n    acc = 0\n\n    return sum(xs) + acc\n\nprint(total([1, 2]))\n";

    /// Fixations alternating between line 1 and line 5 of [`SNIPPET`].
    pub fn alternating_session(rounds: usize) -> (TokenAlignment, Viewport, Session, Vec<ScheduledFixation>) {
        let a = super::tokenize(SNIPPET);
        let vp = synth_viewport();
        let mut schedule = Vec::new();
        let mut t = 0.0;
        for k in 0..2 * rounds {
            let (column, line) = if k % 2 == 0 { (6, 1) } else { (13, 5) };
            schedule.push(ScheduledFixation { t, d: 250.0, column, line });
            t += 400.0;
        }
        let session = render_session(&schedule, &vp);
        (a, vp, session, schedule)
    }

    fn draw_distance(w: &Weibull<f64>, rng: &mut ChaCha8Rng, limit: usize) -> usize {
        loop {
            let d = (w.sample(rng).ceil() as usize).max(1);
            if d <= limit {
                return d;
            }
        }
    }

    /// Two sessions on an `n`-token prompt: forward jumps out of the first rows,
    /// backward jumps out of the last rows, `samples` jumps each, with random
    /// strengths in `[0.5, 1.5)`.
    pub fn weibull_sessions(
        seed: u64,
        forward: WeibullParams,
        backward: WeibullParams,
        samples: usize,
        n: usize,
    ) -> Vec<InteractionMatrix<f64>> {
        const SOURCES: usize = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wf = Weibull::new(forward.scale, forward.shape).unwrap();
        let wb = Weibull::new(backward.scale, backward.shape).unwrap();
        let mut fwd = vec![0.0; n * n];
        let mut bwd = vec![0.0; n * n];
        for _ in 0..samples {
            let i = rng.random_range(0..SOURCES);
            let d = draw_distance(&wf, &mut rng, n - 1 - i);
            fwd[i * n + i + d] += rng.random_range(0.5..1.5);
            let i = n - 1 - rng.random_range(0..SOURCES);
            let d = draw_distance(&wb, &mut rng, i);
            bwd[i * n + i - d] += rng.random_range(0.5..1.5);
        }
        [fwd, bwd]
            .into_iter()
            .map(|v| InteractionMatrix::from_raw(n, n, Granularity::Token, v).unwrap())
            .collect()
    }

    /// Sessions whose per-row forward and backward masses are exact linear
    /// functions of the relative position.
    pub fn linear_sessions(f: (f64, f64), b: (f64, f64)) -> Vec<InteractionMatrix<f64>> {
        [12usize, 20, 31]
            .into_iter()
            .map(|n| {
                let mut v = vec![0.0; n * n];
                for i in 2..n - 2 {
                    let u = i as f64 / (n - 1) as f64;
                    let (pf, pb) = (f.0 + f.1 * u, b.0 + b.1 * u);
                    v[i * n + i + 1] = 0.7 * pf;
                    v[i * n + i + 2] = 0.3 * pf;
                    v[i * n + i - 1] = 0.6 * pb;
                    v[i * n + i - 2] = 0.4 * pb;
                    v[i * n + i] = 1.0 - pf - pb;
                }
                normalize_rows(&InteractionMatrix::from_raw(n, n, Granularity::Token, v).unwrap()).unwrap()
            })
            .collect()
    }
}

/// Every matrix the toolkit emits for one seeded input, labelled by producer.
pub fn emitted_matrices(seed: u64) -> Vec<(String, InteractionMatrix<f64>)> {
    use gazeattn_core::data::{synth_alignment, synth_attention};
    use gazeattn_core::gaze::{
        ground_truth_interaction, map_fixations, neighbor_normalize, offset_baseline, parafoveal_augment,
        synth_session, synth_viewport, token_events, OffsetBaseline, DEFAULT_ALPHA,
    };
    use gazeattn_core::interaction::{to_line_level, ExtractionMethod, FollowupOptions};
    use gazeattn_core::traversal::{copycat, gaussian_position, uniform_preceding, weibull_traversal, TraversalParams};
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (l, h) = (rng.random_range(1..4), rng.random_range(1..4));
    let (n, m) = (rng.random_range(2..24), rng.random_range(0..6));
    let t = synth_attention::<f64>(seed, l, h, n, m);
    let a = synth_alignment(seed, n);
    let mut out = Vec::new();
    for method in ExtractionMethod::all() {
        let s = method.extract(&t, &FollowupOptions::default()).unwrap();
        out.push((format!("{method}-line"), to_line_level(&s, &a).unwrap()));
        out.push((method.to_string(), s));
    }
    if m > 0 {
        let opts = FollowupOptions {
            layer_pairs: None,
            max_observers: Some(rng.random_range(0..=m)),
        };
        out.push(("followup-truncated".into(), ExtractionMethod::Followup.extract(&t, &opts).unwrap()));
    }
    out.push(("copycat".into(), copycat(&a).matrix));
    out.push(("uniform".into(), uniform_preceding(n).unwrap()));
    out.push(("gaussian".into(), gaussian_position(n, rng.random_range(0.5..20.0)).unwrap()));
    out.push(("weibull".into(), weibull_traversal(n, &TraversalParams::default()).unwrap()));

    let vp = synth_viewport();
    let (session, _) = synth_session(seed, &a, &vp, rng.random_range(2..40), &TraversalParams::default());
    let mapped = map_fixations(&session.fixations, &session.scrolls, &vp).unwrap();
    let events = token_events(&parafoveal_augment(&mapped.events, &vp, &a), &a);
    if !events.is_empty() {
        let gt = ground_truth_interaction::<f64>(&events, DEFAULT_ALPHA, n, None).unwrap();
        let b = offset_baseline(std::slice::from_ref(&gt)).unwrap();
        out.push(("ground-truth-baselined".into(), neighbor_normalize(&gt, &b).unwrap()));
        let p = OffsetBaseline::parametric(&TraversalParams::default(), n).unwrap();
        out.push((
            "ground-truth-parametric".into(),
            ground_truth_interaction::<f64>(&events, DEFAULT_ALPHA, n, Some(&p)).unwrap(),
        ));
        out.push(("ground-truth".into(), gt));
    }
    out
}
