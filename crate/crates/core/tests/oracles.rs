//! Independent oracles: exact rational arithmetic, exhaustive enumeration of
//! small alphabets, and the exact distribution of the estimator.

use collide_count::estimators::{estimate, Variant};
use collide_count::harness::run_cell;
use collide_count::theory::{conditional_moment, mean_w_exact, pmf, tail_prob, var_w_exact};
use collide_count::{Exact, Segmenter, Symbol};
use num_traits::{FromPrimitive, One, Zero};
use proptest::prelude::*;

fn exact(k: u64) -> Exact {
    Exact::from_u64(k).unwrap()
}

/// `Pr(W = k)` as a rational: `prod_{i<k-1} (1 - i/n) * (k-1)/n`.
fn exact_pmf(n: u64, k: u64) -> Exact {
    if k < 2 || k > n + 1 {
        return Exact::zero();
    }
    let nn = exact(n);
    let mut p = exact(k - 1) / nn.clone();
    for i in 1..k - 1 {
        p *= Exact::one() - exact(i) / nn.clone();
    }
    p
}

#[test]
fn variance_identity_is_exact() {
    for n in 1..=60 {
        let second: Exact = conditional_moment(n, 2, 0).unwrap();
        let first: Exact = conditional_moment(n, 1, 0).unwrap();
        assert_eq!(second, exact(2 * n) + first, "n={n}");
    }
}

#[test]
fn rational_moments_match_definition() {
    for n in 1..=12u64 {
        for j in 1..=3u32 {
            for c in 0..=n {
                let lo = c.max(1) + 1;
                let mut num = Exact::zero();
                let mut den = Exact::zero();
                for k in lo..=n + 1 {
                    let p = exact_pmf(n, k);
                    num += num_traits::pow(exact(k), j as usize) * p.clone();
                    den += p;
                }
                let got: Exact = conditional_moment(n, j, c).unwrap();
                assert_eq!(got, num / den, "n={n} j={j} c={c}");
            }
        }
    }
}

#[test]
fn rational_mean_small_cases() {
    assert_eq!(mean_w_exact::<Exact>(1).unwrap(), exact(2));
    assert_eq!(mean_w_exact::<Exact>(2).unwrap(), exact(5) / exact(2));
    assert_eq!(mean_w_exact::<Exact>(3).unwrap(), exact(26) / exact(9));
    assert_eq!(var_w_exact::<Exact>(2).unwrap(), exact(1) / exact(4));
}

/// Every sequence of length `n + 1` over `n` symbols, each equally likely.
fn all_sequences(n: u64) -> impl Iterator<Item = Vec<Symbol>> {
    let len = n as u32 + 1;
    (0..n.pow(len)).map(move |mut code| {
        (0..len)
            .map(|_| {
                let s = Symbol(code % n);
                code /= n;
                s
            })
            .collect()
    })
}

#[test]
fn enumeration_matches_pmf_and_tail() {
    for n in 1..=6u64 {
        let total = n.pow(n as u32 + 1);
        let mut size_counts = vec![0u64; n as usize + 2];
        let mut clip_counts = vec![0u64; n as usize + 1];
        let mut seg = Segmenter::new();
        for seq in all_sequences(n) {
            let block = seg.next_block(&mut seq.iter().copied()).unwrap();
            size_counts[block.size as usize] += 1;
            for c in 1..=n {
                let obs = seg.next_block_clipped(&mut seq.iter().copied(), c).unwrap();
                clip_counts[c as usize] += u64::from(obs.clipped);
                assert_eq!(obs.clipped, block.size > c);
                assert_eq!(obs.size, block.size.min(c + 1));
            }
        }
        for k in 0..=n + 1 {
            let freq = size_counts[k as usize] as f64 / total as f64;
            assert!((freq - pmf::<f64>(n, k)).abs() < 1e-12, "n={n} k={k}");
            assert_eq!(
                exact(size_counts[k as usize]) / exact(total),
                exact_pmf(n, k)
            );
        }
        for c in 1..=n {
            let freq = clip_counts[c as usize] as f64 / total as f64;
            assert!((freq - tail_prob::<f64>(n, c)).abs() < 1e-12, "n={n} c={c}");
        }
    }
}

/// Mean and standard deviation of the estimator over the exact distribution
/// of the block-size sum, by repeated convolution.
fn exact_estimator_moments(n: u64, blocks: u64, variant: Variant) -> (f64, f64) {
    let single: Vec<f64> = (0..=n + 1).map(|k| pmf::<f64>(n, k)).collect();
    let mut dist = vec![1.0];
    for _ in 0..blocks {
        let mut next = vec![0.0; dist.len() + single.len() - 1];
        for (i, &a) in dist.iter().enumerate() {
            for (j, &b) in single.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        dist = next;
    }
    let (mut m1, mut m2) = (0.0, 0.0);
    for (sum, &p) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let est = estimate(variant, sum as f64 / blocks as f64, blocks).unwrap() as f64;
        m1 += p * est;
        m2 += p * est * est;
    }
    (m1, (m2 - m1 * m1).sqrt())
}

#[test]
fn monte_carlo_bias_matches_exact_distribution() {
    let (n, blocks, reps) = (10, 109, 20_000);
    for variant in [Variant::Floor, Variant::Debiased] {
        let (mean, sd) = exact_estimator_moments(n, blocks, variant);
        let exact_bias = (mean - n as f64) / n as f64 * 100.0;
        let se = sd / (reps as f64).sqrt() / n as f64 * 100.0;
        let cell = run_cell(n, blocks, None, reps, 11, variant).unwrap();
        assert!(
            (cell.bias_percent - exact_bias).abs() < 4.0 * se,
            "{variant}: {} vs {exact_bias} (se {se})",
            cell.bias_percent
        );
        assert!((cell.cv_percent - sd / mean * 100.0).abs() < 0.3);
    }
}

proptest! {
    #[test]
    fn float_moments_track_rational(n in 1u64..120, j in 1u32..=3, c_frac in 0.0f64..=1.0) {
        let c = (c_frac * n as f64) as u64;
        let float: f64 = conditional_moment(n, j, c).unwrap();
        let rational: Exact = conditional_moment(n, j, c).unwrap();
        let rational = num_traits::ToPrimitive::to_f64(&rational).unwrap();
        prop_assert!((float - rational).abs() <= 1e-12 * rational);
    }
}
