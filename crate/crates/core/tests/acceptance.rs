//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//!
//! Monte Carlo criteria use `SEED`, fixed once and never tuned.

use std::process::ExitCode;

use collide_count::estimators::{blocks_for_cv, Variant};
use collide_count::harness::{run_cell, table_k_values, theory_table, TABLE3_N, TABLE_BLOCKS};
use collide_count::sources::UniformSource;
use collide_count::theory::{
    conditional_moment, mean_w_asymptotic, mean_w_exact, pmf, tail_prob, tail_prob_approx,
    tail_prob_approx_k, var_w_exact, Truncation,
};
use collide_count::{KFactor, Segmenter};

const SEED: u64 = 2017;

const TABLE3_TOL_PP: f64 = 0.01;
const TAIL_TOL_PP: f64 = 0.1;
const DESK_REPS: u64 = 2000;
const FULL_REPS: u64 = 20_000;
const DESK_BIAS_MAX_PP: f64 = 0.8;
const DESK_CV_RANGE: (f64, f64) = (9.0, 10.5);
const FULL_TOL_PP: f64 = 0.3;
const CLIPPED_BIAS_TOL_PP: f64 = 0.5;
const ORACLE_TOL: f64 = 1e-9;
const TELESCOPE_TOL: f64 = 1e-12;
const ASYMPTOTIC_MEAN_TOL: f64 = 1.0;
const SEGMENTER_BLOCKS: u64 = 100_000;
const CLIP_FRACTION_SE: f64 = 3.0;
const MC_MEAN_SIGMAS: f64 = 4.0;

/// Printed theoretical clipping bias, rows K = 2.7..3.0, columns n = 100..1e7.
const TABLE3: [[f64; 6]; 4] = [
    [-0.76, -1.10, -1.31, -1.36, -1.37, -1.38],
    [-0.53, -0.81, -0.96, -1.00, -1.01, -1.02],
    [-0.37, -0.59, -0.70, -0.72, -0.74, -0.74],
    [-0.25, -0.43, -0.50, -0.53, -0.54, -0.54],
];

/// Printed debiased-estimator (n, bias %, CV %) at l = 109, 20000 reps.
const TABLE1_DEBIASED: [(u64, f64, f64); 3] = [
    (100, -0.27, 9.49),
    (1_000, -0.05, 9.76),
    (10_000, -0.05, 9.87),
];

/// Printed clipped-estimator (K, bias %) at n = 1e4, l = 109.
const TABLE2_N1E4: [(&str, f64); 2] = [("2.7", -1.38), ("3.0", -0.55)];

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn theory_table_reproduction() -> Outcome {
    let cells = theory_table(&TABLE3_N, &table_k_values()).expect("theory table");
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for cell in &cells {
        let row = table_k_values().iter().position(|k| *k == cell.k).unwrap();
        let col = TABLE3_N.iter().position(|&n| n == cell.n).unwrap();
        let gap = (cell.bias_percent - TABLE3[row][col]).abs();
        if gap > worst {
            worst = gap;
            detail = format!(
                "worst K={} n={} got {:.4} printed {:.2}",
                cell.k, cell.n, cell.bias_percent, TABLE3[row][col]
            );
        }
    }
    (
        cells.len() == 24 && worst <= TABLE3_TOL_PP,
        format!("24 cells, max |gap| {worst:.4}pp (tol {TABLE3_TOL_PP}); {detail}"),
    )
}

fn tail_anchors() -> Outcome {
    let anchors = [(1.25, 45.8), (3.0, 1.1), (4.56, 0.003)];
    let n = 1_000_000_000_000u64;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, printed) in anchors {
        let by_k = 100.0 * tail_prob_approx_k::<f64>(k);
        let c = (k * (n as f64).sqrt()).round() as u64;
        let by_c = 100.0 * tail_prob_approx::<f64>(n, c).unwrap();
        ok &= (by_k - printed).abs() <= TAIL_TOL_PP && (by_c - printed).abs() <= TAIL_TOL_PP;
        parts.push(format!("K={k}: {by_k:.4}% (printed {printed}%)"));
    }
    (ok, parts.join(", "))
}

fn table1_reproduction() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(n, _, _) in &TABLE1_DEBIASED[..2] {
        let cell = run_cell(n, TABLE_BLOCKS, None, DESK_REPS, SEED, Variant::Debiased).unwrap();
        ok &= cell.bias_percent.abs() <= DESK_BIAS_MAX_PP
            && (DESK_CV_RANGE.0..=DESK_CV_RANGE.1).contains(&cell.cv_percent);
        parts.push(format!(
            "desk n={n}: bias {:.2}% cv {:.2}%",
            cell.bias_percent, cell.cv_percent
        ));
    }
    for &(n, bias, cv) in &TABLE1_DEBIASED {
        let cell = run_cell(n, TABLE_BLOCKS, None, FULL_REPS, SEED, Variant::Debiased).unwrap();
        ok &= (cell.bias_percent - bias).abs() <= FULL_TOL_PP
            && (cell.cv_percent - cv).abs() <= FULL_TOL_PP;
        parts.push(format!(
            "full n={n}: bias {:.2}% (printed {bias}) cv {:.2}% (printed {cv})",
            cell.bias_percent, cell.cv_percent
        ));
    }
    (ok, parts.join("; "))
}

fn table2_reproduction() -> Outcome {
    let n = 10_000;
    let unclipped = run_cell(n, TABLE_BLOCKS, None, DESK_REPS, SEED, Variant::Debiased).unwrap();
    let mut ok = true;
    let mut parts = vec![format!("unclipped cv {:.3}%", unclipped.cv_percent)];
    for (k, printed) in TABLE2_N1E4 {
        let k: KFactor = k.parse().unwrap();
        let c = k.limit_for(n);
        let cell = run_cell(n, TABLE_BLOCKS, Some(c), DESK_REPS, SEED, Variant::Debiased).unwrap();
        ok &= (cell.bias_percent - printed).abs() <= CLIPPED_BIAS_TOL_PP
            && cell.cv_percent < unclipped.cv_percent;
        parts.push(format!(
            "K={k} c={c}: bias {:.2}% (printed {printed}) cv {:.3}%",
            cell.bias_percent, cell.cv_percent
        ));
    }
    (ok, parts.join(", "))
}

fn oracle_suite() -> Outcome {
    let mut failures = Vec::new();
    for n in 1..=300u64 {
        let total: f64 = (2..=n + 1).map(|k| pmf::<f64>(n, k)).sum();
        if (total - 1.0).abs() > ORACLE_TOL {
            failures.push(format!("pmf sum n={n}: {total}"));
        }
        for k in 1..=n + 2 {
            let step = tail_prob::<f64>(n, k - 1) - tail_prob::<f64>(n, k);
            if (step - pmf::<f64>(n, k)).abs() > TELESCOPE_TOL {
                failures.push(format!("telescoping n={n} k={k}"));
            }
        }
        let second: f64 = conditional_moment(n, 2, 0).unwrap();
        let first: f64 = conditional_moment(n, 1, 0).unwrap();
        if (second - 2.0 * n as f64 - first).abs() > ORACLE_TOL {
            failures.push(format!("variance identity n={n}"));
        }
    }
    for n in 1..=100u64 {
        for j in 1..=2u32 {
            for c in 0..=n {
                // Relative: E(W^2 | W > c) reaches about 1e4.
                let brute = brute_conditional_moment(n, j, c);
                let got: f64 = conditional_moment(n, j, c).unwrap();
                if (got - brute).abs() > ORACLE_TOL * brute {
                    failures.push(format!("moment n={n} j={j} c={c}: {got} vs {brute}"));
                }
            }
        }
    }
    for n in 2..=10_000u64 {
        let exact: f64 = mean_w_exact(n).unwrap();
        let approx: f64 = mean_w_asymptotic(n, Truncation::TwoTerm).unwrap();
        if (exact - approx).abs() > ASYMPTOTIC_MEAN_TOL {
            failures.push(format!("asymptotic mean n={n}"));
        }
    }
    let detail = if failures.is_empty() {
        "pmf, telescoping, moments, variance identity and asymptotic mean all within tolerance"
            .to_string()
    } else {
        format!("{} failures, first: {}", failures.len(), failures[0])
    };
    (failures.is_empty(), detail)
}

/// `sum_{k>c} k^j Pr(W=k) / Pr(W>c)` straight from the distribution.
fn brute_conditional_moment(n: u64, j: u32, c: u64) -> f64 {
    let lo = c.max(1) + 1;
    let (num, den) = (lo..=n + 1).fold((0.0, 0.0), |(num, den), k| {
        let p = pmf::<f64>(n, k);
        (num + (k as f64).powi(j as i32) * p, den + p)
    });
    num / den
}

fn segmenter_equivalence() -> Outcome {
    let n = 1_000;
    let mut plain_src = UniformSource::new(n, SEED).unwrap();
    let mut clip_src = UniformSource::new(n, SEED).unwrap();
    let (mut plain, mut clipped) = (Segmenter::new(), Segmenter::new());
    let mut mismatches = 0u64;
    for _ in 0..SEGMENTER_BLOCKS {
        let a = plain.next_block(&mut plain_src).unwrap();
        let b = clipped.next_block_clipped(&mut clip_src, n).unwrap();
        mismatches += u64::from(a.size != b.size);
    }

    let c = KFactor::new(29, 10).unwrap().limit_for(n);
    let mut src = UniformSource::new(n, SEED ^ 1).unwrap();
    let mut seg = Segmenter::new();
    let sample = seg
        .collect_sample(&mut src, SEGMENTER_BLOCKS, Some(c))
        .unwrap();
    let p = tail_prob::<f64>(n, c);
    let se = (p * (1.0 - p) / SEGMENTER_BLOCKS as f64).sqrt();
    let fraction = sample.clip_count as f64 / SEGMENTER_BLOCKS as f64;
    let z = (fraction - p) / se;
    (
        mismatches == 0 && z.abs() <= CLIP_FRACTION_SE,
        format!(
            "c=n mismatches {mismatches}/{SEGMENTER_BLOCKS}; c={c} clip fraction {fraction:.5} vs {p:.5} ({z:+.2} SE)"
        ),
    )
}

fn sizing_rule() -> Outcome {
    let expected = [(0.10, 109), (0.15, 49), (0.05, 446)];
    let got: Vec<u64> = expected
        .iter()
        .map(|&(cv, _)| blocks_for_cv(cv).unwrap())
        .collect();
    let ok = expected
        .iter()
        .zip(&got)
        .all(|(&(_, want), &have)| want == have);
    let parts: Vec<String> = expected
        .iter()
        .zip(&got)
        .map(|(&(cv, want), have)| format!("cv {cv}: {have} (expected {want})"))
        .collect();
    (ok, parts.join(", "))
}

fn monte_carlo_mean() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, n) in [10u64, 100, 1_000].into_iter().enumerate() {
        let mut src = UniformSource::new(n, SEED.wrapping_add(i as u64 + 1)).unwrap();
        let sample = Segmenter::new()
            .collect_sample(&mut src, SEGMENTER_BLOCKS, None)
            .unwrap();
        let mean = sample.mean::<f64>().unwrap();
        let exact: f64 = mean_w_exact(n).unwrap();
        let sigma = var_w_exact::<f64>(n).unwrap().sqrt();
        let z = (mean - exact) / (sigma / (SEGMENTER_BLOCKS as f64).sqrt());
        ok &= z.abs() <= MC_MEAN_SIGMAS;
        parts.push(format!("n={n}: {mean:.4} vs {exact:.4} ({z:+.2} sigma)"));
    }
    (ok, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 theory table reproduction", theory_table_reproduction),
        ("2 tail probability anchors", tail_anchors),
        ("3 unclipped table reproduction", table1_reproduction),
        ("4 clipped table reproduction", table2_reproduction),
        ("5 oracle suite", oracle_suite),
        ("6 segmenter equivalence", segmenter_equivalence),
        ("7 sizing rule", sizing_rule),
        ("8 Monte Carlo mean", monte_carlo_mean),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let (ok, detail) = check();
        println!(
            "{} criterion {name}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        failed += usize::from(!ok);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
