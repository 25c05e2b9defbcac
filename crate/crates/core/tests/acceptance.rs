//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixcoef::synthetic::exact_level_coefficients_rational;
use mixcoef::{
    bilinear_sup_exact, bilinear_sup_heuristic, constant_c, constant_c_tilde,
    empirical_block_measure, estimate_pair, exact_dependence_matrix,
    gen_chain, gen_iid, gen_ma, half_abs_sum, independence_test, rate_test, run_strong, run_weak,
    AtomSet, Decision, DependenceMatrix, DyadicGrid, FiniteChain, MixingKind, ParameterSchedule,
    RateFunction, RunOptions, SamplePath, ScheduleConfig, SolverConfig,
};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Every empirical (alpha, beta) pair produced by the suite, for criterion 5.
static EMPIRICAL_PAIRS: Mutex<Vec<(f64, f64)>> = Mutex::new(Vec::new());

fn record_pair(alpha: f64, beta: f64) {
    EMPIRICAL_PAIRS.lock().unwrap().push((alpha, beta));
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sym_chain(p: f64) -> FiniteChain {
    FiniteChain::two_state(p, p, 1).unwrap()
}

/// Brute-force subset supremum: every row subset against every column
/// subset.
fn brute_sup(rows: &[Vec<f64>]) -> f64 {
    let r = rows.len();
    let c = rows[0].len();
    let mut best = 0.0f64;
    for a in 0u32..(1 << r) {
        let col: Vec<f64> = (0..c)
            .map(|j| (0..r).filter(|i| a >> i & 1 == 1).map(|i| rows[i][j]).sum())
            .collect();
        for b in 0u32..(1 << c) {
            let s: f64 = (0..c).filter(|j| b >> j & 1 == 1).map(|j| col[j]).sum();
            best = best.max(s.abs());
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut heuristic_above = 0;
    for i in 0..200 {
        let r = rng.random_range(1..=8);
        let c = rng.random_range(1..=8);
        // dyadic entries keep every subset sum exact
        let rows: Vec<Vec<f64>> = (0..r)
            .map(|_| (0..c).map(|_| rng.random_range(-1024i32..=1024) as f64 / 1024.0).collect())
            .collect();
        let d = DependenceMatrix::from_rows(rows.clone()).unwrap();
        let exact = bilinear_sup_exact(&d).unwrap().value;
        if exact != brute_sup(&rows) {
            mismatches += 1;
        }
        if bilinear_sup_heuristic(&d, 8, i).value > exact {
            heuristic_above += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && heuristic_above == 0 && elapsed < Duration::from_secs(10),
        format!("200 matrices: {mismatches} exact mismatches, {heuristic_above} heuristic > exact, {elapsed:.2?} (limit 10s)"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let chain = sym_chain(0.2);
    let t = 200_000u64;
    let mut good = 0;
    let mut values = Vec::new();
    for seed in SEEDS {
        let x = gen_chain(&chain, 3 * t as usize, seed).unwrap();
        let p = estimate_pair(&x, t, 3, 1, 1, &SolverConfig::exact()).unwrap();
        record_pair(p.alpha.value, p.beta.value);
        if (p.alpha.value - 0.09).abs() <= 0.02 && (p.beta.value - 0.18).abs() <= 0.03 {
            good += 1;
        }
        values.push(format!("({:.4}, {:.4})", p.alpha.value, p.beta.value));
    }
    let elapsed = start.elapsed();
    outcome(
        good >= 4 && elapsed < Duration::from_secs(120),
        format!("{good}/5 seeds within tolerance (|a-0.09|<=0.02, |b-0.18|<=0.03): {}, {elapsed:.2?}", values.join(" ")),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let t = 50_000u64;
    let mut good = 0;
    let mut values = Vec::new();
    for seed in SEEDS {
        let x = gen_iid(3 * t as usize, seed).unwrap();
        let p = estimate_pair(&x, t, 3, 1, 1, &SolverConfig::exact()).unwrap();
        record_pair(p.alpha.value, p.beta.value);
        if p.alpha.value <= 0.02 && p.beta.value <= 0.03 {
            good += 1;
        }
        values.push(format!("({:.4}, {:.4})", p.alpha.value, p.beta.value));
    }
    let elapsed = start.elapsed();
    outcome(
        good >= 4 && elapsed < Duration::from_secs(60),
        format!("{good}/5 seeds with a<=0.02, b<=0.03: {}, {elapsed:.2?}", values.join(" ")),
    )
}

fn criterion_4() -> Outcome {
    let chain = sym_chain(0.2);
    let coeffs = |n, level| exact_level_coefficients_rational(&chain, n, level, 1).unwrap();
    let by_n: Vec<(BigRational, BigRational)> = [3, 4, 5].iter().map(|&n| coeffs(n, 1)).collect();
    let by_level: Vec<(BigRational, BigRational)> = [1, 2].iter().map(|&l| coeffs(3, l)).collect();
    let monotone = |v: &[(BigRational, BigRational)]| {
        v.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1)
    };
    let show = |v: &[(BigRational, BigRational)]| {
        v.iter()
            .map(|(a, b)| format!("({:.6}, {:.6})", to_f64(a), to_f64(b)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        monotone(&by_n) && monotone(&by_level),
        format!("rational oracle; n=3,4,5: {}; ell=1,2: {}", show(&by_n), show(&by_level)),
    )
}

fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap()
}

fn criterion_5() -> Outcome {
    // exact matrices: alpha-approx <= beta-approx for every split
    let chains = [
        sym_chain(0.2),
        sym_chain(0.05),
        FiniteChain::two_state(0.1, 0.4, 2).unwrap(),
        FiniteChain::new(
            vec![0.125, 0.375, 0.875],
            vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.4, 0.4, 0.2]],
        )
        .unwrap(),
        FiniteChain::iid(&[0.2, 0.3, 0.5], 2).unwrap(),
    ];
    let mut exact_checked = 0;
    let mut exact_violations = 0;
    for chain in &chains {
        for (n, level) in [(3, 1), (4, 1), (5, 1), (3, 2), (4, 2)] {
            for m in 1..=n - 2 {
                for j in 1..=n - m - 1 {
                    let d = exact_dependence_matrix(chain, n, m, j, level).unwrap();
                    exact_checked += 1;
                    if bilinear_sup_exact(&d).unwrap().value > half_abs_sum(&d) + 1e-15 {
                        exact_violations += 1;
                    }
                }
            }
        }
    }
    // empirical sweep on top of the pairs recorded by other criteria
    let samples = [
        gen_iid(40_000, 11).unwrap(),
        gen_chain(&sym_chain(0.2), 40_000, 12).unwrap(),
        gen_chain(&sym_chain(0.05), 40_000, 13).unwrap(),
        gen_ma(2, 40_000, 14).unwrap(),
    ];
    for x in &samples {
        for (n, level) in [(3, 1), (4, 1), (5, 1), (3, 2), (4, 2)] {
            for m in 1..=n - 2 {
                let p = estimate_pair(x, 8000, n, level, m, &SolverConfig::default()).unwrap();
                record_pair(p.alpha.value, p.beta.value);
            }
        }
    }
    let pairs = EMPIRICAL_PAIRS.lock().unwrap();
    let empirical_violations = pairs.iter().filter(|(a, b)| *a > 2.0 * b).count();
    outcome(
        exact_violations == 0 && empirical_violations == 0,
        format!(
            "{exact_violations} violations of a<=b over {exact_checked} exact matrices; {empirical_violations} violations of a<=2b over {} empirical runs",
            pairs.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let schedule = ParameterSchedule::default();
    let horizon = 60u64;
    let options = RunOptions::practical(MixingKind::Alpha, 20_000);
    let chain = sym_chain(0.05);
    let mut wins = 0;
    let mut steps = 0;
    let mut monotone_steps = 0;
    let mut finals = Vec::new();
    for seed in SEEDS {
        let len = 20_000 * schedule.n(horizon) as usize;
        let xc = gen_chain(&chain, len, seed).unwrap();
        let xi = gen_iid(len, seed).unwrap();
        let sc = run_strong(&xc, &schedule, horizon, &options).unwrap();
        let si = run_strong(&xi, &schedule, horizon, &options).unwrap();
        let (fc, fi) = (sc.final_estimate().unwrap(), si.final_estimate().unwrap());
        if sc.records.len() == 60 && si.records.len() == 60 && fc > fi {
            wins += 1;
        }
        finals.push(format!("{fc}>{fi}"));
        for x in [&xc, &xi] {
            let weak = run_weak(x, &schedule, horizon, &options).unwrap();
            let psi = weak.estimates();
            steps += psi.len().saturating_sub(1);
            monotone_steps += psi.windows(2).filter(|w| w[1] >= w[0]).count();
        }
    }
    let elapsed = start.elapsed();
    outcome(
        wins >= 4 && monotone_steps == steps && elapsed < Duration::from_secs(300),
        format!(
            "chain xi > iid xi in {wins}/5 paired seeds ({}); psi non-decreasing in {monotone_steps}/{steps} steps; {elapsed:.2?}",
            finals.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let schedule = ParameterSchedule::new(ScheduleConfig::desk()).unwrap();
    let t = 60u64;
    let options = RunOptions::practical(MixingKind::Alpha, 20_000);
    let len = 20_000 * schedule.n(t) as usize;
    let chain = sym_chain(0.05);
    let mut iid_accepts = 0;
    let mut chain_rejects = 0;
    let mut vacuous_total = 0;
    let mut vacuous_accepts = 0;
    let gamma_one = RateFunction::constant(1.0).unwrap();
    for seed in SEEDS {
        let xi = gen_iid(len, 100 + seed).unwrap();
        let xc = gen_chain(&chain, len, 100 + seed).unwrap();
        if independence_test(&xi, &schedule, t, &options).unwrap().decision == Decision::Accept {
            iid_accepts += 1;
        }
        if independence_test(&xc, &schedule, t, &options).unwrap().decision == Decision::Reject {
            chain_rejects += 1;
        }
        let xm = gen_ma(1, len, 100 + seed).unwrap();
        let xk = SamplePath::new(vec![0.5; len]).unwrap();
        for x in [&xi, &xc, &xm, &xk] {
            for kind in [MixingKind::Alpha, MixingKind::Beta] {
                let opts = RunOptions { kind, ..options };
                for tt in [1, 10, 60] {
                    vacuous_total += 1;
                    if rate_test(x, &gamma_one, &schedule, tt, &opts).unwrap().decision == Decision::Accept {
                        vacuous_accepts += 1;
                    }
                }
            }
        }
    }
    outcome(
        iid_accepts >= 4 && chain_rejects >= 4 && vacuous_accepts == vacuous_total,
        format!(
            "independence: iid +1 in {iid_accepts}/5, chain -1 in {chain_rejects}/5; rate gamma=1: +1 in {vacuous_accepts}/{vacuous_total}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let chain = sym_chain(0.2);
    let grid = DyadicGrid::new(1, 1).unwrap();
    let lower = AtomSet::singleton(grid, 0).unwrap();
    let times = [1000u64, 2000, 4000];
    let mut freq = [0usize; 3];
    for rep in 0..500u64 {
        let x = gen_chain(&chain, 4000, 10_000 + rep).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let mu = empirical_block_measure(&x, 1, 1, &lower, t).unwrap();
            if (mu - 0.5).abs() >= 0.05 {
                freq[i] += 1;
            }
        }
    }
    let inversions = freq.windows(2).filter(|w| w[1] > w[0]).count();
    let elapsed = start.elapsed();
    outcome(
        freq[2] <= freq[0] && inversions <= 1 && elapsed < Duration::from_secs(180),
        format!("deviation counts of 500 at t=1000,2000,4000: {freq:?}; {inversions} inversions; {elapsed:.2?}"),
    )
}

fn criterion_9() -> Outcome {
    let c = constant_c(1, 1, 2).unwrap().to_biguint().unwrap();
    let ct = constant_c_tilde(1, 1, 1).unwrap().to_biguint().unwrap();
    outcome(
        c == 512u32.into() && ct == 16384u32.into(),
        format!("C(1,1,2) = {c}, C~(1,1,1) = {ct}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("solver exactness", criterion_1),
        ("oracle convergence", criterion_2),
        ("null behaviour", criterion_3),
        ("monotone approximation", criterion_4),
        ("order relation", criterion_5),
        ("sequential discrimination", criterion_6),
        ("test verdicts", criterion_7),
        ("concentration sanity", criterion_8),
        ("constants", criterion_9),
    ];
    // criterion 5 reads the pairs recorded by 2 and 3, so those run first
    let mut results: Vec<Option<Outcome>> = (0..9).map(|_| None).collect();
    std::thread::scope(|scope| {
        let order = [[0, 1, 2, 3], [5, 6, 7, 8]];
        let handles: Vec<_> = order
            .into_iter()
            .map(|group| {
                scope.spawn(move || {
                    group
                        .into_iter()
                        .map(|i| (i, criteria[i].1()))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, out) in h.join().expect("criterion panicked") {
                results[i] = Some(out);
            }
        }
    });
    results[4] = Some(criteria[4].1());

    let mut failed = 0;
    for (i, out) in results.into_iter().enumerate() {
        let out = out.expect("every criterion ran");
        let tag = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!("[{tag}] criterion {}: {} - {}", i + 1, criteria[i].0, out.detail);
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
