//! Sequential estimators of the l1 norm of the mixing coefficients.
//!
//! Both walk a dense set `S = {s_1, s_2, ...}` of candidate values and test
//! at each time `t` whether the partial-sum estimate `theta_t` exceeds
//! `s + eps_t * sqrt(s)`:
//!
//! * the weak estimator `psi_t` tests `s_t` once and keeps the largest value
//!   whose test fired;
//! * the strong estimator `xi_t` revisits every value infinitely often (see
//!   [`visit_schedule`]), records the latest outcome as a bit per value and
//!   reports the smallest tested value whose bit is set.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{theta_t, BlockBudget, EstimateCache, MixingKind};
use crate::sample::SamplePath;
use crate::schedule::ParameterSchedule;
use crate::solver::SolverConfig;

/// Enumeration of the non-negative dyadic rationals `k / 2^d`.
///
/// Pairs `(d, k)` are walked along the diagonals `d + k = r`, finer `d`
/// first, subject to `k <= (d + 1) * 2^d`; values already produced are
/// skipped. The first terms are `0, 1, 1/2, 1/4, 1/8, 3/2, 1/16, 3/4, 2`.
#[derive(Debug, Clone)]
pub struct DyadicDiagonal {
    r: u64,
    d: u64,
    seen: HashSet<u64>,
}

impl DyadicDiagonal {
    pub fn new() -> Self {
        Self {
            r: 0,
            d: 0,
            seen: HashSet::new(),
        }
    }
}

impl Default for DyadicDiagonal {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for DyadicDiagonal {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        loop {
            let (d, k) = (self.d, self.r - self.d);
            if self.d == 0 {
                self.r += 1;
                self.d = self.r;
            } else {
                self.d -= 1;
            }
            // 2^d exceeds every k on the diagonal once d > 62; such pairs
            // are never reached in practice
            if d > 62 {
                continue;
            }
            if (k as u128) > (d as u128 + 1) << d {
                continue;
            }
            let value = k as f64 / (1u64 << d) as f64;
            if self.seen.insert(value.to_bits()) {
                return Some(value);
            }
        }
    }
}

/// The `i`-th element of the dense set (`i >= 1`; zero is treated as one).
pub fn dense_enumeration(i: u64) -> f64 {
    DyadicDiagonal::new()
        .nth(i.max(1) as usize - 1)
        .expect("enumeration is infinite")
}

/// Index of the dense-set element visited at time `t`: the triangular sweep
/// `1; 1, 2; 1, 2, 3; ...`.
pub fn visit_schedule(t: u64) -> u64 {
    let t = t.max(1);
    // largest row r with r(r-1)/2 < t
    let mut r = (((8.0 * t as f64).sqrt() - 1.0) / 2.0).floor() as u64;
    while r * (r + 1) / 2 < t {
        r += 1;
    }
    while r > 1 && (r - 1) * r / 2 >= t {
        r -= 1;
    }
    t - (r - 1) * r / 2
}

pub fn psi_step(prev: f64, s: f64, theta: f64, eps: f64) -> f64 {
    if theta > s + eps * s.sqrt() {
        prev.max(s)
    } else {
        prev
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub value: f64,
    pub bit: bool,
    pub last_tested: u64,
}

/// Bits of the strong estimator, keyed by dense-set index. Only values that
/// have been tested are present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BitLedger {
    entries: BTreeMap<u64, LedgerEntry>,
}

impl BitLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, index: u64) -> Option<&LedgerEntry> {
        self.entries.get(&index)
    }

    pub fn entries(&self) -> &BTreeMap<u64, LedgerEntry> {
        &self.entries
    }

    pub fn set(&mut self, index: u64, value: f64, bit: bool, t: u64) {
        self.entries.insert(
            index,
            LedgerEntry {
                value,
                bit,
                last_tested: t,
            },
        );
    }

    /// Smallest tested value whose bit is set, or 0 if there is none.
    pub fn infimum(&self) -> f64 {
        self.entries
            .values()
            .filter(|e| e.bit)
            .map(|e| e.value)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
            .unwrap_or(0.0)
    }
}

/// Tests `s` (dense-set element `index`) at time `t` and returns `xi_t`.
pub fn xi_step(ledger: &mut BitLedger, index: u64, s: f64, theta: f64, eps: f64, t: u64) -> f64 {
    ledger.set(index, s, theta <= s + eps * s.sqrt(), t);
    ledger.infimum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Weak,
    Strong,
}

/// One time step of a sequential run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    /// Dense-set index of the tested value.
    pub index: u64,
    pub s: f64,
    pub theta: f64,
    pub eps: f64,
    /// `s + eps * sqrt(s)`.
    pub threshold: f64,
    /// Whether `theta` exceeded the threshold.
    pub exceeded: bool,
    /// `psi_t` or `xi_t`.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub t: u64,
    pub reason: String,
    pub required_length: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialRun {
    pub estimator: Estimator,
    pub kind: MixingKind,
    pub horizon: u64,
    pub records: Vec<StepRecord>,
    pub truncated: Option<Truncation>,
}

impl SequentialRun {
    pub fn final_estimate(&self) -> Option<f64> {
        self.records.last().map(|r| r.estimate)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.estimate).collect()
    }

    /// One JSON object per step.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// Recomputes the estimate trajectory from the recorded tests alone.
    pub fn replay(&self) -> Vec<f64> {
        replay(self.estimator, &self.records)
    }
}

pub fn replay(estimator: Estimator, records: &[StepRecord]) -> Vec<f64> {
    let mut psi = 0.0;
    let mut ledger = BitLedger::new();
    records
        .iter()
        .map(|r| match estimator {
            Estimator::Weak => {
                psi = psi_step(psi, r.s, r.theta, r.eps);
                psi
            }
            Estimator::Strong => xi_step(&mut ledger, r.index, r.s, r.theta, r.eps, r.t),
        })
        .collect()
}

/// Options shared by the sequential runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub kind: MixingKind,
    pub budget: BlockBudget,
    pub solver: SolverConfig,
}

impl RunOptions {
    pub fn practical(kind: MixingKind, blocks: u64) -> Self {
        Self {
            kind,
            budget: BlockBudget::Practical(blocks),
            solver: SolverConfig::default(),
        }
    }
}

pub fn run_weak(
    sample: &SamplePath,
    schedule: &ParameterSchedule,
    horizon: u64,
    options: &RunOptions,
) -> Result<SequentialRun> {
    let mut cache = EstimateCache::new(sample, options.solver);
    run_with_cache(&mut cache, schedule, horizon, options, Estimator::Weak)
}

pub fn run_strong(
    sample: &SamplePath,
    schedule: &ParameterSchedule,
    horizon: u64,
    options: &RunOptions,
) -> Result<SequentialRun> {
    let mut cache = EstimateCache::new(sample, options.solver);
    run_with_cache(&mut cache, schedule, horizon, options, Estimator::Strong)
}

/// Runs either estimator for `t = 1..=horizon`, reusing `cache`. A sample
/// too short for some step truncates the run there.
pub fn run_with_cache(
    cache: &mut EstimateCache<'_>,
    schedule: &ParameterSchedule,
    horizon: u64,
    options: &RunOptions,
    estimator: Estimator,
) -> Result<SequentialRun> {
    let mut records = Vec::new();
    let mut truncated = None;
    let mut psi = 0.0;
    let mut ledger = BitLedger::new();
    let mut dense = DyadicDiagonal::new();
    let mut prefix: Vec<f64> = Vec::new();
    for t in 1..=horizon {
        let theta = match theta_t(cache, schedule, t, options.kind, options.budget) {
            Ok(theta) => theta.value,
            Err(e @ Error::InsufficientSample { .. }) => {
                truncated = Some(Truncation {
                    t,
                    reason: e.to_string(),
                    required_length: e.required_length(),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let index = match estimator {
            Estimator::Weak => t,
            Estimator::Strong => visit_schedule(t),
        };
        while prefix.len() < index as usize {
            prefix.push(dense.next().expect("enumeration is infinite"));
        }
        let s = prefix[index as usize - 1];
        let eps = schedule.eps(t);
        let threshold = s + eps * s.sqrt();
        let estimate = match estimator {
            Estimator::Weak => {
                psi = psi_step(psi, s, theta, eps);
                psi
            }
            Estimator::Strong => xi_step(&mut ledger, index, s, theta, eps, t),
        };
        records.push(StepRecord {
            t,
            index,
            s,
            theta,
            eps,
            threshold,
            exceeded: theta > threshold,
            estimate,
        });
    }
    Ok(SequentialRun {
        estimator,
        kind: options.kind,
        horizon,
        records,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{gen_chain, gen_iid, FiniteChain};
    use proptest::prelude::*;

    #[test]
    fn enumeration_prefix() {
        let first: Vec<f64> = DyadicDiagonal::new().take(10).collect();
        assert_eq!(first, vec![0.0, 1.0, 0.5, 0.25, 0.125, 1.5, 0.0625, 0.75, 2.0, 0.03125]);
        assert_eq!(dense_enumeration(1), 0.0);
        assert_eq!(dense_enumeration(2), 1.0);
    }

    #[test]
    fn enumeration_has_no_duplicates() {
        let values: Vec<f64> = DyadicDiagonal::new().take(1000).collect();
        let distinct: HashSet<u64> = values.iter().map(|v| v.to_bits()).collect();
        assert_eq!(distinct.len(), 1000);
    }

    #[test]
    fn enumeration_reaches_every_dyadic_cell() {
        // every interval [a, a + 1/8) with a < 3 holds some early term
        let values: Vec<f64> = DyadicDiagonal::new().take(2000).collect();
        for i in 0..24 {
            let a = i as f64 / 8.0;
            assert!(values.iter().any(|&v| v >= a && v < a + 0.125), "{a}");
        }
    }

    #[test]
    fn schedule_examples() {
        let got: Vec<u64> = (1..=10).map(visit_schedule).collect();
        assert_eq!(got, vec![1, 1, 2, 1, 2, 3, 1, 2, 3, 4]);
    }

    #[test]
    fn schedule_visit_counts() {
        let horizon = 10_000u64;
        let mut counts = [0u64; 11];
        for t in 1..=horizon {
            let i = visit_schedule(t);
            if i <= 10 {
                counts[i as usize] += 1;
            }
        }
        let rows = (2.0 * horizon as f64).sqrt().floor() as u64;
        for i in 1..=10u64 {
            assert!(counts[i as usize] >= rows - i, "index {i}: {}", counts[i as usize]);
        }
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_step(0.0, 0.3, 0.5, 0.1), 0.3);
        assert_eq!(psi_step(0.4, 0.3, 0.5, 0.1), 0.4);
        assert_eq!(psi_step(0.2, 0.3, 0.33, 0.1), 0.2);
    }

    #[test]
    fn xi_examples() {
        let mut ledger = BitLedger::new();
        assert_eq!(xi_step(&mut ledger, 1, 0.0, 0.2, 0.1, 1), 0.0);
        assert!(!ledger.get(1).unwrap().bit);
        assert_eq!(xi_step(&mut ledger, 2, 1.0, 0.2, 0.1, 2), 1.0);
        assert_eq!(ledger.get(2).unwrap().last_tested, 2);
        // re-testing index 1 with a small theta sets its bit
        assert_eq!(xi_step(&mut ledger, 1, 0.0, 0.0, 0.1, 3), 0.0);
        assert!(ledger.get(1).unwrap().bit);
    }

    proptest! {
        #[test]
        fn xi_three_case_rule(
            steps in prop::collection::vec((1u64..6, 0.0f64..2.0, 0.0f64..0.5), 1..40)
        ) {
            let mut ledger = BitLedger::new();
            let mut model: BTreeMap<u64, (f64, bool)> = BTreeMap::new();
            for (t, (index, theta, eps)) in steps.into_iter().enumerate() {
                let s = dense_enumeration(index);
                let before = ledger.clone();
                let xi = xi_step(&mut ledger, index, s, theta, eps, t as u64 + 1);
                model.insert(index, (s, theta <= s + eps * s.sqrt()));
                // untouched entries keep their bits
                for (k, e) in before.entries() {
                    if *k != index {
                        prop_assert_eq!(ledger.get(*k), Some(e));
                    }
                }
                let expected = model.values().filter(|(_, b)| *b).map(|(v, _)| *v)
                    .fold(f64::INFINITY, f64::min);
                let expected = if expected.is_finite() { expected } else { 0.0 };
                prop_assert_eq!(xi, expected);
            }
        }

        #[test]
        fn psi_is_monotone(steps in prop::collection::vec((0.0f64..3.0, 0.0f64..3.0, 0.0f64..1.0), 1..50)) {
            let mut psi = 0.0;
            for (s, theta, eps) in steps {
                let next = psi_step(psi, s, theta, eps);
                prop_assert!(next >= psi);
                psi = next;
            }
        }
    }

    #[test]
    fn empty_horizon() {
        let x = gen_iid(100, 1).unwrap();
        let s = ParameterSchedule::default();
        let opts = RunOptions::practical(MixingKind::Alpha, 10);
        assert!(run_weak(&x, &s, 0, &opts).unwrap().records.is_empty());
        assert!(run_strong(&x, &s, 0, &opts).unwrap().records.is_empty());
    }

    #[test]
    fn short_sample_truncates() {
        let x = gen_iid(100, 1).unwrap();
        let s = ParameterSchedule::default();
        let opts = RunOptions::practical(MixingKind::Alpha, 1000);
        let run = run_strong(&x, &s, 5, &opts).unwrap();
        assert!(run.records.is_empty());
        let cut = run.truncated.unwrap();
        assert_eq!((cut.t, cut.required_length), (1, Some(3000)));
    }

    #[test]
    fn strong_run_replays_and_weak_run_is_monotone() {
        let chain = FiniteChain::two_state(0.1, 0.1, 1).unwrap();
        let x = gen_chain(&chain, 9000, 4).unwrap();
        let s = ParameterSchedule::default();
        let opts = RunOptions::practical(MixingKind::Alpha, 3000);
        let strong = run_strong(&x, &s, 30, &opts).unwrap();
        assert_eq!(strong.records.len(), 30);
        assert_eq!(strong.replay(), strong.estimates());
        let weak = run_weak(&x, &s, 30, &opts).unwrap();
        assert_eq!(weak.replay(), weak.estimates());
        assert!(weak.estimates().windows(2).all(|w| w[1] >= w[0]));
        let lines = strong.to_json_lines();
        assert_eq!(lines.lines().count(), 30);
        let back: StepRecord = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
        assert_eq!(back, strong.records[0]);
    }
}
