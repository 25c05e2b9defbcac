//! Hypothesis tests built on the estimators.
//!
//! * [`rate_test`]: are the mixing coefficients bounded by a rate function
//!   `gamma(m)`? Accepts iff every scheduled estimate for `m <= M_t` is at
//!   most `gamma(m) + eps_t`.
//! * [`threshold_test`]: is the l1 norm at most `gamma`? Accepts iff the
//!   strong sequential estimate `xi_t` is at most `gamma + zeta_t`.
//! * [`independence_test`]: the threshold test for alpha with `gamma = 0`.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{scheduled_estimate, EstimateCache, MixingKind};
use crate::sample::SamplePath;
use crate::schedule::ParameterSchedule;
use crate::sequential::{run_with_cache, Estimator, RunOptions};
use crate::verdict::{Decision, TestKind, TestVerdict};

/// How a rate function continues past its last listed gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "rule", content = "value")]
pub enum Tail {
    /// Repeat the last listed value.
    Last,
    Constant(f64),
    /// Multiply by the ratio for each further gap.
    Geometric(f64),
}

/// A bound `gamma(m)` in `[0, 1]` for every gap `m >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    values: Vec<f64>,
    tail: Tail,
}

impl RateFunction {
    /// `values[i]` is `gamma(i + 1)`.
    pub fn new(values: Vec<f64>, tail: Tail) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameters("rate function needs at least gamma(1)".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameters(format!("gamma({}) = {v} outside [0, 1]", i + 1)));
        }
        match tail {
            Tail::Constant(c) if !(0.0..=1.0).contains(&c) => {
                return Err(Error::InvalidParameters(format!("tail constant {c} outside [0, 1]")));
            }
            Tail::Geometric(r) if !(0.0..=1.0).contains(&r) => {
                return Err(Error::InvalidParameters(format!("tail ratio {r} outside [0, 1]")));
            }
            _ => {}
        }
        Ok(Self { values, tail })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(vec![c], Tail::Last)
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn listed(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, m: u32) -> f64 {
        let m = m.max(1) as usize;
        if let Some(&v) = self.values.get(m - 1) {
            return v;
        }
        let last = *self.values.last().expect("non-empty");
        match self.tail {
            Tail::Last => last,
            Tail::Constant(c) => c,
            Tail::Geometric(r) => {
                let extra = (m - self.values.len()) as i32;
                last * r.powi(extra)
            }
        }
    }

    /// Parses lines `m gamma` (with `m = 1, 2, ...` in order), optional
    /// `tail=last`, `tail=constant:<c>` or `tail=geometric:<r>`, and `#`
    /// comments.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut values = Vec::new();
        let mut tail = Tail::Last;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let text = line.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            if let Some(rule) = text.strip_prefix("tail=") {
                tail = parse_tail(rule.trim()).map_err(err)?;
                continue;
            }
            let mut fields = text.split_whitespace();
            let (Some(m), Some(g), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(err("expected two columns: m gamma".into()));
            };
            let m: usize = m.parse().map_err(|e| err(format!("gap {m:?}: {e}")))?;
            let g: f64 = g.parse().map_err(|e| err(format!("gamma {g:?}: {e}")))?;
            if m != values.len() + 1 {
                return Err(err(format!("expected gap {} next, found {m}", values.len() + 1)));
            }
            values.push(g);
        }
        Self::new(values, tail)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(std::io::BufReader::new(file))
    }
}

fn parse_tail(rule: &str) -> std::result::Result<Tail, String> {
    let number = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("tail value {v:?}: {e}"));
    match rule.split_once(':') {
        None if rule == "last" => Ok(Tail::Last),
        Some(("constant", v)) => Ok(Tail::Constant(number(v)?)),
        Some(("geometric", v)) => Ok(Tail::Geometric(number(v)?)),
        _ => Err(format!("unknown tail rule {rule:?}")),
    }
}

fn evidence<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn rate_test(
    sample: &SamplePath,
    gamma: &RateFunction,
    schedule: &ParameterSchedule,
    t: u64,
    options: &RunOptions,
) -> Result<TestVerdict> {
    let mut cache = EstimateCache::new(sample, options.solver);
    rate_test_with_cache(&mut cache, gamma, schedule, t, options)
}

pub fn rate_test_with_cache(
    cache: &mut EstimateCache<'_>,
    gamma: &RateFunction,
    schedule: &ParameterSchedule,
    t: u64,
    options: &RunOptions,
) -> Result<TestVerdict> {
    let t = t.max(1);
    let eps = schedule.eps(t);
    let max_gap = schedule.max_gap(t);
    let mut ev = evidence([
        ("eps_t", eps),
        ("M_t", max_gap as f64),
        ("n_t", schedule.n(t) as f64),
        ("ell_t", schedule.ell(t) as f64),
    ]);
    let mut accept = true;
    for m in 1..=max_gap {
        let est = scheduled_estimate(cache, schedule, m, t, options.kind, options.budget)?;
        let bound = gamma.value(m) + eps;
        accept &= est.value <= bound;
        ev.insert(format!("m{m}.estimate"), est.value);
        ev.insert(format!("m{m}.bound"), bound);
    }
    Ok(TestVerdict {
        test: TestKind::Rate,
        decision: Decision::from_accept(accept),
        evidence: ev,
        at_time: t,
    })
}

pub fn threshold_test(
    sample: &SamplePath,
    gamma: f64,
    schedule: &ParameterSchedule,
    t: u64,
    options: &RunOptions,
) -> Result<TestVerdict> {
    let mut cache = EstimateCache::new(sample, options.solver);
    strong_threshold(&mut cache, gamma, schedule, t, options, TestKind::Threshold)
}

pub fn threshold_test_with_cache(
    cache: &mut EstimateCache<'_>,
    gamma: f64,
    schedule: &ParameterSchedule,
    t: u64,
    options: &RunOptions,
) -> Result<TestVerdict> {
    strong_threshold(cache, gamma, schedule, t, options, TestKind::Threshold)
}

/// Threshold test for alpha at `gamma = 0`; `+1` means the sample is
/// consistent with independence.
pub fn independence_test(
    sample: &SamplePath,
    schedule: &ParameterSchedule,
    t: u64,
    options: &RunOptions,
) -> Result<TestVerdict> {
    let options = RunOptions {
        kind: MixingKind::Alpha,
        ..*options
    };
    let mut cache = EstimateCache::new(sample, options.solver);
    strong_threshold(&mut cache, 0.0, schedule, t, &options, TestKind::Independence)
}

fn strong_threshold(
    cache: &mut EstimateCache<'_>,
    gamma: f64,
    schedule: &ParameterSchedule,
    t: u64,
    options: &RunOptions,
    test: TestKind,
) -> Result<TestVerdict> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameters(format!("threshold gamma={gamma} must be a finite value >= 0")));
    }
    let t = t.max(1);
    let run = run_with_cache(cache, schedule, t, options, Estimator::Strong)?;
    if let Some(cut) = run.truncated {
        return Err(Error::InsufficientSample {
            required: cut.required_length.unwrap_or(u128::MAX),
            available: cache.sample().len(),
        });
    }
    let last = run.records.last().expect("t >= 1 steps recorded");
    let zeta = schedule.zeta(t);
    Ok(TestVerdict {
        test,
        decision: Decision::from_accept(last.estimate <= gamma + zeta),
        evidence: evidence([
            ("estimate", last.estimate),
            ("gamma", gamma),
            ("zeta_t", zeta),
            ("theta_t", last.theta),
        ]),
        at_time: t,
    })
}
