//! Mixing-coefficient estimators.
//!
//! * [`alpha_hat_fixed`] / [`beta_hat_fixed`]: for fixed block count `t`,
//!   block length `n`, level and gap `m`, the maximum over splits `j` of the
//!   subset-sup (alpha) or half absolute sum (beta) of the empirical
//!   dependence matrix.
//! * [`theta_fixed`] / [`theta_t`]: partial sums over gaps `1..=M`, the
//!   estimators of the l1 norms.
//! * [`constant_c`], [`constant_c_tilde`], [`tau_t`], [`kappa_t`]: the block
//!   budgets that make the scheduled estimators consistent. They grow doubly
//!   exponentially, so they are kept symbolic and only materialized when
//!   small enough; runs on real data normally use [`BlockBudget::Practical`].

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::empirical::{build_dependence_matrix, BlockParams};
use crate::error::{Error, Result};
use crate::sample::SamplePath;
use crate::schedule::ParameterSchedule;
use crate::solver::{half_abs_sum, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingKind {
    Alpha,
    Beta,
}

impl std::str::FromStr for MixingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(MixingKind::Alpha),
            "beta" => Ok(MixingKind::Beta),
            other => Err(Error::InvalidParameters(format!(
                "unknown coefficient kind {other:?} (expected alpha or beta)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub kind: MixingKind,
    pub m: u32,
    pub value: f64,
    pub t: u64,
    pub n: u32,
    pub level: u32,
    /// Split `j` attaining the maximum.
    pub split: u32,
    /// False when the heuristic solver stood in for the exact one on at least
    /// one split. Always true for beta.
    pub exact_solver: bool,
}

/// Both estimates for one configuration, computed from the same matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatePair {
    pub alpha: MixingEstimate,
    pub beta: MixingEstimate,
}

impl EstimatePair {
    pub fn get(&self, kind: MixingKind) -> &MixingEstimate {
        match kind {
            MixingKind::Alpha => &self.alpha,
            MixingKind::Beta => &self.beta,
        }
    }
}

pub fn estimate_pair(
    sample: &SamplePath,
    t: u64,
    n: u32,
    level: u32,
    m: u32,
    solver: &SolverConfig,
) -> Result<EstimatePair> {
    if n < m + 2 {
        return Err(Error::InvalidParameters(format!(
            "block length n={n} needs to be at least m + 2 = {} for gap m={m}",
            m + 2
        )));
    }
    BlockParams::new(n, m, 1, level)?;
    sample.ensure_len(t as u128 * n as u128)?;

    let mut alpha = (0.0f64, 1u32);
    let mut beta = (0.0f64, 1u32);
    let mut exact = true;
    for j in 1..=n - m - 1 {
        let d = build_dependence_matrix(sample, t, n, m, j, level)?;
        let sup = solver.solve(&d)?;
        exact &= sup.exact;
        if sup.value > alpha.0 {
            alpha = (sup.value, j);
        }
        let b = half_abs_sum(&d);
        if b > beta.0 {
            beta = (b, j);
        }
    }
    let make = |kind, (value, split): (f64, u32), exact_solver| MixingEstimate {
        kind,
        m,
        value: value.clamp(0.0, 1.0),
        t,
        n,
        level,
        split,
        exact_solver,
    };
    Ok(EstimatePair {
        alpha: make(MixingKind::Alpha, alpha, exact),
        beta: make(MixingKind::Beta, beta, true),
    })
}

pub fn alpha_hat_fixed(
    sample: &SamplePath,
    t: u64,
    n: u32,
    level: u32,
    m: u32,
    solver: &SolverConfig,
) -> Result<MixingEstimate> {
    estimate_pair(sample, t, n, level, m, solver).map(|p| p.alpha)
}

pub fn beta_hat_fixed(
    sample: &SamplePath,
    t: u64,
    n: u32,
    level: u32,
    m: u32,
    solver: &SolverConfig,
) -> Result<MixingEstimate> {
    estimate_pair(sample, t, n, level, m, solver).map(|p| p.beta)
}

/// Memoizes [`estimate_pair`] by `(t, n, level, m)` for one sample and
/// solver. Cached and fresh results are identical.
#[derive(Debug)]
pub struct EstimateCache<'a> {
    sample: &'a SamplePath,
    solver: SolverConfig,
    entries: HashMap<(u64, u32, u32, u32), EstimatePair>,
}

impl<'a> EstimateCache<'a> {
    pub fn new(sample: &'a SamplePath, solver: SolverConfig) -> Self {
        Self {
            sample,
            solver,
            entries: HashMap::new(),
        }
    }

    pub fn sample(&self) -> &'a SamplePath {
        self.sample
    }

    pub fn get(&mut self, t: u64, n: u32, level: u32, m: u32) -> Result<EstimatePair> {
        if let Some(hit) = self.entries.get(&(t, n, level, m)) {
            return Ok(hit.clone());
        }
        let pair = estimate_pair(self.sample, t, n, level, m, &self.solver)?;
        self.entries.insert((t, n, level, m), pair.clone());
        Ok(pair)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub kind: MixingKind,
    pub value: f64,
    pub terms: Vec<MixingEstimate>,
}

/// Sum of the gap-`m` estimates for `m = 1..=max_gap`.
pub fn theta_fixed(
    cache: &mut EstimateCache<'_>,
    t: u64,
    n: u32,
    level: u32,
    max_gap: u32,
    kind: MixingKind,
) -> Result<ThetaEstimate> {
    if max_gap == 0 {
        return Err(Error::InvalidParameters("M must be at least 1".into()));
    }
    let mut terms = Vec::with_capacity(max_gap as usize);
    for m in 1..=max_gap {
        terms.push(cache.get(t, n, level, m)?.get(kind).clone());
    }
    let value = terms.iter().map(|e| e.value).sum();
    Ok(ThetaEstimate { kind, value, terms })
}

// ---------------------------------------------------------------------------
// Constants and block budgets

/// An exact value `multiplier * 2^exponent`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicConstant {
    pub multiplier: u64,
    pub exponent: BigUint,
}

/// Exponents above this many bits are not materialized.
pub const MATERIALIZE_LIMIT_BITS: u64 = 1 << 20;

impl DyadicConstant {
    pub fn to_biguint(&self) -> Option<BigUint> {
        let e = self.exponent.to_u64().filter(|&e| e <= MATERIALIZE_LIMIT_BITS)?;
        Some(BigUint::from(self.multiplier) << e)
    }

    /// `log2` of the value, approximately.
    pub fn log2(&self) -> f64 {
        (self.multiplier as f64).log2() + self.exponent.to_f64().unwrap_or(f64::INFINITY)
    }
}

fn pow2_big(bits: u64) -> Result<BigUint> {
    if bits > MATERIALIZE_LIMIT_BITS {
        return Err(Error::InvalidParameters(format!(
            "exponent 2^{bits} is beyond the supported range"
        )));
    }
    Ok(BigUint::one() << bits)
}

fn check_positive(m: u32, level: u32, n: u32) -> Result<()> {
    if m == 0 || level == 0 || n == 0 {
        return Err(Error::InvalidParameters(format!(
            "constants need positive arguments (m={m}, level={level}, n={n})"
        )));
    }
    Ok(())
}

/// `C(m, level, n) = m * 2^(2^(n*level) + 2^(m*level + 1) + 1)`.
pub fn constant_c(m: u32, level: u32, n: u32) -> Result<DyadicConstant> {
    check_positive(m, level, n)?;
    let exponent = pow2_big(n as u64 * level as u64)?
        + pow2_big(m as u64 * level as u64 + 1)?
        + BigUint::one();
    Ok(DyadicConstant {
        multiplier: m as u64,
        exponent,
    })
}

/// `C~(m, level, k) = m * 2^(2^(2*k*level + 1) + 2^(m*level + 1) + 2)`.
pub fn constant_c_tilde(m: u32, level: u32, k: u32) -> Result<DyadicConstant> {
    check_positive(m, level, k)?;
    let exponent = pow2_big(2 * k as u64 * level as u64 + 1)?
        + pow2_big(m as u64 * level as u64 + 1)?
        + BigUint::from(2u32);
    Ok(DyadicConstant {
        multiplier: m as u64,
        exponent,
    })
}

/// A number of sample blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockCount {
    Finite(BigUint),
    /// Too large to write out; carries an approximate `log2`.
    Astronomical { log2: f64 },
}

impl BlockCount {
    pub fn to_u64(&self) -> Option<u64> {
        match self {
            BlockCount::Finite(v) => v.to_u64(),
            BlockCount::Astronomical { .. } => None,
        }
    }

    /// Observations needed to supply this many blocks of length `n`,
    /// saturating.
    pub fn required_len(&self, n: u32) -> u128 {
        match self {
            BlockCount::Finite(v) => v
                .to_u128()
                .and_then(|b| b.checked_mul(n as u128))
                .unwrap_or(u128::MAX),
            BlockCount::Astronomical { .. } => u128::MAX,
        }
    }
}

/// Where block counts come from: the consistency budgets `tau_t`/`kappa_t`,
/// or a fixed caller-supplied count per estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockBudget {
    Theoretical,
    Practical(u64),
}

/// Exponents beyond this are reported as [`BlockCount::Astronomical`].
const BUDGET_EXPONENT_LIMIT: u64 = 1 << 16;

/// `ceil(c / (divisor * eps^2 * delta))` with exact rational arithmetic on the
/// given `f64` values.
fn budget(c: &DyadicConstant, divisor: u64, eps: f64, delta: f64) -> Result<BlockCount> {
    let bad = || Error::InvalidParameters(format!("eps={eps} and delta={delta} must be positive and finite"));
    if !(eps > 0.0 && eps.is_finite() && delta > 0.0 && delta.is_finite()) {
        return Err(bad());
    }
    let small = c.exponent.to_u64().filter(|&e| e <= BUDGET_EXPONENT_LIMIT);
    let Some(e) = small else {
        let log2 = c.log2() - (divisor as f64).log2() - 2.0 * eps.log2() - delta.log2();
        return Ok(BlockCount::Astronomical { log2 });
    };
    let eps_r = BigRational::from_float(eps).ok_or_else(bad)?;
    let delta_r = BigRational::from_float(delta).ok_or_else(bad)?;
    let numer = BigRational::from_integer((BigUint::from(c.multiplier) << e).into());
    let denom = BigRational::from_integer(divisor.into()) * &eps_r * &eps_r * delta_r;
    let q = (numer / denom).ceil().to_integer();
    let v = q.to_biguint().unwrap_or_else(BigUint::zero);
    Ok(BlockCount::Finite(v))
}

/// Block count for the scheduled single-gap estimator at time `t`:
/// `C(m, ell_t, n_t) / (m eps_t^2 delta_t)` for alpha, with `C~` for beta.
pub fn tau_t(
    schedule: &ParameterSchedule,
    m: u32,
    t: u64,
    kind: MixingKind,
    mode: BlockBudget,
) -> Result<BlockCount> {
    if let BlockBudget::Practical(b) = mode {
        return Ok(BlockCount::Finite(b.into()));
    }
    let (ell, n) = (schedule.ell(t), schedule.n(t));
    let c = match kind {
        MixingKind::Alpha => constant_c(m, ell, n)?,
        MixingKind::Beta => constant_c_tilde(m, ell, n)?,
    };
    budget(&c, m as u64, schedule.eps(t), schedule.delta(t))
}

/// Block count for the scheduled partial sum at time `t`:
/// `C(M_t, ell_t, n_t) / (eps_t^2 delta_t)` for alpha, with `C~` for beta.
pub fn kappa_t(
    schedule: &ParameterSchedule,
    t: u64,
    kind: MixingKind,
    mode: BlockBudget,
) -> Result<BlockCount> {
    if let BlockBudget::Practical(b) = mode {
        return Ok(BlockCount::Finite(b.into()));
    }
    let (ell, n, max_gap) = (schedule.ell(t), schedule.n(t), schedule.max_gap(t));
    let c = match kind {
        MixingKind::Alpha => constant_c(max_gap, ell, n)?,
        MixingKind::Beta => constant_c_tilde(max_gap, ell, n)?,
    };
    budget(&c, 1, schedule.eps(t), schedule.delta(t))
}

/// Turns a budget into a usable block count, or reports the shortfall.
pub fn resolve_blocks(count: &BlockCount, n: u32, sample: &SamplePath) -> Result<u64> {
    let required = count.required_len(n);
    let blocks = count.to_u64().filter(|&b| b > 0);
    match blocks {
        Some(b) if required <= sample.len() as u128 => Ok(b),
        Some(_) | None if required > sample.len() as u128 => Err(Error::InsufficientSample {
            required,
            available: sample.len(),
        }),
        _ => Err(Error::InvalidParameters("block budget must be positive".into())),
    }
}

/// Scheduled single-gap estimate at time `t` (block count `tau_t`).
pub fn scheduled_estimate(
    cache: &mut EstimateCache<'_>,
    schedule: &ParameterSchedule,
    m: u32,
    t: u64,
    kind: MixingKind,
    mode: BlockBudget,
) -> Result<MixingEstimate> {
    let n = schedule.n(t);
    let blocks = resolve_blocks(&tau_t(schedule, m, t, kind, mode)?, n, cache.sample())?;
    Ok(cache.get(blocks, n, schedule.ell(t), m)?.get(kind).clone())
}

/// Scheduled l1-norm estimate at time `t` (block count `kappa_t`, gaps
/// `1..=M_t`).
pub fn theta_t(
    cache: &mut EstimateCache<'_>,
    schedule: &ParameterSchedule,
    t: u64,
    kind: MixingKind,
    mode: BlockBudget,
) -> Result<ThetaEstimate> {
    let n = schedule.n(t);
    let blocks = resolve_blocks(&kappa_t(schedule, t, kind, mode)?, n, cache.sample())?;
    theta_fixed(cache, blocks, n, schedule.ell(t), schedule.max_gap(t), kind)
}
