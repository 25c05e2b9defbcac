//! Seeded generators and the exact oracle for finite Markov chains.
//!
//! A [`FiniteChain`] embeds its states as points of `[0, 1]`. For such a
//! chain the true cylinder probabilities, dependence matrices and
//! finite-level coefficients can be computed exactly by dynamic programming
//! over atoms; the gap is marginalized with a matrix power of the
//! transition.

use std::io::BufRead;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::{BlockParams, DependenceMatrix};
use crate::error::{Error, Result};
use crate::grid::cell_of;
use crate::sample::SamplePath;
use crate::solver::{bilinear_sup_exact, half_abs_sum};

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteChain {
    states: Vec<f64>,
    transition: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

/// Midpoints of the first `count` atoms at `level`.
pub fn midpoint_states(count: usize, level: u32) -> Result<Vec<f64>> {
    let side = 1usize << level.min(30);
    if count == 0 || count > side {
        return Err(Error::InvalidChain(format!(
            "{count} states do not fit in distinct level-{level} atoms"
        )));
    }
    Ok((0..count).map(|i| (i as f64 + 0.5) / side as f64).collect())
}

impl FiniteChain {
    /// Builds a chain started from its stationary distribution.
    pub fn new(states: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        validate_shape(&states, &transition)?;
        let initial = stationary(&transition)?;
        Self::with_initial(states, transition, initial)
    }

    pub fn with_initial(states: Vec<f64>, transition: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self> {
        validate_shape(&states, &transition)?;
        let k = states.len();
        if initial.len() != k {
            return Err(Error::InvalidChain("initial distribution has the wrong length".into()));
        }
        if initial.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::InvalidChain("initial distribution has a negative entry".into()));
        }
        for s in 0..k {
            let next: f64 = (0..k).map(|r| initial[r] * transition[r][s]).sum();
            if (next - initial[s]).abs() > STATIONARY_TOL {
                return Err(Error::InvalidChain(format!(
                    "initial distribution is not stationary at state {s} ({next} vs {})",
                    initial[s]
                )));
            }
        }
        Ok(Self {
            states,
            transition,
            initial,
        })
    }

    /// Two states at the midpoints of the lowest and highest atoms of
    /// `level`, leaving state 0 with probability `p` and state 1 with `q`.
    pub fn two_state(p: f64, q: f64, level: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidChain(format!("switch probabilities {p}, {q} outside [0, 1]")));
        }
        let side = (1u64 << level.min(30)) as f64;
        let states = vec![0.5 / side, 1.0 - 0.5 / side];
        Self::new(states, vec![vec![1.0 - p, p], vec![q, 1.0 - q]])
    }

    /// Independent draws from `weights` placed at level midpoints.
    pub fn iid(weights: &[f64], level: u32) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) || total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidChain("weights must be nonnegative and not all zero".into()));
        }
        let row: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let states = midpoint_states(weights.len(), level)?;
        Self::with_initial(states, vec![row.clone(); weights.len()], row)
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Parses a chain file: a `states=v1,v2,...` line and one whitespace
    /// separated transition row per line. `#` starts a comment.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut states = None;
        let mut rows = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let text = line.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            if let Some(rest) = text.strip_prefix("states=") {
                let values = rest
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| parse_err(format!("{v:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                states = Some(values);
            } else {
                let row = text
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|e| parse_err(format!("{v:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                rows.push(row);
            }
        }
        let states = states.ok_or_else(|| Error::InvalidChain("missing states= line".into()))?;
        Self::new(states, rows)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(std::io::BufReader::new(file))
    }

    fn cells(&self, level: u32) -> Vec<usize> {
        self.states.iter().map(|&v| cell_of(v, level) as usize).collect()
    }
}

fn validate_shape(states: &[f64], transition: &[Vec<f64>]) -> Result<()> {
    let k = states.len();
    if k == 0 {
        return Err(Error::InvalidChain("a chain needs at least one state".into()));
    }
    if let Some(v) = states.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidChain(format!("state value {v} outside [0, 1]")));
    }
    if transition.len() != k || transition.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidChain(format!("transition matrix must be {k}x{k}")));
    }
    for (r, row) in transition.iter().enumerate() {
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidChain(format!("row {r} has an entry outside [0, 1]")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidChain(format!("row {r} sums to {sum}")));
        }
    }
    Ok(())
}

/// Solves `pi P = pi`, `sum(pi) = 1`. Fails when the solution is not unique.
fn stationary(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = transition.len();
    // rows of (P^T - I), last one replaced by the normalization
    let mut a = DMatrix::from_fn(k, k, |r, c| transition[c][r] - if r == c { 1.0 } else { 0.0 });
    for c in 0..k {
        a[(k - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidChain("stationary distribution is not unique".into()))?;
    let pi: Vec<f64> = pi.iter().map(|&p| if p.abs() < 1e-15 { 0.0 } else { p }).collect();
    if pi.iter().any(|&p| p < -STATIONARY_TOL || !p.is_finite()) {
        return Err(Error::InvalidChain("stationary distribution is not unique".into()));
    }
    Ok(pi.into_iter().map(|p| p.max(0.0)).collect())
}

// ---------------------------------------------------------------------------
// Generators

pub fn gen_iid(length: usize, seed: u64) -> Result<SamplePath> {
    check_length(length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SamplePath::new((0..length).map(|_| rng.random::<f64>()).collect())
}

pub fn gen_chain(chain: &FiniteChain, length: usize, seed: u64) -> Result<SamplePath> {
    check_length(length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weighted = |w: &[f64]| {
        WeightedIndex::new(w).map_err(|e| Error::InvalidChain(format!("cannot sample row: {e}")))
    };
    let start = weighted(&chain.initial)?;
    let rows = chain
        .transition
        .iter()
        .map(|row| weighted(row))
        .collect::<Result<Vec<_>>>()?;
    let mut state = start.sample(&mut rng);
    let mut values = Vec::with_capacity(length);
    values.push(chain.states[state]);
    for _ in 1..length {
        state = rows[state].sample(&mut rng);
        values.push(chain.states[state]);
    }
    SamplePath::new(values)
}

/// Moving average of `q + 1` consecutive i.i.d. uniforms. Observations more
/// than `q` steps apart are independent.
pub fn gen_ma(q: usize, length: usize, seed: u64) -> Result<SamplePath> {
    check_length(length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..length + q).map(|_| rng.random::<f64>()).collect();
    let values = noise
        .windows(q + 1)
        .map(|w| (w.iter().sum::<f64>() / (q + 1) as f64).clamp(0.0, 1.0))
        .collect();
    SamplePath::new(values)
}

fn check_length(length: usize) -> Result<()> {
    if length == 0 {
        return Err(Error::InvalidParameters("length must be at least 1".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact oracle

/// Probability of observing the state sequence `word` at any fixed time.
pub fn exact_cylinder_prob(chain: &FiniteChain, word: &[usize]) -> Result<f64> {
    let Some(&first) = word.first() else {
        return Err(Error::InvalidParameters("word must be non-empty".into()));
    };
    if let Some(&bad) = word.iter().find(|&&s| s >= chain.len()) {
        return Err(Error::AtomOutOfRange {
            index: bad,
            count: chain.len(),
        });
    }
    let mut p = chain.initial[first];
    for w in word.windows(2) {
        p *= chain.transition[w[0]][w[1]];
    }
    Ok(p)
}

/// Chain data in a generic numeric type.
struct ChainData<T> {
    cells: Vec<usize>,
    transition: Vec<Vec<T>>,
    initial: Vec<T>,
}

fn mat_mul<T: Num + Clone>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    let k = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..k)
                .map(|c| {
                    row.iter()
                        .zip(b)
                        .fold(T::zero(), |acc, (x, brow)| acc + x.clone() * brow[c].clone())
                })
                .collect()
        })
        .collect()
}

fn mat_pow<T: Num + Clone>(p: &[Vec<T>], e: u32) -> Vec<Vec<T>> {
    let k = p.len();
    let mut out: Vec<Vec<T>> = (0..k)
        .map(|r| (0..k).map(|c| if r == c { T::one() } else { T::zero() }).collect())
        .collect();
    for _ in 0..e {
        out = mat_mul(&out, p);
    }
    out
}

/// Extends a table `[atom prefix][state]` by `len` further coordinates.
/// The first coordinate is taken from `start` (already weighted).
fn word_table<T: Num + Clone>(data: &ChainData<T>, start: &[T], len: u32, side: usize) -> Vec<Vec<T>> {
    let k = data.cells.len();
    let mut width = side;
    let mut table: Vec<Vec<T>> = vec![vec![T::zero(); k]; side];
    for (s, w) in start.iter().enumerate() {
        table[data.cells[s]][s] = w.clone();
    }
    for _ in 1..len {
        let mut next = vec![vec![T::zero(); k]; width * side];
        for (prefix, row) in table.iter().enumerate() {
            for (s, w) in row.iter().enumerate() {
                if w.is_zero() {
                    continue;
                }
                for (s2, p) in data.transition[s].iter().enumerate() {
                    let idx = prefix + data.cells[s2] * width;
                    next[idx][s2] = next[idx][s2].clone() + w.clone() * p.clone();
                }
            }
        }
        table = next;
        width *= side;
    }
    table
}

/// Exact dependence matrix rows, generic over the arithmetic.
fn dependence_rows<T: Num + Clone>(data: &ChainData<T>, params: BlockParams) -> Vec<Vec<T>> {
    let k = data.cells.len();
    let side = 1usize << params.level;
    // past: (atom, last state) with stationary start
    let past = word_table(data, &data.initial, params.j, side);
    // future given its first state
    let gap = mat_pow(&data.transition, params.m + 1);
    let fut_len = params.future_len();
    let fut_atoms = side.pow(fut_len);
    let mut future = vec![vec![T::zero(); fut_atoms]; k];
    for (s, row) in future.iter_mut().enumerate() {
        let mut e = vec![T::zero(); k];
        e[s] = T::one();
        for (b, by_state) in word_table(data, &e, fut_len, side).iter().enumerate() {
            row[b] = by_state.iter().fold(T::zero(), |acc, v| acc + v.clone());
        }
    }
    let reach = mat_mul(&past, &gap);
    let joint = mat_mul(&reach, &future);
    let pa: Vec<T> = past.iter().map(|r| r.iter().fold(T::zero(), |a, v| a + v.clone())).collect();
    let fb: Vec<T> = mat_mul(std::slice::from_ref(&data.initial), &future).remove(0);
    joint
        .into_iter()
        .zip(&pa)
        .map(|(row, a)| {
            row.into_iter()
                .zip(&fb)
                .map(|(j, b)| j - a.clone() * b.clone())
                .collect()
        })
        .collect()
}

/// True dependence matrix of the chain for the given block layout.
pub fn exact_dependence_matrix(chain: &FiniteChain, n: u32, m: u32, j: u32, level: u32) -> Result<DependenceMatrix> {
    let params = BlockParams::new(n, m, j, level)?;
    let data = ChainData {
        cells: chain.cells(level),
        transition: chain.transition.clone(),
        initial: chain.initial.clone(),
    };
    let rows = dependence_rows(&data, params);
    let (r, c) = (rows.len(), rows.first().map_or(0, Vec::len));
    Ok(DependenceMatrix::with_meta(r, c, rows.into_iter().flatten().collect(), params, None))
}

/// Exact finite-level coefficients: the maximum over splits of the subset
/// supremum (alpha) and of the half absolute sum (beta).
pub fn exact_level_coefficients(chain: &FiniteChain, n: u32, level: u32, m: u32) -> Result<(f64, f64)> {
    split_range(n, m)?;
    let mut alpha = 0.0f64;
    let mut beta = 0.0f64;
    for j in 1..=n - m - 1 {
        let d = exact_dependence_matrix(chain, n, m, j, level)?;
        alpha = alpha.max(bilinear_sup_exact(&d)?.value);
        beta = beta.max(half_abs_sum(&d));
    }
    Ok((alpha, beta))
}

fn split_range(n: u32, m: u32) -> Result<()> {
    if m == 0 || n < m + 2 {
        return Err(Error::InvalidParameters(format!(
            "need m >= 1 and n >= m + 2 (got n={n}, m={m})"
        )));
    }
    Ok(())
}

/// Largest side (in atoms) accepted by the rational oracle's enumeration.
pub const RATIONAL_ENUM_CAP: usize = 12;

/// [`exact_level_coefficients`] in exact rational arithmetic.
///
/// The transition entries are taken as the exact rationals of their `f64`
/// values with each row renormalized to sum to one, so the stationary
/// distribution and every matrix entry are exact. Returns `(alpha, beta)`.
pub fn exact_level_coefficients_rational(
    chain: &FiniteChain,
    n: u32,
    level: u32,
    m: u32,
) -> Result<(BigRational, BigRational)> {
    split_range(n, m)?;
    let transition: Vec<Vec<BigRational>> = chain
        .transition
        .iter()
        .map(|row| {
            let exact: Vec<BigRational> = row.iter().map(|&p| to_rational(p)).collect();
            let sum = exact.iter().fold(BigRational::zero(), |a, v| a + v);
            exact.into_iter().map(|v| v / &sum).collect()
        })
        .collect();
    let initial = rational_stationary(&transition)?;
    let data = ChainData {
        cells: chain.cells(level),
        transition,
        initial,
    };
    let mut alpha = BigRational::zero();
    let mut beta = BigRational::zero();
    for j in 1..=n - m - 1 {
        let params = BlockParams::new(n, m, j, level)?;
        let rows = dependence_rows(&data, params);
        let a = rational_sup(&rows)?;
        let b = rows
            .iter()
            .flatten()
            .fold(BigRational::zero(), |acc, v| acc + v.abs())
            / BigRational::from_integer(BigInt::from(2));
        if a > alpha {
            alpha = a;
        }
        if b > beta {
            beta = b;
        }
    }
    Ok((alpha, beta))
}

fn to_rational(p: f64) -> BigRational {
    BigRational::from_float(p).unwrap_or_else(BigRational::zero)
}

/// Gauss-Jordan elimination for `pi P = pi`, `sum(pi) = 1`.
fn rational_stationary(p: &[Vec<BigRational>]) -> Result<Vec<BigRational>> {
    let k = p.len();
    let mut a: Vec<Vec<BigRational>> = (0..k)
        .map(|r| {
            let mut row: Vec<BigRational> = (0..k)
                .map(|c| {
                    let v = p[c][r].clone();
                    if r == c {
                        v - BigRational::one()
                    } else {
                        v
                    }
                })
                .collect();
            row.push(BigRational::zero());
            row
        })
        .collect();
    a[k - 1] = vec![BigRational::one(); k + 1];
    for col in 0..k {
        let pivot = (col..k)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::InvalidChain("stationary distribution is not unique".into()))?;
        a.swap(col, pivot);
        let inv = BigRational::one() / &a[col][col];
        for v in a[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=k {
                    let delta = &f * &a[col][c];
                    a[r][c] = &a[r][c] - delta;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[k].clone()).collect())
}

/// Subset supremum by enumerating row subsets of the smaller side; for a
/// fixed row set the best column set takes all positive or all negative
/// column sums.
fn rational_sup(rows: &[Vec<BigRational>]) -> Result<BigRational> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    let transposed;
    let (mat, r, c) = if r <= c {
        (rows, r, c)
    } else {
        transposed = (0..c)
            .map(|j| rows.iter().map(|row| row[j].clone()).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        (&transposed[..], c, r)
    };
    if r > RATIONAL_ENUM_CAP {
        return Err(Error::SolverCapExceeded {
            side: r,
            cap: RATIONAL_ENUM_CAP,
        });
    }
    let mut best = BigRational::zero();
    for mask in 1usize..(1 << r) {
        let mut pos = BigRational::zero();
        let mut neg = BigRational::zero();
        for col in 0..c {
            let s = (0..r)
                .filter(|i| mask >> i & 1 == 1)
                .fold(BigRational::zero(), |acc, i| acc + &mat[i][col]);
            if s.is_positive() {
                pos += s;
            } else {
                neg -= s;
            }
        }
        for v in [pos, neg] {
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn sym(p: f64) -> FiniteChain {
        FiniteChain::two_state(p, p, 1).unwrap()
    }

    #[test]
    fn chain_validation() {
        assert!(FiniteChain::new(vec![0.2, 0.7], vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(FiniteChain::new(vec![0.2, 1.7], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
        assert!(FiniteChain::new(vec![0.2], vec![vec![0.5, 0.5]]).is_err());
        // reducible: two absorbing states
        assert!(FiniteChain::new(vec![0.2, 0.7], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(FiniteChain::with_initial(
            vec![0.2, 0.7],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            vec![0.9, 0.1]
        )
        .is_err());
        let c = FiniteChain::two_state(0.1, 0.3, 1).unwrap();
        assert!((c.initial()[0] - 0.75).abs() < 1e-12);
        assert_eq!(c.states(), &[0.25, 0.75]);
    }

    #[test]
    fn chain_file() {
        let text = "# two states\nstates=0.25, 0.75\n0.8 0.2\n0.2 0.8 # symmetric\n";
        let c = FiniteChain::parse(text.as_bytes()).unwrap();
        assert_eq!(c, sym(0.2));
        assert!(FiniteChain::parse("0.5 0.5\n0.5 0.5\n".as_bytes()).is_err());
        assert!(matches!(
            FiniteChain::parse("states=0.1,0.9\n0.5 x\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_iid(5, 7).unwrap(), gen_iid(5, 7).unwrap());
        assert_ne!(gen_iid(5, 7).unwrap(), gen_iid(5, 8).unwrap());
        let c = sym(0.2);
        assert_eq!(gen_chain(&c, 50, 2).unwrap(), gen_chain(&c, 50, 2).unwrap());
        let ma = gen_ma(2, 10, 3).unwrap();
        assert_eq!(ma.len(), 10);
        assert!(ma.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(gen_iid(0, 1).is_err());
    }

    #[test]
    fn chain_sample_visits_states_at_stationary_rate() {
        let c = FiniteChain::two_state(0.1, 0.3, 1).unwrap();
        let x = gen_chain(&c, 200_000, 11).unwrap();
        let low = x.values().iter().filter(|&&v| v == 0.25).count() as f64 / x.len() as f64;
        assert!((low - 0.75).abs() < 0.01, "{low}");
    }

    #[test]
    fn cylinder_probabilities() {
        let c = sym(0.2);
        assert!((exact_cylinder_prob(&c, &[0, 0]).unwrap() - 0.4).abs() < 1e-15);
        assert!((exact_cylinder_prob(&c, &[1]).unwrap() - 0.5).abs() < 1e-15);
        let iid = FiniteChain::iid(&[0.3, 0.7], 1).unwrap();
        let p = exact_cylinder_prob(&iid, &[0, 1, 1]).unwrap();
        assert!((p - 0.3 * 0.7 * 0.7).abs() < 1e-15);
        assert!(exact_cylinder_prob(&c, &[]).is_err());
        assert!(exact_cylinder_prob(&c, &[0, 2]).is_err());
    }

    #[test]
    fn symmetric_chain_matrix() {
        let d = exact_dependence_matrix(&sym(0.2), 3, 1, 1, 1).unwrap();
        let expected = [[0.09, -0.09], [-0.09, 0.09]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((d.get(a, b) - expected[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matrix_matches_brute_force_over_words() {
        // three-state chain on a level-2 grid, n=5, m=1, j=2
        let c = FiniteChain::new(
            vec![0.1, 0.4, 0.9],
            vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.4, 0.4, 0.2]],
        )
        .unwrap();
        let (n, m, j, level) = (5u32, 1u32, 2u32, 2u32);
        let d = exact_dependence_matrix(&c, n, m, j, level).unwrap();
        let side = 4usize;
        let cells: Vec<usize> = c.states().iter().map(|&v| cell_of(v, level) as usize).collect();
        let jp = (n - m - j) as usize;
        let (rows, cols) = (side.pow(j), side.pow(jp as u32));
        let mut joint = vec![0.0; rows * cols];
        let mut pa = vec![0.0; rows];
        let mut fb = vec![0.0; cols];
        let k = 3usize;
        for code in 0..k.pow(n) {
            let word: Vec<usize> = (0..n as usize).map(|i| code / k.pow(i as u32) % k).collect();
            let p = exact_cylinder_prob(&c, &word).unwrap();
            let atom = |ws: &[usize]| ws.iter().rev().fold(0usize, |acc, &s| acc * side + cells[s]);
            let a = atom(&word[..j as usize]);
            let b = atom(&word[(j + m) as usize..]);
            joint[a * cols + b] += p;
            pa[a] += p;
            fb[b] += p;
        }
        for a in 0..rows {
            for b in 0..cols {
                let want = joint[a * cols + b] - pa[a] * fb[b];
                assert!((d.get(a, b) - want).abs() < 1e-12, "({a},{b})");
            }
        }
    }

    #[test]
    fn identical_rows_give_zero_matrix() {
        let c = FiniteChain::iid(&[0.2, 0.5, 0.3], 2).unwrap();
        let d = exact_dependence_matrix(&c, 4, 1, 1, 2).unwrap();
        assert!(d.entries().iter().all(|v| v.abs() < 1e-15));
        let (a, b) = exact_level_coefficients(&c, 4, 2, 1).unwrap();
        assert!(a < 1e-15 && b < 1e-15);
        let (ra, rb) = exact_level_coefficients_rational(&c, 4, 2, 1).unwrap();
        assert!(ra.is_zero() && rb.is_zero());
    }

    #[test]
    fn level_coefficients() {
        let (a, b) = exact_level_coefficients(&sym(0.2), 3, 1, 1).unwrap();
        assert!((a - 0.09).abs() < 1e-12 && (b - 0.18).abs() < 1e-12);
        let (a, b) = exact_level_coefficients(&sym(0.05), 3, 1, 1).unwrap();
        assert!((a - 0.2025).abs() < 1e-12 && (b - 0.405).abs() < 1e-12);
    }

    #[test]
    fn rational_oracle_agrees() {
        for (n, level, m) in [(3, 1, 1), (4, 1, 1), (5, 1, 2), (3, 2, 1)] {
            let c = FiniteChain::two_state(0.2, 0.35, level).unwrap();
            let (a, b) = exact_level_coefficients(&c, n, level, m).unwrap();
            let (ra, rb) = exact_level_coefficients_rational(&c, n, level, m).unwrap();
            assert!((ra.to_f64().unwrap() - a).abs() < 1e-12);
            assert!((rb.to_f64().unwrap() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ma_gap_beyond_order_is_independent() {
        // X_t and X_{t+2} share no noise term
        let x = gen_ma(1, 200_000, 5).unwrap();
        let y = x.values();
        let mut joint = [[0u32; 2]; 2];
        for t in 0..y.len() - 2 {
            joint[(y[t] >= 0.5) as usize][(y[t + 2] >= 0.5) as usize] += 1;
        }
        let total = (y.len() - 2) as f64;
        let p00 = joint[0][0] as f64 / total;
        let p0 = (joint[0][0] + joint[0][1]) as f64 / total;
        let q0 = (joint[0][0] + joint[1][0]) as f64 / total;
        assert!((p00 - p0 * q0).abs() < 0.01);
    }
}
