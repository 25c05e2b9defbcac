//! Maximization of `|sum_{a in A, b in B} d[a][b]|` over row and column
//! subsets of a dependence matrix, and the half absolute sum.
//!
//! For a fixed column set the best row set is read off directly: take every
//! row with a positive restricted sum (or every row with a negative one for
//! the opposite sign). The exact solver enumerates the column subsets of the
//! smaller side in Gray-code order, updating row sums incrementally. The
//! heuristic alternates the same best-response step between rows and
//! columns from several starting column sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::DependenceMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_CAP: usize = 16;
pub const DEFAULT_RESTARTS: usize = 32;

/// Row and column sums are recomputed from scratch this often during Gray-code
/// enumeration to stop rounding drift.
const RESYNC_EVERY: usize = 1024;
const MAX_ASCENT_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub value: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub exact: bool,
}

impl SupResult {
    fn zero(exact: bool) -> Self {
        Self {
            value: 0.0,
            rows: Vec::new(),
            cols: Vec::new(),
            exact,
        }
    }

    /// `|sum|` over the reported sets, recomputed from the matrix.
    pub fn recompute(&self, d: &DependenceMatrix) -> f64 {
        d.subset_sum(&self.rows, &self.cols).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    Exact,
    Heuristic,
    Auto,
}

impl std::str::FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolverMode::Exact),
            "heuristic" => Ok(SolverMode::Heuristic),
            "auto" => Ok(SolverMode::Auto),
            other => Err(Error::InvalidParameters(format!(
                "unknown solver mode {other:?} (expected exact, heuristic or auto)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub exact_cap: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::Auto,
            exact_cap: DEFAULT_EXACT_CAP,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        Self {
            mode: SolverMode::Exact,
            ..Self::default()
        }
    }

    pub fn solve(&self, d: &DependenceMatrix) -> Result<SupResult> {
        let side = d.rows().min(d.cols());
        match self.mode {
            SolverMode::Exact => bilinear_sup_exact_with_cap(d, self.exact_cap),
            SolverMode::Heuristic => Ok(bilinear_sup_heuristic(d, self.restarts, self.seed)),
            SolverMode::Auto if side <= self.exact_cap => bilinear_sup_exact_with_cap(d, self.exact_cap),
            SolverMode::Auto => Ok(bilinear_sup_heuristic(d, self.restarts, self.seed)),
        }
    }
}

pub fn half_abs_sum(d: &DependenceMatrix) -> f64 {
    0.5 * d.entries().iter().map(|v| v.abs()).sum::<f64>()
}

pub fn bilinear_sup_exact(d: &DependenceMatrix) -> Result<SupResult> {
    bilinear_sup_exact_with_cap(d, DEFAULT_EXACT_CAP)
}

pub fn bilinear_sup_exact_with_cap(d: &DependenceMatrix, cap: usize) -> Result<SupResult> {
    let side = d.rows().min(d.cols());
    if side > cap || side >= usize::BITS as usize - 1 {
        return Err(Error::SolverCapExceeded { side, cap });
    }
    if side == 0 {
        return Ok(SupResult::zero(true));
    }
    // Enumerate subsets of the columns; transpose if the rows are fewer.
    let transposed = d.rows() < d.cols();
    let work = if transposed { d.transpose() } else { d.clone() };
    let (rows, cols) = (work.rows(), work.cols());

    let mut sums = vec![0.0f64; rows];
    let mut mask = 0usize;
    let mut best = (0.0f64, 0usize, 1.0f64);
    for step in 1..(1usize << cols) {
        let bit = step.trailing_zeros() as usize;
        mask ^= 1 << bit;
        if step % RESYNC_EVERY == 0 {
            restricted_row_sums(&work, mask, &mut sums);
        } else {
            let sign = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
            for (a, s) in sums.iter_mut().enumerate() {
                *s += sign * work.get(a, bit);
            }
        }
        let (pos, neg) = sums.iter().fold((0.0, 0.0), |(p, n), &s| {
            if s > 0.0 {
                (p + s, n)
            } else {
                (p, n - s)
            }
        });
        if pos > best.0 {
            best = (pos, mask, 1.0);
        }
        if neg > best.0 {
            best = (neg, mask, -1.0);
        }
    }

    let (_, best_mask, sign) = best;
    if best.0 <= 0.0 {
        return Ok(SupResult::zero(true));
    }
    restricted_row_sums(&work, best_mask, &mut sums);
    let picked_rows: Vec<usize> = (0..rows).filter(|&a| sign * sums[a] > 0.0).collect();
    let picked_cols: Vec<usize> = (0..cols).filter(|&b| best_mask >> b & 1 == 1).collect();
    let (row_set, col_set) = if transposed {
        (picked_cols, picked_rows)
    } else {
        (picked_rows, picked_cols)
    };
    let value = d.subset_sum(&row_set, &col_set).abs();
    Ok(SupResult {
        value,
        rows: row_set,
        cols: col_set,
        exact: true,
    })
}

fn restricted_row_sums(d: &DependenceMatrix, mask: usize, out: &mut [f64]) {
    for (a, s) in out.iter_mut().enumerate() {
        *s = d
            .row(a)
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, v)| v)
            .sum();
    }
}

/// Multi-start alternating ascent. Starts from the full column set and from
/// `restarts` random column sets drawn from `seed`, each for both signs.
/// Deterministic given its inputs; ties keep the earliest start.
pub fn bilinear_sup_heuristic(d: &DependenceMatrix, restarts: usize, seed: u64) -> SupResult {
    if d.rows() == 0 || d.cols() == 0 {
        return SupResult::zero(false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(restarts + 1);
    starts.push(vec![true; d.cols()]);
    for _ in 0..restarts {
        starts.push((0..d.cols()).map(|_| rng.random::<bool>()).collect());
    }

    let mut best: Option<(f64, Vec<bool>, Vec<bool>)> = None;
    for start in &starts {
        for sign in [1.0, -1.0] {
            let (value, rows, cols) = ascend(d, sign, start.clone());
            if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
                best = Some((value, rows, cols));
            }
        }
    }
    let (value, rows, cols) = best.expect("at least one start");
    if value <= 0.0 {
        return SupResult::zero(false);
    }
    let rows: Vec<usize> = (0..d.rows()).filter(|&a| rows[a]).collect();
    let cols: Vec<usize> = (0..d.cols()).filter(|&b| cols[b]).collect();
    let value = d.subset_sum(&rows, &cols).abs();
    SupResult {
        value,
        rows,
        cols,
        exact: false,
    }
}

/// Best-response ascent of `sign * sum_{R x C} d` from a column set.
fn ascend(d: &DependenceMatrix, sign: f64, mut cols: Vec<bool>) -> (f64, Vec<bool>, Vec<bool>) {
    let mut best_value = f64::NEG_INFINITY;
    let mut best_rows = vec![false; d.rows()];
    let mut best_cols = cols.clone();
    for _ in 0..MAX_ASCENT_STEPS {
        let rows: Vec<bool> = (0..d.rows())
            .map(|a| {
                let s: f64 = d.row(a).iter().zip(&cols).filter(|(_, &c)| c).map(|(v, _)| v).sum();
                sign * s > 0.0
            })
            .collect();
        let mut col_sums = vec![0.0f64; d.cols()];
        for a in (0..d.rows()).filter(|&a| rows[a]) {
            for (s, v) in col_sums.iter_mut().zip(d.row(a)) {
                *s += v;
            }
        }
        let next: Vec<bool> = col_sums.iter().map(|&s| sign * s > 0.0).collect();
        let value: f64 = col_sums.iter().map(|&s| (sign * s).max(0.0)).sum();
        if value <= best_value {
            break;
        }
        best_value = value;
        best_rows = rows;
        best_cols = next.clone();
        if next == cols {
            break;
        }
        cols = next;
    }
    (best_value.max(0.0), best_rows, best_cols)
}
