//! Block empirical measures and the dependence matrix.
//!
//! Blocks never overlap. For a block length `n`, gap `m` and split `j`, block
//! `i` contributes its first `j` coordinates (the past) and its last
//! `j' = n - m - j` coordinates (the future); the `m` coordinates in between
//! are skipped. Marginal measures use their own non-overlapping blockings of
//! length `j` and `j'` starting at the first observation.
//!
//! All counting is integral; each matrix entry is formed with a single final
//! division so results do not depend on evaluation order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AtomSet, DyadicGrid};
use crate::sample::SamplePath;

/// Largest supported `(n - m) * level`, i.e. `log2(rows * cols)`.
pub const MAX_MATRIX_BITS: u32 = 24;

/// Shape parameters of a past/future split inside a length-`n` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockParams {
    pub n: u32,
    pub m: u32,
    pub j: u32,
    pub level: u32,
}

impl BlockParams {
    pub fn new(n: u32, m: u32, j: u32, level: u32) -> Result<Self> {
        if m == 0 || level == 0 {
            return Err(Error::InvalidParameters(format!(
                "gap and level must be positive (m={m}, level={level})"
            )));
        }
        if n < m + 2 {
            return Err(Error::InvalidParameters(format!(
                "block length n={n} leaves no room for a past and a future around gap m={m}; need n >= m + 2"
            )));
        }
        if j == 0 || j > n - m - 1 {
            return Err(Error::InvalidParameters(format!(
                "split j={j} must lie in 1..={} for n={n}, m={m}",
                n - m - 1
            )));
        }
        let span = (n - m) as u64 * level as u64;
        if span > MAX_MATRIX_BITS as u64 {
            return Err(Error::InvalidParameters(format!(
                "dependence matrix for n={n}, m={m}, level={level} would have 2^{span} entries (limit 2^{MAX_MATRIX_BITS})"
            )));
        }
        Ok(Self { n, m, j, level })
    }

    /// Length of the future block, `n - m - j`.
    pub fn future_len(&self) -> u32 {
        self.n - self.m - self.j
    }

    pub fn past_grid(&self) -> DyadicGrid {
        DyadicGrid::new(self.j, self.level).expect("validated block params")
    }

    pub fn future_grid(&self) -> DyadicGrid {
        DyadicGrid::new(self.future_len(), self.level).expect("validated block params")
    }
}

/// Joint probability minus product of marginals over (past atom, future atom)
/// pairs, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    params: Option<BlockParams>,
    blocks: Option<u64>,
}

impl DependenceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidParameters("ragged matrix rows".into()));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters("matrix entries must be finite".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            entries,
            params: None,
            blocks: None,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
            params: None,
            blocks: None,
        }
    }

    pub(crate) fn with_meta(
        rows: usize,
        cols: usize,
        entries: Vec<f64>,
        params: BlockParams,
        blocks: Option<u64>,
    ) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Self {
            rows,
            cols,
            entries,
            params: Some(params),
            blocks,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.cols + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.entries[a * self.cols..(a + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn params(&self) -> Option<BlockParams> {
        self.params
    }

    /// Number of sample blocks behind an empirical matrix; `None` for exact
    /// or hand-built matrices.
    pub fn blocks(&self) -> Option<u64> {
        self.blocks
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.cols.max(1)).map(<[f64]>::to_vec).take(self.rows).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for b in 0..self.cols {
            for a in 0..self.rows {
                entries.push(self.get(a, b));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
            params: None,
            blocks: self.blocks,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|a| self.row(a).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for a in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(a)) {
                *s += v;
            }
        }
        sums
    }

    /// Sum of the entries over `rows x cols`.
    pub fn subset_sum(&self, rows: &[usize], cols: &[usize]) -> f64 {
        rows.iter()
            .map(|&a| cols.iter().map(|&b| self.get(a, b)).sum::<f64>())
            .sum()
    }
}

#[inline]
fn block_atom(cells: &[u32], level: u32) -> usize {
    cells
        .iter()
        .rev()
        .fold(0usize, |acc, &c| (acc << level) | c as usize)
}

fn require(sample: &SamplePath, blocks: u64, len: u32) -> Result<()> {
    if blocks == 0 {
        return Err(Error::InvalidParameters("block count t must be positive".into()));
    }
    sample.ensure_len(blocks as u128 * len as u128)
}

/// Histogram of the atoms of the first `blocks` non-overlapping blocks of
/// length `k`.
pub fn block_counts(sample: &SamplePath, k: u32, level: u32, blocks: u64) -> Result<Vec<u64>> {
    let grid = DyadicGrid::new(k, level)?;
    require(sample, blocks, k)?;
    let cells = sample.cells(level, (blocks * k as u64) as usize);
    let mut counts = vec![0u64; grid.atom_count()];
    for block in cells.chunks_exact(k as usize) {
        counts[block_atom(block, level)] += 1;
    }
    Ok(counts)
}

/// Fraction of the first `t` length-`k` blocks that fall in the union of the
/// cubes of `set`.
pub fn empirical_block_measure(
    sample: &SamplePath,
    k: u32,
    level: u32,
    set: &AtomSet,
    t: u64,
) -> Result<f64> {
    set.expect_grid(k, level)?;
    let counts = block_counts(sample, k, level, t)?;
    let hits: u64 = set.members().map(|a| counts[a]).sum();
    Ok(hits as f64 / t as f64)
}

/// Joint past/future counts over the first `t` length-`n` blocks, row-major
/// (past atom major).
pub fn joint_counts(sample: &SamplePath, t: u64, params: BlockParams) -> Result<Vec<u64>> {
    let BlockParams { n, m, j, level } = params;
    require(sample, t, n)?;
    let future = params.future_len();
    let cols = 1usize << (future * level);
    let rows = 1usize << (j * level);
    let cells = sample.cells(level, (t * n as u64) as usize);
    let mut counts = vec![0u64; rows * cols];
    for block in cells.chunks_exact(n as usize) {
        let a = block_atom(&block[..j as usize], level);
        let b = block_atom(&block[(j + m) as usize..], level);
        counts[a * cols + b] += 1;
    }
    Ok(counts)
}

/// Fraction of the first `t` length-`n` blocks whose past lies in `past` and
/// whose future lies in `future`.
#[allow(clippy::too_many_arguments)]
pub fn joint_block_measure(
    sample: &SamplePath,
    t: u64,
    n: u32,
    m: u32,
    j: u32,
    level: u32,
    past: &AtomSet,
    future: &AtomSet,
) -> Result<f64> {
    let params = BlockParams::new(n, m, j, level)?;
    past.expect_grid(j, level)?;
    future.expect_grid(params.future_len(), level)?;
    let counts = joint_counts(sample, t, params)?;
    let cols = params.future_grid().atom_count();
    let future_members: Vec<usize> = future.members().collect();
    let hits: u64 = past
        .members()
        .map(|a| future_members.iter().map(|&b| counts[a * cols + b]).sum::<u64>())
        .sum();
    Ok(hits as f64 / t as f64)
}

/// Empirical dependence matrix for one `(t, n, m, j, level)` configuration.
pub fn build_dependence_matrix(
    sample: &SamplePath,
    t: u64,
    n: u32,
    m: u32,
    j: u32,
    level: u32,
) -> Result<DependenceMatrix> {
    let params = BlockParams::new(n, m, j, level)?;
    let joint = joint_counts(sample, t, params)?;
    let past = block_counts(sample, j, level, t)?;
    let future = block_counts(sample, params.future_len(), level, t)?;
    let rows = past.len();
    let cols = future.len();
    let tt = t as i128;
    let denom = (tt * tt) as f64;
    let mut entries = Vec::with_capacity(rows * cols);
    for (a, &pa) in past.iter().enumerate() {
        for (b, &fb) in future.iter().enumerate() {
            let num = joint[a * cols + b] as i128 * tt - pa as i128 * fb as i128;
            entries.push(num as f64 / denom);
        }
    }
    Ok(DependenceMatrix::with_meta(rows, cols, entries, params, Some(t)))
}
