//! Dyadic partitions of the unit cube.
//!
//! A [`DyadicGrid`] with dimension `k` and level `l` splits `[0,1]^k` into
//! `2^(k*l)` cubes of side `2^-l`. Cubes are half-open except along the top
//! face of each coordinate: the value `1.0` belongs to the topmost cell so the
//! cubes partition the closed cube.
//!
//! Atoms are addressed by a mixed-radix, little-endian index: coordinate 0 is
//! the least significant digit, each digit in `0..2^l`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported `k * level` (atoms per grid = `2^(k*level)`).
pub const MAX_GRID_BITS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    dim: u32,
    level: u32,
}

impl DyadicGrid {
    pub fn new(dim: u32, level: u32) -> Result<Self> {
        if dim == 0 || level == 0 {
            return Err(Error::InvalidParameters(format!(
                "grid dimension and level must be positive (got k={dim}, level={level})"
            )));
        }
        match dim.checked_mul(level) {
            Some(bits) if bits <= MAX_GRID_BITS => Ok(Self { dim, level }),
            _ => Err(Error::InvalidParameters(format!(
                "grid with k={dim}, level={level} has more than 2^{MAX_GRID_BITS} atoms"
            ))),
        }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Cells per coordinate, `2^level`.
    pub fn side(&self) -> usize {
        1usize << self.level
    }

    pub fn atom_count(&self) -> usize {
        1usize << (self.dim * self.level)
    }

    /// Index of the cube containing `x`.
    pub fn atom_of(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim as usize {
            return Err(Error::InvalidParameters(format!(
                "point has {} coordinates, grid has dimension {}",
                x.len(),
                self.dim
            )));
        }
        let mut index = 0usize;
        for (pos, &v) in x.iter().enumerate().rev() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain { index: pos, value: v });
            }
            index = (index << self.level) | cell_of(v, self.level) as usize;
        }
        Ok(index)
    }

    /// Per-coordinate cell indices of an atom, least significant first.
    pub fn digits(&self, atom: usize) -> Vec<u32> {
        let mask = self.side() - 1;
        (0..self.dim)
            .map(|j| ((atom >> (j * self.level)) & mask) as u32)
            .collect()
    }

    /// Lower corner of an atom's cube.
    pub fn lower_corner(&self, atom: usize) -> Vec<f64> {
        let width = 1.0 / self.side() as f64;
        self.digits(atom)
            .into_iter()
            .map(|c| c as f64 * width)
            .collect()
    }
}

/// Cell of a scalar in `[0,1]` at the given level, with `1.0` closed into the
/// top cell. The caller guarantees the range.
#[inline]
pub fn cell_of(v: f64, level: u32) -> u32 {
    let side = 1u64 << level;
    let c = (v * side as f64) as u64;
    c.min(side - 1) as u32
}

/// Free-function form of [`DyadicGrid::atom_of`].
pub fn atom_of(x: &[f64], grid: &DyadicGrid) -> Result<usize> {
    grid.atom_of(x)
}

/// A union of atoms of one grid; an element of the power set of the grid's
/// cubes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomSet {
    grid: DyadicGrid,
    members: BTreeSet<usize>,
}

impl AtomSet {
    pub fn new<I: IntoIterator<Item = usize>>(grid: DyadicGrid, members: I) -> Result<Self> {
        let count = grid.atom_count();
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&a| a >= count) {
            return Err(Error::AtomOutOfRange { index: bad, count });
        }
        Ok(Self { grid, members })
    }

    pub fn empty(grid: DyadicGrid) -> Self {
        Self {
            grid,
            members: BTreeSet::new(),
        }
    }

    pub fn full(grid: DyadicGrid) -> Self {
        Self {
            grid,
            members: (0..grid.atom_count()).collect(),
        }
    }

    pub fn singleton(grid: DyadicGrid, atom: usize) -> Result<Self> {
        Self::new(grid, [atom])
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.members.contains(&atom)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Dense membership mask over the grid's atoms.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.grid.atom_count()];
        for &a in &self.members {
            mask[a] = true;
        }
        mask
    }

    pub(crate) fn expect_grid(&self, dim: u32, level: u32) -> Result<()> {
        if self.grid.dim != dim || self.grid.level != level {
            return Err(Error::GridMismatch {
                expected_k: dim,
                expected_level: level,
                found_k: self.grid.dim,
                found_level: self.grid.level,
            });
        }
        Ok(())
    }
}
