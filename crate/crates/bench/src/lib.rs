//! Fixtures shared by the benchmarks.

use mixcoef::{build_dependence_matrix, gen_chain, DependenceMatrix, FiniteChain, SamplePath};

pub fn sticky_chain() -> FiniteChain {
    FiniteChain::two_state(0.2, 0.2, 1).expect("valid chain")
}

pub fn chain_sample(len: usize, seed: u64) -> SamplePath {
    gen_chain(&sticky_chain(), len, seed).expect("valid length")
}

/// Empirical matrix with `2^(level*j)` rows, built from a chain sample.
pub fn chain_matrix(t: u64, n: u32, j: u32, level: u32) -> DependenceMatrix {
    let x = chain_sample(t as usize * n as usize, 11);
    build_dependence_matrix(&x, t, n, 1, j, level).expect("valid parameters")
}
