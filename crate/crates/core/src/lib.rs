//! Estimation of alpha- and beta-mixing coefficients of a stationary process
//! from a single sample path, with sequential estimators of their l1 norms
//! and hypothesis tests built on them.
//!
//! Observations live in `[0, 1]`. Each is discretized on a dyadic grid of
//! level `ell`; blocks of `n` consecutive observations are split into a past
//! of length `j`, a gap of length `m` and a future, and the empirical
//! dependence between past and future atoms is summarized by a
//! [`DependenceMatrix`]. Its subset supremum estimates alpha, half its
//! absolute sum estimates beta.
//!
//! ```
//! use mixcoef::{alpha_hat_fixed, gen_chain, FiniteChain, SolverConfig};
//!
//! let chain = FiniteChain::two_state(0.2, 0.2, 1).unwrap();
//! let x = gen_chain(&chain, 30_000, 7).unwrap();
//! let a = alpha_hat_fixed(&x, 10_000, 3, 1, 1, &SolverConfig::exact()).unwrap();
//! assert!((a.value - 0.09).abs() < 0.03);
//! ```

pub mod empirical;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod hypothesis;
pub mod sample;
pub mod schedule;
pub mod sequential;
pub mod solver;
pub mod synthetic;
pub mod verdict;

pub use empirical::{
    block_counts, build_dependence_matrix, empirical_block_measure, joint_block_measure,
    BlockParams, DependenceMatrix,
};
pub use error::{Error, Result};
pub use estimators::{
    alpha_hat_fixed, beta_hat_fixed, constant_c, constant_c_tilde, estimate_pair, kappa_t,
    tau_t, theta_fixed, theta_t, BlockBudget, BlockCount, DyadicConstant, EstimateCache,
    MixingEstimate, MixingKind, ThetaEstimate,
};
pub use grid::{atom_of, AtomSet, DyadicGrid};
pub use hypothesis::{independence_test, rate_test, threshold_test, RateFunction, Tail};
pub use sample::{read_sample, validate_sample, SamplePath};
pub use schedule::{ParameterSchedule, ScheduleConfig, ScheduleValues};
pub use sequential::{
    dense_enumeration, psi_step, run_strong, run_weak, visit_schedule, xi_step, BitLedger,
    Estimator, RunOptions, SequentialRun, StepRecord,
};
pub use solver::{
    bilinear_sup_exact, bilinear_sup_heuristic, half_abs_sum, SolverConfig, SolverMode,
    SupResult,
};
pub use synthetic::{
    exact_cylinder_prob, exact_dependence_matrix, exact_level_coefficients, gen_chain, gen_iid,
    gen_ma, FiniteChain,
};
pub use verdict::{Decision, TestKind, TestVerdict};
