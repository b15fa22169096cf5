//! Exact conditional tests for square contingency tables under
//! quasi-independence and quasi-symmetry, alone or stacked in layers.
//!
//! The crate builds model matrices and Markov bases for the single-table
//! models and for three ways of stacking `H` tables (common model, per-layer
//! models, per-layer models with fixed cross-layer cell sums), fits the
//! models by iterative proportional scaling, and estimates exact p-values
//! with a Metropolis walk over the fiber of the observed table. A
//! brute-force fiber enumerator provides ground truth on small inputs.

pub mod basis;
pub mod chisq;
pub mod error;
pub mod fiber;
pub mod fit;
pub mod model;
pub mod rank;
pub mod scalar;
pub mod table;
pub mod walk;

pub use basis::{
    is_df1, loop_move, m0_basis, m1_basis, m2_basis_two_layers, markov_basis, qi_graver_basis,
    qi_markov_basis, qs_markov_basis, symmetric_cycle_move, type2_moves, verify_move, FixedCells,
    Loop, MarkovBasis, Move,
};
pub use chisq::chi_square_sf;
pub use error::{Error, Result};
pub use fiber::{check_connectivity, enumerate_fiber, exact_pvalue_enumeration, Fiber};
pub use fit::{fit, g2_gof, g2_nested, FitConfig, FitResult, G2Report};
pub use model::{
    independence_matrix, nested_df, quasi_independence_matrix, quasi_symmetry_matrix, stack,
    BaseModel, ModelMatrix, ModelSpec, Stacking,
};
pub use scalar::{ExactInt, Real};
pub use table::{linearize, CellIndex, SquareTable, StackedTable, MAX_TABLE_SIZE};
pub use walk::{
    common_model_test, exact_pvalue, gof_test, log_hypergeometric_ratio, mh_step, Alternative, ChainState,
    TestResult, WalkConfig,
};

/// Fit result in double precision.
pub type FitResultF64 = FitResult<f64>;
/// Fit result in single precision.
pub type FitResultF32 = FitResult<f32>;
/// G² report in double precision.
pub type G2ReportF64 = G2Report<f64>;
/// Enumerated fiber with double-precision weights.
pub type FiberF64 = Fiber<f64>;
