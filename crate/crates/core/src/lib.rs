//! Exact desk-scale workbench for oracle classification problems with group
//! structure: a hidden oracle drawn from a module of tables must be mapped to
//! the coset of a known submodule it lives in, using q quantum queries.
//!
//! Three independent routes to the optimal success probability are provided
//! and cross-checked:
//!
//! * `counting` enumerates canonical query pairs and computes the optimum as
//!   an exact rational (largest class of reachable quotient values over the
//!   number of cosets);
//! * `formulas` evaluates closed-form bounds for five named problem
//!   families (summation, interrogation, interpolation, evaluation,
//!   extrapolation);
//! * `simulator` builds the optimal measurement explicitly in complex double
//!   precision and also runs explicit single-round algorithms, including
//!   randomized ones, against every oracle.

pub mod algebra;
pub mod counting;
pub mod error;
pub mod formulas;
pub mod instance;
pub mod simulator;

pub use algebra::{enumerate_vectors, mod_inverse, ExactPhase, GroupElement, GroupSpec};
pub use counting::{count_optimal, enumerate_pairs, hz_of_pair, sweep, CountConfig, CountingResult, Witness};
pub use error::{QocError, Result};
pub use formulas::{
    evaluation_bound, extrapolation_bound, interpolation_bound, interrogation_bound,
    summation_bound, BoundBracket, BoundValue,
};
pub use instance::{
    kernel_span, make_evaluation, make_extrapolation, make_interpolation, make_interrogation,
    make_summation, matrix_b, matrix_c, oracle_from_coeffs, sample_oracle, verify_free,
    InstanceDef, OracleTable, QocInstance, QueryPair,
};
pub use simulator::{
    build_class_state, gram_matrix, optimal_success, oracle_shift_run, run_parallel_algorithm,
    span_rank, sqrt_gram, ClassBasis, ClassMember, GramReport, ParallelAlgorithm, SimConfig,
};
