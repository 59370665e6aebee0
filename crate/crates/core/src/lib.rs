//! Expectation and variance of the time needed to complete `m` parallel
//! coupon collections with uniform coupon probabilities.
//!
//! Four independent routes compute the same two moments:
//!
//! - [`single_exact`]: closed forms for one collection.
//! - [`chain_solver`]: triangular solves on the absorbing product chain
//!   built by [`model`]. This is the primary method and the only exact one
//!   for `m > 1`.
//! - [`tail_oracle`]: inclusion-exclusion marginals and tail sums.
//! - [`mc_oracle`]: seeded Monte Carlo.
//!
//! ```
//! use parcollect::{build_space, chain_solver, CollectionSpec};
//!
//! let spec = CollectionSpec::new(vec![6, 6, 6]).unwrap();
//! let space = build_space(&spec).unwrap();
//! let stats = chain_solver::absorption_stats::<f64>(&space).unwrap();
//! assert!((stats.k[0] - 20.01).abs() < 0.005);
//! assert!((stats.v[0] - 44.8975).abs() < 0.005);
//! ```

pub mod chain_solver;
pub mod cli;
pub mod error;
pub mod mc_oracle;
pub mod model;
pub mod scalar;
pub mod single_exact;
pub mod tail_oracle;

pub use error::{Error, Result};
pub use model::{build_space, CollectionSpec, State, StateSpace, TransitionRow};
pub use scalar::{Prob, Scalar, ScalarMode, Value};
