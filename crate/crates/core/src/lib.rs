//! Exact decision procedures for finite statistical models.
//!
//! A [`FiniteModel`] is a finite family of distributions on a finite point
//! set with exact rational masses. Sub-σ-algebras are [`Partition`]s of the
//! point set. The crate decides completeness, sufficiency and related
//! properties of partitions, computes the optimal σ-algebra and optimal
//! unbiased estimators, checks joint-completeness theorems instance by
//! instance, replays a registry of finite counterexamples and hunts for new
//! ones by seeded random search.

pub mod checks;
pub mod construct;
pub mod error;
pub mod format;
pub mod function;
pub mod linalg;
pub mod model;
pub mod ops;
pub mod optimal;
pub mod partition;
pub mod rational;
pub mod registry;
pub mod report;
pub mod search;
pub mod verify;

pub use error::{Error, Result};
pub use function::{conditional_expectation, Estimand, RationalFunction};
pub use model::{validate_model, Exhaustion, FiniteModel, Limits, ParamLabel, Submodel};
pub use partition::Partition;
pub use rational::{format_rational, parse_rational, Rational};
pub use report::{CheckReport, Verdict, Witness};
pub use verify::{Status, TheoremReport};
