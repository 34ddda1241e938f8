//! Robust investment-consumption under ambiguity aversion.
//!
//! An investor with power utility chooses risk exposures and a consumption
//! rate while doubting the drift of the reference model. Exposures are
//! confined to a convex set and consumption to a band. With deterministic
//! coefficients the value function reduces to scalar backward ODEs, which this
//! crate integrates; the optimal strategy, the worst-case distortion and the
//! utility lost by ignoring ambiguity follow in closed form.
//!
//! ```
//! use robinv_core::constraints::{ConsumptionBand, ExposureSet};
//! use robinv_core::detsolve::{solve_curves, TimeGrid};
//! use robinv_core::scenarios::reference_problem;
//!
//! let problem = reference_problem(4.0, ExposureSet::NonnegativeOrthant, ConsumptionBand::UNCONSTRAINED).unwrap();
//! let curves = solve_curves(&problem, &TimeGrid::new(3.0, 300).unwrap()).unwrap();
//! assert!(curves.y.iter().all(|&y| y > 0.0));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constraints;
pub mod detsolve;
pub mod error;
pub mod market;
pub mod problem;
pub mod scenarios;
pub mod simulate;
pub mod strategy;

pub use error::{Error, Result};
pub use problem::RobustProblem;
