//! Sample-size design for treatment-choice trials.
//!
//! A trial is judged by the regret of the treatment rule applied to its
//! data: the welfare lost, in the worst state of nature, relative to always
//! choosing the best treatment. A rule is epsilon-optimal when that maximum
//! regret is at most epsilon. This crate provides
//!
//! - the welfare and regret algebra ([`model`]),
//! - analytic regret bounds for empirical-success rules and the sample sizes
//!   they imply ([`bounds`]),
//! - exact maximum regret and minimum sample sizes for binary outcomes with
//!   two arms, plus classical power-based sizing ([`exact`]),
//! - allocation of a sample budget across covariate groups ([`allocate`]),
//! - Monte Carlo regret estimation for arbitrary designs ([`mcsim`]).

pub mod allocate;
mod binomial;
pub mod bounds;
pub mod error;
pub mod exact;
pub mod golden;
pub mod mcsim;
pub mod model;
pub mod normal;

pub use error::{Error, Result};
pub use model::{
    best_welfare, expected_welfare, regret, regret_from_error_prob, AssignmentProfile,
    CovariateGroup, Method, OutcomeModel, RegretReport, State, TrialDesign,
};
