//! Estimating the mean of a Bernoulli stream to a relative accuracy.
//!
//! [`planner`] chooses how many successes to wait for, [`estimators`] runs
//! the schemes against a [`sampling::SampleSource`], [`unbiased`] holds the
//! shifted-grid estimate, and [`harness`] runs seeded experiments and
//! regenerates the reference tables. [`special`] has the gamma, beta and
//! negative binomial functions the planner is built on.
//!
//! ```
//! use bernoulli_ras::planner::{find_k_gbas, RasTarget, SearchOptions};
//! let plan = find_k_gbas(&RasTarget::new(0.1, 0.01)?, true, &SearchOptions::default())?;
//! assert_eq!(plan.k, 661);
//! # Ok::<(), bernoulli_ras::Error>(())
//! ```

pub mod error;
pub mod estimators;
pub mod harness;
pub mod planner;
pub mod sampling;
pub mod special;
pub mod unbiased;

pub use error::{Error, Result};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/estimating.md")]
    mod estimating {}
    #[doc = include_str!("../../../book/src/unbiased-grid.md")]
    mod unbiased_grid {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
