//! Exact optimal contracts with ambiguity for hidden-action
//! principal-agent problems.
//!
//! All arithmetic is over arbitrary-precision rationals. Actions and
//! outcomes are 0-based in the API; the CLI and JSON reports number
//! actions from 1.

pub mod ambiguous;
pub mod cli;
pub mod error;
pub mod instances;
pub mod lp;
pub mod model;
pub mod rational;
pub mod reductions;

pub use error::{Error, Result};
pub use model::{ActionSet, AmbiguousContract, ClassicContract, Instance, Partition, PaymentFunction, Subinstance};
pub use rational::Rational;
