//! Set covering games with designable utility rules, exhaustive k-round
//! best-response dynamics, and closed-form + oracle-verified efficiency
//! metrics (price of best response, price of anarchy, and their trade-off
//! frontier).

pub mod constructions;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod lp;
pub mod montecarlo;
pub mod rules;
pub mod scalar;

pub use error::{Error, Result};
pub use game::{JointAction, Resource, SetCoveringGame};
pub use rules::{RuleSpec, UtilityRule};
pub use scalar::{Rational, Scalar};
