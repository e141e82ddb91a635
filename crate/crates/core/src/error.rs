//! Error type shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A game, profile, or argument failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A utility rule failed its validity conditions (f(j) >= 0, f(1) > 0).
    #[error("invalid utility rule: {0}")]
    InvalidRule(String),

    /// A resource's coverage exceeds the rule's supported multiplicity.
    #[error("rule capacity exceeded: coverage {coverage} > n_max {n_max}")]
    RuleCapacity { coverage: usize, n_max: usize },

    /// An exhaustive enumeration would exceed its configured cap.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A ratio with zero optimal welfare in the denominator.
    #[error("undefined ratio: optimal welfare is zero")]
    UndefinedRatio,

    /// An argument lies outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A worst-case construction does not apply to the given rule.
    #[error("construction not applicable: {0}")]
    ConstructionInapplicable(String),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    /// Text that could not be parsed as a number, rule, game, or config.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An internal invariant failed; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
