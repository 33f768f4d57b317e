use crate::game::Violation;

/// Hard failures: malformed inputs, impossible requests. Semantic rule
/// violations in otherwise well-formed data are reported as
/// [`Violation`] values instead, not through this type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("duplicate identifier {0:?}")]
    DuplicateId(String),

    #[error("a game needs at least one individual")]
    EmptyGame,

    #[error("unknown individual {0:?}")]
    UnknownIndividual(String),

    #[error("invalid game: {}", join(.0))]
    InvalidGame(Vec<Violation>),

    #[error("infeasible profile: {}", join(.0))]
    InfeasibleProfile(Vec<Violation>),

    #[error("grid of {points} points exceeds the {limit}-point bound")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("the report is not certified")]
    NotCertified,

    #[error("pedigree member {child:?} references unknown parent {parent:?}")]
    UnknownParent { child: String, parent: String },

    #[error("pedigree contains a cycle through {0:?}")]
    PedigreeCycle(String),

    #[error("individual {id:?} is not in the pedigree")]
    MissingFromPedigree { id: String },

    #[error("individual {id:?}: missing field {field:?}")]
    MissingField { id: String, field: &'static str },

    #[error("individual {id:?}: parameter {param:?} is not used by the {kind} fitness kind")]
    UnusedParameter {
        id: String,
        param: &'static str,
        kind: &'static str,
    },

    #[error("relatedness comes from a pedigree, but none was supplied")]
    PedigreeRequired,

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
