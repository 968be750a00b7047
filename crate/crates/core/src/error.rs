use thiserror::Error;

/// Structural problems that prevent a model from being built at all.
///
/// Violations of the semantic invariants (order axioms, monotone valuation,
/// frame conditions) are not errors: they are reported as data by the
/// `validate` methods of each model type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("a model needs at least one world")]
    Empty,
    #[error("world `{0}` is declared twice")]
    DuplicateWorld(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("order lists both `{0}` ≤ `{1}` and `{1}` ≤ `{0}`")]
    ContradictoryOrder(String, String),
    #[error("component of frame world `{0}` has no root")]
    UnrootedComponent(String),
    #[error("point `{point}` occurs in the components of both `{first}` and `{second}`")]
    SharedPoint {
        point: String,
        first: String,
        second: String,
    },
    #[error("frame world `{0}` has no component")]
    MissingComponent(String),
    #[error("component given for `{0}`, which is not a frame world")]
    UnexpectedComponent(String),
    #[error("generated world id `{0}` is not unique")]
    IdCollision(String),
}

/// Failures of a forcing query.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("formula `{0}` contains a box, but intuitionistic models are propositional")]
    ModalFormula(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
