//! Intuitionistic, birelational and mixed Kripke semantics for a box-only
//! modal language, with translations, Hilbert-style proof checking, decision
//! procedures for the propositional base logics and bounded countermodel search.

pub mod birelational;
pub mod cli;
pub mod error;
pub mod formula;
pub mod ipc_model;
pub mod mixed;
pub mod proofs;
pub mod search;
pub mod semantics;
pub mod translate;

pub use birelational::BirelationalModel;
pub use error::{EvalError, ModelError};
pub use formula::{parse, Formula, Fragment, Scheme};
pub use ipc_model::IntuitionisticModel;
pub use mixed::{ConcreteMixedModel, MixedTheoryModel};
pub use proofs::{HilbertSystem, Logic, SystemName};
