//! Translations between concrete mixed models and birelational models.
//!
//! Both directions preserve forcing: a point of a mixed model forces the same
//! formulas as its image, and the copy `x#y` of a birelational world `y` in
//! the component of `x` forces what `y` forces.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::birelational::{BemViolation, BirelationalModel};
use crate::error::ModelError;
use crate::ipc_model::{IntuitionisticModel, ValidationReport};
use crate::mixed::ConcreteMixedModel;
use crate::semantics::{PointSet, WorldSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("birelational model is invalid: {} violation(s)", .0.violations.len())]
    InvalidModel(ValidationReport),
    #[error("model does not satisfy BEM: {} violation(s)", .0.len())]
    NotBem(Vec<BemViolation>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Id of the copy of world `view` inside the component of world `base`.
pub fn copy_point_id(base: &str, view: &str) -> String {
    format!("{base}#{view}")
}

/// Flattens a mixed model: the order is the disjoint union of the component
/// orders, and `x R' y` iff `x` lies in the component of `w`, `w R v` and `y`
/// is the root of the component of `v`.
pub fn cmm_to_birelational(m: &ConcreteMixedModel) -> BirelationalModel {
    let n = m.points().len();
    let up = (0..n).map(|x| m.successors(x).clone()).collect();
    let acc_of_world: Vec<PointSet> = (0..m.frame().len())
        .map(|w| PointSet::from_indices(n, m.frame_successors(w).iter().map(|v| m.root(v))))
        .collect();
    let acc = (0..n).map(|x| acc_of_world[m.owner(x)].clone()).collect();
    let val = (0..n).map(|x| m.valuation(x).clone()).collect();
    BirelationalModel::from_parts(m.points().clone(), up, acc, val)
}

/// Builds the mixed model whose frame is `⟨W, R⟩` and whose component at `x`
/// is the cone `{x#y | x ≤ y}` ordered and valued as in the source.
pub fn birelational_to_cmm(bm: &BirelationalModel) -> Result<ConcreteMixedModel, TranslateError> {
    let report = bm.validate();
    if !report.is_ok() {
        return Err(TranslateError::InvalidModel(report));
    }
    let bem = bm.check_bem();
    if !bem.is_empty() {
        return Err(TranslateError::NotBem(bem));
    }
    let worlds = bm.worlds();
    let mut components = Vec::with_capacity(bm.len());
    let mut all_ids = BTreeSet::new();
    for x in 0..bm.len() {
        let cone: Vec<usize> = bm.successors(x).iter().collect();
        let ids: Vec<String> = cone
            .iter()
            .map(|&y| copy_point_id(worlds.name(x), worlds.name(y)))
            .collect();
        for id in &ids {
            if !all_ids.insert(id.clone()) {
                return Err(ModelError::IdCollision(id.clone()).into());
            }
        }
        let k = cone.len();
        let up = cone
            .iter()
            .map(|&y| {
                PointSet::from_indices(k, (0..k).filter(|&j| bm.leq(y, cone[j])))
            })
            .collect();
        let val = cone.iter().map(|&y| bm.valuation(y).clone()).collect();
        let root = cone.iter().position(|&y| y == x);
        let local = WorldSet::new(ids).map_err(|e| match e {
            ModelError::DuplicateWorld(id) => ModelError::IdCollision(id),
            other => other,
        })?;
        components.push(IntuitionisticModel::from_parts(local, up, val, root));
    }
    let frame_acc = (0..bm.len()).map(|x| bm.accessible(x).clone()).collect();
    Ok(ConcreteMixedModel::from_components(
        worlds.clone(),
        frame_acc,
        components,
    )?)
}
