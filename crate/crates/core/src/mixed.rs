//! Concrete mixed models and the fragment-relative mixed-model clauses.
//!
//! A concrete mixed model attaches a rooted intuitionistic Kripke model
//! `M_w` to every world `w` of a modal frame `⟨W, R⟩`. Propositional
//! connectives are evaluated inside the component of a point; `□φ` holds at a
//! point of `M_w` iff `φ` holds at the root of every `M_v` with `w R v`.
//!
//! Abstract mixed models are represented by their theories restricted to a
//! finite [`Fragment`]; [`check_mixed_clauses`] checks the four defining
//! clauses on that fragment.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::formula::{render, Formula, Fragment};
use crate::ipc_model::{IntuitionisticModel, Violation};
use crate::proofs::{Decider, Logic};
use crate::semantics::{self, relation_rows, row_pairs, PointSet, Semantics, WorldSet};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CmmJson", into = "CmmJson")]
pub struct ConcreteMixedModel {
    frame: WorldSet,
    frame_acc: Vec<PointSet>,
    components: Vec<IntuitionisticModel>,
    // Flattened view over all component points.
    points: WorldSet,
    owner: Vec<usize>,
    offset: Vec<usize>,
    up: Vec<PointSet>,
    roots: Vec<usize>,
    successor_roots: Vec<PointSet>,
    atoms: HashMap<String, PointSet>,
}

/// A component-level violation, tagged with the frame world owning the component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CmmViolation {
    pub world: String,
    #[serde(flatten)]
    pub violation: Violation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CmmReport {
    pub violations: Vec<CmmViolation>,
}

impl CmmReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl ConcreteMixedModel {
    /// Builds the model. Fails when a frame world lacks a component, a
    /// component is unrooted, or two components share a point id.
    pub fn new<S: Into<String>>(
        frame_worlds: impl IntoIterator<Item = S>,
        frame_acc: &[(String, String)],
        mut components: BTreeMap<String, IntuitionisticModel>,
    ) -> Result<Self, ModelError> {
        let frame = WorldSet::new(frame_worlds)?;
        let frame_acc = relation_rows(&frame, frame_acc)?;
        let mut ordered = Vec::with_capacity(frame.len());
        for w in frame.names() {
            let c = components
                .remove(w)
                .ok_or_else(|| ModelError::MissingComponent(w.clone()))?;
            ordered.push(c);
        }
        if let Some(extra) = components.keys().next() {
            return Err(ModelError::UnexpectedComponent(extra.clone()));
        }
        Self::from_components(frame, frame_acc, ordered)
    }

    pub(crate) fn from_components(
        frame: WorldSet,
        frame_acc: Vec<PointSet>,
        components: Vec<IntuitionisticModel>,
    ) -> Result<Self, ModelError> {
        let mut names = Vec::new();
        let mut owner = Vec::new();
        let mut offset = Vec::new();
        let mut roots = Vec::new();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (w, c) in components.iter().enumerate() {
            let root = c
                .root()
                .ok_or_else(|| ModelError::UnrootedComponent(frame.name(w).to_string()))?;
            offset.push(names.len());
            roots.push(names.len() + root);
            for name in c.worlds().names() {
                if let Some(first) = seen.insert(name, w) {
                    return Err(ModelError::SharedPoint {
                        point: name.clone(),
                        first: frame.name(first).to_string(),
                        second: frame.name(w).to_string(),
                    });
                }
                names.push(name.clone());
                owner.push(w);
            }
        }
        let points = WorldSet::new(names)?;
        let total = points.len();
        let mut up = Vec::with_capacity(total);
        let mut val = Vec::with_capacity(total);
        for (w, c) in components.iter().enumerate() {
            for x in 0..c.len() {
                up.push(PointSet::from_indices(
                    total,
                    c.successors(x).iter().map(|y| offset[w] + y),
                ));
                val.push(c.valuation(x).clone());
            }
        }
        let successor_roots = frame_acc
            .iter()
            .map(|row| PointSet::from_indices(total, row.iter().map(|v| roots[v])))
            .collect();
        let atoms = crate::ipc_model::atom_table(total, &val);
        Ok(ConcreteMixedModel {
            frame,
            frame_acc,
            components,
            points,
            owner,
            offset,
            up,
            roots,
            successor_roots,
            atoms,
        })
    }

    pub fn frame(&self) -> &WorldSet {
        &self.frame
    }

    pub fn frame_acc(&self, w: usize, v: usize) -> bool {
        self.frame_acc[w].contains(v)
    }

    pub fn frame_successors(&self, w: usize) -> &PointSet {
        &self.frame_acc[w]
    }

    pub fn component(&self, w: usize) -> &IntuitionisticModel {
        &self.components[w]
    }

    /// All component points, in frame order.
    pub fn points(&self) -> &WorldSet {
        &self.points
    }

    /// The frame world whose component contains point `x`.
    pub fn owner(&self, x: usize) -> usize {
        self.owner[x]
    }

    /// Global index of the root `w̄` of `M_w`.
    pub fn root(&self, w: usize) -> usize {
        self.roots[w]
    }

    /// Global index of point `local` of `M_w`.
    pub fn point(&self, w: usize, local: usize) -> usize {
        self.offset[w] + local
    }

    /// `x ≤ y` inside a shared component.
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.up[x].contains(y)
    }

    pub fn successors(&self, x: usize) -> &PointSet {
        &self.up[x]
    }

    pub fn valuation(&self, x: usize) -> &BTreeSet<String> {
        let w = self.owner[x];
        self.components[w].valuation(x - self.offset[w])
    }

    pub fn atom_set(&self, p: &str) -> PointSet {
        self.atoms
            .get(p)
            .cloned()
            .unwrap_or_else(|| PointSet::empty(self.points.len()))
    }

    /// Component-level validity (order axioms, monotone valuation, rootedness).
    pub fn validate(&self) -> CmmReport {
        let mut violations = Vec::new();
        for (w, c) in self.components.iter().enumerate() {
            for v in c.validate().violations {
                violations.push(CmmViolation {
                    world: self.frame.name(w).to_string(),
                    violation: v,
                });
            }
        }
        CmmReport { violations }
    }

    pub fn truth_set(&self, f: &Formula) -> PointSet {
        semantics::truth_set(self, f, &mut |p| self.atom_set(p))
            .expect("mixed models interpret the box")
    }

    pub fn forces(&self, x: usize, f: &Formula) -> bool {
        self.truth_set(f).contains(x)
    }

    pub fn forces_at(&self, point: &str, f: &Formula) -> Result<bool, ModelError> {
        Ok(self.forces(self.points.lookup(point)?, f))
    }

    /// Graphviz rendering: one cluster per frame world holding its component;
    /// frame accessibility drawn between component roots.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cmm {\n  compound=true;\n");
        for (w, c) in self.components.iter().enumerate() {
            out.push_str(&format!(
                "  subgraph \"cluster_{}\" {{\n    label=\"{}\";\n    rankdir=BT;\n",
                self.frame.name(w),
                self.frame.name(w)
            ));
            c.write_dot_body(&mut out, "    ", "");
            out.push_str("  }\n");
        }
        for (w, row) in self.frame_acc.iter().enumerate() {
            for v in row.iter() {
                out.push_str(&format!(
                    "  \"{}\" -> \"{}\" [ltail=\"cluster_{}\", lhead=\"cluster_{}\"];\n",
                    self.points.name(self.roots[w]),
                    self.points.name(self.roots[v]),
                    self.frame.name(w),
                    self.frame.name(v)
                ));
            }
        }
        out.push_str("}\n");
        out
    }
}

impl Semantics for ConcreteMixedModel {
    fn point_count(&self) -> usize {
        self.points.len()
    }

    fn implication(&self, a: &PointSet, b: &PointSet) -> PointSet {
        semantics::implication_over(&self.up, a, b)
    }

    fn necessity(&self, a: &PointSet) -> Option<PointSet> {
        let mut out = PointSet::empty(self.points.len());
        for (w, c) in self.components.iter().enumerate() {
            if self.successor_roots[w].is_subset(a) {
                for local in 0..c.len() {
                    out.insert(self.offset[w] + local);
                }
            }
        }
        Some(out)
    }
}

/// Wire format: `{"frame_worlds":[..], "frame_acc":[[w,v],..], "components":{w: <ipc model>}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmmJson {
    pub frame_worlds: Vec<String>,
    #[serde(default)]
    pub frame_acc: Vec<(String, String)>,
    pub components: BTreeMap<String, IntuitionisticModel>,
}

impl TryFrom<CmmJson> for ConcreteMixedModel {
    type Error = ModelError;

    fn try_from(j: CmmJson) -> Result<Self, Self::Error> {
        ConcreteMixedModel::new(j.frame_worlds, &j.frame_acc, j.components)
    }
}

impl From<ConcreteMixedModel> for CmmJson {
    fn from(m: ConcreteMixedModel) -> Self {
        let frame_acc = row_pairs(&m.frame, &m.frame_acc);
        let components = m
            .frame
            .names()
            .iter()
            .cloned()
            .zip(m.components)
            .collect();
        CmmJson {
            frame_worlds: m.frame.names().to_vec(),
            frame_acc,
            components,
        }
    }
}

// ---------------------------------------------------------------------------
// Theories

/// A mixed model represented on a fragment: theories and logics per frame world.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedTheoryModel {
    pub frame_worlds: Vec<String>,
    #[serde(default)]
    pub frame_acc: Vec<(String, String)>,
    pub theories: BTreeMap<String, BTreeSet<Formula>>,
    pub logics: BTreeMap<String, Logic>,
}

/// `CPC` iff `p ∨ ¬p` is in the theory for every `p` in `atoms`.
pub fn assign_logic(theory: &BTreeSet<Formula>, atoms: &BTreeSet<String>) -> Logic {
    let classical = atoms.iter().all(|p| {
        let p = Formula::atom(p.clone());
        theory.contains(&Formula::or(p.clone(), Formula::not(p)))
    });
    if classical {
        Logic::Cpc
    } else {
        Logic::Ipc
    }
}

/// Theories `T_w = {φ ∈ frag | w̄ ⊩ φ}`, with logics assigned over the atoms
/// of the fragment.
///
/// The excluded-middle instances consulted by [`assign_logic`] are evaluated
/// at the root even when they lie outside the fragment; they are not added
/// to the stored theory.
pub fn extract_theories(m: &ConcreteMixedModel, frag: &Fragment) -> MixedTheoryModel {
    let sets: Vec<(&Formula, PointSet)> = frag.iter().map(|f| (f, m.truth_set(f))).collect();
    let atoms = frag.atoms();
    let mut theories = BTreeMap::new();
    let mut logics = BTreeMap::new();
    for w in 0..m.frame.len() {
        let root = m.root(w);
        let theory: BTreeSet<Formula> = sets
            .iter()
            .filter(|(_, s)| s.contains(root))
            .map(|(f, _)| (*f).clone())
            .collect();
        let mut extended = theory.clone();
        for p in &atoms {
            let p = Formula::atom(p.clone());
            let lem = Formula::or(p.clone(), Formula::not(p));
            if m.forces(root, &lem) {
                extended.insert(lem);
            }
        }
        let name = m.frame.name(w).to_string();
        logics.insert(name.clone(), assign_logic(&extended, &atoms));
        theories.insert(name, theory);
    }
    MixedTheoryModel {
        frame_worlds: m.frame.names().to_vec(),
        frame_acc: row_pairs(&m.frame, &m.frame_acc),
        theories,
        logics,
    }
}

/// Why a clause fails at a world.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `⊥` is in the theory.
    Bottom,
    /// Derivable from the theory's fragment part in the world's logic, but absent.
    Derivable,
    /// A successor whose theory lacks the box body.
    Successor { world: String },
    /// Every successor's theory contains the box body.
    AllSuccessors,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseViolation {
    pub world: String,
    pub formula: Formula,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseReport {
    /// `⊥ ∉ T_w`.
    pub clause1: Vec<ClauseViolation>,
    /// Closure under the world's consequence relation, relative to the fragment.
    pub clause2: Vec<ClauseViolation>,
    /// `□φ ∈ T_w ⟺ φ ∈ T_v` for all `v` with `w R v`.
    pub clause3: Vec<ClauseViolation>,
    /// `¬□φ ∈ T_w ⟺ φ ∉ T_v` for some `v` with `w R v`.
    pub clause4: Vec<ClauseViolation>,
    pub clause2_checked: bool,
    pub note: String,
}

impl ClauseReport {
    pub fn is_ok(&self) -> bool {
        self.clause1.is_empty()
            && self.clause2.is_empty()
            && self.clause3.is_empty()
            && self.clause4.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClauseOptions {
    /// Run the deciders for clause 2.
    pub check_closure: bool,
}

impl Default for ClauseOptions {
    fn default() -> Self {
        ClauseOptions {
            check_closure: true,
        }
    }
}

const CLAUSE2_NOTE: &str = "clause 2 is checked relative to the fragment: premises are T_w restricted to the fragment, boxed subformulas are opaque atoms";

/// Checks all four clauses on `frag`.
pub fn check_mixed_clauses(
    tm: &MixedTheoryModel,
    frag: &Fragment,
) -> Result<ClauseReport, ModelError> {
    check_mixed_clauses_with(tm, frag, ClauseOptions::default())
}

pub fn check_mixed_clauses_with(
    tm: &MixedTheoryModel,
    frag: &Fragment,
    options: ClauseOptions,
) -> Result<ClauseReport, ModelError> {
    let worlds = WorldSet::new(tm.frame_worlds.iter().cloned())?;
    let acc = relation_rows(&worlds, &tm.frame_acc)?;
    for w in tm.theories.keys().chain(tm.logics.keys()) {
        worlds.lookup(w)?;
    }
    let empty = BTreeSet::new();
    let theory = |w: usize| tm.theories.get(worlds.name(w)).unwrap_or(&empty);

    let mut report = ClauseReport {
        clause1: vec![],
        clause2: vec![],
        clause3: vec![],
        clause4: vec![],
        clause2_checked: options.check_closure,
        note: CLAUSE2_NOTE.to_string(),
    };
    let violation = |w: usize, f: &Formula, witness| ClauseViolation {
        world: worlds.name(w).to_string(),
        formula: f.clone(),
        witness,
    };

    for w in 0..worlds.len() {
        let t = theory(w);
        if t.contains(&Formula::Bot) {
            report.clause1.push(violation(w, &Formula::Bot, Witness::Bottom));
        }
        for f in frag.iter() {
            if let Formula::Box(body) = f {
                let failing = acc[w].iter().find(|v| !theory(*v).contains(&**body));
                match (t.contains(f), failing) {
                    (true, Some(v)) => report.clause3.push(violation(
                        w,
                        f,
                        Witness::Successor {
                            world: worlds.name(v).to_string(),
                        },
                    )),
                    (false, None) => report.clause3.push(violation(w, f, Witness::AllSuccessors)),
                    _ => {}
                }
            }
            if let Some(Formula::Box(body)) = f.negated() {
                let failing = acc[w].iter().find(|v| !theory(*v).contains(&**body));
                match (t.contains(f), failing) {
                    (true, None) => report.clause4.push(violation(w, f, Witness::AllSuccessors)),
                    (false, Some(v)) => report.clause4.push(violation(
                        w,
                        f,
                        Witness::Successor {
                            world: worlds.name(v).to_string(),
                        },
                    )),
                    _ => {}
                }
            }
        }
    }

    if options.check_closure {
        let per_world: Vec<Vec<ClauseViolation>> = (0..worlds.len())
            .into_par_iter()
            .map(|w| {
                let t = theory(w);
                let logic = tm.logics.get(worlds.name(w)).copied().unwrap_or(Logic::Ipc);
                let premises: Vec<Formula> = t.iter().filter(|f| frag.contains(f)).cloned().collect();
                let mut decider = Decider::new(logic, &premises);
                frag.iter()
                    .filter(|f| !t.contains(*f))
                    .filter(|f| decider.derives(f))
                    .map(|f| violation(w, f, Witness::Derivable))
                    .collect()
            })
            .collect();
        report.clause2 = per_world.into_iter().flatten().collect();
    }

    for list in [
        &mut report.clause1,
        &mut report.clause2,
        &mut report.clause3,
        &mut report.clause4,
    ] {
        list.sort_by_cached_key(|v| (v.world.clone(), render(&v.formula)));
    }
    Ok(report)
}
