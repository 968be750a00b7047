//! Birelational models `⟨W, ≤, R, V⟩` for intuitionistic modal logic, the
//! BEM frame condition and frame validity by exhaustive valuation search.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::formula::Formula;
use crate::ipc_model::{
    atom_table, order_violations, valuation_from_map, valuation_to_map, ValidationReport,
    Violation,
};
use crate::semantics::{self, relation_rows, row_pairs, PointSet, Semantics, WorldSet};

/// Default cap on the number of valuations [`BirelationalModel::valid_on_frame`] will try.
pub const DEFAULT_VALUATION_BOUND: u64 = 1 << 24;

/// A triple with `x ≤ y`, `x R z` and not `y R z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BemViolation {
    pub x: String,
    pub y: String,
    pub z: String,
}

impl Serialize for BemViolation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [&self.x, &self.y, &self.z].serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame is not birelational: {} violation(s)", .0.violations.len())]
    InvalidFrame(ValidationReport),
    #[error("atoms {0:?} of the formula are not in the atom set")]
    MissingAtoms(Vec<String>),
    #[error("{count} valuations exceed the enumeration bound {bound}")]
    TooManyValuations { count: u128, bound: u64 },
}

/// Outcome of a frame-validity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrameValidity {
    pub valid: bool,
    /// Number of monotone valuations over the atom set.
    pub valuations: u64,
    /// The first refuting valuation in enumeration order, with a world it fails at.
    pub refutation: Option<FrameRefutation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrameRefutation {
    pub val: BTreeMap<String, Vec<String>>,
    pub world: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "BirelationalJson", into = "BirelationalJson")]
pub struct BirelationalModel {
    worlds: WorldSet,
    up: Vec<PointSet>,
    acc: Vec<PointSet>,
    val: Vec<BTreeSet<String>>,
    atoms: HashMap<String, PointSet>,
}

impl BirelationalModel {
    /// Builds the model exactly as listed; no pairs are added to `≤`.
    pub fn new<S: Into<String>>(
        worlds: impl IntoIterator<Item = S>,
        leq: &[(String, String)],
        acc: &[(String, String)],
        val: &BTreeMap<String, Vec<String>>,
    ) -> Result<Self, ModelError> {
        let worlds = WorldSet::new(worlds)?;
        let up = relation_rows(&worlds, leq)?;
        let acc = relation_rows(&worlds, acc)?;
        let val = valuation_from_map(&worlds, val)?;
        Ok(Self::from_parts(worlds, up, acc, val))
    }

    pub(crate) fn from_parts(
        worlds: WorldSet,
        up: Vec<PointSet>,
        acc: Vec<PointSet>,
        val: Vec<BTreeSet<String>>,
    ) -> Self {
        let atoms = atom_table(worlds.len(), &val);
        BirelationalModel {
            worlds,
            up,
            acc,
            val,
            atoms,
        }
    }

    pub fn worlds(&self) -> &WorldSet {
        &self.worlds
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.up[x].contains(y)
    }

    pub fn acc(&self, x: usize, y: usize) -> bool {
        self.acc[x].contains(y)
    }

    /// `{y | x ≤ y}`.
    pub fn successors(&self, x: usize) -> &PointSet {
        &self.up[x]
    }

    /// `{z | x R z}`.
    pub fn accessible(&self, x: usize) -> &PointSet {
        &self.acc[x]
    }

    pub fn valuation(&self, x: usize) -> &BTreeSet<String> {
        &self.val[x]
    }

    pub fn atom_set(&self, p: &str) -> PointSet {
        self.atoms
            .get(p)
            .cloned()
            .unwrap_or_else(|| PointSet::empty(self.len()))
    }

    /// Same frame with a different valuation.
    pub fn with_valuation(&self, val: Vec<BTreeSet<String>>) -> Self {
        assert_eq!(val.len(), self.len());
        Self::from_parts(self.worlds.clone(), self.up.clone(), self.acc.clone(), val)
    }

    fn compatibility_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for x in 0..self.len() {
            for y in self.up[x].iter() {
                for z in self.acc[y].iter() {
                    if !self.acc[x].contains(z) {
                        out.push(Violation::NotCompatible {
                            x: self.worlds.name(x).to_string(),
                            y: self.worlds.name(y).to_string(),
                            z: self.worlds.name(z).to_string(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Order axioms, `x ≤ y ∧ y R z ⇒ x R z`, and monotonicity of the
    /// valuation along `≤`.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = order_violations(&self.worlds, &self.up, &self.val);
        violations.extend(self.compatibility_violations());
        ValidationReport { violations }
    }

    /// The frame part of [`validate`](Self::validate): everything except valuation monotonicity.
    pub fn validate_frame(&self) -> ValidationReport {
        let mut report = self.validate();
        report
            .violations
            .retain(|v| !matches!(v, Violation::NotMonotone { .. }));
        report
    }

    /// All triples breaking `x ≤ y ∧ x R z ⇒ y R z`.
    pub fn check_bem(&self) -> Vec<BemViolation> {
        let mut out = Vec::new();
        for x in 0..self.len() {
            for y in self.up[x].iter() {
                for z in self.acc[x].iter() {
                    if !self.acc[y].contains(z) {
                        out.push(BemViolation {
                            x: self.worlds.name(x).to_string(),
                            y: self.worlds.name(y).to_string(),
                            z: self.worlds.name(z).to_string(),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn truth_set(&self, f: &Formula) -> PointSet {
        semantics::truth_set(self, f, &mut |p| self.atom_set(p))
            .expect("birelational models interpret the box")
    }

    pub fn forces(&self, x: usize, f: &Formula) -> bool {
        self.truth_set(f).contains(x)
    }

    pub fn forces_at(&self, world: &str, f: &Formula) -> Result<bool, ModelError> {
        Ok(self.forces(self.worlds.lookup(world)?, f))
    }

    /// Is `f` forced everywhere under every `≤`-monotone valuation of `atoms`?
    ///
    /// The valuation of the model itself is ignored. Valuations are
    /// enumerated as one up-set per atom; the first refutation in that order
    /// is reported regardless of how many threads evaluate candidates.
    pub fn valid_on_frame(
        &self,
        f: &Formula,
        atoms: &BTreeSet<String>,
        bound: u64,
    ) -> Result<FrameValidity, FrameError> {
        let frame = self.validate_frame();
        if !frame.is_ok() {
            return Err(FrameError::InvalidFrame(frame));
        }
        let missing: Vec<String> = f.atoms().difference(atoms).cloned().collect();
        if !missing.is_empty() {
            return Err(FrameError::MissingAtoms(missing));
        }
        let ups = up_sets(&self.up);
        let atoms: Vec<&String> = atoms.iter().collect();
        let count = (ups.len() as u128).pow(atoms.len() as u32);
        if count > bound as u128 {
            return Err(FrameError::TooManyValuations { count, bound });
        }
        let count = count as u64;
        let n = self.len();
        let decode = |mut index: u64| -> HashMap<&str, &PointSet> {
            let mut chosen = HashMap::new();
            for p in &atoms {
                chosen.insert(p.as_str(), &ups[(index % ups.len() as u64) as usize]);
                index /= ups.len() as u64;
            }
            chosen
        };
        let failing = (0..count).into_par_iter().find_map_first(|index| {
            let chosen = decode(index);
            let set = semantics::truth_set(self, f, &mut |p| {
                chosen.get(p).map(|s| (*s).clone()).unwrap_or_else(|| PointSet::empty(n))
            })
            .expect("birelational models interpret the box");
            set.first_missing().map(|x| (index, x))
        });
        let refutation = failing.map(|(index, x)| {
            let chosen = decode(index);
            let mut val = vec![BTreeSet::new(); n];
            for (p, set) in chosen {
                for w in set.iter() {
                    val[w].insert(p.to_string());
                }
            }
            FrameRefutation {
                val: valuation_to_map(&self.worlds, &val),
                world: self.worlds.name(x).to_string(),
            }
        });
        Ok(FrameValidity {
            valid: refutation.is_none(),
            valuations: count,
            refutation,
        })
    }

    /// Graphviz rendering: `R` as solid arrows, covering pairs of `≤` dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph birelational {\n");
        for (i, name) in self.worlds.names().iter().enumerate() {
            let atoms: Vec<&str> = self.val[i].iter().map(String::as_str).collect();
            out.push_str(&format!(
                "  \"{name}\" [label=\"{name}\\n{{{}}}\"];\n",
                atoms.join(",")
            ));
        }
        for (x, y) in semantics::covering_pairs(&self.up) {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [style=dashed];\n",
                self.worlds.name(x),
                self.worlds.name(y)
            ));
        }
        for (x, row) in self.acc.iter().enumerate() {
            for y in row.iter() {
                out.push_str(&format!(
                    "  \"{}\" -> \"{}\";\n",
                    self.worlds.name(x),
                    self.worlds.name(y)
                ));
            }
        }
        out.push_str("}\n");
        out
    }
}

impl Semantics for BirelationalModel {
    fn point_count(&self) -> usize {
        self.len()
    }

    fn implication(&self, a: &PointSet, b: &PointSet) -> PointSet {
        semantics::implication_over(&self.up, a, b)
    }

    fn necessity(&self, a: &PointSet) -> Option<PointSet> {
        Some(semantics::necessity_over(&self.acc, a))
    }
}

/// All up-sets of the order given by successor rows, empty set first.
pub(crate) fn up_sets(up: &[PointSet]) -> Vec<PointSet> {
    let n = up.len();
    let mut down = vec![PointSet::empty(n); n];
    for (x, row) in up.iter().enumerate() {
        for y in row.iter() {
            down[y].insert(x);
        }
    }
    let mut out = Vec::new();
    fn go(
        i: usize,
        inside: PointSet,
        outside: PointSet,
        up: &[PointSet],
        down: &[PointSet],
        out: &mut Vec<PointSet>,
    ) {
        if i == up.len() {
            out.push(inside);
            return;
        }
        if inside.contains(i) || outside.contains(i) {
            go(i + 1, inside, outside, up, down, out);
            return;
        }
        if down[i].intersection(&inside).is_empty() {
            let mut o = outside.clone();
            o.union_with(&down[i]);
            go(i + 1, inside.clone(), o, up, down, out);
        }
        if up[i].intersection(&outside).is_empty() {
            let mut s = inside;
            s.union_with(&up[i]);
            go(i + 1, s, outside, up, down, out);
        }
    }
    go(0, PointSet::empty(n), PointSet::empty(n), up, &down, &mut out);
    out
}

/// Wire format: `{"worlds":[..], "leq":[[x,y],..], "acc":[[x,y],..], "val":{..}}`.
///
/// Reflexive `≤` pairs are added on input; listing both `x ≤ y` and `y ≤ x`
/// for distinct worlds is rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirelationalJson {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub leq: Vec<(String, String)>,
    #[serde(default)]
    pub acc: Vec<(String, String)>,
    #[serde(default)]
    pub val: BTreeMap<String, Vec<String>>,
}

impl TryFrom<BirelationalJson> for BirelationalModel {
    type Error = ModelError;

    fn try_from(j: BirelationalJson) -> Result<Self, Self::Error> {
        let listed: BTreeSet<(&String, &String)> = j.leq.iter().map(|(a, b)| (a, b)).collect();
        for (a, b) in &listed {
            if a != b && listed.contains(&(*b, *a)) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                return Err(ModelError::ContradictoryOrder((*lo).clone(), (*hi).clone()));
            }
        }
        let mut leq = j.leq.clone();
        leq.extend(j.worlds.iter().map(|w| (w.clone(), w.clone())));
        BirelationalModel::new(j.worlds, &leq, &j.acc, &j.val)
    }
}

impl From<BirelationalModel> for BirelationalJson {
    fn from(m: BirelationalModel) -> Self {
        let leq = row_pairs(&m.worlds, &m.up)
            .into_iter()
            .filter(|(a, b)| a != b)
            .collect();
        BirelationalJson {
            worlds: m.worlds.names().to_vec(),
            leq,
            acc: row_pairs(&m.worlds, &m.acc),
            val: valuation_to_map(&m.worlds, &m.val),
        }
    }
}
