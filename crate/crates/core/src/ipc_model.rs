//! Intuitionistic Kripke models: a partial order with a monotone valuation,
//! optionally rooted.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, ModelError};
use crate::formula::Formula;
use crate::semantics::{self, relation_rows, row_pairs, PointSet, Semantics, WorldSet};

/// One broken invariant, with the worlds (and atom) that witness it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotReflexive { world: String },
    NotTransitive { x: String, y: String, z: String },
    NotAntisymmetric { x: String, y: String },
    NotMonotone { x: String, y: String, atom: String },
    NotRoot { root: String, world: String },
    /// `x ≤ y` and `y R z` but not `x R z`.
    NotCompatible { x: String, y: String, z: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Order and valuation checks shared by every model with an intuitionistic order.
pub(crate) fn order_violations(
    worlds: &WorldSet,
    up: &[PointSet],
    val: &[BTreeSet<String>],
) -> Vec<Violation> {
    let name = |i: usize| worlds.name(i).to_string();
    let n = worlds.len();
    let mut out = Vec::new();
    for x in 0..n {
        if !up[x].contains(x) {
            out.push(Violation::NotReflexive { world: name(x) });
        }
    }
    for x in 0..n {
        for y in up[x].iter().filter(|y| *y != x) {
            for z in up[y].iter() {
                if !up[x].contains(z) {
                    out.push(Violation::NotTransitive {
                        x: name(x),
                        y: name(y),
                        z: name(z),
                    });
                }
            }
        }
    }
    for x in 0..n {
        for y in up[x].iter().filter(|y| *y > x) {
            if up[y].contains(x) {
                out.push(Violation::NotAntisymmetric { x: name(x), y: name(y) });
            }
        }
    }
    for x in 0..n {
        for y in up[x].iter().filter(|y| *y != x) {
            for atom in val[x].difference(&val[y]) {
                out.push(Violation::NotMonotone {
                    x: name(x),
                    y: name(y),
                    atom: atom.clone(),
                });
            }
        }
    }
    out
}

pub(crate) fn atom_table(n: usize, val: &[BTreeSet<String>]) -> HashMap<String, PointSet> {
    let mut table: HashMap<String, PointSet> = HashMap::new();
    for (x, atoms) in val.iter().enumerate() {
        for p in atoms {
            table
                .entry(p.clone())
                .or_insert_with(|| PointSet::empty(n))
                .insert(x);
        }
    }
    table
}

pub(crate) fn valuation_from_map(
    worlds: &WorldSet,
    val: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<BTreeSet<String>>, ModelError> {
    let mut out = vec![BTreeSet::new(); worlds.len()];
    for (w, atoms) in val {
        out[worlds.lookup(w)?].extend(atoms.iter().cloned());
    }
    Ok(out)
}

pub(crate) fn valuation_to_map(
    worlds: &WorldSet,
    val: &[BTreeSet<String>],
) -> BTreeMap<String, Vec<String>> {
    val.iter()
        .enumerate()
        .map(|(i, atoms)| (worlds.name(i).to_string(), atoms.iter().cloned().collect()))
        .collect()
}

/// An intuitionistic Kripke model `⟨W, ≤, V⟩` with an optional root.
///
/// `≤` is stored exactly as given; use [`IntuitionisticModel::validate`] to
/// check the order axioms and [`IntuitionisticModel::reflexive_transitive_close`]
/// to complete a partial listing.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "IpcModelJson", into = "IpcModelJson")]
pub struct IntuitionisticModel {
    worlds: WorldSet,
    up: Vec<PointSet>,
    val: Vec<BTreeSet<String>>,
    atoms: HashMap<String, PointSet>,
    root: Option<usize>,
}

impl IntuitionisticModel {
    pub fn new<S: Into<String>>(
        worlds: impl IntoIterator<Item = S>,
        leq: &[(String, String)],
        val: &BTreeMap<String, Vec<String>>,
        root: Option<&str>,
    ) -> Result<Self, ModelError> {
        let worlds = WorldSet::new(worlds)?;
        let up = relation_rows(&worlds, leq)?;
        let val = valuation_from_map(&worlds, val)?;
        let root = root.map(|r| worlds.lookup(r)).transpose()?;
        Ok(Self::from_parts(worlds, up, val, root))
    }

    pub(crate) fn from_parts(
        worlds: WorldSet,
        up: Vec<PointSet>,
        val: Vec<BTreeSet<String>>,
        root: Option<usize>,
    ) -> Self {
        let atoms = atom_table(worlds.len(), &val);
        IntuitionisticModel {
            worlds,
            up,
            val,
            atoms,
            root,
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

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    /// `{y | x ≤ y}`.
    pub fn successors(&self, x: usize) -> &PointSet {
        &self.up[x]
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.up[x].contains(y)
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

    /// Every broken invariant; empty iff the model is a (rooted, if a root
    /// is named) intuitionistic Kripke model.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = order_violations(&self.worlds, &self.up, &self.val);
        if let Some(r) = self.root {
            for x in (0..self.len()).filter(|x| !self.up[r].contains(*x)) {
                violations.push(Violation::NotRoot {
                    root: self.worlds.name(r).to_string(),
                    world: self.worlds.name(x).to_string(),
                });
            }
        }
        ValidationReport { violations }
    }

    /// Same model with `≤` replaced by its reflexive-transitive closure.
    pub fn reflexive_transitive_close(&self) -> Self {
        let mut up = self.up.clone();
        for (x, row) in up.iter_mut().enumerate() {
            row.insert(x);
        }
        // Warshall
        for k in 0..up.len() {
            let via = up[k].clone();
            for row in up.iter_mut() {
                if row.contains(k) {
                    row.union_with(&via);
                }
            }
        }
        Self::from_parts(self.worlds.clone(), up, self.val.clone(), self.root)
    }

    /// Truth set of a box-free formula.
    pub fn truth_set(&self, f: &Formula) -> Result<PointSet, EvalError> {
        semantics::truth_set(self, f, &mut |p| self.atom_set(p))
            .map_err(|_| EvalError::ModalFormula(f.to_string()))
    }

    pub fn forces(&self, x: usize, f: &Formula) -> Result<bool, EvalError> {
        Ok(self.truth_set(f)?.contains(x))
    }

    pub fn forces_at(&self, world: &str, f: &Formula) -> Result<bool, EvalError> {
        let x = self.worlds.lookup(world)?;
        self.forces(x, f)
    }

    /// Graphviz rendering: worlds labeled with their atoms, covering pairs of
    /// `≤` as dashed arrows.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ipc {\n  rankdir=BT;\n");
        self.write_dot_body(&mut out, "  ", "");
        out.push_str("}\n");
        out
    }

    pub(crate) fn write_dot_body(&self, out: &mut String, indent: &str, prefix: &str) {
        for (i, name) in self.worlds.names().iter().enumerate() {
            let atoms: Vec<&str> = self.val[i].iter().map(String::as_str).collect();
            let shape = if self.root == Some(i) { ", peripheries=2" } else { "" };
            out.push_str(&format!(
                "{indent}\"{prefix}{name}\" [label=\"{name}\\n{{{}}}\"{shape}];\n",
                atoms.join(",")
            ));
        }
        for (x, y) in semantics::covering_pairs(&self.up) {
            out.push_str(&format!(
                "{indent}\"{prefix}{}\" -> \"{prefix}{}\" [style=dashed];\n",
                self.worlds.name(x),
                self.worlds.name(y)
            ));
        }
    }
}

impl Semantics for IntuitionisticModel {
    fn point_count(&self) -> usize {
        self.len()
    }

    fn implication(&self, a: &PointSet, b: &PointSet) -> PointSet {
        semantics::implication_over(&self.up, a, b)
    }

    fn necessity(&self, _a: &PointSet) -> Option<PointSet> {
        None
    }
}

/// Wire format: `{"worlds":[..], "leq":[[x,y],..], "val":{w:[atoms]}, "root": id|null}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpcModelJson {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub leq: Vec<(String, String)>,
    #[serde(default)]
    pub val: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub root: Option<String>,
}

impl TryFrom<IpcModelJson> for IntuitionisticModel {
    type Error = ModelError;

    fn try_from(j: IpcModelJson) -> Result<Self, Self::Error> {
        IntuitionisticModel::new(j.worlds, &j.leq, &j.val, j.root.as_deref())
    }
}

impl From<IntuitionisticModel> for IpcModelJson {
    fn from(m: IntuitionisticModel) -> Self {
        IpcModelJson {
            worlds: m.worlds.names().to_vec(),
            leq: row_pairs(&m.worlds, &m.up),
            val: valuation_to_map(&m.worlds, &m.val),
            root: m.root.map(|r| m.worlds.name(r).to_string()),
        }
    }
}
