//! Bounded enumeration of finite models: countermodel search and
//! fragment-bounded certification of axiom schemes.
//!
//! Candidates are produced as a deterministic stream, first by size, then by
//! the order structure, then the modal structure, then the valuation. Only
//! labellings whose worlds are sorted by a degree-based key are kept, which
//! removes many isomorphic copies while keeping at least one labelling of
//! every model. Candidates are evaluated in parallel chunks and the earliest
//! refutation in stream order is reported, so results do not depend on the
//! number of worker threads.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::birelational::{up_sets, BirelationalModel};
use crate::error::EvalError;
use crate::formula::{Formula, Scheme, Substitution};
use crate::ipc_model::IntuitionisticModel;
use crate::mixed::ConcreteMixedModel;
use crate::semantics::{self, PointSet, Semantics, WorldSet};

/// Default value of [`SearchBounds::max_candidates`].
pub const DEFAULT_BUDGET: u64 = 10_000_000;

const MAX_WORLDS: usize = 16;
const MAX_COMPONENT_WORLDS: usize = 8;
const CHUNK: usize = 4096;
const FRAME_CHUNK: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum ModelClass {
    /// Rooted intuitionistic Kripke models; formulas are checked at the root.
    #[serde(rename = "ipc")]
    RootedIpc,
    #[serde(rename = "bm")]
    Bm,
    #[serde(rename = "bm+bem")]
    BmBem,
    #[serde(rename = "cmm")]
    Cmm,
}

impl ModelClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelClass::RootedIpc => "ipc",
            ModelClass::Bm => "bm",
            ModelClass::BmBem => "bm+bem",
            ModelClass::Cmm => "cmm",
        }
    }

    fn is_modal(self) -> bool {
        self != ModelClass::RootedIpc
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ipc" | "rooted-ipc" => Ok(ModelClass::RootedIpc),
            "bm" => Ok(ModelClass::Bm),
            "bm+bem" | "bm-bem" | "bem" => Ok(ModelClass::BmBem),
            "cmm" => Ok(ModelClass::Cmm),
            _ => Err(format!("unknown model class `{s}` (expected ipc, bm, bm+bem or cmm)")),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SearchBounds {
    /// Worlds per model; frame worlds for the CMM class.
    pub max_worlds: usize,
    /// Points per component (CMM class only).
    pub max_component_worlds: usize,
    pub atoms: BTreeSet<String>,
    /// Maximum number of candidate models examined.
    pub max_candidates: u64,
}

impl SearchBounds {
    pub fn new<S: Into<String>>(max_worlds: usize, atoms: impl IntoIterator<Item = S>) -> Self {
        SearchBounds {
            max_worlds,
            max_component_worlds: 2,
            atoms: atoms.into_iter().map(Into::into).collect(),
            max_candidates: DEFAULT_BUDGET,
        }
    }

    pub fn with_component_worlds(mut self, n: usize) -> Self {
        self.max_component_worlds = n;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.max_candidates = budget;
        self
    }

    fn check(&self) -> Result<(), SearchError> {
        if self.max_worlds == 0 || self.max_component_worlds == 0 || self.max_candidates == 0 {
            return Err(SearchError::InvalidBounds("all bounds must be at least 1".into()));
        }
        if self.max_worlds > MAX_WORLDS {
            return Err(SearchError::InvalidBounds(format!(
                "max_worlds is limited to {MAX_WORLDS}"
            )));
        }
        if self.max_component_worlds > MAX_COMPONENT_WORLDS {
            return Err(SearchError::InvalidBounds(format!(
                "max_component_worlds is limited to {MAX_COMPONENT_WORLDS}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("atoms {0:?} are not in the search atom set")]
    MissingAtoms(Vec<String>),
    #[error("`{0}` contains a box, which the ipc class cannot interpret")]
    ModalFormula(String),
}

/// A model of one of the searchable classes.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Model {
    Ipc(IntuitionisticModel),
    Bm(BirelationalModel),
    Cmm(ConcreteMixedModel),
}

impl Model {
    /// Whether the model passes the validator of `class`.
    pub fn conforms_to(&self, class: ModelClass) -> bool {
        match (self, class) {
            (Model::Ipc(m), ModelClass::RootedIpc) => m.root().is_some() && m.validate().is_ok(),
            (Model::Bm(m), ModelClass::Bm) => m.validate().is_ok(),
            (Model::Bm(m), ModelClass::BmBem) => m.validate().is_ok() && m.check_bem().is_empty(),
            (Model::Cmm(m), ModelClass::Cmm) => m.validate().is_ok(),
            _ => false,
        }
    }

    pub fn forces_at(&self, world: &str, f: &Formula) -> Result<bool, EvalError> {
        match self {
            Model::Ipc(m) => m.forces_at(world, f),
            Model::Bm(m) => Ok(m.forces_at(world, f)?),
            Model::Cmm(m) => Ok(m.forces_at(world, f)?),
        }
    }

    pub fn to_dot(&self) -> String {
        match self {
            Model::Ipc(m) => m.to_dot(),
            Model::Bm(m) => m.to_dot(),
            Model::Cmm(m) => m.to_dot(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Countermodel { model: Model, world: String },
    ExhaustedWithinBounds { candidates: u64 },
    BudgetExceeded { candidates: u64 },
}

impl SearchOutcome {
    pub fn countermodel(&self) -> Option<(&Model, &str)> {
        match self {
            SearchOutcome::Countermodel { model, world } => Some((model, world)),
            _ => None,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self, SearchOutcome::ExhaustedWithinBounds { .. })
    }
}

// ---------------------------------------------------------------------------
// Frames

enum Modal {
    None,
    Acc(Vec<PointSet>),
    /// Concrete mixed frames; `units` are the frame worlds.
    Components {
        frame_acc: Vec<PointSet>,
        succ_roots: Vec<PointSet>,
    },
}

/// The valuation-free part of a candidate, over flattened points.
struct Frame {
    class: ModelClass,
    up: Vec<PointSet>,
    modal: Modal,
    /// Point ranges of the units whose labelling is canonicalised
    /// (worlds, or frame worlds for mixed models).
    units: Vec<std::ops::Range<usize>>,
    /// `ties[u]`: units `u` and `u + 1` have the same frame key.
    ties: Vec<bool>,
}

impl Semantics for Frame {
    fn point_count(&self) -> usize {
        self.up.len()
    }

    fn implication(&self, a: &PointSet, b: &PointSet) -> PointSet {
        semantics::implication_over(&self.up, a, b)
    }

    fn necessity(&self, a: &PointSet) -> Option<PointSet> {
        match &self.modal {
            Modal::None => None,
            Modal::Acc(acc) => Some(semantics::necessity_over(acc, a)),
            Modal::Components { succ_roots, .. } => {
                let mut out = PointSet::empty(self.up.len());
                for (w, range) in self.units.iter().enumerate() {
                    if succ_roots[w].is_subset(a) {
                        for x in range.clone() {
                            out.insert(x);
                        }
                    }
                }
                Some(out)
            }
        }
    }
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask & (1u64 << i) != 0)
}

fn ties_of<K: PartialEq>(keys: &[K]) -> Vec<bool> {
    keys.windows(2).map(|w| w[0] == w[1]).collect()
}

fn sorted<K: PartialOrd>(keys: &[K]) -> bool {
    keys.windows(2).all(|w| w[0] <= w[1])
}

/// Naturally labelled posets on `n` points as successor masks: `i ≤ j`
/// implies `i <= j`. Rooted posets have point 0 below everything. Only
/// labellings sorted by `(|↓x|, |↑x|)` are visited.
fn for_each_poset(
    n: usize,
    rooted: bool,
    visit: &mut dyn FnMut(&[u64], &[(u32, u32)]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    fn go(
        j: usize,
        n: usize,
        rooted: bool,
        down: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[u64], &[(u32, u32)]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if j == n {
            let mut up: Vec<u64> = (0..n).map(|i| 1u64 << i).collect();
            for (k, d) in down.iter().enumerate() {
                for i in bits(*d) {
                    up[i] |= 1u64 << k;
                }
            }
            let keys: Vec<(u32, u32)> = (0..n)
                .map(|i| (down[i].count_ones() + 1, up[i].count_ones()))
                .collect();
            if sorted(&keys) {
                return visit(&up, &keys);
            }
            return ControlFlow::Continue(());
        }
        for d in 0..(1u64 << j) {
            if rooted && j > 0 && d & 1 == 0 {
                continue;
            }
            if bits(d).all(|i| down[i] & !d == 0) {
                down.push(d);
                go(j + 1, n, rooted, down, visit)?;
                down.pop();
            }
        }
        ControlFlow::Continue(())
    }
    go(0, n, rooted, &mut Vec::with_capacity(n), visit)
}

/// Accessibility rows compatible with the order (`x ≤ y` gives `R(y) ⊆ R(x)`);
/// with `bem`, rows are constant along the order.
fn for_each_acc(
    up: &[u64],
    bem: bool,
    visit: &mut dyn FnMut(&[u64]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    fn go(
        remaining: usize,
        up: &[u64],
        bem: bool,
        acc: &mut [u64],
        visit: &mut dyn FnMut(&[u64]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if remaining == 0 {
            return visit(acc);
        }
        let x = remaining - 1;
        let strict = up[x] & !(1u64 << x);
        let inherited = bits(strict).fold(0, |m, y| m | acc[y]);
        if bem && strict != 0 {
            if bits(strict).any(|y| acc[y] != inherited) {
                return ControlFlow::Continue(());
            }
            acc[x] = inherited;
            return go(x, up, bem, acc, visit);
        }
        for m in 0..(1u64 << up.len()) {
            if m & inherited == inherited {
                acc[x] = m;
                go(x, up, bem, acc, visit)?;
            }
        }
        ControlFlow::Continue(())
    }
    let mut acc = vec![0; up.len()];
    go(up.len(), up, bem, &mut acc, visit)
}

fn rows(n: usize, masks: &[u64]) -> Vec<PointSet> {
    masks.iter().map(|m| PointSet::from_mask(n, *m)).collect()
}

fn degree_keys(masks: &[u64]) -> Vec<(u32, u32, bool)> {
    (0..masks.len())
        .map(|x| {
            let indeg = masks.iter().filter(|m| *m & (1u64 << x) != 0).count() as u32;
            (masks[x].count_ones(), indeg, masks[x] & (1u64 << x) != 0)
        })
        .collect()
}

type Shape = Vec<u64>;

fn component_shapes(max: usize) -> Vec<Shape> {
    let mut shapes = Vec::new();
    for m in 1..=max {
        let _ = for_each_poset(m, true, &mut |up, _| {
            shapes.push(up.to_vec());
            ControlFlow::Continue(())
        });
    }
    shapes
}

fn mixed_frame(shapes: &[Shape], chosen: &[usize], frame_acc: &[u64], ties: Vec<bool>) -> Frame {
    let k = chosen.len();
    let mut offsets = Vec::with_capacity(k);
    let mut total = 0;
    for &s in chosen {
        offsets.push(total);
        total += shapes[s].len();
    }
    let mut up = Vec::with_capacity(total);
    let mut units = Vec::with_capacity(k);
    for (w, &s) in chosen.iter().enumerate() {
        for mask in &shapes[s] {
            up.push(PointSet::from_indices(total, bits(*mask).map(|y| offsets[w] + y)));
        }
        units.push(offsets[w]..offsets[w] + shapes[s].len());
    }
    let succ_roots = frame_acc
        .iter()
        .map(|m| PointSet::from_indices(total, bits(*m).map(|v| offsets[v])))
        .collect();
    Frame {
        class: ModelClass::Cmm,
        up,
        modal: Modal::Components {
            frame_acc: rows(k, frame_acc),
            succ_roots,
        },
        units,
        ties,
    }
}

/// Streams every frame of `class` within the bounds, smallest first.
fn for_each_frame(
    class: ModelClass,
    bounds: &SearchBounds,
    visit: &mut dyn FnMut(Frame) -> ControlFlow<()>,
) -> ControlFlow<()> {
    match class {
        ModelClass::RootedIpc | ModelClass::Bm | ModelClass::BmBem => {
            for n in 1..=bounds.max_worlds {
                for_each_poset(n, class == ModelClass::RootedIpc, &mut |up, keys| {
                    let units = (0..n).map(|x| x..x + 1).collect();
                    if class == ModelClass::RootedIpc {
                        return visit(Frame {
                            class,
                            up: rows(n, up),
                            modal: Modal::None,
                            units,
                            ties: ties_of(keys),
                        });
                    }
                    for_each_acc(up, class == ModelClass::BmBem, &mut |acc| {
                        let full: Vec<_> = keys
                            .iter()
                            .zip(degree_keys(acc))
                            .map(|(a, b)| (*a, b))
                            .collect();
                        if !sorted(&full) {
                            return ControlFlow::Continue(());
                        }
                        visit(Frame {
                            class,
                            up: rows(n, up),
                            modal: Modal::Acc(rows(n, acc)),
                            units: units.clone(),
                            ties: ties_of(&full),
                        })
                    })
                })?;
            }
            ControlFlow::Continue(())
        }
        ModelClass::Cmm => {
            let shapes = component_shapes(bounds.max_component_worlds);
            for k in 1..=bounds.max_worlds {
                let mut chosen = Vec::with_capacity(k);
                for_each_shape_tuple(shapes.len(), k, &mut chosen, &mut |chosen| {
                    for_each_relation(k, &mut |acc| {
                        let keys: Vec<_> = chosen
                            .iter()
                            .zip(degree_keys(acc))
                            .map(|(s, d)| (*s, d))
                            .collect();
                        if !sorted(&keys) {
                            return ControlFlow::Continue(());
                        }
                        visit(mixed_frame(&shapes, chosen, acc, ties_of(&keys)))
                    })
                })?;
            }
            ControlFlow::Continue(())
        }
    }
}

fn for_each_shape_tuple(
    shapes: usize,
    k: usize,
    chosen: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if chosen.len() == k {
        return visit(chosen);
    }
    let start = chosen.last().copied().unwrap_or(0);
    for s in start..shapes {
        chosen.push(s);
        for_each_shape_tuple(shapes, k, chosen, visit)?;
        chosen.pop();
    }
    ControlFlow::Continue(())
}

fn for_each_relation(k: usize, visit: &mut dyn FnMut(&[u64]) -> ControlFlow<()>) -> ControlFlow<()> {
    let mut acc = vec![0u64; k];
    let rows = 1u64 << k;
    loop {
        visit(&acc)?;
        // Odometer with the last row fastest.
        let mut i = k;
        loop {
            if i == 0 {
                return ControlFlow::Continue(());
            }
            i -= 1;
            acc[i] += 1;
            if acc[i] < rows {
                break;
            }
            acc[i] = 0;
        }
    }
}

/// Monotone valuations of `atoms` atoms on `frame`, one up-set per atom,
/// filtered so that tied units appear in nondecreasing valuation order.
fn for_each_valuation(
    frame: &Frame,
    ups: &[PointSet],
    atoms: usize,
    visit: &mut dyn FnMut(&[PointSet]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut idx = vec![0usize; atoms];
    let mut val: Vec<PointSet> = vec![ups[0].clone(); atoms];
    loop {
        if canonical_valuation(frame, &val) {
            visit(&val)?;
        }
        let mut i = atoms;
        loop {
            if i == 0 {
                return ControlFlow::Continue(());
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < ups.len() {
                val[i] = ups[idx[i]].clone();
                break;
            }
            idx[i] = 0;
            val[i] = ups[0].clone();
        }
    }
}

fn canonical_valuation(frame: &Frame, val: &[PointSet]) -> bool {
    let key = |u: usize| -> Vec<u64> {
        frame.units[u]
            .clone()
            .map(|x| {
                val.iter()
                    .enumerate()
                    .filter(|(_, s)| s.contains(x))
                    .fold(0u64, |m, (a, _)| m | (1u64 << a))
            })
            .collect()
    };
    frame
        .ties
        .iter()
        .enumerate()
        .all(|(u, tied)| !tied || key(u) <= key(u + 1))
}

fn world_names(n: usize) -> WorldSet {
    WorldSet::new((0..n).map(|i| format!("w{i}"))).expect("generated names are distinct")
}

fn point_valuation(val: &[PointSet], atoms: &[String], x: usize) -> BTreeSet<String> {
    atoms
        .iter()
        .zip(val)
        .filter(|(_, s)| s.contains(x))
        .map(|(a, _)| a.clone())
        .collect()
}

fn build_model(frame: &Frame, val: &[PointSet], atoms: &[String]) -> Model {
    let n = frame.up.len();
    let vals: Vec<BTreeSet<String>> = (0..n).map(|x| point_valuation(val, atoms, x)).collect();
    match &frame.modal {
        Modal::None => Model::Ipc(IntuitionisticModel::from_parts(
            world_names(n),
            frame.up.clone(),
            vals,
            Some(0),
        )),
        Modal::Acc(acc) => Model::Bm(BirelationalModel::from_parts(
            world_names(n),
            frame.up.clone(),
            acc.clone(),
            vals,
        )),
        Modal::Components { frame_acc, .. } => {
            let components = frame
                .units
                .iter()
                .enumerate()
                .map(|(w, range)| {
                    let start = range.start;
                    let len = range.len();
                    let names = WorldSet::new((0..len).map(|i| format!("w{w}_{i}")))
                        .expect("generated names are distinct");
                    let up = range
                        .clone()
                        .map(|x| PointSet::from_indices(len, frame.up[x].iter().map(|y| y - start)))
                        .collect();
                    let local_val = range.clone().map(|x| vals[x].clone()).collect();
                    IntuitionisticModel::from_parts(names, up, local_val, Some(0))
                })
                .collect();
            Model::Cmm(
                ConcreteMixedModel::from_components(
                    world_names(frame.units.len()),
                    frame_acc.clone(),
                    components,
                )
                .expect("generated components are rooted and disjoint"),
            )
        }
    }
}

fn point_name(frame: &Frame, x: usize) -> String {
    match frame.class {
        ModelClass::Cmm => {
            let w = frame.units.iter().position(|r| r.contains(&x)).expect("point in a unit");
            format!("w{w}_{}", x - frame.units[w].start)
        }
        _ => format!("w{x}"),
    }
}

fn check_query(class: ModelClass, f: &Formula, bounds: &SearchBounds) -> Result<(), SearchError> {
    bounds.check()?;
    let missing: Vec<String> = f.atoms().difference(&bounds.atoms).cloned().collect();
    if !missing.is_empty() {
        return Err(SearchError::MissingAtoms(missing));
    }
    if !class.is_modal() && !f.is_box_free() {
        return Err(SearchError::ModalFormula(f.to_string()));
    }
    Ok(())
}

/// Calls `visit` on every model of `class` within `bounds`, valued over the
/// bound atoms, in search order.
pub fn for_each_model(
    class: ModelClass,
    bounds: &SearchBounds,
    mut visit: impl FnMut(&Model) -> ControlFlow<()>,
) -> Result<(), SearchError> {
    bounds.check()?;
    let atoms: Vec<String> = bounds.atoms.iter().cloned().collect();
    let _ = for_each_frame(class, bounds, &mut |frame| {
        let ups = up_sets(&frame.up);
        for_each_valuation(&frame, &ups, atoms.len(), &mut |val| {
            visit(&build_model(&frame, val, &atoms))
        })
    });
    Ok(())
}

/// Searches `class` for a model refuting `f`: at the root for the ipc class,
/// at some point otherwise. Valuations range over the atoms of `f`, which
/// must all be in `bounds.atoms`.
pub fn find_countermodel(
    class: ModelClass,
    f: &Formula,
    bounds: &SearchBounds,
) -> Result<SearchOutcome, SearchError> {
    check_query(class, f, bounds)?;
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    let refutes = |frame: &Frame, val: &[PointSet]| -> Option<usize> {
        let mut lookup = |p: &str| {
            let i = atoms.iter().position(|a| a == p).expect("atom of the formula");
            val[i].clone()
        };
        let set = semantics::truth_set(frame, f, &mut lookup).expect("modality checked");
        set.first_missing()
    };

    let mut buffer: Vec<(Arc<Frame>, Vec<PointSet>)> = Vec::with_capacity(CHUNK);
    let mut seen = 0u64;
    let mut exceeded = false;
    let mut found: Option<(Arc<Frame>, Vec<PointSet>, usize)> = None;
    let flush = |buffer: &mut Vec<(Arc<Frame>, Vec<PointSet>)>| {
        let hit = buffer
            .par_iter()
            .map(|(frame, val)| refutes(frame, val))
            .enumerate()
            .find_first(|(_, r)| r.is_some());
        let out = hit.map(|(i, r)| {
            let (frame, val) = buffer.swap_remove(i);
            (frame, val, r.expect("found"))
        });
        buffer.clear();
        out
    };
    let _ = for_each_frame(class, bounds, &mut |frame| {
        let frame = Arc::new(frame);
        let ups = up_sets(&frame.up);
        for_each_valuation(&frame, &ups, atoms.len(), &mut |val| {
            if seen == bounds.max_candidates {
                exceeded = true;
                return ControlFlow::Break(());
            }
            seen += 1;
            buffer.push((frame.clone(), val.to_vec()));
            if buffer.len() == CHUNK {
                found = flush(&mut buffer);
                if found.is_some() {
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        })
    });
    if found.is_none() && !buffer.is_empty() {
        found = flush(&mut buffer);
    }
    Ok(match found {
        Some((frame, val, x)) => SearchOutcome::Countermodel {
            model: build_model(&frame, &val, &atoms),
            world: point_name(&frame, x),
        },
        None if exceeded => SearchOutcome::BudgetExceeded { candidates: seen },
        None => SearchOutcome::ExhaustedWithinBounds { candidates: seen },
    })
}

// ---------------------------------------------------------------------------
// Certification

/// The algebra of up-sets of a frame, with operation tables.
struct Algebra {
    sets: Vec<PointSet>,
    index: HashMap<PointSet, u32>,
    and: Vec<u32>,
    or: Vec<u32>,
    imp: Vec<u32>,
    boxed: Option<Vec<u32>>,
    top: u32,
    bot: u32,
}

impl Algebra {
    fn new(frame: &Frame) -> Self {
        let sets = up_sets(&frame.up);
        let index: HashMap<PointSet, u32> =
            sets.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        let u = sets.len();
        let find = |s: &PointSet| *index.get(s).expect("operations preserve up-sets");
        let mut and = Vec::with_capacity(u * u);
        let mut or = Vec::with_capacity(u * u);
        let mut imp = Vec::with_capacity(u * u);
        for a in &sets {
            for b in &sets {
                and.push(find(&a.intersection(b)));
                or.push(find(&a.union(b)));
                imp.push(find(&frame.implication(a, b)));
            }
        }
        let boxed = frame
            .necessity(&sets[0])
            .map(|_| sets.iter().map(|a| find(&frame.necessity(a).expect("modal"))).collect());
        let n = frame.up.len();
        let top = find(&PointSet::full(n));
        let bot = find(&PointSet::empty(n));
        Algebra {
            sets,
            index,
            and,
            or,
            imp,
            boxed,
            top,
            bot,
        }
    }

    fn len(&self) -> usize {
        self.sets.len()
    }

    fn bin(&self, table: &[u32], a: u32, b: u32) -> u32 {
        table[a as usize * self.len() + b as usize]
    }
}

/// A scheme compiled over metavariable slots.
enum Expr {
    Var(usize),
    Top,
    Bot,
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Imp(Box<Expr>, Box<Expr>),
    Box(Box<Expr>),
}

impl Expr {
    fn compile(f: &Formula, vars: &[String]) -> Expr {
        let c = |g: &Formula| Box::new(Expr::compile(g, vars));
        match f {
            Formula::Top => Expr::Top,
            Formula::Bot => Expr::Bot,
            Formula::Atom(m) => Expr::Var(vars.iter().position(|v| v == m).expect("metavariable")),
            Formula::And(l, r) => Expr::And(c(l), c(r)),
            Formula::Or(l, r) => Expr::Or(c(l), c(r)),
            Formula::Imp(l, r) => Expr::Imp(c(l), c(r)),
            Formula::Box(b) => Expr::Box(c(b)),
        }
    }

    fn eval(&self, alg: &Algebra, env: &[u32]) -> u32 {
        match self {
            Expr::Var(i) => env[*i],
            Expr::Top => alg.top,
            Expr::Bot => alg.bot,
            Expr::And(l, r) => alg.bin(&alg.and, l.eval(alg, env), r.eval(alg, env)),
            Expr::Or(l, r) => alg.bin(&alg.or, l.eval(alg, env), r.eval(alg, env)),
            Expr::Imp(l, r) => alg.bin(&alg.imp, l.eval(alg, env), r.eval(alg, env)),
            Expr::Box(b) => alg.boxed.as_ref().expect("modal frame")[b.eval(alg, env) as usize],
        }
    }

    /// First assignment from `domain` (odometer, first slot slowest) that
    /// makes the expression differ from the top element.
    fn first_failure(&self, alg: &Algebra, slots: usize, domain: &[u32]) -> Option<Vec<u32>> {
        if domain.is_empty() {
            return None;
        }
        let mut idx = vec![0usize; slots];
        let mut env: Vec<u32> = vec![domain[0]; slots];
        loop {
            if self.eval(alg, &env) != alg.top {
                return Some(env);
            }
            let mut i = slots;
            loop {
                if i == 0 {
                    return None;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < domain.len() {
                    env[i] = domain[idx[i]];
                    break;
                }
                idx[i] = 0;
                env[i] = domain[0];
            }
        }
    }
}

/// Truth sets of formulas of depth at most `depth` over `atoms`, in discovery
/// order, each with the first formula found to define it: atoms, then `T`,
/// then `F`, then layer by layer.
fn definable_sets(alg: &Algebra, atoms: &[String], val: &[PointSet], depth: usize) -> Vec<(u32, Formula)> {
    let mut known: Vec<(u32, Formula)> = Vec::new();
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    let mut push = |i: u32, f: Formula, known: &mut Vec<(u32, Formula)>| {
        if seen.insert(i) {
            known.push((i, f));
        }
    };
    for (a, s) in atoms.iter().zip(val) {
        push(alg.index[s], Formula::atom(a.clone()), &mut known);
    }
    push(alg.top, Formula::Top, &mut known);
    push(alg.bot, Formula::Bot, &mut known);
    for _ in 0..depth {
        let prev = known.clone();
        for (a, fa) in &prev {
            if let Some(boxed) = &alg.boxed {
                push(boxed[*a as usize], Formula::boxed(fa.clone()), &mut known);
            }
            for (b, fb) in &prev {
                push(alg.bin(&alg.and, *a, *b), Formula::and(fa.clone(), fb.clone()), &mut known);
                push(alg.bin(&alg.or, *a, *b), Formula::or(fa.clone(), fb.clone()), &mut known);
                push(alg.bin(&alg.imp, *a, *b), Formula::imp(fa.clone(), fb.clone()), &mut known);
            }
        }
    }
    known
}

/// A scheme to certify, with its display id.
#[derive(Clone, Debug)]
pub struct NamedScheme {
    pub id: String,
    pub scheme: Scheme,
}

impl NamedScheme {
    pub fn new(id: impl Into<String>, scheme: Scheme) -> Self {
        NamedScheme {
            id: id.into(),
            scheme,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Refutation {
    pub instance: Formula,
    pub subst: Substitution,
    pub model: Model,
    pub world: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeCertificate {
    pub id: String,
    pub scheme: String,
    /// Earliest refuted instance in search order, if any.
    pub refutation: Option<Refutation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub class: ModelClass,
    pub bounds: SearchBounds,
    pub subst_depth: usize,
    pub frames: u64,
    pub models: u64,
    pub budget_exceeded: bool,
    pub schemes: Vec<SchemeCertificate>,
}

impl CertifyReport {
    pub fn refuted(&self) -> impl Iterator<Item = &SchemeCertificate> {
        self.schemes.iter().filter(|s| s.refutation.is_some())
    }

    /// No refutations and the whole search space was examined.
    pub fn is_clean(&self) -> bool {
        !self.budget_exceeded && self.refuted().next().is_none()
    }
}

struct FrameResult {
    models: u64,
    refutations: Vec<Option<(Vec<PointSet>, Vec<u32>, Formula, Substitution)>>,
}

/// Checks that every instance of every scheme, with metavariables replaced
/// by formulas of depth at most `subst_depth` over `bounds.atoms`, is forced
/// at every point of every model of `class` within `bounds`.
///
/// Each frame is first checked with metavariables ranging over all up-sets,
/// which covers every instance under every valuation at once; only frames
/// failing that test are examined valuation by valuation.
pub fn certify_axiom_validity(
    class: ModelClass,
    schemes: &[NamedScheme],
    bounds: &SearchBounds,
    subst_depth: usize,
) -> Result<CertifyReport, SearchError> {
    bounds.check()?;
    if !class.is_modal() {
        if let Some(s) = schemes.iter().find(|s| !s.scheme.pattern().is_box_free()) {
            return Err(SearchError::ModalFormula(s.scheme.to_string()));
        }
    }
    let atoms: Vec<String> = bounds.atoms.iter().cloned().collect();
    let compiled: Vec<(Vec<String>, Expr)> = schemes
        .iter()
        .map(|s| {
            let vars: Vec<String> = s.scheme.metavariables().iter().cloned().collect();
            let e = Expr::compile(s.scheme.pattern(), &vars);
            (vars, e)
        })
        .collect();

    let examine = |frame: &Frame, skip: &[bool]| -> FrameResult {
        let alg = Algebra::new(frame);
        let all: Vec<u32> = (0..alg.len() as u32).collect();
        let failing: Vec<bool> = compiled
            .iter()
            .zip(skip)
            .map(|((vars, e), skip)| !skip && e.first_failure(&alg, vars.len(), &all).is_some())
            .collect();
        let mut refutations = vec![None; compiled.len()];
        let mut models = 0u64;
        let ups = &alg.sets;
        let _ = for_each_valuation(frame, ups, atoms.len(), &mut |val| {
            models += 1;
            if failing.iter().zip(&refutations).any(|(f, r)| *f && r.is_none()) {
                let defs = definable_sets(&alg, &atoms, val, subst_depth);
                let domain: Vec<u32> = defs.iter().map(|(i, _)| *i).collect();
                for (k, (vars, e)) in compiled.iter().enumerate() {
                    if !failing[k] || refutations[k].is_some() {
                        continue;
                    }
                    if let Some(env) = e.first_failure(&alg, vars.len(), &domain) {
                        let sigma: Substitution = vars
                            .iter()
                            .zip(&env)
                            .map(|(v, i)| {
                                let f = &defs.iter().find(|(j, _)| j == i).expect("definable").1;
                                (v.clone(), f.clone())
                            })
                            .collect();
                        let instance = schemes[k].scheme.instantiate(&sigma);
                        refutations[k] = Some((val.to_vec(), env, instance, sigma));
                    }
                }
            }
            ControlFlow::Continue(())
        });
        FrameResult {
            models,
            refutations,
        }
    };

    let mut report = CertifyReport {
        class,
        bounds: bounds.clone(),
        subst_depth,
        frames: 0,
        models: 0,
        budget_exceeded: false,
        schemes: schemes
            .iter()
            .map(|s| SchemeCertificate {
                id: s.id.clone(),
                scheme: s.scheme.to_string(),
                refutation: None,
            })
            .collect(),
    };
    let mut pending: Vec<Frame> = Vec::with_capacity(FRAME_CHUNK);
    let process = |pending: &mut Vec<Frame>, report: &mut CertifyReport| -> ControlFlow<()> {
        let skip: Vec<bool> = report.schemes.iter().map(|s| s.refutation.is_some()).collect();
        let results: Vec<FrameResult> = pending.par_iter().map(|f| examine(f, &skip)).collect();
        for (frame, result) in pending.iter().zip(results) {
            if report.models + result.models > bounds.max_candidates {
                report.budget_exceeded = true;
                return ControlFlow::Break(());
            }
            report.frames += 1;
            report.models += result.models;
            for (cert, r) in report.schemes.iter_mut().zip(result.refutations) {
                if cert.refutation.is_some() {
                    continue;
                }
                if let Some((val, env, instance, subst)) = r {
                    let model = build_model(frame, &val, &atoms);
                    let alg = Algebra::new(frame);
                    let k = schemes.iter().position(|s| s.id == cert.id).expect("scheme");
                    let value = compiled[k].1.eval(&alg, &env);
                    let x = alg.sets[value as usize].first_missing().expect("refuted");
                    cert.refutation = Some(Refutation {
                        instance,
                        subst,
                        model,
                        world: point_name(frame, x),
                    });
                }
            }
        }
        pending.clear();
        ControlFlow::Continue(())
    };
    let flow = for_each_frame(class, bounds, &mut |frame| {
        pending.push(frame);
        if pending.len() == FRAME_CHUNK {
            return process(&mut pending, &mut report);
        }
        ControlFlow::Continue(())
    });
    if flow.is_continue() && !pending.is_empty() {
        let _ = process(&mut pending, &mut report);
    }
    Ok(report)
}

/// Every instance of `scheme` whose metavariables are replaced by formulas
/// from `pool`, in odometer order with the first metavariable slowest.
pub fn instances(scheme: &Scheme, pool: &[Formula]) -> Vec<Formula> {
    let vars: Vec<&String> = scheme.metavariables().iter().collect();
    let mut out = Vec::new();
    if pool.is_empty() && !vars.is_empty() {
        return out;
    }
    let mut idx = vec![0usize; vars.len()];
    loop {
        let sigma: Substitution = vars
            .iter()
            .zip(&idx)
            .map(|(v, i)| ((*v).clone(), pool[*i].clone()))
            .collect();
        out.push(scheme.instantiate(&sigma));
        let mut i = vars.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < pool.len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// All formulas over `atoms` of depth at most `depth`, built from atoms,
/// `T` and `F` with every connective.
pub fn formulas_up_to_depth(atoms: &[String], depth: usize, modal: bool) -> Vec<Formula> {
    let mut all: Vec<Formula> = atoms.iter().map(|a| Formula::atom(a.clone())).collect();
    all.push(Formula::Top);
    all.push(Formula::Bot);
    for _ in 0..depth {
        let prev = all.clone();
        let mut seen: BTreeSet<Formula> = prev.iter().cloned().collect();
        for a in &prev {
            let mut candidates = Vec::new();
            if modal {
                candidates.push(Formula::boxed(a.clone()));
            }
            for b in &prev {
                candidates.push(Formula::and(a.clone(), b.clone()));
                candidates.push(Formula::or(a.clone(), b.clone()));
                candidates.push(Formula::imp(a.clone(), b.clone()));
            }
            for c in candidates {
                if seen.insert(c.clone()) {
                    all.push(c);
                }
            }
        }
    }
    all
}
