//! Shared machinery for the three model classes: finite point sets, world
//! tables and a truth-set evaluator that is generic over the way a model
//! interprets implication and the box.
//!
//! Every forcing relation in this crate is computed bottom-up: the truth set
//! of a compound formula depends only on the truth sets of its immediate
//! subformulas. That makes the evaluator usable both for concrete formulas
//! and for axiom schemes whose metavariables are bound to arbitrary sets.

use std::collections::HashMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::ModelError;
use crate::formula::Formula;

/// A subset of the points `0..len` of some model.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

impl PointSet {
    pub fn empty(len: usize) -> Self {
        PointSet {
            len,
            words: SmallVec::from_elem(0, len.div_ceil(64)),
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    /// Points whose bit is set in `mask` (only meaningful for `len <= 64`).
    pub fn from_mask(len: usize, mask: u64) -> Self {
        debug_assert!(len <= 64);
        let mut s = Self::empty(len);
        if len > 0 {
            let keep = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            s.words[0] = mask & keep;
        }
        s
    }

    pub fn universe_len(&self) -> usize {
        self.len
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "point {i} outside universe of {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.len {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// `self ∩ a ⊆ b`, without allocating.
    pub fn meets_within(&self, a: &PointSet, b: &PointSet) -> bool {
        self.words
            .iter()
            .zip(&a.words)
            .zip(&b.words)
            .all(|((s, a), b)| s & a & !b == 0)
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn union_with(&mut self, other: &PointSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        out
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    /// First point of the universe not in the set.
    pub fn first_missing(&self) -> Option<usize> {
        (0..self.len).find(|i| !self.contains(*i))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |i| self.contains(*i))
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Ordered table of world identifiers with reverse lookup.
#[derive(Clone, Debug, Default)]
pub struct WorldSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl WorldSet {
    pub fn new<I, S>(names: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = WorldSet::default();
        for name in names {
            let name = name.into();
            if set.index.contains_key(&name) {
                return Err(ModelError::DuplicateWorld(name));
            }
            set.index.insert(name.clone(), set.names.len());
            set.names.push(name);
        }
        if set.names.is_empty() {
            return Err(ModelError::Empty);
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<usize, ModelError> {
        self.get(name)
            .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
    }
}

/// Builds successor rows from a list of named pairs.
pub(crate) fn relation_rows(
    worlds: &WorldSet,
    pairs: &[(String, String)],
) -> Result<Vec<PointSet>, ModelError> {
    let n = worlds.len();
    let mut rows = vec![PointSet::empty(n); n];
    for (x, y) in pairs {
        let (i, j) = (worlds.lookup(x)?, worlds.lookup(y)?);
        rows[i].insert(j);
    }
    Ok(rows)
}

pub(crate) fn row_pairs(worlds: &WorldSet, rows: &[PointSet]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for j in row.iter() {
            out.push((worlds.name(i).to_string(), worlds.name(j).to_string()));
        }
    }
    out
}

/// Pairs `(x, y)` with `x < y` (or `x == y`) in the Hasse diagram of `rows`:
/// non-reflexive and without edges implied by transitivity.
pub(crate) fn covering_pairs(rows: &[PointSet]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (x, row) in rows.iter().enumerate() {
        for y in row.iter().filter(|y| *y != x) {
            let implied = row
                .iter()
                .any(|z| z != x && z != y && rows[z].contains(y));
            if !implied {
                out.push((x, y));
            }
        }
    }
    out
}

/// How a model interprets the two non-local connectives.
pub trait Semantics {
    /// Number of points the model evaluates at.
    fn point_count(&self) -> usize;

    /// `{x | every ≤-successor of x in a is in b}`.
    fn implication(&self, a: &PointSet, b: &PointSet) -> PointSet;

    /// Truth set of `□φ` given the truth set of `φ`; `None` when the model
    /// has no modal structure.
    fn necessity(&self, a: &PointSet) -> Option<PointSet>;
}

/// Evaluation stopped on a box in a model without a modal relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoModality;

/// Computes the truth set of `f`, looking atoms up through `atom`.
pub fn truth_set<S, A>(model: &S, f: &Formula, atom: &mut A) -> Result<PointSet, NoModality>
where
    S: Semantics + ?Sized,
    A: FnMut(&str) -> PointSet,
{
    let n = model.point_count();
    Ok(match f {
        Formula::Top => PointSet::full(n),
        Formula::Bot => PointSet::empty(n),
        Formula::Atom(p) => atom(p),
        Formula::And(l, r) => {
            truth_set(model, l, atom)?.intersection(&truth_set(model, r, atom)?)
        }
        Formula::Or(l, r) => truth_set(model, l, atom)?.union(&truth_set(model, r, atom)?),
        Formula::Imp(l, r) => {
            let a = truth_set(model, l, atom)?;
            let b = truth_set(model, r, atom)?;
            model.implication(&a, &b)
        }
        Formula::Box(body) => {
            let a = truth_set(model, body, atom)?;
            model.necessity(&a).ok_or(NoModality)?
        }
    })
}

/// Heyting implication over an explicit ≤-successor table.
pub(crate) fn implication_over(up: &[PointSet], a: &PointSet, b: &PointSet) -> PointSet {
    let mut out = PointSet::empty(up.len());
    for (x, row) in up.iter().enumerate() {
        if row.meets_within(a, b) {
            out.insert(x);
        }
    }
    out
}

/// Box over an explicit accessibility table.
pub(crate) fn necessity_over(acc: &[PointSet], a: &PointSet) -> PointSet {
    let mut out = PointSet::empty(acc.len());
    for (x, row) in acc.iter().enumerate() {
        if row.is_subset(a) {
            out.insert(x);
        }
    }
    out
}
