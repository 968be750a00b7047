//! Decision procedures for the propositional base logics.
//!
//! Both deciders work on formulas in which every maximal boxed subformula is
//! an opaque atom. IPC uses Dyckhoff's contraction-free sequent calculus
//! (terminating without loop checks); CPC uses the invertible two-sided
//! sequent calculus. Sequents are sets, and results are memoised per decider.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use crate::formula::Formula;

use super::Logic;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Prop {
    Bot,
    Top,
    Atom(u32),
    And(P, P),
    Or(P, P),
    Imp(P, P),
}

type P = Rc<Prop>;

fn imp(a: P, b: P) -> P {
    Rc::new(Prop::Imp(a, b))
}

/// Atoms and boxed subformulas numbered on first sight.
#[derive(Default)]
struct Interner {
    ids: HashMap<Formula, u32>,
}

impl Interner {
    fn prop(&mut self, f: &Formula) -> P {
        Rc::new(match f {
            Formula::Top => Prop::Top,
            Formula::Bot => Prop::Bot,
            Formula::Atom(_) | Formula::Box(_) => {
                let next = self.ids.len() as u32;
                Prop::Atom(*self.ids.entry(f.clone()).or_insert(next))
            }
            Formula::And(l, r) => Prop::And(self.prop(l), self.prop(r)),
            Formula::Or(l, r) => Prop::Or(self.prop(l), self.prop(r)),
            Formula::Imp(l, r) => Prop::Imp(self.prop(l), self.prop(r)),
        })
    }
}

fn normalise(mut v: Vec<P>) -> Vec<P> {
    v.sort();
    v.dedup();
    v
}

fn with(ctx: &[P], i: usize, added: impl IntoIterator<Item = P>) -> Vec<P> {
    let mut out: Vec<P> = ctx
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, f)| f.clone())
        .collect();
    out.extend(added);
    out
}

fn plus(ctx: &[P], added: impl IntoIterator<Item = P>) -> Vec<P> {
    let mut out = ctx.to_vec();
    out.extend(added);
    out
}

#[derive(Default)]
struct Intuitionistic {
    memo: HashMap<(Vec<P>, P), bool>,
}

impl Intuitionistic {
    fn prove(&mut self, ctx: Vec<P>, goal: P) -> bool {
        let ctx = normalise(ctx);
        let key = (ctx, goal);
        if let Some(&known) = self.memo.get(&key) {
            return known;
        }
        let result = self.search(&key.0, &key.1);
        self.memo.insert(key, result);
        result
    }

    fn search(&mut self, ctx: &[P], goal: &P) -> bool {
        if *goal.as_ref() == Prop::Top || ctx.contains(goal) {
            return true;
        }
        let atoms: BTreeSet<u32> = ctx
            .iter()
            .filter_map(|f| match f.as_ref() {
                Prop::Atom(a) => Some(*a),
                _ => None,
            })
            .collect();

        // Invertible left rules that do not branch.
        for (i, f) in ctx.iter().enumerate() {
            match f.as_ref() {
                Prop::Bot => return true,
                Prop::Top => return self.prove(with(ctx, i, []), goal.clone()),
                Prop::And(a, b) => {
                    return self.prove(with(ctx, i, [a.clone(), b.clone()]), goal.clone())
                }
                Prop::Imp(l, r) => match l.as_ref() {
                    Prop::Atom(a) if atoms.contains(a) => {
                        return self.prove(with(ctx, i, [r.clone()]), goal.clone())
                    }
                    Prop::Top => return self.prove(with(ctx, i, [r.clone()]), goal.clone()),
                    Prop::Bot => return self.prove(with(ctx, i, []), goal.clone()),
                    Prop::And(c, d) => {
                        let curried = imp(c.clone(), imp(d.clone(), r.clone()));
                        return self.prove(with(ctx, i, [curried]), goal.clone());
                    }
                    Prop::Or(c, d) => {
                        let split = [imp(c.clone(), r.clone()), imp(d.clone(), r.clone())];
                        return self.prove(with(ctx, i, split), goal.clone());
                    }
                    _ => {}
                },
                _ => {}
            }
        }
        // Invertible right rules.
        match goal.as_ref() {
            Prop::And(a, b) => {
                return self.prove(ctx.to_vec(), a.clone()) && self.prove(ctx.to_vec(), b.clone())
            }
            Prop::Imp(a, b) => return self.prove(plus(ctx, [a.clone()]), b.clone()),
            _ => {}
        }
        // Disjunction on the left is invertible but branches.
        for (i, f) in ctx.iter().enumerate() {
            if let Prop::Or(a, b) = f.as_ref() {
                return self.prove(with(ctx, i, [a.clone()]), goal.clone())
                    && self.prove(with(ctx, i, [b.clone()]), goal.clone());
            }
        }
        // Non-invertible choices.
        if let Prop::Or(a, b) = goal.as_ref() {
            if self.prove(ctx.to_vec(), a.clone()) || self.prove(ctx.to_vec(), b.clone()) {
                return true;
            }
        }
        for (i, f) in ctx.iter().enumerate() {
            if let Prop::Imp(l, b) = f.as_ref() {
                if let Prop::Imp(_, d) = l.as_ref() {
                    let left = self.prove(with(ctx, i, [imp(d.clone(), b.clone())]), l.clone());
                    if left && self.prove(with(ctx, i, [b.clone()]), goal.clone()) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

#[derive(Default)]
struct Classical {
    memo: HashMap<(Vec<P>, Vec<P>), bool>,
}

impl Classical {
    fn prove(&mut self, left: Vec<P>, right: Vec<P>) -> bool {
        let key = (normalise(left), normalise(right));
        if let Some(&known) = self.memo.get(&key) {
            return known;
        }
        let result = self.search(&key.0, &key.1);
        self.memo.insert(key, result);
        result
    }

    fn search(&mut self, left: &[P], right: &[P]) -> bool {
        if left.iter().any(|f| *f.as_ref() == Prop::Bot)
            || right.iter().any(|f| *f.as_ref() == Prop::Top)
            || left.iter().any(|f| right.contains(f))
        {
            return true;
        }
        for (i, f) in left.iter().enumerate() {
            match f.as_ref() {
                Prop::Top => return self.prove(with(left, i, []), right.to_vec()),
                Prop::And(a, b) => {
                    return self.prove(with(left, i, [a.clone(), b.clone()]), right.to_vec())
                }
                _ => {}
            }
        }
        for (i, f) in right.iter().enumerate() {
            match f.as_ref() {
                Prop::Bot => return self.prove(left.to_vec(), with(right, i, [])),
                Prop::Or(a, b) => {
                    return self.prove(left.to_vec(), with(right, i, [a.clone(), b.clone()]))
                }
                Prop::Imp(a, b) => {
                    return self.prove(plus(left, [a.clone()]), with(right, i, [b.clone()]))
                }
                _ => {}
            }
        }
        for (i, f) in left.iter().enumerate() {
            match f.as_ref() {
                Prop::Or(a, b) => {
                    return self.prove(with(left, i, [a.clone()]), right.to_vec())
                        && self.prove(with(left, i, [b.clone()]), right.to_vec())
                }
                Prop::Imp(a, b) => {
                    return self.prove(with(left, i, []), plus(right, [a.clone()]))
                        && self.prove(with(left, i, [b.clone()]), right.to_vec())
                }
                _ => {}
            }
        }
        for (i, f) in right.iter().enumerate() {
            if let Prop::And(a, b) = f.as_ref() {
                return self.prove(left.to_vec(), with(right, i, [a.clone()]))
                    && self.prove(left.to_vec(), with(right, i, [b.clone()]));
            }
        }
        false
    }
}

/// Decides `premises ⊢ f` for a fixed premise set, reusing work across queries.
pub struct Decider {
    logic: Logic,
    interner: Interner,
    premises: Vec<P>,
    ipc: Intuitionistic,
    cpc: Classical,
}

impl Decider {
    pub fn new(logic: Logic, premises: &[Formula]) -> Self {
        let mut interner = Interner::default();
        let premises = premises.iter().map(|f| interner.prop(f)).collect();
        Decider {
            logic,
            interner,
            premises,
            ipc: Intuitionistic::default(),
            cpc: Classical::default(),
        }
    }

    pub fn derives(&mut self, f: &Formula) -> bool {
        let goal = self.interner.prop(f);
        match self.logic {
            Logic::Ipc => self.ipc.prove(self.premises.clone(), goal),
            Logic::Cpc => self.cpc.prove(self.premises.clone(), vec![goal]),
        }
    }
}

/// `premises ⊢_CPC f`, with boxed subformulas read as atoms.
pub fn decide_cpc(premises: &[Formula], f: &Formula) -> bool {
    Decider::new(Logic::Cpc, premises).derives(f)
}

/// `premises ⊢_IPC f`, with boxed subformulas read as atoms.
pub fn decide_ipc(premises: &[Formula], f: &Formula) -> bool {
    Decider::new(Logic::Ipc, premises).derives(f)
}

pub fn decide(logic: Logic, premises: &[Formula], f: &Formula) -> bool {
    Decider::new(logic, premises).derives(f)
}
