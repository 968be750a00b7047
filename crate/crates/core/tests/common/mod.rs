//! Shared fixtures and independent oracles for the integration tests.
//!
//! The oracles here deliberately avoid the library's truth-set evaluator and
//! search enumeration: forcing is computed pointwise from the clauses,
//! classical validity by truth tables, and model spaces by brute force over
//! all labelled structures.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use kripkemix::formula::{parse, Formula};
use kripkemix::{BirelationalModel, ConcreteMixedModel, IntuitionisticModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn f(s: &str) -> Formula {
    parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
    list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

/// Twenty modal formulas over `p` and `q`.
pub const CORPUS: [&str; 20] = [
    "p",
    "[]p",
    "~[]p",
    "[]p | ~[]p",
    "[](p -> q) -> []p -> []q",
    "[]p -> p",
    "p -> []p",
    "[](p | q) -> []p | []q",
    "~~[]p -> []p",
    "[](p & q) -> []p & []q",
    "[]~p | []p",
    "~[]F",
    "[][]p -> []p",
    "[]p -> [][]p",
    "(p -> q) | (q -> p)",
    "p | ~p",
    "~~p -> p",
    "[](p | ~p)",
    "[]q | ~[]q -> [](q -> p)",
    "([]p -> []q) -> [](p -> q)",
];

pub fn corpus() -> Vec<Formula> {
    CORPUS.iter().map(|s| f(s)).collect()
}

/// Box-free formulas used to cross-check the deciders.
pub const PROP_CORPUS: [&str; 40] = [
    "p -> p",
    "p | ~p",
    "~~(p | ~p)",
    "((p -> q) -> p) -> p",
    "~~p -> p",
    "p -> ~~p",
    "~~~p -> ~p",
    "(p -> q) | (q -> p)",
    "(p -> q) -> (~q -> ~p)",
    "(~q -> ~p) -> (p -> q)",
    "~(p & q) -> ~p | ~q",
    "~p | ~q -> ~(p & q)",
    "~(p | q) -> ~p & ~q",
    "~p & ~q -> ~(p | q)",
    "(p -> q) -> ~p | q",
    "~p | q -> (p -> q)",
    "p & (q | r) -> (p & q) | (p & r)",
    "(p & q) | (p & r) -> p & (q | r)",
    "(p -> q | r) -> (p -> q) | (p -> r)",
    "(~p -> q | r) -> (~p -> q) | (~p -> r)",
    "~p | ~~p",
    "(p -> q) -> ((q -> r) -> (p -> r))",
    "(p -> (q -> r)) -> (p & q -> r)",
    "(p & q -> r) -> (p -> (q -> r))",
    "F -> p",
    "p -> T",
    "~T -> p",
    "(p | q -> r) -> (p -> r) & (q -> r)",
    "((p -> q) -> q) -> (p | q)",
    "(p | q) -> ((p -> q) -> q)",
    "~~(~~p -> p)",
    "~~((p -> q) | (q -> p))",
    "(~~p -> p) -> (p | ~p)",
    "((p -> q) -> r) -> ((p -> r) -> r) -> r",
    "(p -> q) & (q -> p) | ~(p -> q) | ~(q -> p)",
    "p & ~p -> q",
    "~~(p & q) -> ~~p & ~~q",
    "~~p & ~~q -> ~~(p & q)",
    "~~(p -> q) -> (~~p -> ~~q)",
    "((p -> q) -> p) -> ~~p",
];

/// Random box-free formulas over `p`, `q`, `r` from a fixed seed.
pub fn random_prop_formulas(count: usize, seed: u64) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_formula(&mut rng, &["p", "q", "r"], 3, false)).collect()
}

pub fn prop_corpus() -> Vec<Formula> {
    let mut out: Vec<Formula> = PROP_CORPUS.iter().map(|s| f(s)).collect();
    out.extend(random_prop_formulas(30, 7));
    out
}

pub fn random_formula(rng: &mut impl Rng, atoms: &[&str], depth: usize, modal: bool) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..atoms.len() + 2) {
            i if i < atoms.len() => Formula::atom(atoms[i]),
            i if i == atoms.len() => Formula::Bot,
            _ => Formula::Top,
        };
    }
    let sub = |rng: &mut _| random_formula(rng, atoms, depth - 1, modal);
    match rng.gen_range(0..if modal { 5 } else { 4 }) {
        0 => Formula::and(sub(rng), sub(rng)),
        1 => Formula::or(sub(rng), sub(rng)),
        2 => Formula::imp(sub(rng), sub(rng)),
        3 => Formula::not(sub(rng)),
        _ => Formula::boxed(sub(rng)),
    }
}

// ---------------------------------------------------------------------------
// Pointwise forcing

pub fn naive_ipc(m: &IntuitionisticModel, x: usize, f: &Formula) -> bool {
    let n = m.len();
    match f {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Atom(p) => m.valuation(x).contains(p),
        Formula::And(a, b) => naive_ipc(m, x, a) && naive_ipc(m, x, b),
        Formula::Or(a, b) => naive_ipc(m, x, a) || naive_ipc(m, x, b),
        Formula::Imp(a, b) => (0..n)
            .filter(|&y| m.leq(x, y))
            .all(|y| !naive_ipc(m, y, a) || naive_ipc(m, y, b)),
        Formula::Box(_) => panic!("box in an intuitionistic model"),
    }
}

pub fn naive_bm(m: &BirelationalModel, x: usize, f: &Formula) -> bool {
    let n = m.len();
    match f {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Atom(p) => m.valuation(x).contains(p),
        Formula::And(a, b) => naive_bm(m, x, a) && naive_bm(m, x, b),
        Formula::Or(a, b) => naive_bm(m, x, a) || naive_bm(m, x, b),
        Formula::Imp(a, b) => (0..n)
            .filter(|&y| m.leq(x, y))
            .all(|y| !naive_bm(m, y, a) || naive_bm(m, y, b)),
        Formula::Box(a) => (0..n).filter(|&z| m.acc(x, z)).all(|z| naive_bm(m, z, a)),
    }
}

/// Forcing in a concrete mixed model straight from the clauses: implication
/// looks along the component order, the box at the roots of the components
/// of accessible frame worlds.
pub fn naive_cmm(m: &ConcreteMixedModel, x: usize, f: &Formula) -> bool {
    let n = m.points().len();
    match f {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Atom(p) => m.valuation(x).contains(p),
        Formula::And(a, b) => naive_cmm(m, x, a) && naive_cmm(m, x, b),
        Formula::Or(a, b) => naive_cmm(m, x, a) || naive_cmm(m, x, b),
        Formula::Imp(a, b) => (0..n)
            .filter(|&y| m.owner(y) == m.owner(x) && m.leq(x, y))
            .all(|y| !naive_cmm(m, y, a) || naive_cmm(m, y, b)),
        Formula::Box(a) => {
            let w = m.owner(x);
            (0..m.frame().len())
                .filter(|&v| m.frame_acc(w, v))
                .all(|v| naive_cmm(m, m.root(v), a))
        }
    }
}

// ---------------------------------------------------------------------------
// Truth tables

fn opaque(f: &Formula, out: &mut BTreeSet<Formula>) {
    match f {
        Formula::Atom(_) | Formula::Box(_) => {
            out.insert(f.clone());
        }
        Formula::Top | Formula::Bot => {}
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
            opaque(a, out);
            opaque(b, out);
        }
    }
}

fn classical(f: &Formula, val: &BTreeMap<Formula, bool>) -> bool {
    match f {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Atom(_) | Formula::Box(_) => val[f],
        Formula::And(a, b) => classical(a, val) && classical(b, val),
        Formula::Or(a, b) => classical(a, val) || classical(b, val),
        Formula::Imp(a, b) => !classical(a, val) || classical(b, val),
    }
}

/// Classical validity with atoms and boxed subformulas as variables.
pub fn tautology(f: &Formula) -> bool {
    let mut vars = BTreeSet::new();
    opaque(f, &mut vars);
    let vars: Vec<Formula> = vars.into_iter().collect();
    (0u64..1 << vars.len()).all(|mask| {
        let val = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), mask & (1 << i) != 0))
            .collect();
        classical(f, &val)
    })
}

// ---------------------------------------------------------------------------
// Brute-force model spaces

/// Every partial order on `n` labelled points, as successor masks.
pub fn labelled_posets(n: usize) -> Vec<Vec<u64>> {
    let off: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    for bits in 0u64..1 << off.len() {
        let mut up: Vec<u64> = (0..n).map(|i| 1 << i).collect();
        for (k, (i, j)) in off.iter().enumerate() {
            if bits & (1 << k) != 0 {
                up[*i] |= 1 << j;
            }
        }
        let antisymmetric = (0..n).all(|i| (0..n).all(|j| i == j || up[i] & (1 << j) == 0 || up[j] & (1 << i) == 0));
        let transitive = (0..n).all(|i| (0..n).filter(|j| up[i] & (1 << j) != 0).all(|j| up[j] & !up[i] == 0));
        if antisymmetric && transitive {
            out.push(up);
        }
    }
    out
}

pub fn up_closed(up: &[u64], set: u64) -> bool {
    (0..up.len()).filter(|i| set & (1 << i) != 0).all(|i| up[i] & !set == 0)
}

/// Every up-set of the order, as masks.
pub fn up_set_masks(up: &[u64]) -> Vec<u64> {
    (0u64..1 << up.len()).filter(|s| up_closed(up, *s)).collect()
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn mask_pairs(n: usize, rows: &[u64]) -> Vec<(String, String)> {
    let names = names(n);
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rows[i] & (1 << j) != 0 {
                out.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    out
}

pub fn bm_from_masks(up: &[u64], acc: &[u64], val: &[(String, u64)]) -> BirelationalModel {
    let n = up.len();
    let names = names(n);
    let mut v: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (atom, set) in val {
        for i in 0..n {
            if set & (1 << i) != 0 {
                v.entry(names[i].clone()).or_default().push(atom.clone());
            }
        }
    }
    BirelationalModel::new(names.clone(), &mask_pairs(n, up), &mask_pairs(n, acc), &v).unwrap()
}

/// Visits every labelled birelational model on `n` worlds with one atom
/// `p`; with `bem`, only those satisfying the BEM condition. The check
/// is done on masks, independently of the library's validators.
pub fn for_each_labelled_bm(n: usize, bem: bool, mut visit: impl FnMut(&[u64], &[u64], u64)) {
    for up in labelled_posets(n) {
        let ups = up_set_masks(&up);
        let rows = 1u64 << n;
        let mut acc = vec![0u64; n];
        loop {
            let compatible = (0..n).all(|x| {
                (0..n).filter(|y| up[x] & (1 << y) != 0).all(|y| acc[y] & !acc[x] == 0)
            });
            let bem_ok = !bem
                || (0..n).all(|x| (0..n).filter(|y| up[x] & (1 << y) != 0).all(|y| acc[x] & !acc[y] == 0));
            if compatible && bem_ok {
                for p in &ups {
                    visit(&up, &acc, *p);
                }
            }
            let mut i = n;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                acc[i] += 1;
                if acc[i] < rows {
                    break;
                }
                acc[i] = 0;
            }
            if i == 0 && acc.iter().all(|r| *r == 0) {
                break;
            }
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Isomorphism-invariant code of a structure with an order, an
/// accessibility relation and a valuation (as atom masks per point): the
/// least encoding over all relabellings of the points.
pub fn canonical_code(
    n: usize,
    leq: impl Fn(usize, usize) -> bool,
    acc: impl Fn(usize, usize) -> bool,
    val: &[u64],
) -> Vec<u64> {
    permutations(n)
        .into_iter()
        .map(|perm| {
            // perm[i] is the old point placed at position i.
            let mut code = vec![n as u64];
            for i in 0..n {
                let (mut l, mut a) = (0u64, 0u64);
                for j in 0..n {
                    if leq(perm[i], perm[j]) {
                        l |= 1 << j;
                    }
                    if acc(perm[i], perm[j]) {
                        a |= 1 << j;
                    }
                }
                code.extend([l, a, val[perm[i]]]);
            }
            code
        })
        .min()
        .unwrap()
}

fn atom_masks(n: usize, atoms: &[&str], val: impl Fn(usize) -> BTreeSet<String>) -> Vec<u64> {
    (0..n)
        .map(|x| {
            let v = val(x);
            atoms
                .iter()
                .enumerate()
                .filter(|(_, a)| v.contains(**a))
                .fold(0, |s, (k, _)| s | 1 << k)
        })
        .collect()
}

pub fn canonical_bm(m: &BirelationalModel, atoms: &[&str]) -> Vec<u64> {
    let val = atom_masks(m.len(), atoms, |x| m.valuation(x).clone());
    canonical_code(m.len(), |x, y| m.leq(x, y), |x, y| m.acc(x, y), &val)
}

pub fn canonical_ipc(m: &IntuitionisticModel, atoms: &[&str]) -> Vec<u64> {
    let val = atom_masks(m.len(), atoms, |x| m.valuation(x).clone());
    canonical_code(m.len(), |x, y| m.leq(x, y), |_, _| false, &val)
}

// ---------------------------------------------------------------------------
// Random concrete mixed models

/// A random rooted component of at most `max_points` points with a monotone
/// valuation of `atoms`; point names are `{prefix}_{i}` with root `{prefix}_0`.
pub fn random_component(rng: &mut impl Rng, prefix: &str, max_points: usize, atoms: &[&str]) -> IntuitionisticModel {
    let n = rng.gen_range(1..=max_points);
    let posets: Vec<Vec<u64>> = labelled_posets(n)
        .into_iter()
        .filter(|up| up[0] == (1u64 << n) - 1)
        .collect();
    let up = &posets[rng.gen_range(0..posets.len())];
    let ups = up_set_masks(up);
    let names: Vec<String> = (0..n).map(|i| format!("{prefix}_{i}")).collect();
    let mut val: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for a in atoms {
        let set = ups[rng.gen_range(0..ups.len())];
        for i in 0..n {
            if set & (1 << i) != 0 {
                val.entry(names[i].clone()).or_default().push(a.to_string());
            }
        }
    }
    let mut leq = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if up[i] & (1 << j) != 0 {
                leq.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    IntuitionisticModel::new(names.clone(), &leq, &val, Some(&names[0])).unwrap()
}

pub fn random_cmm(seed: u64, max_frame: usize, max_points: usize, atoms: &[&str]) -> ConcreteMixedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=max_frame);
    let frame: Vec<String> = (0..k).map(|i| format!("w{i}")).collect();
    let mut acc = Vec::new();
    for a in &frame {
        for b in &frame {
            if rng.gen_bool(0.4) {
                acc.push((a.clone(), b.clone()));
            }
        }
    }
    let components = frame
        .iter()
        .map(|w| (w.clone(), random_component(&mut rng, w, max_points, atoms)))
        .collect();
    ConcreteMixedModel::new(frame.clone(), &acc, components).unwrap()
}

/// The fixed sample of mixed models shared by the transfer checks.
pub fn cmm_sample() -> Vec<ConcreteMixedModel> {
    (0..200).map(|i| random_cmm(1000 + i, 3, 3, &["p", "q"])).collect()
}

// ---------------------------------------------------------------------------
// Strategies

pub fn arb_formula(modal: bool) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::Top),
        Just(Formula::Bot),
        prop::sample::select(vec!["p", "q", "r", "x1", "long_name"]).prop_map(Formula::atom),
    ];
    leaf.prop_recursive(5, 48, 2, move |inner| {
        let binary = prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::imp(a, b)),
            inner.clone().prop_map(Formula::not),
        ];
        if modal {
            prop_oneof![4 => binary, 1 => inner.prop_map(Formula::boxed)].boxed()
        } else {
            binary.boxed()
        }
    })
}

pub fn arb_cmm() -> impl Strategy<Value = ConcreteMixedModel> {
    any::<u64>().prop_map(|seed| random_cmm(seed, 3, 3, &["p", "q"]))
}
