//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use kripkemix::birelational::{BemViolation, DEFAULT_VALUATION_BOUND};
use kripkemix::formula::Fragment;
use kripkemix::mixed::{check_mixed_clauses, extract_theories};
use kripkemix::proofs::{
    check_derivation, decide_cpc, decide_ipc, ProofFile, RejectReason, IPC_SCHEMES,
};
use kripkemix::search::{
    certify_axiom_validity, find_countermodel, instances, Model, ModelClass, NamedScheme,
    SearchBounds, SearchOutcome,
};
use kripkemix::translate::{birelational_to_cmm, cmm_to_birelational, copy_point_id, TranslateError};
use kripkemix::{BirelationalModel, Formula, HilbertSystem, Scheme, SystemName};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn bem() -> Formula {
    f("[]p | ~[]p")
}

fn bem_frame() -> BirelationalModel {
    serde_json::from_str(&fs::read_to_string(data("bem_frame.json")).unwrap()).unwrap()
}

fn schemes(name: SystemName) -> Vec<NamedScheme> {
    HilbertSystem::new(name)
        .schemes
        .iter()
        .map(|s| NamedScheme::new(s.id, s.scheme.clone()))
        .collect()
}

fn corpus_fragment() -> Fragment {
    Fragment::closure_of(corpus().iter())
}

fn criterion1() -> Check {
    let m = bem_frame();
    let expected = vec![BemViolation {
        x: "a".into(),
        y: "b".into(),
        z: "c".into(),
    }];
    ensure!(m.check_bem() == expected, "check_bem gave {:?}", m.check_bem());
    let atoms: BTreeSet<String> = ["p".to_string()].into();
    let r = m
        .valid_on_frame(&bem(), &atoms, DEFAULT_VALUATION_BOUND)
        .map_err(|e| e.to_string())?;
    ensure!(r.valid && r.valuations == 9, "valid_on_frame gave {r:?}");

    // Independent count of monotone valuations and pointwise replay.
    let up: Vec<u64> = (0..m.len())
        .map(|x| (0..m.len()).filter(|&y| m.leq(x, y)).fold(0, |s, y| s | 1 << y))
        .collect();
    let ups = up_set_masks(&up);
    ensure!(ups.len() == 9, "oracle counts {} up-sets", ups.len());
    for set in ups {
        let val = (0..m.len())
            .map(|x| {
                if set & (1 << x) != 0 {
                    ["p".to_string()].into()
                } else {
                    BTreeSet::new()
                }
            })
            .collect();
        let v = m.with_valuation(val);
        for x in 0..v.len() {
            ensure!(naive_bm(&v, x, &bem()), "oracle refutes at {x} under {set:#b}");
        }
    }
    Ok("violation (a,b,c); valid under all 9 valuations".into())
}

fn criterion2() -> Check {
    let mut models = 0u64;
    let mut bad = Vec::new();
    for n in 1..=4 {
        for_each_labelled_bm(n, true, |up, acc, p| {
            models += 1;
            let m = bm_from_masks(up, acc, &[("p".into(), p)]);
            if !m.check_bem().is_empty() || !m.validate().is_ok() {
                bad.push(format!("library rejects {up:?} {acc:?}"));
            }
            for x in 0..n {
                if !naive_bm(&m, x, &bem()) || !m.forces(x, &bem()) {
                    bad.push(format!("refuted at {x} in {up:?} {acc:?} {p:#b}"));
                }
            }
        });
    }
    ensure!(bad.is_empty(), "{} exceptions, first: {}", bad.len(), bad[0]);
    Ok(format!("{models} labelled models, zero exceptions"))
}

fn criterion3() -> Check {
    let bounds = SearchBounds::new(3, ["p"]);
    let out = find_countermodel(ModelClass::Bm, &bem(), &bounds).map_err(|e| e.to_string())?;
    let Some((Model::Bm(m), world)) = out.countermodel() else {
        return Err(format!("no birelational countermodel: {out:?}"));
    };
    ensure!(m.validate().is_ok(), "countermodel is not a birelational model");
    let x = m.worlds().get(world).ok_or("unknown world")?;
    ensure!(!naive_bm(m, x, &bem()), "countermodel does not replay at {world}");
    let out = find_countermodel(ModelClass::BmBem, &bem(), &SearchBounds::new(4, ["p"]))
        .map_err(|e| e.to_string())?;
    let SearchOutcome::ExhaustedWithinBounds { candidates } = out else {
        return Err(format!("bm+bem search gave {out:?}"));
    };
    Ok(format!(
        "{}-world countermodel at {world}; bm+bem exhausted after {candidates} candidates",
        m.len()
    ))
}

/// Small pools for literal instance checks.
fn pool(atoms: &[&str]) -> Vec<Formula> {
    let mut out = vec![Formula::Bot, Formula::Top];
    for a in atoms {
        let p = Formula::atom(*a);
        out.push(p.clone());
        out.push(Formula::not(p.clone()));
        out.push(Formula::boxed(p.clone()));
        out.push(Formula::not(Formula::boxed(p.clone())));
    }
    out
}

fn criterion4() -> Check {
    let schemes = schemes(SystemName::IKBem);
    let cmm_bounds = SearchBounds::new(3, ["p", "q"]).with_component_worlds(2);
    let cmm = certify_axiom_validity(ModelClass::Cmm, &schemes, &cmm_bounds, 2)
        .map_err(|e| e.to_string())?;
    ensure!(
        cmm.is_clean(),
        "cmm refuted: {:?}",
        cmm.refuted().map(|s| &s.id).collect::<Vec<_>>()
    );
    let bm = certify_axiom_validity(ModelClass::BmBem, &schemes, &SearchBounds::new(3, ["p", "q"]), 2)
        .map_err(|e| e.to_string())?;
    ensure!(
        bm.is_clean(),
        "bm+bem refuted: {:?}",
        bm.refuted().map(|s| &s.id).collect::<Vec<_>>()
    );

    // Literal cross-check: explicit instances, pointwise forcing.
    let small = pool(&["p"]);
    let mixed_pool = pool(&["p", "q"]);
    let mut checks = 0u64;
    for s in &schemes {
        let inst = instances(&s.scheme, &small);
        for n in 1..=2 {
            let mut failure = None;
            for_each_labelled_bm(n, true, |up, acc, p| {
                let m = bm_from_masks(up, acc, &[("p".into(), p)]);
                for g in &inst {
                    for x in 0..n {
                        checks += 1;
                        if failure.is_none() && !naive_bm(&m, x, g) {
                            failure = Some(format!("{g} at {x} in {up:?} {acc:?}"));
                        }
                    }
                }
            });
            if let Some(fail) = failure {
                return Err(format!("{}: {fail}", s.id));
            }
        }
        let inst = instances(&s.scheme, &mixed_pool);
        for m in cmm_sample().iter().take(20) {
            for g in &inst {
                for x in 0..m.points().len() {
                    checks += 1;
                    ensure!(naive_cmm(m, x, g), "{}: {g} fails in a random mixed model", s.id);
                }
            }
        }
    }
    Ok(format!(
        "cmm: {} models, bm+bem: {} models, zero refutations; {checks} literal checks",
        cmm.models, bm.models
    ))
}

fn criterion5() -> Check {
    let sample = cmm_sample();
    let frag = corpus_fragment();
    let mut checks = 0u64;
    for (i, m) in sample.iter().enumerate() {
        ensure!(m.validate().is_ok(), "sample model {i} is invalid");
        let bm = cmm_to_birelational(m);
        ensure!(bm.validate().is_ok(), "translation of model {i} is invalid");
        ensure!(bm.check_bem().is_empty(), "translation of model {i} violates BEM");
        for g in frag.iter() {
            for x in 0..m.points().len() {
                checks += 1;
                let c = m.forces(x, g);
                ensure!(
                    c == bm.forces(x, g) && c == naive_cmm(m, x, g) && c == naive_bm(&bm, x, g),
                    "mismatch on {g} at {} in model {i}",
                    m.points().name(x)
                );
            }
        }
    }
    Ok(format!("{} models, {} formulas, {checks} comparisons", sample.len(), frag.len()))
}

fn criterion6() -> Check {
    let corpus = corpus();
    let mut checks = 0u64;
    let mut models = 0u64;
    let mut failure: Option<String> = None;
    for n in 1..=3 {
        for_each_labelled_bm(n, true, |up, acc, p| {
            if failure.is_some() {
                return;
            }
            models += 1;
            let bm = bm_from_masks(up, acc, &[("p".into(), p)]);
            let cmm = match birelational_to_cmm(&bm) {
                Ok(c) => c,
                Err(e) => {
                    failure = Some(format!("translation failed: {e}"));
                    return;
                }
            };
            for g in &corpus {
                for x in 0..n {
                    let expected = bm.forces(x, g);
                    if expected != naive_bm(&bm, x, g) {
                        failure = Some(format!("evaluator disagrees with oracle on {g}"));
                    }
                    for a in (0..n).filter(|&a| bm.leq(a, x)) {
                        checks += 1;
                        let id = copy_point_id(bm.worlds().name(a), bm.worlds().name(x));
                        let y = cmm.points().get(&id).expect("copy point exists");
                        if cmm.forces(y, g) != expected || naive_cmm(&cmm, y, g) != expected {
                            failure = Some(format!("mismatch on {g} at {id}"));
                        }
                    }
                }
            }
        });
    }
    if let Some(fail) = failure {
        return Err(fail);
    }
    let expected = vec![BemViolation {
        x: "a".into(),
        y: "b".into(),
        z: "c".into(),
    }];
    match birelational_to_cmm(&bem_frame()) {
        Err(TranslateError::NotBem(v)) if v == expected => {}
        other => return Err(format!("bem_frame translation gave {other:?}")),
    }
    Ok(format!("{models} labelled models, {checks} comparisons; bem_frame rejected with (a,b,c)"))
}

fn criterion7() -> Check {
    let frag = corpus_fragment();
    let mut worlds = 0usize;
    for (i, m) in cmm_sample().iter().enumerate() {
        let tm = extract_theories(m, &frag);
        let report = check_mixed_clauses(&tm, &frag).map_err(|e| e.to_string())?;
        ensure!(
            report.clause1.is_empty() && report.clause3.is_empty() && report.clause4.is_empty(),
            "model {i}: {report:?}"
        );
        for w in 0..m.frame().len() {
            worlds += 1;
            let name = m.frame().name(w);
            let theory = &tm.theories[name];
            for g in frag.iter() {
                ensure!(
                    theory.contains(g) == naive_cmm(m, m.root(w), g),
                    "model {i}: theory of {name} disagrees with forcing on {g}"
                );
                if let Formula::Or(a, b) = g {
                    if theory.contains(g) {
                        ensure!(
                            theory.contains(a.as_ref()) || theory.contains(b.as_ref()),
                            "model {i}: disjunction property fails for {g} at {name}"
                        );
                    }
                }
            }
        }
    }
    Ok(format!("{worlds} frame worlds, clauses 1, 3, 4 empty, disjunction property holds"))
}

fn criterion8() -> Check {
    let frag = corpus_fragment();
    let pool = pool(&["p", "q"]);
    let ipc_instances: Vec<Formula> = IPC_SCHEMES
        .iter()
        .flat_map(|(_, s)| instances(&Scheme::parse(s).unwrap(), &pool))
        .collect();
    let tautologies: Vec<Formula> = frag
        .iter()
        .chain(prop_corpus().iter())
        .chain(ipc_instances.iter())
        .filter(|g| tautology(g))
        .cloned()
        .chain(instances(&Scheme::parse("~A | A").unwrap(), &pool))
        .collect();
    let mut singletons = 0usize;
    for (i, m) in cmm_sample().iter().enumerate() {
        let n = m.points().len();
        for g in frag.iter() {
            for x in 0..n {
                for y in (0..n).filter(|&y| y != x && m.owner(y) == m.owner(x) && m.leq(x, y)) {
                    let (fx, fy) = (naive_cmm(m, x, g), naive_cmm(m, y, g));
                    if matches!(g, Formula::Box(_)) {
                        ensure!(fx == fy, "model {i}: {g} not stable along the order");
                    }
                    ensure!(!fx || fy, "model {i}: {g} not monotone");
                }
            }
        }
        for g in &ipc_instances {
            for x in 0..n {
                ensure!(m.forces(x, g), "model {i}: IPC instance {g} fails");
            }
        }
        for w in (0..m.frame().len()).filter(|&w| m.component(w).len() == 1) {
            singletons += 1;
            for g in &tautologies {
                ensure!(
                    naive_cmm(m, m.root(w), g),
                    "model {i}: tautology {g} fails at a single-point component"
                );
            }
        }
    }
    Ok(format!(
        "{} IPC instances, {} tautologies at {singletons} single-point components",
        ipc_instances.len(),
        tautologies.len()
    ))
}

fn criterion9() -> Check {
    let corpus = prop_corpus();
    ensure!(corpus.len() >= 50, "corpus has only {} formulas", corpus.len());
    let mut theorems = 0;
    for g in &corpus {
        let ipc = decide_ipc(&[], g);
        let cpc = decide_cpc(&[], g);
        let out = find_countermodel(ModelClass::RootedIpc, g, &SearchBounds::new(4, g.atoms()))
            .map_err(|e| e.to_string())?;
        ensure!(
            matches!(out, SearchOutcome::ExhaustedWithinBounds { .. } | SearchOutcome::Countermodel { .. }),
            "search for {g} ran out of budget"
        );
        ensure!(ipc == out.is_exhausted(), "decide_ipc says {ipc} on {g}, search says {out:?}");
        if let Some((Model::Ipc(m), _)) = out.countermodel() {
            let root = m.root().ok_or("unrooted countermodel")?;
            ensure!(!naive_ipc(m, root, g), "countermodel for {g} does not replay");
        }
        ensure!(cpc == tautology(g), "decide_cpc says {cpc} on {g}");
        ensure!(!ipc || cpc, "{g} is intuitionistic but not classical");
        theorems += ipc as usize;
    }
    Ok(format!("{} formulas, {theorems} IPC theorems, zero disagreements", corpus.len()))
}

fn load_proof(name: &str) -> ProofFile {
    serde_json::from_str(&fs::read_to_string(data("proofs").join(name)).unwrap()).unwrap()
}

fn criterion10() -> Check {
    let one_liner = load_proof("bem.json").derivation();
    let ok = check_derivation(&HilbertSystem::new(SystemName::IKBem), &one_liner, Some(&bem()));
    ensure!(ok.is_ok(), "bem one-liner rejected in iK+bem: {ok:?}");
    match check_derivation(&HilbertSystem::new(SystemName::IK), &one_liner, None) {
        Err(r) if matches!(r.reason, RejectReason::UnknownScheme { .. }) && r.line == 1 => {}
        other => return Err(format!("bem one-liner in iK gave {other:?}")),
    }
    let boxed = load_proof("box_identity.json");
    let ok = check_derivation(&HilbertSystem::new(boxed.system), &boxed.derivation(), Some(&f("[](p -> p)")));
    ensure!(ok.is_ok(), "[](p -> p) rejected in iK: {ok:?}");

    let mut accepted = 0;
    let mut files: Vec<_> = fs::read_dir(data("proofs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for path in files {
        let proof: ProofFile = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let d = proof.derivation();
        if check_derivation(&HilbertSystem::new(proof.system), &d, proof.goal.as_ref()).is_err() {
            continue;
        }
        accepted += 1;
        let conclusion = d.conclusion().unwrap().clone();
        let claim = match d.premises.iter().cloned().reduce(Formula::and) {
            Some(all) => Formula::imp(all, conclusion),
            None => conclusion,
        };
        let (class, worlds) = match proof.system {
            SystemName::Ipc => (ModelClass::RootedIpc, 3),
            SystemName::Cpc => (ModelClass::RootedIpc, 1),
            SystemName::IK => (ModelClass::Bm, 3),
            SystemName::IKBem => (ModelClass::BmBem, 3),
        };
        let out = find_countermodel(class, &claim, &SearchBounds::new(worlds, claim.atoms()))
            .map_err(|e| e.to_string())?;
        ensure!(out.is_exhausted(), "{}: {claim} gave {out:?}", path.display());
    }
    ensure!(accepted >= 5, "only {accepted} corpus derivations accepted");
    Ok(format!("{accepted} accepted derivations survive exhaustion"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("example frame: BEM fails, bem valid", criterion1),
        ("BEM implies bem", criterion2),
        ("separation of iK and iK+bem", criterion3),
        ("soundness of iK+bem", criterion4),
        ("mixed to birelational transfer", criterion5),
        ("birelational to mixed transfer", criterion6),
        ("theories of mixed models", criterion7),
        ("forcing in mixed models", criterion8),
        ("decider cross-validation", criterion9),
        ("derivation checking", criterion10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
