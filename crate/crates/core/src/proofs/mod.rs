//! Hilbert-style systems, derivation checking and decision procedures.

mod decide;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{match_scheme, render, Formula, Scheme, Substitution};

pub use decide::{decide, decide_cpc, decide_ipc, Decider};

/// Propositional base logic attached to a world of a mixed model.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Logic {
    #[serde(rename = "CPC")]
    Cpc,
    #[serde(rename = "IPC")]
    Ipc,
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Logic::Cpc => "CPC",
            Logic::Ipc => "IPC",
        })
    }
}

impl FromStr for Logic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "CPC" => Ok(Logic::Cpc),
            "IPC" => Ok(Logic::Ipc),
            _ => Err(format!("unknown logic `{s}` (expected CPC or IPC)")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum SystemName {
    #[serde(rename = "IPC")]
    Ipc,
    #[serde(rename = "CPC")]
    Cpc,
    #[serde(rename = "iK")]
    IK,
    #[serde(rename = "iK+bem")]
    IKBem,
}

impl SystemName {
    pub const ALL: [SystemName; 4] = [
        SystemName::Ipc,
        SystemName::Cpc,
        SystemName::IK,
        SystemName::IKBem,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemName::Ipc => "IPC",
            SystemName::Cpc => "CPC",
            SystemName::IK => "iK",
            SystemName::IKBem => "iK+bem",
        }
    }
}

impl fmt::Display for SystemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SystemName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown system `{s}` (expected IPC, CPC, iK or iK+bem)"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    ModusPonens,
    Necessitation,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    Propositional,
    Modal,
}

pub const IPC_SCHEMES: [(&str, &str); 9] = [
    ("imp_k", "A -> (B -> A)"),
    ("and_intro", "A -> (B -> A & B)"),
    ("imp_s", "(A -> B) -> ((A -> (B -> C)) -> (A -> C))"),
    ("and_elim_l", "A & B -> A"),
    ("or_intro_l", "A -> A | B"),
    ("and_elim_r", "A & B -> B"),
    ("or_intro_r", "B -> A | B"),
    ("efq", "F -> A"),
    ("or_elim", "A | B -> ((A -> C) -> ((B -> C) -> C))"),
];

pub const LEM_SCHEME: (&str, &str) = ("lem", "~A | A");
pub const K_SCHEME: (&str, &str) = ("k", "[](A -> B) -> ([]A -> []B)");
pub const BEM_SCHEME: (&str, &str) = ("bem", "[]A | ~[]A");

#[derive(Clone, Debug)]
pub struct AxiomScheme {
    pub id: &'static str,
    pub scheme: Scheme,
}

#[derive(Clone, Debug)]
pub struct HilbertSystem {
    pub name: SystemName,
    pub schemes: Vec<AxiomScheme>,
    pub rules: Vec<Rule>,
    pub language: Language,
}

impl HilbertSystem {
    pub fn new(name: SystemName) -> Self {
        let mut table: Vec<(&'static str, &'static str)> = IPC_SCHEMES.to_vec();
        let mut rules = vec![Rule::ModusPonens];
        let mut language = Language::Propositional;
        match name {
            SystemName::Ipc => {}
            SystemName::Cpc => table.push(LEM_SCHEME),
            SystemName::IK | SystemName::IKBem => {
                table.push(K_SCHEME);
                if name == SystemName::IKBem {
                    table.push(BEM_SCHEME);
                }
                rules.push(Rule::Necessitation);
                language = Language::Modal;
            }
        }
        let schemes = table
            .into_iter()
            .map(|(id, text)| AxiomScheme {
                id,
                scheme: Scheme::parse(text).expect("built-in scheme parses"),
            })
            .collect();
        HilbertSystem {
            name,
            schemes,
            rules,
            language,
        }
    }

    pub fn scheme(&self, id: &str) -> Option<&AxiomScheme> {
        self.schemes.iter().find(|s| s.id == id)
    }

    pub fn has_rule(&self, rule: Rule) -> bool {
        self.rules.contains(&rule)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Justification {
    /// Instance of the named scheme; the substitution is inferred when absent.
    Axiom {
        scheme: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subst: Option<Substitution>,
    },
    /// The `index`-th premise, counting from 1.
    Premise { index: usize },
    /// `from = [i, j]` where line j is `line_i -> this line`.
    Mp { from: [usize; 2] },
    /// `[]φ` from a line `φ`.
    Nec { from: usize },
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub formula: Formula,
    pub just: Justification,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Derivation {
    #[serde(default)]
    pub premises: Vec<Formula>,
    pub lines: Vec<Line>,
}

impl Derivation {
    pub fn conclusion(&self) -> Option<&Formula> {
        self.lines.last().map(|l| &l.formula)
    }
}

/// On-disk form of a derivation, tagged with the system it is checked in.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofFile {
    pub system: SystemName,
    #[serde(default)]
    pub premises: Vec<Formula>,
    pub lines: Vec<Line>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Formula>,
}

impl ProofFile {
    pub fn derivation(&self) -> Derivation {
        Derivation {
            premises: self.premises.clone(),
            lines: self.lines.clone(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    #[error("unknown scheme `{scheme}`")]
    UnknownScheme { scheme: String },
    #[error("not an instance of `{scheme}`")]
    BadSchemeInstance { scheme: String },
    #[error("modus ponens needs line {major} to be `{expected}`")]
    BadMpShape { major: usize, expected: String },
    #[error("necessitation from line {from} must give `{expected}`")]
    BadNecShape { from: usize, expected: String },
    #[error("necessitation is only allowed in derivations without premises")]
    NecWithPremises,
    #[error("necessitation is not a rule of this system")]
    NecNotAllowed,
    #[error("reference to line {target}, which is not an earlier line")]
    DanglingReference { target: usize },
    #[error("premise {index} does not exist")]
    NoSuchPremise { index: usize },
    #[error("line does not match premise {index}")]
    PremiseMismatch { index: usize },
    #[error("derivation is empty")]
    Empty,
    #[error("last line is `{found}`, not the goal `{goal}`")]
    WrongConclusion { found: String, goal: String },
}

/// A rejected derivation: the 1-based line at fault and why.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Error)]
#[error("line {line}: {reason}")]
pub struct Rejection {
    pub line: usize,
    #[serde(flatten)]
    pub reason: RejectReason,
}

/// Checks `d` line by line in `sys`. Lines are numbered from 1 and may only
/// cite earlier lines. With a goal, the last line must equal it.
pub fn check_derivation(
    sys: &HilbertSystem,
    d: &Derivation,
    goal: Option<&Formula>,
) -> Result<(), Rejection> {
    let reject = |line: usize, reason: RejectReason| Err(Rejection { line, reason });
    for (k, line) in d.lines.iter().enumerate() {
        let n = k + 1;
        let earlier = |i: usize| -> Result<&Formula, Rejection> {
            if i >= 1 && i < n {
                Ok(&d.lines[i - 1].formula)
            } else {
                Err(Rejection {
                    line: n,
                    reason: RejectReason::DanglingReference { target: i },
                })
            }
        };
        match &line.just {
            Justification::Axiom { scheme, subst } => {
                let Some(ax) = sys.scheme(scheme) else {
                    return reject(
                        n,
                        RejectReason::UnknownScheme {
                            scheme: scheme.clone(),
                        },
                    );
                };
                let ok = match subst {
                    Some(sigma) => {
                        ax.scheme.metavariables().iter().all(|m| sigma.contains_key(m))
                            && ax.scheme.instantiate(sigma) == line.formula
                    }
                    None => match_scheme(&ax.scheme, &line.formula).is_some(),
                };
                if !ok {
                    return reject(
                        n,
                        RejectReason::BadSchemeInstance {
                            scheme: scheme.clone(),
                        },
                    );
                }
            }
            Justification::Premise { index } => match index.checked_sub(1).and_then(|i| d.premises.get(i)) {
                None => return reject(n, RejectReason::NoSuchPremise { index: *index }),
                Some(p) if *p != line.formula => {
                    return reject(n, RejectReason::PremiseMismatch { index: *index })
                }
                Some(_) => {}
            },
            Justification::Mp { from: [i, j] } => {
                let minor = earlier(*i)?;
                let major = earlier(*j)?;
                let expected = Formula::imp(minor.clone(), line.formula.clone());
                if *major != expected {
                    return reject(
                        n,
                        RejectReason::BadMpShape {
                            major: *j,
                            expected: render(&expected),
                        },
                    );
                }
            }
            Justification::Nec { from } => {
                if !sys.has_rule(Rule::Necessitation) {
                    return reject(n, RejectReason::NecNotAllowed);
                }
                if !d.premises.is_empty() {
                    return reject(n, RejectReason::NecWithPremises);
                }
                let body = earlier(*from)?;
                if line.formula != Formula::boxed(body.clone()) {
                    return reject(
                        n,
                        RejectReason::BadNecShape {
                            from: *from,
                            expected: render(&Formula::boxed(body.clone())),
                        },
                    );
                }
            }
        }
    }
    match (d.lines.last(), goal) {
        (None, _) => reject(0, RejectReason::Empty),
        (Some(last), Some(g)) if last.formula != *g => reject(
            d.lines.len(),
            RejectReason::WrongConclusion {
                found: render(&last.formula),
                goal: render(g),
            },
        ),
        _ => Ok(()),
    }
}
