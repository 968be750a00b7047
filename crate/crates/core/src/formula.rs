//! The box-only modal language: syntax tree, concrete syntax, subformula
//! closure and axiom-scheme matching.
//!
//! Concrete syntax (ASCII):
//!
//! ```text
//! formula := disj ( "->" formula )?          right-associative
//! disj    := conj ( "|" conj )*               left-associative
//! conj    := unary ( "&" unary )*             left-associative
//! unary   := "~" unary | "[]" unary | primary
//! primary := "T" | "F" | atom | "(" formula ")"
//! atom    := [a-z][a-zA-Z0-9_]*
//! ```
//!
//! Negation is sugar: `~A` parses to `A -> F` and is never stored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Formula {
    Top,
    Bot,
    Atom(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn imp(l: Formula, r: Formula) -> Self {
        Formula::Imp(Box::new(l), Box::new(r))
    }

    /// `¬φ`, i.e. `φ → ⊥`.
    pub fn not(f: Formula) -> Self {
        Formula::imp(f, Formula::Bot)
    }

    pub fn boxed(f: Formula) -> Self {
        Formula::Box(Box::new(f))
    }

    /// `□φ ∨ ¬□φ`.
    pub fn box_excluded_middle(f: Formula) -> Self {
        let b = Formula::boxed(f);
        Formula::or(b.clone(), Formula::not(b))
    }

    /// The body `φ` when `self` is `φ → ⊥`.
    pub fn negated(&self) -> Option<&Formula> {
        match self {
            Formula::Imp(l, r) if **r == Formula::Bot => Some(l),
            _ => None,
        }
    }

    pub fn is_box_free(&self) -> bool {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) => true,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.is_box_free() && r.is_box_free()
            }
            Formula::Box(_) => false,
        }
    }

    /// Nesting depth of connectives; atoms and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) => 0,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                1 + l.depth().max(r.depth())
            }
            Formula::Box(b) => 1 + b.depth(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) => 1,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                1 + l.size() + r.size()
            }
            Formula::Box(b) => 1 + b.size(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Top | Formula::Bot => {}
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
            Formula::Box(b) => b.collect_atoms(out),
        }
    }

    /// Immediate subformulas.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) => vec![],
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => vec![l, r],
            Formula::Box(b) => vec![b],
        }
    }

    /// Replaces every atom by its image under `sigma`; unmapped atoms stay.
    pub fn substitute(&self, sigma: &Substitution) -> Formula {
        match self {
            Formula::Atom(p) => sigma.get(p).cloned().unwrap_or_else(|| self.clone()),
            Formula::Top | Formula::Bot => self.clone(),
            Formula::And(l, r) => Formula::and(l.substitute(sigma), r.substitute(sigma)),
            Formula::Or(l, r) => Formula::or(l.substitute(sigma), r.substitute(sigma)),
            Formula::Imp(l, r) => Formula::imp(l.substitute(sigma), r.substitute(sigma)),
            Formula::Box(b) => Formula::boxed(b.substitute(sigma)),
        }
    }
}

// ---------------------------------------------------------------------------
// Printing

const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Top | Formula::Bot | Formula::Atom(_) => PREC_ATOM,
        Formula::Box(_) => PREC_UNARY,
        Formula::Imp(_, r) if **r == Formula::Bot => PREC_UNARY,
        Formula::And(..) => PREC_AND,
        Formula::Or(..) => PREC_OR,
        Formula::Imp(..) => PREC_IMP,
    }
}

fn write_at(f: &Formula, min: u8, out: &mut String) {
    let parens = precedence(f) < min;
    if parens {
        out.push('(');
    }
    match f {
        Formula::Top => out.push('T'),
        Formula::Bot => out.push('F'),
        Formula::Atom(p) => out.push_str(p),
        Formula::Box(b) => {
            out.push_str("[]");
            write_at(b, PREC_UNARY, out);
        }
        Formula::Imp(l, r) if **r == Formula::Bot => {
            out.push('~');
            write_at(l, PREC_UNARY, out);
        }
        Formula::And(l, r) => {
            write_at(l, PREC_AND, out);
            out.push_str(" & ");
            write_at(r, PREC_UNARY, out);
        }
        Formula::Or(l, r) => {
            write_at(l, PREC_OR, out);
            out.push_str(" | ");
            write_at(r, PREC_AND, out);
        }
        Formula::Imp(l, r) => {
            write_at(l, PREC_OR, out);
            out.push_str(" -> ");
            write_at(r, PREC_IMP, out);
        }
    }
    if parens {
        out.push(')');
    }
}

/// Minimal-parenthesis rendering in the concrete syntax.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    write_at(f, PREC_IMP, &mut out);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&render(self))
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Top,
    Bot,
    Ident(String),
    Meta(String),
    And,
    Or,
    Arrow,
    Not,
    Box,
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Top => "`T`".into(),
            Token::Bot => "`F`".into(),
            Token::Ident(s) | Token::Meta(s) => format!("`{s}`"),
            Token::And => "`&`".into(),
            Token::Or => "`|`".into(),
            Token::Arrow => "`->`".into(),
            Token::Not => "`~`".into(),
            Token::Box => "`[]`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::End => "end of input".into(),
        }
    }
}

const EXPECT_OPERAND: &[&str] = &["atom", "`T`", "`F`", "`(`", "`~`", "`[]`"];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    peeked: Option<(usize, Token)>,
    metavariables: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, metavariables: bool) -> Self {
        Parser {
            src,
            pos: 0,
            peeked: None,
            metavariables,
        }
    }

    fn lex(&mut self) -> Result<(usize, Token), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(start) else {
            return Ok((start, Token::End));
        };
        let single = |tok| Ok((start, tok));
        match c {
            b'&' => {
                self.pos += 1;
                single(Token::And)
            }
            b'|' => {
                self.pos += 1;
                single(Token::Or)
            }
            b'~' => {
                self.pos += 1;
                single(Token::Not)
            }
            b'(' => {
                self.pos += 1;
                single(Token::LParen)
            }
            b')' => {
                self.pos += 1;
                single(Token::RParen)
            }
            b'-' if bytes.get(start + 1) == Some(&b'>') => {
                self.pos += 2;
                single(Token::Arrow)
            }
            b'[' if bytes.get(start + 1) == Some(&b']') => {
                self.pos += 2;
                single(Token::Box)
            }
            c if c.is_ascii_alphabetic() => {
                let mut end = start + 1;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                self.pos = end;
                let word = &self.src[start..end];
                match word {
                    "T" => single(Token::Top),
                    "F" => single(Token::Bot),
                    _ if c.is_ascii_lowercase() => single(Token::Ident(word.to_string())),
                    _ if self.metavariables => single(Token::Meta(word.to_string())),
                    _ => Err(ParseError {
                        offset: start,
                        expected: EXPECT_OPERAND.to_vec(),
                        found: format!("`{word}` (atoms start with a lowercase letter)"),
                    }),
                }
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(ParseError {
                    offset: start,
                    expected: vec!["a formula token"],
                    found: format!("`{ch}`"),
                })
            }
        }
    }

    fn peek(&mut self) -> Result<&(usize, Token), ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex()?);
        }
        Ok(self.peeked.as_ref().expect("just filled"))
    }

    fn next(&mut self) -> Result<(usize, Token), ParseError> {
        self.peek()?;
        Ok(self.peeked.take().expect("just peeked"))
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek()?.1 == Token::Arrow {
            self.next()?;
            let rhs = self.formula()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while self.peek()?.1 == Token::Or {
            self.next()?;
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peek()?.1 == Token::And {
            self.next()?;
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let (offset, tok) = self.next()?;
        match tok {
            Token::Not => Ok(Formula::not(self.unary()?)),
            Token::Box => Ok(Formula::boxed(self.unary()?)),
            Token::Top => Ok(Formula::Top),
            Token::Bot => Ok(Formula::Bot),
            Token::Ident(name) | Token::Meta(name) => Ok(Formula::Atom(name)),
            Token::LParen => {
                let inner = self.formula()?;
                let (offset, tok) = self.next()?;
                if tok != Token::RParen {
                    return Err(ParseError {
                        offset,
                        expected: vec!["`)`", "`&`", "`|`", "`->`"],
                        found: tok.describe(),
                    });
                }
                Ok(inner)
            }
            other => Err(ParseError {
                offset,
                expected: EXPECT_OPERAND.to_vec(),
                found: other.describe(),
            }),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        let (offset, tok) = self.next()?;
        if tok == Token::End {
            Ok(())
        } else {
            Err(ParseError {
                offset,
                expected: vec!["`&`", "`|`", "`->`", "end of input"],
                found: tok.describe(),
            })
        }
    }
}

/// Parses a formula in the concrete syntax.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, false);
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Schemes

/// Map from metavariable (or atom) names to formulas.
pub type Substitution = BTreeMap<String, Formula>;

/// An axiom scheme: a formula whose atoms are all metavariables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Scheme {
    pattern: Formula,
    metavariables: BTreeSet<String>,
}

impl Scheme {
    pub fn new(pattern: Formula) -> Self {
        let metavariables = pattern.atoms();
        Scheme {
            pattern,
            metavariables,
        }
    }

    /// Parses a scheme; uppercase identifiers other than `T`/`F` are
    /// metavariables, e.g. `A -> (B -> A)`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut p = Parser::new(text, true);
        let f = p.formula()?;
        p.finish()?;
        Ok(Scheme::new(f))
    }

    pub fn pattern(&self) -> &Formula {
        &self.pattern
    }

    pub fn metavariables(&self) -> &BTreeSet<String> {
        &self.metavariables
    }

    /// Instantiates the scheme; metavariables missing from `sigma` stay as
    /// atoms of the same name.
    pub fn instantiate(&self, sigma: &Substitution) -> Formula {
        self.pattern.substitute(sigma)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.pattern.fmt(f)
    }
}

/// The unique substitution instantiating `scheme` to exactly `f`, if any.
pub fn match_scheme(scheme: &Scheme, f: &Formula) -> Option<Substitution> {
    fn go(pattern: &Formula, f: &Formula, sigma: &mut Substitution) -> bool {
        match (pattern, f) {
            (Formula::Atom(m), _) => match sigma.get(m) {
                Some(bound) => bound == f,
                None => {
                    sigma.insert(m.clone(), f.clone());
                    true
                }
            },
            (Formula::Top, Formula::Top) | (Formula::Bot, Formula::Bot) => true,
            (Formula::And(a, b), Formula::And(c, d))
            | (Formula::Or(a, b), Formula::Or(c, d))
            | (Formula::Imp(a, b), Formula::Imp(c, d)) => go(a, c, sigma) && go(b, d, sigma),
            (Formula::Box(a), Formula::Box(c)) => go(a, c, sigma),
            _ => false,
        }
    }
    let mut sigma = Substitution::new();
    go(&scheme.pattern, f, &mut sigma).then_some(sigma)
}

// ---------------------------------------------------------------------------
// Fragments

/// A finite, subformula-closed set of formulas that always contains `⊥`.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fragment(BTreeSet<Formula>);

impl Fragment {
    /// Closure of a collection of formulas.
    pub fn closure_of<'a>(formulas: impl IntoIterator<Item = &'a Formula>) -> Self {
        let mut set = BTreeSet::new();
        set.insert(Formula::Bot);
        let mut stack: Vec<&Formula> = formulas.into_iter().collect();
        while let Some(f) = stack.pop() {
            if set.insert(f.clone()) {
                stack.extend(f.children());
            }
        }
        Fragment(set)
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.0.contains(f)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Formula> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_set(&self) -> &BTreeSet<Formula> {
        &self.0
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        self.0
            .iter()
            .filter_map(|f| match f {
                Formula::Atom(p) => Some(p.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Smallest subformula-closed set containing `f` and `⊥`.
pub fn subformula_closure(f: &Formula) -> Fragment {
    Fragment::closure_of([f])
}
