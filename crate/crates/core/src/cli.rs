//! Command-line front end. Every command prints one JSON document (keys
//! sorted) or, with `--pretty`, the same data as indented text.
//!
//! Exit status: 0 when the property holds, 1 when it fails or a
//! countermodel is found, 2 on usage or input errors.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::birelational::{BirelationalModel, FrameError, DEFAULT_VALUATION_BOUND};
use crate::formula::{parse, Formula, Fragment, ParseError, Scheme};
use crate::ipc_model::{IntuitionisticModel, ValidationReport};
use crate::mixed::{
    check_mixed_clauses_with, extract_theories, ClauseOptions, ConcreteMixedModel,
    MixedTheoryModel,
};
use crate::proofs::{check_derivation, decide, HilbertSystem, Logic, ProofFile, SystemName};
use crate::search::{
    certify_axiom_validity, find_countermodel, Model, ModelClass, NamedScheme, SearchBounds,
    SearchOutcome, DEFAULT_BUDGET,
};
use crate::translate::{birelational_to_cmm, cmm_to_birelational, TranslateError};

#[derive(Parser, Debug)]
#[command(name = "kripkemix", version, about = "Kripke, birelational and mixed model workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print indented text instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Worker threads for search (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a formula (or scheme) and print its normal rendering.
    Parse {
        #[arg(long)]
        formula: String,
        /// Read uppercase identifiers as metavariables.
        #[arg(long)]
        scheme: bool,
    },
    /// Evaluate a formula at a world, or report where it is forced.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        world: Option<String>,
        #[arg(long)]
        formula: String,
    },
    /// Check the invariants of a model of the given class.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// List the triples breaking the BEM condition of a birelational model.
    CheckBem {
        #[arg(long)]
        model: PathBuf,
    },
    /// Is the formula forced under every monotone valuation of the frame?
    ValidOnFrame {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        /// Atoms to vary (default: the atoms of the formula).
        #[arg(long, value_delimiter = ',')]
        atoms: Option<Vec<String>>,
        #[arg(long, default_value_t = DEFAULT_VALUATION_BOUND)]
        bound: u64,
    },
    /// Translate between concrete mixed and birelational models.
    Translate {
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        model: PathBuf,
    },
    /// Extract the theories of a concrete mixed model on a fragment.
    ExtractTheories {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        fragment: FragmentArgs,
    },
    /// Check the mixed-model clauses of a theory model on a fragment.
    CheckClauses {
        /// A theory model, or a concrete mixed model with `--from-cmm`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        from_cmm: bool,
        #[command(flatten)]
        fragment: FragmentArgs,
        /// Skip the derivability check of clause 2.
        #[arg(long)]
        no_closure: bool,
    },
    /// Check a Hilbert-style derivation.
    CheckProof {
        #[arg(long)]
        proof: PathBuf,
        /// Required conclusion (overrides the file's goal).
        #[arg(long)]
        goal: Option<String>,
    },
    /// Decide derivability in IPC or CPC, reading boxed formulas as atoms.
    Decide {
        #[arg(long, value_enum)]
        logic: LogicArg,
        #[arg(long)]
        formula: String,
        #[arg(long = "premise")]
        premises: Vec<String>,
    },
    /// Search a model class for a countermodel.
    FindCountermodel {
        #[arg(long, value_parser = parse_class)]
        class: ModelClass,
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        bounds: BoundsArgs,
        /// Also write the countermodel as DOT to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check axiom schemes on every model of a class within bounds.
    Certify {
        #[arg(long, value_parser = parse_class)]
        class: ModelClass,
        /// Certify the axioms of this system.
        #[arg(long, value_parser = parse_system)]
        system: Option<SystemName>,
        /// Additional schemes, e.g. `[]A | ~[]A`.
        #[arg(long = "scheme")]
        schemes: Vec<String>,
        /// Depth of the formulas substituted for metavariables.
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Render a model as Graphviz DOT.
    ExportDot {
        #[command(flatten)]
        model: ModelArgs,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Model class: ipc, bm, bm+bem or cmm.
    #[arg(long, value_parser = parse_class)]
    pub class: ModelClass,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Args, Debug)]
pub struct FragmentArgs {
    /// Formulas whose subformula closure is the fragment (repeatable).
    #[arg(long = "fragment", required = true)]
    pub formulas: Vec<String>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 3)]
    pub max_worlds: usize,
    #[arg(long, default_value_t = 2)]
    pub max_component_worlds: usize,
    /// Atom set (default: the atoms of the query, or `p` for certify).
    #[arg(long, value_delimiter = ',')]
    pub atoms: Option<Vec<String>>,
    /// Candidate budget.
    #[arg(long, env = "KRIPKEMIX_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Direction {
    CmmToBm,
    BmToCmm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LogicArg {
    Ipc,
    Cpc,
}

fn parse_class(s: &str) -> Result<ModelClass, String> {
    s.parse()
}

fn parse_system(s: &str) -> Result<SystemName, String> {
    s.parse()
}

/// Result of a command: the document to print and the exit status.
#[derive(Debug)]
pub struct Output {
    pub value: Value,
    pub code: i32,
}

impl Output {
    fn verdict(value: Value, holds: bool) -> Self {
        Output {
            value,
            code: if holds { 0 } else { 1 },
        }
    }

    fn ok(value: Value) -> Self {
        Output { value, code: 0 }
    }

    fn error(value: Value) -> Self {
        Output { value, code: 2 }
    }
}

/// An input error carrying its JSON description.
#[derive(Debug)]
struct Failure(Value);

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure(json!({ "error": format!("{e:#}") }))
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure(json!({
            "error": e.to_string(),
            "offset": e.offset,
            "expected": e.expected,
        }))
    }
}

fn invalid(what: &str, report: impl Serialize) -> Failure {
    let mut v = to_value(report);
    if let Value::Object(m) = &mut v {
        m.insert("error".into(), Value::String(format!("invalid {what}")));
    }
    Failure(v)
}

fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("output types serialize")
}

fn formula(text: &str) -> Result<Formula, Failure> {
    Ok(parse(text)?)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::from)?;
    serde_json::from_str(&text).map_err(|e| {
        Failure(json!({
            "error": format!("{}: {e}", path.display()),
            "file": path.display().to_string(),
            "line": e.line(),
            "column": e.column(),
        }))
    })
}

fn report_value(r: &ValidationReport) -> Value {
    json!({ "ok": r.is_ok(), "violations": r.violations })
}

/// Loads a model of `class` and rejects it unless it passes the class validator.
fn load_model(class: ModelClass, path: &Path, require_valid: bool) -> Result<(Model, Value), Failure> {
    let (model, report) = match class {
        ModelClass::RootedIpc => {
            let m: IntuitionisticModel = read_json(path)?;
            let mut r = report_value(&m.validate());
            if m.root().is_none() {
                r["ok"] = Value::Bool(false);
                r["error_root"] = json!("model has no root");
            }
            (Model::Ipc(m), r)
        }
        ModelClass::Bm | ModelClass::BmBem => {
            let m: BirelationalModel = read_json(path)?;
            let mut r = report_value(&m.validate());
            if class == ModelClass::BmBem {
                let bem = m.check_bem();
                if !bem.is_empty() {
                    r["ok"] = Value::Bool(false);
                }
                r["bem_violations"] = to_value(bem);
            }
            (Model::Bm(m), r)
        }
        ModelClass::Cmm => {
            let m: ConcreteMixedModel = read_json(path)?;
            let rep = m.validate();
            let r = json!({ "ok": rep.is_ok(), "violations": rep.violations });
            (Model::Cmm(m), r)
        }
    };
    if require_valid && report["ok"] != Value::Bool(true) {
        return Err(invalid("model", report));
    }
    Ok((model, report))
}

fn load_bm(path: &Path) -> Result<BirelationalModel, Failure> {
    match load_model(ModelClass::Bm, path, true)?.0 {
        Model::Bm(m) => Ok(m),
        _ => unreachable!("bm class loads birelational models"),
    }
}

fn load_cmm(path: &Path) -> Result<ConcreteMixedModel, Failure> {
    match load_model(ModelClass::Cmm, path, true)?.0 {
        Model::Cmm(m) => Ok(m),
        _ => unreachable!("cmm class loads mixed models"),
    }
}

fn fragment(args: &FragmentArgs) -> Result<Fragment, Failure> {
    let formulas = args
        .formulas
        .iter()
        .map(|t| formula(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Fragment::closure_of(&formulas))
}

fn bounds(args: &BoundsArgs, default_atoms: BTreeSet<String>) -> SearchBounds {
    let atoms = match &args.atoms {
        Some(list) => list.iter().cloned().collect(),
        None => default_atoms,
    };
    SearchBounds {
        max_worlds: args.max_worlds,
        max_component_worlds: args.max_component_worlds,
        atoms,
        max_candidates: args.budget,
    }
}

fn eval(model: &Model, world: Option<&str>, f: &Formula) -> Result<Output, Failure> {
    let names: Vec<String> = match model {
        Model::Ipc(m) => m.worlds().names().to_vec(),
        Model::Bm(m) => m.worlds().names().to_vec(),
        Model::Cmm(m) => m.points().names().to_vec(),
    };
    let forces = |w: &str| {
        model
            .forces_at(w, f)
            .map_err(|e| Failure(json!({ "error": e.to_string() })))
    };
    match world {
        Some(w) => {
            let holds = forces(w)?;
            Ok(Output::verdict(json!({ "forces": holds }), holds))
        }
        None => {
            let mut forced = Vec::new();
            let mut refuted = Vec::new();
            for w in &names {
                if forces(w)? {
                    forced.push(w.clone());
                } else {
                    refuted.push(w.clone());
                }
            }
            let holds = refuted.is_empty();
            Ok(Output::verdict(
                json!({ "forced_at": forced, "refuted_at": refuted }),
                holds,
            ))
        }
    }
}

fn execute(cmd: &Command) -> Result<Output, Failure> {
    match cmd {
        Command::Parse { formula: text, scheme } => {
            let f = if *scheme {
                Scheme::parse(text)?.pattern().clone()
            } else {
                formula(text)?
            };
            Ok(Output::ok(json!({
                "formula": f,
                "atoms": f.atoms(),
                "depth": f.depth(),
                "size": f.size(),
                "box_free": f.is_box_free(),
            })))
        }
        Command::Eval {
            model,
            world,
            formula: text,
        } => {
            let f = formula(text)?;
            let (m, _) = load_model(model.class, &model.model, true)?;
            eval(&m, world.as_deref(), &f)
        }
        Command::Validate { model } => {
            let (_, report) = load_model(model.class, &model.model, false)?;
            let holds = report["ok"] == Value::Bool(true);
            Ok(Output::verdict(report, holds))
        }
        Command::CheckBem { model } => {
            let m = load_bm(model)?;
            let violations = m.check_bem();
            let ok = violations.is_empty();
            Ok(Output::verdict(json!({ "ok": ok, "violations": violations }), ok))
        }
        Command::ValidOnFrame {
            model,
            formula: text,
            atoms,
            bound,
        } => {
            let f = formula(text)?;
            let m: BirelationalModel = read_json(model)?;
            let atoms: BTreeSet<String> = match atoms {
                Some(list) => list.iter().cloned().collect(),
                None => f.atoms(),
            };
            match m.valid_on_frame(&f, &atoms, *bound) {
                Ok(v) => {
                    let holds = v.valid;
                    Ok(Output::verdict(to_value(v), holds))
                }
                Err(FrameError::InvalidFrame(r)) => Err(invalid("frame", report_value(&r))),
                Err(e) => Err(Failure(json!({ "error": e.to_string() }))),
            }
        }
        Command::Translate { direction, model } => match direction {
            Direction::CmmToBm => {
                let m = load_cmm(model)?;
                Ok(Output::ok(to_value(cmm_to_birelational(&m))))
            }
            Direction::BmToCmm => {
                let m: BirelationalModel = read_json(model)?;
                match birelational_to_cmm(&m) {
                    Ok(c) => Ok(Output::ok(to_value(c))),
                    Err(TranslateError::InvalidModel(r)) => Err(invalid("model", report_value(&r))),
                    Err(TranslateError::NotBem(v)) => Err(Failure(json!({
                        "error": "model does not satisfy BEM",
                        "violations": v,
                    }))),
                    Err(e) => Err(Failure(json!({ "error": e.to_string() }))),
                }
            }
        },
        Command::ExtractTheories { model, fragment: frag } => {
            let m = load_cmm(model)?;
            let frag = fragment(frag)?;
            Ok(Output::ok(to_value(extract_theories(&m, &frag))))
        }
        Command::CheckClauses {
            model,
            from_cmm,
            fragment: frag,
            no_closure,
        } => {
            let frag = fragment(frag)?;
            let tm: MixedTheoryModel = if *from_cmm {
                extract_theories(&load_cmm(model)?, &frag)
            } else {
                read_json(model)?
            };
            let options = ClauseOptions {
                check_closure: !no_closure,
            };
            let report = check_mixed_clauses_with(&tm, &frag, options)
                .map_err(|e| Failure(json!({ "error": e.to_string() })))?;
            let ok = report.is_ok();
            let mut v = to_value(report);
            v["ok"] = Value::Bool(ok);
            Ok(Output::verdict(v, ok))
        }
        Command::CheckProof { proof, goal } => {
            let file: ProofFile = read_json(proof)?;
            let goal = match goal {
                Some(text) => Some(formula(text)?),
                None => file.goal.clone(),
            };
            let sys = HilbertSystem::new(file.system);
            let d = file.derivation();
            match check_derivation(&sys, &d, goal.as_ref()) {
                Ok(()) => Ok(Output::ok(json!({
                    "accepted": true,
                    "system": file.system,
                    "conclusion": d.conclusion(),
                }))),
                Err(r) => {
                    let mut v = to_value(&r);
                    v["accepted"] = Value::Bool(false);
                    v["message"] = Value::String(r.to_string());
                    Ok(Output::verdict(v, false))
                }
            }
        }
        Command::Decide {
            logic,
            formula: text,
            premises,
        } => {
            let f = formula(text)?;
            let premises = premises
                .iter()
                .map(|t| formula(t))
                .collect::<Result<Vec<_>, _>>()?;
            let logic = match logic {
                LogicArg::Ipc => Logic::Ipc,
                LogicArg::Cpc => Logic::Cpc,
            };
            let derivable = decide(logic, &premises, &f);
            Ok(Output::verdict(json!({ "derivable": derivable }), derivable))
        }
        Command::FindCountermodel {
            class,
            formula: text,
            bounds: b,
            dot,
        } => {
            let f = formula(text)?;
            let b = bounds(b, f.atoms());
            let outcome = find_countermodel(*class, &f, &b)
                .map_err(|e| Failure(json!({ "error": e.to_string() })))?;
            if let (Some(path), Some((model, _))) = (dot, outcome.countermodel()) {
                write_file(path, &model.to_dot())?;
            }
            let code = match outcome {
                SearchOutcome::Countermodel { .. } => 1,
                SearchOutcome::ExhaustedWithinBounds { .. } => 0,
                SearchOutcome::BudgetExceeded { .. } => 2,
            };
            Ok(Output {
                value: to_value(outcome),
                code,
            })
        }
        Command::Certify {
            class,
            system,
            schemes,
            depth,
            bounds: b,
        } => {
            let mut named: Vec<NamedScheme> = system
                .map(|s| {
                    HilbertSystem::new(s)
                        .schemes
                        .into_iter()
                        .map(|a| NamedScheme::new(a.id, a.scheme))
                        .collect()
                })
                .unwrap_or_default();
            for text in schemes {
                named.push(NamedScheme::new(text.clone(), Scheme::parse(text)?));
            }
            if named.is_empty() {
                return Err(Failure(json!({ "error": "give --system or at least one --scheme" })));
            }
            let b = bounds(b, ["p".to_string()].into());
            let report = certify_axiom_validity(*class, &named, &b, *depth)
                .map_err(|e| Failure(json!({ "error": e.to_string() })))?;
            let code = if report.budget_exceeded {
                2
            } else if report.is_clean() {
                0
            } else {
                1
            };
            Ok(Output {
                value: to_value(report),
                code,
            })
        }
        Command::ExportDot { model, out } => {
            let (m, _) = load_model(model.class, &model.model, false)?;
            let dot = m.to_dot();
            match out {
                Some(path) => {
                    write_file(path, &dot)?;
                    Ok(Output::ok(json!({ "written": path.display().to_string() })))
                }
                None => Ok(Output::ok(Value::String(dot))),
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::from)
}

/// Runs a parsed command line, using `jobs` worker threads if given.
pub fn run(cli: &Cli) -> Output {
    let work = || match execute(&cli.command) {
        Ok(out) => out,
        Err(Failure(v)) => Output::error(v),
    };
    match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Output::error(json!({ "error": format!("cannot start {n} workers: {e}") })),
        },
        None => work(),
    }
}

/// Renders output as JSON (sorted keys) or, with `pretty`, as indented text.
pub fn render(value: &Value, pretty: bool) -> String {
    if let Value::String(s) = value {
        // DOT and other raw text outputs.
        return if s.ends_with('\n') { s.clone() } else { format!("{s}\n") };
    }
    if !pretty {
        return format!("{value}\n");
    }
    let mut out = String::new();
    human(value, 0, &mut out);
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => Some(
            format!(
                "[{}]",
                items.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")
            ),
        ),
        Value::Array(items) if items.iter().all(|i| i.as_array().is_some_and(|a| a.iter().all(|x| x.is_string()))) => {
            Some(items.iter().filter_map(scalar).collect::<Vec<_>>().join(" "))
        }
        _ => None,
    }
}

fn human(v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        human(item, indent + 2, out);
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        human(item, indent + 2, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the rendered output with the exit status. Usage errors exit with 2.
pub fn main_with<I, T>(args: I) -> (String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => {
            let out = run(&cli);
            (render(&out.value, cli.pretty), out.code)
        }
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            (e.render().to_string(), code)
        }
    }
}
