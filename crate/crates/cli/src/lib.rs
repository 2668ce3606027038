//! Command-line surface over `trtk-core`: parse versioned JSON documents,
//! run the bounded checks, and emit machine-readable reports.
//!
//! Every invocation produces one report. With `--json` the report is a single
//! JSON object whose only nondeterministic field is `elapsed_ms`; without it
//! a short text form is printed. Exit codes follow the verdict: 0 for HOLDS
//! or plain success, 1 for FAILS, 2 for INCONCLUSIVE or a refused budget,
//! and 64 for malformed input or usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use trtk_core::amalgamation::{check_instance, ternary_counterexample};
use trtk_core::io::{
    instance_to_json, parse_family, parse_instance, parse_plus_embedding, parse_structure,
    plus_dot, type_tree_dot, weak_type_tree_dot, PlusEmbeddingDoc, StructureDoc, TypeNodeDoc,
};
use trtk_core::ramsey::{arrows, arrows_type_respecting, finite_degree};
use trtk_core::respect::{is_family_type_respecting, is_type_respecting, FamilyWitness};
use trtk_core::structures::enumerate_embeddings;
use trtk_core::typetrees::{meet_closure_shape, type_tree};
use trtk_core::weaktypes::{
    enumerate_weak_types, plus_structure, tree_of_weak_types, weak_type_of_tuple, TypeNode,
};
use trtk_core::{CheckOutcome, CoreError, Embedding, SearchConfig, Verdict};

/// Environment variable consulted for the search budget when `--budget` is
/// not given on the command line.
pub const BUDGET_ENV_VAR: &str = "TRTK_BUDGET";

/// Exit code for malformed input, unknown flags, and usage errors.
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "trtk",
    version,
    about = "Checks and exports for enumerated relational structures, their type trees, and bounded amalgamation",
    disable_help_subcommand = true
)]
struct Cli {
    /// Emit the report as a single JSON object.
    #[arg(long, global = true)]
    json: bool,

    /// Extension depth for bounded family-level checks.
    #[arg(long, global = true)]
    depth: Option<usize>,

    /// Cap on candidates any search may visit. Falls back to TRTK_BUDGET.
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Worker threads for parallel sections. Defaults to all available.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for randomized generators.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Irreducibility: only require distinct pairs to share a tuple.
    #[arg(long, global = true)]
    irreducible_distinct_only: bool,

    /// Forbid repeated type vertices in admissible mixed tuples.
    #[arg(long, global = true)]
    strict_type_vertex_repeats: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structure document checks.
    #[command(name = "struct")]
    Struct {
        #[command(subcommand)]
        cmd: StructCmd,
    },
    /// Embedding enumeration.
    Emb {
        #[command(subcommand)]
        cmd: EmbCmd,
    },
    /// Trees of 1-types.
    Types {
        #[command(subcommand)]
        cmd: TypesCmd,
    },
    /// Weak types over a base structure.
    Weaktypes {
        #[command(subcommand)]
        cmd: WeaktypesCmd,
    },
    /// Summarize the plus-structure of a base.
    Plus {
        /// Structure document.
        file: PathBuf,
    },
    /// Type-respecting checks for maps.
    Respect {
        #[command(subcommand)]
        cmd: RespectCmd,
    },
    /// Amalgamation instances.
    Amalg {
        #[command(subcommand)]
        cmd: AmalgCmd,
    },
    /// Does every k-coloring of A-copies leave a B-copy with at most l colors?
    Arrows {
        /// Ambient structure document. A leading "C=" is accepted.
        c: String,
        /// Spanning copy document. A leading "B=" is accepted.
        b: String,
        /// Colored copy document. A leading "A=" is accepted.
        a: String,
        /// Number of colors.
        #[arg(short)]
        k: usize,
        /// Color bound that some B-copy must stay within.
        #[arg(short)]
        l: usize,
        /// Restrict to family-respecting copies of the given family document.
        #[arg(long, value_name = "FAMILY")]
        type_respecting: Option<PathBuf>,
        /// Also require the spanning B-copies to respect the family.
        #[arg(long)]
        strict: bool,
    },
    /// Worst-case number of colors forced onto C itself.
    Degree {
        /// Ambient structure document. A leading "C=" is accepted.
        c: String,
        /// Colored copy document. A leading "A=" is accepted.
        a: String,
        /// Number of colors.
        #[arg(short)]
        k: usize,
    },
    /// Graphviz exports.
    Export {
        #[command(subcommand)]
        cmd: ExportCmd,
    },
}

#[derive(Subcommand)]
enum StructCmd {
    /// Parse a structure document and report its shape.
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum EmbCmd {
    /// List all monotone embeddings of the first structure into the second.
    List { source: PathBuf, target: PathBuf },
}

#[derive(Subcommand)]
enum TypesCmd {
    /// The 1-type classes of every level.
    Tree { file: PathBuf },
    /// Canonical meet-closure code of a vertex set inside the type tree.
    Meets {
        file: PathBuf,
        /// Vertices of the copy, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        copy: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum WeaktypesCmd {
    /// Enumerate all weak types over the structure as a base.
    Enum { file: PathBuf },
    /// The weak type of an increasing tuple above a level.
    OfTuple {
        file: PathBuf,
        /// Level the type lives over.
        #[arg(long)]
        level: usize,
        /// The tuple, comma separated, strictly increasing, above the level.
        #[arg(long, value_delimiter = ',', required = true)]
        tuple: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum RespectCmd {
    /// Is a pin-free map document a type-respecting embedding?
    Check { map: PathBuf },
    /// Bounded family-level check of a plus-embedding document.
    FamilyCheck { map: PathBuf, family: PathBuf },
}

#[derive(Subcommand)]
enum AmalgCmd {
    /// Decide an amalgamation instance document.
    Check { instance: PathBuf },
    /// Rebuild the shipped failing instance and decide it.
    Counterexample,
}

#[derive(Subcommand)]
enum ExportCmd {
    /// Render a structure's trees or plus-structure as Graphviz DOT.
    Dot {
        #[arg(value_enum)]
        kind: DotKind,
        file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DotKind {
    /// Level-by-level 1-type classes.
    TypeTree,
    /// Realized weak types under restriction order.
    WeakTypeTree,
    /// The plus-structure over the base.
    Plus,
}

/// Echo of the knobs that influenced a run.
#[derive(Serialize)]
pub struct ConfigEcho {
    pub depth: usize,
    pub budget: u64,
}

/// The machine-readable result of one invocation.
#[derive(Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub configuration: ConfigEcho,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub details: Value,
    /// Wall-clock milliseconds. The one field that varies between runs.
    pub elapsed_ms: u128,
}

/// What `run_command` hands back: the process exit code and the full text
/// that belongs on stdout.
pub struct RunResult {
    pub exit_code: i32,
    pub output: String,
}

struct Payload {
    verdict: Verdict,
    witness: Option<Value>,
    certificate: Option<Value>,
    note: Option<String>,
    details: Value,
    /// Raw text to print instead of the report when `--json` is absent.
    plain: Option<String>,
}

impl Payload {
    fn new(verdict: Verdict, details: Value) -> Payload {
        Payload { verdict, witness: None, certificate: None, note: None, details, plain: None }
    }
}

/// Parse an argument vector, run the selected command, and render the report.
///
/// The first element is the binary name, as in `std::env::args`. All output
/// goes through the returned value; nothing is printed here.
pub fn run_command<I, T>(argv: I) -> RunResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let echo: Vec<String> =
        argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();

    let cli = match Cli::try_parse_from(argv.iter()) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return RunResult { exit_code: 0, output: e.to_string() };
        }
        Err(e) => return RunResult { exit_code: EXIT_USAGE, output: e.to_string() },
    };

    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            return RunResult { exit_code: EXIT_USAGE, output: render_error(&cli, &echo, &e) }
        }
    };

    let start = Instant::now();
    let payload = dispatch(&cli.command, &cfg);
    let elapsed_ms = start.elapsed().as_millis();

    match payload {
        Ok(p) => {
            let exit_code = p.verdict.exit_code();
            let output = render(&cli, &echo, &cfg, p, elapsed_ms);
            RunResult { exit_code, output }
        }
        Err(CoreError::Budget(msg)) => {
            let p = Payload {
                verdict: Verdict::Inconclusive,
                witness: None,
                certificate: None,
                note: Some(format!("budget refused: {msg}")),
                details: Value::Null,
                plain: None,
            };
            let output = render(&cli, &echo, &cfg, p, elapsed_ms);
            RunResult { exit_code: 2, output }
        }
        Err(e) => RunResult { exit_code: EXIT_USAGE, output: render_error(&cli, &echo, &e) },
    }
}

fn build_config(cli: &Cli) -> Result<SearchConfig, CoreError> {
    let mut cfg = SearchConfig::default();
    if let Some(d) = cli.depth {
        cfg.depth = d;
    }
    match cli.budget {
        Some(b) => cfg.budget = b,
        None => {
            if let Ok(v) = std::env::var(BUDGET_ENV_VAR) {
                cfg.budget = v.parse().map_err(|_| {
                    CoreError::input(format!("{BUDGET_ENV_VAR} must be an integer, got {v:?}"))
                })?;
            }
        }
    }
    cfg.jobs = cli.jobs;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.irreducible_distinct_only = cli.irreducible_distinct_only;
    cfg.strict_type_vertex_repeats = cli.strict_type_vertex_repeats;
    Ok(cfg)
}

fn render(cli: &Cli, echo: &[String], cfg: &SearchConfig, p: Payload, elapsed_ms: u128) -> String {
    if !cli.json {
        if let Some(plain) = p.plain {
            return plain;
        }
        let mut out = format!("verdict: {}\n", p.verdict);
        if let Some(n) = &p.note {
            out.push_str(&format!("note: {n}\n"));
        }
        if let Some(w) = &p.witness {
            out.push_str(&format!("witness: {w}\n"));
        }
        if let Some(c) = &p.certificate {
            out.push_str(&format!("certificate: {c}\n"));
        }
        if p.details != Value::Null {
            out.push_str(&format!("details: {}\n", p.details));
        }
        return out;
    }
    let report = RunReport {
        command: echo.to_vec(),
        configuration: ConfigEcho { depth: cfg.depth, budget: cfg.budget },
        verdict: p.verdict.to_string(),
        witness: p.witness,
        certificate: p.certificate,
        note: p.note,
        details: p.details,
        elapsed_ms,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serialization");
    text.push('\n');
    text
}

fn render_error(cli: &Cli, echo: &[String], e: &CoreError) -> String {
    if cli.json {
        let mut text = serde_json::to_string_pretty(&json!({
            "command": echo,
            "error": e.to_string(),
        }))
        .expect("error serialization");
        text.push('\n');
        text
    } else {
        format!("error: {e}\n")
    }
}

fn read(path: &Path) -> Result<String, CoreError> {
    std::fs::read_to_string(path)
        .map_err(|e| CoreError::input(format!("could not read {}: {e}", path.display())))
}

/// Accept `C=path` style prefixes on the arrow positionals.
fn strip_role(prefix: &str, arg: &str) -> PathBuf {
    PathBuf::from(arg.strip_prefix(prefix).unwrap_or(arg))
}

fn structure_details(s: &trtk_core::Structure) -> Value {
    let tuples: BTreeMap<String, usize> = s
        .language
        .relations
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.clone(), s.relations[i].len()))
        .collect();
    json!({ "size": s.size, "tuple_counts": tuples })
}

fn witness_value(w: &FamilyWitness) -> Value {
    json!({
        "ambient": StructureDoc::of(&w.ambient),
        "added_part": StructureDoc::of(&w.added_part),
    })
}

fn outcome_payload<C>(
    out: CheckOutcome<FamilyWitness, C>,
    certificate: impl FnOnce(&C) -> Value,
    details: Value,
) -> Payload {
    Payload {
        verdict: out.verdict,
        witness: out.witness.as_ref().map(witness_value),
        certificate: out.certificate.as_ref().map(certificate),
        note: out.note,
        details,
        plain: None,
    }
}

fn dispatch(command: &Command, cfg: &SearchConfig) -> Result<Payload, CoreError> {
    match command {
        Command::Struct { cmd: StructCmd::Validate { file } } => {
            let s = parse_structure(&read(file)?)?;
            s.validate()?;
            Ok(Payload::new(Verdict::Holds, structure_details(&s)))
        }

        Command::Emb { cmd: EmbCmd::List { source, target } } => {
            let a = parse_structure(&read(source)?)?;
            let b = parse_structure(&read(target)?)?;
            let embs = enumerate_embeddings(&a, &b)?;
            let maps: Vec<&Vec<usize>> = embs.iter().map(|e| &e.map).collect();
            Ok(Payload::new(
                Verdict::Holds,
                json!({ "count": maps.len(), "maps": maps }),
            ))
        }

        Command::Types { cmd: TypesCmd::Tree { file } } => {
            let s = parse_structure(&read(file)?)?;
            let tree = type_tree(&s)?;
            let members: Vec<Vec<&Vec<usize>>> = tree
                .levels
                .iter()
                .map(|classes| classes.iter().map(|c| &c.members).collect())
                .collect();
            let counts: Vec<usize> = tree.levels.iter().map(|c| c.len()).collect();
            Ok(Payload::new(
                Verdict::Holds,
                json!({ "classes_per_level": counts, "members": members }),
            ))
        }

        Command::Types { cmd: TypesCmd::Meets { file, copy } } => {
            let s = parse_structure(&read(file)?)?;
            let code = meet_closure_shape(&s, copy)?;
            Ok(Payload::new(
                Verdict::Holds,
                json!({ "copy": copy, "code": serde_json::to_value(&code)? }),
            ))
        }

        Command::Weaktypes { cmd: WeaktypesCmd::Enum { file } } => {
            let s = parse_structure(&read(file)?)?;
            let types = enumerate_weak_types(&s, cfg)?;
            let lang = &s.language;
            let rendered: Vec<TypeNodeDoc> = types
                .iter()
                .map(|t| {
                    let node = TypeNode::of_weak_type(t, t.width);
                    TypeNodeDoc::of(lang, &node)
                })
                .collect();
            Ok(Payload::new(
                Verdict::Holds,
                json!({ "base_size": s.size, "count": rendered.len(), "types": rendered }),
            ))
        }

        Command::Weaktypes { cmd: WeaktypesCmd::OfTuple { file, level, tuple } } => {
            let s = parse_structure(&read(file)?)?;
            let t = weak_type_of_tuple(&s, *level, tuple, cfg)?;
            let node = TypeNode::of_weak_type(&t, t.width);
            Ok(Payload::new(
                Verdict::Holds,
                json!({
                    "level": level,
                    "tuple": tuple,
                    "type": TypeNodeDoc::of(&s.language, &node),
                }),
            ))
        }

        Command::Plus { file } => {
            let s = parse_structure(&read(file)?)?;
            let p = plus_structure(&s, cfg)?;
            let level_sizes: Vec<usize> = p.levels.iter().map(|l| l.len()).collect();
            Ok(Payload::new(
                Verdict::Holds,
                json!({
                    "base_size": s.size,
                    "vertex_count": p.vertex_count(),
                    "level_sizes": level_sizes,
                }),
            ))
        }

        Command::Respect { cmd: RespectCmd::Check { map } } => {
            let h = parse_plus_embedding(&read(map)?)?;
            if !h.pins.is_empty() {
                return Err(CoreError::input(
                    "the plain type-respecting check takes a map without pins; use family-check for pinned maps",
                ));
            }
            let emb = Embedding::new(h.source.clone(), h.target.clone(), h.base_map.clone())?;
            let ok = is_type_respecting(&emb, cfg)?;
            let verdict = if ok { Verdict::Holds } else { Verdict::Fails };
            Ok(Payload::new(verdict, json!({ "type_respecting": ok })))
        }

        Command::Respect { cmd: RespectCmd::FamilyCheck { map, family } } => {
            let h = parse_plus_embedding(&read(map)?)?;
            let k = parse_family(&read(family)?)?;
            let out = is_family_type_respecting(&h, &k, cfg.depth, cfg)?;
            let details = json!({
                "depth": out.depth_used,
                "explored": out.explored,
                "complete": out.complete,
            });
            Ok(outcome_payload(out, |_: &()| Value::Null, details))
        }

        Command::Amalg { cmd: AmalgCmd::Check { instance } } => {
            let inst = parse_instance(&read(instance)?)?;
            let out = check_instance(&inst, cfg.depth, cfg)?;
            let details = json!({ "depth": out.depth_used, "explored": out.explored });
            Ok(outcome_payload(
                out,
                |g| serde_json::to_value(PlusEmbeddingDoc::of(g)).expect("certificate"),
                details,
            ))
        }

        Command::Amalg { cmd: AmalgCmd::Counterexample } => {
            let inst = ternary_counterexample()?;
            let premise_f = is_family_type_respecting(&inst.f, &inst.family, cfg.depth, cfg)?;
            let premise_f2 = is_family_type_respecting(&inst.f2, &inst.family, cfg.depth, cfg)?;
            let out = check_instance(&inst, cfg.depth, cfg)?;
            let instance_doc: Value = serde_json::from_str(&instance_to_json(&inst)?)?;
            let details = json!({
                "instance": instance_doc,
                "premise_f": premise_f.verdict.to_string(),
                "premise_f2": premise_f2.verdict.to_string(),
                "depth": out.depth_used,
            });
            Ok(outcome_payload(
                out,
                |g| serde_json::to_value(PlusEmbeddingDoc::of(g)).expect("certificate"),
                details,
            ))
        }

        Command::Arrows { c, b, a, k, l, type_respecting, strict } => {
            let c = parse_structure(&read(&strip_role("C=", c))?)?;
            let b = parse_structure(&read(&strip_role("B=", b))?)?;
            let a = parse_structure(&read(&strip_role("A=", a))?)?;
            let out = match type_respecting {
                None => arrows(&c, &b, &a, *k, *l, cfg)?,
                Some(family_path) => {
                    let family = parse_family(&read(family_path)?)?;
                    arrows_type_respecting(&c, &b, &a, *k, *l, &family, *strict, cfg)?
                }
            };
            let details = json!({ "k": k, "l": l, "explored": out.explored });
            Ok(Payload {
                verdict: out.verdict,
                witness: out
                    .witness
                    .as_ref()
                    .map(|w| serde_json::to_value(w).expect("witness")),
                certificate: None,
                note: out.note,
                details,
                plain: None,
            })
        }

        Command::Degree { c, a, k } => {
            let c = parse_structure(&read(&strip_role("C=", c))?)?;
            let a = parse_structure(&read(&strip_role("A=", a))?)?;
            let d = finite_degree(&c, &a, *k, cfg)?;
            Ok(Payload::new(Verdict::Holds, json!({ "k": k, "degree": d })))
        }

        Command::Export { cmd: ExportCmd::Dot { kind, file } } => {
            let s = parse_structure(&read(file)?)?;
            let dot = match kind {
                DotKind::TypeTree => type_tree_dot(&s.language, &type_tree(&s)?),
                DotKind::WeakTypeTree => {
                    weak_type_tree_dot(&s.language, &tree_of_weak_types(&s, cfg)?)
                }
                DotKind::Plus => plus_dot(&plus_structure(&s, cfg)?),
            };
            Ok(Payload {
                verdict: Verdict::Holds,
                witness: None,
                certificate: None,
                note: None,
                details: json!({ "dot": dot }),
                plain: Some(dot.clone()),
            })
        }
    }
}
