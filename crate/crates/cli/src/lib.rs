//! The `preskit` command line: argument parsing, dispatch to the engines,
//! JSON reports and the fixture corpus runner.

pub mod commands;
pub mod corpus;
pub mod input;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use preskit_core::budget::{DEFAULT_MAX_UNIVERSE, DEFAULT_WORK_LIMIT};
use preskit_core::{Budget, Error};
use serde::Serialize;
use serde_json::Value;

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "preskit",
    version,
    about = "Preservation checks over finite first-order structures"
)]
pub struct Cli {
    /// Work limit for every engine call.
    #[arg(long, global = true, default_value_t = DEFAULT_WORK_LIMIT)]
    pub budget: u64,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Spaces per indentation level; 0 prints compact JSON.
    #[arg(long, global = true, default_value_t = 2)]
    pub json_indent: usize,
    /// Largest accepted universe.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_UNIVERSE)]
    pub max_universe: usize,
    /// Add wall-clock timing to the report.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TypeArgs {
    /// Type file, inline type JSON, or `;`-separated formulas.
    #[arg(long = "type")]
    pub ty: String,
    /// Result variables of an inline type, comma separated.
    #[arg(long)]
    pub result: Option<String>,
    /// Parameter blocks of an inline type, e.g. `x1,x2;u`.
    #[arg(long)]
    pub blocks: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a formula under an assignment or a type at parameters.
    Eval {
        #[arg(long)]
        structure: String,
        #[arg(long, conflicts_with = "ty")]
        formula: Option<String>,
        /// Assignment such as `x=0,y=1`.
        #[arg(long, default_value = "")]
        assign: String,
        #[arg(long = "type")]
        ty: Option<String>,
        #[arg(long)]
        result: Option<String>,
        #[arg(long)]
        blocks: Option<String>,
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Report all eight preservation modes.
    Check {
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        ty: TypeArgs,
        /// Comma-separated parameter properties.
        #[arg(long, default_value = "")]
        props: String,
        #[arg(long)]
        target: String,
        /// Mode that decides the exit code.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Canonical trace of a type at parameters or over properties.
    Trace {
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        ty: TypeArgs,
        /// Parameter tuples such as `0;1,2`.
        #[arg(long, default_value = "", conflicts_with = "props")]
        params: String,
        #[arg(long)]
        props: Option<String>,
    },
    /// Automorphism group, orbits and tuple orbits.
    Aut {
        #[arg(long)]
        structure: String,
        /// List the orbits on k-tuples.
        #[arg(long)]
        orbits: Option<usize>,
        /// Orbit of a tuple such as `0,1`.
        #[arg(long)]
        tuple: Option<String>,
    },
    #[command(subcommand)]
    Algebra(AlgebraCommand),
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Canonical model of a ground Henkin theory.
    Henkin {
        #[arg(long)]
        theory: String,
        #[arg(long)]
        suite: Option<String>,
    },
    /// Tarski-Vaught test for a subuniverse.
    Tv {
        #[arg(long)]
        structure: String,
        #[arg(long)]
        sub: String,
        #[arg(long)]
        suite: Option<String>,
        /// Append the counting formulas for 1..=K.
        #[arg(long)]
        counting: Option<usize>,
    },
    /// Run a directory of recorded cases.
    Corpus {
        dir: PathBuf,
        /// Rewrite every expectation from the current output.
        #[arg(long)]
        update: bool,
    },
    /// Randomized check of the mode laws.
    Laws {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum AlgebraCommand {
    /// Is a unary property a subuniverse?
    Sub {
        #[arg(long)]
        structure: String,
        #[arg(long)]
        prop: String,
    },
    /// Is an equivalence relation a congruence?
    Cong {
        #[arg(long)]
        structure: String,
        /// Binary property or partition file.
        #[arg(long)]
        equiv: String,
    },
    /// All congruences.
    Congs {
        #[arg(long)]
        structure: String,
    },
    /// Grade map of a partition under an operation.
    Graded {
        #[arg(long)]
        structure: String,
        #[arg(long)]
        partition: String,
        #[arg(long)]
        op: String,
    },
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub structure: String,
    /// Read `R` as a directed relation.
    #[arg(long)]
    pub directed: bool,
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Find or check a k-partition into independent sets.
    Partite {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        partition: Option<String>,
    },
    /// Components, or whether a property is a union of components.
    Components {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        prop: Option<String>,
    },
    /// Distance witnesses and diameter.
    Diameter {
        #[command(flatten)]
        g: GraphArgs,
    },
    /// Subdivide every edge into a path of n edges.
    Subdivide {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        n: usize,
    },
}

/// Budget use of one run.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetCounters {
    pub limit: u64,
    pub spent: u64,
}

/// Everything one invocation reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub exit_code: i32,
    pub result: Value,
    pub budget: BudgetCounters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
    #[serde(skip)]
    pub json_indent: usize,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        to_json(self, self.json_indent)
    }
}

/// Serializes with `indent` spaces per level, or compactly for 0.
pub fn to_json<T: Serialize>(value: &T, indent: usize) -> String {
    if indent == 0 {
        return serde_json::to_string(value).expect("report serializes");
    }
    let pad = vec![b' '; indent];
    let fmt = serde_json::ser::PrettyFormatter::with_indent(&pad);
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value.serialize(&mut ser).expect("report serializes");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// Outcome of a command: its result body and whether the asked property holds.
pub struct Outcome {
    pub result: Value,
    pub holds: bool,
}

impl Outcome {
    pub fn new<T: Serialize>(result: &T, holds: bool) -> Self {
        Outcome {
            result: serde_json::to_value(result).expect("report serializes"),
            holds,
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Disconnected | Error::Inconsistent(_) | Error::NotHenkinComplete(_) => EXIT_FAILS,
        _ => EXIT_INPUT,
    }
}

fn error_kind(e: &Error) -> String {
    let debug = format!("{e:?}");
    let end = debug
        .find(|c: char| !c.is_alphanumeric())
        .unwrap_or(debug.len());
    debug[..end].to_string()
}

fn error_body(kind: &str, message: &str) -> Value {
    serde_json::json!({ "error": { "kind": kind, "message": message } })
}

/// Parses `argv` (program name first), runs the command with relative paths
/// resolved against `base`, and returns the report. Never panics on bad input.
pub fn dispatch<I, S>(argv: I, base: &Path) -> RunReport
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let command: Vec<String> = argv.iter().skip(1).cloned().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            return RunReport {
                command,
                exit_code: EXIT_INPUT,
                result: error_body("Usage", e.render().to_string().trim_end()),
                budget: BudgetCounters {
                    limit: DEFAULT_WORK_LIMIT,
                    spent: 0,
                },
                timing_ms: None,
                json_indent: 2,
            };
        }
    };
    let budget = Budget::new(cli.budget);
    let start = Instant::now();
    let (result, exit_code) = match commands::run(&cli, base, &budget) {
        Ok(o) => (o.result, if o.holds { EXIT_HOLDS } else { EXIT_FAILS }),
        Err(e) => (
            error_body(&error_kind(&e), &e.to_string()),
            exit_code_for(&e),
        ),
    };
    RunReport {
        command,
        exit_code,
        result,
        budget: BudgetCounters {
            limit: budget.limit(),
            spent: budget.spent(),
        },
        timing_ms: cli.timing.then(|| start.elapsed().as_secs_f64() * 1000.0),
        json_indent: cli.json_indent,
    }
}
