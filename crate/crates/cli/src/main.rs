//! `ergogap`: certified spectral-gap bounds from the command line.

mod commands;
mod input;
mod table;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NonCertifiable(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl From<ergogap_core::Error> for CliError {
    fn from(e: ergogap_core::Error) -> Self {
        match e {
            ergogap_core::Error::NonCertifiable(_) => CliError::NonCertifiable(e.to_string()),
            // a valid expression overflowing f64 far out is a limit of the computation
            ergogap_core::Error::InvalidRate { value, .. } if value.is_infinite() => {
                CliError::NonCertifiable(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NonCertifiable(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionChoice {
    /// `f(i) = i`
    Identity,
    /// The eigenfunction of the first non-zero eigenvalue.
    Eigenfunction,
    /// `f ≡ 1`
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Explicit bracket, approximation iterations and truncation oracle for a chain.
    Gap,
    /// Closed-form and variational lower bounds for compact manifolds.
    Geometry,
    /// Verdicts for the ten ergodicity properties of a chain.
    Classify,
    /// Cheeger-type constants of a finite symmetric kernel or chain.
    Cheeger,
    /// Variance and entropy decay of the semigroup against the spectral bound.
    Semigroup,
}

/// Strictly increasing truncation sizes.
#[derive(Debug, Clone)]
struct LadderArg(Vec<usize>);

fn parse_ladder(s: &str) -> Result<LadderArg, String> {
    let sizes = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err("ladder sizes must be positive and strictly increasing".into());
    }
    Ok(LadderArg(sizes))
}

/// Comma-separated constant expressions such as `1,pi/2,-0.5`.
#[derive(Debug, Clone)]
struct ValueList(Vec<f64>);

fn parse_values(s: &str) -> Result<ValueList, String> {
    s.split(',')
        .map(|p| {
            let e = ergogap_core::RateExpr::parse(p).map_err(|e| format!("{p:?}: {e}"))?;
            if !e.is_constant() {
                return Err(format!("{p:?} must not depend on i"));
            }
            let v = e.eval(0.0);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{p:?} is not finite"))
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(ValueList)
}

#[derive(Debug, Parser)]
#[command(name = "ergogap", version, about = "Certified spectral-gap bounds and ergodicity verdicts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input document: chain spec, kernel, or geometry triples (geometry defaults to the 60-point grid).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Evaluation horizon for infinite chains; truncation level for cheeger and semigroup.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Truncation ladder sizes for the gap oracle, e.g. 500,1000,2000.
    #[arg(long, global = true, value_parser = parse_ladder)]
    ladder: Option<LadderArg>,
    /// Nash parameter q.
    #[arg(long, global = true, default_value_t = 3.0)]
    q: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for the heuristic cut search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run the dominance audit (geometry).
    #[arg(long, global = true)]
    audit: bool,
    /// Geometry grid: dimensions (with --diameter and --curvature, all combinations).
    #[arg(long, global = true, value_parser = parse_values, allow_hyphen_values = true)]
    dimension: Option<ValueList>,
    /// Geometry grid: diameters.
    #[arg(long, global = true, value_parser = parse_values, allow_hyphen_values = true)]
    diameter: Option<ValueList>,
    /// Geometry grid: curvature lower bounds.
    #[arg(long, global = true, value_parser = parse_values, allow_hyphen_values = true)]
    curvature: Option<ValueList>,
    /// Test function for semigroup.
    #[arg(long, global = true, value_enum, default_value_t = FunctionChoice::Identity)]
    function: FunctionChoice,
}

/// Resolved run configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub input: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub ladder: Option<Vec<usize>>,
    pub q: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub audit: bool,
    pub function: FunctionChoice,
    /// Geometry grid axes `(dimensions, diameters, curvatures)`.
    pub grid: Option<[Vec<f64>; 3]>,
    /// Parallelism cap from `ERGOGAP_THREADS`.
    pub threads: usize,
}

impl Config {
    #[cfg(test)]
    pub fn for_tests() -> Self {
        Config {
            input: None,
            horizon: None,
            ladder: None,
            q: 3.0,
            format: Format::Csv,
            output: None,
            seed: 0,
            audit: false,
            function: FunctionChoice::Identity,
            grid: None,
            threads: 1,
        }
    }
}

fn thread_cap() -> Result<usize, CliError> {
    let default = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("ERGOGAP_THREADS") {
        Err(_) => Ok(default),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Input(format!("ERGOGAP_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn render(report: &commands::Report, format: Format) -> String {
    match format {
        Format::Csv => report.table.csv(),
        Format::Text => {
            let mut out = report.table.text();
            if !report.notes.is_empty() {
                out.push('\n');
                for (k, v) in &report.notes {
                    out.push_str(&format!("{k}: {}\n", v.text()));
                }
            }
            out
        }
        Format::Json => {
            let mut summary = Map::new();
            for (k, v) in &report.notes {
                summary.insert(k.clone(), v.json());
            }
            let doc = json!({ "command": report.command, "rows": report.table.json(), "summary": Value::Object(summary) });
            serde_json::to_string_pretty(&doc).expect("serialisable") + "\n"
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let grid = match (cli.dimension, cli.diameter, cli.curvature) {
        (None, None, None) => None,
        (Some(d), Some(dd), Some(k)) => Some([d.0, dd.0, k.0]),
        _ => return Err(CliError::Input("--dimension, --diameter and --curvature go together".into())),
    };
    let cfg = Config {
        input: cli.input,
        horizon: cli.horizon,
        ladder: cli.ladder.map(|l| l.0),
        q: cli.q,
        format: cli.format,
        output: cli.output,
        seed: cli.seed,
        audit: cli.audit,
        function: cli.function,
        grid,
        threads: thread_cap()?,
    };
    let report = match cli.command {
        Command::Gap => commands::gap(&cfg)?,
        Command::Geometry => commands::geometry(&cfg)?,
        Command::Classify => commands::classify(&cfg)?,
        Command::Cheeger => commands::cheeger(&cfg)?,
        Command::Semigroup => commands::semigroup(&cfg)?,
    };
    let text = render(&report, cfg.format);
    match &cfg.output {
        Some(p) => std::fs::write(p, &text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).ok();
        }
    }
    if cfg.format == Format::Csv {
        for (k, v) in &report.notes {
            eprintln!("# {k}: {}", v.text());
        }
    }
    match report.invariant {
        Some(msg) => Err(CliError::Invariant(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ergogap: {e}");
            ExitCode::from(e.code())
        }
    }
}
