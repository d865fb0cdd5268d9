//! `respair`: resonance and pairing-formula checks for regular graphs.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use respair::cover::CoverError;
use respair::graph::DEFAULT_GENERATION_BUDGET;
use respair::report::{self, AnalysisConfig, AnalysisError, SuiteConfig};
use respair::{generate_random_regular, GraphError, NamedGraph, RegularGraph};

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_FORMAT: u8 = 4;
const EXIT_GRAPH: u8 = 5;
const EXIT_NUMERICAL: u8 = 6;

#[derive(Parser)]
#[command(name = "respair", version, about = "Resonances and pairing-formula checks on regular graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis of one graph; writes a JSON or CSV report.
    Analyze(AnalyzeArgs),
    /// Analyses a suite of named and random graphs; one row per check.
    Verify(VerifyArgs),
    /// Writes a seeded random regular graph in edge-list format.
    Generate(GenerateArgs),
    /// Ihara-Bass determinant identity at sampled points.
    Zeta(ZetaArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Edge-list file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Named graph, e.g. `petersen`, `complete:4`, `cycle:5`,
    /// `complete_bipartite:3`, `hypercube3`.
    #[arg(long)]
    named: Option<NamedGraph>,
    /// Random regular graph `N,DEGREE,SEED`.
    #[arg(long, value_parser = parse_random)]
    random: Option<(usize, usize, u64)>,
}

fn parse_random(s: &str) -> Result<(usize, usize, u64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, d, seed] = parts[..] else {
        return Err("expected N,DEGREE,SEED".into());
    };
    let num = |x: &str| x.parse::<u64>().map_err(|e| format!("{x}: {e}"));
    Ok((num(n)? as usize, num(d)? as usize, num(seed)?))
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    oracle_tol: f64,
    #[arg(long, default_value_t = 12)]
    nmax: usize,
    /// Cover truncation depth; 0 skips the cover checks.
    #[arg(long, default_value_t = 0)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20)]
    seed_count: usize,
    /// Vertex count of the random graphs; cycles through 10..=20 when absent.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 12)]
    nmax: usize,
    #[arg(long, default_value_t = 5)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave out the named graphs.
    #[arg(long)]
    skip_named: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ZetaArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long, default_value_t = 20)]
    u_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl ToString) -> Self {
        Failure { code, msg: msg.to_string() }
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        let code = match e {
            GraphError::Format { .. } => EXIT_FORMAT,
            _ => EXIT_GRAPH,
        };
        Failure::new(code, e)
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Graph(g) => g.into(),
            AnalysisError::Cover(CoverError::DepthTooSmall(_) | CoverError::TooLarge(_)) => Failure::new(EXIT_USAGE, e),
            other => Failure::new(EXIT_NUMERICAL, other),
        }
    }
}

fn load(src: &GraphSource) -> Result<(RegularGraph, String), Failure> {
    if let Some(path) = &src.input {
        let text = fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
        return Ok((RegularGraph::from_edge_list(&text)?, format!("file:{}", path.display())));
    }
    if let Some(name) = src.named {
        return Ok((name.build()?, format!("named:{name}")));
    }
    let (n, d, seed) = src.random.expect("clap enforces one source");
    let g = generate_random_regular(n, d, seed, DEFAULT_GENERATION_BUDGET)?;
    Ok((g, report::random_source(n, d, seed)))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new(EXIT_IO, e)),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<bool, Failure> {
    let (g, source) = load(&a.source)?;
    let config = AnalysisConfig {
        tol: a.tol,
        oracle_tol: a.oracle_tol,
        n_max: a.nmax,
        depth: a.depth,
        seed: a.seed,
        ..AnalysisConfig::default()
    };
    let r = report::analyze(&g, &source, &config)?;
    let text = match a.format {
        Format::Json => report::to_json(&r),
        Format::Csv => report::to_csv(&r),
    };
    emit(&a.out, &text)?;
    Ok(r.pass.all)
}

fn verify(a: VerifyArgs) -> Result<bool, Failure> {
    let cfg = SuiteConfig {
        include_named: !a.skip_named,
        seed_count: a.seed_count,
        n: a.n,
        degree: a.degree,
        analysis: AnalysisConfig {
            tol: a.tol,
            n_max: a.nmax,
            depth: a.depth,
            seed: a.seed,
            ..AnalysisConfig::default()
        },
    };
    let reports = report::run_suite(&cfg)?;
    let rows: Vec<_> = reports.iter().flat_map(report::suite_rows).collect();
    emit(&None, &report::suite_table(&rows))?;
    Ok(rows.iter().all(|r| r.pass))
}

fn generate(a: GenerateArgs) -> Result<bool, Failure> {
    let g = generate_random_regular(a.n, a.degree, a.seed, DEFAULT_GENERATION_BUDGET)?;
    emit(&a.out, &g.to_edge_list())?;
    Ok(true)
}

fn zeta(a: ZetaArgs) -> Result<bool, Failure> {
    let (g, _) = load(&a.source)?;
    let rows = report::zeta_table(&g, a.u_samples, a.seed);
    emit(&None, &report::zeta_csv(&rows))?;
    Ok(rows.iter().all(|b| b.relative <= a.tol))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Verify(a) => verify(a),
        Command::Generate(a) => generate(a),
        Command::Zeta(a) => zeta(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECKS_FAILED),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
