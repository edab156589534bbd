use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crosstalk_core::analysis::{self, Cell, RateTable, TableOptions};
use crosstalk_core::codec::{self, Codec};
use crosstalk_core::pairgraph::{self, MAX_POWER_ITERATIONS};
use crosstalk_core::subdp::{self, PartitionJson, SubDpResult, EXACT_SUBDP_CAP};
use crosstalk_core::tfgraph::{self, TransitionFreeGraph, DEFAULT_GRAPH_CAP};
use crosstalk_core::{BitWord, Error, ForbiddenPair};

#[derive(Parser)]
#[command(
    name = "crosstalk",
    version,
    about = "Transition free bus codes: counting, bounds, partitions and codecs"
)]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0, env = "CROSSTALK_THREADS")]
    threads: usize,

    /// Largest n for which the transition free graph is built explicitly.
    #[arg(long, global = true, default_value_t = DEFAULT_GRAPH_CAP, env = "CROSSTALK_GRAPH_CAP")]
    graph_cap: usize,

    /// Largest n for the exact minimum-degree computation.
    #[arg(long, global = true, default_value_t = 2 * DEFAULT_GRAPH_CAP, env = "CROSSTALK_MIN_DEGREE_CAP")]
    min_degree_cap: usize,

    /// Power iteration budget.
    #[arg(long, global = true, default_value_t = MAX_POWER_ITERATIONS, env = "CROSSTALK_MAX_ITER")]
    max_iter: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact number of ordered transition free word pairs N(p,q,n).
    Count {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n: usize,
    },
    /// Edge-density growth rate and the resulting rate bounds.
    Alpha {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = pairgraph::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Pair transfer matrix as JSON.
    Matrix {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Statistics of the transition free graph, optionally exporting its edges.
    Graph {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n: usize,
        /// Write the edge list ("u v" per line) here.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Subgraph domatic number with a witness partition.
    Subdp {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the witness partition JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Codec synthesis, verification and simulation.
    #[command(subcommand)]
    Codec(CodecCommand),
    /// Per-n rate table.
    Table {
        #[command(flatten)]
        pair: PairArgs,
        /// Values of n: "a..b", "a-b", "a,b,c" or a single value.
        #[arg(long, value_parser = parse_n_values)]
        n: NValues,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = pairgraph::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write (n, rate, lower, upper) plot data as CSV here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CodecCommand {
    /// Build a codec from a domatic partition and emit its JSON.
    Synth {
        #[command(flatten)]
        target: CodecTarget,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively check a codec file ("-" reads stdin).
    Verify {
        #[arg(default_value = "-")]
        file: PathBuf,
    },
    /// Encode a random message stream and check the bus transitions and round trip.
    Simulate {
        /// Codec JSON to load; synthesized from the pattern pair when absent.
        #[arg(long)]
        codec: Option<PathBuf>,
        #[command(flatten)]
        target: CodecTarget,
        #[arg(long, default_value_t = 100_000)]
        messages: usize,
        /// Initial bus state; defaults to the smallest state.
        #[arg(long)]
        initial: Option<BitWord>,
    },
}

#[derive(Args)]
struct PairArgs {
    #[arg(long, default_value = "10")]
    p: String,
    #[arg(long, default_value = "01")]
    q: String,
}

impl PairArgs {
    fn parse(&self) -> Result<ForbiddenPair, CliError> {
        Ok(ForbiddenPair::parse(&self.p, &self.q)?)
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Force the exact solver.
    #[arg(long, conflicts_with = "heuristic")]
    exact: bool,
    /// Force the heuristic.
    #[arg(long)]
    heuristic: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Stop the heuristic once this many classes are found.
    #[arg(long)]
    target: Option<usize>,
}

#[derive(Args)]
struct CodecTarget {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Debug)]
struct NValues(Vec<usize>);

fn parse_n_values(s: &str) -> Result<NValues, String> {
    let num = |t: &str| -> Result<usize, String> {
        let v: usize = t
            .trim()
            .parse()
            .map_err(|_| format!("not a number: {t:?}"))?;
        if v == 0 {
            return Err("n must be at least 1".into());
        }
        Ok(v)
    };
    let range = s.split_once("..").or_else(|| s.split_once('-'));
    let values = if let Some((a, b)) = range {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s:?}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    Ok(NValues(values))
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(PathBuf, io::Error),
    /// A checked property does not hold.
    Violation(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Core(Error::ResourceLimit { .. } | Error::NumericalFailure { .. }) => 3,
            CliError::Core(_) | CliError::Io(..) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Violation(msg) => write!(f, "{msg}"),
        }
    }
}

type CliResult = Result<(), CliError>;

struct Ctx {
    graph_cap: usize,
    min_degree_cap: usize,
    max_iter: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("error: cannot start thread pool: {e}");
        return ExitCode::from(2);
    }
    let ctx = Ctx {
        graph_cap: cli.graph_cap,
        min_degree_cap: cli.min_degree_cap,
        max_iter: cli.max_iter,
    };
    match run(cli.command, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cmd: Command, ctx: &Ctx) -> CliResult {
    match cmd {
        Command::Count { pair, n } => {
            println!("{}", pairgraph::count_pairs(&pair.parse()?, n)?);
            Ok(())
        }
        Command::Alpha { pair, tol, format } => alpha(&pair.parse()?, tol, format, ctx),
        Command::Matrix { pair, out } => {
            let m = pairgraph::build_pair_graph(&pair.parse()?)?;
            let mut text = serde_json::to_string_pretty(&m.to_json()?).map_err(Error::from)?;
            text.push('\n');
            emit(out.as_deref(), text.as_bytes())
        }
        Command::Graph { pair, n, edges } => graph(&pair.parse()?, n, edges, ctx),
        Command::Subdp {
            pair,
            n,
            solver,
            out,
        } => {
            let tfg = tfgraph::build_graph_with_cap(&pair.parse()?, n, ctx.graph_cap)?;
            let r = solve(&tfg, &solver)?;
            println!("S={}", r.value);
            println!("exact: {}", r.exact);
            println!("rate: {}", subdp::rate_from_subdp(&r, n));
            println!(
                "support: {} of {} vertices",
                r.subgraph().len(),
                tfg.graph().vertex_count()
            );
            if let Some(path) = out {
                let json = PartitionJson::from_result(&tfg, &r);
                let mut text = serde_json::to_string_pretty(&json).map_err(Error::from)?;
                text.push('\n');
                write_file(&path, text.as_bytes())?;
            }
            Ok(())
        }
        Command::Codec(c) => codec_cmd(c, ctx),
        Command::Table {
            pair,
            n,
            seed,
            tol,
            format,
            out,
            plot,
        } => {
            let opts = TableOptions {
                tol,
                seed,
                graph_cap: ctx.graph_cap,
                min_degree_cap: ctx.min_degree_cap,
                max_iter: ctx.max_iter,
            };
            let t = analysis::rate_table(&pair.parse()?, &n.0, &opts)?;
            let body = match format {
                Format::Text => table_text(&t).into_bytes(),
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&t).map_err(Error::from)?;
                    s.push('\n');
                    s.into_bytes()
                }
                Format::Csv => {
                    let mut buf = Vec::new();
                    t.write_csv(&mut buf)?;
                    buf
                }
            };
            emit(out.as_deref(), &body)?;
            if let Some(path) = plot {
                let mut buf = Vec::new();
                t.write_plot_csv(&mut buf)?;
                write_file(&path, &buf)?;
            }
            Ok(())
        }
    }
}

fn alpha(fp: &ForbiddenPair, tol: f64, format: Format, ctx: &Ctx) -> CliResult {
    let m = pairgraph::build_pair_graph(fp)?;
    let lambda = pairgraph::spectral_radius_with_cap(&m, tol, ctx.max_iter)?;
    let a = (lambda / 2.0).log2();
    let bounds = analysis::rate_bounds(a);
    match format {
        Format::Json => {
            let v = serde_json::json!({
                "p": fp.p().to_string(),
                "q": fp.q().to_string(),
                "lambda": lambda,
                "alpha": a,
                "bounds": bounds.as_ref().ok(),
                "stateless_ceiling": analysis::stateless_ceiling(),
            });
            println!("{}", serde_json::to_string_pretty(&v).map_err(Error::from)?);
        }
        Format::Text | Format::Csv => {
            println!("lambda: {lambda:.10}");
            println!("alpha: {a:.6}");
            match &bounds {
                Ok(b) => println!("bounds: ({:.6}, {:.6})", b.lower, b.upper),
                Err(e) => println!("bounds: none ({e})"),
            }
            println!("stateless ceiling: {:.6}", analysis::stateless_ceiling());
        }
    }
    Ok(())
}

fn graph(fp: &ForbiddenPair, n: usize, edges: Option<PathBuf>, ctx: &Ctx) -> CliResult {
    let tfg = tfgraph::build_graph_with_cap(fp, n, ctx.graph_cap)?;
    let g = tfg.graph();
    println!("vertices: {}", g.vertex_count());
    println!("edges: {}", tfg.edge_count());
    println!("density: {}", tfg.edge_density());
    println!("min degree: {}", g.min_degree());
    println!("max degree: {}", g.max_degree());
    if g.edge_count() > 0 {
        let core = tfgraph::prune_to_density_core(g)?;
        println!(
            "density core: {} vertices, min degree {}",
            core.len(),
            core.min_degree(g)
        );
    }
    if let Some(path) = edges {
        let mut buf = Vec::new();
        tfg.write_edge_list(&mut buf)
            .map_err(|e| CliError::Io(path.clone(), e))?;
        write_file(&path, &buf)?;
    }
    Ok(())
}

fn solve(tfg: &TransitionFreeGraph, s: &SolverArgs) -> Result<SubDpResult, CliError> {
    let exact = s.exact || (!s.heuristic && tfg.graph().vertex_count() <= EXACT_SUBDP_CAP);
    Ok(if exact {
        subdp::subdp_exact(tfg.graph())?
    } else {
        subdp::subdp_heuristic(tfg.graph(), s.target, s.seed)?
    })
}

fn synth(t: &CodecTarget, ctx: &Ctx) -> Result<Codec, CliError> {
    let tfg = tfgraph::build_graph_with_cap(&t.pair.parse()?, t.n, ctx.graph_cap)?;
    let r = solve(&tfg, &t.solver)?;
    Ok(codec::synthesize_on(&tfg, &r.partition)?)
}

fn codec_cmd(cmd: CodecCommand, ctx: &Ctx) -> CliResult {
    match cmd {
        CodecCommand::Synth { target, out } => {
            let c = synth(&target, ctx)?;
            let mut text = c.to_json()?;
            text.push('\n');
            emit(out.as_deref(), text.as_bytes())
        }
        CodecCommand::Verify { file } => {
            let c = Codec::from_json(&read_input(&file)?)?;
            let report = codec::verify_consistency(&c);
            println!("consistent: {}", report.consistent);
            println!("checked: {}", report.checked);
            match report.counterexample {
                None => Ok(()),
                Some(cx) => {
                    println!(
                        "counterexample: {}",
                        serde_json::to_string(&cx).map_err(Error::from)?
                    );
                    Err(CliError::Violation("codec is inconsistent".into()))
                }
            }
        }
        CodecCommand::Simulate {
            codec: path,
            target,
            messages,
            initial,
        } => {
            let c = match path {
                Some(p) => Codec::from_json(&read_input(&p)?)?,
                None => synth(&target, ctx)?,
            };
            let s0 = initial.unwrap_or_else(|| c.default_initial_state());
            let r = codec::simulate(&c, &s0, messages, target.solver.seed)?;
            println!("messages: {}", r.messages);
            println!("violations: {}", r.violations);
            println!("mismatches: {}", r.mismatches);
            println!("rate: {}", r.rate);
            if r.passed() {
                Ok(())
            } else {
                Err(CliError::Violation(format!(
                    "simulation found {} forbidden transitions and {} mismatches",
                    r.violations, r.mismatches
                )))
            }
        }
    }
}

fn table_text(t: &RateTable) -> String {
    fn cell<T: ToString>(c: &Cell<T>) -> String {
        match c {
            Cell::Value(v) => v.to_string(),
            Cell::Limit(_) => "cap".into(),
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "p={} q={} alpha={:.6}", t.p, t.q, t.alpha);
    if let Some(b) = &t.bounds {
        let _ = writeln!(s, "bounds: ({:.6}, {:.6})", b.lower, b.upper);
    }
    let _ = writeln!(s, "stateless ceiling: {:.6}", t.stateless_ceiling);
    let _ = writeln!(
        s,
        "{:>4} {:>24} {:>24} {:>10} {:>9} {:>12} {:>6} {:>6} {:>8}",
        "n", "N", "|E|", "density", "alpha_n", "min_degree", "S", "exact", "rate"
    );
    for r in &t.rows {
        let rate = match &r.rate {
            Cell::Value(v) => format!("{v:.6}"),
            Cell::Limit(_) => "cap".into(),
        };
        let exact = r.exact.map(|e| e.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:>4} {:>24} {:>24} {:>10.4} {:>9.6} {:>12} {:>6} {:>6} {:>8}",
            r.n,
            r.pairs,
            r.edges,
            r.density,
            r.alpha_n,
            cell(&r.min_degree),
            cell(&r.subdp),
            exact,
            rate
        );
    }
    s
}

fn read_input(path: &Path) -> Result<String, CliError> {
    let mut s = String::new();
    if path == Path::new("-") {
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(path.into(), e))?;
    } else {
        s = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))?;
    }
    Ok(s)
}

/// Writes to `path` if given, otherwise to stdout.
fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => write_file(p, bytes),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io("<stdout>".into(), e)),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(path.into(), e))?;
    println!(
        "wrote {} sha256:{:x}",
        path.display(),
        Sha256::digest(bytes)
    );
    Ok(())
}
