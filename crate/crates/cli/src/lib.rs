//! Command-line front end: `analyze`, `oracle`, `generate` and `bench`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or parse error,
//! 3 internal invariant violation, 4 oracle explosion guard exceeded,
//! 5 analysis timeout, 6 `oracle --diff` found disagreements.

pub mod report;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lru_antichain::cfg::{parse_cfg_with, write_cfg, ConfigOverride, ParseError};
use lru_antichain::concrete::{classify_by_oracle, OracleError, DEFAULT_GUARD};
use lru_antichain::exact::{classify, AnalysisError, Mode, Options};
use lru_antichain::generators::{
    diamond_chain, hamiltonian_to_cfg, random_cfg, sat_to_cfg, CnfFormula, GenError, GeneratedInstance, Question,
    RandomCfgParams, UndirectedGraph,
};
use lru_antichain::{BlockId, CacheConfig, Classification, Program};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Guard(OracleError),
    #[error("analysis timed out")]
    Timeout,
    #[error("{count} disagreement(s) with {path}")]
    Mismatch { path: String, count: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Invariant(_) => 3,
            CliError::Guard(_) => 4,
            CliError::Timeout => 5,
            CliError::Mismatch { .. } => 6,
        }
    }
}

fn io_err(path: impl AsRef<Path>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.as_ref().display().to_string();
    move |source| CliError::Io { path, source }
}

fn from_analysis(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::Timeout => CliError::Timeout,
        AnalysisError::ThreadPool(m) => CliError::Invariant(m),
    }
}

#[derive(Debug, Parser)]
#[command(name = "lru-antichain", version, about = "Exact hit/miss classification for LRU caches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every access edge of a graph.
    Analyze(AnalyzeArgs),
    /// Classify by exhaustive enumeration of concrete cache states.
    Oracle(OracleArgs),
    /// Write benchmark graphs with ground-truth sidecars.
    Generate(GenerateArgs),
    /// Time the analyses over graph files and print one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Override the associativity of the `cache` header.
    #[arg(long)]
    pub assoc: Option<usize>,
    /// Override the number of sets.
    #[arg(long)]
    pub sets: Option<usize>,
    /// Override the line size in bytes.
    #[arg(long)]
    pub linesize: Option<u64>,
}

impl GeometryArgs {
    fn overrides(&self) -> ConfigOverride {
        ConfigOverride { associativity: self.assoc, num_sets: self.sets, line_size: self.linesize }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Graph file, or `-` for standard input.
    pub input: PathBuf,
    #[arg(long, default_value = "age+zdd", value_parser = parse_mode)]
    pub mode: Mode,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Only report accesses to this block (a symbol or `@address`).
    #[arg(long)]
    pub focus: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Concurrent per-block analyses; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long)]
    pub focus: Option<String>,
    /// Maximum number of (vertex, state) pairs to enumerate.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    pub guard: usize,
    /// Compare with a JSON report and fail on any disagreement.
    #[arg(long)]
    pub diff: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub kind: GenerateKind,
    /// Output path prefix; `.cfg` and `.truth.json` are appended.
    #[arg(long, global = true, default_value = "instance")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of instances; with more than one, `-<i>` is added to the prefix.
    #[arg(long, global = true, default_value_t = 1)]
    pub count: usize,
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Satisfiability as a may-hit question.
    Sat {
        /// DIMACS CNF file; a random formula is drawn when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        max_vars: usize,
        #[arg(long, default_value_t = 12)]
        max_clauses: usize,
    },
    /// Hamiltonian circuit as a may-miss question.
    Ham {
        /// Edge list (`n` on the first line, then `u v` pairs); random when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        vertices: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
    },
    /// Chain of `n` optional accesses after an access to `a`.
    Diamond {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        assoc: usize,
    },
    /// Random graph over symbolic blocks.
    Random {
        #[arg(long, default_value_t = 8)]
        vertices: usize,
        #[arg(long, default_value_t = 4)]
        blocks: usize,
        #[arg(long, default_value_t = 0.15)]
        density: f64,
        #[arg(long, default_value_t = 0.5)]
        top_bias: f64,
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[arg(long, default_value_t = 4)]
        assoc: usize,
    },
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Graph files or directories of `.cfg` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16])]
    pub assoc: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_mode, default_value = "age,zdd,age+zdd")]
    pub modes: Vec<Mode>,
    /// Per-run budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

/// Sidecar written next to every generated graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub generator: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designated_edge: Option<u32>,
    /// `may-hit` or `may-miss`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<bool>,
    /// Expected verdict per access edge id, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<BTreeMap<u32, String>>,
    /// DIMACS text or edge list the instance was built from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// One line of `bench` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub benchmark: String,
    pub mode: String,
    pub assoc: usize,
    pub blocks: usize,
    pub edges: usize,
    #[serde(rename = "timeMs")]
    pub time_ms: f64,
    pub ah: usize,
    pub am: usize,
    pub hm: usize,
    pub unknown: usize,
    /// `ok` or `timeout`.
    pub status: String,
}

/// Parses arguments and runs the command, writing results to `stdout`
/// unless an output file is given.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(a) => analyze(&a, stdout),
        Command::Oracle(a) => oracle(&a, stdout),
        Command::Generate(a) => generate(&a, stdout),
        Command::Bench(a) => bench(&a, stdout),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(io_err("<stdin>"))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(io_err(path))
    }
}

fn load(path: &Path, overrides: &ConfigOverride) -> Result<Program, CliError> {
    let text = read_input(path)?;
    parse_cfg_with(&text, overrides).map_err(|source| CliError::Parse { path: path.display().to_string(), source })
}

fn parse_block(text: &str, config: &CacheConfig) -> Result<BlockId, CliError> {
    if let Some(addr) = text.strip_prefix('@') {
        let n = match addr.strip_prefix("0x").or_else(|| addr.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(hex, 16),
            None => addr.parse(),
        }
        .map_err(|_| CliError::Usage(format!("bad block address `{text}`")))?;
        Ok(config.map_address(n).0)
    } else {
        Ok(BlockId::named(text))
    }
}

fn emit(report: &Report, format: Format, output: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Json => {
            buf.extend_from_slice(report.to_json().as_bytes());
            buf.push(b'\n');
        }
        Format::Csv => report.write_csv(&mut buf).map_err(|e| CliError::Invariant(e.to_string()))?,
    }
    write_out(&buf, output, stdout)
}

fn write_out(bytes: &[u8], output: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, bytes).map_err(io_err(p)),
        None => stdout.write_all(bytes).map_err(io_err("<stdout>")),
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn analyze(a: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let t0 = Instant::now();
    let program = load(&a.input, &a.geometry.overrides())?;
    let parse_ms = ms(t0.elapsed());
    let focus = a.focus.as_deref().map(|f| parse_block(f, &program.config)).transpose()?;
    let opts = Options {
        mode: a.mode,
        jobs: a.jobs,
        focus: focus.clone(),
        deadline: a.timeout.map(|s| Instant::now() + Duration::from_secs_f64(s)),
        ..Options::default()
    };
    let analysis = classify(&program, &opts).map_err(from_analysis)?;
    let mut report = Report::from_analysis(&program, a.mode.as_str(), focus.as_ref(), &analysis);
    report.timings_ms.parse = parse_ms;
    report.timings_ms.total = ms(t0.elapsed());
    report.check(&program, focus.as_ref()).map_err(CliError::Invariant)?;
    emit(&report, a.format, a.output.as_deref(), stdout)
}

fn oracle(a: &OracleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let t0 = Instant::now();
    let program = load(&a.input, &a.geometry.overrides())?;
    let parse_ms = ms(t0.elapsed());
    let focus = a.focus.as_deref().map(|f| parse_block(f, &program.config)).transpose()?;
    let t1 = Instant::now();
    let verdicts = classify_by_oracle(&program, a.guard).map_err(CliError::Guard)?;
    let mut report = Report::from_oracle(&program, focus.as_ref(), &verdicts);
    report.timings_ms.parse = parse_ms;
    report.timings_ms.oracle = ms(t1.elapsed());
    report.timings_ms.total = ms(t0.elapsed());
    report.check(&program, focus.as_ref()).map_err(CliError::Invariant)?;
    emit(&report, a.format, a.output.as_deref(), stdout)?;
    if let Some(path) = &a.diff {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let other =
            Report::from_json(&text).map_err(|e| CliError::Usage(format!("{}: not a report: {e}", path.display())))?;
        let diffs = report.diff(&other);
        for d in &diffs {
            eprintln!("{d}");
        }
        if !diffs.is_empty() {
            return Err(CliError::Mismatch { path: path.display().to_string(), count: diffs.len() });
        }
    }
    Ok(())
}

fn question_name(q: Question) -> &'static str {
    match q {
        Question::MayHit => "may-hit",
        Question::MayMiss => "may-miss",
    }
}

fn reduction_truth(generator: &str, seed: u64, inst: &GeneratedInstance, source: String) -> Truth {
    Truth {
        generator: generator.into(),
        seed,
        designated_edge: Some(inst.designated.0),
        question: Some(question_name(inst.question).into()),
        answer: Some(inst.ground_truth),
        verdicts: None,
        source: Some(source),
    }
}

fn gen_err(e: GenError) -> CliError {
    CliError::Usage(e.to_string())
}

fn generate(a: &GenerateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for i in 0..a.count {
        let (program, truth) = match &a.kind {
            GenerateKind::Sat { input, max_vars, max_clauses } => {
                let f = match input {
                    Some(p) => CnfFormula::parse_dimacs(&fs::read_to_string(p).map_err(io_err(p))?).map_err(gen_err)?,
                    None => CnfFormula::random(&mut rng, *max_vars, *max_clauses),
                };
                let inst = sat_to_cfg(&f).map_err(gen_err)?;
                let truth = reduction_truth("sat", a.seed, &inst, f.to_dimacs());
                (inst.program, truth)
            }
            GenerateKind::Ham { input, vertices, density } => {
                let g = match input {
                    Some(p) => {
                        UndirectedGraph::parse_edge_list(&fs::read_to_string(p).map_err(io_err(p))?).map_err(gen_err)?
                    }
                    None => UndirectedGraph::random(&mut rng, *vertices, *density),
                };
                let inst = hamiltonian_to_cfg(&g).map_err(gen_err)?;
                let truth = reduction_truth("ham", a.seed, &inst, g.to_edge_list());
                (inst.program, truth)
            }
            GenerateKind::Diamond { n, assoc } => {
                if *assoc == 0 {
                    return Err(CliError::Usage("associativity must be at least 1".into()));
                }
                let program = diamond_chain(*n, *assoc);
                // Every block is accessed at most once on any path.
                let verdicts = program
                    .graph
                    .edges()
                    .iter()
                    .filter(|e| e.label.block().is_some())
                    .map(|e| (e.id.0, Classification::AlwaysMiss.as_str().to_string()))
                    .collect();
                let truth = Truth {
                    generator: "diamond".into(),
                    seed: a.seed,
                    designated_edge: None,
                    question: None,
                    answer: None,
                    verdicts: Some(verdicts),
                    source: None,
                };
                (program, truth)
            }
            GenerateKind::Random { vertices, blocks, density, top_bias, starts, assoc } => {
                if *assoc == 0 {
                    return Err(CliError::Usage("associativity must be at least 1".into()));
                }
                if !(0.0..=1.0).contains(density) || !(0.0..=1.0).contains(top_bias) {
                    return Err(CliError::Usage("probabilities must lie in [0, 1]".into()));
                }
                let params = RandomCfgParams {
                    vertices: *vertices,
                    blocks: *blocks,
                    edge_density: *density,
                    top_bias: *top_bias,
                    starts: *starts,
                };
                let graph = random_cfg(&params, a.seed.wrapping_add(i as u64));
                let program = Program { config: CacheConfig::single_set(*assoc), graph };
                let verdicts = classify_by_oracle(&program, DEFAULT_GUARD)
                    .ok()
                    .map(|m| m.into_iter().map(|(id, c)| (id.0, c.as_str().to_string())).collect());
                let truth = Truth {
                    generator: "random".into(),
                    seed: a.seed.wrapping_add(i as u64),
                    designated_edge: None,
                    question: None,
                    answer: None,
                    verdicts,
                    source: None,
                };
                (program, truth)
            }
        };
        let stem = if a.count == 1 {
            a.out.as_os_str().to_owned()
        } else {
            let mut s = a.out.as_os_str().to_owned();
            s.push(format!("-{i}"));
            s
        };
        let cfg_path = PathBuf::from({
            let mut s = stem.clone();
            s.push(".cfg");
            s
        });
        let truth_path = PathBuf::from({
            let mut s = stem;
            s.push(".truth.json");
            s
        });
        fs::write(&cfg_path, write_cfg(&program)).map_err(io_err(&cfg_path))?;
        let json = serde_json::to_string_pretty(&truth).expect("truth serializes") + "\n";
        fs::write(&truth_path, json).map_err(io_err(&truth_path))?;
        writeln!(stdout, "{}", cfg_path.display()).map_err(io_err("<stdout>"))?;
    }
    Ok(())
}

fn bench_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(io_err(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "cfg"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

/// Runs every (file, associativity, mode) combination and returns the rows.
pub fn bench_rows(a: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    if a.assoc.contains(&0) {
        return Err(CliError::Usage("associativity must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for file in bench_inputs(&a.inputs)? {
        let name = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let text = fs::read_to_string(&file).map_err(io_err(&file))?;
        for &assoc in &a.assoc {
            let overrides = ConfigOverride { associativity: Some(assoc), ..ConfigOverride::default() };
            let program = parse_cfg_with(&text, &overrides)
                .map_err(|source| CliError::Parse { path: file.display().to_string(), source })?;
            let blocks = program.graph.blocks().len();
            let edges = program.graph.edges().iter().filter(|e| e.label.block().is_some()).count();
            for &mode in &a.modes {
                let start = Instant::now();
                let opts = Options {
                    mode,
                    jobs: a.jobs,
                    deadline: Some(start + Duration::from_secs_f64(a.timeout)),
                    ..Options::default()
                };
                let result = classify(&program, &opts);
                let time_ms = ms(start.elapsed());
                let mut row = BenchRow {
                    benchmark: name.clone(),
                    mode: mode.as_str().into(),
                    assoc,
                    blocks,
                    edges,
                    time_ms,
                    ah: 0,
                    am: 0,
                    hm: 0,
                    unknown: 0,
                    status: "ok".into(),
                };
                match result {
                    Ok(r) => {
                        let s = report::Summary::tally(r.edges.values().map(|e| &e.classification));
                        (row.ah, row.am, row.hm, row.unknown) =
                            (s.always_hit, s.always_miss, s.hit_and_miss, s.unknown);
                    }
                    Err(AnalysisError::Timeout) => row.status = "timeout".into(),
                    Err(e) => return Err(from_analysis(e)),
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn bench(a: &BenchArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let rows = bench_rows(a)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Invariant(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invariant(e.to_string()))?;
    write_out(&bytes, a.output.as_deref(), stdout)
}
