use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};

use pbc_core::circuit::{generate_cnot_t, generate_random_family2, Circuit};
use pbc_core::engine::{histogram, run_seeded_shot, run_shots, BackendKind, SampleConfig};
use pbc_core::greedy::{candidate_count, GreedyConfig, GreedyMode};
use pbc_core::incpbc::{compile_incpbc, resource_table, simulate_incpbc};
use pbc_core::mbqc::{generate_random_pattern, CompiledPattern, MeasurementPattern, ProcessingOrder};
use pbc_core::statevec::Outcome;
use pbc_core::stats::{
    boxplot_csv, program_document, reduction_row, spread_csv, BoxplotRow, BoxplotSummary,
    ReductionTable, RunManifest, Spread, WeightRun,
};
use pbc_core::{gadgetize, AdaptiveCliffordCircuit};

#[derive(Parser)]
#[command(name = "pbc", version, about = "Pauli-based computation compiler and simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate random circuits or measurement patterns.
    Gen(GenArgs),
    /// Compile a circuit or pattern to PBC programs (one per shot).
    Compile(RunArgs),
    /// Sample readout outcomes through PBC.
    Sample(RunArgs),
    /// Weight statistics over random family-2 circuits.
    Stats(StatsArgs),
    /// Run a measurement pattern and check the depth and weight bounds.
    Pattern(PatternArgs),
    /// Compile to weight-1/2 measurements, simulate or tabulate resources.
    Incpbc(IncArgs),
    /// Count greedy candidate evaluations against the closed form.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Family2,
    CnotT,
    Pattern,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "family2")]
    kind: GenKind,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long)]
    t: usize,
    /// Pattern depth (number of layers).
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 0.35)]
    edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of instances; with more than one, `--out` names a directory.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Off,
    Structured,
    Randomized,
    BruteForce,
}

#[derive(Args, Clone)]
struct GreedyArgs {
    #[arg(long, value_enum)]
    greedy_mode: Option<ModeArg>,
    #[arg(long)]
    greedy_order: Option<usize>,
    /// Candidate budget for randomized mode.
    #[arg(long)]
    greedy_budget: Option<u64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value = "dummy")]
    backend: BackendKind,
    #[arg(long, default_value_t = 1024)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    greedy: GreedyArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Circuit file.
    #[arg(required_unless_present = "pattern", conflicts_with = "pattern")]
    circuit: Option<PathBuf>,
    /// Measurement-pattern file (compiled through its circuit).
    #[arg(long)]
    pattern: Option<PathBuf>,
    /// Processing order for pattern mode.
    #[arg(long)]
    order: Option<ProcessingOrder>,
    #[command(flatten)]
    run: SampleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 16, 22])]
    t: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    circuits: usize,
    #[arg(long = "greedy-order", value_delimiter = ',', default_values_t = [0, 1, 2])]
    orders: Vec<usize>,
    #[arg(long, default_value = "dummy")]
    backend: BackendKind,
    #[arg(long, default_value_t = 1024)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PatternArgs {
    pattern: PathBuf,
    #[arg(long, default_value = "o3")]
    order: ProcessingOrder,
    #[arg(long, default_value = "dummy")]
    backend: BackendKind,
    #[arg(long, default_value_t = 1024)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IncArgs {
    circuit: PathBuf,
    /// Simulate and print the readout histogram instead of the program.
    #[arg(long, conflicts_with = "table")]
    simulate: bool,
    /// Print the resource comparison table.
    #[arg(long)]
    table: bool,
    /// 1WQC depth for the table, when known.
    #[arg(long, requires = "table")]
    pattern_depth: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [60])]
    t: Vec<usize>,
    #[arg(long = "greedy-order", value_delimiter = ',', default_values_t = [0, 1, 2, 3])]
    orders: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn usage_error(kind: ErrorKind, msg: &str) -> ! {
    Cli::command().error(kind, msg).exit()
}

impl GreedyArgs {
    fn config(&self, seed: u64) -> GreedyConfig {
        let mode = match (self.greedy_mode, self.greedy_order) {
            (None, None) => GreedyMode::Off,
            (None, Some(_)) | (Some(ModeArg::Structured), _) => GreedyMode::Structured,
            (Some(ModeArg::Off), Some(_)) => {
                usage_error(ErrorKind::ArgumentConflict, "--greedy-order needs a greedy mode other than off")
            }
            (Some(ModeArg::Off), None) => GreedyMode::Off,
            (Some(ModeArg::Randomized), _) => GreedyMode::Randomized,
            (Some(ModeArg::BruteForce), Some(_)) => {
                usage_error(ErrorKind::ArgumentConflict, "--greedy-order has no meaning for brute-force")
            }
            (Some(ModeArg::BruteForce), None) => GreedyMode::BruteForce,
        };
        if self.greedy_budget.is_some() && mode != GreedyMode::Randomized {
            usage_error(ErrorKind::ArgumentConflict, "--greedy-budget applies to randomized mode only");
        }
        let go = match mode {
            GreedyMode::Off | GreedyMode::BruteForce => 0,
            _ => self.greedy_order.unwrap_or(1),
        };
        GreedyConfig { mode, go, candidate_budget: self.greedy_budget, seed }
    }
}

impl SampleArgs {
    fn config(&self) -> SampleConfig {
        if self.shots == 0 {
            usage_error(ErrorKind::InvalidValue, "--shots must be positive");
        }
        SampleConfig {
            shots: self.shots,
            seed: self.seed,
            backend: self.backend,
            greedy: self.greedy.config(self.seed),
            ..SampleConfig::default()
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    Circuit::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

struct Input {
    source: String,
    circuit: AdaptiveCliffordCircuit,
    order: Option<Vec<usize>>,
}

fn load_input(a: &RunArgs) -> Result<Input> {
    if a.order.is_some() && a.pattern.is_none() {
        usage_error(ErrorKind::ArgumentConflict, "--order applies to pattern mode (--pattern) only");
    }
    if let Some(p) = &a.pattern {
        let pattern = MeasurementPattern::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
        let cp = CompiledPattern::new(&pattern);
        let order = a.order.unwrap_or(ProcessingOrder::O3);
        Ok(Input {
            source: format!("{} order={order:?}", p.display()),
            order: Some(cp.order(order)),
            circuit: cp.circuit,
        })
    } else {
        let path = a.circuit.as_ref().expect("clap enforces an input");
        Ok(Input { source: path.display().to_string(), circuit: gadgetize(&load_circuit(path)?), order: None })
    }
}

fn bits(o: Outcome, n: usize) -> String {
    (0..n).map(|q| if o >> q & 1 == 1 { '1' } else { '0' }).collect()
}

fn histogram_csv(h: &std::collections::BTreeMap<Outcome, usize>, n: usize, manifest: Option<&RunManifest>) -> String {
    let mut s = String::from("# schema: pbc-samples/1\n");
    if let Some(m) = manifest {
        s.push_str(&m.comment_line());
        s.push('\n');
    }
    s.push_str("outcome,count\n");
    for (o, c) in h {
        s.push_str(&format!("{},{c}\n", bits(*o, n)));
    }
    s
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let one = |seed: u64| -> Result<String> {
        Ok(match a.kind {
            GenKind::Family2 => {
                if a.n < 2 {
                    usage_error(ErrorKind::InvalidValue, "family-2 circuits need --n >= 2");
                }
                generate_random_family2(a.n, a.t, seed).serialize()
            }
            GenKind::CnotT => generate_cnot_t(a.n.max(2), a.t, seed).serialize(),
            GenKind::Pattern => generate_random_pattern(a.t, a.depth, a.edge_prob, seed)?.serialize(),
        })
    };
    if a.count <= 1 {
        return emit(a.out.as_deref(), &one(a.seed)?);
    }
    let dir = a.out.as_deref().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let ext = if matches!(a.kind, GenKind::Pattern) { "pat" } else { "circ" };
    for i in 0..a.count {
        let seed = a.seed + i as u64;
        fs::write(dir.join(format!("{i:04}.{ext}")), one(seed)?)?;
    }
    Ok(())
}

fn cmd_compile(a: &RunArgs) -> Result<()> {
    let input = load_input(a)?;
    let cfg = a.run.config();
    let manifest = RunManifest::new(input.source, &cfg);
    let progs = run_shots(&input.circuit, input.order.as_deref(), &cfg)?;
    emit(a.out.as_deref(), &(program_document(&manifest, &progs) + "\n"))
}

fn cmd_sample(a: &RunArgs) -> Result<()> {
    let input = load_input(a)?;
    let cfg = a.run.config();
    let manifest = RunManifest::new(input.source, &cfg);
    let progs = run_shots(&input.circuit, input.order.as_deref(), &cfg)?;
    emit(a.out.as_deref(), &histogram_csv(&histogram(&progs), input.circuit.num_data, Some(&manifest)))
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    if a.n < 2 || a.circuits == 0 || a.shots == 0 {
        usage_error(ErrorKind::InvalidValue, "--n must be >= 2 and --circuits, --shots positive");
    }
    let base = SampleConfig {
        shots: a.shots,
        seed: a.seed,
        backend: a.backend,
        greedy: GreedyConfig::structured(0),
        ..SampleConfig::default()
    };
    let manifest = RunManifest::new(
        format!("family2 n={} t={:?} circuits={} orders={:?}", a.n, a.t, a.circuits, a.orders),
        &base,
    );
    let mut boxes = Vec::new();
    let mut spreads = Vec::new();
    let mut table = ReductionTable { orders: a.orders.clone(), rows: Vec::new() };
    for &t in &a.t {
        let mut pooled = Vec::new();
        let mut per_order: Vec<Vec<f64>> = vec![Vec::new(); a.orders.len()];
        let mut originals = Vec::new();
        for i in 0..a.circuits {
            let c = generate_random_family2(a.n, t, a.seed.wrapping_add((t * 100_000 + i) as u64));
            let ac = gadgetize(&c);
            let cfg = SampleConfig { seed: a.seed.wrapping_add(i as u64), greedy: GreedyConfig::off(), ..base };
            pooled.extend(WeightRun::from_programs(&run_shots(&ac, None, &cfg)?).avg_weight);
            let row = reduction_row(&format!("t{t}-c{i}"), &ac, &cfg, &a.orders)?;
            originals.push(row.original);
            for (k, w) in row.weights.iter().enumerate() {
                per_order[k].push(*w);
            }
            table.rows.push(row);
        }
        if let Some(summary) = BoxplotSummary::new(&pooled) {
            boxes.push(BoxplotRow { t, summary });
        }
        for (k, &go) in a.orders.iter().enumerate() {
            spreads.push(Spread::new(t, go, &per_order[k]));
        }
        eprintln!(
            "t={t}: original {:.3}, {}",
            Spread::new(t, 0, &originals).mean,
            a.orders
                .iter()
                .enumerate()
                .map(|(k, go)| format!("go={go} {:.2}%", {
                    let rows = &table.rows[table.rows.len() - a.circuits..];
                    rows.iter().map(|r| r.delta_pct(k)).sum::<f64>() / a.circuits as f64
                }))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    fs::create_dir_all(&a.out_dir)?;
    fs::write(a.out_dir.join("boxplot.csv"), boxplot_csv(&boxes, Some(&manifest)))?;
    fs::write(a.out_dir.join("spread.csv"), spread_csv(&spreads, Some(&manifest)))?;
    fs::write(a.out_dir.join("reduction.csv"), table.to_csv(Some(&manifest)))?;
    Ok(())
}

fn cmd_pattern(a: &PatternArgs) -> Result<()> {
    let pattern = MeasurementPattern::parse(&read(&a.pattern)?)?;
    let cp = CompiledPattern::new(&pattern);
    let cfg = SampleConfig { shots: a.shots, seed: a.seed, backend: a.backend, ..SampleConfig::default() };
    let order = cp.order(a.order);
    let mut reports = Vec::with_capacity(a.shots);
    for shot in 0..a.shots {
        let prog = run_seeded_shot(&cp.circuit, Some(&order), &cfg, shot)?;
        reports.push(pbc_core::mbqc::check_bounds(&pattern, a.order, &prog));
    }
    let violations: usize = reports.iter().map(|r| r.violations.len()).sum();
    let doc = serde_json::json!({
        "manifest": RunManifest::new(format!("{} order={:?}", a.pattern.display(), a.order), &cfg),
        "t": pattern.t,
        "d_1w": pattern.depth(),
        "max_d_pbc": reports.iter().map(|r| r.d_pbc).max(),
        "violations": violations,
        "reports": reports,
    });
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    if violations > 0 {
        bail!("{violations} bound violations");
    }
    Ok(())
}

fn cmd_incpbc(a: &IncArgs) -> Result<()> {
    let c = load_circuit(&a.circuit)?;
    if a.table {
        return emit(a.out.as_deref(), &resource_table(&c, a.pattern_depth).to_csv());
    }
    let prog = compile_incpbc(&c)?;
    if a.simulate {
        let h = simulate_incpbc(&prog, a.shots, a.seed)?;
        return emit(a.out.as_deref(), &histogram_csv(&h, c.num_qubits, None));
    }
    emit(a.out.as_deref(), &(prog.to_json() + "\n"))
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    if a.n < 2 {
        usage_error(ErrorKind::InvalidValue, "--n must be >= 2");
    }
    println!("t,go,visits,distinct,tau,offset,seconds");
    for &t in &a.t {
        let ac = gadgetize(&generate_cnot_t(a.n, t, a.seed));
        for &go in &a.orders {
            let cfg = SampleConfig {
                shots: 1,
                seed: a.seed,
                backend: BackendKind::Dummy,
                greedy: GreedyConfig::structured(go),
                ..SampleConfig::default()
            };
            let start = Instant::now();
            let prog = run_seeded_shot(&ac, None, &cfg, 0)?;
            let secs = start.elapsed().as_secs_f64();
            let visits: u64 = prog.steps.iter().map(|s| s.greedy_visits).sum();
            let distinct: u64 = prog.steps.iter().map(|s| s.greedy_distinct).sum();
            let tau = candidate_count(t, go);
            println!("{t},{go},{visits},{distinct},{tau},{},{secs:.6}", visits as i128 - tau as i128);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Compile(a) => cmd_compile(a),
        Cmd::Sample(a) => cmd_sample(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::Pattern(a) => cmd_pattern(a),
        Cmd::Incpbc(a) => cmd_incpbc(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
