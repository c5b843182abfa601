use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coopsched::experiment::{record_for, solve_instance_logged, summarize, write_csv, RelayPolicy};
use coopsched::model::split_thresholds_db;
use coopsched::sinr::{parse_schedule, write_schedule};
use coopsched::solver::NodeLogRecord;
use coopsched::*;

#[derive(Parser)]
#[command(name = "coopsched", version, about = "Cooperative AF relay link scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance
    Gen(GenArgs),
    /// Solve one instance and emit the schedule and its throughput record
    Solve(SolveArgs),
    /// Run a CLS-vs-DLS sweep and write CSV
    Sweep(SweepArgs),
    /// Check a schedule against an instance
    Validate(ValidateArgs),
    /// Solve a small instance by exhaustive enumeration
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long, default_value_t = 10.0)]
    beta_db: f64,
    /// Direct-phase threshold weight; the pair is rescaled to sum to beta
    #[arg(long, default_value_t = 5.0)]
    beta1_db: f64,
    /// AF-phase threshold weight
    #[arg(long, default_value_t = 5.0)]
    beta2_db: f64,
    #[arg(long, default_value_t = 300.0)]
    pmax_mw: f64,
    /// Per-slot minimum power as a fraction of --pmax-mw
    #[arg(long, default_value_t = 0.01)]
    pmin_frac: f64,
    #[arg(long, default_value_t = 300.0)]
    g2: f64,
    #[arg(long, default_value_t = 300.0)]
    p_relay_mw: f64,
    #[arg(long, default_value_t = 1e-6)]
    sigma2_mw: f64,
    #[arg(long, default_value_t = 0.3)]
    budget_frac: f64,
    #[arg(long, default_value_t = 8)]
    slots: usize,
    /// Demand B per source, in slots
    #[arg(long, default_value_t = 8)]
    demand: u32,
    /// off, at_most or at_least
    #[arg(long, default_value = "at_most")]
    demand_mode: DemandMode,
    /// per_pair or planar
    #[arg(long, default_value = "per_pair")]
    placement: Placement,
    #[arg(long, default_value_t = 3.0)]
    path_loss_a: f64,
}

impl ParamArgs {
    fn params(&self) -> SystemParams {
        let (beta1_db, beta2_db) = split_thresholds_db(self.beta_db, self.beta1_db, self.beta2_db);
        SystemParams {
            beta_db: self.beta_db,
            beta1_db,
            beta2_db,
            sigma2_mw: self.sigma2_mw,
            p_slot_max_mw: self.pmax_mw,
            p_slot_min_mw: self.pmin_frac * self.pmax_mw,
            g2: self.g2,
            p_relay_mw: self.p_relay_mw,
            budget_fraction: self.budget_frac,
            slots: self.slots,
            demand: Vec::new(),
            demand_mode: self.demand_mode,
            path_loss_a: self.path_loss_a,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sources: usize,
    #[arg(long, default_value_t = 0)]
    relays: usize,
    /// Defaults to one destination per source
    #[arg(long)]
    dests: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    /// Output file; stdout when absent
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// exact, lp-round or auto
    #[arg(long, default_value = "auto")]
    solver: SolverChoice,
    /// Rounding trials for lp-round
    #[arg(long, default_value_t = 32)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// keep_lp or rescale_max
    #[arg(long, default_value = "keep_lp")]
    power_policy: PowerPolicy,
    #[arg(long, default_value_t = 200_000)]
    node_limit: usize,
    /// Deactivation constant: global or per_row
    #[arg(long, default_value = "global")]
    delta: DeltaPolicy,
    /// Record wall-clock runtimes (makes output non-reproducible)
    #[arg(long)]
    timing: bool,
}

impl SolverArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            solver: self.solver,
            rounding: RoundingConfig {
                trials: self.trials,
                rng_seed: self.rng_seed,
                power_policy: self.power_policy,
            },
            node_limit: self.node_limit,
            timing: self.timing,
            delta: self.delta,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// cls or dls
    #[arg(long, default_value = "cls")]
    mode: Mode,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the schedule here and print only the CSV record
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write branch-and-bound node records as JSON lines
    #[arg(long)]
    node_log: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated source counts
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
    sources: Vec<usize>,
    /// Comma-separated relay counts; `n` means one relay per source
    #[arg(long, value_delimiter = ',', default_value = "n")]
    relays: Vec<RelayPolicy>,
    /// Destinations per instance; one per source when absent
    #[arg(long)]
    dests: Option<usize>,
    /// Threshold weight pairs as `b1:b2`, comma-separated; defaults to
    /// the single pair given by --beta1-db and --beta2-db
    #[arg(long, value_delimiter = ',')]
    beta_splits: Vec<String>,
    /// Number of seeds per configuration
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    /// Comma-separated modes
    #[arg(long, value_delimiter = ',', default_value = "cls,dls")]
    modes: Vec<Mode>,
    /// Omit the per-configuration mean rows
    #[arg(long)]
    no_means: bool,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV output file; stdout when absent
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "cls")]
    mode: Mode,
    /// Refuse models with more binaries than this
    #[arg(long, default_value_t = 20)]
    max_binaries: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Why a command stopped short of success.
enum Failure {
    Error(Error),
    /// The command ran but found a problem (e.g. schedule violations).
    Rejected,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate(a) => validate(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn load_instance(path: &Path) -> Result<NetworkInstance> {
    NetworkInstance::load(path).map_err(|e| with_path(path, e))
}

fn csv_text(records: &[ThroughputRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn gen(a: GenArgs) -> CmdResult {
    let params = a.params.params().with_uniform_demand(a.sources, a.params.demand);
    let inst = generate_instance(
        a.seed,
        a.sources,
        a.relays,
        a.dests.unwrap_or(a.sources),
        params,
        a.params.placement,
    )?;
    let mut text = inst.to_json()?;
    text.push('\n');
    emit(a.output.as_deref(), &text)?;
    Ok(())
}

fn solve(a: SolveArgs) -> CmdResult {
    let inst = load_instance(&a.instance)?;
    let cfg = a.solver.config();
    let mut log_out = match &a.node_log {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    let mut log_err: Option<io::Error> = None;
    let outcome = solve_instance_logged(&inst, a.mode, &cfg, &mut |rec: &NodeLogRecord| {
        if let (Some(w), None) = (log_out.as_mut(), &log_err) {
            let line = serde_json::to_string(rec).expect("node records serialize");
            if let Err(e) = writeln!(w, "{line}") {
                log_err = Some(e);
            }
        }
    })?;
    if let Some(e) = log_err {
        return Err(e.into());
    }
    if let Some(mut w) = log_out {
        w.flush()?;
    }
    if outcome.milp_status == Some(MilpStatus::NodeLimit) {
        eprintln!("warning: node limit reached; schedule is the best found, not proven optimal");
    }
    let record = record_for(&inst, a.mode, &outcome);
    let schedule = write_schedule(&inst, &outcome.schedule);
    let csv = csv_text(&[record])?;
    match &a.output {
        Some(p) => {
            std::fs::write(p, schedule)?;
            emit(None, &csv)?;
        }
        None => {
            let commented: String = csv.lines().map(|l| format!("# {l}\n")).collect();
            emit(None, &format!("{schedule}{commented}"))?;
        }
    }
    Ok(())
}

fn parse_split(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Validation {
        field: "beta_splits".into(),
        rule: format!("'{s}' is not of the form b1:b2"),
    };
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn sweep(a: SweepArgs) -> CmdResult {
    let mut beta_splits = a
        .beta_splits
        .iter()
        .map(|s| parse_split(s))
        .collect::<Result<Vec<_>>>()?;
    if beta_splits.is_empty() {
        beta_splits.push((a.params.beta1_db, a.params.beta2_db));
    }
    let spec = ExperimentSpec {
        sources: a.sources,
        relays: a.relays,
        destinations: a.dests,
        slots: a.params.slots,
        demand: a.params.demand,
        beta_splits,
        seeds: (a.first_seed..a.first_seed + a.seeds).collect(),
        modes: a.modes,
        base: a.params.params(),
        placement: a.params.placement,
        solve: a.solver.config(),
    };
    let mut records = run_sweep(&spec)?;
    if !a.no_means {
        let means = summarize(&records);
        records.extend(means);
    }
    emit(a.output.as_deref(), &csv_text(&records)?)?;
    Ok(())
}

fn validate(a: ValidateArgs) -> CmdResult {
    let inst = load_instance(&a.instance)?;
    let text = std::fs::read_to_string(&a.schedule).map_err(|e| with_path(&a.schedule, e.into()))?;
    let sched = parse_schedule(&inst, &text)?;
    let violations = validate_schedule(&inst, &sched);
    if violations.is_empty() {
        emit(None, "valid\n")?;
        return Ok(());
    }
    let listing: String = violations.iter().map(|v| format!("{v}\n")).collect();
    emit(None, &listing)?;
    Err(Failure::Rejected)
}

fn oracle(a: OracleArgs) -> CmdResult {
    let inst = load_instance(&a.instance)?;
    let model = build_milp(&inst, BuildOptions::new(a.mode))?;
    let result = enumerate_milp(&model, a.max_binaries)?;
    if result.status != MilpStatus::Optimal {
        return Err(Error::Infeasible("no binary assignment is feasible".into()).into());
    }
    let sched = extract_schedule(&inst, &model, &result.values)?;
    let violations = validate_schedule(&inst, &sched);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidSchedule(v.to_string()).into());
    }
    let schedule = write_schedule(&inst, &sched);
    let summary = format!(
        "objective {:?}\nassignments {}\nlp_solves {}\n",
        result.objective, result.assignments, result.lp_solves
    );
    match &a.output {
        Some(p) => {
            std::fs::write(p, schedule)?;
            emit(None, &summary)?;
        }
        None => {
            let commented: String = summary.lines().map(|l| format!("# {l}\n")).collect();
            emit(None, &format!("{schedule}{commented}"))?;
        }
    }
    Ok(())
}
