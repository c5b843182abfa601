//! Single solves, CLS-vs-DLS sweeps and multi-period buffer simulation.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{build_milp, BuildOptions, DeltaPolicy, Mode};
use crate::model::{generate_instance, NetworkInstance, Placement, SystemParams};
use crate::rng::{derive_seed, stream_rng};
use crate::rounding::{round_best_of_k, RoundingConfig};
use crate::sinr::{validate_schedule, Schedule};
use crate::solver::{extract_schedule, solve_lp, solve_milp_logged, LpStatus, MilpStatus, NodeLogRecord};

/// Binary-variable count up to which [`SolverChoice::Auto`] solves exactly.
pub const AUTO_EXACT_MAX_BINARIES: usize = 24;

pub const CSV_HEADER: [&str; 13] = [
    "instance_id",
    "mode",
    "n",
    "m",
    "t_slots",
    "b",
    "beta1_db",
    "beta2_db",
    "solver",
    "objective",
    "norm_throughput",
    "runtime_ms",
    "seed",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Exact,
    LpRound,
    #[default]
    Auto,
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverChoice::Exact => "exact",
            SolverChoice::LpRound => "lp-round",
            SolverChoice::Auto => "auto",
        })
    }
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolverChoice::Exact),
            "lp-round" => Ok(SolverChoice::LpRound),
            "auto" => Ok(SolverChoice::Auto),
            _ => Err(Error::validation(
                "solver",
                format!("unknown solver '{s}' (expected exact, lp-round or auto)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub solver: SolverChoice,
    pub rounding: RoundingConfig,
    pub node_limit: usize,
    /// Record wall-clock runtimes; off keeps outputs reproducible.
    pub timing: bool,
    pub delta: DeltaPolicy,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            solver: SolverChoice::Auto,
            rounding: RoundingConfig::default(),
            node_limit: 200_000,
            timing: false,
            delta: DeltaPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub schedule: Schedule,
    /// `exact` or `lp-round`.
    pub solver: SolverChoice,
    /// Branch-and-bound status when solved exactly.
    pub milp_status: Option<MilpStatus>,
    /// LP relaxation or branch-and-bound upper bound on the objective.
    pub bound: f64,
    pub runtime_ms: f64,
}

/// Builds the `mode` model for `inst`, solves it and validates the schedule.
/// A schedule that fails validation is reported as
/// [`Error::InvalidSchedule`].
pub fn solve_instance(inst: &NetworkInstance, mode: Mode, cfg: &SolveConfig) -> Result<SolveOutcome> {
    solve_instance_logged(inst, mode, cfg, &mut |_| {})
}

/// As [`solve_instance`], forwarding branch-and-bound node records to `log`.
pub fn solve_instance_logged(
    inst: &NetworkInstance,
    mode: Mode,
    cfg: &SolveConfig,
    log: &mut dyn FnMut(&NodeLogRecord),
) -> Result<SolveOutcome> {
    inst.validate()?;
    cfg.rounding.validate()?;
    let start = Instant::now();
    let model = build_milp(
        inst,
        BuildOptions {
            delta: cfg.delta,
            ..BuildOptions::new(mode)
        },
    )?;
    let binaries = model.integral_vars().count();
    let exact = match cfg.solver {
        SolverChoice::Exact => true,
        SolverChoice::LpRound => false,
        SolverChoice::Auto => binaries <= AUTO_EXACT_MAX_BINARIES,
    };

    let (schedule, milp_status, bound) = if exact {
        let sol = solve_milp_logged(&model, cfg.node_limit, log)?;
        match sol.status {
            MilpStatus::Infeasible => {
                return Err(Error::Infeasible(format!("the {mode} model has no feasible schedule")))
            }
            _ if !sol.has_incumbent() => (Schedule::empty(inst), Some(sol.status), sol.bound),
            _ => (extract_schedule(inst, &model, &sol.values)?, Some(sol.status), sol.bound),
        }
    } else {
        let relaxed = model.relaxed();
        let lp = solve_lp(&relaxed);
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::Infeasible(format!(
                    "the {mode} LP relaxation has no feasible point"
                )))
            }
            other => return Err(Error::contract(format!("LP relaxation ended with {other:?}"))),
        }
        let schedule = round_best_of_k(inst, &relaxed, &lp, &cfg.rounding)?;
        (schedule, None, lp.objective)
    };

    let violations = validate_schedule(inst, &schedule);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidSchedule(format!(
            "{} violation(s), first: {v}",
            violations.len()
        )));
    }
    let runtime_ms = if cfg.timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(SolveOutcome {
        schedule,
        solver: if exact {
            SolverChoice::Exact
        } else {
            SolverChoice::LpRound
        },
        milp_status,
        bound,
        runtime_ms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRecord {
    pub instance_id: String,
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    pub t_slots: usize,
    pub b: u32,
    pub beta1_db: f64,
    pub beta2_db: f64,
    /// `exact`, `lp-round`, or `mixed` for mean rows over both.
    pub solver: String,
    pub objective: f64,
    pub norm_throughput: f64,
    pub runtime_ms: f64,
    /// `None` for mean rows.
    pub seed: Option<u64>,
}

impl ThroughputRecord {
    pub fn is_mean(&self) -> bool {
        self.seed.is_none()
    }

    fn csv_fields(&self) -> [String; 13] {
        [
            self.instance_id.clone(),
            self.mode.to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.t_slots.to_string(),
            self.b.to_string(),
            self.beta1_db.to_string(),
            self.beta2_db.to_string(),
            self.solver.clone(),
            self.objective.to_string(),
            self.norm_throughput.to_string(),
            self.runtime_ms.to_string(),
            self.seed.map_or_else(|| "mean".to_string(), |s| s.to_string()),
        ]
    }
}

pub fn instance_id(inst: &NetworkInstance) -> String {
    let b = inst.params.demand.iter().copied().max().unwrap_or(0);
    format!(
        "n{}_m{}_t{}_b{}_s{}",
        inst.n_sources, inst.n_relays, inst.params.slots, b, inst.seed
    )
}

/// The record describing `out`, a solve of `inst` in `mode`.
pub fn record_for(inst: &NetworkInstance, mode: Mode, out: &SolveOutcome) -> ThroughputRecord {
    let p = &inst.params;
    ThroughputRecord {
        instance_id: instance_id(inst),
        mode,
        n: inst.n_sources,
        m: inst.n_relays,
        t_slots: p.slots,
        b: p.demand.iter().copied().max().unwrap_or(0),
        beta1_db: p.beta1_db,
        beta2_db: p.beta2_db,
        solver: out.solver.to_string(),
        objective: out.schedule.objective(),
        norm_throughput: out.schedule.normalized_throughput(inst.n_sources),
        runtime_ms: out.runtime_ms,
        seed: Some(inst.seed),
    }
}

/// Solves one instance and summarizes the result.
pub fn run_single(inst: &NetworkInstance, mode: Mode, cfg: &SolveConfig) -> Result<ThroughputRecord> {
    let out = solve_instance(inst, mode, cfg)?;
    Ok(record_for(inst, mode, &out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelayPolicy {
    Fixed(usize),
    /// As many relays as sources.
    MatchSources,
}

impl RelayPolicy {
    pub fn relays_for(self, n: usize) -> usize {
        match self {
            RelayPolicy::Fixed(m) => m,
            RelayPolicy::MatchSources => n,
        }
    }
}

impl fmt::Display for RelayPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelayPolicy::Fixed(m) => write!(f, "{m}"),
            RelayPolicy::MatchSources => f.write_str("n"),
        }
    }
}

impl FromStr for RelayPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "n" {
            return Ok(RelayPolicy::MatchSources);
        }
        s.parse()
            .map(RelayPolicy::Fixed)
            .map_err(|_| Error::validation("relays", format!("'{s}' is neither a count nor 'n'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub sources: Vec<usize>,
    pub relays: Vec<RelayPolicy>,
    /// Destinations per instance; `None` means one per source.
    pub destinations: Option<usize>,
    pub slots: usize,
    /// Uniform demand `B` per source.
    pub demand: u32,
    /// `(beta1_db, beta2_db)` weights, split proportionally so the linear
    /// thresholds sum to the base `beta`.
    pub beta_splits: Vec<(f64, f64)>,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
    pub base: SystemParams,
    pub placement: Placement,
    pub solve: SolveConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            sources: vec![2, 4, 6, 8],
            relays: vec![RelayPolicy::MatchSources],
            destinations: None,
            slots: 8,
            demand: 8,
            beta_splits: vec![(5.0, 5.0)],
            seeds: (0..20).collect(),
            modes: vec![Mode::Cls, Mode::Dls],
            base: SystemParams::default(),
            placement: Placement::PerPair,
            solve: SolveConfig::default(),
        }
    }
}

impl ExperimentSpec {
    /// Parameters for `n` sources under split `(w1, w2)`.
    pub fn params_for(&self, n: usize, split: (f64, f64)) -> SystemParams {
        SystemParams {
            slots: self.slots,
            ..self.base.clone()
        }
        .with_uniform_demand(n, self.demand)
        .with_beta_split(split.0, split.1)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("sources", self.sources.is_empty()),
            ("relays", self.relays.is_empty()),
            ("beta_splits", self.beta_splits.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("modes", self.modes.is_empty()),
        ];
        if let Some((field, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::validation(*field, "must not be empty"));
        }
        if self.sources.contains(&0) {
            return Err(Error::validation("sources", "every entry must be positive"));
        }
        if self.destinations == Some(0) {
            return Err(Error::validation("destinations", "must be positive"));
        }
        self.solve.rounding.validate()?;
        for &n in &self.sources {
            for &split in &self.beta_splits {
                let params = self.params_for(n, split);
                if let Some(v) = params.violations().first() {
                    return Err(Error::validation(v.field.clone(), v.rule.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Runs every `(split, n, relay policy, seed, mode)` combination in that
/// nesting order and returns one record each. DLS results do not depend on
/// the relay count and are computed once per `(split, n, seed)`.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<ThroughputRecord>> {
    spec.validate()?;
    let mut out = Vec::new();
    let mut dls_cache: HashMap<(usize, usize, u64), SolveOutcome> = HashMap::new();
    for (split_idx, &split) in spec.beta_splits.iter().enumerate() {
        for &n in &spec.sources {
            let params = spec.params_for(n, split);
            let d = spec.destinations.unwrap_or(n);
            for &policy in &spec.relays {
                let m = policy.relays_for(n);
                for &seed in &spec.seeds {
                    let inst = generate_instance(seed, n, m, d, params.clone(), spec.placement)?;
                    for &mode in &spec.modes {
                        let outcome = match mode {
                            Mode::Cls => solve_instance(&inst, mode, &spec.solve)?,
                            Mode::Dls => match dls_cache.get(&(split_idx, n, seed)) {
                                Some(o) => o.clone(),
                                None => {
                                    let o = solve_instance(&inst, mode, &spec.solve)?;
                                    dls_cache.insert((split_idx, n, seed), o.clone());
                                    o
                                }
                            },
                        };
                        out.push(record_for(&inst, mode, &outcome));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Mean rows over seeds, one per configuration, in first-appearance order.
pub fn summarize(records: &[ThroughputRecord]) -> Vec<ThroughputRecord> {
    type Key = (Mode, usize, usize, usize, u32, u64, u64);
    let key = |r: &ThroughputRecord| -> Key {
        (
            r.mode,
            r.n,
            r.m,
            r.t_slots,
            r.b,
            r.beta1_db.to_bits(),
            r.beta2_db.to_bits(),
        )
    };
    let mut order: Vec<Key> = Vec::new();
    let mut groups: HashMap<Key, Vec<&ThroughputRecord>> = HashMap::new();
    for r in records.iter().filter(|r| !r.is_mean()) {
        let k = key(r);
        groups.entry(k).or_insert_with(|| {
            order.push(k);
            Vec::new()
        });
        groups.get_mut(&k).expect("inserted").push(r);
    }
    order
        .iter()
        .map(|k| {
            let g = &groups[k];
            let first = g[0];
            let count = g.len() as f64;
            let mean = |f: fn(&ThroughputRecord) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / count;
            let solver = if g.iter().all(|r| r.solver == first.solver) {
                first.solver.clone()
            } else {
                "mixed".to_string()
            };
            ThroughputRecord {
                instance_id: format!(
                    "n{}_m{}_t{}_b{}_mean",
                    first.n, first.m, first.t_slots, first.b
                ),
                solver,
                objective: mean(|r| r.objective),
                norm_throughput: mean(|r| r.norm_throughput),
                runtime_ms: mean(|r| r.runtime_ms),
                seed: None,
                ..first.clone()
            }
        })
        .collect()
}

/// Writes records as CSV with the fixed header.
pub fn write_csv<W: Write>(records: &[ThroughputRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Per-source packet buffers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferState {
    pub buffered: Vec<u32>,
    pub capacity: Vec<u32>,
}

impl BufferState {
    pub fn empty(n_sources: usize, capacity: u32) -> Self {
        BufferState {
            buffered: vec![0; n_sources],
            capacity: vec![capacity; n_sources],
        }
    }

    pub fn full(n_sources: usize, capacity: u32) -> Self {
        BufferState {
            buffered: vec![capacity; n_sources],
            capacity: vec![capacity; n_sources],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.buffered.len() != self.capacity.len() {
            return Err(Error::validation("buffers", "buffered and capacity lengths differ"));
        }
        for (i, (&b, &c)) in self.buffered.iter().zip(&self.capacity).enumerate() {
            if c == 0 {
                return Err(Error::validation(format!("capacity[{i}]"), "must be positive"));
            }
            if b > c {
                return Err(Error::validation(
                    format!("buffered[{i}]"),
                    format!("{b} exceeds capacity {c}"),
                ));
            }
        }
        Ok(())
    }
}

/// Demand `B_i = floor(buffered_i / capacity_i * T)`.
pub fn buffer_demand(state: &BufferState, slots: usize) -> Result<Vec<u32>> {
    state.validate()?;
    Ok(state
        .buffered
        .iter()
        .zip(&state.capacity)
        .map(|(&b, &c)| (u64::from(b) * slots as u64 / u64::from(c)) as u32)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub demand: Vec<u32>,
    /// Transmissions scheduled per source.
    pub scheduled: Vec<u32>,
    /// Packets removed from each buffer.
    pub drained: Vec<u32>,
    /// Arrivals admitted to each buffer (after the capacity cap).
    pub arrivals: Vec<u32>,
    pub buffered_after: Vec<u32>,
    pub objective: f64,
    pub norm_throughput: f64,
}

/// Simulates `periods` consecutive scheduling periods on `inst`: each period
/// derives demand from the buffers, solves, drains what was scheduled and
/// then admits Poisson arrivals with mean `arrival_rate * T` per source.
pub fn run_periods(
    inst: &NetworkInstance,
    mode: Mode,
    cfg: &SolveConfig,
    initial: &BufferState,
    periods: usize,
    arrival_rate: f64,
    seed: u64,
) -> Result<Vec<PeriodRecord>> {
    if !(arrival_rate >= 0.0 && arrival_rate.is_finite()) {
        return Err(Error::validation("arrival_rate", "must be finite and non-negative"));
    }
    initial.validate()?;
    if initial.buffered.len() != inst.n_sources {
        return Err(Error::validation("buffers", "one buffer per source is required"));
    }
    let t_slots = inst.params.slots;
    let mean = arrival_rate * t_slots as f64;
    let poisson = if mean > 0.0 {
        Some(Poisson::new(mean).map_err(|e| Error::validation("arrival_rate", e.to_string()))?)
    } else {
        None
    };
    let mut state = initial.clone();
    let mut records = Vec::with_capacity(periods);
    for period in 0..periods {
        let demand = buffer_demand(&state, t_slots)?;
        let mut period_inst = inst.clone();
        period_inst.params.demand = demand.clone();
        let outcome = solve_instance(&period_inst, mode, cfg)?;
        let scheduled: Vec<u32> = outcome
            .schedule
            .per_source_counts(&period_inst)
            .iter()
            .map(|&c| c as u32)
            .collect();
        let drained: Vec<u32> = scheduled
            .iter()
            .zip(&state.buffered)
            .map(|(&s, &b)| s.min(b))
            .collect();
        let period_seed = derive_seed(seed, period as u64);
        let mut arrivals = Vec::with_capacity(inst.n_sources);
        for i in 0..inst.n_sources {
            let left = state.buffered[i] - drained[i];
            let offered = match &poisson {
                Some(dist) => {
                    let mut rng = stream_rng(period_seed, i as u64);
                    let v: f64 = dist.sample(&mut rng);
                    v.min(f64::from(u32::MAX)) as u32
                }
                None => 0,
            };
            let admitted = offered.min(state.capacity[i] - left);
            state.buffered[i] = left + admitted;
            arrivals.push(admitted);
        }
        records.push(PeriodRecord {
            period,
            demand,
            scheduled,
            drained,
            arrivals,
            buffered_after: state.buffered.clone(),
            objective: outcome.schedule.objective(),
            norm_throughput: outcome.schedule.normalized_throughput(inst.n_sources),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GainTable, Link};

    fn single_link() -> NetworkInstance {
        let mut params = SystemParams::default().with_uniform_demand(1, 8);
        params.slots = 8;
        NetworkInstance {
            n_sources: 1,
            n_relays: 0,
            n_destinations: 1,
            links: vec![Link { source: 0, dest: 0 }],
            relay_links: vec![],
            gains: GainTable::filled(1, 0, 1, 0.01),
            params,
            seed: 0,
        }
    }

    #[test]
    fn single_strong_link_is_always_scheduled() {
        let inst = single_link();
        for solver in [SolverChoice::Exact, SolverChoice::LpRound] {
            let cfg = SolveConfig {
                solver,
                ..SolveConfig::default()
            };
            let r = run_single(&inst, Mode::Cls, &cfg).unwrap();
            assert_eq!(r.norm_throughput, 1.0, "{solver}");
        }
    }

    #[test]
    fn demand_cap_limits_throughput() {
        let mut inst = single_link();
        inst.params.demand = vec![4];
        let r = run_single(&inst, Mode::Cls, &SolveConfig::default()).unwrap();
        assert!(r.norm_throughput <= 0.5);
        assert_eq!(r.norm_throughput, 0.5);
    }

    #[test]
    fn buffer_demand_examples() {
        let s = BufferState {
            buffered: vec![8, 0, 3],
            capacity: vec![8, 8, 8],
        };
        assert_eq!(buffer_demand(&s, 8).unwrap(), vec![8, 0, 3]);
        let bad = BufferState {
            buffered: vec![9],
            capacity: vec![8],
        };
        assert!(buffer_demand(&bad, 8).is_err());
    }

    #[test]
    fn idle_network_stays_idle() {
        let inst = single_link();
        let recs = run_periods(&inst, Mode::Cls, &SolveConfig::default(), &BufferState::empty(1, 8), 3, 0.0, 1).unwrap();
        assert!(recs.iter().all(|r| r.norm_throughput == 0.0 && r.arrivals == vec![0]));
    }

    #[test]
    fn saturated_arrivals_keep_demand_at_horizon() {
        let inst = single_link();
        let recs = run_periods(&inst, Mode::Cls, &SolveConfig::default(), &BufferState::full(1, 8), 4, 100.0, 2).unwrap();
        assert!(recs.iter().all(|r| r.demand == vec![8]));
    }

    #[test]
    fn buffers_are_conserved() {
        let params = SystemParams::default().with_uniform_demand(3, 8);
        let inst = generate_instance(5, 3, 1, 3, params, Placement::PerPair).unwrap();
        let initial = BufferState::empty(3, 8);
        let recs = run_periods(&inst, Mode::Cls, &SolveConfig::default(), &initial, 5, 0.5, 3).unwrap();
        let mut level = initial.buffered.clone();
        for r in &recs {
            for i in 0..3 {
                assert!(r.drained[i] <= r.scheduled[i]);
                level[i] = level[i] + r.arrivals[i] - r.drained[i];
                assert_eq!(level[i], r.buffered_after[i]);
            }
        }
    }

    #[test]
    fn sweep_records_follow_spec_order() {
        let spec = ExperimentSpec {
            sources: vec![2],
            relays: vec![RelayPolicy::MatchSources],
            slots: 2,
            demand: 2,
            seeds: vec![3, 4],
            ..ExperimentSpec::default()
        };
        let recs = run_sweep(&spec).unwrap();
        assert_eq!(recs.len(), 4);
        assert_eq!(recs[0].seed, Some(3));
        assert_eq!(recs[0].mode, Mode::Cls);
        assert_eq!(recs[1].mode, Mode::Dls);
        assert_eq!(recs[2].seed, Some(4));
        assert!(recs.iter().all(|r| r.m == 2));
        let means = summarize(&recs);
        assert_eq!(means.len(), 2);
        assert!(means.iter().all(|r| r.is_mean()));
        assert_eq!(run_sweep(&spec).unwrap(), recs);
    }

    #[test]
    fn csv_has_fixed_header_and_mean_rows() {
        let spec = ExperimentSpec {
            sources: vec![1],
            slots: 1,
            demand: 1,
            seeds: vec![0],
            ..ExperimentSpec::default()
        };
        let mut recs = run_sweep(&spec).unwrap();
        recs.extend(summarize(&recs));
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(text.lines().count(), 1 + recs.len());
        assert!(text.lines().last().unwrap().ends_with(",mean"));
    }

    #[test]
    fn names_parse() {
        assert_eq!("n".parse::<RelayPolicy>().unwrap(), RelayPolicy::MatchSources);
        assert_eq!("3".parse::<RelayPolicy>().unwrap(), RelayPolicy::Fixed(3));
        assert!("x".parse::<RelayPolicy>().is_err());
        for s in [SolverChoice::Exact, SolverChoice::LpRound, SolverChoice::Auto] {
            assert_eq!(s.to_string().parse::<SolverChoice>().unwrap(), s);
        }
    }
}
