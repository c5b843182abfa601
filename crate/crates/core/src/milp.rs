//! Throughput-maximization MILP for cooperative (CLS) and direct (DLS) link
//! scheduling, as a generic sparse model with integrality marks.
//!
//! Row families, per slot `t` unless noted (`B`, `B1`, `B2` linear
//! thresholds, `D` the big-Δ constant, `I_j = sum_{k != i} g_kj P_k`):
//!
//! ```text
//! C2   sum_t sum_j x_ij  <= B_i   (or >=, per demand mode)          per source
//! C3a  P_i g_ij + (1 - x_ij) D               >= B1 (s2 + I_j)
//! C3b  P_i g_ij + (1 - x_ij) D + sum_r y D   >= B  (s2 + I_j)
//! C4   P_i g_ir g_rj G + (1 - y_irj) D
//!          >= B2 (s2 + sum_{r' != r} a_r' p_relay g_r'j + (s2 + I_r) g_rj G)
//! C5   sum_r y_irj <= 1                                             per source
//! C5'  sum_{i,j} y_irj <= 1                                         per relay
//! C6   x_ij >= y_irj
//! C7   sum_t P_i <= budget_fraction * p_max * T                     per source
//! C8   x p_min <= P_i <= x p_max      (x = sum_j x_ij)
//! 1D   sum_j x_ij <= 1                (only for sources with several links)
//! ```
//!
//! `a_r' = sum_{i,j} y_ir'j` is the number of links relay `r'` serves. The
//! product `(B1 + (1 - y) B2) * interference` is linearized exactly by the
//! C3a/C3b pair, which is equivalent because `sum_r y` is 0 or 1 under C5.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DemandMode, NetworkInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cls,
    Dls,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cls => "cls",
            Mode::Dls => "dls",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cls" => Ok(Mode::Cls),
            "dls" => Ok(Mode::Dls),
            other => Err(Error::validation("mode", format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub mode: Mode,
    /// Drop integrality: binaries may take any value between 0 and 1.
    pub relax: bool,
    /// Overrides the instance's demand mode when set.
    pub demand_mode: Option<DemandMode>,
    pub delta: DeltaPolicy,
}

/// How the deactivation constant of each SINR row is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    /// One constant for every row, [`big_delta`].
    #[default]
    Global,
    /// The smallest constant that deactivates each row on its own: the
    /// row's threshold times its worst in-bounds interference. Same integer
    /// optimum, better-conditioned relaxation.
    PerRow,
}

impl fmt::Display for DeltaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeltaPolicy::Global => "global",
            DeltaPolicy::PerRow => "per_row",
        })
    }
}

impl FromStr for DeltaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(DeltaPolicy::Global),
            "per_row" | "per-row" => Ok(DeltaPolicy::PerRow),
            other => Err(Error::validation("delta", format!("unknown delta policy `{other}`"))),
        }
    }
}

impl BuildOptions {
    pub fn new(mode: Mode) -> Self {
        BuildOptions {
            mode,
            relax: false,
            demand_mode: None,
            delta: DeltaPolicy::default(),
        }
    }

    pub fn relaxed(mut self) -> Self {
        self.relax = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKey {
    X { t: usize, i: usize, j: usize },
    Y { t: usize, i: usize, r: usize, j: usize },
    P { t: usize, i: usize },
}

impl VarKey {
    fn name(&self) -> String {
        match *self {
            VarKey::X { t, i, j } => format!("x_t{t}_s{i}_d{j}"),
            VarKey::Y { t, i, r, j } => format!("y_t{t}_s{i}_r{r}_d{j}"),
            VarKey::P { t, i } => format!("p_t{t}_s{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub key: VarKey,
    pub lower: f64,
    pub upper: f64,
    pub integral: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RowFamily {
    Demand,
    DirectSplit,
    DirectFull,
    Relay,
    RelayPerSource,
    SourcePerRelay,
    RelayNeedsSource,
    Budget,
    PowerMin,
    PowerMax,
    OneDestination,
}

impl RowFamily {
    pub fn label(self) -> &'static str {
        match self {
            RowFamily::Demand => "c2",
            RowFamily::DirectSplit => "c3a",
            RowFamily::DirectFull => "c3b",
            RowFamily::Relay => "c4",
            RowFamily::RelayPerSource => "c5",
            RowFamily::SourcePerRelay => "c5p",
            RowFamily::RelayNeedsSource => "c6",
            RowFamily::Budget => "c7",
            RowFamily::PowerMin => "c8lo",
            RowFamily::PowerMax => "c8hi",
            RowFamily::OneDestination => "onedest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub family: RowFamily,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, a)| a * values[k]).sum()
    }

    /// Amount by which `values` violate the row, 0 when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// Largest coefficient magnitude; used to express violations relative
    /// to the row's scale.
    pub fn scale(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|&(_, a)| a.abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    }
}

/// A maximization MILP over bounded variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub mode: Mode,
    pub slots: usize,
    pub delta: f64,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Sparse objective, sense maximize.
    pub objective: Vec<(usize, f64)>,
    index: HashMap<VarKey, usize>,
}

impl MilpModel {
    fn new(mode: Mode, slots: usize, delta: f64) -> Self {
        MilpModel {
            mode,
            slots,
            delta,
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a model from raw parts; variable keys must be unique.
    pub fn from_parts(
        variables: Vec<Variable>,
        constraints: Vec<Constraint>,
        objective: Vec<(usize, f64)>,
    ) -> Result<Self> {
        let mut model = MilpModel::new(Mode::Dls, 1, 0.0);
        for v in variables {
            if model.index.contains_key(&v.key) {
                return Err(Error::validation("variables", format!("duplicate key {:?}", v.key)));
            }
            model.index.insert(v.key, model.variables.len());
            model.variables.push(v);
        }
        model.constraints = constraints;
        model.objective = objective;
        model.check()?;
        Ok(model)
    }

    fn add_var(&mut self, key: VarKey, lower: f64, upper: f64, integral: bool) -> usize {
        let k = self.variables.len();
        self.variables.push(Variable {
            name: key.name(),
            key,
            lower,
            upper,
            integral,
        });
        self.index.insert(key, k);
        k
    }

    fn add_row(
        &mut self,
        family: RowFamily,
        tag: String,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs;
        sorted.sort_by_key(|&(k, _)| k);
        for (k, a) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += a,
                _ => merged.push((k, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            name: format!("{}_{}", family.label(), tag),
            family,
            coeffs: merged,
            relation,
            rhs,
        });
    }

    pub fn var(&self, key: VarKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn key(&self, k: usize) -> VarKey {
        self.variables[k].key
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn integral_vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integral)
            .map(|(k, _)| k)
    }

    pub fn count_by_kind(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for v in &self.variables {
            match v.key {
                VarKey::X { .. } => c.0 += 1,
                VarKey::Y { .. } => c.1 += 1,
                VarKey::P { .. } => c.2 += 1,
            }
        }
        c
    }

    pub fn rows_in(&self, family: RowFamily) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(k, c)| c * values[k]).sum()
    }

    /// Drops integrality marks; bounds are unchanged.
    pub fn relaxed(&self) -> MilpModel {
        let mut m = self.clone();
        for v in &mut m.variables {
            v.integral = false;
        }
        m
    }

    /// Checks the structural invariants: references in range, binaries on
    /// `[0, 1]`, a bijective index.
    pub fn check(&self) -> Result<()> {
        let n = self.variables.len();
        if self.index.len() != n {
            return Err(Error::contract("variable index is not a bijection"));
        }
        for (k, v) in self.variables.iter().enumerate() {
            if self.index.get(&v.key) != Some(&k) {
                return Err(Error::contract(format!("index mismatch for {}", v.name)));
            }
            if !(v.lower.is_finite() && v.upper.is_finite() && v.lower <= v.upper) {
                return Err(Error::validation(
                    format!("variable {}", v.name),
                    "bounds must be finite with lower <= upper",
                ));
            }
            if v.integral && (v.lower != 0.0 || v.upper != 1.0) {
                return Err(Error::validation(
                    format!("variable {}", v.name),
                    "integral variables must be binary",
                ));
            }
        }
        for c in &self.constraints {
            if let Some(&(k, _)) = c.coeffs.iter().find(|&&(k, a)| k >= n || !a.is_finite()) {
                return Err(Error::validation(
                    format!("row {}", c.name),
                    format!("bad reference or coefficient for variable {k}"),
                ));
            }
            if !c.rhs.is_finite() {
                return Err(Error::validation(format!("row {}", c.name), "rhs must be finite"));
            }
        }
        if let Some(&(k, _)) = self.objective.iter().find(|&&(k, c)| k >= n || !c.is_finite()) {
            return Err(Error::validation("objective", format!("bad entry for variable {k}")));
        }
        Ok(())
    }

    /// Largest relative row violation of `values` (each row measured against
    /// its largest coefficient), plus bound violations.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(values) / c.scale())
            .fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Writes the model in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ coopsched {} model, delta = {:?}", self.mode, self.delta);
        let _ = writeln!(out, "Maximize");
        write_expr(&mut out, " obj:", &self.objective, &self.variables);
        let _ = writeln!(out, "Subject To");
        for c in &self.constraints {
            let head = format!(" {}:", c.name);
            let mut expr = String::new();
            write_expr(&mut expr, &head, &c.coeffs, &self.variables);
            let expr = expr.trim_end_matches('\n');
            let _ = writeln!(out, "{expr} {} {:?}", c.relation.symbol(), c.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for v in self.variables.iter().filter(|v| !v.integral) {
            let _ = writeln!(out, " {:?} <= {} <= {:?}", v.lower, v.name, v.upper);
        }
        let binaries: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.integral)
            .map(|v| v.name.as_str())
            .collect();
        if !binaries.is_empty() {
            let _ = writeln!(out, "Binaries");
            for chunk in binaries.chunks(8) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
        let _ = writeln!(out, "End");
        out
    }
}

fn write_expr(out: &mut String, head: &str, coeffs: &[(usize, f64)], vars: &[Variable]) {
    let mut line = head.to_string();
    if coeffs.is_empty() {
        line.push_str(" 0 ");
        line.push_str(vars.first().map(|v| v.name.as_str()).unwrap_or("zero"));
    }
    for &(k, a) in coeffs {
        let term = if a < 0.0 {
            format!(" - {:?} {}", -a, vars[k].name)
        } else {
            format!(" + {:?} {}", a, vars[k].name)
        };
        if line.len() + term.len() > 200 {
            let _ = writeln!(out, "{line}");
            line = String::from("   ");
        }
        line.push_str(&term);
    }
    let _ = writeln!(out, "{line}");
}

/// The deactivation constant: the largest right-hand side any SINR row can
/// reach over in-bounds powers (with at most one link per relay), times the
/// full threshold. A row whose activation is 0 is then satisfied for every
/// feasible assignment.
pub fn big_delta(inst: &NetworkInstance) -> f64 {
    let p = &inst.params;
    let s2 = p.sigma2_mw;
    let mut worst: f64 = s2;
    for j in 0..inst.n_destinations {
        let total: f64 = (0..inst.n_sources)
            .map(|k| p.p_slot_max_mw * inst.gains.source_dest(k, j))
            .sum();
        worst = worst.max(s2 + total);
    }
    for r in 0..inst.n_relays {
        let at_relay: f64 = (0..inst.n_sources)
            .map(|k| p.p_slot_max_mw * inst.gains.source_relay(k, r))
            .sum();
        for j in 0..inst.n_destinations {
            let forward: f64 = (0..inst.n_relays)
                .filter(|&q| q != r)
                .map(|q| p.p_relay_mw * inst.gains.relay_dest(q, j))
                .sum();
            let term = s2 + forward + (s2 + at_relay) * inst.gains.relay_dest(r, j) * p.g2;
            worst = worst.max(term);
        }
    }
    p.beta() * worst
}

/// Builds the cooperative model (or the direct baseline when
/// `opts.mode == Dls`).
pub fn build_cls_milp(inst: &NetworkInstance, opts: BuildOptions) -> Result<MilpModel> {
    inst.validate()?;
    if opts.mode == Mode::Dls {
        return build_model(&inst.without_relays(), opts);
    }
    build_model(inst, opts)
}

/// Direct link scheduling: the cooperative model with every relay removed.
pub fn build_dls_milp(inst: &NetworkInstance, opts: BuildOptions) -> Result<MilpModel> {
    build_cls_milp(
        inst,
        BuildOptions {
            mode: Mode::Dls,
            ..opts
        },
    )
}

pub fn build_milp(inst: &NetworkInstance, opts: BuildOptions) -> Result<MilpModel> {
    match opts.mode {
        Mode::Cls => build_cls_milp(inst, opts),
        Mode::Dls => build_dls_milp(inst, opts),
    }
}

fn build_model(inst: &NetworkInstance, opts: BuildOptions) -> Result<MilpModel> {
    let p = &inst.params;
    let t_slots = p.slots;
    let delta = big_delta(inst);
    let mut model = MilpModel::new(opts.mode, t_slots, delta);
    let integral = !opts.relax;
    let (beta, beta1, beta2) = (p.beta(), p.beta1(), p.beta2());
    let s2 = p.sigma2_mw;

    let mut x = vec![Vec::with_capacity(inst.links.len()); t_slots];
    let mut y = vec![Vec::with_capacity(inst.relay_links.len()); t_slots];
    let mut pw = vec![Vec::with_capacity(inst.n_sources); t_slots];
    for (t, row) in x.iter_mut().enumerate() {
        for l in &inst.links {
            row.push(model.add_var(VarKey::X { t, i: l.source, j: l.dest }, 0.0, 1.0, integral));
        }
    }
    for (t, row) in y.iter_mut().enumerate() {
        for rl in &inst.relay_links {
            let key = VarKey::Y {
                t,
                i: rl.source,
                r: rl.relay,
                j: rl.dest,
            };
            row.push(model.add_var(key, 0.0, 1.0, integral));
        }
    }
    for (t, row) in pw.iter_mut().enumerate() {
        for i in 0..inst.n_sources {
            row.push(model.add_var(VarKey::P { t, i }, 0.0, p.p_slot_max_mw, false));
        }
    }

    let weight = 1.0 / t_slots as f64;
    model.objective = x.iter().flatten().map(|&k| (k, weight)).collect();

    let links_of: Vec<Vec<usize>> = (0..inst.n_sources)
        .map(|i| {
            inst.links
                .iter()
                .enumerate()
                .filter(|(_, l)| l.source == i)
                .map(|(k, _)| k)
                .collect()
        })
        .collect();

    // C2
    let demand_mode = opts.demand_mode.unwrap_or(p.demand_mode);
    if demand_mode != DemandMode::Off {
        let relation = if demand_mode == DemandMode::AtMost {
            Relation::Le
        } else {
            Relation::Ge
        };
        for i in 0..inst.n_sources {
            if links_of[i].is_empty() {
                continue;
            }
            let coeffs = (0..t_slots)
                .flat_map(|t| links_of[i].iter().map(move |&l| (t, l)))
                .map(|(t, l)| (x[t][l], 1.0))
                .collect();
            model.add_row(RowFamily::Demand, format!("s{i}"), coeffs, relation, f64::from(p.demand[i]));
        }
    }

    for t in 0..t_slots {
        // C3a / C3b
        for (l, link) in inst.links.iter().enumerate() {
            let (i, j) = (link.source, link.dest);
            let interference = |scale: f64| -> Vec<(usize, f64)> {
                (0..inst.n_sources)
                    .filter(|&k| k != i)
                    .map(|k| (pw[t][k], -scale * inst.gains.source_dest(k, j)))
                    .collect()
            };
            let own = (pw[t][i], inst.gains.source_dest(i, j));
            let tag = format!("t{t}_s{i}_d{j}");
            let worst = s2
                + (0..inst.n_sources)
                    .filter(|&k| k != i)
                    .map(|k| p.p_slot_max_mw * inst.gains.source_dest(k, j))
                    .sum::<f64>();
            let (d_split, d_full) = match opts.delta {
                DeltaPolicy::Global => (delta, delta),
                DeltaPolicy::PerRow => (beta1 * worst, beta * worst),
            };

            let mut split = vec![own, (x[t][l], -d_split)];
            split.extend(interference(beta1));
            model.add_row(RowFamily::DirectSplit, tag.clone(), split, Relation::Ge, beta1 * s2 - d_split);

            let mut full = vec![own, (x[t][l], -d_full)];
            full.extend(interference(beta));
            for (k, rl) in inst.relay_links.iter().enumerate() {
                if rl.source == i && rl.dest == j {
                    full.push((y[t][k], d_full));
                }
            }
            model.add_row(RowFamily::DirectFull, tag, full, Relation::Ge, beta * s2 - d_full);
        }

        // C4
        for (k, rl) in inst.relay_links.iter().enumerate() {
            let (i, r, j) = (rl.source, rl.relay, rl.dest);
            let g_rj = inst.gains.relay_dest(r, j);
            let amp = g_rj * p.g2;
            let d_row = match opts.delta {
                DeltaPolicy::Global => delta,
                DeltaPolicy::PerRow => {
                    let forward: f64 = (0..inst.n_relays)
                        .filter(|&q| q != r)
                        .map(|q| p.p_relay_mw * inst.gains.relay_dest(q, j))
                        .sum();
                    let at_relay: f64 = (0..inst.n_sources)
                        .filter(|&q| q != i)
                        .map(|q| p.p_slot_max_mw * inst.gains.source_relay(q, r))
                        .sum();
                    beta2 * (s2 + forward + (s2 + at_relay) * amp)
                }
            };
            let mut coeffs = vec![
                (pw[t][i], inst.gains.source_relay(i, r) * amp),
                (y[t][k], -d_row),
            ];
            for (k2, other) in inst.relay_links.iter().enumerate() {
                if other.relay != r {
                    coeffs.push((
                        y[t][k2],
                        -beta2 * p.p_relay_mw * inst.gains.relay_dest(other.relay, j),
                    ));
                }
            }
            for q in (0..inst.n_sources).filter(|&q| q != i) {
                coeffs.push((pw[t][q], -beta2 * amp * inst.gains.source_relay(q, r)));
            }
            let rhs = beta2 * (s2 + s2 * amp) - d_row;
            model.add_row(
                RowFamily::Relay,
                format!("t{t}_s{i}_r{r}_d{j}"),
                coeffs,
                Relation::Ge,
                rhs,
            );
        }

        // C5
        if inst.n_relays > 0 {
            for i in 0..inst.n_sources {
                let coeffs: Vec<(usize, f64)> = inst
                    .relay_links
                    .iter()
                    .enumerate()
                    .filter(|(_, rl)| rl.source == i)
                    .map(|(k, _)| (y[t][k], 1.0))
                    .collect();
                if !coeffs.is_empty() {
                    model.add_row(RowFamily::RelayPerSource, format!("t{t}_s{i}"), coeffs, Relation::Le, 1.0);
                }
            }
            // C5'
            for r in 0..inst.n_relays {
                let coeffs: Vec<(usize, f64)> = inst
                    .relay_links
                    .iter()
                    .enumerate()
                    .filter(|(_, rl)| rl.relay == r)
                    .map(|(k, _)| (y[t][k], 1.0))
                    .collect();
                if !coeffs.is_empty() {
                    model.add_row(RowFamily::SourcePerRelay, format!("t{t}_r{r}"), coeffs, Relation::Le, 1.0);
                }
            }
        }

        // C6
        for (k, rl) in inst.relay_links.iter().enumerate() {
            let l = inst
                .link_index(rl.source, rl.dest)
                .ok_or_else(|| Error::contract("relay link without a matching link"))?;
            model.add_row(
                RowFamily::RelayNeedsSource,
                format!("t{t}_s{}_r{}_d{}", rl.source, rl.relay, rl.dest),
                vec![(x[t][l], 1.0), (y[t][k], -1.0)],
                Relation::Ge,
                0.0,
            );
        }

        // C8 and one destination per source
        for i in 0..inst.n_sources {
            let act = &links_of[i];
            let mut lo = vec![(pw[t][i], 1.0)];
            let mut hi = vec![(pw[t][i], 1.0)];
            for &l in act {
                lo.push((x[t][l], -p.p_slot_min_mw));
                hi.push((x[t][l], -p.p_slot_max_mw));
            }
            model.add_row(RowFamily::PowerMin, format!("t{t}_s{i}"), lo, Relation::Ge, 0.0);
            model.add_row(RowFamily::PowerMax, format!("t{t}_s{i}"), hi, Relation::Le, 0.0);
            if act.len() > 1 {
                let coeffs = act.iter().map(|&l| (x[t][l], 1.0)).collect();
                model.add_row(RowFamily::OneDestination, format!("t{t}_s{i}"), coeffs, Relation::Le, 1.0);
            }
        }
    }

    // C7
    let budget = p.energy_budget();
    for i in 0..inst.n_sources {
        let coeffs = (0..t_slots).map(|t| (pw[t][i], 1.0)).collect();
        model.add_row(RowFamily::Budget, format!("s{i}"), coeffs, Relation::Le, budget);
    }

    model.check()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, Placement, SystemParams};
    use crate::rng::stream_rng;
    use rand::Rng;

    fn instance(seed: u64, n: usize, m: usize, t: usize, mode: DemandMode) -> NetworkInstance {
        let params = SystemParams {
            slots: t,
            demand_mode: mode,
            ..SystemParams::default()
        }
        .with_uniform_demand(n, t as u32);
        generate_instance(seed, n, m, n, params, Placement::PerPair).unwrap()
    }

    #[test]
    fn single_link_model_shape() {
        let inst = instance(1, 1, 0, 1, DemandMode::Off);
        let model = build_cls_milp(&inst, BuildOptions::new(Mode::Cls)).unwrap();
        assert_eq!(model.count_by_kind(), (1, 0, 1));
        assert_eq!(model.rows_in(RowFamily::DirectSplit), 1);
        assert_eq!(model.rows_in(RowFamily::DirectFull), 1);
        assert_eq!(model.rows_in(RowFamily::Budget), 1);
        assert_eq!(model.rows_in(RowFamily::PowerMin), 1);
        assert_eq!(model.rows_in(RowFamily::PowerMax), 1);
        assert_eq!(model.constraints.len(), 5);
        let c3b = model
            .constraints
            .iter()
            .find(|c| c.family == RowFamily::DirectFull)
            .unwrap();
        assert_eq!(c3b.coeffs.len(), 2);
    }

    /// Closed-form row counts for the one-link-per-source generator.
    fn expected_rows(n: usize, m: usize, t: usize, demand: bool) -> usize {
        let links = n;
        let relay_links = n * m;
        let per_slot = 2 * links
            + relay_links
            + if m > 0 { n + m } else { 0 }
            + relay_links
            + 2 * n;
        per_slot * t + n + if demand { n } else { 0 }
    }

    #[test]
    fn row_counts_match_closed_form() {
        for &(n, m, t) in &[(1, 0, 1), (2, 1, 2), (3, 2, 3), (4, 4, 2), (2, 3, 1)] {
            let inst = instance(n as u64, n, m, t, DemandMode::AtMost);
            let model = build_cls_milp(&inst, BuildOptions::new(Mode::Cls)).unwrap();
            assert_eq!(model.constraints.len(), expected_rows(n, m, t, true), "{n} {m} {t}");
            assert_eq!(model.count_by_kind(), (n * t, n * m * t, n * t));
            let dls = build_dls_milp(&inst, BuildOptions::new(Mode::Dls)).unwrap();
            assert_eq!(dls.constraints.len(), expected_rows(n, 0, t, true));
            assert_eq!(dls.count_by_kind().1, 0);
        }
    }

    #[test]
    fn dls_equals_cls_without_relays() {
        let inst = instance(9, 3, 2, 2, DemandMode::AtMost);
        let dls = build_dls_milp(&inst, BuildOptions::new(Mode::Dls)).unwrap();
        let cls = build_cls_milp(&inst.without_relays(), BuildOptions::new(Mode::Cls)).unwrap();
        assert_eq!(dls.variables, cls.variables);
        assert_eq!(dls.constraints, cls.constraints);
        assert_eq!(dls.objective, cls.objective);
        assert_eq!(dls.delta, cls.delta);
        for family in [RowFamily::Relay, RowFamily::RelayPerSource, RowFamily::SourcePerRelay, RowFamily::RelayNeedsSource] {
            assert_eq!(dls.rows_in(family), 0);
        }
    }

    #[test]
    fn relaxation_clears_integrality_only() {
        let inst = instance(2, 2, 1, 2, DemandMode::AtMost);
        let exact = build_cls_milp(&inst, BuildOptions::new(Mode::Cls)).unwrap();
        let relaxed = build_cls_milp(&inst, BuildOptions::new(Mode::Cls).relaxed()).unwrap();
        assert_eq!(exact.constraints, relaxed.constraints);
        assert!(relaxed.variables.iter().all(|v| !v.integral));
        for (a, b) in exact.variables.iter().zip(&relaxed.variables) {
            assert_eq!((a.lower, a.upper), (b.lower, b.upper));
        }
        assert_eq!(exact.relaxed(), relaxed);
    }

    #[test]
    fn delta_bounds() {
        let inst = instance(4, 1, 0, 1, DemandMode::Off);
        let d = big_delta(&inst);
        assert!(d >= inst.params.beta() * inst.params.sigma2_mw);
        // adding a source never lowers delta
        let mut prev = 0.0;
        for n in 1..6 {
            let d = big_delta(&instance(4, n, 2, 1, DemandMode::Off));
            assert!(d >= prev);
            prev = d;
        }
    }

    /// Substitutes random in-bounds powers and relay assignments that respect
    /// C5/C5'/C6 into every SINR row whose activation is 0; each must hold.
    #[test]
    fn deactivated_rows_hold_for_any_in_bounds_powers() {
        for (seed, delta) in (0..40u64).flat_map(|s| [(s, DeltaPolicy::Global), (s, DeltaPolicy::PerRow)]) {
            let inst = instance(seed, 4, 3, 1, DemandMode::Off);
            let opts = BuildOptions {
                delta,
                ..BuildOptions::new(Mode::Cls)
            };
            let model = build_cls_milp(&inst, opts).unwrap();
            let mut rng = stream_rng(seed, 99);
            for _ in 0..50 {
                let mut v = vec![0.0; model.num_vars()];
                let mut relay_used = vec![false; inst.n_relays];
                for (k, var) in model.variables.iter().enumerate() {
                    match var.key {
                        VarKey::P { .. } => {
                            v[k] = if rng.gen_bool(0.5) { var.upper } else { rng.gen_range(0.0..=var.upper) }
                        }
                        VarKey::X { .. } => v[k] = f64::from(u8::from(rng.gen_bool(0.5))),
                        VarKey::Y { .. } => {}
                    }
                }
                for (k, var) in model.variables.iter().enumerate() {
                    if let VarKey::Y { t, i, r, j } = var.key {
                        let xk = model.var(VarKey::X { t, i, j }).unwrap();
                        let source_used = model.variables.iter().enumerate().any(|(k2, v2)| {
                            matches!(v2.key, VarKey::Y { i: i2, .. } if i2 == i) && v[k2] > 0.5
                        });
                        if v[xk] > 0.5 && !relay_used[r] && !source_used && rng.gen_bool(0.5) {
                            v[k] = 1.0;
                            relay_used[r] = true;
                        }
                    }
                }
                for c in &model.constraints {
                    let deactivated = match c.family {
                        RowFamily::DirectSplit | RowFamily::DirectFull => c
                            .coeffs
                            .iter()
                            .any(|&(k, _)| matches!(model.key(k), VarKey::X { .. }) && v[k] == 0.0),
                        RowFamily::Relay => c.coeffs.iter().any(|&(k, _)| {
                            let var = &model.variables[k];
                            matches!(var.key, VarKey::Y { .. }) && c.name.ends_with(&var.name[1..]) && v[k] == 0.0
                        }),
                        _ => false,
                    };
                    if deactivated {
                        assert!(
                            c.violation(&v) <= 1e-9 * model.delta,
                            "{} violated by {}",
                            c.name,
                            c.violation(&v)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn per_row_delta_is_never_looser_than_global() {
        for seed in 0..10 {
            let inst = instance(seed, 3, 2, 2, DemandMode::AtMost);
            let global = build_cls_milp(&inst, BuildOptions::new(Mode::Cls)).unwrap();
            let per_row = build_cls_milp(
                &inst,
                BuildOptions {
                    delta: DeltaPolicy::PerRow,
                    ..BuildOptions::new(Mode::Cls)
                },
            )
            .unwrap();
            assert_eq!(global.constraints.len(), per_row.constraints.len());
            for (g, r) in global.constraints.iter().zip(&per_row.constraints) {
                assert_eq!(g.name, r.name);
                for (&(kg, ag), &(kr, ar)) in g.coeffs.iter().zip(&r.coeffs) {
                    assert_eq!(kg, kr);
                    if matches!(global.key(kg), VarKey::P { .. }) {
                        assert_eq!(ag, ar);
                    } else {
                        assert!(ar.abs() <= ag.abs() * (1.0 + 1e-12), "{}", g.name);
                    }
                }
            }
        }
    }

    #[test]
    fn delta_policy_round_trips_through_text() {
        for p in [DeltaPolicy::Global, DeltaPolicy::PerRow] {
            assert_eq!(p.to_string().parse::<DeltaPolicy>().unwrap(), p);
        }
        assert!("huge".parse::<DeltaPolicy>().is_err());
    }

    #[test]
    fn lp_export_lists_every_row_and_binary() {
        let inst = instance(3, 2, 1, 2, DemandMode::AtMost);
        let model = build_cls_milp(&inst, BuildOptions::new(Mode::Cls)).unwrap();
        let text = model.to_lp_format();
        assert!(text.starts_with("\\ coopsched cls model"));
        for c in &model.constraints {
            assert!(text.contains(&format!(" {}:", c.name)), "{}", c.name);
        }
        assert!(text.contains("Binaries"));
        assert!(text.trim_end().ends_with("End"));
    }

    #[test]
    fn invalid_instance_is_a_build_error() {
        let mut inst = instance(3, 2, 1, 2, DemandMode::AtMost);
        inst.params.demand.pop();
        assert!(build_cls_milp(&inst, BuildOptions::new(Mode::Cls)).is_err());
    }
}
