//! Randomized rounding of the LP relaxation and feasibility repair.
//!
//! Rounding sets each binary to 1 with probability equal to its fractional
//! LP value. Repair then only ever switches activations off, so it visits
//! each variable at most once and always ends at a schedule accepted by
//! [`validate_schedule`](crate::sinr::validate_schedule) (the empty schedule
//! being the worst case).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{MilpModel, VarKey};
use crate::model::{DemandMode, NetworkInstance};
use crate::rng::{derive_seed, uniform_at};
use crate::sinr::{breakdown, relay_load, Schedule};
use crate::solver::{LpSolution, LpStatus};

/// Relative slack below a threshold still accepted by repair. Far inside the
/// validator's own tolerance, so repaired schedules always validate.
const REPAIR_REL_TOL: f64 = 1e-9;

/// Fractional values this far outside `[0, 1]` are clamped rather than
/// rejected (LP round-off).
const ROUND_CLAMP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerPolicy {
    /// Keep the LP powers of surviving sources, clamped to the slot bounds.
    #[default]
    KeepLp,
    /// Scale all LP powers by one common factor, as far as the slot maximum
    /// and the energy budgets allow.
    RescaleMax,
}

impl fmt::Display for PowerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerPolicy::KeepLp => "keep_lp",
            PowerPolicy::RescaleMax => "rescale_max",
        })
    }
}

impl FromStr for PowerPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keep_lp" => Ok(PowerPolicy::KeepLp),
            "rescale_max" => Ok(PowerPolicy::RescaleMax),
            _ => Err(Error::validation(
                "power_policy",
                format!("unknown policy '{s}' (expected keep_lp or rescale_max)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundingConfig {
    pub trials: usize,
    pub rng_seed: u64,
    pub power_policy: PowerPolicy,
}

impl Default for RoundingConfig {
    fn default() -> Self {
        RoundingConfig {
            trials: 32,
            rng_seed: 0,
            power_policy: PowerPolicy::KeepLp,
        }
    }
}

impl RoundingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::validation("trials", "must be at least 1"));
        }
        Ok(())
    }
}

/// Binary activations `x[t][link]`, `y[t][relay_link]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activations {
    pub x: Vec<Vec<bool>>,
    pub y: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairOutcome {
    pub schedule: Schedule,
    /// Activations switched from 1 to 0.
    pub flips: usize,
}

/// Rounds each value to 1 with probability equal to the value. The draw for
/// `values[k]` sits at keystream position `k` of `seed`.
pub fn randomized_round(values: &[f64], seed: u64) -> Result<Vec<bool>> {
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| round_one(v, seed, k as u64))
        .collect()
}

fn round_one(v: f64, seed: u64, index: u64) -> Result<bool> {
    if !(v >= -ROUND_CLAMP_TOL && v <= 1.0 + ROUND_CLAMP_TOL) {
        return Err(Error::contract(format!(
            "fractional value {v} at position {index} is outside [0, 1]"
        )));
    }
    let p = v.clamp(0.0, 1.0);
    Ok(uniform_at(seed, index) < p)
}

/// Rounds the binary variables of `model` at `values`; each variable's draw
/// is addressed by its model index.
pub fn round_activations(
    inst: &NetworkInstance,
    model: &MilpModel,
    values: &[f64],
    seed: u64,
) -> Result<Activations> {
    let mut sched = Schedule::empty(inst);
    for (k, var) in model.variables.iter().enumerate() {
        match var.key {
            VarKey::X { t, i, j } => {
                let l = inst
                    .link_index(i, j)
                    .ok_or_else(|| Error::contract(format!("{} has no link", var.name)))?;
                sched.x[t][l] = round_one(values[k], seed, k as u64)?;
            }
            VarKey::Y { t, i, r, j } => {
                let l = inst
                    .relay_link_index(i, r, j)
                    .ok_or_else(|| Error::contract(format!("{} has no relay link", var.name)))?;
                sched.y[t][l] = round_one(values[k], seed, k as u64)?;
            }
            VarKey::P { .. } => {}
        }
    }
    Ok(Activations {
        x: sched.x,
        y: sched.y,
    })
}

/// Per-slot source powers `[t][i]` from a solution of `model`.
pub fn lp_powers(inst: &NetworkInstance, model: &MilpModel, values: &[f64]) -> Vec<Vec<f64>> {
    let mut power = vec![vec![0.0; inst.n_sources]; inst.params.slots];
    for (k, var) in model.variables.iter().enumerate() {
        if let VarKey::P { t, i } = var.key {
            power[t][i] = values[k];
        }
    }
    power
}

struct Repair<'a> {
    inst: &'a NetworkInstance,
    x: Vec<Vec<bool>>,
    y: Vec<Vec<bool>>,
    power: Vec<Vec<f64>>,
    /// `relay_links_of[l]`: relay links sharing link `l`'s endpoints.
    relay_links_of: Vec<Vec<usize>>,
    link_of: Vec<usize>,
    flips: usize,
}

impl Repair<'_> {
    fn source_active(&self, t: usize, i: usize) -> bool {
        self.inst
            .links
            .iter()
            .enumerate()
            .any(|(l, link)| link.source == i && self.x[t][l])
    }

    fn clear_y(&mut self, t: usize, k: usize) {
        if self.y[t][k] {
            self.y[t][k] = false;
            self.flips += 1;
        }
    }

    /// Deactivates link `l` in slot `t` together with its relay links, and
    /// silences the source if it has nothing else to send.
    fn clear_x(&mut self, t: usize, l: usize) {
        if self.x[t][l] {
            self.x[t][l] = false;
            self.flips += 1;
        }
        for idx in 0..self.relay_links_of[l].len() {
            let k = self.relay_links_of[l][idx];
            self.clear_y(t, k);
        }
        let i = self.inst.links[l].source;
        if !self.source_active(t, i) {
            self.power[t][i] = 0.0;
        }
    }

    fn drop_orphan_relays(&mut self) {
        for t in 0..self.x.len() {
            for k in 0..self.inst.relay_links.len() {
                if self.y[t][k] && !self.x[t][self.link_of[k]] {
                    self.clear_y(t, k);
                }
            }
        }
    }

    fn one_destination(&mut self) {
        let n = self.inst.n_sources;
        for t in 0..self.x.len() {
            let mut seen = vec![false; n];
            for l in 0..self.inst.links.len() {
                if !self.x[t][l] {
                    continue;
                }
                let i = self.inst.links[l].source;
                if seen[i] {
                    self.clear_x(t, l);
                } else {
                    seen[i] = true;
                }
            }
        }
    }

    fn demand_cap(&mut self) {
        let p = &self.inst.params;
        if p.demand_mode != DemandMode::AtMost {
            return;
        }
        let mut used = vec![0u32; self.inst.n_sources];
        for t in 0..self.x.len() {
            for l in 0..self.inst.links.len() {
                if !self.x[t][l] {
                    continue;
                }
                let i = self.inst.links[l].source;
                if used[i] >= self.inst.params.demand[i] {
                    self.clear_x(t, l);
                } else {
                    used[i] += 1;
                }
            }
        }
    }

    fn one_relay_each(&mut self) {
        for t in 0..self.x.len() {
            let mut source_busy = vec![false; self.inst.n_sources];
            let mut relay_busy = vec![false; self.inst.n_relays];
            for k in 0..self.inst.relay_links.len() {
                if !self.y[t][k] {
                    continue;
                }
                let rl = self.inst.relay_links[k];
                if source_busy[rl.source] || relay_busy[rl.relay] {
                    self.clear_y(t, k);
                } else {
                    source_busy[rl.source] = true;
                    relay_busy[rl.relay] = true;
                }
            }
        }
    }

    fn set_powers(&mut self, lp_power: &[Vec<f64>], policy: PowerPolicy) {
        let p = &self.inst.params;
        let (lo, hi) = (p.p_slot_min_mw, p.p_slot_max_mw);
        let t_slots = self.x.len();
        let active: Vec<Vec<bool>> = (0..t_slots)
            .map(|t| (0..self.inst.n_sources).map(|i| self.source_active(t, i)).collect())
            .collect();
        let lp_at = |t: usize, i: usize| lp_power[t][i].max(0.0);
        let scale = match policy {
            PowerPolicy::KeepLp => 1.0,
            PowerPolicy::RescaleMax => {
                let mut s = f64::INFINITY;
                for i in 0..self.inst.n_sources {
                    let mut energy = 0.0;
                    for t in 0..t_slots {
                        if active[t][i] {
                            let v = lp_at(t, i);
                            energy += v;
                            if v > 0.0 {
                                s = s.min(hi / v);
                            }
                        }
                    }
                    if energy > 0.0 {
                        s = s.min(p.energy_budget() / energy);
                    }
                }
                if s.is_finite() {
                    s.max(1.0)
                } else {
                    1.0
                }
            }
        };
        for t in 0..t_slots {
            for i in 0..self.inst.n_sources {
                self.power[t][i] = if active[t][i] {
                    (lp_at(t, i) * scale).clamp(lo, hi)
                } else {
                    0.0
                };
            }
        }
    }

    fn enforce_budget(&mut self) {
        let p = &self.inst.params;
        let budget = p.energy_budget();
        let t_slots = self.x.len();
        for i in 0..self.inst.n_sources {
            loop {
                let energy: f64 = (0..t_slots).map(|t| self.power[t][i]).sum();
                if energy <= budget {
                    break;
                }
                let s = budget / energy;
                let min_active = (0..t_slots)
                    .filter(|&t| self.power[t][i] > 0.0)
                    .map(|t| self.power[t][i])
                    .fold(f64::INFINITY, f64::min);
                if min_active * s >= p.p_slot_min_mw {
                    for t in 0..t_slots {
                        self.power[t][i] *= s;
                    }
                    break;
                }
                let last = (0..t_slots).rev().find(|&t| self.power[t][i] > 0.0);
                let Some(t) = last else { break };
                for l in 0..self.inst.links.len() {
                    if self.inst.links[l].source == i && self.x[t][l] {
                        self.clear_x(t, l);
                    }
                }
                self.power[t][i] = 0.0;
            }
        }
    }

    /// True when every kept link of a slot meets its rows: direct path
    /// alone, or split direct and AF thresholds when relayed, and the
    /// combined SINR in both cases.
    fn slot_feasible(&self, power: &[f64], kept: &[bool], y: &[bool]) -> bool {
        let p = &self.inst.params;
        let accept = |value: f64, threshold: f64| value >= threshold * (1.0 - REPAIR_REL_TOL);
        let load = relay_load(self.inst, y);
        (0..self.inst.links.len()).filter(|&l| kept[l]).all(|l| {
            let link = self.inst.links[l];
            let relay = self.relay_links_of[l]
                .iter()
                .find(|&&k| y[k])
                .map(|&k| self.inst.relay_links[k].relay);
            let b = breakdown(self.inst, power, &load, link.source, relay, link.dest);
            let rows = match relay {
                Some(_) => accept(b.direct_term, p.beta1()) && accept(b.af_term, p.beta2()),
                None => accept(b.direct_term, p.beta()),
            };
            rows && accept(b.total, p.beta())
        })
    }

    /// Rebuilds each slot in link order: a rounded-on link stays on only if
    /// it and every link kept before it still meet their SINR rows. A
    /// relayed link that fails is retried on its direct path alone before
    /// being dropped.
    fn sinr_pass(&mut self) {
        let n_links = self.inst.links.len();
        for t in 0..self.x.len() {
            let wanted_x = self.x[t].clone();
            let wanted_y = self.y[t].clone();
            let mut kept = vec![false; n_links];
            let mut y = vec![false; self.inst.relay_links.len()];
            let mut power = vec![0.0; self.inst.n_sources];
            for l in (0..n_links).filter(|&l| wanted_x[l]) {
                let i = self.inst.links[l].source;
                kept[l] = true;
                power[i] = self.power[t][i];
                let relay_link = self.relay_links_of[l].iter().copied().find(|&k| wanted_y[k]);
                if let Some(k) = relay_link {
                    y[k] = true;
                    if self.slot_feasible(&power, &kept, &y) {
                        continue;
                    }
                    y[k] = false;
                }
                if self.slot_feasible(&power, &kept, &y) {
                    continue;
                }
                kept[l] = false;
                power[i] = 0.0;
            }
            for l in 0..n_links {
                if wanted_x[l] && !kept[l] {
                    self.clear_x(t, l);
                }
            }
            for k in 0..y.len() {
                if wanted_y[k] && !y[k] {
                    self.clear_y(t, k);
                }
            }
        }
    }
}

/// Turns rounded activations into a feasible schedule by switching off
/// whatever violates a constraint, in a fixed order: relay links without
/// their direct link, extra destinations per source, demand beyond the cap,
/// extra relays per source or sources per relay (lowest index kept), then
/// powers and energy budgets, then SINR, admitting links one at a time in
/// link order against the links already kept. Never switches anything on.
pub fn repair(
    inst: &NetworkInstance,
    lp_power: &[Vec<f64>],
    rounded: &Activations,
    policy: PowerPolicy,
) -> Result<RepairOutcome> {
    let t_slots = inst.params.slots;
    let shape_ok = rounded.x.len() == t_slots
        && rounded.y.len() == t_slots
        && lp_power.len() == t_slots
        && rounded.x.iter().all(|r| r.len() == inst.links.len())
        && rounded.y.iter().all(|r| r.len() == inst.relay_links.len())
        && lp_power.iter().all(|r| r.len() == inst.n_sources);
    if !shape_ok {
        return Err(Error::contract("rounded activations do not match the instance"));
    }
    let link_of = inst
        .relay_links
        .iter()
        .map(|rl| {
            inst.link_index(rl.source, rl.dest)
                .ok_or_else(|| Error::contract("relay link without a matching link"))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut relay_links_of = vec![Vec::new(); inst.links.len()];
    for (k, &l) in link_of.iter().enumerate() {
        relay_links_of[l].push(k);
    }

    let mut r = Repair {
        inst,
        x: rounded.x.clone(),
        y: rounded.y.clone(),
        power: vec![vec![0.0; inst.n_sources]; t_slots],
        relay_links_of,
        link_of,
        flips: 0,
    };
    r.drop_orphan_relays();
    r.one_destination();
    r.demand_cap();
    r.one_relay_each();
    r.set_powers(lp_power, policy);
    r.enforce_budget();
    r.sinr_pass();

    Ok(RepairOutcome {
        schedule: Schedule {
            slots: t_slots,
            x: r.x,
            y: r.y,
            power: r.power,
        },
        flips: r.flips,
    })
}

/// One rounding pass at `seed` followed by repair.
pub fn round_and_repair(
    inst: &NetworkInstance,
    model: &MilpModel,
    values: &[f64],
    seed: u64,
    policy: PowerPolicy,
) -> Result<RepairOutcome> {
    if values.len() != model.num_vars() {
        return Err(Error::contract(format!(
            "expected {} values, got {}",
            model.num_vars(),
            values.len()
        )));
    }
    let rounded = round_activations(inst, model, values, seed)?;
    repair(inst, &lp_powers(inst, model, values), &rounded, policy)
}

/// Seed of trial `k` under `cfg`.
pub fn trial_seed(cfg: &RoundingConfig, k: usize) -> u64 {
    derive_seed(cfg.rng_seed, k as u64)
}

/// Runs `cfg.trials` rounding passes and keeps the schedule with the most
/// activations (earliest trial on ties).
pub fn round_best_of_k(
    inst: &NetworkInstance,
    model: &MilpModel,
    lp: &LpSolution,
    cfg: &RoundingConfig,
) -> Result<Schedule> {
    cfg.validate()?;
    if lp.status != LpStatus::Optimal {
        return Err(Error::contract(format!(
            "rounding needs an optimal LP relaxation, got {:?}",
            lp.status
        )));
    }
    let mut best: Option<Schedule> = None;
    for k in 0..cfg.trials {
        let out = round_and_repair(inst, model, &lp.values, trial_seed(cfg, k), cfg.power_policy)?;
        if best
            .as_ref()
            .map_or(true, |b| out.schedule.scheduled_count() > b.scheduled_count())
        {
            best = Some(out.schedule);
        }
    }
    Ok(best.expect("at least one trial"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{build_milp, BuildOptions, Mode};
    use crate::model::{generate_instance, GainTable, Link, Placement, RelayLink, SystemParams};
    use crate::sinr::validate_schedule;
    use crate::solver::solve_lp;

    fn toy() -> NetworkInstance {
        let mut params = SystemParams::default().with_uniform_demand(2, 2);
        params.slots = 2;
        NetworkInstance {
            n_sources: 2,
            n_relays: 1,
            n_destinations: 2,
            links: vec![Link { source: 0, dest: 0 }, Link { source: 1, dest: 1 }],
            relay_links: vec![
                RelayLink { source: 0, relay: 0, dest: 0 },
                RelayLink { source: 1, relay: 0, dest: 1 },
            ],
            gains: GainTable::filled(2, 1, 2, 0.01),
            params,
            seed: 0,
        }
    }

    fn off(inst: &NetworkInstance) -> Activations {
        let s = Schedule::empty(inst);
        Activations { x: s.x, y: s.y }
    }

    #[test]
    fn extremes_are_deterministic() {
        for seed in 0..50 {
            assert_eq!(randomized_round(&[0.0, 1.0], seed).unwrap(), vec![false, true]);
        }
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        assert!(matches!(randomized_round(&[1.5], 0), Err(Error::Contract(_))));
        assert!(matches!(randomized_round(&[f64::NAN], 0), Err(Error::Contract(_))));
        assert_eq!(randomized_round(&[1.0 + 1e-9], 0).unwrap(), vec![true]);
    }

    #[test]
    fn rounding_is_order_independent() {
        let values: Vec<f64> = (0..40).map(|k| (k as f64 * 0.37).fract()).collect();
        let all = randomized_round(&values, 9).unwrap();
        for k in 0..values.len() {
            assert_eq!(round_one(values[k], 9, k as u64).unwrap(), all[k]);
        }
    }

    #[test]
    fn idle_source_loses_its_power() {
        let inst = toy();
        let lp_power = vec![vec![120.0, 0.0], vec![0.0, 0.0]];
        let out = repair(&inst, &lp_power, &off(&inst), PowerPolicy::KeepLp).unwrap();
        assert_eq!(out.schedule.power[0][0], 0.0);
        assert_eq!(out.flips, 0);
    }

    #[test]
    fn relay_without_direct_link_is_dropped() {
        let inst = toy();
        let mut a = off(&inst);
        a.y[0][0] = true;
        let out = repair(&inst, &vec![vec![0.0; 2]; 2], &a, PowerPolicy::KeepLp).unwrap();
        assert!(!out.schedule.y[0][0]);
        assert_eq!(out.flips, 1);
    }

    #[test]
    fn feasible_input_is_a_fixed_point() {
        let inst = toy();
        let mut a = off(&inst);
        a.x[0][0] = true;
        a.x[1][1] = true;
        let lp_power = vec![vec![50.0, 0.0], vec![0.0, 60.0]];
        let out = repair(&inst, &lp_power, &a, PowerPolicy::KeepLp).unwrap();
        assert_eq!(out.flips, 0);
        assert_eq!(out.schedule.x, a.x);
        assert_eq!(out.schedule.power, lp_power);
    }

    #[test]
    fn interfering_pair_keeps_the_first_link() {
        // equal gains: two simultaneous links see SINR ~1 < beta
        let inst = toy();
        let mut a = off(&inst);
        a.x[0][0] = true;
        a.x[0][1] = true;
        let lp_power = vec![vec![50.0, 50.0], vec![0.0, 0.0]];
        let out = repair(&inst, &lp_power, &a, PowerPolicy::KeepLp).unwrap();
        assert!(validate_schedule(&inst, &out.schedule).is_empty());
        assert_eq!(out.schedule.x[0], vec![true, false]);
    }

    #[test]
    fn demand_cap_keeps_earliest_slots() {
        let mut inst = toy();
        inst.params.demand = vec![1, 1];
        let mut a = off(&inst);
        a.x[0][0] = true;
        a.x[1][0] = true;
        let lp_power = vec![vec![50.0, 0.0], vec![50.0, 0.0]];
        let out = repair(&inst, &lp_power, &a, PowerPolicy::KeepLp).unwrap();
        assert!(out.schedule.x[0][0]);
        assert!(!out.schedule.x[1][0]);
    }

    #[test]
    fn rescale_raises_powers_within_limits() {
        let inst = toy();
        let mut a = off(&inst);
        a.x[0][0] = true;
        let lp_power = vec![vec![10.0, 0.0], vec![0.0, 0.0]];
        let out = repair(&inst, &lp_power, &a, PowerPolicy::RescaleMax).unwrap();
        // budget 0.3 * 300 * 2 = 180 binds before the 300 mW slot cap
        assert!((out.schedule.power[0][0] - 180.0).abs() <= 1e-9);
        assert!(validate_schedule(&inst, &out.schedule).is_empty());
    }

    #[test]
    fn best_of_k_dominates_single_trial() {
        let params = SystemParams::default().with_uniform_demand(4, 8);
        for seed in 0..5 {
            let inst = generate_instance(seed, 4, 2, 4, params.clone(), Placement::PerPair).unwrap();
            let model = build_milp(&inst, BuildOptions::new(Mode::Cls).relaxed()).unwrap();
            let lp = solve_lp(&model);
            let one = RoundingConfig {
                trials: 1,
                rng_seed: seed,
                ..RoundingConfig::default()
            };
            let many = RoundingConfig { trials: 32, ..one };
            let a = round_best_of_k(&inst, &model, &lp, &one).unwrap();
            let b = round_best_of_k(&inst, &model, &lp, &many).unwrap();
            let single = round_and_repair(&inst, &model, &lp.values, trial_seed(&one, 0), one.power_policy).unwrap();
            assert_eq!(a, single.schedule);
            assert!(b.scheduled_count() >= a.scheduled_count());
            assert!(validate_schedule(&inst, &b).is_empty());
        }
    }

    #[test]
    fn zero_trials_is_invalid() {
        let inst = toy();
        let model = build_milp(&inst, BuildOptions::new(Mode::Cls).relaxed()).unwrap();
        let lp = solve_lp(&model);
        let cfg = RoundingConfig {
            trials: 0,
            ..RoundingConfig::default()
        };
        assert!(round_best_of_k(&inst, &model, &lp, &cfg).is_err());
    }

    #[test]
    fn policy_names_round_trip() {
        for p in [PowerPolicy::KeepLp, PowerPolicy::RescaleMax] {
            assert_eq!(p.to_string().parse::<PowerPolicy>().unwrap(), p);
        }
        assert!("max".parse::<PowerPolicy>().is_err());
    }
}
