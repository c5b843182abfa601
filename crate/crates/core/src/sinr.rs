//! Interference and cooperative SINR evaluation, schedule validation, and the
//! schedule text format.
//!
//! A slot has a broadcast phase (sources transmit, relays and destinations
//! listen) and a forwarding phase (active relays amplify and forward). For a
//! link `i -> j` optionally helped by relay `r`:
//!
//! ```text
//! direct = P_i g_ij / (I_jb + s2)
//! af     = P_i g_ir g_rj G / (s2 + I_jf + (s2 + I_rb) g_rj G)
//! ```
//!
//! where `I_jb`/`I_rb` are the broadcast-phase interference at the
//! destination/relay from other sources, `I_jf` is forwarding-phase
//! interference at the destination from the other active relays (each
//! charged `p_relay`), and `G` is the amplification constant `g2`.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NetworkInstance, NodeId, Role};

/// Relative slack granted to the SINR threshold check.
pub const SINR_REL_TOL: f64 = 1e-6;
/// Relative slack on power bounds and the energy budget.
pub const POWER_REL_TOL: f64 = 1e-7;

/// Per-slot activations and powers. `x[t][l]` follows `inst.links`,
/// `y[t][k]` follows `inst.relay_links`, `power[t][i]` is in mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub slots: usize,
    pub x: Vec<Vec<bool>>,
    pub y: Vec<Vec<bool>>,
    pub power: Vec<Vec<f64>>,
}

impl Schedule {
    pub fn empty(inst: &NetworkInstance) -> Self {
        let t = inst.params.slots;
        Schedule {
            slots: t,
            x: vec![vec![false; inst.links.len()]; t],
            y: vec![vec![false; inst.relay_links.len()]; t],
            power: vec![vec![0.0; inst.n_sources]; t],
        }
    }

    /// Number of scheduled `(slot, link)` activations.
    pub fn scheduled_count(&self) -> usize {
        self.x.iter().flatten().filter(|&&on| on).count()
    }

    /// Model objective: scheduled activations divided by the slot horizon.
    pub fn objective(&self) -> f64 {
        self.scheduled_count() as f64 / self.slots as f64
    }

    pub fn normalized_throughput(&self, n_sources: usize) -> f64 {
        self.scheduled_count() as f64 / (n_sources * self.slots) as f64
    }

    /// Scheduled slots per source.
    pub fn per_source_counts(&self, inst: &NetworkInstance) -> Vec<usize> {
        let mut counts = vec![0; inst.n_sources];
        for row in &self.x {
            for (l, &on) in row.iter().enumerate() {
                if on {
                    counts[inst.links[l].source] += 1;
                }
            }
        }
        counts
    }

    /// Relay serving link `link` in slot `t`, if any (lowest index first).
    pub fn relay_of(&self, inst: &NetworkInstance, t: usize, link: usize) -> Option<usize> {
        let l = inst.links[link];
        inst.relay_links
            .iter()
            .enumerate()
            .find(|(k, rl)| self.y[t][*k] && rl.source == l.source && rl.dest == l.dest)
            .map(|(_, rl)| rl.relay)
    }

    /// Number of relay links through each relay in slot `t`.
    pub fn relay_load(&self, inst: &NetworkInstance, t: usize) -> Vec<usize> {
        relay_load(inst, &self.y[t])
    }
}

pub(crate) fn relay_load(inst: &NetworkInstance, y_t: &[bool]) -> Vec<usize> {
    let mut load = vec![0; inst.n_relays];
    for (k, &on) in y_t.iter().enumerate() {
        if on {
            load[inst.relay_links[k].relay] += 1;
        }
    }
    load
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrBreakdown {
    pub direct_term: f64,
    pub af_term: f64,
    pub total: f64,
    /// Broadcast-phase interference at the destination, mW.
    pub i_jb: f64,
    /// Forwarding-phase interference at the destination, mW.
    pub i_jf: f64,
    /// Broadcast-phase interference at the relay, mW (0 without a relay).
    pub i_rb: f64,
}

#[inline]
pub(crate) fn dest_broadcast_interference(
    inst: &NetworkInstance,
    powers: &[f64],
    dest: usize,
    excluded_source: usize,
) -> f64 {
    powers
        .iter()
        .enumerate()
        .filter(|&(m, &p)| m != excluded_source && p > 0.0)
        .map(|(m, &p)| inst.gains.source_dest(m, dest) * p)
        .sum()
}

#[inline]
pub(crate) fn relay_broadcast_interference(
    inst: &NetworkInstance,
    powers: &[f64],
    relay: usize,
    excluded_source: usize,
) -> f64 {
    powers
        .iter()
        .enumerate()
        .filter(|&(m, &p)| m != excluded_source && p > 0.0)
        .map(|(m, &p)| inst.gains.source_relay(m, relay) * p)
        .sum()
}

#[inline]
pub(crate) fn dest_forward_interference(
    inst: &NetworkInstance,
    load: &[usize],
    dest: usize,
    excluded_relay: Option<usize>,
) -> f64 {
    load.iter()
        .enumerate()
        .filter(|&(r, &n)| Some(r) != excluded_relay && n > 0)
        .map(|(r, &n)| n as f64 * inst.params.p_relay_mw * inst.gains.relay_dest(r, dest))
        .sum()
}

pub(crate) fn breakdown(
    inst: &NetworkInstance,
    powers: &[f64],
    load: &[usize],
    source: usize,
    relay: Option<usize>,
    dest: usize,
) -> SinrBreakdown {
    let s2 = inst.params.sigma2_mw;
    let i_jb = dest_broadcast_interference(inst, powers, dest, source);
    let i_jf = dest_forward_interference(inst, load, dest, relay);
    let direct = powers[source] * inst.gains.source_dest(source, dest) / (i_jb + s2);
    let (af, i_rb) = match relay {
        None => (0.0, 0.0),
        Some(r) => {
            let g2 = inst.params.g2;
            let g_rj = inst.gains.relay_dest(r, dest);
            let i_rb = relay_broadcast_interference(inst, powers, r, source);
            let af = powers[source] * inst.gains.source_relay(source, r) * g_rj * g2
                / (s2 + i_jf + (s2 + i_rb) * g_rj * g2);
            (af, i_rb)
        }
    };
    SinrBreakdown {
        direct_term: direct,
        af_term: af,
        total: direct + af,
        i_jb,
        i_jf,
        i_rb,
    }
}

fn check_slot(sched: &Schedule, t: usize) -> Result<()> {
    if t >= sched.slots || t >= sched.power.len() {
        return Err(Error::contract(format!(
            "slot {t} outside the schedule horizon {}",
            sched.slots
        )));
    }
    Ok(())
}

/// Aggregate broadcast-phase interference at `victim` (a destination or
/// relay) from every transmitting source other than `excluded_source`.
pub fn broadcast_interference(
    inst: &NetworkInstance,
    sched: &Schedule,
    t: usize,
    victim: NodeId,
    excluded_source: usize,
) -> Result<f64> {
    check_slot(sched, t)?;
    let powers = &sched.power[t];
    match victim.role {
        Role::Destination if victim.index < inst.n_destinations => Ok(
            dest_broadcast_interference(inst, powers, victim.index, excluded_source),
        ),
        Role::Relay if victim.index < inst.n_relays => Ok(relay_broadcast_interference(
            inst,
            powers,
            victim.index,
            excluded_source,
        )),
        Role::Source => Err(Error::contract(format!(
            "{victim} is a source; interference is measured at relays and destinations"
        ))),
        _ => Err(Error::UnknownNode(victim)),
    }
}

/// Forwarding-phase interference at destination `dest` from every active
/// relay other than `excluded_relay`.
pub fn forward_interference(
    inst: &NetworkInstance,
    sched: &Schedule,
    t: usize,
    dest: usize,
    excluded_relay: Option<usize>,
) -> Result<f64> {
    check_slot(sched, t)?;
    if dest >= inst.n_destinations {
        return Err(Error::UnknownNode(NodeId::destination(dest)));
    }
    if let Some(r) = excluded_relay {
        if r >= inst.n_relays {
            return Err(Error::UnknownNode(NodeId::relay(r)));
        }
    }
    let load = sched.relay_load(inst, t);
    Ok(dest_forward_interference(inst, &load, dest, excluded_relay))
}

/// SINR of the (possibly relay-assisted) transmission `source -> dest` in
/// slot `t`. Requires the link to be scheduled, and the relay link too when
/// `relay` is given.
pub fn cooperative_sinr(
    inst: &NetworkInstance,
    sched: &Schedule,
    t: usize,
    source: usize,
    relay: Option<usize>,
    dest: usize,
) -> Result<SinrBreakdown> {
    check_slot(sched, t)?;
    let link = inst
        .link_index(source, dest)
        .ok_or_else(|| Error::contract(format!("S{source}->D{dest} is not a link")))?;
    if !sched.x[t][link] {
        return Err(Error::contract(format!(
            "S{source}->D{dest} is not scheduled in slot {t}"
        )));
    }
    if let Some(r) = relay {
        let k = inst
            .relay_link_index(source, r, dest)
            .ok_or_else(|| Error::contract(format!("S{source}->R{r}->D{dest} is not a relay link")))?;
        if !sched.y[t][k] {
            return Err(Error::contract(format!(
                "S{source}->R{r}->D{dest} is not scheduled in slot {t}"
            )));
        }
    }
    let load = sched.relay_load(inst, t);
    Ok(breakdown(inst, &sched.power[t], &load, source, relay, dest))
}

/// Power a relay would actually radiate in slot `t` if it scaled the signal
/// it hears by `g2`. Diagnostic only: feasibility uses the fixed `p_relay`.
pub fn amplified_relay_power(
    inst: &NetworkInstance,
    sched: &Schedule,
    t: usize,
    relay: usize,
) -> Result<f64> {
    check_slot(sched, t)?;
    if relay >= inst.n_relays {
        return Err(Error::UnknownNode(NodeId::relay(relay)));
    }
    let received: f64 = sched.power[t]
        .iter()
        .enumerate()
        .map(|(m, &p)| inst.gains.source_relay(m, relay) * p)
        .sum();
    Ok(inst.params.g2 * (inst.params.sigma2_mw + received))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleRule {
    Shape,
    /// Combined SINR below the decoding threshold.
    Decodability,
    /// More than one destination for a source in a slot.
    OneDestination,
    /// C5: more than one relay for a source in a slot.
    RelayPerSource,
    /// C5': a relay serving more than one source in a slot.
    SourcePerRelay,
    /// C6: relay link active without its source link.
    RelayWithoutSource,
    /// C7: total energy over the budget.
    EnergyBudget,
    /// C8: power outside `{0} ∪ [p_min, p_max]` or inconsistent with activation.
    PowerBounds,
}

impl ScheduleRule {
    pub fn label(self) -> &'static str {
        match self {
            ScheduleRule::Shape => "shape",
            ScheduleRule::Decodability => "SINR",
            ScheduleRule::OneDestination => "one-destination",
            ScheduleRule::RelayPerSource => "C5",
            ScheduleRule::SourcePerRelay => "C5'",
            ScheduleRule::RelayWithoutSource => "C6",
            ScheduleRule::EnergyBudget => "C7",
            ScheduleRule::PowerBounds => "C8",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleViolation {
    pub slot: Option<usize>,
    pub rule: ScheduleRule,
    pub detail: String,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Some(t) => write!(f, "[{}] slot {t}: {}", self.rule.label(), self.detail),
            None => write!(f, "[{}] {}", self.rule.label(), self.detail),
        }
    }
}

/// Every decodability, structural and power rule the schedule breaks. The
/// decodability check uses the combined SINR against `beta`, not the split
/// thresholds.
pub fn validate_schedule(inst: &NetworkInstance, sched: &Schedule) -> Vec<ScheduleViolation> {
    let mut out = Vec::new();
    let p = &inst.params;
    let t_slots = p.slots;
    let shape_ok = sched.slots == t_slots
        && sched.x.len() == t_slots
        && sched.y.len() == t_slots
        && sched.power.len() == t_slots
        && sched.x.iter().all(|r| r.len() == inst.links.len())
        && sched.y.iter().all(|r| r.len() == inst.relay_links.len())
        && sched.power.iter().all(|r| r.len() == inst.n_sources);
    if !shape_ok {
        out.push(ScheduleViolation {
            slot: None,
            rule: ScheduleRule::Shape,
            detail: "schedule dimensions do not match the instance".into(),
        });
        return out;
    }

    let beta = p.beta();
    let p_lo = p.p_slot_min_mw * (1.0 - POWER_REL_TOL);
    let p_hi = p.p_slot_max_mw * (1.0 + POWER_REL_TOL);
    for t in 0..t_slots {
        let x = &sched.x[t];
        let y = &sched.y[t];
        let powers = &sched.power[t];

        let mut dest_count = vec![0usize; inst.n_sources];
        for (l, link) in inst.links.iter().enumerate() {
            if x[l] {
                dest_count[link.source] += 1;
            }
        }
        for (i, &power) in powers.iter().enumerate() {
            if !power.is_finite() || power < 0.0 {
                out.push(ScheduleViolation {
                    slot: Some(t),
                    rule: ScheduleRule::PowerBounds,
                    detail: format!("S{i} has invalid power {power}"),
                });
                continue;
            }
            if dest_count[i] > 1 {
                out.push(ScheduleViolation {
                    slot: Some(t),
                    rule: ScheduleRule::OneDestination,
                    detail: format!("S{i} transmits to {} destinations", dest_count[i]),
                });
            }
            if dest_count[i] > 0 && !(p_lo..=p_hi).contains(&power) {
                out.push(ScheduleViolation {
                    slot: Some(t),
                    rule: ScheduleRule::PowerBounds,
                    detail: format!(
                        "S{i} is active with power {power} mW outside [{}, {}]",
                        p.p_slot_min_mw, p.p_slot_max_mw
                    ),
                });
            }
            if dest_count[i] == 0 && power != 0.0 {
                out.push(ScheduleViolation {
                    slot: Some(t),
                    rule: ScheduleRule::PowerBounds,
                    detail: format!("S{i} is idle but has power {power} mW"),
                });
            }
        }

        let mut per_source = vec![0usize; inst.n_sources];
        let mut per_relay = vec![0usize; inst.n_relays];
        for (k, rl) in inst.relay_links.iter().enumerate() {
            if !y[k] {
                continue;
            }
            per_source[rl.source] += 1;
            per_relay[rl.relay] += 1;
            let active = inst
                .link_index(rl.source, rl.dest)
                .map(|l| x[l])
                .unwrap_or(false);
            if !active {
                out.push(ScheduleViolation {
                    slot: Some(t),
                    rule: ScheduleRule::RelayWithoutSource,
                    detail: format!(
                        "relay link S{}->R{}->D{} is active but S{}->D{} is not",
                        rl.source, rl.relay, rl.dest, rl.source, rl.dest
                    ),
                });
            }
        }
        for (i, &c) in per_source.iter().enumerate() {
            if c > 1 {
                out.push(ScheduleViolation {
                    slot: Some(t),
                    rule: ScheduleRule::RelayPerSource,
                    detail: format!("S{i} uses {c} relays"),
                });
            }
        }
        for (r, &c) in per_relay.iter().enumerate() {
            if c > 1 {
                out.push(ScheduleViolation {
                    slot: Some(t),
                    rule: ScheduleRule::SourcePerRelay,
                    detail: format!("R{r} serves {c} relay links"),
                });
            }
        }

        let load = relay_load(inst, y);
        for (l, link) in inst.links.iter().enumerate() {
            if !x[l] {
                continue;
            }
            let relay = sched.relay_of(inst, t, l);
            let b = breakdown(inst, powers, &load, link.source, relay, link.dest);
            if !(b.total >= beta * (1.0 - SINR_REL_TOL)) {
                out.push(ScheduleViolation {
                    slot: Some(t),
                    rule: ScheduleRule::Decodability,
                    detail: format!(
                        "S{}->D{}{}: SINR {:.6} (direct {:.6} + AF {:.6}) below beta {:.6}",
                        link.source,
                        link.dest,
                        relay.map(|r| format!(" via R{r}")).unwrap_or_default(),
                        b.total,
                        b.direct_term,
                        b.af_term,
                        beta
                    ),
                });
            }
        }
    }

    let budget = p.energy_budget();
    for i in 0..inst.n_sources {
        let energy: f64 = sched.power.iter().map(|row| row[i]).sum();
        if energy > budget * (1.0 + POWER_REL_TOL) {
            out.push(ScheduleViolation {
                slot: None,
                rule: ScheduleRule::EnergyBudget,
                detail: format!("S{i} spends {energy} mW over the horizon, budget {budget}"),
            });
        }
    }
    out
}

/// Renders the schedule as one record per active transmission:
/// `slot source dest relay-or-dash power_mw`.
pub fn write_schedule(inst: &NetworkInstance, sched: &Schedule) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# coopsched schedule");
    let _ = writeln!(out, "slots {}", sched.slots);
    let _ = writeln!(out, "# slot source dest relay power_mw");
    for t in 0..sched.slots {
        for (l, link) in inst.links.iter().enumerate() {
            if !sched.x[t][l] {
                continue;
            }
            let power = sched.power[t][link.source];
            let relays: Vec<usize> = inst
                .relay_links
                .iter()
                .enumerate()
                .filter(|(k, rl)| {
                    sched.y[t][*k] && rl.source == link.source && rl.dest == link.dest
                })
                .map(|(_, rl)| rl.relay)
                .collect();
            if relays.is_empty() {
                let _ = writeln!(out, "{t} {} {} - {power:?}", link.source, link.dest);
            }
            for r in relays {
                let _ = writeln!(out, "{t} {} {} {r} {power:?}", link.source, link.dest);
            }
        }
    }
    out
}

/// Parses the format produced by [`write_schedule`] against `inst`.
pub fn parse_schedule(inst: &NetworkInstance, text: &str) -> Result<Schedule> {
    let mut sched: Option<Schedule> = None;
    let mut power_set: Vec<Vec<bool>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line, msg };
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields[0] == "slots" {
            if sched.is_some() {
                return Err(err("duplicate 'slots' directive".into()));
            }
            let slots: usize = fields
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("expected 'slots <count>'".into()))?;
            if slots != inst.params.slots {
                return Err(err(format!(
                    "schedule has {slots} slots, instance has {}",
                    inst.params.slots
                )));
            }
            let empty = Schedule::empty(inst);
            power_set = vec![vec![false; inst.n_sources]; slots];
            sched = Some(empty);
            continue;
        }
        let sched = sched
            .as_mut()
            .ok_or_else(|| err("records before the 'slots' directive".into()))?;
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |s: &str, what: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| err(format!("invalid {what} '{s}'")))
        };
        let t = num(fields[0], "slot")?;
        let i = num(fields[1], "source")?;
        let j = num(fields[2], "destination")?;
        let relay = match fields[3] {
            "-" => None,
            s => Some(num(s, "relay")?),
        };
        let power: f64 = fields[4]
            .parse()
            .map_err(|_| err(format!("invalid power '{}'", fields[4])))?;
        if t >= sched.slots {
            return Err(err(format!("slot {t} outside horizon {}", sched.slots)));
        }
        let l = inst
            .link_index(i, j)
            .ok_or_else(|| err(format!("S{i}->D{j} is not a link of the instance")))?;
        sched.x[t][l] = true;
        if let Some(r) = relay {
            let k = inst
                .relay_link_index(i, r, j)
                .ok_or_else(|| err(format!("S{i}->R{r}->D{j} is not a relay link")))?;
            sched.y[t][k] = true;
        }
        if power_set[t][i] && sched.power[t][i].to_bits() != power.to_bits() {
            return Err(err(format!("conflicting powers for S{i} in slot {t}")));
        }
        power_set[t][i] = true;
        sched.power[t][i] = power;
    }
    sched.ok_or(Error::Parse {
        line: 0,
        msg: "missing 'slots' directive".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, GainTable, Link, Placement, RelayLink, SystemParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Two sources, two relays, two destinations with hand-set gains.
    fn toy() -> NetworkInstance {
        let mut params = SystemParams::default().with_uniform_demand(2, 1);
        params.slots = 1;
        let links = vec![Link { source: 0, dest: 0 }, Link { source: 1, dest: 1 }];
        let relay_links = vec![
            RelayLink { source: 0, relay: 0, dest: 0 },
            RelayLink { source: 0, relay: 1, dest: 0 },
            RelayLink { source: 1, relay: 0, dest: 1 },
            RelayLink { source: 1, relay: 1, dest: 1 },
        ];
        NetworkInstance {
            n_sources: 2,
            n_relays: 2,
            n_destinations: 2,
            links,
            relay_links,
            gains: GainTable::filled(2, 2, 2, 0.01),
            params,
            seed: 0,
        }
    }

    #[test]
    fn broadcast_interference_examples() {
        let inst = toy();
        let mut s = Schedule::empty(&inst);
        s.x[0][0] = true;
        s.power[0][0] = 300.0;
        // no other active source
        let v = broadcast_interference(&inst, &s, 0, NodeId::destination(0), 0).unwrap();
        assert_eq!(v, 0.0);
        // one interferer at 300 mW through gain 0.01
        let v = broadcast_interference(&inst, &s, 0, NodeId::destination(1), 1).unwrap();
        assert_relative_eq!(v, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn broadcast_interference_two_terms() {
        let mut inst = toy();
        let params = SystemParams::default().with_uniform_demand(3, 1);
        inst.n_sources = 3;
        inst.params = SystemParams { slots: 1, ..params };
        inst.gains = GainTable::filled(3, 2, 2, 0.01);
        inst.gains.set(NodeId::source(2), NodeId::destination(0), 0.05).unwrap();
        let mut s = Schedule::empty(&inst);
        s.power[0] = vec![50.0, 300.0, 100.0];
        let v = broadcast_interference(&inst, &s, 0, NodeId::destination(0), 0).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn interference_rejects_bad_nodes() {
        let inst = toy();
        let s = Schedule::empty(&inst);
        assert!(matches!(
            broadcast_interference(&inst, &s, 0, NodeId::source(0), 1),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            broadcast_interference(&inst, &s, 0, NodeId::relay(9), 1),
            Err(Error::UnknownNode(_))
        ));
        assert!(forward_interference(&inst, &s, 0, 5, None).is_err());
    }

    #[test]
    fn forward_interference_examples() {
        let mut inst = toy();
        inst.gains.set(NodeId::relay(1), NodeId::destination(0), 0.02).unwrap();
        let mut s = Schedule::empty(&inst);
        assert_eq!(forward_interference(&inst, &s, 0, 0, None).unwrap(), 0.0);
        s.x[0][1] = true;
        s.y[0][3] = true; // S1 -> R1 -> D1
        let v = forward_interference(&inst, &s, 0, 0, None).unwrap();
        assert_relative_eq!(v, 6.0, max_relative = 1e-12);
        // the serving relay itself is excluded
        assert_eq!(forward_interference(&inst, &s, 0, 0, Some(1)).unwrap(), 0.0);
    }

    #[test]
    fn direct_only_sinr_is_snr() {
        let mut inst = toy();
        inst.gains.set(NodeId::source(0), NodeId::destination(0), 0.001).unwrap();
        let mut s = Schedule::empty(&inst);
        s.x[0][0] = true;
        s.power[0][0] = 300.0;
        let b = cooperative_sinr(&inst, &s, 0, 0, None, 0).unwrap();
        assert_relative_eq!(b.total, 3e5, max_relative = 1e-12);
        assert_eq!(b.af_term, 0.0);
    }

    #[test]
    fn relayed_sinr_matches_hand_evaluation() {
        let mut inst = toy();
        inst.gains.set(NodeId::source(0), NodeId::relay(0), 0.1).unwrap();
        inst.gains.set(NodeId::relay(0), NodeId::destination(0), 0.1).unwrap();
        let mut s = Schedule::empty(&inst);
        s.x[0][0] = true;
        s.y[0][0] = true;
        s.power[0][0] = 300.0;
        let b = cooperative_sinr(&inst, &s, 0, 0, Some(0), 0).unwrap();
        // 300 * 0.1 * 0.1 * 300 / (1e-6 + 1e-6 * 0.1 * 300)
        let expected_af = 900.0 / (1e-6 + 1e-6 * 0.1 * 300.0);
        assert_relative_eq!(b.af_term, expected_af, max_relative = 1e-12);
        assert_relative_eq!(b.direct_term, 300.0 * 0.01 / 1e-6, max_relative = 1e-12);
        assert_relative_eq!(b.total, b.direct_term + b.af_term, max_relative = 1e-15);
    }

    #[test]
    fn doubling_noise_halves_direct_term() {
        let mut inst = toy();
        let mut s = Schedule::empty(&inst);
        s.x[0][0] = true;
        s.power[0][0] = 120.0;
        let a = cooperative_sinr(&inst, &s, 0, 0, None, 0).unwrap();
        inst.params.sigma2_mw *= 2.0;
        let b = cooperative_sinr(&inst, &s, 0, 0, None, 0).unwrap();
        assert_relative_eq!(b.direct_term, a.direct_term / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn sinr_requires_scheduled_link() {
        let inst = toy();
        let mut s = Schedule::empty(&inst);
        assert!(matches!(
            cooperative_sinr(&inst, &s, 0, 0, None, 0),
            Err(Error::Contract(_))
        ));
        s.x[0][0] = true;
        assert!(matches!(
            cooperative_sinr(&inst, &s, 0, 0, Some(1), 0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn af_term_tends_to_relay_snr_limit() {
        // as g_rj * G vanishes from the denominator the AF term approaches
        // P g_ir g_rj G / (s2 + I_jf)
        let mut inst = toy();
        inst.params.g2 = 1e-9;
        let mut s = Schedule::empty(&inst);
        s.x[0][0] = true;
        s.y[0][0] = true;
        s.power[0][0] = 300.0;
        let b = cooperative_sinr(&inst, &s, 0, 0, Some(0), 0).unwrap();
        let limit = 300.0 * 0.01 * 0.01 * 1e-9 / inst.params.sigma2_mw;
        assert_relative_eq!(b.af_term, limit, max_relative = 1e-6);
    }

    #[test]
    fn empty_schedule_is_valid() {
        let inst = toy();
        assert!(validate_schedule(&inst, &Schedule::empty(&inst)).is_empty());
    }

    #[test]
    fn single_strong_link_is_valid() {
        let inst = toy();
        let mut s = Schedule::empty(&inst);
        s.x[0][0] = true;
        s.power[0][0] = 80.0;
        assert!(validate_schedule(&inst, &s).is_empty());
    }

    #[test]
    fn relay_without_source_violates_c6() {
        let inst = toy();
        let mut s = Schedule::empty(&inst);
        s.y[0][0] = true;
        let v = validate_schedule(&inst, &s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, ScheduleRule::RelayWithoutSource);
        assert!(v[0].to_string().contains("C6"));
    }

    #[test]
    fn structural_violations_are_reported() {
        let inst = toy();
        let mut s = Schedule::empty(&inst);
        s.x[0] = vec![true, true];
        s.y[0] = vec![true, true, false, true];
        s.power[0] = vec![300.0, 1.0];
        let rules: Vec<ScheduleRule> = validate_schedule(&inst, &s).iter().map(|v| v.rule).collect();
        assert!(rules.contains(&ScheduleRule::RelayPerSource));
        assert!(rules.contains(&ScheduleRule::SourcePerRelay));
        assert!(rules.contains(&ScheduleRule::PowerBounds));
        assert!(rules.contains(&ScheduleRule::Decodability));
    }

    #[test]
    fn idle_power_and_budget_are_checked() {
        let mut inst = toy();
        inst.params.budget_fraction = 0.1;
        let mut s = Schedule::empty(&inst);
        s.power[0][1] = 5.0;
        s.x[0][0] = true;
        s.power[0][0] = 300.0;
        let rules: Vec<ScheduleRule> = validate_schedule(&inst, &s).iter().map(|v| v.rule).collect();
        assert!(rules.contains(&ScheduleRule::PowerBounds));
        assert!(rules.contains(&ScheduleRule::EnergyBudget));
    }

    proptest! {
        #[test]
        fn adding_an_interferer_never_raises_sinr(
            seed in 0u64..500,
            extra in 3.0f64..300.0,
        ) {
            let params = SystemParams { slots: 1, ..SystemParams::default() }.with_uniform_demand(3, 1);
            let inst = generate_instance(seed, 3, 2, 3, params, Placement::PerPair).unwrap();
            let mut s = Schedule::empty(&inst);
            s.x[0][0] = true;
            s.y[0][0] = true; // S0 via R0
            s.power[0][0] = 200.0;
            s.x[0][1] = true;
            s.power[0][1] = 50.0;
            let before = cooperative_sinr(&inst, &s, 0, 0, Some(0), 0).unwrap();
            s.x[0][2] = true;
            s.power[0][2] = extra;
            let k = inst.relay_link_index(2, 1, 2).unwrap();
            s.y[0][k] = true;
            let after = cooperative_sinr(&inst, &s, 0, 0, Some(0), 0).unwrap();
            prop_assert!(after.direct_term <= before.direct_term);
            prop_assert!(after.af_term <= before.af_term);
            prop_assert!(after.total <= before.total);
        }

        #[test]
        fn schedule_text_round_trips(seed in 0u64..1000, bits in proptest::collection::vec(any::<bool>(), 64)) {
            let params = SystemParams { slots: 3, ..SystemParams::default() }.with_uniform_demand(3, 3);
            let inst = generate_instance(seed, 3, 2, 2, params, Placement::PerPair).unwrap();
            let mut s = Schedule::empty(&inst);
            let mut it = bits.into_iter().cycle();
            for t in 0..3 {
                for l in 0..inst.links.len() {
                    if it.next().unwrap() {
                        s.x[t][l] = true;
                        s.power[t][inst.links[l].source] = 3.0 + (seed as f64) * 0.137 + l as f64 / 3.0;
                        for (k, rl) in inst.relay_links.iter().enumerate() {
                            if rl.source == inst.links[l].source && it.next().unwrap() {
                                s.y[t][k] = true;
                            }
                        }
                    }
                }
            }
            let text = write_schedule(&inst, &s);
            prop_assert_eq!(parse_schedule(&inst, &text).unwrap(), s);
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let inst = toy();
        let err = parse_schedule(&inst, "slots 1\n0 0 1 - 3.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_schedule(&inst, "0 0 0 - 3.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_schedule(&inst, "slots 1\n0 0 0 - 3.0\n0 0 0 1 4.0\n").unwrap_err();
        assert!(err.to_string().contains("conflicting"));
    }
}
