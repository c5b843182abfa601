//! Network instances: node sets, channel gains, system constants and the
//! seeded instance generator.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Converts a power ratio from decibels to linear scale.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Relay,
    Destination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub role: Role,
    pub index: usize,
}

impl NodeId {
    pub fn source(index: usize) -> Self {
        NodeId {
            role: Role::Source,
            index,
        }
    }

    pub fn relay(index: usize) -> Self {
        NodeId {
            role: Role::Relay,
            index,
        }
    }

    pub fn destination(index: usize) -> Self {
        NodeId {
            role: Role::Destination,
            index,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.role {
            Role::Source => 'S',
            Role::Relay => 'R',
            Role::Destination => 'D',
        };
        write!(f, "{}{}", tag, self.index)
    }
}

/// Channel attenuation `gamma = 1 / d^a` for every transmitter/receiver pair
/// that appears in an SINR or interference term: source to destination,
/// source to relay (broadcast phase) and relay to destination (forwarding
/// phase).
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    n_sources: usize,
    n_relays: usize,
    n_destinations: usize,
    source_dest: Vec<f64>,
    source_relay: Vec<f64>,
    relay_dest: Vec<f64>,
}

impl GainTable {
    /// A table with every entry set to `fill`.
    pub fn filled(n_sources: usize, n_relays: usize, n_destinations: usize, fill: f64) -> Self {
        GainTable {
            n_sources,
            n_relays,
            n_destinations,
            source_dest: vec![fill; n_sources * n_destinations],
            source_relay: vec![fill; n_sources * n_relays],
            relay_dest: vec![fill; n_relays * n_destinations],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_sources, self.n_relays, self.n_destinations)
    }

    #[inline]
    pub fn source_dest(&self, i: usize, j: usize) -> f64 {
        self.source_dest[i * self.n_destinations + j]
    }

    #[inline]
    pub fn source_relay(&self, i: usize, r: usize) -> f64 {
        self.source_relay[i * self.n_relays + r]
    }

    #[inline]
    pub fn relay_dest(&self, r: usize, j: usize) -> f64 {
        self.relay_dest[r * self.n_destinations + j]
    }

    fn slot(&self, tx: NodeId, rx: NodeId) -> Result<(usize, usize)> {
        let check = |node: NodeId, count: usize| {
            if node.index < count {
                Ok(())
            } else {
                Err(Error::UnknownNode(node))
            }
        };
        match (tx.role, rx.role) {
            (Role::Source, Role::Destination) => {
                check(tx, self.n_sources)?;
                check(rx, self.n_destinations)?;
                Ok((0, tx.index * self.n_destinations + rx.index))
            }
            (Role::Source, Role::Relay) => {
                check(tx, self.n_sources)?;
                check(rx, self.n_relays)?;
                Ok((1, tx.index * self.n_relays + rx.index))
            }
            (Role::Relay, Role::Destination) => {
                check(tx, self.n_relays)?;
                check(rx, self.n_destinations)?;
                Ok((2, tx.index * self.n_destinations + rx.index))
            }
            _ => Err(Error::validation(
                "gains",
                format!("no channel is modelled from {tx} to {rx}"),
            )),
        }
    }

    pub fn get(&self, tx: NodeId, rx: NodeId) -> Result<f64> {
        let (table, k) = self.slot(tx, rx)?;
        Ok(match table {
            0 => self.source_dest[k],
            1 => self.source_relay[k],
            _ => self.relay_dest[k],
        })
    }

    pub fn set(&mut self, tx: NodeId, rx: NodeId, gamma: f64) -> Result<()> {
        let (table, k) = self.slot(tx, rx)?;
        match table {
            0 => self.source_dest[k] = gamma,
            1 => self.source_relay[k] = gamma,
            _ => self.relay_dest[k] = gamma,
        }
        Ok(())
    }

    /// All entries in canonical order: source→destination, source→relay,
    /// relay→destination, each row-major.
    pub fn entries(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut out = Vec::with_capacity(
            self.source_dest.len() + self.source_relay.len() + self.relay_dest.len(),
        );
        for i in 0..self.n_sources {
            for j in 0..self.n_destinations {
                out.push((NodeId::source(i), NodeId::destination(j), self.source_dest(i, j)));
            }
        }
        for i in 0..self.n_sources {
            for r in 0..self.n_relays {
                out.push((NodeId::source(i), NodeId::relay(r), self.source_relay(i, r)));
            }
        }
        for r in 0..self.n_relays {
            for j in 0..self.n_destinations {
                out.push((NodeId::relay(r), NodeId::destination(j), self.relay_dest(r, j)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    /// No per-source demand rows.
    Off,
    /// `sum_t x <= B_i`: the demand caps how often a source is served.
    #[default]
    AtMost,
    /// `sum_t x >= B_i`: every source must be served at least `B_i` slots.
    AtLeast,
}

/// Scalar model constants. Thresholds are stored in dB; powers in mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub beta_db: f64,
    pub beta1_db: f64,
    pub beta2_db: f64,
    pub sigma2_mw: f64,
    pub p_slot_max_mw: f64,
    pub p_slot_min_mw: f64,
    /// Relay amplification constant in the useful-signal term (dimensionless).
    pub g2: f64,
    /// Transmit power charged to every active relay when it interferes.
    pub p_relay_mw: f64,
    /// Total per-source energy budget as a fraction of `p_slot_max * slots`.
    pub budget_fraction: f64,
    pub slots: usize,
    /// Per-source demand `B_i`, in slots.
    pub demand: Vec<u32>,
    pub demand_mode: DemandMode,
    pub path_loss_a: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let (beta1_db, beta2_db) = split_thresholds_db(10.0, 5.0, 5.0);
        SystemParams {
            beta_db: 10.0,
            beta1_db,
            beta2_db,
            sigma2_mw: 1e-6,
            p_slot_max_mw: 300.0,
            p_slot_min_mw: 3.0,
            g2: 300.0,
            p_relay_mw: 300.0,
            budget_fraction: 0.3,
            slots: 8,
            demand: Vec::new(),
            demand_mode: DemandMode::AtMost,
            path_loss_a: 3.0,
        }
    }
}

/// Splits the decoding threshold `beta_db` into a direct-phase and an
/// AF-phase threshold whose linear-scale sum is exactly `beta`.
///
/// `weight1_db`/`weight2_db` give the relative emphasis of the two phases,
/// e.g. `(5, 5)` for an even split or `(4, 6)` to shift weight to the AF
/// phase. A pair that already sums to `beta` in linear scale comes back
/// unchanged.
pub fn split_thresholds_db(beta_db: f64, weight1_db: f64, weight2_db: f64) -> (f64, f64) {
    let beta = db_to_linear(beta_db);
    let w1 = db_to_linear(weight1_db);
    let w2 = db_to_linear(weight2_db);
    if ((w1 + w2) - beta).abs() <= 1e-12 * beta {
        return (weight1_db, weight2_db);
    }
    let share1 = beta * w1 / (w1 + w2);
    let share2 = beta * w2 / (w1 + w2);
    (linear_to_db(share1), linear_to_db(share2))
}

impl SystemParams {
    pub fn beta(&self) -> f64 {
        db_to_linear(self.beta_db)
    }

    pub fn beta1(&self) -> f64 {
        db_to_linear(self.beta1_db)
    }

    pub fn beta2(&self) -> f64 {
        db_to_linear(self.beta2_db)
    }

    pub fn energy_budget(&self) -> f64 {
        self.budget_fraction * self.p_slot_max_mw * self.slots as f64
    }

    pub fn with_uniform_demand(mut self, n_sources: usize, demand: u32) -> Self {
        self.demand = vec![demand; n_sources];
        self
    }

    /// Re-splits `beta` according to the weight pair; see [`split_thresholds_db`].
    pub fn with_beta_split(mut self, weight1_db: f64, weight2_db: f64) -> Self {
        let (b1, b2) = split_thresholds_db(self.beta_db, weight1_db, weight2_db);
        self.beta1_db = b1;
        self.beta2_db = b2;
        self
    }

    /// Rule violations of the scalar constants. Demand length is checked at
    /// the instance level.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &str, rule: String| out.push(Violation::new(field, rule));

        for (field, v) in [
            ("beta_db", self.beta_db),
            ("beta1_db", self.beta1_db),
            ("beta2_db", self.beta2_db),
        ] {
            if !v.is_finite() {
                push(field, "threshold must be finite".into());
            }
        }
        if self.beta_db.is_finite() && self.beta1_db.is_finite() && self.beta2_db.is_finite() {
            let sum = self.beta1() + self.beta2();
            let beta = self.beta();
            if (sum - beta).abs() > 1e-9 * beta {
                push(
                    "beta1_db/beta2_db",
                    format!(
                        "threshold-sum rule: linear(beta1)+linear(beta2) = {sum} must equal linear(beta) = {beta}"
                    ),
                );
            }
        }
        if !(self.sigma2_mw.is_finite() && self.sigma2_mw > 0.0) {
            push("sigma2_mw", "noise power must be positive and finite".into());
        }
        if !(self.p_slot_min_mw.is_finite() && self.p_slot_min_mw > 0.0) {
            push("p_slot_min_mw", "minimum slot power must be positive and finite".into());
        }
        if !(self.p_slot_max_mw.is_finite() && self.p_slot_max_mw >= self.p_slot_min_mw) {
            push(
                "p_slot_max_mw",
                "maximum slot power must be finite and at least the minimum".into(),
            );
        }
        if !(self.g2.is_finite() && self.g2 > 0.0) {
            push("g2", "amplification constant must be positive and finite".into());
        }
        if !(self.p_relay_mw.is_finite() && self.p_relay_mw >= 0.0) {
            push("p_relay_mw", "relay power must be non-negative and finite".into());
        }
        if !(self.budget_fraction.is_finite() && self.budget_fraction > 0.0) {
            push("budget_fraction", "budget fraction must be positive and finite".into());
        }
        if self.slots == 0 {
            push("slots", "slot horizon must be at least 1".into());
        }
        for (i, &b) in self.demand.iter().enumerate() {
            if b as usize > self.slots {
                push(
                    &format!("demand[{i}]"),
                    format!("demand {b} exceeds the slot horizon {}", self.slots),
                );
            }
        }
        if !(self.path_loss_a.is_finite() && self.path_loss_a > 0.0) {
            push("path_loss_a", "path-loss exponent must be positive and finite".into());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub source: usize,
    pub dest: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelayLink {
    pub source: usize,
    pub relay: usize,
    pub dest: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// `d^a` drawn uniformly in `[1, 100]` independently for every ordered pair.
    #[default]
    PerPair,
    /// Nodes placed uniformly in a 100 x 100 square; gains from Euclidean
    /// distance, floored at 1.
    Planar,
}

impl fmt::Display for DemandMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemandMode::Off => "off",
            DemandMode::AtMost => "at_most",
            DemandMode::AtLeast => "at_least",
        })
    }
}

impl std::str::FromStr for DemandMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(DemandMode::Off),
            "at_most" | "at-most" => Ok(DemandMode::AtMost),
            "at_least" | "at-least" => Ok(DemandMode::AtLeast),
            other => Err(Error::validation("demand_mode", format!("unknown demand mode '{other}'"))),
        }
    }
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_pair" | "per-pair" => Ok(Placement::PerPair),
            "planar" => Ok(Placement::Planar),
            other => Err(Error::validation("placement", format!("unknown placement '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    pub n_sources: usize,
    pub n_relays: usize,
    pub n_destinations: usize,
    pub links: Vec<Link>,
    pub relay_links: Vec<RelayLink>,
    pub gains: GainTable,
    pub params: SystemParams,
    pub seed: u64,
}

impl NetworkInstance {
    pub fn link_index(&self, source: usize, dest: usize) -> Option<usize> {
        self.links
            .iter()
            .position(|l| l.source == source && l.dest == dest)
    }

    pub fn relay_link_index(&self, source: usize, relay: usize, dest: usize) -> Option<usize> {
        self.relay_links
            .iter()
            .position(|l| l.source == source && l.relay == relay && l.dest == dest)
    }

    /// Number of 0/1 decision variables a full (cooperative) model of this
    /// instance would carry.
    pub fn binary_count(&self) -> usize {
        self.params.slots * (self.links.len() + self.relay_links.len())
    }

    /// The same instance with every relay removed.
    pub fn without_relays(&self) -> NetworkInstance {
        let mut gains = GainTable::filled(self.n_sources, 0, self.n_destinations, 1.0);
        gains.source_dest.clone_from(&self.gains.source_dest);
        NetworkInstance {
            n_relays: 0,
            relay_links: Vec::new(),
            gains,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match validate_instance(self).into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Validation {
                field: v.field,
                rule: v.rule,
            }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<NetworkInstance> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<NetworkInstance> {
        NetworkInstance::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Every rule the instance breaks; empty for a well-formed instance.
pub fn validate_instance(inst: &NetworkInstance) -> Vec<Violation> {
    let mut out = inst.params.violations();

    if inst.n_sources == 0 {
        out.push(Violation::new("n_sources", "at least one source is required"));
    }
    if inst.n_destinations == 0 {
        out.push(Violation::new("n_destinations", "at least one destination is required"));
    }
    if inst.params.demand.len() != inst.n_sources {
        out.push(Violation::new(
            "demand",
            format!(
                "expected one demand per source ({}), found {}",
                inst.n_sources,
                inst.params.demand.len()
            ),
        ));
    }

    if inst.links.is_empty() {
        out.push(Violation::new("links", "link set must be nonempty"));
    }
    let mut seen = HashSet::new();
    for (k, l) in inst.links.iter().enumerate() {
        if l.source >= inst.n_sources || l.dest >= inst.n_destinations {
            out.push(Violation::new(
                format!("links[{k}]"),
                format!("references a missing node (S{}, D{})", l.source, l.dest),
            ));
        }
        if !seen.insert(*l) {
            out.push(Violation::new(format!("links[{k}]"), "duplicate link"));
        }
    }
    let link_set: HashSet<Link> = inst.links.iter().copied().collect();
    let mut seen = HashSet::new();
    for (k, l) in inst.relay_links.iter().enumerate() {
        if l.source >= inst.n_sources || l.relay >= inst.n_relays || l.dest >= inst.n_destinations
        {
            out.push(Violation::new(
                format!("relay_links[{k}]"),
                format!(
                    "references a missing node (S{}, R{}, D{})",
                    l.source, l.relay, l.dest
                ),
            ));
        }
        if !link_set.contains(&Link {
            source: l.source,
            dest: l.dest,
        }) {
            out.push(Violation::new(
                format!("relay_links[{k}]"),
                "relay link has no matching source-destination link",
            ));
        }
        if !seen.insert(*l) {
            out.push(Violation::new(format!("relay_links[{k}]"), "duplicate relay link"));
        }
    }

    if inst.gains.dims() != (inst.n_sources, inst.n_relays, inst.n_destinations) {
        out.push(Violation::new(
            "gains",
            "gain table dimensions do not match node counts",
        ));
    } else {
        for (tx, rx, gamma) in inst.gains.entries() {
            if !(gamma.is_finite() && gamma > 0.0) {
                out.push(Violation::new(
                    format!("gains[{tx}->{rx}]"),
                    format!("positivity: gain {gamma} must be positive and finite"),
                ));
            }
        }
    }
    out
}

// ChaCha stream tags; one stream per gain pair or node position.
const STREAM_SOURCE_DEST: u64 = 1;
const STREAM_SOURCE_RELAY: u64 = 2;
const STREAM_RELAY_DEST: u64 = 3;
const STREAM_POSITION: u64 = 4;

fn pair_stream(kind: u64, tx: usize, rx: usize) -> u64 {
    (kind << 56) | ((tx as u64) << 28) | rx as u64
}

fn sample_pair_gain(seed: u64, kind: u64, tx: usize, rx: usize) -> f64 {
    let mut rng = stream_rng(seed, pair_stream(kind, tx, rx));
    let d_pow_a: f64 = rng.gen_range(1.0..=100.0);
    1.0 / d_pow_a
}

fn node_position(seed: u64, role: Role, index: usize) -> (f64, f64) {
    let mut rng = stream_rng(seed, pair_stream(STREAM_POSITION, role as usize, index));
    (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0))
}

fn planar_gain(seed: u64, a: f64, tx: NodeId, rx: NodeId) -> f64 {
    let (x0, y0) = node_position(seed, tx.role, tx.index);
    let (x1, y1) = node_position(seed, rx.role, rx.index);
    let dist = ((x0 - x1).powi(2) + (y0 - y1).powi(2)).sqrt().max(1.0);
    1.0 / dist.powf(a)
}

fn sample_gain(seed: u64, placement: Placement, a: f64, tx: NodeId, rx: NodeId) -> f64 {
    match placement {
        Placement::PerPair => {
            let kind = match (tx.role, rx.role) {
                (Role::Source, Role::Destination) => STREAM_SOURCE_DEST,
                (Role::Source, Role::Relay) => STREAM_SOURCE_RELAY,
                _ => STREAM_RELAY_DEST,
            };
            sample_pair_gain(seed, kind, tx.index, rx.index)
        }
        Placement::Planar => planar_gain(seed, a, tx, rx),
    }
}

/// Draws a random instance. Each gain comes from its own RNG stream keyed by
/// the node pair, so instances that differ only in node counts share every
/// common gain; growing `m` appends relays without touching existing gains.
///
/// Source `i` is linked to destination `i mod d`; every link may use every
/// relay.
pub fn generate_instance(
    seed: u64,
    n: usize,
    m: usize,
    d: usize,
    params: SystemParams,
    placement: Placement,
) -> Result<NetworkInstance> {
    if n == 0 {
        return Err(Error::validation("n_sources", "at least one source is required"));
    }
    if d == 0 {
        return Err(Error::validation(
            "n_destinations",
            "at least one destination is required",
        ));
    }
    if let Some(v) = params.violations().into_iter().next() {
        return Err(Error::Validation {
            field: v.field,
            rule: v.rule,
        });
    }
    if params.demand.len() != n {
        return Err(Error::validation(
            "demand",
            format!("expected {n} per-source demands, found {}", params.demand.len()),
        ));
    }

    let a = params.path_loss_a;
    let mut gains = GainTable::filled(n, m, d, 1.0);
    for i in 0..n {
        for j in 0..d {
            gains.source_dest[i * d + j] =
                sample_gain(seed, placement, a, NodeId::source(i), NodeId::destination(j));
        }
        for r in 0..m {
            gains.source_relay[i * m + r] =
                sample_gain(seed, placement, a, NodeId::source(i), NodeId::relay(r));
        }
    }
    for r in 0..m {
        for j in 0..d {
            gains.relay_dest[r * d + j] =
                sample_gain(seed, placement, a, NodeId::relay(r), NodeId::destination(j));
        }
    }

    let links: Vec<Link> = (0..n).map(|i| Link { source: i, dest: i % d }).collect();
    let relay_links = all_relay_links(&links, m);
    Ok(NetworkInstance {
        n_sources: n,
        n_relays: m,
        n_destinations: d,
        links,
        relay_links,
        gains,
        params,
        seed,
    })
}

fn all_relay_links(links: &[Link], m: usize) -> Vec<RelayLink> {
    links
        .iter()
        .flat_map(|l| {
            (0..m).map(move |r| RelayLink {
                source: l.source,
                relay: r,
                dest: l.dest,
            })
        })
        .collect()
}

/// Appends `extra` relays to `inst`, sampling only the new gains. The
/// relay-link set becomes the full product of links and relays.
pub fn extend_relays(
    inst: &NetworkInstance,
    extra: usize,
    placement: Placement,
) -> NetworkInstance {
    let (n, m0, d) = (inst.n_sources, inst.n_relays, inst.n_destinations);
    let m = m0 + extra;
    let a = inst.params.path_loss_a;
    let mut gains = GainTable::filled(n, m, d, 1.0);
    gains.source_dest.clone_from(&inst.gains.source_dest);
    for i in 0..n {
        for r in 0..m {
            gains.source_relay[i * m + r] = if r < m0 {
                inst.gains.source_relay(i, r)
            } else {
                sample_gain(inst.seed, placement, a, NodeId::source(i), NodeId::relay(r))
            };
        }
    }
    for r in 0..m {
        for j in 0..d {
            gains.relay_dest[r * d + j] = if r < m0 {
                inst.gains.relay_dest(r, j)
            } else {
                sample_gain(inst.seed, placement, a, NodeId::relay(r), NodeId::destination(j))
            };
        }
    }
    NetworkInstance {
        n_relays: m,
        relay_links: all_relay_links(&inst.links, m),
        gains,
        ..inst.clone()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Counts {
    sources: usize,
    relays: usize,
    destinations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct GainEntry {
    tx_role: Role,
    tx_index: usize,
    rx_role: Role,
    rx_index: usize,
    gamma: f64,
}

/// On-disk layout of an instance.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    seed: u64,
    counts: Counts,
    params: SystemParams,
    links: Vec<[usize; 2]>,
    relay_links: Vec<[usize; 3]>,
    gains: Vec<GainEntry>,
}

impl From<&NetworkInstance> for InstanceFile {
    fn from(inst: &NetworkInstance) -> Self {
        InstanceFile {
            seed: inst.seed,
            counts: Counts {
                sources: inst.n_sources,
                relays: inst.n_relays,
                destinations: inst.n_destinations,
            },
            params: inst.params.clone(),
            links: inst.links.iter().map(|l| [l.source, l.dest]).collect(),
            relay_links: inst
                .relay_links
                .iter()
                .map(|l| [l.source, l.relay, l.dest])
                .collect(),
            gains: inst
                .gains
                .entries()
                .into_iter()
                .map(|(tx, rx, gamma)| GainEntry {
                    tx_role: tx.role,
                    tx_index: tx.index,
                    rx_role: rx.role,
                    rx_index: rx.index,
                    gamma,
                })
                .collect(),
        }
    }
}

impl InstanceFile {
    fn into_instance(self) -> Result<NetworkInstance> {
        let Counts {
            sources: n,
            relays: m,
            destinations: d,
        } = self.counts;
        let mut gains = GainTable::filled(n, m, d, f64::NAN);
        let mut seen = HashSet::new();
        for g in &self.gains {
            let tx = NodeId {
                role: g.tx_role,
                index: g.tx_index,
            };
            let rx = NodeId {
                role: g.rx_role,
                index: g.rx_index,
            };
            if !seen.insert((tx, rx)) {
                return Err(Error::validation(
                    "gains",
                    format!("duplicate entry for {tx}->{rx}"),
                ));
            }
            gains.set(tx, rx, g.gamma)?;
        }
        if let Some((tx, rx, _)) = gains.entries().into_iter().find(|e| e.2.is_nan()) {
            return Err(Error::validation("gains", format!("missing entry for {tx}->{rx}")));
        }
        Ok(NetworkInstance {
            n_sources: n,
            n_relays: m,
            n_destinations: d,
            links: self
                .links
                .iter()
                .map(|&[source, dest]| Link { source, dest })
                .collect(),
            relay_links: self
                .relay_links
                .iter()
                .map(|&[source, relay, dest]| RelayLink {
                    source,
                    relay,
                    dest,
                })
                .collect(),
            gains,
            params: self.params,
            seed: self.seed,
        })
    }
}
