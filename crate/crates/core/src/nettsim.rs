//! Discrete-event simulator for the hierarchical ZigBee testbed.
//!
//! Edges and routers each originate one packet per emission period. Packets
//! hop along a next-hop table toward the coordinator; an attack phase
//! rewrites that table (a redirection attack). Every hop adds a lognormal
//! link delay. A packet that revisits a node or reaches a node without a
//! route is dropped with the hops it completed; packets that reach the
//! attacker are absorbed there.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MS_PER_MINUTE: u64 = 60_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    E1,
    E2,
    E3,
    E4,
    R1,
    R2,
    R3,
    C,
    A,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Coordinator,
    Router,
    Edge,
    Attacker,
}

impl Node {
    /// All nodes, in feature-schema order.
    pub const ALL: [Node; 9] = [
        Node::E1,
        Node::E2,
        Node::E3,
        Node::E4,
        Node::R1,
        Node::R2,
        Node::R3,
        Node::C,
        Node::A,
    ];

    pub const ROUTERS: [Node; 3] = [Node::R1, Node::R2, Node::R3];

    pub fn role(self) -> Role {
        match self {
            Node::E1 | Node::E2 | Node::E3 | Node::E4 => Role::Edge,
            Node::R1 | Node::R2 | Node::R3 => Role::Router,
            Node::C => Role::Coordinator,
            Node::A => Role::Attacker,
        }
    }

    pub fn index(self) -> usize {
        Node::ALL.iter().position(|&n| n == self).expect("node listed in ALL")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Node::E1 => "E1",
            Node::E2 => "E2",
            Node::E3 => "E3",
            Node::E4 => "E4",
            Node::R1 => "R1",
            Node::R2 => "R2",
            Node::R3 => "R3",
            Node::C => "C",
            Node::A => "A",
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Node::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown node `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    I,
    II,
    III,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::I, Scenario::II, Scenario::III];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::I => "I",
            Scenario::II => "II",
            Scenario::III => "III",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scenario `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Attack,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Attack => "attack",
        }
    }

    pub fn is_attack(self) -> bool {
        self == Label::Attack
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Label::Normal),
            "attack" => Ok(Label::Attack),
            _ => Err(Error::Parse(format!("unknown label `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrafficType {
    Data,
    Ack,
    Control,
}

impl TrafficType {
    pub const ALL: [TrafficType; 3] = [TrafficType::Data, TrafficType::Ack, TrafficType::Control];

    /// Fixed 8:1:1 cycle over a node's packet sequence.
    pub fn for_sequence(k: u64) -> TrafficType {
        match k % 10 {
            8 => TrafficType::Ack,
            9 => TrafficType::Control,
            _ => TrafficType::Data,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrafficType::Data => "data",
            TrafficType::Ack => "ack",
            TrafficType::Control => "control",
        }
    }
}

impl FromStr for TrafficType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrafficType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown traffic type `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayModel {
    /// Median per-link delay (lognormal μ = ln median).
    pub median_ms: f64,
    /// Lognormal shape σ.
    pub sigma: f64,
    /// Extra link traversals on any hop into the attacker.
    pub attacker_detour_hops: u32,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            median_ms: 20.0,
            sigma: 0.5,
            attacker_detour_hops: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emission {
    pub edge_period_ms: u64,
    pub router_period_ms: u64,
}

impl Default for Emission {
    fn default() -> Self {
        Emission {
            edge_period_ms: 1000,
            router_period_ms: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Routes {
    /// Next hop of every forwarding node when no scenario override applies.
    pub base: BTreeMap<Node, Node>,
    /// Per-scenario normal next hops, overlaid on `base`.
    pub normal: BTreeMap<Scenario, BTreeMap<Node, Node>>,
    /// Per-scenario redirections; a node with several options cycles through
    /// them minute by minute during the attack phase.
    pub attack: BTreeMap<Scenario, BTreeMap<Node, Vec<Node>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub delay: DelayModel,
    pub emission: Emission,
    pub routes: Routes,
}

fn table(pairs: &[(Node, Node)]) -> BTreeMap<Node, Node> {
    pairs.iter().copied().collect()
}

impl Default for Topology {
    /// Four edges, three routers, the coordinator and an attacker, with the
    /// routing tables of the three attack scenarios.
    fn default() -> Self {
        use Node::*;
        let base = table(&[(E1, R1), (E2, R1), (E3, R3), (E4, R2), (R1, C), (R2, C), (R3, C)]);
        let normal = BTreeMap::from([
            (Scenario::I, table(&[(E1, R1), (E2, R1), (E3, R3), (E4, R2)])),
            (Scenario::II, table(&[(R1, C), (R2, C), (R3, R2)])),
            (
                Scenario::III,
                table(&[(E1, R1), (E2, R1), (E3, R3), (E4, R2), (R1, C), (R2, C), (R3, C)]),
            ),
        ]);
        let attack = BTreeMap::from([
            (
                Scenario::I,
                BTreeMap::from([
                    (E1, vec![R2, R3, C]),
                    (E2, vec![R2, R3, C]),
                    (E3, vec![R1, R2, C]),
                    (E4, vec![R1, R3, C]),
                ]),
            ),
            (
                Scenario::II,
                BTreeMap::from([(R1, vec![R2, R3]), (R2, vec![R1]), (R3, vec![R1, C])]),
            ),
            (
                Scenario::III,
                [E1, E2, E3, E4, R1, R2, R3]
                    .into_iter()
                    .map(|n| (n, vec![A]))
                    .collect(),
            ),
        ]);
        Topology {
            delay: DelayModel::default(),
            emission: Emission::default(),
            routes: Routes {
                base,
                normal,
                attack,
            },
        }
    }
}

impl Topology {
    /// Next-hop table for normal operation under `scenario` (base table
    /// when `None`).
    pub fn normal_routes(&self, scenario: Option<Scenario>) -> BTreeMap<Node, Node> {
        let mut routes = self.routes.base.clone();
        if let Some(over) = scenario.and_then(|s| self.routes.normal.get(&s)) {
            routes.extend(over.iter().map(|(k, v)| (*k, *v)));
        }
        routes
    }

    /// Next-hop table during minute `minute` of a `scenario` attack.
    pub fn attack_routes(&self, scenario: Scenario, minute: usize) -> BTreeMap<Node, Node> {
        let mut routes = self.normal_routes(Some(scenario));
        if let Some(over) = self.routes.attack.get(&scenario) {
            for (node, options) in over {
                if !options.is_empty() {
                    routes.insert(*node, options[minute % options.len()]);
                }
            }
        }
        routes
    }

    /// Checks that normal routing from every source reaches C without loops,
    /// under the base table and every scenario's normal table.
    pub fn validate(&self) -> Result<()> {
        if self.delay.median_ms <= 0.0 || self.delay.sigma < 0.0 || !self.delay.median_ms.is_finite() {
            return Err(Error::Config("delay model needs median_ms > 0 and sigma >= 0".into()));
        }
        if self.emission.edge_period_ms == 0 || self.emission.router_period_ms == 0 {
            return Err(Error::Config("emission periods must be positive".into()));
        }
        let tables = std::iter::once(None).chain(Scenario::ALL.into_iter().map(Some));
        for scenario in tables {
            let routes = self.normal_routes(scenario);
            for &src in Node::ALL.iter().filter(|n| is_source(**n)) {
                let mut at = src;
                let mut seen = vec![src];
                while at != Node::C {
                    let next = routes.get(&at).copied().ok_or_else(|| {
                        Error::Config(format!("{at} has no normal route (scenario {scenario:?})"))
                    })?;
                    if seen.contains(&next) {
                        return Err(Error::Config(format!(
                            "normal routes loop at {next} (scenario {scenario:?})"
                        )));
                    }
                    seen.push(next);
                    at = next;
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let topo: Topology = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn is_source(node: Node) -> bool {
    matches!(node.role(), Role::Edge | Role::Router)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Normal,
    Attack,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub minutes: f64,
    pub mode: Mode,
    /// Required for attack phases; for normal phases selects that
    /// scenario's normal routing table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
}

impl Phase {
    pub fn normal(minutes: f64, scenario: Option<Scenario>) -> Phase {
        Phase {
            minutes,
            mode: Mode::Normal,
            scenario,
        }
    }

    pub fn attack(minutes: f64, scenario: Scenario) -> Phase {
        Phase {
            minutes,
            mode: Mode::Attack,
            scenario: Some(scenario),
        }
    }

    fn duration_ms(&self) -> u64 {
        (self.minutes * MS_PER_MINUTE as f64).round() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSchedule {
    pub session_id: String,
    pub seed: u64,
    #[serde(default, rename = "phase")]
    pub phases: Vec<Phase>,
}

impl SessionSchedule {
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.minutes > 0.0 && p.minutes.is_finite()) {
                return Err(Error::Config(format!(
                    "phase {i} of session `{}` has non-positive duration",
                    self.session_id
                )));
            }
            if p.mode == Mode::Attack && p.scenario.is_none() {
                return Err(Error::Config(format!(
                    "attack phase {i} of session `{}` names no scenario",
                    self.session_id
                )));
            }
        }
        if self.session_id.contains(',') || self.session_id.contains('\n') {
            return Err(Error::Config("session id may not contain ',' or newlines".into()));
        }
        Ok(())
    }

    pub fn total_minutes(&self) -> f64 {
        self.phases.iter().map(|p| p.minutes).sum()
    }

    pub fn total_ms(&self) -> u64 {
        self.phases.iter().map(Phase::duration_ms).sum()
    }

    /// Number of complete one-minute windows in the session; a trailing
    /// partial minute is not a window.
    pub fn num_windows(&self) -> usize {
        (self.total_ms() / MS_PER_MINUTE) as usize
    }

    /// Phase active at simulated time `t_ms`, with its start time.
    fn phase_at(&self, t_ms: u64) -> Option<(&Phase, u64)> {
        let mut start = 0;
        for p in &self.phases {
            let end = start + p.duration_ms();
            if t_ms < end {
                return Some((p, start));
            }
            start = end;
        }
        None
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: SessionSchedule = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PacketRecord {
    pub packet_id: u64,
    pub session_id: String,
    pub src: Node,
    pub intended_dst: Node,
    /// (node, arrival time in ms); the first entry is the emission.
    pub hops: Vec<(Node, u64)>,
    pub kind: TrafficType,
    pub label: Label,
}

impl PacketRecord {
    pub fn emitted_at(&self) -> u64 {
        self.hops[0].1
    }

    pub fn final_node(&self) -> Node {
        self.hops.last().expect("hops nonempty").0
    }

    pub fn delivered(&self) -> bool {
        self.final_node() == self.intended_dst
    }

    pub fn visits(&self, node: Node) -> bool {
        self.hops.iter().any(|(n, _)| *n == node)
    }

    pub fn end_to_end_delay(&self) -> u64 {
        self.hops.last().expect("hops nonempty").1 - self.hops[0].1
    }

    pub fn first_hop_delay(&self) -> Option<u64> {
        (self.hops.len() >= 2).then(|| self.hops[1].1 - self.hops[0].1)
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len() - 1
    }

    fn hop_path(&self) -> String {
        self.hops
            .iter()
            .map(|(n, t)| format!("{n}:{t}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Routing-table epoch in effect when a packet was emitted.
struct Epoch {
    routes: BTreeMap<Node, Node>,
    label: Label,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Arrival {
    time: u64,
    seq: u64,
    packet: usize,
}

/// Simulates one session. Records come back in emission order, which is
/// also time order of their first hop.
pub fn generate_session(topology: &Topology, schedule: &SessionSchedule) -> Result<Vec<PacketRecord>> {
    topology.validate()?;
    schedule.validate()?;
    let total = schedule.total_ms();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let link = LogNormal::new(topology.delay.median_ms.ln(), topology.delay.sigma)
        .map_err(|e| Error::Config(format!("delay model: {e}")))?;

    // Emission times: each source starts at a random offset inside its period.
    let mut emissions: Vec<(u64, Node, u64)> = Vec::new();
    for &node in Node::ALL.iter().filter(|n| is_source(**n)) {
        let period = match node.role() {
            Role::Edge => topology.emission.edge_period_ms,
            _ => topology.emission.router_period_ms,
        };
        let offset = rng.random_range(0..period);
        let mut k = 0u64;
        let mut t = offset;
        while t < total {
            emissions.push((t, node, k));
            k += 1;
            t += period;
        }
    }
    emissions.sort_by_key(|&(t, node, _)| (t, node));

    // Routing epochs are keyed by (phase index, attack minute).
    let mut epochs: BTreeMap<(usize, usize), Epoch> = BTreeMap::new();
    let mut packets = Vec::with_capacity(emissions.len());
    let mut epoch_of = Vec::with_capacity(emissions.len());
    for (id, &(t, node, k)) in emissions.iter().enumerate() {
        let (phase, start) = schedule.phase_at(t).expect("emission inside the session");
        let phase_idx = schedule
            .phases
            .iter()
            .position(|p| std::ptr::eq(p, phase))
            .expect("phase belongs to schedule");
        let minute = ((t - start) / MS_PER_MINUTE) as usize;
        let key = match phase.mode {
            Mode::Normal => (phase_idx, 0),
            Mode::Attack => (phase_idx, minute),
        };
        epochs.entry(key).or_insert_with(|| match phase.mode {
            Mode::Normal => Epoch {
                routes: topology.normal_routes(phase.scenario),
                label: Label::Normal,
            },
            Mode::Attack => Epoch {
                routes: topology.attack_routes(phase.scenario.expect("validated"), minute),
                label: Label::Attack,
            },
        });
        epoch_of.push(key);
        packets.push(PacketRecord {
            packet_id: id as u64,
            session_id: schedule.session_id.clone(),
            src: node,
            intended_dst: Node::C,
            hops: vec![(node, t)],
            kind: TrafficType::for_sequence(k),
            label: epochs[&key].label,
        });
    }

    let mut queue: BinaryHeap<Reverse<Arrival>> = packets
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Reverse(Arrival {
                time: p.emitted_at(),
                seq: i as u64,
                packet: i,
            })
        })
        .collect();
    let mut seq = packets.len() as u64;

    while let Some(Reverse(arrival)) = queue.pop() {
        let packet = &mut packets[arrival.packet];
        let at = packet.final_node();
        if at == Node::C || at == Node::A {
            continue;
        }
        let routes = &epochs[&epoch_of[arrival.packet]].routes;
        let Some(&next) = routes.get(&at) else {
            continue; // no route: dropped here
        };
        if packet.visits(next) {
            continue; // loop: dropped before revisiting
        }
        let traversals = 1 + if next == Node::A {
            topology.delay.attacker_detour_hops
        } else {
            0
        };
        let delay: u64 = (0..traversals)
            .map(|_| (link.sample(&mut rng).round() as u64).max(1))
            .sum();
        let time = arrival.time + delay;
        packet.hops.push((next, time));
        queue.push(Reverse(Arrival {
            time,
            seq,
            packet: arrival.packet,
        }));
        seq += 1;
    }
    Ok(packets)
}

/// Train/validation logs plus one test session per scenario.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub train: Vec<PacketRecord>,
    pub val: Vec<PacketRecord>,
    pub tests: BTreeMap<Scenario, Vec<PacketRecord>>,
    pub schedules: Vec<SessionSchedule>,
}

/// Schedules for the standard corpus: 300 min of normal training traffic,
/// 60 min of validation, and a 20/5/10-minute normal/attack/normal test
/// session per scenario, all multiplied by `scale`.
///
/// Normal training and validation traffic rotates through the three
/// scenarios' normal routing tables in equal thirds so every normal
/// configuration seen at test time is represented.
pub fn standard_schedules(seed: u64, scale: f64) -> Result<Vec<SessionSchedule>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("scale must be positive (got {scale})")));
    }
    let normal_thirds = |minutes: f64| -> Vec<Phase> {
        Scenario::ALL
            .iter()
            .map(|&s| Phase::normal(minutes * scale / 3.0, Some(s)))
            .collect()
    };
    let mut schedules = vec![
        SessionSchedule {
            session_id: "train".into(),
            seed: derive_seed(seed, 0),
            phases: normal_thirds(300.0),
        },
        SessionSchedule {
            session_id: "val".into(),
            seed: derive_seed(seed, 1),
            phases: normal_thirds(60.0),
        },
    ];
    for (i, &s) in Scenario::ALL.iter().enumerate() {
        schedules.push(SessionSchedule {
            session_id: format!("test_{s}"),
            seed: derive_seed(seed, 2 + i as u64),
            phases: vec![
                Phase::normal(20.0 * scale, Some(s)),
                Phase::attack(5.0 * scale, s),
                Phase::normal(10.0 * scale, Some(s)),
            ],
        });
    }
    Ok(schedules)
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 step so neighbouring run seeds give unrelated sessions
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn standard_corpus(topology: &Topology, seed: u64, scale: f64) -> Result<Corpus> {
    let schedules = standard_schedules(seed, scale)?;
    let mut logs: Vec<Vec<PacketRecord>> = schedules
        .iter()
        .map(|s| generate_session(topology, s))
        .collect::<Result<_>>()?;
    let tests = Scenario::ALL.into_iter().zip(logs.drain(2..)).collect();
    let val = logs.pop().expect("val log");
    let train = logs.pop().expect("train log");
    Ok(Corpus {
        train,
        val,
        tests,
        schedules,
    })
}

pub const LOG_HEADER: &str = "packet_id,session_id,src,intended_dst,hop_path,type,label";

pub fn write_log<W: Write>(mut out: W, records: &[PacketRecord]) -> Result<()> {
    writeln!(out, "{LOG_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.packet_id,
            r.session_id,
            r.src,
            r.intended_dst,
            r.hop_path(),
            r.kind.as_str(),
            r.label.as_str()
        )?;
    }
    Ok(())
}

pub fn read_log<R: BufRead>(input: R) -> Result<Vec<PacketRecord>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != LOG_HEADER {
        return Err(Error::Schema(format!("packet log must start with `{LOG_HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("packet log line {}: {what}", i + 2));
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 7 {
            return Err(bad("expected 7 columns"));
        }
        let hops = cols[4]
            .split(';')
            .map(|h| {
                let (n, t) = h.split_once(':').ok_or_else(|| bad("malformed hop"))?;
                Ok((n.parse()?, t.parse().map_err(|_| bad("bad timestamp"))?))
            })
            .collect::<Result<Vec<(Node, u64)>>>()?;
        if hops.windows(2).any(|w| w[1].1 <= w[0].1) {
            return Err(bad("hop timestamps not strictly increasing"));
        }
        out.push(PacketRecord {
            packet_id: cols[0].parse().map_err(|_| bad("bad packet id"))?,
            session_id: cols[1].to_string(),
            src: cols[2].parse()?,
            intended_dst: cols[3].parse()?,
            hops,
            kind: cols[5].parse()?,
            label: cols[6].parse()?,
        });
    }
    Ok(out)
}
