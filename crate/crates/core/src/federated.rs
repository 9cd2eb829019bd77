//! Federated QAE training: per-router local optimization, aggregation at
//! the coordinator (flat FedAvg or along an aggregation tree), and the
//! pooled centralized baseline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{Optimizer, OptimizerSettings};
use crate::qae::{ParamVector, QaeConfig, QaeObjective, SampleBatch};
use crate::registry::Registry;

/// Seeded starting parameters, uniform in [0, 2π).
pub fn initial_params(config: &QaeConfig, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..config.num_params())
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    ParamVector::new(values).expect("finite draws")
}

/// What each client runs locally.
pub struct LocalTrainer {
    pub config: QaeConfig,
    pub optimizer: Box<dyn Optimizer>,
    pub settings: OptimizerSettings,
}

impl LocalTrainer {
    pub fn new(config: QaeConfig, optimizer: &str, settings: OptimizerSettings) -> Result<Self> {
        config.validate()?;
        settings.validate()?;
        Ok(LocalTrainer {
            config,
            optimizer: crate::optimizer::by_name(optimizer)?,
            settings,
        })
    }

    /// Minimizes the loss over `batch` from `start`.
    pub fn train(&self, batch: &SampleBatch, start: &ParamVector) -> Result<LocalRun> {
        start.check_len(&self.config)?;
        let objective = QaeObjective::new(batch, &self.config)?;
        let result = self.optimizer.minimize(&objective, start.values(), &self.settings)?;
        let mut losses = vec![result.initial_value];
        losses.extend(result.trace.iter().map(|t| t.best_value));
        Ok(LocalRun {
            params: ParamVector::new(result.best_params)?,
            initial_loss: result.initial_value,
            final_loss: result.best_value,
            losses,
        })
    }
}

/// Outcome of one optimizer run.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalRun {
    pub params: ParamVector,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Incumbent loss before the first iteration and after each one.
    pub losses: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ClientState {
    pub client_id: String,
    /// One training subset per round.
    pub subsets: Vec<SampleBatch>,
    pub current_params: ParamVector,
}

impl ClientState {
    pub fn new(client_id: impl Into<String>, subsets: Vec<SampleBatch>, start: ParamVector) -> Self {
        ClientState {
            client_id: client_id.into(),
            subsets,
            current_params: start,
        }
    }

    pub fn sample_counts(&self) -> Vec<usize> {
        self.subsets.iter().map(SampleBatch::len).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelUpdate {
    pub client_id: String,
    pub round: usize,
    pub num_samples: usize,
    pub final_local_loss: f64,
    pub params: ParamVector,
}

/// One round of local training on subset `round` (1-based), starting from
/// the broadcast global parameters.
pub fn local_train(
    client: &ClientState,
    global: &ParamVector,
    round: usize,
    trainer: &LocalTrainer,
) -> Result<(ModelUpdate, LocalRun)> {
    let tag = |e: Error| e.for_client(&client.client_id, round);
    if round == 0 || round > client.subsets.len() {
        return Err(tag(Error::Config(format!(
            "round {round} outside 1..={}",
            client.subsets.len()
        ))));
    }
    let subset = &client.subsets[round - 1];
    let run = trainer.train(subset, global).map_err(tag)?;
    let update = ModelUpdate {
        client_id: client.client_id.clone(),
        round,
        num_samples: subset.len(),
        final_local_loss: run.final_loss,
        params: run.params.clone(),
    };
    Ok((update, run))
}

/// Sample-weighted mean of `(key, weight, params)` entries, summed in key
/// order so the result does not depend on how entries were listed.
fn weighted_mean(mut entries: Vec<(String, usize, &[f64])>) -> Result<Vec<f64>> {
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let len = entries.first().map(|e| e.2.len()).ok_or_else(|| {
        Error::Protocol("nothing to aggregate".into())
    })?;
    if entries.iter().any(|e| e.2.len() != len) {
        return Err(Error::Protocol("updates disagree on parameter count".into()));
    }
    let total: usize = entries.iter().map(|e| e.1).sum();
    if total == 0 {
        return Err(Error::Protocol("updates carry zero samples".into()));
    }
    // Offsets from the first entry, so equal inputs average to themselves
    // exactly.
    let reference = entries[0].2;
    let mut acc = vec![0.0; len];
    for (_, w, p) in &entries {
        let w = *w as f64;
        acc.iter_mut()
            .zip(p.iter().zip(reference))
            .for_each(|(a, (x, r))| *a += w * (x - r));
    }
    let total = total as f64;
    Ok(reference.iter().zip(&acc).map(|(r, a)| r + a / total).collect())
}

fn check_unique(updates: &[ModelUpdate]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for u in updates {
        if !seen.insert(u.client_id.as_str()) {
            return Err(Error::Protocol(format!("duplicate update from {}", u.client_id)));
        }
        if !u.final_local_loss.is_finite() {
            return Err(Error::Protocol(format!("non-finite loss from {}", u.client_id)));
        }
    }
    Ok(())
}

pub fn fedavg(updates: &[ModelUpdate]) -> Result<ParamVector> {
    check_unique(updates)?;
    let entries = updates
        .iter()
        .map(|u| (u.client_id.clone(), u.num_samples, u.params.values()))
        .collect();
    ParamVector::new(weighted_mean(entries)?)
}

/// Aggregation tree; leaves are client ids, the root is the coordinator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf(String),
    Group { name: String, children: Vec<TreeNode> },
}

impl TreeNode {
    fn leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            TreeNode::Leaf(id) => out.push(id),
            TreeNode::Group { children, .. } => children.iter().for_each(|c| c.leaves(out)),
        }
    }

    /// Smallest leaf id; orders siblings canonically.
    fn key(&self) -> String {
        let mut l = Vec::new();
        self.leaves(&mut l);
        l.into_iter().min().unwrap_or_default().to_string()
    }

    /// Weighted average of the subtree and its total sample count.
    fn reduce(&self, by_client: &BTreeMap<&str, &ModelUpdate>) -> Result<(Vec<f64>, usize)> {
        match self {
            TreeNode::Leaf(id) => {
                let u = by_client[id.as_str()];
                Ok((u.params.values().to_vec(), u.num_samples))
            }
            TreeNode::Group { children, .. } => {
                let parts = children
                    .iter()
                    .map(|c| Ok((c.key(), c.reduce(by_client)?)))
                    .collect::<Result<Vec<_>>>()?;
                let entries = parts
                    .iter()
                    .map(|(k, (p, n))| (k.clone(), *n, p.as_slice()))
                    .collect();
                let count = parts.iter().map(|(_, (_, n))| n).sum();
                Ok((weighted_mean(entries)?, count))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationTree {
    pub root: TreeNode,
}

impl AggregationTree {
    /// Every client a direct child of the root.
    pub fn flat<S: AsRef<str>>(clients: &[S]) -> Self {
        AggregationTree {
            root: TreeNode::Group {
                name: "C".into(),
                children: clients.iter().map(|c| TreeNode::Leaf(c.as_ref().into())).collect(),
            },
        }
    }

    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.root.leaves(&mut out);
        out
    }

    pub fn validate(&self) -> Result<()> {
        fn walk(node: &TreeNode) -> Result<()> {
            if let TreeNode::Group { name, children } = node {
                if children.is_empty() {
                    return Err(Error::Config(format!("aggregation node {name} has no children")));
                }
                children.iter().try_for_each(walk)?;
            }
            Ok(())
        }
        if matches!(self.root, TreeNode::Leaf(_)) {
            return Err(Error::Config("aggregation tree root must be the coordinator".into()));
        }
        walk(&self.root)?;
        let leaves = self.leaves();
        let unique: BTreeSet<&str> = leaves.iter().copied().collect();
        if unique.len() != leaves.len() {
            return Err(Error::Config("a client appears in more than one leaf".into()));
        }
        Ok(())
    }
}

impl Default for AggregationTree {
    fn default() -> Self {
        "((R1,R2)->P1,R3)".parse().expect("default tree parses")
    }
}

/// Text form: a group is `(child,child,...)` optionally followed by
/// `->NAME`; the outermost group is the coordinator `C`.
impl fmt::Display for AggregationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write(node: &TreeNode, top: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match node {
                TreeNode::Leaf(id) => f.write_str(id),
                TreeNode::Group { name, children } => {
                    f.write_str("(")?;
                    for (i, c) in children.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write(c, false, f)?;
                    }
                    f.write_str(")")?;
                    if !top {
                        write!(f, "->{name}")?;
                    }
                    Ok(())
                }
            }
        }
        write(&self.root, true, f)
    }
}

impl FromStr for AggregationTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let mut groups = 0;
        let root = parse_node(&text, &mut pos, &mut groups)?;
        if pos != text.len() {
            return Err(Error::Parse(format!("trailing input in tree `{s}`")));
        }
        let root = match root {
            TreeNode::Group { children, .. } => TreeNode::Group {
                name: "C".into(),
                children,
            },
            leaf => return Err(Error::Parse(format!("tree `{s}` must be a group, got {leaf:?}"))),
        };
        let tree = AggregationTree { root };
        tree.validate()?;
        Ok(tree)
    }
}

fn parse_name(text: &str, pos: &mut usize) -> Result<String> {
    let rest = &text[*pos..];
    let len = rest
        .find(|c: char| !(c.is_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    if len == 0 {
        return Err(Error::Parse(format!("expected a name at offset {} of `{text}`", *pos)));
    }
    *pos += len;
    Ok(rest[..len].to_string())
}

fn parse_node(text: &str, pos: &mut usize, groups: &mut usize) -> Result<TreeNode> {
    if !text[*pos..].starts_with('(') {
        return Ok(TreeNode::Leaf(parse_name(text, pos)?));
    }
    *pos += 1;
    let mut children = vec![parse_node(text, pos, groups)?];
    while text[*pos..].starts_with(',') {
        *pos += 1;
        children.push(parse_node(text, pos, groups)?);
    }
    if !text[*pos..].starts_with(')') {
        return Err(Error::Parse(format!("expected `)` at offset {} of `{text}`", *pos)));
    }
    *pos += 1;
    *groups += 1;
    let name = if text[*pos..].starts_with("->") {
        *pos += 2;
        parse_name(text, pos)?
    } else {
        format!("P{groups}")
    };
    Ok(TreeNode::Group { name, children })
}

pub fn hierarchical_aggregate(updates: &[ModelUpdate], tree: &AggregationTree) -> Result<ParamVector> {
    check_unique(updates)?;
    let by_client: BTreeMap<&str, &ModelUpdate> =
        updates.iter().map(|u| (u.client_id.as_str(), u)).collect();
    let leaves = tree.leaves();
    let missing: Vec<&str> = leaves.iter().copied().filter(|l| !by_client.contains_key(l)).collect();
    if !missing.is_empty() {
        return Err(Error::Protocol(format!("no update from {}", missing.join(", "))));
    }
    let extra: Vec<&str> = by_client.keys().copied().filter(|c| !leaves.contains(c)).collect();
    if !extra.is_empty() {
        return Err(Error::Protocol(format!("update from clients outside the tree: {}", extra.join(", "))));
    }
    ParamVector::new(tree.root.reduce(&by_client)?.0)
}

/// Coordinator-side aggregation rule.
pub trait Aggregator: Send + Sync {
    fn name(&self) -> &'static str;
    fn aggregate(&self, updates: &[ModelUpdate]) -> Result<ParamVector>;
}

pub struct FedAvg;

impl Aggregator for FedAvg {
    fn name(&self) -> &'static str {
        "fedavg"
    }

    fn aggregate(&self, updates: &[ModelUpdate]) -> Result<ParamVector> {
        fedavg(updates)
    }
}

pub struct Hierarchical(pub AggregationTree);

impl Aggregator for Hierarchical {
    fn name(&self) -> &'static str {
        "hierarchical"
    }

    fn aggregate(&self, updates: &[ModelUpdate]) -> Result<ParamVector> {
        hierarchical_aggregate(updates, &self.0)
    }
}

pub type AggregatorFactory = fn(&AggregationTree) -> Box<dyn Aggregator>;

pub fn aggregators() -> Registry<AggregatorFactory> {
    let mut reg: Registry<AggregatorFactory> = Registry::new("aggregator");
    reg.register("fedavg", |_| Box::new(FedAvg))
        .register("hierarchical", |t| Box::new(Hierarchical(t.clone())));
    reg
}

pub fn aggregator(name: &str, tree: &AggregationTree) -> Result<Box<dyn Aggregator>> {
    Ok(aggregators().get(name)?(tree))
}

/// The coordinator only ever sees model updates.
pub struct Coordinator {
    aggregator: Box<dyn Aggregator>,
    global: ParamVector,
    round: usize,
}

impl Coordinator {
    pub fn new(aggregator: Box<dyn Aggregator>, start: ParamVector) -> Self {
        Coordinator {
            aggregator,
            global: start,
            round: 0,
        }
    }

    pub fn global(&self) -> &ParamVector {
        &self.global
    }

    /// Aggregates the next round's updates and returns the new global
    /// parameters to broadcast.
    pub fn complete_round(&mut self, updates: &[ModelUpdate]) -> Result<&ParamVector> {
        let round = self.round + 1;
        if let Some(u) = updates.iter().find(|u| u.round != round) {
            return Err(Error::Protocol(format!(
                "update from {} is for round {}, expected {round}",
                u.client_id, u.round
            )));
        }
        let next = self.aggregator.aggregate(updates)?;
        if next.len() != self.global.len() {
            return Err(Error::Protocol("aggregate changed the parameter count".into()));
        }
        self.global = next;
        self.round = round;
        Ok(&self.global)
    }
}

/// One loss-trace row; iteration 0 is the starting loss.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub client: String,
    pub round: usize,
    pub iteration: usize,
    pub loss: f64,
}

fn trace_rows(client: &str, round: usize, run: &LocalRun) -> Vec<TraceRow> {
    run.losses
        .iter()
        .enumerate()
        .map(|(iteration, &loss)| TraceRow {
            client: client.to_string(),
            round,
            iteration,
            loss,
        })
        .collect()
}

pub fn write_traces<W: Write>(mut out: W, rows: &[TraceRow]) -> Result<()> {
    writeln!(out, "client,round,iteration,loss")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.client, r.round, r.iteration, r.loss)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FederationResult {
    pub global: ParamVector,
    /// Updates received per round.
    pub updates: Vec<Vec<ModelUpdate>>,
    pub traces: Vec<TraceRow>,
}

/// Runs `rounds` federated rounds. Clients train concurrently on their
/// subset for the round, then the coordinator aggregates and broadcasts.
pub fn run_federation(
    clients: &mut [ClientState],
    aggregator: Box<dyn Aggregator>,
    rounds: usize,
    trainer: &LocalTrainer,
    start: ParamVector,
) -> Result<FederationResult> {
    if rounds == 0 {
        return Err(Error::Config("need at least one federated round".into()));
    }
    if clients.is_empty() {
        return Err(Error::Config("need at least one client".into()));
    }
    start.check_len(&trainer.config)?;
    for c in clients.iter() {
        if c.subsets.len() < rounds {
            return Err(Error::Config(format!(
                "client {} has {} subsets for {rounds} rounds",
                c.client_id,
                c.subsets.len()
            )));
        }
    }
    let mut coordinator = Coordinator::new(aggregator, start);
    let mut all_updates = Vec::with_capacity(rounds);
    let mut traces = Vec::new();
    for c in clients.iter_mut() {
        c.current_params = coordinator.global().clone();
    }
    for round in 1..=rounds {
        let results = clients
            .par_iter()
            .map(|c| local_train(c, &c.current_params, round, trainer))
            .collect::<Vec<_>>();
        let mut updates = Vec::with_capacity(results.len());
        for (c, r) in clients.iter().zip(results) {
            let (update, run) = r?;
            traces.extend(trace_rows(&c.client_id, round, &run));
            log::info!(
                "round {round} client {}: loss {:.6} -> {:.6}",
                c.client_id,
                run.initial_loss,
                run.final_loss
            );
            updates.push(update);
        }
        let global = coordinator.complete_round(&updates)?.clone();
        for c in clients.iter_mut() {
            c.current_params = global.clone();
        }
        all_updates.push(updates);
    }
    Ok(FederationResult {
        global: coordinator.global().clone(),
        updates: all_updates,
        traces,
    })
}

#[derive(Clone, Debug)]
pub struct CentralizedResult {
    pub params: ParamVector,
    pub run: LocalRun,
    pub traces: Vec<TraceRow>,
}

/// Single optimizer run over all rows pooled and shuffled with `shuffle_seed`.
pub fn run_centralized(
    mut rows: Vec<Vec<f64>>,
    shuffle_seed: u64,
    trainer: &LocalTrainer,
    start: &ParamVector,
) -> Result<CentralizedResult> {
    if rows.is_empty() {
        return Err(Error::Domain("centralized training set is empty".into()));
    }
    crate::features::shuffle_rows(&mut rows, shuffle_seed);
    let batch = SampleBatch::new(rows)?;
    let run = trainer.train(&batch, start).map_err(|e| e.for_client("central", 1))?;
    Ok(CentralizedResult {
        params: run.params.clone(),
        traces: trace_rows("central", 1, &run),
        run,
    })
}

/// Largest frame accepted from a peer.
pub const MAX_FRAME: usize = 16 << 20;

/// Writes one update as a 4-byte big-endian length followed by its TOML text.
pub fn write_frame<W: Write>(mut out: W, update: &ModelUpdate) -> Result<()> {
    let body = toml::to_string(update).map_err(|e| Error::Protocol(e.to_string()))?;
    let len = u32::try_from(body.len()).map_err(|_| Error::Protocol("frame too large".into()))?;
    out.write_all(&len.to_be_bytes())?;
    out.write_all(body.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn read_frame<R: Read>(mut input: R) -> Result<ModelUpdate> {
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(Error::Protocol(format!("frame of {len} bytes exceeds limit")));
    }
    let mut body = vec![0u8; len];
    input.read_exact(&mut body)?;
    let text = String::from_utf8(body).map_err(|_| Error::Protocol("frame is not UTF-8".into()))?;
    toml::from_str(&text).map_err(|e| Error::Protocol(format!("bad update frame: {e}")))
}

/// Sends each update from its own client thread to a coordinator socket on
/// the loopback interface and returns what the coordinator received, in
/// the order the updates were given.
pub fn exchange_over_loopback(updates: &[ModelUpdate]) -> Result<Vec<ModelUpdate>> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    std::thread::scope(|scope| {
        let senders: Vec<_> = updates
            .iter()
            .map(|u| {
                scope.spawn(move || -> Result<()> {
                    let stream = TcpStream::connect(addr)?;
                    write_frame(stream, u)
                })
            })
            .collect();
        let mut received = Vec::with_capacity(updates.len());
        for _ in 0..updates.len() {
            let (stream, _) = listener.accept()?;
            received.push(read_frame(stream)?);
        }
        for s in senders {
            s.join().map_err(|_| Error::Protocol("client thread panicked".into()))??;
        }
        let mut ordered = Vec::with_capacity(updates.len());
        for u in updates {
            let pos = received
                .iter()
                .position(|r| r.client_id == u.client_id)
                .ok_or_else(|| Error::Protocol(format!("nothing received from {}", u.client_id)))?;
            ordered.push(received.swap_remove(pos));
        }
        Ok(ordered)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(id: &str, params: &[f64], n: usize) -> ModelUpdate {
        ModelUpdate {
            client_id: id.into(),
            round: 1,
            num_samples: n,
            final_local_loss: 0.0,
            params: ParamVector::new(params.to_vec()).unwrap(),
        }
    }

    #[test]
    fn fedavg_examples() {
        let u = [update("a", &[1.0, 3.0], 1), update("b", &[3.0, 5.0], 1)];
        assert_eq!(fedavg(&u).unwrap().values(), &[2.0, 4.0]);
        let u = [update("a", &[0.0], 1), update("b", &[3.0], 2)];
        assert_eq!(fedavg(&u).unwrap().values(), &[2.0]);
    }

    #[test]
    fn fedavg_rejects_mismatch() {
        let u = [update("a", &[1.0], 1), update("b", &[1.0, 2.0], 1)];
        assert!(matches!(fedavg(&u), Err(Error::Protocol(_))));
        assert!(matches!(fedavg(&[]), Err(Error::Protocol(_))));
    }

    #[test]
    fn hand_computed_tree() {
        let tree = AggregationTree::default();
        let u = [update("R1", &[0.0], 1), update("R2", &[2.0], 1), update("R3", &[5.0], 2)];
        assert_eq!(hierarchical_aggregate(&u, &tree).unwrap().values(), &[3.0]);
    }

    #[test]
    fn missing_leaf_is_listed() {
        let tree = AggregationTree::default();
        let u = [update("R1", &[0.0], 1)];
        let err = hierarchical_aggregate(&u, &tree).unwrap_err().to_string();
        assert!(err.contains("R2") && err.contains("R3"), "{err}");
    }

    #[test]
    fn tree_text_round_trip() {
        let t = AggregationTree::default();
        assert_eq!(t.to_string(), "((R1,R2)->P1,R3)");
        assert_eq!(t.leaves(), vec!["R1", "R2", "R3"]);
        let nested: AggregationTree = "((a,(b,c)->G)->H, d)".parse().unwrap();
        assert_eq!(nested.to_string(), "((a,(b,c)->G)->H,d)");
        assert!("(a,a)".parse::<AggregationTree>().is_err());
        assert!("(a,".parse::<AggregationTree>().is_err());
        assert!("a".parse::<AggregationTree>().is_err());
    }

    #[test]
    fn registry_selects_aggregators() {
        let tree = AggregationTree::default();
        assert_eq!(aggregator("fedavg", &tree).unwrap().name(), "fedavg");
        assert_eq!(aggregator("hierarchical", &tree).unwrap().name(), "hierarchical");
        assert!(aggregator("median", &tree).is_err());
    }

    #[test]
    fn frame_round_trip() {
        let u = update("R2", &[0.1, -2.5e-17, std::f64::consts::PI], 60);
        let mut buf = Vec::new();
        write_frame(&mut buf, &u).unwrap();
        assert_eq!(u32::from_be_bytes(buf[..4].try_into().unwrap()) as usize, buf.len() - 4);
        assert_eq!(read_frame(buf.as_slice()).unwrap(), u);
    }

    #[test]
    fn coordinator_rejects_stale_round() {
        let mut c = Coordinator::new(Box::new(FedAvg), ParamVector::zeros(1));
        let mut u = update("a", &[1.0], 1);
        u.round = 2;
        assert!(c.complete_round(&[u]).is_err());
    }
}
