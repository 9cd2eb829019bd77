//! End-to-end stages over an output directory:
//!
//! ```text
//! logs/<session>.csv                    packet logs
//! routers/<R>/features/<session>.csv    per-router feature windows
//! coordinator/<mode>/model.toml         trained artifact
//! coordinator/<mode>/traces.csv         loss traces
//! coordinator/<mode>/windows_<R>.csv    per-window detections
//! coordinator/<mode>/summary.csv        metrics per router
//! coordinator/summary.csv, loss_curves.csv, fidelity_histogram.csv
//! ```
//!
//! Feature files stay under each router's directory; the coordinator side
//! only receives parameters, thresholds and reports.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ModelArtifact, RouterModel, RunConfig, TrainingMode, ARTIFACT_VERSION};
use crate::detector::{self, DetectionReport, WindowResult};
use crate::error::{Error, Result};
use crate::features::{self, PreprocessModel, WindowFeatures};
use crate::federated::{self, ClientState, LocalTrainer, TraceRow};
use crate::nettsim::{self, Corpus, Label, Node, PacketRecord, Topology};
use crate::qae::{ParamVector, QaeConfig, QaeObjective, SampleBatch};

pub const TRAIN: &str = "train";
pub const VAL: &str = "val";

/// Windows of one session at one router.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionWindows {
    pub session: String,
    pub windows: Vec<WindowFeatures>,
}

/// Per-router feature windows for every session of a corpus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureSet {
    pub routers: BTreeMap<Node, Vec<SessionWindows>>,
}

impl FeatureSet {
    pub fn session(&self, router: Node, session: &str) -> Result<&[WindowFeatures]> {
        self.routers
            .get(&router)
            .and_then(|s| s.iter().find(|s| s.session == session))
            .map(|s| s.windows.as_slice())
            .ok_or_else(|| Error::Config(format!("no `{session}` features for router {router}")))
    }

    pub fn test_sessions(&self, router: Node) -> Vec<&SessionWindows> {
        self.routers
            .get(&router)
            .map(|s| s.iter().filter(|s| s.session != TRAIN && s.session != VAL).collect())
            .unwrap_or_default()
    }
}

pub fn load_topology(cfg: &RunConfig) -> Result<Topology> {
    match &cfg.topology {
        Some(p) => Topology::from_toml(&fs::read_to_string(p)?),
        None => Ok(Topology::default()),
    }
}

pub fn features_from_logs(logs: &[(String, usize, Vec<PacketRecord>)]) -> FeatureSet {
    let routers = Node::ROUTERS
        .par_iter()
        .map(|&r| {
            let sessions = logs
                .iter()
                .map(|(session, windows, log)| SessionWindows {
                    session: session.clone(),
                    windows: features::extract_windows(log, r, *windows),
                })
                .collect();
            (r, sessions)
        })
        .collect();
    FeatureSet { routers }
}

pub fn corpus_features(corpus: &Corpus) -> FeatureSet {
    let mut logs = vec![
        (TRAIN.to_string(), corpus.schedules[0].num_windows(), corpus.train.clone()),
        (VAL.to_string(), corpus.schedules[1].num_windows(), corpus.val.clone()),
    ];
    for (s, schedule) in corpus.tests.values().zip(&corpus.schedules[2..]) {
        logs.push((schedule.session_id.clone(), schedule.num_windows(), s.clone()));
    }
    features_from_logs(&logs)
}

fn values(windows: &[WindowFeatures]) -> Vec<[f64; features::NUM_FEATURES]> {
    windows.iter().map(|w| w.values).collect()
}

/// Per-sample fidelity of transformed rows under `params`.
pub fn fidelities(config: &QaeConfig, params: &ParamVector, rows: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    QaeObjective::new(&SampleBatch::new(rows)?, config)?.fidelities(params)
}

pub struct TrainOutput {
    pub artifact: ModelArtifact,
    pub traces: Vec<TraceRow>,
}

/// Trains in `cfg.mode` on the `train` sessions and fits thresholds on
/// the `val` sessions.
pub fn train(cfg: &RunConfig, data: &FeatureSet) -> Result<TrainOutput> {
    cfg.validate()?;
    let start = federated::initial_params(&cfg.qae, cfg.seed);
    let (params, models, traces) = match cfg.mode {
        TrainingMode::Centralized => train_centralized(cfg, data, &start)?,
        mode => train_federated(cfg, mode, data, start)?,
    };
    Ok(TrainOutput {
        artifact: ModelArtifact {
            format_version: ARTIFACT_VERSION,
            metadata: ModelArtifact::metadata_for(cfg),
            qae: cfg.qae.clone(),
            params,
            models,
        },
        traces,
    })
}

type Trained = (ParamVector, Vec<RouterModel>, Vec<TraceRow>);

fn train_federated(cfg: &RunConfig, mode: TrainingMode, data: &FeatureSet, start: ParamVector) -> Result<Trained> {
    let trainer = LocalTrainer::new(cfg.qae.clone(), &cfg.optimizer, cfg.local_settings())?;
    let mut preprocess = Vec::new();
    let mut clients = Vec::new();
    for r in Node::ROUTERS {
        let rows = values(data.session(r, TRAIN)?);
        let model = PreprocessModel::fit(&rows, cfg.components)?;
        let x: Vec<Vec<f64>> = rows.iter().map(|v| model.transform(v)).collect();
        let subsets = features::partition_rounds(&x, cfg.rounds)?
            .into_iter()
            .map(SampleBatch::new)
            .collect::<Result<Vec<_>>>()?;
        clients.push(ClientState::new(r.as_str(), subsets, start.clone()));
        preprocess.push((r, model));
    }
    let aggregator = federated::aggregator(mode.as_str(), &cfg.aggregation_tree()?)?;
    let fed = federated::run_federation(&mut clients, aggregator, cfg.rounds, &trainer, start)?;
    let mut models = Vec::new();
    for (r, model) in preprocess {
        let val = data.session(r, VAL)?;
        let fid = fidelities(&cfg.qae, &fed.global, val.iter().map(|w| model.transform(&w.values)).collect())?;
        models.push(RouterModel {
            routers: vec![r.to_string()],
            threshold: detector::fit_threshold(&fid)?,
            preprocess: model,
        });
    }
    Ok((fed.global, models, fed.traces))
}

fn train_centralized(cfg: &RunConfig, data: &FeatureSet, start: &ParamVector) -> Result<Trained> {
    let trainer = LocalTrainer::new(cfg.qae.clone(), &cfg.optimizer, cfg.central_settings())?;
    let mut train_rows = Vec::new();
    let mut val_rows = Vec::new();
    for r in Node::ROUTERS {
        train_rows.extend(values(data.session(r, TRAIN)?));
        val_rows.extend(values(data.session(r, VAL)?));
    }
    let model = PreprocessModel::fit(&train_rows, cfg.components)?;
    let x: Vec<Vec<f64>> = train_rows.iter().map(|v| model.transform(v)).collect();
    let central = federated::run_centralized(x, cfg.seed, &trainer, start)?;
    let fid = fidelities(&cfg.qae, &central.params, val_rows.iter().map(|v| model.transform(v)).collect())?;
    let models = vec![RouterModel {
        routers: Node::ROUTERS.iter().map(Node::to_string).collect(),
        threshold: detector::fit_threshold(&fid)?,
        preprocess: model,
    }];
    Ok((central.params, models, central.traces))
}

/// Scores every test session of each router and builds its report.
pub fn detect(artifact: &ModelArtifact, data: &FeatureSet) -> Result<Vec<DetectionReport>> {
    artifact.validate()?;
    let method = artifact.metadata.mode.as_str();
    Node::ROUTERS
        .iter()
        .map(|&r| {
            let model = artifact.model_for(r.as_str())?;
            let mut scored = Vec::new();
            for s in data.test_sessions(r) {
                let rows = s.windows.iter().map(|w| model.preprocess.transform(&w.values)).collect();
                let fid = fidelities(&artifact.qae, &artifact.params, rows)?;
                for (w, f) in s.windows.iter().zip(fid) {
                    scored.push(WindowResult {
                        session: s.session.clone(),
                        window_start: w.window_start,
                        fidelity: f,
                        predicted: Label::Normal,
                        truth: w.label,
                    });
                }
            }
            if scored.is_empty() {
                return Err(Error::Domain(format!("no test windows for router {r}")));
            }
            DetectionReport::build(r.as_str(), method, scored, &model.threshold, artifact.metadata.averaging)
        })
        .collect()
}

/// Locations of every file a run reads or writes.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn log(&self, session: &str) -> PathBuf {
        self.root.join("logs").join(format!("{session}.csv"))
    }

    pub fn features(&self, router: Node, session: &str) -> PathBuf {
        self.root
            .join("routers")
            .join(router.as_str())
            .join("features")
            .join(format!("{session}.csv"))
    }

    pub fn coordinator(&self) -> PathBuf {
        self.root.join("coordinator")
    }

    pub fn mode_dir(&self, mode: TrainingMode) -> PathBuf {
        self.coordinator().join(mode.as_str())
    }

    pub fn artifact(&self, mode: TrainingMode) -> PathBuf {
        self.mode_dir(mode).join("model.toml")
    }

    pub fn traces(&self, mode: TrainingMode) -> PathBuf {
        self.mode_dir(mode).join("traces.csv")
    }

    pub fn windows(&self, mode: TrainingMode, router: Node) -> PathBuf {
        self.mode_dir(mode).join(format!("windows_{router}.csv"))
    }

    pub fn summary(&self, mode: TrainingMode) -> PathBuf {
        self.mode_dir(mode).join("summary.csv")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Simulates the standard corpus and writes one log per session.
pub fn stage_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let topology = load_topology(cfg)?;
    let corpus = nettsim::standard_corpus(&topology, cfg.seed, cfg.scale)?;
    let layout = Layout::new(&cfg.output_dir);
    let logs = std::iter::once(&corpus.train)
        .chain(std::iter::once(&corpus.val))
        .chain(corpus.tests.values());
    let mut written = Vec::new();
    for (schedule, log) in corpus.schedules.iter().zip(logs) {
        let path = layout.log(&schedule.session_id);
        nettsim::write_log(create(&path)?, log)?;
        written.push(path);
    }
    Ok(written)
}

/// Extracts per-router features from the logs written by [`stage_simulate`],
/// simulating first when they are missing.
pub fn stage_features(cfg: &RunConfig) -> Result<FeatureSet> {
    let layout = Layout::new(&cfg.output_dir);
    let schedules = nettsim::standard_schedules(cfg.seed, cfg.scale)?;
    if schedules.iter().any(|s| !layout.log(&s.session_id).exists()) {
        stage_simulate(cfg)?;
    }
    let logs = schedules
        .iter()
        .map(|s| {
            let log = nettsim::read_log(open(&layout.log(&s.session_id))?)?;
            Ok((s.session_id.clone(), s.num_windows(), log))
        })
        .collect::<Result<Vec<_>>>()?;
    let data = features_from_logs(&logs);
    for (r, sessions) in &data.routers {
        for s in sessions {
            features::write_features(create(&layout.features(*r, &s.session))?, &s.windows)?;
        }
    }
    Ok(data)
}

/// Reads every router's feature files.
pub fn load_features(cfg: &RunConfig) -> Result<FeatureSet> {
    let layout = Layout::new(&cfg.output_dir);
    let schedules = nettsim::standard_schedules(cfg.seed, cfg.scale)?;
    let mut routers = BTreeMap::new();
    for r in Node::ROUTERS {
        let sessions = schedules
            .iter()
            .map(|s| {
                let windows = features::read_features(open(&layout.features(r, &s.session_id))?)?;
                if let Some(w) = windows.iter().find(|w| w.router != r) {
                    return Err(Error::Schema(format!("{} row found in {r}'s feature file", w.router)));
                }
                Ok(SessionWindows {
                    session: s.session_id.clone(),
                    windows,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        routers.insert(r, sessions);
    }
    Ok(FeatureSet { routers })
}

fn features_present(cfg: &RunConfig) -> Result<bool> {
    let layout = Layout::new(&cfg.output_dir);
    let schedules = nettsim::standard_schedules(cfg.seed, cfg.scale)?;
    Ok(Node::ROUTERS
        .iter()
        .all(|&r| schedules.iter().all(|s| layout.features(r, &s.session_id).exists())))
}

/// Trains in `cfg.mode`, extracting features first if needed, and writes
/// the artifact and loss traces.
pub fn stage_train(cfg: &RunConfig) -> Result<ModelArtifact> {
    cfg.validate()?;
    let data = if features_present(cfg)? {
        load_features(cfg)?
    } else {
        stage_features(cfg)?
    };
    let out = train(cfg, &data)?;
    let layout = Layout::new(&cfg.output_dir);
    out.artifact.save(&layout.artifact(cfg.mode))?;
    federated::write_traces(create(&layout.traces(cfg.mode))?, &out.traces)?;
    Ok(out.artifact)
}

/// Applies an artifact to the test features and writes its reports.
pub fn stage_detect(cfg: &RunConfig, artifact_path: Option<&Path>) -> Result<Vec<DetectionReport>> {
    let layout = Layout::new(&cfg.output_dir);
    let path = artifact_path.map(Path::to_path_buf).unwrap_or_else(|| layout.artifact(cfg.mode));
    let artifact = ModelArtifact::load(&path)?;
    let data = load_features(cfg)?;
    let reports = detect(&artifact, &data)?;
    let mode = artifact.metadata.mode;
    for (r, report) in Node::ROUTERS.iter().zip(&reports) {
        detector::write_windows(create(&layout.windows(mode, *r))?, report)?;
    }
    detector::write_summary(create(&layout.summary(mode))?, &reports)?;
    Ok(reports)
}

pub const HISTOGRAM_BINS: usize = 20;

/// Merges whatever per-mode outputs exist into coordinator-level tables
/// and returns the formatted metrics table.
pub fn stage_report(cfg: &RunConfig) -> Result<String> {
    let layout = Layout::new(&cfg.output_dir);
    let mut summary = vec![detector::SUMMARY_HEADER.to_string()];
    let mut curves = vec!["mode,client,round,iteration,loss".to_string()];
    let mut hist = vec!["mode,router,truth,bin_lo,bin_hi,count".to_string()];
    let mut table_rows = Vec::new();
    for mode in TrainingMode::ALL {
        if let Ok(text) = fs::read_to_string(layout.summary(mode)) {
            for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
                summary.push(line.to_string());
                table_rows.push(line.split(',').map(str::to_string).collect::<Vec<_>>());
            }
        }
        if let Ok(text) = fs::read_to_string(layout.traces(mode)) {
            curves.extend(text.lines().skip(1).map(|l| format!("{mode},{l}")));
        }
        for r in Node::ROUTERS {
            let Ok(text) = fs::read_to_string(layout.windows(mode, r)) else {
                continue;
            };
            let mut counts = [[0usize; HISTOGRAM_BINS]; 2];
            for line in text.lines().skip(1) {
                let cols: Vec<&str> = line.split(',').collect();
                let (Some(f), Some(t)) = (cols.get(4), cols.get(6)) else {
                    return Err(Error::Parse(format!("bad window row `{line}`")));
                };
                let f: f64 = f.parse().map_err(|_| Error::Parse(format!("bad fidelity `{f}`")))?;
                let truth: Label = t.parse()?;
                let bin = ((f * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
                counts[usize::from(truth.is_attack())][bin] += 1;
            }
            for (label, row) in [Label::Normal, Label::Attack].iter().zip(counts) {
                for (b, c) in row.iter().enumerate() {
                    let lo = b as f64 / HISTOGRAM_BINS as f64;
                    let hi = (b + 1) as f64 / HISTOGRAM_BINS as f64;
                    hist.push(format!("{mode},{r},{},{lo},{hi},{c}", label.as_str()));
                }
            }
        }
    }
    if table_rows.is_empty() {
        return Err(Error::Config(format!(
            "no detection summaries under {}; run `detect` first",
            layout.coordinator().display()
        )));
    }
    let dir = layout.coordinator();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("summary.csv"), summary.join("\n") + "\n")?;
    fs::write(dir.join("loss_curves.csv"), curves.join("\n") + "\n")?;
    fs::write(dir.join("fidelity_histogram.csv"), hist.join("\n") + "\n")?;
    let mut table = format!(
        "{:<8} {:<14} {:>9} {:>9} {:>9} {:>9}\n",
        "Router", "Method", "Accuracy", "Precision", "Recall", "F1"
    );
    for row in table_rows {
        table.push_str(&format!(
            "{:<8} {:<14} {:>9} {:>9} {:>9} {:>9}\n",
            row[0], row[1], row[2], row[3], row[4], row[5]
        ));
    }
    Ok(table)
}
