//! Quantum autoencoder: angle encoding, RealAmplitudes encoder and the
//! trash-qubit loss.
//!
//! The trash subsystem is the top `num_trash` qubits. A sample is scored by
//! the probability that the trash qubits read |0…0⟩ after encoding and the
//! ansatz; the training loss is the batch mean of the complementary
//! probability.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::Objective;
use crate::quantum::{Circuit, Gate, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaeConfig {
    pub num_qubits: usize,
    pub num_trash: usize,
    /// RealAmplitudes repetitions.
    pub reps: usize,
    /// Radians per unit of (rescaled) feature value.
    pub encoding_scale: f64,
}

impl Default for QaeConfig {
    fn default() -> Self {
        QaeConfig {
            num_qubits: 10,
            num_trash: 2,
            reps: 5,
            encoding_scale: PI,
        }
    }
}

impl QaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_qubits > crate::quantum::MAX_QUBITS {
            return Err(Error::Config(format!("num_qubits = {}", self.num_qubits)));
        }
        if self.num_trash == 0 || self.num_trash >= self.num_qubits {
            return Err(Error::Config(format!(
                "num_trash must satisfy 1 <= k < n (k = {}, n = {})",
                self.num_trash, self.num_qubits
            )));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if !self.encoding_scale.is_finite() {
            return Err(Error::Config("encoding_scale must be finite".into()));
        }
        Ok(())
    }

    pub fn num_latent(&self) -> usize {
        self.num_qubits - self.num_trash
    }

    pub fn num_params(&self) -> usize {
        self.num_qubits * (self.reps + 1)
    }

    pub fn trash_qubits(&self) -> Vec<usize> {
        (self.num_latent()..self.num_qubits).collect()
    }
}

/// Encoder rotation angles θ, in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("parameter {bad} is not finite")));
        }
        Ok(ParamVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn check_len(&self, config: &QaeConfig) -> Result<()> {
        if self.0.len() != config.num_params() {
            return Err(Error::Config(format!(
                "expected {} parameters for n = {}, reps = {}; got {}",
                config.num_params(),
                config.num_qubits,
                config.reps,
                self.0.len()
            )));
        }
        Ok(())
    }
}

/// Rows of rescaled features, each entry in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl SampleBatch {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::Domain(format!(
                    "ragged batch: row lengths {} and {dim}",
                    row.len()
                )));
            }
            check_sample(row)?;
        }
        Ok(SampleBatch { rows, dim })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn check_sample(sample: &[f64]) -> Result<()> {
    match sample.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(Error::Domain(format!("feature value {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

/// One RY(scale · x_i) on qubit i per feature; remaining qubits stay |0⟩.
pub fn angle_encode(sample: &[f64], config: &QaeConfig) -> Result<Circuit> {
    if !config.encoding_scale.is_finite() {
        return Err(Error::Config("encoding_scale must be finite".into()));
    }
    if sample.len() > config.num_qubits {
        return Err(Error::Config(format!(
            "{} features cannot be encoded on {} qubits",
            sample.len(),
            config.num_qubits
        )));
    }
    check_sample(sample)?;
    let gates = sample
        .iter()
        .enumerate()
        .map(|(q, &x)| Gate::ry(q, config.encoding_scale * x))
        .collect();
    Circuit::from_gates(config.num_qubits, gates)
}

/// RealAmplitudes with a linear CX chain: `reps` × (RY layer, CX ladder),
/// then a final RY layer. Parameters are consumed layer by layer, qubit
/// ascending.
pub fn real_amplitudes(config: &QaeConfig, params: &ParamVector) -> Result<Circuit> {
    config.validate()?;
    params.check_len(config)?;
    let n = config.num_qubits;
    let mut theta = params.values().iter().copied();
    let mut gates = Vec::with_capacity(n * (config.reps + 1) + (n - 1) * config.reps);
    for layer in 0..=config.reps {
        gates.extend((0..n).map(|q| Gate::ry(q, theta.next().expect("length checked"))));
        if layer < config.reps {
            gates.extend((0..n - 1).map(|q| Gate::cx(q, q + 1)));
        }
    }
    Circuit::from_gates(n, gates)
}

/// State after encoding `sample` onto |0…0⟩.
pub fn encode_state(sample: &[f64], config: &QaeConfig) -> Result<StateVector> {
    let mut state = StateVector::zero(config.num_qubits)?;
    angle_encode(sample, config)?.apply_to(&mut state)?;
    Ok(state)
}

/// Probability that the trash qubits read |0…0⟩ after encoding and the
/// ansatz. Equals one minus the single-sample loss.
pub fn fidelity_score(params: &ParamVector, sample: &[f64], config: &QaeConfig) -> Result<f64> {
    let ansatz = real_amplitudes(config, params)?;
    let mut state = encode_state(sample, config)?;
    ansatz.apply_to(&mut state)?;
    state.all_zero_probability(&config.trash_qubits())
}

/// Batch mean of the total probability of measuring any trash outcome other
/// than |0…0⟩.
pub fn loss(params: &ParamVector, batch: &SampleBatch, config: &QaeConfig) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Domain("loss over an empty batch".into()));
    }
    let ansatz = real_amplitudes(config, params)?;
    let trash = config.trash_qubits();
    let mut bad = 0.0;
    for row in batch.rows() {
        let mut state = encode_state(row, config)?;
        ansatz.apply_to(&mut state)?;
        let p_bad: f64 = state.marginal_probabilities(&trash)?.iter().skip(1).sum();
        bad += p_bad;
    }
    Ok(bad / batch.len() as f64)
}

/// The loss as an optimizer objective, with encoded input states cached.
pub struct QaeObjective {
    config: QaeConfig,
    encoded: Vec<StateVector>,
    trash: Vec<usize>,
}

impl QaeObjective {
    pub fn new(batch: &SampleBatch, config: &QaeConfig) -> Result<Self> {
        config.validate()?;
        if batch.is_empty() {
            return Err(Error::Domain("training objective over an empty batch".into()));
        }
        let encoded = batch
            .rows()
            .iter()
            .map(|row| encode_state(row, config))
            .collect::<Result<Vec<_>>>()?;
        Ok(QaeObjective {
            config: config.clone(),
            encoded,
            trash: config.trash_qubits(),
        })
    }

    pub fn config(&self) -> &QaeConfig {
        &self.config
    }

    pub fn num_samples(&self) -> usize {
        self.encoded.len()
    }

    /// Per-sample fidelities under `params`.
    pub fn fidelities(&self, params: &ParamVector) -> Result<Vec<f64>> {
        let ansatz = real_amplitudes(&self.config, params)?;
        self.encoded
            .par_iter()
            .map(|s| {
                let mut state = s.clone();
                ansatz.apply_to(&mut state)?;
                state.all_zero_probability(&self.trash)
            })
            .collect()
    }

    pub fn loss(&self, params: &ParamVector) -> Result<f64> {
        let fid = self.fidelities(params)?;
        Ok(fid.iter().map(|f| 1.0 - f).sum::<f64>() / fid.len() as f64)
    }
}

impl Objective for QaeObjective {
    fn arity(&self) -> usize {
        self.config.num_params()
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        // Non-finite parameters surface as a non-finite objective value so the
        // optimizer reports them with the offending vector.
        ParamVector::new(x.to_vec())
            .and_then(|p| self.loss(&p))
            .unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::run_circuit;

    fn cfg(n: usize, k: usize, reps: usize) -> QaeConfig {
        QaeConfig {
            num_qubits: n,
            num_trash: k,
            reps,
            encoding_scale: PI,
        }
    }

    #[test]
    fn default_config_matches_training_setup() {
        let c = QaeConfig::default();
        assert_eq!((c.num_qubits, c.num_trash, c.num_latent()), (10, 2, 8));
        assert_eq!(c.num_params(), 60);
        assert_eq!(c.trash_qubits(), vec![8, 9]);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(3, 0, 1).validate().is_err());
        assert!(cfg(3, 3, 1).validate().is_err());
        assert!(cfg(3, 1, 0).validate().is_err());
        assert!(cfg(3, 2, 1).validate().is_ok());
    }

    #[test]
    fn zero_sample_stays_in_ground_state() {
        let c = cfg(3, 1, 1);
        let circ = angle_encode(&[0.0, 0.0, 0.0], &c).unwrap();
        assert_eq!(circ.len(), 3);
        let s = run_circuit(&circ, &StateVector::zero(3).unwrap()).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_sample_flips_single_qubit() {
        // Encoding only needs the register size; no trash split is involved.
        let s = encode_state(&[1.0], &cfg(1, 0, 1)).unwrap();
        assert!(s.probabilities()[0].abs() < 1e-30);
        assert!((s.probabilities()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn encoding_rejects_oversized_or_out_of_range_samples() {
        let c = cfg(2, 1, 1);
        assert!(matches!(angle_encode(&[0.1, 0.2, 0.3], &c), Err(Error::Config(_))));
        assert!(matches!(angle_encode(&[1.5], &c), Err(Error::Domain(_))));
    }

    #[test]
    fn real_amplitudes_layout() {
        let c = cfg(2, 1, 1);
        let circ = real_amplitudes(&c, &ParamVector::zeros(4)).unwrap();
        assert_eq!(
            circ.gates(),
            &[
                Gate::ry(0, 0.0),
                Gate::ry(1, 0.0),
                Gate::cx(0, 1),
                Gate::ry(0, 0.0),
                Gate::ry(1, 0.0)
            ]
        );
        let s = run_circuit(&circ, &StateVector::zero(2).unwrap()).unwrap();
        assert!((s.probabilities()[0] - 1.0).abs() < 1e-15);
        assert!(real_amplitudes(&c, &ParamVector::zeros(5)).is_err());
    }

    #[test]
    fn single_qubit_rotations_compose() {
        // With n = 1 the ansatz has no CX; RY(π/2)RY(π/2)|0⟩ = |1⟩. Use the
        // raw circuit because a 1-qubit QAE has no trash split.
        let c = Circuit::from_gates(1, vec![Gate::ry(0, PI / 2.0), Gate::ry(0, PI / 2.0)]).unwrap();
        let s = run_circuit(&c, &StateVector::zero(1).unwrap()).unwrap();
        assert!((s.probabilities()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_case_loss_and_fidelity() {
        let c = cfg(2, 1, 1);
        let p = ParamVector::zeros(4);
        let batch = SampleBatch::new(vec![vec![0.5]]).unwrap();
        assert!((loss(&p, &batch, &c).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity_score(&p, &[0.5], &c).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_params_zero_samples_give_zero_loss() {
        let c = QaeConfig::default();
        let batch = SampleBatch::new(vec![vec![0.0; 10]; 3]).unwrap();
        assert_eq!(loss(&ParamVector::zeros(60), &batch, &c).unwrap(), 0.0);
    }

    #[test]
    fn empty_batch_is_a_domain_error() {
        let c = cfg(2, 1, 1);
        let batch = SampleBatch::new(vec![]).unwrap();
        assert!(matches!(loss(&ParamVector::zeros(4), &batch, &c), Err(Error::Domain(_))));
        assert!(QaeObjective::new(&batch, &c).is_err());
    }

    #[test]
    fn objective_matches_free_loss() {
        let c = cfg(4, 2, 2);
        let params = ParamVector::new((0..12).map(|i| 0.37 * i as f64).collect()).unwrap();
        let batch = SampleBatch::new(vec![vec![0.1, 0.9, 0.4], vec![0.6, 0.2, 0.3]]).unwrap();
        let obj = QaeObjective::new(&batch, &c).unwrap();
        let a = obj.evaluate(params.values());
        let b = loss(&params, &batch, &c).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(obj.evaluate(&[f64::NAN; 12]).is_nan());
    }
}
