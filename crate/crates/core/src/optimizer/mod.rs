//! Derivative-free minimizers behind a common [`Optimizer`] trait.
//!
//! Strategies are registered by name in [`registry`]; `cobyla` is the
//! default used for QAE training. An *iteration* is one model step of the
//! method plus at most one geometry repair before it (a full rebuild of a
//! singular simplex also counts as one), so a run of `max_iters` iterations
//! on an `n`-dimensional objective uses at most `max_iters * (n + 1) + n + 1`
//! evaluations.

mod cobyla;
mod nelder_mead;

pub use cobyla::Cobyla;
pub use nelder_mead::NelderMead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::Registry;

/// A scalar objective over a fixed-length parameter vector.
pub trait Objective: Sync {
    fn arity(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> f64;
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    arity: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(arity: usize, f: F) -> Self {
        FnObjective { arity, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn arity(&self) -> usize {
        self.arity
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    /// Initial trust-region radius (simplex edge length).
    pub rho_begin: f64,
    /// Final trust-region radius.
    pub rho_end: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iters: 50,
            rho_begin: 1.0,
            rho_end: 1e-4,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.rho_begin > self.rho_end && self.rho_end > 0.0) || !self.rho_begin.is_finite() {
            return Err(Error::Config(format!(
                "need rho_begin > rho_end > 0 (got {} and {})",
                self.rho_begin, self.rho_end
            )));
        }
        Ok(())
    }

    /// Upper bound on objective evaluations for an `arity`-dimensional run.
    pub fn evaluation_budget(&self, arity: usize) -> usize {
        self.max_iters * (arity + 1) + arity + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    /// Objective value at the starting point.
    pub initial_value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best value seen after each completed iteration.
    pub trace: Vec<TracePoint>,
}

impl OptimizerResult {
    pub fn incumbent_trace(&self) -> &[TracePoint] {
        &self.trace
    }
}

pub fn incumbent_trace(result: &OptimizerResult) -> &[TracePoint] {
    result.incumbent_trace()
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn minimize(
        &self,
        objective: &dyn Objective,
        x0: &[f64],
        settings: &OptimizerSettings,
    ) -> Result<OptimizerResult>;
}

pub type OptimizerFactory = fn() -> Box<dyn Optimizer>;

/// Built-in optimizers keyed by name.
pub fn registry() -> Registry<OptimizerFactory> {
    let mut reg: Registry<OptimizerFactory> = Registry::new("optimizer");
    reg.register("cobyla", || Box::new(Cobyla))
        .register("nelder-mead", || Box::new(NelderMead));
    reg
}

pub fn by_name(name: &str) -> Result<Box<dyn Optimizer>> {
    Ok(registry().get(name)?())
}

/// COBYLA minimization with the given iteration budget and radii.
pub fn minimize(
    objective: &dyn Objective,
    x0: &[f64],
    max_iters: usize,
    rho_begin: f64,
    rho_end: f64,
) -> Result<OptimizerResult> {
    Cobyla.minimize(
        objective,
        x0,
        &OptimizerSettings {
            max_iters,
            rho_begin,
            rho_end,
        },
    )
}

/// Counts evaluations, rejects non-finite values and tracks the incumbent.
pub(crate) struct Evaluator<'a> {
    objective: &'a dyn Objective,
    pub evaluations: usize,
    pub best_params: Vec<f64>,
    pub best_value: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(objective: &'a dyn Objective, x0: &[f64]) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::Config("cannot optimize over zero parameters".into()));
        }
        if x0.len() != objective.arity() {
            return Err(Error::Config(format!(
                "x0 has {} entries but the objective takes {}",
                x0.len(),
                objective.arity()
            )));
        }
        Ok(Evaluator {
            objective,
            evaluations: 0,
            best_params: x0.to_vec(),
            best_value: f64::INFINITY,
        })
    }

    pub fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let value = self.objective.evaluate(x);
        self.evaluations += 1;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                value,
                params: x.to_vec(),
            });
        }
        if value < self.best_value {
            self.best_value = value;
            self.best_params.copy_from_slice(x);
        }
        Ok(value)
    }
}
