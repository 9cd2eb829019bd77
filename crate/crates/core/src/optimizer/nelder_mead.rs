//! Nelder-Mead downhill simplex, registered as an alternative to COBYLA.

use super::{Evaluator, Objective, Optimizer, OptimizerResult, OptimizerSettings, TracePoint};
use crate::error::Result;

#[derive(Clone, Copy, Debug, Default)]
pub struct NelderMead;

impl Optimizer for NelderMead {
    fn name(&self) -> &'static str {
        "nelder-mead"
    }

    fn minimize(
        &self,
        objective: &dyn Objective,
        x0: &[f64],
        settings: &OptimizerSettings,
    ) -> Result<OptimizerResult> {
        settings.validate()?;
        let n = x0.len();
        let budget = settings.evaluation_budget(n);
        let mut ev = Evaluator::new(objective, x0)?;
        let initial_value = ev.eval(x0)?;

        let mut pts: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), initial_value)];
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += settings.rho_begin;
            let f = ev.eval(&x)?;
            pts.push((x, f));
        }

        let mut trace = Vec::new();
        let mut iterations = 0;
        let mut converged = false;
        while iterations < settings.max_iters && ev.evaluations + n + 2 <= budget {
            iterations += 1;
            pts.sort_by(|a, b| a.1.total_cmp(&b.1));

            let size = pts[1..]
                .iter()
                .map(|(x, _)| dist(x, &pts[0].0))
                .fold(0.0, f64::max);
            if size < settings.rho_end {
                converged = true;
                trace.push(TracePoint {
                    iteration: iterations,
                    best_value: ev.best_value,
                });
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|k| pts[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
                .collect();
            let worst = pts[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(1.0);
            let fr = ev.eval(&xr)?;
            if fr < pts[0].1 {
                let xe = along(2.0);
                let fe = ev.eval(&xe)?;
                pts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < pts[n - 1].1 {
                pts[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst.1 {
                    let xc = along(0.5);
                    let fc = ev.eval(&xc)?;
                    (xc, fc)
                } else {
                    let xc = along(-0.5);
                    let fc = ev.eval(&xc)?;
                    (xc, fc)
                };
                if fc < worst.1.min(fr) {
                    pts[n] = (xc, fc);
                } else {
                    let best = pts[0].0.clone();
                    for p in pts.iter_mut().skip(1) {
                        let x: Vec<f64> = best
                            .iter()
                            .zip(&p.0)
                            .map(|(b, xi)| b + 0.5 * (xi - b))
                            .collect();
                        let f = ev.eval(&x)?;
                        *p = (x, f);
                    }
                }
            }
            trace.push(TracePoint {
                iteration: iterations,
                best_value: ev.best_value,
            });
        }

        Ok(OptimizerResult {
            best_params: ev.best_params,
            best_value: ev.best_value,
            initial_value,
            evaluations: ev.evaluations,
            iterations,
            converged,
            trace,
        })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
