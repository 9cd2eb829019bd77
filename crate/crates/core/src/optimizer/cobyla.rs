//! COBYLA for unconstrained problems: linear interpolation over a simplex of
//! `n + 1` points, a trust-region step of radius `rho` against the model
//! gradient, and a radius that only shrinks. A poor step from a badly
//! shaped simplex is followed by one geometry repair, taken at the start of
//! the next iteration.

use super::{Evaluator, Objective, Optimizer, OptimizerResult, OptimizerSettings, TracePoint};
use crate::error::Result;
use crate::linalg::{dot, invert, norm};

/// Smallest acceptable vertex-to-opposite-face distance, in units of rho.
const ALPHA: f64 = 0.25;
/// Largest acceptable vertex distance from the pivot, in units of rho.
const BETA: f64 = 2.1;
/// Length of a geometry-repair step, in units of rho.
const GAMMA: f64 = 0.5;
const DELTA: f64 = 1.1;
/// Steps whose actual/predicted reduction falls below this are poor.
const POOR_RATIO: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default)]
pub struct Cobyla;

impl Optimizer for Cobyla {
    fn name(&self) -> &'static str {
        "cobyla"
    }

    fn minimize(
        &self,
        objective: &dyn Objective,
        x0: &[f64],
        settings: &OptimizerSettings,
    ) -> Result<OptimizerResult> {
        settings.validate()?;
        let n = x0.len();
        let mut ev = Evaluator::new(objective, x0)?;
        let initial_value = ev.eval(x0)?;
        let mut rho = settings.rho_begin;

        let mut simplex = Simplex {
            pivot: x0.to_vec(),
            f_pivot: initial_value,
            disp: Vec::with_capacity(n),
            f: Vec::with_capacity(n),
        };
        for i in 0..n {
            let d = unit(n, i, rho);
            let fi = ev.eval(&simplex.point(&d))?;
            simplex.disp.push(d);
            simplex.f.push(fi);
        }
        simplex.repivot();

        let mut trace = Vec::with_capacity(settings.max_iters);
        let mut iterations = 0;
        let mut converged = false;
        // Set after a poor trust step taken from a badly shaped simplex.
        let mut repair = false;

        while iterations < settings.max_iters {
            iterations += 1;
            let Some(mut inv) = invert(&simplex.disp) else {
                // Degenerate simplex: rebuild it around the pivot.
                for i in 0..n {
                    let d = unit(n, i, rho);
                    let fi = ev.eval(&simplex.point(&d))?;
                    simplex.disp[i] = d;
                    simplex.f[i] = fi;
                }
                simplex.repivot();
                trace.push(TracePoint {
                    iteration: iterations,
                    best_value: ev.best_value,
                });
                continue;
            };

            // After a poor step from a badly shaped simplex, move the
            // offending vertex before trusting the model again.
            if std::mem::take(&mut repair) {
                if let Some(j) = simplex.worst_vertex(&inv, rho) {
                    let mut dx: Vec<f64> = column(&inv, j);
                    let len = norm(&dx);
                    dx.iter_mut().for_each(|v| *v *= GAMMA * rho / len);
                    if dot(&simplex.gradient(&inv), &dx) > 0.0 {
                        dx.iter_mut().for_each(|v| *v = -*v);
                    }
                    let fnew = ev.eval(&simplex.point(&dx))?;
                    simplex.disp[j] = dx;
                    simplex.f[j] = fnew;
                    simplex.repivot();
                    match invert(&simplex.disp) {
                        Some(m) => inv = m,
                        None => {
                            trace.push(TracePoint {
                                iteration: iterations,
                                best_value: ev.best_value,
                            });
                            continue;
                        }
                    }
                }
            }
            let acceptable = simplex.worst_vertex(&inv, rho).is_none();

            let g = simplex.gradient(&inv);
            let gnorm = norm(&g);
            let ratio = if gnorm > 0.0 && gnorm.is_finite() {
                let d: Vec<f64> = g.iter().map(|gi| -rho * gi / gnorm).collect();
                let fnew = ev.eval(&simplex.point(&d))?;
                let predicted = rho * gnorm;
                let actual = simplex.f_pivot - fnew;
                simplex.absorb(&inv, d, fnew, rho);
                actual / predicted
            } else {
                0.0
            };

            if ratio < POOR_RATIO {
                if !acceptable {
                    repair = true;
                } else if rho <= settings.rho_end {
                    converged = true;
                } else {
                    rho *= 0.5;
                    if rho <= 1.5 * settings.rho_end {
                        rho = settings.rho_end;
                    }
                }
            }
            trace.push(TracePoint {
                iteration: iterations,
                best_value: ev.best_value,
            });
            if converged {
                break;
            }
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

/// Pivot (best point) plus `n` vertices stored as displacements from it.
struct Simplex {
    pivot: Vec<f64>,
    f_pivot: f64,
    disp: Vec<Vec<f64>>,
    f: Vec<f64>,
}

impl Simplex {
    fn point(&self, d: &[f64]) -> Vec<f64> {
        self.pivot.iter().zip(d).map(|(p, di)| p + di).collect()
    }

    /// Makes the lowest vertex the pivot.
    fn repivot(&mut self) {
        let Some(j) = (0..self.f.len()).min_by(|&a, &b| self.f[a].total_cmp(&self.f[b])) else {
            return;
        };
        if self.f[j] >= self.f_pivot {
            return;
        }
        let shift = self.disp[j].clone();
        for (p, s) in self.pivot.iter_mut().zip(&shift) {
            *p += s;
        }
        for (i, d) in self.disp.iter_mut().enumerate() {
            if i == j {
                d.iter_mut().for_each(|v| *v = -*v);
            } else {
                d.iter_mut().zip(&shift).for_each(|(v, s)| *v -= s);
            }
        }
        std::mem::swap(&mut self.f_pivot, &mut self.f[j]);
    }

    /// Gradient of the linear interpolant: solves `disp · g = f - f_pivot`.
    fn gradient(&self, inv: &[Vec<f64>]) -> Vec<f64> {
        let df: Vec<f64> = self.f.iter().map(|fi| fi - self.f_pivot).collect();
        inv.iter().map(|row| dot(row, &df)).collect()
    }

    /// Vertex that most violates the geometry bounds, if any.
    fn worst_vertex(&self, inv: &[Vec<f64>], rho: f64) -> Option<usize> {
        let n = self.disp.len();
        let (far, far_dist) = self
            .disp
            .iter()
            .map(|d| norm(d))
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if far_dist > BETA * rho {
            return Some(far);
        }
        // distance from vertex j to the opposite face is 1 / |column j of inv|
        let (thin, thin_dist) = (0..n)
            .map(|j| (j, 1.0 / norm(&column(inv, j))))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        (thin_dist < ALPHA * rho).then_some(thin)
    }

    /// Inserts the trial point `pivot + d` in place of the vertex whose
    /// removal best preserves the simplex volume.
    fn absorb(&mut self, inv: &[Vec<f64>], d: Vec<f64>, fnew: f64, rho: f64) {
        let n = self.disp.len();
        let improved = fnew < self.f_pivot;
        let scores = (0..n).map(|j| {
            // barycentric weight of d on vertex j = volume ratio after swap
            let sigma = (0..n).map(|i| inv[i][j] * d[i]).sum::<f64>().abs();
            let dist = if improved {
                self.disp[j]
                    .iter()
                    .zip(&d)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            } else {
                norm(&self.disp[j])
            };
            let weight = (dist / (DELTA * rho)).max(1.0).powi(3);
            (j, sigma * weight)
        });
        let Some((j, score)) = scores.max_by(|a, b| a.1.total_cmp(&b.1)) else {
            return;
        };
        if improved || score > 1.0 {
            self.disp[j] = d;
            self.f[j] = fnew;
            self.repivot();
        }
    }
}

fn unit(n: usize, i: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = scale;
    v
}

fn column(m: &[Vec<f64>], j: usize) -> Vec<f64> {
    m.iter().map(|row| row[j]).collect()
}
