//! Quasi-Newton minimization with finite-difference gradients.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Central-difference step.
    pub h: f64,
    /// Stop once the gradient infinity-norm drops to this value.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Step shrink factor per backtrack.
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iters: 200, h: 1e-3, grad_tol: 1e-5, c1: 1e-4, backtrack: 0.5, max_backtracks: 40 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.h > 0.0
            && self.grad_tol > 0.0
            && self.c1 > 0.0
            && self.c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidArgument(format!("invalid optimizer config {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step satisfied sufficient decrease; the best point so far is returned.
    LineSearchFailed,
    NonFiniteStart,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub loss: f64,
    pub initial_loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceEntry>,
}

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h`.
pub fn gradient_fd<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with a finite-difference gradient.
pub fn bfgs_minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], config: &OptimizerConfig) -> OptimizeResult {
    let h = config.h;
    let n = x0.len();
    let mut result = bfgs_minimize_with_gradient(
        |x| {
            let g = gradient_fd(&f, x, h);
            (f(x), g)
        },
        &f,
        x0,
        config,
    );
    // each gradient costs 2n evaluations on top of the value
    result.evaluations += result.iterations * 2 * n;
    result
}

/// BFGS given a combined value-and-gradient function and a value-only function for the
/// line search.
pub fn bfgs_minimize_with_gradient<FG, F>(fg: FG, f: F, x0: &[f64], config: &OptimizerConfig) -> OptimizeResult
where
    FG: Fn(&[f64]) -> (f64, Vec<f64>),
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = fg(&x);
    let mut evaluations = 1;
    let initial_loss = fx;
    let mut trace = vec![TraceEntry { iteration: 0, loss: fx, grad_norm: inf_norm(&g), step: 0.0 }];
    let finish = |x: Vec<f64>, loss, g: &[f64], iterations, evaluations, termination, trace| OptimizeResult {
        x,
        loss,
        initial_loss,
        grad_norm: inf_norm(g),
        iterations,
        evaluations,
        termination,
        trace,
    };
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return finish(x, fx, &g, 0, evaluations, Termination::NonFiniteStart, trace);
    }
    let identity = |scale: f64| {
        let mut m = vec![0.0; n * n];
        (0..n).for_each(|i| m[i * n + i] = scale);
        m
    };
    let mut hinv = identity(1.0);
    let mut first_update = true;
    for iter in 1..=config.max_iters {
        if inf_norm(&g) <= config.grad_tol {
            return finish(x, fx, &g, iter - 1, evaluations, Termination::Converged, trace);
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            hinv = identity(1.0);
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let ft = f(&trial);
            evaluations += 1;
            if ft.is_finite() && ft <= fx + config.c1 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= config.backtrack;
        }
        let Some((x_new, _)) = accepted else {
            return finish(x, fx, &g, iter - 1, evaluations, Termination::LineSearchFailed, trace);
        };
        let (f_new, g_new) = fg(&x_new);
        evaluations += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if first_update {
                hinv = identity(sy / dot(&y, &y));
                first_update = false;
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push(TraceEntry { iteration: iter, loss: fx, grad_norm: inf_norm(&g), step: alpha });
    }
    let termination =
        if inf_norm(&g) <= config.grad_tol { Termination::Converged } else { Termination::MaxIterations };
    finish(x, fx, &g, config.max_iters, evaluations, termination, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_gradient_is_exact() {
        let target = [0.3, -1.2, 2.0];
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let x = [1.0, 1.0, 1.0];
        let g = gradient_fd(&f, &x, 1e-3);
        for k in 0..3 {
            assert!((g[k] - 2.0 * (x[k] - target[k])).abs() < 1e-6);
        }
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let cfg = OptimizerConfig { h: 1e-6, grad_tol: 1e-9, max_iters: 500, ..Default::default() };
        let r = bfgs_minimize(rosenbrock, &[-1.2, 1.0], &cfg);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?} {:?}", r.x, r.termination);
    }

    #[test]
    fn rosenbrock_with_analytic_gradient() {
        let fg = |x: &[f64]| {
            let g0 = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
            let g1 = 200.0 * (x[1] - x[0] * x[0]);
            (rosenbrock(x), vec![g0, g1])
        };
        let cfg = OptimizerConfig { grad_tol: 1e-10, max_iters: 500, ..Default::default() };
        let r = bfgs_minimize_with_gradient(fg, rosenbrock, &[-1.2, 1.0], &cfg);
        assert_eq!(r.termination, Termination::Converged);
        assert!((r.x[0] - 1.0).abs() < 1e-7 && (r.x[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn quadratic_bowl_converges_quickly() {
        let dim = 6;
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2)).sum::<f64>();
        let r = bfgs_minimize(f, &vec![0.0; dim], &OptimizerConfig::default());
        assert_eq!(r.termination, Termination::Converged);
        assert!(r.iterations <= 3 * dim, "{}", r.iterations);
    }

    #[test]
    fn trace_is_nonincreasing_and_never_worse_than_start() {
        let f = |x: &[f64]| (x[0].sin() + 1.5).powi(2) + x[1].powi(4) + (x[0] * x[1]).cos();
        let r = bfgs_minimize(f, &[2.0, -1.0], &OptimizerConfig::default());
        assert!(r.trace.windows(2).all(|w| w[1].loss <= w[0].loss));
        assert!(r.loss <= r.initial_loss);
    }

    #[test]
    fn line_search_failure_keeps_best_point() {
        // the reported gradient points uphill everywhere, so no descent step exists
        let fg = |x: &[f64]| (x[0] * x[0], vec![-2.0 * x[0] - 1.0]);
        let f = |x: &[f64]| x[0] * x[0];
        let r = bfgs_minimize_with_gradient(fg, f, &[0.0], &OptimizerConfig::default());
        assert_eq!(r.termination, Termination::LineSearchFailed);
        assert_eq!(r.x, vec![0.0]);
    }

    #[test]
    fn non_finite_start_is_reported() {
        let r = bfgs_minimize(|x: &[f64]| x[0].ln(), &[-1.0], &OptimizerConfig::default());
        assert_eq!(r.termination, Termination::NonFiniteStart);
    }
}
