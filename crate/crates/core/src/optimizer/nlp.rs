//! Augmented Lagrangian with a BFGS inner solver.
//!
//! Solves `min f(z) s.t. g(z) >= 0` where both are available only as a
//! black box. Gradients of the merit function come from forward differences,
//! evaluated in parallel over coordinates. A failed evaluation counts as an
//! infinite merit, which the line search backs away from.

use crate::exec::{self, ExecMode};

pub trait Problem: Sync {
    fn dim(&self) -> usize;
    /// Objective and constraint values, or `None` when the model cannot be
    /// evaluated at `z`.
    fn eval(&self, z: &[f64]) -> Option<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Inner stop: `|grad L|_inf <= grad_tol * (1 + |L|)`.
    pub grad_tol: f64,
    /// Largest tolerated constraint violation at convergence.
    pub feas_tol: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    /// Largest step (inf-norm) the line search starts from.
    pub max_step: f64,
    pub penalty_init: f64,
    pub exec: ExecMode,
}

impl Default for AlOptions {
    fn default() -> Self {
        Self {
            max_outer: 30,
            max_inner: 300,
            grad_tol: 1e-6,
            feas_tol: 1e-7,
            fd_step: 1e-7,
            max_step: 0.5,
            penalty_init: 10.0,
            exec: ExecMode::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// The starting point cannot be evaluated.
    BadStart,
}

#[derive(Debug, Clone)]
pub struct AlResult {
    pub z: Vec<f64>,
    pub f: f64,
    pub violation: f64,
    pub status: Status,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Merit value after every accepted inner step, one list per outer iteration.
    pub merit_history: Vec<Vec<f64>>,
}

pub fn max_violation(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |m, &gi| m.max(-gi))
}

struct Merit<'a, P: Problem> {
    problem: &'a P,
    lambda: &'a [f64],
    penalty: f64,
}

impl<P: Problem> Merit<'_, P> {
    fn value_of(&self, f: f64, g: &[f64]) -> f64 {
        if !f.is_finite() || g.len() != self.lambda.len() {
            return f64::INFINITY;
        }
        let terms: Vec<f64> = g
            .iter()
            .zip(self.lambda)
            .map(|(&gi, &li)| {
                let s = (li - self.penalty * gi).max(0.0);
                s * s - li * li
            })
            .collect();
        let v = f + exec::pairwise_sum(&terms) / (2.0 * self.penalty);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        match self.problem.eval(z) {
            Some((f, g)) => self.value_of(f, &g),
            None => f64::INFINITY,
        }
    }

    fn gradient(&self, z: &[f64], at: f64, opts: &AlOptions) -> Vec<f64> {
        exec::map_range(opts.exec, z.len(), |k| {
            let h = opts.fd_step * z[k].abs().max(1.0);
            let mut zp = z.to_vec();
            zp[k] += h;
            let fp = self.value(&zp);
            if fp.is_finite() {
                return (fp - at) / h;
            }
            zp[k] = z[k] - h;
            let fm = self.value(&zp);
            if fm.is_finite() {
                (at - fm) / h
            } else {
                0.0
            }
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct InnerOutcome {
    z: Vec<f64>,
    iterations: usize,
    stationary: bool,
    history: Vec<f64>,
}

fn bfgs<P: Problem>(merit: &Merit<'_, P>, z0: Vec<f64>, opts: &AlOptions) -> InnerOutcome {
    let n = z0.len();
    let mut z = z0;
    let mut l = merit.value(&z);
    let mut history = vec![l];
    if !l.is_finite() {
        return InnerOutcome { z, iterations: 0, stationary: false, history };
    }
    let mut grad = merit.gradient(&z, l, opts);
    let identity = || {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        h
    };
    let mut h = identity();
    let mut fresh = true;
    let mut stalls = 0;
    let mut stationary = false;
    let mut iterations = 0;

    while iterations < opts.max_inner {
        if inf_norm(&grad) <= opts.grad_tol * (1.0 + l.abs()) {
            stationary = true;
            break;
        }
        let mut d: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i * n + j] * grad[j]).sum::<f64>()).collect();
        let mut slope = dot(&grad, &d);
        if !(slope < 0.0) {
            h = identity();
            fresh = true;
            d = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &d);
        }
        let dn = inf_norm(&d);
        if dn > opts.max_step {
            let s = opts.max_step / dn;
            d.iter_mut().for_each(|x| *x *= s);
            slope *= s;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let lt = merit.value(&trial);
            if lt.is_finite() && lt <= l + 1e-4 * t * slope {
                accepted = Some((trial, lt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, lt)) = accepted else {
            if fresh {
                // no descent along the steepest direction: numerically stationary
                stationary = true;
                break;
            }
            h = identity();
            fresh = true;
            continue;
        };
        iterations += 1;
        let new_grad = merit.gradient(&trial, lt, opts);
        let s: Vec<f64> = trial.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|x| *x *= scale);
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }
        let decrease = l - lt;
        z = trial;
        grad = new_grad;
        l = lt;
        history.push(l);
        if decrease <= 1e-15 * (1.0 + l.abs()) {
            stalls += 1;
            if stalls >= 3 {
                stationary = true;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    InnerOutcome { z, iterations, stationary, history }
}

pub fn minimize<P: Problem>(problem: &P, z0: Vec<f64>, opts: &AlOptions) -> AlResult {
    let Some((f0, g0)) = problem.eval(&z0) else {
        return AlResult {
            z: z0,
            f: f64::INFINITY,
            violation: f64::INFINITY,
            status: Status::BadStart,
            outer_iterations: 0,
            inner_iterations: 0,
            merit_history: Vec::new(),
        };
    };
    let mut lambda = vec![0.0; g0.len()];
    let mut penalty = opts.penalty_init;
    let mut z = z0;
    let (mut f, mut g) = (f0, g0);
    let mut violation = max_violation(&g);
    let mut inner_total = 0;
    let mut history = Vec::new();
    let mut status = Status::MaxIterations;
    let mut outer = 0;

    while outer < opts.max_outer {
        outer += 1;
        let merit = Merit { problem, lambda: &lambda, penalty };
        let inner = bfgs(&merit, z.clone(), opts);
        inner_total += inner.iterations;
        history.push(inner.history);
        let Some((fi, gi)) = problem.eval(&inner.z) else { break };
        let f_prev = f;
        z = inner.z;
        f = fi;
        g = gi;
        let v = max_violation(&g);
        for (l, &gi) in lambda.iter_mut().zip(&g) {
            *l = (*l - penalty * gi).max(0.0);
        }
        log::debug!(
            "outer {outer}: f = {f:.6e}, violation = {v:.3e}, penalty = {penalty:.1e}, inner = {}",
            inner.iterations
        );
        if v <= opts.feas_tol && inner.stationary && (f_prev - f).abs() <= 1e-8 * (1.0 + f.abs()) {
            violation = v;
            status = Status::Converged;
            break;
        }
        if v > 0.25 * violation && v > opts.feas_tol {
            penalty = (penalty * 10.0).min(1e12);
        }
        violation = v;
    }
    AlResult { z, f, violation, status, outer_iterations: outer, inner_iterations: inner_total, merit_history: history }
}
