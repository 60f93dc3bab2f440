//! L-BFGS with a strong-Wolfe line search (bracketing + cubic zoom).

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    /// Number of stored `(s, y)` pairs.
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the gradient max-norm drops below this.
    pub grad_tol: f64,
    /// Stop when the relative decrease of `f` in one iteration drops below this.
    pub f_rel_tol: f64,
    pub c1: f64,
    pub c2: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            memory: 10,
            max_iters: 500,
            grad_tol: 1e-8,
            f_rel_tol: 1e-12,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::config(format!(
                "Wolfe constants need 0 < c1 < c2 < 1, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        if self.memory == 0 {
            return Err(Error::config("L-BFGS memory must be at least 1"));
        }
        if self.max_line_search == 0 {
            return Err(Error::config("max_line_search must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub step_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub evaluations: usize,
}

impl OptTrace {
    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.f)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["iter", "f", "grad_norm", "step_length"])?;
        for r in &self.records {
            wtr.serialize((r.iter, r.f, r.grad_norm, r.step_length))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// First trial step along `-g` without curvature information: at most unit
/// length, and no longer than the step whose linear model predicts a
/// decrease of `|f|`. The line search doubles it while the slope stays steep.
fn steepest_step0(cur: &Point) -> f64 {
    let gg = dot(&cur.g, &cur.g);
    (1.0 / gg.sqrt()).min(cur.f.abs().max(MIN_F_SCALE) / gg).min(1.0)
}

const MIN_F_SCALE: f64 = 1e-8;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

struct Problem<'a, F> {
    objective: F,
    project: Option<&'a dyn Fn(&mut [f64])>,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Problem<'_, F> {
    fn eval_at(&mut self, base: &[f64], dir: &[f64], step: f64) -> Point {
        let mut x: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b + step * d).collect();
        if let Some(p) = self.project {
            p(&mut x);
        }
        self.evaluations += 1;
        let (f, g) = (self.objective)(&x);
        Point { x, f, g }
    }
}

fn finite_point(p: &Point) -> bool {
    p.f.is_finite() && all_finite(&p.g)
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, kept
/// inside the safeguarded interior of the bracket.
fn cubic_step(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let width = hi - lo;
    let guard = 0.1 * width;
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let mut t = f64::NAN;
    if disc >= 0.0 {
        let d2 = (b - a).signum() * disc.sqrt();
        t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    }
    if !t.is_finite() || t < lo + guard || t > hi - guard {
        t = 0.5 * (lo + hi);
    }
    t
}

/// Strong-Wolfe line search. Returns the accepted point and step, or `None`
/// when no admissible finite step was found.
fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    prob: &mut Problem<'_, F>,
    cur: &Point,
    dir: &[f64],
    step0: f64,
    opts: &OptimizerOptions,
) -> Option<(Point, f64)> {
    let f0 = cur.f;
    let d0 = dot(&cur.g, dir);
    let armijo = |a: f64, f: f64| f <= f0 + opts.c1 * a * d0;
    let curvature = |d: f64| d.abs() <= -opts.c2 * d0;

    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, d0);
    let mut prev_point: Option<Point> = None;
    let mut a = step0;
    let mut evals = 0;
    let mut bracket: Option<(f64, f64, f64, Option<Point>, f64, f64, f64)> = None;

    while evals < opts.max_line_search {
        let p = prob.eval_at(&cur.x, dir, a);
        evals += 1;
        if !finite_point(&p) {
            // Back off toward the last finite step.
            a = a_prev + 0.5 * (a - a_prev);
            continue;
        }
        let da = dot(&p.g, dir);
        if !armijo(a, p.f) || (a_prev > 0.0 && p.f >= f_prev) {
            bracket = Some((a_prev, f_prev, d_prev, prev_point.take(), a, p.f, da));
            break;
        }
        if curvature(da) {
            return Some((p, a));
        }
        if da >= 0.0 {
            bracket = Some((a, p.f, da, Some(p), a_prev, f_prev, d_prev));
            break;
        }
        a_prev = a;
        f_prev = p.f;
        d_prev = da;
        prev_point = Some(p);
        a *= 2.0;
    }

    let Some((mut lo, mut f_lo, mut d_lo, mut lo_point, mut hi, mut f_hi, mut d_hi)) = bracket else {
        return prev_point.map(|p| (p, a_prev));
    };
    while evals < opts.max_line_search {
        let t = cubic_step(lo, f_lo, d_lo, hi, f_hi, d_hi);
        let p = prob.eval_at(&cur.x, dir, t);
        evals += 1;
        if !finite_point(&p) {
            hi = t;
            f_hi = f64::INFINITY;
            d_hi = f64::NAN;
            continue;
        }
        let dt = dot(&p.g, dir);
        if !armijo(t, p.f) || p.f >= f_lo {
            hi = t;
            f_hi = p.f;
            d_hi = dt;
        } else {
            if curvature(dt) {
                return Some((p, t));
            }
            if dt * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
                d_hi = d_lo;
            }
            lo = t;
            f_lo = p.f;
            d_lo = dt;
            lo_point = Some(p);
        }
        if (hi - lo).abs() <= 1e-16 * lo.abs().max(1.0) {
            break;
        }
    }
    // Sufficient decrease without the curvature condition is still progress.
    lo_point.filter(|p| p.f < f0).map(|p| (p, lo))
}

struct History {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    memory: usize,
}

impl History {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        let scale = dot(&s, &s).sqrt() * dot(&y, &y).sqrt();
        if !(sy > 1e-12 * scale) || !sy.is_finite() {
            return false;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    /// Two-loop recursion: returns `-H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

/// Result of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub theta: Vec<f64>,
    pub f: f64,
    pub trace: OptTrace,
}

/// Minimizes `objective`, which returns the value and gradient at a point.
/// A non-finite value marks a point as infeasible; the line search backs off.
pub fn minimize<F>(objective: F, theta0: &[f64], opts: &OptimizerOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    run(objective, theta0, opts, None)
}

/// [`minimize`] with every trial point passed through `project` (e.g. a box
/// clamp) before evaluation.
pub fn minimize_projected<F>(
    objective: F,
    theta0: &[f64],
    opts: &OptimizerOptions,
    project: &dyn Fn(&mut [f64]),
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    run(objective, theta0, opts, Some(project))
}

fn run<F>(
    objective: F,
    theta0: &[f64],
    opts: &OptimizerOptions,
    project: Option<&dyn Fn(&mut [f64])>,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    opts.validate()?;
    let mut prob = Problem { objective, project, evaluations: 0 };
    let zero = vec![0.0; theta0.len()];
    let mut cur = prob.eval_at(theta0, &zero, 0.0);
    if !finite_point(&cur) {
        return Err(Error::Domain("objective is not finite at the starting point".into()));
    }
    let mut records = vec![IterationRecord { iter: 0, f: cur.f, grad_norm: max_norm(&cur.g), step_length: 0.0 }];
    let mut history = History { pairs: VecDeque::new(), memory: opts.memory };
    let finish = |termination, cur: Point, records, evaluations| Minimum {
        f: cur.f,
        theta: cur.x,
        trace: OptTrace { records, termination, evaluations },
    };

    if max_norm(&cur.g) <= opts.grad_tol {
        return Ok(finish(Termination::GradientTolerance, cur, records, prob.evaluations));
    }

    for iter in 1..=opts.max_iters {
        let mut dir = history.direction(&cur.g);
        if !all_finite(&dir) || dot(&dir, &cur.g) >= 0.0 {
            history.pairs.clear();
            dir = cur.g.iter().map(|g| -g).collect();
        }
        let step0 = if history.pairs.is_empty() {
            steepest_step0(&cur)
        } else {
            1.0
        };
        let mut found = line_search(&mut prob, &cur, &dir, step0, opts);
        if found.is_none() && !history.pairs.is_empty() {
            // Retry once along steepest descent with a fresh history.
            history.pairs.clear();
            dir = cur.g.iter().map(|g| -g).collect();
            found = line_search(&mut prob, &cur, &dir, steepest_step0(&cur), opts);
        }
        let Some((next, step)) = found else {
            return Ok(finish(Termination::LineSearchFailure, cur, records, prob.evaluations));
        };

        let was_steepest = history.pairs.is_empty();
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        history.push(s, y);
        let f_prev = cur.f;
        cur = next;
        let grad_norm = max_norm(&cur.g);
        records.push(IterationRecord { iter, f: cur.f, grad_norm, step_length: step });

        if grad_norm <= opts.grad_tol {
            return Ok(finish(Termination::GradientTolerance, cur, records, prob.evaluations));
        }
        if f_prev - cur.f <= opts.f_rel_tol * f_prev.abs().max(cur.f.abs()) {
            // Stale curvature pairs can stall the quasi-Newton direction at a
            // kink; stop only when a steepest-descent step stalls too.
            if was_steepest {
                return Ok(finish(Termination::FunctionTolerance, cur, records, prob.evaluations));
            }
            history.pairs.clear();
        }
    }
    Ok(finish(Termination::MaxIterations, cur, records, prob.evaluations))
}
