#![allow(dead_code)]

use std::f64::consts::PI;

use levycal::calib::{Model, Objective};
use levycal::charfn::{ecf, EcfEstimate, IncrementSeries, LevyModel, StableModel};
use levycal::funcform::Form;
use levycal::quadrature::{circle_rule, disk_rule};
use levycal::RngState;
use num_complex::Complex64;
use rand::Rng;

/// Central-difference gradient.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, theta: &[f64]) -> Vec<f64> {
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let h = 1e-6 * theta[i].abs().max(1.0);
            x[i] = theta[i] + h;
            let fp = f(&x);
            x[i] = theta[i] - h;
            let fm = f(&x);
            x[i] = theta[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|)` in the Euclidean norm.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na.max(nb) == 0.0 {
        diff
    } else {
        diff / na.max(nb)
    }
}

/// Adaptive Simpson on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Adaptive Simpson on consecutive breakpoints.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> f64 {
    breaks.windows(2).map(|w| simpson(f, w[0], w[1], tol)).sum()
}

/// Truncated standard bivariate normal density used as jump measure.
pub fn truncated_normal(x: [f64; 2]) -> f64 {
    if x[0] > 0.0 && x[1] > 0.0 {
        2.0 / PI * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()
    } else {
        0.0
    }
}

pub fn gaussian_series(n: usize, dt: f64, seed: u64) -> IncrementSeries {
    let mut rng = RngState::new(seed).substream(levycal::simulate::Stream::Pilot, 0);
    let incs = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(1e-300);
            let v: f64 = rng.random();
            let r = (-2.0 * u.ln()).sqrt();
            [r * (2.0 * PI * v).cos(), r * (2.0 * PI * v).sin()]
        })
        .collect();
    IncrementSeries::new(dt, incs).unwrap()
}

pub fn grid_points(lo: f64, hi: f64, n: usize) -> Vec<[f64; 2]> {
    let h = (hi - lo) / (n - 1) as f64;
    let mut pts = Vec::new();
    for j in 0..n {
        for i in 0..n {
            pts.push([lo + i as f64 * h, lo + j as f64 * h]);
        }
    }
    pts
}

/// Small Lévy objective on a Gaussian ECF.
pub fn levy_objective(form: Form, m: f64, n_r: usize, n_a: usize, n_pts: usize) -> Objective {
    let model = LevyModel::new(form, disk_rule(m, n_r, n_a).unwrap()).unwrap();
    let data = gaussian_series(300, 0.5, 11);
    let pts = levycal::charfn::collocation_points(2.0, n_pts, 3).unwrap();
    Objective::new(Model::Levy(model), &ecf(&data, &pts), 0.5).unwrap()
}

/// Small stable objective on targets from `exp(-|xi|)`.
pub fn stable_objective(form: Form, n_q: usize, n_pts: usize) -> Objective {
    let sym = levycal::funcform::SymmetrizedCircleForm::new(form).unwrap();
    let model = StableModel::new(sym, circle_rule(n_q).unwrap()).unwrap();
    let points = levycal::charfn::collocation_points(2.0, n_pts, 5).unwrap();
    let values = points
        .iter()
        .map(|p| Complex64::new((-(p[0] * p[0] + p[1] * p[1]).sqrt()).exp(), 0.0))
        .collect();
    Objective::new(Model::Stable(model), &EcfEstimate { points, values, n: 0 }, 0.7).unwrap()
}

/// Reference sample: a form's default initialization perturbed by seeded noise.
pub fn perturbed_init(form: &Form, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = RngState::new(seed).substream(levycal::simulate::Stream::Pilot, 7);
    let mut theta = form.init_params(seed).unwrap().into_inner();
    for t in theta.iter_mut() {
        *t += scale * (rng.random::<f64>() - 0.5);
    }
    theta
}

/// Samples of the unit step at 0.5 on `n` equispaced points of `[0, 1]`.
pub fn step_samples(n: usize) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let ys = xs.iter().map(|&x| if x > 0.5 { 1.0 } else { 0.0 }).collect();
    (xs, ys)
}

/// Least-squares fit of a 1D form to samples, initialized the way
/// `calibrate` does; returns the parameters.
pub fn fit_1d(form: &Form, xs: &[f64], ys: &[f64], seed: u64, opts: &levycal::OptimizerOptions) -> Vec<f64> {
    use levycal::funcform::FunctionalForm;
    let mut theta0 = form.init_params(seed).unwrap().into_inner();
    form.condition_init(&mut theta0, xs, seed);
    let n = xs.len() as f64;
    let obj = |theta: &[f64]| {
        let mut g = vec![0.0; theta.len()];
        let mut f = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            let r = form.eval(theta, &[x]) - y;
            f += r * r / n;
            form.backward(theta, &[x], 2.0 * r / n, &mut g);
        }
        (f, g)
    };
    levycal::minimize(obj, &theta0, opts).unwrap().theta
}
