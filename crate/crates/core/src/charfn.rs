//! Empirical and model characteristic functions.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcform::{eval_batch, Form, FunctionalForm, SymmetrizedCircleForm};
use crate::quadrature::{Domain, QuadratureRule};

/// Complex value of a characteristic function.
pub type ComplexValue = Complex64;

/// Largest admissible real part of a characteristic exponent.
pub const EXPONENT_CAP: f64 = 700.0;

/// Spacing of the axis scan in [`select_m_prime`].
pub const SCAN_STEP: f64 = 0.05;
/// Largest radius returned by [`select_m_prime`].
pub const SCAN_CAP: f64 = 10.0;
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Observed increments `X_{k dt} - X_{(k-1) dt}` on an equispaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSeries {
    pub dt: f64,
    pub increments: Vec<[f64; 2]>,
}

impl IncrementSeries {
    pub fn new(dt: f64, increments: Vec<[f64; 2]>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::data(format!("time step must be positive, got {dt}")));
        }
        if increments.is_empty() {
            return Err(Error::data("increment series is empty"));
        }
        if let Some(k) = increments.iter().position(|x| !(x[0].is_finite() && x[1].is_finite())) {
            return Err(Error::data(format!("increment {k} is not finite")));
        }
        Ok(IncrementSeries { dt, increments })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}

/// ECF values at a set of frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcfEstimate {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<ComplexValue>,
    /// Sample count; 0 marks values that are not sample averages.
    pub n: usize,
}

impl EcfEstimate {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `(1/n) sum_k exp(i <xi, dX_k>)` at every point.
pub fn ecf(data: &IncrementSeries, points: &[[f64; 2]]) -> EcfEstimate {
    let n = data.len();
    let inv = 1.0 / n as f64;
    let values = points
        .par_iter()
        .map(|&xi| {
            if xi == [0.0, 0.0] {
                return Complex64::new(1.0, 0.0);
            }
            let (mut re, mut im) = (0.0, 0.0);
            for &x in &data.increments {
                let (s, c) = dot(xi, x).sin_cos();
                re += c;
                im += s;
            }
            Complex64::new(re * inv, im * inv)
        })
        .collect();
    EcfEstimate { points: points.to_vec(), values, n }
}

/// Integrand kernel `e^{i t} - 1 - i t 1_{|x| <= 1}` with `t = <xi, x>`.
#[inline]
pub fn levy_kernel(xi: [f64; 2], x: [f64; 2]) -> Complex64 {
    let t = dot(xi, x);
    let (s, c) = t.sin_cos();
    let compensator = if x[0] * x[0] + x[1] * x[1] <= 1.0 { t } else { 0.0 };
    Complex64::new(c - 1.0, s - compensator)
}

/// `exp(z)` after checking the real part against [`EXPONENT_CAP`].
pub fn checked_exp(z: Complex64) -> Result<Complex64> {
    if z.re.is_nan() || z.re > EXPONENT_CAP {
        return Err(Error::DivergentDensity { exponent: z.re, cap: EXPONENT_CAP });
    }
    let (s, c) = z.im.sin_cos();
    let m = z.re.exp();
    Ok(Complex64::new(m * c, m * s))
}

/// General pure-jump model: density form on the plane with a disk rule.
/// Brownian part and drift are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    pub nu: Form,
    pub rule: QuadratureRule,
}

impl LevyModel {
    pub fn new(nu: Form, rule: QuadratureRule) -> Result<Self> {
        nu.validate()?;
        if nu.input_dim() != 2 {
            return Err(Error::config("Lévy density form must take 2D input"));
        }
        if !matches!(rule.domain, Domain::Disk { .. }) {
            return Err(Error::config("Lévy model needs a disk quadrature rule"));
        }
        Ok(LevyModel { nu, rule })
    }

    pub fn num_params(&self) -> usize {
        self.nu.num_params()
    }

    pub fn flat_nodes(&self) -> Vec<f64> {
        self.rule.nodes.iter().flat_map(|x| [x[0], x[1]]).collect()
    }

    /// Density values at the quadrature nodes.
    pub fn density_at_nodes(&self, theta: &[f64]) -> Vec<f64> {
        eval_batch(&self.nu, theta, &self.flat_nodes())
    }
}

/// Characteristic function of the quadrature-discretized Lévy model.
pub fn levy_cf(model: &LevyModel, theta: &[f64], xi: [f64; 2], dt: f64) -> Result<ComplexValue> {
    let nu = model.density_at_nodes(theta);
    levy_cf_from_density(&model.rule, &nu, xi, dt)
}

/// Same as [`levy_cf`] with the density already evaluated at the nodes.
pub fn levy_cf_from_density(
    rule: &QuadratureRule,
    nu: &[f64],
    xi: [f64; 2],
    dt: f64,
) -> Result<ComplexValue> {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((&x, &w), &v) in rule.nodes.iter().zip(&rule.weights).zip(nu) {
        acc += levy_kernel(xi, x) * (v * w);
    }
    checked_exp(acc * dt)
}

/// Symmetric α-stable model with latent index `a`, `alpha = 2 sigmoid(a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableModel {
    pub gamma: SymmetrizedCircleForm,
    pub rule: QuadratureRule,
}

impl StableModel {
    pub fn new(gamma: SymmetrizedCircleForm, rule: QuadratureRule) -> Result<Self> {
        gamma.validate()?;
        if rule.domain != Domain::Circle || rule.len() % 2 == 1 || rule.angles.len() != rule.len() {
            return Err(Error::config("stable model needs an even circle quadrature rule"));
        }
        Ok(StableModel { gamma, rule })
    }

    /// Form parameters only; the latent index is carried separately.
    pub fn num_form_params(&self) -> usize {
        self.gamma.num_params()
    }

    /// Angles of the first half of the nodes; the second half are antipodes.
    pub fn half_angles(&self) -> &[f64] {
        &self.rule.angles[..self.rule.len() / 2]
    }

    /// Spectral density at the first half of the nodes. Antipodal nodes share
    /// these values exactly.
    pub fn gamma_at_half_nodes(&self, theta: &[f64]) -> Vec<f64> {
        eval_batch(&self.gamma, theta, self.half_angles())
    }
}

pub fn alpha_from_latent(a: f64) -> f64 {
    2.0 * crate::funcform::sigmoid(a)
}

pub fn latent_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::config(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    let p = alpha / 2.0;
    Ok((p / (1.0 - p)).ln())
}

/// `exp(-dt sum_i |<xi, s_i>|^alpha Gamma(s_i) w_i)` for the stable model.
pub fn stable_cf(
    model: &StableModel,
    theta: &[f64],
    alpha: f64,
    xi: [f64; 2],
    dt: f64,
) -> Result<ComplexValue> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    let gamma = model.gamma_at_half_nodes(theta);
    let half = gamma.len();
    let mut acc = 0.0;
    for (k, &g) in gamma.iter().enumerate() {
        let s = model.rule.nodes[k];
        let w = model.rule.weights[k] + model.rule.weights[k + half];
        acc += dot(xi, s).abs().powf(alpha) * g * w;
    }
    checked_exp(Complex64::new(-dt * acc, 0.0))
}

/// Stable CF for an arbitrary spectral density given as a function of the
/// direction angle, integrated with `rule`. Used for reference CFs.
pub fn stable_cf_with<G: Fn(f64) -> f64>(
    gamma: G,
    rule: &QuadratureRule,
    alpha: f64,
    xi: [f64; 2],
    dt: f64,
) -> Result<ComplexValue> {
    if rule.domain != Domain::Circle {
        return Err(Error::config("stable CF needs a circle quadrature rule"));
    }
    let mut acc = 0.0;
    for ((s, w), &t) in rule.nodes.iter().zip(&rule.weights).zip(&rule.angles) {
        acc += dot(xi, *s).abs().powf(alpha) * gamma(t) * w;
    }
    checked_exp(Complex64::new(-dt * acc, 0.0))
}

/// `m` i.i.d. uniform draws from `[-m_prime, m_prime]^2`.
pub fn collocation_points(m_prime: f64, m: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    if !(m_prime > 0.0 && m_prime.is_finite()) {
        return Err(Error::config(format!("M' must be positive, got {m_prime}")));
    }
    if m == 0 {
        return Err(Error::config("need at least one collocation point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-m_prime, m_prime).expect("valid range");
    Ok((0..m).map(|_| [dist.sample(&mut rng), dist.sample(&mut rng)]).collect())
}

/// Outcome of the axis scan for `M'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPrimeSelection {
    pub m_prime: f64,
    pub warning: Option<String>,
}

/// Smallest scan radius beyond which the ECF modulus stays below
/// `threshold` along both positive axes, capped at [`SCAN_CAP`].
pub fn select_m_prime(data: &IncrementSeries, threshold: f64) -> Result<MPrimeSelection> {
    let steps = (SCAN_CAP / SCAN_STEP).round() as usize;
    let mut points = Vec::with_capacity(2 * steps);
    for k in 1..=steps {
        let r = k as f64 * SCAN_STEP;
        points.push([r, 0.0]);
        points.push([0.0, r]);
    }
    let est = ecf(data, &points);
    let moduli: Vec<f64> = est.values.iter().map(|v| v.norm()).collect();
    select_from_profile(&moduli, threshold)
}

/// Scan with an arbitrary CF modulus, e.g. an exact model CF.
pub fn select_m_prime_by<F: Fn([f64; 2]) -> f64>(modulus: F, threshold: f64) -> Result<MPrimeSelection> {
    let steps = (SCAN_CAP / SCAN_STEP).round() as usize;
    let mut moduli = Vec::with_capacity(2 * steps);
    for k in 1..=steps {
        let r = k as f64 * SCAN_STEP;
        moduli.push(modulus([r, 0.0]));
        moduli.push(modulus([0.0, r]));
    }
    select_from_profile(&moduli, threshold)
}

/// `moduli` interleaves the x- and y-axis profiles at radii `k * SCAN_STEP`.
fn select_from_profile(moduli: &[f64], threshold: f64) -> Result<MPrimeSelection> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::config(format!("threshold must lie in (0, 1], got {threshold}")));
    }
    let steps = moduli.len() / 2;
    let last_above = moduli
        .chunks(2)
        .rposition(|pair| pair.iter().any(|&m| m >= threshold));
    let k = match last_above {
        None => 1,
        Some(i) => i + 2,
    };
    if k > steps {
        return Ok(MPrimeSelection {
            m_prime: SCAN_CAP,
            warning: Some(format!(
                "ECF modulus stays above {threshold} up to the scan cap; using M' = {SCAN_CAP}"
            )),
        });
    }
    // Rounded so that reported radii read as multiples of the step.
    let m_prime = (k as f64 * SCAN_STEP * 1e6).round() / 1e6;
    Ok(MPrimeSelection { m_prime, warning: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcform::{NnForm, PlForm};
    use crate::quadrature::{circle_rule, disk_rule};
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn normal_series(n: usize, seed: u64) -> IncrementSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inc = (0..n)
            .map(|_| [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)])
            .collect();
        IncrementSeries::new(1.0, inc).unwrap()
    }

    #[test]
    fn ecf_single_increment() {
        let data = IncrementSeries::new(1.0, vec![[1.0, 0.0]]).unwrap();
        let est = ecf(&data, &[[PI, 0.0], [0.0, 0.0]]);
        assert!((est.values[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(est.values[1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn ecf_hermitian_and_bounded() {
        let data = normal_series(500, 1);
        let pts = [[0.3, -1.2], [2.0, 0.7]];
        let neg: Vec<[f64; 2]> = pts.iter().map(|p| [-p[0], -p[1]]).collect();
        let a = ecf(&data, &pts);
        let b = ecf(&data, &neg);
        for (u, v) in a.values.iter().zip(&b.values) {
            assert_eq!(*u, v.conj());
            assert!(u.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn ecf_of_gaussian_sample() {
        let data = normal_series(100_000, 2);
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                pts.push([-2.0 + i as f64, -2.0 + j as f64]);
            }
        }
        let est = ecf(&data, &pts);
        for (p, v) in pts.iter().zip(&est.values) {
            let exact = (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp();
            assert!((v - exact).norm() < 0.02);
        }
    }

    #[test]
    fn rejects_empty_or_bad_series() {
        assert!(IncrementSeries::new(1.0, vec![]).is_err());
        assert!(IncrementSeries::new(0.0, vec![[0.0, 0.0]]).is_err());
        assert!(IncrementSeries::new(1.0, vec![[f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn levy_cf_trivial_cases() {
        let pl = Form::Pl(PlForm::square(3.0, 4).unwrap());
        let model = LevyModel::new(pl, disk_rule(3.0, 8, 8).unwrap()).unwrap();
        let zero = vec![0.0; 16];
        assert_eq!(levy_cf(&model, &zero, [1.0, -2.0], 0.5).unwrap(), Complex64::new(1.0, 0.0));
        let ones = vec![1.0; 16];
        assert_eq!(levy_cf(&model, &ones, [0.0, 0.0], 0.5).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn levy_cf_hermitian() {
        let nn = Form::Nn(NnForm::new(vec![2, 5, 1]).unwrap());
        let model = LevyModel::new(nn.clone(), disk_rule(3.0, 8, 8).unwrap()).unwrap();
        let theta = nn.init_params(3).unwrap();
        let a = levy_cf(&model, &theta, [0.7, -0.4], 0.5).unwrap();
        let b = levy_cf(&model, &theta, [-0.7, 0.4], 0.5).unwrap();
        assert_eq!(a, b.conj());
    }

    #[test]
    fn levy_cf_flags_divergence() {
        let pl = Form::Pl(PlForm::square(3.0, 2).unwrap());
        let model = LevyModel::new(pl, disk_rule(3.0, 8, 8).unwrap()).unwrap();
        let theta = vec![-1e4; 4];
        assert!(matches!(
            levy_cf(&model, &theta, [1.0, 1.0], 1.0),
            Err(Error::DivergentDensity { .. })
        ));
    }

    #[test]
    fn levy_model_needs_disk() {
        let pl = Form::Pl(PlForm::square(3.0, 2).unwrap());
        assert!(LevyModel::new(pl, circle_rule(8).unwrap()).is_err());
    }

    fn constant_gamma_model(n_q: usize) -> StableModel {
        let inner = Form::Pl(PlForm::new(1, 2, [0.0, 2.0 * PI]).unwrap());
        StableModel::new(SymmetrizedCircleForm::new(inner).unwrap(), circle_rule(n_q).unwrap()).unwrap()
    }

    #[test]
    fn stable_cf_constant_gamma_alpha_one() {
        // Gamma = 2 * 0.5 = 1.
        let model = constant_gamma_model(1000);
        let v = stable_cf(&model, &[0.5, 0.5], 1.0, [1.0, 0.0], 1.0).unwrap();
        assert!((v.re - (-4f64).exp()).abs() < 1e-6);
        assert_eq!(v.im, 0.0);
        assert_eq!(stable_cf(&model, &[0.5, 0.5], 1.0, [0.0, 0.0], 1.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn stable_cf_rotation_invariant_for_constant_gamma() {
        let model = constant_gamma_model(1000);
        let base = stable_cf(&model, &[0.5, 0.5], 0.75, [1.3, 0.0], 0.5).unwrap().re;
        for t in [0.3, 1.1, 2.9, 4.0] {
            let xi = [1.3 * f64::cos(t), 1.3 * f64::sin(t)];
            let v = stable_cf(&model, &[0.5, 0.5], 0.75, xi, 0.5).unwrap().re;
            // |cos|^0.75 has cusps, so the rule only converges like h^1.75.
            assert!((v - base).abs() < 1e-3);
        }
    }

    #[test]
    fn stable_cf_invariant_under_half_turn_of_inner() {
        // Inner table values shifted by pi give the same symmetrized Gamma.
        let n = 41; // node spacing pi/20, so a shift by pi is 20 nodes
        let inner = PlForm::new(1, n, [0.0, 2.0 * PI]).unwrap();
        let theta: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * (inner.node(i) * 1.7).sin().abs()).collect();
        let mut shifted = vec![0.0; n];
        for i in 0..n {
            shifted[i] = theta[(i + 20) % (n - 1)];
        }
        shifted[n - 1] = shifted[0];
        let mut fixed = theta.clone();
        fixed[n - 1] = fixed[0];
        let model = StableModel::new(
            SymmetrizedCircleForm::new(Form::Pl(inner)).unwrap(),
            circle_rule(80).unwrap(),
        )
        .unwrap();
        let a = stable_cf(&model, &fixed, 1.2, [0.8, -0.5], 0.5).unwrap();
        let b = stable_cf(&model, &shifted, 1.2, [0.8, -0.5], 0.5).unwrap();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn alpha_latent_round_trip() {
        for alpha in [0.3, 0.75, 1.0, 1.5, 1.9] {
            let a = latent_from_alpha(alpha).unwrap();
            assert!((alpha_from_latent(a) - alpha).abs() < 1e-14);
        }
        assert_eq!(latent_from_alpha(1.0).unwrap(), 0.0);
        assert!(latent_from_alpha(2.0).is_err());
    }

    #[test]
    fn collocation_points_in_square_and_reproducible() {
        let a = collocation_points(2.0, 1, 5).unwrap();
        assert_eq!(a, collocation_points(2.0, 1, 5).unwrap());
        let pts = collocation_points(2.0, 10_000, 9).unwrap();
        assert!(pts.iter().all(|p| p[0].abs() <= 2.0 && p[1].abs() <= 2.0));
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / 1e4;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / 1e4;
        assert!(mx.abs() < 0.05 && my.abs() < 0.05);
        assert!(collocation_points(0.0, 3, 0).is_err());
    }

    #[test]
    fn m_prime_degenerate_data_hits_cap() {
        let data = IncrementSeries::new(1.0, vec![[0.0, 0.0]; 50]).unwrap();
        let sel = select_m_prime(&data, 0.05).unwrap();
        assert_eq!(sel.m_prime, SCAN_CAP);
        assert!(sel.warning.is_some());
    }

    #[test]
    fn m_prime_for_gaussian() {
        let data = normal_series(100_000, 4);
        let sel = select_m_prime(&data, 0.05).unwrap();
        let exact = (2.0 * 20f64.ln()).sqrt();
        assert!((sel.m_prime - exact).abs() <= 0.2, "{}", sel.m_prime);
        assert!(sel.warning.is_none());
    }

    #[test]
    fn m_prime_threshold_one() {
        let data = normal_series(1000, 5);
        assert_eq!(select_m_prime(&data, 1.0).unwrap().m_prime, SCAN_STEP);
    }
}
