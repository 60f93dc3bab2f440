//! Parametrized functional forms for the Lévy density `nu_theta` on the plane
//! and the spectral density `Gamma_theta` on the circle.
//!
//! A [`Form`] describes structure only; its parameters live in a separate
//! [`ParamVector`] so the optimizer can update them without touching the form.
//! Every form provides its value and a reverse-accumulated parameter gradient
//! through [`FunctionalForm::backward`].

mod nn;
mod pl;
mod rbf;

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use nn::NnForm;
pub use pl::PlForm;
pub use rbf::RbfForm;

/// Initial value of every piecewise-linear DOF and RBF coefficient.
pub const LINEAR_INIT: f64 = 0.1;

/// Relative spread of a conditioned network's initial output.
pub const NN_INIT_SPREAD: f64 = 0.1;

/// Flat parameter vector of a form.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("parameter {k} is not finite")));
        }
        Ok(ParamVector(values))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        ParamVector(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// A scalar map of a point (or angle) with a parameter gradient.
pub trait FunctionalForm {
    fn input_dim(&self) -> usize;

    fn num_params(&self) -> usize;

    fn eval(&self, theta: &[f64], x: &[f64]) -> f64;

    /// Adds `cot * d(value)/d(theta)` to `grad`; returns the value.
    fn backward(&self, theta: &[f64], x: &[f64], cot: f64, grad: &mut [f64]) -> f64;

    fn eval_with_grad(&self, theta: &[f64], x: &[f64]) -> (f64, ParamVector) {
        let mut grad = ParamVector::zeros(self.num_params());
        let value = self.backward(theta, x, 1.0, &mut grad);
        (value, grad)
    }
}

/// Structure of a functional form, without parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Form {
    Nn(NnForm),
    Pl(PlForm),
    Rbf(RbfForm),
    /// `softplus(inner)`, keeping the output positive.
    Softplus { inner: Box<Form> },
    Symmetrized(SymmetrizedCircleForm),
}

impl Form {
    pub fn validate(&self) -> Result<()> {
        match self {
            Form::Nn(f) => f.validate(),
            Form::Pl(f) => f.validate(),
            Form::Rbf(f) => f.validate(),
            Form::Softplus { inner } => inner.validate(),
            Form::Symmetrized(f) => f.validate(),
        }
    }

    /// Deterministic initial parameters: He-uniform network weights with zero
    /// biases, [`LINEAR_INIT`] for every linear coefficient.
    pub fn init_params(&self, seed: u64) -> Result<ParamVector> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(ParamVector(self.init_with(&mut rng)))
    }

    fn init_with(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Form::Nn(f) => f.init_params(rng),
            Form::Pl(f) => vec![LINEAR_INIT; f.num_params()],
            Form::Rbf(f) => vec![LINEAR_INIT; f.num_params()],
            Form::Softplus { inner } => inner.init_with(rng),
            Form::Symmetrized(f) => f.inner.init_with(rng),
        }
    }

    /// Data-aware adjustment of network parameters from [`Form::init_params`]
    /// (no-op for linear forms): first-layer kinks are spread over the span
    /// of `inputs`, and the output starts near the constant [`LINEAR_INIT`] with
    /// small fluctuations, so every form kind starts from the same level.
    pub fn condition_init(&self, theta: &mut [f64], inputs: &[f64], seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        self.condition_with(theta, inputs, LINEAR_INIT, &mut rng);
    }

    fn condition_with(&self, theta: &mut [f64], inputs: &[f64], level: f64, rng: &mut ChaCha8Rng) {
        match self {
            Form::Nn(f) => f.condition_init(theta, inputs, level, NN_INIT_SPREAD * level, rng),
            Form::Pl(_) | Form::Rbf(_) => {}
            Form::Softplus { inner } => inner.condition_with(theta, inputs, inverse_softplus(level), rng),
            Form::Symmetrized(f) => {
                let both: Vec<f64> = inputs
                    .iter()
                    .flat_map(|&a| {
                        let (p, q) = SymmetrizedCircleForm::antipodal_pair(a);
                        [p, q]
                    })
                    .collect();
                f.inner.condition_with(theta, &both, level, rng)
            }
        }
    }

    pub fn softplus(self) -> Form {
        Form::Softplus { inner: Box::new(self) }
    }

    pub fn symmetrized(self) -> Result<Form> {
        Ok(Form::Symmetrized(SymmetrizedCircleForm::new(self)?))
    }
}

impl FunctionalForm for Form {
    fn input_dim(&self) -> usize {
        match self {
            Form::Nn(f) => f.input_dim(),
            Form::Pl(f) => f.dim,
            Form::Rbf(f) => f.input_dim(),
            Form::Softplus { inner } => inner.input_dim(),
            Form::Symmetrized(f) => f.input_dim(),
        }
    }

    fn num_params(&self) -> usize {
        match self {
            Form::Nn(f) => f.num_params(),
            Form::Pl(f) => f.num_params(),
            Form::Rbf(f) => f.num_params(),
            Form::Softplus { inner } => inner.num_params(),
            Form::Symmetrized(f) => f.num_params(),
        }
    }

    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        match self {
            Form::Nn(f) => f.eval(theta, x),
            Form::Pl(f) => f.eval(theta, x),
            Form::Rbf(f) => f.eval(theta, x),
            Form::Softplus { inner } => softplus(inner.eval(theta, x)),
            Form::Symmetrized(f) => f.eval(theta, x),
        }
    }

    fn backward(&self, theta: &[f64], x: &[f64], cot: f64, grad: &mut [f64]) -> f64 {
        match self {
            Form::Nn(f) => f.backward(theta, x, cot, grad),
            Form::Pl(f) => f.backward(theta, x, cot, grad),
            Form::Rbf(f) => f.backward(theta, x, cot, grad),
            Form::Softplus { inner } => {
                let raw = inner.eval(theta, x);
                inner.backward(theta, x, cot * sigmoid(raw), grad);
                softplus(raw)
            }
            Form::Symmetrized(f) => f.backward(theta, x, cot, grad),
        }
    }
}

/// `Gamma(s) = Gamma'(s) + Gamma'(-s)` for a 1D inner form on `[0, 2pi)`,
/// evaluated at an angle. The antipode of angle `a` is `a + pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedCircleForm {
    pub inner: Box<Form>,
}

impl SymmetrizedCircleForm {
    pub fn new(inner: Form) -> Result<Self> {
        let form = SymmetrizedCircleForm { inner: Box::new(inner) };
        form.validate()?;
        Ok(form)
    }

    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        if self.inner.input_dim() != 1 {
            return Err(Error::config("symmetrized circle form needs a 1D inner form"));
        }
        Ok(())
    }

    /// The antipodal pair `(p, p + pi)` with `p` in `[0, pi)`. Every angle
    /// congruent mod `pi` maps to the same pair.
    pub fn antipodal_pair(angle: f64) -> (f64, f64) {
        let mut p = angle.rem_euclid(PI);
        if p >= PI {
            p = 0.0;
        }
        (p, p + PI)
    }
}

impl FunctionalForm for SymmetrizedCircleForm {
    fn input_dim(&self) -> usize {
        1
    }

    fn num_params(&self) -> usize {
        self.inner.num_params()
    }

    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        let (p, q) = Self::antipodal_pair(x[0]);
        self.inner.eval(theta, &[p]) + self.inner.eval(theta, &[q])
    }

    fn backward(&self, theta: &[f64], x: &[f64], cot: f64, grad: &mut [f64]) -> f64 {
        let (p, q) = Self::antipodal_pair(x[0]);
        self.inner.backward(theta, &[p], cot, grad) + self.inner.backward(theta, &[q], cot, grad)
    }
}

/// A form together with its parameters; the JSON interchange format.
///
/// ```json
/// {"kind": "pl", "dim": 2, "grid": 10, "extent": [-5.0, 5.0], "params": [...]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSpec {
    #[serde(flatten)]
    pub form: Form,
    pub params: ParamVector,
}

impl FormSpec {
    pub fn new(form: Form, params: ParamVector) -> Result<Self> {
        let spec = FormSpec { form, params };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.form.validate()?;
        if self.params.len() != self.form.num_params() {
            return Err(Error::config(format!(
                "form expects {} parameters, got {}",
                self.form.num_params(),
                self.params.len()
            )));
        }
        ParamVector::new(self.params.to_vec())?;
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.form.eval(&self.params, x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FormSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

const BATCH_CHUNK: usize = 64;

/// Evaluates `form` at every point of a flat, row-major point array.
pub fn eval_batch<F>(form: &F, theta: &[f64], points: &[f64]) -> Vec<f64>
where
    F: FunctionalForm + Sync + ?Sized,
{
    let dim = form.input_dim();
    points
        .par_chunks(dim)
        .map(|x| form.eval(theta, x))
        .collect()
}

/// Adds `sum_k cot[k] * d form(points[k]) / d theta` to `grad` and returns
/// the values. Chunk gradients are reduced in a fixed order, so the result
/// does not depend on thread scheduling.
pub fn backward_batch<F>(
    form: &F,
    theta: &[f64],
    points: &[f64],
    cot: &[f64],
    grad: &mut [f64],
) -> Vec<f64>
where
    F: FunctionalForm + Sync + ?Sized,
{
    let dim = form.input_dim();
    let n_params = form.num_params();
    debug_assert_eq!(points.len(), dim * cot.len());
    let partials: Vec<(Vec<f64>, Vec<f64>)> = points
        .par_chunks(dim * BATCH_CHUNK)
        .zip(cot.par_chunks(BATCH_CHUNK))
        .map(|(pts, cts)| {
            let mut g = vec![0.0; n_params];
            let values = pts
                .chunks(dim)
                .zip(cts)
                .map(|(x, &c)| {
                    if c == 0.0 {
                        form.eval(theta, x)
                    } else {
                        form.backward(theta, x, c, &mut g)
                    }
                })
                .collect();
            (values, g)
        })
        .collect();
    let mut values = Vec::with_capacity(cot.len());
    for (v, g) in partials {
        values.extend(v);
        for (acc, x) in grad.iter_mut().zip(g) {
            *acc += x;
        }
    }
    values
}

pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`] for `y > 0`.
pub(crate) fn inverse_softplus(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
