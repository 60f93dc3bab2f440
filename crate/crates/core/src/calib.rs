//! Characteristic-function matching: builds the loss
//! `L(theta) = (1/m) sum_j |phi_hat(xi_j) - phi_theta(xi_j)|^2`, its exact
//! reverse-mode gradient, and runs the optimizer.

use std::f64::consts::PI;

use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::{
    alpha_from_latent, collocation_points, ecf, latent_from_alpha, select_m_prime, stable_cf_with,
    EcfEstimate, IncrementSeries, LevyModel, StableModel, EXPONENT_CAP,
};
use crate::error::{Error, Result};
use crate::funcform::{
    backward_batch, eval_batch, Form, FormSpec, FunctionalForm, NnForm, ParamVector, PlForm, RbfForm,
    SymmetrizedCircleForm,
};
use crate::optimizer::{minimize, OptTrace, OptimizerOptions, Termination};
use crate::quadrature::{circle_rule, disk_rule, disk_rule_from_total, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// General pure-jump process, density on the plane.
    Levy,
    /// Symmetric α-stable process, spectral density on the circle.
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Nn,
    Pl,
    Rbf,
}

/// Which functional form to fit and how large it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormConfig {
    pub kind: FormKind,
    /// Weight layers of the network.
    pub layers: usize,
    /// Vertices (PL) or centers (RBF) per axis.
    pub grid: usize,
    /// Apply softplus to keep the fitted density positive.
    pub softplus: bool,
}

impl Default for FormConfig {
    fn default() -> Self {
        FormConfig { kind: FormKind::Nn, layers: 5, grid: 20, softplus: false }
    }
}

impl FormConfig {
    pub fn nn(layers: usize) -> Self {
        FormConfig { kind: FormKind::Nn, layers, ..Default::default() }
    }

    pub fn pl(grid: usize) -> Self {
        FormConfig { kind: FormKind::Pl, grid, ..Default::default() }
    }

    pub fn rbf(grid: usize) -> Self {
        FormConfig { kind: FormKind::Rbf, grid, ..Default::default() }
    }

    /// Short label such as `NN5` or `PL20`.
    pub fn label(&self) -> String {
        match self.kind {
            FormKind::Nn => format!("NN{}", self.layers),
            FormKind::Pl => format!("PL{}", self.grid),
            FormKind::Rbf => format!("RBF{}", self.grid),
        }
    }

    /// Density form on `[-m, m]^2` for Lévy mode.
    pub fn build_levy(&self, m: f64) -> Result<Form> {
        let base = match self.kind {
            FormKind::Nn => Form::Nn(NnForm::with_depth(2, self.layers)?),
            FormKind::Pl => Form::Pl(PlForm::square(m, self.grid)?),
            FormKind::Rbf => Form::Rbf(RbfForm::grid_2d(m, self.grid)?),
        };
        Ok(if self.softplus { base.softplus() } else { base })
    }

    /// Symmetrized spectral form on the angle domain `[0, 2pi)`.
    pub fn build_stable(&self) -> Result<SymmetrizedCircleForm> {
        let base = match self.kind {
            FormKind::Nn => Form::Nn(NnForm::with_depth(1, self.layers)?),
            FormKind::Pl => Form::Pl(PlForm::new(1, self.grid, [0.0, 2.0 * PI])?),
            FormKind::Rbf => Form::Rbf(RbfForm::grid_1d(0.0, 2.0 * PI, self.grid)?),
        };
        let inner = if self.softplus { base.softplus() } else { base };
        SymmetrizedCircleForm::new(inner)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Truncation radius `M` of the disk (Lévy mode) and half-width of the
    /// PL/RBF domain.
    pub extent: f64,
    /// Total node count; `None` selects the mode default (4096 disk, 100 circle).
    pub n_q: Option<usize>,
    pub n_radial: Option<usize>,
    pub n_angular: Option<usize>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { extent: 5.0, n_q: None, n_radial: None, n_angular: None }
    }
}

pub const DEFAULT_DISK_NODES: usize = 4096;
pub const DEFAULT_CIRCLE_NODES: usize = 100;

impl QuadratureSpec {
    pub fn build(&self, mode: Mode) -> Result<QuadratureRule> {
        match mode {
            Mode::Levy => match (self.n_radial, self.n_angular) {
                (Some(r), Some(a)) => disk_rule(self.extent, r, a),
                _ => disk_rule_from_total(self.extent, self.n_q.unwrap_or(DEFAULT_DISK_NODES)),
            },
            Mode::Stable => circle_rule(self.n_q.unwrap_or(DEFAULT_CIRCLE_NODES)),
        }
    }
}

/// How collocation points are chosen when the data are raw increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollocationSpec {
    /// Half-width of the sampling square; `None` selects it from the ECF.
    pub m_prime: Option<f64>,
    pub threshold: f64,
    /// The automatic threshold is raised to `noise_floor / sqrt(n)` so that
    /// sampling noise in the ECF tail does not hold the scan open.
    pub noise_floor: f64,
    pub m_colloc: usize,
    pub seed: u64,
}

impl Default for CollocationSpec {
    fn default() -> Self {
        CollocationSpec {
            m_prime: None,
            threshold: crate::charfn::DEFAULT_THRESHOLD,
            noise_floor: 3.0,
            m_colloc: 1000,
            seed: 0,
        }
    }
}

/// Observations: raw increments, or CF values already at collocation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Increments(IncrementSeries),
    Ecf { estimate: EcfEstimate, dt: f64 },
}

impl DataSource {
    pub fn dt(&self) -> f64 {
        match self {
            DataSource::Increments(s) => s.dt,
            DataSource::Ecf { dt, .. } => *dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibProblem {
    pub mode: Mode,
    pub form: FormConfig,
    pub quadrature: QuadratureSpec,
    pub data: DataSource,
    pub collocation: CollocationSpec,
    /// Seed of the parameter initialization.
    pub init_seed: u64,
    /// Starting index, stable mode only.
    pub alpha_init: f64,
}

impl CalibProblem {
    pub fn new(mode: Mode, form: FormConfig, data: DataSource) -> Self {
        CalibProblem {
            mode,
            form,
            quadrature: QuadratureSpec::default(),
            data,
            collocation: CollocationSpec::default(),
            init_seed: 0,
            alpha_init: 1.0,
        }
    }
}

/// A model paired with its parameter layout. Stable-mode parameter vectors
/// carry the latent index `a` (with `alpha = 2 sigmoid(a)`) as the last entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Levy(LevyModel),
    Stable(StableModel),
}

impl Model {
    pub fn num_params(&self) -> usize {
        match self {
            Model::Levy(m) => m.num_params(),
            Model::Stable(m) => m.num_form_params() + 1,
        }
    }
}

/// Precomputed loss for fixed collocation points and target CF values.
pub struct Objective {
    model: Model,
    targets: Vec<Complex64>,
    dt: f64,
    cache: Cache,
}

enum Cache {
    Levy {
        nodes: Vec<f64>,
        /// Row-major `m x n_q` kernel times weight, real and imaginary parts.
        kre: Vec<f64>,
        kim: Vec<f64>,
        n_q: usize,
    },
    Stable {
        half_angles: Vec<f64>,
        /// Row-major `m x n_q/2`: `ln |<xi_j, s_k>|`.
        log_abs: Vec<f64>,
        /// Combined weight of each antipodal pair.
        pair_w: Vec<f64>,
    },
}

const ROW_CHUNK: usize = 32;

impl Objective {
    pub fn new(model: Model, ecf: &EcfEstimate, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config(format!("time step must be positive, got {dt}")));
        }
        if ecf.is_empty() || ecf.values.len() != ecf.points.len() {
            return Err(Error::data("ECF estimate needs matching, nonempty points and values"));
        }
        let cache = match &model {
            Model::Levy(m) => {
                let n_q = m.rule.len();
                let mut kre = Vec::with_capacity(ecf.len() * n_q);
                let mut kim = Vec::with_capacity(ecf.len() * n_q);
                let rows: Vec<(Vec<f64>, Vec<f64>)> = ecf
                    .points
                    .par_iter()
                    .map(|&xi| {
                        let mut re = Vec::with_capacity(n_q);
                        let mut im = Vec::with_capacity(n_q);
                        for (&x, &w) in m.rule.nodes.iter().zip(&m.rule.weights) {
                            let k = crate::charfn::levy_kernel(xi, x);
                            re.push(k.re * w);
                            im.push(k.im * w);
                        }
                        (re, im)
                    })
                    .collect();
                for (re, im) in rows {
                    kre.extend(re);
                    kim.extend(im);
                }
                Cache::Levy { nodes: m.flat_nodes(), kre, kim, n_q }
            }
            Model::Stable(m) => {
                let half = m.rule.len() / 2;
                let mut log_abs = Vec::with_capacity(ecf.len() * half);
                for &xi in &ecf.points {
                    for s in &m.rule.nodes[..half] {
                        log_abs.push((xi[0] * s[0] + xi[1] * s[1]).abs().ln());
                    }
                }
                let pair_w = (0..half).map(|k| m.rule.weights[k] + m.rule.weights[k + half]).collect();
                Cache::Stable { half_angles: m.half_angles().to_vec(), log_abs, pair_w }
            }
        };
        Ok(Objective { model, targets: ecf.values.clone(), dt, cache })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn num_params(&self) -> usize {
        self.model.num_params()
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        self.evaluate(theta, false).map(|(f, _)| f)
    }

    pub fn loss_with_grad(&self, theta: &[f64]) -> Result<(f64, ParamVector)> {
        self.evaluate(theta, true).map(|(f, g)| (f, ParamVector::from_raw(g)))
    }

    /// Model CF at every collocation point.
    pub fn model_cf(&self, theta: &[f64]) -> Result<Vec<Complex64>> {
        match (&self.model, &self.cache) {
            (Model::Levy(m), Cache::Levy { nodes, kre, kim, n_q }) => {
                let nu = eval_batch(&m.nu, theta, nodes);
                self.levy_exponents(&nu, kre, kim, *n_q)?
                    .into_iter()
                    .map(crate::charfn::checked_exp)
                    .collect()
            }
            (Model::Stable(m), Cache::Stable { half_angles, log_abs, pair_w }) => {
                let (form_theta, alpha) = split_stable(theta, m)?;
                let gamma = eval_batch(&m.gamma, form_theta, half_angles);
                let half = gamma.len();
                log_abs
                    .chunks(half)
                    .map(|row| {
                        let e = -self.dt * stable_row_sum(row, &gamma, pair_w, alpha);
                        crate::charfn::checked_exp(Complex64::new(e, 0.0))
                    })
                    .collect()
            }
            _ => unreachable!("cache matches model"),
        }
    }

    fn levy_exponents(&self, nu: &[f64], kre: &[f64], kim: &[f64], n_q: usize) -> Result<Vec<Complex64>> {
        let exps: Vec<Complex64> = kre
            .par_chunks(n_q)
            .zip(kim.par_chunks(n_q))
            .map(|(re, im)| {
                let (mut a, mut b) = (0.0, 0.0);
                for ((r, i), v) in re.iter().zip(im).zip(nu) {
                    a += r * v;
                    b += i * v;
                }
                Complex64::new(a * self.dt, b * self.dt)
            })
            .collect();
        if let Some(e) = exps.iter().find(|e| e.re.is_nan() || e.re > EXPONENT_CAP) {
            return Err(Error::DivergentDensity { exponent: e.re, cap: EXPONENT_CAP });
        }
        Ok(exps)
    }

    fn evaluate(&self, theta: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>)> {
        if theta.len() != self.num_params() {
            return Err(Error::config(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                theta.len()
            )));
        }
        let m = self.targets.len() as f64;
        match (&self.model, &self.cache) {
            (Model::Levy(model), Cache::Levy { nodes, kre, kim, n_q }) => {
                let nu = eval_batch(&model.nu, theta, nodes);
                let exps = self.levy_exponents(&nu, kre, kim, *n_q)?;
                let mut loss = 0.0;
                // c_j = conj(phi_j - phi_hat_j) * phi_j
                let mut adj = Vec::with_capacity(exps.len());
                for (e, t) in exps.iter().zip(&self.targets) {
                    let phi = crate::charfn::checked_exp(*e)?;
                    let r = phi - t;
                    loss += r.norm_sqr();
                    adj.push(r.conj() * phi);
                }
                loss /= m;
                if !want_grad {
                    return Ok((loss, Vec::new()));
                }
                // dL/dnu_i = (2 dt / m) sum_j Re(c_j K_ji)
                let scale = 2.0 * self.dt / m;
                let partials: Vec<Vec<f64>> = kre
                    .par_chunks(n_q * ROW_CHUNK)
                    .zip(kim.par_chunks(n_q * ROW_CHUNK))
                    .zip(adj.par_chunks(ROW_CHUNK))
                    .map(|((re, im), cs)| {
                        let mut acc = vec![0.0; *n_q];
                        for ((rrow, irow), c) in re.chunks(*n_q).zip(im.chunks(*n_q)).zip(cs) {
                            for ((a, r), i) in acc.iter_mut().zip(rrow).zip(irow) {
                                *a += c.re * r - c.im * i;
                            }
                        }
                        acc
                    })
                    .collect();
                let mut dnu = vec![0.0; *n_q];
                for p in partials {
                    for (d, v) in dnu.iter_mut().zip(p) {
                        *d += v;
                    }
                }
                dnu.iter_mut().for_each(|d| *d *= scale);
                let mut grad = vec![0.0; theta.len()];
                backward_batch(&model.nu, theta, nodes, &dnu, &mut grad);
                Ok((loss, grad))
            }
            (Model::Stable(model), Cache::Stable { half_angles, log_abs, pair_w }) => {
                let (form_theta, alpha) = split_stable(theta, model)?;
                let gamma = eval_batch(&model.gamma, form_theta, half_angles);
                let half = gamma.len();
                let mut loss = 0.0;
                // g_j = dL/d(exponent_j)
                let mut g = Vec::with_capacity(self.targets.len());
                for (row, t) in log_abs.chunks(half).zip(&self.targets) {
                    let e = -self.dt * stable_row_sum(row, &gamma, pair_w, alpha);
                    if e.is_nan() || e > EXPONENT_CAP {
                        return Err(Error::DivergentDensity { exponent: e, cap: EXPONENT_CAP });
                    }
                    let phi = e.exp();
                    let r_re = phi - t.re;
                    loss += r_re * r_re + t.im * t.im;
                    g.push(2.0 / m * r_re * phi);
                }
                loss /= m;
                if !want_grad {
                    return Ok((loss, Vec::new()));
                }
                let mut dgamma = vec![0.0; half];
                let mut dalpha = 0.0;
                for (row, gj) in log_abs.chunks(half).zip(&g) {
                    if *gj == 0.0 {
                        continue;
                    }
                    let coef = -self.dt * gj;
                    for k in 0..half {
                        let la = row[k];
                        if la == f64::NEG_INFINITY {
                            continue;
                        }
                        let p = (alpha * la).exp() * pair_w[k];
                        dgamma[k] += coef * p;
                        dalpha += coef * p * la * gamma[k];
                    }
                }
                let mut grad = vec![0.0; theta.len()];
                let n_form = model.num_form_params();
                backward_batch(&model.gamma, form_theta, half_angles, &dgamma, &mut grad[..n_form]);
                // d alpha / d a = alpha (1 - alpha / 2)
                grad[n_form] = dalpha * alpha * (1.0 - alpha / 2.0);
                Ok((loss, grad))
            }
            _ => unreachable!("cache matches model"),
        }
    }
}

fn split_stable<'a>(theta: &'a [f64], model: &StableModel) -> Result<(&'a [f64], f64)> {
    let n = model.num_form_params();
    if theta.len() != n + 1 {
        return Err(Error::config(format!("expected {} parameters, got {}", n + 1, theta.len())));
    }
    Ok((&theta[..n], alpha_from_latent(theta[n])))
}

#[inline]
fn stable_row_sum(log_abs: &[f64], gamma: &[f64], pair_w: &[f64], alpha: f64) -> f64 {
    let mut acc = 0.0;
    for ((la, g), w) in log_abs.iter().zip(gamma).zip(pair_w) {
        if *la != f64::NEG_INFINITY {
            acc += (alpha * la).exp() * g * w;
        }
    }
    acc
}

/// `(1/m) sum_j |phi_hat(xi_j) - phi_theta(xi_j)|^2`.
pub fn loss(model: &Model, theta: &[f64], ecf: &EcfEstimate, dt: f64) -> Result<f64> {
    Objective::new(model.clone(), ecf, dt)?.loss(theta)
}

/// Loss and its exact gradient with respect to every entry of `theta`.
pub fn loss_with_grad(model: &Model, theta: &[f64], ecf: &EcfEstimate, dt: f64) -> Result<(f64, ParamVector)> {
    Objective::new(model.clone(), ecf, dt)?.loss_with_grad(theta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub m_prime: Option<f64>,
    pub m_prime_auto: bool,
    pub threshold_used: Option<f64>,
    pub m_colloc: usize,
    pub n_obs: Option<usize>,
    pub dt: f64,
    pub n_q: usize,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibResult {
    pub mode: Mode,
    pub form_label: String,
    /// Fitted form with its parameters (without the latent index).
    pub form: FormSpec,
    pub theta_star: ParamVector,
    pub alpha_hat: Option<f64>,
    pub final_loss: f64,
    pub trace: OptTrace,
    pub diagnostics: Diagnostics,
}

impl CalibResult {
    /// Fitted `Gamma_theta` at `n` equispaced angles in `[0, 2pi)`.
    pub fn gamma_curve(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                (t, self.form.eval(&[t]))
            })
            .collect()
    }

    /// Fitted `nu_theta` on an `n x n` grid over `[-extent, extent]^2`.
    pub fn nu_grid(&self, extent: f64, n: usize) -> Vec<(f64, f64, f64)> {
        let h = if n > 1 { 2.0 * extent / (n - 1) as f64 } else { 0.0 };
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (-extent + i as f64 * h, -extent + j as f64 * h);
                out.push((x, y, self.form.eval(&[x, y])));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// CF values of a symmetric α-stable law with spectral density `gamma`,
/// integrated on an `n_q`-node circle rule, at the given points.
pub fn exact_stable_ecf<G: Fn(f64) -> f64>(
    gamma: G,
    alpha: f64,
    dt: f64,
    n_q: usize,
    points: &[[f64; 2]],
) -> Result<EcfEstimate> {
    let rule = circle_rule(n_q)?;
    let values = points
        .iter()
        .map(|&xi| stable_cf_with(&gamma, &rule, alpha, xi, dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(EcfEstimate { points: points.to_vec(), values, n: 0 })
}

/// Builds the model for a problem.
pub fn build_model(problem: &CalibProblem) -> Result<Model> {
    let rule = problem.quadrature.build(problem.mode)?;
    Ok(match problem.mode {
        Mode::Levy => Model::Levy(LevyModel::new(problem.form.build_levy(problem.quadrature.extent)?, rule)?),
        Mode::Stable => Model::Stable(StableModel::new(problem.form.build_stable()?, rule)?),
    })
}

/// Collocation points and target CF values for a problem, plus the
/// diagnostics of how they were chosen.
pub fn prepare_targets(problem: &CalibProblem) -> Result<(EcfEstimate, Diagnostics)> {
    let mut diag = Diagnostics {
        m_prime: None,
        m_prime_auto: false,
        threshold_used: None,
        m_colloc: 0,
        n_obs: None,
        dt: problem.data.dt(),
        n_q: 0,
        converged: false,
        termination: Termination::MaxIterations,
        iterations: 0,
        evaluations: 0,
        warnings: Vec::new(),
    };
    let est = match &problem.data {
        DataSource::Ecf { estimate, .. } => estimate.clone(),
        DataSource::Increments(series) => {
            let spec = &problem.collocation;
            let m_prime = match spec.m_prime {
                Some(v) => v,
                None => {
                    let threshold = spec.threshold.max(spec.noise_floor / (series.len() as f64).sqrt()).min(1.0);
                    let sel = select_m_prime(series, threshold)?;
                    diag.m_prime_auto = true;
                    diag.threshold_used = Some(threshold);
                    if let Some(w) = sel.warning {
                        warn!("{w}");
                        diag.warnings.push(w);
                    }
                    info!("selected M' = {} (threshold {threshold})", sel.m_prime);
                    sel.m_prime
                }
            };
            diag.m_prime = Some(m_prime);
            diag.n_obs = Some(series.len());
            let points = collocation_points(m_prime, spec.m_colloc, spec.seed)?;
            ecf(series, &points)
        }
    };
    diag.m_colloc = est.len();
    Ok((est, diag))
}

/// Runs the full pipeline: targets, model, initialization, L-BFGS.
pub fn calibrate(problem: &CalibProblem, opts: &OptimizerOptions) -> Result<CalibResult> {
    let (targets, mut diag) = prepare_targets(problem)?;
    let model = build_model(problem)?;
    let form = match &model {
        Model::Levy(m) => m.nu.clone(),
        Model::Stable(m) => Form::Symmetrized(m.gamma.clone()),
    };
    diag.n_q = match &model {
        Model::Levy(m) => m.rule.len(),
        Model::Stable(m) => m.rule.len(),
    };
    let mut theta0 = form.init_params(problem.init_seed)?.into_inner();
    let inputs = match &model {
        Model::Levy(m) => m.flat_nodes(),
        Model::Stable(m) => m.half_angles().to_vec(),
    };
    form.condition_init(&mut theta0, &inputs, problem.init_seed);
    if problem.mode == Mode::Stable {
        theta0.push(latent_from_alpha(problem.alpha_init)?);
    }
    let objective = Objective::new(model, &targets, problem.data.dt())?;
    let min = minimize(
        |theta| match objective.loss_with_grad(theta) {
            Ok((f, g)) => (f, g.into_inner()),
            Err(_) => (f64::NAN, vec![f64::NAN; theta.len()]),
        },
        &theta0,
        opts,
    )?;

    let n_form = form.num_params();
    let alpha_hat = (problem.mode == Mode::Stable).then(|| alpha_from_latent(min.theta[n_form]));
    diag.termination = min.trace.termination;
    diag.converged = min.trace.termination != Termination::LineSearchFailure;
    diag.iterations = min.trace.records.len() - 1;
    diag.evaluations = min.trace.evaluations;
    if !diag.converged {
        diag.warnings.push("line search failed; returning best parameters found".into());
    }
    let params = ParamVector::new(min.theta[..n_form].to_vec())?;
    Ok(CalibResult {
        mode: problem.mode,
        form_label: problem.form.label(),
        form: FormSpec::new(form, params.clone())?,
        theta_star: params,
        alpha_hat,
        final_loss: min.f,
        trace: min.trace,
        diagnostics: diag,
    })
}
