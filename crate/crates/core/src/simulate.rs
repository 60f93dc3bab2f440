//! Synthetic increments: symmetric α-stable vectors through a discretized
//! spectral measure, and compound-Poisson processes with a finite Lévy
//! measure.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::IncrementSeries;
use crate::error::{Error, Result};
use crate::quadrature::{circle_rule, disk_rule};

/// Default number of directions used to discretize a spectral measure.
pub const DEFAULT_DIRECTIONS: usize = 256;

const PILOT_PROPOSALS: usize = 10_000;
const MIN_ACCEPTANCE: f64 = 0.01;
const MAX_PROPOSALS_PER_JUMP: usize = 1_000_000;

/// Purpose tag of a random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Stable = 1,
    Counts = 2,
    Jumps = 3,
    Angles = 4,
    Pilot = 5,
}

/// Seed of a counter-based generator family. Each (purpose, index) pair
/// selects an independent ChaCha stream, so draws do not depend on the
/// order in which increments are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed }
    }

    pub fn substream(&self, purpose: Stream, index: u64) -> ChaCha8Rng {
        let key = splitmix64(self.seed ^ splitmix64(purpose as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::config(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    Ok(())
}

/// One standard symmetric α-stable draw (CF `exp(-|t|^alpha)`) by the
/// Chambers-Mallows-Stuck transform.
pub fn cms_draw<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            break PI * (v - 0.5);
        }
    };
    if alpha == 1.0 {
        return u.tan();
    }
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin() / u.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).cos() / e).powf((1.0 - alpha) / alpha);
    a * b
}

/// `n` i.i.d. standard symmetric α-stable samples.
pub fn sample_stable_1d(alpha: f64, n: usize, rng: &RngState) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mut stream = rng.substream(Stream::Stable, u64::MAX);
    Ok((0..n).map(|_| cms_draw(alpha, &mut stream)).collect())
}

/// Increments of a 2D symmetric α-stable process whose spectral density
/// `gamma(angle)` is discretized on `n_dirs` equispaced directions:
/// `X = sum_j (dt w_j Gamma(s_j))^{1/alpha} Z_j s_j`.
pub fn sample_stable_increments<G>(
    gamma: G,
    alpha: f64,
    dt: f64,
    n: usize,
    n_dirs: usize,
    rng: &RngState,
) -> Result<IncrementSeries>
where
    G: Fn(f64) -> f64,
{
    check_alpha(alpha)?;
    let rule = circle_rule(n_dirs)?;
    let mut dirs = Vec::with_capacity(n_dirs);
    for ((s, w), &t) in rule.nodes.iter().zip(&rule.weights).zip(&rule.angles) {
        let g = gamma(t);
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::Domain(format!("spectral density {g} at angle {t} is negative or not finite")));
        }
        if g > 0.0 {
            dirs.push(((dt * w * g).powf(1.0 / alpha), *s));
        }
    }
    let increments = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.substream(Stream::Stable, i);
            let mut x = [0.0, 0.0];
            for &(scale, s) in &dirs {
                let z = scale * cms_draw(alpha, &mut stream);
                x[0] += z * s[0];
                x[1] += z * s[1];
            }
            x
        })
        .collect();
    IncrementSeries::new(dt, increments)
}

/// Proposal distribution for rejection sampling of jump sizes, with
/// `nu(x) / mass <= bound * density(x)`.
pub trait JumpEnvelope: Sync {
    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 2];
    fn density(&self, x: [f64; 2]) -> f64;
    fn bound(&self) -> f64;
}

/// `nu(x) = (2/pi) exp(-|x|^2 / 2)` on the closed first quadrant; total mass 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormalDensity;

impl TruncatedNormalDensity {
    pub fn density(&self, x: [f64; 2]) -> f64 {
        if x[0] >= 0.0 && x[1] >= 0.0 {
            2.0 / PI * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()
        } else {
            0.0
        }
    }

    pub fn mass(&self) -> f64 {
        1.0
    }
}

/// Two independent half-normal coordinates. Matches the normalized
/// truncated normal exactly, so every proposal is accepted.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfNormalEnvelope;

impl JumpEnvelope for HalfNormalEnvelope {
    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        [a.abs(), b.abs()]
    }

    fn density(&self, x: [f64; 2]) -> f64 {
        TruncatedNormalDensity.density(x)
    }

    fn bound(&self) -> f64 {
        1.0
    }
}

/// Compound-Poisson increments together with their jump counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonSample {
    pub series: IncrementSeries,
    pub jump_counts: Vec<u64>,
    /// `-dt * int_{|x| <= 1} x nu(dx)`, added to every increment.
    pub drift: [f64; 2],
}

/// `-dt int_{|x|<=1} x nu(x) dx` by quadrature on the unit disk.
pub fn compensator_drift<F: Fn([f64; 2]) -> f64>(nu: &F, dt: f64) -> Result<[f64; 2]> {
    let rule = disk_rule(1.0, 64, 64)?;
    let mx = rule.integrate(|x| x[0] * nu(x));
    let my = rule.integrate(|x| x[1] * nu(x));
    Ok([-dt * mx, -dt * my])
}

fn draw_jump<F, E>(nu: &F, mass: f64, envelope: &E, rng: &mut ChaCha8Rng) -> Result<[f64; 2]>
where
    F: Fn([f64; 2]) -> f64,
    E: JumpEnvelope,
{
    for _ in 0..MAX_PROPOSALS_PER_JUMP {
        let x = envelope.sample(rng);
        let g = envelope.density(x) * envelope.bound();
        let ratio = if g > 0.0 { nu(x) / mass / g } else { 0.0 };
        if ratio >= 1.0 || rng.random::<f64>() < ratio {
            return Ok(x);
        }
    }
    Err(Error::Envelope { rate: 0.0, proposals: MAX_PROPOSALS_PER_JUMP })
}

/// Increments `sum_{k<=N} J_k - dt int_{|x|<=1} x nu(dx)` with
/// `N ~ Poisson(mass dt)` and `J_k ~ nu / mass` by rejection from `envelope`.
pub fn sample_compound_poisson<F, E>(
    nu: F,
    mass: f64,
    envelope: &E,
    dt: f64,
    n: usize,
    rng: &RngState,
) -> Result<CompoundPoissonSample>
where
    F: Fn([f64; 2]) -> f64 + Sync,
    E: JumpEnvelope,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config(format!("time step must be positive, got {dt}")));
    }
    if !(mass >= 0.0 && mass.is_finite()) {
        return Err(Error::config(format!("jump mass must be finite and nonnegative, got {mass}")));
    }
    if mass == 0.0 {
        return Ok(CompoundPoissonSample {
            series: IncrementSeries::new(dt, vec![[0.0, 0.0]; n])?,
            jump_counts: vec![0; n],
            drift: [0.0, 0.0],
        });
    }

    let mut pilot = rng.substream(Stream::Pilot, 0);
    let mut accepted = 0usize;
    for _ in 0..PILOT_PROPOSALS {
        let x = envelope.sample(&mut pilot);
        let g = envelope.density(x) * envelope.bound();
        let ratio = if g > 0.0 { nu(x) / mass / g } else { 0.0 };
        if ratio >= 1.0 || pilot.random::<f64>() < ratio {
            accepted += 1;
        }
    }
    let rate = accepted as f64 / PILOT_PROPOSALS as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(Error::Envelope { rate, proposals: PILOT_PROPOSALS });
    }

    let drift = compensator_drift(&nu, dt)?;
    let counts = Poisson::new(mass * dt).map_err(|e| Error::config(e.to_string()))?;
    let draws: Vec<Result<([f64; 2], u64)>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut count_rng = rng.substream(Stream::Counts, i);
            let mut jump_rng = rng.substream(Stream::Jumps, i);
            let k = counts.sample(&mut count_rng) as u64;
            let mut x = drift;
            for _ in 0..k {
                let j = draw_jump(&nu, mass, envelope, &mut jump_rng)?;
                x[0] += j[0];
                x[1] += j[1];
            }
            Ok((x, k))
        })
        .collect();
    let mut increments = Vec::with_capacity(n);
    let mut jump_counts = Vec::with_capacity(n);
    for d in draws {
        let (x, k) = d?;
        increments.push(x);
        jump_counts.push(k);
    }
    Ok(CompoundPoissonSample { series: IncrementSeries::new(dt, increments)?, jump_counts, drift })
}

/// Truncated-normal compound-Poisson increments with the exact envelope.
pub fn sample_truncated_normal(dt: f64, n: usize, rng: &RngState) -> Result<CompoundPoissonSample> {
    let density = TruncatedNormalDensity;
    sample_compound_poisson(move |x| density.density(x), density.mass(), &HalfNormalEnvelope, dt, n, rng)
}

/// Pointwise spectral densities used in experiments and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SpectralShape {
    /// `Gamma(s) = value`.
    Constant { value: f64 },
    /// `Gamma(s) = value * 1_{|s_1| > cut}`.
    Step { value: f64, cut: f64 },
}

impl SpectralShape {
    pub fn at(&self, angle: f64) -> f64 {
        match *self {
            SpectralShape::Constant { value } => value,
            SpectralShape::Step { value, cut } => {
                if angle.cos().abs() > cut {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    /// Angles where the density jumps, in `[0, 2pi)`.
    pub fn discontinuities(&self) -> Vec<f64> {
        match *self {
            SpectralShape::Constant { .. } => Vec::new(),
            SpectralShape::Step { cut, .. } => {
                let t = cut.clamp(-1.0, 1.0).acos();
                vec![t, PI - t, PI + t, 2.0 * PI - t]
            }
        }
    }
}

impl Default for SpectralShape {
    fn default() -> Self {
        SpectralShape::Constant { value: 1.0 }
    }
}
