//! Quadrature rules on the truncated disk `{|x| < M}` and on the unit circle.
//!
//! The disk rule is a polar product: composite Gauss-Legendre in the radius
//! (with the Jacobian `r` folded into the weights) times an equispaced,
//! half-step-offset trapezoid rule in the angle. When `M > 1` the radial rule
//! is split at `r = 1`, where the compensator indicator of the Lévy-Khintchine
//! integrand jumps. The half-step offset keeps nodes off the coordinate axes.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum Domain {
    Disk { radius: f64 },
    Circle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub domain: Domain,
    /// Node angles, circle rules only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub angles: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i f(x_i) w_i`, summed in node order.
    pub fn integrate<F: Fn([f64; 2]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }

    /// Writes `x,y,w` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "y", "w"])?;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            wtr.serialize((x[0], x[1], w))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Free-function form of [`QuadratureRule::integrate`].
pub fn integrate<F: Fn([f64; 2]) -> f64>(rule: &QuadratureRule, f: F) -> f64 {
    rule.integrate(f)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre on `(0, radius)` with the Jacobian `r` folded
/// into the weights.
fn radial_rule(radius: f64, n_radial: usize) -> Vec<(f64, f64)> {
    let segments: Vec<(f64, f64, usize)> = if radius > 1.0 && n_radial >= 2 {
        let inner = ((n_radial as f64 / radius).round() as usize).clamp(1, n_radial - 1);
        vec![(0.0, 1.0, inner), (1.0, radius, n_radial - inner)]
    } else {
        vec![(0.0, radius, n_radial)]
    };
    let mut out = Vec::with_capacity(n_radial);
    for (a, b, n) in segments {
        let (xs, ws) = gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in xs.into_iter().zip(ws) {
            let r = mid + half * x;
            out.push((r, w * half * r));
        }
    }
    out
}

/// Polar product rule on the open disk of radius `m`.
pub fn disk_rule(m: f64, n_radial: usize, n_angular: usize) -> Result<QuadratureRule> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::config(format!("disk radius must be positive, got {m}")));
    }
    if n_radial < 1 {
        return Err(Error::config("disk rule needs n_radial >= 1"));
    }
    if n_angular < 4 {
        return Err(Error::config("disk rule needs n_angular >= 4"));
    }
    let dtheta = 2.0 * PI / n_angular as f64;
    let radial = radial_rule(m, n_radial);
    let mut nodes = Vec::with_capacity(n_radial * n_angular);
    let mut weights = Vec::with_capacity(n_radial * n_angular);
    for &(r, wr) in &radial {
        for k in 0..n_angular {
            let t = (k as f64 + 0.5) * dtheta;
            nodes.push([r * t.cos(), r * t.sin()]);
            weights.push(wr * dtheta);
        }
    }
    Ok(QuadratureRule { nodes, weights, domain: Domain::Disk { radius: m }, angles: Vec::new() })
}

/// Splits a total node budget into `(n_radial, n_angular)`.
pub fn split_node_count(n_q: usize) -> (usize, usize) {
    let n_radial = (n_q as f64).sqrt().ceil() as usize;
    let n_radial = n_radial.max(1);
    (n_radial, n_q.div_ceil(n_radial))
}

/// Disk rule from a total node budget, see [`split_node_count`].
pub fn disk_rule_from_total(m: f64, n_q: usize) -> Result<QuadratureRule> {
    let (n_radial, n_angular) = split_node_count(n_q);
    disk_rule(m, n_radial, n_angular)
}

/// `n_q` equispaced nodes on the unit circle starting at angle 0, weights
/// `2pi / n_q`. Node `k + n_q/2` is the exact negation of node `k`.
pub fn circle_rule(n_q: usize) -> Result<QuadratureRule> {
    if n_q < 4 {
        return Err(Error::config("circle rule needs n_q >= 4"));
    }
    if n_q % 2 == 1 {
        return Err(Error::config(format!(
            "circle rule needs an even node count for antipodal pairing, got {n_q}"
        )));
    }
    let half = n_q / 2;
    let step = 2.0 * PI / n_q as f64;
    let mut nodes = Vec::with_capacity(n_q);
    let mut angles = Vec::with_capacity(n_q);
    for k in 0..half {
        let t = k as f64 * step;
        nodes.push([t.cos(), t.sin()]);
        angles.push(t);
    }
    for k in 0..half {
        let [x, y] = nodes[k];
        nodes.push([-x, -y]);
        angles.push(angles[k] + PI);
    }
    let weights = vec![step; n_q];
    Ok(QuadratureRule { nodes, weights, domain: Domain::Circle, angles })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn disk_weights_sum_to_area() {
        for (m, nr, na) in [(5.0, 64, 64), (0.5, 3, 4), (2.0, 1, 7), (7.3, 10, 12)] {
            let rule = disk_rule(m, nr, na).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!(((total - PI * m * m) / (PI * m * m)).abs() < 1e-10);
            assert_eq!(rule.len(), nr * na);
            assert!(rule.nodes.iter().all(|x| x[0].hypot(x[1]) < m));
            assert!(rule.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn disk_gaussian_integral() {
        let rule = disk_rule(5.0, 64, 64).unwrap();
        let got = rule.integrate(|x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let exact = PI * (1.0 - (-25f64).exp());
        assert!((got - exact).abs() < 1e-8);
    }

    #[test]
    fn disk_odd_integrand_vanishes() {
        let rule = disk_rule(3.0, 12, 16).unwrap();
        assert!(rule.integrate(|x| x[0]).abs() < 1e-12);
        assert!(rule.integrate(|x| x[1]).abs() < 1e-12);
    }

    #[test]
    fn disk_nodes_avoid_axes() {
        let rule = disk_rule(2.0, 4, 8).unwrap();
        assert!(rule.nodes.iter().all(|x| x[0].abs() > 1e-3 && x[1].abs() > 1e-3));
    }

    #[test]
    fn disk_rule_rejects_bad_config() {
        assert!(disk_rule(0.0, 4, 4).is_err());
        assert!(disk_rule(-1.0, 4, 4).is_err());
        assert!(disk_rule(1.0, 0, 4).is_err());
        assert!(disk_rule(1.0, 4, 3).is_err());
    }

    #[test]
    fn node_budget_split() {
        assert_eq!(split_node_count(4096), (64, 64));
        assert_eq!(split_node_count(100), (10, 10));
        assert_eq!(split_node_count(50), (8, 7));
    }

    #[test]
    fn circle_rule_four_nodes() {
        let rule = circle_rule(4).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (x, w) in rule.nodes.iter().zip(want) {
            assert!((x[0] - w[0]).abs() < 1e-15 && (x[1] - w[1]).abs() < 1e-15);
        }
        assert!(rule.weights.iter().all(|&w| w == PI / 2.0));
    }

    #[test]
    fn circle_rule_low_harmonics() {
        for n in [4, 6, 10, 100] {
            let rule = circle_rule(n).unwrap();
            assert!((rule.integrate(|s| s[0] * s[0]) - PI).abs() < 1e-12);
            assert!((rule.integrate(|_| 1.0) - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_abs_cos() {
        let rule = circle_rule(1000).unwrap();
        // Nodes sit on the kinks when 4 | n; the sum is (4 pi / n) cot(pi / n).
        let n = 1000.0;
        let closed = 4.0 * PI / n / (PI / n).tan();
        let got = rule.integrate(|s| s[0].abs());
        assert!((got - closed).abs() < 1e-12);
        assert!((got - 4.0).abs() < 1.4e-5);
    }

    #[test]
    fn circle_rule_antipodal_closure() {
        let rule = circle_rule(20).unwrap();
        let h = rule.len() / 2;
        for k in 0..h {
            assert_eq!(rule.nodes[k + h], [-rule.nodes[k][0], -rule.nodes[k][1]]);
            assert_eq!(rule.weights[k + h], rule.weights[k]);
        }
        assert!(rule.nodes.iter().all(|s| (s[0].hypot(s[1]) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn circle_rule_rejects_odd() {
        assert!(circle_rule(7).is_err());
        assert!(circle_rule(2).is_err());
    }

    #[test]
    fn csv_export() {
        let rule = circle_rule(4).unwrap();
        let mut buf = Vec::new();
        rule.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("x,y,w\n1.0,0.0,"));
    }
}
