use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous piecewise-linear interpolant on a uniform grid over the
/// hypercube `[lower, upper]^dim`, one degree of freedom per vertex.
///
/// In 2D each square cell is split along its lower-left to upper-right
/// diagonal; points on the diagonal belong to the lower triangle. Vertex
/// `(i, j)` (x index `i`) has parameter index `j * nodes + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlForm {
    pub dim: usize,
    /// Vertices per axis.
    pub grid: usize,
    /// `[lower, upper]` along every axis.
    pub extent: [f64; 2],
}

impl PlForm {
    pub fn new(dim: usize, grid: usize, extent: [f64; 2]) -> Result<Self> {
        let form = PlForm { dim, grid, extent };
        form.validate()?;
        Ok(form)
    }

    /// Square `[-m, m]^2` with `grid` vertices per axis.
    pub fn square(m: f64, grid: usize) -> Result<Self> {
        Self::new(2, grid, [-m, m])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::config(format!("piecewise linear dim must be 1 or 2, got {}", self.dim)));
        }
        if self.grid < 2 {
            return Err(Error::config("piecewise linear grid needs at least 2 vertices per axis"));
        }
        let [lo, hi] = self.extent;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config(format!("invalid extent [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.grid.pow(self.dim as u32)
    }

    pub fn step(&self) -> f64 {
        (self.extent[1] - self.extent[0]) / (self.grid - 1) as f64
    }

    /// Vertex coordinate along one axis.
    pub fn node(&self, i: usize) -> f64 {
        self.extent[0] + i as f64 * self.step()
    }

    /// Cell index and local coordinate in `[0, 1]`, or `None` outside.
    fn locate_axis(&self, x: f64) -> Option<(usize, f64)> {
        let [lo, hi] = self.extent;
        if !(lo..=hi).contains(&x) {
            return None;
        }
        let t = (x - lo) / self.step();
        let cell = (t.floor() as usize).min(self.grid - 2);
        Some((cell, (t - cell as f64).clamp(0.0, 1.0)))
    }

    /// The (parameter index, barycentric weight) pairs of the element
    /// containing `x`. Empty outside the domain.
    pub fn support(&self, x: &[f64]) -> Vec<(usize, f64)> {
        match self.dim {
            1 => match self.locate_axis(x[0]) {
                Some((i, u)) => vec![(i, 1.0 - u), (i + 1, u)],
                None => Vec::new(),
            },
            _ => {
                let (Some((i, u)), Some((j, v))) = (self.locate_axis(x[0]), self.locate_axis(x[1]))
                else {
                    return Vec::new();
                };
                let n = self.grid;
                let v00 = j * n + i;
                let v10 = v00 + 1;
                let v01 = v00 + n;
                let v11 = v01 + 1;
                if u >= v {
                    vec![(v00, 1.0 - u), (v10, u - v), (v11, v)]
                } else {
                    vec![(v00, 1.0 - v), (v01, v - u), (v11, u)]
                }
            }
        }
    }

    pub fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        self.support(x).iter().map(|&(k, w)| w * theta[k]).sum()
    }

    pub fn backward(&self, theta: &[f64], x: &[f64], cot: f64, grad: &mut [f64]) -> f64 {
        let mut value = 0.0;
        for (k, w) in self.support(x) {
            value += w * theta[k];
            grad[k] += cot * w;
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_constants() {
        let pl = PlForm::square(5.0, 10).unwrap();
        let theta = vec![2.5; pl.num_params()];
        for x in [[0.1, 0.2], [-4.9, 3.3], [5.0, 5.0], [-5.0, -5.0]] {
            assert!((pl.eval(&theta, &x) - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn reproduces_affine_functions() {
        let pl = PlForm::square(1.0, 7).unwrap();
        let n = pl.grid;
        let theta: Vec<f64> = (0..n * n).map(|k| pl.node(k % n) + pl.node(k / n)).collect();
        assert!((pl.eval(&theta, &[0.3, 0.4]) - 0.7).abs() < 1e-14);
        assert!((pl.eval(&theta, &[-0.91, 0.05]) - (-0.86)).abs() < 1e-14);
    }

    #[test]
    fn interpolates_at_vertices() {
        let pl = PlForm::square(2.0, 5).unwrap();
        let theta: Vec<f64> = (0..25).map(|k| (k as f64 * 1.37).sin()).collect();
        for j in 0..5 {
            for i in 0..5 {
                let v = pl.eval(&theta, &[pl.node(i), pl.node(j)]);
                assert!((v - theta[j * 5 + i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_outside_domain() {
        let pl = PlForm::square(1.0, 3).unwrap();
        let theta = vec![1.0; 9];
        assert_eq!(pl.eval(&theta, &[1.01, 0.0]), 0.0);
        assert_eq!(pl.eval(&theta, &[0.0, -3.0]), 0.0);
        assert!(pl.support(&[2.0, 2.0]).is_empty());
    }

    #[test]
    fn diagonal_belongs_to_lower_triangle() {
        let pl = PlForm::square(1.0, 2).unwrap();
        // Cell corners: v00=0, v10=1, v01=2, v11=3.
        let support = pl.support(&[0.0, 0.0]);
        let idx: Vec<usize> = support.iter().map(|p| p.0).collect();
        assert_eq!(idx, vec![0, 1, 3]);
        // Upper-left corner is only reachable from the upper triangle.
        let theta = [0.0, 0.0, 1.0, 0.0];
        assert!((pl.eval(&theta, &[-1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(pl.eval(&theta, &[0.5, -0.5]), 0.0);
    }

    #[test]
    fn one_dimensional_hat_functions() {
        let pl = PlForm::new(1, 3, [0.0, 2.0]).unwrap();
        let theta = [1.0, 3.0, -1.0];
        assert!((pl.eval(&theta, &[0.5]) - 2.0).abs() < 1e-15);
        assert!((pl.eval(&theta, &[1.5]) - 1.0).abs() < 1e-15);
        assert_eq!(pl.eval(&theta, &[2.5]), 0.0);
    }
}
