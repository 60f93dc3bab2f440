use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverse multiquadric expansion `sum_i a_i / sqrt(|x - x_i|^2 + c^2)` with
/// fixed centers and shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfForm {
    pub centers: Vec<Vec<f64>>,
    pub shape_c: f64,
}

impl RbfForm {
    pub fn new(centers: Vec<Vec<f64>>, shape_c: f64) -> Result<Self> {
        let form = RbfForm { centers, shape_c };
        form.validate()?;
        Ok(form)
    }

    /// `n` equispaced centers on `[lower, upper]`, shape equal to the spacing.
    pub fn grid_1d(lower: f64, upper: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("RBF grid needs at least 2 centers per axis"));
        }
        let h = (upper - lower) / (n - 1) as f64;
        let centers = (0..n).map(|i| vec![lower + i as f64 * h]).collect();
        Self::new(centers, h)
    }

    /// `n x n` centers on `[-m, m]^2`, shape equal to the grid step.
    pub fn grid_2d(m: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("RBF grid needs at least 2 centers per axis"));
        }
        let h = 2.0 * m / (n - 1) as f64;
        let mut centers = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                centers.push(vec![-m + i as f64 * h, -m + j as f64 * h]);
            }
        }
        Self::new(centers, h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape_c > 0.0 && self.shape_c.is_finite()) {
            return Err(Error::config(format!("RBF shape must be positive, got {}", self.shape_c)));
        }
        let Some(first) = self.centers.first() else {
            return Err(Error::config("RBF needs at least one center"));
        };
        let dim = first.len();
        if dim == 0 || self.centers.iter().any(|c| c.len() != dim) {
            return Err(Error::config("RBF centers must share a nonzero dimension"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn num_params(&self) -> usize {
        self.centers.len()
    }

    #[inline]
    fn basis(&self, center: &[f64], x: &[f64]) -> f64 {
        let r2: f64 = center.iter().zip(x).map(|(c, y)| (y - c) * (y - c)).sum();
        1.0 / (r2 + self.shape_c * self.shape_c).sqrt()
    }

    pub fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(theta)
            .map(|(c, a)| a * self.basis(c, x))
            .sum()
    }

    pub fn backward(&self, theta: &[f64], x: &[f64], cot: f64, grad: &mut [f64]) -> f64 {
        let mut value = 0.0;
        for ((c, a), g) in self.centers.iter().zip(theta).zip(grad.iter_mut()) {
            let phi = self.basis(c, x);
            value += a * phi;
            *g += cot * phi;
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_center_values() {
        let rbf = RbfForm::new(vec![vec![0.0, 0.0]], 1.0).unwrap();
        assert_eq!(rbf.eval(&[1.0], &[0.0, 0.0]), 1.0);
        assert!((rbf.eval(&[1.0], &[0.0, 3f64.sqrt()]) - 0.5).abs() < 1e-15);
        assert_eq!(rbf.eval(&[0.0], &[0.3, 0.2]), 0.0);
    }

    #[test]
    fn grid_shape_is_step() {
        let rbf = RbfForm::grid_2d(5.0, 11).unwrap();
        assert_eq!(rbf.num_params(), 121);
        assert!((rbf.shape_c - 1.0).abs() < 1e-15);
        let rbf1 = RbfForm::grid_1d(0.0, 1.0, 5).unwrap();
        assert_eq!(rbf1.shape_c, 0.25);
    }

    #[test]
    fn rejects_nonpositive_shape() {
        assert!(RbfForm::new(vec![vec![0.0]], 0.0).is_err());
        assert!(RbfForm::new(vec![], 1.0).is_err());
    }
}
