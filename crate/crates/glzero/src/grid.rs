//! Uniform symmetric 1D grids used by the spectral and 1D energy solvers.

use crate::error::{Error, Result};

/// Uniform grid on [-T, T] with n nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub truncation: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(truncation: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("grid needs n >= 3, got {n}")));
        }
        if !(truncation > 0.0) {
            return Err(Error::invalid(format!(
                "grid needs positive truncation, got {truncation}"
            )));
        }
        let h = 2.0 * truncation / (n - 1) as f64;
        Ok(Grid1D { truncation, n, h })
    }

    /// Node t_i = -T + i h.
    pub fn node(&self, i: usize) -> f64 {
        -self.truncation + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    /// Trapezoid quadrature of nodal samples.
    pub fn trapezoid(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let inner: f64 = f[1..self.n - 1].iter().sum();
        self.h * (0.5 * (f[0] + f[self.n - 1]) + inner)
    }

    /// L2 norm with trapezoid weights.
    pub fn norm_l2(&self, f: &[f64]) -> f64 {
        let sq: Vec<f64> = f.iter().map(|x| x * x).collect();
        self.trapezoid(&sq).sqrt()
    }

    /// Central differences with one-sided stencils at the two endpoints.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.n);
        let n = self.n;
        let mut d = vec![0.0; n];
        d[0] = (f[1] - f[0]) / self.h;
        d[n - 1] = (f[n - 1] - f[n - 2]) / self.h;
        for i in 1..n - 1 {
            d[i] = (f[i + 1] - f[i - 1]) / (2.0 * self.h);
        }
        d
    }

    /// Grid with the same T and mesh halved (each cell split in two).
    pub fn refined(&self) -> Grid1D {
        Grid1D::new(self.truncation, 2 * self.n - 1).expect("refined grid valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_symmetric_and_increasing() {
        let g = Grid1D::new(5.0, 11).unwrap();
        let t: Vec<f64> = g.nodes().collect();
        assert_eq!(t.len(), 11);
        assert!((t[0] + 5.0).abs() < 1e-14);
        assert!((t[10] - 5.0).abs() < 1e-14);
        for i in 1..t.len() {
            assert!(t[i] > t[i - 1]);
        }
        // symmetry about 0
        for i in 0..t.len() {
            assert!((t[i] + t[t.len() - 1 - i]).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Grid1D::new(5.0, 2).is_err());
        assert!(Grid1D::new(0.0, 5).is_err());
        assert!(Grid1D::new(-1.0, 5).is_err());
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = Grid1D::new(2.0, 41).unwrap();
        let f: Vec<f64> = g.nodes().map(|t| 3.0 * t + 1.0).collect();
        // integral of 3t+1 over [-2,2] = 4
        assert!((g.trapezoid(&f) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_is_second_order_inside() {
        let g = Grid1D::new(1.0, 101).unwrap();
        let f: Vec<f64> = g.nodes().map(|t| t * t).collect();
        let d = g.derivative(&f);
        // central difference of t^2 is exact
        for i in 1..g.n - 1 {
            assert!((d[i] - 2.0 * g.node(i)).abs() < 1e-10);
        }
    }
}
