//! Five-point Poisson solves on a rectangle with zero Dirichlet data: a
//! conjugate-gradient solver for one-off right-hand sides, and a fast
//! sine-transform solver (exact diagonalization of the 5-point stencil)
//! for repeated solves such as preconditioning. Used to build a
//! divergence-free vector potential from a prescribed field profile
//! (solving lap(phi) = B0 and taking F = (-d2 phi, d1 phi) gives
//! curl F = B0 and div F = 0) and as the Sobolev metric of the
//! preconditioned cell minimizer.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Solve lap(phi) = rhs on an nx-by-ny node grid (boundary nodes pinned to
/// zero; rhs given on all nodes, boundary entries ignored).
pub fn solve_dirichlet(
    rhs: &[f64],
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if rhs.len() != nx * ny || nx < 3 || ny < 3 {
        return Err(Error::invalid("rhs does not match grid"));
    }
    let idx = |i: usize, j: usize| j * nx + i;
    let interior = |n: usize| {
        let (i, j) = (n % nx, n / nx);
        i > 0 && i < nx - 1 && j > 0 && j < ny - 1
    };
    // apply -lap (positive definite on the interior)
    let apply = |x: &[f64], out: &mut Vec<f64>| {
        let (ax, ay) = (1.0 / (hx * hx), 1.0 / (hy * hy));
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let n = idx(i, j);
                out[n] = (2.0 * x[n] - x[n - 1] - x[n + 1]) * ax
                    + (2.0 * x[n] - x[n - nx] - x[n + nx]) * ay;
            }
        }
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .filter(|(n, _)| interior(*n))
            .map(|(_, (x, y))| x * y)
            .sum()
    };
    let mut x = vec![0.0; nx * ny];
    let mut r: Vec<f64> = rhs
        .iter()
        .enumerate()
        .map(|(n, &v)| if interior(n) { -v } else { 0.0 })
        .collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; nx * ny];
    let mut rr = dot(&r, &r);
    let rhs_norm = rr.sqrt().max(1e-300);
    let max_iter = 20 * (nx + ny);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * rhs_norm {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for n in 0..nx * ny {
            if interior(n) {
                x[n] += alpha * p[n];
                r[n] -= alpha * ap[n];
            }
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for n in 0..nx * ny {
            if interior(n) {
                p[n] = r[n] + beta * p[n];
            }
        }
    }
    Err(Error::NoConvergence(
        "Poisson conjugate gradients stalled".into(),
    ))
}

/// Exact solver for (shift + kin * (-lap)) z = f on the interior of an
/// nx-by-ny node grid with zero Dirichlet boundary, by diagonalizing the
/// 5-point stencil in a discrete sine basis (DST-I along each axis,
/// computed through an odd-extended FFT). One solve is O(N log N) and
/// bitwise deterministic, which makes it usable inside inner loops.
pub struct DstPoisson {
    nx: usize,
    ny: usize,
    /// Eigenvalue of -lap for the (i, j) interior sine mode.
    eig: Vec<f64>,
    fft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
}

impl DstPoisson {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64) -> Result<DstPoisson> {
        if nx < 3 || ny < 3 || hx <= 0.0 || hy <= 0.0 {
            return Err(Error::invalid("grid too small for a Dirichlet solve"));
        }
        let (mx, my) = (nx - 2, ny - 2);
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(2 * (mx + 1));
        let fft_y = planner.plan_fft_forward(2 * (my + 1));
        let pi = std::f64::consts::PI;
        let mode = |k: usize, m: usize, h: f64| {
            let s = (pi * k as f64 / (2.0 * (m + 1) as f64)).sin();
            4.0 * s * s / (h * h)
        };
        let mut eig = vec![0.0; nx * ny];
        for j in 1..=my {
            for i in 1..=mx {
                eig[j * nx + i] = mode(i, mx, hx) + mode(j, my, hy);
            }
        }
        Ok(DstPoisson { nx, ny, eig, fft_x, fft_y })
    }

    /// DST-I of every interior row (axis = 0) or column (axis = 1) of the
    /// full-grid array, in place; boundary entries are ignored and zeroed.
    fn dst_axis(&self, data: &mut [f64], axis: usize) {
        let (nx, ny) = (self.nx, self.ny);
        let m = if axis == 0 { nx - 2 } else { ny - 2 };
        let len = 2 * (m + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let lines = if axis == 0 { ny - 2 } else { nx - 2 };
        for l in 1..=lines {
            for k in 1..=m {
                let v = if axis == 0 { data[l * nx + k] } else { data[k * nx + l] };
                buf[k] = Complex64::new(v, 0.0);
                buf[len - k] = Complex64::new(-v, 0.0);
            }
            buf[0] = Complex64::new(0.0, 0.0);
            buf[m + 1] = Complex64::new(0.0, 0.0);
            self.as_fft(axis).process(&mut buf);
            for k in 1..=m {
                let v = -0.5 * buf[k].im;
                if axis == 0 {
                    data[l * nx + k] = v;
                } else {
                    data[k * nx + l] = v;
                }
            }
        }
    }

    fn as_fft(&self, axis: usize) -> &dyn Fft<f64> {
        if axis == 0 { self.fft_x.as_ref() } else { self.fft_y.as_ref() }
    }

    /// Solve (shift + kin * (-lap)) z = f; `f` is given on the full grid
    /// (boundary entries ignored), the result has a zero boundary.
    pub fn solve(&self, f: &[f64], kin: f64, shift: f64) -> Result<Vec<f64>> {
        if f.len() != self.nx * self.ny {
            return Err(Error::invalid("rhs does not match grid"));
        }
        let (mx, my) = (self.nx - 2, self.ny - 2);
        let mut z = f.to_vec();
        for (n, v) in z.iter_mut().enumerate() {
            let (i, j) = (n % self.nx, n / self.nx);
            if i == 0 || i == self.nx - 1 || j == 0 || j == self.ny - 1 {
                *v = 0.0;
            }
        }
        self.dst_axis(&mut z, 0);
        self.dst_axis(&mut z, 1);
        let norm = 4.0 / (((mx + 1) * (my + 1)) as f64);
        for j in 1..=my {
            for i in 1..=mx {
                let n = j * self.nx + i;
                let d = shift + kin * self.eig[n];
                if d == 0.0 {
                    return Err(Error::invalid("singular sine-space coefficient"));
                }
                z[n] *= norm / d;
            }
        }
        self.dst_axis(&mut z, 0);
        self.dst_axis(&mut z, 1);
        Ok(z)
    }
}
