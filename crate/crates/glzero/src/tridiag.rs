//! Symmetric tridiagonal eigenvalue machinery: Sturm-sequence bisection for
//! the lowest eigenvalue and inverse iteration for its eigenvector.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e.len() == d.len() - 1`).
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if d.len() < 2 || e.len() != d.len() - 1 {
            return Err(Error::invalid("tridiagonal dimensions mismatch"));
        }
        Ok(SymTridiag { d, e })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via the LDL^T
    /// recurrence, with the usual underflow guard).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.dim();
        let tiny = 1e-300;
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            if q.abs() < tiny {
                q = if q < 0.0 { -tiny } else { tiny };
            }
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin bounds on the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i < n - 1 { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// Lowest eigenvalue by bisection on the Sturm count.
    pub fn lowest_eigenvalue(&self) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        // invariant: count_below(lo) == 0, count_below(hi) >= 1
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for (approximately) the given eigenvalue via inverse
    /// iteration; returns a unit-Euclidean-norm vector.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.dim();
        // small relative shift keeps the solve well-posed
        let scale = self.d.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let shift = lambda + 1e-12 * scale.max(1.0);
        let lu = TridiagLu::factor(self, shift);
        let mut v = vec![1.0; n];
        let mut norm = (n as f64).sqrt();
        for it in 0..50 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            let w = lu.solve(&v);
            let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !wnorm.is_finite() || wnorm == 0.0 {
                return Err(Error::NoConvergence(
                    "inverse iteration produced a degenerate vector".into(),
                ));
            }
            // growth factor large => converged to the eigenvector
            let converged = wnorm > 1e12 || it >= 3;
            v = w;
            norm = wnorm;
            if converged && it >= 3 {
                break;
            }
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        Ok(v)
    }
}

/// Thomas algorithm for a symmetric positive definite tridiagonal system;
/// no pivoting, so only use when the matrix is safely diagonally dominant
/// (e.g. I + dt*A with A positive semidefinite).
pub fn thomas_solve(d: &[f64], e: &[f64], b: &[f64]) -> Vec<f64> {
    let n = d.len();
    debug_assert_eq!(e.len(), n - 1);
    debug_assert_eq!(b.len(), n);
    let mut c = vec![0.0; n - 1];
    let mut x = vec![0.0; n];
    c[0] = e[0] / d[0];
    x[0] = b[0] / d[0];
    for i in 1..n {
        let m = d[i] - e[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = e[i] / m;
        }
        x[i] = (b[i] - e[i - 1] * x[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// LU factorization with partial pivoting of (A - shift I) for a symmetric
/// tridiagonal A, stored in banded form (two superdiagonals appear under
/// pivoting).
struct TridiagLu {
    n: usize,
    diag: Vec<f64>,
    up1: Vec<f64>,
    up2: Vec<f64>,
    lower: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(a: &SymTridiag, shift: f64) -> TridiagLu {
        let n = a.dim();
        let mut diag: Vec<f64> = a.d.iter().map(|v| v - shift).collect();
        let mut up1 = vec![0.0; n];
        let mut up2 = vec![0.0; n];
        for i in 0..n - 1 {
            up1[i] = a.e[i];
        }
        let mut lower = vec![0.0; n - 1];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            let mut sub = a.e[i]; // entry (i+1, i) before elimination
            if sub.abs() > diag[i].abs() {
                swapped[i] = true;
                std::mem::swap(&mut diag[i], &mut sub);
                // row i+1's diagonal moves into up1 slot of row i
                let tmp = up1[i];
                up1[i] = diag[i + 1];
                diag[i + 1] = tmp;
                if i + 2 < n {
                    up2[i] = up1[i + 1];
                    up1[i + 1] = 0.0;
                }
            }
            let piv = if diag[i] == 0.0 { 1e-300 } else { diag[i] };
            let m = sub / piv;
            lower[i] = m;
            diag[i + 1] -= m * up1[i];
            if i + 2 < n {
                up1[i + 1] -= m * up2[i];
            }
        }
        TridiagLu {
            n,
            diag,
            up1,
            up2,
            lower,
            swapped,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n - 1 {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.lower[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.up1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.up2[i] * x[i + 2];
            }
            let piv = if self.diag[i] == 0.0 { 1e-300 } else { self.diag[i] };
            x[i] = s / piv;
        }
        x
    }
}
