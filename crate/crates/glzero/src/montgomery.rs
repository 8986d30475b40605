//! The operator family P(tau) = -d^2/dt^2 + (t^2/2 + tau)^2 on the line:
//! lowest eigenpair, the eigenvalue curve tau -> lambda(tau), and its unique
//! minimum (tau0, lambda0).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::tridiag::SymTridiag;

/// Lowest eigenpair of P(tau) on a truncated grid.
#[derive(Debug, Clone)]
pub struct SpectralPoint {
    pub tau: f64,
    pub lambda: f64,
    /// L2-normalized (weight h), sign-fixed nonnegative node samples.
    pub eigenfunction: Vec<f64>,
}

/// Result of the minimization over tau, with a Richardson error estimate.
#[derive(Debug, Clone)]
pub struct MontgomeryMinimum {
    pub tau0: f64,
    pub lambda0: f64,
    pub phi0: Vec<f64>,
    pub grid: Grid1D,
    /// |lambda_{h/2} - lambda_extrapolated|
    pub err: f64,
}

/// Potential of the operator at node t.
#[inline]
pub fn potential(t: f64, tau: f64) -> f64 {
    let w = t * t / 2.0 + tau;
    w * w
}

/// Default half-width: the potential grows quartically, so eigenfunctions
/// decay super-exponentially and a modest margin past the classical turning
/// point suffices.
pub fn default_truncation(tau: f64, lambda_est: f64) -> f64 {
    (2.0 * (2.0 * (lambda_est + tau.abs())).sqrt() + 4.0).max(8.0)
}

/// Central-difference discretization with Dirichlet rows at both ends.
/// `window` is the spectral window of interest: the truncated potential must
/// dominate it at the boundary, otherwise truncation would distort the
/// low-lying spectrum.
pub fn assemble_operator(tau: f64, grid: &Grid1D, window: f64) -> Result<SymTridiag> {
    let t_end = grid.truncation;
    if t_end * t_end / 2.0 + tau <= 0.0 {
        return Err(Error::TruncationUnsafe(format!(
            "potential well reaches the boundary: T={t_end}, tau={tau}"
        )));
    }
    if potential(t_end, tau) <= window {
        return Err(Error::TruncationUnsafe(format!(
            "boundary potential {:.3} inside spectral window {window}",
            potential(t_end, tau)
        )));
    }
    let h2 = grid.h * grid.h;
    let d: Vec<f64> = grid.nodes().map(|t| 2.0 / h2 + potential(t, tau)).collect();
    let e = vec![-1.0 / h2; grid.n - 1];
    SymTridiag::new(d, e)
}

/// Lowest eigenpair at a single tau on the given grid.
pub fn lowest_eigenpair(tau: f64, grid: &Grid1D) -> Result<SpectralPoint> {
    let op = assemble_operator(tau, grid, spectral_window(tau))?;
    let lambda = op.lowest_eigenvalue();
    let mut v = op.eigenvector(lambda)?;
    // sign fix: the ground state has one sign; make it the positive one
    if v.iter().sum::<f64>() < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let nrm = grid.trapezoid(&sq).sqrt();
    for x in v.iter_mut() {
        *x /= nrm;
    }
    Ok(SpectralPoint {
        tau,
        lambda,
        eigenfunction: v,
    })
}

fn spectral_window(tau: f64) -> f64 {
    // generous upper bound on the low-lying eigenvalues of interest
    2.0 * (1.0 + tau * tau)
}

/// Eigenvalue only, on the given grid (no eigenvector solve).
pub fn lambda_on_grid(tau: f64, grid: &Grid1D) -> Result<f64> {
    let op = assemble_operator(tau, grid, spectral_window(tau))?;
    Ok(op.lowest_eigenvalue())
}

/// Richardson-extrapolated eigenvalue from grids h and h/2 (second-order
/// scheme): returns (lambda_extr, |lambda_{h/2} - lambda_extr|).
pub fn lambda_extrapolated(tau: f64, grid: &Grid1D) -> Result<(f64, f64)> {
    let coarse = lambda_on_grid(tau, grid)?;
    let fine = lambda_on_grid(tau, &grid.refined())?;
    let extr = (4.0 * fine - coarse) / 3.0;
    Ok((extr, (fine - extr).abs()))
}

/// Sample lambda on a uniform tau grid; evaluations run in parallel and are
/// merged back in tau order.
pub fn lambda_curve(
    tau_lo: f64,
    tau_hi: f64,
    samples: usize,
    grid: &Grid1D,
) -> Result<Vec<SpectralPoint>> {
    if !(tau_lo < tau_hi) {
        return Err(Error::invalid("tau range must satisfy lo < hi"));
    }
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let step = (tau_hi - tau_lo) / (samples - 1) as f64;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let tau = tau_lo + step * i as f64;
            lowest_eigenpair(tau, grid).map_err(|e| {
                Error::NoConvergence(format!("eigensolve failed at tau={tau}: {e}"))
            })
        })
        .collect()
}

/// Locate the unique minimum of lambda: coarse scan at step 0.25 over
/// [-5, 2], then golden-section refinement to |tau - tau0| <= tol.
pub fn minimize_lambda(grid: &Grid1D, tol: f64) -> Result<MontgomeryMinimum> {
    if tol <= 0.0 {
        return Err(Error::invalid("tol must be positive"));
    }
    let (scan_lo, scan_hi, step) = (-5.0, 2.0, 0.25);
    let m = ((scan_hi - scan_lo) / step as f64).round() as usize + 1;
    let taus: Vec<f64> = (0..m).map(|i| scan_lo + step * i as f64).collect();
    let vals: Result<Vec<f64>> = taus
        .par_iter()
        .map(|&tau| lambda_on_grid(tau, grid))
        .collect();
    let vals = vals?;
    let k = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    if k == 0 || k == m - 1 {
        return Err(Error::BracketNotFound(format!(
            "no interior minimum of lambda in [{scan_lo}, {scan_hi}]"
        )));
    }
    let (mut a, mut b) = (taus[k - 1], taus[k + 1]);
    // golden-section search on the unimodal curve
    let invphi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = lambda_on_grid(c, grid)?;
    let mut fd = lambda_on_grid(d, grid)?;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = lambda_on_grid(c, grid)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = lambda_on_grid(d, grid)?;
        }
    }
    let tau0 = 0.5 * (a + b);
    let point = lowest_eigenpair(tau0, grid)?;
    let (lambda_extr, err) = lambda_extrapolated(tau0, grid)?;
    Ok(MontgomeryMinimum {
        tau0,
        lambda0: lambda_extr,
        phi0: point.eigenfunction,
        grid: grid.clone(),
        err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::new(12.0, 1201).unwrap()
    }

    #[test]
    fn operator_diagonal_matches_formula() {
        let g = Grid1D::new(2.0, 5).unwrap();
        let op = assemble_operator(0.0, &g, 0.5).unwrap();
        let h2 = g.h * g.h;
        for (i, t) in g.nodes().enumerate() {
            let expect = 2.0 / h2 + (t * t / 2.0) * (t * t / 2.0);
            assert!((op.d[i] - expect).abs() < 1e-14);
        }
        assert!(op.e.iter().all(|&x| (x + 1.0 / h2).abs() < 1e-14));
    }

    #[test]
    fn potential_special_points() {
        assert_eq!(potential(0.0, 3.0), 9.0); // V(0) = tau^2
        assert!(potential(std::f64::consts::SQRT_2, -1.0).abs() < 1e-15); // well bottom
    }

    #[test]
    fn truncation_unsafe_rejected() {
        // well extends past the boundary: T^2/2 + tau < 0
        let g = Grid1D::new(2.0, 11).unwrap();
        assert!(assemble_operator(-5.0, &g, 1.0).is_err());
    }

    #[test]
    fn lambda_zero_value_and_bound() {
        // frozen two-resolution extrapolation of lambda(0); also below the
        // variational bound (3/4)^(4/3)
        let (lam, err) = lambda_extrapolated(0.0, &grid()).unwrap();
        assert!((lam - 0.6679863).abs() < 5e-5, "lambda(0)={lam}");
        assert!(lam <= 0.75f64.powf(4.0 / 3.0));
        assert!(err < 1e-3);
    }

    #[test]
    fn lambda_increasing_for_positive_tau() {
        let g = grid();
        let l0 = lambda_on_grid(0.0, &g).unwrap();
        let l5 = lambda_on_grid(5.0, &Grid1D::new(default_truncation(5.0, 30.0), 1201).unwrap())
            .unwrap();
        assert!(l5 > l0);
        let curve = lambda_curve(0.0, 10.0, 11, &Grid1D::new(14.0, 1401).unwrap()).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].lambda > w[0].lambda);
        }
    }

    #[test]
    fn eigenfunction_invariants() {
        let g = grid();
        let p = lowest_eigenpair(0.0, &g).unwrap();
        let sq: Vec<f64> = p.eigenfunction.iter().map(|x| x * x).collect();
        assert!((g.trapezoid(&sq) - 1.0).abs() < 1e-12);
        assert!(p.eigenfunction.iter().all(|&x| x >= -1e-10));
        assert!(p.eigenfunction[0].abs() < 1e-8);
        assert!(p.eigenfunction[g.n - 1].abs() < 1e-8);
    }

    #[test]
    fn minimum_location_and_value() {
        let m = minimize_lambda(&grid(), 1e-5).unwrap();
        assert!(m.tau0 < 0.0);
        assert!((m.tau0 - -0.34676).abs() < 1e-3, "tau0={}", m.tau0);
        assert!((m.lambda0 - 0.569820).abs() < 1e-4, "lambda0={}", m.lambda0);
        let l0 = lambda_on_grid(0.0, &grid()).unwrap();
        assert!(m.lambda0 < l0);
    }

    #[test]
    fn grid_convergence_second_order() {
        let g = Grid1D::new(12.0, 601).unwrap();
        let l1 = lambda_on_grid(0.0, &g).unwrap();
        let g2 = g.refined();
        let l2 = lambda_on_grid(0.0, &g2).unwrap();
        let l4 = lambda_on_grid(0.0, &g2.refined()).unwrap();
        let r = (l1 - l2) / (l2 - l4);
        assert!((r - 4.0).abs() < 0.5, "refinement ratio {r}");
    }

    #[test]
    fn truncation_stability() {
        let (l, err) = lambda_extrapolated(0.0, &Grid1D::new(12.0, 1201).unwrap()).unwrap();
        let (l2, _) = lambda_extrapolated(0.0, &Grid1D::new(15.0, 1501).unwrap()).unwrap();
        assert!((l - l2).abs() <= err.max(1e-9));
    }
}
