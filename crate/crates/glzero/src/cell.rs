//! Constant-field cell problem on the square Q_r = (-r/2, r/2)^2 with the
//! symmetric-gauge potential A0 = (-(x2)/2, (x1)/2):
//!   F_{b,r}(u) = int b|(grad - iA0)u|^2 - |u|^2 + (1/2)|u|^4,
//! under Dirichlet (e_D) or Neumann (e_N) conditions, and the density
//! g(b) = lim_r e_D(b,r)/r^2 with its 1/r extrapolation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field2d::{pin_boundary, Lattice, LatticeBuilder, MinStats};
use crate::poisson::DstPoisson;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone)]
pub struct CellGrid {
    pub r: f64,
    pub h: f64,
    pub n: usize,
}

impl CellGrid {
    /// Mesh policy: at least 8 nodes per coherence length sqrt(b), capped at
    /// spacing 0.25 for large b.
    pub fn for_params(b: f64, r: f64) -> Result<CellGrid> {
        if b <= 0.0 {
            return Err(Error::invalid(
                "b must be positive (the b=0 density is the analytic value -1/2)",
            ));
        }
        if r < 1.0 {
            return Err(Error::invalid("cell size r must be >= 1"));
        }
        let h = (b.sqrt() / 8.0).min(0.25);
        let n = (r / h).round() as usize / 2 * 2 + 1;
        Ok(CellGrid {
            r,
            h: r / (n - 1) as f64,
            n,
        })
    }

    /// Exact line integral of A0 along an axis-aligned edge.
    fn theta(xa: f64, ya: f64, xb: f64, yb: f64) -> f64 {
        0.5 * (-(0.5 * (ya + yb)) * (xb - xa) + 0.5 * (xa + xb) * (yb - ya))
    }

    pub fn lattice(&self, b: f64, bc: Bc) -> Lattice {
        let builder = LatticeBuilder {
            nx: self.n,
            ny: self.n,
            x0: -self.r / 2.0,
            y0: -self.r / 2.0,
            hx: self.h,
            hy: self.h,
        };
        let mut lat = builder.build(b, -1.0, 1.0, Self::theta);
        if bc == Bc::Dirichlet {
            pin_boundary(&mut lat);
        }
        lat
    }
}

#[derive(Debug, Clone)]
pub struct CellMinimizer {
    pub u: Vec<Complex64>,
    pub b: f64,
    pub r: f64,
    pub bc: Bc,
    pub energy: f64,
    pub sup_u: f64,
}

/// One row of the g(b) table.
#[derive(Debug, Clone)]
pub struct GRow {
    pub b: f64,
    pub g_est: f64,
    /// sqrt(b)/r at the largest r: the scale of the boundary-layer
    /// correction (the universal prefactor is unknown).
    pub envelope: f64,
    pub r_list: Vec<f64>,
}

/// Energy of an explicit field.
pub fn cell_energy(u: &[Complex64], b: f64, grid: &CellGrid, bc: Bc) -> Result<f64> {
    let lat = grid.lattice(b, bc);
    lat.check_shape(u)?;
    if bc == Bc::Dirichlet {
        for n in 0..lat.n_nodes() {
            if !lat.free[n] && u[n].norm() != 0.0 {
                return Err(Error::invalid("Dirichlet field must vanish on the boundary"));
            }
        }
    }
    Ok(lat.energy(u))
}

/// Bulk amplitude plus small deterministic complex noise, breaking the
/// phase degeneracy and letting vortices enter.
fn noise_seed(n_nodes: usize, b: f64) -> Vec<Complex64> {
    let amp = (1.0 - b).max(0.0).sqrt();
    let mut rng = SplitMix64::new(0x43454c4c);
    (0..n_nodes)
        .map(|_| Complex64::new(amp + 0.02 * rng.next_sym(), 0.02 * rng.next_sym()))
        .collect()
}

/// Bilinear prolongation from an (m x m) grid to the (2m-1 x 2m-1) grid
/// obtained by halving the spacing.
fn prolong(coarse: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = 2 * m - 1;
    let at = |i: usize, j: usize| coarse[j * m + i];
    let mut fine = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            let (ic, jc) = (i / 2, j / 2);
            fine[j * n + i] = match (i % 2, j % 2) {
                (0, 0) => at(ic, jc),
                (1, 0) => 0.5 * (at(ic, jc) + at(ic + 1, jc)),
                (0, 1) => 0.5 * (at(ic, jc) + at(ic, jc + 1)),
                _ => 0.25 * (at(ic, jc) + at(ic + 1, jc) + at(ic, jc + 1) + at(ic + 1, jc + 1)),
            };
        }
    }
    fine
}

/// Grids finer than this are seeded from a converged half-resolution solve.
const CONTINUATION_MIN_N: usize = 200;

/// Dirichlet minimization with a Sobolev metric and coarse-grid continuation.
///
/// Metric: the stiff part of the Hessian is 2 w (b (-lap) + O(1)), so
/// descending along (b (-lap) + 1)^{-1} g / (2w) keeps the iteration count
/// nearly independent of the mesh (plain conjugate gradients need
/// O((r/h)^2) iterations on large cells). Convergence is still measured on
/// the raw gradient, so the minimum does not depend on the metric.
///
/// Continuation: on large cells the minimizer contains a vortex lattice,
/// and nucleating vortices from a noise seed takes an iteration count that
/// grows steeply with the cell size. Solving first on a mesh with doubled
/// spacing (recursively) and prolonging the result makes the slow vortex
/// rearrangement happen on cheap grids; the finest solve only refines.
fn dirichlet_minimize(grid: &CellGrid, b: f64, tol: f64) -> Result<(Vec<Complex64>, MinStats)> {
    let lat = grid.lattice(b, Bc::Dirichlet);
    let seed = if grid.n >= CONTINUATION_MIN_N {
        let m = (grid.n - 1) / 2 + 1;
        let coarse = CellGrid {
            r: grid.r,
            h: grid.r / (m - 1) as f64,
            n: m,
        };
        let (uc, _) = dirichlet_minimize(&coarse, b, tol)?;
        prolong(&uc, m)
    } else {
        noise_seed(lat.n_nodes(), b)
    };
    let solver = DstPoisson::new(grid.n, grid.n, grid.h, grid.h)?;
    let w2 = 2.0 * grid.h * grid.h;
    let pc = move |g: &[Complex64]| -> Vec<Complex64> {
        let re: Vec<f64> = g.iter().map(|x| x.re).collect();
        let im: Vec<f64> = g.iter().map(|x| x.im).collect();
        // Interior node weights are uniform (h^2); the boundary is
        // pinned, so the two exact sine-space solves cover every
        // degree of freedom.
        let zre = solver.solve(&re, w2 * b, w2).expect("grid fixed at build");
        let zim = solver.solve(&im, w2 * b, w2).expect("grid fixed at build");
        zre.into_iter()
            .zip(zim)
            .map(|(a, b)| Complex64::new(a, b))
            .collect()
    };
    lat.minimize_preconditioned(&seed, tol, 400_000, Some(&pc))
}

/// Minimize at fixed (b, r) under the given boundary condition.
pub fn minimize_cell(b: f64, r: f64, bc: Bc, tol: f64) -> Result<CellMinimizer> {
    let grid = CellGrid::for_params(b, r)?;
    let (u, stats) = match bc {
        Bc::Neumann => {
            let lat = grid.lattice(b, bc);
            let seed = noise_seed(lat.n_nodes(), b);
            lat.minimize(&seed, tol, 400_000)?
        }
        Bc::Dirichlet => dirichlet_minimize(&grid, b, tol)?,
    };
    Ok(CellMinimizer {
        u,
        b,
        r,
        bc,
        energy: stats.energy,
        sup_u: stats.sup_u,
    })
}

/// Estimate g(b) from e_D(b,r)/r^2 over increasing r by a least-squares
/// 1/r extrapolation; the estimate is clamped to the known bounds [-1/2, 0].
pub fn estimate_g(b: f64, r_list: &[f64]) -> Result<GRow> {
    if r_list.is_empty() || r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("r_list must be strictly increasing"));
    }
    if r_list[0] < 1.0 {
        return Err(Error::invalid("r_list entries must be >= 1"));
    }
    let samples: Result<Vec<f64>> = r_list
        .par_iter()
        .map(|&r| Ok(minimize_cell(b, r, Bc::Dirichlet, 1e-8)?.energy / (r * r)))
        .collect();
    let samples = samples?;
    // densities approach g from above: non-increasing up to noise
    for w in samples.windows(2) {
        if w[1] > w[0] + 1e-4 {
            return Err(Error::NoConvergence(format!(
                "cell densities not monotone in r: {samples:?}"
            )));
        }
    }
    let g_raw = if samples.len() == 1 {
        samples[0]
    } else {
        // least squares for [g, a] against 1, 1/r
        let n = r_list.len() as f64;
        let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for (&r, &s) in r_list.iter().zip(&samples) {
            let x = 1.0 / r;
            sx += x;
            sxx += x * x;
            sy += s;
            sxy += x * s;
        }
        let det = n * sxx - sx * sx;
        (sxx * sy - sx * sxy) / det
    };
    Ok(GRow {
        b,
        g_est: g_raw.clamp(-0.5, 0.0),
        envelope: b.sqrt() / r_list.last().unwrap(),
        r_list: r_list.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_zero_energy() {
        let grid = CellGrid::for_params(0.5, 4.0).unwrap();
        let u = vec![Complex64::new(0.0, 0.0); grid.n * grid.n];
        assert_eq!(cell_energy(&u, 0.5, &grid, Bc::Neumann).unwrap(), 0.0);
    }

    #[test]
    fn constant_field_closed_form() {
        // for u == 1 only the link phases contribute to the kinetic term:
        // |e^{-i theta} - 1|^2 = 4 sin^2(theta/2) on each edge
        let b = 0.7;
        let grid = CellGrid::for_params(b, 2.0).unwrap();
        let n = grid.n;
        let u = vec![Complex64::new(1.0, 0.0); n * n];
        let e = cell_energy(&u, b, &grid, Bc::Neumann).unwrap();
        let lat = grid.lattice(b, Bc::Neumann);
        let x = |i: usize| -grid.r / 2.0 + i as f64 * grid.h;
        let wtrap = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut kin = 0.0;
        for j in 0..n {
            for i in 0..n - 1 {
                let th = CellGrid::theta(x(i), x(j), x(i + 1), x(j));
                kin += b * wtrap(j) * 4.0 * (0.5 * th).sin().powi(2);
            }
        }
        for j in 0..n - 1 {
            for i in 0..n {
                let th = CellGrid::theta(x(i), x(j), x(i), x(j + 1));
                kin += b * wtrap(i) * 4.0 * (0.5 * th).sin().powi(2);
            }
        }
        let expect = kin + (-1.0 + 0.5) * lat.area();
        assert!((e - expect).abs() <= 1e-12 * expect.abs().max(1.0), "{e} vs {expect}");
    }

    #[test]
    fn pointwise_lower_bound() {
        // -|u|^2 + |u|^4/2 >= -1/2 pointwise, so energy >= -area/2 = -r^2/2
        let b = 0.4;
        let grid = CellGrid::for_params(b, 2.0).unwrap();
        let mut rng = SplitMix64::new(33);
        let u: Vec<Complex64> = (0..grid.n * grid.n)
            .map(|_| Complex64::new(rng.next_sym(), rng.next_sym()))
            .collect();
        let e = cell_energy(&u, b, &grid, Bc::Neumann).unwrap();
        assert!(e >= -(grid.r * grid.r) / 2.0);
    }

    #[test]
    fn neumann_below_dirichlet() {
        let ed = minimize_cell(0.5, 6.0, Bc::Dirichlet, 1e-8).unwrap();
        let en = minimize_cell(0.5, 6.0, Bc::Neumann, 1e-8).unwrap();
        assert!(en.energy <= ed.energy + 1e-8, "{} vs {}", en.energy, ed.energy);
        assert!(ed.sup_u <= 1.0 + 1e-6);
        assert!(en.sup_u <= 1.0 + 1e-6);
        assert!(ed.energy <= 0.0 && ed.energy >= -(6.0f64 * 6.0) / 2.0);
    }

    #[test]
    fn supercritical_b_is_trivial() {
        let m = minimize_cell(1.2, 8.0, Bc::Dirichlet, 1e-8).unwrap();
        assert!(m.energy.abs() / 64.0 <= 1e-3, "density {}", m.energy / 64.0);
    }

    #[test]
    fn small_b_density_near_minus_half() {
        let m = minimize_cell(0.05, 8.0, Bc::Dirichlet, 1e-8).unwrap();
        let dens = m.energy / 64.0;
        // g(0) = -1/2; at b=0.05 and r=8 the Dirichlet boundary layer still
        // costs a few multiples of sqrt(b)/r, so only a loose bound holds
        // before extrapolation (the acceptance run extrapolates to -0.35)
        assert!(dens <= -0.30, "density {dens}");
        assert!(dens >= -0.5);
    }

    #[test]
    fn g_estimate_at_half() {
        let row = estimate_g(0.5, &[4.0, 8.0]).unwrap();
        assert!(row.g_est <= 0.0 && row.g_est >= -0.5);
        // frozen value from the {8,16,32} extrapolation is about -0.11; the
        // cheap {4,8} variant must land in the same neighborhood
        assert!((row.g_est - -0.11).abs() < 0.04, "g={}", row.g_est);
    }

    #[test]
    fn refinement_convergence() {
        // halving the mesh changes e_D by a shrinking increment
        let b = 0.5;
        let r = 5.0;
        let run = |n: usize| {
            let grid = CellGrid {
                r,
                h: r / (n - 1) as f64,
                n,
            };
            let lat = grid.lattice(b, Bc::Dirichlet);
            let amp = (1.0f64 - b).max(0.0).sqrt();
            let mut rng = SplitMix64::new(0x43454c4c);
            let seed: Vec<Complex64> = (0..lat.n_nodes())
                .map(|_| Complex64::new(amp + 0.02 * rng.next_sym(), 0.02 * rng.next_sym()))
                .collect();
            lat.minimize(&seed, 1e-10, 400_000).unwrap().1.energy
        };
        let (e1, e2, e4) = (run(21), run(41), run(81));
        let ratio = (e1 - e2) / (e2 - e4);
        assert!((2.0..8.0).contains(&ratio), "ratio {ratio} ({e1}, {e2}, {e4})");
    }
}
