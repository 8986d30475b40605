//! Shared 2D machinery for the complex order-parameter functionals: a
//! structured lattice with link phases on edges (Peierls substitution), the
//! discrete energy
//!   E(u) = sum_edges w_e |u_b e^{-i theta_e} - u_a|^2
//!        + sum_nodes w_n (c2 |u_n|^2 + (c4/2) |u_n|^4),
//! its exact gradient, and a nonlinear conjugate-gradient minimizer with an
//! exact quartic line search (the energy is a quartic polynomial along any
//! line, so the 1D minimization is closed-form up to a root bracket).
//!
//! The link-phase form keeps the discrete energy exactly invariant under
//! u -> u e^{i chi}, theta -> theta + (chi_b - chi_a), which is the discrete
//! image of the continuous gauge invariance.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One quartic functional on a fixed lattice. Edge/node weights already
/// include quadrature factors and any module-specific coefficient on the
/// kinetic term; inactive nodes and edges carry weight 0.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Quadrature weight per node (0 for nodes outside the domain).
    pub node_w: Vec<f64>,
    /// Whether the node is a degree of freedom (false: pinned to 0).
    pub free: Vec<bool>,
    /// Kinetic weight per x-edge (i,j)-(i+1,j), including 1/hx^2.
    pub ex_w: Vec<f64>,
    /// Kinetic weight per y-edge (i,j)-(i,j+1), including 1/hy^2.
    pub ey_w: Vec<f64>,
    /// e^{-i theta} per x-edge.
    pub ex_phase: Vec<Complex64>,
    /// e^{-i theta} per y-edge.
    pub ey_phase: Vec<Complex64>,
    /// Coefficient of |u|^2 in the node density.
    pub c2: f64,
    /// Coefficient of |u|^4 (the density carries c4/2).
    pub c4: f64,
}

/// Convergence statistics of a minimization run.
#[derive(Debug, Clone)]
pub struct MinStats {
    pub iterations: usize,
    pub energy: f64,
    /// RMS gradient norm at exit.
    pub residual: f64,
    pub sup_u: f64,
}

impl Lattice {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    fn xe(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }

    fn ye(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn check_shape(&self, u: &[Complex64]) -> Result<()> {
        if u.len() != self.n_nodes() {
            return Err(Error::invalid("field length does not match lattice"));
        }
        Ok(())
    }

    /// Total quadrature weight (the discrete area of the active region).
    pub fn area(&self) -> f64 {
        self.node_w.iter().sum()
    }

    /// Quadratic (kinetic + |u|^2) part of the energy.
    fn quadratic(&self, u: &[Complex64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx - 1 {
                let w = self.ex_w[self.xe(i, j)];
                if w == 0.0 {
                    continue;
                }
                let d = u[self.idx(i + 1, j)] * self.ex_phase[self.xe(i, j)] - u[self.idx(i, j)];
                s += w * d.norm_sqr();
            }
        }
        for j in 0..self.ny - 1 {
            for i in 0..self.nx {
                let w = self.ey_w[self.ye(i, j)];
                if w == 0.0 {
                    continue;
                }
                let d = u[self.idx(i, j + 1)] * self.ey_phase[self.ye(i, j)] - u[self.idx(i, j)];
                s += w * d.norm_sqr();
            }
        }
        for n in 0..self.n_nodes() {
            s += self.node_w[n] * self.c2 * u[n].norm_sqr();
        }
        s
    }

    pub fn energy(&self, u: &[Complex64]) -> f64 {
        let mut s = self.quadratic(u);
        for n in 0..self.n_nodes() {
            let m = u[n].norm_sqr();
            s += self.node_w[n] * 0.5 * self.c4 * m * m;
        }
        s
    }

    /// Gradient with the convention dE = Re(sum g_n conj(du_n)); pinned
    /// nodes get zero.
    pub fn gradient(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut g = vec![Complex64::new(0.0, 0.0); self.n_nodes()];
        for j in 0..self.ny {
            for i in 0..self.nx - 1 {
                let w = self.ex_w[self.xe(i, j)];
                if w == 0.0 {
                    continue;
                }
                let ph = self.ex_phase[self.xe(i, j)];
                let (a, b) = (self.idx(i, j), self.idx(i + 1, j));
                let d = u[b] * ph - u[a];
                g[a] -= 2.0 * w * d;
                g[b] += 2.0 * w * ph.conj() * d;
            }
        }
        for j in 0..self.ny - 1 {
            for i in 0..self.nx {
                let w = self.ey_w[self.ye(i, j)];
                if w == 0.0 {
                    continue;
                }
                let ph = self.ey_phase[self.ye(i, j)];
                let (a, b) = (self.idx(i, j), self.idx(i, j + 1));
                let d = u[b] * ph - u[a];
                g[a] -= 2.0 * w * d;
                g[b] += 2.0 * w * ph.conj() * d;
            }
        }
        for n in 0..self.n_nodes() {
            let w = self.node_w[n];
            if w != 0.0 {
                g[n] += 2.0 * w * (self.c2 + self.c4 * u[n].norm_sqr()) * u[n];
            }
            if !self.free[n] {
                g[n] = Complex64::new(0.0, 0.0);
            }
        }
        g
    }

    /// Coefficients [A0..A4] of t -> E(u + t d).
    pub fn line_polynomial(&self, u: &[Complex64], d: &[Complex64]) -> [f64; 5] {
        let qu = self.quadratic(u);
        let qd = self.quadratic(d);
        let upd: Vec<Complex64> = u.iter().zip(d).map(|(a, b)| a + b).collect();
        // polarization of the real quadratic form
        let qud = 0.5 * (self.quadratic(&upd) - qu - qd);
        let mut a = [qu, 2.0 * qud, qd, 0.0, 0.0];
        for n in 0..self.n_nodes() {
            let w = self.node_w[n] * 0.5 * self.c4;
            if w == 0.0 {
                continue;
            }
            // |u + t d|^2 = p + q t + r t^2
            let p = u[n].norm_sqr();
            let q = 2.0 * (u[n].conj() * d[n]).re;
            let r = d[n].norm_sqr();
            a[0] += w * p * p;
            a[1] += w * 2.0 * p * q;
            a[2] += w * (q * q + 2.0 * p * r);
            a[3] += w * 2.0 * q * r;
            a[4] += w * r * r;
        }
        a
    }

    /// Exact minimizer of the quartic along the line: bracket the first
    /// positive root of the (cubic) derivative by doubling, then bisect.
    fn line_minimum(a: &[f64; 5]) -> Result<f64> {
        let dp = |t: f64| a[1] + 2.0 * a[2] * t + 3.0 * a[3] * t * t + 4.0 * a[4] * t * t * t;
        if dp(0.0) >= 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut k = 0;
        while dp(hi) < 0.0 {
            hi *= 2.0;
            k += 1;
            if k > 200 {
                return Err(Error::BracketNotFound(
                    "line search derivative never turned positive".into(),
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if dp(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Polak-Ribiere nonlinear conjugate gradient from the given seed.
    /// Stops when the RMS gradient drops below `tol` (relative to the energy
    /// scale) or the field collapses to zero.
    pub fn minimize(
        &self,
        seed: &[Complex64],
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<Complex64>, MinStats)> {
        self.minimize_preconditioned(seed, tol, max_iter, None)
    }

    /// Same minimizer with an optional metric: when given, descent uses the
    /// preconditioned gradient z = M^{-1} g (Sobolev gradient), which makes
    /// the iteration count nearly mesh-independent for Laplacian-dominated
    /// functionals. The stopping criterion stays on the raw gradient so the
    /// converged answer does not depend on the metric.
    pub fn minimize_preconditioned(
        &self,
        seed: &[Complex64],
        tol: f64,
        max_iter: usize,
        precond: Option<&dyn Fn(&[Complex64]) -> Vec<Complex64>>,
    ) -> Result<(Vec<Complex64>, MinStats)> {
        self.check_shape(seed)?;
        let mut u = seed.to_vec();
        for n in 0..self.n_nodes() {
            if !self.free[n] {
                u[n] = Complex64::new(0.0, 0.0);
            }
        }
        let scale = self.area().sqrt().max(1e-30);
        let dot = |a: &[Complex64], b: &[Complex64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
        };
        let apply_pc = |g: &[Complex64]| -> Vec<Complex64> {
            match precond {
                Some(pc) => pc(g),
                None => g.to_vec(),
            }
        };
        let mut g = self.gradient(&u);
        let mut gg = dot(&g, &g);
        let mut z = apply_pc(&g);
        let mut gz = dot(&g, &z);
        let mut dir: Vec<Complex64> = z.iter().map(|x| -x).collect();
        let mut energy = self.energy(&u);
        let mut increases = 0usize;
        for it in 0..max_iter {
            let residual = gg.sqrt() / scale;
            let sup = u.iter().fold(0.0f64, |m, x| m.max(x.norm()));
            let esc = energy.abs().max(1.0);
            if residual < tol * esc || sup < 1e-9 {
                if sup < 1e-9 {
                    u.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                    energy = 0.0;
                }
                return Ok((
                    u,
                    MinStats {
                        iterations: it,
                        energy,
                        residual,
                        sup_u: if sup < 1e-9 { 0.0 } else { sup },
                    },
                ));
            }
            // descent check; reset to (preconditioned) steepest descent
            if dot(&dir, &g) >= 0.0 {
                dir = z.iter().map(|x| -x).collect();
            }
            // the quartic is scale-sensitive: search along the unit direction
            let dn = dot(&dir, &dir).sqrt();
            let dirn: Vec<Complex64> = dir.iter().map(|x| x / dn).collect();
            let poly = self.line_polynomial(&u, &dirn);
            let t = Self::line_minimum(&poly)?;
            for n in 0..self.n_nodes() {
                u[n] += t * dirn[n];
            }
            let e_new =
                poly[0] + poly[1] * t + poly[2] * t * t + poly[3] * t * t * t + poly[4] * t * t * t * t;
            if e_new > energy + 1e-12 * energy.abs().max(1.0) {
                increases += 1;
                if increases > 20 {
                    return Err(Error::NoConvergence(
                        "energy increased persistently during descent".into(),
                    ));
                }
            } else {
                increases = 0;
            }
            energy = e_new;
            let g_new = self.gradient(&u);
            let gg_new = dot(&g_new, &g_new);
            let z_new = apply_pc(&g_new);
            let gz_new = dot(&g_new, &z_new);
            let beta = if (it + 1) % 60 == 0 {
                0.0
            } else {
                let num = gz_new - dot(&g_new, &z);
                (num / gz).max(0.0)
            };
            for n in 0..self.n_nodes() {
                dir[n] = -z_new[n] + beta * dir[n];
            }
            g = g_new;
            gg = gg_new;
            z = z_new;
            gz = gz_new;
        }
        Err(Error::NoConvergence(format!(
            "descent did not reach tolerance {tol} in {max_iter} iterations"
        )))
    }

    /// Apply a discrete gauge transform in place: u_n -> u_n e^{i chi_n},
    /// theta_e -> theta_e + (chi_b - chi_a). Leaves the energy exactly
    /// invariant; used by tests and for seeding.
    pub fn gauge_transform(&mut self, u: &mut [Complex64], chi: &[f64]) {
        for n in 0..self.n_nodes() {
            u[n] *= Complex64::from_polar(1.0, chi[n]);
        }
        for j in 0..self.ny {
            for i in 0..self.nx - 1 {
                let e = self.xe(i, j);
                let dchi = chi[self.idx(i + 1, j)] - chi[self.idx(i, j)];
                self.ex_phase[e] *= Complex64::from_polar(1.0, -dchi);
            }
        }
        for j in 0..self.ny - 1 {
            for i in 0..self.nx {
                let e = self.ye(i, j);
                let dchi = chi[self.idx(i, j + 1)] - chi[self.idx(i, j)];
                self.ey_phase[e] *= Complex64::from_polar(1.0, -dchi);
            }
        }
    }

    /// Quadrature of |u|^p over the active region.
    pub fn mass(&self, u: &[Complex64], p: i32) -> f64 {
        u.iter()
            .zip(&self.node_w)
            .map(|(x, &w)| w * x.norm_sqr().powi(p / 2))
            .sum()
    }
}

/// Rectangle lattice builder: nodes at x = x0 + i hx, y = y0 + j hy, with
/// trapezoid quadrature weights; all weights active, all nodes free
/// (callers pin Dirichlet boundaries afterwards).
pub struct LatticeBuilder {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl LatticeBuilder {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    /// Build with a kinetic coefficient `kin`, node density coefficients
    /// (c2, c4), and a link-phase integral `theta(x_a, y_a, x_b, y_b)` giving
    /// the line integral of the (scaled) potential along the edge.
    pub fn build<F>(&self, kin: f64, c2: f64, c4: f64, theta: F) -> Lattice
    where
        F: Fn(f64, f64, f64, f64) -> f64,
    {
        let (nx, ny, hx, hy) = (self.nx, self.ny, self.hx, self.hy);
        let wx = |i: usize| if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
        let wy = |j: usize| if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
        let mut node_w = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                node_w[j * nx + i] = hx * hy * wx(i) * wy(j);
            }
        }
        // kinetic terms: midpoint in the edge direction, trapezoid across
        let mut ex_w = vec![0.0; (nx - 1) * ny];
        let mut ex_phase = vec![Complex64::new(1.0, 0.0); (nx - 1) * ny];
        for j in 0..ny {
            for i in 0..nx - 1 {
                let e = j * (nx - 1) + i;
                ex_w[e] = kin * hx * hy * wy(j) / (hx * hx);
                let th = theta(self.x(i), self.y(j), self.x(i + 1), self.y(j));
                ex_phase[e] = Complex64::from_polar(1.0, -th);
            }
        }
        let mut ey_w = vec![0.0; nx * (ny - 1)];
        let mut ey_phase = vec![Complex64::new(1.0, 0.0); nx * (ny - 1)];
        for j in 0..ny - 1 {
            for i in 0..nx {
                let e = j * nx + i;
                ey_w[e] = kin * hx * hy * wx(i) / (hy * hy);
                let th = theta(self.x(i), self.y(j), self.x(i), self.y(j + 1));
                ey_phase[e] = Complex64::from_polar(1.0, -th);
            }
        }
        Lattice {
            nx,
            ny,
            hx,
            hy,
            node_w,
            free: vec![true; nx * ny],
            ex_w,
            ey_w,
            ex_phase,
            ey_phase,
            c2,
            c4,
        }
    }
}

/// Pin the outer boundary of a rectangle lattice to zero (Dirichlet).
pub fn pin_boundary(lat: &mut Lattice) {
    let (nx, ny) = (lat.nx, lat.ny);
    for i in 0..nx {
        lat.free[i] = false;
        lat.free[(ny - 1) * nx + i] = false;
    }
    for j in 0..ny {
        lat.free[j * nx] = false;
        lat.free[j * nx + nx - 1] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn small_lattice() -> Lattice {
        let b = LatticeBuilder {
            nx: 9,
            ny: 7,
            x0: -1.0,
            y0: -0.75,
            hx: 0.25,
            hy: 0.25,
        };
        // constant-field link phases: theta = integral of (-y/2, x/2)
        b.build(0.8, -1.0, 1.0, |xa, ya, xb, yb| {
            0.5 * (-(0.5 * (ya + yb)) * (xb - xa) + 0.5 * (xa + xb) * (yb - ya)) * 1.7
        })
    }

    fn random_field(lat: &Lattice, rng: &mut SplitMix64) -> Vec<Complex64> {
        (0..lat.n_nodes())
            .map(|_| Complex64::new(rng.next_sym(), rng.next_sym()))
            .collect()
    }

    #[test]
    fn zero_field_zero_energy() {
        let lat = small_lattice();
        let u = vec![Complex64::new(0.0, 0.0); lat.n_nodes()];
        assert_eq!(lat.energy(&u), 0.0);
    }

    #[test]
    fn global_phase_invariance() {
        let lat = small_lattice();
        let mut rng = SplitMix64::new(7);
        let u = random_field(&lat, &mut rng);
        let rot: Vec<Complex64> = u
            .iter()
            .map(|x| x * Complex64::from_polar(1.0, 0.9))
            .collect();
        let (e1, e2) = (lat.energy(&u), lat.energy(&rot));
        assert!((e1 - e2).abs() <= 1e-12 * e1.abs().max(1.0));
    }

    #[test]
    fn gauge_invariance() {
        let mut lat = small_lattice();
        let mut rng = SplitMix64::new(11);
        let mut u = random_field(&lat, &mut rng);
        let e1 = lat.energy(&u);
        let chi: Vec<f64> = (0..lat.n_nodes()).map(|_| 3.0 * rng.next_sym()).collect();
        lat.gauge_transform(&mut u, &chi);
        let e2 = lat.energy(&u);
        assert!((e1 - e2).abs() <= 1e-10 * e1.abs().max(1.0), "{e1} vs {e2}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let lat = small_lattice();
        let mut rng = SplitMix64::new(3);
        let mut u = random_field(&lat, &mut rng);
        let g = lat.gradient(&u);
        let delta = 1e-6;
        for n in [0usize, 5, 17, 30, 44, 62] {
            for re in [true, false] {
                let orig = u[n];
                let step = if re {
                    Complex64::new(delta, 0.0)
                } else {
                    Complex64::new(0.0, delta)
                };
                u[n] = orig + step;
                let ep = lat.energy(&u);
                u[n] = orig - step;
                let em = lat.energy(&u);
                u[n] = orig;
                let fd = (ep - em) / (2.0 * delta);
                let gi = if re { g[n].re } else { g[n].im };
                assert!(
                    (gi - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                    "node {n} re={re}: {gi} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn line_polynomial_matches_energy() {
        let lat = small_lattice();
        let mut rng = SplitMix64::new(5);
        let u = random_field(&lat, &mut rng);
        let d = random_field(&lat, &mut rng);
        let a = lat.line_polynomial(&u, &d);
        for &t in &[-0.7, 0.0, 0.3, 1.9] {
            let v: Vec<Complex64> = u.iter().zip(&d).map(|(x, y)| x + t * y).collect();
            let e = lat.energy(&v);
            let p = a[0] + a[1] * t + a[2] * t * t + a[3] * t * t * t + a[4] * t * t * t * t;
            assert!((e - p).abs() <= 1e-9 * e.abs().max(1.0), "t={t}: {e} vs {p}");
        }
    }

    #[test]
    fn minimize_decreases_energy_and_converges() {
        // deepen the well so a nontrivial minimizer exists on this small box
        let b = LatticeBuilder {
            nx: 9,
            ny: 7,
            x0: -1.0,
            y0: -0.75,
            hx: 0.25,
            hy: 0.25,
        };
        let mut lat = b.build(0.8, -12.0, 12.0, |_, _, _, _| 0.0);
        pin_boundary(&mut lat);
        let mut rng = SplitMix64::new(9);
        let seed: Vec<Complex64> = (0..lat.n_nodes())
            .map(|n| {
                if lat.free[n] {
                    Complex64::new(0.5 + 0.1 * rng.next_sym(), 0.1 * rng.next_sym())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let e0 = lat.energy(&seed);
        let (u, stats) = lat.minimize(&seed, 1e-9, 20_000).unwrap();
        assert!(stats.energy <= e0);
        assert!(stats.energy < 0.0);
        // pinned boundary stays zero
        assert_eq!(u[0], Complex64::new(0.0, 0.0));
        assert!(stats.residual < 1e-9 * stats.energy.abs().max(1.0));
    }
}
