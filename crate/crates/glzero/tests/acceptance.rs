//! End-to-end acceptance checks for the whole model hierarchy.
//!
//! Thirteen numbered checks run in order and each prints exactly one
//! pass/fail line; the test panics at the end if any check failed, so a
//! single run reports the status of every criterion.
//!
//! The leading-order asymptotics hold in the large-kappa limit with
//! unquantified remainders, so at desk scale they are checked as trends
//! (monotonicity, bands, concentration fractions), not equalities.

use std::fmt::Write as _;
use std::process::Command;
use std::time::Instant;

use glzero::asym::{self, ECurve, GTable};
use glzero::cell::{self, Bc};
use glzero::domain::{self, DomainProblem, GLState, Geometry, Mode};
use glzero::energy1d;
use glzero::expr::Expr;
use glzero::grid::Grid1D;
use glzero::montgomery;
use glzero::strip::{self, StripGrid};
use num_complex::Complex64;

struct Scorecard {
    failures: Vec<String>,
}

impl Scorecard {
    fn new() -> Self {
        Scorecard { failures: Vec::new() }
    }

    fn record(&mut self, idx: usize, name: &str, pass: bool, detail: String) {
        let verdict = if pass { "pass" } else { "FAIL" };
        println!("acceptance {idx:02} {name}: {verdict} [{detail}]");
        if !pass {
            self.failures.push(format!("{idx:02} {name}: {detail}"));
        }
    }
}

const SIGMA: f64 = 0.5;
const KAPPAS: [f64; 3] = [8.0, 12.0, 16.0];

fn disc_problem(kappa: f64, h_field: f64) -> DomainProblem {
    let b0 = Expr::parse("x1").unwrap();
    domain::build_problem(Geometry::Disc { radius: 1.0 }, &b0, kappa, h_field, None).unwrap()
}

#[test]
fn acceptance_criteria() {
    let t_all = Instant::now();
    let mut card = Scorecard::new();

    // 1. Minimum of the transverse eigenvalue curve.
    let t = Instant::now();
    let grid = Grid1D::new(12.0, 4801).unwrap();
    let min = montgomery::minimize_lambda(&grid, 1e-6).unwrap();
    card.record(
        1,
        "transverse minimum",
        (min.lambda0 - 0.57).abs() <= 0.01 && min.tau0 < 0.0 && t.elapsed().as_secs() < 10,
        format!(
            "lambda0={:.6} tau0={:.6} err={:.2e} ({:.1}s)",
            min.lambda0,
            min.tau0,
            min.err,
            t.elapsed().as_secs_f64()
        ),
    );

    // 2. Value at tau = 0 against the fully explicit upper bound, and
    //    strictness of the minimum.
    let t = Instant::now();
    let (lambda_zero, _) = montgomery::lambda_extrapolated(0.0, &grid).unwrap();
    let bound = 0.75f64.powf(4.0 / 3.0) + 1e-3;
    card.record(
        2,
        "lambda(0) bound",
        lambda_zero <= bound && min.lambda0 < lambda_zero && t.elapsed().as_secs() < 10,
        format!("lambda(0)={lambda_zero:.6} bound={bound:.6} lambda0={:.6}", min.lambda0),
    );

    // 3. Strict monotonicity of lambda(tau) on [0, 5].
    let curve = montgomery::lambda_curve(0.0, 5.0, 21, &grid).unwrap();
    let monotone = curve.windows(2).all(|w| w[1].lambda > w[0].lambda);
    card.record(
        3,
        "lambda monotone on [0,5]",
        monotone,
        format!("21 samples, lambda in [{:.4}, {:.4}]", curve[0].lambda, curve[20].lambda),
    );

    // 4. First-order stationarity at the reduced-energy optimum: the
    //    integral residual is small and shrinks under 2x grid refinement.
    //    The solver converges at second order, so the measured ratio sits
    //    near 1/4; a 2e-7 absolute floor absorbs the alpha-search noise.
    let t = Instant::now();
    let coarse = Grid1D::new(12.0, 1201).unwrap();
    let fine = Grid1D::new(12.0, 2401).unwrap();
    let fh_c = energy1d::minimize_over_alpha(0.7, &coarse, 1e-6).unwrap().fh_residual.abs();
    let fh_f = energy1d::minimize_over_alpha(0.7, &fine, 1e-6).unwrap().fh_residual.abs();
    let pass4 = fh_c <= 5e-3
        && fh_f <= 5e-3
        && fh_f <= 0.75 * fh_c + 2e-7
        && fh_f >= 0.25 * fh_c - 2e-7
        && t.elapsed().as_secs() < 60;
    card.record(
        4,
        "stationarity residual halves",
        pass4,
        format!("coarse={fh_c:.2e} fine={fh_f:.2e} ratio={:.3}", fh_f / fh_c),
    );

    // 5. Above the trivial threshold the strip energy per length collapses.
    let t = Instant::now();
    let mut detail5 = String::new();
    let mut pass5 = true;
    for r in [4.0, 8.0] {
        let per_len = strip::e_gs(3.0, r).unwrap() / (2.0 * r);
        pass5 &= per_len.abs() <= 1e-6;
        write!(detail5, "R={r}: {per_len:.2e} ").unwrap();
    }
    pass5 &= t.elapsed().as_secs() < 120;
    card.record(5, "strip trivial threshold", pass5, detail5.trim().to_owned());

    // Strip table shared by checks 6, 7, and 12 (the disc problems below
    // evaluate the line formula at L = sigma = 0.5, a node of this table).
    let l_values = [0.05, 0.1, 0.2, 0.5, 1.0];
    let r_list = [4.0, 8.0, 16.0];
    let table: Vec<_> = l_values
        .iter()
        .map(|&l| strip::estimate_e(l, &r_list, 1e-8).unwrap())
        .collect();

    // 6. Extrapolated energy sits below every finite-size sample
    //    (the finite-size correction is positive), up to the fit residual.
    let mut pass6 = true;
    let mut detail6 = String::new();
    for pt in &table {
        // The per-R samples are non-increasing in R, so the minimum is at
        // the largest R.
        let sample = strip::e_gs(pt.l, 16.0).unwrap() / 32.0;
        let ok = pt.e <= sample + pt.err + 1e-12;
        pass6 &= ok;
        write!(detail6, "L={}: E={:.4} min_sample={:.4} ", pt.l, pt.e, sample).unwrap();
    }
    card.record(6, "finite-size sandwich", pass6, detail6.trim().to_owned());

    // 7. Small-L band: -E(L) L^{4/3} / (1 - lambda0 L^{2/3}) stays positive
    //    and within a factor of 10 across two decades of L.
    let band: Vec<f64> = table
        .iter()
        .map(|pt| -pt.e * pt.l.powf(4.0 / 3.0) / (1.0 - min.lambda0 * pt.l.powf(2.0 / 3.0)))
        .collect();
    let bmin = band.iter().cloned().fold(f64::INFINITY, f64::min);
    let bmax = band.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    card.record(
        7,
        "small-L scaling band",
        bmin > 0.0 && bmax / bmin <= 10.0,
        format!("band=[{bmin:.4}, {bmax:.4}] ratio={:.2}", bmax / bmin),
    );

    // 8. Constant-field cell problem: boundary-condition ordering, the
    //    b >= 1 collapse, global bounds on the density, and the deep
    //    low-field value through the {8,16,32} extrapolation.
    let t = Instant::now();
    let mut pass8 = true;
    let mut detail8 = String::new();
    for (b, r) in [(0.5, 8.0), (1.2, 8.0)] {
        let e_n = cell::minimize_cell(b, r, Bc::Neumann, 1e-8).unwrap().energy;
        let e_d = cell::minimize_cell(b, r, Bc::Dirichlet, 1e-8).unwrap().energy;
        pass8 &= e_n <= e_d + 1e-9 * e_d.abs().max(1.0);
        write!(detail8, "b={b} r={r}: eN={e_n:.3} eD={e_d:.3}; ").unwrap();
    }
    let e_d_high = cell::minimize_cell(1.2, 32.0, Bc::Dirichlet, 1e-8).unwrap().energy;
    pass8 &= (e_d_high / (32.0 * 32.0)).abs() <= 1e-3;
    write!(detail8, "b=1.2 r=32 density={:.2e}; ", e_d_high / 1024.0).unwrap();
    let mut g_points = Vec::new();
    for b in [0.3, 0.7, 1.1] {
        let row = cell::estimate_g(b, &[8.0, 16.0]).unwrap();
        pass8 &= (-0.5..=0.0).contains(&row.g_est);
        g_points.push((b, row.g_est));
        write!(detail8, "g({b})={:.3}; ", row.g_est).unwrap();
    }
    let deep = cell::estimate_g(0.05, &[8.0, 16.0, 32.0]).unwrap();
    pass8 &= (-0.5..=0.0).contains(&deep.g_est) && deep.g_est <= -0.35;
    write!(
        detail8,
        "g(0.05)={:.3} envelope={:.3} ({:.0}s)",
        deep.g_est,
        deep.envelope,
        t.elapsed().as_secs_f64()
    )
    .unwrap();
    card.record(8, "cell density bounds", pass8, detail8);

    // 9. Matching report in the window where both the strip energy and the
    //    reduced 1D energy are strictly negative. The gap sizes are a
    //    required artifact; the identity itself is an open question, so
    //    there is no threshold.
    let mut pass9 = true;
    let mut detail9 = String::new();
    for l in [1.9, 2.05, 2.2] {
        match strip::check_conjecture(l, &r_list) {
            Ok(rec) => {
                write!(detail9, "L={l}: abs={:.2e} rel={:.3}; ", rec.gap_abs, rec.gap_rel).unwrap()
            }
            Err(e) => {
                pass9 = false;
                write!(detail9, "L={l}: {e}; ").unwrap();
            }
        }
    }
    card.record(9, "matching-window report", pass9, detail9.trim().to_owned());

    // 10. Discrete-model invariants: exact gauge invariance, gradient
    //     consistency, the pointwise bound, and the stationarity identity.
    let sgrid = StripGrid::for_params(0.5, 4.0).unwrap();
    let smin = strip::minimize_strip(0.5, &sgrid, None, 1e-8).unwrap();
    let mut lat = sgrid.lattice(0.5);
    let e0 = lat.energy(&smin.u);
    let chi: Vec<f64> = (0..smin.u.len()).map(|n| (0.3 * n as f64).sin()).collect();
    let mut v = smin.u.clone();
    lat.gauge_transform(&mut v, &chi);
    let gauge_rel = (lat.energy(&v) - e0).abs() / e0.abs();

    // Central differences against the analytic gradient at a few nodes.
    let g = lat.gradient(&smin.u);
    let eps = 1e-5;
    let mut grad_rel: f64 = 0.0;
    let gscale = g.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-12);
    for n in (0..smin.u.len()).step_by(smin.u.len() / 7) {
        for re_part in [true, false] {
            let mut up = smin.u.clone();
            let mut dn = smin.u.clone();
            let delta = if re_part {
                Complex64::new(eps, 0.0)
            } else {
                Complex64::new(0.0, eps)
            };
            up[n] += delta;
            dn[n] -= delta;
            let fd = (lat.energy(&up) - lat.energy(&dn)) / (2.0 * eps);
            let exact = if re_part { g[n].re } else { g[n].im };
            grad_rel = grad_rel.max((fd - exact).abs() / gscale);
        }
    }

    let p8 = disc_problem(KAPPAS[0], SIGMA * KAPPAS[0] * KAPPAS[0]);
    let s8 = domain::minimize_gl(&p8, Mode::FixedA, 1e-8, 1).unwrap();
    let pass10 = gauge_rel <= 1e-10
        && grad_rel <= 1e-6
        && s8.sup_psi <= 1.0 + 1e-6
        && s8.residuals.virial <= 1e-6;
    card.record(
        10,
        "discrete invariants",
        pass10,
        format!(
            "gauge={gauge_rel:.1e} grad={grad_rel:.1e} sup={:.6} virial={:.1e}",
            s8.sup_psi, s8.residuals.virial
        ),
    );

    // 11. Concentration along the zero curve on the unit disc with a linear
    //     profile, three kappa values, plus bandwidth shrinkage under
    //     field doubling.
    let t = Instant::now();
    let mut fixed_states: Vec<(DomainProblem, GLState)> = vec![(p8, s8)];
    for &k in &KAPPAS[1..] {
        let p = disc_problem(k, SIGMA * k * k);
        let s = domain::minimize_gl(&p, Mode::FixedA, 1e-8, 1).unwrap();
        fixed_states.push((p, s));
    }
    let mut pass11 = true;
    let mut detail11 = String::new();
    for (p, s) in &fixed_states {
        let scale = 4.0 * p.kappa / p.h_field;
        let frac = domain::mass_fraction_within(p, s, scale);
        let dec = domain::decay_profile(p, s, 24).unwrap();
        pass11 &= frac >= 0.80 && dec.m_hat > 0.0;
        write!(detail11, "k={}: frac={frac:.3} m_hat={:.2}; ", p.kappa, dec.m_hat).unwrap();
    }
    let bw_base = domain::mass_bandwidth(&fixed_states[0].0, &fixed_states[0].1, 0.90);
    let p8d = disc_problem(KAPPAS[0], 2.0 * SIGMA * KAPPAS[0] * KAPPAS[0]);
    let s8d = domain::minimize_gl(&p8d, Mode::FixedA, 1e-8, 1).unwrap();
    let bw_doubled = domain::mass_bandwidth(&p8d, &s8d, 0.90);
    pass11 &= bw_doubled < bw_base && t.elapsed().as_secs() < 3600;
    write!(
        detail11,
        "bw90 H={} -> {}: {bw_base:.3} -> {bw_doubled:.3} ({:.0}s)",
        SIGMA * 64.0,
        SIGMA * 128.0,
        t.elapsed().as_secs_f64()
    )
    .unwrap();
    card.record(11, "disc concentration", pass11, detail11);

    // 12. Leading-order formula trend: the normalized gap against the line
    //     formula is non-increasing in kappa (one inversion within 10%
    //     allowed), and in full mode the scaled magnetic energy decreases.
    let t = Instant::now();
    let ecurve = ECurve::new(
        &table.iter().map(|pt| (pt.l, pt.e)).collect::<Vec<_>>(),
    )
    .unwrap();
    let mut g_all = vec![(0.05, deep.g_est)];
    g_all.extend(&g_points);
    let gtable = GTable::new(&g_all).unwrap();
    let mut gaps = Vec::new();
    let mut detail12 = String::new();
    for (p, s) in &fixed_states {
        let rep = asym::verify(p, s, &ecurve, &gtable).unwrap();
        write!(detail12, "k={}: gap={:.4}; ", p.kappa, rep.gap_normalized).unwrap();
        gaps.push(rep.gap_normalized);
    }
    let inversions: Vec<_> = gaps.windows(2).filter(|w| w[1] > w[0]).collect();
    let gap_ok = inversions.len() <= 1
        && inversions
            .iter()
            .all(|w| w[1] - w[0] <= 0.10 * w[0].abs().max(w[1].abs()));

    let mut scaled_magnetic = Vec::new();
    for (p, _) in &fixed_states {
        let s = domain::minimize_gl(p, Mode::Full, 1e-8, 1).unwrap();
        scaled_magnetic.push(s.parts.magnetic * p.h_field / p.kappa.powi(3));
    }
    let magnetic_ok = scaled_magnetic.windows(2).all(|w| w[1] < w[0]);
    for (k, m) in KAPPAS.iter().zip(&scaled_magnetic) {
        write!(detail12, "mag(k={k})={m:.2e}; ").unwrap();
    }
    write!(detail12, "({:.0}s)", t.elapsed().as_secs_f64()).unwrap();
    card.record(12, "asymptotic trend", gap_ok && magnetic_ok, detail12);

    // 13. Byte-identical sweep reruns through the real binary.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"geometry":{"shape":"disc","radius":1.0},"b0":"x1","sigma":0.5,"kappa":[5,6],"mode":"fixed","seed":7}"#,
    )
    .unwrap();
    let out1 = dir.path().join("run1.csv");
    let out2 = dir.path().join("run2.csv");
    for out in [&out1, &out2] {
        let status = Command::new(env!("CARGO_BIN_EXE_glzero"))
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success(), "sweep invocation failed");
    }
    let bytes1 = std::fs::read(&out1).unwrap();
    let bytes2 = std::fs::read(&out2).unwrap();
    card.record(
        13,
        "deterministic reruns",
        bytes1 == bytes2 && !bytes1.is_empty(),
        format!("{} bytes, identical={}", bytes1.len(), bytes1 == bytes2),
    );

    println!("acceptance total: {:.0}s", t_all.elapsed().as_secs_f64());
    assert!(
        card.failures.is_empty(),
        "failed acceptance checks:\n{}",
        card.failures.join("\n")
    );
}
