use glzero::asym::{self, ECurve, GTable};
use glzero::domain::{self, Geometry, Mode};
use glzero::expr::Expr;
use std::time::Instant;

fn main() {
    let ecurve = ECurve::new(&[
        (0.05, -18.6905), (0.1, -8.0098), (0.2, -3.6506), (0.5, -1.2042), (1.0, -0.3475),
    ]).unwrap();
    let gtable = GTable::new(&[
        (0.05, -0.429), (0.3, -0.220), (0.7, -0.039), (1.1, 0.0),
    ]).unwrap();
    let b0 = Expr::parse("x1").unwrap();
    for k in [8.0_f64, 12.0, 16.0] {
        let h = 0.5 * k * k;
        let p = domain::build_problem(Geometry::Disc { radius: 1.0 }, &b0, k, h, None).unwrap();
        let t = Instant::now();
        let s = domain::minimize_gl(&p, Mode::FixedA, 1e-8, 1).unwrap();
        let r = asym::verify(&p, &s, &ecurve, &gtable).unwrap();
        println!(
            "k={k} H={h} nx={} e={:.4} c0_line={:.4} c0_bulk={:.4} gap_line={:.5} gap_bulk={:.5} ({:.0}s)",
            p.nx, r.e_computed, r.c0_line, r.c0_bulk,
            (r.e_computed - r.c0_line).abs() * h / k.powi(3),
            (r.e_computed - r.c0_bulk).abs() * h / k.powi(3),
            t.elapsed().as_secs_f64()
        );
    }
}
