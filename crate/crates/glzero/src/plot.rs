//! Minimal SVG plots for the CSV artifacts. Pure functions of the input
//! bytes: no timestamps, no randomness, fixed canvas.

use crate::error::{Error, Result};
use crate::io::{csv_column, parse_csv};
use crate::strip::trivial_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// L,E,... table: per-length strip energy with the vanishing threshold.
    Ecurve,
    /// b,g,... table: cell energy with the g = -1/2 and b = 1 guides.
    Gtable,
    /// bin,mass table: log-scale concentration histogram.
    Decay,
    /// kappa,gap table: normalized asymptotic gaps across a sweep.
    Verify,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ecurve" => Ok(PlotKind::Ecurve),
            "gtable" => Ok(PlotKind::Gtable),
            "decay" => Ok(PlotKind::Decay),
            "verify" => Ok(PlotKind::Verify),
            _ => Err(Error::invalid(format!(
                "unknown plot kind {s:?} (ecurve|gtable|decay|verify)"
            ))),
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 30.0;
const MB: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn from(xs: &[f64], ys: &[f64], extra_y: &[f64]) -> Result<Frame> {
        if xs.is_empty() {
            return Err(Error::invalid("no data rows to plot"));
        }
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in xs {
            x0 = x0.min(x);
            x1 = x1.max(x);
        }
        for &y in ys.iter().chain(extra_y) {
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::invalid("non-finite data"));
        }
        if x1 - x0 < 1e-300 {
            x1 = x0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0).max(1e-12);
        Ok(Frame {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        })
    }

    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)
    }

    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)
    }
}

fn fmt(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\">{title}</text>\n",
        W / 2.0
    )
}

fn axes(f: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W - ML - MR,
        H - MT - MB
    ));
    for (x, anchor) in [(f.x0, "start"), (f.x1, "end")] {
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"{anchor}\">{}</text>\n",
            f.px(x),
            H - MB + 16.0,
            fmt(x)
        ));
    }
    for y in [f.y0, f.y1] {
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            ML - 6.0,
            f.py(y) + 4.0,
            fmt(y)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{ylabel}</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    ));
    s
}

fn polyline(f: &Frame, xs: &[f64], ys: &[f64], color: &str) -> String {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    )
}

fn dots(f: &Frame, xs: &[f64], ys: &[f64], color: &str) -> String {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                f.px(x),
                f.py(y)
            )
        })
        .collect()
}

fn vline(f: &Frame, x: f64, label: &str) -> String {
    if x < f.x0 || x > f.x1 {
        return String::new();
    }
    format!(
        "<line x1=\"{0:.2}\" y1=\"{MT}\" x2=\"{0:.2}\" y2=\"{1}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n\
         <text x=\"{0:.2}\" y=\"{2}\" text-anchor=\"middle\" fill=\"gray\">{label}</text>\n",
        f.px(x),
        H - MB,
        MT - 4.0
    )
}

fn hline(f: &Frame, y: f64, label: &str) -> String {
    if y < f.y0 || y > f.y1 {
        return String::new();
    }
    format!(
        "<line x1=\"{ML}\" y1=\"{0:.2}\" x2=\"{1}\" y2=\"{0:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n\
         <text x=\"{2}\" y=\"{3:.2}\" fill=\"gray\">{label}</text>\n",
        f.py(y),
        W - MR,
        W - MR - 80.0,
        f.py(y) - 4.0
    )
}

/// Render a CSV table of a known schema to an SVG string.
pub fn plot(csv_text: &str, kind: PlotKind) -> Result<String> {
    let (header, rows) = parse_csv(csv_text)?;
    let mut svg = String::new();
    match kind {
        PlotKind::Ecurve => {
            let l = csv_column(&header, &rows, "L")?;
            let e = csv_column(&header, &rows, "E")?;
            let thr = trivial_threshold(crate::asym::LAMBDA0);
            let f = Frame::from(&l, &e, &[0.0])?;
            svg.push_str(&svg_open("per-length strip energy E(L)"));
            svg.push_str(&axes(&f, "L", "E(L)"));
            svg.push_str(&hline(&f, 0.0, ""));
            svg.push_str(&vline(&f, thr, "vanishing threshold"));
            svg.push_str(&polyline(&f, &l, &e, "steelblue"));
            svg.push_str(&dots(&f, &l, &e, "steelblue"));
        }
        PlotKind::Gtable => {
            let b = csv_column(&header, &rows, "b")?;
            let g = csv_column(&header, &rows, "g")?;
            let f = Frame::from(&b, &g, &[0.0, -0.5])?;
            svg.push_str(&svg_open("cell energy density g(b)"));
            svg.push_str(&axes(&f, "b", "g(b)"));
            svg.push_str(&hline(&f, -0.5, "g = -1/2"));
            svg.push_str(&hline(&f, 0.0, ""));
            svg.push_str(&vline(&f, 1.0, "b = 1"));
            svg.push_str(&polyline(&f, &b, &g, "firebrick"));
            svg.push_str(&dots(&f, &b, &g, "firebrick"));
        }
        PlotKind::Decay => {
            let bin = csv_column(&header, &rows, "bin")?;
            let mass = csv_column(&header, &rows, "mass")?;
            let floor = mass.iter().cloned().fold(0.0f64, f64::max) * 1e-16;
            let (xs, ys): (Vec<f64>, Vec<f64>) = bin
                .iter()
                .zip(&mass)
                .filter(|(_, &m)| m > floor)
                .map(|(&x, &m)| (x, m.ln()))
                .unzip();
            let f = Frame::from(&xs, &ys, &[])?;
            svg.push_str(&svg_open("mass vs distance to the zero curve (log scale)"));
            svg.push_str(&axes(&f, "distance (kappa/H units)", "ln mass"));
            svg.push_str(&polyline(&f, &xs, &ys, "seagreen"));
            svg.push_str(&dots(&f, &xs, &ys, "seagreen"));
        }
        PlotKind::Verify => {
            let k = csv_column(&header, &rows, "kappa")?;
            let gap = csv_column(&header, &rows, "gap_normalized")?;
            let f = Frame::from(&k, &gap, &[0.0])?;
            svg.push_str(&svg_open("normalized asymptotic gap across the sweep"));
            svg.push_str(&axes(&f, "kappa", "|E - C0| H / kappa^3"));
            svg.push_str(&hline(&f, 0.0, ""));
            svg.push_str(&polyline(&f, &k, &gap, "darkorange"));
            svg.push_str(&dots(&f, &k, &gap, "darkorange"));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecurve_plot_is_pure() {
        let csv = "L,E,err,fit_c\n0.5,-1.2,0.01,0.3\n1.0,-0.4,0.01,0.2\n3.0,0,0.001,0\n";
        let a = plot(csv, PlotKind::Ecurve).unwrap();
        let b = plot(csv, PlotKind::Ecurve).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("vanishing threshold"));
    }

    #[test]
    fn gtable_guides_present() {
        let csv = "b,g,envelope,r_max\n0.1,-0.4,0.02,32\n0.9,-0.01,0.06,32\n";
        let svg = plot(csv, PlotKind::Gtable).unwrap();
        assert!(svg.contains("g = -1/2"));
    }

    #[test]
    fn decay_log_scale() {
        let csv = "bin,mass\n0.5,1.0\n1.5,0.1\n2.5,0.0\n";
        let svg = plot(csv, PlotKind::Decay).unwrap();
        assert!(svg.contains("ln mass"));
    }

    #[test]
    fn schema_mismatch_rejected() {
        let csv = "x,y\n1,2\n";
        assert!(plot(csv, PlotKind::Ecurve).is_err());
    }
}
