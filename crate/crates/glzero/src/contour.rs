//! Zero level set extraction (marching squares) and point-to-polyline
//! distances, used for the vanishing curve of the field profile.

/// One segment of the zero set, with endpoints in physical coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Segment {
    pub fn length(&self) -> f64 {
        let (dx, dy) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn midpoint(&self) -> (f64, f64) {
        (0.5 * (self.a.0 + self.b.0), 0.5 * (self.a.1 + self.b.1))
    }

    /// Euclidean distance from a point to the segment.
    pub fn distance(&self, p: (f64, f64)) -> f64 {
        let (ax, ay) = self.a;
        let (bx, by) = self.b;
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.0 - ax) * dx + (p.1 - ay) * dy) / len2).clamp(0.0, 1.0)
        };
        let (cx, cy) = (ax + t * dx, ay + t * dy);
        ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
    }
}

/// Marching squares on nodal samples f (row-major, i fast) over the grid
/// x = x0 + i hx, y = y0 + j hy. Returns the zero-crossing segments.
pub fn zero_contour(
    f: &[f64],
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
) -> Vec<Segment> {
    let idx = |i: usize, j: usize| j * nx + i;
    let mut segs = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // corner values, counter-clockwise from bottom-left
            let v = [
                f[idx(i, j)],
                f[idx(i + 1, j)],
                f[idx(i + 1, j + 1)],
                f[idx(i, j + 1)],
            ];
            let x = x0 + i as f64 * hx;
            let y = y0 + j as f64 * hy;
            let corner = [(x, y), (x + hx, y), (x + hx, y + hy), (x, y + hy)];
            // crossing points on the four edges, by linear interpolation
            let mut pts: Vec<(f64, f64)> = Vec::with_capacity(4);
            for e in 0..4 {
                let (va, vb) = (v[e], v[(e + 1) % 4]);
                if (va < 0.0) != (vb < 0.0) {
                    let t = va / (va - vb);
                    let (pa, pb) = (corner[e], corner[(e + 1) % 4]);
                    pts.push((pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1)));
                }
            }
            match pts.len() {
                2 => segs.push(Segment { a: pts[0], b: pts[1] }),
                4 => {
                    // saddle cell: resolve by the cell-center sign
                    let c = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                    // edges come in order bottom,right,top,left; pair the
                    // crossings so the contour separates the center from the
                    // corners of opposite sign
                    let pair = if (c < 0.0) == (v[0] < 0.0) {
                        [(0, 3), (1, 2)]
                    } else {
                        [(0, 1), (2, 3)]
                    };
                    for (p, q) in pair {
                        segs.push(Segment { a: pts[p], b: pts[q] });
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

/// Total length of the segment set.
pub fn total_length(segs: &[Segment]) -> f64 {
    segs.iter().map(Segment::length).sum()
}

/// Distance from a point to the segment set (infinity when empty).
pub fn distance_to(segs: &[Segment], p: (f64, f64)) -> f64 {
    segs.iter()
        .map(|s| s.distance(p))
        .fold(f64::INFINITY, f64::min)
}
