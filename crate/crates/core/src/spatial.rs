//! Uniform bucket grid over points in the plane.
//!
//! Serves the nearest-neighbour queries behind spacings and ratios and the
//! rectangle queries used when counting points inside counting regions.

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct PointGrid {
    points: Vec<Complex64>,
    origin: Complex64,
    cell: f64,
    nx: usize,
    ny: usize,
    /// `starts[c]..starts[c + 1]` indexes `order` for cell `c`.
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl PointGrid {
    /// Builds the index with roughly two points per cell.
    pub fn new(points: &[Complex64]) -> Self {
        let n = points.len().max(1);
        let (mut lo, mut hi) =
            (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for z in points {
            lo.re = lo.re.min(z.re);
            lo.im = lo.im.min(z.im);
            hi.re = hi.re.max(z.re);
            hi.im = hi.im.max(z.im);
        }
        if points.is_empty() {
            lo = Complex64::new(0.0, 0.0);
            hi = Complex64::new(1.0, 1.0);
        }
        let w = (hi.re - lo.re).max(1e-12);
        let h = (hi.im - lo.im).max(1e-12);
        let cell = ((w * h) / (n as f64 / 2.0)).sqrt().max(w.max(h) / 4096.0);
        let nx = ((w / cell).floor() as usize + 1).max(1);
        let ny = ((h / cell).floor() as usize + 1).max(1);

        let mut grid =
            Self { points: points.to_vec(), origin: lo, cell, nx, ny, starts: Vec::new(), order: Vec::new() };
        let mut counts = vec![0usize; nx * ny + 1];
        let cells: Vec<usize> = points.iter().map(|&z| grid.cell_of(z)).collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut order = vec![0usize; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            order[fill[c]] = i;
            fill[c] += 1;
        }
        grid.starts = counts;
        grid.order = order;
        grid
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn cell_coords(&self, z: Complex64) -> (isize, isize) {
        (((z.re - self.origin.re) / self.cell).floor() as isize, ((z.im - self.origin.im) / self.cell).floor() as isize)
    }

    fn cell_of(&self, z: Complex64) -> usize {
        let (cx, cy) = self.cell_coords(z);
        let cx = cx.clamp(0, self.nx as isize - 1) as usize;
        let cy = cy.clamp(0, self.ny as isize - 1) as usize;
        cy * self.nx + cx
    }

    fn cell_members(&self, cx: usize, cy: usize) -> &[usize] {
        let c = cy * self.nx + cx;
        &self.order[self.starts[c]..self.starts[c + 1]]
    }

    /// The `k` nearest points to `query` (excluding index `exclude`), sorted
    /// by distance. Returns fewer than `k` only if the grid holds fewer points.
    pub fn k_nearest(&self, query: Complex64, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k == 0 || self.points.is_empty() {
            return best;
        }
        let (qx, qy) = self.cell_coords(query);
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        let gap = |q: isize, n: isize| {
            if q < 0 {
                -q
            } else if q >= n {
                q - n + 1
            } else {
                0
            }
        };
        let first_ring = gap(qx, nx).max(gap(qy, ny));
        let last_ring = qx.max(nx - 1 - qx).max(qy).max(ny - 1 - qy);
        for ring in first_ring..=last_ring {
            // Every point outside the searched square is at least this far away.
            if best.len() == k {
                let reach = self.reach(query, qx, qy, ring - 1);
                if best[k - 1].1 <= reach {
                    break;
                }
            }
            for (cx, cy) in ring_cells(qx, qy, ring, nx, ny) {
                for &i in self.cell_members(cx, cy) {
                    if Some(i) == exclude {
                        continue;
                    }
                    let d = (self.points[i] - query).norm();
                    if best.len() < k || d < best[k - 1].1 {
                        let pos = best.partition_point(|&(_, bd)| bd <= d);
                        best.insert(pos, (i, d));
                        best.truncate(k);
                    }
                }
            }
        }
        best
    }

    /// Distance from `query` to the outside of the square of cells with
    /// Chebyshev radius `ring` around `(qx, qy)`.
    fn reach(&self, query: Complex64, qx: isize, qy: isize, ring: isize) -> f64 {
        if ring < 0 {
            return 0.0;
        }
        let x0 = self.origin.re + (qx - ring) as f64 * self.cell;
        let x1 = self.origin.re + (qx + ring + 1) as f64 * self.cell;
        let y0 = self.origin.im + (qy - ring) as f64 * self.cell;
        let y1 = self.origin.im + (qy + ring + 1) as f64 * self.cell;
        (query.re - x0).min(x1 - query.re).min(query.im - y0).min(y1 - query.im).max(0.0)
    }

    /// Indices of points in the closed axis-aligned box `[lo, hi]`.
    pub fn in_box(&self, lo: Complex64, hi: Complex64) -> impl Iterator<Item = usize> + '_ {
        let (x0, y0) = self.cell_coords(lo);
        let (x1, y1) = self.cell_coords(hi);
        let x0 = x0.clamp(0, self.nx as isize - 1) as usize;
        let x1 = x1.clamp(0, self.nx as isize - 1) as usize;
        let y0 = y0.clamp(0, self.ny as isize - 1) as usize;
        let y1 = y1.clamp(0, self.ny as isize - 1) as usize;
        (y0..=y1).flat_map(move |cy| (x0..=x1).flat_map(move |cx| self.cell_members(cx, cy).iter().copied())).filter(
            move |&i| {
                let z = self.points[i];
                z.re >= lo.re && z.re <= hi.re && z.im >= lo.im && z.im <= hi.im
            },
        )
    }
}

/// Cells at Chebyshev distance `ring` from `(qx, qy)`, clipped to the grid.
fn ring_cells(qx: isize, qy: isize, ring: isize, nx: isize, ny: isize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let x0 = (qx - ring).max(0);
    let x1 = (qx + ring).min(nx - 1);
    let y0 = (qy - ring).max(0);
    let y1 = (qy + ring).min(ny - 1);
    if x0 > x1 || y0 > y1 {
        return out;
    }
    for cy in y0..=y1 {
        let edge_row = cy == qy - ring || cy == qy + ring;
        if edge_row {
            out.extend((x0..=x1).map(|cx| (cx as usize, cy as usize)));
        } else {
            if qx - ring >= 0 {
                out.push(((qx - ring) as usize, cy as usize));
            }
            if ring > 0 && qx + ring < nx {
                out.push(((qx + ring) as usize, cy as usize));
            }
        }
    }
    out
}
