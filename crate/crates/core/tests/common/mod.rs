//! Independent oracles shared by integration tests.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nhrmt::spectra::RadialDensityModel;
use nhrmt::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let x = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = x.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (x - i as f64) * (sorted[j] - sorted[i])
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Monte Carlo estimate of the Ginibre number variance: for two points drawn
/// uniformly in the disc of area `pi <n>`,
/// `Sigma^2 = <n> - <n>^2 E[exp(-|z1 - z2|^2)]`. Returns `(value, stderr)`.
pub fn sigma2_ginibre_mc(n_mean: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = n_mean.sqrt();
    let point = |rng: &mut ChaCha8Rng| {
        Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU)
    };
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let a = point(&mut rng);
        let b = point(&mut rng);
        let w = (-(a - b).norm_sqr()).exp();
        sum += w;
        sum2 += w * w;
    }
    let m = sum / samples as f64;
    let var = (sum2 / samples as f64 - m * m).max(0.0);
    let n2 = n_mean * n_mean;
    (n_mean - n2 * m, n2 * (var / samples as f64).sqrt())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Shortest-path distances in the metric `pi R1 |dz|^2` on a square grid of
/// `(2 half + 1)^2` nodes with spacing `h` centered on `center`. Edges join
/// nodes along every primitive lattice vector with components up to
/// `reach`; nodes outside the support are removed.
pub struct GridDistances {
    pub center: Complex64,
    pub h: f64,
    pub half: i64,
    dist: Vec<f64>,
}

impl GridDistances {
    pub fn new(density: &RadialDensityModel, center: Complex64, h: f64, half: i64, reach: i64) -> Self {
        let side = 2 * half + 1;
        let at = |ix: i64, iy: i64| center + Complex64::new((ix - half) as f64 * h, (iy - half) as f64 * h);
        let speed: Vec<f64> = (0..side * side)
            .map(|k| {
                let r = at(k % side, k / side).norm();
                let d = density.density(r);
                if density.in_support(r) && d > 0.0 {
                    (std::f64::consts::PI * d).sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let mut stencil = Vec::new();
        for a in -reach..=reach {
            for b in -reach..=reach {
                if (a, b) != (0, 0) && gcd(a, b) == 1 {
                    stencil.push((a, b, ((a * a + b * b) as f64).sqrt() * h));
                }
            }
        }
        let mut dist = vec![f64::INFINITY; (side * side) as usize];
        let start = (half * side + half) as usize;
        dist[start] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, start)));
        while let Some(Reverse((key, k))) = heap.pop() {
            let d = f64::from_bits(key);
            if d > dist[k] {
                continue;
            }
            let (ix, iy) = (k as i64 % side, k as i64 / side);
            for &(a, b, len) in &stencil {
                let (jx, jy) = (ix + a, iy + b);
                if jx < 0 || jy < 0 || jx >= side || jy >= side {
                    continue;
                }
                let j = (jy * side + jx) as usize;
                let cost = 0.5 * len * (speed[k] + speed[j]);
                if !cost.is_finite() {
                    continue;
                }
                let nd = d + cost;
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Reverse((nd.to_bits(), j)));
                }
            }
        }
        Self { center, h, half, dist }
    }

    /// Bilinear interpolation of the node distances at `p`.
    pub fn at(&self, p: Complex64) -> f64 {
        let side = 2 * self.half + 1;
        let x = (p.re - self.center.re) / self.h + self.half as f64;
        let y = (p.im - self.center.im) / self.h + self.half as f64;
        let (ix, iy) = (x.floor() as i64, y.floor() as i64);
        if ix < 0 || iy < 0 || ix + 1 >= side || iy + 1 >= side {
            return f64::INFINITY;
        }
        let (fx, fy) = (x - ix as f64, y - iy as f64);
        let d = |a: i64, b: i64| self.dist[((iy + b) * side + ix + a) as usize];
        (1.0 - fx) * (1.0 - fy) * d(0, 0) + fx * (1.0 - fy) * d(1, 0) + (1.0 - fx) * fy * d(0, 1) + fx * fy * d(1, 1)
    }
}
