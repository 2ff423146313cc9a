//! Independent Monte Carlo oracles shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Mean and standard error of an estimator.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub mean: f64,
    pub sigma: f64,
}

/// Planar polygonal domain given by its cells (side 1) for membership and by
/// its boundary segments for the distance function.
pub struct Planar {
    pub cells: Vec<[i64; 2]>,
    pub cell: f64,
    pub segments: Vec<([f64; 2], [f64; 2])>,
}

fn seg_dist(x: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * d[0] - x[0], a[1] + t * d[1] - x[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

impl Planar {
    pub fn unit_square() -> Self {
        Planar {
            cells: vec![[0, 0]],
            cell: 1.0,
            segments: vec![
                ([0.0, 0.0], [1.0, 0.0]),
                ([1.0, 0.0], [1.0, 1.0]),
                ([1.0, 1.0], [0.0, 1.0]),
                ([0.0, 1.0], [0.0, 0.0]),
            ],
        }
    }

    pub fn l_shape() -> Self {
        Planar {
            cells: vec![[0, 0], [1, 0], [0, 1]],
            cell: 1.0,
            segments: vec![
                ([0.0, 0.0], [2.0, 0.0]),
                ([2.0, 0.0], [2.0, 1.0]),
                ([2.0, 1.0], [1.0, 1.0]),
                ([1.0, 1.0], [1.0, 2.0]),
                ([1.0, 2.0], [0.0, 2.0]),
                ([0.0, 2.0], [0.0, 0.0]),
            ],
        }
    }

    /// Unit square with the slit `x = 1/2, 0 <= y <= 1/2`.
    pub fn slit_square() -> Self {
        let mut d = Self::unit_square();
        d.cells = vec![[0, 0], [1, 0], [0, 1], [1, 1]];
        d.cell = 0.5;
        d.segments.push(([0.5, 0.0], [0.5, 0.5]));
        d
    }

    /// Distance to an arbitrary union of segments.
    pub fn distance_to(x: &[f64; 2], segments: &[([f64; 2], [f64; 2])]) -> f64 {
        segments.iter().map(|(a, b)| seg_dist(x, a, b)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64; 2]) -> bool {
        let c = [(x[0] / self.cell).floor() as i64, (x[1] / self.cell).floor() as i64];
        self.cells.contains(&c)
    }

    pub fn distance(&self, x: &[f64; 2]) -> f64 {
        self.segments.iter().map(|(a, b)| seg_dist(x, a, b)).fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.cells {
            for k in 0..2 {
                lo[k] = lo[k].min(c[k] as f64 * self.cell);
                hi[k] = hi[k].max((c[k] + 1) as f64 * self.cell);
            }
        }
        (lo, hi)
    }
}

/// Piecewise-constant field on a uniform grid of spacing `h` anchored at the
/// origin; `lookup(i, j)` returns the cell value.
pub struct CellField<'a> {
    pub h: f64,
    pub lookup: &'a (dyn Fn(i64, i64) -> f64 + Sync),
}

impl CellField<'_> {
    pub fn at(&self, x: &[f64; 2]) -> f64 {
        (self.lookup)((x[0] / self.h).floor() as i64, (x[1] / self.h).floor() as i64)
    }
}

fn combine(parts: Vec<(f64, f64)>, n: usize) -> Estimate {
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    Estimate {
        mean,
        sigma: (var / n as f64).sqrt(),
    }
}

const CHUNKS: u64 = 200;

/// `∫∫_{Ω×Ω} |u(x) - u(y)|^p μ(x, y)` with `x` uniform on the bounding box
/// and `y = x + z`, `z` drawn with density `∝ |z|^{-γ}` on the disc of
/// radius `reach`, which tames the diagonal singularity.
pub fn double_integral(
    dom: &Planar,
    u: &CellField<'_>,
    p: f64,
    mu: &(dyn Fn(&[f64; 2], &[f64; 2]) -> f64 + Sync),
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Estimate {
    let (lo, hi) = dom.bounding_box();
    let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    let reach = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
    let norm = 2.0 * std::f64::consts::PI * reach.powf(2.0 - gamma) / (2.0 - gamma);
    let per = samples / CHUNKS as usize;
    let parts: Vec<(f64, f64)> = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..per {
                let x = [lo[0] + rng.random::<f64>() * (hi[0] - lo[0]), lo[1] + rng.random::<f64>() * (hi[1] - lo[1])];
                let r = reach * rng.random::<f64>().powf(1.0 / (2.0 - gamma));
                let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                let y = [x[0] + r * th.cos(), x[1] + r * th.sin()];
                if r == 0.0 || !dom.contains(&x) || !dom.contains(&y) {
                    continue;
                }
                let diff = (u.at(&x) - u.at(&y)).abs();
                if diff == 0.0 {
                    continue;
                }
                let v = diff.powf(p) * mu(&x, &y) * area * norm * r.powf(gamma);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    combine(parts, per * CHUNKS as usize)
}

/// `∫_Ω g` with `x` uniform on the bounding box.
pub fn single_integral(dom: &Planar, g: &(dyn Fn(&[f64; 2]) -> f64 + Sync), samples: usize, seed: u64) -> Estimate {
    let (lo, hi) = dom.bounding_box();
    let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    let per = samples / CHUNKS as usize;
    let parts: Vec<(f64, f64)> = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..per {
                let x = [lo[0] + rng.random::<f64>() * (hi[0] - lo[0]), lo[1] + rng.random::<f64>() * (hi[1] - lo[1])];
                if !dom.contains(&x) {
                    continue;
                }
                let v = g(&x) * area;
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    combine(parts, per * CHUNKS as usize)
}

/// Ratio `∫ u ω / ∫ ω` from the same samples, with a delta-method error.
pub fn weighted_mean(
    dom: &Planar,
    u: &(dyn Fn(&[f64; 2]) -> f64 + Sync),
    omega: &(dyn Fn(&[f64; 2]) -> f64 + Sync),
    samples: usize,
    seed: u64,
) -> Estimate {
    let (lo, hi) = dom.bounding_box();
    let per = samples / CHUNKS as usize;
    // per chunk: Σa, Σb, Σa², Σb², Σab with a = uω, b = ω
    let parts: Vec<[f64; 5]> = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut acc = [0.0; 5];
            for _ in 0..per {
                let x = [lo[0] + rng.random::<f64>() * (hi[0] - lo[0]), lo[1] + rng.random::<f64>() * (hi[1] - lo[1])];
                if !dom.contains(&x) {
                    continue;
                }
                let b = omega(&x);
                let a = u(&x) * b;
                acc[0] += a;
                acc[1] += b;
                acc[2] += a * a;
                acc[3] += b * b;
                acc[4] += a * b;
            }
            acc
        })
        .collect();
    let n = (per * CHUNKS as usize) as f64;
    let mut t = [0.0; 5];
    for p in parts {
        for k in 0..5 {
            t[k] += p[k];
        }
    }
    let (ma, mb) = (t[0] / n, t[1] / n);
    let (va, vb, cab) = (t[2] / n - ma * ma, t[3] / n - mb * mb, t[4] / n - ma * mb);
    let r = ma / mb;
    let var = (va - 2.0 * r * cab + r * r * vb) / (mb * mb);
    Estimate {
        mean: r,
        sigma: (var.max(0.0) / n).sqrt(),
    }
}
