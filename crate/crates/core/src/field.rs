//! Uniform grids on rectilinear domains and piecewise-constant fields.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::geometry::{Aabb, RectilinearDomain};
use crate::scalar::{pairwise_sum, ExactScalar, Rational, Real};

/// Each lattice cell of the domain split into `subdivisions^n` congruent
/// grid cells of side `h = cell_size / subdivisions`.
#[derive(Clone, Debug)]
pub struct Grid<const N: usize> {
    domain: Arc<RectilinearDomain<N>>,
    subdivisions: u32,
    h: Rational,
    cells: Vec<[i64; N]>,
    lookup: HashMap<[i64; N], usize>,
    midpoints: Vec<[f64; N]>,
}

impl<const N: usize> Grid<N> {
    pub fn new(domain: Arc<RectilinearDomain<N>>, subdivisions: u32) -> Result<Self> {
        if subdivisions == 0 {
            return Err(FracError::OutOfRange("subdivisions must be positive".into()));
        }
        let k = subdivisions as i64;
        let h = domain.cell_size().to_rational() / Rational::from_int(k);
        let per_cell = (subdivisions as usize).pow(N as u32);
        let mut cells = Vec::with_capacity(domain.cells().len() * per_cell);
        for c in domain.cells() {
            for flat in 0..per_cell {
                let mut rem = flat;
                let fine: [i64; N] = std::array::from_fn(|j| {
                    let sub = (rem % subdivisions as usize) as i64;
                    rem /= subdivisions as usize;
                    c[j] * k + sub
                });
                cells.push(fine);
            }
        }
        cells.sort_unstable();
        let lookup = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let hf = h.to_f64();
        let midpoints = cells.iter().map(|c| c.map(|v| (v as f64 + 0.5) * hf)).collect();
        Ok(Grid {
            domain,
            subdivisions,
            h,
            cells,
            lookup,
            midpoints,
        })
    }

    /// Grid at refinement depth `r`: `2^r` subdivisions per cell side.
    pub fn dyadic(domain: Arc<RectilinearDomain<N>>, r: u32) -> Result<Self> {
        Self::new(domain, 1u32 << r)
    }

    /// Grid with cells of side `h`; `h` must divide the lattice cell size.
    pub fn with_spacing(domain: Arc<RectilinearDomain<N>>, h: Rational) -> Result<Self> {
        let k = domain.cell_size().to_rational() / h;
        if !k.is_integer() || k <= Rational::from_int(0) {
            return Err(FracError::OutOfRange(format!("spacing {h} does not divide the cell size")));
        }
        Self::new(domain, *k.numer() as u32)
    }

    pub fn domain(&self) -> &Arc<RectilinearDomain<N>> {
        &self.domain
    }

    pub fn subdivisions(&self) -> u32 {
        self.subdivisions
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell side `h`.
    pub fn h(&self) -> Rational {
        self.h
    }

    /// Quadrature weight `h^n` of every cell.
    pub fn weight(&self) -> f64 {
        self.h.to_f64().powi(N as i32)
    }

    pub fn weight_exact(&self) -> Rational {
        (0..N).fold(Rational::from_int(1), |a, _| a * self.h)
    }

    /// Integer index of cell `i`: the cell is `index * h + [0, h]^n`.
    pub fn index(&self, i: usize) -> [i64; N] {
        self.cells[i]
    }

    pub fn indices(&self) -> &[[i64; N]] {
        &self.cells
    }

    pub fn find(&self, index: &[i64; N]) -> Option<usize> {
        self.lookup.get(index).copied()
    }

    /// Cell containing the point, if any.
    pub fn locate(&self, x: &[f64; N]) -> Option<usize> {
        let hf = self.h.to_f64();
        let idx = x.map(|v| (v / hf).floor() as i64);
        self.find(&idx)
    }

    pub fn cell_box(&self, i: usize) -> Aabb<Rational, N> {
        let lo = self.cells[i].map(|v| Rational::from_int(v) * self.h);
        Aabb::new(lo, lo.map(|v| v + self.h))
    }

    pub fn midpoint(&self, i: usize) -> &[f64; N] {
        &self.midpoints[i]
    }

    pub fn midpoints(&self) -> &[[f64; N]] {
        &self.midpoints
    }

    pub fn measure(&self) -> f64 {
        self.len() as f64 * self.weight()
    }

    /// Grid cells whose boxes meet the open box `b` with positive volume.
    pub fn cells_meeting(&self, b: &Aabb<Rational, N>) -> Vec<usize> {
        let lo: [i64; N] = std::array::from_fn(|k| (b.lo[k] / self.h).floor().to_integer() as i64);
        let hi: [i64; N] = std::array::from_fn(|k| (b.hi[k] / self.h).ceil().to_integer() as i64);
        let counts: [i64; N] = std::array::from_fn(|k| (hi[k] - lo[k]).max(0));
        let total: i64 = counts.iter().product();
        let mut out = Vec::new();
        for mut code in 0..total {
            let idx: [i64; N] = std::array::from_fn(|k| {
                let v = lo[k] + code % counts[k];
                code /= counts[k];
                v
            });
            if let Some(i) = self.find(&idx) {
                out.push(i);
            }
        }
        out.sort_unstable();
        out
    }
}

impl<const N: usize> PartialEq for Grid<N> {
    fn eq(&self, other: &Self) -> bool {
        self.subdivisions == other.subdivisions && self.cells == other.cells && self.h == other.h
    }
}

/// Piecewise-constant function on a grid, one sample per cell.
#[derive(Clone, Debug)]
pub struct Field<T, const N: usize> {
    grid: Arc<Grid<N>>,
    values: Vec<T>,
}

impl<T: Real, const N: usize> Field<T, N> {
    pub fn new(grid: Arc<Grid<N>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FracError::IncompatibleGrid(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    /// Samples `f` at cell midpoints.
    pub fn from_fn(grid: Arc<Grid<N>>, f: impl Fn(&[f64; N]) -> T) -> Self {
        let values = grid.midpoints().iter().map(f).collect();
        Field { grid, values }
    }

    pub fn constant(grid: Arc<Grid<N>>, c: T) -> Self {
        let values = vec![c; grid.len()];
        Field { grid, values }
    }

    pub fn zeros(grid: Arc<Grid<N>>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn grid(&self) -> &Arc<Grid<N>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn integral(&self) -> T {
        pairwise_sum(&self.values) * T::lit(self.grid.weight())
    }

    pub fn mean(&self) -> T {
        pairwise_sum(&self.values) / T::lit(self.values.len() as f64)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, lambda: T) -> Self {
        self.map(|v| v * lambda)
    }

    pub fn shift(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    /// `self - mean(self)`.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        self.shift(-m)
    }

    pub fn to_f64(&self) -> Field<f64, N> {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    subdivisions: u32,
    values: Vec<f64>,
}

impl<const N: usize> Field<f64, N> {
    /// JSON grid: `{"subdivisions": k, "values": [...]}`, values in grid order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FieldJson {
            subdivisions: self.grid.subdivisions(),
            values: self.values.clone(),
        })
        .expect("plain record serializes")
    }

    pub fn from_json(domain: Arc<RectilinearDomain<N>>, value: &serde_json::Value) -> Result<Self> {
        let raw: FieldJson = serde_json::from_value(value.clone())?;
        let grid = Arc::new(Grid::new(domain, raw.subdivisions)?);
        Field::new(grid, raw.values)
    }
}

/// Named families of test fields.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldFamily {
    Constant(f64),
    /// The coordinate function `x_axis`.
    Coordinate(usize),
    /// `(1 - |x - c|^2 / r^2)_+^2`.
    RadialBump { center: Vec<f64>, radius: f64 },
    /// Tensor Chebyshev polynomial `prod_k T_{deg_k}` on the bounding box
    /// mapped to `[-1, 1]^n`.
    Chebyshev(Vec<usize>),
    /// Random trigonometric sum with frequencies up to `max_freq` per axis.
    RandomBandLimited { seed: u64, max_freq: usize },
}

impl FieldFamily {
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn sample<const N: usize>(&self, grid: Arc<Grid<N>>) -> Field<f64, N> {
        let bb = grid.domain().bounding_box().to_f64();
        let unit = move |x: &[f64; N]| -> [f64; N] { std::array::from_fn(|k| (x[k] - bb.lo[k]) / (bb.hi[k] - bb.lo[k])) };
        match self {
            FieldFamily::Constant(c) => Field::constant(grid, *c),
            FieldFamily::Coordinate(axis) => {
                let a = *axis;
                Field::from_fn(grid, move |x| x[a.min(N - 1)])
            }
            FieldFamily::RadialBump { center, radius } => {
                let (c, r) = (center.clone(), *radius);
                Field::from_fn(grid, move |x| {
                    let d2: f64 = (0..N).map(|k| (x[k] - c.get(k).copied().unwrap_or(0.0)).powi(2)).sum();
                    let t = (1.0 - d2 / (r * r)).max(0.0);
                    t * t
                })
            }
            FieldFamily::Chebyshev(deg) => {
                let deg = deg.clone();
                Field::from_fn(grid, move |x| {
                    let y = unit(x);
                    (0..N)
                        .map(|k| {
                            let z = 2.0 * y[k] - 1.0;
                            (deg.get(k).copied().unwrap_or(0) as f64 * z.clamp(-1.0, 1.0).acos()).cos()
                        })
                        .product()
                })
            }
            FieldFamily::RandomBandLimited { seed, max_freq } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let per_axis = max_freq + 1;
                let modes: Vec<([f64; N], f64, f64)> = (0..per_axis.pow(N as u32))
                    .filter(|&flat| flat != 0)
                    .map(|flat| {
                        let mut rem = flat;
                        let k: [f64; N] = std::array::from_fn(|_| {
                            let v = rem % per_axis;
                            rem /= per_axis;
                            v as f64
                        });
                        let norm2: f64 = k.iter().map(|v| v * v).sum();
                        let amp: f64 = rng.sample::<f64, _>(StandardNormal) / (1.0 + norm2);
                        let phase = rng.random::<f64>() * std::f64::consts::TAU;
                        (k, amp, phase)
                    })
                    .collect();
                Field::from_fn(grid, move |x| {
                    let y = unit(x);
                    modes
                        .iter()
                        .map(|(k, a, ph)| {
                            let arg: f64 = (0..N).map(|j| k[j] * y[j]).sum::<f64>() * std::f64::consts::PI;
                            a * (arg + ph).cos()
                        })
                        .sum()
                })
            }
        }
    }
}

impl fmt::Display for FieldFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldFamily::Constant(c) => write!(f, "const:{c}"),
            FieldFamily::Coordinate(a) => write!(f, "x{a}"),
            FieldFamily::RadialBump { center, radius } => {
                let c: Vec<String> = center.iter().map(|v| v.to_string()).collect();
                write!(f, "bump:{}:{radius}", c.join(","))
            }
            FieldFamily::Chebyshev(d) => {
                let d: Vec<String> = d.iter().map(|v| v.to_string()).collect();
                write!(f, "cheb:{}", d.join(","))
            }
            FieldFamily::RandomBandLimited { seed, max_freq } => write!(f, "random:{seed}:{max_freq}"),
        }
    }
}

impl FromStr for FieldFamily {
    type Err = FracError;

    /// `const:c`, `x0`, `bump:cx,cy:r`, `cheb:2,3`, `random:seed[:max_freq]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || FracError::Parse(format!("unknown field family '{s}'"));
        let nums = |t: &str| -> Result<Vec<f64>> {
            t.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect()
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["const", c] => Ok(FieldFamily::Constant(c.parse().map_err(|_| bad())?)),
            ["bump", c, r] => Ok(FieldFamily::RadialBump {
                center: nums(c)?,
                radius: r.parse().map_err(|_| bad())?,
            }),
            ["cheb", d] => Ok(FieldFamily::Chebyshev(
                d.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?,
            )),
            ["random", seed] => Ok(FieldFamily::RandomBandLimited {
                seed: seed.parse().map_err(|_| bad())?,
                max_freq: 4,
            }),
            ["random", seed, f] => Ok(FieldFamily::RandomBandLimited {
                seed: seed.parse().map_err(|_| bad())?,
                max_freq: f.parse().map_err(|_| bad())?,
            }),
            [x] if x.starts_with('x') => Ok(FieldFamily::Coordinate(x[1..].parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}
