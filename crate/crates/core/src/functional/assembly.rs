use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::kernel::KernelSpec;
use super::pair_integral::{pair_integral_2d, pair_integral_within_2d, unit_pair_integral_2d};
use crate::decomposition::CoveringGrid;
use crate::error::{FracError, Result};
use crate::field::{Field, Grid};
use crate::scalar::{pairwise_sum, ExactScalar, Real};

/// Quadrature controls for the cell-pair double integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureOptions {
    /// Depth of the recursive halving applied to touching cell pairs.
    pub diag_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { diag_depth: 3 }
    }
}

/// Where the double integral runs.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a, const N: usize> {
    /// `Ω × Ω`.
    Whole,
    /// `Σ_t U_t × U_t`.
    Localized(&'a CoveringGrid<N>),
    /// `U_t × U_t` for one node.
    Node(&'a CoveringGrid<N>, usize),
}

/// The double integral `∫∫ |u(x) - u(y)|^p μ(x, y)` for piecewise-constant
/// fields, stored as symmetric pair weights: for `i < j`,
/// `W_ij = ∫_{c_i}∫_{c_j} μ + ∫_{c_j}∫_{c_i} μ`, and the integral is
/// `Σ_{i<j} W_ij |u_i - u_j|^p`. Cells never interact with themselves.
#[derive(Clone, Debug)]
pub struct GagliardoForm<const N: usize> {
    grid: Arc<Grid<N>>,
    p: f64,
    kernel: String,
    options: QuadratureOptions,
    pairs: Vec<(u32, u32, f64)>,
}

/// Separated pairs up to this offset (in cells, sup norm) use a two-point
/// Gauss product rule; farther pairs use the midpoint rule, on both cells
/// split once when the kernel carries a ball indicator.
const GAUSS_REACH: i64 = 8;

#[derive(Clone, Copy, Debug)]
struct Entry<const N: usize> {
    node: u32,
    dy: [f64; N],
    w: f64,
    /// Index into the ball profiles, or `NO_PROFILE` to test the ball at `dy`.
    profile: u32,
}

const NO_PROFILE: u32 = u32::MAX;

/// Fraction of a touching leaf pair's integral that lies within distance
/// `R`, tabulated at `R = r_max t²` for uniform `t`.
#[derive(Debug)]
struct BallProfile {
    r_max: f64,
    values: Vec<f64>,
}

impl BallProfile {
    const POINTS: usize = 129;

    fn new(o: [i64; 2], sigma: f64, profile: &dyn Fn(f64) -> f64, kinks: &[f64]) -> Self {
        let r_max = sigma * (((o[0].abs() + 1).pow(2) + (o[1].abs() + 1).pow(2)) as f64).sqrt();
        let radii: Vec<f64> = (0..Self::POINTS)
            .map(|i| r_max * (i as f64 / (Self::POINTS - 1) as f64).powi(2))
            .collect();
        let (within, whole) = pair_integral_within_2d(o, sigma, profile, kinks, &radii);
        let values = within.iter().map(|w| (w / whole).clamp(0.0, 1.0)).collect();
        BallProfile { r_max, values }
    }

    fn fraction(&self, radius: f64) -> f64 {
        if radius >= self.r_max {
            return 1.0;
        }
        let x = (radius / self.r_max).sqrt() * (Self::POINTS - 1) as f64;
        let i = (x.floor() as usize).min(Self::POINTS - 2);
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// Sample points inside a unit cell: for each level `0..=depth` the
/// midpoints of the `2^{n·level}` dyadic sub-cells, then their two-point
/// Gauss nodes.
struct NodePattern<const N: usize> {
    depth: u32,
    mid_base: Vec<usize>,
    gauss_base: Vec<usize>,
    rel: Vec<[f64; N]>,
}

impl<const N: usize> NodePattern<N> {
    fn new(depth: u32) -> Self {
        let g = 0.5 / 3f64.sqrt();
        let mut mid_base = Vec::new();
        let mut gauss_base = Vec::new();
        let mut rel = Vec::new();
        for level in 0..=depth {
            let per = 1usize << level;
            mid_base.push(rel.len());
            for flat in 0..per.pow(N as u32) {
                let a = unflatten::<N>(flat, per);
                rel.push(std::array::from_fn(|k| (a[k] as f64 + 0.5) / per as f64));
            }
        }
        for level in 0..=depth {
            let per = 1usize << level;
            gauss_base.push(rel.len());
            for flat in 0..per.pow(N as u32) {
                let a = unflatten::<N>(flat, per);
                for q in 0..(1usize << N) {
                    rel.push(std::array::from_fn(|k| {
                        let t = if q >> k & 1 == 0 { 0.5 - g } else { 0.5 + g };
                        (a[k] as f64 + t) / per as f64
                    }));
                }
            }
        }
        NodePattern {
            depth,
            mid_base,
            gauss_base,
            rel,
        }
    }

    fn flat(level: u32, a: &[i64; N]) -> usize {
        let per = 1i64 << level;
        (0..N).rev().fold(0i64, |acc, k| acc * per + a[k]) as usize
    }

    fn mid(&self, level: u32, a: &[i64; N]) -> u32 {
        (self.mid_base[level as usize] + Self::flat(level, a)) as u32
    }

    fn gauss(&self, level: u32, a: &[i64; N], q: usize) -> u32 {
        (self.gauss_base[level as usize] + (Self::flat(level, a) << N) + q) as u32
    }
}

fn unflatten<const N: usize>(mut flat: usize, per: usize) -> [usize; N] {
    std::array::from_fn(|_| {
        let v = flat % per;
        flat /= per;
        v
    })
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// How touching and near pairs get their total weight.
enum Exact {
    /// `S(r) = r^{-2-a}`: scaled unit-square integrals.
    Power(f64),
    /// Any other planar profile, integrated numerically; holds its kinks.
    Profile(Vec<f64>),
    Midpoint,
}

/// Pair integrals keyed by level and sorted absolute offset.
type PairCache<const N: usize> = HashMap<(u32, [i64; 2]), f64>;

struct Assembler<'a, const N: usize> {
    kernel: &'a KernelSpec<N>,
    p: f64,
    h: f64,
    pattern: NodePattern<N>,
    exact: Exact,
    touching: HashMap<[i64; N], Vec<Entry<N>>>,
    /// Ball profiles of the edge and corner leaf pairs.
    profiles: Vec<BallProfile>,
    gauss: HashMap<[i64; N], Vec<Entry<N>>>,
    /// Per cell and node: `(A(x), R(x))`; empty for the unrestricted kernel.
    local: Vec<Vec<(f64, f64)>>,
}

impl<'a, const N: usize> Assembler<'a, N> {
    fn new(grid: &Grid<N>, kernel: &'a KernelSpec<N>, p: f64, options: QuadratureOptions) -> Result<Self> {
        let h = grid.h().to_f64();
        let pattern = NodePattern::<N>::new(options.diag_depth);
        let exact = match kernel.power_exponent(p) {
            Some(a) if N == 2 && a < 1.0 => Exact::Power(a),
            None if N == 2 && kernel.s() * p < 1.0 => Exact::Profile(kernel.radial_kinks()),
            _ => Exact::Midpoint,
        };
        let mut asm = Assembler {
            kernel,
            p,
            h,
            pattern,
            exact,
            touching: HashMap::new(),
            profiles: Vec::new(),
            gauss: HashMap::new(),
            local: Vec::new(),
        };
        if kernel.needs_distance() && !matches!(asm.exact, Exact::Midpoint) {
            let sigma = h / (1i64 << options.diag_depth) as f64;
            let kinks = match &asm.exact {
                Exact::Profile(k) => k.clone(),
                _ => Vec::new(),
            };
            let radial = |r: f64| kernel.radial(p, r);
            asm.profiles = [[1, 0], [1, 1]]
                .into_iter()
                .map(|o| BallProfile::new(o, sigma, &radial, &kinks))
                .collect();
        }
        let mut khat: PairCache<N> = HashMap::new();
        for flat in 0..3usize.pow(N as u32) {
            let o: [i64; N] = unflatten::<N>(flat, 3).map(|v| v as i64 - 1);
            if o.iter().all(|&v| v == 0) {
                continue;
            }
            let mut entries = Vec::new();
            asm.refine(&o, 0, [0; N], [0; N], &mut khat, &mut entries);
            asm.touching.insert(o, entries);
        }
        let span = 2 * GAUSS_REACH as usize + 1;
        for flat in 0..span.pow(N as u32) {
            let o: [i64; N] = unflatten::<N>(flat, span).map(|v| v as i64 - GAUSS_REACH);
            if o.iter().any(|v| v.abs() >= 2) {
                let mut entries = Vec::new();
                asm.separated(0, &[0; N], &o, &mut khat, &mut entries);
                asm.gauss.insert(o, entries);
            }
        }
        if kernel.needs_distance() {
            let domain = grid.domain();
            let f = kernel.boundary_set();
            asm.local = grid
                .midpoints()
                .par_iter()
                .map(|mid| {
                    asm.pattern
                        .rel
                        .iter()
                        .map(|r| {
                            let x: [f64; N] = std::array::from_fn(|k| mid[k] + (r[k] - 0.5) * h);
                            let d = domain.boundary_dist2_unchecked(&x).sqrt();
                            let d_f = f.map_or(1.0, |f| f.distance(&x));
                            (kernel.amplitude(p, d, d_f), kernel.radius(d))
                        })
                        .collect()
                })
                .collect();
            if asm.local.iter().flatten().any(|&(a, r)| !(a.is_finite() && r > 0.0)) {
                return Err(FracError::OutOfRange("kernel amplitude is not finite on the grid".into()));
            }
        }
        Ok(asm)
    }

    /// Recursive halving of a touching pair; `a`, `b` index the sub-cells of
    /// the x- and y-cell at `level`.
    fn refine(
        &self,
        o: &[i64; N],
        level: u32,
        a: [i64; N],
        b: [i64; N],
        khat: &mut PairCache<N>,
        out: &mut Vec<Entry<N>>,
    ) {
        let per = 1i64 << level;
        let off: [i64; N] = std::array::from_fn(|k| o[k] * per + b[k] - a[k]);
        let sigma = self.h / per as f64;
        let dy = off.map(|v| v as f64 * sigma);
        let touching = off.iter().all(|v| v.abs() <= 1);
        if touching && level < self.pattern.depth {
            for ca in 0..(1usize << N) {
                for cb in 0..(1usize << N) {
                    let a2 = std::array::from_fn(|k| 2 * a[k] + (ca >> k & 1) as i64);
                    let b2 = std::array::from_fn(|k| 2 * b[k] + (cb >> k & 1) as i64);
                    self.refine(o, level + 1, a2, b2, khat, out);
                }
            }
            return;
        }
        if !touching {
            self.separated(level, &a, &off, khat, out);
            return;
        }
        let w = self
            .exact_pair(level, &off, khat)
            .unwrap_or_else(|| sigma.powi(2 * N as i32) * self.kernel.radial(self.p, norm(&dy)));
        let profile = if self.profiles.is_empty() {
            NO_PROFILE
        } else {
            off.iter().filter(|v| **v != 0).count() as u32 - 1
        };
        out.push(Entry {
            node: self.pattern.mid(level, &a),
            dy,
            w,
            profile,
        });
    }

    /// `∫∫ S(|x - y|)` over the sub-cell pair at `level` and offset `off`
    /// when it has an accurate evaluation.
    fn exact_pair(&self, level: u32, off: &[i64; N], khat: &mut PairCache<N>) -> Option<f64> {
        let sigma = self.h / (1i64 << level) as f64;
        let o = [off[0], off[N - 1]];
        let mut key = o.map(i64::abs);
        key.sort_unstable();
        match &self.exact {
            Exact::Power(e) => {
                let unit = *khat.entry((0, key)).or_insert_with(|| unit_pair_integral_2d(o, *e));
                Some(sigma.powf(N as f64 - e) * unit)
            }
            Exact::Profile(kinks) => Some(
                *khat
                    .entry((level, key))
                    .or_insert_with(|| pair_integral_2d(o, sigma, &|r| self.kernel.radial(self.p, r), kinks)),
            ),
            Exact::Midpoint => None,
        }
    }

    /// Two-point Gauss product rule for separated sub-cells `a` (x side) and
    /// `a + off` (y side) at `level`. For a pure power kernel the weights are
    /// rescaled so that they sum to the exact pair integral.
    fn separated(&self, level: u32, a: &[i64; N], off: &[i64; N], khat: &mut PairCache<N>, out: &mut Vec<Entry<N>>) {
        let sigma = self.h / (1i64 << level) as f64;
        let g = 0.5 / 3f64.sqrt();
        let node_off = |q: usize, k: usize| if q >> k & 1 == 0 { 0.5 - g } else { 0.5 + g };
        let start = out.len();
        let base = (0.5 * sigma).powi(2 * N as i32);
        for qx in 0..(1usize << N) {
            for qy in 0..(1usize << N) {
                let dy: [f64; N] = std::array::from_fn(|k| (off[k] as f64 + node_off(qy, k) - node_off(qx, k)) * sigma);
                out.push(Entry {
                    node: self.pattern.gauss(level, a, qx),
                    dy,
                    w: base * self.kernel.radial(self.p, norm(&dy)),
                    profile: NO_PROFILE,
                });
            }
        }
        if let Some(exact) = self.exact_pair(level, off, khat) {
            let approx: f64 = out[start..].iter().map(|x| x.w).sum();
            for x in &mut out[start..] {
                x.w *= exact / approx;
            }
        }
    }

    fn apply(&self, cell: usize, entries: &[Entry<N>]) -> f64 {
        if self.local.is_empty() {
            return entries.iter().map(|e| e.w).sum();
        }
        let local = &self.local[cell];
        entries
            .iter()
            .map(|e| {
                let (amp, rad) = local[e.node as usize];
                if e.profile != NO_PROFILE {
                    amp * e.w * self.profiles[e.profile as usize].fraction(rad)
                } else if norm(&e.dy) < rad {
                    amp * e.w
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// `∫_{c_i} ∫_{c_j} μ(x, y) dy dx` for cells at integer offset `o = j - i`.
    fn pair(&self, cell: usize, o: &[i64; N]) -> f64 {
        let linf = o.iter().map(|v| v.abs()).max().unwrap_or(0);
        if linf <= 1 {
            return self.apply(cell, &self.touching[o]);
        }
        if linf <= GAUSS_REACH {
            return self.apply(cell, &self.gauss[o]);
        }
        let dy = o.map(|v| v as f64 * self.h);
        let r = norm(&dy);
        let w = self.h.powi(2 * N as i32) * self.kernel.radial(self.p, r);
        if self.local.is_empty() {
            return w;
        }
        let (amp, rad) = self.local[cell][0];
        let margin = 1.5 * self.h * (N as f64).sqrt();
        if r >= rad + margin {
            return 0.0;
        }
        if rad.is_infinite() {
            return amp * w;
        }
        // The ball indicator is sampled on both cells split once, so the
        // weight is monotone in the radius.
        let sub = (0.5 * self.h).powi(2 * N as i32);
        let mut total = 0.0;
        for ca in 0..(1usize << N) {
            let a: [i64; N] = std::array::from_fn(|k| (ca >> k & 1) as i64);
            let (amp, rad) = self.local[cell][self.pattern.mid(1, &a) as usize];
            for cb in 0..(1usize << N) {
                let dy: [f64; N] =
                    std::array::from_fn(|k| (o[k] as f64 + 0.5 * ((cb >> k & 1) as f64 - a[k] as f64)) * self.h);
                let r = norm(&dy);
                if r < rad {
                    total += amp * sub * self.kernel.radial(self.p, r);
                }
            }
        }
        total
    }

    fn reach(&self, cell: usize) -> f64 {
        if self.local.is_empty() {
            f64::INFINITY
        } else {
            self.local[cell].iter().map(|&(_, r)| r).fold(0.0, f64::max)
        }
    }
}

impl<const N: usize> GagliardoForm<N> {
    pub fn assemble(grid: &Arc<Grid<N>>, kernel: &KernelSpec<N>, p: f64, options: QuadratureOptions) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(FracError::OutOfRange(format!("p = {p} must exceed 1")));
        }
        kernel.validate(grid.domain())?;
        let pairs = match kernel {
            KernelSpec::Classical { s } if N == 2 && s * p < 1.0 => stationary_pairs(grid, s * p),
            _ => general_pairs(grid, kernel, p, options)?,
        };
        Ok(GagliardoForm {
            grid: Arc::clone(grid),
            p,
            kernel: kernel.name(),
            options,
            pairs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid<N>> {
        &self.grid
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kernel_name(&self) -> &str {
        &self.kernel
    }

    pub fn options(&self) -> QuadratureOptions {
        self.options
    }

    /// Symmetric pair weights `(i, j, W_ij)` with `i < j`, sorted.
    pub fn pairs(&self) -> &[(u32, u32, f64)] {
        &self.pairs
    }

    /// Restricts the form to a region. Pair weights are scaled by
    /// `Σ_t f_i^t f_j^t` (or `f_i^t f_j^t` for one node), where `f_i^t` is
    /// the fraction of cell `i` inside `U_t`.
    pub fn restrict(&self, region: Region<'_, N>) -> Result<Self> {
        let (cg, only) = match region {
            Region::Whole => return Ok(self.clone()),
            Region::Localized(cg) => (cg, None),
            Region::Node(cg, t) => {
                if t >= cg.nodes() {
                    return Err(FracError::UnknownNode(t));
                }
                (cg, Some(t))
            }
        };
        if !(Arc::ptr_eq(cg.grid(), &self.grid) || **cg.grid() == *self.grid) {
            return Err(FracError::IncompatibleGrid("covering grid differs from the form's grid".into()));
        }
        let mut per_cell: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.grid.len()];
        let nodes: Vec<usize> = only.map_or_else(|| (0..cg.nodes()).collect(), |t| vec![t]);
        for t in nodes {
            for &(c, f) in cg.u_fractions(t) {
                per_cell[c as usize].push((t, f));
            }
        }
        let overlap = |a: &[(usize, f64)], b: &[(usize, f64)]| -> f64 {
            let (mut i, mut j, mut acc) = (0, 0, 0.0);
            while i < a.len() && j < b.len() {
                match a[i].0.cmp(&b[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        acc += a[i].1 * b[j].1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            acc
        };
        let pairs = self
            .pairs
            .par_iter()
            .filter_map(|&(i, j, w)| {
                let f = overlap(&per_cell[i as usize], &per_cell[j as usize]);
                (f > 0.0).then_some((i, j, w * f))
            })
            .collect();
        Ok(GagliardoForm {
            pairs,
            ..self.clone()
        })
    }

    /// `Σ_{i<j} W_ij |u_i - u_j|^p`, without the `1/p` root.
    pub fn evaluate<T: Real>(&self, u: &Field<T, N>) -> Result<T> {
        if !(Arc::ptr_eq(u.grid(), &self.grid) || **u.grid() == *self.grid) {
            return Err(FracError::IncompatibleGrid("field lives on a different grid".into()));
        }
        let v = u.values();
        let p = T::lit(self.p);
        let terms: Vec<T> = self
            .pairs
            .par_iter()
            .map(|&(i, j, w)| T::lit(w) * (v[i as usize] - v[j as usize]).abs().powf(p))
            .collect();
        Ok(pairwise_sum(&terms))
    }
}

/// `∫∫ |u(x) - u(y)|^p μ` over a region; the `1/p` root is not taken.
pub fn gagliardo<T: Real, const N: usize>(
    u: &Field<T, N>,
    kernel: &KernelSpec<N>,
    p: f64,
    region: Region<'_, N>,
    options: QuadratureOptions,
) -> Result<T> {
    GagliardoForm::assemble(u.grid(), kernel, p, options)?.restrict(region)?.evaluate(u)
}

/// Translation-invariant kernel `|x - y|^{-2-a}` with `a < 1`: every pair
/// weight is `2 h^{2-a} K(o)` with `K` the exact unit-square pair integral.
fn stationary_pairs<const N: usize>(grid: &Grid<N>, a: f64) -> Vec<(u32, u32, f64)> {
    let idx = grid.indices();
    let extent: i64 = (0..N)
        .map(|k| {
            let lo = idx.iter().map(|c| c[k]).min().unwrap_or(0);
            let hi = idx.iter().map(|c| c[k]).max().unwrap_or(0);
            hi - lo
        })
        .max()
        .unwrap_or(0);
    let e = extent as usize + 1;
    let h = grid.h().to_f64();
    let scale = 2.0 * h.powf(N as f64 - a);
    let table: Vec<f64> = (0..e * e)
        .into_par_iter()
        .map(|flat| {
            let (u, v) = ((flat / e) as i64, (flat % e) as i64);
            if v > u || u == 0 {
                0.0
            } else {
                scale * unit_pair_integral_2d([u, v], a)
            }
        })
        .collect();
    let lookup = |o0: i64, o1: i64| {
        let (u, v) = (o0.abs().max(o1.abs()) as usize, o0.abs().min(o1.abs()) as usize);
        table[u * e + v]
    };
    let n = idx.len();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).map(move |j| {
                let o0 = idx[j][0] - idx[i][0];
                let o1 = idx[j][N - 1] - idx[i][N - 1];
                (i as u32, j as u32, lookup(o0, o1))
            })
        })
        .collect()
}

fn general_pairs<const N: usize>(
    grid: &Arc<Grid<N>>,
    kernel: &KernelSpec<N>,
    p: f64,
    options: QuadratureOptions,
) -> Result<Vec<(u32, u32, f64)>> {
    let asm = Assembler::new(grid, kernel, p, options)?;
    let idx = grid.indices();
    let h = asm.h;
    let n = idx.len();
    let mut directed: Vec<(u32, u32, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let reach = asm.reach(i);
            let cells: Vec<usize> = if reach.is_finite() {
                let m = (reach / h).ceil() as i64 + 1;
                let span = (2 * m + 1) as usize;
                (0..span.pow(N as u32))
                    .filter_map(|flat| {
                        let o = unflatten::<N>(flat, span).map(|v| v as i64 - m);
                        let gap2: f64 = o.iter().map(|&v| ((v.abs() - 1).max(0) as f64 * h).powi(2)).sum();
                        if gap2 >= reach * reach {
                            return None;
                        }
                        let target: [i64; N] = std::array::from_fn(|k| idx[i][k] + o[k]);
                        grid.find(&target)
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            let asm = &asm;
            cells.into_iter().filter(move |&j| j != i).filter_map(move |j| {
                let o: [i64; N] = std::array::from_fn(|k| idx[j][k] - idx[i][k]);
                let w = asm.pair(i, &o);
                (w > 0.0).then_some((i.min(j) as u32, i.max(j) as u32, w))
            })
        })
        .collect();
    directed.par_sort_unstable_by_key(|&(i, j, _)| (i, j));
    let mut pairs: Vec<(u32, u32, f64)> = Vec::with_capacity(directed.len());
    for (i, j, w) in directed {
        match pairs.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += w,
            _ => pairs.push((i, j, w)),
        }
    }
    Ok(pairs)
}
