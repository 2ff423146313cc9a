//! Dyadic Whitney decompositions of rectilinear domains.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{FracError, Result};
use crate::geometry::{intersecting_pairs, max_open_depth, Aabb, BoxIndex, Cube, FBox, RectilinearDomain};
use crate::report::{all_pass, PropertyCheck};
use crate::scalar::{Dyadic, ExactScalar};

/// A closed Whitney cube. `generation` is `g` with `side = cell_size * 2^-g`;
/// cubes coarser than a lattice cell carry negative generations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WhitneyCube<const N: usize> {
    pub cube: Cube<Dyadic, N>,
    pub generation: i32,
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition<const N: usize> {
    domain: Arc<RectilinearDomain<N>>,
    cubes: Vec<WhitneyCube<N>>,
    neighbors: Vec<Vec<usize>>,
    max_generation: i32,
    uncovered: Dyadic,
}

impl<const N: usize> WhitneyDecomposition<N> {
    /// Builds a decomposition from an explicit cube list. No Whitney property
    /// is enforced here; use [`verify_whitney`] for that.
    pub fn from_cubes(
        domain: Arc<RectilinearDomain<N>>,
        cubes: Vec<WhitneyCube<N>>,
        max_generation: i32,
    ) -> Self {
        let covered = cubes.iter().fold(Dyadic::ZERO, |a, c| a + c.cube.volume());
        let uncovered = domain.measure() - covered;
        let neighbors = neighbor_graph(&cubes.iter().map(|c| c.cube.to_aabb()).collect::<Vec<_>>());
        WhitneyDecomposition {
            domain,
            cubes,
            neighbors,
            max_generation,
            uncovered,
        }
    }

    pub fn domain(&self) -> &Arc<RectilinearDomain<N>> {
        &self.domain
    }

    pub fn cubes(&self) -> &[WhitneyCube<N>] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn cube(&self, t: usize) -> &Cube<Dyadic, N> {
        &self.cubes[t].cube
    }

    pub fn neighbors(&self, t: usize) -> &[usize] {
        &self.neighbors[t]
    }

    pub fn neighbor_graph(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    pub fn levels(&self) -> Vec<i32> {
        self.cubes.iter().map(|c| c.generation).collect()
    }

    pub fn max_generation(&self) -> i32 {
        self.max_generation
    }

    /// Measure of the boundary collar left uncovered by the truncation.
    pub fn uncovered_measure(&self) -> Dyadic {
        self.uncovered
    }

    /// Upper bound on the collar measure:
    /// `cell_size * 2^-g * perimeter * 4 sqrt(n)`.
    pub fn collar_bound(&self) -> f64 {
        let perimeter: f64 = self
            .domain
            .boundary_faces()
            .iter()
            .map(|f| {
                (0..N)
                    .filter(|&k| f.lo[k] < f.hi[k])
                    .map(|k| f.extent(k).to_f64())
                    .product::<f64>()
            })
            .sum();
        self.domain.cell_size().to_f64()
            * 2f64.powi(-self.max_generation)
            * perimeter
            * 4.0
            * (N as f64).sqrt()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let items: Vec<CubeRecord> = self
            .cubes
            .iter()
            .map(|c| CubeRecord {
                corner: c.cube.corner.iter().map(|v| v.to_f64()).collect(),
                side: c.cube.side.to_f64(),
                generation: c.generation,
            })
            .collect();
        serde_json::to_value(items).expect("plain records serialize")
    }
}

#[derive(Serialize)]
struct CubeRecord {
    corner: Vec<f64>,
    side: f64,
    generation: i32,
}

/// Top-down dyadic Whitney decomposition truncated at `max_generation`.
///
/// Aligned blocks that are not entirely made of domain cells are split.
/// A block inside the domain is accepted once `diam <= dist(Q, boundary)`;
/// otherwise it is split, or dropped into the collar past `max_generation`.
pub fn whitney_decompose<const N: usize>(
    domain: &Arc<RectilinearDomain<N>>,
    max_generation: i32,
) -> Result<WhitneyDecomposition<N>> {
    if max_generation < 0 {
        return Err(FracError::OutOfRange(format!(
            "max_generation must be nonnegative, got {max_generation}"
        )));
    }
    if domain.cells().is_empty() {
        return Err(FracError::InvalidDomain("empty domain".into()));
    }
    let cells: Vec<[i64; N]> = domain.cells().iter().copied().collect();
    let mut lo = [i64::MAX; N];
    let mut hi = [i64::MIN; N];
    for c in &cells {
        for k in 0..N {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k] + 1);
        }
    }
    let extent = (0..N).map(|k| hi[k] - lo[k]).max().unwrap_or(1) as u64;
    let top = extent.next_power_of_two().trailing_zeros() as i32;

    let mut builder = Builder {
        domain,
        max_generation,
        cubes: Vec::new(),
        uncovered: Dyadic::ZERO,
    };
    let size = 1i64 << top;
    let mut blocks: std::collections::BTreeMap<[i64; N], Vec<[i64; N]>> = Default::default();
    for c in &cells {
        let key: [i64; N] = std::array::from_fn(|k| c[k].div_euclid(size) * size);
        blocks.entry(key).or_default().push(*c);
    }
    for (corner, members) in blocks {
        builder.lattice_block(corner, top, members);
    }
    let Builder { cubes, uncovered, .. } = builder;
    let neighbors = neighbor_graph(&cubes.iter().map(|c| c.cube.to_aabb()).collect::<Vec<_>>());
    Ok(WhitneyDecomposition {
        domain: Arc::clone(domain),
        cubes,
        neighbors,
        max_generation,
        uncovered,
    })
}

struct Builder<'a, const N: usize> {
    domain: &'a RectilinearDomain<N>,
    max_generation: i32,
    cubes: Vec<WhitneyCube<N>>,
    uncovered: Dyadic,
}

impl<const N: usize> Builder<'_, N> {
    /// Block of `2^level` lattice cells per axis with the given member cells.
    fn lattice_block(&mut self, corner: [i64; N], level: i32, members: Vec<[i64; N]>) {
        let cs = self.domain.cell_size();
        let full = 1usize.checked_shl((level as u32) * N as u32).unwrap_or(usize::MAX);
        if members.len() == full {
            let cube = Cube::new(corner.map(|c| Dyadic::from_i64(c) * cs), cs.shl(level));
            self.contained(cube, -level);
            return;
        }
        debug_assert!(level > 0);
        let half = 1i64 << (level - 1);
        let mut parts: Vec<Vec<[i64; N]>> = vec![Vec::new(); 1 << N];
        for c in members {
            let code = (0..N).fold(0usize, |acc, k| acc | (((c[k] - corner[k] >= half) as usize) << k));
            parts[code].push(c);
        }
        for (code, part) in parts.into_iter().enumerate() {
            if part.is_empty() {
                continue;
            }
            let child: [i64; N] = std::array::from_fn(|k| corner[k] + if code >> k & 1 == 1 { half } else { 0 });
            self.lattice_block(child, level - 1, part);
        }
    }

    /// Closed cube inside the closed domain.
    fn contained(&mut self, cube: Cube<Dyadic, N>, generation: i32) {
        let gap2 = self.domain.box_boundary_gap2(&cube.to_aabb());
        if cube.diam2() <= gap2 {
            self.cubes.push(WhitneyCube { cube, generation });
            return;
        }
        if generation >= self.max_generation {
            self.uncovered = self.uncovered + cube.volume();
            return;
        }
        let half = cube.side.halve();
        for code in 0..1usize << N {
            let corner: [Dyadic; N] =
                std::array::from_fn(|k| cube.corner[k] + if code >> k & 1 == 1 { half } else { Dyadic::ZERO });
            self.contained(Cube::new(corner, half), generation + 1);
        }
    }
}

fn neighbor_graph<const N: usize>(boxes: &[Aabb<Dyadic, N>]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); boxes.len()];
    for (i, j) in intersecting_pairs(boxes, false) {
        adj[i].push(j);
        adj[j].push(i);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

/// The open cubes `Q*_t = (9/8) Q_t`, concentric with `Q_t`.
pub fn expand_cubes<const N: usize>(dec: &WhitneyDecomposition<N>) -> Vec<Cube<Dyadic, N>> {
    let factor = Dyadic::new(9, -3);
    dec.cubes.iter().map(|c| c.cube.dilate(factor)).collect()
}

/// Minimum and maximum of `sum_t chi_{Q*_t}(x)` over the centres of a
/// `resolution^n` grid on the bounding box, restricted to points in the
/// union of the closed cubes `Q_t`.
pub fn expanded_overlap_probe<const N: usize>(dec: &WhitneyDecomposition<N>, resolution: usize) -> (usize, usize) {
    let expanded: Vec<FBox<N>> = expand_cubes(dec).iter().map(|c| c.to_aabb().to_f64()).collect();
    let closed: Vec<FBox<N>> = dec.cubes.iter().map(|c| c.cube.to_aabb().to_f64()).collect();
    let ex_index = BoxIndex::new(&expanded);
    let cl_index = BoxIndex::new(&closed);
    let bb = dec.domain.bounding_box().to_f64();
    let mut min = usize::MAX;
    let mut max = 0;
    let total = resolution.pow(N as u32);
    for flat in 0..total {
        let mut rem = flat;
        let x: [f64; N] = std::array::from_fn(|k| {
            let i = rem % resolution;
            rem /= resolution;
            bb.lo[k] + (i as f64 + 0.5) / resolution as f64 * (bb.hi[k] - bb.lo[k])
        });
        let covered = cl_index
            .candidates(&x)
            .iter()
            .any(|&i| closed[i as usize].contains_closed(&x));
        if !covered {
            continue;
        }
        let count = ex_index
            .candidates(&x)
            .iter()
            .filter(|&&i| expanded[i as usize].contains_open(&x))
            .count();
        min = min.min(count);
        max = max.max(count);
    }
    if max == 0 {
        min = 0;
    }
    (min, max)
}

#[derive(Clone, Debug, Serialize)]
pub struct WhitneyReport {
    pub cube_count: usize,
    pub max_generation: i32,
    pub disjoint: PropertyCheck,
    pub volume: PropertyCheck,
    pub distance_bracket: PropertyCheck,
    pub neighbor_ratio: PropertyCheck,
    pub neighbor_count: PropertyCheck,
    pub collar: PropertyCheck,
    /// `min_t dist(Q_t, boundary) / diam(Q_t)`.
    pub min_dist_ratio: f64,
    pub max_dist_ratio: f64,
    pub max_neighbor_side_ratio: f64,
    pub max_neighbor_count: usize,
    pub max_expanded_overlap: usize,
    pub uncovered_measure: f64,
    pub collar_bound: f64,
    pub pass: bool,
}

/// Exact check of the Whitney properties and the collar bound.
pub fn verify_whitney<const N: usize>(dec: &WhitneyDecomposition<N>) -> WhitneyReport {
    let domain = &dec.domain;
    let boxes: Vec<Aabb<Dyadic, N>> = dec.cubes.iter().map(|c| c.cube.to_aabb()).collect();

    let mut overlapping = Vec::new();
    for (i, nb) in dec.neighbors.iter().enumerate() {
        if nb.iter().any(|&j| boxes[i].overlaps_open(&boxes[j])) {
            overlapping.push(i);
        }
    }
    let disjoint = PropertyCheck::new("disjoint_interiors", overlapping, "closed cubes meet only on their boundaries");

    let outside: Vec<usize> = (0..boxes.len()).filter(|&i| !inside_closure(domain, &boxes[i])).collect();
    let covered = boxes.iter().fold(Dyadic::ZERO, |a, b| a + b.volume());
    let volume_ok = outside.is_empty() && covered + dec.uncovered == domain.measure();
    let volume = PropertyCheck {
        name: "volume".into(),
        pass: volume_ok,
        detail: format!(
            "sum |Q_t| = {covered}, uncovered = {}, |domain| = {}",
            dec.uncovered,
            domain.measure()
        ),
        offenders: outside,
    };

    let sixteen = Dyadic::from_i64(16);
    let mut bracket = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for (i, c) in dec.cubes.iter().enumerate() {
        let gap2 = domain.box_boundary_gap2(&boxes[i]);
        let diam2 = c.cube.diam2();
        if !(diam2 <= gap2 && gap2 <= sixteen * diam2) {
            bracket.push(i);
        }
        let r = (gap2.to_f64() / diam2.to_f64()).sqrt();
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    let distance_bracket = PropertyCheck::new(
        "distance_bracket",
        bracket,
        format!("dist/diam in [{min_ratio:.6}, {max_ratio:.6}], required [1, 4]"),
    );

    let four = Dyadic::from_i64(4);
    let mut ratio_bad = Vec::new();
    let mut count_bad = Vec::new();
    let mut max_side_ratio: f64 = 1.0;
    let bound = 12usize.pow(N as u32);
    let mut max_count = 0;
    for (i, nb) in dec.neighbors.iter().enumerate() {
        let si = dec.cubes[i].cube.side;
        max_count = max_count.max(nb.len());
        if nb.len() > bound {
            count_bad.push(i);
        }
        for &j in nb {
            let sj = dec.cubes[j].cube.side;
            if si > four * sj {
                ratio_bad.push(i);
            }
            max_side_ratio = max_side_ratio.max(si.to_f64() / sj.to_f64());
        }
    }
    ratio_bad.sort_unstable();
    ratio_bad.dedup();
    let neighbor_ratio = PropertyCheck::new(
        "neighbor_ratio",
        ratio_bad,
        format!("max side ratio of touching cubes {max_side_ratio}, required <= 4"),
    );
    let neighbor_count = PropertyCheck::new(
        "neighbor_count",
        count_bad,
        format!("max neighbors {max_count}, required <= {bound}"),
    );

    let collar_bound = dec.collar_bound();
    let uncovered = dec.uncovered.to_f64();
    let collar = PropertyCheck::from_bool(
        "collar",
        uncovered < collar_bound || dec.uncovered.is_zero(),
        format!("uncovered {uncovered} vs bound {collar_bound}"),
    );

    let expanded: Vec<Aabb<Dyadic, N>> = expand_cubes(dec).iter().map(|c| c.to_aabb()).collect();
    let max_expanded_overlap = if expanded.len() <= 20_000 { max_open_depth(&expanded) } else { 0 };

    let pass = all_pass(&[&disjoint, &volume, &distance_bracket, &neighbor_ratio, &neighbor_count, &collar]);
    WhitneyReport {
        cube_count: dec.cubes.len(),
        max_generation: dec.max_generation,
        disjoint,
        volume,
        distance_bracket,
        neighbor_ratio,
        neighbor_count,
        collar,
        min_dist_ratio: min_ratio,
        max_dist_ratio: max_ratio,
        max_neighbor_side_ratio: max_side_ratio,
        max_neighbor_count: max_count,
        max_expanded_overlap,
        uncovered_measure: uncovered,
        collar_bound,
        pass,
    }
}

/// Closed box inside the closed domain: every lattice cell it meets with
/// positive volume is present.
fn inside_closure<const N: usize>(domain: &RectilinearDomain<N>, b: &Aabb<Dyadic, N>) -> bool {
    let cs = domain.cell_size();
    let mut lo = [0i64; N];
    let mut hi = [0i64; N];
    for k in 0..N {
        let l = b.lo[k].div_pow2(cs).map(|v| v.floor()).unwrap_or(0);
        let h_exact = b.hi[k].div_pow2(cs).expect("cell size is a power of two");
        let mut h = h_exact.floor();
        if !h_exact.is_integer() {
            h += 1;
        }
        lo[k] = l as i64;
        hi[k] = (h as i64).max(lo[k] + 1);
    }
    let counts: [i64; N] = std::array::from_fn(|k| hi[k] - lo[k]);
    let total: i64 = counts.iter().product();
    (0..total).all(|mut code| {
        let idx: [i64; N] = std::array::from_fn(|k| {
            let v = lo[k] + code % counts[k];
            code /= counts[k];
            v
        });
        domain.has_cell(&idx)
    })
}
