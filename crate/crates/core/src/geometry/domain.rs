use std::collections::{BTreeSet, VecDeque};

use num_traits::Zero;

use super::aabb::{Aabb, FBox};
use crate::error::{FracError, Result};
use crate::scalar::{Dyadic, ExactScalar, Real};

/// Bounded open set: the interior of a finite union of closed lattice cells
/// of side `cell_size`, minus optional slits (interior faces declared to be
/// boundary).
#[derive(Clone, Debug)]
pub struct RectilinearDomain<const N: usize> {
    name: String,
    cell_size: Dyadic,
    cells: BTreeSet<[i64; N]>,
    slits: Vec<Aabb<Dyadic, N>>,
    faces: Vec<Aabb<Dyadic, N>>,
    ffaces: Vec<FBox<N>>,
}

impl<const N: usize> RectilinearDomain<N> {
    /// Validated domain from explicit lattice cells.
    pub fn from_cells(
        cell_size: Dyadic,
        cells: impl IntoIterator<Item = [i64; N]>,
        slits: Vec<Aabb<Dyadic, N>>,
    ) -> Result<Self> {
        if N < 1 {
            return Err(FracError::InvalidDomain("dimension must be positive".into()));
        }
        if !cell_size.is_positive() {
            return Err(FracError::InvalidDomain("cell size must be positive".into()));
        }
        let cells: BTreeSet<[i64; N]> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(FracError::InvalidDomain("empty cell set".into()));
        }
        let mut dom = RectilinearDomain {
            name: "cells".into(),
            cell_size,
            cells,
            slits,
            faces: Vec::new(),
            ffaces: Vec::new(),
        };
        dom.validate_slits()?;
        dom.check_connected()?;
        dom.faces = merge_faces(dom.raw_boundary_faces());
        dom.ffaces = dom.faces.iter().map(|f| f.to_f64()).collect();
        Ok(dom)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cell_size(&self) -> Dyadic {
        self.cell_size
    }

    pub fn cells(&self) -> &BTreeSet<[i64; N]> {
        &self.cells
    }

    pub fn has_cell(&self, idx: &[i64; N]) -> bool {
        self.cells.contains(idx)
    }

    pub fn slits(&self) -> &[Aabb<Dyadic, N>] {
        &self.slits
    }

    /// Merged boundary faces (closed, codimension one), slits included.
    pub fn boundary_faces(&self) -> &[Aabb<Dyadic, N>] {
        &self.faces
    }

    pub fn cell_box(&self, idx: &[i64; N]) -> Aabb<Dyadic, N> {
        let lo = idx.map(|i| Dyadic::from_i64(i) * self.cell_size);
        Aabb::new(lo, lo.map(|v| v + self.cell_size))
    }

    /// `|Omega| = cell_size^n * #cells`.
    pub fn measure(&self) -> Dyadic {
        let cell_vol = (0..N).fold(Dyadic::ONE, |a, _| a * self.cell_size);
        cell_vol * Dyadic::from_i64(self.cells.len() as i64)
    }

    pub fn bounding_box(&self) -> Aabb<Dyadic, N> {
        let mut lo = [i64::MAX; N];
        let mut hi = [i64::MIN; N];
        for c in &self.cells {
            for k in 0..N {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k] + 1);
            }
        }
        Aabb::new(
            lo.map(|i| Dyadic::from_i64(i) * self.cell_size),
            hi.map(|i| Dyadic::from_i64(i) * self.cell_size),
        )
    }

    /// Same cell complex with the cell size multiplied by `factor`.
    pub fn scaled(&self, factor: Dyadic) -> Result<Self> {
        let slits = self.slits.iter().map(|s| s.map(|v| v * factor)).collect();
        Ok(Self::from_cells(self.cell_size * factor, self.cells.iter().copied(), slits)?
            .with_name(format!("{}x{}", self.name, factor)))
    }

    fn validate_slits(&self) -> Result<()> {
        for s in &self.slits {
            let flat: Vec<usize> = (0..N).filter(|&k| s.lo[k] == s.hi[k]).collect();
            if flat.len() != 1 || s.dimension() + 1 != N {
                return Err(FracError::InvalidDomain(format!("slit {s:?} is not a codimension-one face")));
            }
            for f in self.unit_faces_of(s)? {
                let (axis, below) = f;
                let mut above = below;
                above[axis] += 1;
                if !self.has_cell(&below) || !self.has_cell(&above) {
                    return Err(FracError::InvalidDomain(format!(
                        "slit {s:?} does not lie between two domain cells"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Unit lattice faces covered by a slit, as (normal axis, lower cell index).
    fn unit_faces_of(&self, s: &Aabb<Dyadic, N>) -> Result<Vec<(usize, [i64; N])>> {
        let to_lattice = |v: Dyadic| -> Result<i64> {
            let q = v.div_pow2(self.cell_size).or_else(|| {
                // general dyadic cell size: exact only when the quotient is integral
                let r = v.to_rational() / self.cell_size.to_rational();
                r.is_integer().then(|| Dyadic::from_i64(r.to_integer() as i64))
            });
            match q {
                Some(q) if q.is_integer() => Ok(q.floor() as i64),
                _ => Err(FracError::InvalidDomain(format!("slit coordinate {v} not on the cell lattice"))),
            }
        };
        let axis = (0..N).find(|&k| s.lo[k] == s.hi[k]).unwrap_or(0);
        let lo: Vec<i64> = s.lo.iter().map(|&v| to_lattice(v)).collect::<Result<_>>()?;
        let hi: Vec<i64> = s.hi.iter().map(|&v| to_lattice(v)).collect::<Result<_>>()?;
        let mut out = Vec::new();
        let mut cur: [i64; N] = std::array::from_fn(|k| lo[k]);
        cur[axis] = lo[axis] - 1;
        loop {
            out.push((axis, cur));
            let mut k = 0;
            loop {
                if k == N {
                    return Ok(out);
                }
                if k != axis && cur[k] + 1 < hi[k] {
                    cur[k] += 1;
                    break;
                }
                if k != axis {
                    cur[k] = lo[k];
                }
                k += 1;
            }
        }
    }

    fn face_blocked(&self, axis: usize, below: &[i64; N]) -> bool {
        self.slits.iter().any(|s| {
            s.lo[axis] == s.hi[axis]
                && self
                    .unit_faces_of(s)
                    .map(|fs| fs.iter().any(|(a, c)| *a == axis && c == below))
                    .unwrap_or(false)
        })
    }

    fn check_connected(&self) -> Result<()> {
        let start = *self.cells.iter().next().expect("nonempty");
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for axis in 0..N {
                for step in [-1i64, 1] {
                    let mut nb = c;
                    nb[axis] += step;
                    if !self.cells.contains(&nb) || seen.contains(&nb) {
                        continue;
                    }
                    let below = if step > 0 { c } else { nb };
                    if self.face_blocked(axis, &below) {
                        continue;
                    }
                    seen.insert(nb);
                    queue.push_back(nb);
                }
            }
        }
        if seen.len() != self.cells.len() {
            return Err(FracError::InvalidDomain(format!(
                "cell set is disconnected ({} of {} cells reachable)",
                seen.len(),
                self.cells.len()
            )));
        }
        Ok(())
    }

    fn raw_boundary_faces(&self) -> Vec<Aabb<Dyadic, N>> {
        let mut faces = Vec::new();
        for c in &self.cells {
            let b = self.cell_box(c);
            for axis in 0..N {
                for step in [-1i64, 1] {
                    let mut nb = *c;
                    nb[axis] += step;
                    if self.cells.contains(&nb) {
                        continue;
                    }
                    let mut f = b;
                    if step < 0 {
                        f.hi[axis] = f.lo[axis];
                    } else {
                        f.lo[axis] = f.hi[axis];
                    }
                    faces.push(f);
                }
            }
        }
        faces.extend(self.slits.iter().copied());
        faces
    }

    /// Closure membership, exact on the cell lattice.
    fn in_closure<T: Real>(&self, x: &[T; N]) -> bool {
        let cs = self.cell_size.to_f64();
        let mut choices: [[i64; 2]; N] = [[0; 2]; N];
        let mut counts = [1usize; N];
        for k in 0..N {
            let v = x[k].as_f64() / cs;
            if !v.is_finite() {
                return false;
            }
            let f = v.floor();
            choices[k][0] = f as i64;
            if f == v {
                choices[k][1] = f as i64 - 1;
                counts[k] = 2;
            }
        }
        let total: usize = counts.iter().product();
        (0..total).any(|mut code| {
            let idx: [i64; N] = std::array::from_fn(|k| {
                let pick = code % counts[k];
                code /= counts[k];
                choices[k][pick]
            });
            self.cells.contains(&idx)
        })
    }

    /// Squared distance to the nearest boundary face, without a membership check.
    pub fn boundary_dist2_unchecked<T: Real>(&self, x: &[T; N]) -> T {
        self.ffaces
            .iter()
            .map(|f| f.dist2_point(x))
            .fold(T::infinity(), T::min)
    }

    pub fn contains<T: Real>(&self, x: &[T; N]) -> bool {
        self.in_closure(x) && self.boundary_dist2_unchecked(x) > T::zero()
    }

    /// Euclidean distance `d(x)` from `x` to the boundary.
    pub fn boundary_distance<T: Real>(&self, x: &[T; N]) -> Result<T> {
        if !self.in_closure(x) {
            return Err(FracError::PointOutsideDomain(x.iter().map(|v| v.as_f64()).collect()));
        }
        let d2 = self.boundary_dist2_unchecked(x);
        if d2 <= T::zero() {
            return Err(FracError::PointOutsideDomain(x.iter().map(|v| v.as_f64()).collect()));
        }
        Ok(d2.sqrt())
    }

    /// Exact squared distance from a dyadic point to the boundary.
    pub fn boundary_dist2_exact(&self, x: &[Dyadic; N]) -> Dyadic {
        self.faces
            .iter()
            .map(|f| f.dist2_point(x))
            .min()
            .unwrap_or(Dyadic::ZERO)
    }

    /// Exact squared distance between a closed box and the boundary.
    pub fn box_boundary_gap2(&self, b: &Aabb<Dyadic, N>) -> Dyadic {
        self.faces.iter().map(|f| f.gap2(b)).min().unwrap_or(Dyadic::ZERO)
    }

    /// Exact test that a closed box lies in the closure of the domain and
    /// its interior avoids the boundary. Cube corners must be lattice aligned
    /// for the cell count to be exact; finer boxes are handled via the
    /// containing cells.
    pub fn box_inside(&self, b: &Aabb<Dyadic, N>) -> bool {
        let center = b.center();
        let cf = center.map(|v| v.to_f64());
        self.in_closure(&cf) && self.box_boundary_gap2(b) > Dyadic::zero()
    }
}

fn merge_faces<const N: usize>(mut faces: Vec<Aabb<Dyadic, N>>) -> Vec<Aabb<Dyadic, N>> {
    faces.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.hi.cmp(&b.hi)));
    faces.dedup();
    loop {
        let mut merged = false;
        let mut i = 0;
        while i < faces.len() {
            let mut j = i + 1;
            while j < faces.len() {
                if let Some(m) = try_merge(&faces[i], &faces[j]) {
                    faces[i] = m;
                    faces.swap_remove(j);
                    merged = true;
                } else {
                    j += 1;
                }
            }
            i += 1;
        }
        if !merged {
            break;
        }
    }
    faces.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.hi.cmp(&b.hi)));
    faces
}

fn try_merge<const N: usize>(a: &Aabb<Dyadic, N>, b: &Aabb<Dyadic, N>) -> Option<Aabb<Dyadic, N>> {
    let mut free = None;
    for k in 0..N {
        if a.lo[k] == b.lo[k] && a.hi[k] == b.hi[k] {
            continue;
        }
        if free.is_some() {
            return None;
        }
        free = Some(k);
    }
    let k = free?;
    if a.lo[k] == a.hi[k] || b.lo[k] == b.hi[k] {
        return None;
    }
    if a.hi[k] == b.lo[k] || b.hi[k] == a.lo[k] {
        let mut m = *a;
        m.lo[k] = a.lo[k].min(b.lo[k]);
        m.hi[k] = a.hi[k].max(b.hi[k]);
        Some(m)
    } else {
        None
    }
}

/// Lattice-aligned builtin families in the plane.
impl RectilinearDomain<2> {
    /// Square `[0, L]^2` as a single cell.
    pub fn square(side: Dyadic) -> Result<Self> {
        Ok(Self::from_cells(side, [[0, 0]], vec![])?.with_name("square"))
    }

    /// Three unit cells `[0,1]^2`, `[1,2]x[0,1]`, `[0,1]x[1,2]`.
    pub fn l_shape() -> Result<Self> {
        Ok(Self::from_cells(Dyadic::ONE, [[0, 0], [1, 0], [0, 1]], vec![])?.with_name("l_shape"))
    }

    /// Unit square with a slit along `x = 1/2`, `0 <= y <= 1/2`.
    pub fn slit_square() -> Result<Self> {
        let h = Dyadic::pow2(-1);
        let slit = Aabb::new([h, Dyadic::ZERO], [h, h]);
        Ok(Self::from_cells(h, [[0, 0], [1, 0], [0, 1], [1, 1]], vec![slit])?.with_name("slit_square"))
    }

    /// `k` unit rooms in a row, consecutive rooms joined by a horizontal
    /// corridor of the given width and length, centered at height 1/2.
    pub fn rooms_and_corridors(k: usize, widths: &[Dyadic], corridor_length: Dyadic) -> Result<Self> {
        if k == 0 {
            return Err(FracError::InvalidDomain("need at least one room".into()));
        }
        if widths.len() + 1 != k {
            return Err(FracError::InvalidDomain(format!(
                "{k} rooms need {} corridor widths, got {}",
                k - 1,
                widths.len()
            )));
        }
        if !corridor_length.is_positive() {
            return Err(FracError::InvalidDomain("corridor length must be positive".into()));
        }
        for w in widths {
            if !w.is_positive() || *w >= Dyadic::ONE {
                return Err(FracError::InvalidDomain(format!("corridor width {w} not in (0,1)")));
            }
        }
        // largest power of two dividing 1, the corridor length and every half-width
        let exp = widths
            .iter()
            .map(|w| w.shl(-1).exponent())
            .chain([0, corridor_length.exponent()])
            .min()
            .unwrap_or(0);
        let cs = Dyadic::pow2(exp);
        let per_unit = 1i64 << (-exp).max(0);
        let len_cells = (corridor_length.shl(-exp)).floor() as i64;
        let mut cells = Vec::new();
        let mut x0 = 0i64;
        for room in 0..k {
            for i in 0..per_unit {
                for j in 0..per_unit {
                    cells.push([x0 + i, j]);
                }
            }
            x0 += per_unit;
            if room + 1 < k {
                let w_cells = widths[room].shl(-exp).floor() as i64;
                let y0 = per_unit / 2 - w_cells / 2;
                for i in 0..len_cells {
                    for j in 0..w_cells {
                        cells.push([x0 + i, y0 + j]);
                    }
                }
                x0 += len_cells;
            }
        }
        let label = widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",");
        Ok(Self::from_cells(cs, cells, vec![])?.with_name(format!("rooms_and_corridors({k};{label})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dy(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn unit_square_distances() {
        let sq = RectilinearDomain::square(Dyadic::ONE).unwrap();
        assert_eq!(sq.measure(), Dyadic::ONE);
        assert_eq!(sq.boundary_distance(&[0.5f64, 0.5]).unwrap(), 0.5);
        assert_eq!(sq.boundary_distance(&[0.25f64, 0.5]).unwrap(), 0.25);
        assert!(sq.boundary_distance(&[1.5f64, 0.5]).is_err());
        assert!(sq.boundary_distance(&[0.0f64, 0.5]).is_err());
        assert_eq!(sq.boundary_faces().len(), 4);
    }

    #[test]
    fn l_shape_reentrant_corner() {
        let l = RectilinearDomain::l_shape().unwrap();
        assert_eq!(l.measure(), Dyadic::from_i64(3));
        let d = l.boundary_distance(&[1.25f64, 1.25]);
        assert!(d.is_err(), "(5/4,5/4) lies in the missing cell");
        let d = l.boundary_distance(&[1.25f64, 0.75]).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        // merged faces: 6 edges of the L
        assert_eq!(l.boundary_faces().len(), 6);
    }

    #[test]
    fn slit_counts_as_boundary() {
        let s = RectilinearDomain::slit_square().unwrap();
        let d = s.boundary_distance(&[0.45f64, 0.25]).unwrap();
        assert!((d - 0.05).abs() < 1e-12);
        assert!(!s.contains(&[0.5f64, 0.25]));
        assert!(s.contains(&[0.5f64, 0.75]));
    }

    #[test]
    fn rejects_bad_cell_sets() {
        assert!(RectilinearDomain::<2>::from_cells(Dyadic::ONE, [], vec![]).is_err());
        assert!(RectilinearDomain::from_cells(Dyadic::ONE, [[0, 0], [2, 0]], vec![]).is_err());
        // corner contact only is not edge connected
        assert!(RectilinearDomain::from_cells(Dyadic::ONE, [[0, 0], [1, 1]], vec![]).is_err());
        // a slit cutting the only connection disconnects
        let slit = Aabb::new([Dyadic::ONE, Dyadic::ZERO], [Dyadic::ONE, Dyadic::ONE]);
        assert!(RectilinearDomain::from_cells(Dyadic::ONE, [[0, 0], [1, 0]], vec![slit]).is_err());
    }

    #[test]
    fn rooms_cell_count() {
        // two unit rooms joined by a 1/4 x 1/2 corridor: cell size 1/8
        let r = RectilinearDomain::rooms_and_corridors(2, &[dy("1/4")], dy("1/2")).unwrap();
        assert_eq!(r.cell_size(), dy("1/8"));
        // hand count: 2 * 64 room cells + 4 x 2 corridor cells
        assert_eq!(r.cells().len(), 2 * 64 + 4 * 2);
        assert_eq!(r.measure(), dy("2") + dy("1/8"));
        let d = r.boundary_distance(&[1.25f64, 0.5]).unwrap();
        assert!((d - 0.125).abs() < 1e-15);
    }

    #[test]
    fn exact_box_gap() {
        let sq = RectilinearDomain::square(Dyadic::ONE).unwrap();
        let q = Aabb::new([dy("1/4"), dy("1/4")], [dy("1/2"), dy("1/2")]);
        assert_eq!(sq.box_boundary_gap2(&q), dy("1/16"));
        assert!(sq.box_inside(&q));
    }

    proptest::proptest! {
        #[test]
        fn distance_scales_linearly(x in 0.01f64..0.99, y in 0.01f64..0.99, e in -3i32..3) {
            let l = RectilinearDomain::l_shape().unwrap();
            let f = Dyadic::pow2(e);
            let ls = l.scaled(f).unwrap();
            let p = [x, y];
            let ps = [x * f.to_f64(), y * f.to_f64()];
            let a = l.boundary_distance(&p).unwrap();
            let b = ls.boundary_distance(&ps).unwrap();
            proptest::prop_assert!((a * f.to_f64() - b).abs() <= 1e-15 * b.max(1.0));
        }
    }
}
