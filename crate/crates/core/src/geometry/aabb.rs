use crate::scalar::{ExactScalar, Real};

/// Closed axis-aligned box `[lo, hi]`. Degenerate extents are allowed
/// (faces, edges, points). Whether the box stands for the closed set or its
/// interior is decided by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Aabb<S, const N: usize> {
    pub lo: [S; N],
    pub hi: [S; N],
}

impl<S: ExactScalar, const N: usize> Aabb<S, N> {
    pub fn new(lo: [S; N], hi: [S; N]) -> Self {
        debug_assert!((0..N).all(|k| lo[k] <= hi[k]), "inverted box");
        Aabb { lo, hi }
    }

    pub fn extent(&self, axis: usize) -> S {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> S {
        (0..N).fold(S::one(), |acc, k| acc * self.extent(k))
    }

    /// Number of axes with positive extent.
    pub fn dimension(&self) -> usize {
        (0..N).filter(|&k| self.lo[k] < self.hi[k]).count()
    }

    pub fn center(&self) -> [S; N] {
        std::array::from_fn(|k| (self.lo[k] + self.hi[k]).halve())
    }

    /// Closed intersection, possibly degenerate.
    pub fn intersection(&self, other: &Self) -> Option<Self> {
        let lo: [S; N] = std::array::from_fn(|k| self.lo[k].max(other.lo[k]));
        let hi: [S; N] = std::array::from_fn(|k| self.hi[k].min(other.hi[k]));
        (0..N).all(|k| lo[k] <= hi[k]).then_some(Aabb { lo, hi })
    }

    /// Interiors intersect.
    pub fn overlaps_open(&self, other: &Self) -> bool {
        (0..N).all(|k| self.lo[k] < other.hi[k] && other.lo[k] < self.hi[k])
    }

    /// Closures intersect.
    pub fn touches(&self, other: &Self) -> bool {
        (0..N).all(|k| self.lo[k] <= other.hi[k] && other.lo[k] <= self.hi[k])
    }

    /// Closed containment of `other` in `self`.
    pub fn contains(&self, other: &Self) -> bool {
        (0..N).all(|k| self.lo[k] <= other.lo[k] && other.hi[k] <= self.hi[k])
    }

    pub fn contains_point(&self, p: &[S; N]) -> bool {
        (0..N).all(|k| self.lo[k] <= p[k] && p[k] <= self.hi[k])
    }

    /// Squared Euclidean distance between the two closed boxes.
    pub fn gap2(&self, other: &Self) -> S {
        let mut acc = S::zero();
        for k in 0..N {
            let d = if other.lo[k] > self.hi[k] {
                other.lo[k] - self.hi[k]
            } else if self.lo[k] > other.hi[k] {
                self.lo[k] - other.hi[k]
            } else {
                S::zero()
            };
            acc = acc + d * d;
        }
        acc
    }

    /// Squared distance from a point to the closed box.
    pub fn dist2_point(&self, p: &[S; N]) -> S {
        self.gap2(&Aabb { lo: *p, hi: *p })
    }

    pub fn map<S2: ExactScalar>(&self, f: impl Fn(S) -> S2) -> Aabb<S2, N> {
        Aabb {
            lo: self.lo.map(&f),
            hi: self.hi.map(&f),
        }
    }

    pub fn to_f64(&self) -> FBox<N> {
        FBox {
            lo: self.lo.map(|v| v.to_f64()),
            hi: self.hi.map(|v| v.to_f64()),
        }
    }
}

/// Floating point mirror of [`Aabb`] used for fast queries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FBox<const N: usize> {
    pub lo: [f64; N],
    pub hi: [f64; N],
}

impl<const N: usize> FBox<N> {
    pub fn contains_open<T: Real>(&self, p: &[T; N]) -> bool {
        (0..N).all(|k| {
            let x = p[k].as_f64();
            self.lo[k] < x && x < self.hi[k]
        })
    }

    pub fn contains_closed<T: Real>(&self, p: &[T; N]) -> bool {
        (0..N).all(|k| {
            let x = p[k].as_f64();
            self.lo[k] <= x && x <= self.hi[k]
        })
    }

    /// Squared distance from a point to the closed box.
    pub fn dist2_point<T: Real>(&self, p: &[T; N]) -> T {
        let mut acc = T::zero();
        for k in 0..N {
            let lo = T::lit(self.lo[k]);
            let hi = T::lit(self.hi[k]);
            let x = p[k];
            let d = if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                T::zero()
            };
            acc = acc + d * d;
        }
        acc
    }

    pub fn volume(&self) -> f64 {
        (0..N).map(|k| self.hi[k] - self.lo[k]).product()
    }

    pub fn center(&self) -> [f64; N] {
        std::array::from_fn(|k| 0.5 * (self.lo[k] + self.hi[k]))
    }
}

/// Axis-aligned cube given by its lowest corner and side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cube<S, const N: usize> {
    pub corner: [S; N],
    pub side: S,
}

impl<S: ExactScalar, const N: usize> Cube<S, N> {
    pub fn new(corner: [S; N], side: S) -> Self {
        assert!(side > S::zero(), "cube side must be positive");
        Cube { corner, side }
    }

    pub fn to_aabb(&self) -> Aabb<S, N> {
        Aabb {
            lo: self.corner,
            hi: self.corner.map(|c| c + self.side),
        }
    }

    pub fn center(&self) -> [S; N] {
        self.corner.map(|c| c + self.side.halve())
    }

    /// `diam^2 = n * side^2`.
    pub fn diam2(&self) -> S {
        S::from_int(N as i64) * self.side * self.side
    }

    pub fn diam_f64(&self) -> f64 {
        self.side.to_f64() * (N as f64).sqrt()
    }

    pub fn volume(&self) -> S {
        (0..N).fold(S::one(), |acc, _| acc * self.side)
    }

    /// Concentric dilation `factor * Q`.
    pub fn dilate(&self, factor: S) -> Self {
        let side = factor * self.side;
        let shift = (side - self.side).halve();
        Cube {
            corner: self.corner.map(|c| c - shift),
            side,
        }
    }
}

/// Exact volume of a union of boxes by recursive slab sweeps.
pub fn union_volume<S: ExactScalar, const N: usize>(boxes: &[Aabb<S, N>]) -> S {
    let refs: Vec<&Aabb<S, N>> = boxes.iter().filter(|b| b.volume() > S::zero()).collect();
    union_volume_axis(&refs, 0)
}

fn union_volume_axis<S: ExactScalar, const N: usize>(boxes: &[&Aabb<S, N>], axis: usize) -> S {
    if boxes.is_empty() {
        return S::zero();
    }
    if axis == N {
        return S::one();
    }
    if axis + 1 == N {
        let mut iv: Vec<(S, S)> = boxes.iter().map(|b| (b.lo[axis], b.hi[axis])).collect();
        iv.sort();
        let mut total = S::zero();
        let (mut cur_lo, mut cur_hi) = iv[0];
        for &(lo, hi) in &iv[1..] {
            if lo > cur_hi {
                total = total + (cur_hi - cur_lo);
                cur_lo = lo;
                cur_hi = hi;
            } else if hi > cur_hi {
                cur_hi = hi;
            }
        }
        return total + (cur_hi - cur_lo);
    }
    let mut coords: Vec<S> = boxes
        .iter()
        .flat_map(|b| [b.lo[axis], b.hi[axis]])
        .collect();
    coords.sort();
    coords.dedup();
    let mut by_lo: Vec<&Aabb<S, N>> = boxes.to_vec();
    by_lo.sort_by(|a, b| a.lo[axis].cmp(&b.lo[axis]));
    let mut next = 0;
    let mut total = S::zero();
    let mut active: Vec<&Aabb<S, N>> = Vec::new();
    for w in coords.windows(2) {
        active.retain(|b| b.hi[axis] >= w[1]);
        while next < by_lo.len() && by_lo[next].lo[axis] <= w[0] {
            if by_lo[next].hi[axis] >= w[1] {
                active.push(by_lo[next]);
            }
            next += 1;
        }
        if !active.is_empty() {
            total = total + (w[1] - w[0]) * union_volume_axis(&active, axis + 1);
        }
    }
    total
}

/// Index pairs `(i, j)`, `i < j`, of boxes whose interiors (`open`) or
/// closures intersect. Sweep and prune along the first axis.
pub fn intersecting_pairs<S: ExactScalar, const N: usize>(boxes: &[Aabb<S, N>], open: bool) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[a].lo[0].cmp(&boxes[b].lo[0]).then(a.cmp(&b)));
    let mut pairs = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            let lo = boxes[j].lo[0];
            if lo > boxes[i].hi[0] || (open && lo == boxes[i].hi[0]) {
                break;
            }
            let hit = if open {
                boxes[i].overlaps_open(&boxes[j])
            } else {
                boxes[i].touches(&boxes[j])
            };
            if hit {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Largest number of open boxes sharing a common interior point.
pub fn max_open_depth<S: ExactScalar, const N: usize>(boxes: &[Aabb<S, N>]) -> usize {
    let refs: Vec<&Aabb<S, N>> = boxes.iter().filter(|b| b.volume() > S::zero()).collect();
    max_depth_axis(&refs, 0)
}

fn max_depth_axis<S: ExactScalar, const N: usize>(boxes: &[&Aabb<S, N>], axis: usize) -> usize {
    if boxes.is_empty() {
        return 0;
    }
    if axis == N {
        return boxes.len();
    }
    if axis + 1 == N {
        // open intervals: ends sort before starts at equal coordinates
        let mut ev: Vec<(S, i32)> = boxes
            .iter()
            .flat_map(|b| [(b.lo[axis], 1), (b.hi[axis], -1)])
            .collect();
        ev.sort();
        let (mut cur, mut best) = (0i32, 0i32);
        for (_, d) in ev {
            cur += d;
            best = best.max(cur);
        }
        return best as usize;
    }
    let mut coords: Vec<S> = boxes
        .iter()
        .flat_map(|b| [b.lo[axis], b.hi[axis]])
        .collect();
    coords.sort();
    coords.dedup();
    let mut best = 0;
    let mut active: Vec<&Aabb<S, N>> = Vec::new();
    for w in coords.windows(2) {
        active.clear();
        active.extend(
            boxes
                .iter()
                .copied()
                .filter(|b| b.lo[axis] <= w[0] && b.hi[axis] >= w[1]),
        );
        if active.len() > best {
            best = best.max(max_depth_axis(&active, axis + 1));
        }
    }
    best
}

/// Uniform bin grid over float boxes for point and box queries.
#[derive(Clone, Debug)]
pub struct BoxIndex<const N: usize> {
    lo: [f64; N],
    cell: [f64; N],
    dims: [usize; N],
    bins: Vec<Vec<u32>>,
}

impl<const N: usize> BoxIndex<N> {
    pub fn new(boxes: &[FBox<N>]) -> Self {
        let mut lo = [f64::INFINITY; N];
        let mut hi = [f64::NEG_INFINITY; N];
        for b in boxes {
            for k in 0..N {
                lo[k] = lo[k].min(b.lo[k]);
                hi[k] = hi[k].max(b.hi[k]);
            }
        }
        if boxes.is_empty() {
            lo = [0.0; N];
            hi = [1.0; N];
        }
        let per_axis = ((boxes.len().max(1) as f64).powf(1.0 / N as f64).ceil() as usize).clamp(1, 256);
        let dims = [per_axis; N];
        let cell: [f64; N] = std::array::from_fn(|k| ((hi[k] - lo[k]) / per_axis as f64).max(1e-300));
        let mut index = BoxIndex {
            lo,
            cell,
            dims,
            bins: vec![Vec::new(); per_axis.pow(N as u32)],
        };
        for (i, b) in boxes.iter().enumerate() {
            let (a, z) = (index.bin_coords(&b.lo), index.bin_coords(&b.hi));
            index.for_each_bin(a, z, |bin| index_push(bin, i as u32));
        }
        index
    }

    fn bin_coords(&self, p: &[f64; N]) -> [usize; N] {
        std::array::from_fn(|k| {
            let v = ((p[k] - self.lo[k]) / self.cell[k]).floor();
            (v.max(0.0) as usize).min(self.dims[k] - 1)
        })
    }

    fn for_each_bin(&mut self, a: [usize; N], z: [usize; N], mut f: impl FnMut(&mut Vec<u32>)) {
        let mut cur = a;
        loop {
            let flat = self.flat(&cur);
            f(&mut self.bins[flat]);
            let mut k = 0;
            loop {
                if k == N {
                    return;
                }
                if cur[k] < z[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = a[k];
                k += 1;
            }
        }
    }

    fn flat(&self, c: &[usize; N]) -> usize {
        let mut idx = 0;
        for k in (0..N).rev() {
            idx = idx * self.dims[k] + c[k];
        }
        idx
    }

    /// Candidate box ids whose bins contain the point.
    pub fn candidates(&self, p: &[f64; N]) -> &[u32] {
        &self.bins[self.flat(&self.bin_coords(p))]
    }

    /// Candidate box ids possibly overlapping the query box (sorted, unique).
    pub fn candidates_box(&self, q: &FBox<N>) -> Vec<u32> {
        let (a, z) = (self.bin_coords(&q.lo), self.bin_coords(&q.hi));
        let mut out = Vec::new();
        let mut cur = a;
        loop {
            out.extend_from_slice(&self.bins[self.flat(&cur)]);
            let mut k = 0;
            loop {
                if k == N {
                    out.sort_unstable();
                    out.dedup();
                    return out;
                }
                if cur[k] < z[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = a[k];
                k += 1;
            }
        }
    }
}

fn index_push(bin: &mut Vec<u32>, i: u32) {
    bin.push(i);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Dyadic, Rational};

    fn d(v: i64) -> Dyadic {
        Dyadic::from_i64(v)
    }

    #[test]
    fn dilation_keeps_center() {
        let q = Cube::new([Dyadic::ZERO; 2], Dyadic::pow2(-2));
        let e = q.dilate(Dyadic::new(9, -3));
        assert_eq!(e.side, Dyadic::new(9, -5));
        assert_eq!(e.center(), q.center());
    }

    #[test]
    fn union_of_overlapping_squares() {
        let a = Aabb::new([d(0), d(0)], [d(2), d(2)]);
        let b = Aabb::new([d(1), d(1)], [d(3), d(3)]);
        assert_eq!(union_volume(&[a, b]), d(7));
        assert_eq!(max_open_depth(&[a, b]), 2);
        let c = Aabb::new([d(2), d(0)], [d(3), d(1)]);
        assert_eq!(max_open_depth(&[a, c]), 1);
    }

    #[test]
    fn rational_boxes() {
        let third = Rational::new(1, 3);
        let a = Aabb::new([Rational::from_integer(0); 2], [third, third]);
        assert_eq!(a.volume(), Rational::new(1, 9));
        assert_eq!(a.center(), [Rational::new(1, 6); 2]);
    }

    #[test]
    fn gap_between_boxes() {
        let a = Aabb::new([d(0), d(0)], [d(1), d(1)]);
        let b = Aabb::new([d(4), d(5)], [d(6), d(6)]);
        assert_eq!(a.gap2(&b), d(9 + 16));
        assert!(!a.touches(&b));
    }

    #[test]
    fn index_finds_boxes() {
        let boxes: Vec<FBox<2>> = (0..10)
            .map(|i| FBox { lo: [i as f64, 0.0], hi: [i as f64 + 1.0, 1.0] })
            .collect();
        let idx = BoxIndex::new(&boxes);
        assert!(idx.candidates(&[3.5, 0.5]).contains(&3));
        let c = idx.candidates_box(&FBox { lo: [2.5, 0.2], hi: [4.5, 0.3] });
        for i in 2..=4 {
            assert!(c.contains(&i));
        }
    }

    proptest::proptest! {
        #[test]
        fn union_volume_matches_rasterization(raw in proptest::collection::vec((0i64..8, 0i64..8, 1i64..5, 1i64..5), 1..6)) {
            let boxes: Vec<Aabb<Dyadic, 2>> = raw.iter()
                .map(|&(x, y, w, h)| Aabb::new([d(x), d(y)], [d(x + w), d(y + h)]))
                .collect();
            let mut count = 0;
            let mut depth = 0;
            for i in 0..16 {
                for j in 0..16 {
                    let p = [Dyadic::new(2 * i + 1, -1), Dyadic::new(2 * j + 1, -1)];
                    let c = boxes.iter().filter(|b| b.contains_point(&p)).count();
                    depth = depth.max(c);
                    if c > 0 { count += 1; }
                }
            }
            proptest::prop_assert_eq!(union_volume(&boxes), d(count));
            proptest::prop_assert_eq!(max_open_depth(&boxes), depth);
        }
    }
}
