use super::aabb::{Aabb, FBox};
use super::domain::RectilinearDomain;
use crate::error::{FracError, Result};
use crate::scalar::{Dyadic, Real};

/// Compact subset `F` of the boundary: a finite union of closed faces,
/// edges or points of the cell complex.
#[derive(Clone, Debug)]
pub struct BoundarySet<const N: usize> {
    segments: Vec<Aabb<Dyadic, N>>,
    fsegments: Vec<FBox<N>>,
    label: String,
}

impl<const N: usize> BoundarySet<N> {
    pub fn new(domain: &RectilinearDomain<N>, segments: Vec<Aabb<Dyadic, N>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(FracError::InvalidBoundarySet("empty segment list".into()));
        }
        for s in &segments {
            if !on_boundary(domain, s) {
                return Err(FracError::InvalidBoundarySet(format!("segment {s:?} is not contained in the boundary")));
            }
        }
        let fsegments = segments.iter().map(|s| s.to_f64()).collect();
        Ok(BoundarySet {
            segments,
            fsegments,
            label: "segments".into(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn segments(&self) -> &[Aabb<Dyadic, N>] {
        &self.segments
    }

    /// `F = boundary of Omega`.
    pub fn whole_boundary(domain: &RectilinearDomain<N>) -> Self {
        BoundarySet {
            segments: domain.boundary_faces().to_vec(),
            fsegments: domain.boundary_faces().iter().map(|f| f.to_f64()).collect(),
            label: "boundary".into(),
        }
    }

    /// The lowest corner of the lexicographically smallest cell.
    pub fn corner(domain: &RectilinearDomain<N>) -> Self {
        let c = domain.cells().iter().next().expect("nonempty domain");
        let p = domain.cell_box(c).lo;
        Self::new(domain, vec![Aabb::new(p, p)])
            .expect("lowest corner lies on the boundary")
            .with_label("corner")
    }

    /// All boundary faces with normal `axis` on the extreme plane of the
    /// domain (`upper` picks the maximal one).
    pub fn side(domain: &RectilinearDomain<N>, axis: usize, upper: bool) -> Self {
        let bb = domain.bounding_box();
        let plane = if upper { bb.hi[axis] } else { bb.lo[axis] };
        let segs: Vec<_> = domain
            .boundary_faces()
            .iter()
            .filter(|f| f.lo[axis] == plane && f.hi[axis] == plane)
            .copied()
            .collect();
        Self::new(domain, segs)
            .expect("extreme faces lie on the boundary")
            .with_label(format!("side{}{}", axis, if upper { "+" } else { "-" }))
    }

    /// Euclidean distance `d_F(x)`.
    pub fn distance<T: Real>(&self, x: &[T; N]) -> T {
        self.fsegments
            .iter()
            .map(|s| s.dist2_point(x))
            .fold(T::infinity(), T::min)
            .sqrt()
    }

    /// Exact squared distance from a dyadic point.
    pub fn dist2_exact(&self, x: &[Dyadic; N]) -> Dyadic {
        self.segments.iter().map(|s| s.dist2_point(x)).min().unwrap_or(Dyadic::ZERO)
    }
}

/// Whether a closed box lies in the union of the boundary faces. The box is
/// cut at every face breakpoint; each piece must sit inside a single face.
fn on_boundary<const N: usize>(domain: &RectilinearDomain<N>, s: &Aabb<Dyadic, N>) -> bool {
    let faces = domain.boundary_faces();
    let mut breaks: Vec<Vec<Dyadic>> = Vec::with_capacity(N);
    for k in 0..N {
        let mut b = vec![s.lo[k], s.hi[k]];
        if s.lo[k] < s.hi[k] {
            for f in faces {
                for v in [f.lo[k], f.hi[k]] {
                    if s.lo[k] < v && v < s.hi[k] {
                        b.push(v);
                    }
                }
            }
        }
        b.sort();
        b.dedup();
        breaks.push(b);
    }
    let counts: Vec<usize> = breaks.iter().map(|b| b.len().saturating_sub(1).max(1)).collect();
    let total: usize = counts.iter().product();
    (0..total).all(|mut code| {
        let mut piece = *s;
        for k in 0..N {
            let i = code % counts[k];
            code /= counts[k];
            if breaks[k].len() >= 2 {
                piece.lo[k] = breaks[k][i];
                piece.hi[k] = breaks[k][i + 1];
            }
        }
        faces.iter().any(|f| f.contains(&piece))
    })
}
