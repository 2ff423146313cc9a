use std::collections::VecDeque;

use super::{CoveringKind, TreeCovering};
use crate::error::{FracError, Result};
use crate::geometry::{Aabb, Cube};
use crate::scalar::{Dyadic, ExactScalar};
use crate::whitney::{expand_cubes, WhitneyDecomposition};

/// Tree covering of a John domain by expanded Whitney cubes.
///
/// The tree is a breadth-first shortest-path tree in the face-adjacency
/// graph of the cubes. Among the candidate parents of a node the larger cube
/// wins, then the lexicographically smaller corner. `B_t` is the cube of side
/// `l_t/64` centred at the centre of the face `Q_t ∩ Q_{t_p}`.
pub fn john_tree_covering<const N: usize>(
    dec: &WhitneyDecomposition<N>,
    root_hint: Option<[f64; N]>,
) -> Result<TreeCovering<Dyadic, N>> {
    let count = dec.len();
    if count == 0 {
        return Err(FracError::InvalidDomain("decomposition has no cubes".into()));
    }
    let boxes: Vec<Aabb<Dyadic, N>> = dec.cubes().iter().map(|c| c.cube.to_aabb()).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); count];
    for t in 0..count {
        for &s in dec.neighbors(t) {
            if share_face(&boxes[t], &boxes[s]) {
                adj[t].push(s);
            }
        }
    }

    let root = match root_hint {
        Some(x) => (0..count)
            .find(|&t| boxes[t].to_f64().contains_closed(&x))
            .ok_or_else(|| FracError::PointOutsideDomain(x.to_vec()))?,
        None => (0..count)
            .min_by(|&a, &b| {
                let (ca, cb) = (dec.cube(a), dec.cube(b));
                cb.side.cmp(&ca.side).then(ca.corner.cmp(&cb.corner))
            })
            .expect("nonempty"),
    };

    let mut dist = vec![usize::MAX; count];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(t) = queue.pop_front() {
        for &s in &adj[t] {
            if dist[s] == usize::MAX {
                dist[s] = dist[t] + 1;
                queue.push_back(s);
            }
        }
    }
    if dist.iter().any(|&d| d == usize::MAX) {
        return Err(FracError::DisconnectedCubes {
            components: components(&adj),
        });
    }

    let parent: Vec<Option<usize>> = (0..count)
        .map(|t| {
            if t == root {
                return None;
            }
            adj[t]
                .iter()
                .copied()
                .filter(|&s| dist[s] + 1 == dist[t])
                .min_by(|&a, &b| {
                    let (ca, cb) = (dec.cube(a), dec.cube(b));
                    cb.side.cmp(&ca.side).then(ca.corner.cmp(&cb.corner))
                })
        })
        .collect();

    let u: Vec<Aabb<Dyadic, N>> = expand_cubes(dec).iter().map(|c| c.to_aabb()).collect();
    let b: Vec<Option<Cube<Dyadic, N>>> = (0..count)
        .map(|t| {
            parent[t].map(|p| {
                let face = boxes[t].intersection(&boxes[p]).expect("face-adjacent cubes meet");
                let side = dec.cube(t).side.shl(-6);
                let centre = face.center();
                Cube::new(centre.map(|c| c - side.halve()), side)
            })
        })
        .collect();
    let overlap = 12usize.pow(N as u32);
    TreeCovering::from_parts(
        CoveringKind::John {
            generation: dec.max_generation(),
        },
        parent,
        u,
        b,
        boxes,
        overlap,
    )
}

/// Closed cubes meeting in a common `(n-1)`-dimensional face: they touch on
/// exactly one axis and overlap with positive length on all others.
fn share_face<const N: usize>(a: &Aabb<Dyadic, N>, b: &Aabb<Dyadic, N>) -> bool {
    let mut touching = 0;
    for k in 0..N {
        if a.hi[k] == b.lo[k] || b.hi[k] == a.lo[k] {
            touching += 1;
        } else if !(a.lo[k] < b.hi[k] && b.lo[k] < a.hi[k]) {
            return false;
        }
    }
    touching == 1
}

fn components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for start in 0..adj.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut head = 0;
        while head < comp.len() {
            let t = comp[head];
            head += 1;
            for &s in &adj[t] {
                if !seen[s] {
                    seen[s] = true;
                    comp.push(s);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::covering::{boman_constant, verify_tree_covering};
    use crate::geometry::RectilinearDomain;
    use crate::whitney::{whitney_decompose, WhitneyCube};

    #[test]
    fn unit_square_tree() {
        let d = Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap());
        let dec = whitney_decompose(&d, 6).unwrap();
        let cov = john_tree_covering(&dec, None).unwrap();
        let k = boman_constant(&cov).k_f64();
        let rep = verify_tree_covering(&cov);
        assert!(rep.pass, "{rep:#?}");
        assert!(rep.max_eccentricity <= 72f64.powi(2) * k * k);
        for t in 0..cov.len() {
            if let (Some(b), Some(p)) = (cov.b(t), cov.parent(t)) {
                assert!(cov.u(t).contains(&b.to_aabb()));
                assert!(cov.u(p).contains(&b.to_aabb()));
            }
        }
    }

    #[test]
    fn single_cube() {
        let d = Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap());
        let dec = WhitneyDecomposition::from_cubes(
            d,
            vec![WhitneyCube {
                cube: Cube::new([Dyadic::ZERO; 2], Dyadic::ONE),
                generation: 0,
            }],
            0,
        );
        let cov = john_tree_covering(&dec, None).unwrap();
        assert_eq!(cov.len(), 1);
        assert!(cov.b(0).is_none());
        assert_eq!(boman_constant(&cov).k, crate::Rational::new(9, 8));
    }

    #[test]
    fn l_shape_passes() {
        let d = Arc::new(RectilinearDomain::l_shape().unwrap());
        let dec = whitney_decompose(&d, 6).unwrap();
        let cov = john_tree_covering(&dec, None).unwrap();
        let rep = verify_tree_covering(&cov);
        assert!(rep.pass, "{rep:#?}");
        assert!(rep.max_overlap <= 144);
    }

    #[test]
    fn root_hint_selects_cube() {
        let d = Arc::new(RectilinearDomain::l_shape().unwrap());
        let dec = whitney_decompose(&d, 5).unwrap();
        let cov = john_tree_covering(&dec, Some([0.3, 1.7])).unwrap();
        assert!(cov.v(cov.root()).to_f64().contains_closed(&[0.3, 1.7]));
        assert!(john_tree_covering(&dec, Some([1.5, 1.5])).is_err());
    }

    #[test]
    fn disconnected_cubes_reported() {
        let d = Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap());
        let q = Dyadic::pow2(-2);
        let dec = WhitneyDecomposition::from_cubes(
            d,
            vec![
                WhitneyCube { cube: Cube::new([q, q], q), generation: 2 },
                WhitneyCube { cube: Cube::new([q + q, q + q], q), generation: 2 },
            ],
            2,
        );
        match john_tree_covering(&dec, None) {
            Err(FracError::DisconnectedCubes { components }) => assert_eq!(components.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
