use rayon::prelude::*;
use serde::Serialize;

use super::{CoveringKind, TreeCovering};
use crate::error::{FracError, Result};
use crate::geometry::{intersecting_pairs, max_open_depth, union_volume, Aabb, BoundarySet, BoxIndex, FBox, RectilinearDomain};
use crate::report::{all_pass, PropertyCheck};
use crate::scalar::{Dyadic, ExactScalar, Rational};

/// The shadow `W_t`: union of `U_s` over the subtree rooted at `t`.
#[derive(Clone, Debug)]
pub struct Shadow<S> {
    pub node: usize,
    pub members: Vec<usize>,
    pub volume: S,
}

pub fn shadow<S: ExactScalar, const N: usize>(cov: &TreeCovering<S, N>, t: usize) -> Result<Shadow<S>> {
    if t >= cov.len() {
        return Err(FracError::UnknownNode(t));
    }
    let members = cov.subtree(t);
    let boxes: Vec<Aabb<S, N>> = members.iter().map(|&s| *cov.u(s)).collect();
    Ok(Shadow {
        node: t,
        volume: union_volume(&boxes),
        members,
    })
}

/// Exact `|W_t|` for every node.
pub fn shadow_volumes<S: ExactScalar, const N: usize>(cov: &TreeCovering<S, N>) -> Vec<S> {
    (0..cov.len())
        .into_par_iter()
        .map(|t| {
            let boxes: Vec<Aabb<S, N>> = cov.subtree(t).iter().map(|&s| *cov.u(s)).collect();
            union_volume(&boxes)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BomanConstant {
    /// `max_t` of the smallest `k` with `W_t ⊆ k Q_t`.
    pub k: Rational,
    pub argmax: usize,
    pub per_node: Vec<Rational>,
}

impl BomanConstant {
    pub fn k_f64(&self) -> f64 {
        self.k.to_f64()
    }
}

/// Smallest concentric dilation factors with `W_t ⊆ k Q_t`, where `Q_t` is
/// the base cube `V_t`. Exact: the L-infinity extent of a union of boxes
/// around a point is attained at a corner of its bounding box.
pub fn boman_constant<S: ExactScalar, const N: usize>(cov: &TreeCovering<S, N>) -> BomanConstant {
    let len = cov.len();
    let mut hull: Vec<Aabb<S, N>> = cov.u_sets().to_vec();
    for &t in cov.bfs_order().iter().rev() {
        if let Some(p) = cov.parent(t) {
            let h = hull[t];
            let hp = &mut hull[p];
            for k in 0..N {
                hp.lo[k] = hp.lo[k].min(h.lo[k]);
                hp.hi[k] = hp.hi[k].max(h.hi[k]);
            }
        }
    }
    let per_node: Vec<Rational> = (0..len)
        .map(|t| {
            let q = cov.v(t);
            let c = q.center();
            let dev = (0..N)
                .map(|k| (c[k] - hull[t].lo[k]).max(hull[t].hi[k] - c[k]))
                .max()
                .expect("positive dimension");
            (dev + dev).to_rational() / q.extent(0).to_rational()
        })
        .collect();
    let argmax = (0..len).max_by(|&a, &b| per_node[a].cmp(&per_node[b]).then(b.cmp(&a))).expect("nonempty");
    BomanConstant {
        k: per_node[argmax],
        argmax,
        per_node,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringReport {
    pub nodes: usize,
    pub tree: PropertyCheck,
    pub overlap: PropertyCheck,
    pub transfer_containment: PropertyCheck,
    pub transfer_disjoint: PropertyCheck,
    pub base_partition: PropertyCheck,
    pub shadow_monotone: PropertyCheck,
    pub eccentricity: PropertyCheck,
    pub max_overlap: usize,
    pub probe_min_overlap: usize,
    pub probe_max_overlap: usize,
    pub max_eccentricity: f64,
    pub eccentricity_bound: f64,
    pub boman_k: f64,
    pub pass: bool,
}

/// Checks the tree, overlap, transfer-cube and partition properties and
/// the eccentricity bound of the construction.
pub fn verify_tree_covering<S: ExactScalar, const N: usize>(cov: &TreeCovering<S, N>) -> CoveringReport {
    let len = cov.len();
    let mut bad_tree = Vec::new();
    for t in 0..len {
        match cov.parent(t) {
            None if t != cov.root() => bad_tree.push(t),
            Some(p) if p >= len || !cov.children(p).contains(&t) => bad_tree.push(t),
            _ => {}
        }
        if (t == cov.root()) != cov.b(t).is_none() {
            bad_tree.push(t);
        }
    }
    bad_tree.dedup();
    let tree = PropertyCheck::new("tree", bad_tree, format!("{len} nodes rooted at {}", cov.root()));

    let max_overlap = max_open_depth(cov.u_sets());
    let (probe_min, probe_max) = probe_overlap(cov, 64);
    let overlap = PropertyCheck::from_bool(
        "overlap",
        max_overlap <= cov.overlap() && probe_min >= 1,
        format!("exact max overlap {max_overlap}, probe range [{probe_min}, {probe_max}], bound {}", cov.overlap()),
    );

    let mut bad_contain = Vec::new();
    for t in 0..len {
        if let (Some(b), Some(p)) = (cov.b(t), cov.parent(t)) {
            let bb = b.to_aabb();
            if !(cov.u(t).contains(&bb) && cov.u(p).contains(&bb)) {
                bad_contain.push(t);
            }
        }
    }
    let transfer_containment = PropertyCheck::new("transfer_containment", bad_contain, "B_t inside U_t and U_parent");

    let b_ids: Vec<usize> = (0..len).filter(|&t| cov.b(t).is_some()).collect();
    let b_boxes: Vec<Aabb<S, N>> = b_ids.iter().map(|&t| cov.b(t).expect("filtered").to_aabb()).collect();
    let mut bad_disjoint: Vec<usize> = intersecting_pairs(&b_boxes, true)
        .into_iter()
        .flat_map(|(i, j)| [b_ids[i], b_ids[j]])
        .collect();
    bad_disjoint.sort_unstable();
    bad_disjoint.dedup();
    let transfer_disjoint = PropertyCheck::new("transfer_disjoint", bad_disjoint, "B_t pairwise disjoint");

    let mut bad_partition: Vec<usize> = intersecting_pairs(cov.v_sets(), true)
        .into_iter()
        .flat_map(|(i, j)| [i, j])
        .chain((0..len).filter(|&t| !cov.u(t).contains(cov.v(t))))
        .collect();
    bad_partition.sort_unstable();
    bad_partition.dedup();
    let base_partition = PropertyCheck::new("base_partition", bad_partition, "V_t disjoint and inside U_t");

    let volumes = shadow_volumes(cov);
    let bad_monotone: Vec<usize> = (0..len)
        .filter(|&t| cov.parent(t).is_some_and(|p| volumes[t] > volumes[p]))
        .collect();
    let shadow_monotone = PropertyCheck::new("shadow_monotone", bad_monotone, "|W_t| <= |W_parent|");

    let boman = boman_constant(cov);
    let bound = match cov.kind() {
        CoveringKind::Cube { m } => ((3 * m) as f64).powi(N as i32),
        CoveringKind::John { .. } => 72f64.powi(N as i32) * boman.k_f64().powi(N as i32),
    };
    let mut max_ecc: f64 = 0.0;
    let mut bad_ecc = Vec::new();
    for t in 0..len {
        if let Some(b) = cov.b(t) {
            let e = (volumes[t].to_rational() / b.volume().to_rational()).to_f64();
            max_ecc = max_ecc.max(e);
            if e > bound {
                bad_ecc.push(t);
            }
        }
    }
    let eccentricity = PropertyCheck::new(
        "eccentricity",
        bad_ecc,
        format!("max |W_t|/|B_t| = {max_ecc}, bound {bound}"),
    );

    let pass = all_pass(&[
        &tree,
        &overlap,
        &transfer_containment,
        &transfer_disjoint,
        &base_partition,
        &shadow_monotone,
        &eccentricity,
    ]);
    CoveringReport {
        nodes: len,
        tree,
        overlap,
        transfer_containment,
        transfer_disjoint,
        base_partition,
        shadow_monotone,
        eccentricity,
        max_overlap,
        probe_min_overlap: probe_min,
        probe_max_overlap: probe_max,
        max_eccentricity: max_ecc,
        eccentricity_bound: bound,
        boman_k: boman.k_f64(),
        pass,
    }
}

/// Range of `sum_t chi_{U_t}` over cell centres of a `resolution^n` grid,
/// restricted to points inside some `V_t`.
fn probe_overlap<S: ExactScalar, const N: usize>(cov: &TreeCovering<S, N>, resolution: usize) -> (usize, usize) {
    let u: Vec<FBox<N>> = cov.u_sets().iter().map(|b| b.to_f64()).collect();
    let v: Vec<FBox<N>> = cov.v_sets().iter().map(|b| b.to_f64()).collect();
    let (ui, vi) = (BoxIndex::new(&u), BoxIndex::new(&v));
    let mut lo = [f64::INFINITY; N];
    let mut hi = [f64::NEG_INFINITY; N];
    for b in &v {
        for k in 0..N {
            lo[k] = lo[k].min(b.lo[k]);
            hi[k] = hi[k].max(b.hi[k]);
        }
    }
    let (mut min, mut max) = (usize::MAX, 0);
    for flat in 0..resolution.pow(N as u32) {
        let mut rem = flat;
        let x: [f64; N] = std::array::from_fn(|k| {
            let i = rem % resolution;
            rem /= resolution;
            lo[k] + (i as f64 + 0.5) / resolution as f64 * (hi[k] - lo[k])
        });
        if !vi.candidates(&x).iter().any(|&i| v[i as usize].contains_open(&x)) {
            continue;
        }
        let c = ui.candidates(&x).iter().filter(|&&i| u[i as usize].contains_open(&x)).count();
        min = min.min(c);
        max = max.max(c);
    }
    if max == 0 {
        min = 0;
    }
    (min, max)
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaCheck {
    pub check: PropertyCheck,
    /// Largest observed value of lhs/rhs; the lemma holds when it is `<= 1`.
    pub worst_ratio: f64,
}

/// `L_t <= d(x)` for all `x` in `U_t`, where `L_t` is the side of `U_t`.
/// Decided exactly through the gap between the closed box and the boundary.
pub fn distance_lemma_check<const N: usize>(cov: &TreeCovering<Dyadic, N>, domain: &RectilinearDomain<N>) -> LemmaCheck {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for t in 0..cov.len() {
        let u = cov.u(t);
        let l = u.extent(0);
        let gap2 = domain.box_boundary_gap2(u);
        if gap2 < l * l {
            bad.push(t);
        }
        worst = worst.max((l * l).to_f64().sqrt() / gap2.to_f64().sqrt());
    }
    LemmaCheck {
        check: PropertyCheck::new("distance_lemma", bad, format!("max L_t / dist(U_t, boundary) = {worst}")),
        worst_ratio: worst,
    }
}

/// `sup_{W_t} d_F <= 3 K sqrt(n) inf_{B_t} d_F` on probe points: the
/// `(res+1)^n` lattice of each box, corners included.
pub fn weight_comparability_check<S: ExactScalar, const N: usize>(
    cov: &TreeCovering<S, N>,
    f: &BoundarySet<N>,
    k: f64,
    res: usize,
) -> LemmaCheck {
    let len = cov.len();
    let box_extreme = |b: &FBox<N>, pick_max: bool| -> f64 {
        let pts = (res + 1).pow(N as u32);
        let mut best = if pick_max { 0.0 } else { f64::INFINITY };
        for flat in 0..pts {
            let mut rem = flat;
            let x: [f64; N] = std::array::from_fn(|j| {
                let i = rem % (res + 1);
                rem /= res + 1;
                b.lo[j] + (b.hi[j] - b.lo[j]) * i as f64 / res as f64
            });
            let d = f.distance(&x);
            best = if pick_max { best.max(d) } else { best.min(d) };
        }
        best
    };
    let mut sup: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|t| box_extreme(&cov.u(t).to_f64(), true))
        .collect();
    for &t in cov.bfs_order().iter().rev() {
        if let Some(p) = cov.parent(t) {
            sup[p] = sup[p].max(sup[t]);
        }
    }
    let factor = 3.0 * k * (N as f64).sqrt();
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for t in 0..len {
        if let Some(b) = cov.b(t) {
            let inf = box_extreme(&b.to_aabb().to_f64(), false);
            let r = sup[t] / (factor * inf);
            worst = worst.max(r);
            if r > 1.0 {
                bad.push(t);
            }
        }
    }
    LemmaCheck {
        check: PropertyCheck::new(
            "weight_comparability",
            bad,
            format!("max sup_W d_F / (3 K sqrt(n) inf_B d_F) = {worst}"),
        ),
        worst_ratio: worst,
    }
}
