//! Tree coverings: the regular-partition covering of a cube and the
//! Whitney-cube covering of a John domain, with shadows `W_t`, the overlap
//! `N` and the Boman constant `K`.

mod analysis;
mod cube;
mod john;

pub use analysis::{
    boman_constant, distance_lemma_check, shadow, shadow_volumes, verify_tree_covering, weight_comparability_check,
    BomanConstant, CoveringReport, LemmaCheck, Shadow,
};
pub use cube::{choose_m, cube_tree_covering, cube_tree_covering_with_m};
pub use john::john_tree_covering;

use serde::Serialize;

use crate::geometry::{Aabb, Cube};
use crate::scalar::ExactScalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CoveringKind {
    /// Regular `m^n` partition of a cube.
    Cube { m: usize },
    /// Expanded Whitney cubes of a decomposition truncated at `generation`.
    John { generation: i32 },
}

/// A tree covering `{U_t}` indexed by a rooted tree, with transfer cubes
/// `B_t` and base cells `V_t`. `U_t` and `B_t` are open; they are stored by
/// their closures.
#[derive(Clone, Debug)]
pub struct TreeCovering<S, const N: usize> {
    kind: CoveringKind,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    /// Nodes in breadth-first order from the root.
    order: Vec<usize>,
    u: Vec<Aabb<S, N>>,
    b: Vec<Option<Cube<S, N>>>,
    v: Vec<Aabb<S, N>>,
    overlap: usize,
}

impl<S: ExactScalar, const N: usize> TreeCovering<S, N> {
    /// Assembles a covering from raw parts. The parent map must describe a
    /// rooted tree; [`verify_tree_covering`] checks the remaining properties.
    pub fn from_parts(
        kind: CoveringKind,
        parent: Vec<Option<usize>>,
        u: Vec<Aabb<S, N>>,
        b: Vec<Option<Cube<S, N>>>,
        v: Vec<Aabb<S, N>>,
        overlap: usize,
    ) -> crate::Result<Self> {
        let len = parent.len();
        if u.len() != len || b.len() != len || v.len() != len {
            return Err(crate::FracError::OutOfRange("covering parts differ in length".into()));
        }
        let roots: Vec<usize> = (0..len).filter(|&t| parent[t].is_none()).collect();
        if roots.len() != 1 {
            return Err(crate::FracError::OutOfRange(format!("expected one root, found {}", roots.len())));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); len];
        for (t, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= len {
                    return Err(crate::FracError::UnknownNode(p));
                }
                children[p].push(t);
            }
        }
        let mut depth = vec![usize::MAX; len];
        let mut order = Vec::with_capacity(len);
        depth[root] = 0;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let t = order[head];
            head += 1;
            for &c in &children[t] {
                depth[c] = depth[t] + 1;
                order.push(c);
            }
        }
        if order.len() != len {
            return Err(crate::FracError::OutOfRange("parent map has a cycle or detached nodes".into()));
        }
        Ok(TreeCovering {
            kind,
            root,
            parent,
            children,
            depth,
            order,
            u,
            b,
            v,
            overlap,
        })
    }

    pub fn kind(&self) -> CoveringKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, t: usize) -> Option<usize> {
        self.parent[t]
    }

    pub fn children(&self, t: usize) -> &[usize] {
        &self.children[t]
    }

    pub fn depth(&self, t: usize) -> usize {
        self.depth[t]
    }

    /// Breadth-first order; reversed, it visits children before parents.
    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    pub fn u(&self, t: usize) -> &Aabb<S, N> {
        &self.u[t]
    }

    pub fn b(&self, t: usize) -> Option<&Cube<S, N>> {
        self.b[t].as_ref()
    }

    pub fn v(&self, t: usize) -> &Aabb<S, N> {
        &self.v[t]
    }

    pub fn u_sets(&self) -> &[Aabb<S, N>] {
        &self.u
    }

    pub fn b_sets(&self) -> &[Option<Cube<S, N>>] {
        &self.b
    }

    pub fn v_sets(&self) -> &[Aabb<S, N>] {
        &self.v
    }

    /// The overlap bound `N` claimed by the construction.
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// Measure of the covered region `sum_t |V_t|`.
    pub fn covered_measure(&self) -> S {
        self.v.iter().fold(S::zero(), |a, v| a + v.volume())
    }

    /// Nodes of the subtree rooted at `t`, `t` first.
    pub fn subtree(&self, t: usize) -> Vec<usize> {
        let mut out = vec![t];
        let mut head = 0;
        while head < out.len() {
            let s = out[head];
            head += 1;
            out.extend_from_slice(&self.children[s]);
        }
        out
    }

    /// Whether `s` lies in the subtree of `t` (`s >= t`).
    pub fn is_descendant(&self, s: usize, t: usize) -> bool {
        let mut cur = Some(s);
        while let Some(c) = cur {
            if c == t {
                return true;
            }
            cur = self.parent[c];
        }
        false
    }

    /// Replaces the transfer cube of `t`; used to build failing examples.
    pub fn set_b(&mut self, t: usize, b: Option<Cube<S, N>>) {
        self.b[t] = b;
    }

    /// JSON export: one record per node plus a summary.
    pub fn to_json(&self, k: Option<f64>, max_eccentricity: Option<f64>) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = (0..self.len())
            .map(|t| {
                let u = &self.u[t];
                serde_json::json!({
                    "id": t,
                    "parent": self.parent[t],
                    "U": {
                        "corner": u.lo.iter().map(|v| v.to_f64()).collect::<Vec<_>>(),
                        "side": (0..N).map(|k| u.extent(k).to_f64()).collect::<Vec<_>>(),
                    },
                    "B": self.b[t].map(|b| serde_json::json!({
                        "corner": b.corner.iter().map(|v| v.to_f64()).collect::<Vec<_>>(),
                        "side": b.side.to_f64(),
                    })),
                    "level": self.depth[t],
                })
            })
            .collect();
        let m = match self.kind {
            CoveringKind::Cube { m } => Some(m),
            CoveringKind::John { .. } => None,
        };
        serde_json::json!({
            "nodes": nodes,
            "summary": {
                "kind": self.kind,
                "N": self.overlap,
                "K": k,
                "m": m,
                "max_eccentricity": max_eccentricity,
            }
        })
    }
}
