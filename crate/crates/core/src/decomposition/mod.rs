//! The Hardy-type tree operator and zero-mean decompositions subordinate to
//! a tree covering, evaluated on grid fields.

mod decompose;
mod hardy;

pub use decompose::{orthogonal_decompose, verify_decomposition, DecompositionReport, DecompositionResult, SparsePart};
pub use hardy::{hardy_apply, hardy_norm_probe, shadow_averages, HardyProbeReport, WeightSpec};

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::covering::TreeCovering;
use crate::error::{FracError, Result};
use crate::field::{Field, Grid};
use crate::geometry::{union_volume, Aabb};
use crate::scalar::{ExactScalar, Rational};

/// Exact incidence data between a tree covering and a grid: the node owning
/// each cell and the cell fractions `|X ∩ c| / |c|` for `X = U_t, B_t, W_t`.
#[derive(Clone, Debug)]
pub struct CoveringGrid<const N: usize> {
    grid: Arc<Grid<N>>,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
    overlap: usize,
    base: Vec<Option<usize>>,
    base_cells: Vec<Vec<u32>>,
    u_frac: Vec<Vec<(u32, f64)>>,
    b_frac: Vec<Vec<(u32, f64)>>,
    w_frac: Vec<Vec<(u32, f64)>>,
    w_vol: Vec<f64>,
    b_vol: Vec<f64>,
    b_box: Vec<Option<Aabb<Rational, N>>>,
}

impl<const N: usize> CoveringGrid<N> {
    /// Fails with `IncompatibleGrid` when some grid cell straddles the
    /// boundary of a base cell `V_t`.
    pub fn new<S: ExactScalar>(cov: &TreeCovering<S, N>, grid: Arc<Grid<N>>) -> Result<Self> {
        let len = cov.len();
        let to_r = |b: &Aabb<S, N>| b.map(|v| v.to_rational());
        let u: Vec<Aabb<Rational, N>> = cov.u_sets().iter().map(to_r).collect();
        let v: Vec<Aabb<Rational, N>> = cov.v_sets().iter().map(to_r).collect();
        let b: Vec<Option<Aabb<Rational, N>>> = cov.b_sets().iter().map(|b| b.map(|b| to_r(&b.to_aabb()))).collect();
        let cell_vol = grid.weight_exact();

        let mut base = vec![None; grid.len()];
        let mut base_cells = vec![Vec::new(); len];
        for t in 0..len {
            for c in grid.cells_meeting(&v[t]) {
                let cb = grid.cell_box(c);
                if !v[t].contains(&cb) {
                    return Err(FracError::IncompatibleGrid(format!("cell {c} straddles the boundary of V_{t}")));
                }
                if base[c].replace(t).is_some() {
                    return Err(FracError::IncompatibleGrid(format!("cell {c} lies in two base cells")));
                }
                base_cells[t].push(c as u32);
            }
        }

        let fractions = |boxes: &[Option<Aabb<Rational, N>>]| -> Vec<Vec<(u32, f64)>> {
            boxes
                .par_iter()
                .map(|bx| match bx {
                    None => Vec::new(),
                    Some(bx) => grid
                        .cells_meeting(bx)
                        .into_iter()
                        .filter_map(|c| {
                            let vol = bx.intersection(&grid.cell_box(c))?.volume();
                            (vol > Rational::from_int(0)).then(|| (c as u32, (vol / cell_vol).to_f64()))
                        })
                        .collect(),
                })
                .collect()
        };
        let u_opt: Vec<Option<Aabb<Rational, N>>> = u.iter().copied().map(Some).collect();
        let u_frac = fractions(&u_opt);
        let b_frac = fractions(&b);

        // Euler tour for O(1) descendant tests.
        let mut tin = vec![0usize; len];
        let mut tout = vec![0usize; len];
        let mut clock = 0;
        let mut stack = vec![(cov.root(), false)];
        while let Some((t, done)) = stack.pop() {
            if done {
                tout[t] = clock;
                continue;
            }
            tin[t] = clock;
            clock += 1;
            stack.push((t, true));
            for &c in cov.children(t).iter().rev() {
                stack.push((c, false));
            }
        }
        let mut parent_of = vec![None; len];
        for (t, p) in parent_of.iter_mut().enumerate() {
            *p = cov.parent(t);
        }

        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); grid.len()];
        for (t, list) in u_frac.iter().enumerate() {
            for &(c, _) in list {
                touching[c as usize].push(t);
            }
        }
        let per_cell: Vec<Vec<(usize, Rational)>> = touching
            .par_iter()
            .enumerate()
            .map(|(c, nodes)| {
                if nodes.is_empty() {
                    return Vec::new();
                }
                let cb = grid.cell_box(c);
                let mut ancestors: Vec<usize> = Vec::new();
                for &s in nodes {
                    let mut cur = Some(s);
                    while let Some(a) = cur {
                        ancestors.push(a);
                        cur = parent_of[a];
                    }
                }
                ancestors.sort_unstable();
                ancestors.dedup();
                let mut memo: HashMap<Vec<usize>, Rational> = HashMap::new();
                ancestors
                    .into_iter()
                    .map(|t| {
                        let subset: Vec<usize> = nodes
                            .iter()
                            .copied()
                            .filter(|&s| tin[t] <= tin[s] && tin[s] < tout[t])
                            .collect();
                        let area = *memo.entry(subset.clone()).or_insert_with(|| {
                            let clipped: Vec<Aabb<Rational, N>> =
                                subset.iter().filter_map(|&s| u[s].intersection(&cb)).collect();
                            if clipped.iter().any(|x| *x == cb) {
                                cell_vol
                            } else {
                                union_volume(&clipped)
                            }
                        });
                        (t, area)
                    })
                    .collect()
            })
            .collect();
        let mut w_frac = vec![Vec::new(); len];
        let mut w_exact = vec![Rational::from_int(0); len];
        for (c, list) in per_cell.into_iter().enumerate() {
            for (t, area) in list {
                if area > Rational::from_int(0) {
                    w_frac[t].push((c as u32, (area / cell_vol).to_f64()));
                    w_exact[t] = w_exact[t] + area;
                }
            }
        }

        Ok(CoveringGrid {
            root: cov.root(),
            parent: parent_of,
            children: (0..len).map(|t| cov.children(t).to_vec()).collect(),
            order: cov.bfs_order().to_vec(),
            overlap: cov.overlap(),
            base,
            base_cells,
            u_frac,
            b_frac,
            w_frac,
            w_vol: w_exact.iter().map(|w| w.to_f64()).collect(),
            b_vol: b.iter().map(|b| b.map_or(0.0, |b| b.volume().to_f64())).collect(),
            b_box: b,
            grid,
        })
    }

    pub fn grid(&self) -> &Arc<Grid<N>> {
        &self.grid
    }

    pub fn nodes(&self) -> usize {
        self.parent.len()
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

    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// Node whose base cell contains grid cell `c`; `None` on the collar.
    pub fn base(&self, c: usize) -> Option<usize> {
        self.base[c]
    }

    pub fn base_cells(&self, t: usize) -> &[u32] {
        &self.base_cells[t]
    }

    pub fn u_fractions(&self, t: usize) -> &[(u32, f64)] {
        &self.u_frac[t]
    }

    pub fn b_fractions(&self, t: usize) -> &[(u32, f64)] {
        &self.b_frac[t]
    }

    pub fn w_fractions(&self, t: usize) -> &[(u32, f64)] {
        &self.w_frac[t]
    }

    /// `|W_t|` restricted to the grid.
    pub fn shadow_volume(&self, t: usize) -> f64 {
        self.w_vol[t]
    }

    pub fn b_volume(&self, t: usize) -> f64 {
        self.b_vol[t]
    }

    pub fn b_box(&self, t: usize) -> Option<crate::geometry::FBox<N>> {
        self.b_box[t].map(|b| b.to_f64())
    }

    /// Whether grid cell `c` meets `U_t` with positive volume.
    pub fn meets_u(&self, t: usize, c: usize) -> bool {
        self.u_frac[t].binary_search_by_key(&(c as u32), |&(i, _)| i).is_ok()
    }

    pub fn covered_measure(&self) -> f64 {
        self.base.iter().filter(|b| b.is_some()).count() as f64 * self.grid.weight()
    }

    /// Copy of `g` with the collar cells set to zero.
    pub fn restrict(&self, g: &Field<f64, N>) -> Field<f64, N> {
        let mut out = g.clone();
        for (c, v) in out.values_mut().iter_mut().enumerate() {
            if self.base[c].is_none() {
                *v = 0.0;
            }
        }
        out
    }

    pub(crate) fn check_grid(&self, g: &Field<f64, N>) -> Result<()> {
        if Arc::ptr_eq(&self.grid, g.grid()) || *self.grid == **g.grid() {
            Ok(())
        } else {
            Err(FracError::IncompatibleGrid("field lives on a different grid".into()))
        }
    }
}
