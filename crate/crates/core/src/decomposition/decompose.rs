use std::sync::Arc;

use serde::Serialize;

use super::hardy::hardy_apply;
use super::CoveringGrid;
use crate::error::{FracError, Result};
use crate::field::{Field, Grid};
use crate::report::{all_pass, PropertyCheck};
use crate::scalar::compensated_sum;

/// Values of one part `g_t` on the cells of its support, sorted by cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SparsePart {
    pub cells: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparsePart {
    fn push(&mut self, c: u32, v: f64) {
        match self.cells.binary_search(&c) {
            Ok(i) => self.values[i] += v,
            Err(i) => {
                self.cells.insert(i, c);
                self.values.insert(i, v);
            }
        }
    }

    pub fn integral(&self, weight: f64) -> f64 {
        compensated_sum(self.values.iter().copied()) * weight
    }

    pub fn l1(&self, weight: f64) -> f64 {
        compensated_sum(self.values.iter().map(|v| v.abs())) * weight
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionResult<const N: usize> {
    pub grid: Arc<Grid<N>>,
    /// Nonzero parts `(t, g_t)` in node order.
    pub parts: Vec<(usize, SparsePart)>,
    /// Transferred masses `S_t`.
    pub transfer_mass: Vec<f64>,
    /// Residual mean subtracted on the covered region before decomposing.
    pub mean_shift: f64,
}

impl<const N: usize> DecompositionResult<N> {
    pub fn part(&self, t: usize) -> Option<&SparsePart> {
        self.parts
            .binary_search_by_key(&t, |(s, _)| *s)
            .ok()
            .map(|i| &self.parts[i].1)
    }

    pub fn dense(&self, t: usize) -> Field<f64, N> {
        let mut v = vec![0.0; self.grid.len()];
        if let Some(p) = self.part(t) {
            for (&c, &x) in p.cells.iter().zip(&p.values) {
                v[c as usize] = x;
            }
        }
        Field::new(Arc::clone(&self.grid), v).expect("grid length")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "subdivisions": self.grid.subdivisions(),
            "mean_shift": self.mean_shift,
            "parts": self.parts.iter().map(|(t, p)| serde_json::json!({
                "node": t,
                "cells": p.cells,
                "values": p.values,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Decomposes a zero-mean `g` into parts `g_t` supported in `U_t`.
///
/// With `S_t` the mass of `g` on the base cells of the subtree of `t`,
/// `g_t = g chi_{V_t} - S_t chi_{B_t}/|B_t| + sum_{s child of t} S_s chi_{B_s}/|B_s|`
/// (no `B` term at the root). Each part has zero mean and the transfers
/// telescope, so the parts sum to `g`.
pub fn orthogonal_decompose<const N: usize>(cg: &CoveringGrid<N>, g: &Field<f64, N>) -> Result<DecompositionResult<N>> {
    cg.check_grid(g)?;
    let grid = cg.grid();
    let w = grid.weight();
    let vals = g.values();
    if let Some(c) = (0..vals.len()).find(|&c| cg.base(c).is_none() && vals[c] != 0.0) {
        return Err(FracError::IncompatibleGrid(format!(
            "field is nonzero on cell {c} outside the covered region"
        )));
    }
    let max = g.max_abs();
    let mean = compensated_sum(vals.iter().copied()) * w;
    let measure = grid.measure();
    let tolerance = 1e-12 * max * measure;
    if mean.abs() > tolerance {
        return Err(FracError::NonZeroMean {
            mean: mean.abs(),
            tolerance,
        });
    }
    let shift = mean / cg.covered_measure();
    let gv: Vec<f64> = (0..vals.len())
        .map(|c| if cg.base(c).is_some() { vals[c] - shift } else { 0.0 })
        .collect();

    let n = cg.nodes();
    let mut mass = vec![0.0; n];
    for (t, m) in mass.iter_mut().enumerate() {
        *m = compensated_sum(cg.base_cells(t).iter().map(|&c| gv[c as usize])) * w;
    }
    for &t in cg.bfs_order().iter().rev() {
        if let Some(p) = cg.parent(t) {
            mass[p] += mass[t];
        }
    }

    let mut parts = Vec::new();
    for t in 0..n {
        let mut part = SparsePart::default();
        for &c in cg.base_cells(t) {
            part.push(c, gv[c as usize]);
        }
        if cg.parent(t).is_some() {
            let density = mass[t] / cg.b_volume(t);
            for &(c, f) in cg.b_fractions(t) {
                part.push(c, -density * f);
            }
        }
        for &s in cg.children(t) {
            let density = mass[s] / cg.b_volume(s);
            for &(c, f) in cg.b_fractions(s) {
                part.push(c, density * f);
            }
        }
        if part.values.iter().any(|&v| v != 0.0) {
            parts.push((t, part));
        }
    }
    let root = cg.root();
    mass[root] = 0.0;
    Ok(DecompositionResult {
        grid: Arc::clone(grid),
        parts,
        transfer_mass: mass,
        mean_shift: shift,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub parts: usize,
    pub reconstruction: PropertyCheck,
    pub support: PropertyCheck,
    pub zero_mean: PropertyCheck,
    pub pointwise_bound: PropertyCheck,
    pub max_reconstruction_error: f64,
    pub max_relative_mean: f64,
    /// `max (|g_t| - bound)` over all parts and cells; `<= 0` when the
    /// pointwise bounds hold.
    pub worst_bound_slack: f64,
    pub pass: bool,
}

/// Cellwise checks of `sum_t g_t = g`, `supp g_t ⊆ U_t`, zero means, and
/// `|g_t| <= |g| + (|W_s|/|B_s|) Tg` on `B_s` for `s = t` or `s_p = t`,
/// `|g_t| <= |g|` elsewhere.
pub fn verify_decomposition<const N: usize>(
    cg: &CoveringGrid<N>,
    g: &Field<f64, N>,
    res: &DecompositionResult<N>,
) -> DecompositionReport {
    let w = cg.grid().weight();
    let gv: Vec<f64> = g
        .values()
        .iter()
        .enumerate()
        .map(|(c, &v)| if cg.base(c).is_some() { v - res.mean_shift } else { v })
        .collect();
    let gmax = gv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = gmax.max(f64::MIN_POSITIVE);

    let mut contributions: Vec<Vec<f64>> = vec![Vec::new(); gv.len()];
    for (_, p) in &res.parts {
        for (&c, &v) in p.cells.iter().zip(&p.values) {
            contributions[c as usize].push(v);
        }
    }
    let mut recon_bad = Vec::new();
    let mut recon_err: f64 = 0.0;
    for (c, list) in contributions.iter().enumerate() {
        let e = (compensated_sum(list.iter().copied()) - gv[c]).abs();
        recon_err = recon_err.max(e);
        if e > 1e-12 * scale {
            recon_bad.push(c);
        }
    }
    let reconstruction = PropertyCheck::new(
        "reconstruction",
        recon_bad,
        format!("max |sum g_t - g| = {recon_err:e}, tolerance {:e}", 1e-12 * scale),
    );

    let mut support_bad = Vec::new();
    let mut mean_bad = Vec::new();
    let mut max_rel_mean: f64 = 0.0;
    for (t, p) in &res.parts {
        let leaked: Vec<usize> = p
            .cells
            .iter()
            .zip(&p.values)
            .filter(|&(&c, &v)| v != 0.0 && !cg.meets_u(*t, c as usize))
            .map(|(&c, _)| c as usize)
            .collect();
        support_bad.extend(leaked);
        let l1 = p.l1(w);
        if l1 > 0.0 {
            let rel = p.integral(w).abs() / l1;
            max_rel_mean = max_rel_mean.max(rel);
            if rel > 1e-12 {
                mean_bad.push(*t);
            }
        }
    }
    support_bad.sort_unstable();
    support_bad.dedup();
    let support = PropertyCheck::new("support", support_bad, "every part vanishes off U_t");
    let zero_mean = PropertyCheck::new(
        "zero_mean",
        mean_bad,
        format!("max |∫ g_t| / ∫ |g_t| = {max_rel_mean:e}"),
    );

    let gf = Field::new(Arc::clone(cg.grid()), gv.clone()).expect("grid length");
    let tg = hardy_apply(cg, &gf).expect("same grid");
    let ecc = |s: usize| cg.shadow_volume(s) / cg.b_volume(s);
    let mut bound_bad = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for (t, p) in &res.parts {
        let mut ratio_at = std::collections::HashMap::<u32, f64>::new();
        let own = cg.parent(*t).map(|_| *t);
        for s in own.into_iter().chain(cg.children(*t).iter().copied()) {
            for &(c, _) in cg.b_fractions(s) {
                let e = ratio_at.entry(c).or_insert(0.0);
                *e = e.max(ecc(s));
            }
        }
        for (&c, &v) in p.cells.iter().zip(&p.values) {
            let ratio = ratio_at.get(&c).copied().unwrap_or(0.0);
            let bound = gv[c as usize].abs() + ratio * tg.values()[c as usize];
            let slack = v.abs() - bound;
            worst = worst.max(slack);
            if slack > 1e-12 * (scale + bound) {
                bound_bad.push(c as usize);
            }
        }
    }
    bound_bad.sort_unstable();
    bound_bad.dedup();
    let pointwise_bound = PropertyCheck::new(
        "pointwise_bound",
        bound_bad,
        format!("max (|g_t| - bound) = {worst:e}"),
    );

    let pass = all_pass(&[&reconstruction, &support, &zero_mean, &pointwise_bound]);
    DecompositionReport {
        parts: res.parts.len(),
        reconstruction,
        support,
        zero_mean,
        pointwise_bound,
        max_reconstruction_error: recon_err,
        max_relative_mean: max_rel_mean,
        worst_bound_slack: if res.parts.is_empty() { 0.0 } else { worst },
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{cube_tree_covering_with_m, john_tree_covering, CoveringKind, TreeCovering};
    use crate::field::FieldFamily;
    use crate::geometry::{Aabb, Cube, RectilinearDomain};
    use crate::scalar::{Dyadic, ExactScalar, Rational};
    use crate::whitney::whitney_decompose;

    fn cube_setup() -> CoveringGrid<2> {
        let d = Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap());
        let grid = Arc::new(Grid::dyadic(d, 5).unwrap());
        let cov = cube_tree_covering_with_m(&Cube::new([Rational::from_int(0); 2], Rational::from_int(1)), 4).unwrap();
        CoveringGrid::new(&cov, grid).unwrap()
    }

    #[test]
    fn zero_field_has_no_parts() {
        let cg = cube_setup();
        let g = Field::zeros(Arc::clone(cg.grid()));
        let res = orthogonal_decompose(&cg, &g).unwrap();
        assert!(res.parts.is_empty());
        assert!(verify_decomposition(&cg, &g, &res).pass);
    }

    #[test]
    fn random_zero_mean_fields_pass() {
        let cg = cube_setup();
        for seed in 0..10 {
            let g = FieldFamily::RandomBandLimited { seed, max_freq: 5 }.sample(Arc::clone(cg.grid())).centered();
            let res = orthogonal_decompose(&cg, &g).unwrap();
            let rep = verify_decomposition(&cg, &g, &res);
            assert!(rep.pass, "{rep:#?}");
        }
    }

    #[test]
    fn two_node_hand_computation() {
        let r = |n, d| Rational::new(n, d);
        let d = Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap());
        let va = Aabb::new([r(0, 1), r(0, 1)], [r(1, 2), r(1, 1)]);
        let vt = Aabb::new([r(1, 2), r(0, 1)], [r(1, 1), r(1, 1)]);
        let ut = Aabb::new([r(0, 1), r(0, 1)], [r(1, 1), r(1, 1)]);
        let bt = Cube::new([r(1, 4), r(1, 4)], r(1, 4));
        let cov = TreeCovering::from_parts(
            CoveringKind::Cube { m: 2 },
            vec![None, Some(0)],
            vec![va, ut],
            vec![None, Some(bt)],
            vec![va, vt],
            2,
        )
        .unwrap();
        let grid = Arc::new(Grid::dyadic(d, 3).unwrap());
        let cg = CoveringGrid::new(&cov, Arc::clone(&grid)).unwrap();
        // g = chi_{V_t} - (|V_t|/|V_a|) chi_{V_a}
        let g = Field::from_fn(Arc::clone(&grid), |x| if x[0] > 0.5 { 1.0 } else { -1.0 });
        let res = orthogonal_decompose(&cg, &g).unwrap();
        assert!((res.transfer_mass[1] - 0.5).abs() < 1e-15);
        let bt_density = 0.5 / (1.0 / 16.0);
        let gt = res.dense(1);
        let ga = res.dense(0);
        for i in 0..grid.len() {
            let x = grid.midpoint(i);
            let in_b = (0.25..0.5).contains(&x[0]) && (0.25..0.5).contains(&x[1]);
            let b = if in_b { bt_density } else { 0.0 };
            let chi_t = if x[0] > 0.5 { 1.0 } else { 0.0 };
            let chi_a = 1.0 - chi_t;
            assert!((gt.values()[i] - (chi_t - b)).abs() < 1e-14);
            assert!((ga.values()[i] - (-chi_a + b)).abs() < 1e-14);
        }
        assert!(gt.integral().abs() < 1e-14);
        assert!(ga.integral().abs() < 1e-14);
        assert!(verify_decomposition(&cg, &g, &res).pass);
    }

    #[test]
    fn rejects_nonzero_mean() {
        let cg = cube_setup();
        let g = Field::constant(Arc::clone(cg.grid()), 1.0);
        assert!(matches!(orthogonal_decompose(&cg, &g), Err(FracError::NonZeroMean { .. })));
    }

    #[test]
    fn flags_shifted_part_and_leaked_support() {
        let cg = cube_setup();
        let g = FieldFamily::Chebyshev(vec![1, 2]).sample(Arc::clone(cg.grid())).centered();
        let res = orthogonal_decompose(&cg, &g).unwrap();

        let mut shifted = res.clone();
        let (t, part) = &mut shifted.parts[3];
        for v in &mut part.values {
            *v += 0.25;
        }
        let t = *t;
        let rep = verify_decomposition(&cg, &g, &shifted);
        assert!(!rep.zero_mean.pass);
        assert!(rep.zero_mean.offenders.contains(&t));

        let mut leaked = res.clone();
        let t = leaked.parts[0].0;
        let outside = (0..cg.grid().len()).find(|&c| !cg.meets_u(t, c)).unwrap();
        leaked.parts[0].1.push(outside as u32, 1.0);
        let rep = verify_decomposition(&cg, &g, &leaked);
        assert!(!rep.support.pass);
        assert!(rep.support.offenders.contains(&outside));
    }

    #[test]
    fn john_covering_decomposition() {
        let d = Arc::new(RectilinearDomain::l_shape().unwrap());
        let dec = whitney_decompose(&d, 5).unwrap();
        let cov = john_tree_covering(&dec, None).unwrap();
        let grid = Arc::new(Grid::dyadic(Arc::clone(&d), 5).unwrap());
        let cg = CoveringGrid::new(&cov, Arc::clone(&grid)).unwrap();
        let raw = cg.restrict(&FieldFamily::RandomBandLimited { seed: 1, max_freq: 4 }.sample(grid));
        let mean = raw.integral() / cg.covered_measure();
        let g = cg.restrict(&raw.shift(-mean));
        let res = orthogonal_decompose(&cg, &g).unwrap();
        let rep = verify_decomposition(&cg, &g, &res);
        assert!(rep.pass, "{rep:#?}");
    }
}
