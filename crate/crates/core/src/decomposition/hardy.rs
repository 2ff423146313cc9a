use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::CoveringGrid;
use crate::error::{FracError, Result};
use crate::field::Field;
use crate::geometry::BoundarySet;
use crate::scalar::pairwise_sum;

/// `(1/|W_t|) ∫_{W_t} |g|` for every node.
pub fn shadow_averages<const N: usize>(cg: &CoveringGrid<N>, g: &[f64]) -> Vec<f64> {
    let w = cg.grid().weight();
    (0..cg.nodes())
        .map(|t| {
            let terms: Vec<f64> = cg.w_fractions(t).iter().map(|&(c, f)| g[c as usize].abs() * f).collect();
            let vol = cg.shadow_volume(t);
            if vol > 0.0 {
                pairwise_sum(&terms) * w / vol
            } else {
                0.0
            }
        })
        .collect()
}

/// `Tg = sum_{t != a} chi_{B_t} (1/|W_t|) ∫_{W_t} |g|`, averaged over each
/// grid cell (cells cut by `∂B_t` carry the exact fraction).
pub fn hardy_apply<const N: usize>(cg: &CoveringGrid<N>, g: &Field<f64, N>) -> Result<Field<f64, N>> {
    cg.check_grid(g)?;
    let avg = shadow_averages(cg, g.values());
    Ok(apply_with_averages(cg, &avg, g))
}

fn apply_with_averages<const N: usize>(cg: &CoveringGrid<N>, avg: &[f64], g: &Field<f64, N>) -> Field<f64, N> {
    let mut out = vec![0.0; g.len()];
    for &t in cg.bfs_order() {
        for &(c, f) in cg.b_fractions(t) {
            out[c as usize] += f * avg[t];
        }
    }
    Field::new(std::sync::Arc::clone(g.grid()), out).expect("same grid")
}

/// Weight `omega = d_F^beta` with the Boman constant used for `C_2`.
#[derive(Clone, Debug)]
pub struct WeightSpec<'a, const N: usize> {
    pub beta: f64,
    pub f: &'a BoundarySet<N>,
    pub k: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HardyProbeReport {
    pub q: f64,
    pub trials: usize,
    pub overlap: usize,
    pub max_ratio: f64,
    pub worst_trial: usize,
    /// `2 (qN/(q-1))^{1/q}`, times `C_2` when weighted.
    pub bound: f64,
    pub c2: f64,
    pub pass: bool,
}

/// Largest observed `||Tg|| / ||g||` in `L^q(omega^{-q})` over random
/// nonnegative fields; `q = f64::INFINITY` selects the sup norm.
///
/// `||Tg||` is integrated over the transfer cubes directly since `Tg` is
/// constant on each (they are disjoint).
pub fn hardy_norm_probe<const N: usize>(
    cg: &CoveringGrid<N>,
    q: f64,
    weight: Option<&WeightSpec<'_, N>>,
    trials: usize,
    seed: u64,
) -> Result<HardyProbeReport> {
    if q.is_nan() || q <= 1.0 {
        return Err(FracError::OutOfRange(format!("q must exceed 1, got {q}")));
    }
    if trials == 0 {
        return Err(FracError::OutOfRange("trials must be at least 1".into()));
    }
    let grid = cg.grid();
    let n_nodes = cg.nodes();
    let omega = |x: &[f64; N]| -> f64 { weight.map_or(1.0, |w| w.f.distance(x).powf(w.beta)) };
    let cell_inv: Vec<f64> = grid.midpoints().iter().map(|x| 1.0 / omega(x)).collect();
    // ∫_{B_t} omega^{-q} (or sup of omega^{-1} for q = ∞) by an 8^n midpoint rule.
    let sub = 8usize;
    let b_weight: Vec<f64> = (0..n_nodes)
        .map(|t| {
            let Some(b) = cg.b_box(t) else { return 0.0 };
            let vol = cg.b_volume(t);
            let mut acc = Vec::with_capacity(sub.pow(N as u32));
            for flat in 0..sub.pow(N as u32) {
                let mut rem = flat;
                let x: [f64; N] = std::array::from_fn(|k| {
                    let i = rem % sub;
                    rem /= sub;
                    b.lo[k] + (i as f64 + 0.5) / sub as f64 * (b.hi[k] - b.lo[k])
                });
                acc.push(1.0 / omega(&x));
            }
            if q.is_infinite() {
                acc.into_iter().fold(0.0, f64::max)
            } else {
                pairwise_sum(&acc.iter().map(|v| v.powf(q)).collect::<Vec<_>>()) * vol / acc.len() as f64
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut worst = 0;
    for trial in 0..trials {
        let g = random_nonnegative(&mut rng, grid.len(), grid.indices(), trial);
        let avg = shadow_averages(cg, &g);
        let (num, den) = if q.is_infinite() {
            let num = (0..n_nodes).map(|t| avg[t] * b_weight[t]).fold(0.0, f64::max);
            let den = g.iter().zip(&cell_inv).map(|(v, w)| v * w).fold(0.0, f64::max);
            (num, den)
        } else {
            let num: Vec<f64> = (0..n_nodes).map(|t| avg[t].powf(q) * b_weight[t]).collect();
            let den: Vec<f64> = g.iter().zip(&cell_inv).map(|(v, w)| (v * w).powf(q)).collect();
            (
                pairwise_sum(&num).powf(1.0 / q),
                (pairwise_sum(&den) * grid.weight()).powf(1.0 / q),
            )
        };
        if den > 0.0 {
            let r = num / den;
            if r > max_ratio {
                max_ratio = r;
                worst = trial;
            }
        }
    }
    let n = cg.overlap() as f64;
    let base = if q.is_infinite() { 2.0 } else { 2.0 * (q * n / (q - 1.0)).powf(1.0 / q) };
    let c2 = weight.map_or(1.0, |w| (3.0 * w.k * (N as f64).sqrt()).powf(w.beta));
    let bound = base * c2;
    Ok(HardyProbeReport {
        q,
        trials,
        overlap: cg.overlap(),
        max_ratio,
        worst_trial: worst,
        bound,
        c2,
        pass: max_ratio <= bound,
    })
}

/// Rotating families of nonnegative test fields: iid uniform, single-cell
/// spikes, box indicators and lognormal noise.
fn random_nonnegative<const N: usize>(rng: &mut ChaCha8Rng, len: usize, idx: &[[i64; N]], trial: usize) -> Vec<f64> {
    match trial % 4 {
        0 => (0..len).map(|_| rng.random::<f64>()).collect(),
        1 => {
            let mut g = vec![0.0; len];
            g[rng.random_range(0..len)] = 1.0;
            g
        }
        2 => {
            let a = idx[rng.random_range(0..len)];
            let b = idx[rng.random_range(0..len)];
            let g: Vec<f64> = idx
                .iter()
                .map(|c| {
                    let inside = (0..N).all(|k| a[k].min(b[k]) <= c[k] && c[k] <= a[k].max(b[k]));
                    if inside {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            g
        }
        _ => (0..len)
            .map(|_| (2.0 * rng.sample::<f64, _>(StandardNormal)).exp())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::covering::{boman_constant, cube_tree_covering_with_m, john_tree_covering, CoveringKind, TreeCovering};
    use crate::field::Grid;
    use crate::geometry::{Aabb, Cube, RectilinearDomain};
    use crate::scalar::{Dyadic, ExactScalar, Rational};
    use crate::whitney::whitney_decompose;

    fn john_unit(g: i32) -> (CoveringGrid<2>, f64, Arc<RectilinearDomain<2>>) {
        let d = Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap());
        let dec = whitney_decompose(&d, g).unwrap();
        let cov = john_tree_covering(&dec, None).unwrap();
        let k = boman_constant(&cov).k_f64();
        let grid = Arc::new(Grid::dyadic(Arc::clone(&d), g as u32).unwrap());
        (CoveringGrid::new(&cov, grid).unwrap(), k, d)
    }

    #[test]
    fn constant_input_gives_indicator_of_transfer_cubes() {
        let (cg, _, _) = john_unit(5);
        let one = Field::constant(Arc::clone(cg.grid()), 1.0);
        let tg = hardy_apply(&cg, &one).unwrap();
        let mut expect = vec![0.0; one.len()];
        for t in 0..cg.nodes() {
            for &(c, f) in cg.b_fractions(t) {
                expect[c as usize] += f;
            }
        }
        for (a, b) in tg.values().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn positive_homogeneity_and_monotonicity() {
        let (cg, _, _) = john_unit(4);
        let grid = Arc::clone(cg.grid());
        let g = Field::from_fn(Arc::clone(&grid), |x| x[0] * x[1]);
        let h = g.map(|v| v + 0.1);
        let tg = hardy_apply(&cg, &g).unwrap();
        let t3 = hardy_apply(&cg, &g.scale(3.0)).unwrap();
        let th = hardy_apply(&cg, &h).unwrap();
        for i in 0..g.len() {
            assert!((t3.values()[i] - 3.0 * tg.values()[i]).abs() <= 1e-12 * t3.values()[i].abs().max(1.0));
            assert!(tg.values()[i] <= th.values()[i] + 1e-15);
        }
    }

    #[test]
    fn two_node_hand_computation() {
        // root U_a = [0,1/2]x[0,1], child U_t = [0,1]x[0,1], V_t = [1/2,1]x[0,1]
        let r = |n, d| Rational::new(n, d);
        let d = Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap());
        let ua = Aabb::new([r(0, 1), r(0, 1)], [r(1, 2), r(1, 1)]);
        let ut = Aabb::new([r(0, 1), r(0, 1)], [r(1, 1), r(1, 1)]);
        let vt = Aabb::new([r(1, 2), r(0, 1)], [r(1, 1), r(1, 1)]);
        let bt = Cube::new([r(1, 4), r(1, 4)], r(1, 4));
        let cov = TreeCovering::from_parts(
            CoveringKind::Cube { m: 2 },
            vec![None, Some(0)],
            vec![ua, ut],
            vec![None, Some(bt)],
            vec![ua, vt],
            2,
        )
        .unwrap();
        let grid = Arc::new(Grid::dyadic(d, 3).unwrap());
        let cg = CoveringGrid::new(&cov, Arc::clone(&grid)).unwrap();
        // g = 1 on U_t \ U_a
        let g = Field::from_fn(Arc::clone(&grid), |x| if x[0] > 0.5 { 1.0 } else { 0.0 });
        let tg = hardy_apply(&cg, &g).unwrap();
        let expected = 0.5 / 1.0;
        for (i, v) in tg.values().iter().enumerate() {
            let x = grid.midpoint(i);
            let in_b = (0.25..0.5).contains(&x[0]) && (0.25..0.5).contains(&x[1]);
            assert!((v - if in_b { expected } else { 0.0 }).abs() < 1e-15);
        }
    }

    #[test]
    fn unweighted_probe_within_bound() {
        let (cg, _, _) = john_unit(5);
        let rep = hardy_norm_probe(&cg, 2.0, None, 200, 11).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.bound - 2.0 * (2.0f64 * 144.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_probe_at_most_one() {
        let (cg, _, _) = john_unit(5);
        let rep = hardy_norm_probe(&cg, f64::INFINITY, None, 200, 5).unwrap();
        assert_eq!(rep.bound, 2.0);
        assert!(rep.max_ratio <= 1.0 + 1e-12, "{rep:?}");
    }

    #[test]
    fn weighted_probe_within_bound() {
        let (cg, k, d) = john_unit(5);
        let f = BoundarySet::corner(&d);
        let w = WeightSpec { beta: 1.0, f: &f, k };
        let rep = hardy_norm_probe(&cg, 2.0, Some(&w), 200, 3).unwrap();
        assert!((rep.c2 - 3.0 * k * 2f64.sqrt()).abs() < 1e-12);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn rejects_small_q() {
        let cov = cube_tree_covering_with_m(&Cube::new([Rational::from_int(0); 2], Rational::from_int(1)), 2).unwrap();
        let d = Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap());
        let cg = CoveringGrid::new(&cov, Arc::new(Grid::dyadic(d, 2).unwrap())).unwrap();
        assert!(hardy_norm_probe(&cg, 1.0, None, 1, 0).is_err());
    }
}
