use super::{CoveringKind, TreeCovering};
use crate::error::{FracError, Result};
use crate::geometry::{Aabb, Cube};
use crate::scalar::{ExactScalar, Rational};

/// The integer `m` with `sqrt(n+3)/tau < m <= 1 + sqrt(n+3)/tau`.
pub fn choose_m(n: usize, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(FracError::OutOfRange(format!("tau must lie in (0, 1), got {tau}")));
    }
    let x = ((n + 3) as f64).sqrt() / tau;
    Ok(x.floor() as usize + 1)
}

/// Tree covering of `q` built from its regular `m^n` partition with
/// `m = choose_m(n, tau)`.
pub fn cube_tree_covering<const N: usize>(q: &Cube<Rational, N>, tau: f64) -> Result<TreeCovering<Rational, N>> {
    cube_tree_covering_with_m(q, choose_m(N, tau)?)
}

/// Tree covering of `q` from the regular `m^n` partition `{A_t}`.
///
/// The root is the corner cube at the lowest corner. The parent of `t` is
/// `t - e_k` for the first axis `k` with `t_k > 0`, so chains to the root have
/// minimal length. `U_t` is the interior of the box `A_t ∪ A_{t_p}`, and `B_t`
/// is the cube of the `3^n` refinement of `A_{t_p}` that is central in every
/// direction except the step axis, where it touches the shared face.
pub fn cube_tree_covering_with_m<const N: usize>(q: &Cube<Rational, N>, m: usize) -> Result<TreeCovering<Rational, N>> {
    if m == 0 {
        return Err(FracError::OutOfRange("m must be positive".into()));
    }
    let count = m.pow(N as u32);
    let step = q.side / Rational::from_int(m as i64);
    let third = step / Rational::from_int(3);
    let index = |flat: usize| -> [usize; N] {
        let mut rem = flat;
        std::array::from_fn(|_| {
            let v = rem % m;
            rem /= m;
            v
        })
    };
    let flat = |t: &[usize; N]| -> usize { (0..N).rev().fold(0, |acc, k| acc * m + t[k]) };
    let cell = |t: &[usize; N]| -> Aabb<Rational, N> {
        let lo: [Rational; N] = std::array::from_fn(|k| q.corner[k] + step * Rational::from_int(t[k] as i64));
        Aabb::new(lo, lo.map(|v| v + step))
    };

    let mut parent = Vec::with_capacity(count);
    let mut u = Vec::with_capacity(count);
    let mut b = Vec::with_capacity(count);
    let mut v = Vec::with_capacity(count);
    for id in 0..count {
        let t = index(id);
        let a = cell(&t);
        v.push(a);
        match (0..N).find(|&k| t[k] > 0) {
            None => {
                parent.push(None);
                u.push(a);
                b.push(None);
            }
            Some(k) => {
                let mut tp = t;
                tp[k] -= 1;
                let ap = cell(&tp);
                parent.push(Some(flat(&tp)));
                u.push(Aabb::new(ap.lo, a.hi));
                let corner: [Rational; N] = std::array::from_fn(|j| {
                    let sub = if j == k { 2 } else { 1 };
                    ap.lo[j] + third * Rational::from_int(sub)
                });
                b.push(Some(Cube::new(corner, third)));
            }
        }
    }
    TreeCovering::from_parts(CoveringKind::Cube { m }, parent, u, b, v, 2 * N)
}
