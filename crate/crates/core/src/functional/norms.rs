use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

use super::kernel::Weight;
use crate::field::Field;
use crate::scalar::{pairwise_sum, ExactScalar, Real};

/// Gauss points per axis for cell averages of the weight.
const CELL_POINTS: usize = 6;

/// Cell averages of `ω = d_F^{pβ}` by a tensor Gauss rule on every grid cell.
pub fn weight_values<T: Real, const N: usize>(u: &Field<T, N>, p: f64, w: &Weight<N>) -> Vec<f64> {
    let rule: Vec<(f64, f64)> = GaussLegendre::new(CELL_POINTS.try_into().expect("nonzero"))
        .iter()
        .map(|&(x, wt)| (0.5 * x, 0.5 * wt))
        .collect();
    let h = u.grid().h().to_f64();
    let total = CELL_POINTS.pow(N as u32);
    u.grid()
        .midpoints()
        .par_iter()
        .map(|mid| {
            (0..total)
                .map(|mut k| {
                    let mut x = *mid;
                    let mut weight = 1.0;
                    for xi in x.iter_mut() {
                        let (node, wt) = rule[k % CELL_POINTS];
                        k /= CELL_POINTS;
                        *xi += h * node;
                        weight *= wt;
                    }
                    weight * w.eval(p, &x)
                })
                .sum()
        })
        .collect()
}

/// `u_{Ω,ω} = ∫ u ω / ∫ ω` with cell averages of the weight.
pub fn weighted_average<T: Real, const N: usize>(u: &Field<T, N>, p: f64, w: &Weight<N>) -> T {
    let omega = weight_values(u, p, w);
    let num: Vec<T> = u.values().iter().zip(&omega).map(|(&v, &o)| v * T::lit(o)).collect();
    let den: Vec<T> = omega.iter().map(|&o| T::lit(o)).collect();
    pairwise_sum(&num) / pairwise_sum(&den)
}

/// `(∫ |u - c|^p ω)^{1/p}` with `c = center`, or the weighted average when
/// `center` is `None`.
pub fn lp_norm<T: Real, const N: usize>(u: &Field<T, N>, p: f64, w: &Weight<N>, center: Option<T>) -> T {
    let omega = weight_values(u, p, w);
    let c = center.unwrap_or_else(|| weighted_average(u, p, w));
    let pt = T::lit(p);
    let terms: Vec<T> = u
        .values()
        .iter()
        .zip(&omega)
        .map(|(&v, &o)| (v - c).abs().powf(pt) * T::lit(o))
        .collect();
    (pairwise_sum(&terms) * T::lit(u.grid().weight())).powf(T::one() / pt)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::Grid;
    use crate::geometry::{BoundarySet, RectilinearDomain};
    use crate::scalar::Dyadic;

    fn grid(r: u32) -> Arc<Grid<2>> {
        Arc::new(Grid::dyadic(Arc::new(RectilinearDomain::square(Dyadic::ONE).unwrap()), r).unwrap())
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = grid(4);
        let f = Arc::new(BoundarySet::corner(g.domain()));
        let u = Field::constant(Arc::clone(&g), 2.75);
        for w in [Weight::unweighted(), Weight::new(1.0, Arc::clone(&f)), Weight::new(2.5, f)] {
            assert!((weighted_average(&u, 2.0, &w) - 2.75f64).abs() < 1e-14);
            assert!(lp_norm(&u, 2.0, &w, None) < 1e-13);
        }
    }

    #[test]
    fn coordinate_average_and_norm() {
        let g = grid(6);
        let u = Field::from_fn(Arc::clone(&g), |x| x[0]);
        assert!((weighted_average(&u, 2.0, &Weight::unweighted()) - 0.5).abs() < 1e-6);
        // Midpoint rule on (x - 1/2)^2 over cells of side h gives 1/12 - h^2/12.
        let h = 1.0 / 64.0;
        let n = lp_norm(&u, 2.0, &Weight::unweighted(), None);
        assert!((n * n - (1.0 / 12.0 - h * h / 12.0)).abs() < 1e-14);
        let fine = Field::from_fn(grid(9), |x| x[0]);
        assert!((lp_norm(&fine, 2.0, &Weight::unweighted(), None) - (1.0f64 / 12.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn homogeneous_and_works_in_f32() {
        let g = grid(3);
        let u = Field::from_fn(Arc::clone(&g), |x| x[0] * x[1]);
        let w = Weight::unweighted();
        let a = lp_norm(&u, 3.0, &w, None);
        assert!((lp_norm(&u.scale(4.0), 3.0, &w, None) - 4.0 * a).abs() < 1e-13);
        let u32f = Field::<f32, 2>::from_fn(g, |x| (x[0] * x[1]) as f32);
        assert!((lp_norm(&u32f, 3.0, &w, None) as f64 - a).abs() < 1e-5);
    }
}
