//! Exact-kernel double integrals over pairs of unit squares.

use std::f64::consts::FRAC_PI_2;

use gauss_quad::legendre::GaussLegendre;

/// `∫_{[0,1]²} ∫_{o + [0,1]²} |x - y|^{-2-a} dy dx` for a nonzero integer
/// offset `o`.
///
/// The difference `z = y - x` has density `Π_k (1 - |z_k - o_k|)_+`, so the
/// integral is `∫ |z|^{-2-a} Π_k (1 - |z_k - o_k|)_+ dz`. In polar
/// coordinates the radial integral is closed form on each piece where the
/// density is a quadratic in `r`; the angular integral is done numerically
/// between the angles of the lattice points `o + {-1, 0, 1}²`, where the
/// integrand is smooth. Returns infinity when the pair touches and `a ≥ 1`.
pub fn unit_pair_integral_2d(o: [i64; 2], a: f64) -> f64 {
    let (mut u, mut v) = (o[0].abs(), o[1].abs());
    if u < v {
        std::mem::swap(&mut u, &mut v);
    }
    assert!(u > 0, "offset must be nonzero");
    if u == 1 && a >= 1.0 {
        return f64::INFINITY;
    }
    let o = [u as f64, v as f64];

    let cuts = angle_cuts(o);
    let scale = (o[0] * o[0] + o[1] * o[1]).sqrt().powf(-2.0 - a);
    cuts.windows(2)
        .map(|w| quadrature::integrate(|t| radial_part(o, a, t), w[0], w[1], 1e-15 * scale).integral)
        .sum()
}

/// `∫_{σ[0,1]²} ∫_{σ(o + [0,1]²)} S(|x - y|) dy dx` for a radial profile
/// `S` that is smooth away from the radii in `kinks`. `S` must be integrable
/// against `r dr` at the origin when the pair touches.
pub fn pair_integral_2d(o: [i64; 2], sigma: f64, profile: &dyn Fn(f64) -> f64, kinks: &[f64]) -> f64 {
    pair_integral_within_2d(o, sigma, profile, kinks, &[]).1
}

/// The pair integral restricted to `|x - y| < R` for each `R` in the
/// ascending list `radii`, together with the unrestricted value.
///
/// With `Θ(r)` the integral of the tent density `Π_k (1 - |z_k - o_k|)_+`
/// over the circle of radius `r`, the pair integral is
/// `σ⁴ ∫ S(σ r) r Θ(r) dr`. `Θ` is closed form; the radial integral is
/// numeric on the pieces between the radii where `Θ` or `S` is not smooth.
pub fn pair_integral_within_2d(
    o: [i64; 2],
    sigma: f64,
    profile: &dyn Fn(f64) -> f64,
    kinks: &[f64],
    radii: &[f64],
) -> (Vec<f64>, f64) {
    assert!(o != [0, 0], "offset must be nonzero");
    let o = [o[0].abs() as f64, o[1].abs() as f64];
    let r_max = ((o[0] + 1.0).powi(2) + (o[1] + 1.0).powi(2)).sqrt();
    let mut bps = vec![0.0, r_max];
    for i in -1..=1 {
        bps.push((o[0] + i as f64).abs());
        bps.push((o[1] + i as f64).abs());
        for j in -1..=1 {
            bps.push((o[0] + i as f64).hypot(o[1] + j as f64));
        }
    }
    bps.extend(kinks.iter().chain(radii).map(|k| k / sigma));
    bps.retain(|&r| (0.0..=r_max).contains(&r));
    bps.sort_by(|x, y| x.total_cmp(y));
    bps.dedup();

    let g = |r: f64| if r <= 0.0 { 0.0 } else { r * profile(sigma * r) * circle_measure(o, r) };
    let scale = sigma.powi(4);
    let mut within = Vec::with_capacity(radii.len());
    let mut next = radii.iter().peekable();
    let mut total = 0.0;
    for w in bps.windows(2) {
        while let Some(&&radius) = next.peek() {
            if radius / sigma > w[0] {
                break;
            }
            within.push(scale * total);
            next.next();
        }
        total += if w[0] == 0.0 {
            graded(&g, w[1])
        } else {
            let size = g(0.5 * (w[0] + w[1])).abs() * (w[1] - w[0]);
            quadrature::integrate(g, w[0], w[1], 1e-15 * size.max(f64::MIN_POSITIVE)).integral
        };
    }
    within.extend(next.map(|_| scale * total));
    (within, scale * total)
}

/// `∫_{-π}^{π} Π_k (1 - |r e_k(θ) - o_k|)_+ dθ`, with each factor linear in
/// `cos θ` or `sin θ` between the angles where the circle crosses the lines
/// `z_k = o_k + {-1, 0, 1}`.
fn circle_measure(o: [f64; 2], r: f64) -> f64 {
    use std::f64::consts::PI;
    let mut cuts = vec![-PI, PI];
    for k in 0..2 {
        for c in [o[k] - 1.0, o[k], o[k] + 1.0] {
            if c.abs() < r {
                if k == 0 {
                    let t = (c / r).acos();
                    cuts.extend([t, -t]);
                } else {
                    let t = (c / r).asin();
                    cuts.extend([t, if t >= 0.0 { PI - t } else { -PI - t }]);
                }
            }
        }
    }
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (t1, t2) = (w[0], w[1]);
        if t2 <= t1 {
            continue;
        }
        let tm = 0.5 * (t1 + t2);
        let e = [tm.cos(), tm.sin()];
        let mut lin = [(0.0, 0.0); 2];
        let mut zero = false;
        for k in 0..2 {
            lin[k] = if r * e[k] < o[k] { (1.0 - o[k], r) } else { (1.0 + o[k], -r) };
            if lin[k].0 + lin[k].1 * e[k] <= 0.0 {
                zero = true;
                break;
            }
        }
        if zero {
            continue;
        }
        let ((a0, b0), (a1, b1)) = (lin[0], lin[1]);
        let (c1, c2, s1, s2) = (t1.cos(), t2.cos(), t1.sin(), t2.sin());
        total += a0 * a1 * (t2 - t1) + a0 * b1 * (c1 - c2) + b0 * a1 * (s2 - s1) + 0.5 * b0 * b1 * (s2 * s2 - s1 * s1);
    }
    total
}

fn angle_cuts(o: [f64; 2]) -> Vec<f64> {
    let mut cuts = vec![-FRAC_PI_2, 0.0, FRAC_PI_2];
    for i in -1..=1 {
        for j in -1..=1 {
            let (z1, z2) = (o[0] + i as f64, o[1] + j as f64);
            if z1 != 0.0 || z2 != 0.0 {
                let t = z2.atan2(z1);
                if (-FRAC_PI_2..=FRAC_PI_2).contains(&t) {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    cuts
}

/// Radii along direction `e` where the tent density changes piece.
fn tent_breaks(o: [f64; 2], e: [f64; 2]) -> Vec<f64> {
    let mut bps = vec![0.0];
    for k in 0..2 {
        if e[k] != 0.0 {
            for c in [o[k] - 1.0, o[k], o[k] + 1.0] {
                let r = c / e[k];
                if r > 0.0 {
                    bps.push(r);
                }
            }
        }
    }
    bps.sort_by(|x, y| x.total_cmp(y));
    bps.dedup();
    bps
}

thread_local! {
    static RULE: Vec<(f64, f64)> = GaussLegendre::new(12.try_into().expect("nonzero")).iter().map(|&(x, w)| (x, w)).collect();
}

fn legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    RULE.with(|rule| rule.iter().map(|&(x, w)| 0.5 * (b - a) * w * f(a + 0.5 * (b - a) * (x + 1.0))).sum())
}

/// `∫_0^b f` for `f` singular at the origin: Gauss–Legendre on the dyadic
/// intervals `[b 2^{-j-1}, b 2^{-j}]`, with the remainder summed as a
/// geometric series once the terms are negligible.
fn graded(f: &dyn Fn(f64) -> f64, b: f64) -> f64 {
    {
        let mut total = 0.0;
        let mut prev = f64::NAN;
        let mut hi = b;
        while hi > 1e-280 {
            let lo = 0.5 * hi;
            let piece = legendre(f, lo, hi);
            total += piece;
            let q = piece / prev;
            prev = piece;
            hi = lo;
            if piece.abs() <= 1e-15 * total.abs() {
                if q > 0.0 && q < 1.0 {
                    total += piece * q / (1.0 - q);
                }
                break;
            }
        }
        total
    }
}

/// `∫_0^∞ r^{-1-a} Π_k (1 - |r e_k - o_k|)_+ dr` along direction `θ`.
fn radial_part(o: [f64; 2], a: f64, theta: f64) -> f64 {
    let e = [theta.cos(), theta.sin()];
    let bps = tent_breaks(o, e);

    let mut total = 0.0;
    for w in bps.windows(2) {
        let (ra, rb) = (w[0], w[1]);
        let rm = 0.5 * (ra + rb);
        let mut lin = [(0.0, 0.0); 2];
        let mut zero = false;
        for k in 0..2 {
            let dev = rm * e[k] - o[k];
            if dev.abs() >= 1.0 {
                zero = true;
                break;
            }
            lin[k] = if dev >= 0.0 { (1.0 + o[k], -e[k]) } else { (1.0 - o[k], e[k]) };
        }
        if zero {
            continue;
        }
        let (a1, b1) = lin[0];
        let (a2, b2) = lin[1];
        let coeffs = [a1 * a2, a1 * b2 + a2 * b1, b1 * b2];
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let ex = j as f64 - a;
            let piece = if ra == 0.0 {
                if ex <= 0.0 {
                    return f64::INFINITY;
                }
                rb.powf(ex) / ex
            } else if ex == 0.0 {
                (rb / ra).ln()
            } else {
                (rb.powf(ex) - ra.powf(ex)) / ex
            };
            total += c * piece;
        }
    }
    total
}
