use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ConstantBreakdown;
use crate::error::{FracError, Result};
use crate::field::{Field, FieldFamily, Grid};
use crate::functional::{lp_norm, GagliardoForm, KernelSpec, QuadratureOptions};
use crate::geometry::{BoundarySet, RectilinearDomain};
use crate::scalar::{Dyadic, Rational};

/// How the sharp constant is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EstimateMethod {
    /// Largest generalized eigenvalue of the discrete quadratic forms (`p = 2`).
    Rayleigh,
    /// Best of `budget` random fields, then `budget` rounds of single-cell
    /// perturbations accepted when the ratio grows.
    RandomSearch { budget: usize },
}

/// Empirical lower bound on the best constant, with the field attaining it.
#[derive(Clone, Debug)]
pub struct SharpEstimate<const N: usize> {
    pub estimate: f64,
    pub method: EstimateMethod,
    pub certificate: Field<f64, N>,
    /// Relative eigen-residual (Rayleigh only).
    pub residual: Option<f64>,
    pub iterations: usize,
}

impl<const N: usize> SharpEstimate<N> {
    pub fn label(&self) -> &'static str {
        "lower bound"
    }
}

/// Lower bound on `sup_u ‖u - u_{Ω,ω}‖ / (form(u))^{1/p}` over grid fields.
pub fn sharp_constant_estimate<const N: usize>(
    form: &GagliardoForm<N>,
    kernel: &KernelSpec<N>,
    method: EstimateMethod,
    seed: u64,
) -> Result<SharpEstimate<N>> {
    match method {
        EstimateMethod::Rayleigh => rayleigh(form, kernel, seed),
        EstimateMethod::RandomSearch { budget } => random_search(form, kernel, budget.max(1), seed),
    }
}

/// With masses `m_c = ω_c h^n`, `lhs² = Σ m_c (u_c - ū)²` and
/// `rhs² = uᵀ L u` for the pair Laplacian `L`. In `v = M^{1/2} u` the ratio
/// is `‖v‖² / vᵀ C v` on the complement of `v_0 = M^{1/2} 1`, with
/// `C = M^{-1/2} L M^{-1/2}`; the constants direction is deflated by adding
/// `σ v_0 v_0ᵀ` and the smallest eigenvalue comes from inverse iteration.
fn rayleigh<const N: usize>(form: &GagliardoForm<N>, kernel: &KernelSpec<N>, seed: u64) -> Result<SharpEstimate<N>> {
    if form.p() != 2.0 {
        return Err(FracError::OutOfRange(format!("the Rayleigh estimate needs p = 2, got {}", form.p())));
    }
    let grid = form.grid();
    let n = grid.len();
    let weight = kernel.weight();
    let mass: Vec<f64> = grid.midpoints().iter().map(|x| weight.eval(2.0, x) * grid.weight()).collect();
    let sq: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();

    let mut c = DMatrix::<f64>::zeros(n, n);
    for &(i, j, w) in form.pairs() {
        let (i, j) = (i as usize, j as usize);
        c[(i, i)] += w / mass[i];
        c[(j, j)] += w / mass[j];
        let off = w / (sq[i] * sq[j]);
        c[(i, j)] -= off;
        c[(j, i)] -= off;
    }
    let c0 = c.clone();
    let v0 = DVector::from_vec(sq.clone()).normalize();
    let sigma = 2.0 * (0..n).map(|i| c[(i, i)]).fold(0.0, f64::max);
    if !(sigma > 0.0) {
        return Err(FracError::SingularForm {
            null_vectors: vec![vec![1.0; n]],
        });
    }
    c.ger(sigma, &v0, &v0, 1.0);
    let singular = |y: &DVector<f64>| FracError::SingularForm {
        null_vectors: vec![y.iter().zip(&sq).map(|(v, s)| v / s).collect()],
    };
    let chol = c.cholesky().ok_or_else(|| {
        let eig = c0.clone().symmetric_eigen();
        let (imin, _) = eig.eigenvalues.argmin();
        singular(&eig.eigenvectors.column(imin).into_owned())
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let project = |y: &mut DVector<f64>| {
        let d = v0.dot(y);
        y.axpy(-d, &v0, 1.0);
    };
    project(&mut y);
    y.normalize_mut();
    let mut mu = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=2000 {
        let mut next = chol.solve(&y);
        project(&mut next);
        y = next.normalize();
        let cy = &c0 * &y;
        mu = y.dot(&cy);
        residual = (cy - &y * mu).norm() / mu.abs().max(f64::MIN_POSITIVE);
        if mu <= 1e-12 * sigma {
            return Err(singular(&y));
        }
        if residual <= 1e-8 {
            let values: Vec<f64> = y.iter().zip(&sq).map(|(v, s)| v / s).collect();
            return Ok(SharpEstimate {
                estimate: mu.recip().sqrt(),
                method: EstimateMethod::Rayleigh,
                certificate: Field::new(Arc::clone(grid), values)?,
                residual: Some(residual),
                iterations: it,
            });
        }
    }
    let _ = mu;
    Err(FracError::NoConvergence(residual))
}

fn random_search<const N: usize>(
    form: &GagliardoForm<N>,
    kernel: &KernelSpec<N>,
    budget: usize,
    seed: u64,
) -> Result<SharpEstimate<N>> {
    let grid = form.grid();
    let p = form.p();
    let weight = kernel.weight();
    let ratio = |u: &Field<f64, N>, rhs: f64| -> f64 {
        if rhs > 0.0 {
            lp_norm(u, p, &weight, None) / rhs.powf(1.0 / p)
        } else {
            0.0
        }
    };
    let mut best: Option<(f64, Field<f64, N>, f64)> = None;
    for i in 0..budget as u64 {
        let u = FieldFamily::RandomBandLimited {
            seed: seed.wrapping_add(i),
            max_freq: 4,
        }
        .sample(Arc::clone(grid));
        let rhs = form.evaluate(&u)?;
        let r = ratio(&u, rhs);
        if best.as_ref().is_none_or(|b| r > b.0) {
            best = Some((r, u, rhs));
        }
    }
    let (mut r_best, mut u, mut rhs) = best.expect("budget is positive");

    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); grid.len()];
    for &(i, j, w) in form.pairs() {
        adj[i as usize].push((j as usize, w));
        adj[j as usize].push((i as usize, w));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let spread = {
        let m = u.mean();
        (u.values().iter().map(|v| (v - m).powi(2)).sum::<f64>() / u.len() as f64).sqrt()
    };
    for _ in 0..budget {
        let c = rng.random_range(0..grid.len());
        let old = u.values()[c];
        let new = old + 0.25 * spread * rng.sample::<f64, _>(StandardNormal);
        let delta: f64 = adj[c]
            .iter()
            .map(|&(o, w)| {
                let uo = u.values()[o];
                w * ((new - uo).abs().powf(p) - (old - uo).abs().powf(p))
            })
            .sum();
        u.values_mut()[c] = new;
        let candidate_rhs = (rhs + delta).max(0.0);
        let r = ratio(&u, candidate_rhs);
        if r > r_best {
            r_best = r;
            rhs = candidate_rhs;
        } else {
            u.values_mut()[c] = old;
        }
    }
    // Re-score from scratch so the estimate matches the certificate exactly.
    let rhs = form.evaluate(&u)?;
    Ok(SharpEstimate {
        estimate: ratio(&u, rhs),
        method: EstimateMethod::RandomSearch { budget },
        certificate: u,
        residual: None,
        iterations: budget,
    })
}

pub const TAU_CSV_HEADER: &str = "tau,theoretical,empirical,slack";

/// One row of a `τ` sweep; `slack = theoretical / empirical`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauRow {
    pub tau: f64,
    pub theoretical: f64,
    pub empirical: f64,
    pub slack: f64,
}

/// Theoretical constant `2·C0·C1` and empirical estimate for the main
/// kernel at each `τ`.
#[allow(clippy::too_many_arguments)]
pub fn tau_sweep<const N: usize>(
    grid: &Arc<Grid<N>>,
    p: f64,
    s: f64,
    beta: f64,
    f: &Arc<BoundarySet<N>>,
    taus: &[f64],
    k: f64,
    method: EstimateMethod,
    options: QuadratureOptions,
    seed: u64,
) -> Result<Vec<TauRow>> {
    taus.iter()
        .map(|&tau| {
            let theoretical = ConstantBreakdown::new(N, p, s, tau, beta, k)?.total;
            let kernel = KernelSpec::WeightedMain {
                s,
                tau,
                beta,
                f: Arc::clone(f),
            };
            let form = GagliardoForm::assemble(grid, &kernel, p, options)?;
            let empirical = sharp_constant_estimate(&form, &kernel, method, seed)?.estimate;
            Ok(TauRow {
                tau,
                theoretical,
                empirical,
                slack: theoretical / empirical,
            })
        })
        .collect()
}

pub fn write_tau_csv<W: Write>(out: W, rows: &[TauRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TAU_CSV_HEADER.split(','))
        .map_err(|e| FracError::Parse(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| FracError::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub const ROOMS_CSV_HEADER: &str = "j,width,cells,estimate,growth";

pub fn write_rooms_csv<W: Write>(out: W, rows: &[RoomsRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(ROOMS_CSV_HEADER.split(','))
        .map_err(|e| FracError::Parse(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| FracError::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// One domain of the rooms-and-corridors probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomsRow {
    pub j: u32,
    pub width: f64,
    pub cells: usize,
    pub estimate: f64,
    /// Estimate divided by the previous row's estimate.
    pub growth: Option<f64>,
}

/// Sharp-constant estimates for the ball kernel on `k` rooms joined by
/// corridors of width `2^{-j}`, on a grid of spacing `h`.
#[allow(clippy::too_many_arguments)]
pub fn rooms_probe(
    k: usize,
    js: &[u32],
    corridor_length: Dyadic,
    h: Rational,
    p: f64,
    s: f64,
    tau: f64,
    method: EstimateMethod,
    options: QuadratureOptions,
    seed: u64,
) -> Result<Vec<RoomsRow>> {
    let mut rows: Vec<RoomsRow> = Vec::new();
    for &j in js {
        let width = Dyadic::pow2(-(j as i32));
        let domain = Arc::new(RectilinearDomain::rooms_and_corridors(k, &vec![width; k - 1], corridor_length)?);
        let grid = Arc::new(Grid::with_spacing(domain, h)?);
        let kernel = KernelSpec::TauBall { s, tau };
        let form = GagliardoForm::assemble(&grid, &kernel, p, options)?;
        let estimate = sharp_constant_estimate(&form, &kernel, method, seed)?.estimate;
        let growth = rows.last().map(|r| estimate / r.estimate);
        rows.push(RoomsRow {
            j,
            width: width.to_f64(),
            cells: grid.len(),
            estimate,
            growth,
        });
    }
    Ok(rows)
}
