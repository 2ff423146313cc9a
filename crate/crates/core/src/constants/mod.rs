//! Closed-form constants of the Poincaré inequalities and empirical lower
//! bounds for the sharp constants.

mod estimate;

pub use estimate::{
    rooms_probe, sharp_constant_estimate, tau_sweep, write_rooms_csv, write_tau_csv, EstimateMethod, RoomsRow,
    SharpEstimate, TauRow, ROOMS_CSV_HEADER, TAU_CSV_HEADER,
};

use serde::{Deserialize, Serialize};

use crate::covering::choose_m;
use crate::error::{FracError, Result};
use crate::functional::RhoKind;
use crate::scalar::Real;

fn check_p<T: Real>(p: T) -> Result<()> {
    if p > T::one() && p.is_finite() {
        Ok(())
    } else {
        Err(FracError::OutOfRange(format!("p = {p} must lie in (1, ∞)")))
    }
}

fn check_open_unit<T: Real>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v < T::one() {
        Ok(())
    } else {
        Err(FracError::OutOfRange(format!("{name} = {v} not in (0, 1)")))
    }
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta >= T::zero() && beta.is_finite() {
        Ok(())
    } else {
        Err(FracError::OutOfRange(format!("beta = {beta} must be nonnegative")))
    }
}

fn check_k<T: Real>(k: T) -> Result<()> {
    if k >= T::one() && k.is_finite() {
        Ok(())
    } else {
        Err(FracError::OutOfRange(format!("K = {k} must be at least 1")))
    }
}

/// Conjugate exponent `q = p / (p - 1)`.
pub fn conjugate<T: Real>(p: T) -> Result<T> {
    check_p(p)?;
    Ok(p / (p - T::one()))
}

/// `(2^{2q+2} 3^{nq} n² q/(q-1))^{1/q} (1 + √(n+3))^n`, shared by the cube
/// constants.
fn cube_core<T: Real>(n: usize, q: T) -> T {
    let nf = T::from_usize(n).expect("small integer");
    let two = T::lit(2.0);
    let inner = two.powf(two * q + two) * T::lit(3.0).powf(nf * q) * nf * nf * q / (q - T::one());
    inner.powf(q.recip()) * (T::one() + (nf + T::lit(3.0)).sqrt()).powi(n as i32)
}

/// `C_{n,p} = 2 (2^{2q+2} 3^{nq} n² q/(q-1))^{1/q} (1+√(n+3))^n (n+3)^{n/2p} (2n)^{1/p}`.
pub fn c_np<T: Real>(n: usize, p: T) -> Result<T> {
    if n < 2 {
        return Err(FracError::OutOfRange(format!("n = {n} must be at least 2")));
    }
    let q = conjugate(p)?;
    let nf = T::from_usize(n).expect("small integer");
    let two = T::lit(2.0);
    Ok(two * cube_core(n, q) * (nf + T::lit(3.0)).powf(nf / (two * p)) * (two * nf).powf(p.recip()))
}

/// `C_1 = C_{n,p} τ^{s-n} 2^β`.
pub fn c1<T: Real>(n: usize, p: T, s: T, tau: T, beta: T) -> Result<T> {
    check_open_unit("s", s)?;
    check_open_unit("tau", tau)?;
    check_beta(beta)?;
    let nf = T::from_usize(n).expect("small integer");
    Ok(c_np(n, p)? * tau.powf(s - nf) * T::lit(2.0).powf(beta))
}

/// Cube-local `C_1 = (n+3)^{n/2p} (τL)^s`.
pub fn c1_cube<T: Real>(n: usize, p: T, s: T, tau: T, l: T) -> Result<T> {
    check_p(p)?;
    check_open_unit("s", s)?;
    check_open_unit("tau", tau)?;
    if !(l > T::zero()) {
        return Err(FracError::OutOfRange(format!("side L = {l} must be positive")));
    }
    let nf = T::from_usize(n).expect("small integer");
    Ok((nf + T::lit(3.0)).powf(nf / (T::lit(2.0) * p)) * (tau * l).powf(s))
}

/// `C_0 = 4·12^{2n/q}·72^n·(3√n)^β·(q/(q-1))^{1/q}·K^{n+β}`.
pub fn c0<T: Real>(n: usize, q: T, beta: T, k: T) -> Result<T> {
    if !(q > T::one() && q.is_finite()) {
        return Err(FracError::OutOfRange(format!("q = {q} must lie in (1, ∞)")));
    }
    check_beta(beta)?;
    check_k(k)?;
    let nf = T::from_usize(n).expect("small integer");
    Ok(T::lit(4.0)
        * T::lit(12.0).powf(T::lit(2.0) * nf / q)
        * T::lit(72.0).powi(n as i32)
        * (T::lit(3.0) * nf.sqrt()).powf(beta)
        * (q / (q - T::one())).powf(q.recip())
        * k.powf(nf + beta))
}

/// Cube-covering `C_0 = (2^{2q+2} 3^{nq} n² q/(q-1))^{1/q} (1+√(n+3))^n τ^{-n}`.
pub fn c0_cube<T: Real>(n: usize, p: T, tau: T) -> Result<T> {
    check_open_unit("tau", tau)?;
    let q = conjugate(p)?;
    Ok(cube_core(n, q) * tau.powi(-(n as i32)))
}

/// Weight comparability on shadows, `C_2 = (3K√n)^β`.
pub fn c2<T: Real>(n: usize, beta: T, k: T) -> Result<T> {
    check_beta(beta)?;
    check_k(k)?;
    let nf = T::from_usize(n).expect("small integer");
    Ok((T::lit(3.0) * k * nf.sqrt()).powf(beta))
}

/// Uniform local constant for the radial kernel on expanded Whitney cubes:
/// `n^{n/2p} 2^β`.
pub fn c1_radial<T: Real>(n: usize, p: T, beta: T) -> Result<T> {
    check_p(p)?;
    check_beta(beta)?;
    let nf = T::from_usize(n).expect("small integer");
    Ok(nf.powf(nf / (T::lit(2.0) * p)) * T::lit(2.0).powf(beta))
}

/// Local constant for the unrestricted kernel on a set of diameter `diam`
/// and measure `measure`: `(diam^{n+sp} / |U|)^{1/p}`.
pub fn local_constant<T: Real>(n: usize, p: T, s: T, diam: T, measure: T) -> Result<T> {
    check_p(p)?;
    let nf = T::from_usize(n).expect("small integer");
    Ok((diam.powf(nf + s * p) / measure).powf(p.recip()))
}

/// Local constant for the radial kernel: `diam^{n/p} ρ(diam) / |U|^{1/p}`.
pub fn local_constant_radial(n: usize, p: f64, rho: &RhoKind, diam: f64, measure: f64) -> Result<f64> {
    check_p(p)?;
    Ok(diam.powf(n as f64 / p) * rho.eval(diam) / measure.powf(1.0 / p))
}

/// Bound `2 (qN/(q-1))^{1/q}` on the Hardy-type operator in `L^q`.
pub fn hardy_bound<T: Real>(q: T, overlap: usize) -> Result<T> {
    if !(q > T::one()) {
        return Err(FracError::OutOfRange(format!("q = {q} must exceed 1")));
    }
    if q.is_infinite() {
        return Ok(T::lit(2.0));
    }
    let nn = T::from_usize(overlap).expect("overlap fits");
    Ok(T::lit(2.0) * (q * nn / (q - T::one())).powf(q.recip()))
}

/// Inputs of a [`ConstantBreakdown`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantInputs {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub tau: f64,
    pub beta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub overlap: usize,
    pub m: usize,
}

/// Every constant entering the global inequality, `total = 2·C0·C1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantBreakdown {
    #[serde(rename = "C_np")]
    pub c_np: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub total: f64,
    pub inputs: ConstantInputs,
}

impl ConstantBreakdown {
    /// Constants for the main kernel on a John domain covered by expanded
    /// Whitney cubes (overlap `12^n`).
    pub fn new(n: usize, p: f64, s: f64, tau: f64, beta: f64, k: f64) -> Result<Self> {
        let q = conjugate(p)?;
        let c_np = c_np(n, p)?;
        let c1 = c1(n, p, s, tau, beta)?;
        let c0 = c0(n, q, beta, k)?;
        Ok(ConstantBreakdown {
            c_np,
            c1,
            c0,
            c2: c2(n, beta, k)?,
            total: 2.0 * c0 * c1,
            inputs: ConstantInputs {
                n,
                p,
                q,
                s,
                tau,
                beta,
                k,
                overlap: 12usize.pow(n as u32),
                m: choose_m(n, tau)?,
            },
        })
    }

    /// Constants for the radial kernel: `C1` is replaced by
    /// [`c1_radial`] and `τ` is 1.
    pub fn radial(n: usize, p: f64, rho: &RhoKind, beta: f64, k: f64) -> Result<Self> {
        let q = conjugate(p)?;
        let c1 = c1_radial(n, p, beta)?;
        let c0 = c0(n, q, beta, k)?;
        Ok(ConstantBreakdown {
            c_np: c_np(n, p)?,
            c1,
            c0,
            c2: c2(n, beta, k)?,
            total: 2.0 * c0 * c1,
            inputs: ConstantInputs {
                n,
                p,
                q,
                s: rho.s(),
                tau: 1.0,
                beta,
                k,
                overlap: 12usize.pow(n as u32),
                m: 0,
            },
        })
    }
}
