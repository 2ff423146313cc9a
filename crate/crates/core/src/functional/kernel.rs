use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::geometry::{BoundarySet, RectilinearDomain};

/// Radial profile `ρ` of the radial kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoKind {
    /// `r^s`.
    Power { s: f64 },
    /// `r^s (1 + log₊(1/r))^{-1}`.
    Log { s: f64 },
    /// `min(r^s, c)`.
    Plateau { s: f64, c: f64 },
}

impl RhoKind {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            RhoKind::Power { s } => r.powf(s),
            RhoKind::Log { s } => r.powf(s) / (1.0 + (1.0 / r).ln().max(0.0)),
            RhoKind::Plateau { s, c } => r.powf(s).min(c),
        }
    }

    pub fn s(&self) -> f64 {
        match *self {
            RhoKind::Power { s } | RhoKind::Log { s } | RhoKind::Plateau { s, .. } => s,
        }
    }

    /// Checks positivity and monotonicity on 1000 points of `(0, r_max]`.
    pub fn check(&self, r_max: f64) -> Result<()> {
        let s = self.s();
        if !(s > 0.0 && s < 1.0) {
            return Err(FracError::OutOfRange(format!("rho exponent s = {s} not in (0, 1)")));
        }
        if let RhoKind::Plateau { c, .. } = *self {
            if !(c > 0.0) {
                return Err(FracError::OutOfRange(format!("rho plateau c = {c} must be positive")));
            }
        }
        let mut prev = 0.0;
        for i in 1..=1000 {
            let v = self.eval(r_max * i as f64 / 1000.0);
            if !(v > 0.0 && v.is_finite()) || v < prev {
                return Err(FracError::OutOfRange(format!("rho {self} is not positive and nondecreasing")));
            }
            prev = v;
        }
        Ok(())
    }
}

impl fmt::Display for RhoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoKind::Power { s } => write!(f, "power:{s}"),
            RhoKind::Log { s } => write!(f, "log:{s}"),
            RhoKind::Plateau { s, c } => write!(f, "plateau:{s}:{c}"),
        }
    }
}

impl FromStr for RhoKind {
    type Err = FracError;

    /// `power:s`, `log:s`, `plateau:s:c`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || FracError::Parse(format!("unknown rho '{text}'"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        match text.split(':').collect::<Vec<_>>().as_slice() {
            ["power", s] => Ok(RhoKind::Power { s: num(s)? }),
            ["log", s] => Ok(RhoKind::Log { s: num(s)? }),
            ["plateau", s, c] => Ok(RhoKind::Plateau { s: num(s)?, c: num(c)? }),
            _ => Err(bad()),
        }
    }
}

/// The four kernels `μ(x, y)`.
///
/// Every variant factors as `A(x) · χ(|x - y| < R(x)) · S(|x - y|)`; the
/// quadrature works on that factorization.
#[derive(Clone, Debug)]
pub enum KernelSpec<const N: usize> {
    /// `|x - y|^{-n-sp}`.
    Classical { s: f64 },
    /// `χ_{B(x, τ d(x))}(y) |x - y|^{-n-sp}`.
    TauBall { s: f64, tau: f64 },
    /// `d(x)^{ps} d_F(x)^{pβ} χ_{B(x, τ d(x))}(y) |x - y|^{-n-sp}`.
    WeightedMain {
        s: f64,
        tau: f64,
        beta: f64,
        f: Arc<BoundarySet<N>>,
    },
    /// `ρ(2 d(x))^p d_F(x)^{pβ} χ_{B(x, d(x))}(y) / (|x - y|^n ρ(|x - y|)^p)`.
    RadialPonce {
        rho: RhoKind,
        beta: f64,
        f: Arc<BoundarySet<N>>,
    },
}

impl<const N: usize> KernelSpec<N> {
    pub fn validate(&self, domain: &RectilinearDomain<N>) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(FracError::OutOfRange(format!("{name} = {v} not in (0, 1)")))
            }
        };
        let nonneg = |v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(FracError::OutOfRange(format!("beta = {v} must be nonnegative")))
            }
        };
        match self {
            KernelSpec::Classical { s } => unit("s", *s),
            KernelSpec::TauBall { s, tau } => unit("s", *s).and(unit("tau", *tau)),
            KernelSpec::WeightedMain { s, tau, beta, .. } => unit("s", *s).and(unit("tau", *tau)).and(nonneg(*beta)),
            KernelSpec::RadialPonce { rho, beta, .. } => {
                nonneg(*beta)?;
                let bb = domain.bounding_box().to_f64();
                let diam = (0..N).map(|k| (bb.hi[k] - bb.lo[k]).powi(2)).sum::<f64>().sqrt();
                rho.check(2.0 * diam)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            KernelSpec::Classical { .. } => "classical".into(),
            KernelSpec::TauBall { .. } => "tau_ball".into(),
            KernelSpec::WeightedMain { .. } => "weighted_main".into(),
            KernelSpec::RadialPonce { rho, .. } => format!("radial_ponce[{rho}]"),
        }
    }

    /// Fractional order; for the radial kernel the exponent of `ρ`.
    pub fn s(&self) -> f64 {
        match self {
            KernelSpec::Classical { s } | KernelSpec::TauBall { s, .. } | KernelSpec::WeightedMain { s, .. } => *s,
            KernelSpec::RadialPonce { rho, .. } => rho.s(),
        }
    }

    /// Ball ratio `τ`; `None` for the unrestricted kernel, 1 for the radial one.
    pub fn tau(&self) -> Option<f64> {
        match self {
            KernelSpec::Classical { .. } => None,
            KernelSpec::TauBall { tau, .. } | KernelSpec::WeightedMain { tau, .. } => Some(*tau),
            KernelSpec::RadialPonce { .. } => Some(1.0),
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            KernelSpec::WeightedMain { beta, .. } | KernelSpec::RadialPonce { beta, .. } => *beta,
            _ => 0.0,
        }
    }

    /// The boundary piece `F` of the weight, when the kernel carries one.
    pub fn boundary_set(&self) -> Option<&Arc<BoundarySet<N>>> {
        match self {
            KernelSpec::WeightedMain { f, .. } | KernelSpec::RadialPonce { f, .. } => Some(f),
            _ => None,
        }
    }

    /// Left-hand side weight `d_F^{pβ}` matching this kernel.
    pub fn weight(&self) -> Weight<N> {
        Weight {
            beta: self.beta(),
            f: self.boundary_set().cloned(),
        }
    }

    pub(crate) fn needs_distance(&self) -> bool {
        !matches!(self, KernelSpec::Classical { .. })
    }

    /// `A(x)` from `d(x)` and `d_F(x)`.
    pub fn amplitude(&self, p: f64, d: f64, d_f: f64) -> f64 {
        match self {
            KernelSpec::Classical { .. } | KernelSpec::TauBall { .. } => 1.0,
            KernelSpec::WeightedMain { s, beta, .. } => d.powf(p * s) * weight_power(d_f, p * beta),
            KernelSpec::RadialPonce { rho, beta, .. } => rho.eval(2.0 * d).powf(p) * weight_power(d_f, p * beta),
        }
    }

    /// `R(x)` from `d(x)`.
    pub fn radius(&self, d: f64) -> f64 {
        match self {
            KernelSpec::Classical { .. } => f64::INFINITY,
            KernelSpec::TauBall { tau, .. } | KernelSpec::WeightedMain { tau, .. } => tau * d,
            KernelSpec::RadialPonce { .. } => d,
        }
    }

    /// `S(r)`.
    pub fn radial(&self, p: f64, r: f64) -> f64 {
        match self {
            KernelSpec::RadialPonce { rho, .. } => r.powi(-(N as i32)) / rho.eval(r).powf(p),
            _ => r.powf(-(N as f64) - self.s() * p),
        }
    }

    /// Radii where `S` is not smooth.
    pub(crate) fn radial_kinks(&self) -> Vec<f64> {
        match self {
            KernelSpec::RadialPonce { rho, .. } => match *rho {
                RhoKind::Log { .. } => vec![1.0],
                RhoKind::Plateau { s, c } => vec![c.powf(1.0 / s)],
                RhoKind::Power { .. } => Vec::new(),
            },
            _ => Vec::new(),
        }
    }

    /// `sp` when `S(r) = r^{-n-sp}` exactly.
    pub(crate) fn power_exponent(&self, p: f64) -> Option<f64> {
        match self {
            KernelSpec::RadialPonce { rho, .. } => match rho {
                RhoKind::Power { s } => Some(s * p),
                _ => None,
            },
            _ => Some(self.s() * p),
        }
    }

    /// Pointwise `μ(x, y)`.
    pub fn eval(&self, domain: &RectilinearDomain<N>, p: f64, x: &[f64; N], y: &[f64; N]) -> Result<f64> {
        let r = (0..N).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>().sqrt();
        if !self.needs_distance() {
            return Ok(self.radial(p, r));
        }
        let d = domain.boundary_distance(x)?;
        if r >= self.radius(d) {
            return Ok(0.0);
        }
        let d_f = self.boundary_set().map_or(1.0, |f| f.distance(x));
        Ok(self.amplitude(p, d, d_f) * self.radial(p, r))
    }
}

/// `v^e` with `0^0 = 1`.
pub(crate) fn weight_power(v: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        v.powf(e)
    }
}

/// The weight `ω = d_F^{pβ}`; `f = None` or `β = 0` means `ω ≡ 1`.
#[derive(Clone, Debug, Default)]
pub struct Weight<const N: usize> {
    pub beta: f64,
    pub f: Option<Arc<BoundarySet<N>>>,
}

impl<const N: usize> Weight<N> {
    pub fn unweighted() -> Self {
        Weight { beta: 0.0, f: None }
    }

    pub fn new(beta: f64, f: Arc<BoundarySet<N>>) -> Self {
        Weight { beta, f: Some(f) }
    }

    pub fn eval(&self, p: f64, x: &[f64; N]) -> f64 {
        match &self.f {
            Some(f) if self.beta != 0.0 => f.distance(x).powf(p * self.beta),
            _ => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dyadic;

    #[test]
    fn rho_builtins() {
        let rho: RhoKind = "log:0.5".parse().unwrap();
        assert_eq!(rho, RhoKind::Log { s: 0.5 });
        assert!((rho.eval(4.0) - 2.0).abs() < 1e-15);
        assert!((rho.eval(0.25) - 0.5 / (1.0 + 4f64.ln())).abs() < 1e-15);
        assert_eq!("plateau:0.5:0.3".parse::<RhoKind>().unwrap().eval(1.0), 0.3);
        assert!(RhoKind::Power { s: 0.5 }.check(3.0).is_ok());
        assert!(RhoKind::Plateau { s: 0.5, c: -1.0 }.check(3.0).is_err());
        assert!(RhoKind::Power { s: 1.5 }.check(3.0).is_err());
    }

    #[test]
    fn validation_ranges() {
        let d = RectilinearDomain::square(Dyadic::ONE).unwrap();
        let f = Arc::new(BoundarySet::corner(&d));
        assert!(KernelSpec::<2>::Classical { s: 0.5 }.validate(&d).is_ok());
        assert!(KernelSpec::<2>::Classical { s: 1.0 }.validate(&d).is_err());
        assert!(KernelSpec::<2>::TauBall { s: 0.5, tau: 1.2 }.validate(&d).is_err());
        let k = KernelSpec::WeightedMain { s: 0.5, tau: 0.5, beta: -1.0, f };
        assert!(k.validate(&d).is_err());
    }

    #[test]
    fn tau_ball_indicator() {
        let d = RectilinearDomain::square(Dyadic::ONE).unwrap();
        let k = KernelSpec::<2>::TauBall { s: 0.5, tau: 0.5 };
        let x = [0.5, 0.5];
        assert_eq!(k.eval(&d, 2.0, &x, &[0.5, 0.76]).unwrap(), 0.0);
        let v = k.eval(&d, 2.0, &x, &[0.5, 0.74]).unwrap();
        assert!((v - 0.24f64.powi(-3)).abs() < 1e-9);
    }
}
