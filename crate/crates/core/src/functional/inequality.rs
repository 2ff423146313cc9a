use std::io::Write;

use serde::{Deserialize, Serialize};

use super::assembly::GagliardoForm;
use super::kernel::KernelSpec;
use super::norms::{lp_norm, weight_values};
use crate::error::{FracError, Result};
use crate::field::Field;

/// One evaluated Poincaré inequality: `lhs ≤ constant · rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub domain: String,
    pub p: f64,
    pub s: f64,
    pub tau: Option<f64>,
    pub beta: f64,
    pub kernel: String,
    pub field_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub constant: f64,
    pub pass: bool,
}

pub const RATIO_CSV_HEADER: &str = "domain,p,s,tau,beta,kernel,field_id,lhs,rhs,ratio,constant,pass";

impl RatioRecord {
    /// `rhs = 0` with a nonzero left side: the inequality cannot hold with
    /// any constant for this field.
    pub fn is_counterexample_candidate(&self) -> bool {
        self.rhs == 0.0 && self.lhs > 0.0
    }
}

/// Left side `‖u - u_{Ω,ω}‖_{L^p(d_F^{pβ})}` with the weight of `kernel`,
/// right side `(form(u))^{1/p}`. The form decides the region (whole domain
/// or summed over the sets of a covering).
pub fn verify_inequality<const N: usize>(
    u: &Field<f64, N>,
    kernel: &KernelSpec<N>,
    form: &GagliardoForm<N>,
    constant: f64,
    field_id: &str,
) -> Result<RatioRecord> {
    let p = form.p();
    if form.kernel_name() != kernel.name() {
        return Err(FracError::OutOfRange(format!(
            "form was assembled for {} but the kernel is {}",
            form.kernel_name(),
            kernel.name()
        )));
    }
    let weight = kernel.weight();
    let mut lhs = lp_norm(u, p, &weight, None);
    let rhs = form.evaluate(u)?.powf(1.0 / p);
    if rhs == 0.0 {
        // Rounding in the weighted mean of a constant field.
        let mass: f64 = weight_values(u, p, &weight).iter().sum::<f64>() * u.grid().weight();
        if lhs <= 1e-12 * u.max_abs() * mass.powf(1.0 / p) {
            lhs = 0.0;
        }
    }
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(RatioRecord {
        domain: u.grid().domain().name().to_string(),
        p,
        s: kernel.s(),
        tau: kernel.tau(),
        beta: kernel.beta(),
        kernel: kernel.name(),
        field_id: field_id.to_string(),
        lhs,
        rhs,
        ratio,
        constant,
        pass: ratio <= constant,
    })
}

/// Writes records as CSV with the fixed header.
pub fn write_ratio_csv<W: Write>(out: W, records: &[RatioRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RATIO_CSV_HEADER.split(','))
        .map_err(|e| FracError::Parse(e.to_string()))?;
    for r in records {
        w.serialize(r).map_err(|e| FracError::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
