//! Weighted norms, weighted averages and Gagliardo-type double integrals on
//! grid fields, and direct verification of the Poincaré inequalities.

mod assembly;
mod inequality;
mod kernel;
mod norms;
mod pair_integral;

pub use assembly::{gagliardo, GagliardoForm, QuadratureOptions, Region};
pub use inequality::{verify_inequality, write_ratio_csv, RatioRecord, RATIO_CSV_HEADER};
pub use kernel::{KernelSpec, RhoKind, Weight};
pub use norms::{lp_norm, weight_values, weighted_average};
pub use pair_integral::unit_pair_integral_2d;
