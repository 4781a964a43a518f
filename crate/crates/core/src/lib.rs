//! Exact integer determinants by an introspective algorithm that interleaves
//! early-terminated Chinese remaindering with p-adic invariant-factor
//! extraction.

pub mod bigmat;
pub mod bonus;
pub mod cra;
pub mod error;
pub mod introspect;
pub mod lif;
pub mod mcverify;
pub mod modfield;
pub mod padic;
pub mod par;

pub use bigmat::{bareiss_det, hadamard_bound, smith_form, IntMatrix, SmithForm};
pub use cra::{cra_det_certified, CraState};
pub use error::{Error, Result};
pub use lif::{lif, LifConfig, LifRegime};
pub use modfield::PrimeSampler;
pub use padic::{dixon_solve, RationalVector};
pub use introspect::{determinant, DetOptions, DetPath, DetReport};
