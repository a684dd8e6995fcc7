//! Finite-field arithmetic over F_{p^n}, dense linear algebra, subfield
//! coordinates and the quadratic tower used by the alignment schemes.

mod ext;
mod field;
mod matrix;
pub mod poly;
mod tower;

pub use ext::{embedding, ExtensionCtx};
pub use field::{field_new, is_prime, prime_power, FieldCtx, FieldElem, FieldError, MAX_ORDER};
pub use matrix::{solve_linear, LinalgError, Matrix};
pub use tower::{tower_new, Mat2, TowerCtx, Vec2};

use std::sync::Arc;

/// Field of order `q`, or an error if `q` is not a supported prime power.
pub fn field_of_order(q: u32) -> Result<Arc<FieldCtx>, FieldError> {
    let (p, n) = prime_power(q)?;
    Ok(Arc::new(field_new(p, n)?))
}
