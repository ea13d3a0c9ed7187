//! Finite fields and matrix algebra over them.

pub mod field;
pub mod matrix;

pub use field::{Elem, Field, PRIMITIVE_POLYS};
pub use matrix::Matrix;
