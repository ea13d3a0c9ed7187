//! Cooperative regenerating codes: the optimal storage/repair-bandwidth
//! tradeoff, its cut-set certification, and working repair protocols.

pub mod arith;
pub mod codes;
pub mod cutbound;
pub mod error;
pub mod flowgraph;
pub mod gf;
pub mod params;
pub mod storagesim;
pub mod tradeoff;

pub use arith::{ExtendedRational, Rational};
pub use error::{Error, Result};
pub use params::{OperatingPoint, PointKind, RepairBudget, SystemParams};
