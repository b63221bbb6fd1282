pub mod arith;
pub mod cohomology;
pub mod galois;
pub mod hypotheses;
pub mod bigint_serde;
pub mod ec;
pub mod error;
pub mod padic;
pub mod quadfield;
pub mod report;
pub mod sieves;
pub mod tate_period;

pub use error::{Error, Result};
