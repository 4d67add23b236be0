//! Kantorovich duality laboratory on finite spaces with `[0, inf]`-valued
//! costs.
//!
//! Exact primal, partial, relaxed, truncated and dual transport values, dual
//! certificates, the cover and capacity functionals of product-band covers,
//! and the two coupling surgeries (Jensen shrink, product completion).

pub mod cli;
pub mod dual;
pub mod error;
pub mod flow;
pub mod io;
pub mod kellerer;
pub mod lp;
pub mod measure;
pub mod oracle;
pub mod primal;
pub mod relaxation;
pub mod scalar;
pub mod scenarios;

pub use error::{Error, Result};
pub use measure::{Coupling, CostMatrix, DiscreteSpace, ExtendedCost, Marginal};
pub use scalar::{Rational, Scalar};
