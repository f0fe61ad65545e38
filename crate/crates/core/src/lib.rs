//! Exact-arithmetic workbench for finitely generated modules over the
//! one-variable Iwasawa algebra Λ = Z_p[[T]].
//!
//! Arithmetic is carried out with truncated-but-exact representatives:
//! coefficients live in Z/p^M and series are cut at T^D, with every public
//! operation either returning a result that is exact at that precision or
//! reporting a precision error. Two independent computation routes are kept
//! side by side throughout — closed forms on elementary modules, and a Smith
//! normal form oracle on presentations — so results can be cross-checked.

pub mod elementary;
pub mod error;
pub mod finite;
pub mod finite_dual;
pub mod io;
pub mod linalg;
pub mod poly;
pub mod presented;
pub mod profile;
pub mod series;
pub mod tower;

pub mod corpus;

pub use error::{Error, Result};
pub use profile::PrecisionProfile;
