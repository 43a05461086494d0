//! Positive divisor classes and the 2-rank of the wild kernel.
//!
//! For a number field `F` with exceptional dyadic places this crate
//! computes the 2-group `Cl^pos` of positive divisor classes, its degree-zero
//! subgroup, the logarithmic 2-class group and the 2-rank of the wild kernel
//! `WK_2(F)`. Quadratic fields are built from scratch; fields of higher
//! degree enter through [`fields::FieldData`] records prepared elsewhere.
//!
//! Everything here is `no_std` with `alloc`; IO and the command line live
//! in the `posdiv` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dyadic;
pub mod error;
pub mod fields;
pub mod logarithmic;
pub mod pipeline;
pub mod positive;
pub mod signatures;
pub mod zlinalg;

pub use error::{Error, Result};

/// Largest linear-algebra modulus exponent; logarithms use 16 guard bits on
/// top of it.
pub const MAX_WORKING_PRECISION: u32 = dyadic::MAX_PRECISION - 16;
