//! Numerics for the doubly periodic Scherk-Costa family of minimal surfaces.
//!
//! The surface is given by Weierstrass data `(g, dh)` on a four-sheeted
//! cover of the `z`-plane. Everything multivalued is carried by
//! [`riemann_core::SheetPoint`] and continued along paths; periods,
//! the period-problem solver and the mesher are built on top of that.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod linalg;
pub mod mesher;
pub mod periods;
pub mod quadrature;
pub mod riemann_core;
pub mod solver;
pub mod weierstrass;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
