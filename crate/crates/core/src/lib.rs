//! Numerical laboratory for the global quench of the critical transverse-field
//! Ising chain from the all-`|1⟩` product state.
//!
//! The chain is solved exactly through its Majorana correlation matrix
//! ([`ising_exact`]), block entanglement entropies and their lower-bound chain
//! are evaluated in [`entropy`], closed-form entropy and bond-dimension bounds
//! live in [`bounds`], and the Bessel-function machinery behind the
//! thermodynamic limit is in [`bessel`]. Two independent simulators check the
//! free-fermion path: a dense state-vector oracle ([`ed_oracle`]) and a
//! matrix-product-state TEBD engine ([`mps_tebd`]).
//!
//! Entropies are in bits. Correction terms that the bounds carry in natural
//! logarithms are kept in natural logarithms; see [`bounds::nats_to_bits`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod bounds;
pub mod ed_oracle;
pub mod entropy;
mod error;
pub mod ising_exact;
pub mod linalg;
pub mod mps_tebd;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
