//! Ordinary primes of abelian surfaces over Q.
//!
//! The crate measures, prime by prime, whether a genus-2 Jacobian or a
//! product of elliptic curves has ordinary reduction, and predicts the
//! density of such primes from a compact group with finitely many
//! components: it is the fraction of components on which the trace of the
//! exterior square of the standard representation is not constant.
//!
//! Everything here is `no_std` + `alloc`; IO, parallel drivers and file
//! formats live in the companion `ordinary` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arith;
pub mod cyclotomic;
pub mod frobenius;
pub mod groups;
pub mod surfaces;
pub mod tally;

pub use arith::{primes_up_to, quadratic_character, Prime};
pub use frobenius::{ordinary_test, FrobeniusConfig, FrobeniusError, FrobeniusRecord};
pub use surfaces::{parse_surface, ReductionStatus, SurfaceModel};
