//! Orbits whose empirical measures accumulate on a prescribed set of
//! invariant measures, for subshifts of finite type and hyperbolic toral
//! automorphisms.
//!
//! The pipeline runs bottom-up:
//!
//! * [`systems`]: the dynamics, metrics and block filtration;
//! * [`measures`]: invariant measures, test-function families and the weak* metric;
//! * [`shadowing`]: pseudo-orbit shadowing;
//! * [`specification`]: gap tables and gluing of orbit segments;
//! * [`compiler`]: turning a target measure into a periodic carrier;
//! * [`oscillator`]: scheduled gluing along a chain of measures.

pub mod compiler;
pub mod error;
pub mod measures;
pub mod oscillator;
pub mod shadowing;
pub mod specification;
pub mod systems;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/shadowing.md")]
    mod shadowing {}
    #[doc = include_str!("../../../book/src/specification.md")]
    mod specification {}
    #[doc = include_str!("../../../book/src/compiler.md")]
    mod compiler {}
    #[doc = include_str!("../../../book/src/oscillator.md")]
    mod oscillator {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
