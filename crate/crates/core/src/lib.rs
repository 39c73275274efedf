//! A computational laboratory for weighted Bowen topological entropy on
//! symbolic systems: exact cover costs over weighted cylinders and their
//! critical exponents, the measure-side variational optimum, Bedford-
//! McMullen carpet dimensions, bundle random dynamical systems, and
//! empirical validators for the convergence theorems the quantities obey.
//!
//! Everything is deterministic: randomness flows from explicit seeds
//! through [`rng::SplitMix64`] with the documented splitting rule, and all
//! types are immutable after construction, so every operation is safe to
//! call from parallel workers.

pub mod carpet;
pub mod cover;
pub mod error;
pub mod io;
pub mod measures;
pub mod rds;
pub mod rng;
mod simplex;
pub mod symbolic;
pub mod validate;
pub mod variational;

pub use error::{Error, Result};
