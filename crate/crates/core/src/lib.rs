//! Quantitative Helly-type selection for families of half-spaces and convex
//! bodies.
//!
//! Layers, bottom up: [`linalg`] and [`lp`] are small dense numerics;
//! [`convex`] holds polytopes and their oracles; [`john`] computes extremal
//! ellipsoids and decompositions of the identity; [`sparsify`] thins a
//! decomposition to few contact points; [`helly`] turns that into subfamily
//! selections; [`harness`] runs seeded experiments and writes reports.

pub mod convex;
pub mod error;
pub mod harness;
pub mod helly;
pub mod john;
pub mod linalg;
pub mod lp;
pub mod sparsify;

pub use error::{Error, Result};
