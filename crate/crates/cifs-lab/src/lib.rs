//! Numerical laboratory for complex continued fraction systems.
//!
//! The objects of study are the families `phi_b(z) = 1 / (z + b)` indexed by
//! the shifted lattice `b = m + n tau` (`m, n >= 1`, `Im tau >= 1`), acting
//! on the seed disk `X = B(1/2, 1/2)`. The crate provides:
//!
//! - exact disk geometry: inversion of disks, spectral data of the lattice
//!   basis, probe balls ([`geometry`]);
//! - lattice point counting in disks, annuli, and lens regions, with growth
//!   constant fits ([`lattice`]);
//! - the Moebius machinery: generators, word composition, image disks, exact
//!   derivative ranges, coding points, separation and distortion audits
//!   ([`cifs`]);
//! - pressure sums, series divergence probes, and Bowen-root dimension
//!   estimates ([`pressure`]);
//! - cylinder measures with rigorous per-ball mass brackets, packing
//!   constants, and mass-to-radius scans ([`measure`]).
//!
//! Everything is deterministic: randomized audits take explicit seeds, and
//! parallel reductions use fixed chunking so results do not depend on the
//! thread count.

pub mod cifs;
pub mod error;
pub mod geometry;
pub mod guide;
pub mod lattice;
pub mod measure;
pub mod pressure;

pub(crate) mod sum;

pub use error::{Error, Result};
