//! The book, mounted as rustdoc so its snippets compile and run as
//! doc-tests. Each submodule's page is included verbatim from
//! `book/src/`; edit the book, not this file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/lattice.md")]
pub mod lattice {}

#[doc = include_str!("../../../book/src/maps-and-words.md")]
pub mod maps_and_words {}

#[doc = include_str!("../../../book/src/system-audits.md")]
pub mod system_audits {}

#[doc = include_str!("../../../book/src/pressure-and-dimension.md")]
pub mod pressure_and_dimension {}

#[doc = include_str!("../../../book/src/cylinder-measures.md")]
pub mod cylinder_measures {}

#[doc = include_str!("../../../book/src/mass-floor-scans.md")]
pub mod mass_floor_scans {}

#[doc = include_str!("../../../book/src/cli-reference.md")]
pub mod cli_reference {}
