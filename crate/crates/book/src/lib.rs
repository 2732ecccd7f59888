//! The guide's chapters, compiled so that `cargo test` runs every Rust
//! listing in the book against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/expectations.md")]
pub mod expectations {}
#[doc = include_str!("../../../book/src/mechanisms.md")]
pub mod mechanisms {}
#[doc = include_str!("../../../book/src/ensembles.md")]
pub mod ensembles {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/datasets.md")]
pub mod datasets {}
#[doc = include_str!("../../../book/src/command_line.md")]
pub mod command_line {}
