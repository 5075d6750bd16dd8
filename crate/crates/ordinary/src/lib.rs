//! Runs over prime ranges, file formats and the `ordinary` command line on
//! top of `ordinary-core`.
//!
//! * [`engine`]: parallel per-prime evaluation, density reports,
//!   checkpoints and comparison with a group's predicted density.
//! * [`records`]: per-prime JSON Lines records.
//! * [`catalog`]: TOML group catalogs, including the shipped one.
//! * [`corpus`]: the shipped surfaces.
//! * [`cli`]: argument parsing and subcommands.

pub mod catalog;
pub mod cli;
pub mod corpus;
pub mod engine;
pub mod records;

pub use ordinary_core as core;
