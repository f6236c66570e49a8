//! File formats, caching and command implementations on top of `qoa-core`.

pub use qoa_core as core;

pub mod cache;
pub mod catalog;
pub mod commands;
pub mod formats;
pub mod parse;
