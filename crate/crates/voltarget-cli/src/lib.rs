//! Config schema and command implementations behind the `voltarget` binary.

pub mod commands;
pub mod config;
