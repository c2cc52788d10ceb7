//! Library half of the `ctxent` command-line tool: the report structure every
//! subcommand emits, its human-readable rendering, and the built-in
//! verification suite. Kept as a library so integration tests can parse and
//! compare emitted reports structurally.

#![forbid(unsafe_code)]

pub mod report;
pub mod suite;
