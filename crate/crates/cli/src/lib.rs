//! Library side of the `kfw` binary: subcommand implementations, output
//! plumbing and settings resolution, exposed so integration tests can use
//! the typed result records.

pub mod commands;
pub mod output;
pub mod settings;
