//! Library behind the `invmasa` binary: document formats and one function per
//! subcommand, each returning a JSON report and an exit code.

pub mod cex;
pub mod document;
pub mod masa;
