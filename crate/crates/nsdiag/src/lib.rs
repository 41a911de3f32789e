//! File formats, reports, verification suites and the command line of the
//! `nsdiag` toolkit, on top of `nsdiag-core`.

pub mod cli;
pub mod io;
pub mod output;
pub mod specfile;
pub mod suites;

pub const TOOL: &str = "nsdiag";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
