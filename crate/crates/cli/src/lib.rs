//! Library side of the `conjloc` command line tool: configuration, output
//! formatting, command drivers, and the verification suite.

pub mod config;
pub mod jsonfmt;
pub mod runs;
pub mod verify;
