//! Command-line front end for `idde-core`: problem files, grids and command
//! dispatch. The binary is a thin wrapper around [`run::run`].

pub mod grid;
pub mod problem;
pub mod run;

pub use problem::{parse_problem_file, ParseError};
pub use run::{run, Cli, CliError, Streams};
