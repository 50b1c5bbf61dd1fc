//! Command-line front end for `seminmf`: exact semi-NMF rank reports,
//! factorization runs and seeded benchmark suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod commands;
pub mod error;
pub mod io;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
