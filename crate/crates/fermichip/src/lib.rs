//! File formats, presets and the command line front end for
//! [`fermichip_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod format;
pub mod io;
pub mod presets;
