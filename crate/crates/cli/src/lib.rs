//! Command-line front end: configuration parsing, run drivers, CSV /
//! manifest / checkpoint emission and the verification property suite.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod outputs;
pub mod verify;
