//! File formats, configuration and the command-line driver for
//! `geofem-core`.

pub mod commands;
pub mod config;
pub mod matrix_market;
pub mod meshfile;
pub mod report;
pub mod vtk;
