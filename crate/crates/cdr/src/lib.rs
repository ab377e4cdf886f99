//! File formats and experiment commands around `cdr-core`: the dataset
//! container, graymap and CSV writers, and the `simulate` / `mask` / `run` /
//! `t1map` / `report` subcommands.

pub mod commands;
pub mod container;
pub mod dataset;
pub mod pgm;
pub mod tables;

pub use container::{Container, ContainerError};
pub use dataset::Dataset;
