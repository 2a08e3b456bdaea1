pub mod cli;
pub mod config;
pub mod harness;
pub mod integrators;
pub mod kernels;
pub mod model;
pub mod plot;
pub mod reference;
