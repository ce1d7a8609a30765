//! Solvers for the dynamic unsplittable flow problem with path-change penalties.

pub mod bench;
pub mod cli;
pub mod formulations;
pub mod graph;
pub mod instance;
pub mod lp;
pub mod pricing;
pub mod solvers;
