//! Heat-diffusion score fields and guided Langevin sampling for
//! language-labeled multi-robot motion planning on occupancy grids.

pub mod gridmap;
pub mod heatfield;
pub mod planner;
pub mod bench;
pub mod render;
pub mod cli;
