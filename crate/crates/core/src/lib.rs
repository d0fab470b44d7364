pub mod cli;
pub mod dataset;
pub mod eval;
pub mod fitness;
pub mod generator;
pub mod image;
pub mod numerics;
pub mod optimizers;
pub mod rng;
