pub mod error;
pub mod casebook;
pub mod cli;
pub mod kernels;
pub mod lp;
pub mod measures;
pub mod policies;
pub mod rational;
pub mod solver;
