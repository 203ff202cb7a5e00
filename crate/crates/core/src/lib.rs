pub mod boundary_solve;
pub mod diagnostics;
pub mod dipole_dynamics;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod model;
pub mod operators;
pub mod pairs;
pub mod regularize;
pub mod runner;
pub mod scenarios;
pub mod snapshot;
pub mod stepper;
pub mod vortex_dynamics;
pub mod specfun;
