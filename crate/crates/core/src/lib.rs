//! Stability analysis and simulation of first-order IMEX finite-volume
//! schemes for stiff linear hyperbolic systems with flux splittings.

pub mod cli;
pub mod imex;
pub mod models;
pub mod modeq;
pub mod smallmat;
