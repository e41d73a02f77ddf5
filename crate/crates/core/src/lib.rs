//! Coverage of user-centric terahertz cellular networks with beam
//! misalignment: closed-form approximations and a Monte Carlo simulator.

pub mod analytic;
pub mod antenna;
pub mod channel;
pub mod cli;
pub mod cluster;
pub mod simcore;
pub mod specfun;
