//! Power-market equilibria on DC networks with discrete storage-investment
//! search.
//!
//! The crate computes lower-level market equilibria (perfect competition or
//! Cournot oligopoly) as convex QPs, enumerates discrete storage-investment
//! decisions for welfare-maximizing and merchant investors, and certifies
//! every solution with primal/dual feasibility and strong-duality checks.

pub mod cluster;
pub mod equilibrium;
pub mod invest;
pub mod io;
pub mod model;
pub mod qp;
pub mod solver;
pub mod sparse;
pub mod verify;
