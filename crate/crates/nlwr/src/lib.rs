//! Macroscopic traffic flow on road networks with nonlocal velocity:
//! drivers adapt their speed to a weighted look-ahead average of the
//! downstream density instead of its value at their own position.
//!
//! The crate discretizes such models with an upwind finite-volume scheme,
//! couples roads at 1-to-1, 1-to-2 and 2-to-1 vertices through flux rules
//! that respect capacity and split or priority parameters, and ships two
//! reference solvers next to the nonlocal one: the classical local model
//! (Godunov with demand/supply vertices) and the infinite-look-ahead limit
//! model with its piecewise-exact Riemann solution.
//!
//! Entry points: [`scenario::Scenario::build`] turns a JSON-backed
//! [`scenario::ScenarioConfig`] into a runnable setup, [`scheme::simulate`]
//! marches it to the horizon, and [`measures`] evaluates outflow, travel
//! time and congestion on the recorded [`scheme::Trajectory`].

pub mod coupling;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod limit;
pub mod local;
pub mod measures;
pub mod network;
pub mod output;
pub mod scenario;
pub mod scheme;

pub use error::{Error, Result};
