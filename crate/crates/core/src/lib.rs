//! Simulation of a free-floating 16U cubesat carrying scissor-boom extensible
//! hook systems (EHS).
//!
//! The crate covers boom kinematics ([`scissor`]), a lumped-mass boom model
//! ([`ehs`]), the coupled base/boom equations of motion ([`vehicle`]), PID
//! control with Jacobian gain scheduling ([`control`]), trapezoidal reference
//! generation ([`trajectory`]) and a scenario-driven engine ([`engine`]) with
//! CSV telemetry and JSON run summaries.

pub mod checks;
pub mod cli;
pub mod control;
pub mod ehs;
pub mod engine;
pub mod error;
pub mod scenario;
pub mod scissor;
pub mod spatial;
pub mod trajectory;
pub mod vehicle;

pub use error::{Result, SimError};
