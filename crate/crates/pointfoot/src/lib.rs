//! Control and simulation stack for a point-foot series-elastic biped.
//!
//! The crate is organized around five subsystems:
//!
//! - [`model`] — floating-base rigid-body model: mass matrix, bias forces,
//!   point Jacobians for arbitrary body-fixed points.
//! - [`wbosc`] — whole-body operational space control: contact-consistent
//!   projections, task torque synthesis, feedback internal-force control,
//!   and contact-transition torque blending.
//! - [`estimator`] — torso orientation estimation fusing marker positions
//!   (delayed, with dropouts) and gyro rates via regularized least squares.
//! - [`planner`] — prismatic-inverted-pendulum footstep planner using a
//!   constant time-to-velocity-reversal rule, with 2D coordination for
//!   3D walking.
//! - [`sim`] — deterministic fixed-step constact-constrained simulator,
//!   walking state machine, and the shipped scenarios.
//!
//! Configuration files and CSV/JSON log formats are handled in [`config`]
//! and [`logging`].

pub mod config;
pub mod estimator;
pub mod logging;
pub mod math;
pub mod model;
pub mod planner;
pub mod sim;
pub mod wbosc;

pub use model::{BodyId, DynamicsTerms, GeneralizedState, ModelMode, RobotModel};
