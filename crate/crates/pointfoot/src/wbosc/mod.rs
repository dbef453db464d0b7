//! Whole-body operational space control.
//!
//! The controller maps operational task forces and internal (inter-contact)
//! forces onto actuated joint torques consistently with the active contact
//! constraints:
//!
//! ```text
//! τ = J*ᵀ F_task + L*ᵀ Γ_int
//! ```
//!
//! where `J* = J_task · UN̄_s` is the contact-consistent task Jacobian over
//! actuated joints and `L*` projects torques onto the internal-force
//! manifold (the null space of `U N_s`, which produces no acceleration).
//!
//! # Sign conventions
//!
//! - Constraint forces `λ` returned by [`constrained_forward_dynamics`] are
//!   the forces the ground exerts **on the robot** (vertical components are
//!   positive in stance).
//! - Internal forces use the opposite orientation: `W_int` is applied to the
//!   forces the feet exert **on the ground**, so a positive inter-foot
//!   tension means the feet push outwards, away from each other. Both
//!   conventions meet in [`actual_internal_force`], which evaluates the
//!   sensed-torque projection directly.

mod contact;
mod internal;
mod task;
mod transition;

pub use contact::{build_contact_set, ContactJacobian, ContactSet, CONTACT_CONDITION_LIMIT};
pub use internal::{
    actual_internal_force, build_w_int, contact_w_int, internal_torque, InternalForceModel,
    InternalForceSpec,
};
pub use task::{
    build_task_space, task_force, Task, TaskEval, TaskGains, TaskKind, TaskReference, TaskSet,
    TaskSpace,
};
pub use transition::{swing_reaction_force, TransitionDirection, TransitionState};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::math;
use crate::model::{DynamicsTerms, ModelError, RobotModel};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(
        "singular contact set: condition number {cond:.3e} exceeds {limit:.3e} \
         (constraint-space singular values {svals:?})"
    )]
    SingularContact {
        cond: f64,
        limit: f64,
        svals: Vec<f64>,
    },
    #[error("ill-conditioned task-space inertia: condition number {cond:.3e}")]
    IllConditionedTaskInertia { cond: f64 },
    #[error("degenerate contact geometry: {0}")]
    DegenerateGeometry(String),
    #[error("internal force undefined: requires dual contact, contact set has {0} contact(s)")]
    UndefinedInternalForce(usize),
    #[error("task dimension mismatch: expected {expected}, got {got}")]
    TaskDimensionMismatch { expected: usize, got: usize },
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("transition setup: {0}")]
    TransitionSetup(String),
}

/// Contact-consistent actuation operators shared by task and internal-force
/// synthesis: `U N_s`, its dynamically consistent inverse, and the
/// internal-torque projector `L*`.
#[derive(Debug, Clone)]
pub struct ActuatedProjection {
    /// Selection matrix `U` (actuated × all).
    pub u: DMatrix<f64>,
    /// `U N_s`.
    pub un_s: DMatrix<f64>,
    /// Dynamically consistent inverse of `U N_s` (all × actuated).
    pub un_s_bar: DMatrix<f64>,
    /// `B = (U N_s) A⁻¹ (U N_s)ᵀ`; rank-deficient in dual support, where its
    /// null space is the internal-force torque manifold.
    pub b: DMatrix<f64>,
    /// `L* = I − (U N_s) · UN̄_s`, idempotent projector onto internal torques.
    pub l_star: DMatrix<f64>,
}

impl ActuatedProjection {
    pub fn build(
        model: &RobotModel,
        terms: &DynamicsTerms,
        contacts: &ContactSet,
    ) -> Result<Self, ControlError> {
        let u = model.selection_matrix();
        let un_s = &u * &contacts.n_s;
        let b = &un_s * &contacts.a_inv * un_s.transpose();
        let b_pinv = math::sym_pinv(&b, math::PINV_CUTOFF, math::PINV_DAMPING);
        let un_s_bar = &contacts.a_inv * un_s.transpose() * &b_pinv;
        let n_act = u.nrows();
        let l_star = DMatrix::identity(n_act, n_act) - &un_s * &un_s_bar;
        let _ = terms;
        Ok(Self {
            u,
            un_s,
            un_s_bar,
            b,
            l_star,
        })
    }

    pub fn n_actuated(&self) -> usize {
        self.u.nrows()
    }
}

/// Solve the contact-constrained forward dynamics for accelerations and
/// constraint forces under an actuated torque command.
///
/// Returns `(q̈, λ)` where λ stacks the per-contact forces the ground exerts
/// on the robot. `extra_force` is an optional generalized external force
/// (disturbances), added to the right-hand side.
pub fn constrained_forward_dynamics(
    model: &RobotModel,
    terms: &DynamicsTerms,
    contacts: &ContactSet,
    tau_control: &DVector<f64>,
    extra_force: Option<&DVector<f64>>,
) -> Result<(DVector<f64>, DVector<f64>), ControlError> {
    let mut rhs = model.embed_actuation(tau_control)? - &terms.b - &terms.g;
    if let Some(f) = extra_force {
        rhs += f;
    }
    // Force the robot applies to the ground, from the eliminated second row
    // of the contact-constrained system.
    let lambda_on_ground =
        contacts.jbar_s.transpose() * &rhs + &contacts.lambda_s * &contacts.jdot_s_qdot;
    let qddot = &contacts.a_inv * (&rhs - contacts.j_s.transpose() * &lambda_on_ground);
    Ok((qddot, -lambda_on_ground))
}

/// Assemble the whole-body torque command `τ = J*ᵀ F_task + L*ᵀ Γ_int`.
pub fn whole_body_command(
    task: Option<(&TaskSpace, &DVector<f64>)>,
    internal_torque: Option<&DVector<f64>>,
    proj: &ActuatedProjection,
) -> DVector<f64> {
    let mut tau = DVector::zeros(proj.n_actuated());
    if let Some((ts, f)) = task {
        tau += ts.j_star.transpose() * f;
    }
    if let Some(gamma) = internal_torque {
        tau += proj.l_star.transpose() * gamma;
    }
    tau
}

#[cfg(test)]
mod tests;
