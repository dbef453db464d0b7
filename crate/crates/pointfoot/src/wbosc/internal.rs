//! Feedback internal-force control for dual point contacts.
//!
//! A dual-support point-foot biped has a single internal-force dimension:
//! the tension/compression along the line between the two contact points.
//! [`build_w_int`] constructs the extraction row `W_int = S_t R_t Δ_t`
//! mapping the stacked foot-on-ground reaction forces `(F_R, F_L)` to that
//! tension; positive values mean the feet push outwards.

use nalgebra::{DMatrix, DVector, RowDVector, Vector3};

use crate::model::{DynamicsTerms, ModelMode, RobotModel};

use super::{ActuatedProjection, ContactSet, ControlError, TaskSet, TaskSpace};

const MIN_FOOT_SEPARATION: f64 = 1e-6;
const MIN_INTERNAL_JACOBIAN_NORM: f64 = 1e-9;

/// Internal-force extraction row for two 3-D contact forces (1 × 6), built
/// from the world positions of the right and left contact points.
pub fn build_w_int(
    p_right: &Vector3<f64>,
    p_left: &Vector3<f64>,
) -> Result<RowDVector<f64>, ControlError> {
    let diff = p_right - p_left;
    let norm = diff.norm();
    if norm < MIN_FOOT_SEPARATION {
        return Err(ControlError::DegenerateGeometry(format!(
            "contact points coincide (separation {norm:.3e} m)"
        )));
    }
    let x_hat = diff / norm;
    // W = S_t R_t Δ_t with S_t selecting the tension row; only the x̂ row of
    // R_t survives the selection.
    let mut w = RowDVector::zeros(6);
    for i in 0..3 {
        w[i] = x_hat[i];
        w[3 + i] = -x_hat[i];
    }
    Ok(w)
}

/// Internal-force extraction row adapted to a contact set's stacked rows
/// (1 × k): planar contacts contribute their (x, z) components.
pub fn contact_w_int(
    contacts: &ContactSet,
    mode: ModelMode,
    right: usize,
    left: usize,
) -> Result<DMatrix<f64>, ControlError> {
    if contacts.n_contacts() != 2 {
        return Err(ControlError::UndefinedInternalForce(contacts.n_contacts()));
    }
    let w6 = build_w_int(
        &contacts.contacts[right].position,
        &contacts.contacts[left].position,
    )?;
    let rows = mode.point_rows();
    let mut w = DMatrix::zeros(1, contacts.n_constraints());
    let right_rows = contacts.contact_rows(right);
    let left_rows = contacts.contact_rows(left);
    for (i, &axis) in rows.iter().enumerate() {
        w[(0, right_rows.start + i)] = w6[axis];
        w[(0, left_rows.start + i)] = w6[3 + axis];
    }
    Ok(w)
}

/// Desired internal-force behavior plus the model quantities needed to
/// realize and monitor it.
#[derive(Debug, Clone)]
pub struct InternalForceSpec {
    /// Extraction row over the contact set's stacked constraint space.
    pub w_int: DMatrix<f64>,
    /// Desired tension, N.
    pub f_int_ref: f64,
    /// Proportional feedback gain on the internal-force error.
    pub k_f: f64,
}

impl InternalForceSpec {
    pub fn new(
        contacts: &ContactSet,
        mode: ModelMode,
        f_int_ref: f64,
        k_f: f64,
    ) -> Result<Self, ControlError> {
        Ok(Self {
            w_int: contact_w_int(contacts, mode, 0, 1)?,
            f_int_ref,
            k_f,
        })
    }
}

/// Model-side internal-force quantities for the current tick.
#[derive(Debug, Clone)]
pub struct InternalForceModel {
    /// Coriolis effects in internal-force space.
    pub mu_i: f64,
    /// Gravity effects in internal-force space.
    pub p_i: f64,
    /// Internal force induced by the task command `F_{int,{t}}`.
    pub f_int_task: f64,
    /// Reduced internal-force Jacobian column `J̄*_{i|l} = L* U J̄_s W_intᵀ`.
    pub jbar_il: DVector<f64>,
}

impl InternalForceModel {
    pub fn build(
        spec: &InternalForceSpec,
        terms: &DynamicsTerms,
        contacts: &ContactSet,
        proj: &ActuatedProjection,
        task: Option<(&TaskSpace, &DVector<f64>)>,
        omit_coriolis: bool,
    ) -> Result<Self, ControlError> {
        let w = &spec.w_int;
        let wj = w * contacts.jbar_s.transpose(); // 1×n
        let mu_i = if omit_coriolis {
            0.0
        } else {
            (&wj * &terms.b
                - w * &contacts.lambda_s * &contacts.jdot_s_qdot)[(0, 0)]
        };
        let p_i = (&wj * &terms.g)[(0, 0)];
        let f_int_task = match task {
            Some((ts, f)) => (&wj * proj.u.transpose() * ts.j_star.transpose() * f)[(0, 0)],
            None => 0.0,
        };
        let jbar_il = (&proj.l_star * &proj.u * &contacts.jbar_s * w.transpose()).column(0).into();
        Ok(Self {
            mu_i,
            p_i,
            f_int_task,
            jbar_il,
        })
    }
}

/// Sensor-based actual internal force: the tension obtained by projecting
/// the constraint forces reconstructed from the spring-sensed joint torques.
pub fn actual_internal_force(
    model: &RobotModel,
    terms: &DynamicsTerms,
    contacts: &ContactSet,
    w_int: &DMatrix<f64>,
    tau_sensor: &DVector<f64>,
) -> Result<f64, ControlError> {
    if contacts.n_contacts() != 2 {
        return Err(ControlError::UndefinedInternalForce(contacts.n_contacts()));
    }
    let rhs = model.embed_actuation(tau_sensor)? - &terms.b - &terms.g;
    let lambda_on_ground =
        contacts.jbar_s.transpose() * rhs + &contacts.lambda_s * &contacts.jdot_s_qdot;
    Ok((w_int * lambda_on_ground)[(0, 0)])
}

/// Internal torque set-point with proportional force feedback:
///
/// `Γ_int = J*ᵀ_{i|l} (F_ref − F_{int,{t}} + μ_i + p_i + K_F (F_ref − F_act))`
///
/// The result is meant to be applied through `L*ᵀ`, keeping it in the
/// zero-acceleration torque manifold.
pub fn internal_torque(
    spec: &InternalForceSpec,
    ifm: &InternalForceModel,
    f_int_act: f64,
) -> Result<DVector<f64>, ControlError> {
    let v = &ifm.jbar_il;
    let norm_sq = v.norm_squared();
    if norm_sq < MIN_INTERNAL_JACOBIAN_NORM {
        return Err(ControlError::DegenerateGeometry(
            "internal-force Jacobian vanishes".into(),
        ));
    }
    let target = spec.f_int_ref - ifm.f_int_task
        + ifm.mu_i
        + ifm.p_i
        + spec.k_f * (spec.f_int_ref - f_int_act);
    // Left pseudo-inverse of the single-column reduced Jacobian.
    Ok(v * (target / norm_sq))
}
