//! Contact-transition torque blending.
//!
//! Switching the controller between dual and single contact changes the
//! constraint set instantaneously and with it the commanded torques. The
//! transition bridges the jump: the single-contact controller adds the
//! swing foot as a force task whose reference is the reaction force that
//! foot would carry in dual contact, ramped linearly over the transition
//! window (down when lifting, up when landing).

use nalgebra::DVector;

use crate::model::{DynamicsTerms, RobotModel};

use super::{ContactSet, ControlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionDirection {
    /// Ramp `w`: 1 → 0, unloading the foot before it lifts.
    Lifting,
    /// Ramp `w`: 0 → 1, loading the foot after touchdown.
    Landing,
}

/// State of one contact transition.
#[derive(Debug, Clone)]
pub struct TransitionState {
    pub direction: TransitionDirection,
    /// Cached swing-foot reaction force (the force the foot exerts on the
    /// ground in dual contact), mode rows. Captured from the last dual-
    /// support tick when lifting, or from one dual-contact controller
    /// evaluation at transition start when landing.
    pub f_ext_dual: DVector<f64>,
    /// Ramp duration, s.
    pub duration: f64,
    /// Time the transition started, s.
    pub start_time: f64,
}

impl TransitionState {
    pub fn new(
        direction: TransitionDirection,
        f_ext_dual: Option<DVector<f64>>,
        duration: f64,
        start_time: f64,
    ) -> Result<Self, ControlError> {
        let f_ext_dual = f_ext_dual.ok_or_else(|| {
            ControlError::TransitionSetup("swing-foot reaction force not cached".into())
        })?;
        Ok(Self {
            direction,
            f_ext_dual,
            duration,
            start_time,
        })
    }

    /// Ramp scalar `w ∈ [0, 1]` at time `t`, linear over the window.
    pub fn ramp(&self, t: f64) -> f64 {
        let s = ((t - self.start_time) / self.duration).clamp(0.0, 1.0);
        match self.direction {
            TransitionDirection::Lifting => 1.0 - s,
            TransitionDirection::Landing => s,
        }
    }

    /// Swing-foot feedforward force at time `t`: `w · f_ext,dual`.
    pub fn swing_feedforward(&self, t: f64) -> DVector<f64> {
        self.ramp(t) * &self.f_ext_dual
    }

    pub fn finished(&self, t: f64) -> bool {
        t >= self.start_time + self.duration
    }
}

/// Reaction force carried by one contact of a dual set under the command
/// `tau_control` (the force that foot exerts on the ground), extracted from
/// the constraint-force row of the contact-constrained dynamics.
pub fn swing_reaction_force(
    model: &RobotModel,
    terms: &DynamicsTerms,
    dual_contacts: &ContactSet,
    tau_control: &DVector<f64>,
    swing_index: usize,
) -> Result<DVector<f64>, ControlError> {
    if dual_contacts.n_contacts() != 2 {
        return Err(ControlError::TransitionSetup(format!(
            "dual contact set required, have {} contact(s)",
            dual_contacts.n_contacts()
        )));
    }
    let rhs = model.embed_actuation(tau_control)? - &terms.b - &terms.g;
    let lambda_on_ground = dual_contacts.jbar_s.transpose() * rhs
        + &dual_contacts.lambda_s * &dual_contacts.jdot_s_qdot;
    let rows = dual_contacts.contact_rows(swing_index);
    Ok(lambda_on_ground.rows(rows.start, rows.len()).into())
}
