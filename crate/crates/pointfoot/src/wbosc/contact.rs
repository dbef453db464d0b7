//! Contact sets and the dynamically consistent support projections.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::math;
use crate::model::{BodyId, DynamicsTerms, GeneralizedState, RobotModel};

use super::ControlError;

/// Condition-number limit on `J_s A⁻¹ J_sᵀ` above which a contact set is
/// rejected as singular.
pub const CONTACT_CONDITION_LIMIT: f64 = 1e10;

/// One contact point's kinematics, rows matching the model mode.
#[derive(Debug, Clone)]
pub struct ContactJacobian {
    pub body: BodyId,
    /// Contact point in the body frame.
    pub point: Vector3<f64>,
    /// World position of the contact point.
    pub position: Vector3<f64>,
    /// Point Jacobian (mode rows × n).
    pub jacobian: DMatrix<f64>,
    /// Drift term `J̇ q̇` (mode rows).
    pub bias: DVector<f64>,
}

impl ContactJacobian {
    pub fn at_point(
        model: &RobotModel,
        state: &GeneralizedState,
        body: BodyId,
        point: Vector3<f64>,
    ) -> Result<Self, ControlError> {
        Ok(Self {
            body,
            point,
            position: model.point_position(state, body, &point)?,
            jacobian: model.point_jacobian(state, body, &point)?,
            bias: model.point_bias_acceleration(state, body, &point)?,
        })
    }
}

/// Active contacts with their stacked support Jacobian context.
///
/// Satisfies the projector identities `J_s N_s = 0`, `N_s N_s = N_s` and
/// `N_s A⁻¹ J_sᵀ = 0` to machine precision.
#[derive(Debug, Clone)]
pub struct ContactSet {
    pub contacts: Vec<ContactJacobian>,
    /// Stacked support Jacobian (k × n).
    pub j_s: DMatrix<f64>,
    /// Stacked drift `J̇_s q̇` (k).
    pub jdot_s_qdot: DVector<f64>,
    /// Constraint-space inertia `Λ_s = [J_s A⁻¹ J_sᵀ]⁻¹`.
    pub lambda_s: DMatrix<f64>,
    /// Dynamically consistent inverse `J̄_s = A⁻¹ J_sᵀ Λ_s`.
    pub jbar_s: DMatrix<f64>,
    /// Null-space projector `N_s = I − J̄_s J_s`.
    pub n_s: DMatrix<f64>,
    /// Cached `A⁻¹` of the configuration the set was built at.
    pub a_inv: DMatrix<f64>,
}

impl ContactSet {
    /// Build a contact set directly from (body, local point) pairs.
    pub fn from_points(
        model: &RobotModel,
        state: &GeneralizedState,
        terms: &DynamicsTerms,
        points: &[(BodyId, Vector3<f64>)],
    ) -> Result<Self, ControlError> {
        let jacs = points
            .iter()
            .map(|(b, p)| ContactJacobian::at_point(model, state, *b, *p))
            .collect::<Result<Vec<_>, _>>()?;
        build_contact_set(terms, jacs)
    }

    pub fn n_constraints(&self) -> usize {
        self.j_s.nrows()
    }

    pub fn n_contacts(&self) -> usize {
        self.contacts.len()
    }

    /// Row dimension of each contact (2 planar, 3 spatial).
    pub fn contact_dim(&self) -> usize {
        if self.contacts.is_empty() {
            0
        } else {
            self.contacts[0].jacobian.nrows()
        }
    }

    /// Rows of the stacked constraint space belonging to contact `i`.
    pub fn contact_rows(&self, i: usize) -> std::ops::Range<usize> {
        let mut start = 0;
        for c in &self.contacts[..i] {
            start += c.jacobian.nrows();
        }
        start..start + self.contacts[i].jacobian.nrows()
    }
}

/// Assemble the support projections for a set of contact Jacobians.
///
/// Fails with [`ControlError::SingularContact`] when the constraint-space
/// Gram matrix `J_s A⁻¹ J_sᵀ` is conditioned worse than
/// [`CONTACT_CONDITION_LIMIT`].
pub fn build_contact_set(
    terms: &DynamicsTerms,
    contacts: Vec<ContactJacobian>,
) -> Result<ContactSet, ControlError> {
    let n = terms.n_dofs();
    let k: usize = contacts.iter().map(|c| c.jacobian.nrows()).sum();
    let mut j_s = DMatrix::zeros(k, n);
    let mut jdot_s_qdot = DVector::zeros(k);
    let mut row = 0;
    for c in &contacts {
        let rows = c.jacobian.nrows();
        if c.jacobian.ncols() != n {
            return Err(ControlError::TaskDimensionMismatch {
                expected: n,
                got: c.jacobian.ncols(),
            });
        }
        j_s.view_mut((row, 0), (rows, n)).copy_from(&c.jacobian);
        jdot_s_qdot.rows_mut(row, rows).copy_from(&c.bias);
        row += rows;
    }

    let a_inv = math::spd_inverse(&terms.a);
    let gram = &j_s * &a_inv * j_s.transpose();
    let svals = math::sym_eigenvalues(&gram);
    let cond = math::sym_condition_number(&gram);
    if cond > CONTACT_CONDITION_LIMIT {
        return Err(ControlError::SingularContact {
            cond,
            limit: CONTACT_CONDITION_LIMIT,
            svals,
        });
    }
    let lambda_s = math::spd_inverse(&gram);
    let jbar_s = &a_inv * j_s.transpose() * &lambda_s;
    let n_s = DMatrix::identity(n, n) - &jbar_s * &j_s;

    Ok(ContactSet {
        contacts,
        j_s,
        jdot_s_qdot,
        lambda_s,
        jbar_s,
        n_s,
        a_inv,
    })
}
