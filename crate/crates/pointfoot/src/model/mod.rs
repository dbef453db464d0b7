//! Floating-base articulated rigid-body model.
//!
//! A [`RobotModel`] is compiled from a [`description::RobotDescription`]
//! into a chain of single-DOF joints: the floating base contributes 3
//! (planar) or 6 (spatial) virtual prismatic/revolute coordinates, followed
//! by the declared revolute leg joints. All quantities are computed in the
//! world frame with dense `nalgebra` types; the models here are small
//! (≤ 12 DOF), so no sparsity tricks are attempted.
//!
//! The mass matrix comes from a composite-rigid-body recursion and the bias
//! forces from recursive inverse dynamics: `b + g` is inverse dynamics at
//! zero acceleration, `g` alone is inverse dynamics at zero velocity and
//! acceleration.

pub mod description;
pub mod presets;

use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Rotation3, Translation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use description::{ModeDescription, RobotDescription};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown body '{0}'")]
    UnknownBody(String),
    #[error("invalid robot description: {0}")]
    BadDescription(String),
}

/// Floating-base parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    /// Base coordinates `[x, z, pitch]`; point quantities have 2 rows (x, z).
    Planar,
    /// Base coordinates `[x, y, z, yaw, pitch, roll]` (ZYX Euler); point
    /// quantities have 3 rows.
    Spatial,
}

impl ModelMode {
    pub fn base_dofs(self) -> usize {
        match self {
            ModelMode::Planar => 3,
            ModelMode::Spatial => 6,
        }
    }

    /// World-frame rows used for point positions/Jacobians in this mode.
    pub fn point_rows(self) -> &'static [usize] {
        match self {
            ModelMode::Planar => &[0, 2],
            ModelMode::Spatial => &[0, 1, 2],
        }
    }

    pub fn point_dim(self) -> usize {
        self.point_rows().len()
    }
}

/// Index of a link in the compiled model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BodyId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DofKind {
    Prismatic,
    Revolute,
}

#[derive(Debug, Clone)]
struct Dof {
    parent: Option<usize>,
    /// Fixed transform from the parent frame to this DOF's pre-motion frame.
    origin: Isometry3<f64>,
    /// Motion axis in the pre-motion frame (unit).
    axis: Vector3<f64>,
    kind: DofKind,
    actuated: bool,
    rotor_inertia: f64,
}

#[derive(Debug, Clone)]
struct Body {
    name: String,
    dof: usize,
    mass: f64,
    /// COM in the DOF (link) frame.
    com: Vector3<f64>,
    /// Rotational inertia about the COM, link frame.
    inertia: Matrix3<f64>,
}

/// Immutable articulated model; shareable across concurrent runs.
#[derive(Debug, Clone)]
pub struct RobotModel {
    name: String,
    mode: ModelMode,
    gravity: f64,
    dofs: Vec<Dof>,
    bodies: Vec<Body>,
    total_mass: f64,
}

/// Generalized positions and velocities plus a timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub time: f64,
}

impl GeneralizedState {
    pub fn new(q: DVector<f64>, qdot: DVector<f64>, time: f64) -> Result<Self, ModelError> {
        if q.len() != qdot.len() {
            return Err(ModelError::DimensionMismatch {
                expected: q.len(),
                got: qdot.len(),
            });
        }
        Ok(Self { q, qdot, time })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            q: DVector::zeros(n),
            qdot: DVector::zeros(n),
            time: 0.0,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.q.len()
    }
}

/// Inertia matrix and bias force vectors of the current configuration.
#[derive(Debug, Clone)]
pub struct DynamicsTerms {
    /// Generalized inertia matrix, symmetric positive definite.
    pub a: DMatrix<f64>,
    /// Coriolis/centrifugal generalized forces (zero at zero velocity).
    pub b: DVector<f64>,
    /// Gravity generalized forces (gradient of the potential energy).
    pub g: DVector<f64>,
}

impl DynamicsTerms {
    pub fn compute(
        model: &RobotModel,
        state: &GeneralizedState,
        include_rotor_inertia: bool,
    ) -> Result<Self, ModelError> {
        let a = model.mass_matrix(state, include_rotor_inertia)?;
        let (b, g) = model.bias_forces(state)?;
        Ok(Self { a, b, g })
    }

    pub fn n_dofs(&self) -> usize {
        self.a.nrows()
    }
}

/// Per-DOF world-frame kinematics for one configuration.
struct FrameKin {
    /// World position of the post-motion frame origin.
    pos: Vector3<f64>,
    /// World rotation of the post-motion frame.
    rot: Rotation3<f64>,
    /// World direction of the motion axis.
    axis: Vector3<f64>,
}

struct FrameVel {
    omega: Vector3<f64>,
    vel: Vector3<f64>,
}

struct FrameAcc {
    alpha: Vector3<f64>,
    acc: Vector3<f64>,
}

impl RobotModel {
    pub fn from_description(desc: &RobotDescription) -> Result<Self, ModelError> {
        desc.validate()?;
        let mode = match desc.mode {
            ModeDescription::Planar => ModelMode::Planar,
            ModeDescription::Spatial => ModelMode::Spatial,
        };

        let mut dofs = Vec::new();
        let x = Vector3::x();
        let y = Vector3::y();
        let z = Vector3::z();
        let base_axes: Vec<(Vector3<f64>, DofKind)> = match mode {
            ModelMode::Planar => vec![
                (x, DofKind::Prismatic),
                (z, DofKind::Prismatic),
                (y, DofKind::Revolute),
            ],
            ModelMode::Spatial => vec![
                (x, DofKind::Prismatic),
                (y, DofKind::Prismatic),
                (z, DofKind::Prismatic),
                (z, DofKind::Revolute),
                (y, DofKind::Revolute),
                (x, DofKind::Revolute),
            ],
        };
        for (i, (axis, kind)) in base_axes.into_iter().enumerate() {
            dofs.push(Dof {
                parent: if i == 0 { None } else { Some(i - 1) },
                origin: Isometry3::identity(),
                axis,
                kind,
                actuated: false,
                rotor_inertia: 0.0,
            });
        }
        let base_dof = dofs.len() - 1;

        let mut bodies = vec![Body {
            name: desc.base.name.clone(),
            dof: base_dof,
            mass: desc.base.mass,
            com: Vector3::from(desc.base.com),
            inertia: Matrix3::from_fn(|r, c| desc.base.inertia[r][c]),
        }];

        for joint in &desc.joints {
            let parent_body = bodies
                .iter()
                .find(|b| b.name == joint.parent)
                .ok_or_else(|| ModelError::UnknownBody(joint.parent.clone()))?;
            let parent_dof = parent_body.dof;
            let rot = Rotation3::from_euler_angles(joint.rpy[2], joint.rpy[1], joint.rpy[0]);
            let origin = Isometry3::from_parts(
                Translation3::from(Vector3::from(joint.origin)),
                rot.into(),
            );
            dofs.push(Dof {
                parent: Some(parent_dof),
                origin,
                axis: Vector3::from(joint.axis).normalize(),
                kind: DofKind::Revolute,
                actuated: true,
                rotor_inertia: joint.rotor_inertia,
            });
            bodies.push(Body {
                name: joint.child.name.clone(),
                dof: dofs.len() - 1,
                mass: joint.child.mass,
                com: Vector3::from(joint.child.com),
                inertia: Matrix3::from_fn(|r, c| joint.child.inertia[r][c]),
            });
        }

        let total_mass = bodies.iter().map(|b| b.mass).sum();
        Ok(Self {
            name: desc.name.clone(),
            mode,
            gravity: desc.gravity,
            dofs,
            bodies,
            total_mass,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::from_description(&RobotDescription::from_json(text)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn n_actuated(&self) -> usize {
        self.dofs.iter().filter(|d| d.actuated).count()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn actuated_selector(&self) -> Vec<bool> {
        self.dofs.iter().map(|d| d.actuated).collect()
    }

    /// Generalized-coordinate index of the base pitch angle.
    pub fn pitch_index(&self) -> usize {
        match self.mode {
            ModelMode::Planar => 2,
            ModelMode::Spatial => 4,
        }
    }

    /// Generalized-coordinate index of the base roll angle (spatial only).
    pub fn roll_index(&self) -> Option<usize> {
        match self.mode {
            ModelMode::Planar => None,
            ModelMode::Spatial => Some(5),
        }
    }

    pub fn body_id(&self, name: &str) -> Result<BodyId, ModelError> {
        self.bodies
            .iter()
            .position(|b| b.name == name)
            .map(BodyId)
            .ok_or_else(|| ModelError::UnknownBody(name.to_string()))
    }

    pub fn body_name(&self, id: BodyId) -> &str {
        &self.bodies[id.0].name
    }

    pub fn n_bodies(&self) -> usize {
        self.bodies.len()
    }

    /// Selection matrix `U` from generalized coordinates to actuated joints.
    pub fn selection_matrix(&self) -> DMatrix<f64> {
        let n = self.n_dofs();
        let na = self.n_actuated();
        let mut u = DMatrix::zeros(na, n);
        let mut row = 0;
        for (i, d) in self.dofs.iter().enumerate() {
            if d.actuated {
                u[(row, i)] = 1.0;
                row += 1;
            }
        }
        u
    }

    /// Embed an actuated torque vector into generalized coordinates (`Uᵀ τ`).
    pub fn embed_actuation(&self, tau: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        if tau.len() != self.n_actuated() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_actuated(),
                got: tau.len(),
            });
        }
        let mut out = DVector::zeros(self.n_dofs());
        let mut row = 0;
        for (i, d) in self.dofs.iter().enumerate() {
            if d.actuated {
                out[i] = tau[row];
                row += 1;
            }
        }
        Ok(out)
    }

    fn check_state(&self, state: &GeneralizedState) -> Result<(), ModelError> {
        if state.q.len() != self.n_dofs() || state.qdot.len() != self.n_dofs() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_dofs(),
                got: state.q.len(),
            });
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // Kinematics passes
    // ------------------------------------------------------------------

    fn kinematics(&self, q: &DVector<f64>) -> Vec<FrameKin> {
        let mut frames: Vec<FrameKin> = Vec::with_capacity(self.dofs.len());
        for (i, dof) in self.dofs.iter().enumerate() {
            let (parent_rot, parent_pos) = match dof.parent {
                Some(p) => (frames[p].rot, frames[p].pos),
                None => (Rotation3::identity(), Vector3::zeros()),
            };
            let pre_rot = parent_rot * dof.origin.rotation.to_rotation_matrix();
            let pre_pos = parent_pos + parent_rot * dof.origin.translation.vector;
            let axis_w = pre_rot * dof.axis;
            let (rot, pos) = match dof.kind {
                DofKind::Revolute => {
                    let m = Rotation3::from_axis_angle(
                        &nalgebra::Unit::new_unchecked(dof.axis),
                        q[i],
                    );
                    (pre_rot * m, pre_pos)
                }
                DofKind::Prismatic => (pre_rot, pre_pos + axis_w * q[i]),
            };
            frames.push(FrameKin {
                pos,
                rot,
                axis: axis_w,
            });
        }
        frames
    }

    fn velocities(&self, frames: &[FrameKin], qdot: &DVector<f64>) -> Vec<FrameVel> {
        let mut vels: Vec<FrameVel> = Vec::with_capacity(self.dofs.len());
        for (i, dof) in self.dofs.iter().enumerate() {
            let (w_p, v_p, o_p) = match dof.parent {
                Some(p) => (vels[p].omega, vels[p].vel, frames[p].pos),
                None => (Vector3::zeros(), Vector3::zeros(), Vector3::zeros()),
            };
            let r = frames[i].pos - o_p;
            let mut omega = w_p;
            let mut vel = v_p + w_p.cross(&r);
            match dof.kind {
                DofKind::Revolute => omega += frames[i].axis * qdot[i],
                DofKind::Prismatic => vel += frames[i].axis * qdot[i],
            }
            vels.push(FrameVel { omega, vel });
        }
        vels
    }

    fn accelerations(
        &self,
        frames: &[FrameKin],
        vels: &[FrameVel],
        qdot: &DVector<f64>,
        qddot: &DVector<f64>,
        root_acc: Vector3<f64>,
    ) -> Vec<FrameAcc> {
        let mut accs: Vec<FrameAcc> = Vec::with_capacity(self.dofs.len());
        for (i, dof) in self.dofs.iter().enumerate() {
            let (al_p, ac_p, w_p, o_p) = match dof.parent {
                Some(p) => (accs[p].alpha, accs[p].acc, vels[p].omega, frames[p].pos),
                None => (Vector3::zeros(), root_acc, Vector3::zeros(), Vector3::zeros()),
            };
            let r = frames[i].pos - o_p;
            let axis = frames[i].axis;
            let mut alpha = al_p;
            let mut acc = ac_p + al_p.cross(&r) + w_p.cross(&w_p.cross(&r));
            match dof.kind {
                DofKind::Revolute => {
                    alpha += axis * qddot[i] + w_p.cross(&(axis * qdot[i]));
                }
                DofKind::Prismatic => {
                    acc += axis * qddot[i] + 2.0 * w_p.cross(&(axis * qdot[i]));
                }
            }
            accs.push(FrameAcc { alpha, acc });
        }
        accs
    }

    /// Indices of the DOFs on the path from the root to `dof`, ascending.
    fn path_to(&self, dof: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = Some(dof);
        while let Some(i) = cur {
            path.push(i);
            cur = self.dofs[i].parent;
        }
        path.reverse();
        path
    }

    // ------------------------------------------------------------------
    // Dynamics
    // ------------------------------------------------------------------

    /// Generalized inertia matrix via the composite-rigid-body recursion.
    ///
    /// With `include_rotor_inertia` the reflected rotor inertia of each
    /// actuated joint is added to its diagonal entry.
    pub fn mass_matrix(
        &self,
        state: &GeneralizedState,
        include_rotor_inertia: bool,
    ) -> Result<DMatrix<f64>, ModelError> {
        self.check_state(state)?;
        let n = self.n_dofs();
        let frames = self.kinematics(&state.q);

        // Composite bodies per DOF: (mass, com, inertia about com), world frame.
        let mut comp_m = vec![0.0_f64; n];
        let mut comp_c = vec![Vector3::zeros(); n];
        let mut comp_i = vec![Matrix3::zeros(); n];
        for body in &self.bodies {
            let f = &frames[body.dof];
            let c = f.pos + f.rot * body.com;
            let i_w = f.rot * body.inertia * f.rot.transpose();
            merge_inertia(
                &mut comp_m[body.dof],
                &mut comp_c[body.dof],
                &mut comp_i[body.dof],
                body.mass,
                c,
                i_w,
            );
        }
        for i in (0..n).rev() {
            if let Some(p) = self.dofs[i].parent {
                let (m, c, iw) = (comp_m[i], comp_c[i], comp_i[i]);
                if m > 0.0 {
                    merge_inertia(&mut comp_m[p], &mut comp_c[p], &mut comp_i[p], m, c, iw);
                }
            }
        }

        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            if comp_m[j] == 0.0 {
                continue;
            }
            let o_j = frames[j].pos;
            let axis_j = frames[j].axis;
            let d = comp_c[j] - o_j;
            // Inertial wrench (force, moment about o_j) for unit q̈_j.
            let (force, moment) = match self.dofs[j].kind {
                DofKind::Revolute => {
                    let f = comp_m[j] * axis_j.cross(&d);
                    let nq = comp_i[j] * axis_j + d.cross(&f);
                    (f, nq)
                }
                DofKind::Prismatic => {
                    let f = comp_m[j] * axis_j;
                    (f, d.cross(&f))
                }
            };
            let mut cur = Some(j);
            while let Some(i) = cur {
                let o_i = frames[i].pos;
                let val = match self.dofs[i].kind {
                    DofKind::Revolute => frames[i].axis.dot(&(moment + (o_j - o_i).cross(&force))),
                    DofKind::Prismatic => frames[i].axis.dot(&force),
                };
                a[(i, j)] = val;
                a[(j, i)] = val;
                cur = self.dofs[i].parent;
            }
        }

        if include_rotor_inertia {
            for (i, dof) in self.dofs.iter().enumerate() {
                if dof.actuated {
                    a[(i, i)] += dof.rotor_inertia;
                }
            }
        }
        Ok(a)
    }

    /// Inverse dynamics: generalized forces realizing `qddot` at the given
    /// state, `A q̈ + b (+ g)`.
    pub fn inverse_dynamics(
        &self,
        state: &GeneralizedState,
        qddot: &DVector<f64>,
        with_gravity: bool,
    ) -> Result<DVector<f64>, ModelError> {
        self.check_state(state)?;
        if qddot.len() != self.n_dofs() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_dofs(),
                got: qddot.len(),
            });
        }
        let n = self.n_dofs();
        let frames = self.kinematics(&state.q);
        let vels = self.velocities(&frames, &state.qdot);
        // Gravity enters as a fictitious upward root acceleration.
        let root_acc = if with_gravity {
            Vector3::new(0.0, 0.0, self.gravity)
        } else {
            Vector3::zeros()
        };
        let accs = self.accelerations(&frames, &vels, &state.qdot, qddot, root_acc);

        let mut f = vec![Vector3::<f64>::zeros(); n];
        let mut m = vec![Vector3::<f64>::zeros(); n];
        for body in &self.bodies {
            let i = body.dof;
            let fr = &frames[i];
            let c = fr.pos + fr.rot * body.com;
            let d = c - fr.pos;
            let i_w = fr.rot * body.inertia * fr.rot.transpose();
            let omega = vels[i].omega;
            let a_c = accs[i].acc + accs[i].alpha.cross(&d) + omega.cross(&omega.cross(&d));
            let force = body.mass * a_c;
            let moment = i_w * accs[i].alpha + omega.cross(&(i_w * omega));
            f[i] += force;
            m[i] += moment + d.cross(&force);
        }

        let mut tau = DVector::zeros(n);
        for i in (0..n).rev() {
            tau[i] = match self.dofs[i].kind {
                DofKind::Revolute => frames[i].axis.dot(&m[i]),
                DofKind::Prismatic => frames[i].axis.dot(&f[i]),
            };
            if let Some(p) = self.dofs[i].parent {
                let shift = frames[i].pos - frames[p].pos;
                let fi = f[i];
                let mi = m[i];
                f[p] += fi;
                m[p] += mi + shift.cross(&fi);
            }
        }
        Ok(tau)
    }

    /// Coriolis/centrifugal vector `b` and gravity vector `g`, separately,
    /// so callers may omit `b`.
    pub fn bias_forces(
        &self,
        state: &GeneralizedState,
    ) -> Result<(DVector<f64>, DVector<f64>), ModelError> {
        let zero = DVector::zeros(self.n_dofs());
        let b_plus_g = self.inverse_dynamics(state, &zero, true)?;
        let rest = GeneralizedState {
            q: state.q.clone(),
            qdot: zero.clone(),
            time: state.time,
        };
        let g = self.inverse_dynamics(&rest, &zero, true)?;
        Ok((b_plus_g - &g, g))
    }

    // ------------------------------------------------------------------
    // Points, Jacobians, COM
    // ------------------------------------------------------------------

    fn check_body(&self, body: BodyId) -> Result<&Body, ModelError> {
        self.bodies
            .get(body.0)
            .ok_or_else(|| ModelError::UnknownBody(format!("#{}", body.0)))
    }

    /// World position of a body-fixed point.
    pub fn point_position(
        &self,
        state: &GeneralizedState,
        body: BodyId,
        offset: &Vector3<f64>,
    ) -> Result<Vector3<f64>, ModelError> {
        self.check_state(state)?;
        let b = self.check_body(body)?;
        let frames = self.kinematics(&state.q);
        let f = &frames[b.dof];
        Ok(f.pos + f.rot * offset)
    }

    /// World pose of a link frame.
    pub fn body_pose(
        &self,
        state: &GeneralizedState,
        body: BodyId,
    ) -> Result<Isometry3<f64>, ModelError> {
        self.check_state(state)?;
        let b = self.check_body(body)?;
        let frames = self.kinematics(&state.q);
        let f = &frames[b.dof];
        Ok(Isometry3::from_parts(Translation3::from(f.pos), f.rot.into()))
    }

    /// World velocity of a body-fixed point.
    pub fn point_velocity(
        &self,
        state: &GeneralizedState,
        body: BodyId,
        offset: &Vector3<f64>,
    ) -> Result<Vector3<f64>, ModelError> {
        self.check_state(state)?;
        let b = self.check_body(body)?;
        let frames = self.kinematics(&state.q);
        let vels = self.velocities(&frames, &state.qdot);
        let f = &frames[b.dof];
        let d = f.rot * offset;
        Ok(vels[b.dof].vel + vels[b.dof].omega.cross(&d))
    }

    /// Full 3-row world-frame linear Jacobian of a body-fixed point.
    pub fn point_jacobian_world(
        &self,
        state: &GeneralizedState,
        body: BodyId,
        offset: &Vector3<f64>,
    ) -> Result<DMatrix<f64>, ModelError> {
        self.check_state(state)?;
        let b = self.check_body(body)?;
        let frames = self.kinematics(&state.q);
        let f = &frames[b.dof];
        let p = f.pos + f.rot * offset;
        let mut jac = DMatrix::zeros(3, self.n_dofs());
        for k in self.path_to(b.dof) {
            let col = match self.dofs[k].kind {
                DofKind::Revolute => frames[k].axis.cross(&(p - frames[k].pos)),
                DofKind::Prismatic => frames[k].axis,
            };
            jac.column_mut(k).copy_from(&col);
        }
        Ok(jac)
    }

    /// Point Jacobian with rows matching the model mode: (x, z) in planar
    /// mode, (x, y, z) in spatial mode, so that `J q̇` is the point velocity.
    pub fn point_jacobian(
        &self,
        state: &GeneralizedState,
        body: BodyId,
        offset: &Vector3<f64>,
    ) -> Result<DMatrix<f64>, ModelError> {
        let full = self.point_jacobian_world(state, body, offset)?;
        Ok(select_rows(&full, self.mode.point_rows()))
    }

    /// Full 3-row drift term `J̇ q̇` of a body-fixed point (its acceleration
    /// at zero generalized acceleration, gravity excluded).
    pub fn point_bias_acceleration_world(
        &self,
        state: &GeneralizedState,
        body: BodyId,
        offset: &Vector3<f64>,
    ) -> Result<Vector3<f64>, ModelError> {
        self.check_state(state)?;
        let b = self.check_body(body)?;
        let frames = self.kinematics(&state.q);
        let vels = self.velocities(&frames, &state.qdot);
        let zero = DVector::zeros(self.n_dofs());
        let accs = self.accelerations(&frames, &vels, &state.qdot, &zero, Vector3::zeros());
        let f = &frames[b.dof];
        let d = f.rot * offset;
        let omega = vels[b.dof].omega;
        Ok(accs[b.dof].acc + accs[b.dof].alpha.cross(&d) + omega.cross(&omega.cross(&d)))
    }

    /// Mode-row drift term `J̇ q̇` of a body-fixed point.
    pub fn point_bias_acceleration(
        &self,
        state: &GeneralizedState,
        body: BodyId,
        offset: &Vector3<f64>,
    ) -> Result<DVector<f64>, ModelError> {
        let full = self.point_bias_acceleration_world(state, body, offset)?;
        Ok(DVector::from_iterator(
            self.mode.point_dim(),
            self.mode.point_rows().iter().map(|&r| full[r]),
        ))
    }

    /// Whole-robot center of mass, world frame.
    pub fn com(&self, state: &GeneralizedState) -> Result<Vector3<f64>, ModelError> {
        self.check_state(state)?;
        let frames = self.kinematics(&state.q);
        let mut c = Vector3::zeros();
        for body in &self.bodies {
            let f = &frames[body.dof];
            c += body.mass * (f.pos + f.rot * body.com);
        }
        Ok(c / self.total_mass)
    }

    pub fn com_velocity(&self, state: &GeneralizedState) -> Result<Vector3<f64>, ModelError> {
        self.check_state(state)?;
        let frames = self.kinematics(&state.q);
        let vels = self.velocities(&frames, &state.qdot);
        let mut v = Vector3::zeros();
        for body in &self.bodies {
            let f = &frames[body.dof];
            let d = f.rot * body.com;
            v += body.mass * (vels[body.dof].vel + vels[body.dof].omega.cross(&d));
        }
        Ok(v / self.total_mass)
    }

    /// Full 3-row COM Jacobian.
    pub fn com_jacobian_world(&self, state: &GeneralizedState) -> Result<DMatrix<f64>, ModelError> {
        self.check_state(state)?;
        let frames = self.kinematics(&state.q);
        let mut jac = DMatrix::zeros(3, self.n_dofs());
        for body in &self.bodies {
            let f = &frames[body.dof];
            let p = f.pos + f.rot * body.com;
            for k in self.path_to(body.dof) {
                let col = match self.dofs[k].kind {
                    DofKind::Revolute => frames[k].axis.cross(&(p - frames[k].pos)),
                    DofKind::Prismatic => frames[k].axis,
                };
                let scaled = col * body.mass;
                let mut c = jac.column_mut(k);
                c += scaled;
            }
        }
        jac /= self.total_mass;
        Ok(jac)
    }

    /// Full 3-row COM drift term `J̇_com q̇`.
    pub fn com_bias_acceleration_world(
        &self,
        state: &GeneralizedState,
    ) -> Result<Vector3<f64>, ModelError> {
        self.check_state(state)?;
        let frames = self.kinematics(&state.q);
        let vels = self.velocities(&frames, &state.qdot);
        let zero = DVector::zeros(self.n_dofs());
        let accs = self.accelerations(&frames, &vels, &state.qdot, &zero, Vector3::zeros());
        let mut a = Vector3::zeros();
        for body in &self.bodies {
            let f = &frames[body.dof];
            let d = f.rot * body.com;
            let omega = vels[body.dof].omega;
            a += body.mass
                * (accs[body.dof].acc
                    + accs[body.dof].alpha.cross(&d)
                    + omega.cross(&omega.cross(&d)));
        }
        Ok(a / self.total_mass)
    }

    // ------------------------------------------------------------------
    // Energies (used by conservation checks and diagnostics)
    // ------------------------------------------------------------------

    pub fn kinetic_energy(&self, state: &GeneralizedState) -> Result<f64, ModelError> {
        self.check_state(state)?;
        let frames = self.kinematics(&state.q);
        let vels = self.velocities(&frames, &state.qdot);
        let mut t = 0.0;
        for body in &self.bodies {
            let f = &frames[body.dof];
            let d = f.rot * body.com;
            let omega = vels[body.dof].omega;
            let v_c = vels[body.dof].vel + omega.cross(&d);
            let i_w = f.rot * body.inertia * f.rot.transpose();
            t += 0.5 * body.mass * v_c.norm_squared() + 0.5 * omega.dot(&(i_w * omega));
        }
        Ok(t)
    }

    pub fn potential_energy(&self, state: &GeneralizedState) -> Result<f64, ModelError> {
        self.check_state(state)?;
        let frames = self.kinematics(&state.q);
        let mut v = 0.0;
        for body in &self.bodies {
            let f = &frames[body.dof];
            let c = f.pos + f.rot * body.com;
            v += body.mass * self.gravity * c.z;
        }
        Ok(v)
    }
}

fn merge_inertia(
    m: &mut f64,
    c: &mut Vector3<f64>,
    i: &mut Matrix3<f64>,
    m2: f64,
    c2: Vector3<f64>,
    i2: Matrix3<f64>,
) {
    if *m == 0.0 {
        *m = m2;
        *c = c2;
        *i = i2;
        return;
    }
    let m_tot = *m + m2;
    let c_tot = (*m * *c + m2 * c2) / m_tot;
    let shift = |mass: f64, com: Vector3<f64>| -> Matrix3<f64> {
        let d = com - c_tot;
        mass * (Matrix3::identity() * d.norm_squared() - d * d.transpose())
    };
    *i = *i + shift(*m, *c) + i2 + shift(m2, c2);
    *m = m_tot;
    *c = c_tot;
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len(), m.ncols());
    for (ri, &r) in rows.iter().enumerate() {
        out.row_mut(ri).copy_from(&m.row(r));
    }
    out
}
