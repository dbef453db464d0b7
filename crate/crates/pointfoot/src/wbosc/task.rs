//! Operational tasks and contact-consistent task torque synthesis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::math;
use crate::model::{BodyId, DynamicsTerms, GeneralizedState, ModelMode, RobotModel};

use super::{ActuatedProjection, ContactSet, ControlError};

/// Condition-number limit on the task-space inertia.
const TASK_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub enum TaskKind {
    /// COM height (z), one row.
    ComHeight,
    /// Horizontal COM position: x in planar mode, (x, y) in spatial mode.
    ComPlanarPosition,
    /// Base pitch angle, one row.
    BodyPitch,
    /// Base roll angle (spatial only), one row.
    BodyRoll,
    /// Position of a body-fixed point, mode rows.
    FootPosition {
        body: BodyId,
        offset: nalgebra::Vector3<f64>,
    },
}

impl TaskKind {
    pub fn dim(&self, mode: ModelMode) -> usize {
        match self {
            TaskKind::ComHeight | TaskKind::BodyPitch | TaskKind::BodyRoll => 1,
            TaskKind::ComPlanarPosition => match mode {
                ModelMode::Planar => 1,
                ModelMode::Spatial => 2,
            },
            TaskKind::FootPosition { .. } => mode.point_dim(),
        }
    }

    /// Current task value, velocity, Jacobian and drift.
    pub fn eval(
        &self,
        model: &RobotModel,
        state: &GeneralizedState,
    ) -> Result<TaskEval, ControlError> {
        let n = model.n_dofs();
        match self {
            TaskKind::ComHeight => {
                let com = model.com(state)?;
                let v = model.com_velocity(state)?;
                let jac_full = model.com_jacobian_world(state)?;
                let drift = model.com_bias_acceleration_world(state)?;
                Ok(TaskEval {
                    pos: DVector::from_element(1, com.z),
                    vel: DVector::from_element(1, v.z),
                    jacobian: DMatrix::from_fn(1, n, |_, c| jac_full[(2, c)]),
                    jdot_qdot: DVector::from_element(1, drift.z),
                })
            }
            TaskKind::ComPlanarPosition => {
                let rows: &[usize] = match model.mode() {
                    ModelMode::Planar => &[0],
                    ModelMode::Spatial => &[0, 1],
                };
                let com = model.com(state)?;
                let v = model.com_velocity(state)?;
                let jac_full = model.com_jacobian_world(state)?;
                let drift = model.com_bias_acceleration_world(state)?;
                Ok(TaskEval {
                    pos: DVector::from_iterator(rows.len(), rows.iter().map(|&r| com[r])),
                    vel: DVector::from_iterator(rows.len(), rows.iter().map(|&r| v[r])),
                    jacobian: DMatrix::from_fn(rows.len(), n, |r, c| jac_full[(rows[r], c)]),
                    jdot_qdot: DVector::from_iterator(rows.len(), rows.iter().map(|&r| drift[r])),
                })
            }
            TaskKind::BodyPitch => coordinate_task(model, state, model.pitch_index()),
            TaskKind::BodyRoll => {
                let idx = model
                    .roll_index()
                    .ok_or_else(|| ControlError::InvalidTask("roll requires spatial mode".into()))?;
                coordinate_task(model, state, idx)
            }
            TaskKind::FootPosition { body, offset } => {
                let pos_full = model.point_position(state, *body, offset)?;
                let vel_full = model.point_velocity(state, *body, offset)?;
                let rows = model.mode().point_rows();
                Ok(TaskEval {
                    pos: DVector::from_iterator(rows.len(), rows.iter().map(|&r| pos_full[r])),
                    vel: DVector::from_iterator(rows.len(), rows.iter().map(|&r| vel_full[r])),
                    jacobian: model.point_jacobian(state, *body, offset)?,
                    jdot_qdot: model.point_bias_acceleration(state, *body, offset)?,
                })
            }
        }
    }
}

fn coordinate_task(
    model: &RobotModel,
    state: &GeneralizedState,
    idx: usize,
) -> Result<TaskEval, ControlError> {
    let n = model.n_dofs();
    let mut jac = DMatrix::zeros(1, n);
    jac[(0, idx)] = 1.0;
    Ok(TaskEval {
        pos: DVector::from_element(1, state.q[idx]),
        vel: DVector::from_element(1, state.qdot[idx]),
        jacobian: jac,
        jdot_qdot: DVector::zeros(1),
    })
}

/// Snapshot of a task's kinematics at one state.
#[derive(Debug, Clone)]
pub struct TaskEval {
    pub pos: DVector<f64>,
    pub vel: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub jdot_qdot: DVector<f64>,
}

/// PID acceleration gains of one task (table layout `K_x`, `I_x`, `D_x`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskGains {
    pub k_x: f64,
    pub i_x: f64,
    pub d_x: f64,
}

impl TaskGains {
    pub const ZERO: TaskGains = TaskGains {
        k_x: 0.0,
        i_x: 0.0,
        d_x: 0.0,
    };
}

/// Position/velocity/acceleration setpoints.
#[derive(Debug, Clone)]
pub struct TaskReference {
    pub pos: DVector<f64>,
    pub vel: DVector<f64>,
    pub acc: DVector<f64>,
}

impl TaskReference {
    pub fn hold(pos: DVector<f64>) -> Self {
        let n = pos.len();
        Self {
            pos,
            vel: DVector::zeros(n),
            acc: DVector::zeros(n),
        }
    }
}

/// One operational task with its feedback law state.
#[derive(Debug, Clone)]
pub struct Task {
    pub kind: TaskKind,
    pub gains: TaskGains,
    pub reference: TaskReference,
    /// Feedforward operational force added to this task's rows of `F_task`
    /// (used for the contact-transition reaction-force ramp).
    pub feedforward_force: DVector<f64>,
    /// Accumulated position error; reset on task-set switches.
    pub integral: DVector<f64>,
    /// Per-component clamp on the integral state.
    pub integral_limit: f64,
}

impl Task {
    pub fn new(kind: TaskKind, gains: TaskGains, mode: ModelMode) -> Self {
        let dim = kind.dim(mode);
        Task {
            kind,
            gains,
            reference: TaskReference::hold(DVector::zeros(dim)),
            feedforward_force: DVector::zeros(dim),
            integral: DVector::zeros(dim),
            integral_limit: 10.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.integral.len()
    }

    /// Feedback acceleration `u = ẍ_ref + K e + I ∫e + D ė`.
    pub fn desired_acceleration(&self, eval: &TaskEval) -> DVector<f64> {
        let e = &self.reference.pos - &eval.pos;
        let edot = &self.reference.vel - &eval.vel;
        &self.reference.acc
            + self.gains.k_x * e
            + self.gains.i_x * &self.integral
            + self.gains.d_x * edot
    }

    pub fn accumulate_integral(&mut self, eval: &TaskEval, dt: f64) {
        let e = &self.reference.pos - &eval.pos;
        self.integral += e * dt;
        let lim = self.integral_limit;
        for v in self.integral.iter_mut() {
            *v = v.clamp(-lim, lim);
        }
    }

    pub fn reset_integral(&mut self) {
        self.integral.fill(0.0);
    }
}

/// Ordered flat task stack; rows are concatenated into a single operational
/// vector, matching the per-phase task vectors used by the controller.
#[derive(Debug, Clone, Default)]
pub struct TaskSet {
    pub tasks: Vec<Task>,
}

impl TaskSet {
    pub fn new(tasks: Vec<Task>) -> Self {
        Self { tasks }
    }

    pub fn dim(&self) -> usize {
        self.tasks.iter().map(|t| t.dim()).sum()
    }

    pub fn reset_integrals(&mut self) {
        for t in &mut self.tasks {
            t.reset_integral();
        }
    }

    /// Stacked feedback acceleration for the whole set.
    pub fn desired_acceleration(&self, evals: &[TaskEval]) -> DVector<f64> {
        stack_map(self.tasks.iter().zip(evals), |(t, e)| {
            t.desired_acceleration(e)
        })
    }

    pub fn feedforward(&self) -> DVector<f64> {
        stack_map(self.tasks.iter(), |t| t.feedforward_force.clone())
    }
}

fn stack_map<I, T, F>(items: I, f: F) -> DVector<f64>
where
    I: Iterator<Item = T>,
    F: Fn(T) -> DVector<f64>,
{
    let parts: Vec<DVector<f64>> = items.map(f).collect();
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(total);
    let mut row = 0;
    for p in parts {
        out.rows_mut(row, p.len()).copy_from(&p);
        row += p.len();
    }
    out
}

/// Contact-consistent operational dynamics of a task stack: `J*`, `Λ*`,
/// `μ*`, `p*`. Built per control tick.
#[derive(Debug, Clone)]
pub struct TaskSpace {
    /// Stacked task Jacobian over generalized coordinates (m × n).
    pub j_task: DMatrix<f64>,
    /// Contact-consistent task Jacobian over actuated joints (m × n_act).
    pub j_star: DMatrix<f64>,
    /// Task-space inertia (m × m).
    pub lambda_star: DMatrix<f64>,
    /// Velocity-dependent task-space forces (zero when the Coriolis terms
    /// are omitted).
    pub mu_star: DVector<f64>,
    /// Gravity task-space forces.
    pub p_star: DVector<f64>,
    pub evals: Vec<TaskEval>,
}

/// Contact-consistent task Jacobian `J* = J_task · UN̄_s`.
pub fn task_jacobian_star(j_task: &DMatrix<f64>, proj: &ActuatedProjection) -> DMatrix<f64> {
    j_task * &proj.un_s_bar
}

/// Build the stacked task-space operators for a task set.
///
/// With `omit_coriolis` the velocity-dependent `μ*` is dropped (left zero),
/// matching the reduced controller configuration.
pub fn build_task_space(
    set: &TaskSet,
    model: &RobotModel,
    state: &GeneralizedState,
    terms: &DynamicsTerms,
    contacts: &ContactSet,
    proj: &ActuatedProjection,
    omit_coriolis: bool,
) -> Result<TaskSpace, ControlError> {
    let n = model.n_dofs();
    let m = set.dim();
    let mut j_task = DMatrix::zeros(m, n);
    let mut jdot_qdot = DVector::zeros(m);
    let mut evals = Vec::with_capacity(set.tasks.len());
    let mut row = 0;
    for task in &set.tasks {
        let eval = task.kind.eval(model, state)?;
        let d = eval.jacobian.nrows();
        if d != task.dim() {
            return Err(ControlError::TaskDimensionMismatch {
                expected: task.dim(),
                got: d,
            });
        }
        j_task.view_mut((row, 0), (d, n)).copy_from(&eval.jacobian);
        jdot_qdot.rows_mut(row, d).copy_from(&eval.jdot_qdot);
        evals.push(eval);
        row += d;
    }

    let j_star = task_jacobian_star(&j_task, proj);
    // Λ*⁻¹ = J* B J*ᵀ, the actuated, contact-consistent task mobility.
    let phi = &j_star * &proj.b * j_star.transpose();
    let cond = math::sym_condition_number(&phi);
    if cond > TASK_CONDITION_LIMIT {
        return Err(ControlError::IllConditionedTaskInertia { cond });
    }
    let lambda_star = math::sym_pinv(&phi, math::PINV_CUTOFF, math::PINV_DAMPING);

    // Bias terms mapped through the same constrained-dynamics operators:
    // ẍ = Λ*⁻¹ F + J̇q̇ − J A⁻¹ [N_sᵀ(b+g) + J_sᵀ Λ_s J̇_s q̇].
    let ja_inv = &j_task * &contacts.a_inv;
    let p_star = &lambda_star * (&ja_inv * (contacts.n_s.transpose() * &terms.g));
    let mu_star = if omit_coriolis {
        DVector::zeros(m)
    } else {
        &lambda_star
            * (&ja_inv
                * (contacts.n_s.transpose() * &terms.b
                    + contacts.j_s.transpose() * &contacts.lambda_s * &contacts.jdot_s_qdot)
                - &jdot_qdot)
    };

    Ok(TaskSpace {
        j_task,
        j_star,
        lambda_star,
        mu_star,
        p_star,
        evals,
    })
}

/// Model-based task force `F = Λ* u + μ* + p* + F_ff` for the stacked set.
pub fn task_force(ts: &TaskSpace, set: &TaskSet) -> DVector<f64> {
    let u = set.desired_acceleration(&ts.evals);
    &ts.lambda_star * u + &ts.mu_star + &ts.p_star + set.feedforward()
}
