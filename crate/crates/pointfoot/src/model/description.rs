//! On-disk robot description format (JSON).
//!
//! A description lists the floating-base link and a tree of revolute joints,
//! each carrying the link it drives. The floating base itself is not listed
//! as a joint; the `mode` field selects whether it contributes 3 planar
//! coordinates (x, z, pitch) or 6 spatial ones (x, y, z, yaw, pitch, roll).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Supported description schema version.
pub const DESCRIPTION_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeDescription {
    /// 3 floating-base coordinates: x, z, pitch.
    Planar,
    /// 6 floating-base coordinates: x, y, z, yaw, pitch, roll (ZYX Euler).
    Spatial,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDescription {
    /// Schema version; must equal [`DESCRIPTION_VERSION`].
    pub version: u32,
    pub name: String,
    pub mode: ModeDescription,
    /// Gravitational acceleration magnitude, m/s².
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Floating-base link (torso). Extra carriage/fixture inertia riding
    /// with the torso is lumped into this link.
    pub base: LinkDescription,
    pub joints: Vec<JointDescription>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDescription {
    pub name: String,
    /// Mass in kg; must be positive.
    pub mass: f64,
    /// Center of mass in the link frame, m.
    pub com: [f64; 3],
    /// Rotational inertia about the COM in the link frame, kg·m²,
    /// row-major 3×3; must be symmetric positive definite.
    pub inertia: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDescription {
    pub name: String,
    /// Name of the parent link this joint hangs from.
    pub parent: String,
    /// Joint frame origin in the parent link frame, m.
    pub origin: [f64; 3],
    /// Fixed rotation of the joint frame relative to the parent link frame,
    /// ZYX Euler angles (yaw, pitch, roll) in rad.
    #[serde(default)]
    pub rpy: [f64; 3],
    /// Revolute axis in the joint frame; normalized on load.
    pub axis: [f64; 3],
    /// Reflected rotor inertia added to the joint's diagonal mass-matrix
    /// entry when enabled, kg·m².
    #[serde(default)]
    pub rotor_inertia: f64,
    /// Whether the joint is torque controlled. Floating-base coordinates are
    /// never actuated; every declared joint must be.
    #[serde(default = "default_true")]
    pub actuated: bool,
    /// Link rigidly attached to the moving side of this joint.
    pub child: LinkDescription,
}

fn default_gravity() -> f64 {
    9.81
}

fn default_true() -> bool {
    true
}

impl RobotDescription {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let desc: RobotDescription =
            serde_json::from_str(text).map_err(|e| ModelError::BadDescription(e.to_string()))?;
        desc.validate()?;
        Ok(desc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("description serializes")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.version != DESCRIPTION_VERSION {
            return Err(ModelError::BadDescription(format!(
                "unsupported description version {} (expected {})",
                self.version, DESCRIPTION_VERSION
            )));
        }
        if !self.gravity.is_finite() || self.gravity < 0.0 {
            return Err(ModelError::BadDescription(
                "gravity must be finite and non-negative".into(),
            ));
        }
        validate_link(&self.base)?;
        let mut names = vec![self.base.name.clone()];
        for joint in &self.joints {
            validate_link(&joint.child)?;
            if !names.iter().any(|n| n == &joint.parent) {
                return Err(ModelError::BadDescription(format!(
                    "joint '{}' references unknown parent link '{}'",
                    joint.name, joint.parent
                )));
            }
            if names.iter().any(|n| n == &joint.child.name) {
                return Err(ModelError::BadDescription(format!(
                    "duplicate link name '{}'",
                    joint.child.name
                )));
            }
            let axis = Vector3::from(joint.axis);
            if axis.norm() < 1e-9 {
                return Err(ModelError::BadDescription(format!(
                    "joint '{}' has a zero axis",
                    joint.name
                )));
            }
            if !joint.actuated {
                return Err(ModelError::BadDescription(format!(
                    "joint '{}' is passive; every non-base joint must be actuated",
                    joint.name
                )));
            }
            if joint.rotor_inertia < 0.0 {
                return Err(ModelError::BadDescription(format!(
                    "joint '{}' has negative rotor inertia",
                    joint.name
                )));
            }
            if self.mode == ModeDescription::Planar {
                let a = axis.normalize();
                if (a.x.abs() > 1e-9) || (a.z.abs() > 1e-9) {
                    return Err(ModelError::BadDescription(format!(
                        "joint '{}': planar mode requires y-parallel revolute axes",
                        joint.name
                    )));
                }
            }
            names.push(joint.child.name.clone());
        }
        Ok(())
    }
}

fn validate_link(link: &LinkDescription) -> Result<(), ModelError> {
    if !(link.mass > 0.0) {
        return Err(ModelError::BadDescription(format!(
            "link '{}' must have positive mass",
            link.name
        )));
    }
    let inertia = Matrix3::from_fn(|r, c| link.inertia[r][c]);
    if (inertia - inertia.transpose()).norm() > 1e-9 {
        return Err(ModelError::BadDescription(format!(
            "link '{}' inertia tensor is not symmetric",
            link.name
        )));
    }
    let eig = inertia.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(ModelError::BadDescription(format!(
            "link '{}' inertia tensor is not positive definite",
            link.name
        )));
    }
    Ok(())
}
