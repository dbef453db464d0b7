//! Shipped robot descriptions.
//!
//! Link-level inertial parameters approximate a 20 kg, 1.5 m tall point-foot
//! biped; they are plausible values for that scale, not measured ones. The
//! planar variant lumps the motion-constraint carriage inertia into the
//! torso link.

use super::description::{
    JointDescription, LinkDescription, ModeDescription, RobotDescription, DESCRIPTION_VERSION,
};

pub const THIGH_LENGTH: f64 = 0.40;
pub const SHANK_LENGTH: f64 = 0.42;
pub const HIP_HALF_SPACING: f64 = 0.11;

fn diag(x: f64, y: f64, z: f64) -> [[f64; 3]; 3] {
    [[x, 0.0, 0.0], [0.0, y, 0.0], [0.0, 0.0, z]]
}

fn thigh(name: &str) -> LinkDescription {
    LinkDescription {
        name: name.to_string(),
        mass: 2.4,
        com: [0.0, 0.0, -0.20],
        inertia: diag(0.032, 0.032, 0.002),
    }
}

fn shank(name: &str) -> LinkDescription {
    LinkDescription {
        name: name.to_string(),
        mass: 1.1,
        com: [0.0, 0.0, -0.19],
        inertia: diag(0.016, 0.016, 0.001),
    }
}

fn leg_joints(side: &str, sign: f64, spatial: bool) -> Vec<JointDescription> {
    let mut joints = Vec::new();
    let hip_parent;
    let hip_origin;
    if spatial {
        joints.push(JointDescription {
            name: format!("{side}_abduction"),
            parent: "torso".into(),
            origin: [0.0, sign * HIP_HALF_SPACING, 0.0],
            rpy: [0.0; 3],
            axis: [1.0, 0.0, 0.0],
            rotor_inertia: 0.1,
            actuated: true,
            child: LinkDescription {
                name: format!("{side}_hip_carrier"),
                mass: 0.3,
                com: [0.0, 0.0, -0.02],
                inertia: diag(0.002, 0.002, 0.002),
            },
        });
        hip_parent = format!("{side}_hip_carrier");
        hip_origin = [0.0, 0.0, -0.05];
    } else {
        hip_parent = "torso".into();
        hip_origin = [0.0, sign * HIP_HALF_SPACING, 0.0];
    }
    joints.push(JointDescription {
        name: format!("{side}_hip"),
        parent: hip_parent,
        origin: hip_origin,
        rpy: [0.0; 3],
        axis: [0.0, 1.0, 0.0],
        rotor_inertia: 0.1,
        actuated: true,
        child: thigh(&format!("{side}_thigh")),
    });
    joints.push(JointDescription {
        name: format!("{side}_knee"),
        parent: format!("{side}_thigh"),
        origin: [0.0, 0.0, -THIGH_LENGTH],
        rpy: [0.0; 3],
        axis: [0.0, 1.0, 0.0],
        rotor_inertia: 0.1,
        actuated: true,
        child: shank(&format!("{side}_shank")),
    });
    joints
}

/// Planar biped: 3 base coordinates (x, z, pitch) plus hip/knee per leg.
pub fn hume_planar() -> RobotDescription {
    let mut joints = leg_joints("right", -1.0, false);
    joints.extend(leg_joints("left", 1.0, false));
    RobotDescription {
        version: DESCRIPTION_VERSION,
        name: "hume_planar".into(),
        mode: ModeDescription::Planar,
        gravity: 9.81,
        base: LinkDescription {
            name: "torso".into(),
            mass: 13.0,
            com: [0.0, 0.0, 0.18],
            inertia: diag(0.5, 0.9, 0.2),
        },
        joints,
    }
}

/// Spatial biped: 6 base coordinates plus abduction/hip/knee per leg.
pub fn hume_spatial() -> RobotDescription {
    let mut joints = leg_joints("right", -1.0, true);
    joints.extend(leg_joints("left", 1.0, true));
    RobotDescription {
        version: DESCRIPTION_VERSION,
        name: "hume_spatial".into(),
        mode: ModeDescription::Spatial,
        gravity: 9.81,
        base: LinkDescription {
            name: "torso".into(),
            mass: 12.4,
            com: [0.0, 0.0, 0.18],
            inertia: diag(0.45, 0.5, 0.15),
        },
        joints,
    }
}

/// Local foot point (shank tip) shared by both presets.
pub fn foot_offset() -> [f64; 3] {
    [0.0, 0.0, -SHANK_LENGTH]
}
