use serde::{Deserialize, Serialize};

use crate::geom::{Point3, Pose, UnitQuat};

/// One frame of controller input. Timestamps are integer milliseconds from
/// the client clock and must strictly increase within a session.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireFrame", into = "WireFrame")]
pub struct TickInput {
    pub t_ms: u64,
    pub left_pose: Pose,
    pub right_pose: Pose,
    pub grip_right: bool,
    pub button_x_left: bool,
    pub joystick_right: (f64, f64),
}

impl TickInput {
    /// Both controllers at their calibrated rest pose, no buttons.
    pub fn at_rest(t_ms: u64) -> Self {
        Self {
            t_ms,
            left_pose: Pose::IDENTITY,
            right_pose: Pose::IDENTITY,
            grip_right: false,
            button_x_left: false,
            joystick_right: (0.0, 0.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.left_pose.is_finite()
            && self.right_pose.is_finite()
            && self.joystick_right.0.is_finite()
            && self.joystick_right.1.is_finite()
    }
}

/// Compact line form: poses as `[px, py, pz, qw, qx, qy, qz]`.
#[derive(Serialize, Deserialize)]
struct WireFrame {
    t: u64,
    l: [f64; 7],
    r: [f64; 7],
    #[serde(default)]
    g: bool,
    #[serde(default)]
    x: bool,
    #[serde(default)]
    j: [f64; 2],
}

fn pose_to_wire(p: &Pose) -> [f64; 7] {
    let q = p.orientation.to_array();
    [p.position.x, p.position.y, p.position.z, q[0], q[1], q[2], q[3]]
}

fn pose_from_wire(a: &[f64; 7]) -> Result<Pose, String> {
    let q = UnitQuat::try_from([a[3], a[4], a[5], a[6]])?;
    Ok(Pose::new(Point3::new(a[0], a[1], a[2]), q))
}

impl TryFrom<WireFrame> for TickInput {
    type Error = String;
    fn try_from(w: WireFrame) -> Result<Self, String> {
        Ok(TickInput {
            t_ms: w.t,
            left_pose: pose_from_wire(&w.l)?,
            right_pose: pose_from_wire(&w.r)?,
            grip_right: w.g,
            button_x_left: w.x,
            joystick_right: (w.j[0], w.j[1]),
        })
    }
}

impl From<TickInput> for WireFrame {
    fn from(f: TickInput) -> Self {
        WireFrame {
            t: f.t_ms,
            l: pose_to_wire(&f.left_pose),
            r: pose_to_wire(&f.right_pose),
            g: f.grip_right,
            x: f.button_x_left,
            j: [f.joystick_right.0, f.joystick_right.1],
        }
    }
}
