use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::Point3;

/// Unit quaternion `(w, x, y, z)`. Every constructor and product renormalizes,
/// so the norm stays within `1 ± 1e-9`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuat {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Default for UnitQuat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes `(w, x, y, z)`. Returns `None` for zero or non-finite input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return None;
        }
        Some(Self { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    pub fn from_axis_angle(axis: Point3, angle_rad: f64) -> Self {
        let axis = axis.normalized().unwrap_or(Point3::X);
        let half = 0.5 * angle_rad;
        let s = libm::sin(half);
        Self::new(libm::cos(half), axis.x * s, axis.y * s, axis.z * s).unwrap_or(Self::IDENTITY)
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn xyz(&self) -> Point3 {
        Point3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn inverse(&self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Rotates `v` by this quaternion.
    pub fn rotate(&self, v: Point3) -> Point3 {
        // v' = v + 2w (q × v) + 2 q × (q × v)
        let q = self.xyz();
        let t = q.cross(v) * 2.0;
        v + t * self.w + q.cross(t)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

impl Mul for UnitQuat {
    type Output = UnitQuat;
    fn mul(self, o: UnitQuat) -> UnitQuat {
        let w = self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z;
        let x = self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y;
        let y = self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x;
        let z = self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w;
        UnitQuat::new(w, x, y, z).unwrap_or(UnitQuat::IDENTITY)
    }
}

impl TryFrom<[f64; 4]> for UnitQuat {
    type Error = String;
    fn try_from(a: [f64; 4]) -> Result<Self, Self::Error> {
        let q = UnitQuat { w: a[0], x: a[1], y: a[2], z: a[3] };
        // Stored values are already unit; re-normalizing would perturb the bits.
        if q.is_finite() && (q.norm() - 1.0).abs() <= 1e-9 {
            Ok(q)
        } else {
            UnitQuat::new(a[0], a[1], a[2], a[3]).ok_or_else(|| "degenerate quaternion".to_string())
        }
    }
}

impl From<UnitQuat> for [f64; 4] {
    fn from(q: UnitQuat) -> Self {
        q.to_array()
    }
}

/// Position plus orientation of a tracked controller or instrument.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point3,
    pub orientation: UnitQuat,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { position: Point3::ZERO, orientation: UnitQuat::IDENTITY };

    pub fn new(position: Point3, orientation: UnitQuat) -> Self {
        Self { position, orientation }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.orientation.is_finite()
    }

    /// Expresses `other` in this pose's local frame (`self⁻¹ ∘ other`).
    pub fn relative(&self, other: &Pose) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: inv.rotate(other.position - self.position),
            orientation: inv * other.orientation,
        }
    }

    /// Composes a local pose onto this one (`self ∘ local`).
    pub fn compose(&self, local: &Pose) -> Pose {
        Pose {
            position: self.orientation.rotate(local.position) + self.position,
            orientation: self.orientation * local.orientation,
        }
    }
}
