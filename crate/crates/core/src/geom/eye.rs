use serde::{Deserialize, Serialize};

use super::{GeomError, Point3, UnitQuat};

/// Spherical globe whose inner surface carries the fundus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EyeModel {
    pub center: Point3,
    pub retina_radius: f64,
    pub posterior_pole_dir: Point3,
    /// Globe rotation applied by the right-controller joystick.
    #[serde(default)]
    pub eye_rotation: UnitQuat,
}

impl Default for EyeModel {
    fn default() -> Self {
        Self::with_radius(12.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySurfaceHit {
    pub point: Point3,
    pub distance: f64,
}

/// Orthonormal tangent frame at a point on the retina. `normal` points
/// outward from the eye center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentFrame {
    pub origin: Point3,
    pub normal: Point3,
    pub e1: Point3,
    pub e2: Point3,
}

impl EyeModel {
    pub fn with_radius(retina_radius: f64) -> Self {
        Self {
            center: Point3::ZERO,
            retina_radius,
            posterior_pole_dir: Point3::new(0.0, 0.0, -1.0),
            eye_rotation: UnitQuat::IDENTITY,
        }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if !self.center.is_finite() || !self.retina_radius.is_finite() || !self.posterior_pole_dir.is_finite() {
            return Err(GeomError::NonFiniteInput);
        }
        if self.retina_radius <= 0.0 {
            return Err(GeomError::InvalidEye("retina_radius must be positive"));
        }
        if (self.posterior_pole_dir.norm() - 1.0).abs() > 1e-9 {
            return Err(GeomError::InvalidEye("posterior_pole_dir must be unit-norm"));
        }
        Ok(())
    }

    /// Distance from `p` to the retinal surface, positive inside the globe.
    pub fn clearance(&self, p: Point3) -> f64 {
        self.retina_radius - p.distance(self.center)
    }

    pub fn posterior_pole(&self) -> Point3 {
        self.center + self.posterior_pole_dir * self.retina_radius
    }

    /// Two unit vectors completing `posterior_pole_dir` to a right-handed frame;
    /// longitude zero lies along the first.
    pub fn equatorial_axes(&self) -> (Point3, Point3) {
        let pole = self.posterior_pole_dir;
        let e1 = pole
            .cross(Point3::Y)
            .normalized()
            .unwrap_or_else(|| pole.any_orthonormal());
        let e2 = pole.cross(e1);
        (e1, e2)
    }

    /// Direction at angle `polar_deg` from the posterior pole and `longitude_deg`
    /// around it.
    pub fn direction(&self, polar_deg: f64, longitude_deg: f64) -> Point3 {
        let (e1, e2) = self.equatorial_axes();
        let th = polar_deg.to_radians();
        let ph = longitude_deg.to_radians();
        let (st, ct) = (libm::sin(th), libm::cos(th));
        let (sp, cp) = (libm::sin(ph), libm::cos(ph));
        self.posterior_pole_dir * ct + (e1 * cp + e2 * sp) * st
    }

    /// Point on the retinal surface (or inset toward the center by `inset_mm`).
    pub fn surface_point(&self, polar_deg: f64, longitude_deg: f64, inset_mm: f64) -> Point3 {
        self.center + self.direction(polar_deg, longitude_deg) * (self.retina_radius - inset_mm)
    }

    /// Tangent frame at the surface point nearest `p`. `e1` runs along
    /// increasing longitude about the posterior pole.
    pub fn tangent_frame(&self, p: Point3) -> TangentFrame {
        let normal = (p - self.center).normalized().unwrap_or(self.posterior_pole_dir);
        let e1 = self
            .posterior_pole_dir
            .cross(normal)
            .normalized()
            .unwrap_or_else(|| normal.any_orthonormal());
        let e2 = normal.cross(e1);
        TangentFrame { origin: self.center + normal * self.retina_radius, normal, e1, e2 }
    }

    /// Surface point reached by walking `geodesic_mm` from `frame.origin` along
    /// the tangent direction at `angle_rad` (measured from `e1` toward `e2`).
    pub fn geodesic_offset(&self, frame: &TangentFrame, angle_rad: f64, geodesic_mm: f64) -> Point3 {
        let t = frame.e1 * libm::cos(angle_rad) + frame.e2 * libm::sin(angle_rad);
        let a = geodesic_mm / self.retina_radius;
        self.center + (frame.normal * libm::cos(a) + t * libm::sin(a)) * self.retina_radius
    }

    /// Gnomonic projection of surface point `p` onto the tangent plane of
    /// `frame`, in millimeters along `(e1, e2)`. `None` beyond the horizon.
    pub fn gnomonic(&self, frame: &TangentFrame, p: Point3) -> Option<(f64, f64)> {
        let q = (p - self.center).normalized()?;
        let c = q.dot(frame.normal);
        if c <= 1e-12 {
            return None;
        }
        let r = self.retina_radius;
        Some((r * q.dot(frame.e1) / c, r * q.dot(frame.e2) / c))
    }
}

/// Closed-ball membership: true iff `|tip − center| ≤ radius`.
pub fn sphere_contact(tip: Point3, center: Point3, radius: f64) -> bool {
    (tip - center).norm_squared() <= radius * radius
}

/// Forward intersection of a ray starting strictly inside the globe with the
/// retinal surface.
pub fn retina_raycast(origin: Point3, dir: Point3, eye: &EyeModel) -> Result<RaySurfaceHit, GeomError> {
    if !origin.is_finite() || !dir.is_finite() {
        return Err(GeomError::NonFiniteInput);
    }
    let dir = dir.normalized().ok_or(GeomError::NonFiniteInput)?;
    let m = origin - eye.center;
    let r = eye.retina_radius;
    let c = m.norm_squared() - r * r;
    if c >= 0.0 {
        return Err(GeomError::OriginOutsideEye);
    }
    let b = m.dot(dir);
    let root = (b * b - c).sqrt();
    // Roots multiply to c < 0, so exactly one is positive; pick the
    // cancellation-free form.
    let t = if b > 0.0 { -c / (b + root) } else { root - b };
    Ok(RaySurfaceHit { point: origin + dir * t, distance: t })
}

/// Great-circle distance between two points on the retinal surface.
pub fn geodesic_distance_mm(a: Point3, b: Point3, eye: &EyeModel) -> Result<f64, GeomError> {
    let r = eye.retina_radius;
    for p in [a, b] {
        if !p.is_finite() {
            return Err(GeomError::NonFiniteInput);
        }
        if (p.distance(eye.center) - r).abs() > 1e-6 {
            return Err(GeomError::PointOffSurface);
        }
    }
    Ok(r * central_angle(a - eye.center, b - eye.center))
}

/// Angle between two vectors, accurate near 0 and π.
pub(crate) fn central_angle(u: Point3, v: Point3) -> f64 {
    libm::atan2(u.cross(v).norm(), u.dot(v))
}
