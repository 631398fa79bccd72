use serde::{Deserialize, Serialize};

use super::{EyeModel, GeomError, Point3, Pose, UnitQuat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hand {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InstrumentKind {
    LightPipe,
    Vitrector,
    LaserProbe,
}

impl InstrumentKind {
    pub fn hand(self) -> Hand {
        match self {
            InstrumentKind::LightPipe => Hand::Left,
            InstrumentKind::Vitrector | InstrumentKind::LaserProbe => Hand::Right,
        }
    }
}

/// Mapped instrument, expressed in the fundus frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstrumentState {
    pub kind: InstrumentKind,
    pub tip: Point3,
    /// Unit direction from the trocar toward the tip.
    pub axis: Point3,
    pub inside_eye: bool,
}

/// Scleral entry points and the motion scaling applied about them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrocarRig {
    pub trocar_left: Point3,
    pub trocar_right: Point3,
    pub lateral_scale: f64,
    pub depth_scale: f64,
    pub ergonomic_rotation_deg: f64,
    /// Insertion depth of the tip at the calibrated rest pose, measured from
    /// the trocar toward the eye center.
    pub rest_depth_mm: f64,
}

impl TrocarRig {
    pub fn validate(&self, eye: &EyeModel) -> Result<(), GeomError> {
        let finite = self.trocar_left.is_finite()
            && self.trocar_right.is_finite()
            && self.lateral_scale.is_finite()
            && self.depth_scale.is_finite()
            && self.ergonomic_rotation_deg.is_finite()
            && self.rest_depth_mm.is_finite();
        if !finite {
            return Err(GeomError::NonFiniteInput);
        }
        if self.trocar_left.distance(self.trocar_right) < 1e-9 {
            return Err(GeomError::DegenerateRig("trocars coincide"));
        }
        for t in [self.trocar_left, self.trocar_right] {
            if (t.distance(eye.center) - eye.retina_radius).abs() > 1e-6 {
                return Err(GeomError::DegenerateRig("trocar is not on the globe surface"));
            }
        }
        if self.lateral_scale <= 0.0 || self.depth_scale <= 0.0 || self.rest_depth_mm <= 0.0 {
            return Err(GeomError::DegenerateRig("scales and rest depth must be positive"));
        }
        Ok(())
    }

    pub fn trocar(&self, hand: Hand) -> Point3 {
        match hand {
            Hand::Left => self.trocar_left,
            Hand::Right => self.trocar_right,
        }
    }

    /// Unit insertion axis from the trocar toward the eye center.
    pub fn insertion_axis(&self, hand: Hand, eye: &EyeModel) -> Point3 {
        (eye.center - self.trocar(hand))
            .normalized()
            .expect("validated rig keeps trocars off the center")
    }

    pub fn rest_tip(&self, hand: Hand, eye: &EyeModel) -> Point3 {
        self.trocar(hand) + self.insertion_axis(hand, eye) * self.rest_depth_mm
    }

    fn ergonomic_rotation(&self) -> UnitQuat {
        UnitQuat::from_axis_angle(Point3::X, self.ergonomic_rotation_deg.to_radians())
    }
}

/// Controller rest poses captured during the pre-session calibration step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOffset {
    pub pose_offset_left: Pose,
    pub pose_offset_right: Pose,
}

impl CalibrationOffset {
    pub fn offset(&self, hand: Hand) -> &Pose {
        match hand {
            Hand::Left => &self.pose_offset_left,
            Hand::Right => &self.pose_offset_right,
        }
    }

    /// Controller pose relative to the calibrated rest pose.
    pub fn apply(&self, hand: Hand, raw: &Pose) -> Pose {
        self.offset(hand).relative(raw)
    }

    pub fn unapply(&self, hand: Hand, calibrated: &Pose) -> Pose {
        self.offset(hand).compose(calibrated)
    }
}

/// Fulcrum map of a controller displacement: the component along `axis` is
/// scaled by `depth_scale`; the lateral remainder is inverted and scaled by
/// `lateral_scale`.
pub fn fulcrum_displacement(disp: Point3, axis: Point3, lateral_scale: f64, depth_scale: f64) -> Point3 {
    let along = disp.dot(axis);
    let lateral = disp - axis * along;
    axis * (along * depth_scale) - lateral * lateral_scale
}

/// Maps a raw controller pose to the instrument it drives.
pub fn map_controller_pose(
    raw: &Pose,
    rig: &TrocarRig,
    cal: &CalibrationOffset,
    kind: InstrumentKind,
    eye: &EyeModel,
) -> Result<InstrumentState, GeomError> {
    if !raw.is_finite() {
        return Err(GeomError::NonFiniteInput);
    }
    let hand = kind.hand();
    let trocar = rig.trocar(hand);
    if trocar.distance(eye.center) < 1e-9 || rig.trocar_left.distance(rig.trocar_right) < 1e-9 {
        return Err(GeomError::DegenerateRig("trocars coincide"));
    }
    let axis = rig.insertion_axis(hand, eye);

    let calibrated = cal.apply(hand, raw);
    let disp = rig.ergonomic_rotation().rotate(calibrated.position);
    let mut tip = rig.rest_tip(hand, eye) + fulcrum_displacement(disp, axis, rig.lateral_scale, rig.depth_scale);

    let inside_eye = (tip - trocar).dot(axis) > 0.0;
    if inside_eye {
        let m = tip - eye.center;
        let d = m.norm();
        if d > eye.retina_radius {
            tip = eye.center + m * (eye.retina_radius / d);
        }
    } else {
        tip = trocar;
    }
    let shaft = (tip - trocar).normalized().unwrap_or(axis);

    let to_fundus = eye.eye_rotation.inverse();
    Ok(InstrumentState {
        kind,
        tip: eye.center + to_fundus.rotate(tip - eye.center),
        axis: to_fundus.rotate(shaft),
        inside_eye,
    })
}

/// Raw controller pose that places the instrument tip at `tip` (fundus frame).
/// Inverse of [`map_controller_pose`] for tips inside the globe; the
/// controller orientation is carried through unchanged.
pub fn controller_pose_for_tip(
    tip: Point3,
    orientation: UnitQuat,
    rig: &TrocarRig,
    cal: &CalibrationOffset,
    kind: InstrumentKind,
    eye: &EyeModel,
) -> Pose {
    let hand = kind.hand();
    let axis = rig.insertion_axis(hand, eye);
    let world_tip = eye.center + eye.eye_rotation.rotate(tip - eye.center);
    let d = world_tip - rig.rest_tip(hand, eye);
    let along = d.dot(axis);
    let lateral = d - axis * along;
    let disp = axis * (along / rig.depth_scale) - lateral * (1.0 / rig.lateral_scale);
    let position = rig.ergonomic_rotation().inverse().rotate(disp);
    cal.unapply(hand, &Pose::new(position, orientation))
}
