//! Eye model, controller-to-instrument kinematics and the contact/raycast
//! primitives shared by every task.
//!
//! Engine units are millimeters. The globe is a sphere centered at
//! [`EyeModel::center`]; instruments enter through two trocars on its surface
//! and pivot about them, so lateral hand motion is mirrored at the tip.

mod eye;
mod kinematics;
mod quat;
mod touch;
mod vec3;

pub use eye::{geodesic_distance_mm, retina_raycast, sphere_contact, EyeModel, RaySurfaceHit, TangentFrame};
pub(crate) use eye::central_angle;
pub use kinematics::{
    controller_pose_for_tip, fulcrum_displacement, map_controller_pose, CalibrationOffset, Hand, InstrumentKind,
    InstrumentState, TrocarRig,
};
pub use quat::{Pose, UnitQuat};
pub use touch::{update_touch, TouchEpisodeTracker};
pub use vec3::Point3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("degenerate trocar rig: {0}")]
    DegenerateRig(&'static str),
    #[error("ray origin is not strictly inside the eye")]
    OriginOutsideEye,
    #[error("point is not on the retinal surface")]
    PointOffSurface,
    #[error("invalid eye model: {0}")]
    InvalidEye(&'static str),
    #[error("touch tracker requires release >= engage >= 0")]
    InvalidTracker,
}
