use serde::{Deserialize, Serialize};

use crate::geom::Point3;

/// Arc-length parameterized curve followed in the tremor task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShavingPath {
    /// Circular arc of `radius` about `center` in the plane spanned by the
    /// orthonormal pair `(u, v)`, from angle `start_rad` through `span_rad`.
    Arc { center: Point3, radius: f64, u: Point3, v: Point3, start_rad: f64, span_rad: f64 },
    Polyline { points: Vec<Point3> },
}

impl ShavingPath {
    pub fn length(&self) -> f64 {
        match self {
            ShavingPath::Arc { radius, span_rad, .. } => radius * span_rad,
            ShavingPath::Polyline { points } => points.windows(2).map(|w| w[0].distance(w[1])).sum(),
        }
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Point3 {
        match self {
            ShavingPath::Arc { center, radius, u, v, start_rad, span_rad } => {
                let a = start_rad + (s / radius).clamp(0.0, *span_rad);
                *center + (*u * libm::cos(a) + *v * libm::sin(a)) * *radius
            }
            ShavingPath::Polyline { points } => {
                let mut left = s.max(0.0);
                for w in points.windows(2) {
                    let seg = w[0].distance(w[1]);
                    if left <= seg && seg > 0.0 {
                        return w[0] + (w[1] - w[0]) * (left / seg);
                    }
                    left -= seg;
                }
                *points.last().expect("polyline has points")
            }
        }
    }

    /// Unit tangent at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Point3 {
        match self {
            ShavingPath::Arc { u, v, start_rad, span_rad, radius, .. } => {
                let a = start_rad + (s / radius).clamp(0.0, *span_rad);
                *u * -libm::sin(a) + *v * libm::cos(a)
            }
            ShavingPath::Polyline { points } => {
                let mut left = s.max(0.0);
                for w in points.windows(2) {
                    let seg = w[0].distance(w[1]);
                    if left <= seg && seg > 0.0 {
                        return (w[1] - w[0]) * (1.0 / seg);
                    }
                    left -= seg;
                }
                let n = points.len();
                (points[n - 1] - points[n - 2]).normalized().unwrap_or(Point3::X)
            }
        }
    }

    /// Shortest distance from `p` to the curve.
    pub fn distance_to(&self, p: Point3) -> f64 {
        match self {
            ShavingPath::Arc { center, radius, u, v, start_rad, span_rad } => {
                let d = p - *center;
                let (x, y) = (d.dot(*u), d.dot(*v));
                let mut rel = libm::atan2(y, x) - start_rad;
                let tau = std::f64::consts::TAU;
                rel = rel.rem_euclid(tau);
                let a = if rel <= *span_rad {
                    start_rad + rel
                } else {
                    // Outside the arc: nearest endpoint in angle.
                    let past_end = rel - span_rad;
                    let before_start = tau - rel;
                    if past_end <= before_start { start_rad + span_rad } else { *start_rad }
                };
                let nearest = *center + (*u * libm::cos(a) + *v * libm::sin(a)) * *radius;
                // Angular nearest is exact for points in the plane's normal cylinder;
                // the endpoint check covers the rest.
                let ends = [self.point_at(0.0), self.point_at(self.length())];
                ends.iter().fold(p.distance(nearest), |m, e| m.min(p.distance(*e)))
            }
            ShavingPath::Polyline { points } => points
                .windows(2)
                .map(|w| segment_distance(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn segment_distance(p: Point3, a: Point3, b: Point3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}
