//! Analytic ray/primitive intersection.
//!
//! All shapes are exact: plane by linear solve, sphere and cylinder by
//! quadratics (cylinder lateral surface plus both cap disks), oriented box
//! by the slab method in the box's local frame. Distances below `T_MIN`
//! are ignored so a surface never shadows itself at the origin.

use crate::geometry::{Box3D, Vec3};
use crate::{Error, Result};

/// Hits closer than this are treated as self-intersections.
const T_MIN: f64 = 1e-9;

/// Analytic shape of a static primitive.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Horizontal plane `z = z0`, unbounded.
    GroundPlane { z: f64 },
    /// Oriented box.
    Box(Box3D),
    /// Vertical cylinder spanning `z in [base.z, base.z + height]`,
    /// axis through `(base.x, base.y)`.
    Cylinder { base: Vec3, radius: f64, height: f64 },
    Sphere { center: Vec3, radius: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::GroundPlane { z } => {
                if !z.is_finite() {
                    return Err(Error::InvalidConfig("ground plane z must be finite".into()));
                }
            }
            Shape::Box(b) => b.validate()?,
            Shape::Cylinder {
                base,
                radius,
                height,
            } => {
                if !(*radius > 0.0 && *height > 0.0) || !base.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "cylinder radius/height must be positive, got r={radius} h={height}"
                    )));
                }
            }
            Shape::Sphere { center, radius } => {
                if !(*radius > 0.0) || !center.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "sphere radius must be positive, got {radius}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nearest intersection distance along `dir` (unit length), if any.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        match *self {
            Shape::GroundPlane { z } => {
                if dir.z == 0.0 {
                    return None;
                }
                let t = (z - origin.z) / dir.z;
                (t > T_MIN).then_some(t)
            }
            Shape::Sphere { center, radius } => {
                let oc = origin - center;
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t0 = -b - sq;
                if t0 > T_MIN {
                    return Some(t0);
                }
                let t1 = -b + sq;
                (t1 > T_MIN).then_some(t1)
            }
            Shape::Cylinder {
                base,
                radius,
                height,
            } => {
                let z0 = base.z;
                let z1 = base.z + height;
                let ox = origin.x - base.x;
                let oy = origin.y - base.y;
                let mut best: Option<f64> = None;
                let mut consider = |t: f64| {
                    if t > T_MIN && best.is_none_or(|b| t < b) {
                        best = Some(t);
                    }
                };

                // Lateral surface.
                let a = dir.x * dir.x + dir.y * dir.y;
                if a > 0.0 {
                    let b = ox * dir.x + oy * dir.y;
                    let c = ox * ox + oy * oy - radius * radius;
                    let disc = b * b - a * c;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-b - sq) / a, (-b + sq) / a] {
                            let z = origin.z + t * dir.z;
                            if z >= z0 && z <= z1 {
                                consider(t);
                            }
                        }
                    }
                }

                // Cap disks.
                if dir.z != 0.0 {
                    for zp in [z0, z1] {
                        let t = (zp - origin.z) / dir.z;
                        let x = ox + t * dir.x;
                        let y = oy + t * dir.y;
                        if x * x + y * y <= radius * radius {
                            consider(t);
                        }
                    }
                }
                best
            }
            Shape::Box(b) => intersect_box(&b, origin, dir),
        }
    }
}

/// Slab test in the box's local (un-centered, un-yawed) frame. Rotation is
/// an isometry, so local distances equal world distances.
fn intersect_box(b: &Box3D, origin: Vec3, dir: Vec3) -> Option<f64> {
    let (s, c) = b.yaw.sin_cos();
    let o = origin - b.center;
    let lo = Vec3::new(c * o.x + s * o.y, -s * o.x + c * o.y, o.z);
    let ld = Vec3::new(c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z);
    let half = [b.dx / 2.0, b.dy / 2.0, b.dz / 2.0];
    let os = [lo.x, lo.y, lo.z];
    let ds = [ld.x, ld.y, ld.z];

    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for axis in 0..3 {
        if ds[axis] == 0.0 {
            if os[axis].abs() > half[axis] {
                return None;
            }
            continue;
        }
        let mut t0 = (-half[axis] - os[axis]) / ds[axis];
        let mut t1 = (half[axis] - os[axis]) / ds[axis];
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_near = t_near.max(t0);
        t_far = t_far.min(t1);
        if t_near > t_far {
            return None;
        }
    }
    if t_near > T_MIN {
        Some(t_near)
    } else if t_far > T_MIN {
        // Origin inside the box: the exit face is the visible surface.
        Some(t_far)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_plane_from_above() {
        let plane = Shape::GroundPlane { z: 0.0 };
        let t = plane
            .intersect(Vec3::new(0.0, 0.0, 4.0), Vec3::new(0.0, 0.0, -1.0))
            .unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        // Looking up misses.
        assert!(plane
            .intersect(Vec3::new(0.0, 0.0, 4.0), Vec3::new(0.0, 0.0, 1.0))
            .is_none());
        // Parallel ray misses.
        assert!(plane
            .intersect(Vec3::new(0.0, 0.0, 4.0), Vec3::new(1.0, 0.0, 0.0))
            .is_none());
    }

    #[test]
    fn sphere_axial_hit() {
        let s = Shape::Sphere {
            center: Vec3::new(5.0, 0.0, 1.0),
            radius: 1.0,
        };
        let t = s
            .intersect(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert!((t - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_from_inside_hits_far_wall() {
        let s = Shape::Sphere {
            center: Vec3::ZERO,
            radius: 2.0,
        };
        let t = s
            .intersect(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0))
            .unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_lateral_hit() {
        let cyl = Shape::Cylinder {
            base: Vec3::new(5.0, 0.0, 0.0),
            radius: 0.5,
            height: 2.0,
        };
        let t = cyl
            .intersect(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert!((t - 4.5).abs() < 1e-12);
        // Above the cylinder the same direction misses.
        assert!(cyl
            .intersect(Vec3::new(0.0, 0.0, 3.0), Vec3::new(1.0, 0.0, 0.0))
            .is_none());
    }

    #[test]
    fn cylinder_cap_hit_from_above() {
        let cyl = Shape::Cylinder {
            base: Vec3::new(0.0, 0.0, 0.0),
            radius: 0.5,
            height: 2.0,
        };
        let t = cyl
            .intersect(Vec3::new(0.0, 0.0, 5.0), Vec3::new(0.0, 0.0, -1.0))
            .unwrap();
        assert!((t - 3.0).abs() < 1e-12, "expected top cap at t=3, got {t}");
    }

    #[test]
    fn box_axis_aligned_and_rotated() {
        let b = Shape::Box(Box3D::new(Vec3::new(5.0, 0.0, 0.0), 2.0, 2.0, 2.0, 0.0));
        let t = b
            .intersect(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert!((t - 4.0).abs() < 1e-12);

        // 45 degrees: the near corner points at the origin, first contact
        // at x = 5 - sqrt(2).
        let b = Shape::Box(Box3D::new(
            Vec3::new(5.0, 0.0, 0.0),
            2.0,
            2.0,
            2.0,
            std::f64::consts::FRAC_PI_4,
        ));
        let t = b
            .intersect(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert!((t - (5.0 - std::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn box_from_inside_exits() {
        let b = Shape::Box(Box3D::new(Vec3::ZERO, 2.0, 2.0, 2.0, 0.0));
        let t = b
            .intersect(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0))
            .unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hit_points_lie_on_surfaces() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let shapes = vec![
            Shape::GroundPlane { z: 0.0 },
            Shape::Sphere {
                center: Vec3::new(3.0, -1.0, 1.0),
                radius: 0.8,
            },
            Shape::Cylinder {
                base: Vec3::new(4.0, 2.0, 0.0),
                radius: 0.4,
                height: 1.7,
            },
            Shape::Box(Box3D::new(Vec3::new(6.0, 0.0, 1.0), 2.0, 1.0, 2.0, 0.7)),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let origin = Vec3::new(0.0, 0.0, 3.0);
        for _ in 0..5000 {
            let dir = Vec3::new(
                rng.gen_range(0.2..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..0.2),
            )
            .normalized()
            .unwrap();
            for shape in &shapes {
                if let Some(t) = shape.intersect(origin, dir) {
                    let p = origin + dir * t;
                    let residual = match *shape {
                        Shape::GroundPlane { z } => (p.z - z).abs(),
                        Shape::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
                        Shape::Cylinder {
                            base,
                            radius,
                            height,
                        } => {
                            let r = ((p.x - base.x).powi(2) + (p.y - base.y).powi(2)).sqrt();
                            let lateral = (r - radius).abs();
                            let cap = (p.z - base.z).abs().min((p.z - base.z - height).abs());
                            if r <= radius + 1e-9 {
                                lateral.min(cap)
                            } else {
                                lateral
                            }
                        }
                        Shape::Box(b) => b.distance_outside(p).abs(),
                    };
                    assert!(
                        residual <= 1e-9,
                        "hit point {p:?} off {shape:?} surface by {residual}"
                    );
                }
            }
        }
    }
}
