//! Rigid transforms, camera intrinsics, oriented boxes, and the
//! projection/unprojection math the rest of the crate is built on.
//!
//! Conventions, fixed once here and used everywhere:
//!
//! - World and sensor frames follow the LiDAR convention: x forward,
//!   y left, z up.
//! - The virtual depth camera follows the camera convention: x right,
//!   y down, z forward. [`camera_to_lidar`] / [`lidar_to_camera`] adapt
//!   between the two (pure axis permutation, lossless).
//! - Depth means z-depth: distance along the optical axis, not Euclidean
//!   range.
//! - Integer pixel coordinates address pixel centers; the ray of pixel
//!   `(u, v)` is whatever [`CameraIntrinsics::unproject`] returns for
//!   `u as f64, v as f64`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// 3D vector / point, meters unless used as a direction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Right-handed rotation about +x.
    pub fn rotation_x(angle: f64) -> Mat3 {
        let (s, c) = angle.sin_cos();
        Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    /// Right-handed rotation about +y. Positive angles pitch the +x axis
    /// downward (toward -z).
    pub fn rotation_y(angle: f64) -> Mat3 {
        let (s, c) = angle.sin_cos();
        Mat3([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    /// Right-handed rotation about +z (yaw).
    pub fn rotation_z(angle: f64) -> Mat3 {
        let (s, c) = angle.sin_cos();
        Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rodrigues rotation about a unit axis.
    pub fn rotation_axis_angle(axis: Vec3, angle: f64) -> Mat3 {
        let k = axis;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Mat3([
            [
                c + k.x * k.x * t,
                k.x * k.y * t - k.z * s,
                k.x * k.z * t + k.y * s,
            ],
            [
                k.y * k.x * t + k.z * s,
                c + k.y * k.y * t,
                k.y * k.z * t - k.x * s,
            ],
            [
                k.z * k.x * t - k.y * s,
                k.z * k.y * t + k.x * s,
                c + k.z * k.z * t,
            ],
        ])
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3 {
            x: m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            y: m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            z: m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        }
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        let a = &self.0;
        let b = &other.0;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Mat3(out)
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max absolute entry of `R^T R - I`.
    pub fn orthonormality_residual(&self) -> f64 {
        let rtr = self.transpose().mul_mat(self);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((rtr.0[i][j] - expected).abs());
            }
        }
        worst
    }
}

/// Proper rigid motion: `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation: Mat3::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform {
            rotation: Mat3::IDENTITY,
            translation: t,
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    /// Checks the rotation is orthonormal with determinant +1 (1e-9).
    pub fn validate(&self) -> Result<()> {
        if self.rotation.orthonormality_residual() > 1e-9 {
            return Err(Error::InvalidInput(
                "rigid transform rotation is not orthonormal".into(),
            ));
        }
        if (self.rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(
                "rigid transform rotation determinant is not +1".into(),
            ));
        }
        if !self.translation.is_finite() {
            return Err(Error::InvalidInput(
                "rigid transform translation is not finite".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p) + self.translation
    }

    /// Inverse motion: `p -> R^T (p - t)`.
    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -rt.mul_vec(self.translation),
        }
    }

    /// `compose(a, b)` applies `b` first: `apply(compose(a,b), p) = a(b(p))`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.mul_mat(&other.rotation),
            translation: self.rotation.mul_vec(other.translation) + self.translation,
        }
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = (angle + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    // rem_euclid can return exactly two_pi for tiny negative inputs.
    if wrapped >= std::f64::consts::PI {
        wrapped - two_pi
    } else {
        wrapped
    }
}

/// Oriented 3D box: center, full extents, yaw about +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub center: Vec3,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// Radians, normalized to `[-pi, pi)` by [`Box3D::new`].
    pub yaw: f64,
}

impl Box3D {
    pub fn new(center: Vec3, dx: f64, dy: f64, dz: f64, yaw: f64) -> Self {
        Box3D {
            center,
            dx,
            dy,
            dz,
            yaw: wrap_angle(yaw),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "box extents must be positive, got ({}, {}, {})",
                self.dx, self.dy, self.dz
            )));
        }
        if !self.center.is_finite() || !self.yaw.is_finite() {
            return Err(Error::InvalidInput("box center/yaw must be finite".into()));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    /// The eight corners in a fixed order: bottom face counter-clockwise
    /// viewed from +z starting at local (+x, +y), then the top face in the
    /// same angular order.
    pub fn corners(&self) -> [Vec3; 8] {
        let (hx, hy, hz) = (self.dx / 2.0, self.dy / 2.0, self.dz / 2.0);
        let (s, c) = self.yaw.sin_cos();
        let local = [
            (hx, hy),
            (-hx, hy),
            (-hx, -hy),
            (hx, -hy), // bottom ring, CCW from +z
        ];
        let mut out = [Vec3::ZERO; 8];
        for (i, &(lx, ly)) in local.iter().enumerate() {
            let wx = self.center.x + c * lx - s * ly;
            let wy = self.center.y + s * lx + c * ly;
            out[i] = Vec3::new(wx, wy, self.center.z - hz);
            out[i + 4] = Vec3::new(wx, wy, self.center.z + hz);
        }
        out
    }

    /// Point-in-box test in the box's local frame; the boundary counts
    /// as inside.
    pub fn contains(&self, p: Vec3) -> bool {
        self.distance_outside(p) <= 0.0
    }

    /// Max of the per-axis overshoots of `p` beyond the box faces, in the
    /// box local frame. `<= 0` means inside; small positive values mean
    /// "outside by this many meters".
    pub fn distance_outside(&self, p: Vec3) -> f64 {
        let d = p - self.center;
        let (s, c) = self.yaw.sin_cos();
        // Un-yaw: rotate by -yaw.
        let lx = c * d.x + s * d.y;
        let ly = -s * d.x + c * d.y;
        let lz = d.z;
        (lx.abs() - self.dx / 2.0)
            .max(ly.abs() - self.dy / 2.0)
            .max(lz.abs() - self.dz / 2.0)
    }

    /// Footprint corners in the xy plane, counter-clockwise.
    pub fn footprint(&self) -> [(f64, f64); 4] {
        let (hx, hy) = (self.dx / 2.0, self.dy / 2.0);
        let (s, c) = self.yaw.sin_cos();
        let local = [(hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy)];
        let mut out = [(0.0, 0.0); 4];
        for (i, &(lx, ly)) in local.iter().enumerate() {
            out[i] = (
                self.center.x + c * lx - s * ly,
                self.center.y + s * lx + c * ly,
            );
        }
        out
    }

    /// Vertical interval `[z_min, z_max]`.
    pub fn z_interval(&self) -> (f64, f64) {
        (self.center.z - self.dz / 2.0, self.center.z + self.dz / 2.0)
    }
}

/// Pinhole camera with square pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    /// Builds intrinsics from a horizontal field of view and image size:
    /// `fx = fy = width / (2 tan(fov_h/2))`, principal point at the image
    /// center. The vertical FoV is implied by the aspect ratio.
    pub fn from_horizontal_fov(fov_h: f64, width: u32, height: u32) -> Result<Self> {
        if !(fov_h > 0.0 && fov_h < std::f64::consts::PI) {
            return Err(Error::InvalidConfig(format!(
                "horizontal fov must be in (0, pi), got {fov_h}"
            )));
        }
        if width < 1 || height < 1 {
            return Err(Error::InvalidConfig(
                "image size must be at least 1x1".into(),
            ));
        }
        let f = width as f64 / (2.0 * (fov_h / 2.0).tan());
        Ok(CameraIntrinsics {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx > 0.0
            && self.cx < self.width as f64
            && self.cy > 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid intrinsics: fx={} fy={} cx={} cy={} size={}x{}",
                self.fx, self.fy, self.cx, self.cy, self.width, self.height
            )))
        }
    }

    /// Effective vertical field of view implied by the image height.
    pub fn vertical_fov(&self) -> f64 {
        2.0 * (self.height as f64 / (2.0 * self.fy)).atan()
    }

    /// Pixel + z-depth to a camera-frame point. Depth must be positive.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Result<Vec3> {
        if !(depth > 0.0) {
            return Err(Error::InvalidInput(format!(
                "depth must be positive, got {depth}"
            )));
        }
        Ok(Vec3 {
            x: (u - self.cx) / self.fx * depth,
            y: (v - self.cy) / self.fy * depth,
            z: depth,
        })
    }

    /// Camera-frame point to `(u, v, z-depth)`. The point must be in front
    /// of the camera.
    pub fn project(&self, p: Vec3) -> Result<(f64, f64, f64)> {
        if !(p.z > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cannot project point behind the camera (z = {})",
                p.z
            )));
        }
        Ok((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
            p.z,
        ))
    }
}

/// Camera convention (x right, y down, z forward) to LiDAR convention
/// (x forward, y left, z up). Exact axis permutation.
#[inline]
pub fn camera_to_lidar(p: Vec3) -> Vec3 {
    Vec3::new(p.z, -p.x, -p.y)
}

/// Inverse of [`camera_to_lidar`].
#[inline]
pub fn lidar_to_camera(p: Vec3) -> Vec3 {
    Vec3::new(-p.y, -p.z, p.x)
}
