//! Homogeneous-coordinate mounting transforms and field-of-view tests.
//!
//! Radar-local frame: +y is boresight, +x is right of boresight, +z is radar-up.
//! Rotations follow the right-hand rule about each global axis. A pose
//! `(alpha, beta, gamma)` rotates a local point about x first, then y, then z,
//! and finally translates it by the radar position:
//!
//! ```text
//! P' = T(dx, dy, dz) * RM_z(gamma) * RM_y(beta) * RM_x(alpha) * P
//! ```
//!
//! Each `RM_*` is a rotation about the reference point `rp`; with the default
//! `rp = (0, 0, 0)` the offset column vanishes.

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::model::{RadarPoint, RadarPose};

/// Homogeneous 4x4 rigid transform from a radar-local frame to the global frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    matrix: Matrix4<f64>,
    reference_point: [f64; 3],
}

/// Rotation about one axis through `rp`, as a 4x4 homogeneous matrix.
fn axis_rotation(axis: usize, angle_rad: f64, rp: [f64; 3]) -> Matrix4<f64> {
    let unit = match axis {
        0 => Vector3::x_axis(),
        1 => Vector3::y_axis(),
        _ => Vector3::z_axis(),
    };
    let r: Matrix3<f64> = *Rotation3::from_axis_angle(&unit, angle_rad).matrix();
    let rp = Vector3::from(rp);
    // (I - R) rp keeps the reference point fixed.
    let offset = rp - r * rp;
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&offset);
    m
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix4::identity(),
            reference_point: [0.0; 3],
        }
    }

    pub fn translation(t: [f64; 3]) -> Self {
        let mut m = Matrix4::identity();
        m[(0, 3)] = t[0];
        m[(1, 3)] = t[1];
        m[(2, 3)] = t[2];
        Self {
            matrix: m,
            reference_point: [0.0; 3],
        }
    }

    /// Row-major 4x4 entries.
    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.matrix[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn reference_point(&self) -> [f64; 3] {
        self.reference_point
    }

    pub fn rotation_block(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation_part(&self) -> [f64; 3] {
        [
            self.matrix[(0, 3)],
            self.matrix[(1, 3)],
            self.matrix[(2, 3)],
        ]
    }

    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.matrix * Vector4::new(p[0], p[1], p[2], 1.0);
        [v[0], v[1], v[2]]
    }

    /// Rotate a direction (no translation).
    pub fn apply_direction(&self, d: [f64; 3]) -> [f64; 3] {
        let v = self.rotation_block() * Vector3::from(d);
        [v[0], v[1], v[2]]
    }

    /// Compose: `self.then(other)` applies `self` first.
    pub fn then(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            matrix: other.matrix * self.matrix,
            reference_point: self.reference_point,
        }
    }

    /// Checks bottom row, orthonormality and determinant.
    pub fn is_rigid(&self, tol: f64) -> bool {
        let m = &self.matrix;
        let bottom_ok = m[(3, 0)].abs() <= tol
            && m[(3, 1)].abs() <= tol
            && m[(3, 2)].abs() <= tol
            && (m[(3, 3)] - 1.0).abs() <= tol;
        let r = self.rotation_block();
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max() <= tol;
        bottom_ok && ortho && (r.determinant() - 1.0).abs() <= tol
    }
}

/// Mounting transform for a radar pose about reference point `rp`.
pub fn build_transform(pose: &RadarPose, rp: [f64; 3]) -> RigidTransform {
    let [a, b, g] = pose.rotation.map(f64::to_radians);
    let rotation = axis_rotation(2, g, rp) * axis_rotation(1, b, rp) * axis_rotation(0, a, rp);
    let translation = RigidTransform::translation(pose.position).matrix;
    RigidTransform {
        matrix: translation * rotation,
        reference_point: rp,
    }
}

/// Transform point positions; energy and speed pass through unchanged.
pub fn apply_transform(t: &RigidTransform, points: &[RadarPoint]) -> Vec<RadarPoint> {
    points
        .iter()
        .map(|p| p.with_position(t.apply_point(p.position())))
        .collect()
}

/// Closed-form rigid inverse `[R^T | -R^T t]`.
pub fn invert(t: &RigidTransform) -> RigidTransform {
    let rt = t.rotation_block().transpose();
    let trans = -(rt * Vector3::from(t.translation_part()));
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&trans);
    RigidTransform {
        matrix: m,
        reference_point: t.reference_point,
    }
}

/// Effective viewing cone of one radar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldOfView {
    /// Degrees either side of boresight in the radar's x-y plane.
    pub horizontal_half_angle: f64,
    /// Degrees above/below the radar's x-y plane.
    pub vertical_half_angle: f64,
    /// Meters.
    pub max_range: f64,
}

impl Default for FieldOfView {
    /// +-50 deg horizontal, +-30 deg vertical.
    fn default() -> Self {
        Self {
            horizontal_half_angle: 50.0,
            vertical_half_angle: 30.0,
            max_range: 10.0,
        }
    }
}

impl FieldOfView {
    pub fn is_valid(&self) -> bool {
        let ok = |a: f64| a > 0.0 && a <= 90.0;
        ok(self.horizontal_half_angle) && ok(self.vertical_half_angle) && self.max_range > 0.0
    }
}

/// Whether a radar-local point is inside the viewing cone and range.
pub fn in_field_of_view(fov: &FieldOfView, local: [f64; 3]) -> bool {
    let [x, y, z] = local;
    let horizontal = x.hypot(y);
    let range = horizontal.hypot(z);
    if !(range > 0.0) || range > fov.max_range {
        return false;
    }
    let azimuth = x.atan2(y).to_degrees();
    let elevation = z.atan2(horizontal).to_degrees();
    azimuth.abs() <= fov.horizontal_half_angle && elevation.abs() <= fov.vertical_half_angle
}
