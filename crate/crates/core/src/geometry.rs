//! Head-pose rotations and the normalized mean error metric.
//!
//! Euler angles arrive in degrees and are composed about the fixed camera
//! axes: first about X (pitch), then Y (yaw), then Z (roll), so that
//! `R = Rz(roll) * Ry(yaw) * Rx(pitch)`. Deviation from the frontal pose is
//! the geodesic (rotation-angle) distance on SO(3), reported in radians.

use thiserror::Error;

/// Tolerance for the orthonormality and determinant checks on rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite Euler angle ({name} = {value})")]
    NonFiniteAngle { name: &'static str, value: f64 },
    #[error("matrix is not a rotation: max |R^T R - I| = {orthogonality:.3e}, det = {determinant}")]
    NotARotation { orthogonality: f64, determinant: f64 },
    #[error("landmark count mismatch: {gt} ground-truth vs {pred} predicted")]
    LandmarkCountMismatch { gt: usize, pred: usize },
    #[error("landmark set is empty")]
    EmptyLandmarks,
    #[error("non-finite landmark coordinate at index {index}")]
    NonFiniteLandmark { index: usize },
    #[error("normalizer must be positive and finite, got {0}")]
    InvalidNormalizer(f64),
}

/// Head pose as pitch/yaw/roll in degrees (rotations about X, Y, Z).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(pitch: f64, yaw: f64, roll: f64) -> Self {
        Self { pitch, yaw, roll }
    }

    /// Angles wrapped into the reporting range (-180, 180].
    pub fn canonical(&self) -> Self {
        Self::new(wrap_degrees(self.pitch), wrap_degrees(self.yaw), wrap_degrees(self.roll))
    }

    fn check_finite(&self) -> Result<(), GeometryError> {
        for (name, value) in [("pitch", self.pitch), ("yaw", self.yaw), ("roll", self.roll)] {
            if !value.is_finite() {
                return Err(GeometryError::NonFiniteAngle { name, value });
            }
        }
        Ok(())
    }
}

fn wrap_degrees(deg: f64) -> f64 {
    let mut w = deg.rem_euclid(360.0);
    if w > 180.0 {
        w -= 360.0;
    }
    w
}

/// A validated 3x3 rotation matrix, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix([[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Wraps a matrix after checking `R^T R = I` and `det R = 1` within
    /// [`ROTATION_TOLERANCE`].
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        let orthogonality = orthogonality_error(&m);
        let determinant = det3(&m);
        if !(orthogonality <= ROTATION_TOLERANCE && (determinant - 1.0).abs() <= ROTATION_TOLERANCE) {
            return Err(GeometryError::NotARotation { orthogonality, determinant });
        }
        Ok(Self(m))
    }

    /// Rotation by `radians` about the X axis.
    pub fn about_x(radians: f64) -> Self {
        let (s, c) = radians.sin_cos();
        Self([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    /// Rotation by `radians` about the Y axis.
    pub fn about_y(radians: f64) -> Self {
        let (s, c) = radians.sin_cos();
        Self([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    /// Rotation by `radians` about the Z axis.
    pub fn about_z(radians: f64) -> Self {
        let (s, c) = radians.sin_cos();
        Self([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[j][i];
            }
        }
        Self(t)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &RotationMatrix) -> Self {
        Self(mul3(&self.0, &rhs.0))
    }

    /// Largest entry of `|R^T R - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.0)
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.0)
    }
}

fn mul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn orthogonality_error(m: &[[f64; 3]; 3]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    if worst.is_nan() {
        f64::INFINITY
    } else {
        worst
    }
}

/// Builds `Rz(roll) * Ry(yaw) * Rx(pitch)` from angles in degrees.
pub fn euler_to_rotation(angles: &EulerAngles) -> Result<RotationMatrix, GeometryError> {
    angles.check_finite()?;
    let rx = RotationMatrix::about_x(angles.pitch.to_radians());
    let ry = RotationMatrix::about_y(angles.yaw.to_radians());
    let rz = RotationMatrix::about_z(angles.roll.to_radians());
    RotationMatrix::new(rz.compose(&ry).compose(&rx).0)
}

/// Rotation angle of `reference^T * rotation`, in radians within `[0, pi]`.
pub fn geodesic_deviation(rotation: &RotationMatrix, reference: &RotationMatrix) -> Result<f64, GeometryError> {
    RotationMatrix::new(rotation.0)?;
    RotationMatrix::new(reference.0)?;
    let relative = reference.transpose().compose(rotation);
    let cos = ((relative.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// Geodesic deviation of a head pose from the frontal (identity) pose.
pub fn frontal_deviation(angles: &EulerAngles) -> Result<f64, GeometryError> {
    geodesic_deviation(&euler_to_rotation(angles)?, &RotationMatrix::IDENTITY)
}

/// A 2-D landmark position in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ordered, non-empty list of landmark positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point2>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point2>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyLandmarks);
        }
        if let Some(index) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(GeometryError::NonFiniteLandmark { index });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Mean per-landmark Euclidean error divided by `normalizer` (e.g. the
/// face bounding-box height). Unitless; multiply by 100 for percent.
pub fn compute_nme(gt: &LandmarkSet, pred: &LandmarkSet, normalizer: f64) -> Result<f64, GeometryError> {
    if gt.len() != pred.len() {
        return Err(GeometryError::LandmarkCountMismatch { gt: gt.len(), pred: pred.len() });
    }
    if !(normalizer > 0.0 && normalizer.is_finite()) {
        return Err(GeometryError::InvalidNormalizer(normalizer));
    }
    let total: f64 = gt.points.iter().zip(&pred.points).map(|(a, b)| a.distance(b)).sum();
    Ok(total / gt.len() as f64 / normalizer)
}
