//! SE(3)/SO(3) representations, exponential/logarithm maps, perturbation
//! sampling, and on-manifold fusion of pose estimates with covariances.
//!
//! Twist coordinates are ordered translation-first: `(rho, phi)` maps to the
//! 6-vector `[rho; phi]`, so 6x6 covariances carry the m² block in the upper
//! left and the rad² block in the lower right.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::{Error, Result};

/// Mean rotation error per millimetre of translation error observed for a
/// sampling-based global pose estimator (degrees per mm).
pub const ROTATION_DEG_PER_MM: f64 = 1.92;

/// Mean translation error of the same estimator (meters).
pub const MEAN_TRANSLATION_ERROR_M: f64 = 0.0062;

/// Mean rotation error of the same estimator (radians).
///
/// Note that this is the independently reported mean, not
/// `MEAN_TRANSLATION_ERROR_M * ROTATION_DEG_PER_MM`; the two constants are
/// used for different experiment protocols.
pub const MEAN_ROTATION_ERROR_RAD: f64 = 9.5 * std::f64::consts::PI / 180.0;

/// Rigid transform in SE(3).
///
/// `rotation` is a 3x3 orthonormal matrix with determinant +1; `translation`
/// is in meters. The pair maps points from the source frame into the target
/// frame: `p' = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Rotate a direction vector (no translation).
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Geodesic rotation distance to `other`, in radians.
    pub fn rotation_error(&self, other: &Pose) -> f64 {
        rotation_angle(&(self.rotation.transpose() * other.rotation))
    }

    /// Euclidean translation distance to `other`, in meters.
    pub fn translation_error(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }

    /// True when the rotation block is orthonormal with determinant +1.
    pub fn rotation_is_valid(&self, tol: f64) -> bool {
        let rtr = self.rotation.transpose() * self.rotation;
        (rtr - Matrix3::identity()).norm() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

/// Element of the Lie algebra se(3): translational part `rho` (meters) and
/// rotational part `phi` (radians, axis scaled by angle).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub rho: Vector3<f64>,
    pub phi: Vector3<f64>,
}

impl Twist {
    pub fn zero() -> Self {
        Self {
            rho: Vector3::zeros(),
            phi: Vector3::zeros(),
        }
    }

    pub fn new(rho: Vector3<f64>, phi: Vector3<f64>) -> Self {
        Self { rho, phi }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            rho: Vector3::new(v[0], v[1], v[2]),
            phi: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.rho[0],
            self.rho[1],
            self.rho[2],
            self.phi[0],
            self.phi[1],
            self.phi[2],
        )
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }
}

/// A pose estimate with a 6x6 covariance in twist coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PoseWithCovariance {
    pub pose: Pose,
    pub covariance: Matrix6<f64>,
}

impl PoseWithCovariance {
    pub fn new(pose: Pose, covariance: Matrix6<f64>) -> Self {
        Self { pose, covariance }
    }

    /// Isotropic covariance `scale * I`.
    pub fn isotropic(pose: Pose, scale: f64) -> Self {
        Self {
            pose,
            covariance: Matrix6::identity() * scale,
        }
    }
}

/// A sampled pose perturbation: translation offset plus a rotation offset.
#[derive(Debug, Clone, Copy)]
pub struct Perturbation {
    pub t_delta: Vector3<f64>,
    pub r_delta: Matrix3<f64>,
}

impl Perturbation {
    pub fn identity() -> Self {
        Self {
            t_delta: Vector3::zeros(),
            r_delta: Matrix3::identity(),
        }
    }
}

fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Geodesic angle of a rotation matrix in [0, π].
///
/// Algebraically `acos((tr - 1) / 2)` with a clamped argument; evaluated as
/// `atan2(|sin|, cos)` because the plain arccosine loses half the mantissa
/// near 0 and π.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let sin = 0.5 * vee(&(r - r.transpose())).norm();
    sin.atan2(cos)
}

/// Rodrigues formula: rotation matrix for an axis-angle vector.
pub fn rotation_exp(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let k = hat(phi);
    if theta2 < 1e-10 {
        // sin(t)/t and (1-cos(t))/t² by series.
        let a = 1.0 - theta2 / 6.0;
        let b = 0.5 - theta2 / 24.0;
        Matrix3::identity() + a * k + b * (k * k)
    } else {
        let theta = theta2.sqrt();
        let a = theta.sin() / theta;
        let b = (1.0 - theta.cos()) / theta2;
        Matrix3::identity() + a * k + b * (k * k)
    }
}

/// Inverse of [`rotation_exp`] on the canonical branch with angle in [0, π].
///
/// At angle exactly π the axis is recovered from the column of `R + I` with
/// the largest diagonal entry; the sign is fixed so that the first nonzero
/// axis component is positive.
pub fn rotation_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let theta = rotation_angle(r);
    if theta < 1e-10 {
        // First-order: R ≈ I + hat(phi).
        return 0.5 * vee(&(r - r.transpose()));
    }
    if theta > std::f64::consts::PI - 1e-6 {
        // Near π, (R - Rᵀ) vanishes; use R + I = 2 a aᵀ + O(π - θ).
        let b = r + Matrix3::identity();
        let j = (0..3)
            .max_by(|&a, &c| b[(a, a)].partial_cmp(&b[(c, c)]).unwrap())
            .unwrap();
        let mut axis: Vector3<f64> = b.column(j).into();
        axis /= axis.norm();
        for k in 0..3 {
            if axis[k].abs() > 1e-12 {
                if axis[k] < 0.0 {
                    axis = -axis;
                }
                break;
            }
        }
        return theta * axis;
    }
    (theta / (2.0 * theta.sin())) * vee(&(r - r.transpose()))
}

/// Left Jacobian of SO(3): `V` such that `exp((rho, phi)).translation = V rho`.
fn left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let k = hat(phi);
    if theta2 < 1e-10 {
        let a = 0.5 - theta2 / 24.0;
        let b = 1.0 / 6.0 - theta2 / 120.0;
        Matrix3::identity() + a * k + b * (k * k)
    } else {
        let theta = theta2.sqrt();
        let a = (1.0 - theta.cos()) / theta2;
        let b = (theta - theta.sin()) / (theta2 * theta);
        Matrix3::identity() + a * k + b * (k * k)
    }
}

fn left_jacobian_inverse(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let k = hat(phi);
    if theta2 < 1e-10 {
        let c = 1.0 / 12.0 + theta2 / 720.0;
        Matrix3::identity() - 0.5 * k + c * (k * k)
    } else {
        let theta = theta2.sqrt();
        // Finite for all angles below 2π, including π.
        let c = (1.0 - theta * theta.sin() / (2.0 * (1.0 - theta.cos()))) / theta2;
        Matrix3::identity() - 0.5 * k + c * (k * k)
    }
}

/// Closed-form SE(3) exponential map.
pub fn exp(xi: &Twist) -> Pose {
    Pose {
        rotation: rotation_exp(&xi.phi),
        translation: left_jacobian(&xi.phi) * xi.rho,
    }
}

/// SE(3) logarithm map, inverse of [`exp`] on the canonical branch.
pub fn log(pose: &Pose) -> Twist {
    let phi = rotation_log(&pose.rotation);
    let rho = left_jacobian_inverse(&phi) * pose.translation;
    Twist { rho, phi }
}

/// Draw a perturbation with translation magnitude `delta_t` (meters) and
/// rotation magnitude `delta_theta` (radians).
///
/// The translation direction and the rotation axis are each drawn uniformly
/// from the surface of the unit sphere.
pub fn sample_perturbation<R: Rng + ?Sized>(
    delta_t: f64,
    delta_theta: f64,
    rng: &mut R,
) -> Perturbation {
    let v: [f64; 3] = UnitSphere.sample(rng);
    let axis: [f64; 3] = UnitSphere.sample(rng);
    Perturbation {
        t_delta: delta_t * Vector3::from(v),
        r_delta: rotation_exp(&(delta_theta * Vector3::from(axis))),
    }
}

/// Perturb a ground-truth pose: the rotation offset composes on the right,
/// the translation offset adds in the target (camera) frame.
pub fn apply_perturbation(t_gt: &Pose, p: &Perturbation) -> Pose {
    Pose {
        rotation: t_gt.rotation * p.r_delta,
        translation: t_gt.translation + p.t_delta,
    }
}

/// Rotation magnitude paired with a translation magnitude by the estimator
/// error ratio: `delta_t` (meters) in mm, times 1.92°, in radians.
pub fn rotation_for_translation(delta_t: f64) -> f64 {
    (delta_t * 1000.0 * ROTATION_DEG_PER_MM).to_radians()
}

const FUSION_MAX_ITER: usize = 50;
const FUSION_TOL: f64 = 1e-10;

/// Information-weighted on-manifold fusion of pose estimates.
///
/// Minimizes `Σ_l ||log(T_l T⁻¹)||²_{Σ_l⁻¹}` by Gauss-Newton in twist
/// coordinates with a left-multiplicative update `T ← exp(δ) T`, starting at
/// the estimate with the smallest covariance trace. The fused covariance is
/// the inverse of the summed information.
pub fn fuse_estimates(estimates: &[PoseWithCovariance]) -> Result<PoseWithCovariance> {
    if estimates.is_empty() {
        return Err(Error::InvalidInput("no estimates to fuse".into()));
    }
    let weights: Vec<Matrix6<f64>> = estimates
        .iter()
        .map(|e| {
            e.covariance
                .cholesky()
                .map(|ch| ch.inverse())
                .ok_or(Error::SingularInformation)
        })
        .collect::<Result<_>>()?;
    let information: Matrix6<f64> = weights.iter().sum();
    let info_chol = information.cholesky().ok_or(Error::SingularInformation)?;
    let fused_covariance = info_chol.inverse();

    let start = estimates
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.covariance
                .trace()
                .partial_cmp(&b.covariance.trace())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let mut fused = estimates[start].pose;

    for _ in 0..FUSION_MAX_ITER {
        let inv = fused.inverse();
        let mut rhs = Vector6::zeros();
        for (est, w) in estimates.iter().zip(&weights) {
            let residual = log(&est.pose.compose(&inv)).as_vector();
            rhs += w * residual;
        }
        let delta = info_chol.solve(&rhs);
        fused = exp(&Twist::from_vector(&delta)).compose(&fused);
        if delta.norm() < FUSION_TOL {
            break;
        }
    }

    Ok(PoseWithCovariance {
        pose: fused,
        covariance: fused_covariance,
    })
}

/// On-manifold mean of a pose list: fusion with identity covariances.
pub fn deterministic_average(poses: &[Pose]) -> Result<Pose> {
    let estimates: Vec<PoseWithCovariance> = poses
        .iter()
        .map(|&p| PoseWithCovariance::isotropic(p, 1.0))
        .collect();
    Ok(fuse_estimates(&estimates)?.pose)
}
