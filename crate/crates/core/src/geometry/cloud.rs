use nalgebra::Vector3;

use crate::se3::Pose;

/// Flat point cloud with per-point unit normals.
#[derive(Debug, Clone, Default)]
pub struct OrientedPointCloud {
    pub points: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
}

impl OrientedPointCloud {
    pub fn new(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> Self {
        assert_eq!(points.len(), normals.len());
        Self { points, normals }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cloud with points and normals carried through a rigid transform.
    pub fn transformed(&self, pose: &Pose) -> Self {
        Self {
            points: self.points.iter().map(|p| pose.transform_point(p)).collect(),
            normals: self.normals.iter().map(|n| pose.rotate(n)).collect(),
        }
    }
}
