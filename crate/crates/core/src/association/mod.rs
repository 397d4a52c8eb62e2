//! Correspondence search between the transformed model and the scene, by
//! nearest-neighbour or projective matching, with distance and
//! normal-compatibility rejection.

mod kdtree;

pub use kdtree::{brute_force_nearest, SpatialIndex};

use nalgebra::Vector3;

use crate::geometry::{CameraIntrinsics, NormalMap, OrientedPointCloud, VertexMap};
use crate::se3::Pose;

/// Rejection thresholds shared by both association methods: pairs further
/// than `tau_max` apart or with normals more than `theta_max` apart are
/// dropped.
#[derive(Debug, Clone, Copy)]
pub struct AssociationConfig {
    pub tau_max: f64,
    pub theta_max: f64,
}

impl AssociationConfig {
    /// Diameter-relative defaults: `tau_max = 0.25 d`, `theta_max = 60°`.
    pub fn for_diameter(diameter: f64) -> Self {
        Self {
            tau_max: 0.25 * diameter,
            theta_max: 60f64.to_radians(),
        }
    }

    /// Gates sized for refinement from initialisations up to `max_offset`
    /// meters away: the distance gate must never reject the true match at
    /// that offset, and the tighter 45° normal gate keeps silhouette-band
    /// back-surface matches from flooring nearest-neighbour refinement on
    /// small objects.
    pub fn for_initialisation_scale(diameter: f64, max_offset: f64) -> Self {
        Self {
            tau_max: 0.25 * diameter + max_offset,
            theta_max: 45f64.to_radians(),
        }
    }
}

/// Data association method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationMethod {
    NearestNeighbour,
    Projective,
}

/// One matched pair. `o`/`m` are the model point and normal exactly as
/// stored in the model (not transformed by the current estimate); `c`/`n`
/// come from the scene in the camera frame.
#[derive(Debug, Clone, Copy)]
pub struct Correspondence {
    pub o: Vector3<f64>,
    pub m: Vector3<f64>,
    pub c: Vector3<f64>,
    pub n: Vector3<f64>,
}

/// Result of one association pass.
#[derive(Debug, Clone, Default)]
pub struct CorrespondenceSet {
    pub pairs: Vec<Correspondence>,
    /// Number of model entries that were candidates for matching.
    pub candidates_considered: usize,
}

impl CorrespondenceSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Match every model point against its exact nearest scene point under the
/// current estimate, keeping pairs that pass both rejection gates.
pub fn nn_associate(
    model: &OrientedPointCloud,
    scene: &OrientedPointCloud,
    scene_index: &SpatialIndex,
    t_current: &Pose,
    cfg: &AssociationConfig,
) -> CorrespondenceSet {
    let cos_theta = cfg.theta_max.cos();
    let mut pairs = Vec::new();
    for (o, m) in model.points.iter().zip(&model.normals) {
        let p = t_current.transform_point(o);
        // The radius-bounded search returns the exact nearest neighbour
        // whenever one passes the distance gate.
        let Some((idx, _)) = scene_index.nearest_within(&p, cfg.tau_max) else {
            continue;
        };
        let n = scene.normals[idx];
        if t_current.rotate(m).dot(&n) < cos_theta {
            continue;
        }
        pairs.push(Correspondence {
            o: *o,
            m: *m,
            c: scene.points[idx],
            n,
        });
    }
    CorrespondenceSet {
        pairs,
        candidates_considered: model.len(),
    }
}

/// Match every valid model vertex by re-projecting it into the scene's image
/// and pairing it with whatever valid scene pixel it lands on, then apply
/// both rejection gates. Vertices projecting off-image or onto invalid
/// pixels produce no pair, so an empty set signals total misalignment.
pub fn projective_associate(
    model_vmap: &VertexMap,
    model_nmap: &NormalMap,
    scene_vmap: &VertexMap,
    scene_nmap: &NormalMap,
    t_current: &Pose,
    cam: &CameraIntrinsics,
    cfg: &AssociationConfig,
) -> CorrespondenceSet {
    let tau2 = cfg.tau_max * cfg.tau_max;
    let cos_theta = cfg.theta_max.cos();
    let mut pairs = Vec::new();
    let mut candidates = 0usize;
    for v in 0..model_vmap.height {
        for u in 0..model_vmap.width {
            let (Some(o), Some(m)) = (model_vmap.at(u, v), model_nmap.at(u, v)) else {
                continue;
            };
            candidates += 1;
            let p = t_current.transform_point(o);
            let Some((us, vs)) = cam.project_to_pixel(&p) else {
                continue;
            };
            let (Some(c), Some(n)) = (scene_vmap.at(us, vs), scene_nmap.at(us, vs)) else {
                continue;
            };
            if kdtree::dist2(&p, c) > tau2 {
                continue;
            }
            if t_current.rotate(m).dot(n) < cos_theta {
                continue;
            }
            pairs.push(Correspondence {
                o: *o,
                m: *m,
                c: *c,
                n: *n,
            });
        }
    }
    CorrespondenceSet {
        pairs,
        candidates_considered: candidates,
    }
}
