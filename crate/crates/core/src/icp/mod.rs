//! The generic ICP loop with convergence and per-iteration tracing, plus
//! the incremental-transform solvers.

mod solvers;

pub use solvers::{
    point_to_plane_loss, point_to_point_loss, solve_point_to_plane, solve_point_to_point,
};

use crate::association::{
    nn_associate, projective_associate, AssociationConfig, AssociationMethod, Correspondence,
    CorrespondenceSet, SpatialIndex,
};
use crate::geometry::{
    backproject, compute_normals, render_depth, CameraIntrinsics, DepthImage, NormalMap,
    OrientedPointCloud, SegmentationMask, TriangleMesh, VertexMap,
};
use crate::se3::Pose;

/// Error metric minimised per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMetric {
    PointToPoint,
    PointToPlane,
}

/// Stopping parameters of one ICP run.
#[derive(Debug, Clone, Copy)]
pub struct IcpConfig {
    pub max_iter: usize,
    pub rel_loss_tol: f64,
    pub min_correspondences: usize,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            rel_loss_tol: 1e-6,
            min_correspondences: 10,
        }
    }
}

/// Losses at or below this are treated as exactly converged; the relative
/// criterion is meaningless at the numerical floor.
const ZERO_LOSS: f64 = 1e-20;

/// State recorded per iteration.
///
/// `mean_loss` is the alignment loss of the pose **entering** the iteration,
/// evaluated on that iteration's correspondences; it is the measurement all
/// stopping and divergence decisions run on. `pose_after` is the pose once
/// the iteration's incremental solve is applied (equal to the entering pose
/// on iterations that stop without updating).
#[derive(Debug, Clone)]
pub struct IterationTrace {
    /// 1-based iteration index; resets at stage boundaries when runs are
    /// concatenated.
    pub iteration: usize,
    pub mean_loss: f64,
    pub correspondence_count: usize,
    pub pose_after: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcpStatus {
    Converged,
    MaxIter,
    DivergedRolledBack,
    NoCorrespondences,
}

/// Refined pose plus the per-iteration trace that produced it.
#[derive(Debug, Clone)]
pub struct IcpResult {
    pub pose: Pose,
    pub trace: Vec<IterationTrace>,
    pub status: IcpStatus,
}

/// Scene-side inputs shared by every association method: the flat cloud with
/// its spatial index and the image-organized maps.
pub struct Scene {
    pub cloud: OrientedPointCloud,
    pub index: SpatialIndex,
    pub vmap: VertexMap,
    pub nmap: NormalMap,
}

/// Default cap on the flat scene cloud fed to nearest-neighbour search.
/// Close-up objects can cover hundreds of thousands of pixels; exact NN
/// over such clouds is quadratically painful for model points far from the
/// surface, while registration quality saturates long before this density.
pub const DEFAULT_MAX_SCENE_POINTS: usize = 20_000;

impl Scene {
    /// Build the scene from a segmented depth image. Only pixels with both
    /// a valid depth and a valid estimated normal enter the flat cloud,
    /// decimated to [`DEFAULT_MAX_SCENE_POINTS`]; the image-organized maps
    /// used by projective association keep every pixel.
    pub fn from_depth(
        depth: &DepthImage,
        mask: &SegmentationMask,
        cam: &CameraIntrinsics,
    ) -> Self {
        Self::from_depth_with_cap(depth, mask, cam, DEFAULT_MAX_SCENE_POINTS)
    }

    /// [`Scene::from_depth`] with an explicit flat-cloud cap. Decimation is
    /// a deterministic pixel-grid stride, so the kept subset stays spatially
    /// uniform and reproducible.
    pub fn from_depth_with_cap(
        depth: &DepthImage,
        mask: &SegmentationMask,
        cam: &CameraIntrinsics,
        max_points: usize,
    ) -> Self {
        let vmap = backproject(depth, cam, mask);
        let nmap = compute_normals(&vmap);
        let valid = vmap.valid.iter().filter(|&&v| v).count();
        let stride = if valid > max_points.max(1) {
            (valid as f64 / max_points as f64).sqrt().ceil() as usize
        } else {
            1
        };
        let mut points = Vec::new();
        let mut normals = Vec::new();
        for v in (0..vmap.height).step_by(stride) {
            for u in (0..vmap.width).step_by(stride) {
                if let (Some(p), Some(n)) = (vmap.at(u, v), nmap.at(u, v)) {
                    points.push(*p);
                    normals.push(*n);
                }
            }
        }
        let cloud = OrientedPointCloud::new(points, normals);
        let index = SpatialIndex::build(&cloud.points);
        Self {
            cloud,
            index,
            vmap,
            nmap,
        }
    }
}

/// Model-side inputs: the object-frame cloud for NN association and,
/// when projective association is wanted, the vertex/normal maps obtained by
/// rendering the model at the initial estimate.
pub struct ModelView<'a> {
    pub cloud: &'a OrientedPointCloud,
    pub maps: Option<(&'a VertexMap, &'a NormalMap)>,
}

/// Render the model-side maps at `pose`. A render that covers no pixel
/// yields empty maps, which downstream association reports as an empty
/// correspondence set.
pub fn render_model_maps(
    mesh: &TriangleMesh,
    pose: &Pose,
    cam: &CameraIntrinsics,
) -> (VertexMap, NormalMap) {
    match render_depth(mesh, pose, cam) {
        Ok((depth, mask)) => {
            let vmap = backproject(&depth, cam, &mask);
            let nmap = compute_normals(&vmap);
            (vmap, nmap)
        }
        Err(_) => (
            VertexMap::new_invalid(cam.width, cam.height),
            NormalMap::new_invalid(cam.width, cam.height),
        ),
    }
}

/// Divergence criteria applied per iteration by Cascading ICP stages.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DivergenceGuard {
    /// Fractional correspondence-count shrink that counts as divergence.
    pub shrink_tolerance: f64,
    /// Require the shrink against both the first and the previous iteration
    /// (conjunctive) or against either (disjunctive).
    pub conjunctive: bool,
}

/// Generic ICP: associate, transform the model by the current estimate,
/// solve an incremental transform, compose, and repeat until the loss
/// settles, correspondences run out, or `max_iter` is reached.
///
/// For projective association the model maps must be rendered at `t_init`.
#[allow(clippy::too_many_arguments)]
pub fn run_icp(
    model: &ModelView,
    scene: &Scene,
    t_init: &Pose,
    assoc: AssociationMethod,
    metric: ErrorMetric,
    cfg: &IcpConfig,
    assoc_cfg: &AssociationConfig,
    cam: &CameraIntrinsics,
) -> IcpResult {
    run_icp_inner(
        model, scene, t_init, t_init, assoc, metric, cfg, assoc_cfg, cam, None,
    )
}

/// Shared loop. `map_pose` is the pose the model maps were rendered at; the
/// plain entry point passes `t_init` while Cascading stage two continues
/// from a refined estimate against maps rendered at the cascade entry.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_icp_inner(
    model: &ModelView,
    scene: &Scene,
    t_init: &Pose,
    map_pose: &Pose,
    assoc: AssociationMethod,
    metric: ErrorMetric,
    cfg: &IcpConfig,
    assoc_cfg: &AssociationConfig,
    cam: &CameraIntrinsics,
    guard: Option<DivergenceGuard>,
) -> IcpResult {
    // `current` acts on the effective model entries; `base` carries them
    // into the object frame so the reported pose is always object-to-camera.
    let (mut current, base) = match assoc {
        AssociationMethod::NearestNeighbour => (*t_init, Pose::identity()),
        AssociationMethod::Projective => (t_init.compose(&map_pose.inverse()), *map_pose),
    };

    let associate = |estimate: &Pose| -> CorrespondenceSet {
        match assoc {
            AssociationMethod::NearestNeighbour => nn_associate(
                model.cloud,
                &scene.cloud,
                &scene.index,
                estimate,
                assoc_cfg,
            ),
            AssociationMethod::Projective => {
                let (vmap, nmap) = model.maps.expect("projective ICP requires model maps");
                projective_associate(
                    vmap,
                    nmap,
                    &scene.vmap,
                    &scene.nmap,
                    estimate,
                    cam,
                    assoc_cfg,
                )
            }
        }
    };

    let mut trace: Vec<IterationTrace> = Vec::new();
    let mut status = IcpStatus::MaxIter;
    // Pose that entered the previous iteration: the rollback target when the
    // update adopted there turns out to have begun a divergence.
    let mut prev_pose: Option<Pose> = None;
    let mut prev_loss: Option<f64> = None;
    let mut prev_count: Option<usize> = None;
    let mut first_count = 0usize;
    let mut adopted = 0usize;

    for k in 1..=cfg.max_iter {
        let cs = associate(&current);
        let count = cs.len();
        if count < cfg.min_correspondences {
            if guard.is_some() {
                status = IcpStatus::DivergedRolledBack;
                if let Some(p) = prev_pose.take() {
                    current = p;
                    adopted -= 1;
                }
            } else {
                status = IcpStatus::NoCorrespondences;
            }
            break;
        }
        if k == 1 {
            first_count = count;
        }

        let transformed: Vec<Correspondence> = cs
            .pairs
            .iter()
            .map(|p| Correspondence {
                o: current.transform_point(&p.o),
                m: current.rotate(&p.m),
                c: p.c,
                n: p.n,
            })
            .collect();
        let loss = match metric {
            ErrorMetric::PointToPoint => point_to_point_loss(&Pose::identity(), &transformed),
            ErrorMetric::PointToPlane => point_to_plane_loss(&Pose::identity(), &transformed),
        };

        if let Some(guard) = guard {
            if k >= 2 {
                let shrank = |reference: usize| {
                    (count as f64) < (1.0 - guard.shrink_tolerance) * reference as f64
                };
                let count_bad = if guard.conjunctive {
                    shrank(first_count) && shrank(prev_count.unwrap())
                } else {
                    shrank(first_count) || shrank(prev_count.unwrap())
                };
                if count_bad || loss > prev_loss.unwrap() {
                    trace.push(IterationTrace {
                        iteration: k,
                        mean_loss: loss,
                        correspondence_count: count,
                        pose_after: current.compose(&base),
                    });
                    status = IcpStatus::DivergedRolledBack;
                    current = prev_pose.take().expect("an update preceded k >= 2");
                    adopted -= 1;
                    break;
                }
            }
        }

        if loss <= ZERO_LOSS
            || prev_loss.is_some_and(|p| (loss - p).abs() < cfg.rel_loss_tol * p)
        {
            trace.push(IterationTrace {
                iteration: k,
                mean_loss: loss,
                correspondence_count: count,
                pose_after: current.compose(&base),
            });
            status = IcpStatus::Converged;
            break;
        }

        let solved = match metric {
            ErrorMetric::PointToPoint => solve_point_to_point(&transformed),
            ErrorMetric::PointToPlane => solve_point_to_plane(&transformed),
        };
        let incremental = match solved {
            Ok(t) => t,
            Err(_) => {
                trace.push(IterationTrace {
                    iteration: k,
                    mean_loss: loss,
                    correspondence_count: count,
                    pose_after: current.compose(&base),
                });
                status = IcpStatus::DivergedRolledBack;
                break;
            }
        };

        prev_pose = Some(current);
        prev_loss = Some(loss);
        prev_count = Some(count);
        current = incremental.compose(&current);
        adopted += 1;
        trace.push(IterationTrace {
            iteration: k,
            mean_loss: loss,
            correspondence_count: count,
            pose_after: current.compose(&base),
        });
    }

    // With no adopted update the input passes through bit-exactly instead of
    // round-tripping through compositions.
    let pose = if adopted == 0 {
        *t_init
    } else {
        current.compose(&base)
    };
    IcpResult {
        pose,
        trace,
        status,
    }
}
