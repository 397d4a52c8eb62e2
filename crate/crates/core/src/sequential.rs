//! Sequential pose estimation from a camera approaching a static object:
//! frame propagation of past estimates, the six initialisation/fusion
//! methods, and the compute-time/camera-motion coupling.

use std::time::Instant;

use nalgebra::{Matrix3, Matrix6, Vector3};
use rand::Rng;

use crate::association::{AssociationConfig, AssociationMethod};
use crate::geometry::{
    add_depth_noise, mesh_diameter, render_depth, CameraIntrinsics, DepthNoiseModel,
    OrientedPointCloud, TriangleMesh,
};
use crate::hybrid::{run_cascading_icp, run_hybrid_icp, HybridConfig, HybridInputs};
use crate::icp::{render_model_maps, IcpStatus, ModelView, Scene};
use crate::se3::{
    apply_perturbation, deterministic_average, fuse_estimates, Perturbation, Pose,
    PoseWithCovariance,
};
use crate::vsd::mve;
use crate::{Error, Result};

/// Values of `e_MVE` below this are clamped before being used as isotropic
/// covariance scales; a perfect estimate would otherwise produce a singular
/// information matrix.
pub const COVARIANCE_FLOOR: f64 = 1e-6;

/// How one trajectory advances the camera between estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimingMode {
    /// Wall-clock time of each estimation step drives the displacement.
    Measured,
    /// A constant per-step time (seconds), for reproducible runs.
    Fixed(f64),
}

/// Linear approach trajectory parameters.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryConfig {
    pub start_distance: f64,
    pub velocity: f64,
    pub stop_distance: f64,
    pub timing: TimingMode,
    /// Step-count safety cap; relevant when the velocity is zero or the
    /// per-step displacement is tiny.
    pub max_steps: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            start_distance: 1.0,
            velocity: 0.1,
            stop_distance: 0.3,
            timing: TimingMode::Fixed(0.1),
            max_steps: 10_000,
        }
    }
}

/// One stored estimate: pose in the current camera frame, its covariance
/// proxy, the MVE it was scored with, and the time step it was made at.
#[derive(Debug, Clone)]
pub struct LogEntry {
    pub pose: Pose,
    pub covariance: Matrix6<f64>,
    pub e_mve: f64,
    pub timestep: usize,
}

/// Time-ordered estimates in the current camera frame. Filtered methods
/// collapse the history into a single fused head entry and set the flag.
#[derive(Debug, Clone, Default)]
pub struct PoseEstimateLog {
    pub entries: Vec<LogEntry>,
    pub fused_history: bool,
}

impl PoseEstimateLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn next_timestep(&self) -> usize {
        self.entries.last().map_or(1, |e| e.timestep + 1)
    }
}

/// Strategy for initialising ICP from past estimates and for folding a new
/// estimate into the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMethod {
    LastEstimate,
    Average,
    WeightedAverage,
    FilteringConstant,
    Filtering,
    MostConfident,
}

impl FusionMethod {
    pub const ALL: [FusionMethod; 6] = [
        FusionMethod::LastEstimate,
        FusionMethod::Average,
        FusionMethod::WeightedAverage,
        FusionMethod::FilteringConstant,
        FusionMethod::Filtering,
        FusionMethod::MostConfident,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FusionMethod::LastEstimate => "last_estimate",
            FusionMethod::Average => "average",
            FusionMethod::WeightedAverage => "weighted_average",
            FusionMethod::FilteringConstant => "filtering_constant",
            FusionMethod::Filtering => "filtering",
            FusionMethod::MostConfident => "most_confident",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|m| m.name() == name)
    }
}

/// How covariances travel when the camera frame moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceTransport {
    /// Carry unchanged (poses only are transformed).
    Carry,
    /// Conjugate by the SE(3) adjoint of the motion.
    Adjoint,
}

fn adjoint(pose: &Pose) -> Matrix6<f64> {
    let r = pose.rotation;
    let t = pose.translation;
    let t_hat = Matrix3::new(0.0, -t[2], t[1], t[2], 0.0, -t[0], -t[1], t[0], 0.0);
    let coupling = t_hat * r;
    let mut ad = Matrix6::zeros();
    ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    ad.fixed_view_mut::<3, 3>(0, 3).copy_from(&coupling);
    ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    ad
}

/// Transform every stored pose into the new camera frame. Covariances are
/// carried unchanged by default; adjoint transport is opt-in via
/// [`advance_frame_with`].
pub fn advance_frame(log: &PoseEstimateLog, t_motion: &Pose) -> PoseEstimateLog {
    advance_frame_with(log, t_motion, CovarianceTransport::Carry)
}

pub fn advance_frame_with(
    log: &PoseEstimateLog,
    t_motion: &Pose,
    transport: CovarianceTransport,
) -> PoseEstimateLog {
    let ad = adjoint(t_motion);
    let entries = log
        .entries
        .iter()
        .map(|e| LogEntry {
            pose: t_motion.compose(&e.pose),
            covariance: match transport {
                CovarianceTransport::Carry => e.covariance,
                CovarianceTransport::Adjoint => ad * e.covariance * ad.transpose(),
            },
            e_mve: e.e_mve,
            timestep: e.timestep,
        })
        .collect();
    PoseEstimateLog {
        entries,
        fused_history: log.fused_history,
    }
}

/// ICP initialisation from the log under the given method.
pub fn query_initialisation(method: FusionMethod, log: &PoseEstimateLog) -> Result<Pose> {
    let last = log.entries.last().ok_or(Error::EmptyLog)?;
    match method {
        FusionMethod::LastEstimate
        | FusionMethod::Filtering
        | FusionMethod::FilteringConstant => Ok(last.pose),
        FusionMethod::Average => {
            let poses: Vec<Pose> = log.entries.iter().map(|e| e.pose).collect();
            deterministic_average(&poses)
        }
        FusionMethod::WeightedAverage => {
            let ests: Vec<PoseWithCovariance> = log
                .entries
                .iter()
                .map(|e| PoseWithCovariance::new(e.pose, e.covariance))
                .collect();
            Ok(fuse_estimates(&ests)?.pose)
        }
        FusionMethod::MostConfident => {
            let mut best = &log.entries[0];
            for entry in &log.entries[1..] {
                // Ties go to the newest entry.
                if entry.covariance.trace() <= best.covariance.trace() {
                    best = entry;
                }
            }
            Ok(best.pose)
        }
    }
}

/// Fold a new ICP estimate (scored by its MVE) into the log.
///
/// Non-filtering methods append `(pose, e_MVE * I)`; the filtering methods
/// fuse the new estimate with the stored head and keep only the fused
/// result.
pub fn record_estimate(
    method: FusionMethod,
    log: &PoseEstimateLog,
    new_pose: &Pose,
    e_mve: f64,
) -> Result<PoseEstimateLog> {
    let floored = e_mve.max(COVARIANCE_FLOOR);
    let mut out = log.clone();
    let timestep = out.next_timestep();
    match method {
        FusionMethod::LastEstimate
        | FusionMethod::Average
        | FusionMethod::WeightedAverage
        | FusionMethod::MostConfident => {
            out.entries.push(LogEntry {
                pose: *new_pose,
                covariance: Matrix6::identity() * floored,
                e_mve,
                timestep,
            });
        }
        FusionMethod::Filtering | FusionMethod::FilteringConstant => {
            let new_cov = match method {
                FusionMethod::Filtering => Matrix6::identity() * floored,
                _ => Matrix6::identity(),
            };
            out.fused_history = true;
            match log.entries.last() {
                None => out.entries.push(LogEntry {
                    pose: *new_pose,
                    covariance: new_cov,
                    e_mve,
                    timestep,
                }),
                Some(prev) => {
                    let fused = fuse_estimates(&[
                        PoseWithCovariance::new(prev.pose, prev.covariance),
                        PoseWithCovariance::new(*new_pose, new_cov),
                    ])?;
                    out.entries = vec![LogEntry {
                        pose: fused.pose,
                        covariance: fused.covariance,
                        e_mve,
                        timestep,
                    }];
                }
            }
        }
    }
    Ok(out)
}

/// Underlying ICP algorithm run at every trajectory step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequentialVariant {
    ProjectiveCascading,
    Hybrid,
}

impl SequentialVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SequentialVariant::ProjectiveCascading => "projective_cascading",
            SequentialVariant::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Icp(IcpStatus),
    RenderFailed,
}

/// Per-step record of a simulated trajectory.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub camera_distance: f64,
    pub pre_vsd: f64,
    pub post_vsd: f64,
    pub e_mve: f64,
    pub elapsed_seconds: f64,
    pub status: StepStatus,
}

/// Full trajectory outcome: per-step records plus the method's final fused
/// estimate scored against the final ground truth.
#[derive(Debug, Clone)]
pub struct TrajectoryReport {
    pub steps: Vec<StepRecord>,
    pub final_pose: Pose,
    pub final_gt: Pose,
    pub final_vsd: f64,
}

/// Static inputs of one trajectory simulation.
pub struct SequentialSetup<'a> {
    /// True object geometry: renders the observations and scores VSD.
    pub object_mesh: &'a TriangleMesh,
    /// Model the estimator works with (possibly a noisy reconstruction).
    pub model_mesh: &'a TriangleMesh,
    pub model_cloud: &'a OrientedPointCloud,
    pub cam: &'a CameraIntrinsics,
    pub variant: SequentialVariant,
    pub method: FusionMethod,
    pub trajectory: TrajectoryConfig,
    pub noise: DepthNoiseModel,
    pub hybrid: HybridConfig,
    pub assoc: AssociationConfig,
}

/// Simulate a camera approaching the object along its optical axis.
///
/// Per step: render the noisy observation, initialise from the log (the
/// supplied perturbation of the ground truth on the first step), run the
/// ICP variant, score its MVE, record the estimate, then move the camera by
/// `velocity * step_time` and carry the log into the new frame. Stops when
/// the ground-truth distance drops to `stop_distance`.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    setup: &SequentialSetup,
    t_gt_initial: &Pose,
    init_perturbation: &Perturbation,
    rng: &mut R,
) -> Result<TrajectoryReport> {
    let eval_diameter = mesh_diameter(setup.object_mesh);
    let model_diameter = mesh_diameter(setup.model_mesh);
    let vsd_cfg = &setup.hybrid.vsd;
    let mut t_gt = *t_gt_initial;
    let mut log = PoseEstimateLog::new();
    let mut steps = Vec::new();

    for step in 1..=setup.trajectory.max_steps {
        let camera_distance = t_gt.translation.norm();
        let started = Instant::now();

        let rendered = render_depth(setup.object_mesh, &t_gt, setup.cam);
        let (clean_depth, mask) = match rendered {
            Ok(pair) => pair,
            Err(_) => {
                let elapsed = step_time(&setup.trajectory.timing, &started);
                steps.push(StepRecord {
                    step,
                    camera_distance,
                    pre_vsd: 1.0,
                    post_vsd: 1.0,
                    e_mve: 1.0,
                    elapsed_seconds: elapsed,
                    status: StepStatus::RenderFailed,
                });
                let (gt, new_log) = advance(setup, &t_gt, &log, elapsed);
                t_gt = gt;
                log = new_log;
                if t_gt.translation.norm() <= setup.trajectory.stop_distance {
                    break;
                }
                continue;
            }
        };
        let noisy_depth = add_depth_noise(&clean_depth, &setup.noise, rng);
        let scene = Scene::from_depth(&noisy_depth, &mask, setup.cam);

        let init = if log.is_empty() {
            apply_perturbation(&t_gt, init_perturbation)
        } else {
            query_initialisation(setup.method, &log)?
        };
        let pre_vsd = mve(
            &clean_depth,
            &mask,
            setup.object_mesh,
            &init,
            setup.cam,
            eval_diameter,
            vsd_cfg,
        )
        .unwrap_or(1.0);

        let result = match setup.variant {
            SequentialVariant::ProjectiveCascading => {
                let (vmap, nmap) = render_model_maps(setup.model_mesh, &init, setup.cam);
                let model = ModelView {
                    cloud: setup.model_cloud,
                    maps: Some((&vmap, &nmap)),
                };
                run_cascading_icp(
                    &model,
                    &scene,
                    &init,
                    AssociationMethod::Projective,
                    &setup.hybrid.cascade,
                    &setup.assoc,
                    setup.cam,
                )
            }
            SequentialVariant::Hybrid => {
                let inputs = HybridInputs {
                    mesh: setup.model_mesh,
                    model_cloud: setup.model_cloud,
                    scene: &scene,
                    input_depth: &noisy_depth,
                    input_mask: &mask,
                    diameter: model_diameter,
                };
                run_hybrid_icp(&inputs, &init, &setup.hybrid, &setup.assoc, setup.cam)
                    .result
            }
        };

        let e_mve = mve(
            &noisy_depth,
            &mask,
            setup.model_mesh,
            &result.pose,
            setup.cam,
            model_diameter,
            vsd_cfg,
        )
        .unwrap_or(1.0);
        log = record_estimate(setup.method, &log, &result.pose, e_mve)?;

        let elapsed = step_time(&setup.trajectory.timing, &started);
        let post_vsd = mve(
            &clean_depth,
            &mask,
            setup.object_mesh,
            &result.pose,
            setup.cam,
            eval_diameter,
            vsd_cfg,
        )
        .unwrap_or(1.0);
        steps.push(StepRecord {
            step,
            camera_distance,
            pre_vsd,
            post_vsd,
            e_mve,
            elapsed_seconds: elapsed,
            status: StepStatus::Icp(result.status),
        });

        let (gt, new_log) = advance(setup, &t_gt, &log, elapsed);
        t_gt = gt;
        log = new_log;
        if t_gt.translation.norm() <= setup.trajectory.stop_distance {
            break;
        }
    }

    let final_pose = query_initialisation(setup.method, &log)?;
    let final_vsd = match render_depth(setup.object_mesh, &t_gt, setup.cam) {
        Ok((gt_depth, gt_mask)) => mve(
            &gt_depth,
            &gt_mask,
            setup.object_mesh,
            &final_pose,
            setup.cam,
            eval_diameter,
            vsd_cfg,
        )
        .unwrap_or(1.0),
        Err(_) => 1.0,
    };
    Ok(TrajectoryReport {
        steps,
        final_pose,
        final_gt: t_gt,
        final_vsd,
    })
}

fn step_time(timing: &TimingMode, started: &Instant) -> f64 {
    match timing {
        TimingMode::Measured => started.elapsed().as_secs_f64(),
        TimingMode::Fixed(seconds) => *seconds,
    }
}

/// Move the camera toward the object along its optical axis and carry the
/// estimate log into the new frame.
fn advance(
    setup: &SequentialSetup,
    t_gt: &Pose,
    log: &PoseEstimateLog,
    elapsed: f64,
) -> (Pose, PoseEstimateLog) {
    let displacement = setup.trajectory.velocity * elapsed;
    let motion = Pose::from_translation(Vector3::new(0.0, 0.0, -displacement));
    (motion.compose(t_gt), advance_frame(log, &motion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_mesh_points;
    use crate::geometry::sphere_mesh;
    use crate::se3::{self, sample_perturbation, Twist};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn entry(pose: Pose, scale: f64, e_mve: f64, timestep: usize) -> LogEntry {
        LogEntry {
            pose,
            covariance: Matrix6::identity() * scale,
            e_mve,
            timestep,
        }
    }

    #[test]
    fn advance_frame_identity_keeps_log() {
        let log = PoseEstimateLog {
            entries: vec![entry(
                Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)),
                0.5,
                0.5,
                1,
            )],
            fused_history: false,
        };
        let out = advance_frame(&log, &Pose::identity());
        assert_eq!(out.entries[0].pose.translation, log.entries[0].pose.translation);
    }

    #[test]
    fn advance_frame_pure_translation() {
        let log = PoseEstimateLog {
            entries: vec![entry(
                Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)),
                1.0,
                1.0,
                1,
            )],
            fused_history: false,
        };
        let motion = Pose::from_translation(Vector3::new(0.0, 0.0, -0.1));
        let out = advance_frame(&log, &motion);
        assert_relative_eq!(out.entries[0].pose.translation[2], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn advance_frame_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        let pose = apply_perturbation(
            &Pose::from_translation(Vector3::new(0.1, -0.2, 1.0)),
            &sample_perturbation(0.05, 0.4, &mut rng),
        );
        let log = PoseEstimateLog {
            entries: vec![entry(pose, 0.3, 0.3, 1)],
            fused_history: false,
        };
        let motion = se3::exp(&Twist::new(
            Vector3::new(0.02, 0.01, -0.1),
            Vector3::new(0.1, -0.05, 0.2),
        ));
        let back = advance_frame(&advance_frame(&log, &motion), &motion.inverse());
        assert!(back.entries[0].pose.translation_error(&pose) < 1e-12);
        assert!(back.entries[0].pose.rotation_error(&pose) < 1e-12);
    }

    #[test]
    fn advance_frame_preserves_relative_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let a = apply_perturbation(
            &Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)),
            &sample_perturbation(0.1, 0.5, &mut rng),
        );
        let b = apply_perturbation(
            &Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)),
            &sample_perturbation(0.1, 0.5, &mut rng),
        );
        let rel_before = a.inverse().compose(&b);
        let log = PoseEstimateLog {
            entries: vec![entry(a, 1.0, 1.0, 1), entry(b, 1.0, 1.0, 2)],
            fused_history: false,
        };
        let motion = se3::exp(&Twist::new(
            Vector3::new(-0.03, 0.02, -0.2),
            Vector3::new(0.05, 0.3, -0.1),
        ));
        let out = advance_frame(&log, &motion);
        let rel_after = out.entries[0].pose.inverse().compose(&out.entries[1].pose);
        assert!((rel_after.rotation - rel_before.rotation).norm() < 1e-12);
        assert!((rel_after.translation - rel_before.translation).norm() < 1e-12);
    }

    #[test]
    fn query_single_entry_is_that_pose_for_every_method() {
        let pose = Pose::from_translation(Vector3::new(0.1, 0.2, 0.9));
        let log = PoseEstimateLog {
            entries: vec![entry(pose, 0.4, 0.4, 1)],
            fused_history: false,
        };
        for method in FusionMethod::ALL {
            let q = query_initialisation(method, &log).unwrap();
            assert!(q.translation_error(&pose) < 1e-12, "{}", method.name());
        }
    }

    #[test]
    fn query_empty_log_is_an_error() {
        assert!(matches!(
            query_initialisation(FusionMethod::Average, &PoseEstimateLog::new()),
            Err(Error::EmptyLog)
        ));
    }

    #[test]
    fn weighted_average_equal_covariances_is_midpoint() {
        let a = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let b = Pose::from_translation(Vector3::new(0.0, 0.1, 1.0));
        let log = PoseEstimateLog {
            entries: vec![entry(a, 0.5, 0.5, 1), entry(b, 0.5, 0.5, 2)],
            fused_history: false,
        };
        let q = query_initialisation(FusionMethod::WeightedAverage, &log).unwrap();
        assert_relative_eq!(q.translation[1], 0.05, epsilon = 1e-12);
    }

    #[test]
    fn weighted_average_equals_average_under_identical_covariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        let base = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let entries: Vec<LogEntry> = (0..5)
            .map(|k| {
                entry(
                    apply_perturbation(&base, &sample_perturbation(0.05, 0.3, &mut rng)),
                    0.7,
                    0.7,
                    k + 1,
                )
            })
            .collect();
        let log = PoseEstimateLog {
            entries,
            fused_history: false,
        };
        let w = query_initialisation(FusionMethod::WeightedAverage, &log).unwrap();
        let a = query_initialisation(FusionMethod::Average, &log).unwrap();
        assert!(w.translation_error(&a) < 1e-9);
        assert!(w.rotation_error(&a) < 1e-9);
    }

    #[test]
    fn most_confident_picks_lowest_uncertainty() {
        let a = Pose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let b = Pose::from_translation(Vector3::new(2.0, 0.0, 0.0));
        let log = PoseEstimateLog {
            entries: vec![entry(a, 0.1, 0.1, 1), entry(b, 0.9, 0.9, 2)],
            fused_history: false,
        };
        let q = query_initialisation(FusionMethod::MostConfident, &log).unwrap();
        assert_relative_eq!(q.translation[0], 1.0);

        // Ties resolve to the newest entry.
        let log_tie = PoseEstimateLog {
            entries: vec![entry(a, 0.3, 0.3, 1), entry(b, 0.3, 0.3, 2)],
            fused_history: false,
        };
        let q = query_initialisation(FusionMethod::MostConfident, &log_tie).unwrap();
        assert_relative_eq!(q.translation[0], 2.0);
    }

    #[test]
    fn filtering_first_estimate_is_stored_as_is() {
        let pose = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let log = record_estimate(FusionMethod::Filtering, &PoseEstimateLog::new(), &pose, 0.25)
            .unwrap();
        assert_eq!(log.entries.len(), 1);
        assert!(log.fused_history);
        assert!((log.entries[0].covariance - Matrix6::identity() * 0.25).norm() < 1e-12);
    }

    #[test]
    fn filtering_identical_poses_halves_covariance() {
        let pose = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let log = record_estimate(
            FusionMethod::FilteringConstant,
            &PoseEstimateLog::new(),
            &pose,
            1.0,
        )
        .unwrap();
        let log = record_estimate(FusionMethod::FilteringConstant, &log, &pose, 1.0).unwrap();
        assert_eq!(log.entries.len(), 1);
        assert!((log.entries[0].covariance - Matrix6::identity() * 0.5).norm() < 1e-9);
        assert!(log.entries[0].pose.translation_error(&pose) < 1e-12);
    }

    #[test]
    fn filtering_perfect_estimate_dominates_after_floor() {
        // Information-limit oracle: with the floor at 1e-6, a perfect new
        // estimate outweighs a unit-covariance prior by 1e6, so the fused
        // pose lands within gap/1e6 of the new pose.
        let prev = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let newer = Pose::from_translation(Vector3::new(0.0, 0.0005, 1.0));
        let log = record_estimate(FusionMethod::Filtering, &PoseEstimateLog::new(), &prev, 1.0)
            .unwrap();
        let log = record_estimate(FusionMethod::Filtering, &log, &newer, 0.0).unwrap();
        assert!(log.entries[0].pose.translation_error(&newer) < 1e-9);
    }

    #[test]
    fn append_methods_keep_history_and_timesteps_increase() {
        let mut log = PoseEstimateLog::new();
        for k in 0..4 {
            let pose = Pose::from_translation(Vector3::new(k as f64, 0.0, 1.0));
            log = record_estimate(FusionMethod::Average, &log, &pose, 0.5).unwrap();
        }
        assert_eq!(log.entries.len(), 4);
        assert!(!log.fused_history);
        for w in log.entries.windows(2) {
            assert!(w[1].timestep > w[0].timestep);
        }
    }

    fn quick_setup<'a>(
        mesh: &'a TriangleMesh,
        cloud: &'a OrientedPointCloud,
        cam: &'a CameraIntrinsics,
        trajectory: TrajectoryConfig,
        noise: DepthNoiseModel,
        method: FusionMethod,
    ) -> SequentialSetup<'a> {
        SequentialSetup {
            object_mesh: mesh,
            model_mesh: mesh,
            model_cloud: cloud,
            cam,
            variant: SequentialVariant::ProjectiveCascading,
            method,
            trajectory,
            noise,
            hybrid: HybridConfig::default(),
            assoc: AssociationConfig::for_initialisation_scale(0.12, 0.15),
        }
    }

    #[test]
    fn zero_velocity_perfect_init_stays_at_zero_vsd() {
        let cam = CameraIntrinsics::default_vga();
        let mesh = sphere_mesh(0.06, 24, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let cloud = sample_mesh_points(&mesh, 300, &mut rng);
        let trajectory = TrajectoryConfig {
            velocity: 0.0,
            max_steps: 4,
            ..TrajectoryConfig::default()
        };
        let setup = quick_setup(
            &mesh,
            &cloud,
            &cam,
            trajectory,
            DepthNoiseModel::None,
            FusionMethod::LastEstimate,
        );
        let t_gt = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let report =
            simulate_trajectory(&setup, &t_gt, &Perturbation::identity(), &mut rng).unwrap();
        assert_eq!(report.steps.len(), 4);
        for step in &report.steps {
            assert_eq!(step.post_vsd, 0.0, "step {}", step.step);
        }
        assert_eq!(report.final_vsd, 0.0);
    }

    #[test]
    fn fixed_timing_advances_exactly_per_step() {
        let cam = CameraIntrinsics::default_vga();
        let mesh = sphere_mesh(0.06, 16, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(84);
        let cloud = sample_mesh_points(&mesh, 200, &mut rng);
        let trajectory = TrajectoryConfig {
            start_distance: 1.0,
            velocity: 0.1,
            stop_distance: 0.94,
            timing: TimingMode::Fixed(0.1),
            max_steps: 100,
        };
        let setup = quick_setup(
            &mesh,
            &cloud,
            &cam,
            trajectory,
            DepthNoiseModel::None,
            FusionMethod::LastEstimate,
        );
        let t_gt = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let report =
            simulate_trajectory(&setup, &t_gt, &Perturbation::identity(), &mut rng).unwrap();
        // 0.01 m per step from 1.0 m down to 0.94 m.
        assert_eq!(report.steps.len(), 6);
        for (k, step) in report.steps.iter().enumerate() {
            assert_relative_eq!(step.camera_distance, 1.0 - 0.01 * k as f64, epsilon = 1e-12);
        }
        assert_relative_eq!(report.final_gt.translation[2], 0.94, epsilon = 1e-12);
    }

    #[test]
    fn fixed_timing_simulation_is_bit_reproducible() {
        let cam = CameraIntrinsics::default_vga();
        let mesh = sphere_mesh(0.06, 16, 8);
        let mut sample_rng = ChaCha8Rng::seed_from_u64(85);
        let cloud = sample_mesh_points(&mesh, 200, &mut sample_rng);
        let trajectory = TrajectoryConfig {
            stop_distance: 0.9,
            timing: TimingMode::Fixed(0.2),
            ..TrajectoryConfig::default()
        };
        let t_gt = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let perturb = sample_perturbation(0.02, 0.05, &mut sample_rng);

        let run = |seed: u64| {
            let setup = quick_setup(
                &mesh,
                &cloud,
                &cam,
                trajectory,
                DepthNoiseModel::GaussianPercent(1.0),
                FusionMethod::Average,
            );
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            simulate_trajectory(&setup, &t_gt, &perturb, &mut rng).unwrap()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a.steps.len(), b.steps.len());
        for (x, y) in a.steps.iter().zip(&b.steps) {
            assert_eq!(x.post_vsd, y.post_vsd);
            assert_eq!(x.pre_vsd, y.pre_vsd);
            assert_eq!(x.e_mve, y.e_mve);
        }
        assert_eq!(a.final_pose.translation, b.final_pose.translation);
        assert_eq!(a.final_vsd, b.final_vsd);
    }
}
