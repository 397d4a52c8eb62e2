//! The four benchmark experiments: shared-scene trials over variants with
//! CSV reporting and stdout summaries.

use std::collections::BTreeMap;
use std::io::BufWriter;
use std::time::Instant;

use icp_core::association::{AssociationConfig, AssociationMethod};
use icp_core::geometry::{
    add_depth_noise, builtin_mesh, corrupt_mesh, load_mesh, mesh_diameter, render_depth,
    sample_mesh_points, CameraIntrinsics, DepthImage, DepthNoiseModel, OrientedPointCloud,
    SegmentationMask, TriangleMesh,
};
use icp_core::hybrid::{run_cascading_icp, run_hybrid_icp, CascadeConfig, HybridConfig, HybridInputs};
use icp_core::icp::{
    render_model_maps, run_icp, IcpConfig, IcpStatus, ModelView, Scene,
};
use icp_core::se3::{
    apply_perturbation, rotation_for_translation, sample_perturbation, Perturbation, Pose,
    MEAN_ROTATION_ERROR_RAD, MEAN_TRANSLATION_ERROR_M,
};
use icp_core::sequential::{
    simulate_trajectory, SequentialSetup, SequentialVariant, StepStatus, TimingMode,
};
use icp_core::vsd::{mve, VsdConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{BenchError, ExperimentConfig, ExperimentKind, MeshSpec, Result, Variant};
use crate::report::{scene_hash, write_csv, ContentHash, ReportRow};
use crate::sampling::{
    derived_rng, rejection_sample_bins, sample_object_pose, PlacementMode,
};

/// Cap on translation perturbations drawn for initialisation sweeps
/// (meters); rotation magnitudes follow via the error ratio.
pub const MAX_TRANSLATION_PERTURBATION: f64 = 0.15;

/// Completed run: all rows (already written to the CSV) plus sampling
/// diagnostics.
#[derive(Debug)]
pub struct RunSummary {
    pub rows: Vec<ReportRow>,
    pub unfilled_bins: Vec<(String, Vec<usize>)>,
}

struct LoadedObject {
    id: String,
    mesh: TriangleMesh,
    diameter: f64,
}

fn load_objects(cfg: &ExperimentConfig) -> Result<Vec<LoadedObject>> {
    cfg.meshes
        .iter()
        .map(|spec| {
            let mesh = match spec {
                MeshSpec::Builtin(name) => builtin_mesh(name)
                    .ok_or_else(|| BenchError::Config(format!("unknown builtin {name:?}")))?,
                MeshSpec::File(path) => load_mesh(path)?,
            };
            let diameter = mesh_diameter(&mesh);
            Ok(LoadedObject {
                id: spec.id(),
                mesh,
                diameter,
            })
        })
        .collect()
}

fn status_name(status: IcpStatus) -> &'static str {
    match status {
        IcpStatus::Converged => "converged",
        IcpStatus::MaxIter => "max_iter",
        IcpStatus::DivergedRolledBack => "diverged_rolled_back",
        IcpStatus::NoCorrespondences => "no_correspondences",
    }
}

/// Inputs shared by every variant at one comparison point.
struct TrialPoint<'a> {
    object_mesh: &'a TriangleMesh,
    model_mesh: &'a TriangleMesh,
    model_cloud: &'a OrientedPointCloud,
    scene: &'a Scene,
    /// Live image the algorithms may look at (noisy when the experiment
    /// adds noise).
    input_depth: &'a DepthImage,
    input_mask: &'a SegmentationMask,
    /// Clean ground-truth render used for evaluation only.
    clean_depth: &'a DepthImage,
    clean_mask: &'a SegmentationMask,
    model_diameter: f64,
    eval_diameter: f64,
    assoc: AssociationConfig,
}

fn run_variant(
    variant: Variant,
    point: &TrialPoint,
    t_init: &Pose,
    alpha: f64,
    cam: &CameraIntrinsics,
) -> (Pose, IcpStatus) {
    match variant {
        Variant::Fixed { assoc, metric } => {
            let maps = matches!(assoc, AssociationMethod::Projective)
                .then(|| render_model_maps(point.model_mesh, t_init, cam));
            let model = ModelView {
                cloud: point.model_cloud,
                maps: maps.as_ref().map(|(v, n)| (v, n)),
            };
            let result = run_icp(
                &model,
                point.scene,
                t_init,
                assoc,
                metric,
                &IcpConfig::default(),
                &point.assoc,
                cam,
            );
            (result.pose, result.status)
        }
        Variant::Cascading { assoc, order } => {
            let maps = matches!(assoc, AssociationMethod::Projective)
                .then(|| render_model_maps(point.model_mesh, t_init, cam));
            let model = ModelView {
                cloud: point.model_cloud,
                maps: maps.as_ref().map(|(v, n)| (v, n)),
            };
            let cascade = CascadeConfig {
                stage_order: order,
                ..CascadeConfig::default()
            };
            let result = run_cascading_icp(
                &model,
                point.scene,
                t_init,
                assoc,
                &cascade,
                &point.assoc,
                cam,
            );
            (result.pose, result.status)
        }
        Variant::Hybrid => {
            let inputs = HybridInputs {
                mesh: point.model_mesh,
                model_cloud: point.model_cloud,
                scene: point.scene,
                input_depth: point.input_depth,
                input_mask: point.input_mask,
                diameter: point.model_diameter,
            };
            let cfg = HybridConfig {
                alpha,
                ..HybridConfig::default()
            };
            let report = run_hybrid_icp(&inputs, t_init, &cfg, &point.assoc, cam);
            (report.result.pose, report.result.status)
        }
    }
}

/// True mean VSD of an estimate against the clean ground-truth render.
fn evaluate(
    point: &TrialPoint,
    pose: &Pose,
    cam: &CameraIntrinsics,
    vsd_cfg: &VsdConfig,
) -> f64 {
    mve(
        point.clean_depth,
        point.clean_mask,
        point.object_mesh,
        pose,
        cam,
        point.eval_diameter,
        vsd_cfg,
    )
    .unwrap_or(1.0)
}

fn elapsed_or_fixed(timing: &TimingMode, started: Instant) -> f64 {
    match timing {
        TimingMode::Measured => started.elapsed().as_secs_f64(),
        TimingMode::Fixed(seconds) => *seconds,
    }
}

/// Run the configured experiment, write its CSV, and print the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let cam = CameraIntrinsics::default_vga();
    let objects = load_objects(cfg)?;
    print_config_echo(cfg, &objects);

    let summary = match cfg.experiment {
        ExperimentKind::InitNoise => init_noise_experiment(cfg, &objects, &cam)?,
        ExperimentKind::DepthNoise => depth_noise_experiment(cfg, &objects, &cam)?,
        ExperimentKind::ModelNoise => model_noise_experiment(cfg, &objects, &cam)?,
        ExperimentKind::Sequential => sequential_experiment(cfg, &objects, &cam)?,
    };

    let file = std::fs::File::create(&cfg.output_path)?;
    write_csv(BufWriter::new(file), &summary.rows)?;
    print_summary(&summary);
    Ok(summary)
}

fn experiment_assoc(diameter: f64, max_offset: f64) -> AssociationConfig {
    AssociationConfig::for_initialisation_scale(diameter, max_offset)
}

/// Scenario of the initialisation-noise experiment: ground truth plus a
/// perturbed initialisation with a known pre-VSD.
#[derive(Clone)]
struct InitScenario {
    t_gt: Pose,
    t_init: Pose,
    pre_vsd: f64,
}

const TAG_MODEL: u64 = 1;
const TAG_SAMPLER: u64 = 2;
const TAG_SCENARIO: u64 = 3;
const TAG_NOISE: u64 = 4;
const TAG_CORRUPT: u64 = 5;

fn init_noise_experiment(
    cfg: &ExperimentConfig,
    objects: &[LoadedObject],
    cam: &CameraIntrinsics,
) -> Result<RunSummary> {
    let vsd_cfg = VsdConfig::default();
    let mut rows = Vec::new();
    let mut unfilled_bins = Vec::new();

    for (oi, obj) in objects.iter().enumerate() {
        let mut model_rng = derived_rng(cfg.seed, &[10, oi as u64, TAG_MODEL]);
        let model_cloud = sample_mesh_points(&obj.mesh, cfg.model_points, &mut model_rng);
        let assoc = experiment_assoc(obj.diameter, MAX_TRANSLATION_PERTURBATION);

        let mut sampler_rng = derived_rng(cfg.seed, &[10, oi as u64, TAG_SAMPLER]);
        let mesh = &obj.mesh;
        let diameter = obj.diameter;
        let mut sampler = |rng: &mut ChaCha8Rng| -> Option<(InitScenario, f64)> {
            let t_gt = sample_object_pose(diameter, PlacementMode::SingleImage, cam, rng).ok()?;
            let (depth, mask) = render_depth(mesh, &t_gt, cam).ok()?;
            let delta_t = rng.random_range(0.0..MAX_TRANSLATION_PERTURBATION);
            let perturbation =
                sample_perturbation(delta_t, rotation_for_translation(delta_t), rng);
            let t_init = apply_perturbation(&t_gt, &perturbation);
            let pre_vsd = mve(&depth, &mask, mesh, &t_init, cam, diameter, &vsd_cfg).ok()?;
            Some((
                InitScenario {
                    t_gt,
                    t_init,
                    pre_vsd,
                },
                pre_vsd,
            ))
        };
        let binned = rejection_sample_bins(
            cfg.bins,
            cfg.samples_per_object,
            &mut sampler,
            &mut sampler_rng,
        );
        if !binned.unfilled.is_empty() {
            unfilled_bins.push((obj.id.clone(), binned.unfilled.clone()));
        }

        for (bin, scenario) in &binned.scenarios {
            let (depth, mask) = render_depth(&obj.mesh, &scenario.t_gt, cam)
                .expect("accepted scenario renders");
            let scene = Scene::from_depth(&depth, &mask, cam);
            let hash = scene_hash(&depth, &scenario.t_init);
            let point = TrialPoint {
                object_mesh: &obj.mesh,
                model_mesh: &obj.mesh,
                model_cloud: &model_cloud,
                scene: &scene,
                input_depth: &depth,
                input_mask: &mask,
                clean_depth: &depth,
                clean_mask: &mask,
                model_diameter: obj.diameter,
                eval_diameter: obj.diameter,
                assoc,
            };
            for variant in &cfg.variants {
                let started = Instant::now();
                let (pose, status) = run_variant(*variant, &point, &scenario.t_init, cfg.alpha, cam);
                let elapsed = elapsed_or_fixed(&cfg.timing, started);
                let post = evaluate(&point, &pose, cam, &vsd_cfg);
                rows.push(ReportRow {
                    experiment: cfg.experiment.name().into(),
                    object: obj.id.clone(),
                    variant: variant.name().into(),
                    level: bin.to_string(),
                    pre_vsd: scenario.pre_vsd,
                    post_vsd: post,
                    elapsed_seconds: elapsed,
                    status: status_name(status).into(),
                    seed: cfg.seed,
                    scene_hash: hash.clone(),
                });
            }
        }
    }
    Ok(RunSummary { rows, unfilled_bins })
}

/// Draw a visible object pose, retrying a bounded number of times.
fn sample_rendered_pose(
    mesh: &TriangleMesh,
    diameter: f64,
    cam: &CameraIntrinsics,
    rng: &mut ChaCha8Rng,
) -> Result<(Pose, DepthImage, SegmentationMask)> {
    for _ in 0..100 {
        let t_gt = sample_object_pose(diameter, PlacementMode::SingleImage, cam, rng)?;
        if let Ok((depth, mask)) = render_depth(mesh, &t_gt, cam) {
            return Ok((t_gt, depth, mask));
        }
    }
    Err(BenchError::Config(
        "object never rendered after 100 pose draws".into(),
    ))
}

fn depth_noise_experiment(
    cfg: &ExperimentConfig,
    objects: &[LoadedObject],
    cam: &CameraIntrinsics,
) -> Result<RunSummary> {
    let vsd_cfg = VsdConfig::default();
    let levels: Vec<u32> = (0..=5).collect();
    let mut rows = Vec::new();

    for (oi, obj) in objects.iter().enumerate() {
        let mut model_rng = derived_rng(cfg.seed, &[20, oi as u64, TAG_MODEL]);
        let model_cloud = sample_mesh_points(&obj.mesh, cfg.model_points, &mut model_rng);
        let assoc = experiment_assoc(obj.diameter, MEAN_TRANSLATION_ERROR_M);

        for sample in 0..cfg.samples_per_object {
            let mut rng = derived_rng(cfg.seed, &[20, oi as u64, TAG_SCENARIO, sample as u64]);
            let (t_gt, clean_depth, mask) =
                sample_rendered_pose(&obj.mesh, obj.diameter, cam, &mut rng)?;
            // Fixed perturbation at the estimator's mean error.
            let perturbation = sample_perturbation(
                MEAN_TRANSLATION_ERROR_M,
                MEAN_ROTATION_ERROR_RAD,
                &mut rng,
            );
            let t_init = apply_perturbation(&t_gt, &perturbation);
            let pre_vsd = mve(
                &clean_depth,
                &mask,
                &obj.mesh,
                &t_init,
                cam,
                obj.diameter,
                &vsd_cfg,
            )
            .unwrap_or(1.0);

            for &level in &levels {
                let noisy_depth = if level == 0 {
                    clean_depth.clone()
                } else {
                    let mut noise_rng = derived_rng(
                        cfg.seed,
                        &[20, oi as u64, TAG_NOISE, sample as u64, level as u64],
                    );
                    add_depth_noise(
                        &clean_depth,
                        &DepthNoiseModel::GaussianPercent(level as f64),
                        &mut noise_rng,
                    )
                };
                let scene = Scene::from_depth(&noisy_depth, &mask, cam);
                let hash = scene_hash(&noisy_depth, &t_init);
                let point = TrialPoint {
                    object_mesh: &obj.mesh,
                    model_mesh: &obj.mesh,
                    model_cloud: &model_cloud,
                    scene: &scene,
                    input_depth: &noisy_depth,
                    input_mask: &mask,
                    clean_depth: &clean_depth,
                    clean_mask: &mask,
                    model_diameter: obj.diameter,
                    eval_diameter: obj.diameter,
                    assoc,
                };
                for variant in &cfg.variants {
                    let started = Instant::now();
                    let (pose, status) = run_variant(*variant, &point, &t_init, cfg.alpha, cam);
                    let elapsed = elapsed_or_fixed(&cfg.timing, started);
                    let post = evaluate(&point, &pose, cam, &vsd_cfg);
                    rows.push(ReportRow {
                        experiment: cfg.experiment.name().into(),
                        object: obj.id.clone(),
                        variant: variant.name().into(),
                        level: level.to_string(),
                        pre_vsd,
                        post_vsd: post,
                        elapsed_seconds: elapsed,
                        status: status_name(status).into(),
                        seed: cfg.seed,
                        scene_hash: hash.clone(),
                    });
                }
            }
        }
    }
    Ok(RunSummary {
        rows,
        unfilled_bins: Vec::new(),
    })
}

fn model_noise_experiment(
    cfg: &ExperimentConfig,
    objects: &[LoadedObject],
    cam: &CameraIntrinsics,
) -> Result<RunSummary> {
    let vsd_cfg = VsdConfig::default();
    let levels: Vec<u32> = (0..=4).collect();
    let mut rows = Vec::new();

    for (oi, obj) in objects.iter().enumerate() {
        // One reconstruction per noise level, reused for every sample.
        let corrupted: Vec<TriangleMesh> = levels
            .iter()
            .map(|&level| {
                let mut rng =
                    derived_rng(cfg.seed, &[30, oi as u64, TAG_CORRUPT, level as u64]);
                corrupt_mesh(&obj.mesh, level, &mut rng)
            })
            .collect();
        let model_clouds: Vec<OrientedPointCloud> = corrupted
            .iter()
            .enumerate()
            .map(|(level, mesh)| {
                let mut rng =
                    derived_rng(cfg.seed, &[30, oi as u64, TAG_MODEL, level as u64]);
                sample_mesh_points(mesh, cfg.model_points, &mut rng)
            })
            .collect();
        let assoc = experiment_assoc(obj.diameter, MEAN_TRANSLATION_ERROR_M);

        for sample in 0..cfg.samples_per_object {
            let mut rng = derived_rng(cfg.seed, &[30, oi as u64, TAG_SCENARIO, sample as u64]);
            let (t_gt, clean_depth, mask) =
                sample_rendered_pose(&obj.mesh, obj.diameter, cam, &mut rng)?;
            let perturbation = sample_perturbation(
                MEAN_TRANSLATION_ERROR_M,
                MEAN_ROTATION_ERROR_RAD,
                &mut rng,
            );
            let t_init = apply_perturbation(&t_gt, &perturbation);
            let pre_vsd = mve(
                &clean_depth,
                &mask,
                &obj.mesh,
                &t_init,
                cam,
                obj.diameter,
                &vsd_cfg,
            )
            .unwrap_or(1.0);
            let scene = Scene::from_depth(&clean_depth, &mask, cam);
            let hash = scene_hash(&clean_depth, &t_init);

            for &level in &levels {
                let model_mesh = &corrupted[level as usize];
                let point = TrialPoint {
                    object_mesh: &obj.mesh,
                    model_mesh,
                    model_cloud: &model_clouds[level as usize],
                    scene: &scene,
                    input_depth: &clean_depth,
                    input_mask: &mask,
                    clean_depth: &clean_depth,
                    clean_mask: &mask,
                    model_diameter: mesh_diameter(model_mesh),
                    eval_diameter: obj.diameter,
                    assoc,
                };
                for variant in &cfg.variants {
                    let started = Instant::now();
                    let (pose, status) = run_variant(*variant, &point, &t_init, cfg.alpha, cam);
                    let elapsed = elapsed_or_fixed(&cfg.timing, started);
                    let post = evaluate(&point, &pose, cam, &vsd_cfg);
                    rows.push(ReportRow {
                        experiment: cfg.experiment.name().into(),
                        object: obj.id.clone(),
                        variant: variant.name().into(),
                        level: level.to_string(),
                        pre_vsd,
                        post_vsd: post,
                        elapsed_seconds: elapsed,
                        status: status_name(status).into(),
                        seed: cfg.seed,
                        scene_hash: hash.clone(),
                    });
                }
            }
        }
    }
    Ok(RunSummary {
        rows,
        unfilled_bins: Vec::new(),
    })
}

#[derive(Clone)]
struct SeqScenario {
    t_gt: Pose,
    perturbation: Perturbation,
    pre_vsd: f64,
}

fn sequential_variants(cfg: &ExperimentConfig) -> Result<Vec<SequentialVariant>> {
    cfg.variants
        .iter()
        .map(|v| match v {
            Variant::Cascading {
                assoc: AssociationMethod::Projective,
                order: icp_core::hybrid::StageOrder::PointPlane,
            } => Ok(SequentialVariant::ProjectiveCascading),
            Variant::Hybrid => Ok(SequentialVariant::Hybrid),
            other => Err(BenchError::Config(format!(
                "sequential experiment supports projective_cascading_point_plane and hybrid, got {}",
                other.name()
            ))),
        })
        .collect()
}

fn sequential_experiment(
    cfg: &ExperimentConfig,
    objects: &[LoadedObject],
    cam: &CameraIntrinsics,
) -> Result<RunSummary> {
    let vsd_cfg = VsdConfig::default();
    let icp_variants = sequential_variants(cfg)?;
    let mut rows = Vec::new();
    let mut unfilled_bins = Vec::new();

    for (oi, obj) in objects.iter().enumerate() {
        let mut corrupt_rng = derived_rng(cfg.seed, &[40, oi as u64, TAG_CORRUPT]);
        let model_mesh = corrupt_mesh(&obj.mesh, cfg.model_noise_level, &mut corrupt_rng);
        let mut model_rng = derived_rng(cfg.seed, &[40, oi as u64, TAG_MODEL]);
        let model_cloud = sample_mesh_points(&model_mesh, cfg.model_points, &mut model_rng);
        let assoc = experiment_assoc(obj.diameter, MAX_TRANSLATION_PERTURBATION);

        let mut sampler_rng = derived_rng(cfg.seed, &[40, oi as u64, TAG_SAMPLER]);
        let mesh = &obj.mesh;
        let diameter = obj.diameter;
        let start_distance = cfg.start_distance;
        let mut sampler = |rng: &mut ChaCha8Rng| -> Option<(SeqScenario, f64)> {
            let mut t_gt =
                sample_object_pose(diameter, PlacementMode::Trajectory, cam, rng).ok()?;
            // Trajectory placement puts the object at exactly 1 m; rescale
            // to the configured start distance along the same line of sight.
            t_gt.translation *= start_distance;
            let (depth, mask) = render_depth(mesh, &t_gt, cam).ok()?;
            let delta_t = rng.random_range(0.0..MAX_TRANSLATION_PERTURBATION);
            let perturbation =
                sample_perturbation(delta_t, rotation_for_translation(delta_t), rng);
            let t_init = apply_perturbation(&t_gt, &perturbation);
            let pre_vsd = mve(&depth, &mask, mesh, &t_init, cam, diameter, &vsd_cfg).ok()?;
            Some((
                SeqScenario {
                    t_gt,
                    perturbation,
                    pre_vsd,
                },
                pre_vsd,
            ))
        };
        let binned = rejection_sample_bins(
            cfg.bins,
            cfg.samples_per_object,
            &mut sampler,
            &mut sampler_rng,
        );
        if !binned.unfilled.is_empty() {
            unfilled_bins.push((obj.id.clone(), binned.unfilled.clone()));
        }

        for (ti, (bin, scenario)) in binned.scenarios.iter().enumerate() {
            let mut hash = ContentHash::new();
            hash.write_pose(&scenario.t_gt);
            for k in 0..3 {
                hash.write_f64(scenario.perturbation.t_delta[k]);
            }
            hash.write_pose(&Pose::new(
                scenario.perturbation.r_delta,
                nalgebra::Vector3::zeros(),
            ));
            let hash = hash.hex();

            for (vi, &variant) in icp_variants.iter().enumerate() {
                for (mi, &method) in cfg.fusion_methods.iter().enumerate() {
                    let setup = SequentialSetup {
                        object_mesh: &obj.mesh,
                        model_mesh: &model_mesh,
                        model_cloud: &model_cloud,
                        cam,
                        variant,
                        method,
                        trajectory: icp_core::sequential::TrajectoryConfig {
                            start_distance: cfg.start_distance,
                            velocity: cfg.velocity,
                            stop_distance: cfg.stop_distance,
                            timing: cfg.timing,
                            max_steps: 10_000,
                        },
                        noise: cfg.depth_noise,
                        hybrid: HybridConfig {
                            alpha: cfg.alpha,
                            ..HybridConfig::default()
                        },
                        assoc,
                    };
                    let mut rng = derived_rng(
                        cfg.seed,
                        &[40, oi as u64, 7, ti as u64, vi as u64, mi as u64],
                    );
                    let report = simulate_trajectory(
                        &setup,
                        &scenario.t_gt,
                        &scenario.perturbation,
                        &mut rng,
                    )?;
                    let elapsed: f64 = report.steps.iter().map(|s| s.elapsed_seconds).sum();
                    let status = report
                        .steps
                        .last()
                        .map(|s| match s.status {
                            StepStatus::Icp(icp) => status_name(icp),
                            StepStatus::RenderFailed => "render_failed",
                        })
                        .unwrap_or("no_steps");
                    rows.push(ReportRow {
                        experiment: cfg.experiment.name().into(),
                        object: obj.id.clone(),
                        variant: format!("{}/{}", variant.name(), method.name()),
                        level: bin.to_string(),
                        pre_vsd: scenario.pre_vsd,
                        post_vsd: report.final_vsd,
                        elapsed_seconds: elapsed,
                        status: status.into(),
                        seed: cfg.seed,
                        scene_hash: hash.clone(),
                    });
                }
            }
        }
    }
    Ok(RunSummary { rows, unfilled_bins })
}

fn print_config_echo(cfg: &ExperimentConfig, objects: &[LoadedObject]) {
    println!("experiment: {}", cfg.experiment.name());
    println!("seed: {}", cfg.seed);
    println!(
        "objects: {}",
        objects
            .iter()
            .map(|o| format!("{} (diameter {:.3} m)", o.id, o.diameter))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!(
        "variants: {}",
        cfg.variants
            .iter()
            .map(|v| v.name().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!(
        "samples_per_object: {}, bins: {}, alpha: {}, model_points: {}",
        cfg.samples_per_object, cfg.bins, cfg.alpha, cfg.model_points
    );
    let max_offset = match cfg.experiment {
        ExperimentKind::InitNoise | ExperimentKind::Sequential => MAX_TRANSLATION_PERTURBATION,
        _ => MEAN_TRANSLATION_ERROR_M,
    };
    for obj in objects {
        let assoc = experiment_assoc(obj.diameter, max_offset);
        println!(
            "association gates for {}: tau_max {:.4} m, theta_max {:.1} deg",
            obj.id,
            assoc.tau_max,
            assoc.theta_max.to_degrees()
        );
    }
    match cfg.timing {
        TimingMode::Measured => println!("timing: measured"),
        TimingMode::Fixed(s) => println!("timing: fixed {s} s/estimate"),
    }
    if cfg.experiment == ExperimentKind::Sequential {
        println!(
            "trajectory: start {} m, stop {} m, velocity {} m/s, depth noise {:?}, model level {}",
            cfg.start_distance,
            cfg.stop_distance,
            cfg.velocity,
            cfg.depth_noise,
            cfg.model_noise_level
        );
        println!(
            "fusion methods: {}",
            cfg.fusion_methods
                .iter()
                .map(|m| m.name().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
}

fn print_summary(summary: &RunSummary) {
    for (object, bins) in &summary.unfilled_bins {
        println!("warning: {object}: unfillable pre-VSD bins {bins:?}");
    }

    // Mean post-VSD per variant and level.
    let mut by_variant_level: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    let mut timing: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in &summary.rows {
        let cell = by_variant_level
            .entry((row.variant.clone(), row.level.clone()))
            .or_insert((0.0, 0));
        cell.0 += row.post_vsd;
        cell.1 += 1;
        timing
            .entry(row.variant.clone())
            .or_default()
            .push(row.elapsed_seconds);
    }

    println!("\nmean post-VSD by variant and level:");
    let mut variants: Vec<String> = timing.keys().cloned().collect();
    variants.sort();
    let mut levels: Vec<String> = summary
        .rows
        .iter()
        .map(|r| r.level.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    levels.sort_by_key(|l| l.parse::<i64>().unwrap_or(i64::MAX));
    for variant in &variants {
        let cells: Vec<String> = levels
            .iter()
            .map(|level| {
                by_variant_level
                    .get(&(variant.clone(), level.clone()))
                    .map(|(sum, n)| format!("{:.3}", sum / *n as f64))
                    .unwrap_or_else(|| "-".into())
            })
            .collect();
        println!("  {variant:<40} {}", cells.join(" "));
    }

    println!("\nexecution time per variant (fastest on top):");
    let mut stats: Vec<(String, f64, f64)> = timing
        .into_iter()
        .map(|(variant, times)| {
            let n = times.len() as f64;
            let mean = times.iter().sum::<f64>() / n;
            let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
            (variant, mean, var.sqrt())
        })
        .collect();
    stats.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    for (variant, mean, std) in stats {
        println!("  {variant:<40} {mean:.4} ± {std:.4} s");
    }
    println!("\nrows: {}", summary.rows.len());
}
