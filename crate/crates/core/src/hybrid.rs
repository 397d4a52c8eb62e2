//! Dynamic Switching, Cascading ICP with divergence rollback, and the
//! Hybrid ICP orchestration loop.

use crate::association::{AssociationConfig, AssociationMethod};
use crate::geometry::{
    CameraIntrinsics, DepthImage, OrientedPointCloud, SegmentationMask, TriangleMesh,
};
use crate::icp::{
    render_model_maps, run_icp, run_icp_inner, DivergenceGuard, ErrorMetric, IcpConfig, IcpResult,
    IcpStatus, ModelView, Scene,
};
use crate::se3::Pose;
use crate::vsd::{mve, VsdConfig};

/// Outcome of one Dynamic Switching evaluation: nearest-neighbour when the
/// mean VSD estimate reaches the threshold, projective below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchDecision {
    pub method: AssociationMethod,
    pub e_mve: f64,
}

/// Choose the data association method from the current mean VSD estimate.
pub fn dynamic_switch(e_mve: f64, alpha: f64) -> SwitchDecision {
    let method = if e_mve >= alpha {
        AssociationMethod::NearestNeighbour
    } else {
        AssociationMethod::Projective
    };
    SwitchDecision { method, e_mve }
}

/// Which error metric runs first in the two-stage cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOrder {
    /// Point-to-point first, refined by point-to-plane (the default).
    PointPlane,
    /// Point-to-plane first, refined by point-to-point.
    PlanePoint,
}

/// Cascading ICP parameters.
#[derive(Debug, Clone, Copy)]
pub struct CascadeConfig {
    /// Correspondence-count shrink fraction that counts as divergence.
    pub shrink_tolerance: f64,
    pub stage_order: StageOrder,
    /// Stopping parameters applied to each stage independently.
    pub stage_icp: IcpConfig,
    /// Require the count shrink against both the first and the previous
    /// iteration; `false` switches to the disjunctive (either) reading.
    pub conjunctive_shrink: bool,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            shrink_tolerance: 0.05,
            stage_order: StageOrder::PointPlane,
            stage_icp: IcpConfig::default(),
            conjunctive_shrink: true,
        }
    }
}

/// Hybrid ICP parameters.
#[derive(Debug, Clone)]
pub struct HybridConfig {
    /// Dynamic Switching threshold on the mean VSD estimate.
    pub alpha: f64,
    pub hybrid_iterations: usize,
    pub cascade: CascadeConfig,
    /// Stopping parameters of the NN point-to-point branch.
    pub nn_icp: IcpConfig,
    pub vsd: VsdConfig,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            hybrid_iterations: 2,
            cascade: CascadeConfig::default(),
            nn_icp: IcpConfig::default(),
            vsd: VsdConfig::default(),
        }
    }
}

fn stage_metrics(order: StageOrder) -> [ErrorMetric; 2] {
    match order {
        StageOrder::PointPlane => [ErrorMetric::PointToPoint, ErrorMetric::PointToPlane],
        StageOrder::PlanePoint => [ErrorMetric::PointToPlane, ErrorMetric::PointToPoint],
    }
}

/// Two-stage Cascading ICP.
///
/// Each stage runs the generic loop under the divergence criteria
/// (zero/shrinking correspondences, increasing mean loss); a diverging stage
/// rolls back to the estimate before the offending update and hands over to
/// the next stage. A stage that diverges before adopting any update passes
/// its input through unchanged, so when both stages do so the result is
/// `t_init` bit-exactly.
///
/// For projective association the model maps must be rendered at `t_init`;
/// stage two keeps using them while tracking its refined estimate.
pub fn run_cascading_icp(
    model: &ModelView,
    scene: &Scene,
    t_init: &Pose,
    assoc: AssociationMethod,
    cfg: &CascadeConfig,
    assoc_cfg: &AssociationConfig,
    cam: &CameraIntrinsics,
) -> IcpResult {
    let guard = DivergenceGuard {
        shrink_tolerance: cfg.shrink_tolerance,
        conjunctive: cfg.conjunctive_shrink,
    };
    let [metric_a, metric_b] = stage_metrics(cfg.stage_order);

    let stage1 = run_icp_inner(
        model,
        scene,
        t_init,
        t_init,
        assoc,
        metric_a,
        &cfg.stage_icp,
        assoc_cfg,
        cam,
        Some(guard),
    );
    let stage2 = run_icp_inner(
        model,
        scene,
        &stage1.pose,
        t_init,
        assoc,
        metric_b,
        &cfg.stage_icp,
        assoc_cfg,
        cam,
        Some(guard),
    );

    let mut trace = stage1.trace;
    trace.extend(stage2.trace);
    IcpResult {
        pose: stage2.pose,
        trace,
        status: stage2.status,
    }
}

/// Everything Hybrid ICP needs to look at the live image and both model
/// representations.
pub struct HybridInputs<'a> {
    pub mesh: &'a TriangleMesh,
    pub model_cloud: &'a OrientedPointCloud,
    pub scene: &'a Scene,
    pub input_depth: &'a DepthImage,
    pub input_mask: &'a SegmentationMask,
    pub diameter: f64,
}

/// Hybrid ICP outcome: the refined pose with the concatenated inner traces,
/// plus the switching decision taken at each hybrid iteration.
#[derive(Debug, Clone)]
pub struct HybridReport {
    pub result: IcpResult,
    pub decisions: Vec<SwitchDecision>,
}

/// Hybrid ICP: per iteration, estimate the mean VSD at the current pose,
/// let Dynamic Switching pick the association method, then run projective
/// Cascading ICP (with freshly rendered model maps) or NN point-to-point
/// ICP to convergence.
///
/// The NN branch is hard-wired to point-to-point; under NN association the
/// cascade's point-to-plane stage is counterproductive on the close-surface
/// geometry that regime implies.
pub fn run_hybrid_icp(
    inputs: &HybridInputs,
    t_init: &Pose,
    cfg: &HybridConfig,
    assoc_cfg: &AssociationConfig,
    cam: &CameraIntrinsics,
) -> HybridReport {
    let mut current = *t_init;
    let mut trace = Vec::new();
    let mut decisions = Vec::new();
    let mut status = IcpStatus::Converged;

    for _ in 0..cfg.hybrid_iterations.max(1) {
        // A failed estimate render (or an empty live mask) counts as total
        // misalignment, which lands in the NN branch.
        let e_mve = mve(
            inputs.input_depth,
            inputs.input_mask,
            inputs.mesh,
            &current,
            cam,
            inputs.diameter,
            &cfg.vsd,
        )
        .unwrap_or(1.0);
        let decision = dynamic_switch(e_mve, cfg.alpha);
        decisions.push(decision);

        let inner = match decision.method {
            AssociationMethod::Projective => {
                let (vmap, nmap) = render_model_maps(inputs.mesh, &current, cam);
                let model = ModelView {
                    cloud: inputs.model_cloud,
                    maps: Some((&vmap, &nmap)),
                };
                run_cascading_icp(
                    &model,
                    inputs.scene,
                    &current,
                    AssociationMethod::Projective,
                    &cfg.cascade,
                    assoc_cfg,
                    cam,
                )
            }
            AssociationMethod::NearestNeighbour => {
                let model = ModelView {
                    cloud: inputs.model_cloud,
                    maps: None,
                };
                run_icp(
                    &model,
                    inputs.scene,
                    &current,
                    AssociationMethod::NearestNeighbour,
                    ErrorMetric::PointToPoint,
                    &cfg.nn_icp,
                    assoc_cfg,
                    cam,
                )
            }
        };
        current = inner.pose;
        trace.extend(inner.trace);
        status = inner.status;
    }

    HybridReport {
        result: IcpResult {
            pose: current,
            trace,
            status,
        },
        decisions,
    }
}
