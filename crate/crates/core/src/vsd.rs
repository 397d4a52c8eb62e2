//! Visible Surface Discrepancy: the per-tolerance pose error, its
//! multi-tolerance mean, and the online mean-VSD-estimate (MVE) that
//! substitutes the live image for the ground-truth render.

use crate::geometry::{
    render_depth, CameraIntrinsics, DepthImage, SegmentationMask, TriangleMesh,
};
use crate::se3::Pose;
use crate::{Error, Result};

/// Per-pixel Euclidean ray length (meters) with validity flags.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DistanceMap {
    #[inline]
    pub fn at(&self, u: usize, v: usize) -> Option<f64> {
        let i = v * self.width + u;
        if self.valid[i] {
            Some(self.values[i])
        } else {
            None
        }
    }
}

/// Misalignment tolerances as fractions of the object diameter.
#[derive(Debug, Clone)]
pub struct VsdConfig {
    pub tau_fractions: Vec<f64>,
}

impl Default for VsdConfig {
    /// 5% to 50% of the diameter in steps of 5%.
    fn default() -> Self {
        Self {
            tau_fractions: (1..=10).map(|k| k as f64 * 0.05).collect(),
        }
    }
}

/// Convert z-depth to Euclidean ray distance per valid pixel.
pub fn distance_map_from_depth(depth: &DepthImage, cam: &CameraIntrinsics) -> DistanceMap {
    let mut values = vec![0.0; depth.width * depth.height];
    let mut valid = vec![false; depth.width * depth.height];
    for v in 0..depth.height {
        for u in 0..depth.width {
            let z = depth.at(u, v);
            if z > 0.0 {
                let i = v * depth.width + u;
                values[i] = z * cam.ray_direction(u as f64, v as f64).norm();
                valid[i] = true;
            }
        }
    }
    DistanceMap {
        width: depth.width,
        height: depth.height,
        values,
        valid,
    }
}

fn empty_distance_map(width: usize, height: usize) -> DistanceMap {
    DistanceMap {
        width,
        height,
        values: vec![0.0; width * height],
        valid: vec![false; width * height],
    }
}

/// Union size and intersection distance gaps, shared by the single- and
/// multi-tolerance entry points.
fn collect_union(
    d_est: &DistanceMap,
    d_gt: &DistanceMap,
    m_est: &SegmentationMask,
    m_gt: &SegmentationMask,
) -> Result<(usize, Vec<f64>)> {
    assert_eq!(m_est.width, m_gt.width);
    assert_eq!(m_est.height, m_gt.height);
    let mut union = 0usize;
    let mut gaps = Vec::new();
    for v in 0..m_est.height {
        for u in 0..m_est.width {
            let in_est = m_est.at(u, v);
            let in_gt = m_gt.at(u, v);
            if !(in_est || in_gt) {
                continue;
            }
            union += 1;
            if in_est && in_gt {
                if let (Some(de), Some(dg)) = (d_est.at(u, v), d_gt.at(u, v)) {
                    gaps.push((de - dg).abs());
                }
            }
        }
    }
    if union == 0 {
        return Err(Error::EmptyUnion);
    }
    Ok((union, gaps))
}

/// Pose error over the union of visibility masks: a pixel costs 0 only when
/// both renders see it and their distances agree within `tau` (strict
/// inequality), 1 otherwise.
pub fn vsd_error(
    d_est: &DistanceMap,
    d_gt: &DistanceMap,
    m_est: &SegmentationMask,
    m_gt: &SegmentationMask,
    tau: f64,
) -> Result<f64> {
    let (union, gaps) = collect_union(d_est, d_gt, m_est, m_gt)?;
    let matching = gaps.iter().filter(|&&gap| gap < tau).count();
    Ok(1.0 - matching as f64 / union as f64)
}

/// Arithmetic mean of [`vsd_error`] over `tau = f * diameter` for every
/// fraction in the config.
pub fn mean_vsd(
    d_est: &DistanceMap,
    d_gt: &DistanceMap,
    m_est: &SegmentationMask,
    m_gt: &SegmentationMask,
    diameter: f64,
    cfg: &VsdConfig,
) -> Result<f64> {
    let (union, gaps) = collect_union(d_est, d_gt, m_est, m_gt)?;
    let mut total = 0.0;
    for fraction in &cfg.tau_fractions {
        let tau = fraction * diameter;
        let matching = gaps.iter().filter(|&&gap| gap < tau).count();
        total += 1.0 - matching as f64 / union as f64;
    }
    Ok(total / cfg.tau_fractions.len() as f64)
}

/// Mean VSD estimate: renders the object at the current estimate and scores
/// it against the live depth image standing in for the ground truth.
///
/// An estimate that renders to nothing scores 1 as long as the input mask is
/// not itself empty; with no noise and a ground-truth input render the value
/// is identical to the true mean VSD.
pub fn mve(
    input_depth: &DepthImage,
    input_mask: &SegmentationMask,
    mesh: &TriangleMesh,
    t_current: &Pose,
    cam: &CameraIntrinsics,
    diameter: f64,
    cfg: &VsdConfig,
) -> Result<f64> {
    let (d_est, m_est) = match render_depth(mesh, t_current, cam) {
        Ok((depth, mask)) => (distance_map_from_depth(&depth, cam), mask),
        Err(Error::EmptyRender) => (
            empty_distance_map(cam.width, cam.height),
            SegmentationMask::new_empty(cam.width, cam.height),
        ),
        Err(e) => return Err(e),
    };
    let d_gt = distance_map_from_depth(input_depth, cam);
    mean_vsd(&d_est, &d_gt, &m_est, input_mask, diameter, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mesh_diameter, sphere_mesh};
    use crate::se3::{apply_perturbation, sample_perturbation};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat_maps(w: usize, h: usize, value: f64) -> (DistanceMap, SegmentationMask) {
        (
            DistanceMap {
                width: w,
                height: h,
                values: vec![value; w * h],
                valid: vec![true; w * h],
            },
            SegmentationMask::new_full(w, h),
        )
    }

    #[test]
    fn identical_maps_score_zero() {
        let (d, m) = flat_maps(10, 10, 1.0);
        assert_eq!(vsd_error(&d, &d, &m, &m, 0.01).unwrap(), 0.0);
        assert_eq!(
            mean_vsd(&d, &d, &m, &m, 0.1, &VsdConfig::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn disjoint_masks_score_one() {
        let (d, _) = flat_maps(10, 10, 1.0);
        let mut m_est = SegmentationMask::new_empty(10, 10);
        let mut m_gt = SegmentationMask::new_empty(10, 10);
        for v in 0..10 {
            m_est.set(0, v, true);
            m_gt.set(5, v, true);
        }
        assert_eq!(vsd_error(&d, &d, &m_est, &m_gt, 1.0).unwrap(), 1.0);
        assert_eq!(
            mean_vsd(&d, &d, &m_est, &m_gt, 0.1, &VsdConfig::default()).unwrap(),
            1.0
        );
    }

    #[test]
    fn empty_union_is_an_error() {
        let (d, _) = flat_maps(4, 4, 1.0);
        let empty = SegmentationMask::new_empty(4, 4);
        assert!(matches!(
            vsd_error(&d, &d, &empty, &empty, 0.1),
            Err(Error::EmptyUnion)
        ));
    }

    #[test]
    fn hand_counted_pixel_fraction() {
        // 10x10 full masks; half of the pixels differ by 0.02, the rest
        // agree; tau 0.01 scores exactly the mismatching half.
        let (d_gt, m) = flat_maps(10, 10, 1.0);
        let mut d_est = d_gt.clone();
        for i in 0..50 {
            d_est.values[i] += 0.02;
        }
        let err = vsd_error(&d_est, &d_gt, &m, &m, 0.01).unwrap();
        assert_eq!(err, 0.5);
    }

    #[test]
    fn constant_offset_mean_is_threshold_count() {
        // Offset of 0.27 diameters on full overlap: the five tolerances
        // below 0.27 (0.05..0.25) each score 1, the rest 0.
        let diameter = 0.2;
        let (d_gt, m) = flat_maps(8, 8, 1.0);
        let mut d_est = d_gt.clone();
        for value in &mut d_est.values {
            *value += 0.27 * diameter;
        }
        let mean = mean_vsd(&d_est, &d_gt, &m, &m, diameter, &VsdConfig::default()).unwrap();
        assert!((mean - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vsd_is_symmetric_in_the_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let (mut d_a, mut m_a) = flat_maps(16, 16, 1.0);
        let (mut d_b, mut m_b) = flat_maps(16, 16, 1.0);
        for i in 0..256 {
            d_a.values[i] = rng.random_range(0.5..1.5);
            d_b.values[i] = rng.random_range(0.5..1.5);
            m_a.mask[i] = rng.random_bool(0.7);
            m_b.mask[i] = rng.random_bool(0.7);
        }
        let tau = 0.3;
        let ab = vsd_error(&d_a, &d_b, &m_a, &m_b, tau).unwrap();
        let ba = vsd_error(&d_b, &d_a, &m_b, &m_a, tau).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn vsd_is_monotone_in_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let (mut d_a, m) = flat_maps(16, 16, 1.0);
        let d_b = d_a.clone();
        for value in &mut d_a.values {
            *value += rng.random_range(-0.1..0.1);
        }
        let mut last = f64::INFINITY;
        for k in 1..=20 {
            let tau = k as f64 * 0.01;
            let err = vsd_error(&d_a, &d_b, &m, &m, tau).unwrap();
            assert!(err <= last);
            last = err;
        }
    }

    #[test]
    fn distance_map_conversion_formula() {
        let cam = CameraIntrinsics::new(100.0, 100.0, 8.0, 6.0, 16, 12);
        let mut depth = DepthImage::new_invalid(16, 12);
        depth.set(8, 6, 1.0);
        depth.set(0, 0, 2.0);
        let dm = distance_map_from_depth(&depth, &cam);
        assert!((dm.at(8, 6).unwrap() - 1.0).abs() < 1e-15);
        let expected = 2.0 * cam.ray_direction(0.0, 0.0).norm();
        assert!((dm.at(0, 0).unwrap() - expected).abs() < 1e-15);
        assert!(dm.at(3, 3).is_none());
    }

    #[test]
    fn mve_identity_against_own_render() {
        let cam = CameraIntrinsics::default_vga();
        let mesh = sphere_mesh(0.06, 32, 16);
        let diameter = mesh_diameter(&mesh);
        let pose = Pose::from_translation(Vector3::new(0.01, -0.02, 0.45));
        let (depth, mask) = render_depth(&mesh, &pose, &cam).unwrap();
        let e = mve(
            &depth,
            &mask,
            &mesh,
            &pose,
            &cam,
            diameter,
            &VsdConfig::default(),
        )
        .unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn mve_equals_ground_truth_vsd_without_noise() {
        // Dual-path equality: the live image is the ground-truth render, so
        // the online estimate and the true mean VSD are the same number.
        let cam = CameraIntrinsics::default_vga();
        let mesh = sphere_mesh(0.06, 32, 16);
        let diameter = mesh_diameter(&mesh);
        let t_gt = Pose::from_translation(Vector3::new(0.0, 0.0, 0.45));
        let (gt_depth, gt_mask) = render_depth(&mesh, &t_gt, &cam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let cfg = VsdConfig::default();
        for _ in 0..5 {
            let perturb = sample_perturbation(
                rng.random_range(0.0..0.05),
                rng.random_range(0.0..0.4),
                &mut rng,
            );
            let t_est = apply_perturbation(&t_gt, &perturb);
            let online = mve(&gt_depth, &gt_mask, &mesh, &t_est, &cam, diameter, &cfg).unwrap();

            let (est_depth, est_mask) = render_depth(&mesh, &t_est, &cam).unwrap();
            let d_est = distance_map_from_depth(&est_depth, &cam);
            let d_gt = distance_map_from_depth(&gt_depth, &cam);
            let truth = mean_vsd(&d_est, &d_gt, &est_mask, &gt_mask, diameter, &cfg).unwrap();
            assert!(
                (online - truth).abs() < 1e-12,
                "online {online} vs truth {truth}"
            );
        }
    }

    #[test]
    fn mve_off_frustum_is_one() {
        let cam = CameraIntrinsics::default_vga();
        let mesh = sphere_mesh(0.06, 16, 8);
        let t_gt = Pose::from_translation(Vector3::new(0.0, 0.0, 0.45));
        let (depth, mask) = render_depth(&mesh, &t_gt, &cam).unwrap();
        let away = Pose::from_translation(Vector3::new(50.0, 0.0, 0.45));
        let e = mve(
            &depth,
            &mask,
            &mesh,
            &away,
            &cam,
            0.12,
            &VsdConfig::default(),
        )
        .unwrap();
        assert_eq!(e, 1.0);
    }
}
