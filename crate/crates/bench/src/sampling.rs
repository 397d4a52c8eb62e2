//! Object/initialisation pose sampling and rejection sampling into pre-VSD
//! bins.

use icp_core::geometry::CameraIntrinsics;
use icp_core::se3::Pose;
use icp_core::{Error, Result};
use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Camera placement regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMode {
    /// Distance uniform in `[diameter, 0.6]` m.
    SingleImage,
    /// Distance exactly 1 m.
    Trajectory,
}

const MAX_SINGLE_IMAGE_DISTANCE: f64 = 0.6;

/// Uniform random rotation from a normalized 4-Gaussian quaternion.
fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if q.norm() > 1e-6 {
            return *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix();
        }
    }
}

/// Draw an object pose: uniform random orientation, camera-object distance
/// by placement mode, and the optical axis aimed at a point offset from the
/// object's centre by `U[0, 0.1 diameter]` per lateral axis, so the object
/// never sits exactly at the image centre.
pub fn sample_object_pose<R: Rng + ?Sized>(
    diameter: f64,
    mode: PlacementMode,
    _cam: &CameraIntrinsics,
    rng: &mut R,
) -> Result<Pose> {
    let distance = match mode {
        PlacementMode::SingleImage => {
            if diameter >= MAX_SINGLE_IMAGE_DISTANCE {
                return Err(Error::DiameterTooLarge {
                    diameter,
                    max: MAX_SINGLE_IMAGE_DISTANCE,
                });
            }
            rng.random_range(diameter..MAX_SINGLE_IMAGE_DISTANCE)
        }
        PlacementMode::Trajectory => 1.0,
    };
    let off_x = rng.random_range(0.0..0.1 * diameter);
    let off_y = rng.random_range(0.0..0.1 * diameter);
    // Aim direction carries the lateral offset; the norm stays exactly at
    // the sampled distance.
    let direction = Vector3::new(off_x, off_y, distance).normalize();
    Ok(Pose::new(random_rotation(rng), direction * distance))
}

/// Scenarios grouped by pre-VSD bin.
#[derive(Debug, Clone)]
pub struct BinnedScenarios<T> {
    /// `(bin index, scenario)` in deterministic bin-major order.
    pub scenarios: Vec<(usize, T)>,
    /// Bins the attempt budget could not fill (reported, not fatal).
    pub unfilled: Vec<usize>,
    pub attempts: usize,
}

/// Attempt budget per requested scenario.
pub const REJECTION_BUDGET_FACTOR: usize = 200;

/// Keep drawing scenarios from `sampler` until every bin over `[0, 1]`
/// holds `per_bin` of them or the attempt budget runs out. The sampler
/// returns a scenario and its pre-VSD score, or `None` for a draw that
/// produced no usable scene.
pub fn rejection_sample_bins<T, R: Rng + ?Sized>(
    bins: usize,
    per_bin: usize,
    sampler: &mut dyn FnMut(&mut R) -> Option<(T, f64)>,
    rng: &mut R,
) -> BinnedScenarios<T> {
    assert!(bins >= 1 && per_bin >= 1);
    let budget = REJECTION_BUDGET_FACTOR * bins * per_bin;
    let mut buckets: Vec<Vec<T>> = (0..bins).map(|_| Vec::new()).collect();
    let mut filled = 0usize;
    let mut attempts = 0usize;
    while filled < bins * per_bin && attempts < budget {
        attempts += 1;
        let Some((scenario, pre_vsd)) = sampler(rng) else {
            continue;
        };
        let bin = ((pre_vsd * bins as f64) as usize).min(bins - 1);
        if buckets[bin].len() < per_bin {
            buckets[bin].push(scenario);
            filled += 1;
        }
    }
    let unfilled: Vec<usize> = buckets
        .iter()
        .enumerate()
        .filter(|(_, b)| b.len() < per_bin)
        .map(|(i, _)| i)
        .collect();
    let mut scenarios = Vec::with_capacity(filled);
    for (bin, bucket) in buckets.into_iter().enumerate() {
        for scenario in bucket {
            scenarios.push((bin, scenario));
        }
    }
    BinnedScenarios {
        scenarios,
        unfilled,
        attempts,
    }
}

/// Derive an independent, order-insensitive RNG stream from the master seed
/// and a tag path (experiment stage, object index, trial index, ...).
pub fn derived_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x9e3779b97f4a7c15;
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag.wrapping_add(0x2545f4914f6cdd1d)));
    }
    ChaCha8Rng::seed_from_u64(splitmix64(state))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
