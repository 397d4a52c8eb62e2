use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::maps::DepthImage;

/// Per-pixel depth noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DepthNoiseModel {
    /// Depth passes through unchanged.
    None,
    /// Gaussian with a standard deviation of `percent`% of the pixel depth.
    GaussianPercent(f64),
    /// Stereo-camera style polynomial sigma `a0 + a1 z + a2 z²` (meters).
    ParametricStereo { a0: f64, a1: f64, a2: f64 },
}

impl DepthNoiseModel {
    /// Noise standard deviation at depth `z` (meters).
    pub fn sigma(&self, z: f64) -> f64 {
        match *self {
            DepthNoiseModel::None => 0.0,
            DepthNoiseModel::GaussianPercent(percent) => percent / 100.0 * z,
            DepthNoiseModel::ParametricStereo { a0, a1, a2 } => a0 + a1 * z + a2 * z * z,
        }
    }

    /// Placeholder coefficients for a small stereo depth camera; the real
    /// values live in external calibration reports, so these are
    /// configuration rather than ground truth.
    pub fn default_stereo() -> Self {
        DepthNoiseModel::ParametricStereo {
            a0: 0.001,
            a1: 0.0,
            a2: 0.0019,
        }
    }
}

/// Add independent per-pixel Gaussian noise. Invalid pixels are untouched
/// and pixels whose noisy depth becomes non-positive are invalidated.
/// Pixels are visited row-major, one draw per valid pixel, so the result is
/// bit-reproducible for a given seed.
pub fn add_depth_noise<R: Rng + ?Sized>(
    depth: &DepthImage,
    model: &DepthNoiseModel,
    rng: &mut R,
) -> DepthImage {
    if *model == DepthNoiseModel::None {
        return depth.clone();
    }
    let mut out = depth.clone();
    for value in &mut out.values {
        if *value > 0.0 {
            let n: f64 = StandardNormal.sample(rng);
            let noisy = *value + model.sigma(*value) * n;
            *value = if noisy > 0.0 { noisy } else { 0.0 };
        }
    }
    out
}
