use nalgebra::Vector3;

/// Pinhole camera intrinsics. The pixel grid is indexed by `(u, v)` with
/// `u` the column and `v` the row; pixel `(u, v)` samples the continuous
/// image point `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        }
    }

    /// Common structured-light intrinsics used as the test default.
    pub fn default_vga() -> Self {
        Self::new(525.0, 525.0, 319.5, 239.5, 640, 480)
    }

    /// Continuous image coordinates of a camera-frame point, or `None` when
    /// the point is not in front of the camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p[2] <= 0.0 {
            return None;
        }
        Some((
            self.fx * p[0] / p[2] + self.cx,
            self.fy * p[1] / p[2] + self.cy,
        ))
    }

    /// Nearest-pixel projection, `None` when off-image or behind the camera.
    pub fn project_to_pixel(&self, p: &Vector3<f64>) -> Option<(usize, usize)> {
        let (u, v) = self.project(p)?;
        let ui = u.round();
        let vi = v.round();
        if ui < 0.0 || vi < 0.0 || ui >= self.width as f64 || vi >= self.height as f64 {
            return None;
        }
        Some((ui as usize, vi as usize))
    }

    /// Back-projection direction of pixel `(u, v)` at unit depth.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}
