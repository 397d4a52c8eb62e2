use nalgebra::Vector3;

use super::camera::CameraIntrinsics;

/// Depth along the optical axis in meters, stored row-major. Invalid pixels
/// hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl DepthImage {
    pub fn new_invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, depth: f64) {
        self.values[v * self.width + u] = depth;
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.at(u, v) > 0.0
    }
}

/// Boolean per-pixel mask matching a depth image.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationMask {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
}

impl SegmentationMask {
    pub fn new_empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    pub fn new_full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![true; width * height],
        }
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> bool {
        self.mask[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.mask[v * self.width + u] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Image-organized point cloud: each valid pixel stores the camera-frame
/// point that projects to it.
#[derive(Debug, Clone)]
pub struct VertexMap {
    pub width: usize,
    pub height: usize,
    pub points: Vec<Vector3<f64>>,
    pub valid: Vec<bool>,
}

impl VertexMap {
    pub fn new_invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            points: vec![Vector3::zeros(); width * height],
            valid: vec![false; width * height],
        }
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> Option<&Vector3<f64>> {
        if self.valid[v * self.width + u] {
            Some(&self.points[v * self.width + u])
        } else {
            None
        }
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, p: Vector3<f64>) {
        self.points[v * self.width + u] = p;
        self.valid[v * self.width + u] = true;
    }
}

/// Image-organized unit normals with validity flags.
#[derive(Debug, Clone)]
pub struct NormalMap {
    pub width: usize,
    pub height: usize,
    pub normals: Vec<Vector3<f64>>,
    pub valid: Vec<bool>,
}

impl NormalMap {
    pub fn new_invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            normals: vec![Vector3::zeros(); width * height],
            valid: vec![false; width * height],
        }
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> Option<&Vector3<f64>> {
        if self.valid[v * self.width + u] {
            Some(&self.normals[v * self.width + u])
        } else {
            None
        }
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, n: Vector3<f64>) {
        self.normals[v * self.width + u] = n;
        self.valid[v * self.width + u] = true;
    }
}

/// Back-project the masked valid pixels of a depth image into a vertex map.
pub fn backproject(
    depth: &DepthImage,
    cam: &CameraIntrinsics,
    mask: &SegmentationMask,
) -> VertexMap {
    assert_eq!(depth.width, mask.width);
    assert_eq!(depth.height, mask.height);
    let mut vmap = VertexMap::new_invalid(depth.width, depth.height);
    for v in 0..depth.height {
        for u in 0..depth.width {
            if mask.at(u, v) && depth.is_valid(u, v) {
                let z = depth.at(u, v);
                vmap.set(u, v, cam.ray_direction(u as f64, v as f64) * z);
            }
        }
    }
    vmap
}

/// Per-pixel normals from central differences over the vertex map, oriented
/// toward the camera (`n · p <= 0` for the stored point `p`). Pixels without
/// all four valid neighbours are left invalid.
pub fn compute_normals(vmap: &VertexMap) -> NormalMap {
    let mut nmap = NormalMap::new_invalid(vmap.width, vmap.height);
    if vmap.width < 3 || vmap.height < 3 {
        return nmap;
    }
    for v in 1..vmap.height - 1 {
        for u in 1..vmap.width - 1 {
            let (Some(center), Some(left), Some(right), Some(up), Some(down)) = (
                vmap.at(u, v),
                vmap.at(u - 1, v),
                vmap.at(u + 1, v),
                vmap.at(u, v - 1),
                vmap.at(u, v + 1),
            ) else {
                continue;
            };
            let du = right - left;
            let dv = down - up;
            let mut n = du.cross(&dv);
            let norm = n.norm();
            if norm < 1e-14 {
                continue;
            }
            n /= norm;
            if n.dot(center) > 0.0 {
                n = -n;
            }
            nmap.set(u, v, n);
        }
    }
    nmap
}
