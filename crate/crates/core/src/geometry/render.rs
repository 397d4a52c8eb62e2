use nalgebra::{Vector2, Vector3};

use super::camera::CameraIntrinsics;
use super::maps::{DepthImage, SegmentationMask};
use super::mesh::TriangleMesh;
use crate::se3::Pose;
use crate::{Error, Result};

/// Triangles closer than this to the image plane are dropped rather than
/// clipped; the synthetic scenes keep objects far in front of the camera.
const Z_NEAR: f64 = 1e-6;

/// Signed doubled area of the screen-space triangle `(a, b, p)`.
#[inline]
fn edge(a: &Vector2<f64>, b: &Vector2<f64>, p: &Vector2<f64>) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// In the positive-area orientation used here (y down), top edges run in +x
/// and left edges in -y; only those own their boundary pixels.
#[inline]
fn is_top_left(a: &Vector2<f64>, b: &Vector2<f64>) -> bool {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

/// Z-buffered rasterization of the mesh under a pinhole camera.
///
/// Pixels are filled by half-plane tests with the top-left rule and depth is
/// interpolated perspective-correctly, so the result is bit-reproducible.
/// The mask marks every pixel with valid depth.
pub fn render_depth(
    mesh: &TriangleMesh,
    pose: &Pose,
    cam: &CameraIntrinsics,
) -> Result<(DepthImage, SegmentationMask)> {
    let cam_points: Vec<Vector3<f64>> = mesh
        .vertices
        .iter()
        .map(|v| pose.transform_point(v))
        .collect();

    let mut depth = DepthImage::new_invalid(cam.width, cam.height);
    let mut covered = 0usize;

    for tri in &mesh.triangles {
        let pa = &cam_points[tri[0]];
        let pb = &cam_points[tri[1]];
        let pc = &cam_points[tri[2]];
        if pa[2] <= Z_NEAR || pb[2] <= Z_NEAR || pc[2] <= Z_NEAR {
            continue;
        }
        let project = |p: &Vector3<f64>| {
            Vector2::new(cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy)
        };
        let s0 = project(pa);
        let mut s1 = project(pb);
        let mut s2 = project(pc);
        let mut inv_z = Vector3::new(1.0 / pa[2], 1.0 / pb[2], 1.0 / pc[2]);

        let mut area2 = edge(&s0, &s1, &s2);
        if area2 == 0.0 {
            continue;
        }
        if area2 < 0.0 {
            std::mem::swap(&mut s1, &mut s2);
            inv_z.swap_rows(1, 2);
            area2 = -area2;
        }

        let u_min = s0[0].min(s1[0]).min(s2[0]).ceil().max(0.0) as usize;
        let u_max = s0[0].max(s1[0]).max(s2[0]).floor().min(cam.width as f64 - 1.0);
        let v_min = s0[1].min(s1[1]).min(s2[1]).ceil().max(0.0) as usize;
        let v_max = s0[1].max(s1[1]).max(s2[1]).floor().min(cam.height as f64 - 1.0);
        if u_max < 0.0 || v_max < 0.0 {
            continue;
        }
        let (u_max, v_max) = (u_max as usize, v_max as usize);

        let tl0 = is_top_left(&s1, &s2);
        let tl1 = is_top_left(&s2, &s0);
        let tl2 = is_top_left(&s0, &s1);

        for v in v_min..=v_max {
            for u in u_min..=u_max {
                let p = Vector2::new(u as f64, v as f64);
                let w0 = edge(&s1, &s2, &p);
                let w1 = edge(&s2, &s0, &p);
                let w2 = edge(&s0, &s1, &p);
                let inside = (w0 > 0.0 || (w0 == 0.0 && tl0))
                    && (w1 > 0.0 || (w1 == 0.0 && tl1))
                    && (w2 > 0.0 || (w2 == 0.0 && tl2));
                if !inside {
                    continue;
                }
                let z = area2 / (w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2]);
                let current = depth.at(u, v);
                if current == 0.0 || z < current {
                    if current == 0.0 {
                        covered += 1;
                    }
                    depth.set(u, v, z);
                }
            }
        }
    }

    if covered == 0 {
        return Err(Error::EmptyRender);
    }
    let mut mask = SegmentationMask::new_empty(cam.width, cam.height);
    for v in 0..cam.height {
        for u in 0..cam.width {
            if depth.is_valid(u, v) {
                mask.set(u, v, true);
            }
        }
    }
    Ok((depth, mask))
}
