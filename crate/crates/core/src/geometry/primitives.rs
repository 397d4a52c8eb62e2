//! Built-in primitive meshes at desk scale, centered on the object origin.

use nalgebra::Vector3;

use super::mesh::TriangleMesh;

/// UV sphere with exact radial vertex normals. Poles are shared vertices, so
/// the vertex set contains an antipodal pair and the mesh diameter is exactly
/// `2 * radius`.
pub fn sphere_mesh(radius: f64, segments: usize, rings: usize) -> TriangleMesh {
    assert!(segments >= 3 && rings >= 2);
    let mut vertices = vec![Vector3::new(0.0, 0.0, -radius)];
    for ring in 1..rings {
        let polar = std::f64::consts::PI * (ring as f64 / rings as f64 - 0.5);
        let (sin_p, cos_p) = polar.sin_cos();
        for seg in 0..segments {
            let azimuth = 2.0 * std::f64::consts::PI * seg as f64 / segments as f64;
            vertices.push(Vector3::new(
                radius * cos_p * azimuth.cos(),
                radius * cos_p * azimuth.sin(),
                radius * sin_p,
            ));
        }
    }
    vertices.push(Vector3::new(0.0, 0.0, radius));
    let top = vertices.len() - 1;

    let ring_start = |ring: usize| 1 + (ring - 1) * segments;
    let mut triangles = Vec::new();
    for seg in 0..segments {
        let next = (seg + 1) % segments;
        triangles.push([0, ring_start(1) + next, ring_start(1) + seg]);
        triangles.push([top, ring_start(rings - 1) + seg, ring_start(rings - 1) + next]);
    }
    for ring in 1..rings - 1 {
        for seg in 0..segments {
            let next = (seg + 1) % segments;
            let a = ring_start(ring) + seg;
            let b = ring_start(ring) + next;
            let c = ring_start(ring + 1) + seg;
            let d = ring_start(ring + 1) + next;
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }

    let normals = vertices.iter().map(|v| v / radius).collect();
    TriangleMesh::with_normals(vertices, triangles, normals).expect("valid sphere topology")
}

/// Axis-aligned box with flat per-face normals (vertices duplicated per
/// face).
pub fn box_mesh(sx: f64, sy: f64, sz: f64) -> TriangleMesh {
    let h = Vector3::new(sx / 2.0, sy / 2.0, sz / 2.0);
    let mut vertices = Vec::with_capacity(24);
    let mut normals = Vec::with_capacity(24);
    let mut triangles = Vec::with_capacity(12);
    // (normal axis, sign) for the six faces.
    for (axis, sign) in [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)] {
        let n = {
            let mut n = Vector3::zeros();
            n[axis] = sign;
            n
        };
        let u_axis = (axis + 1) % 3;
        let v_axis = (axis + 2) % 3;
        let base = vertices.len();
        for (du, dv) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            let mut p = Vector3::zeros();
            p[axis] = sign * h[axis];
            p[u_axis] = du * h[u_axis];
            p[v_axis] = dv * h[v_axis];
            vertices.push(p);
            normals.push(n);
        }
        if sign > 0.0 {
            triangles.push([base, base + 1, base + 2]);
            triangles.push([base, base + 2, base + 3]);
        } else {
            triangles.push([base, base + 2, base + 1]);
            triangles.push([base, base + 3, base + 2]);
        }
    }
    TriangleMesh::with_normals(vertices, triangles, normals).expect("valid box topology")
}

/// Cylinder along z with smooth side normals and flat caps.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    assert!(segments >= 3);
    let hz = height / 2.0;
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();

    // Side: two rings with radial normals.
    for seg in 0..segments {
        let a = 2.0 * std::f64::consts::PI * seg as f64 / segments as f64;
        let dir = Vector3::new(a.cos(), a.sin(), 0.0);
        vertices.push(dir * radius + Vector3::new(0.0, 0.0, -hz));
        normals.push(dir);
        vertices.push(dir * radius + Vector3::new(0.0, 0.0, hz));
        normals.push(dir);
    }
    for seg in 0..segments {
        let next = (seg + 1) % segments;
        let (b0, t0) = (2 * seg, 2 * seg + 1);
        let (b1, t1) = (2 * next, 2 * next + 1);
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
    }

    // Caps: duplicated rings with axial normals plus a center fan vertex.
    for sign in [-1.0f64, 1.0] {
        let n = Vector3::new(0.0, 0.0, sign);
        let base = vertices.len();
        for seg in 0..segments {
            let a = 2.0 * std::f64::consts::PI * seg as f64 / segments as f64;
            vertices.push(Vector3::new(radius * a.cos(), radius * a.sin(), sign * hz));
            normals.push(n);
        }
        let center = vertices.len();
        vertices.push(Vector3::new(0.0, 0.0, sign * hz));
        normals.push(n);
        for seg in 0..segments {
            let next = (seg + 1) % segments;
            if sign > 0.0 {
                triangles.push([center, base + seg, base + next]);
            } else {
                triangles.push([center, base + next, base + seg]);
            }
        }
    }
    TriangleMesh::with_normals(vertices, triangles, normals).expect("valid cylinder topology")
}

/// Thin rectangular plate; the two large faces are a few millimetres apart,
/// which is the classic nearest-neighbour failure geometry for thin objects.
pub fn plate_mesh(width: f64, depth: f64, thickness: f64) -> TriangleMesh {
    box_mesh(width, depth, thickness)
}

/// Desk-scale builtin object by name: `sphere`, `box`, `cylinder`, `plate`.
pub fn builtin_mesh(name: &str) -> Option<TriangleMesh> {
    match name {
        "sphere" => Some(sphere_mesh(0.06, 32, 16)),
        "box" => Some(box_mesh(0.10, 0.08, 0.06)),
        "cylinder" => Some(cylinder_mesh(0.04, 0.12, 32)),
        "plate" => Some(plate_mesh(0.15, 0.10, 0.004)),
        _ => None,
    }
}
