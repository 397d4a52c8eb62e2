use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::cloud::OrientedPointCloud;
use crate::se3::Pose;
use crate::{Error, Result};

/// Triangle mesh in the object frame with per-vertex unit normals.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub vertex_normals: Vec<Vector3<f64>>,
}

impl TriangleMesh {
    /// Build a mesh and derive vertex normals as the area-weighted average
    /// of incident face normals.
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let normals = vec![Vector3::zeros(); vertices.len()];
        let mut mesh = Self {
            vertices,
            triangles,
            vertex_normals: normals,
        };
        mesh.validate_indices()?;
        mesh.recompute_vertex_normals();
        Ok(mesh)
    }

    /// Build a mesh from explicit vertex normals (renormalized).
    pub fn with_normals(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
        vertex_normals: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        if vertex_normals.len() != vertices.len() {
            return Err(Error::InvalidInput(
                "vertex normal count does not match vertex count".into(),
            ));
        }
        let mut mesh = Self {
            vertices,
            triangles,
            vertex_normals,
        };
        mesh.validate_indices()?;
        for n in &mut mesh.vertex_normals {
            let norm = n.norm();
            if norm > 1e-14 {
                *n /= norm;
            }
        }
        Ok(mesh)
    }

    fn validate_indices(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::InvalidInput("mesh has no triangles".into()));
        }
        for t in &self.triangles {
            for &i in t {
                if i >= self.vertices.len() {
                    return Err(Error::InvalidInput(format!(
                        "triangle index {i} out of range ({} vertices)",
                        self.vertices.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn recompute_vertex_normals(&mut self) {
        let mut acc = vec![Vector3::zeros(); self.vertices.len()];
        for t in &self.triangles {
            let [a, b, c] = *t;
            // Cross product length is twice the area: area weighting for free.
            let n = (self.vertices[b] - self.vertices[a])
                .cross(&(self.vertices[c] - self.vertices[a]));
            acc[a] += n;
            acc[b] += n;
            acc[c] += n;
        }
        for (out, n) in self.vertex_normals.iter_mut().zip(acc) {
            let norm = n.norm();
            *out = if norm > 1e-14 {
                n / norm
            } else {
                Vector3::new(0.0, 0.0, 1.0)
            };
        }
    }

    pub fn triangle_area(&self, idx: usize) -> f64 {
        let [a, b, c] = self.triangles[idx];
        0.5 * (self.vertices[b] - self.vertices[a])
            .cross(&(self.vertices[c] - self.vertices[a]))
            .norm()
    }

    /// Mesh with all vertices (and normals) carried through a rigid
    /// transform.
    pub fn transformed(&self, pose: &Pose) -> TriangleMesh {
        TriangleMesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| pose.transform_point(v))
                .collect(),
            triangles: self.triangles.clone(),
            vertex_normals: self.vertex_normals.iter().map(|n| pose.rotate(n)).collect(),
        }
    }
}

/// Maximum pairwise vertex distance, exact over all vertex pairs.
pub fn mesh_diameter(mesh: &TriangleMesh) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..mesh.vertices.len() {
        for j in i + 1..mesh.vertices.len() {
            best = best.max((mesh.vertices[i] - mesh.vertices[j]).norm_squared());
        }
    }
    best.sqrt()
}

/// Draw `n` surface points with area-weighted triangle selection and uniform
/// barycentric placement. Normals are interpolated from the vertex normals
/// and renormalized.
pub fn sample_mesh_points<R: Rng + ?Sized>(
    mesh: &TriangleMesh,
    n: usize,
    rng: &mut R,
) -> OrientedPointCloud {
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for idx in 0..mesh.triangles.len() {
        total += mesh.triangle_area(idx);
        cumulative.push(total);
    }

    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random_range(0.0..total);
        let tri = match cumulative.binary_search_by(|a| a.partial_cmp(&target).unwrap()) {
            Ok(i) | Err(i) => i.min(mesh.triangles.len() - 1),
        };
        let [ia, ib, ic] = mesh.triangles[tri];
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let s = r1.sqrt();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        points.push(wa * mesh.vertices[ia] + wb * mesh.vertices[ib] + wc * mesh.vertices[ic]);
        let mut normal = wa * mesh.vertex_normals[ia]
            + wb * mesh.vertex_normals[ib]
            + wc * mesh.vertex_normals[ic];
        let norm = normal.norm();
        if norm > 1e-9 {
            normal /= norm;
        } else {
            // Opposing vertex normals cancelled out; fall back to the face.
            normal = (mesh.vertices[ib] - mesh.vertices[ia])
                .cross(&(mesh.vertices[ic] - mesh.vertices[ia]))
                .normalize();
        }
        normals.push(normal);
    }
    OrientedPointCloud::new(points, normals)
}

/// Corrupt a mesh to emulate a noisy reconstruction at a given level (0-4):
/// every vertex moves along its normal by zero-mean Gaussian jitter with
/// sigma `level * 0.5 mm`, and the whole mesh picks up a rigid offset of the
/// same magnitude in a random direction (the misregistration a perturbed
/// reconstruction would carry). Level 0 returns the mesh unchanged; normals
/// are recomputed from the moved faces.
pub fn corrupt_mesh<R: Rng + ?Sized>(mesh: &TriangleMesh, level: u32, rng: &mut R) -> TriangleMesh {
    assert!(level <= 4, "noise level must be in 0..=4");
    if level == 0 {
        return mesh.clone();
    }
    let scale = level as f64 * 0.5e-3;
    let bias_dir: [f64; 3] = rand_distr::UnitSphere.sample(rng);
    let bias = scale * Vector3::from(bias_dir);
    let mut out = mesh.clone();
    for (v, n) in out.vertices.iter_mut().zip(&mesh.vertex_normals) {
        let jitter: f64 = StandardNormal.sample(rng);
        *v += bias + scale * jitter * n;
    }
    out.recompute_vertex_normals();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::{box_mesh, sphere_mesh};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_triangle() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_indices() {
        let r = TriangleMesh::new(vec![Vector3::zeros()], vec![[0, 0, 5]]);
        assert!(r.is_err());
    }

    #[test]
    fn diameter_of_unit_cube() {
        let mesh = box_mesh(1.0, 1.0, 1.0);
        assert_relative_eq!(mesh_diameter(&mesh), 3.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn diameter_of_single_vertex_is_zero() {
        let mesh = TriangleMesh {
            vertices: vec![Vector3::new(1.0, 2.0, 3.0)],
            triangles: vec![],
            vertex_normals: vec![Vector3::z()],
        };
        assert_eq!(mesh_diameter(&mesh), 0.0);
    }

    #[test]
    fn diameter_matches_brute_force_and_is_rigid_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vertices: Vec<Vector3<f64>> = (0..50)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let mut brute: f64 = 0.0;
        for i in 0..vertices.len() {
            for j in 0..vertices.len() {
                brute = brute.max((vertices[i] - vertices[j]).norm());
            }
        }
        let mesh = TriangleMesh {
            vertices,
            triangles: vec![[0, 1, 2]],
            vertex_normals: vec![Vector3::z(); 50],
        };
        assert_eq!(mesh_diameter(&mesh), brute);

        let pose = crate::se3::exp(&crate::se3::Twist::new(
            Vector3::new(0.4, -0.2, 1.0),
            Vector3::new(0.3, 0.5, -0.2),
        ));
        let moved = mesh.transformed(&pose);
        assert_relative_eq!(mesh_diameter(&moved), brute, epsilon = 1e-9);
    }

    #[test]
    fn samples_stay_inside_single_triangle() {
        let mesh = single_triangle();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let cloud = sample_mesh_points(&mesh, 500, &mut rng);
        for p in &cloud.points {
            // Inside the triangle x >= 0, y >= 0, x + y <= 1, z = 0.
            assert!(p[0] >= -1e-12 && p[1] >= -1e-12);
            assert!(p[0] + p[1] <= 1.0 + 1e-12);
            assert!(p[2].abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_area_weighted() {
        // Two triangles with area ratio 1:3; the multinomial count must
        // land within 3% of the ratio.
        let mesh = TriangleMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(10.0, 0.0, 0.0),
                Vector3::new(13.0, 0.0, 0.0),
                Vector3::new(10.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cloud = sample_mesh_points(&mesh, 10_000, &mut rng);
        let in_second = cloud.points.iter().filter(|p| p[0] >= 5.0).count();
        let fraction = in_second as f64 / 10_000.0;
        assert!((fraction - 0.75).abs() < 0.03, "fraction {fraction}");
    }

    #[test]
    fn sphere_samples_have_unit_radius_within_facet_tolerance() {
        let mesh = sphere_mesh(1.0, 32, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cloud = sample_mesh_points(&mesh, 2000, &mut rng);
        let mean: f64 =
            cloud.points.iter().map(|p| p.norm()).sum::<f64>() / cloud.points.len() as f64;
        // Chord sagitta bound for a 32-segment sphere.
        let tol = 1.0 - (std::f64::consts::PI / 16.0).cos();
        assert!((mean - 1.0).abs() < tol, "mean radius {mean}");
        for n in &cloud.normals {
            assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn corrupt_level_zero_is_identity() {
        let mesh = sphere_mesh(0.06, 16, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let out = corrupt_mesh(&mesh, 0, &mut rng);
        assert_eq!(out.vertices, mesh.vertices);
    }

    #[test]
    fn corrupt_level_four_displacement_statistics() {
        let mesh = sphere_mesh(0.06, 32, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let out = corrupt_mesh(&mesh, 4, &mut rng);
        let mean_disp: f64 = mesh
            .vertices
            .iter()
            .zip(&out.vertices)
            .map(|(a, b)| (a - b).norm())
            .sum::<f64>()
            / mesh.vertices.len() as f64;
        // Bias 2 mm with 2 mm jitter: mean displacement in [1, 4] mm.
        assert!(
            (1.0e-3..4.0e-3).contains(&mean_disp),
            "mean displacement {mean_disp}"
        );
    }

    #[test]
    fn corrupt_changes_diameter_below_one_percent() {
        let mesh = sphere_mesh(0.5, 24, 12);
        let d0 = mesh_diameter(&mesh);
        for level in 1..=4 {
            let mut rng = ChaCha8Rng::seed_from_u64(20 + level as u64);
            let d = mesh_diameter(&corrupt_mesh(&mesh, level, &mut rng));
            assert!((d - d0).abs() / d0 < 0.01, "level {level}: {d0} -> {d}");
        }
    }

    #[test]
    fn corruption_is_seed_reproducible() {
        let mesh = sphere_mesh(0.06, 16, 8);
        let a = corrupt_mesh(&mesh, 3, &mut ChaCha8Rng::seed_from_u64(42));
        let b = corrupt_mesh(&mesh, 3, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a.vertices, b.vertices);
    }
}
