//! Synthetic-data machinery: meshes, cameras, depth rendering,
//! back-projection, normal estimation, point sampling, and noise models.

mod camera;
mod cloud;
mod io;
mod maps;
mod mesh;
mod noise;
mod primitives;
mod render;

pub use camera::CameraIntrinsics;
pub use cloud::OrientedPointCloud;
pub use io::{load_mesh, parse_obj, parse_off};
pub use maps::{backproject, compute_normals, DepthImage, NormalMap, SegmentationMask, VertexMap};
pub use mesh::{corrupt_mesh, mesh_diameter, sample_mesh_points, TriangleMesh};
pub use noise::{add_depth_noise, DepthNoiseModel};
pub use primitives::{box_mesh, builtin_mesh, cylinder_mesh, plate_mesh, sphere_mesh};
pub use render::render_depth;
