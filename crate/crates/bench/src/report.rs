//! CSV report rows and the deterministic content hash binding every
//! variant of one comparison point to the same inputs.

use std::io::Write;

use icp_core::geometry::DepthImage;
use icp_core::se3::Pose;

/// Versioned schema id carried in every row.
pub const SCHEMA_ID: &str = "icp-bench-v1";

pub const CSV_HEADER: &str =
    "schema,experiment,object,variant,level,pre_vsd,post_vsd,elapsed_seconds,status,seed,scene_hash";

/// One trial outcome.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub experiment: String,
    pub object: String,
    pub variant: String,
    /// Pre-VSD bin index or noise level, depending on the experiment.
    pub level: String,
    pub pre_vsd: f64,
    pub post_vsd: f64,
    pub elapsed_seconds: f64,
    pub status: String,
    pub seed: u64,
    /// Hash of the exact inputs (depth image + initialisation) shared by
    /// every variant at this comparison point.
    pub scene_hash: String,
}

impl ReportRow {
    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{}",
            SCHEMA_ID,
            self.experiment,
            self.object,
            self.variant,
            self.level,
            self.pre_vsd,
            self.post_vsd,
            self.elapsed_seconds,
            self.status,
            self.seed,
            self.scene_hash
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, rows: &[ReportRow]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv_line())?;
    }
    Ok(())
}

/// FNV-1a accumulator over the little-endian bit patterns of f64 streams.
#[derive(Debug, Clone, Copy)]
pub struct ContentHash(u64);

impl ContentHash {
    pub fn new() -> Self {
        Self(0xcbf29ce484222325)
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write_bytes(&v.to_bits().to_le_bytes());
    }

    pub fn write_f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.write_f64(v);
        }
    }

    pub fn write_pose(&mut self, pose: &Pose) {
        for k in 0..3 {
            for j in 0..3 {
                self.write_f64(pose.rotation[(k, j)]);
            }
        }
        for k in 0..3 {
            self.write_f64(pose.translation[k]);
        }
    }

    pub fn write_depth(&mut self, depth: &DepthImage) {
        self.write_f64s(&depth.values);
    }

    pub fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

impl Default for ContentHash {
    fn default() -> Self {
        Self::new()
    }
}

/// Hash of one comparison point's shared inputs.
pub fn scene_hash(depth: &DepthImage, init: &Pose) -> String {
    let mut h = ContentHash::new();
    h.write_depth(depth);
    h.write_pose(init);
    h.hex()
}
