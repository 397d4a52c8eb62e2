use nalgebra::Vector3;

/// Squared Euclidean distance. Shared by the tree search and any brute-force
/// verification so both paths round identically.
#[inline]
pub fn dist2(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

const LEAF_SIZE: usize = 16;

enum Node {
    Split {
        axis: usize,
        value: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        start: u32,
        end: u32,
    },
}

/// Exact nearest-neighbour index over a fixed point set.
///
/// Bucketed kd-tree splitting on the widest axis at the median; image-grid
/// clouds (vertex maps) stay balanced this way. Ties in distance resolve to
/// the lowest point index, matching a first-wins linear scan. Immutable
/// after construction.
pub struct SpatialIndex {
    nodes: Vec<Node>,
    /// Reordered `(point, original index)` entries; leaves own ranges.
    entries: Vec<(Vector3<f64>, u32)>,
}

impl SpatialIndex {
    pub fn build(points: &[Vector3<f64>]) -> Self {
        let mut entries: Vec<(Vector3<f64>, u32)> = points
            .iter()
            .copied()
            .zip(0..points.len() as u32)
            .collect();
        let mut nodes = Vec::new();
        if !entries.is_empty() {
            let len = entries.len();
            Self::build_rec(&mut entries, 0, len, &mut nodes);
        }
        Self { nodes, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Build the subtree over `entries[start..end]`; returns its node id.
    fn build_rec(
        entries: &mut [(Vector3<f64>, u32)],
        start: usize,
        end: usize,
        nodes: &mut Vec<Node>,
    ) -> u32 {
        let id = nodes.len() as u32;
        if end - start <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                start: start as u32,
                end: end as u32,
            });
            return id;
        }
        let slice = &mut entries[start..end];
        let mut lo = slice[0].0;
        let mut hi = slice[0].0;
        for (p, _) in slice.iter() {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let spread = hi - lo;
        let axis = (0..3)
            .max_by(|&a, &b| spread[a].partial_cmp(&spread[b]).unwrap())
            .unwrap();
        if spread[axis] == 0.0 {
            // All points coincide; no split can make progress.
            nodes.push(Node::Leaf {
                start: start as u32,
                end: end as u32,
            });
            return id;
        }
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |a, b| a.0[axis].partial_cmp(&b.0[axis]).unwrap());
        let value = slice[mid].0[axis];

        nodes.push(Node::Leaf { start: 0, end: 0 }); // placeholder
        let left = Self::build_rec(entries, start, start + mid, nodes);
        let right = Self::build_rec(entries, start + mid, end, nodes);
        nodes[id as usize] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Exact nearest neighbour of `query`: `(point index, squared distance)`.
    pub fn nearest(&self, query: &Vector3<f64>) -> Option<(usize, f64)> {
        self.search(query, f64::INFINITY)
    }

    /// Exact nearest neighbour among points within `radius` (inclusive) of
    /// `query`; `None` when no point lies that close. Far queries prune on
    /// the radius instead of walking the whole structure.
    pub fn nearest_within(&self, query: &Vector3<f64>, radius: f64) -> Option<(usize, f64)> {
        self.search(query, radius * radius)
    }

    fn search(&self, query: &Vector3<f64>, limit2: f64) -> Option<(usize, f64)> {
        if self.entries.is_empty() {
            return None;
        }
        // The sentinel index makes a hit at exactly the limit acceptable
        // (the tie-break branch fires), so `limit2` is inclusive.
        let mut best = (u32::MAX, limit2);
        // Exact box-distance pruning: each pending subtree carries its
        // accumulated squared distance plus the per-axis offsets behind it.
        let mut stack: Vec<(u32, f64, [f64; 3])> = vec![(0, 0.0, [0.0; 3])];
        while let Some((node_id, bound2, offsets)) = stack.pop() {
            if bound2 > best.1 {
                continue;
            }
            match &self.nodes[node_id as usize] {
                Node::Leaf { start, end } => {
                    for (p, idx) in &self.entries[*start as usize..*end as usize] {
                        let d = dist2(query, p);
                        if d < best.1 || (d == best.1 && *idx < best.0) {
                            best = (*idx, d);
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let diff = query[*axis] - value;
                    let (near, far) = if diff < 0.0 {
                        (*left, *right)
                    } else {
                        (*right, *left)
                    };
                    let mut far_offsets = offsets;
                    far_offsets[*axis] = diff;
                    let far_bound2 = bound2 - offsets[*axis] * offsets[*axis] + diff * diff;
                    stack.push((far, far_bound2, far_offsets));
                    stack.push((near, bound2, offsets));
                }
            }
        }
        if best.0 == u32::MAX {
            return None;
        }
        Some((best.0 as usize, best.1))
    }
}

/// Linear-scan reference with first-wins tie-breaking.
pub fn brute_force_nearest(points: &[Vector3<f64>], query: &Vector3<f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = dist2(query, p);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let points = random_points(200, &mut rng);
            let index = SpatialIndex::build(&points);
            for _ in 0..20 {
                let q = Vector3::new(
                    rng.random_range(-1.2..1.2),
                    rng.random_range(-1.2..1.2),
                    rng.random_range(-1.2..1.2),
                );
                assert_eq!(index.nearest(&q), brute_force_nearest(&points, &q));
            }
        }
    }

    #[test]
    fn matches_brute_force_on_grid_clouds() {
        // Image-organized clouds have lots of identical coordinates along
        // two axes; the degenerate-split path must stay exact.
        let mut points = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                points.push(Vector3::new(i as f64 * 0.01, j as f64 * 0.01, 1.0));
            }
        }
        let index = SpatialIndex::build(&points);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let q = Vector3::new(
                rng.random_range(-0.05..0.45),
                rng.random_range(-0.05..0.45),
                rng.random_range(0.9..1.1),
            );
            assert_eq!(index.nearest(&q), brute_force_nearest(&points, &q));
        }
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let points = vec![Vector3::new(1.0, 0.0, 0.0), Vector3::new(-1.0, 0.0, 0.0)];
        let index = SpatialIndex::build(&points);
        let (i, _) = index.nearest(&Vector3::new(0.0, 0.3, 0.0)).unwrap();
        assert_eq!(i, 0);

        let dup = vec![Vector3::new(0.5, 0.5, 0.5); 40];
        let index = SpatialIndex::build(&dup);
        let (i, d) = index.nearest(&Vector3::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(i, 0);
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn empty_index_returns_none() {
        let index = SpatialIndex::build(&[]);
        assert!(index.nearest(&Vector3::zeros()).is_none());
        assert!(index.is_empty());
    }

    #[test]
    fn single_point() {
        let index = SpatialIndex::build(&[Vector3::new(1.0, 2.0, 3.0)]);
        let (i, d) = index.nearest(&Vector3::new(1.0, 2.0, 4.0)).unwrap();
        assert_eq!(i, 0);
        assert!((d - 1.0).abs() < 1e-15);
    }
}
