//! Point sets and the uniform hierarchical box tree.
//!
//! Boxes carry heap-style ids: the root is 1 and the children of box `b` are
//! numbered contiguously, so a level is a contiguous id range. Geometric
//! bisection (not median splitting) is used throughout; empty boxes are kept
//! so that child indexing stays regular, and are skipped by the traversal
//! helpers. Same-level boxes that share an edge or corner are neighbors;
//! everything else on the level is far field.

use crate::error::{Error, Result};
use crate::rng::{uniform, STREAM_GEOMETRY};

/// A set of points in 1, 2, or 3 dimensions. Coordinates are stored
/// point-major: point `i` occupies `coords[i*dim .. (i+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    n: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<PointSet> {
        assert!((1..=3).contains(&dim), "dim must be 1, 2, or 3");
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::EmptyPointSet);
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::Config("non-finite point coordinate".into()));
        }
        let n = coords.len() / dim;
        Ok(PointSet { dim, n, coords })
    }

    pub fn from_1d(xs: &[f64]) -> Result<PointSet> {
        PointSet::new(1, xs.to_vec())
    }

    /// Uniform random points in the unit cube, seeded and reproducible.
    pub fn random_unit(dim: usize, n: usize, seed: u64) -> Result<PointSet> {
        let coords = (0..n * dim)
            .map(|k| uniform(seed, STREAM_GEOMETRY, k as u64))
            .collect();
        PointSet::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Euclidean distance between points `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Bounding box as (lower corner, upper corner), padded per dimension.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for i in 0..self.n {
            for (d, &c) in self.point(i).iter().enumerate() {
                lo[d] = lo[d].min(c);
                hi[d] = hi[d].max(c);
            }
        }
        for d in self.dim..3 {
            lo[d] = 0.0;
            hi[d] = 0.0;
        }
        (lo, hi)
    }
}

/// One node of the box tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeBox {
    pub id: usize,
    pub level: usize,
    /// Per-dimension grid coordinate at this level (cells of side 2h).
    pub grid: [usize; 3],
    pub center: [f64; 3],
    /// Half-width, common to all axes (isotropic boxes).
    pub half: f64,
    pub point_indices: Vec<usize>,
    /// Indices still participating in the factorization; shrinks to the
    /// skeleton when the box is processed, set on parents by merging. The
    /// tree is immutable after construction except for this field, which
    /// only the factorization driver writes.
    pub active: Vec<usize>,
    pub processed: bool,
}

impl TreeBox {
    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }
}

/// Uniform spatial partition of a point set into 2^dim-ary boxes of common
/// depth, with neighbor/far-field classification by grid adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxTree {
    dim: usize,
    leaf_size: usize,
    depth: usize,
    n_points: usize,
    boxes: Vec<TreeBox>,
}

/// First id on level `l` for 2^dim-ary heap numbering (root = 1):
/// `1 + base^0 + ... + base^(l-1)`.
fn level_first_id(dim: usize, l: usize) -> usize {
    let base = 1usize << dim;
    let mut sum = 0;
    let mut p = 1;
    for _ in 0..l {
        sum += p;
        p *= base;
    }
    sum + 1
}

/// Interleave per-dimension grid bits into a within-level index.
fn morton(dim: usize, grid: &[usize; 3], level: usize) -> usize {
    let mut idx = 0usize;
    for bit in (0..level).rev() {
        for d in (0..dim).rev() {
            idx = (idx << 1) | ((grid[d] >> bit) & 1);
        }
    }
    idx
}

impl BoxTree {
    /// Build a uniform tree over `points` with at most `m` points per leaf.
    pub fn build(points: &PointSet, m: usize) -> Result<BoxTree> {
        assert!(m >= 1, "leaf capacity must be at least 1");
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let dim = points.dim();
        let n = points.len();
        let (lo, hi) = points.bounds();
        let mut half = 0.0f64;
        let mut center = [0.0f64; 3];
        for d in 0..dim {
            half = half.max((hi[d] - lo[d]) / 2.0);
            center[d] = (lo[d] + hi[d]) / 2.0;
        }
        if half == 0.0 {
            half = 0.5; // all points coincide in extent; any positive size works
        }

        // Smallest common depth with leaf occupancy <= m.
        let cell_of = |i: usize, depth: usize| -> [usize; 3] {
            let cells = 1usize << depth;
            let side = 2.0 * half / cells as f64;
            let mut g = [0usize; 3];
            for d in 0..dim {
                let x = points.point(i)[d] - (center[d] - half);
                let c = (x / side).floor() as isize;
                g[d] = c.clamp(0, cells as isize - 1) as usize;
            }
            g
        };
        let mut depth = 0usize;
        loop {
            let cells = 1usize << depth;
            let mut occupancy = std::collections::HashMap::new();
            let mut worst = 0usize;
            for i in 0..n {
                let g = cell_of(i, depth);
                let key = (g[0] * cells + g[1]) * cells + g[2];
                let c = occupancy.entry(key).or_insert(0usize);
                *c += 1;
                worst = worst.max(*c);
            }
            if worst <= m || depth >= 30 {
                break;
            }
            depth += 1;
        }

        // Allocate every box on every level.
        let total: usize = level_first_id(dim, depth + 1) - 1;
        let mut boxes = Vec::with_capacity(total);
        for l in 0..=depth {
            let cells = 1usize << l;
            let side_half = half / cells as f64;
            let count = 1usize << (dim * l);
            let first = level_first_id(dim, l);
            for idx in 0..count {
                // Decode morton index back to grid coordinates.
                let mut g = [0usize; 3];
                for bit in 0..l {
                    for d in 0..dim {
                        let shift = bit * dim + d;
                        g[d] |= ((idx >> shift) & 1) << bit;
                    }
                }
                let mut c = [0.0f64; 3];
                for d in 0..dim {
                    c[d] = (center[d] - half) + (2 * g[d] + 1) as f64 * side_half;
                }
                boxes.push(TreeBox {
                    id: first + idx,
                    level: l,
                    grid: g,
                    center: c,
                    half: side_half,
                    point_indices: Vec::new(),
                    active: Vec::new(),
                    processed: false,
                });
            }
        }

        let mut tree = BoxTree {
            dim,
            leaf_size: m,
            depth,
            n_points: n,
            boxes,
        };

        // Bucket points into leaves (ascending point index), then push
        // upward so every level partitions the point set in child order.
        for i in 0..n {
            let g = cell_of(i, depth);
            let id = level_first_id(dim, depth) + morton(dim, &g, depth);
            tree.box_mut(id).point_indices.push(i);
        }
        for l in (0..depth).rev() {
            for id in tree.level_id_range(l) {
                let mut pts = Vec::new();
                for c in tree.child_ids(id) {
                    pts.extend_from_slice(&tree.box_ref(c).point_indices);
                }
                tree.box_mut(id).point_indices = pts;
            }
        }
        // Leaves start active; empty boxes count as already processed.
        let leaf_range = tree.level_id_range(depth);
        for id in leaf_range {
            let b = tree.box_mut(id);
            b.active = b.point_indices.clone();
        }
        for b in &mut tree.boxes {
            if b.point_indices.is_empty() {
                b.processed = true;
            }
        }
        Ok(tree)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn box_ref(&self, id: usize) -> &TreeBox {
        &self.boxes[id - 1]
    }

    fn box_mut(&mut self, id: usize) -> &mut TreeBox {
        &mut self.boxes[id - 1]
    }

    /// All ids on a level, empty boxes included.
    pub fn level_id_range(&self, level: usize) -> std::ops::Range<usize> {
        level_first_id(self.dim, level)..level_first_id(self.dim, level + 1)
    }

    pub fn child_ids(&self, id: usize) -> std::ops::Range<usize> {
        let base = 1usize << self.dim;
        let first = base * (id - 1) + 2;
        first..first + base
    }

    pub fn parent_id(&self, id: usize) -> usize {
        (id - 2) / (1 << self.dim) + 1
    }

    /// Nonempty boxes on a level, ascending id.
    pub fn level_order(&self, level: usize) -> Vec<usize> {
        self.level_id_range(level)
            .filter(|&id| !self.box_ref(id).is_empty())
            .collect()
    }

    /// Same-level nonempty boxes whose closed boxes intersect `b`'s,
    /// including `b` itself. On the uniform grid this is exactly Chebyshev
    /// grid distance <= 1 (the 1e-12 geometric tolerance never flips a
    /// classification for exact bisection).
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        let b = self.box_ref(id);
        self.level_id_range(b.level)
            .filter(|&other| {
                let o = self.box_ref(other);
                !o.is_empty()
                    && (0..self.dim).all(|d| {
                        (o.grid[d] as isize - b.grid[d] as isize).abs() <= 1
                    })
            })
            .collect()
    }

    /// Same-level nonempty boxes well separated from `b`.
    pub fn far_field(&self, id: usize) -> Vec<usize> {
        let b = self.box_ref(id);
        self.level_id_range(b.level)
            .filter(|&other| {
                let o = self.box_ref(other);
                !o.is_empty()
                    && (0..self.dim).any(|d| {
                        (o.grid[d] as isize - b.grid[d] as isize).abs() > 1
                    })
            })
            .collect()
    }

    /// Same-level nonempty boxes at Chebyshev grid distance exactly 2:
    /// the ring whose interactions may have been modified by neighbor
    /// eliminations.
    pub fn second_ring(&self, id: usize) -> Vec<usize> {
        let b = self.box_ref(id);
        self.level_id_range(b.level)
            .filter(|&other| {
                let o = self.box_ref(other);
                if o.is_empty() {
                    return false;
                }
                let dist = (0..self.dim)
                    .map(|d| (o.grid[d] as isize - b.grid[d] as isize).unsigned_abs())
                    .max()
                    .unwrap_or(0);
                dist == 2
            })
            .collect()
    }

    pub fn active(&self, id: usize) -> &[usize] {
        &self.box_ref(id).active
    }

    pub fn set_active(&mut self, id: usize, active: Vec<usize>) {
        self.box_mut(id).active = active;
    }

    pub fn mark_processed(&mut self, id: usize) {
        self.box_mut(id).processed = true;
    }

    /// Concatenated active indices of the (processed) children, in child
    /// order; stored as the parent's active set and returned.
    pub fn merged_active_indices(&mut self, parent: usize) -> Result<&[usize]> {
        let children: Vec<usize> = self.child_ids(parent).collect();
        for &c in &children {
            if !self.box_ref(c).processed {
                return Err(Error::Config(format!(
                    "child box {c} of {parent} has not been processed"
                )));
            }
        }
        let mut merged = Vec::new();
        for &c in &children {
            merged.extend_from_slice(&self.box_ref(c).active);
        }
        self.box_mut(parent).active = merged;
        Ok(&self.box_mut(parent).active[..])
    }

    /// Active indices of the neighbors of `b`, excluding `b` itself,
    /// ascending box id.
    pub fn near_active(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for nb in self.neighbors(id) {
            if nb != id {
                out.extend_from_slice(self.active(nb));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equispaced_1d(n: usize) -> PointSet {
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        PointSet::from_1d(&xs).unwrap()
    }

    #[test]
    fn binary_tree_of_eight_points() {
        let pts = equispaced_1d(8);
        let tree = BoxTree::build(&pts, 1).unwrap();
        assert_eq!(tree.depth(), 3);
        assert_eq!(tree.level_order(3), vec![8, 9, 10, 11, 12, 13, 14, 15]);
        for (k, id) in tree.level_order(3).into_iter().enumerate() {
            assert_eq!(tree.box_ref(id).point_indices, vec![k]);
        }
        assert_eq!(tree.level_order(2), vec![4, 5, 6, 7]);
        assert_eq!(tree.neighbors(9), vec![8, 9, 10]);
        assert_eq!(tree.far_field(9), vec![11, 12, 13, 14, 15]);
        assert_eq!(tree.neighbors(1), vec![1]);
        assert!(tree.far_field(1).is_empty());
    }

    #[test]
    fn single_point_tree_is_root_only() {
        let pts = PointSet::from_1d(&[0.3]).unwrap();
        let tree = BoxTree::build(&pts, 4).unwrap();
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.level_order(0), vec![1]);
    }

    #[test]
    fn empty_point_set_is_an_error() {
        assert!(matches!(
            PointSet::new(1, vec![]),
            Err(Error::EmptyPointSet)
        ));
    }

    #[test]
    fn uniform_2d_occupancy_and_counts() {
        let pts = PointSet::random_unit(2, 4096, 11).unwrap();
        let tree = BoxTree::build(&pts, 64).unwrap();
        let l = tree.depth();
        // Brute-force occupancy check.
        let mut worst = 0;
        for id in tree.level_id_range(l) {
            worst = worst.max(tree.box_ref(id).point_indices.len());
        }
        assert!(worst <= 64);
        for lev in 0..=l {
            assert_eq!(tree.level_id_range(lev).len(), 4usize.pow(lev as u32));
        }
        // L within one of log_4(N/m).
        let ideal = (4096f64 / 64.0).log(4.0);
        assert!((l as f64 - ideal).abs() <= 1.0 + 1e-9, "depth {l} vs {ideal}");
    }

    #[test]
    fn levels_partition_the_points() {
        let pts = PointSet::random_unit(2, 500, 3).unwrap();
        let tree = BoxTree::build(&pts, 16).unwrap();
        for lev in 0..=tree.depth() {
            let mut seen = vec![false; 500];
            for id in tree.level_id_range(lev) {
                for &i in &tree.box_ref(id).point_indices {
                    assert!(!seen[i], "duplicate point in level {lev}");
                    seen[i] = true;
                }
            }
            assert!(seen.iter().all(|&s| s), "level {lev} misses points");
        }
    }

    #[test]
    fn neighbor_symmetry_and_bound() {
        let pts = PointSet::random_unit(2, 700, 5).unwrap();
        let tree = BoxTree::build(&pts, 20).unwrap();
        for lev in 0..=tree.depth() {
            for id in tree.level_order(lev) {
                let nb = tree.neighbors(id);
                assert!(nb.contains(&id));
                assert!(nb.len() <= 9, "2d neighbor bound");
                for &o in &nb {
                    assert!(tree.neighbors(o).contains(&id), "asymmetric {id} {o}");
                }
                let ff = tree.far_field(id);
                let total = nb.len() + ff.len();
                assert_eq!(total, tree.level_order(lev).len());
                assert!(nb.iter().all(|x| !ff.contains(x)));
            }
        }
    }

    #[test]
    fn interior_2d_box_has_nine_neighbors() {
        // Fully populated depth-3 quadtree: 64 boxes on level 3.
        let mut coords = Vec::new();
        for i in 0..32 {
            for j in 0..32 {
                coords.push((i as f64 + 0.5) / 32.0);
                coords.push((j as f64 + 0.5) / 32.0);
            }
        }
        let pts = PointSet::new(2, coords).unwrap();
        let tree = BoxTree::build(&pts, 16).unwrap();
        assert_eq!(tree.depth(), 3);
        let interior = tree
            .level_order(3)
            .into_iter()
            .find(|&id| {
                let g = tree.box_ref(id).grid;
                g[0] > 0 && g[0] < 7 && g[1] > 0 && g[1] < 7
            })
            .unwrap();
        assert_eq!(tree.neighbors(interior).len(), 9);
    }

    #[test]
    fn second_ring_is_grid_distance_two() {
        let pts = equispaced_1d(8);
        let tree = BoxTree::build(&pts, 1).unwrap();
        assert_eq!(tree.second_ring(9), vec![11]);
        assert_eq!(tree.second_ring(12), vec![10, 14]);
        assert_eq!(tree.second_ring(8), vec![10]);
        // Fully populated 2d level: an interior box sees 5^2 - 3^2 boxes.
        let mut coords = Vec::new();
        for i in 0..32 {
            for j in 0..32 {
                coords.push((i as f64 + 0.5) / 32.0);
                coords.push((j as f64 + 0.5) / 32.0);
            }
        }
        let tree2 = BoxTree::build(&PointSet::new(2, coords).unwrap(), 16).unwrap();
        let interior = tree2
            .level_order(3)
            .into_iter()
            .find(|&id| {
                let g = tree2.box_ref(id).grid;
                (2..6).contains(&g[0]) && (2..6).contains(&g[1])
            })
            .unwrap();
        assert_eq!(tree2.second_ring(interior).len(), 16);
    }

    #[test]
    fn determinism() {
        let pts = PointSet::random_unit(2, 300, 9).unwrap();
        let t1 = BoxTree::build(&pts, 10).unwrap();
        let t2 = BoxTree::build(&pts, 10).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn merge_concatenates_children() {
        let pts = equispaced_1d(16);
        let mut tree = BoxTree::build(&pts, 2).unwrap();
        let leaf_level = tree.depth();
        let ids = tree.level_order(leaf_level);
        // Fake processing: shrink each leaf's active set to its first point.
        for &id in &ids {
            let first = tree.active(id)[0];
            tree.set_active(id, vec![first]);
            tree.mark_processed(id);
        }
        let parents = tree.level_order(leaf_level - 1);
        let p0 = parents[0];
        let merged = tree.merged_active_indices(p0).unwrap().to_vec();
        assert_eq!(merged.len(), 2);
        // Brute-force: merged is the union of child actives, order preserved.
        let mut expect = Vec::new();
        for c in tree.child_ids(p0) {
            expect.extend_from_slice(tree.active(c));
        }
        assert_eq!(merged, expect);
    }

    #[test]
    fn two_dimensional_merge_is_union_in_child_order() {
        let pts = PointSet::random_unit(2, 256, 17).unwrap();
        let mut tree = BoxTree::build(&pts, 16).unwrap();
        let leaf_level = tree.depth();
        for &id in &tree.level_order(leaf_level) {
            let keep: Vec<usize> = tree.active(id).iter().copied().step_by(2).collect();
            tree.set_active(id, keep);
            tree.mark_processed(id);
        }
        for parent in tree.level_order(leaf_level - 1) {
            let merged = tree.merged_active_indices(parent).unwrap().to_vec();
            // Union check against the children, brute force.
            let mut expect = Vec::new();
            for c in tree.child_ids(parent) {
                expect.extend_from_slice(tree.active(c));
            }
            assert_eq!(merged, expect);
            let set: std::collections::BTreeSet<usize> = merged.iter().copied().collect();
            assert_eq!(set.len(), merged.len(), "duplicates after merge");
        }
    }

    #[test]
    fn level_order_omits_empty_boxes() {
        // Clustered points leave interior cells empty.
        let mut xs = Vec::new();
        for i in 0..12 {
            xs.push(0.0 + 0.02 * i as f64);
            xs.push(1.0 - 0.02 * i as f64);
        }
        let pts = PointSet::from_1d(&xs).unwrap();
        let tree = BoxTree::build(&pts, 4).unwrap();
        let level = tree.depth();
        assert!(level >= 2);
        let order = tree.level_order(level);
        assert!(order.len() < tree.level_id_range(level).len());
        for &id in &order {
            assert!(!tree.box_ref(id).is_empty());
        }
    }

    #[test]
    fn merge_before_processing_is_an_error() {
        let pts = equispaced_1d(16);
        let mut tree = BoxTree::build(&pts, 2).unwrap();
        let parent = tree.level_order(tree.depth() - 1)[0];
        assert!(tree.merged_active_indices(parent).is_err());
    }

    #[test]
    fn empty_child_skeleton_is_skipped_in_merge() {
        let pts = equispaced_1d(8);
        let mut tree = BoxTree::build(&pts, 1).unwrap();
        for &id in &tree.level_order(3) {
            tree.set_active(id, if id == 8 { vec![] } else { vec![id - 8] });
            tree.mark_processed(id);
        }
        let merged = tree.merged_active_indices(4).unwrap().to_vec();
        assert_eq!(merged, vec![1]); // box 8 contributes nothing
    }
}
