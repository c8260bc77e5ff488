use super::{tet_contains, tet_result, LocateResult, EPS_BARY};
use crate::error::{Error, Result};
use crate::mesh::{Bounds3, TetMesh, Vec3};

pub const DEFAULT_LEAF_SIZE: usize = 8;
pub const DEFAULT_MAX_DEPTH: usize = 32;
/// Upper bound on `max_depth`; keeps the traversal stack fixed-size.
pub const MAX_TREE_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellTreeNode {
    /// Children live at `left` and `left + 1`. Every cell of the left child
    /// has its bounding box max `<= left_max` on `axis`; every cell of the
    /// right child has its bounding box min `>= right_min`.
    Inner {
        axis: u8,
        left_max: f64,
        right_min: f64,
        left: u32,
    },
    Leaf { start: u32, count: u32 },
}

/// Bounding interval hierarchy over tet bounding boxes.
#[derive(Debug, Clone)]
pub struct CellTree {
    nodes: Vec<CellTreeNode>,
    cells: Vec<u32>,
    leaf_size: usize,
    max_depth: usize,
    bounds: Bounds3,
    /// Absolute slack on plane tests, so tets that contain `p` only within
    /// `EPS_BARY` are still visited.
    slack: f64,
}

struct Builder<'a> {
    boxes: &'a [Bounds3],
    centers: &'a [Vec3],
    nodes: Vec<CellTreeNode>,
    leaf_size: usize,
    max_depth: usize,
}

impl Builder<'_> {
    fn leaf(&mut self, node: usize, start: usize, count: usize) {
        self.nodes[node] = CellTreeNode::Leaf {
            start: start as u32,
            count: count as u32,
        };
    }

    fn split(&mut self, node: usize, cells: &mut [u32], start: usize, depth: usize) {
        let count = cells.len();
        if count <= self.leaf_size || depth >= self.max_depth {
            return self.leaf(node, start, count);
        }
        let (lo, hi) = cells.iter().fold(
            (Vec3::splat(f64::INFINITY), Vec3::splat(f64::NEG_INFINITY)),
            |(lo, hi), &c| (lo.min(self.centers[c as usize]), hi.max(self.centers[c as usize])),
        );
        let ext = hi - lo;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        // ties on the axis are broken by cell id, so coincident centres
        // still halve the node
        let mid = count / 2;
        let centers = self.centers;
        cells.select_nth_unstable_by(mid, |&a, &b| {
            centers[a as usize]
                .axis(axis)
                .total_cmp(&centers[b as usize].axis(axis))
                .then(a.cmp(&b))
        });
        let (left, right) = cells.split_at_mut(mid);
        let left_max = left
            .iter()
            .map(|&c| self.boxes[c as usize].max.axis(axis))
            .fold(f64::NEG_INFINITY, f64::max);
        let right_min = right
            .iter()
            .map(|&c| self.boxes[c as usize].min.axis(axis))
            .fold(f64::INFINITY, f64::min);
        let child = self.nodes.len();
        self.nodes.push(CellTreeNode::Leaf { start: 0, count: 0 });
        self.nodes.push(CellTreeNode::Leaf { start: 0, count: 0 });
        self.nodes[node] = CellTreeNode::Inner {
            axis: axis as u8,
            left_max,
            right_min,
            left: child as u32,
        };
        self.split(child, left, start, depth + 1);
        self.split(child + 1, right, start + mid, depth + 1);
    }
}

impl CellTree {
    /// Splits at the median of cell-box centres along the longest axis of
    /// the centres' extent, until nodes hold `<= leaf_size` cells or reach
    /// `max_depth`.
    pub fn build(mesh: &TetMesh, leaf_size: usize, max_depth: usize) -> Result<Self> {
        if mesh.tets().is_empty() {
            return Err(Error::InvalidMesh("cannot build a cell tree on an empty mesh".into()));
        }
        if leaf_size == 0 || max_depth == 0 || max_depth > MAX_TREE_DEPTH {
            return Err(Error::InvalidMesh(format!(
                "cell tree needs leaf_size >= 1 and 1 <= max_depth <= {MAX_TREE_DEPTH}"
            )));
        }
        let n = mesh.tets().len();
        let boxes: Vec<Bounds3> = (0..n).map(|t| mesh.tet_bounds(t)).collect();
        let centers: Vec<Vec3> = boxes.iter().map(Bounds3::center).collect();
        let mut cells: Vec<u32> = (0..n as u32).collect();
        let mut b = Builder {
            boxes: &boxes,
            centers: &centers,
            nodes: vec![CellTreeNode::Leaf { start: 0, count: 0 }],
            leaf_size,
            max_depth,
        };
        b.split(0, &mut cells, 0, 0);
        let bounds = mesh.bounds();
        Ok(CellTree {
            nodes: b.nodes,
            cells,
            leaf_size,
            max_depth,
            bounds,
            slack: 10.0 * EPS_BARY * bounds.diagonal(),
        })
    }

    pub fn nodes(&self) -> &[CellTreeNode] {
        &self.nodes
    }

    /// Cell ids in leaf order.
    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Leaves as `(depth, cell ids)`.
    pub fn leaves(&self) -> Vec<(usize, &[u32])> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            match self.nodes[node] {
                CellTreeNode::Leaf { start, count } => {
                    out.push((depth, &self.cells[start as usize..(start + count) as usize]))
                }
                CellTreeNode::Inner { left, .. } => {
                    stack.push((left as usize + 1, depth + 1));
                    stack.push((left as usize, depth + 1));
                }
            }
        }
        out
    }

    /// Lowest-index tet containing `p`, or `None` outside the mesh.
    pub fn locate(&self, mesh: &TetMesh, p: Vec3) -> Option<LocateResult> {
        let s = self.slack;
        let b = &self.bounds;
        if !(p.x >= b.min.x - s
            && p.x <= b.max.x + s
            && p.y >= b.min.y - s
            && p.y <= b.max.y + s
            && p.z >= b.min.z - s
            && p.z <= b.max.z + s)
        {
            return None;
        }
        let mut best: Option<(u32, [f64; 4])> = None;
        let mut stack = [0u32; MAX_TREE_DEPTH + 2];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            match self.nodes[stack[top] as usize] {
                CellTreeNode::Inner {
                    axis,
                    left_max,
                    right_min,
                    left,
                } => {
                    let x = p.axis(axis as usize);
                    if x >= right_min - s {
                        stack[top] = left + 1;
                        top += 1;
                    }
                    if x <= left_max + s {
                        stack[top] = left;
                        top += 1;
                    }
                }
                CellTreeNode::Leaf { start, count } => {
                    for &c in &self.cells[start as usize..(start + count) as usize] {
                        if best.is_some_and(|(b, _)| b <= c) {
                            continue;
                        }
                        if let Some(bary) = tet_contains(mesh, c as usize, p) {
                            best = Some((c, bary));
                        }
                    }
                }
            }
        }
        best.map(|(c, b)| tet_result(c as usize, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locate::brute_force_locate;
    use crate::mesh::{build_uniform, tetrahedralize, AnalyticField, Mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tet_grid(n: usize) -> crate::Dataset {
        let ds = build_uniform(
            Vec3::ZERO,
            Vec3::splat(1.0 / (n - 1) as f64),
            [n, n, n],
            &AnalyticField::ZERO,
        )
        .unwrap();
        tetrahedralize(&ds).unwrap()
    }

    fn mesh(ds: &crate::Dataset) -> &TetMesh {
        match ds.mesh() {
            Mesh::Tet(m) => m,
            _ => unreachable!(),
        }
    }

    fn check_invariants(tree: &CellTree, m: &TetMesh) {
        let mut seen: Vec<u32> = tree.leaves().iter().flat_map(|(_, c)| c.iter().copied()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..m.tets().len() as u32).collect::<Vec<_>>());

        fn collect(tree: &CellTree, node: usize, out: &mut Vec<u32>) {
            match tree.nodes()[node] {
                CellTreeNode::Leaf { start, count } => {
                    out.extend_from_slice(&tree.cells()[start as usize..(start + count) as usize])
                }
                CellTreeNode::Inner { left, .. } => {
                    collect(tree, left as usize, out);
                    collect(tree, left as usize + 1, out);
                }
            }
        }
        for node in tree.nodes() {
            if let CellTreeNode::Inner {
                axis,
                left_max,
                right_min,
                left,
            } = *node
            {
                let (mut l, mut r) = (Vec::new(), Vec::new());
                collect(tree, left as usize, &mut l);
                collect(tree, left as usize + 1, &mut r);
                for c in l {
                    let b = m.tet_bounds(c as usize);
                    assert!(b.min.axis(axis as usize) <= left_max);
                    assert!(b.max.axis(axis as usize) <= left_max);
                }
                for c in r {
                    let b = m.tet_bounds(c as usize);
                    assert!(b.max.axis(axis as usize) >= right_min);
                    assert!(b.min.axis(axis as usize) >= right_min);
                }
            }
        }
    }

    #[test]
    fn small_mesh_single_leaf() {
        let ds = tet_grid(2);
        let tree = CellTree::build(mesh(&ds), 8, 32).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].1.len(), 6);
    }

    #[test]
    fn leaves_respect_leaf_size() {
        let ds = tet_grid(3);
        let m = mesh(&ds);
        let tree = CellTree::build(m, 4, 32).unwrap();
        for (depth, cells) in tree.leaves() {
            assert!(cells.len() <= 4 || depth == 32);
        }
        check_invariants(&tree, m);

        let shallow = CellTree::build(m, 1, 2).unwrap();
        assert!(shallow.leaves().iter().all(|(d, _)| *d <= 2));
        check_invariants(&shallow, m);
    }

    #[test]
    fn build_rejects_bad_parameters() {
        let ds = tet_grid(2);
        assert!(CellTree::build(mesh(&ds), 0, 4).is_err());
        assert!(CellTree::build(mesh(&ds), 4, 0).is_err());
        assert!(CellTree::build(mesh(&ds), 4, MAX_TREE_DEPTH + 1).is_err());
    }

    #[test]
    fn centroids_locate_to_own_tet() {
        let ds = tet_grid(5);
        let m = mesh(&ds);
        let tree = CellTree::build(m, 8, 32).unwrap();
        check_invariants(&tree, m);
        for t in 0..m.tets().len() {
            let r = tree.locate(m, m.centroid(t)).unwrap();
            assert_eq!(r.cell.0, t);
        }
    }

    #[test]
    fn outside_hull_is_none() {
        let ds = tet_grid(4);
        let m = mesh(&ds);
        let tree = CellTree::build(m, 8, 32).unwrap();
        assert!(tree.locate(m, Vec3::new(1.01, 0.5, 0.5)).is_none());
        assert!(tree.locate(m, Vec3::new(0.5, -0.2, 0.5)).is_none());
    }

    #[test]
    fn agrees_with_brute_force_including_vertices() {
        let ds = tet_grid(6);
        let m = mesh(&ds);
        let tree = CellTree::build(m, 3, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts: Vec<Vec3> = (0..500)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        pts.extend(m.vertices().iter().copied());
        for p in pts {
            let a = tree.locate(m, p).map(|r| r.cell);
            let b = brute_force_locate(ds.mesh(), p).map(|r| r.cell);
            assert_eq!(a, b, "at {p:?}");
        }
    }
}
