//! Point location: which cell contains a query point, and where inside it.
//!
//! Ownership of points on shared boundaries is total and deterministic:
//!
//! * structured grids: a point on an interior coordinate plane belongs to the
//!   higher-index interval; the exact upper domain face belongs to the last
//!   cell;
//! * tetrahedral meshes: the lowest tet index among all tets whose
//!   barycentric coordinates are all `>= -EPS_BARY`.
//!
//! Every locator returns `None` for points outside the mesh. There is no
//! other failure mode.

mod celltree;
mod walk;

use crate::mesh::{Dataset, Mesh, RectilinearGrid, StructuredIndex, TetMesh, UniformGrid, Vec3};

pub use celltree::{CellTree, CellTreeNode, DEFAULT_LEAF_SIZE, DEFAULT_MAX_DEPTH, MAX_TREE_DEPTH};
pub use walk::{locate_walk, WalkCache, WALK_CLEAR_MARGIN, WALK_LIMIT};

/// Tolerance on normalised barycentric coordinates for tet containment.
pub const EPS_BARY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub usize);

/// A located point: its cell plus the cell-local coordinates.
///
/// For hex cells `local` is the parametric position in `[0, 1]^3`. For tets it
/// holds the first three barycentric coordinates; the fourth is
/// `1 - local[0] - local[1] - local[2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateResult {
    pub cell: CellId,
    pub local: [f64; 3],
}

impl LocateResult {
    /// All four barycentric coordinates (tet results only).
    pub fn barycentric(&self) -> [f64; 4] {
        let [a, b, c] = self.local;
        [a, b, c, 1.0 - a - b - c]
    }
}

/// Barycentric coordinates of `p` with respect to tet `points`, or `None` if
/// the tet is degenerate.
#[inline]
pub fn barycentric(points: &[Vec3; 4], p: Vec3) -> Option<[f64; 4]> {
    let e1 = points[1] - points[0];
    let e2 = points[2] - points[0];
    let e3 = points[3] - points[0];
    let r = p - points[0];
    let det = e1.dot(e2.cross(e3));
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let b1 = r.dot(e2.cross(e3)) * inv;
    let b2 = e1.dot(r.cross(e3)) * inv;
    let b3 = e1.dot(e2.cross(r)) * inv;
    Some([1.0 - b1 - b2 - b3, b1, b2, b3])
}

#[inline]
pub(crate) fn min_bary(b: &[f64; 4]) -> (usize, f64) {
    let mut idx = 0;
    for i in 1..4 {
        if b[i] < b[idx] {
            idx = i;
        }
    }
    (idx, b[idx])
}

#[inline]
pub(crate) fn tet_contains(mesh: &TetMesh, tet: usize, p: Vec3) -> Option<[f64; 4]> {
    let b = barycentric(&mesh.tet_points(tet), p)?;
    (min_bary(&b).1 >= -EPS_BARY).then_some(b)
}

#[inline]
fn tet_result(tet: usize, b: [f64; 4]) -> LocateResult {
    LocateResult {
        cell: CellId(tet),
        local: [b[0], b[1], b[2]],
    }
}

#[inline]
fn local_coord(lo: f64, hi: f64, x: f64) -> f64 {
    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
}

pub fn locate_uniform(grid: &UniformGrid, p: Vec3) -> Option<LocateResult> {
    if !grid.bounds().contains(p) {
        return None;
    }
    let cd = grid.cell_dims();
    let (o, s) = (grid.origin(), grid.spacing());
    let mut ijk = [0usize; 3];
    let mut local = [0.0; 3];
    for a in 0..3 {
        let (x, oa, sa) = (p.axis(a), o.axis(a), s.axis(a));
        let t = (x - oa) / sa;
        let n = cd[a] as i64;
        // floor(t) is off by at most one interval after rounding
        let mut i = (t.floor() as i64).clamp(0, n - 1);
        if i > 0 && x < oa + sa * i as f64 {
            i -= 1;
        } else if i + 1 < n && x >= oa + sa * (i + 1) as f64 {
            i += 1;
        }
        ijk[a] = i as usize;
        local[a] = (t - i as f64).clamp(0.0, 1.0);
    }
    Some(LocateResult {
        cell: CellId(grid.cell_index(ijk)),
        local,
    })
}

pub fn locate_rectilinear(grid: &RectilinearGrid, p: Vec3) -> Option<LocateResult> {
    if !grid.bounds().contains(p) {
        return None;
    }
    let cd = grid.cell_dims();
    let mut ijk = [0usize; 3];
    let mut local = [0.0; 3];
    for a in 0..3 {
        let c = grid.coords(a);
        let x = p.axis(a);
        // number of coordinates <= x, minus one, is the owning interval
        let i = c.partition_point(|&v| v <= x).saturating_sub(1).min(cd[a] - 1);
        ijk[a] = i;
        local[a] = local_coord(c[i], c[i + 1], x);
    }
    Some(LocateResult {
        cell: CellId(grid.cell_index(ijk)),
        local,
    })
}

/// Linear scan over every cell. Test oracle.
///
/// Structured grids return the highest-index cell whose closed box contains
/// `p` (the containing set is a product of per-axis intervals, so this is the
/// higher interval on every axis). Tet meshes return the lowest-index
/// containing tet.
pub fn brute_force_locate(mesh: &Mesh, p: Vec3) -> Option<LocateResult> {
    fn scan_structured<G: StructuredIndex>(
        g: &G,
        point: impl Fn([usize; 3]) -> Vec3,
        p: Vec3,
    ) -> Option<LocateResult> {
        (0..g.cell_count()).rev().find_map(|c| {
            let [i, j, k] = g.cell_ijk(c);
            let lo = point([i, j, k]);
            let hi = point([i + 1, j + 1, k + 1]);
            let inside = (0..3).all(|a| p.axis(a) >= lo.axis(a) && p.axis(a) <= hi.axis(a));
            inside.then(|| LocateResult {
                cell: CellId(c),
                local: [0, 1, 2].map(|a| local_coord(lo.axis(a), hi.axis(a), p.axis(a))),
            })
        })
    }
    match mesh {
        Mesh::Uniform(g) => scan_structured(g, |ijk| g.point(ijk), p),
        Mesh::Rectilinear(g) => scan_structured(g, |ijk| g.point(ijk), p),
        Mesh::Tet(m) => (0..m.tets().len())
            .find_map(|t| tet_contains(m, t, p).map(|b| tet_result(t, b))),
    }
}

/// Re-runs the containment test of `r.cell` at `p`.
pub fn containment_holds(mesh: &Mesh, r: &LocateResult, p: Vec3) -> bool {
    match mesh {
        Mesh::Uniform(_) | Mesh::Rectilinear(_) => {
            r.cell.0 < mesh.cell_count() && r.local.iter().all(|&l| (0.0..=1.0).contains(&l)) && {
                let b = match mesh {
                    Mesh::Uniform(g) => {
                        let [i, j, k] = g.cell_ijk(r.cell.0);
                        (g.point([i, j, k]), g.point([i + 1, j + 1, k + 1]))
                    }
                    Mesh::Rectilinear(g) => {
                        let [i, j, k] = g.cell_ijk(r.cell.0);
                        (g.point([i, j, k]), g.point([i + 1, j + 1, k + 1]))
                    }
                    Mesh::Tet(_) => unreachable!(),
                };
                (0..3).all(|a| p.axis(a) >= b.0.axis(a) && p.axis(a) <= b.1.axis(a))
            }
        }
        Mesh::Tet(m) => r.cell.0 < m.tets().len() && tet_contains(m, r.cell.0, p).is_some(),
    }
}

/// Locator strategy used by velocity evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocatorKind {
    Uniform,
    Rectilinear,
    CellTree,
    /// Cell tree plus a tetrahedral walk from the previously found cell.
    Walk,
}

impl std::str::FromStr for LocatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(LocatorKind::Uniform),
            "rectilinear" => Ok(LocatorKind::Rectilinear),
            "celltree" | "cell_tree" => Ok(LocatorKind::CellTree),
            "walk" | "celltree+walk" => Ok(LocatorKind::Walk),
            other => Err(format!("unknown locator `{other}`")),
        }
    }
}

/// A locator bound to one dataset: the strategy plus any acceleration
/// structure it needs. Immutable and shareable between workers.
#[derive(Debug, Clone)]
pub struct Locator {
    kind: LocatorKind,
    tree: Option<CellTree>,
}

impl Locator {
    /// The natural strategy for the dataset's mesh kind (walk for tets).
    pub fn for_dataset(dataset: &Dataset) -> Self {
        let kind = match dataset.mesh() {
            Mesh::Uniform(_) => LocatorKind::Uniform,
            Mesh::Rectilinear(_) => LocatorKind::Rectilinear,
            Mesh::Tet(_) => LocatorKind::Walk,
        };
        Locator::new(dataset, kind).expect("natural locator always matches its mesh")
    }

    pub fn new(dataset: &Dataset, kind: LocatorKind) -> crate::Result<Self> {
        let mismatch = || {
            crate::Error::InvalidMesh(format!(
                "locator {kind:?} cannot serve a {} mesh",
                dataset.kind()
            ))
        };
        let tree = match (kind, dataset.mesh()) {
            (LocatorKind::Uniform, Mesh::Uniform(_)) => None,
            (LocatorKind::Rectilinear, Mesh::Rectilinear(_)) => None,
            (LocatorKind::CellTree | LocatorKind::Walk, Mesh::Tet(m)) => {
                Some(CellTree::build(m, DEFAULT_LEAF_SIZE, DEFAULT_MAX_DEPTH)?)
            }
            _ => return Err(mismatch()),
        };
        Ok(Locator { kind, tree })
    }

    pub fn kind(&self) -> LocatorKind {
        self.kind
    }

    pub fn tree(&self) -> Option<&CellTree> {
        self.tree.as_ref()
    }

    /// Locates `p` in `mesh`. `cache` is only consulted by the walk strategy.
    #[inline]
    pub fn locate(&self, mesh: &Mesh, p: Vec3, cache: &mut WalkCache) -> Option<LocateResult> {
        match (self.kind, mesh) {
            (LocatorKind::Uniform, Mesh::Uniform(g)) => locate_uniform(g, p),
            (LocatorKind::Rectilinear, Mesh::Rectilinear(g)) => locate_rectilinear(g, p),
            (LocatorKind::CellTree, Mesh::Tet(m)) => {
                self.tree.as_ref().and_then(|t| t.locate(m, p))
            }
            (LocatorKind::Walk, Mesh::Tet(m)) => {
                self.tree.as_ref().and_then(|t| locate_walk(cache, t, m, p))
            }
            _ => None,
        }
    }
}
