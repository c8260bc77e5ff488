use super::{barycentric, min_bary, tet_result, CellId, CellTree, LocateResult, EPS_BARY};
use crate::mesh::{TetMesh, Vec3, BOUNDARY};

/// Hops before the walk gives up and asks the tree.
pub const WALK_LIMIT: usize = 128;

/// A walk hit is accepted directly only when every barycentric coordinate
/// exceeds this margin. Closer to a face, another tet may also contain the
/// point within `EPS_BARY`, and the tree resolves the tie. Sound for
/// neighbouring tets whose heights differ by less than `margin / EPS_BARY`.
pub const WALK_CLEAR_MARGIN: f64 = 1e-6;

/// Per-particle walk state. Never shared between particles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WalkCache {
    pub last_cell: Option<CellId>,
    /// Hops taken by the most recent query.
    pub last_hops: usize,
    /// Queries that ended in a tree lookup.
    pub fallbacks: u64,
}

impl WalkCache {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Locates `p` starting from the cached cell, stepping across the face with
/// the most negative barycentric coordinate. Falls back to the tree on an
/// empty cache, a boundary face, a revisited cell, `WALK_LIMIT` hops, or a
/// hit too close to a face to rule out a tie.
pub fn locate_walk(
    cache: &mut WalkCache,
    tree: &CellTree,
    mesh: &TetMesh,
    p: Vec3,
) -> Option<LocateResult> {
    cache.last_hops = 0;
    let result = match cache.last_cell {
        Some(start) if start.0 < mesh.tets().len() => walk_from(cache, tree, mesh, p, start.0),
        _ => {
            cache.fallbacks += 1;
            tree.locate(mesh, p)
        }
    };
    if let Some(r) = result {
        cache.last_cell = Some(r.cell);
    }
    result
}

fn walk_from(
    cache: &mut WalkCache,
    tree: &CellTree,
    mesh: &TetMesh,
    p: Vec3,
    start: usize,
) -> Option<LocateResult> {
    let mut visited = [u32::MAX; WALK_LIMIT + 1];
    let mut current = start;
    visited[0] = start as u32;
    for hop in 0..=WALK_LIMIT {
        let Some(b) = barycentric(&mesh.tet_points(current), p) else {
            break;
        };
        let (face, worst) = min_bary(&b);
        if worst >= -EPS_BARY {
            if worst > WALK_CLEAR_MARGIN {
                return Some(tet_result(current, b));
            }
            break;
        }
        let next = mesh.neighbors()[current][face];
        if next == BOUNDARY || hop == WALK_LIMIT || visited[..=hop].contains(&next) {
            break;
        }
        current = next as usize;
        visited[hop + 1] = next;
        cache.last_hops = hop + 1;
    }
    cache.fallbacks += 1;
    tree.locate(mesh, p)
}
