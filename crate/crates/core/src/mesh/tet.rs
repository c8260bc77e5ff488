use super::grid::StructuredIndex;
use super::{Bounds3, Dataset, Mesh, Vec3};
use crate::error::{Error, Result};

/// Neighbour marker for a face on the mesh boundary.
pub const BOUNDARY: u32 = u32::MAX;

/// Six tetrahedra around the hex diagonal from local corner 0 to corner 6.
/// Indices refer to the hex corner order documented on the structured grids.
/// Every hex is cut the same way, so shared faces of neighbouring hexes are
/// split along the same diagonal and the result is conforming.
pub const HEX_TO_TETS: [[usize; 4]; 6] = [
    [0, 1, 2, 6],
    [0, 2, 3, 6],
    [0, 3, 7, 6],
    [0, 7, 4, 6],
    [0, 4, 5, 6],
    [0, 5, 1, 6],
];

/// Linear tetrahedral mesh with face adjacency.
///
/// Every stored tet has positive signed volume
/// `(v1 - v0) . ((v2 - v0) x (v3 - v0)) / 6`. `neighbors[t][f]` is the tet
/// across the face opposite local vertex `f`, or [`BOUNDARY`].
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[u32; 4]>,
    neighbors: Vec<[u32; 4]>,
    bounds: Bounds3,
}

#[inline]
pub(crate) fn signed_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    (b - a).dot((c - a).cross(d - a)) / 6.0
}

impl TetMesh {
    /// Validates connectivity, orients every tet positively and computes
    /// face adjacency.
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[u32; 4]>) -> Result<Self> {
        if vertices.len() >= BOUNDARY as usize {
            return Err(Error::InvalidMesh("too many vertices".into()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        let bounds = Bounds3::from_points(&vertices)
            .ok_or_else(|| Error::InvalidMesh("mesh has no vertices".into()))?;
        let threshold = 1e-12 * bounds.diagonal().powi(3);

        for (t, tet) in tets.iter_mut().enumerate() {
            if let Some(&bad) = tet.iter().find(|&&v| v as usize >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "tet {t} references vertex {bad}, mesh has {}",
                    vertices.len()
                )));
            }
            let [a, b, c, d] = tet.map(|v| vertices[v as usize]);
            let vol = signed_volume(a, b, c, d);
            if vol.abs() < threshold || !vol.is_finite() {
                return Err(Error::DegenerateTet {
                    tet: t,
                    volume: vol.abs(),
                    threshold,
                });
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }

        let neighbors = face_adjacency(&tets)?;
        Ok(TetMesh {
            vertices,
            tets,
            neighbors,
            bounds,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[u32; 4]] {
        &self.tets
    }

    pub fn neighbors(&self) -> &[[u32; 4]] {
        &self.neighbors
    }

    pub fn bounds(&self) -> Bounds3 {
        self.bounds
    }

    #[inline]
    pub fn tet_points(&self, tet: usize) -> [Vec3; 4] {
        self.tets[tet].map(|v| self.vertices[v as usize])
    }

    pub fn volume(&self, tet: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(tet);
        signed_volume(a, b, c, d)
    }

    pub fn centroid(&self, tet: usize) -> Vec3 {
        let [a, b, c, d] = self.tet_points(tet);
        (a + b + c + d) * 0.25
    }

    pub fn tet_bounds(&self, tet: usize) -> Bounds3 {
        let p = self.tet_points(tet);
        Bounds3 {
            min: p[0].min(p[1]).min(p[2]).min(p[3]),
            max: p[0].max(p[1]).max(p[2]).max(p[3]),
        }
    }
}

/// Face opposite local vertex `f`.
#[inline]
fn face(tet: &[u32; 4], f: usize) -> [u32; 3] {
    let mut out = [0u32; 3];
    let mut n = 0;
    for (i, &v) in tet.iter().enumerate() {
        if i != f {
            out[n] = v;
            n += 1;
        }
    }
    out.sort_unstable();
    out
}

fn face_adjacency(tets: &[[u32; 4]]) -> Result<Vec<[u32; 4]>> {
    let mut faces: Vec<([u32; 3], u32, u8)> = Vec::with_capacity(tets.len() * 4);
    for (t, tet) in tets.iter().enumerate() {
        for f in 0..4 {
            faces.push((face(tet, f), t as u32, f as u8));
        }
    }
    faces.sort_unstable();

    let mut neighbors = vec![[BOUNDARY; 4]; tets.len()];
    let mut i = 0;
    while i < faces.len() {
        let mut j = i + 1;
        while j < faces.len() && faces[j].0 == faces[i].0 {
            j += 1;
        }
        match j - i {
            1 => {}
            2 => {
                let (_, ta, fa) = faces[i];
                let (_, tb, fb) = faces[i + 1];
                if ta == tb {
                    return Err(Error::InvalidMesh(format!("tet {ta} repeats a face")));
                }
                neighbors[ta as usize][fa as usize] = tb;
                neighbors[tb as usize][fb as usize] = ta;
            }
            _ => return Err(Error::NonManifoldFace { face: faces[i].0 }),
        }
        i = j;
    }
    Ok(neighbors)
}

/// Splits every hex of a structured dataset into six tets along the
/// 0-6 diagonal (see [`HEX_TO_TETS`]). Vertex numbering and velocities carry
/// over unchanged; tet `6 * hex + n` is part `n` of hex `hex`.
pub fn tetrahedralize(dataset: &Dataset) -> Result<Dataset> {
    let (vertices, hexes): (Vec<Vec3>, Vec<[usize; 8]>) = match dataset.mesh() {
        Mesh::Uniform(g) => (
            (0..g.point_count()).map(|i| g.point_at(i)).collect(),
            (0..g.cell_count()).map(|c| g.cell_vertices(c)).collect(),
        ),
        Mesh::Rectilinear(g) => (
            (0..g.point_count()).map(|i| g.point_at(i)).collect(),
            (0..g.cell_count()).map(|c| g.cell_vertices(c)).collect(),
        ),
        Mesh::Tet(_) => {
            return Err(Error::InvalidMesh(
                "tetrahedralize expects a structured grid".into(),
            ))
        }
    };
    let tets = hexes
        .iter()
        .flat_map(|hex| HEX_TO_TETS.iter().map(move |t| t.map(|c| hex[c] as u32)))
        .collect();
    let mesh = TetMesh::new(vertices, tets)?;
    Dataset::new(Mesh::Tet(mesh), dataset.velocity().to_vec())
}
