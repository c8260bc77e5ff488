//! Plain-text dataset format.
//!
//! ```text
//! advectum-mesh 1
//! kind uniform            # uniform | rectilinear | tet
//! origin 0 0 0            # uniform only
//! spacing 1 1 1           # uniform only
//! dims 2 2 2              # uniform only
//! coords_x 3 0 1 3        # rectilinear only: count, then values
//! coords_y 2 0 1
//! coords_z 2 0 1
//! vertices 4              # tet only: count, then one "x y z" line each
//! tets 1                  # tet only: count, then one "a b c d" line each
//! velocity 8              # count, then one "vx vy vz" line per vertex
//! ```
//!
//! Blank lines and `#` comments are ignored. Reals are written with Rust's
//! shortest round-trip formatting, so `save(load(text)) == text` for any
//! text produced by [`save`].

use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, Mesh, RectilinearGrid, StructuredIndex, TetMesh, UniformGrid, Vec3};
use crate::error::{Error, Result};

const MAGIC: &str = "advectum-mesh 1";

fn push_vec3(out: &mut String, v: Vec3) {
    let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
}

/// Serialises `dataset` to the text format.
pub fn to_text(dataset: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    match dataset.mesh() {
        Mesh::Uniform(g) => {
            out.push_str("kind uniform\n");
            let (o, s) = (g.origin(), g.spacing());
            let _ = writeln!(out, "origin {} {} {}", o.x, o.y, o.z);
            let _ = writeln!(out, "spacing {} {} {}", s.x, s.y, s.z);
            let d = g.dims();
            let _ = writeln!(out, "dims {} {} {}", d[0], d[1], d[2]);
        }
        Mesh::Rectilinear(g) => {
            out.push_str("kind rectilinear\n");
            for (axis, name) in ["coords_x", "coords_y", "coords_z"].iter().enumerate() {
                let c = g.coords(axis);
                let _ = write!(out, "{name} {}", c.len());
                for v in c {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
        }
        Mesh::Tet(m) => {
            out.push_str("kind tet\n");
            let _ = writeln!(out, "vertices {}", m.vertices().len());
            for &v in m.vertices() {
                push_vec3(&mut out, v);
            }
            let _ = writeln!(out, "tets {}", m.tets().len());
            for t in m.tets() {
                let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
            }
        }
    }
    let _ = writeln!(out, "velocity {}", dataset.velocity().len());
    for &v in dataset.velocity() {
        push_vec3(&mut out, v);
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::MeshFormat {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_tokens(&mut self) -> Result<Vec<&'a str>> {
        for (n, raw) in self.inner.by_ref() {
            self.line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                return Ok(content.split_whitespace().collect());
            }
        }
        Err(self.err("unexpected end of file"))
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let toks = self.next_tokens()?;
        if toks[0] != key {
            return Err(self.err(format!("expected `{key}`, found `{}`", toks[0])));
        }
        Ok(toks[1..].to_vec())
    }

    fn reals<const N: usize>(&self, toks: &[&str]) -> Result<[f64; N]> {
        if toks.len() != N {
            return Err(self.err(format!("expected {N} values, found {}", toks.len())));
        }
        let mut out = [0.0; N];
        for (o, t) in out.iter_mut().zip(toks) {
            *o = t
                .parse()
                .map_err(|_| self.err(format!("invalid real `{t}`")))?;
        }
        Ok(out)
    }

    fn count(&self, toks: &[&str]) -> Result<usize> {
        let t = toks.first().ok_or_else(|| self.err("missing count"))?;
        t.parse().map_err(|_| self.err(format!("invalid count `{t}`")))
    }

    fn vec3_block(&mut self, n: usize) -> Result<Vec<Vec3>> {
        (0..n)
            .map(|_| {
                let toks = self.next_tokens()?;
                Ok(Vec3::from(self.reals::<3>(&toks)?))
            })
            .collect()
    }
}

/// Parses the text format.
pub fn from_text(text: &str) -> Result<Dataset> {
    let mut lines = Lines::new(text);
    let header = lines.next_tokens()?.join(" ");
    if header != MAGIC {
        return Err(lines.err(format!("expected header `{MAGIC}`")));
    }
    let kind = lines.keyed("kind")?;
    let mesh_err = |l: &Lines, e: Error| l.err(e.to_string());
    let mesh = match kind.first().copied() {
        Some("uniform") => {
            let o = lines.keyed("origin")?;
            let origin = Vec3::from(lines.reals::<3>(&o)?);
            let s = lines.keyed("spacing")?;
            let spacing = Vec3::from(lines.reals::<3>(&s)?);
            let d = lines.keyed("dims")?;
            if d.len() != 3 {
                return Err(lines.err("dims needs 3 integers"));
            }
            let mut dims = [0usize; 3];
            for (o, t) in dims.iter_mut().zip(&d) {
                *o = lines.count(&[t])?;
            }
            Mesh::Uniform(
                UniformGrid::new(origin, spacing, dims).map_err(|e| mesh_err(&lines, e))?,
            )
        }
        Some("rectilinear") => {
            let mut axes: Vec<Vec<f64>> = Vec::with_capacity(3);
            for name in ["coords_x", "coords_y", "coords_z"] {
                let toks = lines.keyed(name)?;
                let n = lines.count(&toks)?;
                if toks.len() != n + 1 {
                    return Err(lines.err(format!("{name}: expected {n} values")));
                }
                let vals = toks[1..]
                    .iter()
                    .map(|t| t.parse::<f64>().map_err(|_| lines.err(format!("invalid real `{t}`"))))
                    .collect::<Result<Vec<_>>>()?;
                axes.push(vals);
            }
            let [x, y, z]: [Vec<f64>; 3] = axes.try_into().expect("three axes");
            Mesh::Rectilinear(RectilinearGrid::new(x, y, z).map_err(|e| mesh_err(&lines, e))?)
        }
        Some("tet") => {
            let toks = lines.keyed("vertices")?;
            let nv = lines.count(&toks)?;
            let vertices = lines.vec3_block(nv)?;
            let toks = lines.keyed("tets")?;
            let nt = lines.count(&toks)?;
            let mut tets = Vec::with_capacity(nt);
            for _ in 0..nt {
                let toks = lines.next_tokens()?;
                if toks.len() != 4 {
                    return Err(lines.err("tet line needs 4 indices"));
                }
                let mut t = [0u32; 4];
                for (o, s) in t.iter_mut().zip(&toks) {
                    *o = s
                        .parse()
                        .map_err(|_| lines.err(format!("invalid index `{s}`")))?;
                }
                tets.push(t);
            }
            Mesh::Tet(TetMesh::new(vertices, tets).map_err(|e| mesh_err(&lines, e))?)
        }
        other => return Err(lines.err(format!("unknown mesh kind {other:?}"))),
    };
    let toks = lines.keyed("velocity")?;
    let nvel = lines.count(&toks)?;
    if nvel != mesh.vertex_count() {
        return Err(lines.err(format!(
            "velocity count {nvel} does not match {} vertices",
            mesh.vertex_count()
        )));
    }
    let velocity = lines.vec3_block(nvel)?;
    Dataset::new(mesh, velocity).map_err(|e| lines.err(e.to_string()))
}

pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}

pub fn save(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(dataset)).map_err(|e| Error::io(path, e))
}
