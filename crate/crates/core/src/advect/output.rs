//! Text and CSV writers for analyzer output.
//!
//! Streamlines use a plain block format:
//!
//! ```text
//! particle <id> <vertex count>
//! <x> <y> <z> <t>
//! ...
//! ```

use std::io::{BufRead, Write};

use super::{FtleField, Polyline};
use crate::mesh::Vec3;
use crate::{Error, Result};

pub fn write_streamlines<W: Write>(mut w: W, lines: &[Polyline]) -> std::io::Result<()> {
    for line in lines {
        writeln!(w, "particle {} {}", line.id, line.points.len())?;
        for (p, t) in &line.points {
            writeln!(w, "{:?} {:?} {:?} {:?}", p.x, p.y, p.z, t)?;
        }
    }
    w.flush()
}

pub fn read_streamlines<R: BufRead>(r: R) -> Result<Vec<Polyline>> {
    let bad = |line: usize, message: String| Error::MeshFormat { line, message };
    let mut out = Vec::new();
    let mut remaining = 0usize;
    for (n, text) in r.lines().enumerate() {
        let n = n + 1;
        let text = text.map_err(|e| bad(n, e.to_string()))?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if remaining == 0 {
            match fields[..] {
                ["particle", id, count] => {
                    let id = id.parse().map_err(|_| bad(n, format!("bad particle id `{id}`")))?;
                    remaining = count.parse().map_err(|_| bad(n, format!("bad vertex count `{count}`")))?;
                    out.push(Polyline { id, points: Vec::with_capacity(remaining) });
                }
                _ => return Err(bad(n, "expected `particle <id> <count>`".into())),
            }
            continue;
        }
        let v: Vec<f64> = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(n, e.to_string()))?;
        let [x, y, z, t] = v[..] else {
            return Err(bad(n, "expected `x y z t`".into()));
        };
        out.last_mut().expect("header precedes vertices").points.push((Vec3::new(x, y, z), t));
        remaining -= 1;
    }
    if remaining != 0 {
        return Err(bad(0, format!("{remaining} vertices missing at end of input")));
    }
    Ok(out)
}

pub fn write_ftle_csv<W: Write>(w: W, ftle: &FtleField) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["i", "j", "k", "x", "y", "z", "ftle"])?;
    let [nx, ny, _] = ftle.dims;
    for (idx, (p, v)) in ftle.positions.iter().zip(&ftle.values).enumerate() {
        let (i, j, k) = (idx % nx, (idx / nx) % ny, idx / (nx * ny));
        csv.write_record([
            i.to_string(),
            j.to_string(),
            k.to_string(),
            format!("{:?}", p.x),
            format!("{:?}", p.y),
            format!("{:?}", p.z),
            format!("{v:?}"),
        ])?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `id,seed_x,seed_y,seed_z,x,y,z` per particle.
pub fn write_endpoints_csv<W: Write>(w: W, rows: &[(u64, Vec3, Vec3)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["id", "seed_x", "seed_y", "seed_z", "x", "y", "z"])?;
    for (id, s, e) in rows {
        let mut rec = vec![id.to_string()];
        rec.extend([s.x, s.y, s.z, e.x, e.y, e.z].iter().map(|v| format!("{v:?}")));
        csv.write_record(&rec)?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}
