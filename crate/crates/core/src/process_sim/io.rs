//! Ensemble persistence.
//!
//! CSV: header `path_id,t,x`, one row per path and grid point, floats with
//! 17 significant digits.
//!
//! Binary (`.ensb`), all integers and floats little-endian:
//!
//! ```text
//! magic      5 bytes   "ENSB1"
//! n_paths    u64
//! n_steps    u64
//! t0         f64
//! dt         f64
//! per path:
//!   tag      u8        0 = rng stream, 1 = segment
//!   a        u64       master_seed | segment index
//!   b        u64       stream      | segment start sample
//!   base     f64       0           | rebase offset
//!   values   (n_steps + 1) × f64
//! ```

use std::io::{Read, Write};

use super::{Path, PathEnsemble, SeedTag, TimeGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"ENSB1";

/// Lossless decimal form used by every text artifact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(ensemble: &PathEnsemble, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::numerical(format!("csv write failed: {e}"));
    w.write_record(["path_id", "t", "x"]).map_err(to_err)?;
    for (id, path) in ensemble.paths.iter().enumerate() {
        for (k, x) in path.values.iter().enumerate() {
            w.write_record([id.to_string(), fmt_f64(ensemble.grid.time(k)), fmt_f64(*x)])
                .map_err(to_err)?;
        }
    }
    w.flush()
        .map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Reads the CSV layout back. The grid is inferred from the first path's
/// times; provenance is not stored in CSV and comes back as segment tags.
pub fn read_csv<R: Read>(input: R) -> Result<PathEnsemble> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = |j: usize, name: &str| -> Result<&str> {
            rec.get(j).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {name}"),
            })
        };
        let parse_err = |name: &str, e: String| Error::Parse {
            line,
            message: format!("bad {name}: {e}"),
        };
        let id: usize = field(0, "path_id")?
            .trim()
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err("path_id", e.to_string()))?;
        let t: f64 = field(1, "t")?
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err("t", e.to_string()))?;
        let x: f64 = field(2, "x")?
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err("x", e.to_string()))?;
        rows.push((id, t, x));
    }
    if rows.is_empty() {
        return Err(Error::rejected("ensemble CSV has no rows"));
    }
    let mut by_path: Vec<Vec<(f64, f64)>> = Vec::new();
    for (id, t, x) in rows {
        if id == by_path.len() {
            by_path.push(Vec::new());
        } else if id + 1 != by_path.len() {
            return Err(Error::rejected(format!(
                "ensemble CSV rows must be grouped by consecutive path_id (saw {id})"
            )));
        }
        by_path[id].push((t, x));
    }
    let first = &by_path[0];
    if first.len() < 2 {
        return Err(Error::rejected("ensemble CSV paths need at least two points"));
    }
    let t0 = first[0].0;
    let dt = first[1].0 - first[0].0;
    let grid = TimeGrid::new(t0, dt, first.len() - 1)?;
    let paths = by_path
        .into_iter()
        .enumerate()
        .map(|(i, pts)| {
            let values = pts.into_iter().map(|(_, x)| x).collect();
            Path::new(
                grid,
                values,
                SeedTag::Segment {
                    index: i,
                    start: 0,
                    base: 0.0,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    PathEnsemble::new(grid, paths)
}

pub fn write_binary<W: Write>(ensemble: &PathEnsemble, mut out: W) -> Result<()> {
    let io = |e| Error::io("<binary writer>", e);
    let g = &ensemble.grid;
    let mut buf = Vec::with_capacity(37 + ensemble.n_paths() * (25 + 8 * g.n_points()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(ensemble.n_paths() as u64).to_le_bytes());
    buf.extend_from_slice(&(g.n_steps as u64).to_le_bytes());
    buf.extend_from_slice(&g.t0.to_le_bytes());
    buf.extend_from_slice(&g.dt.to_le_bytes());
    for p in &ensemble.paths {
        let (tag, a, b, base) = match p.seed_tag {
            SeedTag::Rng { master_seed, stream } => (0u8, master_seed, stream, 0.0),
            SeedTag::Segment { index, start, base } => (1u8, index as u64, start as u64, base),
        };
        buf.push(tag);
        buf.extend_from_slice(&a.to_le_bytes());
        buf.extend_from_slice(&b.to_le_bytes());
        buf.extend_from_slice(&base.to_le_bytes());
        for v in &p.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf).map_err(io)?;
    out.flush().map_err(io)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| Error::Integrity {
            field: what.to_string(),
            message: format!("truncated at byte {}", self.pos),
        })?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length checked"))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        self.take::<8>(what).map(u64::from_le_bytes)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        self.take::<8>(what).map(f64::from_le_bytes)
    }
}

pub fn read_binary<R: Read>(mut input: R) -> Result<PathEnsemble> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<binary reader>", e))?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if &c.take::<5>("magic")? != MAGIC {
        return Err(Error::Integrity {
            field: "magic".into(),
            message: "expected ENSB1 header".into(),
        });
    }
    let n_paths = c.u64("n_paths")? as usize;
    let n_steps = c.u64("n_steps")? as usize;
    let t0 = c.f64("t0")?;
    let dt = c.f64("dt")?;
    let grid = TimeGrid::new(t0, dt, n_steps)?;
    let mut paths = Vec::with_capacity(n_paths.min(1 << 20));
    for i in 0..n_paths {
        let [tag] = c.take::<1>("tag")?;
        let a = c.u64("seed_a")?;
        let b = c.u64("seed_b")?;
        let base = c.f64("base")?;
        let seed_tag = match tag {
            0 => SeedTag::Rng {
                master_seed: a,
                stream: b,
            },
            1 => SeedTag::Segment {
                index: a as usize,
                start: b as usize,
                base,
            },
            other => {
                return Err(Error::Integrity {
                    field: "tag".into(),
                    message: format!("path {i} has unknown provenance tag {other}"),
                })
            }
        };
        let values = (0..grid.n_points())
            .map(|_| c.f64("values"))
            .collect::<Result<Vec<_>>>()?;
        paths.push(Path::new(grid, values, seed_tag)?);
    }
    if c.pos != bytes.len() {
        return Err(Error::Integrity {
            field: "length".into(),
            message: format!("{} trailing bytes", bytes.len() - c.pos),
        });
    }
    PathEnsemble::new(grid, paths)
}
