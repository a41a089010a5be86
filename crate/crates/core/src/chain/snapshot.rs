//! Versioned binary snapshot of a fit.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic      8 bytes  "GEODPMSN"
//! version    u32
//! header     u64 length + UTF-8 JSON (RNG id, seed, scheme, config, shapes,
//!            location names, standardization, diagnostics incl. wall clock)
//! body       u64 length + blocks
//! block      u16 name length, name, u8 dtype (0 = f64, 1 = u32),
//!            u64 rows, u64 cols, values in column-major order
//! ```
//!
//! Everything that depends on timing lives in the header, so two runs with
//! the same seed and config produce identical bodies.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::draws::{ChainDiagnostics, LogLikMatrix, PosteriorDraws};
use crate::error::{Error, Result};
use crate::geo::{Coordinates, LonLat};
use crate::model::{Dataset, ModelConfig, Scheme, Standardization};
use crate::numerics::RNG_ID;

pub const MAGIC: &[u8; 8] = b"GEODPMSN";
pub const FORMAT_VERSION: u32 = 1;

/// A fit bundled with the data it was run on.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub draws: PosteriorDraws,
    pub data: Dataset,
    pub standardization: Option<Standardization>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    rng_id: String,
    seed: u64,
    scheme: Scheme,
    config: ModelConfig,
    n: usize,
    p: usize,
    m: usize,
    draws: usize,
    names: Option<Vec<String>>,
    standardization: Option<Standardization>,
    diagnostics: ChainDiagnostics,
}

enum Values<'a> {
    F64(&'a [f64]),
    U32(&'a [u32]),
}

fn put_block(out: &mut Vec<u8>, name: &str, rows: usize, cols: usize, values: Values<'_>) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    let dtype: u8 = match values {
        Values::F64(_) => 0,
        Values::U32(_) => 1,
    };
    out.push(dtype);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    // stored row-major in memory, written column-major
    for c in 0..cols {
        for r in 0..rows {
            match values {
                Values::F64(v) => out.extend_from_slice(&v[r * cols + c].to_le_bytes()),
                Values::U32(v) => out.extend_from_slice(&v[r * cols + c].to_le_bytes()),
            }
        }
    }
}

fn encode_body(s: &Snapshot) -> Vec<u8> {
    let d = &s.draws;
    let data = &s.data;
    let (n, p, m, k) = (d.n, d.p, d.m, d.len());
    let mut out = Vec::with_capacity(k * PosteriorDraws::bytes_per_draw(n, p, m) + 1024);
    let lon: Vec<f64> = data.coords().iter().map(|c| c.lon).collect();
    let lat: Vec<f64> = data.coords().iter().map(|c| c.lat).collect();
    put_block(&mut out, "y", n, 1, Values::F64(data.y()));
    put_block(&mut out, "x", n, p, Values::F64(data.x_row_major()));
    put_block(&mut out, "lon", n, 1, Values::F64(&lon));
    put_block(&mut out, "lat", n, 1, Values::F64(&lat));
    put_block(&mut out, "z", k, n, Values::U32(&d.z));
    put_block(&mut out, "beta", k, m * p, Values::F64(&d.beta));
    put_block(&mut out, "v", k, m - 1, Values::F64(&d.v));
    put_block(&mut out, "pi", k, m, Values::F64(&d.pi));
    put_block(&mut out, "alpha", k, 1, Values::F64(&d.alpha));
    put_block(&mut out, "tau_y", k, 1, Values::F64(&d.tau_y));
    put_block(&mut out, "tau_w", k, 1, Values::F64(&d.tau_w));
    put_block(&mut out, "tau_b", k, 1, Values::F64(&d.tau_b));
    put_block(&mut out, "phi", k, 1, Values::F64(&d.phi));
    put_block(&mut out, "mu_b", k, p, Values::F64(&d.mu_b));
    put_block(&mut out, "w", k, n, Values::F64(&d.w));
    put_block(&mut out, "loglik", k, n, Values::F64(d.loglik.as_slice()));
    out
}

pub fn snapshot_serialize(s: &Snapshot) -> Result<Vec<u8>> {
    if s.draws.is_empty() {
        return Err(Error::invalid("cannot serialize an empty set of draws"));
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        rng_id: RNG_ID.to_string(),
        seed: s.draws.seed,
        scheme: s.draws.config.scheme,
        config: s.draws.config.clone(),
        n: s.draws.n,
        p: s.draws.p,
        m: s.draws.m,
        draws: s.draws.len(),
        names: s.data.names().map(|v| v.to_vec()),
        standardization: s.standardization.clone(),
        diagnostics: s.draws.diagnostics.clone(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let body = encode_body(s);
    let mut out = Vec::with_capacity(8 + 4 + 16 + header.len() + body.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("snapshot is truncated".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("length overflow".into()))
    }
}

struct Block {
    rows: usize,
    cols: usize,
    f64s: Vec<f64>,
    u32s: Vec<u32>,
}

/// Split a snapshot into its (header, body) byte ranges.
fn sections(bytes: &[u8]) -> Result<(&[u8], &[u8])> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("not a geodpm snapshot (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported snapshot version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let hlen = r.len()?;
    let header = r.take(hlen)?;
    let blen = r.len()?;
    let body = r.take(blen)?;
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after snapshot body".into()));
    }
    Ok((header, body))
}

/// The seed- and config-determined part of a serialized snapshot.
pub fn snapshot_body(bytes: &[u8]) -> Result<&[u8]> {
    Ok(sections(bytes)?.1)
}

fn decode_blocks(body: &[u8]) -> Result<HashMap<String, Block>> {
    let mut r = Reader { buf: body, pos: 0 };
    let mut blocks = HashMap::new();
    while r.pos < body.len() {
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Format("block name is not UTF-8".into()))?
            .to_string();
        let dtype = r.u8()?;
        let rows = r.len()?;
        let cols = r.len()?;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Format("block size overflow".into()))?;
        let mut block = Block {
            rows,
            cols,
            f64s: Vec::new(),
            u32s: Vec::new(),
        };
        match dtype {
            0 => {
                let raw = r.take(count * 8)?;
                let mut v = vec![0.0; count];
                for (k, chunk) in raw.chunks_exact(8).enumerate() {
                    let (c, row) = (k / rows.max(1), k % rows.max(1));
                    v[row * cols + c] = f64::from_le_bytes(chunk.try_into().unwrap());
                }
                block.f64s = v;
            }
            1 => {
                let raw = r.take(count * 4)?;
                let mut v = vec![0u32; count];
                for (k, chunk) in raw.chunks_exact(4).enumerate() {
                    let (c, row) = (k / rows.max(1), k % rows.max(1));
                    v[row * cols + c] = u32::from_le_bytes(chunk.try_into().unwrap());
                }
                block.u32s = v;
            }
            other => return Err(Error::Format(format!("unknown dtype {other} in block `{name}`"))),
        }
        blocks.insert(name, block);
    }
    Ok(blocks)
}

pub fn snapshot_deserialize(bytes: &[u8]) -> Result<Snapshot> {
    let (header, body) = sections(bytes)?;
    let header: Header =
        serde_json::from_slice(header).map_err(|e| Error::Format(format!("header: {e}")))?;
    let mut blocks = decode_blocks(body)?;
    let (n, p, m, k) = (header.n, header.p, header.m, header.draws);
    let mut take = |name: &str, rows: usize, cols: usize| -> Result<Block> {
        let b = blocks
            .remove(name)
            .ok_or_else(|| Error::Format(format!("missing block `{name}`")))?;
        if b.rows != rows || b.cols != cols {
            return Err(Error::Format(format!(
                "block `{name}` is {}×{}, expected {rows}×{cols}",
                b.rows, b.cols
            )));
        }
        Ok(b)
    };
    let y = take("y", n, 1)?.f64s;
    let x = take("x", n, p)?.f64s;
    let lon = take("lon", n, 1)?.f64s;
    let lat = take("lat", n, 1)?.f64s;
    let coords = Coordinates::new(lon.into_iter().zip(lat).map(|(a, b)| LonLat::new(a, b)).collect())?;
    let data = Dataset::new(y, x, p, coords, header.names)?;

    let z = take("z", k, n)?.u32s;
    if z.iter().any(|&c| c as usize >= m) {
        return Err(Error::Format("stored label out of range".into()));
    }
    let draws = PosteriorDraws {
        seed: header.seed,
        n,
        p,
        m,
        z,
        beta: take("beta", k, m * p)?.f64s,
        v: take("v", k, m - 1)?.f64s,
        pi: take("pi", k, m)?.f64s,
        alpha: take("alpha", k, 1)?.f64s,
        tau_y: take("tau_y", k, 1)?.f64s,
        tau_w: take("tau_w", k, 1)?.f64s,
        tau_b: take("tau_b", k, 1)?.f64s,
        phi: take("phi", k, 1)?.f64s,
        mu_b: take("mu_b", k, p)?.f64s,
        w: take("w", k, n)?.f64s,
        loglik: LogLikMatrix::from_rows(n, take("loglik", k, n)?.f64s)?,
        diagnostics: header.diagnostics,
        config: header.config,
    };
    Ok(Snapshot {
        draws,
        data,
        standardization: header.standardization,
    })
}

pub fn write_snapshot(path: &Path, s: &Snapshot) -> Result<()> {
    let bytes = snapshot_serialize(s)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    snapshot_deserialize(&bytes)
}

/// Wide CSV: one row per draw, one column per stored scalar.
pub fn write_draws_csv(path: &Path, d: &PosteriorDraws) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut cols = vec!["draw".to_string()];
    cols.extend(["alpha", "tau_y", "tau_w", "tau_b", "phi"].map(String::from));
    cols.extend((1..=d.p).map(|j| format!("mu_b_{j}")));
    cols.extend((1..=d.n).map(|i| format!("z_{i}")));
    cols.extend((1..=d.n).map(|i| format!("w_{i}")));
    for c in 1..=d.m {
        cols.extend((1..=d.p).map(|j| format!("beta_{c}_{j}")));
    }
    cols.extend((1..=d.m).map(|c| format!("pi_{c}")));
    cols.extend((1..=d.n).map(|i| format!("loglik_{i}")));
    writeln!(out, "{}", cols.join(",")).map_err(io)?;
    for t in 0..d.len() {
        let mut row = vec![(t + 1).to_string()];
        row.extend(
            [d.alpha[t], d.tau_y[t], d.tau_w[t], d.tau_b[t], d.phi[t]].map(|v| v.to_string()),
        );
        row.extend(d.mu_b[t * d.p..(t + 1) * d.p].iter().map(|v| v.to_string()));
        row.extend(d.labels(t).iter().map(|c| (c + 1).to_string()));
        row.extend(d.w(t).iter().map(|v| v.to_string()));
        row.extend(d.beta[t * d.m * d.p..(t + 1) * d.m * d.p].iter().map(|v| v.to_string()));
        row.extend(d.pi(t).iter().map(|v| v.to_string()));
        row.extend(d.loglik.row(t).iter().map(|v| v.to_string()));
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}
