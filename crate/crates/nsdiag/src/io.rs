//! Binary field (`F3B1`) and space-time record (`ST31`) files.
//!
//! `F3B1`: magic, u32 `n`, f64 `L`, then 1 or 3 blocks of `n^3` f64 samples
//! in x-fastest order, all little-endian. `ST31`: magic, u32 snapshot count,
//! then per snapshot an f64 time, a vector `F3B1` block and a scalar `F3B1`
//! block for the pressure. Records are accompanied by `<file>.meta.json`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use nsdiag_core::generate::GeneratedField;
use nsdiag_core::{Grid, ScalarField, Snapshot, SpaceTimeRecord, VectorField};
use serde::{Deserialize, Serialize};

pub const FIELD_MAGIC: [u8; 4] = *b"F3B1";
pub const RECORD_MAGIC: [u8; 4] = *b"ST31";
const HEADER_BYTES: usize = 16;

fn write_block<W: Write>(w: &mut W, grid: &Grid, components: &[ScalarField]) -> Result<()> {
    w.write_all(&FIELD_MAGIC)?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&grid.box_length().to_le_bytes())?;
    for c in components {
        for v in c.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<Grid> {
    let mut head = [0u8; HEADER_BYTES];
    r.read_exact(&mut head).context("truncated F3B1 header")?;
    ensure!(head[..4] == FIELD_MAGIC, "bad magic {:?}, expected F3B1", &head[..4]);
    let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(head[8..16].try_into().unwrap());
    Ok(Grid::new(n, l)?)
}

fn read_components<R: Read>(r: &mut R, grid: Grid, count: usize) -> Result<Vec<ScalarField>> {
    let len = grid.len();
    let mut bytes = vec![0u8; 8 * len];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut bytes).context("truncated F3B1 payload")?;
        let values = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        out.push(ScalarField::new(grid, values)?);
    }
    Ok(out)
}

pub fn encode_field(field: &GeneratedField) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match field {
        GeneratedField::Scalar(f) => write_block(&mut buf, f.grid(), std::slice::from_ref(f))?,
        GeneratedField::Vector(v) => write_block(&mut buf, v.grid(), v.components())?,
    }
    Ok(buf)
}

/// Component count is inferred from the payload length.
pub fn decode_field(bytes: &[u8]) -> Result<GeneratedField> {
    let mut cur = bytes;
    let grid = read_header(&mut cur)?;
    let block = 8 * grid.len();
    let count = match cur.len() {
        l if l == block => 1,
        l if l == 3 * block => 3,
        l => bail!(
            "F3B1 payload of {l} bytes is neither 1 nor 3 blocks of n^3 = {} samples",
            grid.len()
        ),
    };
    let mut comps = read_components(&mut cur, grid, count)?;
    Ok(if count == 1 {
        GeneratedField::Scalar(comps.pop().unwrap())
    } else {
        let [x, y, z]: [ScalarField; 3] = comps.try_into().unwrap();
        GeneratedField::Vector(VectorField::new(x, y, z)?)
    })
}

pub fn write_field(path: &Path, field: &GeneratedField) -> Result<()> {
    fs::write(path, encode_field(field)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_field(path: &Path) -> Result<GeneratedField> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_field(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// Sidecar metadata of an `ST31` record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub tool: String,
    pub version: String,
    pub snapshots: usize,
    pub n: usize,
    pub box_length: f64,
    pub viscosity: f64,
    /// False when the pressure blocks are zero placeholders.
    pub has_pressure: bool,
    pub provenance: String,
}

impl RecordMeta {
    pub fn of(rec: &SpaceTimeRecord) -> Self {
        RecordMeta {
            tool: crate::TOOL.into(),
            version: crate::VERSION.into(),
            snapshots: rec.len(),
            n: rec.grid().n(),
            box_length: rec.grid().box_length(),
            viscosity: rec.viscosity,
            has_pressure: rec.has_pressure(),
            provenance: rec.provenance.clone(),
        }
    }
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_record_to<W: Write>(w: &mut W, rec: &SpaceTimeRecord) -> Result<()> {
    w.write_all(&RECORD_MAGIC)?;
    w.write_all(&(rec.len() as u32).to_le_bytes())?;
    let zero = ScalarField::zeros(*rec.grid());
    for s in rec.snapshots() {
        w.write_all(&s.t.to_le_bytes())?;
        write_block(w, rec.grid(), s.velocity.components())?;
        write_block(
            w,
            rec.grid(),
            std::slice::from_ref(s.pressure.as_ref().unwrap_or(&zero)),
        )?;
    }
    Ok(())
}

/// Writes the record and its sidecar.
pub fn write_record(path: &Path, rec: &SpaceTimeRecord) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_record_to(&mut w, rec)?;
    w.flush()?;
    let meta = serde_json::to_string_pretty(&RecordMeta::of(rec))? + "\n";
    fs::write(meta_path(path), meta).with_context(|| format!("writing sidecar of {}", path.display()))
}

/// `has_pressure` decides whether the pressure blocks are kept.
pub fn read_record_from<R: Read>(
    r: &mut R,
    has_pressure: bool,
    viscosity: f64,
    provenance: &str,
) -> Result<SpaceTimeRecord> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head).context("truncated ST31 header")?;
    ensure!(head[..4] == RECORD_MAGIC, "bad magic {:?}, expected ST31", &head[..4]);
    let count = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let mut snaps = Vec::with_capacity(count);
    for i in 0..count {
        let mut t = [0u8; 8];
        r.read_exact(&mut t)
            .with_context(|| format!("truncated snapshot {i}"))?;
        let t = f64::from_le_bytes(t);
        let grid = read_header(r)?;
        let [x, y, z]: [ScalarField; 3] = read_components(r, grid, 3)?.try_into().unwrap();
        let pgrid = read_header(r)?;
        ensure!(
            pgrid == grid,
            "pressure grid of snapshot {i} differs from its velocity grid"
        );
        let q = read_components(r, grid, 1)?.pop().unwrap();
        snaps.push(Snapshot::new(t, VectorField::new(x, y, z)?, has_pressure.then_some(q)));
    }
    let mut rest = [0u8; 1];
    ensure!(r.read(&mut rest)? == 0, "trailing bytes after {count} snapshots");
    Ok(SpaceTimeRecord::new(snaps, viscosity, provenance)?)
}

/// Reads a record; without a sidecar the pressure blocks are taken as real
/// and the viscosity as 1.
pub fn read_record(path: &Path) -> Result<(SpaceTimeRecord, Option<RecordMeta>)> {
    let meta_file = meta_path(path);
    let meta: Option<RecordMeta> = match fs::read_to_string(&meta_file) {
        Ok(text) => Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", meta_file.display()))?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e).with_context(|| format!("reading {}", meta_file.display())),
    };
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (has_pressure, nu, prov) = meta.as_ref().map_or((true, 1.0, String::new()), |m| {
        (m.has_pressure, m.viscosity, m.provenance.clone())
    });
    let rec = read_record_from(&mut BufReader::new(file), has_pressure, nu, &prov)
        .with_context(|| format!("decoding {}", path.display()))?;
    if let Some(m) = &meta {
        ensure!(
            m.snapshots == rec.len(),
            "sidecar lists {} snapshots, file has {}",
            m.snapshots,
            rec.len()
        );
    }
    Ok((rec, meta))
}

/// FNV-1a digest of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(bytes_digest(&bytes))
}

pub fn bytes_digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}
