//! On-disk layout of a prepared split:
//!
//! ```text
//! initial.csr              binary CSR of the initial training matrix
//! step_{k}_delta.csr       increment of step k (1-based)
//! step_{k}_holdout.tsv     user_row<TAB>item_col per held-out pair
//! indexes.tsv              kind<TAB>position<TAB>raw_id
//! manifest.json            window boundaries, drop counts, config echo
//! ```
//!
//! CSR files start with a 16-byte header (magic `PCSR`, version, n_rows,
//! n_cols as little-endian `u32`) followed by `nnz: u64`, the row offsets
//! (`u64`), column indices (`u32`) and values (`f64`), all little-endian.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{IdIndex, InteractionMatrix, Step, StepSplit};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

const CSR_MAGIC: &[u8; 4] = b"PCSR";
const CSR_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowInfo {
    pub step: usize,
    pub start: i64,
    pub end: i64,
    pub delta_nnz: usize,
    pub holdout_users: usize,
    pub dropped_unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub n_users: usize,
    pub n_items: usize,
    pub initial_nnz: usize,
    pub cutoff: i64,
    pub windows: Vec<WindowInfo>,
    /// Free-form echo of whatever produced the split.
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn describe(split: &StepSplit, config: serde_json::Value) -> Self {
        Manifest {
            format_version: MANIFEST_VERSION,
            n_users: split.n_users(),
            n_items: split.n_items(),
            initial_nnz: split.initial.nnz(),
            cutoff: split.cutoff,
            windows: split
                .steps
                .iter()
                .enumerate()
                .map(|(k, s)| WindowInfo {
                    step: k + 1,
                    start: s.window.0,
                    end: s.window.1,
                    delta_nnz: s.delta.nnz(),
                    holdout_users: s.holdout.len(),
                    dropped_unknown: s.dropped,
                })
                .collect(),
            config,
        }
    }
}

pub fn write_csr(path: &Path, m: &SparseMatrix) -> Result<()> {
    let to_u32 = |x: usize, what: &str| {
        u32::try_from(x).map_err(|_| Error::Data(format!("{what} {x} does not fit the CSR header")))
    };
    let mut buf = Vec::with_capacity(24 + 8 * (m.n_rows() + 1) + 12 * m.nnz());
    buf.extend_from_slice(CSR_MAGIC);
    buf.extend_from_slice(&CSR_VERSION.to_le_bytes());
    buf.extend_from_slice(&to_u32(m.n_rows(), "n_rows")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(m.n_cols(), "n_cols")?.to_le_bytes());
    buf.extend_from_slice(&(m.nnz() as u64).to_le_bytes());
    for &o in m.row_offsets() {
        buf.extend_from_slice(&(o as u64).to_le_bytes());
    }
    for &c in m.col_indices() {
        buf.extend_from_slice(&(c as u32).to_le_bytes());
    }
    for &v in m.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_csr(path: &Path) -> Result<SparseMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Data(format!("{}: {msg}", path.display()));
    if bytes.len() < 24 || &bytes[..4] != CSR_MAGIC {
        return Err(bad("not a CSR file"));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let u64_at = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    if u32_at(4) != CSR_VERSION {
        return Err(bad("unsupported CSR version"));
    }
    let n_rows = u32_at(8) as usize;
    let n_cols = u32_at(12) as usize;
    let nnz = usize::try_from(u64_at(16)).map_err(|_| bad("nnz overflow"))?;
    let offsets_at = 24;
    let cols_at = offsets_at + 8 * (n_rows + 1);
    let vals_at = cols_at + 4 * nnz;
    if bytes.len() != vals_at + 8 * nnz {
        return Err(bad("length does not match header"));
    }
    let row_offsets = (0..=n_rows).map(|i| u64_at(offsets_at + 8 * i) as usize).collect();
    let col_indices = (0..nnz).map(|i| u32_at(cols_at + 4 * i) as usize).collect();
    let values = (0..nnz)
        .map(|i| f64::from_le_bytes(bytes[vals_at + 8 * i..vals_at + 8 * i + 8].try_into().unwrap()))
        .collect();
    SparseMatrix::new(n_rows, n_cols, row_offsets, col_indices, values).map_err(|e| bad(&e.to_string()))
}

fn write_text(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes `split` into `dir`, creating it. Refuses to overwrite an
/// existing manifest.
pub fn write_split(dir: &Path, split: &StepSplit, config: serde_json::Value) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        return Err(Error::OutputExists(dir.to_path_buf()));
    }

    write_csr(&dir.join("initial.csr"), split.initial.matrix())?;
    for (k, step) in split.steps.iter().enumerate() {
        write_csr(&dir.join(format!("step_{}_delta.csr", k + 1)), step.delta.matrix())?;
        write_text(&dir.join(format!("step_{}_holdout.tsv", k + 1)), |w| {
            writeln!(w, "user_row\titem_col")?;
            for (u, i) in &step.holdout {
                writeln!(w, "{u}\t{i}")?;
            }
            Ok(())
        })?;
    }
    write_text(&dir.join("indexes.tsv"), |w| {
        for (kind, index) in [("user", split.initial.users()), ("item", split.initial.items())] {
            for (pos, raw) in index.ids().iter().enumerate() {
                writeln!(w, "{kind}\t{pos}\t{raw}")?;
            }
        }
        Ok(())
    })?;

    let manifest = Manifest::describe(split, config);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

fn read_holdout(path: &Path) -> Result<BTreeMap<usize, usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: &str| Error::Data(format!("{}: bad holdout line {line:?}", path.display()));
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let (u, i) = line.split_once('\t').ok_or_else(|| bad(line))?;
            Ok((u.parse().map_err(|_| bad(line))?, i.parse().map_err(|_| bad(line))?))
        })
        .collect()
}

/// Loads a split written by [`write_split`].
pub fn read_split(dir: &Path) -> Result<(StepSplit, Manifest)> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::Data(format!(
            "unsupported split format version {}",
            manifest.format_version
        )));
    }

    let idx_path = dir.join("indexes.tsv");
    let idx_text = fs::read_to_string(&idx_path).map_err(|e| Error::io(&idx_path, e))?;
    let (mut users, mut items) = (Vec::new(), Vec::new());
    for line in idx_text.lines().filter(|l| !l.is_empty()) {
        let mut parts = line.splitn(3, '\t');
        let (kind, pos, raw) = (parts.next(), parts.next(), parts.next());
        let target = match kind {
            Some("user") => &mut users,
            Some("item") => &mut items,
            _ => return Err(Error::Data(format!("{}: bad line {line:?}", idx_path.display()))),
        };
        let pos: usize = pos
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::Data(format!("{}: bad line {line:?}", idx_path.display())))?;
        if pos != target.len() {
            return Err(Error::Data(format!("{}: positions out of order", idx_path.display())));
        }
        target.push(raw.unwrap_or_default().to_owned());
    }
    let users = Arc::new(IdIndex::from_ordered(users)?);
    let items = Arc::new(IdIndex::from_ordered(items)?);

    let initial = InteractionMatrix::new(read_csr(&dir.join("initial.csr"))?, users.clone(), items.clone())?;
    let steps = manifest
        .windows
        .iter()
        .map(|w| {
            let delta = InteractionMatrix::new(
                read_csr(&dir.join(format!("step_{}_delta.csr", w.step)))?,
                users.clone(),
                items.clone(),
            )?;
            let holdout = read_holdout(&dir.join(format!("step_{}_holdout.tsv", w.step)))?;
            if holdout.iter().any(|(&u, &i)| u >= users.len() || i >= items.len()) {
                return Err(Error::Data(format!("step {}: holdout outside index", w.step)));
            }
            Ok(Step {
                delta,
                holdout,
                window: (w.start, w.end),
                dropped: w.dropped_unknown,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        StepSplit {
            initial,
            steps,
            cutoff: manifest.cutoff,
        },
        manifest,
    ))
}
