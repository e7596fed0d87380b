//! CSV and binary file formats.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! CSV written here reloads to the identical `f64` bits.
//!
//! Binary distance matrices are little-endian: a 32-byte header
//! `n: u64, alpha: f64, intrinsic_dim: u64, scale: f64`, followed by the
//! `n * n` entries as `f64`, row-major.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::LabeledDataset;
use crate::embedding::Embedding;
use crate::error::{FermatError, Result};
use crate::fermat::FermatMatrix;
use crate::matrix::SquareMatrix;
use crate::point_graph::PointCloud;
use crate::svm::LinearSvmModel;

const HEADER_BYTES: usize = 32;

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| FermatError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> FermatError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FermatError::io(path, io),
        other => FermatError::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{other:?}"),
        },
    }
}

/// Rows of a numeric CSV, skipping a header line when the first row does
/// not parse as numbers.
fn read_numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (pos, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(pos + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if rows.is_empty() && width.is_none() => {
                width = Some(rec.len());
                continue;
            }
            Err(e) => {
                let bad = rec.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or("");
                return Err(FermatError::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("cannot parse {bad:?} as a number ({e})"),
                });
            }
        };
        let expected = rows.first().map(|r| r.len()).or(width).unwrap_or(row.len());
        if row.len() != expected {
            return Err(FermatError::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected,
                found: row.len(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    PointCloud::from_rows(&rows)
}

/// One non-negative integer label per row; an optional non-numeric header.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    let mut first = true;
    for (pos, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(pos + 1, |p| p.line() as usize);
        let was_first = std::mem::replace(&mut first, false);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let field = rec.get(0).unwrap_or("");
        if rec.len() != 1 {
            return Err(FermatError::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected: 1,
                found: rec.len(),
            });
        }
        match field.parse::<usize>() {
            Ok(v) => out.push(v),
            Err(_) if was_first && field.parse::<f64>().is_err() => continue,
            Err(_) => {
                return Err(FermatError::BadLabel {
                    path: path.to_path_buf(),
                    line,
                    value: field.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Result of [`load_csv_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedData {
    Unlabeled(PointCloud),
    Labeled(LabeledDataset),
}

/// Reads a points CSV and, optionally, a labels CSV with one label per point.
pub fn load_csv_dataset(
    points_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<LoadedData> {
    let cloud = read_point_cloud(points_path)?;
    match labels_path {
        None => Ok(LoadedData::Unlabeled(cloud)),
        Some(lp) => {
            let labels = read_labels(lp)?;
            if labels.len() != cloud.len() {
                return Err(FermatError::RowCountMismatch {
                    points: cloud.len(),
                    labels: labels.len(),
                });
            }
            Ok(LoadedData::Labeled(LabeledDataset::fully_labeled(
                cloud, labels,
            )?))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| FermatError::io(path, e))
}

fn write_rows<I>(path: &Path, header: Option<String>, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = create(path)?;
    let io = |e| FermatError::io(path, e);
    if let Some(h) = header {
        writeln!(w, "{h}").map_err(io)?;
    }
    for r in rows {
        writeln!(w, "{}", r.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn fmt_row(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

fn indexed_header(prefix: &str, count: usize) -> String {
    (0..count)
        .map(|j| format!("{prefix}{j}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Header `x0,...,x{D-1}` then one row per point.
pub fn write_point_cloud(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    write_rows(
        path.as_ref(),
        Some(indexed_header("x", cloud.dim())),
        cloud.points().map(fmt_row),
    )
}

/// Header `label` then one label per row.
pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    write_rows(
        path.as_ref(),
        Some("label".into()),
        labels.iter().map(|l| vec![l.to_string()]),
    )
}

/// `n` rows of `n` comma-separated values, no header.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &SquareMatrix) -> Result<()> {
    write_rows(path.as_ref(), None, (0..m.n()).map(|i| fmt_row(m.row(i))))
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<SquareMatrix> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    let n = rows.len();
    if let Some(r) = rows.first() {
        if r.len() != n {
            return Err(FermatError::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
    }
    SquareMatrix::from_vec(n, rows.into_iter().flatten().collect())
}

/// Distance matrix with the metadata carried by the binary header.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredMatrix {
    pub alpha: f64,
    pub intrinsic_dim: u64,
    pub scale: f64,
    pub dist: SquareMatrix,
}

impl From<&FermatMatrix> for StoredMatrix {
    fn from(m: &FermatMatrix) -> Self {
        StoredMatrix {
            alpha: m.params().alpha,
            intrinsic_dim: m.params().intrinsic_dim as u64,
            scale: m.scale(),
            dist: m.matrix().clone(),
        }
    }
}

pub fn encode_matrix_binary(m: &StoredMatrix) -> Vec<u8> {
    let n = m.dist.n();
    let mut out = Vec::with_capacity(HEADER_BYTES + 8 * n * n);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&m.alpha.to_le_bytes());
    out.extend_from_slice(&m.intrinsic_dim.to_le_bytes());
    out.extend_from_slice(&m.scale.to_le_bytes());
    for v in m.dist.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix_binary(bytes: &[u8]) -> Result<StoredMatrix> {
    if bytes.len() < HEADER_BYTES {
        return Err(FermatError::BadBinary(format!(
            "{} bytes is shorter than the {HEADER_BYTES}-byte header",
            bytes.len()
        )));
    }
    let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().unwrap() };
    let n = u64::from_le_bytes(word(0));
    let alpha = f64::from_le_bytes(word(1));
    let intrinsic_dim = u64::from_le_bytes(word(2));
    let scale = f64::from_le_bytes(word(3));
    let expected = n
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_BYTES as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(FermatError::BadBinary(format!(
            "header says n={n} but payload has {} bytes",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(StoredMatrix {
        alpha,
        intrinsic_dim,
        scale,
        dist: SquareMatrix::from_vec(n as usize, data)?,
    })
}

pub fn write_matrix_binary(path: impl AsRef<Path>, m: &StoredMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_all(&encode_matrix_binary(m))
        .and_then(|_| w.flush())
        .map_err(|e| FermatError::io(path, e))
}

pub fn read_matrix_binary(path: impl AsRef<Path>) -> Result<StoredMatrix> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| FermatError::io(path, e))?;
    decode_matrix_binary(&bytes)
}

/// Header `c0,...,c{p-1}` then one row per point.
pub fn write_embedding(path: impl AsRef<Path>, e: &Embedding) -> Result<()> {
    write_rows(
        path.as_ref(),
        Some(indexed_header("c", e.p())),
        e.rows().map(fmt_row),
    )
}

/// Header `class,intercept,w0,...` then one row per class.
pub fn write_svm_model(path: impl AsRef<Path>, m: &LinearSvmModel) -> Result<()> {
    let header = format!("class,intercept,{}", indexed_header("w", m.dim()));
    write_rows(
        path.as_ref(),
        Some(header),
        m.weights()
            .iter()
            .zip(m.intercepts())
            .enumerate()
            .map(|(c, (w, b))| {
                let mut row = vec![c.to_string(), b.to_string()];
                row.extend(fmt_row(w));
                row
            }),
    )
}

/// Header `index,label`.
pub fn write_predictions(path: impl AsRef<Path>, idx: &[usize], labels: &[usize]) -> Result<()> {
    write_rows(
        path.as_ref(),
        Some("index,label".into()),
        idx.iter()
            .zip(labels)
            .map(|(i, l)| vec![i.to_string(), l.to_string()]),
    )
}
