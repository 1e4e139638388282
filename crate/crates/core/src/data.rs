use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spaces::{ensure_dim, Matrix, Vector};

/// A regression instance `(A, b)` with `n` rows and `d` features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub a: Matrix,
    pub b: Vector,
    pub name: String,
    pub scaled: bool,
    /// Columns of `A` that were identically zero when scaling.
    pub zero_columns: Vec<usize>,
}

impl Dataset {
    pub fn new(a: Matrix, b: Vector, name: impl Into<String>) -> Result<Self> {
        ensure_dim("dataset rows vs targets", a.nrows(), b.len())?;
        if a.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if let Some(index) = a.iter().chain(b.iter()).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { a, b, name: name.into(), scaled: false, zero_columns: Vec::new() })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn features(&self) -> usize {
        self.a.ncols()
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned())
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("not a number: {:?}", tok.trim()) })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("non-finite value {v}") });
    }
    Ok(v)
}

/// Comma-separated rows without a header; the last column is `b`.
pub fn parse_csv(text: &str, name: &str) -> Result<Dataset> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let vals = raw.split(',').map(|t| parse_num(t, line)).collect::<Result<Vec<_>>>()?;
        if vals.len() < 2 {
            return Err(Error::Parse { line, msg: "need at least one feature and a target".into() });
        }
        if let Some(first) = rows.first() {
            if first.len() != vals.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, found {}", first.len(), vals.len()),
                });
            }
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Empty("csv input"));
    }
    let d = rows[0].len() - 1;
    let a = Matrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let b = Vector::from_iterator(rows.len(), rows.iter().map(|r| r[d]));
    Dataset::new(a, b, name)
}

/// `label idx:val ...` lines with 1-based indices; absent entries are zero.
pub fn parse_libsvm(text: &str, name: &str) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut d = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        let Some(label) = toks.next() else { continue };
        labels.push(parse_num(label, line)?);
        let mut row = Vec::new();
        for tok in toks {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse { line, msg: format!("expected index:value, got {tok:?}") })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("bad index {idx:?}") })?;
            if idx == 0 {
                return Err(Error::Parse { line, msg: "indices are 1-based".into() });
            }
            d = d.max(idx);
            row.push((idx - 1, parse_num(val, line)?));
        }
        entries.push(row);
    }
    if labels.is_empty() {
        return Err(Error::Empty("libsvm input"));
    }
    if d == 0 {
        return Err(Error::Parse { line: 1, msg: "no feature entries".into() });
    }
    let mut a = Matrix::zeros(labels.len(), d);
    for (i, row) in entries.iter().enumerate() {
        for &(j, v) in row {
            a[(i, j)] = v;
        }
    }
    Dataset::new(a, Vector::from_vec(labels), name)
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    parse_csv(&fs::read_to_string(path)?, &stem(path))
}

pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    parse_libsvm(&fs::read_to_string(path)?, &stem(path))
}

/// Picks the loader from the extension: `.csv` or anything else as LibSVM.
pub fn load(path: &Path) -> Result<Dataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => load_csv(path),
        _ => load_libsvm(path),
    }
}

/// Scales `b` and every nonzero column of `A` to unit norm, and returns
/// `ν = 0.1 |Aᵀb|_∞` on the scaled data.
pub fn preprocess(ds: &Dataset) -> Result<(Dataset, f64)> {
    let mut out = ds.clone();
    let mut zero = Vec::new();
    for (j, mut col) in out.a.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            zero.push(j);
        } else {
            col /= norm;
        }
    }
    if zero.len() == out.a.ncols() {
        return Err(Error::InvalidParameter("every column of A is zero".into()));
    }
    let bn = out.b.norm();
    if bn > 0.0 {
        out.b /= bn;
    }
    out.scaled = true;
    out.zero_columns = zero;
    let nu = 0.1 * out.a.tr_mul(&out.b).amax();
    Ok((out, nu))
}

/// Gaussian design, `⌈sparsity·d⌉`-sparse Gaussian ground truth and
/// `b = A x + noise_sd·N(0, I)`. Returns the data and the ground truth.
pub fn gen_synthetic(
    n: usize,
    d: usize,
    sparsity: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<(Dataset, Vector)> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("n and d must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&sparsity) || !(noise_sd >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= sparsity <= 1 and noise_sd >= 0, got {sparsity}, {noise_sd}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng));
    let nnz = ((sparsity * d as f64).ceil() as usize).min(d);
    let mut x = Vector::zeros(d);
    for j in sample(&mut rng, d, nnz) {
        x[j] = StandardNormal.sample(&mut rng);
    }
    let noise = Vector::from_fn(n, |_, _| {
        let e: f64 = StandardNormal.sample(&mut rng);
        noise_sd * e
    });
    let b = &a * &x + noise;
    let ds = Dataset::new(a, b, format!("synthetic-n{n}-d{d}-s{seed}"))?;
    Ok((ds, x))
}
