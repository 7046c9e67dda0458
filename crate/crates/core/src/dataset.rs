//! Tabular data ingestion, train/test splitting and error-curve files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use log::{info, warn};
use rand::seq::SliceRandom;

use crate::numerics::Matrix;
use crate::rng::seeded;
use crate::{Error, Real, Result};

/// Inputs `x` (`n₀ × T`, one column per sample) and targets `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub name: String,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub x: Matrix<T>,
    pub y: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(name: impl Into<String>, x: Matrix<T>, y: Vec<T>) -> Result<Self> {
        if x.cols() != y.len() {
            return Err(Error::dim("Dataset::new", x.cols(), y.len()));
        }
        let feature_names = (1..=x.rows()).map(|i| format!("x{i}")).collect();
        Ok(Dataset {
            name: name.into(),
            feature_names,
            target_name: "y".into(),
            x,
            y,
        })
    }

    pub fn n_features(&self) -> usize {
        self.x.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    /// Sub-dataset made of the given sample indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Dataset<T> {
        Dataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            x: self.x.select_cols(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Columns to one-hot encode.
    pub categoricals: Vec<String>,
    /// Omit the first (lexicographically smallest) level of each categorical.
    pub drop_first: bool,
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "?" | "NA" | "NaN" | "nan")
}

/// Reads a headed CSV, one-hot encoding the `categoricals` columns.
///
/// Rows with a missing entry (`""`, `?`, `NA`) are dropped. Numeric columns
/// keep their header order; each categorical column expands in place into
/// one indicator per observed level, levels sorted lexicographically.
pub fn load_csv<T: Real>(path: &Path, target: &str, opts: &LoadOptions) -> Result<Dataset<T>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let target_col = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::Data(format!("{}: no target column named {target:?}", path.display())))?;
    for c in &opts.categoricals {
        if !headers.contains(c) {
            return Err(Error::Data(format!("{}: no categorical column named {c:?}", path.display())));
        }
        if c == target {
            return Err(Error::Data(format!("target column {target:?} cannot be categorical")));
        }
    }
    let is_cat: Vec<bool> = headers.iter().map(|h| opts.categoricals.contains(h)).collect();
    if headers.len() < 2 {
        return Err(Error::Data(format!("{}: need at least one feature column", path.display())));
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut dropped = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != headers.len() {
            return Err(Error::Data(format!(
                "{}: record has {} fields, header has {}",
                path.display(),
                rec.len(),
                headers.len()
            )));
        }
        if rec.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if dropped > 0 {
        warn!("{}: dropped {dropped} rows with missing values", path.display());
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no complete data rows", path.display())));
    }

    let parse = |s: &str, col: &str, line: usize| -> Result<T> {
        s.parse::<f64>().map(T::lit).map_err(|_| {
            Error::Data(format!(
                "{}: non-numeric value {s:?} in column {col:?} (data row {line}); list it as categorical",
                path.display()
            ))
        })
    };

    let mut levels: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (c, _) in is_cat.iter().enumerate().filter(|(_, &b)| b) {
        let set: BTreeSet<&str> = rows.iter().map(|r| r[c].as_str()).collect();
        let mut lv: Vec<String> = set.into_iter().map(str::to_string).collect();
        if opts.drop_first && !lv.is_empty() {
            lv.remove(0);
        }
        levels.insert(c, lv);
    }

    let mut feature_names = Vec::new();
    for (c, h) in headers.iter().enumerate() {
        if c == target_col {
            continue;
        }
        match levels.get(&c) {
            Some(lv) => feature_names.extend(lv.iter().map(|l| format!("{h}={l}"))),
            None => feature_names.push(h.clone()),
        }
    }
    let n0 = feature_names.len();
    if n0 == 0 {
        return Err(Error::Data(format!("{}: no features after encoding", path.display())));
    }
    let t = rows.len();
    let mut x = Matrix::zeros(n0, t);
    let mut y = Vec::with_capacity(t);
    for (j, r) in rows.iter().enumerate() {
        let mut f = 0;
        for (c, h) in headers.iter().enumerate() {
            if c == target_col {
                y.push(parse(&r[c], h, j + 1)?);
                continue;
            }
            match levels.get(&c) {
                Some(lv) => {
                    for l in lv {
                        x[(f, j)] = if *l == r[c] { T::one() } else { T::zero() };
                        f += 1;
                    }
                }
                None => {
                    x[(f, j)] = parse(&r[c], h, j + 1)?;
                    f += 1;
                }
            }
        }
    }
    info!("{}: {t} samples, {n0} features after encoding", path.display());
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(Dataset {
        name,
        feature_names,
        target_name: target.to_string(),
        x,
        y,
    })
}

/// Writes features then target, one row per sample, shortest round-trip floats.
pub fn write_dataset_csv<T: Real>(path: &Path, data: &Dataset<T>) -> Result<()> {
    let mut out = String::new();
    let mut header: Vec<&str> = data.feature_names.iter().map(String::as_str).collect();
    header.push(&data.target_name);
    out.push_str(&header.join(","));
    out.push('\n');
    for j in 0..data.n_samples() {
        for i in 0..data.n_features() {
            out.push_str(&data.x[(i, j)].to_string());
            out.push(',');
        }
        out.push_str(&data.y[j].to_string());
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Sample indices of a train/test split, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

/// Uniformly random split with `round(fraction · T)` training samples.
pub fn split_indices(t: usize, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if t < 4 {
        return Err(Error::Data(format!("need at least 4 samples to split, got {t}")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let n_train = ((train_fraction * t as f64).round() as usize).clamp(1, t - 1);
    let mut idx: Vec<usize> = (0..t).collect();
    idx.shuffle(&mut seeded(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn split<T: Real>(data: &Dataset<T>, train_fraction: f64, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
    let s = split_indices(data.n_samples(), train_fraction, seed)?;
    Ok((data.select(&s.train), data.select(&s.test)))
}

/// Contents of one error-curve file. Row `i` is `n = i + 1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CurveFile {
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    /// ELM `(mean, min, max)` columns.
    pub band: Option<[Vec<f64>; 3]>,
    /// `# phase,milliseconds` lines.
    pub timings: Vec<(String, f64)>,
    /// `#! key,value` lines.
    pub meta: Vec<(String, String)>,
}

impl CurveFile {
    pub fn new(train: Vec<f64>, test: Vec<f64>) -> Self {
        CurveFile {
            train,
            test,
            ..Default::default()
        }
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }
}

pub const CURVE_HEADER: &str = "n,train_err,test_err";
pub const BAND_HEADER: &str = "elm_mean,elm_min,elm_max";

pub fn format_error_curve(c: &CurveFile) -> Result<String> {
    let n = c.train.len();
    let band_ok = c.band.as_ref().is_none_or(|b| b.iter().all(|v| v.len() == n));
    if c.test.len() != n || !band_ok {
        return Err(Error::dim("write_error_curve_csv", n, c.test.len()));
    }
    let mut out = String::from(CURVE_HEADER);
    if c.band.is_some() {
        out.push(',');
        out.push_str(BAND_HEADER);
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&format!("{},{},{}", i + 1, c.train[i], c.test[i]));
        if let Some(b) = &c.band {
            out.push_str(&format!(",{},{},{}", b[0][i], b[1][i], b[2][i]));
        }
        out.push('\n');
    }
    for (k, v) in &c.meta {
        out.push_str(&format!("#! {k},{v}\n"));
    }
    for (phase, ms) in &c.timings {
        out.push_str(&format!("# {phase},{ms}\n"));
    }
    Ok(out)
}

pub fn write_error_curve_csv(path: &Path, c: &CurveFile) -> Result<()> {
    write_file(path, format_error_curve(c)?.as_bytes())
}

pub fn parse_error_curve(text: &str) -> Result<CurveFile> {
    let bad = |line: usize, msg: &str| Error::Data(format!("curve file line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let with_band = match header.trim() {
        h if h == CURVE_HEADER => false,
        h if h == format!("{CURVE_HEADER},{BAND_HEADER}") => true,
        h => return Err(bad(1, &format!("unexpected header {h:?}"))),
    };
    let mut c = CurveFile::default();
    let mut band = [Vec::new(), Vec::new(), Vec::new()];
    for (i, line) in lines {
        let ln = i + 1;
        if let Some(rest) = line.strip_prefix("#!") {
            let (k, v) = rest.trim().split_once(',').ok_or_else(|| bad(ln, "malformed metadata"))?;
            c.meta.push((k.to_string(), v.to_string()));
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.trim().split_once(',').ok_or_else(|| bad(ln, "malformed timing"))?;
            let ms = v.parse().map_err(|_| bad(ln, "timing is not a number"))?;
            c.timings.push((k.to_string(), ms));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        let want = if with_band { 6 } else { 3 };
        if vals.len() != want {
            return Err(bad(ln, &format!("expected {want} fields, got {}", vals.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(ln, &format!("bad number {s:?}")));
        let n: usize = vals[0].trim().parse().map_err(|_| bad(ln, "bad neuron count"))?;
        if n != c.train.len() + 1 {
            return Err(bad(ln, "neuron counts must run 1, 2, 3, ..."));
        }
        c.train.push(num(vals[1])?);
        c.test.push(num(vals[2])?);
        if with_band {
            for k in 0..3 {
                band[k].push(num(vals[3 + k])?);
            }
        }
    }
    if with_band {
        c.band = Some(band);
    }
    Ok(c)
}

pub fn read_error_curve_csv(path: &Path) -> Result<CurveFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_error_curve(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
