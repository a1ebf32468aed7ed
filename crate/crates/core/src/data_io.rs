//! Synthetic sampling, CSV ingestion, splitting and resampling.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::threshold::GaussianMarketSpec;

/// Draws `m` labeled points: `y = +1` with probability `prior`, then
/// `x | y ~ Normal(a * y, sigma_y)`.
pub fn sample_gaussian_market(spec: &GaussianMarketSpec, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::Empty("sample size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    for _ in 0..m {
        let positive = rng.random_bool(spec.prior);
        let z: f64 = StandardNormal.sample(&mut rng);
        let x = if positive {
            spec.a + spec.sigma_pos * z
        } else {
            -spec.a + spec.sigma_neg * z
        };
        xs.push(x);
        ys.push(if positive { 1 } else { -1 });
    }
    Ok(Dataset::from_scalars(xs, ys)?.with_name(format!(
        "gaussian(a={}, sigma_neg={}, sigma_pos={}, prior={})",
        spec.a, spec.sigma_neg, spec.sigma_pos, spec.prior
    )))
}

fn same_label(cell: &str, positive: &str) -> bool {
    let (c, p) = (cell.trim(), positive.trim());
    if c == p {
        return true;
    }
    matches!((c.parse::<f64>(), p.parse::<f64>()), (Ok(a), Ok(b)) if a == b)
}

/// Reads a numeric CSV with a header row. `label_column` is mapped to +1
/// where it equals `positive_label` (textually or numerically) and -1
/// elsewhere; every other column becomes a feature, in file order.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, positive_label: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let data = read_csv(file, label_column, positive_label)?;
    Ok(match name {
        Some(n) => data.with_name(n),
        None => data,
    })
}

/// [`load_csv`] over any reader.
pub fn read_csv(reader: impl Read, label_column: &str, positive_label: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Empty("csv file"));
    }
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // Row numbers count the header as row 1.
        let row = r + 2;
        for (k, cell) in record.iter().enumerate() {
            if k == label_idx {
                labels.push(if same_label(cell, positive_label) { 1 } else { -1 });
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumeric {
                    row,
                    column: headers[k].trim().to_string(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        row,
                        column: headers[k].trim().to_string(),
                        value: cell.to_string(),
                    });
                }
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Empty("csv file has no data rows"));
    }
    let d = feature_names.len();
    Dataset::from_flat(features, d, labels)?.with_feature_names(feature_names)
}

/// Writes `data` as CSV: feature columns (named, or `x0, x1, ...`) followed
/// by `label_column` holding 1 / -1. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let mut buf = Vec::new();
    write_csv_to(data, &mut buf, label_column)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn write_csv_to(data: &Dataset, writer: impl Write, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..data.dim()).map(|k| format!("x{k}")).collect(),
    };
    header.push(label_column.to_string());
    w.write_record(&header)?;
    for (row, &y) in data.rows().zip(data.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Seeded shuffle, then the first `ceil(m * (1 - f))` rows train and the
/// rest test. The train side is capped at `m - 1` so both parts are nonempty.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let f = spec.test_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidParameter(format!("test fraction {f} outside (0, 1)")));
    }
    let m = data.len();
    if m < 2 {
        return Err(Error::InvalidParameter("splitting needs at least two examples".into()));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    // The small slack absorbs representation error in products like 10 * 0.8.
    let train_len = ((m as f64 * (1.0 - f) - 1e-9).ceil() as usize).clamp(1, m - 1);
    let (a, b) = idx.split_at(train_len);
    Ok((data.select_rows(a), data.select_rows(b)))
}

/// Random oversampling of the minority side toward `target` positive
/// fraction. Original rows come first, in order, followed by duplicates.
pub fn rebalance(data: &Dataset, target: f64, seed: u64) -> Result<Dataset> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!("target ratio {target} outside (0, 1)")));
    }
    let m = data.len() as f64;
    let pos = data.positive_count();
    if pos == 0 || pos == data.len() {
        return Err(Error::InvalidDataset("rebalancing needs both classes".into()));
    }
    let p = pos as f64;
    // Positives: (p + k) / (m + k) = t. Negatives: p / (m + k) = t.
    let (from_positive, extra) = if p / m < target {
        (true, ((target * m - p) / (1.0 - target)).round() as usize)
    } else {
        (false, (p / target - m).round().max(0.0) as usize)
    };
    let pool: Vec<usize> = (0..data.len())
        .filter(|&j| (data.label(j) == 1) == from_positive)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..data.len()).collect();
    rows.extend((0..extra).map(|_| pool[rng.random_range(0..pool.len())]));
    Ok(data.select_rows(&rows))
}

/// The first `k` feature columns.
pub fn restrict_features(data: &Dataset, k: usize) -> Result<Dataset> {
    data.prefix_columns(k)
}

/// `size` distinct rows chosen uniformly at random, kept in original order.
pub fn subsample(data: &Dataset, size: usize, seed: u64) -> Result<Dataset> {
    if size == 0 || size > data.len() {
        return Err(Error::InvalidParameter(format!(
            "subsample size {size} outside 1..={}",
            data.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, data.len(), size).into_vec();
    idx.sort_unstable();
    Ok(data.select_rows(&idx))
}
