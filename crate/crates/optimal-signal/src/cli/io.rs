//! CSV ingestion with strict validation and timestamp-intersection joins.

use std::path::Path;

use chrono::NaiveDate;
use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{FeaturePanel, PriceSeries};

fn parse_date(path: &Path, row: usize, text: &str) -> Result<NaiveDate> {
    text.parse::<NaiveDate>().map_err(|_| Error::ParseError {
        path: path.display().to_string(),
        row,
        detail: format!("'{text}' is not an ISO-8601 date"),
    })
}

fn parse_value(path: &Path, row: usize, column: &str, text: &str) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| Error::ParseError {
        path: path.display().to_string(),
        row,
        detail: format!("column '{column}': '{text}' is not a number"),
    })
}

fn check_sorted(path: &Path, dates: &[NaiveDate]) -> Result<()> {
    for pair in dates.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::UnsortedInput {
                path: path.display().to_string(),
                date: pair[1].to_string(),
            });
        }
    }
    Ok(())
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            row: 0,
            detail: e.to_string(),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            row: 0,
            detail: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.first().map(String::as_str) != Some("date") {
        return Err(Error::ParseError {
            path: path.display().to_string(),
            row: 0,
            detail: "first column must be named 'date'".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            row: i + 1,
            detail: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::ParseError {
                path: path.display().to_string(),
                row: i + 1,
                detail: format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        rows.push(record);
    }
    Ok((headers, rows))
}

/// Parses a `date,price` CSV. Sortedness, positivity, and finiteness are
/// all enforced.
pub fn load_prices(path: &Path) -> Result<(Vec<NaiveDate>, Vec<f64>)> {
    let (headers, rows) = read_rows(path)?;
    if headers.len() != 2 {
        return Err(Error::ParseError {
            path: path.display().to_string(),
            row: 0,
            detail: format!("prices file must have exactly 2 columns, found {}", headers.len()),
        });
    }
    let mut dates = Vec::with_capacity(rows.len());
    let mut prices = Vec::with_capacity(rows.len());
    for (i, record) in rows.iter().enumerate() {
        dates.push(parse_date(path, i + 1, &record[0])?);
        prices.push(parse_value(path, i + 1, &headers[1], &record[1])?);
    }
    check_sorted(path, &dates)?;
    Ok((dates, prices))
}

/// Parses a `date,<name>,...` CSV. With `forward_fill`, empty cells take
/// the previous row's value; fill counts per column are returned for
/// logging.
pub fn load_features(
    path: &Path,
    forward_fill: bool,
) -> Result<(Vec<NaiveDate>, Array2<f64>, Vec<String>, Vec<usize>)> {
    let (headers, rows) = read_rows(path)?;
    if headers.len() < 2 {
        return Err(Error::ParseError {
            path: path.display().to_string(),
            row: 0,
            detail: "features file needs at least one value column".into(),
        });
    }
    let names: Vec<String> = headers[1..].to_vec();
    let cols = names.len();
    let mut dates = Vec::with_capacity(rows.len());
    let mut values = Array2::<f64>::zeros((rows.len(), cols));
    let mut fill_counts = vec![0usize; cols];
    for (i, record) in rows.iter().enumerate() {
        dates.push(parse_date(path, i + 1, &record[0])?);
        for c in 0..cols {
            let cell = &record[c + 1];
            if cell.is_empty() {
                if forward_fill && i > 0 {
                    values[(i, c)] = values[(i - 1, c)];
                    fill_counts[c] += 1;
                    continue;
                }
                return Err(Error::ParseError {
                    path: path.display().to_string(),
                    row: i + 1,
                    detail: format!(
                        "column '{}' is empty{}",
                        names[c],
                        if forward_fill {
                            " with no previous value to fill from"
                        } else {
                            "; enable forward_fill to fill gaps"
                        }
                    ),
                });
            }
            values[(i, c)] = parse_value(path, i + 1, &names[c], cell)?;
        }
    }
    check_sorted(path, &dates)?;
    Ok((dates, values, names, fill_counts))
}

/// Everything the commands need: aligned series plus join bookkeeping.
pub struct LoadedData {
    pub prices: PriceSeries,
    pub panel: FeaturePanel,
    pub rows_used: usize,
    pub dropped_price_rows: usize,
    pub dropped_feature_rows: usize,
    pub fill_counts: Vec<(String, usize)>,
}

/// Loads both files and joins them on the intersection of their
/// timestamps. Rows outside the intersection are dropped and counted.
pub fn load_aligned(
    prices_path: &Path,
    features_path: &Path,
    forward_fill: bool,
) -> Result<LoadedData> {
    let (price_dates, prices) = load_prices(prices_path)?;
    let (feature_dates, values, names, fills) = load_features(features_path, forward_fill)?;

    // Both sides sorted: intersect with two pointers.
    let mut price_keep = Vec::new();
    let mut feature_keep = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < price_dates.len() && j < feature_dates.len() {
        match price_dates[i].cmp(&feature_dates[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                price_keep.push(i);
                feature_keep.push(j);
                i += 1;
                j += 1;
            }
        }
    }
    if price_keep.len() < 2 {
        return Err(Error::EmptyIntersection);
    }

    let common_dates: Vec<NaiveDate> = price_keep.iter().map(|&k| price_dates[k]).collect();
    let common_prices: Vec<f64> = price_keep.iter().map(|&k| prices[k]).collect();
    let cols = names.len();
    let mut common_values = Array2::<f64>::zeros((feature_keep.len(), cols));
    for (row, &k) in feature_keep.iter().enumerate() {
        for c in 0..cols {
            common_values[(row, c)] = values[(k, c)];
        }
    }

    let dropped_price_rows = price_dates.len() - price_keep.len();
    let dropped_feature_rows = feature_dates.len() - feature_keep.len();
    let prices = PriceSeries::new(common_dates.clone(), common_prices)?;
    let panel = FeaturePanel::new(common_dates, common_values, names.clone())?;
    Ok(LoadedData {
        rows_used: prices.len(),
        prices,
        panel,
        dropped_price_rows,
        dropped_feature_rows,
        fill_counts: names.into_iter().zip(fills).collect(),
    })
}

/// SHA-256 of a file's raw bytes, hex encoded.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
