//! CSV ingestion: a header row, `time` and `event` columns, then covariates.

use std::path::Path;

use srcox::{Subject, SurvivalDataset};

#[derive(Debug)]
pub struct LoadedData {
    pub dataset: SurvivalDataset,
    pub rows_read: usize,
    pub rows_dropped: usize,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan")
}

fn open(path: &Path) -> Result<(csv::StringRecord, Vec<(u64, csv::StringRecord)>), String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let header = reader
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .clone();
    if header.is_empty() {
        return Err(format!("{}: empty file or missing header row", path.display()));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok((header, rows))
}

fn column(header: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, String> {
    header.iter().position(|h| h == name).ok_or_else(|| {
        format!(
            "{}: column `{name}` not found (header: {})",
            path.display(),
            header.iter().collect::<Vec<_>>().join(", ")
        )
    })
}

fn number(field: &str, line: u64, name: &str) -> Result<f64, String> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("line {line}: column `{name}` has non-numeric value `{field}`"))
}

/// Loads survival data keeping the named covariates in the given order.
/// Rows missing any used value are dropped and counted.
pub fn load_survival_csv(path: &Path, covariates: &[&str]) -> Result<LoadedData, String> {
    let (header, rows) = open(path)?;
    if rows.is_empty() {
        return Err(format!("{}: no data rows", path.display()));
    }
    let time_col = column(&header, "time", path)?;
    let event_col = column(&header, "event", path)?;
    let cov_cols = covariates
        .iter()
        .map(|c| column(&header, c, path))
        .collect::<Result<Vec<_>, _>>()?;

    let mut subjects = Vec::with_capacity(rows.len());
    let mut dropped = 0;
    for (line, rec) in &rows {
        if rec.len() != header.len() {
            return Err(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                rec.len()
            ));
        }
        let used = std::iter::once(time_col)
            .chain(std::iter::once(event_col))
            .chain(cov_cols.iter().copied());
        if used.clone().any(|c| is_missing(&rec[c])) {
            dropped += 1;
            continue;
        }
        let time = number(&rec[time_col], *line, "time")?;
        if time <= 0.0 {
            return Err(format!("line {line}: time must be positive, got {time}"));
        }
        let event = match rec[event_col].trim() {
            "1" | "1.0" => true,
            "0" | "0.0" => false,
            other => return Err(format!("line {line}: event must be 0 or 1, got `{other}`")),
        };
        let values = cov_cols
            .iter()
            .zip(covariates)
            .map(|(&c, name)| number(&rec[c], *line, name))
            .collect::<Result<Vec<_>, _>>()?;
        subjects.push(Subject::new(time, event, values));
    }
    let dataset = SurvivalDataset::new(subjects, covariates.iter().map(|s| s.to_string()).collect())
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(LoadedData {
        dataset,
        rows_read: rows.len(),
        rows_dropped: dropped,
    })
}

/// Covariate rows for prediction; `time`/`event` are not required. Rows
/// missing a used value come back as `None`.
pub fn load_covariates_csv(
    path: &Path,
    covariates: &[String],
) -> Result<Vec<Option<Vec<f64>>>, String> {
    let (header, rows) = open(path)?;
    let cols = covariates
        .iter()
        .map(|c| column(&header, c, path))
        .collect::<Result<Vec<_>, _>>()?;
    rows.iter()
        .map(|(line, rec)| {
            if cols.iter().any(|&c| is_missing(rec.get(c).unwrap_or(""))) {
                return Ok(None);
            }
            cols.iter()
                .zip(covariates)
                .map(|(&c, name)| number(&rec[c], *line, name))
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
        })
        .collect()
}
