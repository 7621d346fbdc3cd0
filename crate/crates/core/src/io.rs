//! CSV layouts.
//!
//! | content        | columns                          |
//! |----------------|----------------------------------|
//! | distribution   | `x_1, …, x_d, mass, eta`         |
//! | labeled data   | `x_1, …, x_d, y`                 |
//! | unlabeled data | `x_1, …, x_d`                    |
//! | scores         | one column, header optional      |
//! | predictions    | `x_1, …, x_d, score, prediction` |
//!
//! Every file except the score file carries a header row. Floats are written
//! in shortest round-trip form, so reading a written file reproduces it exactly.

use std::path::Path;

use crate::error::{FbetaError, Result};
use crate::fbeta::DiscreteDistribution;
use crate::plugin::UnlabeledDataset;
use crate::regression::LabeledDataset;
use crate::threshold::ScoreSample;

fn coordinate_header(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x_{j}")).collect()
}

fn parse(field: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| FbetaError::Invalid(format!("row {row}: cannot parse {field:?} as a number")))
}

/// Reads a headed numeric table; returns the header and the rows.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = record.iter().map(|f| parse(f, r + 1)).collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn expect_tail(header: &[String], tail: &[&str]) -> Result<usize> {
    let d = header.len().checked_sub(tail.len()).filter(|&d| d >= 1).ok_or_else(|| {
        FbetaError::Invalid(format!("expected columns x_1..x_d, {}", tail.join(", ")))
    })?;
    if header[d..].iter().zip(tail).any(|(h, t)| h != t) {
        return Err(FbetaError::Invalid(format!(
            "expected trailing columns {:?}, found {:?}",
            tail,
            &header[d..]
        )));
    }
    Ok(d)
}

pub fn write_distribution_csv(path: &Path, dist: &DiscreteDistribution) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = coordinate_header(dist.dim());
    header.extend(["mass".to_string(), "eta".to_string()]);
    w.write_record(&header)?;
    for i in 0..dist.len() {
        let mut row: Vec<String> = dist.point(i).iter().map(f64::to_string).collect();
        row.push(dist.mass()[i].to_string());
        row.push(dist.eta()[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_distribution_csv(path: &Path) -> Result<DiscreteDistribution> {
    let (header, rows) = read_table(path)?;
    let d = expect_tail(&header, &["mass", "eta"])?;
    let mut points = Vec::with_capacity(rows.len() * d);
    let (mut mass, mut eta) = (Vec::new(), Vec::new());
    for row in rows {
        points.extend_from_slice(&row[..d]);
        mass.push(row[d]);
        eta.push(row[d + 1]);
    }
    DiscreteDistribution::new(d, points, mass, eta)
}

pub fn write_labeled_csv(path: &Path, data: &LabeledDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = coordinate_header(data.dim());
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.point(i).iter().map(f64::to_string).collect();
        row.push(data.labels()[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labeled_csv(path: &Path) -> Result<LabeledDataset> {
    let (header, rows) = read_table(path)?;
    let d = expect_tail(&header, &["y"])?;
    let mut points = Vec::with_capacity(rows.len() * d);
    let mut labels = Vec::with_capacity(rows.len());
    for (r, row) in rows.into_iter().enumerate() {
        points.extend_from_slice(&row[..d]);
        let y = row[d];
        if y != 0.0 && y != 1.0 {
            return Err(FbetaError::Invalid(format!("row {}: label {y} is not 0 or 1", r + 1)));
        }
        labels.push(y as u8);
    }
    LabeledDataset::new(d, points, labels)
}

pub fn write_unlabeled_csv(path: &Path, data: &UnlabeledDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(coordinate_header(data.dim()))?;
    for i in 0..data.len() {
        w.write_record(data.point(i).iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_unlabeled_csv(path: &Path) -> Result<UnlabeledDataset> {
    let (header, rows) = read_table(path)?;
    if header.is_empty() {
        return Err(FbetaError::Invalid("unlabeled data needs at least one column".into()));
    }
    UnlabeledDataset::new(header.len(), rows.concat())
}

/// One column of scores; a non-numeric first line is taken as a header.
pub fn read_scores_csv(path: &Path) -> Result<ScoreSample> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut values = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            return Err(FbetaError::Invalid(format!("row {}: expected one column", r + 1)));
        }
        match record[0].trim().parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if r == 0 => {}
            Err(_) => return Err(FbetaError::Invalid(format!("row {}: {:?} is not a number", r + 1, &record[0]))),
        }
    }
    ScoreSample::new(values)
}

pub fn write_scores_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["score"])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_predictions_csv(path: &Path, data: &UnlabeledDataset, scores: &[f64], predictions: &[bool]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = coordinate_header(data.dim());
    header.extend(["score".to_string(), "prediction".to_string()]);
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.point(i).iter().map(f64::to_string).collect();
        row.push(scores[i].to_string());
        row.push(u8::from(predictions[i]).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dist.csv");
        let dist = DiscreteDistribution::from_rows(
            &[vec![0.1, -2.0], vec![1.0 / 3.0, 5e-17]],
            vec![0.3, 0.7],
            vec![0.9, 1.0 / 7.0],
        )
        .unwrap();
        write_distribution_csv(&path, &dist).unwrap();
        assert_eq!(read_distribution_csv(&path).unwrap(), dist);
    }

    #[test]
    fn labeled_round_trip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = LabeledDataset::new(1, vec![0.25, 0.1 + 0.2], vec![1, 0]).unwrap();
        write_labeled_csv(&path, &data).unwrap();
        assert_eq!(read_labeled_csv(&path).unwrap(), data);
        std::fs::write(&path, "x_1,y\n0.5,2\n").unwrap();
        assert!(read_labeled_csv(&path).is_err());
        std::fs::write(&path, "x_1,label\n0.5,1\n").unwrap();
        assert!(read_labeled_csv(&path).is_err());
    }

    #[test]
    fn scores_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "score\n0.2\n0.6\n1\n").unwrap();
        assert_eq!(read_scores_csv(&path).unwrap().values(), &[0.2, 0.6, 1.0]);
        std::fs::write(&path, "0.2\n0.6\n").unwrap();
        assert_eq!(read_scores_csv(&path).unwrap().values(), &[0.2, 0.6]);
        std::fs::write(&path, "0.2\nabc\n").unwrap();
        assert!(read_scores_csv(&path).is_err());
    }
}
