use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::Dataset;
use crate::{Error, Result};

/// Read a numeric CSV file; `label_column` is 0-based, remaining columns become features.
///
/// A first row in which no cell parses as a number is treated as a header.
pub fn load_csv_dataset(path: &Path, label_column: usize, normalize_scale: Option<f64>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| crate::Error::io(path, e))?;
    parse_csv_dataset(file, label_column, normalize_scale)
}

pub fn parse_csv_dataset<R: Read>(reader: R, label_column: usize, normalize_scale: Option<f64>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut width: Option<usize> = None;
    let mut feats: Vec<f64> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut first = true;
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Ingestion {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if rec.iter().all(|c| c.parse::<f64>().is_err()) {
                continue;
            }
        }
        match width {
            None => {
                if label_column >= rec.len() {
                    return Err(Error::Ingestion {
                        row,
                        column: label_column + 1,
                        message: format!("label column {label_column} out of range for {} columns", rec.len()),
                    });
                }
                width = Some(rec.len());
            }
            Some(w) if w != rec.len() => {
                return Err(Error::Ingestion {
                    row,
                    column: rec.len().min(w) + 1,
                    message: format!("ragged row: {} cells, expected {w}", rec.len()),
                });
            }
            _ => {}
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Ingestion {
                row,
                column: c + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingestion {
                    row,
                    column: c + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            if c == label_column {
                labels.push(v);
            } else {
                feats.push(v);
            }
        }
    }
    let Some(w) = width else {
        return Err(Error::Ingestion {
            row: 0,
            column: 0,
            message: "no data rows".into(),
        });
    };
    let n = labels.len();
    let x = Array2::from_shape_vec((n, w - 1), feats).expect("row widths checked");
    let ds = Dataset::new(x, Array1::from(labels))?;
    match normalize_scale {
        Some(s) => ds.scaled(s),
        None => Ok(ds),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let text = "1,0,1\n0,1,2\n0,0,3\n";
        let ds = parse_csv_dataset(text.as_bytes(), 2, None).unwrap();
        assert_eq!((ds.n(), ds.dim()), (3, 2));
        assert_eq!(ds.radius(), 1.0);
        assert_eq!(ds.label_bound(), 3.0);
        let ds = parse_csv_dataset(text.as_bytes(), 2, Some(0.5)).unwrap();
        assert_eq!(ds.radius(), 0.5);
    }

    #[test]
    fn header_is_skipped() {
        let ds = parse_csv_dataset("x1,x2,y\n1,0,1\n0,1,2\n".as_bytes(), 2, None).unwrap();
        assert_eq!(ds.n(), 2);
    }

    #[test]
    fn nan_cell_reports_coordinates() {
        let err = parse_csv_dataset("1,0,1\n0,NaN,2\n".as_bytes(), 2, None).unwrap_err();
        assert!(matches!(err, Error::Ingestion { row: 2, column: 2, .. }), "{err}");
    }

    #[test]
    fn garbage_and_ragged_rows() {
        let err = parse_csv_dataset("1,0,1\n0,abc,2\n".as_bytes(), 2, None).unwrap_err();
        assert!(matches!(err, Error::Ingestion { row: 2, column: 2, .. }));
        let err = parse_csv_dataset("1,0,1\n0,2\n".as_bytes(), 2, None).unwrap_err();
        assert!(matches!(err, Error::Ingestion { row: 2, .. }));
        assert!(parse_csv_dataset("1,0\n".as_bytes(), 5, None).is_err());
    }
}
