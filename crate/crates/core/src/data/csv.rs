use std::path::Path;

use super::{Dataset, ATTACK, BENIGN};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Parses a label cell. Numbers map to attack when non-zero; text accepts
/// `attack` / `benign` / `normal` in any case. Anything else is unusable.
fn parse_label(cell: &str) -> Option<u8> {
    let cell = cell.trim();
    if let Ok(v) = cell.parse::<f64>() {
        if !v.is_finite() {
            return None;
        }
        return Some(if v != 0.0 { ATTACK } else { BENIGN });
    }
    match cell.to_ascii_lowercase().as_str() {
        "attack" => Some(ATTACK),
        "benign" | "normal" => Some(BENIGN),
        _ => None,
    }
}

/// Loads a headed, comma-separated file. `drop_columns` are removed from the
/// features; rows with any non-numeric or non-finite feature (or an unreadable
/// label) are discarded.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, drop_columns: &[&str]) -> Result<Dataset> {
    let path = path.as_ref();
    let parse_err = |e: ::csv::Error| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            ::csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse {
                path: path.to_path_buf(),
                message: format!("{other:?}"),
            },
        })?;
    let headers = reader.headers().map_err(parse_err)?.clone();

    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Schema(format!("label column `{label_column}` not found in {}", path.display())))?;
    for d in drop_columns {
        if !headers.iter().any(|h| h == *d) {
            return Err(Error::Schema(format!("drop column `{d}` not found in {}", path.display())));
        }
    }
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && !drop_columns.contains(&&headers[i]))
        .collect();
    let names: Vec<String> = keep.iter().map(|&i| headers[i].to_string()).collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut row = Vec::with_capacity(keep.len());
    for record in reader.records() {
        let record = record.map_err(parse_err)?;
        let Some(label) = record.get(label_idx).and_then(parse_label) else {
            continue;
        };
        row.clear();
        let ok = keep.iter().all(|&i| match record.get(i).map(|c| c.parse::<f64>()) {
            Some(Ok(v)) if v.is_finite() => {
                row.push(v);
                true
            }
            _ => false,
        });
        if ok {
            values.extend_from_slice(&row);
            labels.push(label);
        }
    }

    if labels.is_empty() {
        return Err(Error::EmptyData(format!("{} has no clean rows", path.display())));
    }
    let features = Matrix::from_vec(labels.len(), keep.len(), values)?;
    Dataset::with_names(features, labels, names)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn infinite_row_is_discarded() {
        let f = write_tmp("a,b,Label\n1,2,0\n3,inf,1\n5,6,1\n");
        let ds = load_csv(f.path(), "Label", &[]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels, vec![0, 1]);
    }

    #[test]
    fn nan_and_text_rows_are_discarded() {
        let f = write_tmp("a,b,Label\n1,NaN,0\n3,x,1\n5,6,Attack\n7,8,BENIGN\n");
        let ds = load_csv(f.path(), "Label", &[]).unwrap();
        assert_eq!(ds.labels, vec![1, 0]);
        assert_eq!(ds.features.row(0), &[5.0, 6.0]);
    }

    #[test]
    fn dropped_columns_leave_the_rest() {
        let f = write_tmp("a,b,Label\n1,2,0\n");
        let ds = load_csv(f.path(), "Label", &["a"]).unwrap();
        assert_eq!(ds.feature_names, vec!["b".to_string()]);
        assert_eq!(ds.dim(), 1);
    }

    #[test]
    fn nonzero_numeric_label_is_attack() {
        let f = write_tmp("a,Label\n1,0\n2,2\n3,1.0\n");
        assert_eq!(load_csv(f.path(), "Label", &[]).unwrap().labels, vec![0, 1, 1]);
    }

    #[test]
    fn missing_label_or_drop_column_is_schema_error() {
        let f = write_tmp("a,b\n1,2\n");
        assert!(matches!(load_csv(f.path(), "Label", &[]), Err(Error::Schema(_))));
        let g = write_tmp("a,Label\n1,0\n");
        assert!(matches!(load_csv(g.path(), "Label", &["zz"]), Err(Error::Schema(_))));
    }

    #[test]
    fn all_rows_dirty_is_empty_error() {
        let f = write_tmp("a,Label\nnan,0\n");
        assert!(matches!(load_csv(f.path(), "Label", &[]), Err(Error::EmptyData(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_csv("/definitely/not/here.csv", "Label", &[]),
            Err(Error::Io { .. })
        ));
    }
}
