//! Dataset CSV: numeric feature columns plus one integer label column.
//! Written files carry a `f0,...,f{d-1},label` header and shortest
//! round-trip decimal floats.

use std::fs;
use std::path::Path;

use splitz_core::data::Dataset;
use splitz_core::matrix::Matrix;

use crate::error::CliError;

/// Parse a rectangular numeric table with an integer label column
/// (negative index not supported; counts from zero). Categorical columns
/// must be numerically pre-encoded.
pub fn load_csv(path: &Path, has_header: bool, label_column: usize) -> Result<Dataset, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    parse_csv(&text, has_header, label_column)
        .map_err(|m| CliError::format(path.display().to_string(), m))
}

pub(crate) fn parse_csv(
    text: &str,
    has_header: bool,
    label_column: usize,
) -> Result<Dataset, String> {
    let mut lines = text.lines().enumerate();
    if has_header {
        match lines.next() {
            Some((_, header)) if !header.trim().is_empty() => {}
            _ => return Err("missing header row".into()),
        }
    }
    let mut width = None;
    let mut entries = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let w = *width.get_or_insert(cells.len());
        if cells.len() != w {
            return Err(format!(
                "line {}: {} cells, expected {w}",
                lineno + 1,
                cells.len()
            ));
        }
        if label_column >= w {
            return Err(format!("label column {label_column} outside {w} columns"));
        }
        for (c, cell) in cells.iter().enumerate() {
            if c == label_column {
                let label: i64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| format!("line {}: label '{cell}' is not an integer", lineno + 1))?;
                if label < 0 {
                    return Err(format!("line {}: negative label {label}", lineno + 1));
                }
                labels.push(label as usize);
            } else {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| format!("line {}: cell '{cell}' is not numeric", lineno + 1))?;
                if !v.is_finite() {
                    return Err(format!("line {}: non-finite cell", lineno + 1));
                }
                entries.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err("no data rows".into());
    }
    let dim = width.unwrap() - 1;
    if dim == 0 {
        return Err("no feature columns".into());
    }
    let num_classes = labels.iter().max().unwrap() + 1;
    let features =
        Matrix::new(labels.len(), dim, entries).map_err(|e| e.to_string())?;
    Dataset::new(features, labels, num_classes.max(2)).map_err(|e| e.to_string())
}

/// Write with the generated-dataset convention: features first, label last.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    for j in 0..ds.dim() {
        out.push_str(&format!("f{j},"));
    }
    out.push_str("label\n");
    for i in 0..ds.len() {
        let (x, label) = ds.example(i);
        for v in x {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{label}\n"));
    }
    fs::write(path, out).map_err(|e| CliError::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use splitz_core::data::gen_blobs;
    use tempfile::tempdir;

    #[test]
    fn hand_written_rows_are_recovered_exactly() {
        let ds = parse_csv("a,b,label\n0.5,-1.25,0\n3,4.75,1\n-0.125,2,1\n", true, 2).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.features.row(0), &[0.5, -1.25]);
        assert_eq!(ds.features.row(2), &[-0.125, 2.0]);
        assert_eq!(ds.labels, vec![0, 1, 1]);
    }

    #[test]
    fn header_mismatch_is_an_error() {
        // Declared as headered but the file starts with data: the header
        // swallows the first row, and a truly empty file has no header.
        assert!(parse_csv("", true, 2).is_err());
        // Ragged rows are rejected.
        assert!(parse_csv("a,b,label\n1,2,0\n1,2\n", true, 2).is_err());
        // Non-numeric cells are rejected.
        assert!(parse_csv("a,b,label\n1,x,0\n", true, 2).is_err());
        // Non-integer and negative labels are rejected.
        assert!(parse_csv("a,b,label\n1,2,0.5\n", true, 2).is_err());
        assert!(parse_csv("a,b,label\n1,2,-1\n", true, 2).is_err());
    }

    #[test]
    fn round_trip_write_then_read_is_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("blobs.csv");
        let ds = gen_blobs(50, 3, 4, 3.0, 2).unwrap();
        save_csv(&ds, &path).unwrap();
        let back = load_csv(&path, true, 4).unwrap();
        assert_eq!(back.features, ds.features);
        assert_eq!(back.labels, ds.labels);
    }

    #[test]
    fn label_column_in_the_middle_works() {
        let ds = parse_csv("1.0,0,2.0\n3.0,1,4.0\n", false, 1).unwrap();
        assert_eq!(ds.features.row(0), &[1.0, 2.0]);
        assert_eq!(ds.features.row(1), &[3.0, 4.0]);
        assert_eq!(ds.labels, vec![0, 1]);
    }
}
