//! CSV readers and writers for datasets, covariates, label matrices and the
//! UCI optdigits format.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{encode_factors, validate_dataset, BinaryDataset, CovariateDesign};
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Raw records with 1-based line numbers.
fn read_records(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

fn is_integer_row(cells: &[String]) -> bool {
    cells.iter().all(|c| c.parse::<i64>().is_ok())
}

/// An integer matrix read from CSV with optional identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerTable {
    pub rows: Vec<Vec<i64>>,
    pub unit_ids: Option<Vec<String>>,
    pub var_ids: Option<Vec<String>>,
}

/// Read an integer CSV. A first row containing any non-integer cell is a
/// header; when the header's first cell is `id` the first column holds unit
/// identifiers.
pub fn read_integer_csv(path: &Path) -> Result<IntegerTable> {
    let mut records = read_records(path)?.into_iter().peekable();
    let mut var_ids = None;
    let mut has_id = false;
    if let Some((_, first)) = records.peek() {
        if !is_integer_row(first) {
            let (_, header) = records.next().expect("peeked");
            has_id = header.first().is_some_and(|h| h == "id");
            var_ids = Some(header.into_iter().skip(usize::from(has_id)).collect());
        }
    }
    let mut rows = Vec::new();
    let mut unit_ids = has_id.then(Vec::new);
    for (line, cells) in records {
        let mut cells = cells.into_iter();
        if let Some(ids) = unit_ids.as_mut() {
            ids.push(cells.next().unwrap_or_default());
        }
        let row = cells
            .map(|c| {
                c.parse::<i64>()
                    .map_err(|_| parse_err(path, line, format!("`{c}` is not an integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(IntegerTable {
        rows,
        unit_ids,
        var_ids,
    })
}

/// Read a binary dataset: rows are units, columns are variables.
pub fn read_binary_csv(path: &Path) -> Result<BinaryDataset> {
    let table = read_integer_csv(path)?;
    let n = table.rows.len();
    let p = table
        .var_ids
        .as_ref()
        .map_or_else(|| table.rows.first().map_or(0, Vec::len), Vec::len);
    let unit_ids = table
        .unit_ids
        .unwrap_or_else(|| (1..=n).map(|i| i.to_string()).collect());
    let var_ids = table
        .var_ids
        .unwrap_or_else(|| (1..=p).map(|j| format!("V{j}")).collect());
    validate_dataset(&table.rows, unit_ids, var_ids)
}

/// Read a covariate table: header row of factor names, one row per variable
/// in the column order of the data file, cells are level labels.
pub fn read_covariates_csv(path: &Path, p: usize) -> Result<CovariateDesign> {
    let records = read_records(path)?;
    let Some(((_, header), body)) = records.split_first() else {
        return Err(parse_err(path, 1, "missing header row"));
    };
    if body.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "covariate file has {} rows for {p} variables",
            body.len()
        )));
    }
    let mut columns: Vec<(String, Vec<String>)> =
        header.iter().map(|h| (h.clone(), Vec::with_capacity(p))).collect();
    for (line, cells) in body {
        if cells.len() != header.len() {
            return Err(parse_err(
                path,
                *line,
                format!("expected {} cells, found {}", header.len(), cells.len()),
            ));
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.1.push(cell.clone());
        }
    }
    encode_factors(&columns, p)
}

/// Read UCI optdigits: 64 integer pixels in `[0, 16]` followed by the class
/// label on each row. Returns the pixel matrix and the labels.
pub fn read_optdigits(path: &Path) -> Result<(Vec<Vec<i64>>, Vec<usize>)> {
    const PIXELS: usize = 64;
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for (line, cells) in read_records(path)? {
        if cells.len() != PIXELS + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", PIXELS + 1, cells.len()),
            ));
        }
        let values = cells
            .iter()
            .map(|c| {
                c.parse::<i64>()
                    .map_err(|_| parse_err(path, line, format!("`{c}` is not an integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(v) = values[..PIXELS].iter().find(|v| !(0..=16).contains(*v)) {
            return Err(parse_err(path, line, format!("pixel value {v} outside [0, 16]")));
        }
        let label = values[PIXELS];
        if label < 0 {
            return Err(parse_err(path, line, "negative class label"));
        }
        labels.push(label as usize);
        pixels.push(values[..PIXELS].to_vec());
    }
    Ok((pixels, labels))
}

/// Read a matrix of cluster labels (one draw per row), with an optional
/// header row.
pub fn read_label_matrix(path: &Path) -> Result<Vec<Vec<usize>>> {
    let table = read_integer_csv(path)?;
    let width = table.rows.first().map_or(0, Vec::len);
    table
        .rows
        .into_iter()
        .enumerate()
        .map(|(r, row)| {
            if row.len() != width {
                return Err(Error::RaggedRow {
                    row: r,
                    found: row.len(),
                    expected: width,
                });
            }
            row.into_iter()
                .map(|v| {
                    usize::try_from(v).map_err(|_| {
                        Error::DimensionMismatch(format!("negative label {v} in row {r}"))
                    })
                })
                .collect()
        })
        .collect()
}

/// Read a single labelling, either one column or one row.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let m = read_label_matrix(path)?;
    match m.as_slice() {
        [row] => Ok(row.clone()),
        rows if rows.iter().all(|r| r.len() == 1) => Ok(rows.iter().map(|r| r[0]).collect()),
        _ => Err(Error::DimensionMismatch(
            "labels must be a single row or a single column".into(),
        )),
    }
}

/// Read a real-valued matrix, skipping a non-numeric header row.
pub fn read_real_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut records = read_records(path)?;
    if let Some((_, first)) = records.first() {
        if first.iter().any(|c| c.parse::<f64>().is_err()) {
            records.remove(0);
        }
    }
    records
        .into_iter()
        .map(|(line, cells)| {
            cells
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| parse_err(path, line, format!("`{c}` is not a number")))
                })
                .collect()
        })
        .collect()
}

/// Write rows of displayable cells as CSV with an optional header.
pub fn write_csv<T: ToString>(
    path: &Path,
    header: Option<&[&str]>,
    rows: impl IntoIterator<Item = Vec<T>>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if let Some(h) = header {
        writeln!(w, "{}", h.join(","))?;
    }
    for row in rows {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_file(contents: &str) -> tempfile::TempPath {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.into_temp_path()
    }

    #[test]
    fn reads_header_and_ids() {
        let f = temp_file("id,a,b\nx,0,1\ny,1,1\n");
        let d = read_binary_csv(&f).unwrap();
        assert_eq!(d.unit_ids(), &["x", "y"]);
        assert_eq!(d.var_ids(), &["a", "b"]);
        assert_eq!(d.row(1), &[1, 1]);
    }

    #[test]
    fn reads_bare_matrix() {
        let f = temp_file("0,1,0\n1,1,1\n");
        let d = read_binary_csv(&f).unwrap();
        assert_eq!((d.n(), d.p()), (2, 3));
        assert_eq!(d.var_ids()[2], "V3");
    }

    #[test]
    fn optdigits_line_numbers() {
        let good: Vec<String> = (0..64).map(|i| (i % 17).to_string()).collect();
        let mut text = format!("{},3\n", good.join(","));
        text.push_str(&format!("{},x\n", good.join(",")));
        let f = temp_file(&text);
        match read_optdigits(&f) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn covariates_round_trip() {
        let f = temp_file("habitat,elev\nF,1\nP,2\nF,3\n");
        let d = read_covariates_csv(&f, 3).unwrap();
        assert_eq!(d.q(), 1 + 1 + 2);
        assert_eq!(d.row(1), &[1.0, -1.0, 0.0, 1.0]);
        assert!(read_covariates_csv(&f, 4).is_err());
    }

    #[test]
    fn label_matrix_and_writer() {
        let f = temp_file("");
        write_csv(&f, Some(&["u1", "u2"]), vec![vec![1, 2], vec![2, 2]]).unwrap();
        assert_eq!(read_label_matrix(&f).unwrap(), vec![vec![1, 2], vec![2, 2]]);
        let mut file = std::fs::File::create(&*f).unwrap();
        writeln!(file, "3\n1\n2").unwrap();
        assert_eq!(read_labels(&f).unwrap(), vec![3, 1, 2]);
    }
}
