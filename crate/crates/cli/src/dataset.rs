//! CSV ingestion and the numeric output format.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column selected by zero-based index or by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub x_column: ColumnRef,
    pub y_column: ColumnRef,
    pub delimiter: u8,
    pub rescale: Option<f64>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            x_column: ColumnRef::Index(0),
            y_column: ColumnRef::Index(1),
            delimiter: b',',
            rescale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub source: PathBuf,
    pub rescale: Option<f64>,
    pub rows: usize,
}

/// Paired sample locations and measurements; `x` is strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

fn resolve(
    column: &ColumnRef,
    header: Option<&csv::StringRecord>,
) -> std::result::Result<usize, String> {
    match column {
        ColumnRef::Index(i) => Ok(*i),
        ColumnRef::Name(name) => header
            .and_then(|h| h.iter().position(|f| f == name))
            .ok_or_else(|| format!("no column named {name:?}")),
    }
}

/// Reads two numeric columns. A first row whose selected cells are not both
/// numeric is taken as the header.
pub fn ingest_csv(path: &Path, options: &IngestOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(options.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let parse_err = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let data_err = |message: String| CliError::Data {
        path: path.to_path_buf(),
        message,
    };

    let mut header: Option<csv::StringRecord> = None;
    let mut columns: Option<(usize, usize)> = None;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (row_index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(row_index as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }

        if row_index == 0 && header.is_none() {
            let numeric = |c: &ColumnRef| match c {
                ColumnRef::Index(i) => record.get(*i).is_some_and(|f| f.parse::<f64>().is_ok()),
                ColumnRef::Name(_) => false,
            };
            if !(numeric(&options.x_column) && numeric(&options.y_column)) {
                header = Some(record.clone());
                continue;
            }
        }
        let (xi, yi) = match columns {
            Some(c) => c,
            None => {
                let c = (
                    resolve(&options.x_column, header.as_ref()).map_err(&data_err)?,
                    resolve(&options.y_column, header.as_ref()).map_err(&data_err)?,
                );
                columns = Some(c);
                c
            }
        };
        let cell = |i: usize| -> Result<f64> {
            let raw = record
                .get(i)
                .ok_or_else(|| parse_err(line, format!("missing column {i}")))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("not a number: {raw:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value {raw:?}")));
            }
            Ok(v)
        };
        x.push(cell(xi)?);
        y.push(cell(yi)?);
    }

    if x.len() < 2 {
        return Err(data_err(format!(
            "need at least 2 data rows, found {}",
            x.len()
        )));
    }
    if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
        return Err(data_err(format!(
            "x must be strictly increasing: row {} has {} after {}",
            i + 2,
            x[i + 1],
            x[i]
        )));
    }
    if let Some(scale) = options.rescale {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(CliError::Config(format!(
                "rescale must be positive, got {scale}"
            )));
        }
        x.iter_mut().for_each(|v| *v *= scale);
    }
    let rows = x.len();
    Ok(Dataset {
        x,
        y,
        meta: DatasetMeta {
            source: path.to_path_buf(),
            rescale: options.rescale,
            rows,
        },
    })
}

/// Writes named columns of equal length as CSV with a header row.
pub fn write_columns(path: &Path, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let rows = columns.first().map_or(0, |c| c.len());
    let io = |e| CliError::io(path, e);
    writeln!(out, "{}", names.join(",")).map_err(io)?;
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_num(c[i])).collect();
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes `key=value` lines.
pub fn write_key_values(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in entries {
        text.push_str(k);
        text.push('=');
        text.push_str(v);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_column_file() {
        let f = temp_csv("0,1.0\n0.5,2.0\n1,3.0");
        let d = ingest_csv(f.path(), &IngestOptions::default()).unwrap();
        assert_eq!(d.x, [0.0, 0.5, 1.0]);
        assert_eq!(d.y, [1.0, 2.0, 3.0]);
        assert_eq!(d.meta.rows, 3);
    }

    #[test]
    fn header_and_named_columns() {
        let f = temp_csv("t;noise;signal\n0;9;1\n1;9;4\n2;9;9\n");
        let options = IngestOptions {
            x_column: ColumnRef::Name("t".into()),
            y_column: "signal".parse().unwrap(),
            delimiter: b';',
            rescale: Some(0.5),
        };
        let d = ingest_csv(f.path(), &options).unwrap();
        assert_eq!(d.x, [0.0, 0.5, 1.0]);
        assert_eq!(d.y, [1.0, 4.0, 9.0]);
    }

    #[test]
    fn bad_cell_reports_line() {
        let f = temp_csv("x,y\n0,1\n1,1\n2,1\n3,1\n4,1\n5,oops\n6,1\n");
        let err = ingest_csv(f.path(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 7, .. }), "{err}");
        assert!(err.to_string().contains("line 7"));
    }

    #[test]
    fn rejects_non_monotone_and_non_finite() {
        let f = temp_csv("0,1\n2,1\n1,1\n");
        assert!(matches!(
            ingest_csv(f.path(), &IngestOptions::default()),
            Err(CliError::Data { .. })
        ));
        let f = temp_csv("0,1\n1,NaN\n2,1\n");
        assert!(matches!(
            ingest_csv(f.path(), &IngestOptions::default()),
            Err(CliError::Parse { line: 2, .. })
        ));
        let f = temp_csv("0,1\n1,inf\n");
        assert!(ingest_csv(f.path(), &IngestOptions::default()).is_err());
    }

    #[test]
    fn missing_file() {
        let err = ingest_csv(
            Path::new("/nonexistent/data.csv"),
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            36.96,
        ] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
