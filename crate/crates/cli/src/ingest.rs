use std::path::Path;

use anoht::model::{sort_sample, SortedSample};

use crate::error::{CliError, CliResult};

/// Columns to read from a CSV file.
#[derive(Debug, Clone, Default)]
pub struct Columns<'a> {
    pub value: &'a str,
    pub label: Option<&'a str>,
    pub status: Option<&'a str>,
}

/// Reads a comma-separated file with a header row into a sorted sample.
/// Status cells must be `0` (censored) or `1` (event).
pub fn ingest_csv(path: &Path, cols: &Columns) -> CliResult<SortedSample> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    ingest_reader(file, &path.display().to_string(), cols)
}

pub fn ingest_reader(reader: impl std::io::Read, name: &str, cols: &Columns) -> CliResult<SortedSample> {
    let parse = |row: usize, message: String| CliError::Parse {
        path: name.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(parse(1, "missing header row".into()));
    }
    let find = |col: &str| {
        headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| parse(1, format!("no column named {col:?}")))
    };
    let value_at = find(cols.value)?;
    let label_at = cols.label.map(find).transpose()?;
    let status_at = cols.status.map(find).transpose()?;

    let mut values = Vec::new();
    let mut labels = label_at.map(|_| Vec::new());
    let mut status = status_at.map(|_| Vec::new());
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse(row, e.to_string()))?;
        let cell = |at: usize| record.get(at).ok_or_else(|| parse(row, format!("missing field {}", at + 1)));
        let raw = cell(value_at)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| parse(row, format!("{:?} in column {:?} is not a number", raw, cols.value)))?;
        if !v.is_finite() {
            return Err(parse(row, format!("{raw:?} is not a finite number")));
        }
        values.push(v);
        if let (Some(at), Some(l)) = (label_at, labels.as_mut()) {
            l.push(cell(at)?.to_string());
        }
        if let (Some(at), Some(s)) = (status_at, status.as_mut()) {
            s.push(match cell(at)? {
                "0" => 0u8,
                "1" => 1u8,
                other => return Err(parse(row, format!("status {other:?} is neither 0 nor 1"))),
            });
        }
    }
    if values.is_empty() {
        return Err(parse(2, "no data rows".into()));
    }
    Ok(sort_sample(&values, labels, status)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, cols: &Columns) -> CliResult<SortedSample> {
        ingest_reader(text.as_bytes(), "mem.csv", cols)
    }

    #[test]
    fn reads_values_labels_and_status() {
        let cols = Columns {
            value: "t",
            label: Some("g"),
            status: Some("d"),
        };
        let s = read("g,t,d\na,3.5,1\nb,1.0,0\na,2,1\n", &cols).unwrap();
        assert_eq!(s.values(), [1.0, 2.0, 3.5]);
        assert_eq!(s.label_sorted(0), Some("b"));
        assert_eq!(s.status_sorted(0), Some(0));
        assert_eq!(s.treatments().unwrap(), ["a", "b"]);
    }

    #[test]
    fn one_data_row_is_a_sample() {
        let s = read("x\n4.2\n", &Columns { value: "x", ..Default::default() }).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn errors_name_the_row() {
        let cols = Columns {
            value: "x",
            status: Some("s"),
            ..Default::default()
        };
        let row = |text: &str| match read(text, &cols) {
            Err(CliError::Parse { row, .. }) => row,
            other => panic!("expected a parse error, got {other:?}"),
        };
        assert_eq!(row("x,s\n1,0\nabc,1\n"), 3);
        assert_eq!(row("x,s\n1,0\n2,1\n3,2\n"), 4);
        assert_eq!(row("y,s\n1,0\n"), 1);
        assert_eq!(row("x,s\n"), 2);
        assert_eq!(row(""), 1);
    }
}
