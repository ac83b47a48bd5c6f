//! Flow CSV reading and the CSV outputs written by the CLI.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use flowae_core::{FlowRecord, FlowSchema, FlowTable, Label};

use crate::error::{Error, Result};

/// Reads a labeled flow CSV with a header row.
///
/// A header-only file yields an empty table; a zero-byte file is
/// [`Error::EmptyFile`].
pub fn load_flows(path: &Path, schema: &FlowSchema, delimiter: u8) -> Result<FlowTable> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if raw.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    read_flows(raw.as_slice(), schema, delimiter)
}

/// Column names from the first line of `path`.
pub fn read_header(path: &Path, delimiter: u8) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(header)
}

pub fn read_flows<R: Read>(input: R, schema: &FlowSchema, delimiter: u8) -> Result<FlowTable> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).has_headers(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let feature_idx = schema.feature_columns.iter().map(|c| position(c)).collect::<Result<Vec<_>>>()?;
    let label_idx = position(&schema.label_column)?;
    let category_idx = schema.attack_category_column.as_deref().map(position).transpose()?;

    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let features = feature_idx
            .iter()
            .zip(&schema.feature_columns)
            .map(|(&i, name)| {
                field(i).parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::NonNumericValue {
                    row,
                    column: name.clone(),
                    value: field(i).to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let label = if field(label_idx) == schema.benign_label_value { Label::Benign } else { Label::Attack };
        let category = match (label, category_idx) {
            (Label::Attack, Some(i)) if !field(i).is_empty() => Some(field(i).to_string()),
            _ => None,
        };
        records.push(FlowRecord { features, label, category, original_index: row });
    }
    Ok(FlowTable::new(schema.num_features(), records)?)
}

/// Writes `table` back out with the schema's columns; attack rows use
/// `attack_label`.
pub fn write_flows<W: Write>(out: W, table: &FlowTable, schema: &FlowSchema, attack_label: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = schema.feature_columns.iter().map(String::as_str).collect();
    header.push(&schema.label_column);
    if let Some(c) = &schema.attack_category_column {
        header.push(c);
    }
    w.write_record(&header)?;
    for rec in table.records() {
        let mut row: Vec<String> = rec.features.iter().map(|v| format!("{v}")).collect();
        row.push(match rec.label {
            Label::Benign => schema.benign_label_value.clone(),
            Label::Attack => attack_label.to_string(),
        });
        if schema.attack_category_column.is_some() {
            row.push(rec.category.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> FlowSchema {
        FlowSchema {
            feature_columns: vec!["bytes".into(), "pkts".into()],
            label_column: "label".into(),
            attack_category_column: Some("category".into()),
            benign_label_value: "BENIGN".into(),
        }
    }

    #[test]
    fn parses_three_rows() {
        let csv = "pkts,bytes,label,category\n1,10,BENIGN,\n2,20,ATTACK,dos\n3,30,BENIGN,\n";
        let t = read_flows(csv.as_bytes(), &schema(), b',').unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.benign_count(), 2);
        assert_eq!(t.records()[1].features, vec![20.0, 2.0]);
        assert_eq!(t.records()[1].category.as_deref(), Some("dos"));
        assert_eq!(t.records()[2].original_index, 2);
    }

    #[test]
    fn missing_label_column() {
        let csv = "pkts,bytes\n1,10\n";
        assert!(matches!(read_flows(csv.as_bytes(), &schema(), b','), Err(Error::MissingColumn(c)) if c == "label"));
    }

    #[test]
    fn non_numeric_cell() {
        let csv = "pkts,bytes,label,category\n1,10,BENIGN,\n2,abc,BENIGN,\n";
        match read_flows(csv.as_bytes(), &schema(), b',') {
            Err(Error::NonNumericValue { row, column, .. }) => assert_eq!((row, column.as_str()), (1, "bytes")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semicolon_delimiter_and_header_only() {
        let csv = "bytes;pkts;label;category\n";
        assert!(read_flows(csv.as_bytes(), &schema(), b';').unwrap().is_empty());
    }

    #[test]
    fn empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(load_flows(&p, &schema(), b','), Err(Error::EmptyFile(_))));
        assert!(matches!(load_flows(&dir.path().join("nope.csv"), &schema(), b','), Err(Error::MissingInput(_))));
    }

    #[test]
    fn write_then_read() {
        let csv = "bytes,pkts,label,category\n1.5,10,BENIGN,\n2,20,ATTACK,dos\n";
        let t = read_flows(csv.as_bytes(), &schema(), b',').unwrap();
        let mut buf = Vec::new();
        write_flows(&mut buf, &t, &schema(), "ATTACK").unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), csv);
        assert_eq!(read_flows(buf.as_slice(), &schema(), b',').unwrap(), t);
    }
}
