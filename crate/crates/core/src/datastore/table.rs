use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, DatastoreError};

/// One row of a coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub id: String,
    #[serde(rename = "C_D")]
    pub c_d: f64,
    #[serde(rename = "C_l")]
    pub c_l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "Lambda", default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (csv, json)")),
        }
    }
}

/// Reads a coefficient CSV with header `id, C_D, C_l` and optional `alpha`,
/// `Lambda`. Every numeric cell must parse to a finite number; errors name
/// the 1-based line and the column.
pub fn import_coefficients_csv(path: &Path) -> Result<Vec<CoefficientRow>, DatastoreError> {
    let file = std::fs::File::open(path).map_err(|e| DatastoreError::io(path, e))?;
    read_coefficients(file, path)
}

pub fn read_coefficients<R: std::io::Read>(input: R, path: &Path) -> Result<Vec<CoefficientRow>, DatastoreError> {
    let csv_err = |e: csv::Error| DatastoreError::Malformed {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| header.iter().position(|h| h == name);
    let required = |name: &str| {
        column(name).ok_or_else(|| DatastoreError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let (id_col, cd_col, cl_col) = (required("id")?, required("C_D")?, required("C_l")?);
    let (alpha_col, sweep_col) = (column("alpha"), column("Lambda"));

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |col: usize| -> Result<f64, DatastoreError> {
            let cell = record.get(col).unwrap_or("");
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(DatastoreError::Cell {
                    path: path.to_path_buf(),
                    line,
                    column: header[col].to_string(),
                    value: cell.to_string(),
                }),
            }
        };
        let optional = |col: Option<usize>| -> Result<Option<f64>, DatastoreError> {
            match col {
                Some(c) if !record.get(c).unwrap_or("").is_empty() => number(c).map(Some),
                _ => Ok(None),
            }
        };
        let id = record.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(DatastoreError::Cell {
                path: path.to_path_buf(),
                line,
                column: "id".into(),
                value: String::new(),
            });
        }
        rows.push(CoefficientRow {
            id,
            c_d: number(cd_col)?,
            c_l: number(cl_col)?,
            alpha: optional(alpha_col)?,
            lambda: optional(sweep_col)?,
        });
    }
    Ok(rows)
}

/// Serializes rows as CSV. Numbers use the shortest decimal form that parses
/// back to the same `f64` (at most 17 significant digits).
pub fn coefficients_to_csv(rows: &[CoefficientRow]) -> String {
    let with_alpha = rows.iter().any(|r| r.alpha.is_some());
    let with_sweep = rows.iter().any(|r| r.lambda.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id", "C_D", "C_l"];
    if with_alpha {
        header.push("alpha");
    }
    if with_sweep {
        header.push("Lambda");
    }
    w.write_record(&header).expect("write to memory");
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for r in rows {
        let mut rec = vec![r.id.clone(), r.c_d.to_string(), r.c_l.to_string()];
        if with_alpha {
            rec.push(opt(r.alpha));
        }
        if with_sweep {
            rec.push(opt(r.lambda));
        }
        w.write_record(&rec).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}

/// Writes rows to `path` atomically in the requested format.
pub fn export_results(rows: &[CoefficientRow], format: ExportFormat, path: &Path) -> Result<(), DatastoreError> {
    let text = match format {
        ExportFormat::Csv => coefficients_to_csv(rows),
        ExportFormat::Json => serde_json::to_string_pretty(rows).expect("rows serialize") + "\n",
    };
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<CoefficientRow>, DatastoreError> {
        read_coefficients(text.as_bytes(), Path::new("coef.csv"))
    }

    #[test]
    fn three_rows() {
        let rows = parse("id,C_D,C_l\na,0.02,0.3\nb,0.03,0.5\nc,0.01,0.0\n").unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].c_l, 0.5);
        assert_eq!(rows[0].alpha, None);
    }

    #[test]
    fn optional_columns_in_any_order() {
        let rows = parse("Lambda,C_l,id,alpha,C_D\n10,0.3,x,4,0.02\n").unwrap();
        assert_eq!(rows[0].lambda, Some(10.0));
        assert_eq!(rows[0].alpha, Some(4.0));
        assert_eq!(rows[0].c_d, 0.02);
    }

    #[test]
    fn nan_is_rejected_with_location() {
        let err = parse("id,C_D,C_l\na,0.02,0.3\nb,NaN,0.5\n").unwrap_err();
        match err {
            DatastoreError::Cell {
                line, column, value, ..
            } => {
                assert_eq!((line, column.as_str(), value.as_str()), (3, "C_D", "NaN"));
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            parse("id,C_D,C_l\na,0.1,abc\n"),
            Err(DatastoreError::Cell { line: 2, .. })
        ));
    }

    #[test]
    fn missing_column() {
        let err = parse("id,C_D\na,0.02\n").unwrap_err();
        assert!(matches!(err, DatastoreError::MissingColumn { ref column, .. } if column == "C_l"));
    }

    #[test]
    fn export_import_is_lossless() {
        let rows = vec![
            CoefficientRow {
                id: "a".into(),
                c_d: 0.1 + 0.2,
                c_l: std::f64::consts::PI / 7.0,
                alpha: Some(-2.5),
                lambda: None,
            },
            CoefficientRow {
                id: "b,with comma".into(),
                c_d: 1e-300,
                c_l: -123456.789e10,
                alpha: None,
                lambda: Some(70.0),
            },
        ];
        let back = parse(&coefficients_to_csv(&rows)).unwrap();
        assert_eq!(back, rows);
    }
}
