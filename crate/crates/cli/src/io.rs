//! Case files, coefficient tables and output plumbing shared by commands.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use wingforge::datastore::{import_coefficients_csv, write_atomic, CoefficientRow};
use wingforge::doe::check_unique_ids;
use wingforge::metrics::PolarPoint;
use wingforge::{CaseSpec, ParameterSpace};

use crate::error::{bad_input, Classify, CliResult};

/// Reads a JSON-lines case file; blank lines are skipped.
pub fn read_cases(path: &Path) -> CliResult<Vec<CaseSpec>> {
    let text = fs::read_to_string(path).input_ctx(format!("reading {}", path.display()))?;
    let mut cases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let case: CaseSpec =
            serde_json::from_str(line).input_ctx(format!("{}:{}: invalid case", path.display(), i + 1))?;
        cases.push(case);
    }
    if cases.is_empty() {
        return Err(bad_input(format!("{} contains no cases", path.display())));
    }
    check_unique_ids(&cases).input_ctx(path.display())?;
    Ok(cases)
}

pub fn cases_to_jsonl(cases: &[CaseSpec]) -> String {
    let mut out = String::new();
    for c in cases {
        out.push_str(&serde_json::to_string(c).expect("case serializes"));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, text.as_bytes()).internal_ctx(format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).internal()? + "\n";
    write_text(path, &text)
}

/// Output format chosen by file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => Ok(Self::Csv),
            Some("json") => Ok(Self::Json),
            _ => Err(bad_input(format!(
                "{}: expected a .csv or .json extension",
                path.display()
            ))),
        }
    }
}

/// Polar points from a coefficient table, joined with a case file when the
/// table lacks α or Λ. `in_range` is judged against `space`.
pub fn polar_points(
    rows: &[CoefficientRow],
    cases: Option<&[CaseSpec]>,
    space: &ParameterSpace,
) -> CliResult<Vec<PolarPoint>> {
    let by_id: HashMap<&str, &CaseSpec> = cases.unwrap_or_default().iter().map(|c| (c.id.as_str(), c)).collect();
    rows.iter()
        .map(|r| {
            let case = by_id.get(r.id.as_str());
            let alpha = r
                .alpha
                .or(case.map(|c| c.inflow.alpha_deg))
                .ok_or_else(|| bad_input(format!("case `{}` has no alpha; pass --cases", r.id)))?;
            let lambda = r.lambda.or(case.map(|c| c.design.sweep_deg));
            let in_range = match case {
                Some(c) => space.contains(&c.vector()),
                None => {
                    let [.., sweep, _, a] = space.intervals();
                    a.contains(alpha) && lambda.is_none_or(|l| sweep.contains(l))
                }
            };
            Ok(PolarPoint {
                id: r.id.clone(),
                c_d: r.c_d,
                c_l: r.c_l,
                alpha,
                lambda,
                in_range,
            })
        })
        .collect()
}

pub fn read_coefficients(path: &Path) -> CliResult<Vec<CoefficientRow>> {
    let rows = import_coefficients_csv(path).input()?;
    if rows.is_empty() {
        return Err(bad_input(format!("{} contains no rows", path.display())));
    }
    Ok(rows)
}
