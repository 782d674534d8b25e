use serde::Deserialize;
use serde_json::json;
use wingforge::metrics::{aggregate, relative_l2, FieldPair, MetricRecord};

use super::Output;
use crate::args::MetricsArgs;
use crate::error::{bad_input, Classify, CliResult};
use crate::io::{write_json, write_text, TableFormat};

/// Scalar per-face values or 3-vectors; vectors are flattened.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Values {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 3]>),
}

impl Values {
    fn flatten(self) -> Vec<f64> {
        match self {
            Values::Scalar(v) => v,
            Values::Vector(v) => v.into_iter().flatten().collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    model: String,
    test_set: String,
    seed: u64,
    case_id: String,
    field: String,
    prediction: Values,
    truth: Values,
}

pub fn run(args: &MetricsArgs) -> CliResult<Output> {
    let path = &args.input;
    let text = std::fs::read_to_string(path).input_ctx(format!("reading {}", path.display()))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = format!("{}:{}", path.display(), i + 1);
        let e: Entry = serde_json::from_str(line).input_ctx(&at)?;
        let pair = FieldPair::new(e.field.clone(), e.prediction.flatten(), e.truth.flatten());
        let value = relative_l2(&pair).input_ctx(&at)?;
        records.push(MetricRecord {
            model: e.model,
            test_set: e.test_set,
            field: e.field,
            seed: e.seed,
            case_id: e.case_id,
            value,
        });
    }
    if records.is_empty() {
        return Err(bad_input(format!("{} contains no entries", path.display())));
    }
    let report = aggregate(&records);

    let mut csv = Vec::new();
    report.write_csv(&mut csv).internal()?;
    let csv = String::from_utf8(csv).internal()?;
    if let Some(out) = &args.out {
        match TableFormat::from_path(out)? {
            TableFormat::Csv => write_text(out, &csv)?,
            TableFormat::Json => write_json(out, &report)?,
        }
    }
    let json = json!({
        "command": "metrics",
        "records": records.len(),
        "report": report,
        "out": args.out,
    });
    let text = format!("# {}\n{csv}", report.aggregation);
    Ok(Output { json, text })
}
