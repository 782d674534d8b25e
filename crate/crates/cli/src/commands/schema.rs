use serde_json::{json, Value};

use super::Output;
use crate::args::SchemaArgs;
use crate::error::{bad_input, CliResult};

/// JSON schemas of every command's `--json` document, by command name.
pub const SCHEMAS: [(&str, &str); 12] = [
    ("geometry", include_str!("../../schemas/geometry.schema.json")),
    ("doe-sample", include_str!("../../schemas/doe-sample.schema.json")),
    ("doe-split", include_str!("../../schemas/doe-split.schema.json")),
    ("doe-scan", include_str!("../../schemas/doe-scan.schema.json")),
    ("predict", include_str!("../../schemas/predict.schema.json")),
    ("integrate", include_str!("../../schemas/integrate.schema.json")),
    ("metrics", include_str!("../../schemas/metrics.schema.json")),
    ("pareto", include_str!("../../schemas/pareto.schema.json")),
    ("polar", include_str!("../../schemas/polar.schema.json")),
    ("optimize", include_str!("../../schemas/optimize.schema.json")),
    ("serve", include_str!("../../schemas/serve.schema.json")),
    ("error", include_str!("../../schemas/error.schema.json")),
];

pub fn run(args: &SchemaArgs) -> CliResult<Output> {
    let Some(name) = &args.name else {
        let names: Vec<&str> = SCHEMAS.iter().map(|(n, _)| *n).collect();
        return Ok(Output {
            json: json!({"command": "schema", "schemas": names}),
            text: names.join("\n") + "\n",
        });
    };
    let key = name.replace(' ', "-");
    let (_, text) = SCHEMAS
        .iter()
        .find(|(n, _)| *n == key)
        .ok_or_else(|| bad_input(format!("no schema named `{name}`")))?;
    let schema: Value = serde_json::from_str(text).expect("embedded schemas are valid JSON");
    Ok(Output {
        text: serde_json::to_string_pretty(&schema).expect("schema serializes"),
        json: schema,
    })
}
