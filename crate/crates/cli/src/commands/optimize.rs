use serde_json::json;
use wingforge::datastore::Dataset;
use wingforge::optimize::{
    format_table, optimize, validate_against_dataset, Bounds, DatasetCase, OptimizerConfig, WingObjective,
};
use wingforge::space::PARAMETER_NAMES;

use super::{backend, seed_or_random, Output};
use crate::args::OptimizeArgs;
use crate::config::CliConfig;
use crate::error::{bad_input, Classify, CliError, CliResult};
use crate::io::{write_json, write_text};

fn dataset_cases(ds: &Dataset) -> Vec<DatasetCase> {
    let coeffs: std::collections::HashMap<String, (f64, f64)> = ds
        .coefficient_rows()
        .into_iter()
        .map(|r| (r.id, (r.c_d, r.c_l)))
        .collect();
    ds.cases()
        .into_iter()
        .filter_map(|case| {
            let &(c_d, c_l) = coeffs.get(&case.id)?;
            Some(DatasetCase { case, c_d, c_l })
        })
        .collect()
}

pub fn run(args: &OptimizeArgs, config: &CliConfig) -> CliResult<Output> {
    let (seed, generated) = seed_or_random(args.seed);
    let mut opt = OptimizerConfig::new(args.method, seed);
    if let Some(n) = args.budget {
        opt.budget.max_evaluations = Some(n);
    }
    if let Some(n) = args.steps {
        opt.budget.max_steps = Some(n);
    }
    if let Some(s) = args.wall_clock {
        opt.budget.wall_clock_s = Some(s);
    }
    opt.validate().input()?;

    let (spec, model) = backend(&args.backend, config.mesh_resolution, config)?;
    let objective = WingObjective::new(model.as_ref(), config.atmosphere);
    let bounds = Bounds::from_space(&config.space);
    let result = optimize(&objective, &bounds, &opt).map_err(|e| {
        if e.is_remote_failure() {
            CliError::internal(e)
        } else {
            CliError::input(e)
        }
    })?;

    if let Some(out) = &args.out {
        write_json(out, &result)?;
    }
    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        result.write_trace_csv(&mut buf).internal()?;
        write_text(path, &String::from_utf8(buf).internal()?)?;
    }

    let validation = match &args.dataset {
        Some(root) => {
            let ds = Dataset::open(root).input()?;
            let cases = dataset_cases(&ds);
            if cases.is_empty() {
                return Err(bad_input(format!(
                    "dataset {} has no cases with coefficients",
                    root.display()
                )));
            }
            Some(validate_against_dataset(&result, &cases, ds.space()).input()?)
        }
        None => None,
    };

    let mut text = format!(
        "{} (seed {seed}): best eps {:.4} after {} evaluations, {} steps, stopped by {:?}\n",
        result.method, result.best_eps, result.evaluations, result.steps, result.terminated_by
    );
    for (name, v) in PARAMETER_NAMES.iter().zip(&result.best_phi) {
        text.push_str(&format!("  {name:<7} {v:.4}\n"));
    }
    if let Some(v) = &validation {
        text.push('\n');
        text.push_str(&format_table(std::slice::from_ref(v)));
    }
    let json = json!({
        "command": "optimize",
        "seed": seed,
        "seed_generated": generated,
        "backend": spec,
        "config": opt,
        "result": result,
        "validation": validation,
        "out": args.out,
    });
    Ok(Output { json, text })
}
