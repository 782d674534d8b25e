mod doe;
mod geometry;
mod metrics;
mod optimize;
mod plots;
mod predict;
mod schema;
mod serve;

use serde_json::Value;
use wingforge::surrogate::RemoteConfig;
use wingforge::{MeshResolution, Surrogate, SurrogateRef};

use crate::args::{BackendArgs, Command, DoeCommand, ResolutionArgs};
use crate::config::CliConfig;
use crate::error::{bad_input, Classify, CliResult};

/// What a command prints: `json` with `--json`, `text` otherwise.
pub struct Output {
    pub json: Value,
    pub text: String,
}

pub fn run(command: &Command, config: &CliConfig, json: bool) -> CliResult<Output> {
    match command {
        Command::Geometry(a) => geometry::run(a, config),
        Command::Doe(DoeCommand::Sample(a)) => doe::sample(a, config),
        Command::Doe(DoeCommand::Split(a)) => doe::split(a, config),
        Command::Doe(DoeCommand::Scan(a)) => doe::scan(a),
        Command::Predict(a) => predict::predict(a, config),
        Command::Integrate(a) => predict::integrate(a, config),
        Command::Metrics(a) => metrics::run(a),
        Command::Pareto(a) => plots::pareto(a, config),
        Command::Polar(a) => plots::polar(a, config),
        Command::Optimize(a) => optimize::run(a, config),
        Command::Serve(a) => serve::run(a, config, json),
        Command::Schema(a) => schema::run(a),
    }
}

pub fn resolution(args: &ResolutionArgs, config: &CliConfig) -> CliResult<MeshResolution> {
    let d = config.mesh_resolution;
    let res = MeshResolution::new(args.n_chord.unwrap_or(d.n_chord), args.n_span.unwrap_or(d.n_span));
    res.validate().input()?;
    Ok(res)
}

/// The configured backend, replaced by a remote one when `--endpoint` is set
/// and switched to field output by `--fields`.
pub fn backend(
    args: &BackendArgs,
    res: MeshResolution,
    config: &CliConfig,
) -> CliResult<(SurrogateRef, Box<dyn Surrogate>)> {
    let mut spec = match &args.endpoint {
        Some(url) => SurrogateRef::Remote(RemoteConfig::new(url.clone())),
        None => config.backend.clone(),
    };
    if args.fields {
        match &mut spec {
            SurrogateRef::BuiltinLiftline { fields } => *fields = Some(res),
            SurrogateRef::Remote(_) => {} // remote backends always return fields
        }
    }
    let model = spec.build().input()?;
    Ok((spec, model))
}

/// Seed from the flag, or a fresh one that the caller reports.
pub fn seed_or_random(seed: Option<u64>) -> (u64, bool) {
    match seed {
        Some(s) => (s, false),
        None => (rand::random::<u64>() >> 11, true),
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_values(name: &str, text: &str) -> CliResult<Vec<f64>> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad_input(format!("--{name}: `{s}` is not a number")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if step <= 0.0 || stop < start {
                return Err(bad_input(format!("--{name}: need start <= stop and step > 0")));
            }
            wingforge::doe::arange_inclusive(start, stop, step)
        }
        [_] => text.split(',').map(number).collect::<CliResult<Vec<_>>>()?,
        _ => return Err(bad_input(format!("--{name}: expected start:stop:step or a comma list"))),
    };
    if values.is_empty() {
        return Err(bad_input(format!("--{name}: no values")));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("a", "-30:30:2").unwrap().len(), 31);
        assert_eq!(parse_values("a", "0:70:10").unwrap().len(), 8);
        assert_eq!(parse_values("a", "1, 2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert!(parse_values("a", "3:1:1").is_err());
        assert!(parse_values("a", "0:1:0").is_err());
        assert!(parse_values("a", "x").is_err());
    }
}
