use serde_json::json;
use wingforge::datastore::Dataset;
use wingforge::metrics::{assemble_polars, best_efficiency, pareto_front, write_points_csv, PolarPoint};

use super::Output;
use crate::args::{ParetoArgs, PointSource, PolarArgs};
use crate::config::CliConfig;
use crate::error::{bad_input, Classify, CliResult};
use crate::io::{polar_points, read_cases, read_coefficients, write_text};
use crate::svg::{render, Mark, Panel, Series};

fn load(source: &PointSource, config: &CliConfig) -> CliResult<(Vec<PolarPoint>, String)> {
    if let Some(path) = &source.coefficients {
        let rows = read_coefficients(path)?;
        let cases = source.cases.as_deref().map(read_cases).transpose()?;
        let points = polar_points(&rows, cases.as_deref(), &config.space)?;
        return Ok((points, path.display().to_string()));
    }
    let root = config
        .data_root(source.dataset.as_deref())
        .ok_or_else(|| bad_input("pass --coefficients or --dataset (or set WINGFORGE_DATA)"))?;
    let ds = Dataset::open(&root).input()?;
    let rows = ds.coefficient_rows();
    if rows.is_empty() {
        return Err(bad_input(format!("dataset {} has no coefficients", root.display())));
    }
    let points = polar_points(&rows, Some(&ds.cases()), ds.space())?;
    Ok((points, root.display().to_string()))
}

fn csv_text(points: &[PolarPoint]) -> CliResult<String> {
    let mut buf = Vec::new();
    write_points_csv(&mut buf, points).internal()?;
    String::from_utf8(buf).internal()
}

fn marks(points: &[PolarPoint], f: impl Fn(&PolarPoint) -> (f64, f64)) -> Vec<Mark> {
    points
        .iter()
        .map(|p| {
            let (x, y) = f(p);
            Mark {
                x,
                y,
                highlight: !p.in_range,
            }
        })
        .collect()
}

pub fn pareto(args: &ParetoArgs, config: &CliConfig) -> CliResult<Output> {
    let (points, source) = load(&args.source, config)?;
    let front = pareto_front(&points);
    let best = best_efficiency(&front).cloned();
    if let Some(out) = &args.out {
        write_text(out, &csv_text(&front)?)?;
    }
    if let Some(path) = &args.svg {
        let cl_cd = |p: &PolarPoint| (p.c_d, p.c_l);
        let panel = Panel {
            title: "Drag-lift Pareto front".into(),
            x_label: "C_D".into(),
            y_label: "C_l".into(),
            series: vec![
                Series {
                    label: format!("cases ({})", points.len()),
                    marks: marks(&points, cl_cd),
                    line: false,
                },
                Series {
                    label: format!("front ({})", front.len()),
                    marks: marks(&front, cl_cd),
                    line: true,
                },
            ],
        };
        write_text(path, &render(&[panel]))?;
    }
    let json = json!({
        "command": "pareto",
        "source": source,
        "total": points.len(),
        "front": front,
        "best_efficiency": best.as_ref().map(|p| json!({"id": p.id, "eps": p.efficiency()})),
        "out": args.out,
        "svg": args.svg,
    });
    let mut text = format!("{} of {} points on the front\n", front.len(), points.len());
    text.push_str(&csv_text(&front)?);
    if let (Some(p), Some(e)) = (&best, best.as_ref().and_then(PolarPoint::efficiency)) {
        text.push_str(&format!("best C_l/C_D on the front: {e:.3} ({})\n", p.id));
    }
    Ok(Output { json, text })
}

pub fn polar(args: &PolarArgs, config: &CliConfig) -> CliResult<Output> {
    let (points, source) = load(&args.source, config)?;
    let series = assemble_polars(&points);
    if let Some(out) = &args.out {
        let all: Vec<PolarPoint> = series.iter().flat_map(|s| s.points.iter().cloned()).collect();
        write_text(out, &csv_text(&all)?)?;
    }
    if let Some(path) = &args.svg {
        let label = |l: Option<f64>| l.map_or("all".to_string(), |l| format!("sweep {l}"));
        let panel = |title: &str, x: &str, y: &str, f: &dyn Fn(&PolarPoint) -> (f64, f64)| Panel {
            title: title.into(),
            x_label: x.into(),
            y_label: y.into(),
            series: series
                .iter()
                .map(|s| Series {
                    label: label(s.lambda),
                    marks: marks(&s.points, f),
                    line: true,
                })
                .collect(),
        };
        let panels = [
            panel("Lift", "alpha (deg)", "C_l", &|p| (p.alpha, p.c_l)),
            panel("Drag", "alpha (deg)", "C_D", &|p| (p.alpha, p.c_d)),
            panel("Polar", "C_D", "C_l", &|p| (p.c_d, p.c_l)),
        ];
        write_text(path, &render(&panels))?;
    }
    let summary: Vec<_> = series
        .iter()
        .map(|s| {
            json!({
                "Lambda": s.lambda,
                "points": s.points.len(),
                "out_of_range": s.points.iter().filter(|p| !p.in_range).count(),
            })
        })
        .collect();
    let json = json!({
        "command": "polar",
        "source": source,
        "total": points.len(),
        "series": summary,
        "out": args.out,
        "svg": args.svg,
    });
    let mut text = format!("{} series from {} points\n", series.len(), points.len());
    for s in &series {
        let out = s.points.iter().filter(|p| !p.in_range).count();
        let name = s.lambda.map_or("-".to_string(), |l| l.to_string());
        text.push_str(&format!(
            "  Lambda {name:>6}: {} points, {out} out of range\n",
            s.points.len()
        ));
    }
    Ok(Output { json, text })
}
