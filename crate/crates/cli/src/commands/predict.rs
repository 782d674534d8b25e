use serde::Serialize;
use serde_json::json;
use wingforge::aero::{coefficients, freestream_state, integrate_forces};
use wingforge::datastore::{export_results, CoefficientRow, ExportFormat};
use wingforge::geometry::{import_stl, planform_area, MeshMetadata};
use wingforge::surrogate::field_consistency;
use wingforge::{CaseSpec, InflowConditions, SurfaceField, WingDesign};

use super::{backend, resolution, Output};
use crate::args::{IntegrateArgs, PredictArgs};
use crate::config::CliConfig;
use crate::error::{bad_input, Classify, CliError, CliResult};
use crate::io::{read_cases, TableFormat};

#[derive(Debug, Serialize)]
struct PredictionRow {
    id: String,
    #[serde(rename = "C_D")]
    c_d: f64,
    #[serde(rename = "C_l")]
    c_l: f64,
    eps: Option<f64>,
    #[serde(rename = "M")]
    mach: f64,
    /// On the mean geometric chord.
    #[serde(rename = "Re")]
    reynolds: f64,
    out_of_range: bool,
    /// Relative mismatch between returned and re-integrated coefficients.
    #[serde(skip_serializing_if = "Option::is_none")]
    field_check: Option<f64>,
}

fn single_case(args: &PredictArgs) -> CliResult<CaseSpec> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| bad_input(format!("--{flag} is required without --cases")));
    Ok(CaseSpec {
        id: "case".into(),
        design: WingDesign {
            c_r: need(args.c_r, "c-r")?,
            b: need(args.b, "b")?,
            taper: need(args.taper, "taper")?,
            sweep_deg: need(args.sweep, "sweep")?,
        },
        inflow: InflowConditions {
            u_inf: need(args.u_inf, "u-inf")?,
            alpha_deg: need(args.alpha, "alpha")?,
        },
    })
}

pub fn predict(args: &PredictArgs, config: &CliConfig) -> CliResult<Output> {
    let cases = match &args.cases {
        Some(path) => read_cases(path)?,
        None => vec![single_case(args)?],
    };
    let res = resolution(&args.resolution, config)?;
    let (spec, model) = backend(&args.backend, res, config)?;
    let atm = &config.atmosphere;

    let mut rows = Vec::with_capacity(cases.len());
    let mut provenance = None;
    for case in &cases {
        let (design, inflow) = (&case.design, &case.inflow);
        design.validate().input_ctx(&case.id)?;
        let pred = model.predict(design, inflow, atm).map_err(|e| {
            let ctx = format!("case `{}`", case.id);
            if e.is_remote_failure() {
                CliError::internal(anyhow::Error::new(e).context(ctx))
            } else {
                CliError::input(anyhow::Error::new(e).context(ctx))
            }
        })?;
        let field_check = field_consistency(&pred, design, inflow, atm)
            .transpose()
            .internal_ctx(&case.id)?;
        let mean_chord = 0.5 * design.c_r * (1.0 + design.taper);
        let fs = freestream_state(inflow, atm, mean_chord).input_ctx(&case.id)?;
        let c = &pred.coefficients;
        rows.push(PredictionRow {
            id: case.id.clone(),
            c_d: c.c_d,
            c_l: c.c_l,
            eps: c.eps,
            mach: fs.mach,
            reynolds: fs.reynolds,
            out_of_range: !config.space.contains(&case.vector()),
            field_check,
        });
        provenance.get_or_insert(pred.provenance);
    }

    if let Some(out) = &args.out {
        let format = match TableFormat::from_path(out)? {
            TableFormat::Csv => ExportFormat::Csv,
            TableFormat::Json => ExportFormat::Json,
        };
        let table: Vec<CoefficientRow> = rows
            .iter()
            .zip(&cases)
            .map(|(r, c)| CoefficientRow {
                id: r.id.clone(),
                c_d: r.c_d,
                c_l: r.c_l,
                alpha: Some(c.inflow.alpha_deg),
                lambda: Some(c.design.sweep_deg),
            })
            .collect();
        export_results(&table, format, out).internal_ctx(format!("writing {}", out.display()))?;
    }

    let mut text = format!(
        "{:<12} {:>10} {:>10} {:>9} {:>6} {:>10}\n",
        "id", "C_D", "C_l", "eps", "M", "Re"
    );
    for r in &rows {
        let eps = r.eps.map_or("inf".to_string(), |e| format!("{e:.3}"));
        text.push_str(&format!(
            "{:<12} {:>10.5} {:>10.5} {:>9} {:>6.3} {:>10.3e}{}\n",
            r.id,
            r.c_d,
            r.c_l,
            eps,
            r.mach,
            r.reynolds,
            if r.out_of_range { "  (out of range)" } else { "" }
        ));
    }
    let json = json!({
        "command": "predict",
        "backend": spec,
        "provenance": provenance,
        "predictions": rows,
        "out": args.out,
    });
    Ok(Output { json, text })
}

pub fn integrate(args: &IntegrateArgs, config: &CliConfig) -> CliResult<Output> {
    let mesh = import_stl(&args.mesh).input_ctx(format!("reading {}", args.mesh.display()))?;
    let text = std::fs::read_to_string(&args.field).input_ctx(format!("reading {}", args.field.display()))?;
    let field: SurfaceField = serde_json::from_str(&text).input_ctx(format!("parsing {}", args.field.display()))?;
    let inflow = InflowConditions::new(args.u_inf, args.alpha).input()?;
    let atm = &config.atmosphere;

    let a_ref = match args.a_ref {
        Some(a) => a,
        None => {
            let sidecar = args.mesh.with_extension("json");
            let meta = std::fs::read_to_string(&sidecar)
                .ok()
                .and_then(|t| serde_json::from_str::<MeshMetadata>(&t).ok())
                .ok_or_else(|| bad_input(format!("--a-ref is required when {} is missing", sidecar.display())))?;
            planform_area(&meta.design)
        }
    };
    let forces = integrate_forces(&mesh, &field, atm.p_inf).input()?;
    let c = coefficients(&forces, &inflow, atm, a_ref).input()?;
    let json = json!({
        "command": "integrate",
        "faces": mesh.face_count(),
        "A_ref": a_ref,
        "coefficients": c,
    });
    let eps = c.eps.map_or("inf".to_string(), |e| format!("{e:.4}"));
    let text = format!(
        "F = ({:.6e}, {:.6e}, {:.6e}) N over {} faces\nC_D = {:.6}  C_l = {:.6}  eps = {eps}\n",
        c.force[0],
        c.force[1],
        c.force[2],
        mesh.face_count(),
        c.c_d,
        c.c_l
    );
    Ok(Output { json, text })
}
