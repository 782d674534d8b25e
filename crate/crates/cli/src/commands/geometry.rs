use serde_json::json;
use wingforge::geometry::{export_stl, loft_wing, planform_area, MeshMetadata, StlFormat};
use wingforge::{DesignVector, WingDesign};

use super::{resolution, Output};
use crate::args::GeometryArgs;
use crate::config::CliConfig;
use crate::error::{Classify, CliResult};
use crate::io::write_json;

pub fn run(args: &GeometryArgs, config: &CliConfig) -> CliResult<Output> {
    let d = &args.design;
    let design = WingDesign::new(d.c_r, d.b, d.taper, d.sweep).input()?;
    let res = resolution(&args.resolution, config)?;
    let mesh = loft_wing(&design, &res).input()?;
    let format = StlFormat::from(args.format);
    export_stl(&mesh, format, &args.out).internal_ctx(format!("writing {}", args.out.display()))?;
    let bytes = std::fs::metadata(&args.out).internal()?.len();

    let metadata = MeshMetadata::new(&design, &res);
    let sidecar = args.metadata.clone().unwrap_or_else(|| args.out.with_extension("json"));
    write_json(&sidecar, &metadata)?;

    // Only the geometric parameters are judged; the inflow is a placeholder.
    let phi = DesignVector::from_parts(&design, &config.space.center().inflow());
    let violations = config.space.violations(&phi);

    let json = json!({
        "command": "geometry",
        "stl": args.out,
        "format": format,
        "bytes": bytes,
        "metadata_path": sidecar,
        "metadata": metadata,
        "planform_area": planform_area(&design),
        "watertight": mesh.is_watertight(),
        "out_of_range": !violations.is_empty(),
        "violations": violations,
    });
    let mut text = format!(
        "wrote {} ({} triangles, {} bytes) and {}\n",
        args.out.display(),
        mesh.face_count(),
        bytes,
        sidecar.display()
    );
    if !violations.is_empty() {
        text.push_str(&format!(
            "note: outside the design space in {}\n",
            violations.join(", ")
        ));
    }
    Ok(Output { json, text })
}
