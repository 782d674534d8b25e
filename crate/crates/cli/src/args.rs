use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wingforge::geometry::StlFormat;
use wingforge::optimize::Method;

#[derive(Debug, Parser)]
#[command(
    name = "wingforge",
    version,
    about = "Wing geometry, surrogate and optimization toolkit"
)]
pub struct Cli {
    /// Print one machine-readable JSON document instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// JSON file with default settings (space, atmosphere, backend, data root, service).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Loft a wing and export it as STL plus a JSON metadata sidecar.
    Geometry(GeometryArgs),
    /// Sample, split and scan case sets.
    #[command(subcommand)]
    Doe(DoeCommand),
    /// Predict aerodynamic coefficients for one design or a case file.
    Predict(PredictArgs),
    /// Integrate a surface field over an STL mesh.
    Integrate(IntegrateArgs),
    /// Relative L2 error report from predicted and reference fields.
    Metrics(MetricsArgs),
    /// Drag-lift Pareto front of a coefficient table or dataset.
    Pareto(ParetoArgs),
    /// Polar curves (C_l and C_D against alpha, C_l against C_D) grouped by sweep.
    Polar(PolarArgs),
    /// Maximize the lift-to-drag ratio over the design box.
    Optimize(OptimizeArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
    /// Print the JSON schema of a command's `--json` output.
    Schema(SchemaArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Geometry(_) => "geometry",
            Self::Doe(DoeCommand::Sample(_)) => "doe sample",
            Self::Doe(DoeCommand::Split(_)) => "doe split",
            Self::Doe(DoeCommand::Scan(_)) => "doe scan",
            Self::Predict(_) => "predict",
            Self::Integrate(_) => "integrate",
            Self::Metrics(_) => "metrics",
            Self::Pareto(_) => "pareto",
            Self::Polar(_) => "polar",
            Self::Optimize(_) => "optimize",
            Self::Serve(_) => "serve",
            Self::Schema(_) => "schema",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Root chord (m).
    #[arg(long = "c-r", allow_hyphen_values = true)]
    pub c_r: f64,
    /// Span from the symmetry plane to the tip (m).
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// Taper ratio, tip chord over root chord.
    #[arg(long, allow_hyphen_values = true)]
    pub taper: f64,
    /// Leading-edge sweep (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ResolutionArgs {
    /// Chordwise stations per surface side.
    #[arg(long)]
    pub n_chord: Option<usize>,
    /// Spanwise stations.
    #[arg(long)]
    pub n_span: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StlKind {
    Binary,
    Ascii,
}

impl From<StlKind> for StlFormat {
    fn from(k: StlKind) -> Self {
        match k {
            StlKind::Binary => StlFormat::Binary,
            StlKind::Ascii => StlFormat::Ascii,
        }
    }
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub resolution: ResolutionArgs,
    /// STL output path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = StlKind::Binary)]
    pub format: StlKind,
    /// Metadata sidecar path; defaults to the STL path with a `.json` extension.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DoeCommand {
    /// Draw cases uniformly from the parameter space.
    Sample(SampleArgs),
    /// Split a case file into train, validation and three test sets.
    Split(SplitArgs),
    /// Cartesian alpha by sweep scan at a fixed geometry and speed.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Number of cases.
    #[arg(long)]
    pub n: usize,
    /// Random seed; generated and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Case file to write (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PeelArg {
    Auto,
    Exact,
    Approximate,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Case file (JSON lines).
    #[arg(long)]
    pub cases: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_ood: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_interp: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_id_random: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_val: usize,
    /// Seed for the random test and validation draws; generated when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hull peeling mode; `auto` switches to approximate above 10,000 cases.
    #[arg(long, value_enum, default_value_t = PeelArg::Auto)]
    pub peel: PeelArg,
    /// Candidates per layer in approximate mode.
    #[arg(long, default_value_t = 4096)]
    pub candidates: usize,
    /// Split manifest to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long = "c-r", default_value_t = 0.806)]
    pub c_r: f64,
    #[arg(long, default_value_t = 1.1963)]
    pub b: f64,
    #[arg(long, default_value_t = 0.562)]
    pub taper: f64,
    /// Freestream speed (m/s).
    #[arg(long = "u-inf", default_value_t = 225.0)]
    pub u_inf: f64,
    /// Angles of attack as `start:stop:step` or a comma list.
    #[arg(long, default_value = "-30:30:2", allow_hyphen_values = true)]
    pub alpha: String,
    /// Sweep angles as `start:stop:step` or a comma list.
    #[arg(long, default_value = "0:70:10", allow_hyphen_values = true)]
    pub sweep: String,
    /// Case file to write (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Remote surrogate base URL; the configured backend is used when omitted.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Have the builtin model return a surface field and check it integrates
    /// back to the returned coefficients.
    #[arg(long)]
    pub fields: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Case file (JSON lines); otherwise a single design from the flags below.
    #[arg(long, conflicts_with_all = ["c_r", "b", "taper", "sweep", "u_inf", "alpha"])]
    pub cases: Option<PathBuf>,
    /// Root chord (m).
    #[arg(long = "c-r", allow_hyphen_values = true)]
    pub c_r: Option<f64>,
    /// Span from the symmetry plane to the tip (m).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Taper ratio.
    #[arg(long, allow_hyphen_values = true)]
    pub taper: Option<f64>,
    /// Leading-edge sweep (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<f64>,
    /// Freestream speed (m/s).
    #[arg(long = "u-inf", allow_hyphen_values = true)]
    pub u_inf: Option<f64>,
    /// Angle of attack (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub resolution: ResolutionArgs,
    /// Coefficient table to write (.csv or .json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Surface mesh (binary or ASCII STL).
    #[arg(long)]
    pub mesh: PathBuf,
    /// JSON `{ "p_s": [..], "tau": [[x, y, z], ..] }`, one entry per face.
    #[arg(long)]
    pub field: PathBuf,
    /// Freestream speed (m/s).
    #[arg(long = "u-inf", allow_hyphen_values = true)]
    pub u_inf: f64,
    /// Angle of attack (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Reference area (m²); defaults to the planform area when the mesh
    /// sidecar is found next to the STL.
    #[arg(long)]
    pub a_ref: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// JSON lines, one `{model, test_set, seed, case_id, field, prediction, truth}` per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Report to write (.csv or .json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PointSource {
    /// Coefficient table (CSV with id, C_D, C_l and optional alpha, Lambda).
    #[arg(long, conflicts_with = "dataset")]
    pub coefficients: Option<PathBuf>,
    /// Case file supplying alpha and sweep for the table rows.
    #[arg(long, requires = "coefficients")]
    pub cases: Option<PathBuf>,
    /// Dataset root; defaults to WINGFORGE_DATA when no table is given.
    #[arg(long, env = "WINGFORGE_DATA")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    #[command(flatten)]
    pub source: PointSource,
    /// Front as CSV (id, C_D, C_l, alpha, Lambda, in_range).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scatter plot with the front highlighted.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PolarArgs {
    #[command(flatten)]
    pub source: PointSource,
    /// All points as CSV (id, C_D, C_l, alpha, Lambda, in_range).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Three-panel polar plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// gradient, evolutionary or bayesian.
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Surrogate evaluation budget.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Optimizer step budget (gradient method).
    #[arg(long)]
    pub steps: Option<u64>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub wall_clock: Option<f64>,
    /// Random seed; generated and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Result JSON to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace CSV to write.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Compare the optimum with its nearest neighbor in this dataset.
    #[arg(long, env = "WINGFORGE_DATA")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "WINGFORGE_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Dataset served as `default`.
    #[arg(long, env = "WINGFORGE_DATA")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// Command name, e.g. `geometry` or `doe-split`; lists names when omitted.
    pub name: Option<String>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}
