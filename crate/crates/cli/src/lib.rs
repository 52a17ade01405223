//! Command-line front end. `dispatch` returns the process exit status:
//! 0 on success, 1 on any library error, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use circreg::bandwidth::{
    cv_bandwidth_density, cv_bandwidth_frechet, plugin_bandwidth, BandwidthGrid, CvScore, Estimator,
};
use circreg::circle::Angle;
use circreg::frechet_lc::lc_estimate;
use circreg::frechet_ll::{effective_weights, ll_estimate};
use circreg::harness::{run_rate_experiment, ExperimentConfig};
use circreg::io::{format_f64, load_angles, load_paired_dataset, AngleUnit, DatasetSchema, ResponseEncoding};
use circreg::kde::{h_amise, mise_empirical, score_sf, KernelDensity, ISE_GRID};
use circreg::metric::ResponsePoint;
use circreg::{DensityModel, DirectionalKernel, Error, MetricSpace, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "circreg", version, about = "Kernel smoothing and Fréchet regression on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel density estimate on a uniform angle grid.
    Density(DensityArgs),
    /// Monte Carlo MISE for a density model over several sample sizes.
    Mise(MiseArgs),
    /// Local constant or local linear Fréchet regression on a query grid.
    Regress(RegressArgs),
    /// Bandwidth selection by plug-in or cross-validation.
    Bandwidth(BandwidthArgs),
    /// Run a rate experiment from a JSON config.
    Simulate(SimulateArgs),
    /// Kernel moment tables a_{j,k} and c_{h,j,k}.
    Constants(ConstantsArgs),
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[arg(long)]
    input: PathBuf,
    /// Name of the angle column.
    #[arg(long, default_value = "x")]
    column: String,
    #[arg(long)]
    degrees: bool,
    #[arg(long, default_value = "von_mises")]
    kernel: String,
    /// A positive number, `amise:<model>` or `plugin`.
    #[arg(long)]
    bandwidth: String,
    #[arg(long, default_value_t = ISE_GRID)]
    grid: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MiseArgs {
    /// Density model, e.g. `von_mises:0:1`.
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "von_mises")]
    kernel: String,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// A positive number, or `amise` for the model's own AMISE bandwidth.
    #[arg(long, default_value = "amise")]
    bandwidth: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EstimatorArg {
    Lc,
    Ll,
}

#[derive(Args, Debug)]
struct SpaceArgs {
    /// `euclidean[:dim]`, `circle` or `wasserstein[:levels]`.
    #[arg(long, default_value = "euclidean")]
    space: String,
    #[arg(long)]
    input: PathBuf,
    /// Name of the predictor column.
    #[arg(long, default_value = "x")]
    x_column: String,
    /// Read predictor (and arc response) angles in degrees.
    #[arg(long)]
    degrees: bool,
    #[arg(long, default_value = "von_mises")]
    kernel: String,
}

#[derive(Args, Debug)]
struct RegressArgs {
    #[arg(long, value_enum, default_value = "lc")]
    estimator: EstimatorArg,
    #[command(flatten)]
    data: SpaceArgs,
    #[arg(long)]
    bandwidth: f64,
    /// Number of equispaced query angles starting at −π.
    #[arg(long, default_value_t = 16)]
    query_grid: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodArg {
    Plugin,
    Cv,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TargetArg {
    Kde,
    Lc,
    Ll,
}

#[derive(Args, Debug)]
struct BandwidthArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// What the bandwidth is for; plug-in supports `kde` only.
    #[arg(long, value_enum, default_value = "kde")]
    estimator: TargetArg,
    #[command(flatten)]
    data: SpaceArgs,
    /// Candidate grid `lo:hi:N` with optional `log` or `lin` suffix.
    #[arg(long, default_value = "0.05:1.5:20log")]
    grid: String,
    /// Pilot bandwidth for the plug-in rule.
    #[arg(long)]
    pilot: Option<f64>,
    /// Penalty for failed cross-validation folds.
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fill `wall_time_seconds`; the report is then no longer reproducible byte for byte.
    #[arg(long)]
    record_timing: bool,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long, default_value = "von_mises")]
    kernel: String,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 1;
    }
    let outcome = match cli.command {
        Command::Density(a) => density(a),
        Command::Mise(a) => mise(a),
        Command::Regress(a) => regress(a),
        Command::Bandwidth(a) => bandwidth(a),
        Command::Simulate(a) => simulate(a),
        Command::Constants(a) => constants(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// `CIRC_THREADS` caps the worker pool; 0 or unset means one per core.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CIRC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("CIRC_THREADS must be a non-negative integer, got `{raw}`")))?;
    // a pool may already exist when dispatch runs twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn unit(degrees: bool) -> AngleUnit {
    if degrees {
        AngleUnit::Degrees
    } else {
        AngleUnit::Radians
    }
}

fn parse_space(text: &str) -> Result<MetricSpace> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let count = |default: usize| -> Result<usize> {
        match arg {
            None => Ok(default),
            Some(a) => a
                .parse::<usize>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| Error::InvalidConfig(format!("bad size in space `{text}`"))),
        }
    };
    match name {
        "euclidean" => Ok(MetricSpace::euclidean(count(1)?)),
        "circle" if arg.is_none() => Ok(MetricSpace::circle()),
        "wasserstein" => Ok(MetricSpace::wasserstein(count(0)?)),
        _ => Err(Error::InvalidConfig(format!(
            "unknown space `{text}`; expected euclidean[:dim], circle or wasserstein[:levels]"
        ))),
    }
}

/// Loads the dataset and returns it with the space, where a quantile space
/// without an explicit level count takes it from the file.
fn load_regression_data(args: &SpaceArgs) -> Result<(MetricSpace, circreg::PairedSample)> {
    let mut space = parse_space(&args.space)?;
    let mut schema = DatasetSchema::for_space(&space).with_unit(unit(args.degrees));
    schema.predictor_column = args.x_column.clone();
    if let circreg::metric::SpaceKind::Wasserstein1D { levels: 0 } = space.kind {
        schema.response = ResponseEncoding::Quantiles { levels: None };
    }
    let sample = load_paired_dataset(&args.input, &schema)?;
    if let ResponseEncoding::Quantiles { levels: None } = schema.response {
        space = MetricSpace::wasserstein(sample.responses()[0].components().len());
    }
    sample.check_space(&space)?;
    Ok((space, sample))
}

fn payload_header(space: &MetricSpace) -> Vec<String> {
    match ResponseEncoding::for_space(space) {
        ResponseEncoding::Euclidean { columns } => columns,
        ResponseEncoding::Arc { column } => vec![column],
        ResponseEncoding::Quantiles { levels } => (1..=levels.unwrap_or(0)).map(|i| format!("q{i}")).collect(),
    }
}

fn payload(y: &ResponsePoint) -> Vec<f64> {
    match y {
        ResponsePoint::Arc(a) => vec![a.radians()],
        other => other.components(),
    }
}

fn query_grid(m: usize) -> Result<Vec<Angle>> {
    if m == 0 {
        return Err(Error::InvalidConfig("query grid needs at least one angle".into()));
    }
    Ok((0..m)
        .map(|k| Angle::new(-std::f64::consts::PI + std::f64::consts::TAU * k as f64 / m as f64))
        .collect())
}

fn density(a: DensityArgs) -> Result<()> {
    let kernel: DirectionalKernel = a.kernel.parse()?;
    let sample = load_angles(&a.input, &a.column, unit(a.degrees))?;
    let h = if let Some(model) = a.bandwidth.strip_prefix("amise:") {
        h_amise(score_sf(&DensityModel::parse(model)?)?, &kernel, sample.len())?
    } else if a.bandwidth == "plugin" {
        plugin_bandwidth(&sample, &kernel, None)?.h
    } else {
        parse_positive(&a.bandwidth, "bandwidth")?
    };
    if a.grid == 0 {
        return Err(Error::InvalidConfig("grid needs at least one point".into()));
    }
    let est = KernelDensity::new(&kernel, &sample, h)?;
    let mut out = open_output(&a.output)?;
    writeln!(out, "angle,density")?;
    for (x, f) in est.evaluate_grid(a.grid) {
        writeln!(out, "{},{}", format_f64(x.radians()), format_f64(f))?;
    }
    out.flush()?;
    Ok(())
}

fn parse_positive(raw: &str, what: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| *v > 0.0 && v.is_finite())
        .ok_or_else(|| Error::InvalidConfig(format!("{what} must be a positive number, got `{raw}`")))
}

fn mise(a: MiseArgs) -> Result<()> {
    let kernel: DirectionalKernel = a.kernel.parse()?;
    let model = DensityModel::parse(&a.model)?;
    let fixed = if a.bandwidth == "amise" {
        None
    } else {
        Some(parse_positive(&a.bandwidth, "bandwidth")?)
    };
    let score = match fixed {
        None => Some(score_sf(&model)?),
        Some(_) => None,
    };
    let mut out = open_output(&a.output)?;
    writeln!(out, "n,h,mise")?;
    for &n in &a.n_list {
        let h = match (fixed, score) {
            (Some(h), _) => h,
            (None, Some(s)) => h_amise(s, &kernel, n)?,
            (None, None) => unreachable!(),
        };
        let m = mise_empirical(&model, &kernel, h, n, a.reps, a.seed)?;
        writeln!(out, "{n},{},{}", format_f64(h), format_f64(m))?;
    }
    out.flush()?;
    Ok(())
}

fn regress(a: RegressArgs) -> Result<()> {
    let kernel: DirectionalKernel = a.data.kernel.parse()?;
    let (space, sample) = load_regression_data(&a.data)?;
    let queries = query_grid(a.query_grid)?;
    let mut out = open_output(&a.output)?;
    let mut header = vec!["angle".to_string()];
    header.extend(payload_header(&space));
    header.push("objective".into());
    if let EstimatorArg::Ll = a.estimator {
        header.extend(["sigma2", "min_weight", "max_weight"].map(String::from));
    }
    writeln!(out, "{}", header.join(","))?;
    for x in queries {
        let mut row = vec![x.radians()];
        match a.estimator {
            EstimatorArg::Lc => {
                let est = lc_estimate(&space, &sample, &kernel, a.bandwidth, x)?;
                row.extend(payload(&est.minimizer));
                row.push(est.objective);
            }
            EstimatorArg::Ll => {
                let est = ll_estimate(&space, &sample, &kernel, a.bandwidth, x)?;
                let w = effective_weights(sample.predictors(), &kernel, a.bandwidth, x)?;
                row.extend(payload(&est.minimizer));
                row.push(est.objective);
                row.push(w.moments.sigma2);
                row.push(w.weights.iter().copied().fold(f64::INFINITY, f64::min));
                row.push(w.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            }
        }
        let fields: Vec<String> = row.into_iter().map(format_f64).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BandwidthReport {
    selected_h: f64,
    scores: Vec<CvScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plugin: Option<circreg::bandwidth::PluginBandwidth>,
}

fn bandwidth(a: BandwidthArgs) -> Result<()> {
    let kernel: DirectionalKernel = a.data.kernel.parse()?;
    let report = match (a.method, a.estimator) {
        (MethodArg::Plugin, TargetArg::Kde) => {
            let sample = load_angles(&a.data.input, &a.data.x_column, unit(a.data.degrees))?;
            let p = plugin_bandwidth(&sample, &kernel, a.pilot)?;
            BandwidthReport {
                selected_h: p.h,
                scores: Vec::new(),
                plugin: Some(p),
            }
        }
        (MethodArg::Plugin, _) => {
            return Err(Error::InvalidConfig("the plug-in rule is for density estimation; use --method cv".into()))
        }
        (MethodArg::Cv, TargetArg::Kde) => {
            let sample = load_angles(&a.data.input, &a.data.x_column, unit(a.data.degrees))?;
            let grid: BandwidthGrid = a.grid.parse()?;
            let sel = cv_bandwidth_density(&sample, &kernel, &grid)?;
            BandwidthReport {
                selected_h: sel.selected_h,
                scores: sel.scores,
                plugin: None,
            }
        }
        (MethodArg::Cv, target) => {
            let (space, sample) = load_regression_data(&a.data)?;
            let grid: BandwidthGrid = a.grid.parse()?;
            let est = if let TargetArg::Ll = target {
                Estimator::LocalLinear
            } else {
                Estimator::LocalConstant
            };
            let sel = cv_bandwidth_frechet(&space, &sample, &kernel, &grid, est, a.penalty)?;
            BandwidthReport {
                selected_h: sel.selected_h,
                scores: sel.scores,
                plugin: None,
            }
        }
    };
    let mut out = open_output(&a.output)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = read_config(&a.config)?;
    let start = Instant::now();
    let mut report = run_rate_experiment(&cfg)?;
    if a.record_timing {
        report.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    }
    let mut out = open_output(&a.output)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn constants(a: ConstantsArgs) -> Result<()> {
    let kernel: DirectionalKernel = a.kernel.parse()?;
    let mut out = open_output(&a.output)?;
    writeln!(out, "j,k,a_jk,c_hjk")?;
    for j in 0..=4 {
        for k in 1..=2 {
            let m = kernel.moment_a(j, k)?;
            let c = kernel.normalizing_c(a.h, j, k)?;
            writeln!(out, "{j},{k},{},{}", format_f64(m.value), format_f64(c.value))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spaces_parse() {
        assert_eq!(parse_space("euclidean:3").unwrap(), MetricSpace::euclidean(3));
        assert_eq!(parse_space("circle").unwrap(), MetricSpace::circle());
        assert_eq!(parse_space("wasserstein:5").unwrap(), MetricSpace::wasserstein(5));
        assert!(parse_space("sphere").is_err());
        assert!(parse_space("euclidean:0").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(dispatch(["circreg", "constants", "--bogus"]), 2);
        assert_eq!(dispatch(["circreg", "nothing"]), 2);
    }

    #[test]
    fn query_grid_starts_at_minus_pi() {
        let g = query_grid(4).unwrap();
        assert_eq!(g[0].radians(), -std::f64::consts::PI);
        assert!(query_grid(0).is_err());
    }
}
