//! The `snap` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use snap::aggregation::{snap_average, AggregationMethod, MomRule, WeiszfeldConfig};
use snap::datagen::{gen_pca, gen_timeseries, gen_vector_avg, ExperimentConfig};
use snap::metrics::{pairwise_matrix, Dataset, Metric};
use snap::subspace::{pca, weighted_pca};
use snap::timeseries::{ema, snap_moving_average, window_weights, SmoothingConfig};
use snap::weights::{agreement_weights, disagreement_scores, KernelFamily, KernelSpec, ScaleRule};

use crate::harness::{run_moving_avg, run_pca, run_scaling, run_vector_avg, ALPHAS, OUTLIER_FRACS};
use crate::io::{
    emit, numeric_csv, read_table, table_to_rankings, table_to_series, write_file, CliError,
    CliResult, Table,
};
use crate::report::{emit_report, emit_scaling, svg_scatter, Format};

#[derive(Debug, Parser)]
#[command(
    name = "snap",
    version,
    about = "Agreement weights and robust aggregation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Agreement weights of the rows of a CSV file.
    Weights(WeightsArgs),
    /// Robust average of the rows of a CSV file.
    Aggregate(AggregateArgs),
    /// Principal subspace, optionally agreement weighted.
    Pca(PcaArgs),
    /// Smooth a one-column series.
    Smooth(SmoothArgs),
    /// Generate a synthetic dataset with its inlier mask.
    Gen(GenArgs),
    /// Run the seeded benchmark tables.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    SqEuclidean,
    Abs,
    KendallTau,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::SqEuclidean => Metric::SquaredEuclidean,
            MetricArg::Abs => Metric::AbsoluteScalar,
            MetricArg::KendallTau => Metric::KendallTau,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Laplace,
    Gauss,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Mad,
    Med,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Svg => Format::Svg,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Mean,
    Weiszfeld,
    CompMedian,
    #[value(name = "mom95")]
    Mom95,
    MomSqrt,
    SnapL2,
    #[value(name = "snap-l2sq")]
    SnapL2sq,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaselineArg {
    Ema,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenExperiment {
    VectorAvg,
    Pca,
    MovingAvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchExperiment {
    VectorAvg,
    Pca,
    MovingAvg,
    Scaling,
    All,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct KernelOpts {
    #[arg(long, value_enum, default_value_t = KernelArg::Laplace)]
    pub kernel: KernelArg,
    #[arg(long, value_enum, default_value_t = ScaleArg::Mad)]
    pub scale: ScaleArg,
}

impl KernelOpts {
    pub fn spec(self) -> KernelSpec {
        let family = match self.kernel {
            KernelArg::Laplace => KernelFamily::Laplacian,
            KernelArg::Gauss => KernelFamily::Gaussian,
        };
        let rule = match self.scale {
            ScaleArg::Mad => ScaleRule::Mad,
            ScaleArg::Med => ScaleRule::Med,
        };
        KernelSpec::new(family, rule)
    }
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Input CSV with a header row; `-` reads standard input.
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// Output directory; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::SnapL2)]
    pub method: MethodArg,
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// Distance used for the agreement weights of the SNAP methods.
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    /// Seed of the median-of-means partition.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,
    /// Number of components.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// Plain PCA without agreement weights.
    #[arg(long)]
    pub unweighted: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    /// One-column CSV.
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// Past values per window; defaults to `floor(2/alpha - 1)`.
    #[arg(long)]
    pub window: Option<usize>,
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// Use the baseline smoother instead of agreement weighting.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub experiment: GenExperiment,
    /// Outlier fraction; defaults to 0.3 for vectors and 0.1 otherwise.
    #[arg(long)]
    pub frac: Option<f64>,
    /// Vector dimension of `vector-avg`.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Number of points; defaults to the benchmark size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchExperiment::All)]
    pub experiment: BenchExperiment,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Include wall-clock seconds per cell.
    #[arg(long)]
    pub timing: bool,
    /// Vector dimensions of the averaging table.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 50])]
    pub dims: Vec<usize>,
    /// Largest n of the scaling benchmark.
    #[arg(long, default_value_t = 2000)]
    pub max_n: usize,
    /// Outlier fraction of the trial rendered by `--format svg`.
    #[arg(long, default_value_t = 0.3)]
    pub frac: f64,
    /// Trial rendered by `--format svg`.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn check_frac(frac: f64) -> CliResult<()> {
    if (0.0..1.0).contains(&frac) {
        Ok(())
    } else {
        Err(invalid(format!("--frac {frac} outside [0, 1)")))
    }
}

fn ensure_columns(table: &Table, min: usize) -> CliResult<()> {
    if table.header.len() < min {
        return Err(invalid(format!(
            "need at least {min} columns, found {}",
            table.header.len()
        )));
    }
    Ok(())
}

fn dataset_for(table: &Table, metric: Metric) -> CliResult<Dataset> {
    Ok(match metric {
        Metric::Euclidean | Metric::SquaredEuclidean => Dataset::vectors(table.rows.clone())?,
        Metric::AbsoluteScalar => Dataset::scalars(table_to_series(table)?)?,
        Metric::KendallTau => Dataset::rankings(table_to_rankings(table)?)?,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn coordinate_header(dim: usize) -> Vec<String> {
    (0..dim).map(|k| format!("x{k}")).collect()
}

fn planar(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p[0], p[1]]).collect()
}

#[derive(Serialize)]
struct WeightsOut<'a> {
    metric: &'static str,
    kernel: &'static str,
    weights: &'a [f64],
    delta: &'a [f64],
    scale: f64,
    delta_sm: f64,
    sm_index: usize,
}

fn cmd_weights(a: &WeightsArgs) -> CliResult<()> {
    let table = read_table(&a.input)?;
    let metric = Metric::from(a.metric);
    let format = Format::from(a.format);
    if format == Format::Svg && !matches!(metric, Metric::Euclidean | Metric::SquaredEuclidean) {
        return Err(invalid("svg needs vector data"));
    }
    if format == Format::Svg {
        ensure_columns(&table, 2)?;
    }
    let data = dataset_for(&table, metric)?;
    let dist = pairwise_matrix(&data, metric)?;
    let scores = disagreement_scores(&dist);
    let spec = a.kernel.spec();
    let w = agreement_weights(&dist, spec);
    let text = match format {
        Format::Csv => {
            let rows: Vec<Vec<f64>> = (0..w.len())
                .map(|i| vec![i as f64, scores.delta[i], w[i]])
                .collect();
            numeric_csv(&["index", "delta", "weight"], &rows)
        }
        Format::Json => to_json(&WeightsOut {
            metric: metric.name(),
            kernel: spec.label(),
            weights: &w,
            delta: &scores.delta,
            scale: w.scale,
            delta_sm: w.delta_sm,
            sm_index: w.sm_index,
        }),
        Format::Svg => svg_scatter(&planar(&table.rows), &w),
    };
    emit(
        a.out.as_deref(),
        &format!("weights.{}", format.extension()),
        &text,
    )?;
    Ok(())
}

fn method_for(a: &AggregateArgs) -> CliResult<AggregationMethod> {
    let spec = a.kernel.spec();
    let metric = Metric::from(a.metric);
    let snap = matches!(a.method, MethodArg::SnapL2 | MethodArg::SnapL2sq);
    if snap && !matches!(metric, Metric::Euclidean | Metric::SquaredEuclidean) {
        return Err(invalid(format!(
            "--metric {} cannot weight vectors",
            metric.name()
        )));
    }
    Ok(match a.method {
        MethodArg::Mean => AggregationMethod::Mean,
        MethodArg::Weiszfeld => AggregationMethod::Weiszfeld,
        MethodArg::CompMedian => AggregationMethod::ComponentMedian,
        MethodArg::Mom95 => AggregationMethod::MedianOfMeans(MomRule::Blocks95),
        MethodArg::MomSqrt => AggregationMethod::MedianOfMeans(MomRule::BlocksSqrt),
        MethodArg::SnapL2 => AggregationMethod::WeightedWeiszfeld { spec, metric },
        MethodArg::SnapL2sq => AggregationMethod::WeightedMean { spec, metric },
    })
}

#[derive(Serialize)]
struct AggregateOut<'a> {
    method: String,
    estimate: &'a [f64],
}

fn cmd_aggregate(a: &AggregateArgs) -> CliResult<()> {
    let format = Format::from(a.format);
    if format == Format::Svg {
        return Err(invalid("aggregate writes csv or json"));
    }
    let method = method_for(a)?;
    let table = read_table(&a.input)?;
    let est = snap_average(&table.rows, &method, &WeiszfeldConfig::default(), a.seed)?;
    let text = match format {
        Format::Json => to_json(&AggregateOut {
            method: method.to_string(),
            estimate: &est,
        }),
        _ => numeric_csv(&coordinate_header(est.len()), std::slice::from_ref(&est)),
    };
    emit(
        a.out.as_deref(),
        &format!("aggregate.{}", format.extension()),
        &text,
    )?;
    Ok(())
}

/// `basis` lists the components, each a unit vector.
#[derive(Serialize)]
struct PcaOut<'a> {
    basis: Vec<Vec<f64>>,
    eigenvalues: &'a [f64],
    center: &'a [f64],
}

fn cmd_pca(a: &PcaArgs) -> CliResult<()> {
    let format = Format::from(a.format);
    let table = read_table(&a.input)?;
    let dim = table.header.len();
    if a.k == 0 || a.k > dim {
        return Err(invalid(format!("--k {} outside 1..={dim}", a.k)));
    }
    if format == Format::Svg && dim < 2 {
        return Err(invalid("svg needs at least two columns"));
    }
    let (est, weights) = if a.unweighted {
        (pca(&table.rows, a.k)?, vec![1.0; table.rows.len()])
    } else {
        let data = Dataset::vectors(table.rows.clone())?;
        let w = agreement_weights(&pairwise_matrix(&data, Metric::Euclidean)?, a.kernel.spec());
        (weighted_pca(&table.rows, &w, a.k)?, w.into_vec())
    };
    let text = match format {
        Format::Json => to_json(&PcaOut {
            basis: (0..a.k).map(|c| est.basis.column(c)).collect(),
            eigenvalues: &est.eigenvalues,
            center: &est.center,
        }),
        Format::Csv => {
            let mut header = vec!["eigenvalue".to_string()];
            header.extend(coordinate_header(dim));
            let rows: Vec<Vec<f64>> = (0..a.k)
                .map(|c| {
                    let mut row = vec![est.eigenvalues[c]];
                    row.extend(est.basis.column(c));
                    row
                })
                .collect();
            numeric_csv(&header, &rows)
        }
        Format::Svg => svg_scatter(&planar(&table.rows), &weights),
    };
    emit(
        a.out.as_deref(),
        &format!("pca.{}", format.extension()),
        &text,
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SmoothOut<'a> {
    alpha: f64,
    method: String,
    smoothed: &'a [f64],
}

fn cmd_smooth(a: &SmoothArgs) -> CliResult<()> {
    let format = Format::from(a.format);
    let table = read_table(&a.input)?;
    let series = table_to_series(&table)?;
    let mut cfg = SmoothingConfig::new(a.alpha, a.kernel.spec())?;
    if let Some(s) = a.window {
        cfg = cfg.with_window(s);
    }
    let (smoothed, method) = match a.baseline {
        Some(BaselineArg::Ema) => (ema(&series, a.alpha)?, "ema".to_string()),
        None => (
            snap_moving_average(&series, &cfg)?,
            format!("snap/{}", cfg.kernel),
        ),
    };
    let text = match format {
        Format::Csv => {
            let rows: Vec<Vec<f64>> = series
                .iter()
                .zip(&smoothed)
                .enumerate()
                .map(|(t, (x, y))| vec![t as f64, *x, *y])
                .collect();
            numeric_csv(&["t", "value", "smoothed"], &rows)
        }
        Format::Json => to_json(&SmoothOut {
            alpha: a.alpha,
            method,
            smoothed: &smoothed,
        }),
        Format::Svg => svg_scatter(&series_points(&series), &current_weights(&series, &cfg)),
    };
    emit(
        a.out.as_deref(),
        &format!("smooth.{}", format.extension()),
        &text,
    )?;
    Ok(())
}

fn series_points(series: &[f64]) -> Vec<[f64; 2]> {
    series
        .iter()
        .enumerate()
        .map(|(t, &x)| [t as f64, x])
        .collect()
}

/// Weight of each value within its own trailing window.
fn current_weights(series: &[f64], cfg: &SmoothingConfig) -> Vec<f64> {
    (0..series.len())
        .map(|t| {
            let window = &series[t.saturating_sub(cfg.window)..=t];
            *window_weights(window, cfg.alpha, cfg.kernel)
                .last()
                .unwrap()
        })
        .collect()
}

fn mask_csv(name: &str, flags: &[bool]) -> String {
    let rows: Vec<Vec<f64>> = flags.iter().map(|&f| vec![f as u8 as f64]).collect();
    numeric_csv(&[name], &rows)
}

fn cmd_gen(a: &GenArgs) -> CliResult<()> {
    if a.dim == 0 {
        return Err(invalid("--dim must be positive"));
    }
    let base = match a.experiment {
        GenExperiment::VectorAvg => {
            ExperimentConfig::vector_avg(a.dim, a.frac.unwrap_or(0.3), a.seed)
        }
        GenExperiment::Pca => ExperimentConfig::pca(a.frac.unwrap_or(0.1), a.seed),
        GenExperiment::MovingAvg => {
            let mut c = ExperimentConfig::moving_avg(a.seed);
            if let Some(f) = a.frac {
                c.outlier_frac = f;
            }
            c
        }
    };
    check_frac(base.outlier_frac)?;
    let cfg = match a.n {
        Some(0) => return Err(invalid("--n must be positive")),
        Some(n) => base.with_n(n),
        None => base,
    };
    match a.experiment {
        GenExperiment::VectorAvg | GenExperiment::Pca => {
            let data = if a.experiment == GenExperiment::Pca {
                gen_pca(&cfg, a.trial)
            } else {
                gen_vector_avg(&cfg, a.trial)
            };
            let dim = data.points[0].len();
            write_file(
                &a.out.join("data.csv"),
                &numeric_csv(&coordinate_header(dim), &data.points),
            )?;
            write_file(
                &a.out.join("mask.csv"),
                &mask_csv("inlier", &data.inlier_mask),
            )?;
        }
        GenExperiment::MovingAvg => {
            let s = gen_timeseries(&cfg, a.trial);
            let rows: Vec<Vec<f64>> = s.noisy.iter().map(|&x| vec![x]).collect();
            write_file(&a.out.join("data.csv"), &numeric_csv(&["value"], &rows))?;
            let truth: Vec<Vec<f64>> = s.truth.iter().map(|&x| vec![x]).collect();
            write_file(&a.out.join("truth.csv"), &numeric_csv(&["truth"], &truth))?;
            let inlier: Vec<bool> = (0..s.noisy.len())
                .map(|i| s.spiked.binary_search(&i).is_err())
                .collect();
            write_file(&a.out.join("mask.csv"), &mask_csv("inlier", &inlier))?;
        }
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    if a.trials == 0 {
        return Err(invalid("--trials must be positive"));
    }
    if a.dims.is_empty() || a.dims.contains(&0) {
        return Err(invalid("--dims must list positive dimensions"));
    }
    check_frac(a.frac)?;
    let format = Format::from(a.format);
    let all = a.experiment == BenchExperiment::All;
    let wants = |e: BenchExperiment| all || a.experiment == e;
    if format == Format::Svg {
        if a.experiment == BenchExperiment::Scaling {
            return Err(invalid("scaling has no svg output"));
        }
        return bench_svg(a, &wants);
    }
    if wants(BenchExperiment::Scaling) && a.max_n < 100 {
        return Err(invalid("--max-n must be at least 100"));
    }
    let mut written = Vec::new();
    if wants(BenchExperiment::VectorAvg) {
        let r = run_vector_avg(a.seed, a.trials, &a.dims, &OUTLIER_FRACS);
        written.push(emit_report(&r, format, &a.out, a.timing)?);
    }
    if wants(BenchExperiment::Pca) {
        let r = run_pca(a.seed, a.trials, &OUTLIER_FRACS);
        written.push(emit_report(&r, format, &a.out, a.timing)?);
    }
    if wants(BenchExperiment::MovingAvg) {
        let r = run_moving_avg(a.seed, a.trials, &ALPHAS);
        written.push(emit_report(&r, format, &a.out, a.timing)?);
    }
    if wants(BenchExperiment::Scaling) {
        let r = run_scaling(a.max_n, &[2, 50], &[10], a.seed);
        written.push(emit_scaling(&r, format, &a.out)?);
    }
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

/// One trial of each selected experiment as a weight-shaded scatter.
fn bench_svg(a: &BenchArgs, wants: &dyn Fn(BenchExperiment) -> bool) -> CliResult<()> {
    let spec = KernelSpec::GAUSS_MAD;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut write = |name: String, svg: String| -> CliResult<()> {
        let path = a.out.join(name);
        write_file(&path, &svg)?;
        written.push(path);
        Ok(())
    };
    let weigh = |points: &[Vec<f64>]| -> CliResult<Vec<f64>> {
        let data = Dataset::vectors(points.to_vec())?;
        Ok(agreement_weights(&pairwise_matrix(&data, Metric::Euclidean)?, spec).into_vec())
    };
    if wants(BenchExperiment::VectorAvg) {
        let d = gen_vector_avg(&ExperimentConfig::vector_avg(2, a.frac, a.seed), a.trial);
        write(
            format!("vector-avg-trial{}.svg", a.trial),
            svg_scatter(&planar(&d.points), &weigh(&d.points)?),
        )?;
    }
    if wants(BenchExperiment::Pca) {
        let d = gen_pca(&ExperimentConfig::pca(a.frac, a.seed), a.trial);
        write(
            format!("pca-trial{}.svg", a.trial),
            svg_scatter(&planar(&d.points), &weigh(&d.points)?),
        )?;
    }
    if wants(BenchExperiment::MovingAvg) {
        let s = gen_timeseries(&ExperimentConfig::moving_avg(a.seed), a.trial);
        let cfg = SmoothingConfig::new(0.2, spec)?;
        write(
            format!("moving-avg-trial{}.svg", a.trial),
            svg_scatter(&series_points(&s.noisy), &current_weights(&s.noisy, &cfg)),
        )?;
    }
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Weights(a) => cmd_weights(a),
        Command::Aggregate(a) => cmd_aggregate(a),
        Command::Pca(a) => cmd_pca(a),
        Command::Smooth(a) => cmd_smooth(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
