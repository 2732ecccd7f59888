//! Command-line front end.
//!
//! ```text
//! smoothcert certify  --e0 0.9 --e1 0.05
//! smoothcert sweep    --resolution 200 -o out/sweep --render
//! smoothcert simulate --samples 500 --classes 10 -o out/sim
//! smoothcert dataset  --input out/sim/counts.csv -o out/run --render
//! smoothcert analyze  --input out/run/samples.csv -o out/run
//! ```
//!
//! Exit codes: 0 success, 1 usage, 2 bad data, 3 numerical failure.

pub mod files;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{
    certified_accuracy_curve, certify_records, diff_map, ratio_map, region_of_superiority, summarize, sweep_simplex,
    Evidence, RadiusField, SampleRecord,
};
use crate::confidence::{RawCounts, SoftmaxSums};
use crate::domain::{ExpectationBounds, ExpectationMode, NoiseConfig};
use crate::ensemble::{certify_ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::mechanisms::{MechanismId, OptimizerSettings};
use crate::simulate::{count_draws, softmax_draws, DirichletPopulation, SimulationRun};

use files::{fmt_radius, OutputDir};

fn parse_sigma(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite and positive".into())
    }
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

fn parse_unit(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in [0, 1]".into())
    }
}

fn parse_nonnegative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite and nonnegative".into())
    }
}

/// Settings shared by every command that certifies.
#[derive(Debug, Clone, Args)]
pub struct CertArgs {
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0, value_parser = parse_sigma)]
    pub sigma: f64,
    /// Total failure probability of the confidence bounds.
    #[arg(long, default_value_t = 0.001, value_parser = parse_alpha)]
    pub alpha: f64,
    /// Expectation mode: multinomial (argmax counts) or softmax (score sums).
    #[arg(long, default_value_t = ExpectationMode::Multinomial)]
    pub mode: ExpectationMode,
    /// Comma-separated mechanisms [default: all valid for the mode].
    #[arg(long, value_delimiter = ',')]
    pub mechanisms: Option<Vec<MechanismId>>,
}

impl CertArgs {
    pub fn noise(&self) -> Result<NoiseConfig> {
        NoiseConfig::new(self.sigma)
    }

    /// Mechanism set; an invalid combination of flags is a usage error.
    pub fn ensemble(&self) -> Result<EnsembleConfig> {
        match &self.mechanisms {
            Some(ids) => EnsembleConfig::new(self.mode, ids.iter().copied()).map_err(|e| Error::Usage(e.to_string())),
            None => Ok(EnsembleConfig::all(self.mode)),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for output files.
    #[arg(short, long, default_value = "out")]
    pub output: PathBuf,
    /// Also write vector images.
    #[arg(long)]
    pub render: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub cert: CertArgs,
    /// Lower bound on the top class expectation, used as given.
    #[arg(long, value_parser = parse_unit, requires = "e1", conflicts_with_all = ["counts", "means"])]
    pub e0: Option<f64>,
    /// Upper bound on the runner-up expectation, used as given.
    #[arg(long, value_parser = parse_unit, requires = "e0")]
    pub e1: Option<f64>,
    /// Comma-separated argmax counts; bounds are computed at level alpha.
    #[arg(long, value_delimiter = ',', conflicts_with = "means")]
    pub counts: Option<Vec<u64>>,
    /// Comma-separated mean softmax scores over n draws.
    #[arg(long, value_delimiter = ',')]
    pub means: Option<Vec<f64>>,
    /// Number of noisy draws behind --means.
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub cert: CertArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub cert: CertArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Evidence file (counts or softmax sums).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Radius above which a sample counts as meaningfully certified.
    #[arg(long, default_value_t = 0.05, value_parser = parse_nonnegative)]
    pub threshold: f64,
    /// Mechanism the ensemble is compared against.
    #[arg(long, default_value_t = MechanismId::Cohen)]
    pub baseline: MechanismId,
    /// Radii at which certified accuracy is tabulated.
    #[arg(long, default_value_t = 101)]
    pub curve_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Expectation mode of the generated evidence.
    #[arg(long, default_value_t = ExpectationMode::Multinomial)]
    pub mode: ExpectationMode,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Number of samples to generate.
    #[arg(long, default_value_t = 200)]
    pub samples: u64,
    /// Number of classes.
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Symmetric Dirichlet concentration of each sample's class distribution.
    #[arg(long, default_value_t = 0.1, value_parser = parse_sigma)]
    pub concentration: f64,
    /// Noisy draws per sample.
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    /// Per-sample results file written by `dataset`.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05, value_parser = parse_nonnegative)]
    pub threshold: f64,
    #[arg(long, default_value_t = MechanismId::Cohen)]
    pub baseline: MechanismId,
    #[arg(long, default_value_t = 101)]
    pub curve_points: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Certify one sample and print the outcome as a single line.
    Certify(CertifyArgs),
    /// Evaluate mechanisms over the simplex projection.
    Sweep(SweepArgs),
    /// Certify every sample of an evidence file and summarise.
    Dataset(DatasetArgs),
    /// Generate a synthetic evidence file.
    Simulate(SimulateArgs),
    /// Recompute summaries from a per-sample results file.
    Analyze(AnalyzeArgs),
}

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(name = "smoothcert", version, about = "Certified radii for randomized smoothing")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

/// Parse arguments (including the program name).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

/// Parse and run, printing diagnostics; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    match run(&config, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Execute a parsed command. Single-line results go to `out`.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let opt = OptimizerSettings::default();
    match &config.command {
        Command::Certify(a) => certify_command(a, &opt, out),
        Command::Sweep(a) => sweep_command(a, &opt, out),
        Command::Dataset(a) => dataset_command(a, &opt, out),
        Command::Simulate(a) => simulate_command(a, out),
        Command::Analyze(a) => analyze_command(a, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn certify_command(a: &CertifyArgs, opt: &OptimizerSettings, out: &mut dyn Write) -> Result<()> {
    let cfg = a.cert.ensemble()?;
    let noise = a.cert.noise()?;
    let mode = a.cert.mode;
    let bounds = match (&a.e0, &a.e1, &a.counts, &a.means) {
        (Some(e0), Some(e1), _, _) => ExpectationBounds::analytic(*e0, *e1, mode)?,
        (_, _, Some(counts), _) => {
            if mode != ExpectationMode::Multinomial {
                return Err(Error::Usage("--counts needs --mode multinomial".into()));
            }
            Evidence::Counts(RawCounts::new(counts.clone())?).bound(a.cert.alpha)?
        }
        (_, _, _, Some(means)) => {
            if mode != ExpectationMode::Softmax {
                return Err(Error::Usage("--means needs --mode softmax".into()));
            }
            Evidence::Softmax(SoftmaxSums::from_means(means, a.n)?).bound(a.cert.alpha)?
        }
        _ => return Err(Error::Usage("give --e0 and --e1, --counts, or --means".into())),
    };
    let outcome = certify_ensemble(&bounds, &noise, &cfg, opt)?;
    let mut line = format!(
        "class={} mode={} sigma={} e0={} e1={}",
        outcome.predicted_class(),
        mode,
        noise.sigma(),
        fmt_radius(bounds.e0()),
        fmt_radius(bounds.e1())
    );
    for id in outcome.enabled() {
        line.push_str(&format!(" {id}={}", fmt_radius(outcome.radius(id))));
    }
    line.push_str(&format!(
        " ensemble={} winner={}",
        fmt_radius(outcome.radius_ensemble()),
        outcome.winner().map(|w| w.to_string()).unwrap_or_else(|| "none".into())
    ));
    writeln!(out, "{line}").map_err(stdout_err)
}

fn sweep_command(a: &SweepArgs, opt: &OptimizerSettings, out: &mut dyn Write) -> Result<()> {
    if a.resolution < 2 {
        return Err(Error::Usage("--resolution must be at least 2".into()));
    }
    let cfg = a.cert.ensemble()?;
    let grid = sweep_simplex(&cfg, &a.cert.noise()?, a.resolution, opt)?;
    let regions = region_of_superiority(&grid);
    let mut dir = OutputDir::create(&a.out.output)?;
    for id in grid.mechanisms().collect::<Vec<_>>() {
        let layer = grid.layer(id)?;
        dir.write(&format!("radius_{id}.csv"), &files::lattice_csv(layer, |v| fmt_radius(*v)))?;
        if a.out.render {
            let title = format!("{id} radius, sigma = {}", grid.sigma());
            dir.write(&format!("radius_{id}.svg"), &svg::heatmap(&title, layer, &[]))?;
        }
    }
    dir.write("regions.csv", &files::regions_csv(&grid, &regions))?;
    dir.write("boundaries.csv", &files::boundaries_csv(&regions.boundaries))?;

    let ids: Vec<MechanismId> = grid.mechanisms().collect();
    if ids.contains(&MechanismId::ImprovedDp) && ids.len() > 1 {
        let others: Vec<MechanismId> = ids.iter().copied().filter(|&m| m != MechanismId::ImprovedDp).collect();
        let ratio = ratio_map(&grid, MechanismId::ImprovedDp, &others)?;
        dir.write("ratio_improved_dp.csv", &files::lattice_csv(&ratio, |v| fmt_radius(*v)))?;
        if a.out.render {
            dir.write(
                "ratio_improved_dp.svg",
                &svg::heatmap("improved_dp / best other", &ratio, &regions.boundaries),
            )?;
        }
    }
    if ids.contains(&MechanismId::Cohen) && ids.contains(&MechanismId::Li) {
        let diff = diff_map(&grid, MechanismId::Cohen, MechanismId::Li)?;
        dir.write("diff_cohen_li.csv", &files::lattice_csv(&diff, |v| fmt_radius(*v)))?;
        if a.out.render {
            dir.write("diff_cohen_li.svg", &svg::heatmap("cohen - li", &diff, &[]))?;
        }
    }
    if a.out.render {
        dir.write("regions.svg", &svg::region_map("largest certificate", &regions.labels, &[]))?;
    }
    writeln!(out, "wrote {} files to {}", dir.written().len(), a.out.output.display()).map_err(stdout_err)
}

fn curve_radii(records: &[SampleRecord], points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Usage("--curve-points must be at least 2".into()));
    }
    let r_max = records
        .iter()
        .filter_map(|r| r.outcome())
        .map(|o| o.radius_ensemble())
        .fold(0.0_f64, f64::max);
    Ok((0..points).map(|k| r_max * k as f64 / (points - 1) as f64).collect())
}

fn report(
    records: &[SampleRecord],
    threshold: f64,
    baseline: MechanismId,
    curve_points: usize,
    render: bool,
    dir: &mut OutputDir,
) -> Result<()> {
    let summary = summarize(records, threshold, baseline)?;
    dir.write("summary.csv", &files::summary_csv(&summary))?;

    let mut fields: Vec<RadiusField> = summary.mechanisms.iter().map(|m| m.field).collect();
    fields.push(RadiusField::Ensemble);
    if records.iter().all(|r| r.label().is_some()) {
        let radii = curve_radii(records, curve_points)?;
        let curves = fields
            .iter()
            .map(|&f| certified_accuracy_curve(records, &radii, f))
            .collect::<Result<Vec<_>>>()?;
        dir.write("curve.csv", &files::curve_csv(&fields, &curves))?;
        if render {
            dir.write("curve.svg", &svg::curves("certified accuracy", &fields, &curves))?;
        }
    } else {
        log::warn!("some samples are unlabelled; skipping certified-accuracy curves");
    }
    Ok(())
}

fn render_scatter(records: &[SampleRecord], dir: &mut OutputDir) -> Result<()> {
    let Some(first) = records.first().and_then(|r| r.bounds()) else {
        return Ok(());
    };
    let outcome = records[0].outcome().expect("certified record");
    let cfg = EnsembleConfig::new(first.mode(), outcome.enabled())?;
    let points: Vec<(f64, f64, Option<_>)> = records
        .iter()
        .filter_map(|r| Some((r.bounds()?.e0(), r.bounds()?.e1(), r.outcome()?.winner())))
        .collect();
    let grid = sweep_simplex(&cfg, &NoiseConfig::new(1.0)?, SCATTER_RESOLUTION, &OptimizerSettings::default())?;
    let regions = region_of_superiority(&grid);
    dir.write("scatter.svg", &svg::scatter("sample expectations", &points, &regions.boundaries))
}

/// Lattice resolution of the region borders drawn under sample scatters.
/// Regions do not depend on σ, so one sweep at σ = 1 serves every run.
const SCATTER_RESOLUTION: usize = 60;

fn dataset_command(a: &DatasetArgs, opt: &OptimizerSettings, out: &mut dyn Write) -> Result<()> {
    let cfg = a.cert.ensemble()?;
    let noise = a.cert.noise()?;
    let records = files::ingest_counts(&a.input)?;
    if let Some(r) = records.first() {
        if r.evidence().mode() != cfg.mode() {
            return Err(Error::ModeMismatch {
                expected: cfg.mode(),
                found: r.evidence().mode(),
            });
        }
    }
    log::info!("certifying {} samples from {}", records.len(), a.input.display());
    let certified = certify_records(&records, a.cert.alpha, &noise, &cfg, opt)?;
    let mut dir = OutputDir::create(&a.out.output)?;
    dir.write("samples.csv", &files::samples_csv(&certified)?)?;
    if certified.is_empty() {
        return writeln!(out, "no samples in {}", a.input.display()).map_err(stdout_err);
    }
    // Summaries use the radii exactly as written, so `analyze` on the
    // samples file reproduces them.
    let stored = files::ingest_samples(&a.out.output.join("samples.csv"))?;
    report(&stored, a.threshold, a.baseline, a.curve_points, a.out.render, &mut dir)?;
    if a.out.render {
        render_scatter(&stored, &mut dir)?;
    }
    writeln!(out, "certified {} samples; wrote {} files to {}", certified.len(), dir.written().len(), a.out.output.display())
        .map_err(stdout_err)
}

fn analyze_command(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let records = files::ingest_samples(&a.input)?;
    if records.is_empty() {
        return writeln!(out, "no samples in {}", a.input.display()).map_err(stdout_err);
    }
    let mut dir = OutputDir::create(&a.out.output)?;
    report(&records, a.threshold, a.baseline, a.curve_points, a.out.render, &mut dir)?;
    if a.out.render {
        render_scatter(&records, &mut dir)?;
    }
    writeln!(out, "analyzed {} samples; wrote {} files to {}", records.len(), dir.written().len(), a.out.output.display())
        .map_err(stdout_err)
}

fn simulate_command(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let population = DirichletPopulation::new(a.classes, a.concentration)?;
    let run = SimulationRun::new(a.seed, a.n, 1, 1.0, 0.5)?;
    let records = (0..a.samples)
        .into_par_iter()
        .map(|i| {
            let sample = population.sample(a.seed, i)?;
            let stream = run.for_stream(i);
            let evidence = match a.mode {
                ExpectationMode::Multinomial => Evidence::Counts(count_draws(&sample.classifier, &[], &stream)?),
                ExpectationMode::Softmax => Evidence::Softmax(softmax_draws(&sample.classifier, &[], &stream)?),
            };
            SampleRecord::new(format!("s{i:06}"), Some(sample.label), evidence)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dir = OutputDir::create(&a.out.output)?;
    let name = match a.mode {
        ExpectationMode::Multinomial => "counts.csv",
        ExpectationMode::Softmax => "softmax.csv",
    };
    dir.write(name, &files::evidence_csv(&records)?)?;
    writeln!(out, "wrote {} samples to {}", records.len(), Path::new(&a.out.output).join(name).display())
        .map_err(stdout_err)
}
