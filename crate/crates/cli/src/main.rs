//! `menger`: curvature energies, curve construction and coverage reports.
//!
//! Exit codes: 0 on success (warnings included), 2 for input or usage
//! errors, 3 when the construction aborts on a structural check.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use menger_core::curvature::{beta, c2_k, check_cp, CpCheck, EnergyReport};
use menger_core::datasets::{
    gen_cantor4, gen_circle, gen_lipschitz_graph, gen_segment_with, gen_snowflake, Dataset, Weighting,
};
use menger_core::diagnostics::{coverage, mean_spacing, proposition_gate, CoverageReport, DistanceMode, PropositionGate};
use menger_core::io::{distances_csv, ledger_csv, parse_curve, read_dataset, write_csv, write_json};
use menger_core::nets::StopRecord;
use menger_core::pipeline::{build_curve, BuildOptions, BuildReport};
use menger_core::{Config, Error, PointId, Subset};

#[derive(Parser)]
#[command(name = "menger", version, about = "Menger curvature and near-straight curves through point sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature energies of a dataset (or a subset of it).
    Energy {
        input: PathBuf,
        /// Comparability constant; `inf` keeps every triple.
        #[arg(long)]
        k: Option<f64>,
        /// Comma-separated point ids; defaults to every point.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Builds the multiscale curve and reports on it.
    Build {
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Include the nets and curve of every scale in the report.
        #[arg(long)]
        dump_scales: bool,
        /// Write a plot of the points, curve and stop balls.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the step ledger as CSV.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Coverage distance; defaults to twice the mean spacing.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Vertex)]
        mode: Mode,
        /// Skip the hypothesis gate (its curvature term is cubic in the size).
        #[arg(long)]
        skip_gate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a synthetic dataset.
    Gen {
        #[arg(value_enum)]
        family: Family,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Generation of the Cantor construction.
        #[arg(long, short = 'g', default_value_t = 3)]
        generation: u32,
        #[arg(long, default_value_t = 1.0)]
        slope: f64,
        /// Snowflake exponent in (0, 1).
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = WeightArg::ArcLength)]
        weights: WeightArg,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mass of a dataset lying far from a given curve.
    Coverage {
        input: PathBuf,
        /// Curve JSON, or a build report containing one.
        curve: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Vertex)]
        mode: Mode,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write per-point distances as CSV.
        #[arg(long)]
        distances: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Vertex,
    Segment,
}

impl From<Mode> for DistanceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Vertex => DistanceMode::Vertex,
            Mode::Segment => DistanceMode::Segment,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Segment,
    Circle,
    Cantor4,
    LipschitzGraph,
    Snowflake,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    ArcLength,
    Uniform,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn load_data(path: &Path) -> Result<Dataset> {
    read_dataset(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(&text, out)
}

#[derive(Serialize)]
struct EnergyOutput {
    config: Config,
    points: usize,
    subset_size: usize,
    c2_k: EnergyReport,
    c2: EnergyReport,
    beta: EnergyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    cp: Option<CpCheck>,
}

#[derive(Serialize)]
struct BuildOutput<'a> {
    #[serde(flatten)]
    report: &'a BuildReport,
    coverage: CoverageReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    gate: Option<PropositionGate>,
}

#[derive(Serialize)]
struct CoverageOutput {
    config: Config,
    #[serde(flatten)]
    coverage: CoverageReport,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Energy { input, k, subset, config, out } => {
            let mut config = load_config(config.as_deref())?;
            if let Some(k) = k {
                config.k = k;
            }
            let data = load_data(&input)?;
            let n = data.space.len();
            let subset = match subset {
                Some(ids) => {
                    if let Some(&bad) = ids.iter().find(|&&i| i >= n) {
                        return Err(Error::OutOfRange { id: bad, size: n }.into());
                    }
                    Subset::new(ids.into_iter().map(PointId).collect())
                }
                None => Subset::full(n),
            };
            let (space, measure) = (&data.space, &data.measure);
            let report = EnergyOutput {
                points: n,
                subset_size: subset.len(),
                c2_k: c2_k(space, measure, &subset, config.k)?,
                c2: c2_k(space, measure, &subset, f64::INFINITY)?,
                beta: beta(space, measure, &subset)?,
                cp: if config.k.is_finite() {
                    Some(check_cp(space, measure, &subset, config.k)?)
                } else {
                    None
                },
                config,
            };
            emit_json(&report, out.as_deref())
        }
        Command::Build {
            input,
            config,
            dump_scales,
            svg: svg_path,
            ledger,
            epsilon,
            mode,
            skip_gate,
            out,
        } => {
            let config = load_config(config.as_deref())?;
            let data = load_data(&input)?;
            let (space, measure) = (&data.space, &data.measure);
            if svg_path.is_some() && !space.has_coordinates() {
                bail!("plotting requires coordinates; the input is a distance matrix");
            }
            if matches!(mode, Mode::Segment) && !space.has_coordinates() {
                bail!("segment distances require coordinates; the input is a distance matrix");
            }
            let outcome = build_curve(space, measure, &config, BuildOptions { keep_snapshots: dump_scales })?;
            let eps = epsilon.unwrap_or_else(|| 2.0 * mean_spacing(space));
            let cov = coverage(space, measure, &outcome.curve, eps, mode.into(), &outcome.report.stops, &config)?;
            let gate = if skip_gate {
                None
            } else {
                Some(proposition_gate(space, measure, &config)?)
            };
            if let Some(p) = &svg_path {
                let path = &outcome.report.curve.vertices;
                let text = svg::render(space, measure, path, &outcome.report.stops).map_err(anyhow::Error::msg)?;
                emit(&text, Some(p))?;
            }
            if let Some(p) = &ledger {
                emit(&ledger_csv(&outcome.report.ledger), Some(p))?;
            }
            let output = BuildOutput {
                report: &outcome.report,
                coverage: cov,
                gate,
            };
            emit_json(&output, out.as_deref())
        }
        Command::Gen {
            family,
            n,
            jitter,
            radius,
            generation,
            slope,
            s,
            seed,
            weights,
            format,
            out,
        } => {
            let weighting = match weights {
                WeightArg::ArcLength => Weighting::ArcLength,
                WeightArg::Uniform => Weighting::Uniform,
            };
            let data = match family {
                Family::Segment => gen_segment_with(n, jitter, seed, weighting)?,
                Family::Circle => gen_circle(n, radius)?,
                Family::Cantor4 => gen_cantor4(generation)?,
                Family::LipschitzGraph => gen_lipschitz_graph(n, slope, seed)?,
                Family::Snowflake => gen_snowflake(n, s)?,
            };
            let format = format.unwrap_or(if data.space.has_coordinates() { Format::Csv } else { Format::Json });
            let text = match format {
                Format::Csv => write_csv(&data)?,
                Format::Json => write_json(&data)? + "\n",
            };
            emit(&text, out.as_deref())
        }
        Command::Coverage {
            input,
            curve,
            epsilon,
            mode,
            config,
            distances,
            out,
        } => {
            let config = load_config(config.as_deref())?;
            let data = load_data(&input)?;
            let text = fs::read_to_string(&curve).with_context(|| format!("reading {}", curve.display()))?;
            let c = parse_curve(&text, data.space.len())?;
            let stops: Vec<StopRecord> = serde_json::from_str::<serde_json::Value>(&text)
                .ok()
                .and_then(|v| v.get("stops").cloned())
                .map(serde_json::from_value)
                .transpose()
                .context("reading stop balls")?
                .unwrap_or_default();
            let eps = epsilon.unwrap_or_else(|| 2.0 * mean_spacing(&data.space));
            let report = coverage(&data.space, &data.measure, &c, eps, mode.into(), &stops, &config)?;
            if let Some(p) = &distances {
                emit(&distances_csv(&report.per_point_distance), Some(p))?;
            }
            emit_json(&CoverageOutput { config, coverage: report }, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let structural = e
                .chain()
                .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_structural));
            ExitCode::from(if structural { 3 } else { 2 })
        }
    }
}
