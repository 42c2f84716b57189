use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use manifold_boundary::hypothesis::DEFAULT_FLAG_LEVEL;
use manifold_boundary::ManifoldKind;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "boundary",
    version,
    about = "Test whether a sampled manifold has a boundary"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a seeded sample and write it as CSV, plus a JSON sidecar.
    Generate(GenerateArgs),
    /// Run the boundary test on a point CSV.
    Test(TestArgs),
    /// Score a grid of k values and report the chosen one.
    SelectK(SelectArgs),
    /// Monte Carlo level/power study.
    Experiment(ExperimentArgs),
    /// Per-point boundary flags plus a plot-data file.
    FlagBoundary(FlagArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    /// Intrinsic dimension for sphere kinds.
    #[arg(long)]
    pub dprime: Option<usize>,
    /// Torus major radius.
    #[arg(long = "R")]
    pub major: Option<f64>,
    /// Torus minor radius.
    #[arg(long = "r")]
    pub minor: Option<f64>,
    /// Moebius strip half-width.
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub p_low: Option<f64>,
    #[arg(long)]
    pub p_high: Option<f64>,
}

impl ShapeArgs {
    /// Accepts `sphere`, `half_sphere` (with `--dprime`), the named shapes,
    /// and the shorthands `S2`, `S1+`.
    pub fn kind(&self, name: &str) -> Result<ManifoldKind, CliError> {
        let key = name.trim().to_ascii_lowercase().replace('-', "_");
        let need_dprime = || {
            self.dprime
                .ok_or_else(|| CliError::input(format!("--kind {name} needs --dprime")))
        };
        let kind = match key.as_str() {
            "sphere" => ManifoldKind::Sphere {
                dprime: need_dprime()?,
            },
            "half_sphere" | "halfsphere" => ManifoldKind::HalfSphere {
                dprime: need_dprime()?,
            },
            "trefoil" => ManifoldKind::Trefoil,
            "torus" => {
                let (major, minor) = match ManifoldKind::DEFAULT_TORUS {
                    ManifoldKind::Torus { major, minor } => (major, minor),
                    _ => unreachable!(),
                };
                ManifoldKind::Torus {
                    major: self.major.unwrap_or(major),
                    minor: self.minor.unwrap_or(minor),
                }
            }
            "moebius" | "mobius" => {
                let width = match ManifoldKind::DEFAULT_MOEBIUS {
                    ManifoldKind::Moebius { width } => width,
                    _ => unreachable!(),
                };
                ManifoldKind::Moebius {
                    width: self.width.unwrap_or(width),
                }
            }
            "spiral" => {
                let (t0, t1) = match ManifoldKind::DEFAULT_SPIRAL {
                    ManifoldKind::Spiral { t0, t1 } => (t0, t1),
                    _ => unreachable!(),
                };
                ManifoldKind::Spiral {
                    t0: self.t0.unwrap_or(t0),
                    t1: self.t1.unwrap_or(t1),
                }
            }
            "square_perimeter" | "square" => ManifoldKind::SquarePerimeter,
            "circle_discontinuous" => {
                let (p_low, p_high) = match ManifoldKind::DEFAULT_CIRCLE_DISCONTINUOUS {
                    ManifoldKind::CircleDiscontinuous { p_low, p_high } => (p_low, p_high),
                    _ => unreachable!(),
                };
                ManifoldKind::CircleDiscontinuous {
                    p_low: self.p_low.unwrap_or(p_low),
                    p_high: self.p_high.unwrap_or(p_high),
                }
            }
            other => parse_sphere_label(other)
                .ok_or_else(|| CliError::input(format!("unknown manifold kind {name:?}")))?,
        };
        kind.validate()?;
        Ok(kind)
    }
}

fn parse_sphere_label(s: &str) -> Option<ManifoldKind> {
    let rest = s.strip_prefix('s')?;
    let (digits, half) = match rest.strip_suffix('+') {
        Some(d) => (d, true),
        None => (rest, false),
    };
    let dprime: usize = digits.parse().ok()?;
    Some(if half {
        ManifoldKind::HalfSphere { dprime }
    } else {
        ManifoldKind::Sphere { dprime }
    })
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub kind: String,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points CSV; the sidecar goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleName {
    Threshold,
    Consistent,
}

#[derive(Debug, Clone, Args)]
pub struct KArgs {
    #[arg(long, conflicts_with = "auto_k", required_unless_present = "auto_k")]
    pub k: Option<usize>,
    /// Pick k by the chi-square distance criterion.
    #[arg(long)]
    pub auto_k: bool,
    /// Comma-separated k grid for --auto-k.
    #[arg(long, value_delimiter = ',', requires = "auto_k")]
    pub grid: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Point CSV.
    pub input: PathBuf,
    #[arg(long)]
    pub dprime: usize,
    #[command(flatten)]
    pub k: KArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = RuleName::Threshold)]
    pub rule: RuleName,
    /// Consistent rule: lower window factor, must exceed 4.
    #[arg(long, default_value_t = 4.5)]
    pub lambda: f64,
    /// Consistent rule: upper window factor; defaults to its largest admissible value.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_FLAG_LEVEL)]
    pub flag_level: f64,
    /// JSON report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub dprime: usize,
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Comma-separated kinds, e.g. `S1,S1+,torus`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub kind: Vec<String>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// One k per sample size.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "auto_k",
        required_unless_present = "auto_k"
    )]
    pub k: Option<Vec<usize>>,
    #[arg(long)]
    pub auto_k: bool,
    /// Samples used to calibrate k under --auto-k.
    #[arg(long, default_value_t = 50)]
    pub calibration: usize,
    #[arg(long, default_value_t = 200)]
    pub replications: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = RuleName::Threshold)]
    pub rule: RuleName,
    #[arg(long, default_value_t = 4.5)]
    pub lambda: f64,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Base seed for every derived stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// JSON report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rejection-rate table CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlagArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub dprime: usize,
    #[command(flatten)]
    pub k: KArgs,
    #[arg(long, default_value_t = DEFAULT_FLAG_LEVEL)]
    pub flag_level: f64,
    /// Flagged indices CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot data: coordinates, delta, flagged.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}
