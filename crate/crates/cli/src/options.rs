use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Reflection-loss tables, settling thicknesses, ray tracing and material identification.
///
/// Frequencies are in GHz, angles in degrees and thicknesses in millimetres.
/// Grids are written `start:stop:step` (inclusive) or as a single value.
#[derive(Debug, Parser)]
#[command(name = "matid", version)]
pub struct Cli {
    /// Plain-text material table (`name, a, b, c, d, roughness_m` per line). Defaults to wood, plaster and glass.
    #[arg(long = "materials", global = true)]
    pub material_file: Option<PathBuf>,

    /// Directory for CSV output when `--output` is not given. Without either, CSV goes to stdout.
    #[arg(long, global = true, env = "MATID_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// TE/TM slab coefficient magnitude versus thickness.
    Coeff(CoeffArgs),
    /// Reflection loss versus incident angle.
    Rl(RlArgs),
    /// Settling thickness per material and frequency.
    Settling(SettlingArgs),
    /// Build or query a reflection-loss database file.
    Rldb {
        #[command(subcommand)]
        command: RldbCommand,
    },
    /// List specular trajectories between transmitters and receivers.
    Trace(TraceArgs),
    /// Simulate measured total reflection loss for every traced trajectory.
    Simulate(SimulateArgs),
    /// Identify facet materials from measured total reflection loss.
    Identify(IdentifyArgs),
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Output CSV path.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoeffArgs {
    #[arg(long)]
    pub material: String,
    #[arg(long, default_value_t = 100.0)]
    pub freq: f64,
    /// Incident angle, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub angle: f64,
    /// Thickness grid, mm.
    #[arg(long, default_value = "0:50:0.1")]
    pub thickness: Grid,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct KappaArg {
    /// Roughness coefficient.
    #[arg(long, default_value_t = 0.0, conflicts_with = "fitted_kappa")]
    pub kappa: f64,
    /// Use the roughness coefficient fitted to the reference wood and plaster curves.
    #[arg(long)]
    pub fitted_kappa: bool,
}

impl KappaArg {
    pub fn value(&self) -> f64 {
        if self.fitted_kappa {
            matid::em::FITTED_KAPPA
        } else {
            self.kappa
        }
    }
}

#[derive(Debug, Args)]
pub struct RlArgs {
    /// Material name, repeatable. Defaults to every material in the table.
    #[arg(long = "material")]
    pub materials: Vec<String>,
    /// Frequency in GHz, repeatable.
    #[arg(long = "freq", default_value = "100")]
    pub freqs: Vec<f64>,
    /// Angle grid, degrees.
    #[arg(long, default_value = "0:80:10")]
    pub angles: Grid,
    #[command(flatten)]
    pub kappa: KappaArg,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct SettlingArgs {
    /// Material name, repeatable. Defaults to every material in the table.
    #[arg(long = "material")]
    pub materials: Vec<String>,
    /// Frequency in GHz, repeatable.
    #[arg(long = "freq", default_value = "100")]
    pub freqs: Vec<f64>,
    /// Tolerance band, dB.
    #[arg(long, default_value_t = matid::settling::DEFAULT_TOLERANCE_DB)]
    pub tol: f64,
    /// Incident angle, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub angle: f64,
    /// Thickness grid step, mm. Defaults to a thirtieth of the free-space wavelength.
    #[arg(long)]
    pub step: Option<f64>,
    /// Largest thickness searched, mm.
    #[arg(long)]
    pub max_thickness: Option<f64>,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Subcommand)]
pub enum RldbCommand {
    /// Compute a database over material, frequency and angle grids.
    Build {
        /// Material name, repeatable. Defaults to every material in the table.
        #[arg(long = "material")]
        materials: Vec<String>,
        /// Frequency in GHz, repeatable.
        #[arg(long = "freq", default_value = "100")]
        freqs: Vec<f64>,
        #[arg(long, default_value = "0:85:1")]
        angles: Grid,
        #[command(flatten)]
        kappa: KappaArg,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Summarize a database, or interpolate one value.
    Show {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, requires_all = ["freq", "angle"])]
        material: Option<String>,
        #[arg(long)]
        freq: Option<f64>,
        #[arg(long)]
        angle: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct PlacementArgs {
    /// Scene JSON file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Transmitter `x,y,z` in meters, repeatable. Defaults to the scene's placement.
    #[arg(long)]
    pub tx: Vec<Xyz>,
    /// Receiver `x,y,z` in meters, repeatable. Defaults to the scene's placement.
    #[arg(long)]
    pub rx: Vec<Xyz>,
    #[arg(long, default_value_t = 2)]
    pub max_bounces: usize,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub placement: PlacementArgs,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub placement: PlacementArgs,
    #[arg(long, default_value_t = 100.0)]
    pub freq: f64,
    /// Transmit power, dBm.
    #[arg(long, default_value_t = 0.0)]
    pub p_tx: f64,
    /// Standard deviation of the measurement noise, dB.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Uncertainty written to each record, dB.
    #[arg(long, default_value_t = 1.0)]
    pub u: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub kappa: KappaArg,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    #[command(flatten)]
    pub placement: PlacementArgs,
    /// Measurement CSV (`trajectory_id,measured_rl_db,u_db`).
    #[arg(long)]
    pub measurements: PathBuf,
    /// Override every record's uncertainty, dB.
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub freq: f64,
    /// Candidate material, repeatable. Defaults to every material in the table.
    #[arg(long = "palette")]
    pub palette: Vec<String>,
    /// Reflection-loss database. Built from the palette on a 1 degree grid when omitted.
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[command(flatten)]
    pub kappa: KappaArg,
    /// Distance within which hops on one facet share a reflection point, meters.
    #[arg(long, default_value_t = matid::identify::DEFAULT_RP_DELTA_M)]
    pub rp_tolerance: f64,
    /// Treat every hop on a facet as the same reflection point.
    #[arg(long, conflicts_with = "rp_tolerance")]
    pub per_facet: bool,
    /// Process every placement pair even after all points are resolved.
    #[arg(long)]
    pub no_early_stop: bool,
    /// Report CSV path.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

/// Inclusive `start:stop:step` grid, or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("not a number: {p:?}")))
            .collect::<Result<_, _>>()?;
        if parts.iter().any(|v| !v.is_finite()) {
            return Err("grid values must be finite".into());
        }
        match parts[..] {
            [v] => Ok(Grid(vec![v])),
            [start, stop, step] => {
                if !(step > 0.0) {
                    return Err(format!("step must be > 0, got {step}"));
                }
                if stop < start {
                    return Err(format!("stop {stop} is below start {start}"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if n > 10_000_000 {
                    return Err(format!("grid has {n} points"));
                }
                Ok(Grid((0..n).map(|i| start + i as f64 * step).collect()))
            }
            _ => Err(format!("expected start:stop:step or a single value, got {s:?}")),
        }
    }
}

/// A point written `x,y,z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xyz(pub [f64; 3]);

impl FromStr for Xyz {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("not a number: {p:?}")))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [x, y, z] => Ok(Xyz([x, y, z])),
            _ => Err(format!("expected x,y,z, got {s:?}")),
        }
    }
}
