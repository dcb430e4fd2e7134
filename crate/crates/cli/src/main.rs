//! `csplace`: rate candidate charging-station locations on a warehouse
//! roadmap from recorded truck traces and select an optimal, spatially
//! separated subset.
//!
//! Exit codes: 0 success, 2 input error (unreadable or invalid files),
//! 3 configuration error (bad or missing parameters).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};

use csplace_core::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use csplace_core::trace::DistanceMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistanceModeArg {
    /// Straight-line truck-to-candidate distance
    Euclidean,
    /// Snap to the nearest candidate, then follow roadmap shortest paths
    ShortestPath,
}

impl From<DistanceModeArg> for DistanceMode {
    fn from(arg: DistanceModeArg) -> DistanceMode {
        match arg {
            DistanceModeArg::Euclidean => DistanceMode::Euclidean,
            DistanceModeArg::ShortestPath => DistanceMode::ShortestPath,
        }
    }
}

/// Rate candidate charging-station locations from truck traces and pick an
/// optimal separated subset.
#[derive(Debug, Parser)]
#[command(name = "csplace", version)]
struct Cli {
    /// Roadmap file with `V <id> <x> <y>` and `E <id1> <id2> <length>` records
    #[arg(long, value_name = "FILE")]
    roadmap: Option<PathBuf>,

    /// Trace CSV (`timestamp,truck_id,x,y`); repeat for multiple files
    #[arg(long = "trace", value_name = "FILE")]
    trace: Vec<PathBuf>,

    /// Link threshold t in meters: trucks farther than this from a
    /// candidate do not link to it
    #[arg(long = "threshold-t", value_name = "METERS")]
    threshold_t: Option<f64>,

    /// Minimum shortest-path separation R between selected stations, meters
    #[arg(long = "separation-R", value_name = "METERS")]
    separation_r: Option<f64>,

    /// Maximum number of stations to select
    #[arg(long = "max-k", value_name = "INT")]
    max_k: Option<usize>,

    /// How truck-to-candidate distances are measured
    #[arg(long = "distance-mode", value_enum)]
    distance_mode: Option<DistanceModeArg>,

    /// Snap radius for shortest-path mode; defaults to the link threshold
    #[arg(long = "snap-radius", value_name = "METERS")]
    snap_radius: Option<f64>,

    /// Heatmap cell size in meters
    #[arg(long = "heatmap-cell", value_name = "METERS")]
    heatmap_cell: Option<f64>,

    /// Also write distance_matrix.csv and conflict_matrix.csv
    #[arg(long = "dump-matrices")]
    dump_matrices: bool,

    /// Output directory for ratings.csv, solution.csv, heatmap.csv,
    /// heatmap.pgm and summary.txt
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Optional key=value config file; command-line flags override it
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

/// Values read from a `key=value` config file.
#[derive(Debug, Default)]
struct FileConfig {
    roadmap: Option<PathBuf>,
    trace: Vec<PathBuf>,
    threshold_t: Option<f64>,
    separation_r: Option<f64>,
    max_k: Option<usize>,
    distance_mode: Option<DistanceModeArg>,
    snap_radius: Option<f64>,
    heatmap_cell: Option<f64>,
    dump_matrices: Option<bool>,
    out: Option<PathBuf>,
}

fn parse_config_file(text: &str) -> Result<FileConfig, String> {
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| format!("line {}: invalid {what} value '{value}'", lineno + 1);
        match key {
            "roadmap" => cfg.roadmap = Some(PathBuf::from(value)),
            "trace" => cfg
                .trace
                .extend(value.split(',').map(str::trim).map(PathBuf::from)),
            "threshold_t" => cfg.threshold_t = Some(value.parse().map_err(|_| bad("threshold_t"))?),
            "separation_r" => {
                cfg.separation_r = Some(value.parse().map_err(|_| bad("separation_r"))?)
            }
            "max_k" => cfg.max_k = Some(value.parse().map_err(|_| bad("max_k"))?),
            "distance_mode" => {
                cfg.distance_mode = Some(match value {
                    "euclidean" => DistanceModeArg::Euclidean,
                    "shortest-path" => DistanceModeArg::ShortestPath,
                    _ => return Err(bad("distance_mode")),
                })
            }
            "snap_radius" => cfg.snap_radius = Some(value.parse().map_err(|_| bad("snap_radius"))?),
            "heatmap_cell" => {
                cfg.heatmap_cell = Some(value.parse().map_err(|_| bad("heatmap_cell"))?)
            }
            "dump_matrices" => {
                cfg.dump_matrices = Some(value.parse().map_err(|_| bad("dump_matrices"))?)
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            _ => return Err(format!("line {}: unknown key '{key}'", lineno + 1)),
        }
    }
    Ok(cfg)
}

fn merge(cli: Cli, file: FileConfig) -> Result<PipelineConfig, String> {
    let missing = |flag: &str| format!("missing required parameter --{flag}");
    let roadmap_path = cli
        .roadmap
        .or(file.roadmap)
        .ok_or_else(|| missing("roadmap"))?;
    let trace_paths = if cli.trace.is_empty() {
        file.trace
    } else {
        cli.trace
    };
    if trace_paths.is_empty() {
        return Err(missing("trace"));
    }
    Ok(PipelineConfig {
        roadmap_path,
        trace_paths,
        threshold_t: cli
            .threshold_t
            .or(file.threshold_t)
            .ok_or_else(|| missing("threshold-t"))?,
        distance_mode: cli
            .distance_mode
            .or(file.distance_mode)
            .unwrap_or(DistanceModeArg::Euclidean)
            .into(),
        snap_radius: cli.snap_radius.or(file.snap_radius),
        separation_r: cli
            .separation_r
            .or(file.separation_r)
            .ok_or_else(|| missing("separation-R"))?,
        max_stations: cli.max_k.or(file.max_k).ok_or_else(|| missing("max-k"))?,
        heatmap_cell: cli.heatmap_cell.or(file.heatmap_cell).unwrap_or(1.0),
        dump_matrices: cli.dump_matrices || file.dump_matrices.unwrap_or(false),
        output_dir: cli.out.or(file.out).ok_or_else(|| missing("out"))?,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print_stdout(&err.to_string());
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprint!("{err}");
            return ExitCode::from(3);
        }
    };

    let file_cfg = match &cli.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(text) => text,
                Err(err) => {
                    eprintln!("csplace: {}: {err}", path.display());
                    return ExitCode::from(3);
                }
            };
            match parse_config_file(&text) {
                Ok(cfg) => cfg,
                Err(err) => {
                    eprintln!("csplace: {}: {err}", path.display());
                    return ExitCode::from(3);
                }
            }
        }
        None => FileConfig::default(),
    };

    let config = match merge(cli, file_cfg) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("csplace: {err}");
            return ExitCode::from(3);
        }
    };

    match run_pipeline(&config) {
        Ok(output) => {
            let mut report = String::new();
            writeln!(
                report,
                "selected {} station(s), objective {}",
                output.solution.selected_count(),
                output.solution.objective
            )
            .unwrap();
            let ids = output
                .selected_ids
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(report, "stations: {ids}").unwrap();
            writeln!(report, "outputs written to {}", config.output_dir.display()).unwrap();
            print_stdout(&report);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("csplace: {err}");
            match err {
                PipelineError::Config(_) => ExitCode::from(3),
                _ => ExitCode::from(err.exit_code() as u8),
            }
        }
    }
}

/// Print to stdout without panicking when the reader hangs up (e.g. piping
/// `--help` into `head`).
fn print_stdout(text: &str) {
    use std::io::Write as _;
    let _ = std::io::stdout().write_all(text.as_bytes());
}
