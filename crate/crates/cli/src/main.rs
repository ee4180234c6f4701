//! Command-line entry point: offline graph generation, online planning,
//! benchmark sweeps and graph inspection.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 no path,
//! 3 collision-check budget exhausted, 4 I/O failure.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{BenchArgs, GenerateArgs, InspectArgs, PlanArgs, EXIT_IO, EXIT_USAGE};
use config::Config;

#[derive(Parser)]
#[command(name = "primgraph", version, about = "Minimum-dispersion motion primitive graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel sections (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML configuration document; flags override individual keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dispersion target override.
    #[arg(long)]
    target: Option<f64>,
    /// Dense sample count override.
    #[arg(long)]
    dense_count: Option<usize>,
    /// Sampling seed override (echoed in outputs).
    #[arg(long)]
    seed: Option<u64>,
    /// Tile side override.
    #[arg(long)]
    tile_side: Option<f64>,
    /// Neighbor radius override (0 disables tiling).
    #[arg(long)]
    neighbor_radius: Option<usize>,
    /// Collision-check budget override.
    #[arg(long)]
    budget: Option<usize>,
    /// Heuristic override: zero | free-space-steer.
    #[arg(long)]
    heuristic: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<Config> {
        let mut config = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(t) = self.target {
            config.dispersion.target = t;
        }
        if let Some(n) = self.dense_count {
            config.sampling.count = n;
        }
        if let Some(s) = self.seed {
            config.sampling.seed = s;
        }
        if let Some(side) = self.tile_side {
            config.tiling.tile_side = side;
        }
        if let Some(r) = self.neighbor_radius {
            config.tiling.neighbor_radius = r;
        }
        if let Some(b) = self.budget {
            config.planner.max_collision_checks = b;
        }
        if let Some(h) = &self.heuristic {
            config.planner.heuristic = h.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a minimum-dispersion primitive graph and write it to disk.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output graph path (.mpg; a .json sidecar is written next to it).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = false)]
        quiet: bool,
    },
    /// Plan between two states over an occupancy map.
    Plan {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        graph: PathBuf,
        /// PGM map (with .json sidecar); omitted means an empty workspace.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Start state, comma separated (car: x,y,theta; integrator: x,y,vx,vy).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Vec<f64>,
        /// Goal state, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        goal: Vec<f64>,
        /// Write the result record as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write a map + expansions + trajectory figure.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the sweep and completeness experiments from the config.
    Bench {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for records.csv and aggregate.csv.
        #[arg(long, default_value = "bench-out")]
        out_dir: PathBuf,
    },
    /// Print a report about a stored graph.
    Inspect {
        #[arg(long)]
        graph: PathBuf,
        /// Write the configuration-space projection figure.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Include translated vertex copies in the figure.
        #[arg(long, default_value_t = false)]
        tiles: bool,
    },
}

fn run() -> anyhow::Result<i32> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return Ok(code);
        }
    };
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().ok();
    }
    match cli.command {
        Command::Generate { config, out, quiet } => {
            let config = config.resolve()?;
            commands::cmd_generate(&GenerateArgs { config, out, quiet })
        }
        Command::Plan { config, graph, map, start, goal, json, svg } => {
            let config = config.resolve()?;
            commands::cmd_plan(&PlanArgs {
                graph,
                map,
                start,
                goal,
                config,
                json_out: json,
                svg_out: svg,
            })
        }
        Command::Bench { config, out_dir } => {
            let config = config.resolve()?;
            commands::cmd_bench(&BenchArgs { config, out_dir })
        }
        Command::Inspect { graph, svg, tiles } => {
            commands::cmd_inspect(&InspectArgs { graph, svg_out: svg, show_tiles: tiles })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let io_like = e.downcast_ref::<std::io::Error>().is_some();
            ExitCode::from(if io_like { EXIT_IO as u8 } else { EXIT_USAGE as u8 })
        }
    }
}
