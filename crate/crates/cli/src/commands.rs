//! Subcommand implementations. Each returns the process exit code.

use std::path::PathBuf;
use std::time::Instant;

use primgraph::baseline::UniformInputSpec;
use primgraph::bench::{
    aggregate, completeness_trial, run_sweep, write_aggregate_csv, write_records_csv, MapSpec,
    MapStyle, SweepTemplate, TrialConfig,
};
use primgraph::dispersion::{min_dispersion_vertices, DispersionError};
use primgraph::graph::{build_edges, PrimitiveGraph};
use primgraph::planner::{plan, OccupancyGrid, PlanError, PlanQuery, PlanStatus, TiledGraphSpace};
use primgraph::sampling::generate_dense;
use primgraph::{State, SystemKind};

use crate::config::Config;
use crate::svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_PATH: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub struct GenerateArgs {
    pub config: Config,
    pub out: PathBuf,
    pub quiet: bool,
}

/// Offline pipeline: dense sampling, vertex selection, edge construction,
/// file emission. Prints a one-line run summary.
pub fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<i32> {
    let started = Instant::now();
    let config = &args.config;
    let system = config.system_kind();
    let box_ = config.state_box();
    let tiling = config.tiling_spec();
    let dense = generate_dense(&box_, config.dense_count(), config.sequence_kind())
        .map_err(|e| anyhow::anyhow!("sampling: {e}"))?;
    let run = match min_dispersion_vertices(
        config.dispersion.target,
        &dense,
        &system,
        &tiling,
        config.dispersion.vertex_cap,
    ) {
        Ok(run) => run,
        Err(DispersionError::CapReached { cap, dispersion, target, run }) => {
            eprintln!(
                "warning: vertex cap {cap} reached at dispersion {dispersion:.6} (target {target}); building the partial graph"
            );
            *run
        }
        Err(e) => return Err(anyhow::anyhow!("dispersion: {e}")),
    };
    let graph = build_edges(&run, &system).map_err(|e| anyhow::anyhow!("edges: {e}"))?;
    graph.save(&args.out).map_err(|e| anyhow::anyhow!("save {}: {e}", args.out.display()))?;
    if !args.quiet {
        println!(
            "generated {}: |V|={} |E|={} d={:.6} mean_out_degree={:.2} seed={} elapsed={:.2}s",
            args.out.display(),
            graph.vertices.len(),
            graph.edges.len(),
            graph.dispersion,
            graph.mean_out_degree(),
            config.sampling.seed,
            started.elapsed().as_secs_f64(),
        );
    }
    Ok(EXIT_OK)
}

pub struct PlanArgs {
    pub graph: PathBuf,
    pub map: Option<PathBuf>,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub config: Config,
    pub json_out: Option<PathBuf>,
    pub svg_out: Option<PathBuf>,
}

fn state_from_coords(coords: &[f64], system: &SystemKind) -> anyhow::Result<State> {
    if coords.len() != system.state_dim() {
        anyhow::bail!(
            "state needs {} comma-separated coordinates for this system, got {}",
            system.state_dim(),
            coords.len()
        );
    }
    Ok(State::new(coords))
}

pub fn cmd_plan(args: &PlanArgs) -> anyhow::Result<i32> {
    let graph = match PrimitiveGraph::load(&args.graph) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: cannot load graph {}: {e}", args.graph.display());
            return Ok(EXIT_IO);
        }
    };
    let grid = match &args.map {
        Some(path) => match OccupancyGrid::load_pgm(path) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: cannot load map {}: {e}", path.display());
                return Ok(EXIT_IO);
            }
        },
        None => OccupancyGrid::all_free(1, 1, 1.0, [0.0, 0.0]),
    };
    let system = graph.system;
    let start = state_from_coords(&args.start, &system)?;
    let goal = state_from_coords(&args.goal, &system)?;
    let planner_cfg = &args.config.planner;
    let query = PlanQuery {
        start,
        goal,
        goal_cost_tolerance: if planner_cfg.goal_cost_tolerance > 0.0 {
            planner_cfg.goal_cost_tolerance
        } else {
            graph.dispersion
        },
        collision_resolution: if planner_cfg.collision_resolution > 0.0 {
            planner_cfg.collision_resolution
        } else {
            graph.dispersion / 10.0
        },
        max_collision_checks: planner_cfg.max_collision_checks,
        heuristic: args.config.heuristic(),
        departability: args.config.departability(),
        record_expansions: args.svg_out.is_some(),
    };
    let space = TiledGraphSpace::new(&graph);
    let result = match plan(&space, &grid, &query) {
        Ok(r) => r,
        Err(e @ (PlanError::StartInCollision | PlanError::GoalInCollision)) => {
            eprintln!("error: {e}");
            return Ok(EXIT_USAGE);
        }
        Err(e) => return Err(e.into()),
    };
    println!(
        "status={:?} cost={} collision_checks={} expansions={} open_peak={}",
        result.status,
        result.total_cost.map_or("-".into(), |c| format!("{c:.6}")),
        result.collision_checks,
        result.expansions,
        result.open_list_peak,
    );
    if let Some(path) = &args.json_out {
        std::fs::write(path, serde_json::to_string_pretty(&result)?)?;
    }
    if let Some(path) = &args.svg_out {
        std::fs::write(path, svg::render_plan(&grid, &result))?;
    }
    Ok(match result.status {
        PlanStatus::Success => EXIT_OK,
        PlanStatus::NoPath => EXIT_NO_PATH,
        PlanStatus::BudgetExhausted => EXIT_BUDGET,
    })
}

pub struct BenchArgs {
    pub config: Config,
    pub out_dir: PathBuf,
}

/// Graph-vs-baseline sweep over seeded corridor maps plus the completeness
/// trial; writes records.csv and aggregate.csv and prints the summary table.
pub fn cmd_bench(args: &BenchArgs) -> anyhow::Result<i32> {
    let config = &args.config;
    let system = config.system_kind();
    std::fs::create_dir_all(&args.out_dir)?;
    let bench = &config.bench;

    let mut graphs: Vec<(String, PrimitiveGraph)> = Vec::new();
    for &target in &bench.dispersion_targets {
        let mut cfg = config.clone();
        cfg.dispersion.target = target;
        let dense = generate_dense(&cfg.state_box(), cfg.dense_count(), cfg.sequence_kind())
            .map_err(|e| anyhow::anyhow!("sampling: {e}"))?;
        let run = match min_dispersion_vertices(
            target,
            &dense,
            &system,
            &cfg.tiling_spec(),
            cfg.dispersion.vertex_cap,
        ) {
            Ok(run) => run,
            Err(DispersionError::CapReached { run, .. }) => *run,
            Err(e) => return Err(anyhow::anyhow!("dispersion: {e}")),
        };
        let graph = build_edges(&run, &system)?;
        eprintln!(
            "graph d={:.4}: |V|={} |E|={} branching={:.1}",
            graph.dispersion,
            graph.vertices.len(),
            graph.edges.len(),
            graph.mean_out_degree()
        );
        graphs.push((format!("dispersion-{:.3}", graph.dispersion), graph));
    }

    let mut baselines: Vec<(String, UniformInputSpec)> = Vec::new();
    if matches!(system, SystemKind::DoubleIntegrator2D { .. }) {
        let u_max = match system {
            SystemKind::DoubleIntegrator2D { u_max, .. } => u_max,
            SystemKind::ReedsShepp { .. } => unreachable!(),
        };
        for &duration in &bench.baseline_durations {
            for &branching in &bench.baseline_branchings {
                baselines.push((
                    format!("uniform-t{duration}-b{branching}"),
                    UniformInputSpec::new(branching, duration, u_max, system),
                ));
            }
        }
    }

    let maps: Vec<MapSpec> = (0..bench.map_count)
        .map(|i| MapSpec {
            seed: bench.map_seed + i as u64,
            width: bench.map_width,
            height: bench.map_height,
            resolution: bench.map_resolution,
            style: MapStyle::RandomCorridors {
                corridor_width: bench.corridor_width,
                obstacle_density: bench.obstacle_density,
            },
        })
        .collect();

    let reference_dispersion =
        graphs.first().map(|(_, g)| g.dispersion).unwrap_or(config.dispersion.target);
    let template = SweepTemplate {
        goal_cost_tolerance: if config.planner.goal_cost_tolerance > 0.0 {
            config.planner.goal_cost_tolerance
        } else {
            reference_dispersion
        },
        collision_resolution: if config.planner.collision_resolution > 0.0 {
            config.planner.collision_resolution
        } else {
            reference_dispersion / 10.0
        },
        max_collision_checks: config.planner.max_collision_checks,
        corner_margin_frac: bench.corner_margin_frac,
        heuristic: config.heuristic(),
    };

    let graph_refs: Vec<(String, &PrimitiveGraph)> =
        graphs.iter().map(|(id, g)| (id.clone(), g)).collect();
    let records = run_sweep(&graph_refs, &baselines, &maps, &template)
        .map_err(|e| anyhow::anyhow!("sweep: {e}"))?;
    let notes = vec![
        format!("map_seed={} map_count={}", bench.map_seed, bench.map_count),
        format!(
            "corridor_width={} obstacle_density={} sampling_seed={}",
            bench.corridor_width, bench.obstacle_density, config.sampling.seed
        ),
        format!(
            "budget={} tolerance={} resolution={}",
            template.max_collision_checks, template.goal_cost_tolerance, template.collision_resolution
        ),
    ];
    let mut records_file = std::fs::File::create(args.out_dir.join("records.csv"))?;
    write_records_csv(&mut records_file, &records, &notes)?;
    let rows = aggregate(&records);
    let mut aggregate_file = std::fs::File::create(args.out_dir.join("aggregate.csv"))?;
    write_aggregate_csv(&mut aggregate_file, &rows, &notes)?;

    println!("method | solved | avg collision checks | avg cost");
    println!("-------|--------|----------------------|---------");
    for row in &rows {
        println!(
            "{} | {}/{} | {:.0} | {}",
            row.method_id,
            row.successes,
            row.runs,
            row.mean_collision_checks,
            row.mean_cost.map_or("N/A".to_string(), |c| format!("{c:.1}")),
        );
    }

    if bench.completeness_trials > 0 {
        if let Some((_, graph)) = graphs.first() {
            let delta = bench.completeness_delta_factor * graph.dispersion
                + template.collision_resolution;
            let trial_config = TrialConfig::for_graph(graph, delta);
            let (fraction, _) = completeness_trial(
                graph,
                delta,
                bench.completeness_trials,
                bench.completeness_seed,
                &trial_config,
            )
            .map_err(|e| anyhow::anyhow!("completeness: {e}"))?;
            println!(
                "completeness: {}/{} certified-clearance maps solved (delta = {delta:.4})",
                (fraction * bench.completeness_trials as f64).round() as usize,
                bench.completeness_trials,
            );
        }
    }
    Ok(EXIT_OK)
}

pub struct InspectArgs {
    pub graph: PathBuf,
    pub svg_out: Option<PathBuf>,
    pub show_tiles: bool,
}

pub fn cmd_inspect(args: &InspectArgs) -> anyhow::Result<i32> {
    let graph = match PrimitiveGraph::load(&args.graph) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: cannot load graph {}: {e}", args.graph.display());
            return Ok(EXIT_IO);
        }
    };
    println!("graph {}", args.graph.display());
    println!("  system: {:?}", graph.system);
    println!("  format_version: {}", graph.format_version);
    println!("  vertices: {}", graph.vertices.len());
    println!("  edges: {} (mean out-degree {:.2})", graph.edges.len(), graph.mean_out_degree());
    println!("  dispersion: {:.6}", graph.dispersion);
    println!(
        "  tiling: dims {:?} extent {:?} neighbor_radius {}",
        graph.tiling.spatial_dims, graph.tiling.tile_extent, graph.tiling.neighbor_radius
    );
    let bins = 10usize;
    let top = 2.0 * graph.dispersion;
    let mut histogram = vec![0usize; bins];
    for e in &graph.edges {
        let b = ((e.cost / top) * bins as f64).floor() as usize;
        histogram[b.min(bins - 1)] += 1;
    }
    println!("  edge cost histogram (0 .. 2d):");
    for (i, count) in histogram.iter().enumerate() {
        println!("    [{:.3}, {:.3}): {count}", top * i as f64 / bins as f64, top * (i + 1) as f64 / bins as f64);
    }
    if let Some(path) = &args.svg_out {
        std::fs::write(path, svg::render_graph(&graph, args.show_tiles))?;
        println!("  wrote {}", path.display());
    }
    Ok(EXIT_OK)
}
