//! The single human-editable configuration document. Every field has a
//! default; unknown keys are rejected so typos fail loudly.

use serde::{Deserialize, Serialize};

use primgraph::dispersion::TilingSpec;
use primgraph::sampling::SequenceKind;
use primgraph::state::StateBox;
use primgraph::planner::{Departability, Heuristic};
use primgraph::SystemKind;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub system: SystemConfig,
    pub sampling: SamplingConfig,
    pub tiling: TilingConfig,
    pub dispersion: DispersionConfig,
    pub planner: PlannerConfig,
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// "reeds-shepp" or "double-integrator".
    pub kind: String,
    pub turning_radius: f64,
    pub rho: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { kind: "reeds-shepp".into(), turning_radius: 1.0, rho: 1.0, u_max: 4.0, v_max: 2.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Dense sample count; 0 picks the per-system default (10k for the
    /// car, 20k for the double integrator).
    pub count: usize,
    /// "sobol", "halton" or "uniform-random".
    pub kind: String,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { count: 0, kind: "sobol".into(), seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TilingConfig {
    /// Side of the square spatial tile; also the dense box spatial extent.
    pub tile_side: f64,
    pub neighbor_radius: usize,
}

impl Default for TilingConfig {
    fn default() -> Self {
        Self { tile_side: 3.0, neighbor_radius: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub target: f64,
    pub vertex_cap: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self { target: 1.05, vertex_cap: 512 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// 0 defaults to the graph dispersion.
    pub goal_cost_tolerance: f64,
    /// 0 defaults to dispersion / 10.
    pub collision_resolution: f64,
    pub max_collision_checks: usize,
    /// "zero" or "free-space-steer".
    pub heuristic: String,
    /// "steer-check" or "reachable-set-bound".
    pub departability: String,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            goal_cost_tolerance: 0.0,
            collision_resolution: 0.0,
            max_collision_checks: 100_000,
            heuristic: "zero".into(),
            departability: "steer-check".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub map_count: usize,
    pub map_seed: u64,
    pub map_width: usize,
    pub map_height: usize,
    pub map_resolution: f64,
    pub corridor_width: f64,
    pub obstacle_density: f64,
    pub corner_margin_frac: f64,
    /// Graphs built for the sweep, one per dispersion target.
    pub dispersion_targets: Vec<f64>,
    pub baseline_durations: Vec<f64>,
    pub baseline_branchings: Vec<usize>,
    pub completeness_trials: usize,
    pub completeness_seed: u64,
    /// Certified clearance as a multiple of the graph dispersion; one
    /// collision-resolution step is added on top.
    pub completeness_delta_factor: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            map_count: 20,
            map_seed: 1,
            map_width: 120,
            map_height: 120,
            map_resolution: 0.25,
            corridor_width: 2.5,
            obstacle_density: 0.35,
            corner_margin_frac: 0.12,
            dispersion_targets: vec![],
            baseline_durations: vec![0.1, 0.3, 0.5],
            baseline_branchings: vec![3, 4, 5],
            completeness_trials: 50,
            completeness_seed: 7,
            completeness_delta_factor: 2.0,
        }
    }
}

impl Config {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let config: Config = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        match self.system.kind.as_str() {
            "reeds-shepp" | "double-integrator" => {}
            other => anyhow::bail!("unknown system kind {other:?}"),
        }
        match self.sampling.kind.as_str() {
            "sobol" | "halton" | "uniform-random" => {}
            other => anyhow::bail!("unknown sampling kind {other:?}"),
        }
        match self.planner.heuristic.as_str() {
            "zero" | "free-space-steer" => {}
            other => anyhow::bail!("unknown heuristic {other:?}"),
        }
        match self.planner.departability.as_str() {
            "steer-check" | "reachable-set-bound" => {}
            other => anyhow::bail!("unknown departability {other:?}"),
        }
        if self.system.turning_radius <= 0.0
            || self.system.rho <= 0.0
            || self.system.u_max <= 0.0
            || self.system.v_max <= 0.0
        {
            anyhow::bail!("system parameters must be positive");
        }
        if self.tiling.tile_side <= 0.0 {
            anyhow::bail!("tile side must be positive");
        }
        if self.dispersion.target <= 0.0 && self.dispersion.target.is_finite() {
            anyhow::bail!("dispersion target must be positive");
        }
        Ok(())
    }

    pub fn system_kind(&self) -> SystemKind {
        match self.system.kind.as_str() {
            "reeds-shepp" => SystemKind::reeds_shepp(self.system.turning_radius),
            "double-integrator" => {
                SystemKind::double_integrator(self.system.rho, self.system.u_max, self.system.v_max)
            }
            other => unreachable!("validated kind {other}"),
        }
    }

    pub fn sequence_kind(&self) -> SequenceKind {
        match self.sampling.kind.as_str() {
            "sobol" => SequenceKind::Sobol,
            "halton" => SequenceKind::Halton,
            "uniform-random" => SequenceKind::UniformRandom { seed: self.sampling.seed },
            other => unreachable!("validated kind {other}"),
        }
    }

    pub fn dense_count(&self) -> usize {
        if self.sampling.count > 0 {
            self.sampling.count
        } else {
            match self.system_kind() {
                SystemKind::ReedsShepp { .. } => 10_000,
                SystemKind::DoubleIntegrator2D { .. } => 20_000,
            }
        }
    }

    /// Dense box: one spatial tile centered on the origin, full heading
    /// circle for the car, the velocity box for the double integrator.
    pub fn state_box(&self) -> StateBox {
        let half = self.tiling.tile_side / 2.0;
        match self.system_kind() {
            SystemKind::ReedsShepp { .. } => StateBox::new(
                vec![-half, -half, -std::f64::consts::PI],
                vec![half, half, std::f64::consts::PI],
                vec![0, 1],
            )
            .expect("valid box"),
            SystemKind::DoubleIntegrator2D { v_max, .. } => StateBox::new(
                vec![-half, -half, -v_max, -v_max],
                vec![half, half, v_max, v_max],
                vec![0, 1],
            )
            .expect("valid box"),
        }
    }

    pub fn tiling_spec(&self) -> TilingSpec {
        TilingSpec::new(
            vec![0, 1],
            vec![self.tiling.tile_side, self.tiling.tile_side],
            self.tiling.neighbor_radius,
        )
    }

    pub fn heuristic(&self) -> Heuristic {
        match self.planner.heuristic.as_str() {
            "zero" => Heuristic::Zero,
            "free-space-steer" => Heuristic::FreeSpaceSteer,
            other => unreachable!("validated heuristic {other}"),
        }
    }

    pub fn departability(&self) -> Departability {
        match self.planner.departability.as_str() {
            "steer-check" => Departability::SteerCheck,
            "reachable-set-bound" => Departability::ReachableSetBound,
            other => unreachable!("validated departability {other}"),
        }
    }
}
