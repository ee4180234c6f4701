//! SVG figure emission: plan overlays (map, expanded nodes, trajectory)
//! and graph projections (vertices plus edge curves).

use std::fmt::Write;

use primgraph::graph::PrimitiveGraph;
use primgraph::planner::{OccupancyGrid, PlanResult};
use primgraph::systems::sample_trajectory;
use primgraph::Trajectory;

struct Frame {
    min_x: f64,
    min_y: f64,
    scale: f64,
    height_px: f64,
}

impl Frame {
    fn new(min_x: f64, max_x: f64, min_y: f64, max_y: f64, width_px: f64) -> Self {
        let span_x = (max_x - min_x).max(1e-9);
        let span_y = (max_y - min_y).max(1e-9);
        let scale = width_px / span_x;
        Self { min_x, min_y, scale, height_px: span_y * scale }
    }

    // SVG y grows downward; world y grows upward.
    fn x(&self, wx: f64) -> f64 {
        (wx - self.min_x) * self.scale
    }

    fn y(&self, wy: f64) -> f64 {
        self.height_px - (wy - self.min_y) * self.scale
    }
}

fn trajectory_path(t: &Trajectory, frame: &Frame, class: &str, out: &mut String) {
    let resolution = (t.cost / 64.0).max(1e-6);
    let samples = sample_trajectory(t, resolution);
    let mut d = String::new();
    for (i, s) in samples.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{:.2} {:.2} ", frame.x(s.get(0)), frame.y(s.get(1)));
    }
    let _ = writeln!(out, r#"<path class="{class}" fill="none" d="{}"/>"#, d.trim_end());
}

/// Plan overlay: occupied cells, expanded-node markers, the stitched
/// trajectory, start/goal dots. One `path.trajectory` per stitched hop and
/// one `circle.expanded` per recorded expansion.
pub fn render_plan(grid: &OccupancyGrid, result: &PlanResult) -> String {
    let world_w = grid.width as f64 * grid.resolution;
    let world_h = grid.height as f64 * grid.resolution;
    let frame = Frame::new(
        grid.origin[0],
        grid.origin[0] + world_w,
        grid.origin[1],
        grid.origin[1] + world_h,
        900.0,
    );
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 900 {:.2}">"#,
        frame.height_px
    );
    let _ = writeln!(
        out,
        "<style>.occupied{{fill:#333}}.expanded{{fill:#bbb}}.trajectory{{stroke:#d62728;stroke-width:2}}.endpoint{{fill:#2ca02c}}</style>"
    );
    let cell = grid.resolution * frame.scale;
    for iy in 0..grid.height {
        for ix in 0..grid.width {
            if grid.cell_occupied(ix as i64, iy as i64) {
                let wx = grid.origin[0] + ix as f64 * grid.resolution;
                let wy = grid.origin[1] + (iy + 1) as f64 * grid.resolution;
                let _ = writeln!(
                    out,
                    r#"<rect class="occupied" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                    frame.x(wx),
                    frame.y(wy),
                    cell,
                    cell
                );
            }
        }
    }
    for s in &result.expanded_states {
        let _ = writeln!(
            out,
            r#"<circle class="expanded" cx="{:.2}" cy="{:.2}" r="2"/>"#,
            frame.x(s.get(0)),
            frame.y(s.get(1))
        );
    }
    for t in &result.stitched {
        trajectory_path(t, &frame, "trajectory", &mut out);
    }
    for s in [result.node_sequence.first(), result.node_sequence.last()].into_iter().flatten() {
        let _ = writeln!(
            out,
            r#"<circle class="endpoint" cx="{:.2}" cy="{:.2}" r="5"/>"#,
            frame.x(s.get(0)),
            frame.y(s.get(1))
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Graph projection onto the workspace: exactly one `circle.vertex` per
/// vertex and one `path.edge` per stored edge; optional translated vertex
/// copies as `circle.tile` markers.
pub fn render_graph(graph: &PrimitiveGraph, show_tiles: bool) -> String {
    let extent: f64 = graph.tiling.tile_extent.iter().cloned().fold(1.0, f64::max);
    let reach = extent * (graph.tiling.neighbor_radius as f64 + 1.2);
    let frame = Frame::new(-reach + extent / 2.0, reach + extent / 2.0, -reach + extent / 2.0, reach + extent / 2.0, 900.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 900 {:.2}">"#,
        frame.height_px
    );
    let _ = writeln!(
        out,
        "<style>.vertex{{fill:#2ca02c}}.tile{{fill:#1f77b4}}.edge{{stroke:#bbb;stroke-width:1}}</style>"
    );
    for e in &graph.edges {
        trajectory_path(&e.trajectory, &frame, "edge", &mut out);
    }
    if show_tiles {
        for offset in graph.tiling.offsets() {
            if offset.iter().all(|&o| o == 0) {
                continue;
            }
            let translation = graph.tiling.translation(&offset);
            for v in &graph.vertices {
                let t = v.translated(&graph.tiling.spatial_dims, &translation);
                let _ = writeln!(
                    out,
                    r#"<circle class="tile" cx="{:.2}" cy="{:.2}" r="3"/>"#,
                    frame.x(t.get(0)),
                    frame.y(t.get(1))
                );
            }
        }
    }
    for v in &graph.vertices {
        let _ = writeln!(
            out,
            r#"<circle class="vertex" cx="{:.2}" cy="{:.2}" r="4"/>"#,
            frame.x(v.get(0)),
            frame.y(v.get(1))
        );
    }
    out.push_str("</svg>\n");
    out
}
