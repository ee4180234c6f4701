//! The motion primitive graph: directed edges for every tiled vertex pair
//! cheaper than twice the dispersion, an implicit tiled-expansion view, and
//! a bit-exact on-disk format.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dispersion::{DispersionRun, TilingSpec};
use crate::state::State;
use crate::systems::{Segment, SegmentKind, SteerError, SystemKind, Trajectory, TrajectoryRepr};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"MPGRAPH\0";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed graph file: {0}")]
    Malformed(String),
    #[error("graph file format version {found}, this build reads {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("graph file checksum mismatch")]
    ChecksumMismatch,
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(u32),
    #[error(transparent)]
    Steer(#[from] SteerError),
}

/// Directed primitive edge in the tile frame: from vertex `from` to vertex
/// `to` translated by `offset` tiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphEdge {
    pub from: u32,
    pub to: u32,
    pub offset: Vec<i64>,
    pub cost: f64,
    pub trajectory: Trajectory,
}

/// Dispersion-annotated primitive graph. Vertex positions are normalized so
/// the tile's reference corner sits at the origin; tile `c` then covers
/// `[c*L, (c+1)*L)` per spatial axis.
#[derive(Debug, Clone, Serialize)]
pub struct PrimitiveGraph {
    pub system: SystemKind,
    pub vertices: Vec<State>,
    pub edges: Vec<GraphEdge>,
    pub dispersion: f64,
    pub tiling: TilingSpec,
    pub format_version: u32,
}

impl PartialEq for PrimitiveGraph {
    fn eq(&self, other: &Self) -> bool {
        self.system == other.system
            && self.vertices == other.vertices
            && self.edges == other.edges
            && self.dispersion == other.dispersion
            && self.tiling == other.tiling
            && self.format_version == other.format_version
    }
}

/// A successor produced by expanding a node of the implicit tiled graph.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub vertex: u32,
    pub tile: Vec<i64>,
    pub cost: f64,
    /// Edge trajectory translated into the world frame of the node's tile.
    pub trajectory: Trajectory,
}

/// Materialize edges from a vertex-selection run: every ordered vertex pair
/// under every neighbor-lattice offset with `0 < J < 2d`, directed, the
/// identity pair at zero offset excluded.
pub fn build_edges(run: &DispersionRun, system: &SystemKind) -> Result<PrimitiveGraph, GraphError> {
    let tiling = run.tiling.clone();
    let spatial = tiling.spatial_dims.clone();
    // Shift vertices so the tile's reference corner (the dense box lower
    // corner on the spatial dims) becomes the origin.
    let shift: Vec<f64> = spatial.iter().map(|&d| -run.dense.box_.lower[d]).collect();
    let vertices: Vec<State> = run.vertices.iter().map(|v| v.translated(&spatial, &shift)).collect();
    let threshold = 2.0 * run.final_dispersion;
    let offsets = tiling.offsets();
    let edges: Result<Vec<Vec<GraphEdge>>, SteerError> = (0..vertices.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in 0..vertices.len() {
                for offset in &offsets {
                    if i == j && offset.iter().all(|&o| o == 0) {
                        continue;
                    }
                    let target = vertices[j].translated(&spatial, &tiling.translation(offset));
                    let trajectory = system.steer(&vertices[i], &target)?;
                    if trajectory.cost > 0.0 && trajectory.cost < threshold {
                        out.push(GraphEdge {
                            from: i as u32,
                            to: j as u32,
                            offset: offset.clone(),
                            cost: trajectory.cost,
                            trajectory,
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect();
    Ok(PrimitiveGraph {
        system: *system,
        vertices,
        edges: edges?.into_iter().flatten().collect(),
        dispersion: run.final_dispersion,
        tiling,
        format_version: FORMAT_VERSION,
    })
}

impl PrimitiveGraph {
    /// Edge indices grouped by source vertex.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.from as usize].push(i as u32);
        }
        adj
    }

    pub fn mean_out_degree(&self) -> f64 {
        if self.vertices.is_empty() {
            0.0
        } else {
            self.edges.len() as f64 / self.vertices.len() as f64
        }
    }

    /// World state of a vertex in a given tile.
    pub fn node_state(&self, vertex: u32, tile: &[i64]) -> Result<State, GraphError> {
        let v = self
            .vertices
            .get(vertex as usize)
            .ok_or(GraphError::VertexOutOfRange(vertex))?;
        Ok(v.translated(&self.tiling.spatial_dims, &self.tiling.translation(tile)))
    }

    /// All out-edges of the node `(vertex, tile)` in the world frame. Tile
    /// coordinates are unbounded.
    pub fn expand(&self, vertex: u32, tile: &[i64]) -> Result<Vec<Expansion>, GraphError> {
        if vertex as usize >= self.vertices.len() {
            return Err(GraphError::VertexOutOfRange(vertex));
        }
        let translation = self.tiling.translation(tile);
        let out = self
            .edges
            .iter()
            .filter(|e| e.from == vertex)
            .map(|e| self.expansion_of(e, tile, &translation))
            .collect();
        Ok(out)
    }

    pub(crate) fn expansion_of(&self, edge: &GraphEdge, tile: &[i64], translation: &[f64]) -> Expansion {
        let succ_tile: Vec<i64> = tile.iter().zip(&edge.offset).map(|(&t, &o)| t + o).collect();
        Expansion {
            vertex: edge.to,
            tile: succ_tile,
            cost: edge.cost,
            trajectory: edge.trajectory.translated(&self.tiling.spatial_dims, translation),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        let mut payload = Vec::new();
        self.encode(&mut payload);
        let digest = Sha256::digest(&payload);
        let mut file = std::fs::File::create(path)?;
        file.write_all(&payload)?;
        file.write_all(&digest)?;
        let sidecar = path.with_extension("json");
        let meta = serde_json::json!({
            "format_version": self.format_version,
            "system": self.system,
            "tiling": self.tiling,
            "dispersion": self.dispersion,
            "vertex_count": self.vertices.len(),
            "edge_count": self.edges.len(),
            "mean_out_degree": self.mean_out_degree(),
        });
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta).expect("meta serializes"))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < MAGIC.len() + 4 + 32 {
            return Err(GraphError::Malformed("file shorter than header".into()));
        }
        let (payload, checksum) = bytes.split_at(bytes.len() - 32);
        let mut r = Reader { bytes: payload, pos: 0 };
        let magic = r.take(MAGIC.len())?;
        if magic != MAGIC {
            return Err(GraphError::Malformed("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(GraphError::VersionMismatch { found: version, expected: FORMAT_VERSION });
        }
        if Sha256::digest(payload).as_slice() != checksum {
            return Err(GraphError::ChecksumMismatch);
        }
        let graph = Self::decode(&mut r)?;
        if r.pos != payload.len() {
            return Err(GraphError::Malformed("trailing bytes after graph".into()));
        }
        Ok(graph)
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.format_version.to_le_bytes());
        match self.system {
            SystemKind::ReedsShepp { turning_radius } => {
                out.push(0);
                out.extend_from_slice(&turning_radius.to_le_bytes());
            }
            SystemKind::DoubleIntegrator2D { rho, u_max, v_max } => {
                out.push(1);
                for v in [rho, u_max, v_max] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        let k = self.tiling.spatial_dims.len() as u32;
        out.extend_from_slice(&k.to_le_bytes());
        for &d in &self.tiling.spatial_dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &e in &self.tiling.tile_extent {
            out.extend_from_slice(&e.to_le_bytes());
        }
        out.extend_from_slice(&(self.tiling.neighbor_radius as u32).to_le_bytes());
        out.extend_from_slice(&self.dispersion.to_le_bytes());
        out.extend_from_slice(&(self.vertices.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.edges.len() as u64).to_le_bytes());
        for v in &self.vertices {
            encode_state(v, out);
        }
        for e in &self.edges {
            out.extend_from_slice(&e.from.to_le_bytes());
            out.extend_from_slice(&e.to.to_le_bytes());
            for &o in &e.offset {
                out.extend_from_slice(&o.to_le_bytes());
            }
            out.extend_from_slice(&e.cost.to_le_bytes());
            encode_trajectory(&e.trajectory, out);
        }
    }

    fn decode(r: &mut Reader) -> Result<Self, GraphError> {
        let system = match r.u8()? {
            0 => SystemKind::ReedsShepp { turning_radius: r.f64()? },
            1 => SystemKind::DoubleIntegrator2D { rho: r.f64()?, u_max: r.f64()?, v_max: r.f64()? },
            tag => return Err(GraphError::Malformed(format!("unknown system tag {tag}"))),
        };
        let k = r.u32()? as usize;
        if k > 4 {
            return Err(GraphError::Malformed(format!("implausible spatial dim count {k}")));
        }
        let spatial_dims: Vec<usize> =
            (0..k).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_, _>>()?;
        let tile_extent: Vec<f64> = (0..k).map(|_| r.f64()).collect::<Result<_, _>>()?;
        let neighbor_radius = r.u32()? as usize;
        let tiling = TilingSpec { spatial_dims, tile_extent, neighbor_radius };
        let dispersion = r.f64()?;
        let n_vertices = r.u64()? as usize;
        let n_edges = r.u64()? as usize;
        if n_vertices > 1 << 24 || n_edges > 1 << 28 {
            return Err(GraphError::Malformed("implausible counts".into()));
        }
        let mut vertices = Vec::with_capacity(n_vertices);
        for _ in 0..n_vertices {
            vertices.push(decode_state(r)?);
        }
        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let from = r.u32()?;
            let to = r.u32()?;
            if from as usize >= n_vertices || to as usize >= n_vertices {
                return Err(GraphError::Malformed("edge endpoint out of range".into()));
            }
            let offset: Vec<i64> = (0..k).map(|_| r.i64()).collect::<Result<_, _>>()?;
            let cost = r.f64()?;
            let trajectory = decode_trajectory(r)?;
            edges.push(GraphEdge { from, to, offset, cost, trajectory });
        }
        Ok(PrimitiveGraph { system, vertices, edges, dispersion, tiling, format_version: FORMAT_VERSION })
    }
}

fn encode_state(s: &State, out: &mut Vec<u8>) {
    out.push(s.dim() as u8);
    for &c in s.coords() {
        out.extend_from_slice(&c.to_le_bytes());
    }
}

fn decode_state(r: &mut Reader) -> Result<State, GraphError> {
    let dim = r.u8()? as usize;
    if dim > crate::state::MAX_DIM {
        return Err(GraphError::Malformed(format!("state dimension {dim}")));
    }
    let mut coords = [0.0f64; crate::state::MAX_DIM];
    for slot in coords.iter_mut().take(dim) {
        *slot = r.f64()?;
    }
    Ok(State::new(&coords[..dim]))
}

fn encode_trajectory(t: &Trajectory, out: &mut Vec<u8>) {
    encode_state(&t.start, out);
    encode_state(&t.end, out);
    out.extend_from_slice(&t.cost.to_le_bytes());
    out.extend_from_slice(&t.duration.to_le_bytes());
    match &t.repr {
        TrajectoryRepr::ReedsShepp { radius, segments } => {
            out.push(0);
            out.extend_from_slice(&radius.to_le_bytes());
            out.extend_from_slice(&(segments.len() as u32).to_le_bytes());
            for seg in segments {
                out.push(match seg.kind {
                    SegmentKind::Left => 0,
                    SegmentKind::Straight => 1,
                    SegmentKind::Right => 2,
                });
                out.extend_from_slice(&seg.length.to_le_bytes());
            }
        }
        TrajectoryRepr::DoubleIntegrator { coeffs_x, coeffs_y } => {
            out.push(1);
            for k in coeffs_x.iter().chain(coeffs_y) {
                out.extend_from_slice(&k.to_le_bytes());
            }
        }
    }
}

fn decode_trajectory(r: &mut Reader) -> Result<Trajectory, GraphError> {
    let start = decode_state(r)?;
    let end = decode_state(r)?;
    let cost = r.f64()?;
    let duration = r.f64()?;
    let repr = match r.u8()? {
        0 => {
            let radius = r.f64()?;
            let n = r.u32()? as usize;
            if n > 8 {
                return Err(GraphError::Malformed(format!("segment count {n}")));
            }
            let mut segments = Vec::with_capacity(n);
            for _ in 0..n {
                let kind = match r.u8()? {
                    0 => SegmentKind::Left,
                    1 => SegmentKind::Straight,
                    2 => SegmentKind::Right,
                    tag => return Err(GraphError::Malformed(format!("segment kind {tag}"))),
                };
                segments.push(Segment { kind, length: r.f64()? });
            }
            TrajectoryRepr::ReedsShepp { radius, segments }
        }
        1 => {
            let mut all = [0.0f64; 8];
            for slot in all.iter_mut() {
                *slot = r.f64()?;
            }
            TrajectoryRepr::DoubleIntegrator {
                coeffs_x: all[..4].try_into().expect("width checked"),
                coeffs_y: all[4..].try_into().expect("width checked"),
            }
        }
        tag => return Err(GraphError::Malformed(format!("trajectory tag {tag}"))),
    };
    Ok(Trajectory { start, end, cost, duration, repr })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GraphError> {
        if self.pos + n > self.bytes.len() {
            return Err(GraphError::Malformed("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, GraphError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, GraphError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("width")))
    }

    fn u64(&mut self) -> Result<u64, GraphError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("width")))
    }

    fn i64(&mut self) -> Result<i64, GraphError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("width")))
    }

    fn f64(&mut self) -> Result<f64, GraphError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("width")))
    }
}
