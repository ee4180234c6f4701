//! 2D occupancy grids with PGM (P5) storage and a JSON metadata sidecar.
//!
//! Cells outside the grid are free: maps only constrain where they exist,
//! matching the unbounded-workspace planning model.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed map file: {0}")]
    Malformed(String),
    #[error("malformed map sidecar: {0}")]
    Sidecar(String),
}

/// Free/occupied discretization of the workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub width: usize,
    pub height: usize,
    /// Side length of one cell in world units.
    pub resolution: f64,
    /// World coordinates of the low corner of cell (0, 0).
    pub origin: [f64; 2],
    cells: Vec<bool>,
}

/// Sidecar metadata stored next to the PGM image.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapMeta {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub occupied_threshold: f64,
}

impl OccupancyGrid {
    pub fn all_free(width: usize, height: usize, resolution: f64, origin: [f64; 2]) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        Self { width, height, resolution, origin, cells: vec![false; width * height] }
    }

    pub fn all_occupied(width: usize, height: usize, resolution: f64, origin: [f64; 2]) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        Self { width, height, resolution, origin, cells: vec![true; width * height] }
    }

    pub fn set_cell(&mut self, ix: usize, iy: usize, occupied: bool) {
        if ix < self.width && iy < self.height {
            self.cells[iy * self.width + ix] = occupied;
        }
    }

    /// Occupancy of a cell index; anything outside the stored grid is free.
    pub fn cell_occupied(&self, ix: i64, iy: i64) -> bool {
        if ix < 0 || iy < 0 || ix as usize >= self.width || iy as usize >= self.height {
            return false;
        }
        self.cells[iy as usize * self.width + ix as usize]
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin[0]) / self.resolution).floor() as i64,
            ((y - self.origin[1]) / self.resolution).floor() as i64,
        )
    }

    pub fn occupied_at(&self, x: f64, y: f64) -> bool {
        let (ix, iy) = self.cell_of(x, y);
        self.cell_occupied(ix, iy)
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Write a P5 PGM (occupied = 0, free = 255) plus the JSON sidecar.
    pub fn save_pgm(&self, path: &Path) -> Result<(), MapError> {
        let mut f = std::fs::File::create(path)?;
        write!(f, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.cells.iter().map(|&c| if c { 0u8 } else { 255u8 }).collect();
        f.write_all(&bytes)?;
        let meta = MapMeta {
            resolution: self.resolution,
            origin: self.origin,
            occupied_threshold: 0.5,
        };
        std::fs::write(
            path.with_extension("json"),
            serde_json::to_string_pretty(&meta).expect("meta serializes"),
        )?;
        Ok(())
    }

    pub fn load_pgm(path: &Path) -> Result<Self, MapError> {
        let meta_path = path.with_extension("json");
        let meta: MapMeta = serde_json::from_str(
            &std::fs::read_to_string(&meta_path)
                .map_err(|e| MapError::Sidecar(format!("{}: {e}", meta_path.display())))?,
        )
        .map_err(|e| MapError::Sidecar(e.to_string()))?;
        if !(meta.resolution > 0.0) {
            return Err(MapError::Sidecar("resolution must be positive".into()));
        }
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let (width, height, pixels) = parse_p5(&bytes)?;
        let cells = pixels
            .iter()
            .map(|&v| (255.0 - v as f64) / 255.0 >= meta.occupied_threshold)
            .collect();
        Ok(Self { width, height, resolution: meta.resolution, origin: meta.origin, cells })
    }
}

/// Minimal P5 parser: header tokens may be separated by whitespace and
/// `#` comments, then one raw byte per pixel (maxval <= 255).
fn parse_p5(bytes: &[u8]) -> Result<(usize, usize, &[u8]), MapError> {
    let mut pos = 0;
    let mut token = |bytes: &[u8]| -> Result<String, MapError> {
        while pos < bytes.len() {
            match bytes[pos] {
                b' ' | b'\t' | b'\r' | b'\n' => pos += 1,
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(MapError::Malformed("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token(bytes)? != "P5" {
        return Err(MapError::Malformed("not a P5 PGM".into()));
    }
    let width: usize = token(bytes)?.parse().map_err(|_| MapError::Malformed("bad width".into()))?;
    let height: usize = token(bytes)?.parse().map_err(|_| MapError::Malformed("bad height".into()))?;
    let maxval: usize = token(bytes)?.parse().map_err(|_| MapError::Malformed("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(MapError::Malformed(format!("unsupported maxval {maxval}")));
    }
    pos += 1; // single whitespace byte after maxval
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(MapError::Malformed("pixel data truncated".into()));
    }
    Ok((width, height, &bytes[pos..pos + need]))
}
