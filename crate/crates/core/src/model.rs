//! Shared domain types and grid geometry.
//!
//! Coordinates are always `x` = column and `y` = row, in pixels of the
//! dataset's image resolution.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// A gaze position in image pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub x: f64,
    pub y: f64,
}

impl Fixation {
    pub const fn new(x: f64, y: f64) -> Self {
        Fixation { x, y }
    }

    /// Clamps into `[0, width) x [0, height)`.
    pub fn clamped(self, width: u32, height: u32) -> Self {
        Fixation {
            x: clamp_open(self.x, width),
            y: clamp_open(self.y, height),
        }
    }

    pub fn is_inside(&self, width: u32, height: u32) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x < width as f64 && self.y < height as f64
    }
}

fn clamp_open(v: f64, extent: u32) -> f64 {
    let upper = extent as f64;
    if v.is_nan() || v < 0.0 {
        0.0
    } else if v >= upper {
        // largest double strictly below the extent
        f64::from_bits(upper.to_bits() - 1)
    } else {
        v
    }
}

/// Serde helper for fixation lists written as `[[x, y], ...]`.
pub mod xy_pairs {
    use super::Fixation;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(fixations: &[Fixation], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = fixations.iter().map(|f| [f.x, f.y]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Fixation>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[x, y]| Fixation::new(x, y)).collect())
    }
}

/// An ordered fixation sequence produced by one subject or one model on one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scanpath {
    pub source_id: String,
    #[serde(with = "xy_pairs")]
    pub fixations: Vec<Fixation>,
    pub target_found: bool,
    pub max_fixations: u32,
}

impl Scanpath {
    pub fn saccade_count(&self) -> usize {
        self.fixations.len().saturating_sub(1)
    }

    pub fn within_budget(&self) -> bool {
        self.fixations.len() <= self.max_fixations as usize + 1
    }
}

/// Target bounding box in pixels; `(x, y)` is the top-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl BoundingBox {
    pub const fn new(x: i64, y: i64, w: i64, h: i64) -> Self {
        BoundingBox { x, y, w, h }
    }

    pub fn center(&self) -> Fixation {
        Fixation::new(
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn is_inside(&self, width: u32, height: u32) -> bool {
        self.w > 0
            && self.h > 0
            && self.x >= 0
            && self.y >= 0
            && self.x + self.w <= width as i64
            && self.y + self.h <= height as i64
    }

    /// Pixel extent `[x0, x1) x [y0, y1)` of the square of side `max(w, h)`
    /// centered on the box, clipped to the image.
    pub fn target_square(&self, width: u32, height: u32) -> PixelRect {
        let side = self.w.max(self.h);
        // doubled coordinates keep half-pixel centers exact
        let cx2 = 2 * self.x + self.w;
        let cy2 = 2 * self.y + self.h;
        let x0 = (cx2 - side).div_euclid(2);
        let x1 = (cx2 + side + 1).div_euclid(2);
        let y0 = (cy2 - side).div_euclid(2);
        let y1 = (cy2 + side + 1).div_euclid(2);
        PixelRect {
            x0: x0.clamp(0, width as i64),
            x1: x1.clamp(0, width as i64),
            y0: y0.clamp(0, height as i64),
            y1: y1.clamp(0, height as i64),
        }
    }
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: i64,
    pub x1: i64,
    pub y0: i64,
    pub y1: i64,
}

impl PixelRect {
    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0 || self.y1 <= self.y0
    }

    pub fn contains(&self, f: Fixation) -> bool {
        f.x >= self.x0 as f64 && f.x < self.x1 as f64 && f.y >= self.y0 as f64 && f.y < self.y1 as f64
    }
}

/// One search problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: String,
    #[serde(rename = "image")]
    pub image_ref: PathBuf,
    #[serde(rename = "target_template")]
    pub target_template_ref: Option<PathBuf>,
    pub target_bbox: BoundingBox,
    pub target_category: String,
    pub initial_fixation: Fixation,
    #[serde(rename = "scanpaths")]
    pub human_scanpaths: Vec<Scanpath>,
}

/// Dataset-level constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub image_height: u32,
    pub image_width: u32,
    pub fovea_size: u32,
    pub max_fixations: u32,
    pub cell_size: u32,
    pub color: bool,
}

impl DatasetSpec {
    pub fn grid_rows(&self) -> usize {
        self.image_height.div_ceil(self.cell_size) as usize
    }

    pub fn grid_cols(&self) -> usize {
        self.image_width.div_ceil(self.cell_size) as usize
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_rows(), self.grid_cols())
    }

    /// `(rows, cols)` of the image.
    pub fn image_dims(&self) -> (usize, usize) {
        (self.image_height as usize, self.image_width as usize)
    }

    /// Pixel center of a grid cell; partial edge cells use the center of
    /// the pixels they actually cover.
    pub fn cell_center(&self, cell: Cell) -> Fixation {
        let cs = self.cell_size as f64;
        let x0 = cell.col as f64 * cs;
        let y0 = cell.row as f64 * cs;
        let x1 = (x0 + cs).min(self.image_width as f64);
        let y1 = (y0 + cs).min(self.image_height as f64);
        Fixation::new((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    }
}

/// Grid cell index, ordered row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    pub fn dist2(&self, other: Cell) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        dr * dr + dc * dc
    }
}

/// Grid cell containing a fixation, clamped into the grid.
pub fn grid_cell_of(f: Fixation, spec: &DatasetSpec) -> Cell {
    let cs = spec.cell_size as f64;
    let index = |v: f64, n: usize| -> usize {
        let i = (v / cs).floor();
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as usize).min(n - 1)
        }
    };
    Cell::new(index(f.y, spec.grid_rows()), index(f.x, spec.grid_cols()))
}

/// Every grid cell overlapped by at least one pixel of the target square.
pub fn bbox_grid_cells(b: &BoundingBox, spec: &DatasetSpec) -> BTreeSet<Cell> {
    let square = b.target_square(spec.image_width, spec.image_height);
    let mut cells = BTreeSet::new();
    if square.is_empty() {
        return cells;
    }
    let cs = spec.cell_size as i64;
    for row in (square.y0 / cs)..=((square.y1 - 1) / cs) {
        for col in (square.x0 / cs)..=((square.x1 - 1) / cs) {
            cells.insert(Cell::new(row as usize, col as usize));
        }
    }
    cells
}
