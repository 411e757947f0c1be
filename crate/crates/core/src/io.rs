//! Dataset, map and image input/output.
//!
//! A dataset directory holds `dataset.json` (a [`DatasetSpec`]) and
//! `trials.json` (an array of trials). Image, template and map paths inside
//! `trials.json` are relative to the dataset directory unless absolute.
//!
//! Maps travel as FGRID files: an ASCII header `FGRID v1 <rows> <cols>\n`
//! followed by `rows * cols` little-endian binary32 values, row-major, rows
//! growing downward.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{DatasetSpec, Scanpath, Trial};
use crate::preprocess::{is_found, FoundPredicate, Reject, RejectLog, RejectReason};
use crate::scalar::Scalar;

pub const DATASET_FILE: &str = "dataset.json";
pub const TRIALS_FILE: &str = "trials.json";

/// Grayscale weights applied to `(R, G, B)`.
pub const RGB_WEIGHTS: [f64; 3] = [0.2125, 0.7154, 0.0721];

const FGRID_MAGIC: &[u8] = b"FGRID v1 ";
const FGRID_MAX_HEADER: usize = 64;

#[derive(Debug)]
pub struct LoadedDataset {
    pub root: PathBuf,
    pub spec: DatasetSpec,
    pub trials: Vec<Trial>,
    pub rejects: RejectLog,
}

impl LoadedDataset {
    /// Resolves a path stored in `trials.json` against the dataset root.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        resolve_path(&self.root, p)
    }
}

pub fn resolve_path(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn validate_spec(spec: &DatasetSpec) -> Result<()> {
    let checks = [
        (spec.image_height > 0, "image_height must be positive"),
        (spec.image_width > 0, "image_width must be positive"),
        (spec.fovea_size > 0, "fovea_size must be positive"),
        (spec.max_fixations > 0, "max_fixations must be positive"),
        (spec.cell_size > 0, "cell_size must be positive"),
    ];
    for (ok, msg) in checks {
        if !ok {
            return Err(Error::InvalidDataset(format!("{}: {msg}", spec.name)));
        }
    }
    Ok(())
}

/// Loads and validates a dataset directory.
///
/// Missing or unparsable `dataset.json`/`trials.json` are fatal. Individual
/// trial records that fail validation are returned in `rejects`; scanpaths
/// with no fixations are removed from their trial and logged.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<LoadedDataset> {
    let root = root.as_ref();
    let spec: DatasetSpec = read_json(&root.join(DATASET_FILE))?;
    validate_spec(&spec)?;
    let records: Vec<serde_json::Value> = read_json(&root.join(TRIALS_FILE))?;
    let common = FoundPredicate::common(&spec);

    let mut trials = Vec::with_capacity(records.len());
    let mut rejects = RejectLog::default();
    let mut seen = HashSet::new();
    for (index, record) in records.into_iter().enumerate() {
        let fallback_id = record
            .get("trial_id")
            .and_then(|v| v.as_str())
            .map(str::to_owned)
            .unwrap_or_else(|| format!("#{index}"));
        let trial: Trial = match serde_json::from_value(record) {
            Ok(t) => t,
            Err(e) => {
                rejects.push(Reject::trial(fallback_id, RejectReason::Malformed(e.to_string())));
                continue;
            }
        };
        if !seen.insert(trial.trial_id.clone()) {
            rejects.push(Reject::trial(&trial.trial_id, RejectReason::DuplicateTrialId));
            continue;
        }
        match validate_trial(trial, &spec, &common, &mut rejects) {
            Ok(t) => trials.push(t),
            Err(reject) => rejects.push(reject),
        }
    }
    Ok(LoadedDataset {
        root: root.to_path_buf(),
        spec,
        trials,
        rejects,
    })
}

fn validate_trial(
    mut trial: Trial,
    spec: &DatasetSpec,
    common: &FoundPredicate,
    rejects: &mut RejectLog,
) -> std::result::Result<Trial, Reject> {
    let (w, h) = (spec.image_width, spec.image_height);
    if !trial.target_bbox.is_inside(w, h) {
        return Err(Reject::trial(&trial.trial_id, RejectReason::BboxOutOfBounds));
    }
    let init = trial.initial_fixation;
    if !(init.x.is_finite() && init.y.is_finite()) || !init.is_inside(w, h) {
        return Err(Reject::trial(
            &trial.trial_id,
            RejectReason::InitialFixationOutOfBounds,
        ));
    }
    if is_found(init, &trial.target_bbox, common) {
        return Err(Reject::trial(&trial.trial_id, RejectReason::Trivial));
    }
    let id = trial.trial_id.clone();
    trial.human_scanpaths.retain_mut(|s| {
        if s.fixations.is_empty() {
            rejects.push(Reject::scanpath(&id, &s.source_id, RejectReason::EmptyScanpath));
            return false;
        }
        for f in &mut s.fixations {
            *f = f.clamped(w, h);
        }
        true
    });
    Ok(trial)
}

/// Writes `dataset.json` and `trials.json` into `root`, creating it if needed.
pub fn save_dataset(root: impl AsRef<Path>, spec: &DatasetSpec, trials: &[Trial]) -> Result<()> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    write_json(&root.join(DATASET_FILE), spec)?;
    write_json(&root.join(TRIALS_FILE), trials)
}

/// One entry of a scanpath file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ScanpathRecord {
    trial_id: String,
    source_id: String,
    #[serde(with = "crate::model::xy_pairs")]
    fixations: Vec<crate::model::Fixation>,
    target_found: bool,
    max_fixations: u32,
}

pub fn save_scanpaths(paths: &[(String, Scanpath)], out: impl AsRef<Path>) -> Result<()> {
    let records: Vec<ScanpathRecord> = paths
        .iter()
        .map(|(trial_id, s)| ScanpathRecord {
            trial_id: trial_id.clone(),
            source_id: s.source_id.clone(),
            fixations: s.fixations.clone(),
            target_found: s.target_found,
            max_fixations: s.max_fixations,
        })
        .collect();
    write_json(out.as_ref(), &records)
}

pub fn load_scanpaths(path: impl AsRef<Path>) -> Result<Vec<(String, Scanpath)>> {
    let records: Vec<ScanpathRecord> = read_json(path.as_ref())?;
    Ok(records
        .into_iter()
        .map(|r| {
            (
                r.trial_id,
                Scanpath {
                    source_id: r.source_id,
                    fixations: r.fixations,
                    target_found: r.target_found,
                    max_fixations: r.max_fixations,
                },
            )
        })
        .collect())
}

/// Serializes a grid to FGRID bytes (values rounded to binary32).
pub fn encode_fgrid<T: Scalar>(grid: &Grid<T>) -> Vec<u8> {
    let header = format!("FGRID v1 {} {}\n", grid.rows(), grid.cols());
    let mut out = Vec::with_capacity(header.len() + 4 * grid.len());
    out.extend_from_slice(header.as_bytes());
    for v in grid.values() {
        let v = v.to_f32().unwrap_or(f32::NAN);
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_fgrid(bytes: &[u8]) -> Result<Grid<f32>> {
    let bad = |offset: usize, reason: &str| Error::Fgrid {
        offset,
        reason: reason.to_owned(),
    };
    if !bytes.starts_with(FGRID_MAGIC) {
        let offset = bytes
            .iter()
            .zip(FGRID_MAGIC)
            .position(|(a, b)| a != b)
            .unwrap_or(bytes.len());
        return Err(bad(offset, "bad magic, expected `FGRID v1 `"));
    }
    let newline = bytes
        .iter()
        .take(FGRID_MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad(bytes.len().min(FGRID_MAX_HEADER), "unterminated header"))?;
    let dims = std::str::from_utf8(&bytes[FGRID_MAGIC.len()..newline])
        .map_err(|_| bad(FGRID_MAGIC.len(), "header is not ASCII"))?;
    let mut fields = dims.split(' ');
    let mut dim = |name: &str| -> Result<usize> {
        fields
            .next()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| bad(FGRID_MAGIC.len(), &format!("bad {name} field")))
    };
    let rows = dim("rows")?;
    let cols = dim("cols")?;
    if fields.next().is_some() {
        return Err(bad(FGRID_MAGIC.len(), "trailing header fields"));
    }
    let payload = &bytes[newline + 1..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad(FGRID_MAGIC.len(), "dimensions overflow"))?;
    if payload.len() < expected {
        return Err(bad(bytes.len(), "truncated payload"));
    }
    if payload.len() > expected {
        return Err(bad(newline + 1 + expected, "trailing bytes after payload"));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(bad(newline + 1 + 4 * i, "non-finite value"));
        }
        values.push(v);
    }
    Grid::new(rows, cols, values)
}

pub fn save_map<T: Scalar>(grid: &Grid<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_fgrid(grid)).map_err(|e| Error::io(path, e))
}

/// Reads an FGRID file exactly as stored.
pub fn read_map(path: impl AsRef<Path>) -> Result<Grid<f32>> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingMap(path.to_path_buf()))
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    decode_fgrid(&bytes)
}

/// Reads an FGRID file and brings it to the expected dimensions.
///
/// Mismatched dimensions are bilinearly resampled; negative values are then
/// shifted (not clipped) so the minimum becomes zero.
pub fn load_map<T: Scalar>(path: impl AsRef<Path>, rows: usize, cols: usize) -> Result<Grid<T>> {
    let raw = read_map(path)?.cast::<T>();
    let sized = if raw.dims() == (rows, cols) {
        raw
    } else {
        raw.resample_bilinear(rows, cols)
    };
    Ok(sized.shifted_nonnegative())
}

pub fn gray_from_rgb(r: u8, g: u8, b: u8) -> f64 {
    if r == g && g == b {
        return r as f64;
    }
    RGB_WEIGHTS[0] * r as f64 + RGB_WEIGHTS[1] * g as f64 + RGB_WEIGHTS[2] * b as f64
}

fn decode_image(path: &Path) -> Result<DynamicImage> {
    let err = |reason: String| Error::Image {
        path: path.to_path_buf(),
        reason,
    };
    image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| err(e.to_string()))
}

/// Loads an 8-bit image as a grayscale plane with values in `[0, 255]`.
pub fn load_image_gray<T: Scalar>(path: impl AsRef<Path>) -> Result<Grid<T>> {
    let path = path.as_ref();
    let img = decode_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray: Vec<T> = match &img {
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| T::of(p.0[0] as f64)).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| T::of(p.0[0] as f64)).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| T::of(gray_from_rgb(p.0[0], p.0[1], p.0[2])))
            .collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .map(|p| T::of(gray_from_rgb(p.0[0], p.0[1], p.0[2])))
            .collect(),
        other => return Err(unsupported(path, other)),
    };
    Grid::new(h, w, gray)
}

/// Loads an 8-bit image as `[R, G, B]` planes; grayscale inputs are replicated.
pub fn load_image_rgb<T: Scalar>(path: impl AsRef<Path>) -> Result<[Grid<T>; 3]> {
    let path = path.as_ref();
    let img = decode_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<[u8; 3]> = match &img {
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| [p.0[0]; 3]).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| [p.0[0]; 3]).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| p.0).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| [p.0[0], p.0[1], p.0[2]]).collect(),
        other => return Err(unsupported(path, other)),
    };
    let plane = |k: usize| Grid::new(h, w, pixels.iter().map(|p| T::of(p[k] as f64)).collect());
    Ok([plane(0)?, plane(1)?, plane(2)?])
}

fn unsupported(path: &Path, img: &DynamicImage) -> Error {
    Error::UnsupportedBitDepth {
        path: path.to_path_buf(),
        color_type: format!("{:?}", img.color()),
    }
}
