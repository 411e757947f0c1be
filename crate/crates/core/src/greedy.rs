//! Greedy winner-take-all search over a full-resolution attention map.
//!
//! Each step checks whether the current fixation sees the target, zeroes a
//! patch of the map around it and jumps to the global maximum of what is
//! left. Nothing is accumulated between saccades.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{DatasetSpec, Fixation, PixelRect, Scanpath, Trial};
use crate::preprocess::{is_found, FoundPredicate};
use crate::scalar::Scalar;
use crate::search::StopReason;
use crate::similarity::{build_similarity, MapContext, SimilaritySource};

pub const MODEL_NAME: &str = "IVSN";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchMode {
    Fovea,
    TargetSize,
    #[default]
    DoubleTargetSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreedyConfig {
    pub attention: SimilaritySource,
    #[serde(default)]
    pub patch_mode: PatchMode,
    /// Saccade budget; the dataset's budget when absent.
    #[serde(default)]
    pub max_fixations: Option<u32>,
}

impl GreedyConfig {
    pub fn new(attention: SimilaritySource) -> Self {
        GreedyConfig {
            attention,
            patch_mode: PatchMode::default(),
            max_fixations: None,
        }
    }

    pub fn budget(&self, spec: &DatasetSpec) -> u32 {
        self.max_fixations.unwrap_or(spec.max_fixations)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_fixations == Some(0) {
            return Err(Error::InvalidConfig("greedy max_fixations must be positive".into()));
        }
        Ok(())
    }
}

/// Mean `(w, h)` of a set of target boxes, in pixels.
pub fn mean_target_size(trials: &[Trial]) -> Result<(f64, f64)> {
    if trials.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = trials.len() as f64;
    let w = trials.iter().map(|t| t.target_bbox.w as f64).sum::<f64>() / n;
    let h = trials.iter().map(|t| t.target_bbox.h as f64).sum::<f64>() / n;
    Ok((w, h))
}

/// Inhibition patch `(w, h)` in pixels.
pub fn resolve_patch(spec: &DatasetSpec, mean_target: (f64, f64), cfg: &GreedyConfig) -> Result<(usize, usize)> {
    let (w, h) = match cfg.patch_mode {
        PatchMode::Fovea => (spec.fovea_size as f64, spec.fovea_size as f64),
        PatchMode::TargetSize => mean_target,
        PatchMode::DoubleTargetSize => (2.0 * mean_target.0, 2.0 * mean_target.1),
    };
    let (w, h) = (w.round(), h.round());
    if !(w >= 1.0 && h >= 1.0) {
        return Err(Error::InvalidConfig(format!("patch side must be positive, got {w}x{h}")));
    }
    Ok((w as usize, h as usize))
}

/// Half-open patch of `(w, h)` pixels centered on `f`, clipped to the image.
pub fn patch_around(f: Fixation, patch: (usize, usize), dims: (usize, usize)) -> PixelRect {
    let (cx, cy) = (f.x.floor() as i64, f.y.floor() as i64);
    let (pw, ph) = (patch.0 as i64, patch.1 as i64);
    let (x0, y0) = (cx - pw / 2, cy - ph / 2);
    PixelRect {
        x0: x0.max(0),
        x1: (x0 + pw).min(dims.1 as i64),
        y0: y0.max(0),
        y1: (y0 + ph).min(dims.0 as i64),
    }
}

#[derive(Clone, Debug)]
pub struct GreedyOutcome<T> {
    pub scanpath: Scanpath,
    pub stop: StopReason,
    /// Attention value at each fixation after the first, read before zeroing.
    pub values: Vec<T>,
    /// Zeroed rectangles in the order they were applied.
    pub patches: Vec<PixelRect>,
}

/// Greedy search on an explicit attention map at image resolution.
pub fn run_greedy_on_map<T: Scalar>(
    trial: &Trial,
    attention: &Grid<T>,
    patch: (usize, usize),
    found: &FoundPredicate,
    budget: u32,
) -> GreedyOutcome<T> {
    let spec = found.spec();
    let mut map = attention.clone();
    let mut current = trial.initial_fixation.clamped(spec.image_width, spec.image_height);
    let mut fixations = vec![current];
    let mut values = Vec::new();
    let mut patches = Vec::new();

    let stop = loop {
        if is_found(current, &trial.target_bbox, found) {
            break StopReason::TargetFound;
        }
        if fixations.len() > budget as usize {
            break StopReason::BudgetReached;
        }
        let rect = patch_around(current, patch, map.dims());
        for y in rect.y0..rect.y1 {
            for x in rect.x0..rect.x1 {
                map.set(y as usize, x as usize, T::zero());
            }
        }
        patches.push(rect);
        let (r, c) = map.argmax();
        let peak = map.get(r, c);
        if peak <= T::zero() {
            break StopReason::Exhausted;
        }
        values.push(peak);
        current = Fixation::new(c as f64, r as f64);
        fixations.push(current);
    };

    GreedyOutcome {
        scanpath: Scanpath {
            source_id: MODEL_NAME.to_owned(),
            fixations,
            target_found: stop == StopReason::TargetFound,
            max_fixations: budget,
        },
        stop,
        values,
        patches,
    }
}

/// Greedy search on a trial, loading its attention map. `mean_target` is
/// the dataset's mean target size; it sets both the found window and,
/// depending on the mode, the patch.
pub fn run_greedy<T: Scalar>(
    trial: &Trial,
    cfg: &GreedyConfig,
    spec: &DatasetSpec,
    mean_target: (f64, f64),
    ctx: &MapContext,
) -> Result<GreedyOutcome<T>> {
    cfg.validate()?;
    let patch = resolve_patch(spec, mean_target, cfg)?;
    let found = FoundPredicate::pixel_window(spec, mean_target.0, mean_target.1)?;
    let mut native = ctx.clone();
    native.working_dims = None;
    let attention = build_similarity::<T>(trial, &cfg.attention, spec, &native)?;
    Ok(run_greedy_on_map(trial, &attention, patch, &found, cfg.budget(spec)))
}
