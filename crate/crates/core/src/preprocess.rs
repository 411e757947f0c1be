//! Dataset equalization: one target-found criterion for humans and models.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::cumulative_curve;
use crate::model::{bbox_grid_cells, grid_cell_of, BoundingBox, DatasetSpec, Fixation, Scanpath, Trial};

/// How a fixation is judged to have landed on the target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FoundMode {
    /// The fixation's grid cell belongs to the target square projected to the grid.
    GridCell,
    /// The fixation lies inside the bounding box grown by half a window on each side.
    PixelWindow { width: f64, height: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoundPredicate {
    pub mode: FoundMode,
    spec: DatasetSpec,
}

impl FoundPredicate {
    pub fn grid_cell(spec: &DatasetSpec) -> Self {
        FoundPredicate {
            mode: FoundMode::GridCell,
            spec: spec.clone(),
        }
    }

    pub fn pixel_window(spec: &DatasetSpec, width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pixel window must be positive, got {width}x{height}"
            )));
        }
        Ok(FoundPredicate {
            mode: FoundMode::PixelWindow { width, height },
            spec: spec.clone(),
        })
    }

    /// The criterion applied to human scanpaths and ingested model scanpaths.
    pub fn common(spec: &DatasetSpec) -> Self {
        Self::grid_cell(spec)
    }

    pub fn spec(&self) -> &DatasetSpec {
        &self.spec
    }
}

pub fn is_found(f: Fixation, b: &BoundingBox, p: &FoundPredicate) -> bool {
    match p.mode {
        FoundMode::GridCell => bbox_grid_cells(b, &p.spec).contains(&grid_cell_of(f, &p.spec)),
        FoundMode::PixelWindow { width, height } => {
            let (hw, hh) = (width / 2.0, height / 2.0);
            f.x >= b.x as f64 - hw
                && f.x <= (b.x + b.w) as f64 + hw
                && f.y >= b.y as f64 - hh
                && f.y <= (b.y + b.h) as f64 + hh
        }
    }
}

/// Cuts a scanpath at its first fixation on the target.
pub fn truncate_at_target(s: &Scanpath, b: &BoundingBox, p: &FoundPredicate) -> Result<Scanpath> {
    if s.fixations.is_empty() {
        return Err(Error::EmptyScanpath);
    }
    let hit = s.fixations.iter().position(|&f| is_found(f, b, p));
    let mut out = s.clone();
    match hit {
        Some(i) => {
            out.fixations.truncate(i + 1);
            out.target_found = true;
        }
        None => out.target_found = false,
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    Malformed(String),
    DuplicateTrialId,
    BboxOutOfBounds,
    InitialFixationOutOfBounds,
    Trivial,
    EmptyScanpath,
    TargetNotFound,
    OverBudget,
    NoSuccessfulScanpaths,
}

impl RejectReason {
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::Malformed(_) => "malformed record",
            RejectReason::DuplicateTrialId => "duplicate trial_id",
            RejectReason::BboxOutOfBounds => "bbox out of bounds",
            RejectReason::InitialFixationOutOfBounds => "initial fixation out of bounds",
            RejectReason::Trivial => "trivial trial",
            RejectReason::EmptyScanpath => "empty scanpath",
            RejectReason::TargetNotFound => "target not found",
            RejectReason::OverBudget => "exceeds fixation budget",
            RejectReason::NoSuccessfulScanpaths => "no successful scanpaths",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Malformed(detail) => write!(f, "{}: {detail}", self.code()),
            other => f.write_str(other.code()),
        }
    }
}

/// A dropped trial (`source_id == None`) or a dropped scanpath.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reject {
    pub trial_id: String,
    pub source_id: Option<String>,
    pub reason: RejectReason,
}

impl Reject {
    pub fn trial(trial_id: impl Into<String>, reason: RejectReason) -> Self {
        Reject {
            trial_id: trial_id.into(),
            source_id: None,
            reason,
        }
    }

    pub fn scanpath(trial_id: impl Into<String>, source_id: impl Into<String>, reason: RejectReason) -> Self {
        Reject {
            trial_id: trial_id.into(),
            source_id: Some(source_id.into()),
            reason,
        }
    }
}

#[derive(Serialize)]
struct RejectLine<'a> {
    trial_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    source_id: Option<&'a str>,
    reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RejectLog {
    entries: Vec<Reject>,
}

impl RejectLog {
    pub fn push(&mut self, r: Reject) {
        self.entries.push(r);
    }

    pub fn extend(&mut self, other: RejectLog) {
        self.entries.extend(other.entries);
    }

    pub fn entries(&self) -> &[Reject] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trial_rejects(&self) -> impl Iterator<Item = &Reject> {
        self.entries.iter().filter(|r| r.source_id.is_none())
    }

    pub fn scanpath_rejects(&self) -> impl Iterator<Item = &Reject> {
        self.entries.iter().filter(|r| r.source_id.is_some())
    }

    /// One JSON object per line: `{trial_id, source_id?, reason}`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.entries {
            let line = RejectLine {
                trial_id: &r.trial_id,
                source_id: r.source_id.as_deref(),
                reason: r.reason.to_string(),
            };
            out.push_str(&serde_json::to_string(&line).expect("reject lines serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EqualizeOptions {
    /// Keep truncated scanpaths that never reached the target (efficiency
    /// curves need them in the denominator). Trials still need one success.
    pub keep_unsuccessful: bool,
}

pub fn equalize(trials: &[Trial], spec: &DatasetSpec) -> (Vec<Trial>, RejectLog) {
    equalize_with(trials, spec, EqualizeOptions::default())
}

/// Truncates human scanpaths at the target and drops what cannot be scored.
///
/// Every input scanpath ends up either in the output or in the log.
pub fn equalize_with(trials: &[Trial], spec: &DatasetSpec, opts: EqualizeOptions) -> (Vec<Trial>, RejectLog) {
    let predicate = FoundPredicate::common(spec);
    let mut kept = Vec::with_capacity(trials.len());
    let mut log = RejectLog::default();

    for trial in trials {
        let id = &trial.trial_id;
        if is_found(trial.initial_fixation, &trial.target_bbox, &predicate) {
            for s in &trial.human_scanpaths {
                log.push(Reject::scanpath(id, &s.source_id, RejectReason::Trivial));
            }
            log.push(Reject::trial(id, RejectReason::Trivial));
            continue;
        }

        let mut survivors = Vec::with_capacity(trial.human_scanpaths.len());
        for s in &trial.human_scanpaths {
            let cut = match truncate_at_target(s, &trial.target_bbox, &predicate) {
                Ok(cut) => cut,
                Err(_) => {
                    log.push(Reject::scanpath(id, &s.source_id, RejectReason::EmptyScanpath));
                    continue;
                }
            };
            if !cut.within_budget() {
                log.push(Reject::scanpath(id, &s.source_id, RejectReason::OverBudget));
            } else if cut.target_found || opts.keep_unsuccessful {
                survivors.push(cut);
            } else {
                log.push(Reject::scanpath(id, &s.source_id, RejectReason::TargetNotFound));
            }
        }

        if !survivors.iter().any(|s| s.target_found) {
            for s in &survivors {
                log.push(Reject::scanpath(id, &s.source_id, RejectReason::TargetNotFound));
            }
            log.push(Reject::trial(id, RejectReason::NoSuccessfulScanpaths));
            continue;
        }
        let mut out = trial.clone();
        out.human_scanpaths = survivors;
        kept.push(out);
    }
    (kept, log)
}

/// Scales fixations from one image size to another, `(width, height)`.
pub fn rescale_scanpath(s: &Scanpath, from: (u32, u32), to: (u32, u32)) -> Scanpath {
    let sx = to.0 as f64 / from.0 as f64;
    let sy = to.1 as f64 / from.1 as f64;
    let mut out = s.clone();
    for f in &mut out.fixations {
        *f = Fixation::new(f.x * sx, f.y * sy).clamped(to.0, to.1);
    }
    out
}

/// Shipped fixation budgets per dataset name.
pub fn default_max_fixations(dataset: &str) -> Option<u32> {
    match dataset.to_ascii_lowercase().as_str() {
        "interiors" => Some(12),
        "unrestricted" => Some(16),
        "mcs" => Some(10),
        "cocosearch18" => Some(10),
        _ => None,
    }
}

/// Smallest budget at which the human cumulative curve reaches 95% of its
/// value at `cap`. `None` when nothing is found within `cap`.
pub fn saturation_max_fixations(scanpaths: &[Scanpath], cap: u32) -> Option<u32> {
    let curve = cumulative_curve(scanpaths, cap as usize).ok()?;
    let plateau = *curve.values.last()?;
    if plateau <= 0.0 {
        return None;
    }
    curve
        .values
        .iter()
        .position(|&v| v >= 0.95 * plateau)
        .map(|i| i as u32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> DatasetSpec {
        DatasetSpec {
            name: "interiors".into(),
            image_height: 768,
            image_width: 1024,
            fovea_size: 32,
            max_fixations: 12,
            cell_size: 32,
            color: false,
        }
    }

    fn sp(source: &str, pts: &[(f64, f64)]) -> Scanpath {
        Scanpath {
            source_id: source.into(),
            fixations: pts.iter().map(|&(x, y)| Fixation::new(x, y)).collect(),
            target_found: false,
            max_fixations: 12,
        }
    }

    const BOX: BoundingBox = BoundingBox::new(32, 32, 32, 32);
    const ON: (f64, f64) = (40.0, 40.0);
    const OFF: (f64, f64) = (500.0, 500.0);

    fn trial(id: &str, init: (f64, f64), paths: Vec<Scanpath>) -> Trial {
        Trial {
            trial_id: id.into(),
            image_ref: "i.png".into(),
            target_template_ref: None,
            target_bbox: BOX,
            target_category: "x".into(),
            initial_fixation: Fixation::new(init.0, init.1),
            human_scanpaths: paths,
        }
    }

    #[test]
    fn found_predicates() {
        let s = spec();
        let grid = FoundPredicate::grid_cell(&s);
        assert!(is_found(BOX.center(), &BOX, &grid));
        assert!(is_found(Fixation::new(40.0, 40.0), &BOX, &grid));
        assert!(!is_found(Fixation::new(70.0, 40.0), &BOX, &grid));

        let window = FoundPredicate::pixel_window(&s, 72.0, 72.0).unwrap();
        assert!(is_found(BOX.center(), &BOX, &window));
        assert!(is_found(Fixation::new(32.0 - 35.0, 48.0), &BOX, &window));
        assert!(!is_found(Fixation::new(32.0 - 37.0, 48.0), &BOX, &window));
        assert!(FoundPredicate::pixel_window(&s, 0.0, 3.0).is_err());
    }

    #[test]
    fn truncation_examples() {
        let p = FoundPredicate::common(&spec());
        let seven = sp("s", &[OFF, OFF, ON, OFF, OFF, OFF, OFF]);
        let cut = truncate_at_target(&seven, &BOX, &p).unwrap();
        assert_eq!(cut.fixations.len(), 3);
        assert!(cut.target_found);

        let never = sp("s", &[OFF, OFF, OFF]);
        let cut = truncate_at_target(&never, &BOX, &p).unwrap();
        assert_eq!(cut.fixations, never.fixations);
        assert!(!cut.target_found);

        let twice = sp("s", &[OFF, ON, OFF, OFF, ON]);
        assert_eq!(truncate_at_target(&twice, &BOX, &p).unwrap().fixations.len(), 2);

        assert!(matches!(
            truncate_at_target(&sp("s", &[]), &BOX, &p),
            Err(Error::EmptyScanpath)
        ));
    }

    #[test]
    fn equalize_examples() {
        let s = spec();
        let trials = vec![
            trial("lost", OFF, vec![sp("a", &[OFF, OFF])]),
            trial("trivial", ON, vec![sp("a", &[ON])]),
            trial(
                "mixed",
                OFF,
                vec![sp("a", &[OFF, ON]), sp("b", &[OFF, OFF]), sp("c", &[OFF, OFF, ON, OFF])],
            ),
        ];
        let (kept, log) = equalize(&trials, &s);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].trial_id, "mixed");
        assert_eq!(kept[0].human_scanpaths.len(), 2);
        assert_eq!(kept[0].human_scanpaths[1].fixations.len(), 3);
        let trial_reasons: Vec<_> = log.trial_rejects().map(|r| (r.trial_id.as_str(), r.reason.code())).collect();
        assert_eq!(
            trial_reasons,
            vec![("lost", "no successful scanpaths"), ("trivial", "trivial trial")]
        );
        let line = log.to_json_lines();
        assert!(line.starts_with(r#"{"trial_id":"lost","source_id":"a","reason":"target not found"}"#));
    }

    #[test]
    fn keep_unsuccessful_retains_failures_of_successful_trials() {
        let trials = vec![trial("t", OFF, vec![sp("a", &[OFF, ON]), sp("b", &[OFF, OFF])])];
        let opts = EqualizeOptions { keep_unsuccessful: true };
        let (kept, log) = equalize_with(&trials, &spec(), opts);
        assert_eq!(kept[0].human_scanpaths.len(), 2);
        assert!(log.is_empty());
    }

    #[test]
    fn rescaling() {
        let p = sp("s", &[(100.0, 50.0)]);
        assert_eq!(rescale_scanpath(&p, (1000, 500), (1000, 500)), p);
        assert_eq!(rescale_scanpath(&p, (1000, 500), (500, 250)).fixations[0], Fixation::new(50.0, 25.0));
        let corner = sp("s", &[(999.0, 499.0)]);
        let r = rescale_scanpath(&corner, (1000, 500), (512, 564));
        assert!(r.fixations[0].is_inside(512, 564));
        assert!((r.fixations[0].x - 999.0 * 0.512).abs() < 1e-9);
    }

    #[test]
    fn budgets() {
        assert_eq!(default_max_fixations("Interiors"), Some(12));
        assert_eq!(default_max_fixations("COCOSearch18"), Some(10));
        assert_eq!(default_max_fixations("other"), None);
        // found at saccades 1, 2, 2, 3, 10 of 20 possible
        let mut paths = Vec::new();
        for n in [1usize, 2, 2, 3, 10] {
            let mut s = sp("h", &vec![OFF; n + 1]);
            s.target_found = true;
            s.max_fixations = 20;
            paths.push(s);
        }
        // plateau 1.0 at cap; first n reaching 0.95 is 10
        assert_eq!(saturation_max_fixations(&paths, 20), Some(10));
        // cap 5: plateau 0.8, 0.76 reached at n = 3
        assert_eq!(saturation_max_fixations(&paths, 5), Some(3));
    }

    fn arb_point() -> impl Strategy<Value = (f64, f64)> {
        prop_oneof![Just(ON), Just(OFF), (0.0f64..1024.0, 0.0f64..768.0)]
    }

    proptest! {
        #[test]
        fn truncation_is_idempotent(pts in prop::collection::vec(arb_point(), 1..12)) {
            let p = FoundPredicate::common(&spec());
            let once = truncate_at_target(&sp("s", &pts), &BOX, &p).unwrap();
            let twice = truncate_at_target(&once, &BOX, &p).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn equalize_partitions_scanpaths(
            inits in prop::collection::vec(prop_oneof![Just(ON), Just(OFF)], 1..6),
            paths in prop::collection::vec(prop::collection::vec(arb_point(), 0..16), 0..24),
        ) {
            let s = spec();
            let mut trials = Vec::new();
            for (i, init) in inits.iter().enumerate() {
                let mine: Vec<Scanpath> = paths
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| k % inits.len() == i)
                    .map(|(k, pts)| sp(&format!("s{k}"), pts))
                    .collect();
                trials.push(trial(&format!("t{i}"), *init, mine));
            }
            let (kept, log) = equalize(&trials, &s);
            let total_in: usize = trials.iter().map(|t| t.human_scanpaths.len()).sum();
            let total_out: usize = kept.iter().map(|t| t.human_scanpaths.len()).sum();
            prop_assert_eq!(total_in, total_out + log.scanpath_rejects().count());
            prop_assert_eq!(trials.len(), kept.len() + log.trial_rejects().count());
            let p = FoundPredicate::common(&s);
            for t in &kept {
                prop_assert!(!is_found(t.initial_fixation, &t.target_bbox, &p));
                prop_assert!(t.human_scanpaths.iter().all(|h| h.target_found && h.within_budget()));
                let orig = trials.iter().find(|o| o.trial_id == t.trial_id).unwrap();
                for h in &t.human_scanpaths {
                    let o = orig.human_scanpaths.iter().find(|o| o.source_id == h.source_id).unwrap();
                    prop_assert!(h.fixations.len() <= o.fixations.len());
                }
            }
            // equalizing again changes nothing
            let (again, log2) = equalize(&kept, &s);
            prop_assert_eq!(again, kept);
            prop_assert!(log2.is_empty());
        }
    }
}
