//! Efficiency and similarity report over a dataset and any number of model
//! scanpath files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use scanbench_core::io::{load_dataset, load_scanpaths};
use scanbench_core::metrics::{
    auc, cumulative_curve, human_auc, human_model, mm_correlation, per_subject_curves, wh_hm_mm, Correlation, MmOptions,
    MultiMatchScore, Simplify,
};
use scanbench_core::preprocess::{equalize_with, EqualizeOptions};
use scanbench_core::{Scanpath, Trial};

use crate::util::{ordered_map, write_json, write_manifest};

pub const REPORT_FILE: &str = "report.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const MM_FILE: &str = "mm.csv";
pub const SUBJECTS_FILE: &str = "subjects.csv";
pub const HUMANS: &str = "Humans";

#[derive(Clone, Debug)]
pub struct ReportOptions {
    pub correlation: Correlation,
    pub simplify: bool,
    pub mm_min_fixations_exclusive: usize,
    pub jobs: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            correlation: Correlation::Pearson,
            simplify: false,
            mm_min_fixations_exclusive: 2,
            jobs: 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct HumanSummary {
    pub auc: f64,
    pub curve: Vec<f64>,
    pub subjects: BTreeMap<String, f64>,
    pub scanpaths: usize,
    pub wh_mm: Option<MultiMatchScore>,
    pub wh_trials: usize,
}

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub label: String,
    pub file: String,
    pub trials: usize,
    pub found: usize,
    pub auc: f64,
    pub curve: Vec<f64>,
    pub hm_mm: Option<MultiMatchScore>,
    pub hm_trials: usize,
    /// Correlation of (hmMM avg, whMM avg) across trials; `None` prints "n/a".
    pub correlation: Option<f64>,
    pub correlation_note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub model: String,
    /// `None` on the human-only rows.
    pub found: Option<bool>,
    pub n_saccades: Option<usize>,
    pub hm_mm: Option<MultiMatchScore>,
    pub wh_mm: Option<MultiMatchScore>,
}

#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub max_fixations: u32,
    pub correlation_method: Correlation,
    pub humans: HumanSummary,
    pub models: Vec<ModelSummary>,
    pub trials: Vec<TrialRecord>,
    pub warnings: Vec<String>,
}

struct ModelInput {
    label: String,
    file: String,
    by_trial: BTreeMap<String, Scanpath>,
}

/// Scores humans and every model file against `dataset`; writes the report
/// files into `out` and returns the report.
pub fn cmd_report(dataset: &Path, model_files: &[PathBuf], out: &Path, opts: &ReportOptions) -> Result<MetricsReport> {
    let loaded = load_dataset(dataset).with_context(|| format!("loading dataset {}", dataset.display()))?;
    let spec = loaded.spec.clone();
    let (trials, _) = equalize_with(&loaded.trials, &spec, EqualizeOptions { keep_unsuccessful: true });
    let n_max = spec.max_fixations as usize;
    let mut warnings = Vec::new();

    let mm = MmOptions {
        simplify: opts
            .simplify
            .then(|| Simplify::defaults_for((spec.image_width as f64, spec.image_height as f64))),
        min_fixations_exclusive: opts.mm_min_fixations_exclusive,
        ..MmOptions::for_spec(&spec)
    };

    let subjects = per_subject_curves(&trials, n_max).context("human cumulative curves")?;
    let human_curve = mean_curve(subjects.values().map(|(c, _)| c.values.as_slice()), n_max);
    let wh: Vec<Option<MultiMatchScore>> = ordered_map(&trials, opts.jobs, |t| {
        wh_hm_mm(t, None, &mm).map(|r| r.wh)
    })?
    .into_iter()
    .collect::<scanbench_core::Result<_>>()?;
    let humans = HumanSummary {
        auc: human_auc(&subjects)?,
        curve: human_curve,
        subjects: subjects.iter().map(|(k, (_, a))| (k.clone(), *a)).collect(),
        scanpaths: trials.iter().map(|t| t.human_scanpaths.len()).sum(),
        wh_mm: MultiMatchScore::mean(&wh.iter().flatten().copied().collect::<Vec<_>>()),
        wh_trials: wh.iter().flatten().count(),
    };

    let inputs = read_models(model_files, &trials, &mut warnings)?;
    let mut models = Vec::new();
    let mut records = Vec::new();
    for input in &inputs {
        let covered: Vec<(&Trial, &Scanpath, &Option<MultiMatchScore>)> = trials
            .iter()
            .zip(&wh)
            .filter_map(|(t, w)| input.by_trial.get(&t.trial_id).map(|s| (t, s, w)))
            .collect();
        if covered.is_empty() {
            warnings.push(format!("{}: no scanpaths for any trial in the dataset", input.file));
            continue;
        }
        let missing = trials.len() - covered.len();
        if missing > 0 {
            warnings.push(format!("{}: {missing} dataset trials have no scanpath", input.file));
        }
        let hm: Vec<Option<MultiMatchScore>> = ordered_map(&covered, opts.jobs, |(t, s, _)| {
            human_model(&t.human_scanpaths, s, &mm)
        })?
        .into_iter()
        .collect::<scanbench_core::Result<_>>()?;

        let paths: Vec<Scanpath> = covered.iter().map(|(_, s, _)| (*s).clone()).collect();
        let curve = cumulative_curve(&paths, n_max)?;
        let mut points = Vec::new();
        for ((t, s, w), h) in covered.iter().zip(&hm) {
            if let (Some(h), Some(w)) = (h, w) {
                points.push((h.avg, w.avg));
            }
            records.push(TrialRecord {
                trial_id: t.trial_id.clone(),
                model: input.label.clone(),
                found: Some(s.target_found),
                n_saccades: Some(s.saccade_count()),
                hm_mm: *h,
                wh_mm: **w,
            });
        }
        let (correlation, correlation_note) = match mm_correlation(&points, opts.correlation) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        models.push(ModelSummary {
            label: input.label.clone(),
            file: input.file.clone(),
            trials: covered.len(),
            found: paths.iter().filter(|s| s.target_found).count(),
            auc: auc(&curve)?,
            curve: curve.values,
            hm_mm: MultiMatchScore::mean(&hm.iter().flatten().copied().collect::<Vec<_>>()),
            hm_trials: hm.iter().flatten().count(),
            correlation,
            correlation_note,
        });
    }
    if inputs.is_empty() {
        for (t, w) in trials.iter().zip(&wh) {
            records.push(TrialRecord {
                trial_id: t.trial_id.clone(),
                model: HUMANS.to_string(),
                found: None,
                n_saccades: None,
                hm_mm: None,
                wh_mm: *w,
            });
        }
    }

    let report = MetricsReport {
        dataset: spec.name.clone(),
        max_fixations: spec.max_fixations,
        correlation_method: opts.correlation,
        humans,
        models,
        trials: records,
        warnings,
    };
    write_outputs(out, &report, &subjects)?;
    Ok(report)
}

fn mean_curve<'a>(curves: impl Iterator<Item = &'a [f64]>, n: usize) -> Vec<f64> {
    let mut sum = vec![0.0; n];
    let mut count = 0usize;
    for c in curves {
        for (s, v) in sum.iter_mut().zip(c) {
            *s += v;
        }
        count += 1;
    }
    sum.into_iter().map(|s| if count == 0 { 0.0 } else { s / count as f64 }).collect()
}

fn read_models(files: &[PathBuf], trials: &[Trial], warnings: &mut Vec<String>) -> Result<Vec<ModelInput>> {
    let known: BTreeSet<&str> = trials.iter().map(|t| t.trial_id.as_str()).collect();
    let mut used_labels = BTreeSet::new();
    let mut out = Vec::new();
    for path in files {
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let records = load_scanpaths(path).with_context(|| format!("loading scanpaths {}", path.display()))?;
        let sources: BTreeSet<&str> = records.iter().map(|(_, s)| s.source_id.as_str()).collect();
        let base = match (sources.len(), sources.iter().next()) {
            (1, Some(s)) => s.to_string(),
            _ => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into()),
        };
        let mut label = base.clone();
        let mut k = 2;
        while !used_labels.insert(label.clone()) {
            label = format!("{base}#{k}");
            k += 1;
        }
        let mut by_trial = BTreeMap::new();
        for (id, s) in records {
            if !known.contains(id.as_str()) {
                warnings.push(format!("{file}: scanpath for unknown trial `{id}` ignored"));
                continue;
            }
            if by_trial.insert(id.clone(), s).is_some() {
                warnings.push(format!("{file}: several scanpaths for trial `{id}`; the last one is used"));
            }
        }
        out.push(ModelInput { label, file, by_trial });
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "n/a".into())
}

fn write_outputs(
    out: &Path,
    report: &MetricsReport,
    subjects: &BTreeMap<String, (scanbench_core::metrics::CumulativeCurve, f64)>,
) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join(REPORT_FILE), report)?;

    let mut curves = String::from("n,");
    curves.push_str(HUMANS);
    for m in &report.models {
        curves.push(',');
        curves.push_str(&csv_field(&m.label));
    }
    curves.push('\n');
    for n in 0..report.max_fixations as usize {
        write!(curves, "{},{}", n + 1, report.humans.curve[n])?;
        for m in &report.models {
            write!(curves, ",{}", m.curve[n])?;
        }
        curves.push('\n');
    }
    fs::write(out.join(CURVES_FILE), curves)?;

    let mut mm = String::from(
        "trial_id,model,hmMM_avg,whMM_avg,found,n_saccades,hmMM_shape,hmMM_direction,hmMM_length,hmMM_position,\
         whMM_shape,whMM_direction,whMM_length,whMM_position\n",
    );
    for r in &report.trials {
        let parts = |s: &Option<MultiMatchScore>| -> [String; 4] {
            match s {
                Some(s) => s.components().map(|v| v.to_string()),
                None => std::array::from_fn(|_| "n/a".to_string()),
            }
        };
        writeln!(
            mm,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.trial_id),
            csv_field(&r.model),
            fmt_opt(r.hm_mm.map(|s| s.avg)),
            fmt_opt(r.wh_mm.map(|s| s.avg)),
            r.found.map(|f| f.to_string()).unwrap_or_else(|| "n/a".into()),
            r.n_saccades.map(|n| n.to_string()).unwrap_or_else(|| "n/a".into()),
            parts(&r.hm_mm).join(","),
            parts(&r.wh_mm).join(",")
        )?;
    }
    fs::write(out.join(MM_FILE), mm)?;

    let mut subj = String::from("subject,auc");
    for n in 1..=report.max_fixations {
        write!(subj, ",n{n}")?;
    }
    subj.push('\n');
    for (id, (curve, a)) in subjects {
        write!(subj, "{},{a}", csv_field(id))?;
        for v in &curve.values {
            write!(subj, ",{v}")?;
        }
        subj.push('\n');
    }
    fs::write(out.join(SUBJECTS_FILE), subj)?;

    write_manifest(
        out,
        "report",
        serde_json::json!({
            "dataset": report.dataset,
            "models": report.models.iter().map(|m| (&m.label, &m.file)).collect::<Vec<_>>(),
        }),
        &[REPORT_FILE, CURVES_FILE, MM_FILE, SUBJECTS_FILE],
    )
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
