use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DatasetSpec, Scanpath, Trial};

use super::curve::{auc, cumulative_curve, CumulativeCurve};
use super::multimatch::{multimatch, MultiMatchScore, Simplify};

/// Settings shared by every Multi-Match comparison in a report.
#[derive(Clone, Debug, PartialEq)]
pub struct MmOptions {
    pub screen: (f64, f64),
    pub simplify: Option<Simplify>,
    /// Scanpaths need strictly more fixations than this to be compared.
    pub min_fixations_exclusive: usize,
}

impl MmOptions {
    pub fn for_spec(spec: &DatasetSpec) -> Self {
        MmOptions {
            screen: (spec.image_width as f64, spec.image_height as f64),
            simplify: None,
            min_fixations_exclusive: 2,
        }
    }

    pub fn eligible(&self, s: &Scanpath) -> bool {
        s.target_found && s.fixations.len() > self.min_fixations_exclusive
    }

    fn compare(&self, a: &Scanpath, b: &Scanpath) -> Result<MultiMatchScore> {
        multimatch(a, b, self.screen, self.simplify.as_ref())
    }
}

/// Within-human and human-vs-model Multi-Match of one trial. Either side is
/// `None` when its preconditions fail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialMm {
    pub wh: Option<MultiMatchScore>,
    pub hm: Option<MultiMatchScore>,
}

/// Mean over unordered pairs of eligible human scanpaths; needs two of them.
pub fn within_human(humans: &[Scanpath], opts: &MmOptions) -> Result<Option<MultiMatchScore>> {
    let eligible: Vec<&Scanpath> = humans.iter().filter(|s| opts.eligible(s)).collect();
    let mut scores = Vec::new();
    for (i, a) in eligible.iter().enumerate() {
        for b in &eligible[i + 1..] {
            scores.push(opts.compare(a, b)?);
        }
    }
    Ok(MultiMatchScore::mean(&scores))
}

/// Mean over (model, human) pairs. Humans sharing the model's `source_id`
/// are left out, so a model that replays a subject is compared with the
/// other subjects only.
pub fn human_model(humans: &[Scanpath], model: &Scanpath, opts: &MmOptions) -> Result<Option<MultiMatchScore>> {
    if !opts.eligible(model) {
        return Ok(None);
    }
    let mut scores = Vec::new();
    for h in humans.iter().filter(|h| opts.eligible(h) && h.source_id != model.source_id) {
        scores.push(opts.compare(model, h)?);
    }
    Ok(MultiMatchScore::mean(&scores))
}

pub fn wh_hm_mm(trial: &Trial, model: Option<&Scanpath>, opts: &MmOptions) -> Result<TrialMm> {
    let wh = within_human(&trial.human_scanpaths, opts)?;
    let hm = match model {
        Some(m) => human_model(&trial.human_scanpaths, m, opts)?,
        None => None,
    };
    Ok(TrialMm { wh, hm })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    #[default]
    Pearson,
    Spearman,
}

/// Correlation between the two coordinates of `points`.
pub fn mm_correlation(points: &[(f64, f64)], method: Correlation) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    match method {
        Correlation::Pearson => pearson(&xs, &ys),
        Correlation::Spearman => pearson(&ranks(&xs), &ranks(&ys)),
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Cumulative curve and AUC of each human subject over the trials they saw.
pub fn per_subject_curves(trials: &[Trial], n_max: usize) -> Result<BTreeMap<String, (CumulativeCurve, f64)>> {
    let mut by_subject: BTreeMap<String, Vec<Scanpath>> = BTreeMap::new();
    for s in trials.iter().flat_map(|t| &t.human_scanpaths) {
        by_subject.entry(s.source_id.clone()).or_default().push(s.clone());
    }
    by_subject
        .into_iter()
        .map(|(id, paths)| {
            let curve = cumulative_curve(&paths, n_max)?;
            let area = auc(&curve)?;
            Ok((id, (curve, area)))
        })
        .collect()
}

/// Mean of the per-subject AUCs.
pub fn human_auc(subjects: &BTreeMap<String, (CumulativeCurve, f64)>) -> Result<f64> {
    if subjects.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(subjects.values().map(|(_, a)| a).sum::<f64>() / subjects.len() as f64)
}
