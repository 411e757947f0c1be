use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Scanpath;

/// Fraction of searches that found the target within `n` saccades, for
/// `n = 1..=n_max` (`values[n - 1]`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CumulativeCurve {
    pub values: Vec<f64>,
}

impl CumulativeCurve {
    pub fn n_max(&self) -> usize {
        self.values.len()
    }
}

pub fn cumulative_curve(scanpaths: &[Scanpath], n_max: usize) -> Result<CumulativeCurve> {
    if scanpaths.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut hits = vec![0usize; n_max + 1];
    for s in scanpaths.iter().filter(|s| s.target_found) {
        if let Some(slot) = hits.get_mut(s.saccade_count()) {
            *slot += 1;
        }
    }
    let total = scanpaths.len() as f64;
    let mut running = hits[0];
    let values = (1..=n_max)
        .map(|n| {
            running += hits[n];
            running as f64 / total
        })
        .collect();
    Ok(CumulativeCurve { values })
}

/// Trapezoidal area under the curve on a unit-spaced budget axis, divided
/// by the axis length `n_max - 1`.
pub fn auc(curve: &CumulativeCurve) -> Result<f64> {
    let v = &curve.values;
    if v.len() < 2 {
        return Err(Error::CurveTooShort(v.len()));
    }
    let area: f64 = v.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum();
    Ok(area / (v.len() - 1) as f64)
}
