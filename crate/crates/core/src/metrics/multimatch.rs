//! Multi-Match scanpath similarity on four spatial dimensions.
//!
//! Scanpaths become lists of saccade vectors. The two lists are aligned by
//! the cheapest monotone path through the matrix of vector-difference norms,
//! and every aligned pair is scored on shape, length, direction and
//! position. The temporal dimension is not computed.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Fixation, Scanpath};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiMatchScore {
    pub shape: f64,
    pub direction: f64,
    pub length: f64,
    pub position: f64,
    pub avg: f64,
}

impl MultiMatchScore {
    pub fn new(shape: f64, direction: f64, length: f64, position: f64) -> Self {
        MultiMatchScore {
            shape,
            direction,
            length,
            position,
            avg: (shape + direction + length + position) / 4.0,
        }
    }

    pub fn components(&self) -> [f64; 4] {
        [self.shape, self.direction, self.length, self.position]
    }

    /// Componentwise mean; `None` for an empty slice.
    pub fn mean(scores: &[MultiMatchScore]) -> Option<MultiMatchScore> {
        if scores.is_empty() {
            return None;
        }
        let n = scores.len() as f64;
        let sum = |f: fn(&MultiMatchScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
        Some(MultiMatchScore::new(
            sum(|s| s.shape),
            sum(|s| s.direction),
            sum(|s| s.length),
            sum(|s| s.position),
        ))
    }
}

/// Thresholds for merging consecutive saccades before alignment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplify {
    /// Merge when the combined amplitude is below this, in pixels.
    pub amplitude: f64,
    /// Merge when the angle between the two vectors is below this, in radians.
    pub direction: f64,
}

impl Simplify {
    /// 10% of the screen diagonal and 45 degrees.
    pub fn defaults_for(screen: (f64, f64)) -> Self {
        Simplify {
            amplitude: 0.1 * screen.0.hypot(screen.1),
            direction: PI / 4.0,
        }
    }
}

/// A saccade: where it starts and its displacement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Saccade {
    pub start: (f64, f64),
    pub vector: (f64, f64),
}

impl Saccade {
    pub fn end(&self) -> (f64, f64) {
        (self.start.0 + self.vector.0, self.start.1 + self.vector.1)
    }

    fn amplitude(&self) -> f64 {
        self.vector.0.hypot(self.vector.1)
    }

    fn angle(&self) -> f64 {
        self.vector.1.atan2(self.vector.0)
    }
}

pub fn saccades(fixations: &[Fixation]) -> Vec<Saccade> {
    fixations
        .windows(2)
        .map(|w| Saccade {
            start: (w[0].x, w[0].y),
            vector: (w[1].x - w[0].x, w[1].y - w[0].y),
        })
        .collect()
}

fn angle_between(a: &Saccade, b: &Saccade) -> f64 {
    let d = (a.angle() - b.angle()).abs();
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

/// Repeatedly merges adjacent saccades that are short together or nearly
/// collinear, until no pair qualifies.
pub fn simplify(mut s: Vec<Saccade>, t: &Simplify) -> Vec<Saccade> {
    loop {
        let mut merged = Vec::with_capacity(s.len());
        let mut changed = false;
        let mut i = 0;
        while i < s.len() {
            if i + 1 < s.len() {
                let (a, b) = (s[i], s[i + 1]);
                let joined = Saccade {
                    start: a.start,
                    vector: (a.vector.0 + b.vector.0, a.vector.1 + b.vector.1),
                };
                if joined.amplitude() < t.amplitude || angle_between(&a, &b) < t.direction {
                    merged.push(joined);
                    changed = true;
                    i += 2;
                    continue;
                }
            }
            merged.push(s[i]);
            i += 1;
        }
        s = merged;
        if !changed || s.len() < 2 {
            return s;
        }
    }
}

fn diff_norm(a: &Saccade, b: &Saccade) -> f64 {
    (a.vector.0 - b.vector.0).hypot(a.vector.1 - b.vector.1)
}

/// Result of aligning two saccade lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub cost: f64,
    /// Aligned index pairs from `(0, 0)` to `(n - 1, m - 1)`.
    pub path: Vec<(usize, usize)>,
}

/// Cheapest monotone path through the cost matrix `|u_i - v_j|`, moving
/// right, down or diagonally. Path costs are summed from `(0, 0)` forward.
/// Among equally cheap paths the lexicographically smallest is returned.
pub fn align(a: &[Saccade], b: &[Saccade]) -> Alignment {
    let (n, m) = (a.len(), b.len());
    assert!(n > 0 && m > 0, "alignment needs at least one saccade on each side");
    let cost = |i: usize, j: usize| diff_norm(&a[i], &b[j]);
    let mut acc = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let best_pred = preds(i, j).map(|(pi, pj)| acc[pi * m + pj]).fold(f64::INFINITY, f64::min);
            let base = if i == 0 && j == 0 { 0.0 } else { best_pred };
            acc[i * m + j] = base + cost(i, j);
        }
    }

    // Cells from which the end is reachable along tight edges lie on some optimal path.
    let tight = |p: (usize, usize), q: (usize, usize)| {
        let best = preds(q.0, q.1).map(|(pi, pj)| acc[pi * m + pj]).fold(f64::INFINITY, f64::min);
        acc[p.0 * m + p.1] == best
    };
    let mut on_optimal = vec![false; n * m];
    on_optimal[n * m - 1] = true;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            if on_optimal[i * m + j] {
                for p in preds(i, j) {
                    if tight(p, (i, j)) {
                        on_optimal[p.0 * m + p.1] = true;
                    }
                }
            }
        }
    }

    let mut path = vec![(0, 0)];
    let mut at = (0, 0);
    while at != (n - 1, m - 1) {
        // (i, j+1) < (i+1, j) < (i+1, j+1) lexicographically.
        let next = [(at.0, at.1 + 1), (at.0 + 1, at.1), (at.0 + 1, at.1 + 1)]
            .into_iter()
            .find(|&q| q.0 < n && q.1 < m && on_optimal[q.0 * m + q.1] && tight(at, q))
            .expect("an optimal successor exists");
        path.push(next);
        at = next;
    }
    Alignment {
        cost: acc[n * m - 1],
        path,
    }
}

fn preds(i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    [
        (i > 0).then(|| (i - 1, j)),
        (j > 0).then(|| (i, j - 1)),
        (i > 0 && j > 0).then(|| (i - 1, j - 1)),
    ]
    .into_iter()
    .flatten()
}

/// Minimal alignment cost between the saccades of two fixation sequences.
pub fn alignment_cost(a: &[Fixation], b: &[Fixation]) -> Result<f64> {
    check(a)?;
    check(b)?;
    Ok(align(&saccades(a), &saccades(b)).cost)
}

fn check(f: &[Fixation]) -> Result<()> {
    if f.len() < 2 {
        return Err(Error::DegenerateScanpath(f.len()));
    }
    Ok(())
}

fn canonical_order(a: &[Saccade], b: &[Saccade]) -> Ordering {
    let key = |s: &Saccade| [s.start.0, s.start.1, s.vector.0, s.vector.1];
    for (x, y) in a.iter().zip(b) {
        for (p, q) in key(x).iter().zip(key(y)) {
            match p.total_cmp(&q) {
                Ordering::Equal => {}
                o => return o,
            }
        }
    }
    a.len().cmp(&b.len())
}

/// Multi-Match similarity of two scanpaths on a `screen` of `(w, h)` pixels.
pub fn multimatch(a: &Scanpath, b: &Scanpath, screen: (f64, f64), simplification: Option<&Simplify>) -> Result<MultiMatchScore> {
    multimatch_fixations(&a.fixations, &b.fixations, screen, simplification)
}

pub fn multimatch_fixations(
    a: &[Fixation],
    b: &[Fixation],
    screen: (f64, f64),
    simplification: Option<&Simplify>,
) -> Result<MultiMatchScore> {
    check(a)?;
    check(b)?;
    let prep = |f: &[Fixation]| {
        let s = saccades(f);
        match simplification {
            Some(t) => simplify(s, t),
            None => s,
        }
    };
    let (mut u, mut v) = (prep(a), prep(b));
    // Both operands are put in a fixed order so tie-breaking cannot depend on argument order.
    if canonical_order(&u, &v) == Ordering::Greater {
        std::mem::swap(&mut u, &mut v);
    }
    let alignment = align(&u, &v);
    let diag = screen.0.hypot(screen.1);
    let (mut shape, mut direction, mut length, mut position) = (0.0, 0.0, 0.0, 0.0);
    for &(i, j) in &alignment.path {
        let (x, y) = (&u[i], &v[j]);
        shape += diff_norm(x, y) / (2.0 * diag);
        length += (x.amplitude() - y.amplitude()).abs() / diag;
        direction += angle_between(x, y) / PI;
        let (ex, ey) = (x.end(), y.end());
        position += (ex.0 - ey.0).hypot(ex.1 - ey.1) / diag;
    }
    let k = alignment.path.len() as f64;
    let sim = |d: f64| (1.0 - d / k).clamp(0.0, 1.0);
    Ok(MultiMatchScore::new(sim(shape), sim(direction), sim(length), sim(position)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(points: &[(f64, f64)]) -> Vec<Fixation> {
        points.iter().map(|&(x, y)| Fixation::new(x, y)).collect()
    }

    #[test]
    fn identity() {
        let a = fx(&[(10.0, 10.0), (200.0, 40.0), (300.0, 500.0), (20.0, 700.0)]);
        let s = multimatch_fixations(&a, &a, (1024.0, 768.0), None).unwrap();
        assert_eq!(s.components(), [1.0; 4]);
        assert_eq!(s.avg, 1.0);
    }

    #[test]
    fn opposite_single_saccades() {
        let a = fx(&[(500.0, 400.0), (600.0, 400.0)]);
        let b = fx(&[(500.0, 400.0), (400.0, 400.0)]);
        let s = multimatch_fixations(&a, &b, (1024.0, 768.0), None).unwrap();
        let d = 1280.0;
        assert_eq!(s.direction, 0.0);
        assert_eq!(s.length, 1.0);
        assert!((s.shape - (1.0 - 200.0 / (2.0 * d))).abs() < 1e-15);
        assert!((s.position - (1.0 - 200.0 / d)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_scanpaths() {
        let a = fx(&[(1.0, 1.0)]);
        let b = fx(&[(1.0, 1.0), (2.0, 2.0)]);
        assert!(matches!(
            multimatch_fixations(&a, &b, (10.0, 10.0), None),
            Err(Error::DegenerateScanpath(1))
        ));
    }

    #[test]
    fn alignment_path_is_monotone_and_complete() {
        let a = fx(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (30.0, 10.0)]);
        let b = fx(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (10.0, 20.0), (40.0, 20.0)]);
        let al = align(&saccades(&a), &saccades(&b));
        assert_eq!(al.path.first(), Some(&(0, 0)));
        assert_eq!(al.path.last(), Some(&(2, 3)));
        for w in al.path.windows(2) {
            let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            assert!(di <= 1 && dj <= 1 && di + dj >= 1);
        }
    }

    #[test]
    fn ties_pick_lexicographically_smallest_path() {
        // Every cell costs zero, so every monotone path is optimal.
        let a = fx(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let al = align(&saccades(&a), &saccades(&a));
        assert_eq!(al.cost, 0.0);
        assert_eq!(al.path, vec![(0, 0), (0, 1), (0, 2), (1, 2), (2, 2)]);
    }

    #[test]
    fn simplification_merges_collinear_runs() {
        let a = fx(&[(0.0, 0.0), (100.0, 0.0), (200.0, 0.0), (200.0, 300.0)]);
        let t = Simplify::defaults_for((1024.0, 768.0));
        let s = simplify(saccades(&a), &t);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].vector, (200.0, 0.0));
        assert_eq!(s[1].vector, (0.0, 300.0));
    }
}
