//! Ideal Bayesian searcher over a fovea-sized grid.
//!
//! The searcher keeps a posterior over grid cells. Fixating cell `f` adds
//! `d'(i, f)^2 * (W_i - 0.5)` to the log-posterior of every cell `i`, where
//! `d'` is a Gaussian visibility map centered on `f` and `W` is the target
//! similarity (plus optional response noise). The next fixation maximizes
//! the expected detectability `sum_i p_i * d'(i, k)^2` over unvisited cells
//! (`Ideal`), or simply the posterior (`MapGreedy`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::{load_map, resolve_path};
use crate::model::{bbox_grid_cells, grid_cell_of, Cell, DatasetSpec, Scanpath, Trial};
use crate::scalar::Scalar;
use crate::search::{trial_seed, StopReason};
use crate::similarity::{
    build_similarity, downsample_to_grid, expand_trial_path, MapContext, SimilaritySource, IBS_WORKING_DIMS,
};

pub const PRIOR_FLOOR: f64 = 1e-6;
const NOISE_EPS: f64 = 1e-6;
/// Scores within this relative distance of the best are treated as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSource {
    /// Saliency FGRID per trial; `{trial_id}`/`{image_stem}` placeholders allowed.
    ExternalMap { map_path: String },
    /// Gaussian centered on the grid, sigma as a fraction of each grid side.
    CenterGaussian { sigma_frac: f64 },
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    #[default]
    Ideal,
    MapGreedy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IbsConfig {
    pub similarity: SimilaritySource,
    pub prior: PriorSource,
    /// Visibility Gaussian width, in grid cells.
    #[serde(default = "default_sigma")]
    pub visibility_sigma: f64,
    /// d' at the fixated cell.
    #[serde(default = "default_peak")]
    pub visibility_peak: f64,
    #[serde(default)]
    pub selection_rule: SelectionRule,
    #[serde(default)]
    pub response_noise: f64,
    #[serde(default)]
    pub seed: u64,
    /// `(rows, cols)` at which template similarity maps are computed.
    #[serde(default = "default_template_resolution")]
    pub template_resolution: (usize, usize),
}

fn default_sigma() -> f64 {
    3.0
}

fn default_peak() -> f64 {
    3.0
}

fn default_template_resolution() -> (usize, usize) {
    IBS_WORKING_DIMS
}

impl IbsConfig {
    pub fn new(similarity: SimilaritySource, prior: PriorSource) -> Self {
        IbsConfig {
            similarity,
            prior,
            visibility_sigma: default_sigma(),
            visibility_peak: default_peak(),
            selection_rule: SelectionRule::Ideal,
            response_noise: 0.0,
            seed: 0,
            template_resolution: IBS_WORKING_DIMS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.visibility_sigma > 0.0 && self.visibility_sigma.is_finite()) {
            return Err(Error::InvalidConfig("visibility_sigma must be > 0".into()));
        }
        if !(self.visibility_peak > 0.0 && self.visibility_peak.is_finite()) {
            return Err(Error::InvalidConfig("visibility_peak must be > 0".into()));
        }
        if !(self.response_noise >= 0.0 && self.response_noise.is_finite()) {
            return Err(Error::InvalidConfig("response_noise must be >= 0".into()));
        }
        if self.template_resolution.0 == 0 || self.template_resolution.1 == 0 {
            return Err(Error::InvalidConfig("template_resolution must be positive".into()));
        }
        if let PriorSource::CenterGaussian { sigma_frac } = self.prior {
            if !(sigma_frac > 0.0) {
                return Err(Error::InvalidConfig("prior sigma_frac must be > 0".into()));
            }
        }
        Ok(())
    }

    /// Model name implied by the similarity source.
    pub fn model_name(&self) -> &'static str {
        match self.similarity {
            SimilaritySource::CrossCorrelation => "cIBS",
            SimilaritySource::Ssim => "sIBS",
            SimilaritySource::ExternalMap { .. } => "nnIBS",
        }
    }
}

/// Builds the grid-resolution prior: floored at [`PRIOR_FLOOR`] and normalized.
pub fn make_prior<T: Scalar>(trial: &Trial, cfg: &IbsConfig, spec: &DatasetSpec, ctx: &MapContext) -> Result<Grid<T>> {
    let (rows, cols) = spec.grid_dims();
    let raw = match &cfg.prior {
        PriorSource::Uniform => Grid::filled(rows, cols, T::one()),
        PriorSource::CenterGaussian { sigma_frac } => {
            let (cr, cc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
            let (sr, sc) = (sigma_frac * rows as f64, sigma_frac * cols as f64);
            Grid::from_fn(rows, cols, |r, c| {
                let dr = (r as f64 - cr) / sr;
                let dc = (c as f64 - cc) / sc;
                T::of((-(dr * dr + dc * dc) / 2.0).exp())
            })
        }
        PriorSource::ExternalMap { map_path } => {
            let path = resolve_path(&ctx.config_dir, &expand_trial_path(map_path, trial));
            let (h, w) = spec.image_dims();
            let full: Grid<T> = load_map(&path, h, w)?;
            downsample_to_grid(&full, spec)?
        }
    };
    Ok(finalize_prior(raw))
}

/// Normalize, floor every cell at [`PRIOR_FLOOR`], renormalize. All-zero
/// inputs fall back to uniform.
pub fn finalize_prior<T: Scalar>(raw: Grid<T>) -> Grid<T> {
    let normalized = raw
        .normalized()
        .unwrap_or_else(|| Grid::filled(raw.rows(), raw.cols(), T::one() / T::of_usize(raw.len())));
    let floored = normalized.map(|v| v.max(T::of(PRIOR_FLOOR)));
    floored.normalized().expect("floored grid has positive mass")
}

#[inline]
fn gaussian<T: Scalar>(d2: T, sigma: T) -> T {
    (-d2 / (T::of(2.0) * sigma * sigma)).exp()
}

/// d' map of a fixation: `peak * exp(-dist^2 / (2 sigma^2))`, distances in cells.
pub fn visibility<T: Scalar>(fix: Cell, sigma: T, peak: T, dims: (usize, usize)) -> Grid<T> {
    Grid::from_fn(dims.0, dims.1, |r, c| peak * gaussian(T::of(fix.dist2(Cell::new(r, c))), sigma))
}

/// Posterior over grid cells plus the fixations that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchState<T> {
    pub posterior: Grid<T>,
    log_posterior: Grid<T>,
    pub fixation_history: Vec<Cell>,
    pub step: usize,
}

impl<T: Scalar> SearchState<T> {
    pub fn new(prior: Grid<T>, first: Cell) -> Self {
        let log_posterior = prior.map(|v| v.ln());
        SearchState {
            posterior: prior,
            log_posterior,
            fixation_history: vec![first],
            step: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.posterior.dims()
    }

    pub fn current(&self) -> Cell {
        *self.fixation_history.last().expect("history starts non-empty")
    }

    /// Accumulates the evidence gathered at `fix`.
    pub fn accumulate(&mut self, fix: Cell, similarity: &Grid<T>, cfg: &IbsConfig, rng: &mut ChaCha8Rng) {
        assert_eq!(similarity.dims(), self.dims(), "similarity grid must match the posterior");
        let sigma = T::of(cfg.visibility_sigma);
        let peak = T::of(cfg.visibility_peak);
        let noise = (cfg.response_noise > 0.0).then(|| Normal::new(0.0, 1.0).expect("unit normal"));
        let cols = self.posterior.cols();
        for (k, lp) in self.log_posterior.values_mut().iter_mut().enumerate() {
            let cell = Cell::new(k / cols, k % cols);
            let d = peak * gaussian(T::of(fix.dist2(cell)), sigma);
            let mut response = similarity.values()[k];
            if let Some(normal) = &noise {
                let sd = cfg.response_noise / d.to_f64_lossy().max(NOISE_EPS);
                response = response + T::of(sd * normal.sample(rng));
            }
            *lp = *lp + d * d * (response - T::half());
        }
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let max = self.log_posterior.max();
        let mut total = T::zero();
        for (p, &lp) in self.posterior.values_mut().iter_mut().zip(self.log_posterior.values()) {
            *p = (lp - max).exp();
            total = total + *p;
        }
        let log_z = max + total.ln();
        for (p, lp) in self.posterior.values_mut().iter_mut().zip(self.log_posterior.values_mut()) {
            *p = (*p / total).max(T::min_positive_value());
            *lp = *lp - log_z;
        }
    }
}

/// Functional form of [`SearchState::accumulate`].
pub fn update_posterior<T: Scalar>(
    state: &SearchState<T>,
    fix: Cell,
    similarity: &Grid<T>,
    cfg: &IbsConfig,
    rng: &mut ChaCha8Rng,
) -> SearchState<T> {
    let mut next = state.clone();
    next.accumulate(fix, similarity, cfg, rng);
    next
}

/// `sum_i p_i * d'(i, k)^2` for every candidate `k`, using the separability
/// of the squared Gaussian.
pub fn expected_detectability<T: Scalar>(posterior: &Grid<T>, sigma: T, peak: T) -> Grid<T> {
    let (rows, cols) = posterior.dims();
    // d'^2 = peak^2 * exp(-dr^2 / sigma^2) * exp(-dc^2 / sigma^2)
    let half_sigma = sigma / T::of(2.0).sqrt();
    let kernel = |d: usize| gaussian(T::of_usize(d * d), half_sigma);
    let col_k: Vec<T> = (0..cols).map(kernel).collect();
    let row_k: Vec<T> = (0..rows).map(kernel).collect();

    let mut partial = Grid::filled(rows, cols, T::zero());
    for r in 0..rows {
        let row = posterior.row(r);
        for kc in 0..cols {
            let mut acc = T::zero();
            for (c, &p) in row.iter().enumerate() {
                acc = acc + p * col_k[c.abs_diff(kc)];
            }
            partial.set(r, kc, acc);
        }
    }
    let peak2 = peak * peak;
    Grid::from_fn(rows, cols, |kr, kc| {
        let mut acc = T::zero();
        for r in 0..rows {
            acc = acc + row_k[r.abs_diff(kr)] * partial.get(r, kc);
        }
        peak2 * acc
    })
}

/// Picks the next fixation among cells not yet visited.
///
/// Ties (within a relative 1e-12) go to the cell nearest the current
/// fixation, then to the first in row-major order.
pub fn select_next<T: Scalar>(state: &SearchState<T>, cfg: &IbsConfig) -> Result<Cell> {
    let scores = match cfg.selection_rule {
        SelectionRule::Ideal => expected_detectability(
            &state.posterior,
            T::of(cfg.visibility_sigma),
            T::of(cfg.visibility_peak),
        ),
        SelectionRule::MapGreedy => state.posterior.clone(),
    };
    let (rows, cols) = state.dims();
    let mut visited = vec![false; rows * cols];
    for c in &state.fixation_history {
        visited[c.row * cols + c.col] = true;
    }
    let best = scores
        .values()
        .iter()
        .zip(&visited)
        .filter(|(_, &v)| !v)
        .map(|(&s, _)| s)
        .fold(T::neg_infinity(), T::max);
    if best == T::neg_infinity() {
        return Err(Error::SearchExhausted);
    }
    let floor = best - best.abs() * T::of(TIE_TOLERANCE);
    let current = state.current();
    let mut choice: Option<(f64, Cell)> = None;
    for (k, &s) in scores.values().iter().enumerate() {
        if visited[k] || s < floor {
            continue;
        }
        let cell = Cell::new(k / cols, k % cols);
        let d2 = cell.dist2(current);
        if choice.is_none_or(|(best_d2, _)| d2 < best_d2) {
            choice = Some((d2, cell));
        }
    }
    Ok(choice.expect("at least one candidate").1)
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<T> {
    pub scanpath: Scanpath,
    pub cells: Vec<Cell>,
    pub stop: StopReason,
    pub final_state: SearchState<T>,
}

/// Runs the searcher on a trial, materializing the prior and similarity maps.
pub fn run_search<T: Scalar>(trial: &Trial, cfg: &IbsConfig, spec: &DatasetSpec, ctx: &MapContext) -> Result<SearchOutcome<T>> {
    cfg.validate()?;
    let prior = make_prior::<T>(trial, cfg, spec, ctx)?;
    let mut work_ctx = ctx.clone();
    work_ctx.working_dims = Some(cfg.template_resolution);
    let full = build_similarity::<T>(trial, &cfg.similarity, spec, &work_ctx)?;
    let similarity = downsample_to_grid(&full, spec)?;
    Ok(search_on_grids(trial, cfg, spec, prior, &similarity))
}

/// The search loop on grid-resolution prior and similarity maps.
pub fn search_on_grids<T: Scalar>(
    trial: &Trial,
    cfg: &IbsConfig,
    spec: &DatasetSpec,
    prior: Grid<T>,
    similarity: &Grid<T>,
) -> SearchOutcome<T> {
    let target = bbox_grid_cells(&trial.target_bbox, spec);
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, &trial.trial_id));
    let mut cell = grid_cell_of(trial.initial_fixation, spec);
    let mut state = SearchState::new(prior, cell);
    let mut fixations = vec![trial.initial_fixation];

    let stop = loop {
        if target.contains(&cell) {
            break StopReason::TargetFound;
        }
        if state.step >= spec.max_fixations as usize {
            break StopReason::BudgetReached;
        }
        state.accumulate(cell, similarity, cfg, &mut rng);
        match select_next(&state, cfg) {
            Ok(next) => {
                cell = next;
                state.fixation_history.push(next);
                state.step += 1;
                fixations.push(spec.cell_center(next));
            }
            Err(_) => break StopReason::Exhausted,
        }
    };

    SearchOutcome {
        scanpath: Scanpath {
            source_id: cfg.model_name().to_owned(),
            fixations,
            target_found: stop == StopReason::TargetFound,
            max_fixations: spec.max_fixations,
        },
        cells: state.fixation_history.clone(),
        stop,
        final_state: state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundingBox, Fixation};
    use rand::Rng;

    fn cfg() -> IbsConfig {
        IbsConfig::new(SimilaritySource::CrossCorrelation, PriorSource::Uniform)
    }

    fn spec(h: u32, w: u32) -> DatasetSpec {
        DatasetSpec {
            name: "t".into(),
            image_height: h,
            image_width: w,
            fovea_size: 32,
            max_fixations: 12,
            cell_size: 32,
            color: false,
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn uniform_and_gaussian_priors() {
        let s = spec(768, 1024);
        let ctx = MapContext::new(".");
        let t = trial_at(BoundingBox::new(0, 0, 32, 32), Fixation::new(500.0, 500.0));
        let u: Grid<f64> = make_prior(&t, &cfg(), &s, &ctx).unwrap();
        assert!(u.values().iter().all(|&v| (v - 1.0 / 768.0).abs() < 1e-15));

        let mut c = cfg();
        c.prior = PriorSource::CenterGaussian { sigma_frac: 0.25 };
        let odd = spec(25 * 32, 33 * 32);
        let g: Grid<f64> = make_prior(&t, &c, &odd, &ctx).unwrap();
        assert_eq!(g.argmax(), (12, 16));
        for k in 0..12 {
            assert!(g.get(12, 16 + k) > g.get(12, 17 + k));
            assert!(g.get(12 + k, 16) > g.get(13 + k, 16));
        }
        assert!((g.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prior_floor() {
        let mut raw = Grid::filled(2, 2, 0.0f64);
        raw.set(0, 0, 1.0);
        let p = finalize_prior(raw);
        assert!(p.values().iter().all(|&v| v > 0.0));
        assert!((p.sum() - 1.0).abs() < 1e-15);
        assert!((p.get(1, 1) - 1e-6 / (1.0 + 3e-6)).abs() < 1e-15);
    }

    #[test]
    fn missing_prior_names_path() {
        let mut c = cfg();
        c.prior = PriorSource::ExternalMap {
            map_path: "priors/{trial_id}.fgrid".into(),
        };
        let t = trial_at(BoundingBox::new(0, 0, 32, 32), Fixation::new(500.0, 500.0));
        let err = make_prior::<f64>(&t, &c, &spec(768, 1024), &MapContext::new("/data")).unwrap_err();
        assert!(err.to_string().contains("/data/priors/t.fgrid"), "{err}");
    }

    #[test]
    fn visibility_values() {
        let v = visibility::<f64>(Cell::new(2, 2), 1.0, 3.0, (5, 5));
        assert_eq!(v.get(2, 2), 3.0);
        assert!((v.get(2, 3) - 3.0 * (-0.5f64).exp()).abs() < 1e-15);
        for r in 0..5 {
            for c in 0..5 {
                let d2 = ((r as f64 - 2.0).powi(2) + (c as f64 - 2.0).powi(2)) as f64;
                assert!((v.get(r, c) - 3.0 * (-d2 / 2.0).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn neutral_evidence_leaves_posterior() {
        let prior = finalize_prior(Grid::from_fn(4, 5, |r, c| (r + 2 * c + 1) as f64));
        let state = SearchState::new(prior.clone(), Cell::new(0, 0));
        let next = update_posterior(&state, Cell::new(1, 3), &Grid::filled(4, 5, 0.5), &cfg(), &mut rng());
        for (a, b) in next.posterior.values().iter().zip(prior.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_update() {
        // Uniform 2x2 prior, W = [1, .5, .5, .5], peak 2 so the fixated cell has d'^2 = 4.
        let mut c = cfg();
        c.visibility_peak = 2.0;
        c.visibility_sigma = (1.0 / (2.0 * 2.0f64.ln())).sqrt();
        let v = visibility::<f64>(Cell::new(0, 0), c.visibility_sigma, 2.0, (2, 2));
        assert!((v.get(0, 1).powi(2) - 1.0).abs() < 1e-12);
        let sim = Grid::new(2, 2, vec![1.0, 0.5, 0.5, 0.5]).unwrap();
        let state = SearchState::new(Grid::filled(2, 2, 0.25), Cell::new(0, 0));
        let next = update_posterior(&state, Cell::new(0, 0), &sim, &c, &mut rng());
        let e2 = 2.0f64.exp();
        let want = [e2 / (e2 + 3.0), 1.0 / (e2 + 3.0), 1.0 / (e2 + 3.0), 1.0 / (e2 + 3.0)];
        for (a, b) in next.posterior.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((want[0] - 0.7112).abs() < 1e-4 && (want[1] - 0.0963).abs() < 1e-4);
    }

    #[test]
    fn deterministic_updates_commute() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let sim = Grid::from_fn(6, 7, |_, _| r.random::<f64>());
        let prior = finalize_prior(Grid::from_fn(6, 7, |_, _| r.random::<f64>()));
        let s0 = SearchState::new(prior, Cell::new(0, 0));
        let (a, b) = (Cell::new(1, 2), Cell::new(4, 6));
        let ab = update_posterior(&update_posterior(&s0, a, &sim, &cfg(), &mut rng()), b, &sim, &cfg(), &mut rng());
        let ba = update_posterior(&update_posterior(&s0, b, &sim, &cfg(), &mut rng()), a, &sim, &cfg(), &mut rng());
        for (x, y) in ab.posterior.values().iter().zip(ba.posterior.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    /// Exhaustive oracle over all candidates.
    fn detectability_oracle(p: &Grid<f64>, sigma: f64, peak: f64) -> Grid<f64> {
        let (rows, cols) = p.dims();
        Grid::from_fn(rows, cols, |kr, kc| {
            let mut acc = 0.0;
            for r in 0..rows {
                for c in 0..cols {
                    let d2 = (r as f64 - kr as f64).powi(2) + (c as f64 - kc as f64).powi(2);
                    let d = peak * (-d2 / (2.0 * sigma * sigma)).exp();
                    acc += p.get(r, c) * d * d;
                }
            }
            acc
        })
    }

    #[test]
    fn detectability_matches_exhaustive_sum() {
        let p = finalize_prior(Grid::from_fn(3, 3, |r, c| (r * 3 + c + 1) as f64 / 10.0));
        let got = expected_detectability(&p, 1.0, 3.0);
        let want = detectability_oracle(&p, 1.0, 3.0);
        for (a, b) in got.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let state = SearchState::new(p, Cell::new(0, 0));
        let mut c = cfg();
        c.visibility_sigma = 1.0;
        let next = select_next(&state, &c).unwrap();
        let mut best = (f64::NEG_INFINITY, Cell::new(0, 0));
        for r in 0..3 {
            for cc in 0..3 {
                if (r, cc) != (0, 0) && want.get(r, cc) > best.0 {
                    best = (want.get(r, cc), Cell::new(r, cc));
                }
            }
        }
        assert_eq!(next, best.1);

        let mut r = ChaCha8Rng::seed_from_u64(9);
        let big = finalize_prior(Grid::from_fn(9, 13, |_, _| r.random::<f64>()));
        let got = expected_detectability(&big, 2.5, 3.0);
        let want = detectability_oracle(&big, 2.5, 3.0);
        for (a, b) in got.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_and_symmetric_selection() {
        let mut point = Grid::filled(5, 5, 1e-9f64);
        point.set(3, 1, 1.0);
        let point = point.normalized().unwrap();
        for rule in [SelectionRule::Ideal, SelectionRule::MapGreedy] {
            let mut c = cfg();
            c.selection_rule = rule;
            let state = SearchState::new(point.clone(), Cell::new(0, 4));
            assert_eq!(select_next(&state, &c).unwrap(), Cell::new(3, 1));
        }
        let uniform = Grid::filled(7, 9, 1.0 / 63.0);
        let state = SearchState::new(uniform, Cell::new(0, 0));
        assert_eq!(select_next(&state, &cfg()).unwrap(), Cell::new(3, 4));
    }

    #[test]
    fn exhausted_grid_is_an_error() {
        let mut state = SearchState::new(Grid::filled(1, 2, 0.5f64), Cell::new(0, 0));
        state.fixation_history.push(Cell::new(0, 1));
        assert!(matches!(select_next(&state, &cfg()), Err(Error::SearchExhausted)));
    }

    fn trial_at(bbox: BoundingBox, init: Fixation) -> Trial {
        Trial {
            trial_id: "t".into(),
            image_ref: "i.png".into(),
            target_template_ref: None,
            target_bbox: bbox,
            target_category: "x".into(),
            initial_fixation: init,
            human_scanpaths: vec![],
        }
    }

    #[test]
    fn point_mass_prior_finds_target_immediately() {
        let s = spec(768, 1024);
        let t = trial_at(BoundingBox::new(640, 320, 32, 32), Fixation::new(16.0, 16.0));
        let mut raw = Grid::filled(24, 32, 0.0f64);
        raw.set(10, 20, 1.0);
        let out = search_on_grids(&t, &cfg(), &s, finalize_prior(raw), &Grid::filled(24, 32, 0.5));
        assert!(out.scanpath.target_found);
        assert_eq!(out.scanpath.fixations.len(), 2);
        assert_eq!(out.scanpath.fixations[1], Fixation::new(656.0, 336.0));
    }

    #[test]
    fn neutral_search_is_repeatable_and_never_revisits() {
        let s = spec(768, 1024);
        let t = trial_at(BoundingBox::new(0, 0, 32, 32), Fixation::new(1000.0, 700.0));
        let prior = finalize_prior(Grid::filled(24, 32, 1.0f64));
        let sim = Grid::filled(24, 32, 0.5);
        let a = search_on_grids(&t, &cfg(), &s, prior.clone(), &sim);
        let b = search_on_grids(&t, &cfg(), &s, prior, &sim);
        assert_eq!(a.scanpath, b.scanpath);
        assert!(!a.scanpath.target_found);
        assert_eq!(a.scanpath.fixations.len(), 13);
        let mut seen = std::collections::HashSet::new();
        assert!(a.cells.iter().all(|c| seen.insert(*c)));
    }

    #[test]
    fn stochastic_mode_is_seeded() {
        let s = spec(256, 256);
        let t = trial_at(BoundingBox::new(200, 200, 32, 32), Fixation::new(10.0, 10.0));
        let mut c = cfg();
        c.response_noise = 1.0;
        c.seed = 42;
        let prior = finalize_prior(Grid::filled(8, 8, 1.0f64));
        let sim = Grid::from_fn(8, 8, |r, cc| ((r * 8 + cc) % 5) as f64 / 4.0);
        let a = search_on_grids(&t, &c, &s, prior.clone(), &sim);
        let b = search_on_grids(&t, &c, &s, prior.clone(), &sim);
        assert_eq!(a.scanpath, b.scanpath);
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let (t, c, s, p, m) = (t.clone(), c.clone(), s.clone(), prior.clone(), sim.clone());
                std::thread::spawn(move || search_on_grids(&t, &c, &s, p, &m).scanpath)
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), a.scanpath);
        }
    }

    #[test]
    fn config_json_defaults() {
        let c: IbsConfig = serde_json::from_str(
            r#"{"similarity": {"kind": "external_map", "map_path": "maps/{trial_id}.fgrid"},
                "prior": {"kind": "center_gaussian", "sigma_frac": 0.25}}"#,
        )
        .unwrap();
        assert_eq!(c.visibility_sigma, 3.0);
        assert_eq!(c.visibility_peak, 3.0);
        assert_eq!(c.response_noise, 0.0);
        assert_eq!(c.selection_rule, SelectionRule::Ideal);
        assert_eq!(c.model_name(), "nnIBS");
        let mut bad = c.clone();
        bad.visibility_sigma = 0.0;
        assert!(bad.validate().is_err());
    }
}
