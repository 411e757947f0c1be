//! Target similarity and attention maps.

mod fft;
mod ncc;
mod ssim;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::{load_image_gray, load_image_rgb, load_map, read_map, resolve_path, save_map};
use crate::model::{DatasetSpec, Trial};
use crate::scalar::Scalar;

pub use ncc::{cross_correlation_color, cross_correlation_map};
pub use ssim::{ssim_color, ssim_map, ssim_map_with, SsimParams};

/// Resolution at which template-based maps are computed for the Bayesian searchers.
pub const IBS_WORKING_DIMS: (usize, usize) = (768, 1024);

/// Where a trial's similarity (or attention) map comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimilaritySource {
    CrossCorrelation,
    Ssim,
    /// A precomputed FGRID per trial. `map_path` may contain `{trial_id}`
    /// and `{image_stem}` placeholders.
    ExternalMap { map_path: String },
}

impl SimilaritySource {
    pub fn kind(&self) -> &'static str {
        match self {
            SimilaritySource::CrossCorrelation => "cross_correlation",
            SimilaritySource::Ssim => "ssim",
            SimilaritySource::ExternalMap { .. } => "external_map",
        }
    }
}

/// Expands `{trial_id}` and `{image_stem}` in a per-trial path pattern.
pub fn expand_trial_path(pattern: &str, trial: &Trial) -> PathBuf {
    let stem = trial
        .image_ref
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    PathBuf::from(pattern.replace("{trial_id}", &trial.trial_id).replace("{image_stem}", &stem))
}

/// File locations needed to materialize maps.
#[derive(Clone, Debug)]
pub struct MapContext {
    /// Base for image and template paths stored in the dataset.
    pub dataset_root: PathBuf,
    /// Base for map path patterns given in a run config.
    pub config_dir: PathBuf,
    /// Optional FGRID cache for computed template maps.
    pub cache_dir: Option<PathBuf>,
    /// Resolution at which template maps are computed; `None` keeps the dataset resolution.
    pub working_dims: Option<(usize, usize)>,
}

impl MapContext {
    pub fn new(dataset_root: impl Into<PathBuf>) -> Self {
        let root = dataset_root.into();
        MapContext {
            config_dir: root.clone(),
            dataset_root: root,
            cache_dir: None,
            working_dims: None,
        }
    }
}

/// Builds the full-resolution similarity map of a trial, min-max normalized
/// to `[0, 1]` (constant maps become 0.5 everywhere).
///
/// Template maps are computed at `ctx.working_dims` when set and brought back
/// to the dataset resolution. Raw maps are kept at binary32 precision so that
/// cached and freshly computed maps are identical.
pub fn build_similarity<T: Scalar>(
    trial: &Trial,
    src: &SimilaritySource,
    spec: &DatasetSpec,
    ctx: &MapContext,
) -> Result<Grid<T>> {
    let (h, w) = spec.image_dims();
    let raw: Grid<T> = match src {
        SimilaritySource::ExternalMap { map_path } => {
            let path = resolve_path(&ctx.config_dir, &expand_trial_path(map_path, trial));
            load_map(&path, h, w)?
        }
        SimilaritySource::CrossCorrelation | SimilaritySource::Ssim => {
            let raw = template_map::<T>(trial, src, spec, ctx)?;
            if raw.dims() == (h, w) {
                raw
            } else {
                raw.resample_bilinear(h, w)
            }
        }
    };
    Ok(raw.min_max_normalized())
}

fn template_map<T: Scalar>(
    trial: &Trial,
    src: &SimilaritySource,
    spec: &DatasetSpec,
    ctx: &MapContext,
) -> Result<Grid<T>> {
    let template_ref = trial
        .target_template_ref
        .as_ref()
        .ok_or_else(|| Error::TemplateRequired(trial.trial_id.clone()))?;
    let image_path = resolve_path(&ctx.dataset_root, &trial.image_ref);
    let template_path = resolve_path(&ctx.dataset_root, template_ref);
    let work = ctx.working_dims.unwrap_or(spec.image_dims());

    let cache_file = match &ctx.cache_dir {
        Some(dir) => {
            let key = cache_key(&image_path, &template_path, src, spec, work)?;
            let file = dir.join(format!("{key}.fgrid"));
            if file.exists() {
                return Ok(read_map(&file)?.cast());
            }
            Some(file)
        }
        None => None,
    };

    let planes = |path: &Path| -> Result<Vec<Grid<T>>> {
        if spec.color {
            Ok(load_image_rgb::<T>(path)?.into())
        } else {
            Ok(vec![load_image_gray::<T>(path)?])
        }
    };
    let image = planes(&image_path)?;
    let template = planes(&template_path)?;

    // images are first brought to the dataset resolution, then to the working
    // resolution; templates follow the same scale factors
    let (ih, iw) = image[0].dims();
    let sy = work.0 as f64 / ih as f64;
    let sx = work.1 as f64 / iw as f64;
    let (th, tw) = template[0].dims();
    let t_dims = (
        ((th as f64 * sy).round() as usize).clamp(1, work.0),
        ((tw as f64 * sx).round() as usize).clamp(1, work.1),
    );
    let image: Vec<Grid<T>> = image.iter().map(|p| p.resample_bilinear(work.0, work.1)).collect();
    let template: Vec<Grid<T>> = template
        .iter()
        .map(|p| p.resample_bilinear(t_dims.0, t_dims.1))
        .collect();

    let raw = match (src, spec.color) {
        (SimilaritySource::CrossCorrelation, false) => cross_correlation_map(&image[0], &template[0])?,
        (SimilaritySource::CrossCorrelation, true) => cross_correlation_color(&image, &template)?,
        (SimilaritySource::Ssim, false) => ssim_map(&image[0], &template[0])?,
        (SimilaritySource::Ssim, true) => ssim_color(&image, &template)?,
        (SimilaritySource::ExternalMap { .. }, _) => unreachable!("external maps are not computed"),
    };
    // binary32 round trip, the precision of the cache format
    let raw: Grid<T> = raw.cast::<f32>().cast();
    if let Some(file) = cache_file {
        write_cache(&raw, &file)?;
    }
    Ok(raw)
}

fn cache_key(
    image: &Path,
    template: &Path,
    src: &SimilaritySource,
    spec: &DatasetSpec,
    work: (usize, usize),
) -> Result<String> {
    let mut hasher = Sha256::new();
    for p in [image, template] {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    hasher.update(src.kind().as_bytes());
    hasher.update(format!("|color={}|work={}x{}", spec.color, work.0, work.1).as_bytes());
    Ok(hex::encode(hasher.finalize()))
}

fn write_cache<T: Scalar>(map: &Grid<T>, file: &Path) -> Result<()> {
    if let Some(dir) = file.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    // unique temp name so concurrent writers never expose a partial file
    let tmp = file.with_extension(format!("tmp{:?}", std::thread::current().id()).replace(['(', ')'], ""));
    save_map(map, &tmp)?;
    fs::rename(&tmp, file).map_err(|e| Error::io(file, e))
}

/// Block-mean downsampling of a full-resolution map onto the search grid.
/// Partial edge cells average the pixels they actually cover.
pub fn downsample_to_grid<T: Scalar>(map: &Grid<T>, spec: &DatasetSpec) -> Result<Grid<T>> {
    if map.dims() != spec.image_dims() {
        return Err(Error::DimensionMismatch {
            expected: spec.image_dims(),
            actual: map.dims(),
        });
    }
    Ok(block_mean(map, spec.cell_size as usize))
}

pub(crate) fn block_mean<T: Scalar>(map: &Grid<T>, cell: usize) -> Grid<T> {
    let (h, w) = map.dims();
    let rows = h.div_ceil(cell);
    let cols = w.div_ceil(cell);
    let mut sums = vec![T::zero(); rows * cols];
    for r in 0..h {
        let gr = r / cell;
        for (c, &v) in map.row(r).iter().enumerate() {
            let k = gr * cols + c / cell;
            sums[k] = sums[k] + v;
        }
    }
    Grid::from_fn(rows, cols, |gr, gc| {
        let nr = ((gr + 1) * cell).min(h) - gr * cell;
        let nc = ((gc + 1) * cell).min(w) - gc * cell;
        sums[gr * cols + gc] / T::of_usize(nr * nc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::save_map;
    use crate::model::{BoundingBox, Fixation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(h: u32, w: u32, cell: u32) -> DatasetSpec {
        DatasetSpec {
            name: "t".into(),
            image_height: h,
            image_width: w,
            fovea_size: cell,
            max_fixations: 4,
            cell_size: cell,
            color: false,
        }
    }

    fn trial(template: Option<&str>) -> Trial {
        Trial {
            trial_id: "t7".into(),
            image_ref: "img.png".into(),
            target_template_ref: template.map(PathBuf::from),
            target_bbox: BoundingBox::new(8, 8, 6, 6),
            target_category: "x".into(),
            initial_fixation: Fixation::new(1.0, 1.0),
            human_scanpaths: vec![],
        }
    }

    #[test]
    fn downsample_examples() {
        let s = spec(64, 64, 32);
        let constant = Grid::filled(64, 64, 0.3f64);
        let g = downsample_to_grid(&constant, &s).unwrap();
        assert_eq!(g.dims(), (2, 2));
        assert!(g.values().iter().all(|v| (v - 0.3).abs() < 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Grid::from_fn(64, 64, |_, _| rng.random::<f64>());
        let g = downsample_to_grid(&m, &s).unwrap();
        let mut block = 0.0;
        for r in 0..32 {
            for c in 0..32 {
                block += m.get(r, c);
            }
        }
        assert!((g.get(0, 0) - block / 1024.0).abs() < 1e-12);
        assert!((g.mean() - m.mean()).abs() < 1e-9);
    }

    #[test]
    fn partial_cells_average_actual_pixels() {
        let s = spec(70, 70, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = Grid::from_fn(70, 70, |_, _| rng.random::<f64>());
        let g = downsample_to_grid(&m, &s).unwrap();
        assert_eq!(g.dims(), (3, 3));
        for gr in 0..3 {
            for gc in 0..3 {
                let (mut sum, mut n) = (0.0, 0);
                for r in 0..70 {
                    for c in 0..70 {
                        if r / 32 == gr && c / 32 == gc {
                            sum += m.get(r, c);
                            n += 1;
                        }
                    }
                }
                assert!((g.get(gr, gc) - sum / n as f64).abs() < 1e-12);
            }
        }
        assert!(downsample_to_grid(&m, &spec(64, 70, 32)).is_err());
    }

    #[test]
    fn external_maps_are_min_max_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(4, 4, 2);
        let raw = Grid::from_fn(4, 4, |r, c| (r * 4 + c) as f32 / 15.0 * 2.0 - 1.0);
        save_map(&raw, dir.path().join("t7.fgrid")).unwrap();
        let src = SimilaritySource::ExternalMap {
            map_path: "{trial_id}.fgrid".into(),
        };
        let ctx = MapContext::new(dir.path());
        let got: Grid<f64> = build_similarity(&trial(None), &src, &s, &ctx).unwrap();
        // negative maps are shifted on load; min-max then maps back to (v - min) / span
        for (g, r) in got.values().iter().zip(raw.values()) {
            let expected = (*r as f64 + 1.0) / 2.0;
            assert!((g - expected).abs() < 1e-6);
        }

        let unit = Grid::from_fn(4, 4, |r, c| if (r, c) == (0, 0) { 0.0f32 } else if (r, c) == (3, 3) { 1.0 } else { 0.25 });
        save_map(&unit, dir.path().join("t7.fgrid")).unwrap();
        let got: Grid<f32> = build_similarity(&trial(None), &src, &s, &ctx).unwrap();
        assert_eq!(got, unit);
    }

    #[test]
    fn template_kinds_require_template() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = MapContext::new(dir.path());
        let err = build_similarity::<f64>(&trial(None), &SimilaritySource::Ssim, &spec(4, 4, 2), &ctx).unwrap_err();
        assert!(matches!(err, Error::TemplateRequired(id) if id == "t7"));
    }

    #[test]
    fn template_map_from_images_is_cached() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let img = image::GrayImage::from_fn(24, 20, |_, _| image::Luma([rng.random::<u8>()]));
        img.save(dir.path().join("img.png")).unwrap();
        let tpl = image::imageops::crop_imm(&img, 8, 8, 6, 6).to_image();
        tpl.save(dir.path().join("tpl.png")).unwrap();

        let s = spec(20, 24, 4);
        let mut ctx = MapContext::new(dir.path());
        ctx.cache_dir = Some(dir.path().join("cache"));
        let t = trial(Some("tpl.png"));
        let first: Grid<f64> = build_similarity(&t, &SimilaritySource::CrossCorrelation, &s, &ctx).unwrap();
        assert_eq!(first.argmax(), (11, 11));
        assert_eq!(fs::read_dir(dir.path().join("cache")).unwrap().count(), 1);
        let second: Grid<f64> = build_similarity(&t, &SimilaritySource::CrossCorrelation, &s, &ctx).unwrap();
        assert_eq!(first, second);
        ctx.cache_dir = None;
        let uncached: Grid<f64> = build_similarity(&t, &SimilaritySource::CrossCorrelation, &s, &ctx).unwrap();
        assert_eq!(first, uncached);
        assert!(first.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn normalization_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = Grid::from_fn(5, 7, |_, _| rng.random_range(-1.0..1.0f64));
        let a = m.min_max_normalized();
        let b = m.map(|v| 3.0 * v + 11.0).min_max_normalized();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
