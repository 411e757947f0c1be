use std::collections::BTreeMap;
use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use scanbench_core::greedy::{mean_target_size, run_greedy};
use scanbench_core::ibs::run_search;
use scanbench_core::io::{load_dataset, load_scanpaths, save_scanpaths, LoadedDataset};
use scanbench_core::preprocess::{truncate_at_target, FoundPredicate};
use scanbench_core::similarity::MapContext;
use scanbench_core::{Scalar, Scanpath, Trial};

use crate::config::{LoadedConfig, ModelKind, Precision, RunConfig};
use crate::util::{ordered_map, sha256_hex, write_manifest};

pub const SCANPATHS_FILE: &str = "scanpaths.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub trial_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub written: usize,
    pub skipped: Vec<Skipped>,
    pub warnings: Vec<String>,
}

impl RunSummary {
    pub fn is_partial(&self) -> bool {
        !self.skipped.is_empty()
    }
}

/// Runs the configured model over the dataset and writes one scanpath per
/// trial plus `manifest.json`. Fails when no trial could be simulated.
pub fn cmd_run(loaded: &LoadedConfig, jobs: usize) -> Result<RunSummary> {
    let cfg = &loaded.config;
    cfg.validate()?;
    let root = loaded.resolve(&cfg.dataset_root);
    let dataset = load_dataset(&root).with_context(|| format!("loading dataset {}", root.display()))?;
    let trials = select_trials(&dataset.trials, cfg);

    let mut warnings = Vec::new();
    let results: Vec<Result<Scanpath, String>> = match cfg.model {
        ModelKind::External => {
            let path = loaded.resolve(cfg.external_scanpaths.as_ref().expect("validated"));
            external(&dataset, &trials, &load_scanpaths(&path)?, &mut warnings)
        }
        _ => match cfg.precision {
            Precision::F64 => simulate::<f64>(loaded, &dataset, &trials, jobs)?,
            Precision::F32 => simulate::<f32>(loaded, &dataset, &trials, jobs)?,
        },
    };

    let mut written = Vec::new();
    let mut skipped = Vec::new();
    for (trial, r) in trials.iter().zip(results) {
        match r {
            Ok(s) => written.push((trial.trial_id.clone(), s)),
            Err(reason) => skipped.push(Skipped {
                trial_id: trial.trial_id.clone(),
                reason,
            }),
        }
    }
    if written.is_empty() {
        bail!(
            "all {} trials failed; first error: {}",
            skipped.len(),
            skipped.first().map(|s| s.reason.as_str()).unwrap_or("no trials selected")
        );
    }

    let out = loaded.resolve(&cfg.output_dir);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    save_scanpaths(&written, out.join(SCANPATHS_FILE))?;
    let config_json = serde_json::to_vec(cfg)?;
    write_manifest(
        &out,
        "run",
        serde_json::json!({
            "model": cfg.model.as_str(),
            "dataset": dataset.spec.name,
            "config_sha256": sha256_hex(&config_json),
            "config": cfg,
            "seed": cfg.seed(),
            "trials_selected": trials.len(),
            "scanpaths_written": written.len(),
            "skipped": &skipped,
            "warnings": &warnings,
        }),
        &[SCANPATHS_FILE],
    )?;
    Ok(RunSummary {
        written: written.len(),
        skipped,
        warnings,
    })
}

/// All trials, or a seeded random subset kept in dataset order.
pub fn select_trials(trials: &[Trial], cfg: &RunConfig) -> Vec<Trial> {
    match &cfg.subset {
        Some(s) if s.size < trials.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let mut picked = sample(&mut rng, trials.len(), s.size).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| trials[i].clone()).collect()
        }
        _ => trials.to_vec(),
    }
}

fn simulate<T: Scalar>(
    loaded: &LoadedConfig,
    dataset: &LoadedDataset,
    trials: &[Trial],
    jobs: usize,
) -> Result<Vec<Result<Scanpath, String>>> {
    let cfg = &loaded.config;
    let ctx = MapContext {
        dataset_root: dataset.root.clone(),
        config_dir: loaded.base_dir.clone(),
        cache_dir: cfg.cache_dir.as_ref().map(|p| loaded.resolve(p)),
        working_dims: None,
    };
    let spec = &dataset.spec;
    match cfg.model {
        ModelKind::Greedy => {
            let greedy = cfg.greedy.as_ref().expect("validated");
            let mean = mean_target_size(&dataset.trials)?;
            ordered_map(trials, jobs, |t| {
                run_greedy::<T>(t, greedy, spec, mean, &ctx)
                    .map(|o| o.scanpath)
                    .map_err(|e| relative_message(&e.to_string(), &ctx))
            })
        }
        ModelKind::Cibs | ModelKind::Sibs | ModelKind::Nnibs => {
            let ibs = cfg.ibs.as_ref().expect("validated");
            ordered_map(trials, jobs, |t| {
                run_search::<T>(t, ibs, spec, &ctx)
                    .map(|o| o.scanpath)
                    .map_err(|e| relative_message(&e.to_string(), &ctx))
            })
        }
        ModelKind::External => Err(anyhow!("external scanpaths are not simulated")),
    }
}

/// Strips the config and dataset directories from a diagnostic so that
/// manifests do not depend on where the run happened.
fn relative_message(msg: &str, ctx: &MapContext) -> String {
    let mut out = msg.to_string();
    for base in [&ctx.config_dir, &ctx.dataset_root] {
        let prefix = base.to_string_lossy();
        if !prefix.is_empty() {
            out = out.replace(&format!("{prefix}/"), "");
        }
    }
    out
}

/// Re-truncates ingested scanpaths with the common found criterion.
fn external(
    dataset: &LoadedDataset,
    trials: &[Trial],
    records: &[(String, Scanpath)],
    warnings: &mut Vec<String>,
) -> Vec<Result<Scanpath, String>> {
    let mut by_trial: BTreeMap<&str, &Scanpath> = BTreeMap::new();
    for (id, s) in records {
        if !dataset.trials.iter().any(|t| &t.trial_id == id) {
            warnings.push(format!("scanpath for unknown trial `{id}` ignored"));
        } else if by_trial.insert(id, s).is_some() {
            warnings.push(format!("several scanpaths for trial `{id}`; the last one is used"));
        }
    }
    let predicate = FoundPredicate::common(&dataset.spec);
    trials
        .iter()
        .map(|t| {
            let s = by_trial
                .get(t.trial_id.as_str())
                .ok_or_else(|| "no scanpath for this trial in the external file".to_string())?;
            let mut clamped = (*s).clone();
            for f in &mut clamped.fixations {
                *f = f.clamped(dataset.spec.image_width, dataset.spec.image_height);
            }
            truncate_at_target(&clamped, &t.target_bbox, &predicate).map_err(|e| e.to_string())
        })
        .collect()
}
