use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use scanbench_core::io::{load_dataset, save_dataset};
use scanbench_core::preprocess::equalize;
use scanbench_core::Trial;

use crate::util::{absolute, write_manifest};

pub const REJECTS_FILE: &str = "rejects.jsonl";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PreprocessSummary {
    pub trials_kept: usize,
    pub trials_dropped: usize,
    pub scanpaths_kept: usize,
    pub scanpaths_dropped: usize,
}

/// Loads the dataset at `root`, equalizes it and writes it to `out` together
/// with the reject log. Image paths are rewritten relative to `out`.
pub fn cmd_preprocess(root: &Path, out: &Path) -> Result<PreprocessSummary> {
    let loaded = load_dataset(root).with_context(|| format!("loading dataset {}", root.display()))?;
    let (kept, eq_log) = equalize(&loaded.trials, &loaded.spec);
    let mut log = loaded.rejects;
    log.extend(eq_log);

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let (src, dst) = (absolute(root)?, absolute(out)?);
    let relocated: Vec<Trial> = kept
        .into_iter()
        .map(|mut t| {
            t.image_ref = relocate(&t.image_ref, &src, &dst);
            t.target_template_ref = t.target_template_ref.map(|p| relocate(&p, &src, &dst));
            t
        })
        .collect();
    save_dataset(out, &loaded.spec, &relocated)?;
    let rejects_path = out.join(REJECTS_FILE);
    fs::write(&rejects_path, log.to_json_lines()).with_context(|| format!("writing {}", rejects_path.display()))?;

    let summary = PreprocessSummary {
        trials_kept: relocated.len(),
        trials_dropped: log.trial_rejects().count(),
        scanpaths_kept: relocated.iter().map(|t| t.human_scanpaths.len()).sum(),
        scanpaths_dropped: log.scanpath_rejects().count(),
    };
    write_manifest(
        out,
        "preprocess",
        serde_json::json!({ "dataset": loaded.spec.name, "summary": &summary }),
        &["dataset.json", "trials.json", REJECTS_FILE],
    )?;
    Ok(summary)
}

fn relocate(p: &Path, from: &Path, to: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    let target = crate::util::normalize_lexically(&from.join(p));
    pathdiff::diff_paths(&target, to).unwrap_or(target)
}
