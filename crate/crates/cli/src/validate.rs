use std::fs;
use std::path::Path;

use scanbench_core::io::{decode_fgrid, load_dataset, load_scanpaths, DATASET_FILE};

/// Outcome of linting one path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub ok: bool,
    pub message: String,
}

/// Lints a dataset directory, an FGRID file or a scanpath file. FGRID files
/// are recognized by content; `expected` optionally pins their `(rows, cols)`.
pub fn cmd_validate(path: &Path, expected: Option<(usize, usize)>) -> Verdict {
    let bad = |message: String| Verdict { ok: false, message };
    if path.is_dir() {
        if !path.join(DATASET_FILE).is_file() {
            return bad(format!("{}: directory without {DATASET_FILE}", path.display()));
        }
        return match load_dataset(path) {
            Ok(d) if d.rejects.is_empty() => Verdict {
                ok: true,
                message: format!("{}: dataset `{}`, {} trials", path.display(), d.spec.name, d.trials.len()),
            },
            Ok(d) => {
                let mut msg = format!("{}: {} invalid records", path.display(), d.rejects.len());
                for r in d.rejects.entries() {
                    msg.push_str(&format!("\n  {}: {}", r.trial_id, r.reason));
                }
                bad(msg)
            }
            Err(e) => bad(format!("{}: {e}", path.display())),
        };
    }
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return bad(format!("{}: {e}", path.display())),
    };
    if bytes.starts_with(b"FGRID") {
        return match decode_fgrid(&bytes) {
            Ok(g) => match expected {
                Some(dims) if dims != g.dims() => bad(format!(
                    "{}: FGRID is {}x{}, expected {}x{}",
                    path.display(),
                    g.rows(),
                    g.cols(),
                    dims.0,
                    dims.1
                )),
                _ => Verdict {
                    ok: true,
                    message: format!("{}: FGRID {}x{}", path.display(), g.rows(), g.cols()),
                },
            },
            Err(e) => bad(format!("{}: {e}", path.display())),
        };
    }
    match load_scanpaths(path) {
        Ok(s) => Verdict {
            ok: true,
            message: format!("{}: {} scanpaths", path.display(), s.len()),
        },
        Err(e) => bad(format!("{}: not a dataset, FGRID or scanpath file ({e})", path.display())),
    }
}
