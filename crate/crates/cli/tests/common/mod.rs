//! Small on-disk datasets for end-to-end tests.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use scanbench_core::io::save_map;
use scanbench_core::Grid;

pub const HEIGHT: u32 = 96;
pub const WIDTH: u32 = 128;

pub struct FixtureTrial {
    pub id: &'static str,
    /// `(x, y, w, h)`.
    pub bbox: (i64, i64, i64, i64),
    pub initial: (f64, f64),
    /// One fixation list per subject `s1`, `s2`, `s3`.
    pub subjects: [Vec<(f64, f64)>; 3],
}

/// Five trials seen by three subjects. `t5` is trivial: its initial
/// fixation is already on the target.
pub fn trials() -> Vec<FixtureTrial> {
    vec![
        FixtureTrial {
            id: "t1",
            bbox: (96, 64, 16, 16),
            initial: (16.0, 16.0),
            subjects: [
                vec![(16.0, 16.0), (50.0, 40.0), (90.0, 60.0), (104.0, 72.0)],
                vec![(16.0, 16.0), (60.0, 20.0), (100.0, 70.0)],
                vec![(16.0, 16.0), (40.0, 70.0), (80.0, 80.0), (110.0, 75.0), (5.0, 5.0)],
            ],
        },
        FixtureTrial {
            id: "t2",
            bbox: (8, 70, 16, 16),
            initial: (112.0, 16.0),
            subjects: [
                vec![(112.0, 16.0), (70.0, 40.0), (20.0, 78.0)],
                vec![(112.0, 16.0), (90.0, 60.0), (40.0, 50.0), (16.0, 80.0)],
                vec![(112.0, 16.0), (100.0, 80.0), (60.0, 80.0), (12.0, 78.0)],
            ],
        },
        FixtureTrial {
            id: "t3",
            bbox: (56, 8, 16, 16),
            initial: (16.0, 80.0),
            subjects: [
                vec![(16.0, 80.0), (40.0, 50.0), (64.0, 16.0)],
                vec![(16.0, 80.0), (70.0, 60.0), (100.0, 30.0), (60.0, 10.0)],
                vec![(16.0, 80.0), (30.0, 30.0), (62.0, 14.0)],
            ],
        },
        FixtureTrial {
            id: "t4",
            bbox: (100, 10, 20, 16),
            initial: (20.0, 60.0),
            subjects: [
                vec![(20.0, 60.0), (60.0, 50.0), (90.0, 30.0), (110.0, 18.0)],
                vec![(20.0, 60.0), (108.0, 20.0)],
                vec![(20.0, 60.0), (50.0, 20.0), (80.0, 40.0), (115.0, 15.0)],
            ],
        },
        FixtureTrial {
            id: "t5",
            bbox: (40, 40, 16, 16),
            initial: (48.0, 48.0),
            subjects: [
                vec![(48.0, 48.0), (70.0, 70.0)],
                vec![(48.0, 48.0)],
                vec![(48.0, 48.0), (10.0, 10.0)],
            ],
        },
    ]
}

fn noise_image(seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = GrayImage::new(WIDTH, HEIGHT);
    for p in img.pixels_mut() {
        *p = Luma([rng.random_range(40..200)]);
    }
    img
}

/// Attention map: a peak on the target and a lower one elsewhere.
fn attention(bbox: (i64, i64, i64, i64)) -> Grid<f64> {
    let (cx, cy) = ((bbox.0 + bbox.2 / 2) as f64, (bbox.1 + bbox.3 / 2) as f64);
    let (dx, dy) = (WIDTH as f64 - cx, HEIGHT as f64 - cy);
    Grid::from_fn(HEIGHT as usize, WIDTH as usize, |r, c| {
        let g = |x: f64, y: f64, s: f64| (-((c as f64 - x).powi(2) + (r as f64 - y).powi(2)) / (2.0 * s * s)).exp();
        g(cx, cy, 6.0) + 0.6 * g(dx, dy, 10.0)
    })
}

/// Writes the raw dataset (images, templates, attention maps, JSON) under `dir`.
pub fn write_dataset(dir: &Path) -> PathBuf {
    let root = dir.join("raw");
    fs::create_dir_all(root.join("images")).unwrap();
    fs::create_dir_all(root.join("targets")).unwrap();
    fs::create_dir_all(root.join("maps")).unwrap();
    let mut records = Vec::new();
    for (k, t) in trials().into_iter().enumerate() {
        let img = noise_image(k as u64 + 1);
        let (x, y, w, h) = t.bbox;
        let template = image::imageops::crop_imm(&img, x as u32, y as u32, w as u32, h as u32).to_image();
        img.save(root.join(format!("images/{}.png", t.id))).unwrap();
        template.save(root.join(format!("targets/{}.png", t.id))).unwrap();
        save_map(&attention(t.bbox), root.join(format!("maps/{}.fgrid", t.id))).unwrap();
        let scanpaths: Vec<_> = t
            .subjects
            .iter()
            .enumerate()
            .map(|(s, f)| {
                json!({
                    "source_id": format!("s{}", s + 1),
                    "fixations": f.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>(),
                    "target_found": false,
                    "max_fixations": 6,
                })
            })
            .collect();
        records.push(json!({
            "trial_id": t.id,
            "image": format!("images/{}.png", t.id),
            "target_template": format!("targets/{}.png", t.id),
            "target_bbox": {"x": x, "y": y, "w": w, "h": h},
            "target_category": "patch",
            "initial_fixation": {"x": t.initial.0, "y": t.initial.1},
            "scanpaths": scanpaths,
        }));
    }
    let spec = json!({
        "name": "fixture",
        "image_height": HEIGHT,
        "image_width": WIDTH,
        "fovea_size": 32,
        "max_fixations": 6,
        "cell_size": 32,
        "color": false,
    });
    fs::write(root.join("dataset.json"), serde_json::to_vec_pretty(&spec).unwrap()).unwrap();
    fs::write(root.join("trials.json"), serde_json::to_vec_pretty(&records).unwrap()).unwrap();
    root
}

/// Writes a run config next to the datasets and returns its path.
pub fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec_pretty(&body).unwrap()).unwrap();
    path
}

/// Every file under `dir`, relative path and bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.push((p.strip_prefix(base).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
