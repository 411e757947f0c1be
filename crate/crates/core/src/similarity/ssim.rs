//! Mean SSIM between a template and the image region centered on each pixel.
//!
//! Regions that overflow the image are compared against the template with
//! the overflowing template pixels trimmed away. Inside a region, local
//! statistics use an 11-tap Gaussian window (sigma 1.5) truncated to the
//! region and renormalized; the region's score is the mean of the local SSIM
//! values.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::Grid;
use crate::scalar::Scalar;

use super::ncc::{check_template, weighted_channels};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    pub dynamic_range: f64,
    pub k1: f64,
    pub k2: f64,
    pub sigma: f64,
    /// Taps on each side of the window center.
    pub radius: usize,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            dynamic_range: 255.0,
            k1: 0.01,
            k2: 0.03,
            sigma: 1.5,
            radius: 5,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    fn taps(&self) -> Vec<f64> {
        let r = self.radius as isize;
        (-r..=r)
            .map(|k| (-((k * k) as f64) / (2.0 * self.sigma * self.sigma)).exp())
            .collect()
    }
}

pub fn ssim_map<T: Scalar>(image: &Grid<T>, template: &Grid<T>) -> Result<Grid<T>> {
    ssim_map_with(image, template, &SsimParams::default())
}

pub fn ssim_map_with<T: Scalar>(image: &Grid<T>, template: &Grid<T>, params: &SsimParams) -> Result<Grid<T>> {
    check_template(image, template)?;
    let (h, w) = image.dims();
    let (th, tw) = template.dims();
    let (ar, ac) = (th / 2, tw / 2);
    let img: Vec<f64> = image.values().iter().map(|v| v.to_f64_lossy()).collect();
    let tpl: Vec<f64> = template.values().iter().map(|v| v.to_f64_lossy()).collect();
    let taps = params.taps();
    let (c1, c2) = (params.c1(), params.c2());
    let full = TemplateMoments::new(&tpl, th, tw, &taps);

    let rows: Vec<Vec<T>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut scratch = Scratch::default();
            let ir0 = r as isize - ar as isize;
            let (y0, y1) = (ir0.max(0) as usize, ((ir0 + th as isize) as usize).min(h));
            (0..w)
                .map(|c| {
                    let ic0 = c as isize - ac as isize;
                    let (x0, x1) = (ic0.max(0) as usize, ((ic0 + tw as isize) as usize).min(w));
                    let region = Region {
                        img: &img,
                        img_cols: w,
                        tpl: &tpl,
                        tpl_cols: tw,
                        img_origin: (y0, x0),
                        tpl_origin: ((y0 as isize - ir0) as usize, (x0 as isize - ic0) as usize),
                        dims: (y1 - y0, x1 - x0),
                    };
                    T::of(region.mean_ssim(&taps, c1, c2, &full, &mut scratch))
                })
                .collect()
        })
        .collect();
    Grid::new(h, w, rows.into_iter().flatten().collect())
}

/// Per-channel SSIM averaged with the grayscale weights.
pub fn ssim_color<T: Scalar>(image: &[Grid<T>], template: &[Grid<T>]) -> Result<Grid<T>> {
    weighted_channels(image, template, ssim_map)
}

struct Region<'a> {
    img: &'a [f64],
    img_cols: usize,
    tpl: &'a [f64],
    tpl_cols: usize,
    img_origin: (usize, usize),
    tpl_origin: (usize, usize),
    dims: (usize, usize),
}

/// Blurred template mean and second moment over the whole template, shared by
/// every region that is not trimmed.
struct TemplateMoments {
    dims: (usize, usize),
    mean: Vec<f64>,
    sq: Vec<f64>,
}

impl TemplateMoments {
    fn new(tpl: &[f64], rows: usize, cols: usize, taps: &[f64]) -> Self {
        let mut tmp = Vec::new();
        let mut mean = tpl.to_vec();
        let mut sq: Vec<f64> = tpl.iter().map(|v| v * v).collect();
        blur_truncated(&mut mean, &mut tmp, rows, cols, taps);
        blur_truncated(&mut sq, &mut tmp, rows, cols, taps);
        TemplateMoments { dims: (rows, cols), mean, sq }
    }
}

#[derive(Default)]
struct Scratch {
    planes: [Vec<f64>; 5],
    tmp: Vec<f64>,
}

impl Region<'_> {
    fn mean_ssim(&self, taps: &[f64], c1: f64, c2: f64, full: &TemplateMoments, s: &mut Scratch) -> f64 {
        let (rh, rw) = self.dims;
        let untrimmed = self.dims == full.dims;
        let n = rh * rw;
        for p in s.planes.iter_mut() {
            p.clear();
            p.resize(n, 0.0);
        }
        for i in 0..rh {
            for j in 0..rw {
                let x = self.img[(self.img_origin.0 + i) * self.img_cols + self.img_origin.1 + j];
                let y = self.tpl[(self.tpl_origin.0 + i) * self.tpl_cols + self.tpl_origin.1 + j];
                let k = i * rw + j;
                s.planes[0][k] = x;
                s.planes[1][k] = y;
                s.planes[2][k] = x * x;
                s.planes[3][k] = y * y;
                s.planes[4][k] = x * y;
            }
        }
        for (k, plane) in s.planes.iter_mut().enumerate() {
            if !(untrimmed && (k == 1 || k == 3)) {
                blur_truncated(plane, &mut s.tmp, rh, rw, taps);
            }
        }
        let [mx, my, exx, eyy, exy] = &s.planes;
        let (my, eyy) = if untrimmed { (&full.mean, &full.sq) } else { (my, eyy) };
        let mut total = 0.0;
        for k in 0..n {
            let (ux, uy) = (mx[k], my[k]);
            let vx = exx[k] - ux * ux;
            let vy = eyy[k] - uy * uy;
            let cov = exy[k] - ux * uy;
            total += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total / n as f64
    }
}

/// Separable Gaussian blur whose taps are cut at the plane edges and renormalized.
fn blur_truncated(plane: &mut [f64], tmp: &mut Vec<f64>, rows: usize, cols: usize, taps: &[f64]) {
    let radius = (taps.len() / 2) as isize;
    tmp.clear();
    tmp.resize(plane.len(), 0.0);
    for r in 0..rows {
        for c in 0..cols {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (t, &g) in taps.iter().enumerate() {
                let x = c as isize + t as isize - radius;
                if x >= 0 && (x as usize) < cols {
                    acc += g * plane[r * cols + x as usize];
                    norm += g;
                }
            }
            tmp[r * cols + c] = acc / norm;
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (t, &g) in taps.iter().enumerate() {
                let y = r as isize + t as isize - radius;
                if y >= 0 && (y as usize) < rows {
                    acc += g * tmp[y as usize * cols + c];
                    norm += g;
                }
            }
            plane[r * cols + c] = acc / norm;
        }
    }
}
