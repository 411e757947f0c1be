//! Normalized cross-correlation with centered windows and zero padding.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::RGB_WEIGHTS;
use crate::scalar::Scalar;

use super::fft::correlate;

/// Relative variance below which a window or template counts as constant.
const FLAT_TOLERANCE: f64 = 1e-10;

pub(crate) fn check_template<T: Scalar>(image: &Grid<T>, template: &Grid<T>) -> Result<()> {
    if template.rows() > image.rows() || template.cols() > image.cols() {
        return Err(Error::TemplateTooLarge {
            t_rows: template.rows(),
            t_cols: template.cols(),
            i_rows: image.rows(),
            i_cols: image.cols(),
        });
    }
    Ok(())
}

/// Summed-area table over `(h + 1) x (w + 1)`, accumulated in `f64`.
struct Integral {
    cols: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Integral {
    fn new<T: Scalar>(image: &Grid<T>) -> Self {
        let (h, w) = image.dims();
        let cols = w + 1;
        let mut sum = vec![0.0; (h + 1) * cols];
        let mut sum_sq = vec![0.0; (h + 1) * cols];
        for r in 0..h {
            let (mut run, mut run_sq) = (0.0, 0.0);
            for (c, v) in image.row(r).iter().enumerate() {
                let v = v.to_f64_lossy();
                run += v;
                run_sq += v * v;
                sum[(r + 1) * cols + c + 1] = sum[r * cols + c + 1] + run;
                sum_sq[(r + 1) * cols + c + 1] = sum_sq[r * cols + c + 1] + run_sq;
            }
        }
        Integral { cols, sum, sum_sq }
    }

    /// Sums over rows `[r0, r1)` and cols `[c0, c1)`.
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> (f64, f64) {
        let at = |t: &[f64], r: usize, c: usize| t[r * self.cols + c];
        let s = at(&self.sum, r1, c1) - at(&self.sum, r0, c1) - at(&self.sum, r1, c0) + at(&self.sum, r0, c0);
        let s2 = at(&self.sum_sq, r1, c1) - at(&self.sum_sq, r0, c1) - at(&self.sum_sq, r1, c0)
            + at(&self.sum_sq, r0, c0);
        (s, s2)
    }
}

/// Normalized cross-correlation of `template` against the window of the same
/// size centered on every pixel. The window's top-left corner sits at
/// `(r - rows/2, c - cols/2)`; pixels outside the image count as zeros.
/// Constant windows or templates score 0. Output values lie in `[-1, 1]`.
pub fn cross_correlation_map<T: Scalar>(image: &Grid<T>, template: &Grid<T>) -> Result<Grid<T>> {
    check_template(image, template)?;
    let (h, w) = image.dims();
    let (th, tw) = template.dims();
    let n = (th * tw) as f64;

    let t_mean = template.values().iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n;
    let centered = template.map(|v| v - T::of(t_mean));
    let t_ss: f64 = centered.values().iter().map(|v| v.to_f64_lossy().powi(2)).sum();
    let t_raw: f64 = template.values().iter().map(|v| v.to_f64_lossy().powi(2)).sum();
    if t_ss <= FLAT_TOLERANCE * t_raw.max(f64::MIN_POSITIVE) {
        return Ok(Grid::filled(h, w, T::zero()));
    }

    let anchor = (th / 2, tw / 2);
    let numerator = correlate(image, &centered, anchor);
    let integral = Integral::new(image);
    let mut out = numerator;
    for r in 0..h {
        let r0 = r.saturating_sub(anchor.0);
        let r1 = (r + th - anchor.0).min(h);
        for c in 0..w {
            let c0 = c.saturating_sub(anchor.1);
            let c1 = (c + tw - anchor.1).min(w);
            let (s, s2) = integral.rect(r0, r1, c0, c1);
            let var_sum = s2 - s * s / n;
            let score = if var_sum <= FLAT_TOLERANCE * s2.max(f64::MIN_POSITIVE) {
                0.0
            } else {
                (out.get(r, c).to_f64_lossy() / (var_sum * t_ss).sqrt()).clamp(-1.0, 1.0)
            };
            out.set(r, c, T::of(score));
        }
    }
    Ok(out)
}

/// Per-channel normalized cross-correlation averaged with the grayscale weights.
pub fn cross_correlation_color<T: Scalar>(image: &[Grid<T>], template: &[Grid<T>]) -> Result<Grid<T>> {
    weighted_channels(image, template, cross_correlation_map)
}

pub(crate) fn weighted_channels<T: Scalar>(
    image: &[Grid<T>],
    template: &[Grid<T>],
    per_channel: impl Fn(&Grid<T>, &Grid<T>) -> Result<Grid<T>>,
) -> Result<Grid<T>> {
    if image.len() != 3 || template.len() != 3 {
        return Err(Error::ChannelMismatch {
            image: image.len(),
            template: template.len(),
        });
    }
    let mut acc: Option<Grid<T>> = None;
    for ((img, tpl), weight) in image.iter().zip(template).zip(RGB_WEIGHTS) {
        let m = per_channel(img, tpl)?;
        let weight = T::of(weight);
        acc = Some(match acc {
            None => m.map(|v| v * weight),
            Some(mut a) => {
                for (x, y) in a.values_mut().iter_mut().zip(m.values()) {
                    *x = *x + *y * weight;
                }
                a
            }
        });
    }
    Ok(acc.expect("three channels"))
}
