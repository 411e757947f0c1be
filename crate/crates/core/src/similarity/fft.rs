//! Zero-padded 2D cross-correlation, direct and FFT-backed.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::grid::Grid;
use crate::scalar::Scalar;

/// `out(r, c) = sum_{i,j} image(r - ar + i, c - ac + j) * kernel(i, j)`, with
/// pixels outside the image read as zero. The output has the image's shape.
pub(crate) fn correlate<T: Scalar>(image: &Grid<T>, kernel: &Grid<T>, anchor: (usize, usize)) -> Grid<T> {
    let (h, w) = image.dims();
    let (kh, kw) = kernel.dims();
    let direct_cost = (h * w * kh * kw) as f64;
    let (p, q) = (h + kh - 1, w + kw - 1);
    let fft_cost = 12.0 * (p * q) as f64 * ((p * q) as f64).log2().max(1.0);
    if direct_cost <= fft_cost {
        correlate_direct(image, kernel, anchor)
    } else {
        correlate_fft(image, kernel, anchor)
    }
}

pub(crate) fn correlate_direct<T: Scalar>(
    image: &Grid<T>,
    kernel: &Grid<T>,
    (ar, ac): (usize, usize),
) -> Grid<T> {
    let (h, w) = image.dims();
    let kh = kernel.rows();
    Grid::from_fn(h, w, |r, c| {
        let mut acc = T::zero();
        for i in 0..kh {
            let y = r as isize - ar as isize + i as isize;
            if y < 0 || y >= h as isize {
                continue;
            }
            let row = image.row(y as usize);
            let krow = kernel.row(i);
            for (j, &k) in krow.iter().enumerate() {
                let x = c as isize - ac as isize + j as isize;
                if x >= 0 && x < w as isize {
                    acc = acc + row[x as usize] * k;
                }
            }
        }
        acc
    })
}

pub(crate) fn correlate_fft<T: Scalar>(
    image: &Grid<T>,
    kernel: &Grid<T>,
    (ar, ac): (usize, usize),
) -> Grid<T> {
    let (h, w) = image.dims();
    let (kh, kw) = kernel.dims();
    // large enough that negative shifts wrap into the zero padding
    let (p, q) = (h + kh - 1, w + kw - 1);
    let zero = Complex::new(T::zero(), T::zero());

    let mut a = vec![zero; p * q];
    for r in 0..h {
        for (c, &v) in image.row(r).iter().enumerate() {
            a[r * q + c] = Complex::new(v, T::zero());
        }
    }
    let mut b = vec![zero; p * q];
    for r in 0..kh {
        for (c, &v) in kernel.row(r).iter().enumerate() {
            b[r * q + c] = Complex::new(v, T::zero());
        }
    }

    let mut planner = FftPlanner::<T>::new();
    fft2(&mut planner, &mut a, p, q, false);
    fft2(&mut planner, &mut b, p, q, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x = *x * y.conj();
    }
    fft2(&mut planner, &mut a, p, q, true);

    let scale = T::one() / T::of_usize(p * q);
    Grid::from_fn(h, w, |r, c| {
        let rr = (r + p - ar) % p;
        let cc = (c + q - ac) % q;
        a[rr * q + cc].re * scale
    })
}

fn fft2<T: Scalar>(planner: &mut FftPlanner<T>, data: &mut [Complex<T>], p: usize, q: usize, inverse: bool) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(q)
    } else {
        planner.plan_fft_forward(q)
    };
    for row in data.chunks_exact_mut(q) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(p)
    } else {
        planner.plan_fft_forward(p)
    };
    let mut column = vec![Complex::new(T::zero(), T::zero()); p];
    for c in 0..q {
        for r in 0..p {
            column[r] = data[r * q + c];
        }
        col_fft.process(&mut column);
        for r in 0..p {
            data[r * q + c] = column[r];
        }
    }
}
