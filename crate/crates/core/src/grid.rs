//! Row-major 2D grid of scalars.
//!
//! The same container carries image planes, full-resolution similarity maps
//! and grid-resolution probability maps. Coordinates are `(row, col)`, rows
//! growing downward.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidGrid(format!(
                "{rows}x{cols} grid needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Grid { rows, cols, values })
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        assert!(rows > 0 && cols > 0, "grid dimensions must be positive");
        Grid {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(rows > 0 && cols > 0, "grid dimensions must be positive");
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Grid { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.values[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn sum(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn mean(&self) -> T {
        self.sum() / T::of_usize(self.values.len())
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// First maximum in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best / self.cols, best % self.cols)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Grid<U> {
        self.map(|v| U::from(v).expect("finite scalar conversion"))
    }

    /// Scales values to sum to one. Returns `None` when the sum is not positive.
    pub fn normalized(&self) -> Option<Self> {
        let total = self.sum();
        if !(total > T::zero()) || !total.is_finite() {
            return None;
        }
        Some(self.map(|v| v / total))
    }

    /// Affine rescale to `[0, 1]`; constant grids map to all `0.5`.
    pub fn min_max_normalized(&self) -> Self {
        let lo = self.min();
        let hi = self.max();
        let span = hi - lo;
        if !(span > T::zero()) {
            return Grid::filled(self.rows, self.cols, T::half());
        }
        self.map(|v| ((v - lo) / span).max(T::zero()).min(T::one()))
    }

    /// Subtracts the minimum when it is negative, preserving the ordering of values.
    pub fn shifted_nonnegative(&self) -> Self {
        let lo = self.min();
        if lo < T::zero() {
            self.map(|v| v - lo)
        } else {
            self.clone()
        }
    }

    /// Bilinear resampling with corner alignment: the corner samples of the
    /// source land exactly on the corner samples of the destination.
    pub fn resample_bilinear(&self, rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "grid dimensions must be positive");
        if (rows, cols) == self.dims() {
            return self.clone();
        }
        let row_pos = axis_positions::<T>(self.rows, rows);
        let col_pos = axis_positions::<T>(self.cols, cols);
        Grid::from_fn(rows, cols, |r, c| {
            let (r0, r1, fr) = row_pos[r];
            let (c0, c1, fc) = col_pos[c];
            let top = self.get(r0, c0) * (T::one() - fc) + self.get(r0, c1) * fc;
            let bottom = self.get(r1, c0) * (T::one() - fc) + self.get(r1, c1) * fc;
            top * (T::one() - fr) + bottom * fr
        })
    }
}

fn axis_positions<T: Scalar>(src: usize, dst: usize) -> Vec<(usize, usize, T)> {
    (0..dst)
        .map(|i| {
            let pos = if dst == 1 {
                (src as f64 - 1.0) / 2.0
            } else {
                i as f64 * (src as f64 - 1.0) / (dst as f64 - 1.0)
            };
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            (lo, hi, T::of(pos - lo as f64))
        })
        .collect()
}

impl<T: Scalar> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.values[r * self.cols + c]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.values[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::<f64>::new(0, 2, vec![]).is_err());
        assert!(Grid::<f64>::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn bilinear_row_upsample() {
        let g = Grid::new(2, 2, vec![0.0f64, 1.0, 0.0, 1.0]).unwrap();
        let up = g.resample_bilinear(2, 4);
        let expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for r in 0..2 {
            for (c, e) in expected.iter().enumerate() {
                assert!((up.get(r, c) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_survives_resampling() {
        let g = Grid::filled(2, 2, 0.25f32);
        let up = g.resample_bilinear(4, 4);
        assert!(up.values().iter().all(|&v| (v - 0.25).abs() < 1e-7));
    }

    #[test]
    fn min_max_of_constant_is_half() {
        let g = Grid::filled(3, 3, 7.0f64);
        assert!(g.min_max_normalized().values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn argmax_breaks_ties_row_major() {
        let g = Grid::new(2, 2, vec![0.0f64, 1.0, 1.0, 0.5]).unwrap();
        assert_eq!(g.argmax(), (0, 1));
    }
}
