//! Thin n-dimensional wrapper over `rustfft` for periodic grids.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Grid, GridFunction};
use crate::num::Real;

/// Forward and inverse plans for one grid shape.
#[derive(Clone)]
pub struct FftPlan<T: Real> {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> FftPlan<T> {
    pub fn new(grid: &Grid<T>) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        Self {
            dim: grid.dim(),
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn apply(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let n = self.n;
        // Rows are contiguous along the first axis.
        plan.process(data);
        if self.dim == 2 {
            let mut column = vec![Complex::new(T::zero(), T::zero()); n];
            for c in 0..n {
                for r in 0..n {
                    column[r] = data[r * n + c];
                }
                plan.process(&mut column);
                for r in 0..n {
                    data[r * n + c] = column[r];
                }
            }
        }
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.apply(data, &self.forward);
    }

    /// Inverse DFT in place, normalized so that `inverse(forward(x)) = x`.
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.apply(data, &self.inverse);
        let scale = T::one() / T::from_usize_lossy(data.len());
        for z in data.iter_mut() {
            *z = *z * scale;
        }
    }

    /// Applies a Fourier multiplier (indexed like the DFT bins) to `f`.
    pub fn apply_multiplier(&self, f: &[Complex<T>], multiplier: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut data = f.to_vec();
        self.forward(&mut data);
        for (z, m) in data.iter_mut().zip(multiplier) {
            *z = *z * *m;
        }
        self.inverse(&mut data);
        data
    }

    /// Same as [`Self::apply_multiplier`] for a real multiplier and a
    /// precomputed spectrum.
    pub fn multiply_spectrum(&self, spectrum: &[Complex<T>], multiplier: &[T]) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> = spectrum.iter().zip(multiplier).map(|(&z, &m)| z * m).collect();
        self.inverse(&mut data);
        data
    }

    pub fn spectrum(&self, f: &GridFunction<T>) -> Vec<Complex<T>> {
        let mut data = f.values().to_vec();
        self.forward(&mut data);
        data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let g = Grid::<f64>::new(2, 1.0, 16).unwrap();
        let plan = FftPlan::new(&g);
        let orig: Vec<Complex<f64>> = (0..g.len())
            .map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        plan.forward(&mut data);
        plan.inverse(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_its_bin() {
        let g = Grid::<f64>::new(1, 1.0, 32).unwrap();
        let plan = FftPlan::new(&g);
        // e^{i xi x} with xi = pi * 3 / L.
        let f = GridFunction::from_fn(g, |x| Complex::from_polar(1.0, std::f64::consts::PI * 3.0 * x[0])).unwrap();
        let s = plan.spectrum(&f);
        for (k, z) in s.iter().enumerate() {
            let expect = if k == 3 { 32.0 } else { 0.0 };
            assert!((z.norm() - expect).abs() < 1e-9, "bin {k}: {z}");
        }
    }
}
