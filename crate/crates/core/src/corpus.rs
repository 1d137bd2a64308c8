//! Seeded generators for coefficient sequences, band-limited functions,
//! simple functions and exponent recipes.

use num_complex::Complex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Recipe;
use crate::grid::{DyadicCube, Grid, GridFunction};
use crate::interp::SimpleFunction;
use crate::num::Real;
use crate::seqspaces::DyadicCoefficients;

/// Independent generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// All cubes of levels `0..=max_level`, coarsest first.
fn all_cubes<T: Real>(grid: &Grid<T>, max_level: u32) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    for v in 0..=max_level {
        let k = grid.cubes_per_axis(v) as i64;
        let second = if grid.dim() == 2 { k } else { 1 };
        for m1 in 0..second {
            for m0 in 0..k {
                out.push(DyadicCube::new(v, [m0, m1]));
            }
        }
    }
    out
}

/// `min(count, #cubes)` distinct cubes of levels `0..=max_level` drawn
/// uniformly, carrying log-uniform magnitudes in `[1e-3, 1e3]` and uniform
/// phases.
pub fn random_coefficients<T: Real>(
    grid: Grid<T>,
    max_level: u32,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DyadicCoefficients<T>> {
    let mut lambda = DyadicCoefficients::new(grid, max_level)?;
    let cubes = all_cubes(&grid, max_level);
    let k = count.min(cubes.len());
    let mut picks = sample(rng, cubes.len(), k).into_vec();
    picks.sort_unstable();
    for i in picks {
        let mag = 10f64.powf(rng.gen_range(-3.0..=3.0));
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let z = Complex::from_polar(mag, phase);
        lambda.insert(cubes[i], Complex::new(T::lit(z.re), T::lit(z.im)))?;
    }
    Ok(lambda)
}

/// Re-embeds the same coefficients on another grid with the same half-extent.
pub fn transfer<T: Real>(lambda: &DyadicCoefficients<T>, grid: Grid<T>) -> Result<DyadicCoefficients<T>> {
    DyadicCoefficients::from_records(grid, lambda.max_level(), &lambda.to_records())
}

/// A trigonometric polynomial `sum_k c_k e^{i pi k.x / L}`, which can be
/// sampled on any grid fine enough to carry its modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandLimited {
    pub dim: usize,
    pub half_extent: f64,
    pub modes: Vec<([i64; 2], [f64; 2])>,
}

impl BandLimited {
    /// Largest angular frequency present.
    pub fn band(&self) -> f64 {
        self.modes
            .iter()
            .map(|(k, _)| std::f64::consts::PI / self.half_extent * ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn sample<T: Real>(&self, grid: &Grid<T>) -> Result<GridFunction<T>> {
        if grid.dim() != self.dim || (grid.half_extent().as_f64() - self.half_extent).abs() > 1e-12 {
            return Err(Error::InvalidConfiguration("grid does not match the function's box".into()));
        }
        let half = grid.points_per_axis() as i64 / 2;
        if self.modes.iter().any(|(k, _)| k[0].abs() >= half || k[1].abs() >= half) {
            return Err(Error::ResolutionExceeded {
                level: self.modes.iter().map(|(k, _)| k[0].abs().max(k[1].abs())).max().unwrap_or(0),
                max: half - 1,
            });
        }
        let scale = std::f64::consts::PI / self.half_extent;
        GridFunction::from_fn(*grid, |x| {
            let (x0, x1) = (x[0].as_f64(), x[1].as_f64());
            let mut acc = Complex::new(0.0, 0.0);
            for (k, c) in &self.modes {
                let phase = scale * (k[0] as f64 * x0 + k[1] as f64 * x1);
                acc += Complex::new(c[0], c[1]) * Complex::from_polar(1.0, phase);
            }
            Complex::new(T::lit(acc.re), T::lit(acc.im))
        })
    }
}

/// `modes` random Fourier modes with angular frequency at most `band`.
pub fn random_band_limited(dim: usize, half_extent: f64, band: f64, modes: usize, rng: &mut ChaCha8Rng) -> BandLimited {
    let kmax = (band * half_extent / std::f64::consts::PI).floor() as i64;
    let mut out = Vec::with_capacity(modes);
    while out.len() < modes {
        let k0 = rng.gen_range(-kmax..=kmax);
        let k1 = if dim == 2 { rng.gen_range(-kmax..=kmax) } else { 0 };
        if ((k0 * k0 + k1 * k1) as f64).sqrt() > kmax as f64 {
            continue;
        }
        let c = Complex::from_polar(rng.gen_range(0.1..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        out.push(([k0, k1], [c.re, c.im]));
    }
    BandLimited {
        dim,
        half_extent,
        modes: out,
    }
}

/// A simple function on `regions` disjoint slabs along the first axis with
/// magnitudes in `[0.1, 10]`.
pub fn random_simple<T: Real>(grid: Grid<T>, regions: usize, rng: &mut ChaCha8Rng) -> Result<SimpleFunction<T>> {
    let n = grid.points_per_axis();
    let mut cuts = sample(rng, n, 2 * regions).into_vec();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(regions);
    for pair in cuts.chunks(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let cells: Vec<usize> = (0..grid.len()).filter(|&i| (lo..hi).contains(&grid.axis_indices(i)[0])).collect();
        let z = Complex::from_polar(10f64.powf(rng.gen_range(-1.0..1.0)), rng.gen_range(0.0..std::f64::consts::TAU));
        out.push((Complex::new(T::lit(z.re), T::lit(z.im)), cells));
    }
    SimpleFunction::new(grid, out)
}

/// Integrability recipe with values in `[lo, hi]`.
pub fn random_integrability(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Recipe {
    let a = rng.gen_range(lo..hi);
    let b = rng.gen_range(lo..hi);
    match rng.gen_range(0..3) {
        0 => Recipe::Constant { value: a },
        1 => Recipe::SinePerturbation {
            base: (a + b) / 2.0,
            amplitude: (a - b).abs() / 2.0,
            frequency: rng.gen_range(1..=2) as f64,
        },
        _ => Recipe::PlateauRamp {
            left: a,
            right: b,
            width: rng.gen_range(0.25..1.0),
        },
    }
}

/// Smoothness recipe with values in `[-1, 1]`.
pub fn random_smoothness(rng: &mut ChaCha8Rng) -> Recipe {
    let base = rng.gen_range(-0.5..0.5);
    match rng.gen_range(0..2) {
        0 => Recipe::Constant { value: base },
        _ => Recipe::SinePerturbation {
            base,
            amplitude: rng.gen_range(0.0..0.5),
            frequency: rng.gen_range(1..=2) as f64,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_are_distinct_and_in_range() {
        let g = Grid::<f64>::new(1, 4.0, 1024).unwrap();
        let lam = random_coefficients(g, 4, 500, &mut stream(1, 2)).unwrap();
        assert_eq!(lam.len(), 8 + 16 + 32 + 64 + 128);
        for (_, z) in lam.iter() {
            assert!(z.norm() >= 1e-3 * (1.0 - 1e-12) && z.norm() <= 1e3 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let g = Grid::<f64>::new(2, 2.0, 64).unwrap();
        let a = random_coefficients(g, 2, 30, &mut stream(9, 4)).unwrap();
        let b = random_coefficients(g, 2, 30, &mut stream(9, 4)).unwrap();
        let c = random_coefficients(g, 2, 30, &mut stream(9, 5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn band_limited_samples_agree_across_grids() {
        let f = random_band_limited(1, 4.0, 16.0, 6, &mut stream(3, 0));
        assert!(f.band() <= 16.0);
        let coarse = f.sample(&Grid::<f64>::new(1, 4.0, 256).unwrap()).unwrap();
        let fine = f.sample(&Grid::<f64>::new(1, 4.0, 512).unwrap()).unwrap();
        for i in 0..256 {
            assert!((coarse.values()[i] - fine.values()[2 * i]).norm() < 1e-12);
        }
    }

    #[test]
    fn simple_functions_have_disjoint_regions() {
        let g = Grid::<f64>::new(1, 4.0, 256).unwrap();
        let f = random_simple(g, 3, &mut stream(0, 0)).unwrap();
        assert_eq!(f.regions().len(), 3);
    }
}
