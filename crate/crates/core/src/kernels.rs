//! The decaying kernels `eta_{v,m}`, periodic convolution and empirical
//! checks of the smoothness-shift, kernel-boundedness and Jensen-type
//! estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{log_holder_constants, ExponentField};
use crate::fft::FftPlan;
use crate::grid::{enumerate_cubes, Grid, GridFunction};
use crate::lebesgue::{luxemburg_norm_abs, mixed_norm_abs};
use crate::num::{pairwise_sum, Real};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..(order + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if order == 0 { 1.0 } else if order == 1 { x } else { p1 };
            let pm = if order == 1 { 1.0 } else { p0 };
            dp = n * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// `int_0^rho (1+r)^{-m} r^{k} dr` for `k` in `{0, 1}`.
fn radial_antiderivative(m: f64, rho: f64, k: u32) -> f64 {
    let pow_int = |a: f64| {
        // int_0^rho (1+r)^{-a} dr
        if (a - 1.0).abs() < 1e-12 {
            (1.0 + rho).ln()
        } else {
            ((1.0 + rho).powf(1.0 - a) - 1.0) / (1.0 - a)
        }
    };
    match k {
        0 => pow_int(m),
        _ => pow_int(m - 1.0) - pow_int(m),
    }
}

/// Mass of the continuum kernel over the fundamental box centered at zero,
/// i.e. `int_{[-R, R]^n} (1+|u|)^{-m} du` with `R = 2^v L`.
pub fn continuum_eta_mass(dim: usize, m: f64, scaled_half_extent: f64) -> f64 {
    let r = scaled_half_extent;
    if dim == 1 {
        return 2.0 * radial_antiderivative(m, r, 0);
    }
    // Eight copies of the sector 0 <= phi <= pi/4, radial part in closed form.
    let (x, w) = gauss_legendre(64);
    let half = std::f64::consts::FRAC_PI_8;
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let phi = half * (xi + 1.0);
        acc += wi * radial_antiderivative(m, r / phi.cos(), 1);
    }
    8.0 * half * acc
}

/// The limiting mass `c_m = ||eta_{v,m}||_{L^1(R^n)}` for `m > n`.
pub fn eta_mass_limit(dim: usize, m: f64) -> Option<f64> {
    match dim {
        1 if m > 1.0 => Some(2.0 / (m - 1.0)),
        2 if m > 2.0 => Some(2.0 * std::f64::consts::PI / ((m - 1.0) * (m - 2.0))),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct EtaKernel<T: Real> {
    pub level: u32,
    pub m_exp: T,
    pub kernel: GridFunction<T>,
    /// Riemann sum of the samples; the exact `l^1` mass of the discrete kernel.
    pub sample_mass: T,
    /// Quadrature of the continuum kernel over the box.
    pub mass: f64,
    /// `Some(c_m)` when `m > n`, otherwise the tail is not integrable.
    pub mass_limit: Option<f64>,
}

impl<T: Real> EtaKernel<T> {
    pub fn integrable(&self) -> bool {
        self.mass_limit.is_some()
    }
}

/// Samples `x -> 2^{nv} (1 + 2^v |x|)^{-m}` with `|x|` the periodic distance to 0.
pub fn eta<T: Real>(level: u32, m_exp: T, grid: &Grid<T>) -> Result<EtaKernel<T>> {
    if !(m_exp > T::zero()) || !m_exp.is_finite() {
        return Err(Error::InvalidConfiguration(format!("kernel decay exponent must be positive, got {m_exp}")));
    }
    let scale = T::lit(2.0).powi(level as i32);
    let amp = scale.powi(grid.dim() as i32);
    let values: Vec<T> = (0..grid.len())
        .map(|i| amp * (T::one() + scale * grid.distance_to_origin(i)).powf(-m_exp))
        .collect();
    let sample_mass = grid.integrate(&values);
    let kernel = GridFunction::from_real(*grid, &values)?;
    let m = m_exp.as_f64();
    Ok(EtaKernel {
        level,
        m_exp,
        kernel,
        sample_mass,
        mass: continuum_eta_mass(grid.dim(), m, 2f64.powi(level as i32) * grid.half_extent().as_f64()),
        mass_limit: eta_mass_limit(grid.dim(), m),
    })
}

/// Periodic convolution `(f * k)(x) = sum_y f(y) k(x - y) h^n`, computed
/// spectrally.
pub fn convolve<T: Real>(f: &GridFunction<T>, k: &GridFunction<T>) -> Result<GridFunction<T>> {
    if !f.grid().same_as(k.grid()) {
        return Err(Error::InvalidConfiguration("convolution operands live on different grids".into()));
    }
    let grid = *f.grid();
    let plan = FftPlan::new(&grid);
    let mut ks = k.values().to_vec();
    plan.forward(&mut ks);
    let cell = grid.cell_volume();
    for z in ks.iter_mut() {
        *z = *z * cell;
    }
    GridFunction::new(grid, plan.apply_multiplier(f.values(), &ks))
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaShiftReport<T> {
    /// Largest observed ratio of the two sides.
    pub constant: T,
    /// Local log-Hölder constant of alpha as estimated on the grid.
    pub c_loc: T,
    /// Set when `R` is below the estimated constant.
    pub precondition_flagged: bool,
    pub pairs: u64,
    pub per_level: Vec<T>,
}

/// Maximum over sampled `(x, y, v)` of
/// `2^{v alpha(x)} eta_{v,h+R}(x-y) / (2^{v alpha(y)} eta_{v,h}(x-y))`.
/// With a pair budget at least `N^{2n}` every ordered pair is visited,
/// otherwise `budget` seeded random pairs plus the diagonal are used.
pub fn verify_alpha_shift<T: Real>(
    alpha: &ExponentField<T>,
    h_exp: T,
    r: T,
    levels: &[u32],
    budget: u64,
    seed: u64,
) -> AlphaShiftReport<T> {
    let _ = h_exp; // the ratio does not depend on h
    let grid = alpha.grid();
    let a = alpha.values();
    let n = grid.len();
    let c_loc = log_holder_constants(alpha).c_loc;
    let total = (n as u64) * (n as u64);
    let exhaustive = budget >= total;
    let ratio = |x: usize, y: usize, v: u32| -> T {
        let s = T::lit(2.0).powi(v as i32);
        let d = grid.periodic_distance(x, y);
        (s.ln() * (a[x] - a[y])).exp() * (T::one() + s * d).powf(-r)
    };
    let per_level: Vec<T> = levels
        .iter()
        .map(|&v| {
            if exhaustive {
                (0..n)
                    .into_par_iter()
                    .map(|x| (0..n).map(|y| ratio(x, y, v)).fold(T::zero(), T::max))
                    .reduce(T::zero, T::max)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(v));
                let mut best = (0..n).map(|x| ratio(x, x, v)).fold(T::zero(), T::max);
                for _ in 0..budget {
                    let x = rng.gen_range(0..n);
                    let y = rng.gen_range(0..n);
                    best = best.max(ratio(x, y, v));
                }
                best
            }
        })
        .collect();
    AlphaShiftReport {
        constant: per_level.iter().copied().fold(T::zero(), T::max),
        c_loc,
        precondition_flagged: r < c_loc,
        pairs: if exhaustive { total } else { budget + n as u64 } * levels.len() as u64,
        per_level,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaMaximalReport<T> {
    pub max_ratio: T,
    pub ratios: Vec<T>,
    /// For `p = q` constant the largest discrete kernel mass over the levels
    /// used, which bounds every ratio by Young's inequality.
    pub young_bound: Option<T>,
}

/// Empirical operator ratio of `(f_v)_v -> (eta_{v,m} * f_v)_v` in
/// `L^{p(.)}(l^{q(.)})` over a list of families.
pub fn verify_eta_maximal<T: Real>(
    p: &ExponentField<T>,
    q: &ExponentField<T>,
    m_exp: T,
    families: &[Vec<GridFunction<T>>],
    tol: T,
) -> Result<EtaMaximalReport<T>> {
    let grid = *p.grid();
    if !(p.min() > T::one()) || !(q.min() > T::one()) {
        return Err(Error::PreconditionViolation("exponents must exceed 1 everywhere".into()));
    }
    if !(m_exp > T::from_usize_lossy(grid.dim())) {
        return Err(Error::PreconditionViolation(format!("kernel decay {m_exp} must exceed the dimension")));
    }
    let depth = families.iter().map(Vec::len).max().unwrap_or(0);
    let kernels: Vec<EtaKernel<T>> = (0..depth).map(|v| eta(v as u32, m_exp, &grid)).collect::<Result<_>>()?;
    let ratios: Vec<T> = families
        .par_iter()
        .map(|fam| -> Result<T> {
            let src: Vec<Vec<T>> = fam.iter().map(|f| f.abs()).collect();
            let conv: Vec<Vec<T>> = fam
                .iter()
                .zip(&kernels)
                .map(|(f, k)| convolve(f, &k.kernel).map(|g| g.abs()))
                .collect::<Result<_>>()?;
            let den = mixed_norm_abs(&src, p, q, tol)?.value;
            let num = mixed_norm_abs(&conv, p, q, tol)?.value;
            Ok(if den > T::zero() { num / den } else { T::zero() })
        })
        .collect::<Result<_>>()?;
    let young_bound = if p.is_constant() && q.is_constant() && p.min() == q.min() {
        Some(kernels.iter().map(|k| k.sample_mass).fold(T::zero(), T::max))
    } else {
        None
    };
    Ok(EtaMaximalReport {
        max_ratio: ratios.iter().copied().fold(T::zero(), T::max),
        ratios,
        young_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct JensenReport<T> {
    pub gamma: T,
    /// Estimated local log-Hölder constant of `1/p`.
    pub c_loc_reciprocal: T,
    /// Smallest `RHS - LHS` over all tested (cube, point) pairs.
    pub worst_margin: T,
    pub cubes_checked: usize,
    pub points_checked: usize,
}

/// Checks `(gamma avg_Q |f|)^{p(x)} <= avg_Q |f|^{p(.)} + min(|Q|^m, 1) g(x)`
/// on every cube of the given levels and every grid point of the cube, with
/// `g(x) = (e+|x|)^{-m} + avg_Q (e+|.|)^{-m}` and `|x|` measured from the box
/// center. `gamma` defaults to `exp(-2m / c_loc(1/p))`, or 1 for constant `p`.
pub fn verify_jensen_gamma<T: Real>(
    p: &ExponentField<T>,
    m_exp: T,
    f: &GridFunction<T>,
    levels: &[u32],
    gamma_override: Option<T>,
) -> Result<JensenReport<T>> {
    let grid = *p.grid();
    if !f.grid().same_as(&grid) {
        return Err(Error::InvalidConfiguration("function and exponent live on different grids".into()));
    }
    let abs = f.abs();
    let size = luxemburg_norm_abs(&abs, p, T::default_tolerance())?.value + f.max_abs();
    if size > T::one() + T::lit(1e-9) {
        return Err(Error::InvalidInput(format!("input must satisfy ||f||_p + ||f||_inf <= 1, got {size}")));
    }
    let c_rec = log_holder_constants(&p.reciprocal()).c_loc;
    let gamma = gamma_override.unwrap_or_else(|| {
        if c_rec > T::zero() {
            (-(T::lit(2.0) * m_exp) / c_rec).exp()
        } else {
            T::one()
        }
    });
    let e = T::E();
    let decay: Vec<T> = (0..grid.len()).map(|i| (e + grid.distance_to_center(i)).powf(-m_exp)).collect();
    let pv = p.values();

    let mut worst = T::infinity();
    let mut cubes_checked = 0;
    let mut points_checked = 0;
    for &level in levels {
        let cubes = enumerate_cubes(&grid, level)?;
        let measure = T::lit(0.5).powi((level as usize * grid.dim()) as i32);
        let small = measure.powf(m_exp).min(T::one());
        let w = cubes
            .par_iter()
            .map(|cube| {
                let cells = cube.cells(&grid);
                let k = T::from_usize_lossy(cells.len());
                let avg = |g: &dyn Fn(usize) -> T| pairwise_sum(&cells.iter().map(|&i| g(i)).collect::<Vec<_>>()) / k;
                let mean_f = avg(&|i| abs[i]);
                let mean_fp = avg(&|i| if abs[i] == T::zero() { T::zero() } else { abs[i].powf(pv[i]) });
                let mean_decay = avg(&|i| decay[i]);
                cells
                    .iter()
                    .map(|&x| {
                        let lhs = (gamma * mean_f).powf(pv[x]);
                        let rhs = mean_fp + small * (decay[x] + mean_decay);
                        rhs - lhs
                    })
                    .fold(T::infinity(), T::min)
            })
            .reduce(|| T::infinity(), T::min);
        worst = worst.min(w);
        cubes_checked += cubes.len();
        points_checked += grid.len();
    }
    Ok(JensenReport {
        gamma,
        c_loc_reciprocal: c_rec,
        worst_margin: worst,
        cubes_checked,
        points_checked,
    })
}
