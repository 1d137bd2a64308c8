//! Littlewood-Paley filter banks, the phi-transform and the
//! Triebel-Lizorkin norms built on them.
//!
//! Frequencies are angular: a grid mode `e^{i xi x}` has `xi = pi k / L`.
//! All profiles are radial and real, so `F(phi~) = F(phi)`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::ExponentField;
use crate::fft::FftPlan;
use crate::grid::{enumerate_cubes, DyadicCube, Grid, GridFunction};
use crate::lebesgue::{mixed_norm_abs, NormResult};
use crate::num::{max_of, Real};
use crate::seqspaces::{sup_over_cubes, DyadicCoefficients};

/// `exp(-1/t)` for `t > 0`, zero otherwise.
fn bump<T: Real>(t: T) -> T {
    if t > T::zero() {
        (-T::one() / t).exp()
    } else {
        T::zero()
    }
}

/// Smooth step equal to 1 for `r <= a` and 0 for `r >= b`.
pub fn smooth_step<T: Real>(r: T, a: T, b: T) -> T {
    let hi = bump(b - r);
    let lo = bump(r - a);
    if hi + lo == T::zero() {
        // Only reachable when a == b.
        return if r < a { T::one() } else { T::zero() };
    }
    hi / (hi + lo)
}

fn third<T: Real>(k: f64) -> T {
    T::lit(k) / T::lit(3.0)
}

/// Low-pass profile `F Phi(r)`: 1 on `r <= 5/3`, 0 on `r >= 2`.
pub fn low_pass<T: Real>(r: T) -> T {
    smooth_step(r, third(5.0), T::lit(2.0))
}

/// Band-pass profile `F phi(r)`: 1 on `3/5 <= r <= 5/3`, supported in `[1/2, 2]`.
pub fn band_pass<T: Real>(r: T) -> T {
    (T::one() - smooth_step(r, T::lit(0.5), T::lit(0.6))) * low_pass(r)
}

/// Resolution-of-unity profile: 1 on `r <= 1`, 0 on `r >= 2`.
pub fn unity_profile<T: Real>(r: T) -> T {
    smooth_step(r, T::one(), T::lit(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BankKind {
    Admissible,
    ResolutionOfUnity,
}

/// Fourier multipliers of a filter family on one grid. `phi[0]` is the
/// low-pass filter and `phi[v]` the level-`v` filter.
#[derive(Debug, Clone)]
pub struct FilterBank<T> {
    pub grid: Grid<T>,
    pub max_level: u32,
    pub kind: BankKind,
    pub phi: Vec<Vec<T>>,
    pub dual: Option<Vec<Vec<T>>>,
    pub omega: Option<Vec<Vec<T>>>,
    /// Smallest filter value on the sets where the profiles are required to
    /// be bounded below.
    pub lower_bound: T,
    /// Largest filter magnitude outside the prescribed supports.
    pub support_leak: T,
    pub min_denominator: Option<T>,
    pub dual_residual: Option<T>,
    pub partition_residual: Option<T>,
}

impl<T: Real> FilterBank<T> {
    /// Largest radius on which the finite bank reproduces the identity.
    pub fn band_limit(&self) -> T {
        let top = T::lit(2.0).powi(self.max_level as i32);
        match self.kind {
            BankKind::Admissible => top * third(5.0),
            BankKind::ResolutionOfUnity => top,
        }
    }

    fn radii(&self) -> Vec<T> {
        (0..self.grid.len()).map(|i| self.grid.frequency_norm(i)).collect()
    }

    /// Range of `sum_v |F phi_v|^2` over frequencies inside the band limit.
    pub fn frame_bounds(&self) -> (T, T) {
        let band = self.band_limit();
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for (i, r) in self.radii().into_iter().enumerate() {
            if r <= band {
                let s: T = self.phi.iter().map(|m| m[i] * m[i]).fold(T::zero(), |a, b| a + b);
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (lo, hi)
    }
}

fn check_levels<T: Real>(grid: &Grid<T>, max_level: u32) -> Result<()> {
    if max_level > grid.finest_level() {
        return Err(Error::ResolutionExceeded {
            level: max_level as i64,
            max: grid.finest_level() as i64,
        });
    }
    if grid.nyquist() < T::lit(2.0).powi(max_level as i32 + 1) {
        return Err(Error::ResolutionExceeded {
            level: max_level as i64,
            max: grid.nyquist().log2().floor().to_i64().unwrap_or(0) - 1,
        });
    }
    Ok(())
}

/// The admissible pair `(Phi, phi)` with `F phi_v(xi) = F phi(2^{-v} xi)`.
pub fn build_admissible_pair<T: Real>(grid: &Grid<T>, max_level: u32) -> Result<FilterBank<T>> {
    check_levels(grid, max_level)?;
    let radii: Vec<T> = (0..grid.len()).map(|i| grid.frequency_norm(i)).collect();
    let mut phi = vec![radii.iter().map(|&r| low_pass(r)).collect::<Vec<T>>()];
    for v in 1..=max_level {
        let s = T::lit(2.0).powi(-(v as i32));
        phi.push(radii.iter().map(|&r| band_pass(r * s)).collect());
    }
    let mut lower = T::infinity();
    let mut leak = T::zero();
    let (a, b) = (third::<T>(5.0), T::lit(2.0));
    let (c, d) = (T::lit(0.6), T::lit(0.5));
    for (i, &r) in radii.iter().enumerate() {
        if r <= a {
            lower = lower.min(phi[0][i]);
        }
        if r > b {
            leak = leak.max(phi[0][i].abs());
        }
        for v in 1..=max_level as usize {
            let x = r * T::lit(2.0).powi(-(v as i32));
            if x >= c && x <= a {
                lower = lower.min(phi[v][i]);
            }
            if x < d || x > b {
                leak = leak.max(phi[v][i].abs());
            }
        }
    }
    Ok(FilterBank {
        grid: *grid,
        max_level,
        kind: BankKind::Admissible,
        phi,
        dual: None,
        omega: None,
        lower_bound: lower,
        support_leak: leak,
        min_denominator: None,
        dual_residual: None,
        partition_residual: None,
    })
}

/// Adds the dual filters `F Psi = F Phi / D`, `F psi_j = F phi_j / D` with
/// `D = |F Phi|^2 + sum_j |F phi_j|^2`. Inside the band `D >= 1`; outside it
/// `D` is floored at 1 so that the duals stay bounded where the top filter
/// fades out, instead of amplifying rounding noise.
pub fn build_dual_pair<T: Real>(bank: &FilterBank<T>) -> Result<FilterBank<T>> {
    let radii = bank.radii();
    let n = radii.len();
    let band = bank.band_limit();
    let denom: Vec<T> = (0..n).map(|i| bank.phi.iter().map(|m| m[i] * m[i]).fold(T::zero(), |a, b| a + b)).collect();
    let mut min_d = T::infinity();
    for (i, &r) in radii.iter().enumerate() {
        if r <= band {
            min_d = min_d.min(denom[i]);
        }
    }
    if !(min_d >= T::lit(0.25)) {
        return Err(Error::AdmissibilityFailure(format!(
            "Calderón denominator drops to {min_d} inside the band |xi| <= {band}"
        )));
    }
    let dual: Vec<Vec<T>> = bank
        .phi
        .iter()
        .map(|m| (0..n).map(|i| m[i] / denom[i].max(T::one())).collect())
        .collect();
    let mut residual = T::zero();
    for (i, &r) in radii.iter().enumerate() {
        if r <= band {
            let s = bank.phi.iter().zip(&dual).map(|(a, b)| a[i] * b[i]).fold(T::zero(), |x, y| x + y);
            residual = residual.max((s - T::one()).abs());
        }
    }
    let mut out = bank.clone();
    out.dual = Some(dual);
    out.min_denominator = Some(min_d);
    out.dual_residual = Some(residual);
    Ok(out)
}

/// The partition `F phi_0 = Psi`, `F phi_v = Psi(2^{-v} .) - Psi(2^{1-v} .)`
/// together with `omega_v = phi_{v-1} + phi_v + phi_{v+1}`.
pub fn build_resolution_of_unity<T: Real>(grid: &Grid<T>, max_level: u32) -> Result<FilterBank<T>> {
    check_levels(grid, max_level)?;
    let radii: Vec<T> = (0..grid.len()).map(|i| grid.frequency_norm(i)).collect();
    let psi_at = |v: i32| -> Vec<T> { radii.iter().map(|&r| unity_profile(r * T::lit(2.0).powi(-v))).collect() };
    let level = |v: u32| -> Vec<T> {
        if v == 0 {
            psi_at(0)
        } else {
            let (a, b) = (psi_at(v as i32), psi_at(v as i32 - 1));
            a.iter().zip(&b).map(|(x, y)| *x - *y).collect()
        }
    };
    let all: Vec<Vec<T>> = (0..=max_level + 1).map(level).collect();
    let n = grid.len();
    let omega: Vec<Vec<T>> = (0..=max_level as usize)
        .map(|v| {
            (0..n)
                .map(|i| {
                    let below = if v > 0 { all[v - 1][i] } else { T::zero() };
                    below + all[v][i] + all[v + 1][i]
                })
                .collect()
        })
        .collect();
    let phi: Vec<Vec<T>> = all[..=max_level as usize].to_vec();
    let band = T::lit(2.0).powi(max_level as i32);
    let mut residual = T::zero();
    let mut leak = T::zero();
    for (i, &r) in radii.iter().enumerate() {
        if r <= band {
            let s = phi.iter().map(|m| m[i]).fold(T::zero(), |a, b| a + b);
            residual = residual.max((s - T::one()).abs());
        }
        for (v, m) in phi.iter().enumerate() {
            let x = r * T::lit(2.0).powi(-(v as i32));
            let outside = if v == 0 { x > T::lit(2.0) } else { x < T::lit(0.5) || x > T::lit(2.0) };
            if outside {
                leak = leak.max(m[i].abs());
            }
        }
    }
    Ok(FilterBank {
        grid: *grid,
        max_level,
        kind: BankKind::ResolutionOfUnity,
        phi,
        dual: None,
        omega: Some(omega),
        lower_bound: T::one(),
        support_leak: leak,
        min_denominator: None,
        dual_residual: None,
        partition_residual: Some(residual),
    })
}

/// Largest `|int x^gamma phi(x) dx|` over `|gamma| <= 2`, evaluated as the
/// corresponding derivative of the band-pass profile at the origin by
/// central differences.
pub fn band_pass_moments<T: Real>(dim: usize) -> T {
    let h = T::lit(0.125);
    let f = |x: T, y: T| band_pass((x * x + y * y).sqrt());
    let z = T::zero();
    let two = T::lit(2.0);
    let mut worst = f(z, z).abs();
    let d1 = |ex: T, ey: T| (f(ex * h, ey * h) - f(-ex * h, -ey * h)) / (two * h);
    let d2 = |ex: T, ey: T| (f(ex * h, ey * h) - two * f(z, z) + f(-ex * h, -ey * h)) / (h * h);
    worst = worst.max(d1(T::one(), z).abs()).max(d2(T::one(), z).abs());
    if dim == 2 {
        let mixed = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (T::lit(4.0) * h * h);
        worst = worst.max(d1(z, T::one()).abs()).max(d2(z, T::one()).abs()).max(mixed.abs());
    }
    worst
}

fn level_filtered<T: Real>(plan: &FftPlan<T>, spectrum: &[Complex<T>], bank: &FilterBank<T>) -> Vec<Vec<Complex<T>>> {
    bank.phi.par_iter().map(|m| plan.multiply_spectrum(spectrum, m)).collect()
}

fn same_grid<T: Real>(f: &GridFunction<T>, bank: &FilterBank<T>) -> Result<()> {
    if !f.grid().same_as(&bank.grid) {
        return Err(Error::InvalidConfiguration("function and filter bank live on different grids".into()));
    }
    Ok(())
}

/// `lambda_{v,m} = 2^{-vn/2} (phi~_v * f)(2^{-v} m)` for every cube of levels `0..=V`.
pub fn analyze<T: Real>(f: &GridFunction<T>, bank: &FilterBank<T>) -> Result<DyadicCoefficients<T>> {
    same_grid(f, bank)?;
    let grid = bank.grid;
    let plan = FftPlan::new(&grid);
    let filtered = level_filtered(&plan, &plan.spectrum(f), bank);
    let mut out = DyadicCoefficients::new(grid, bank.max_level)?;
    for (v, g) in filtered.iter().enumerate() {
        let scale = T::lit(2.0).powf(-T::from_usize_lossy(v * grid.dim()) / T::lit(2.0));
        for cube in enumerate_cubes(&grid, v as u32)? {
            out.insert(cube, g[cube.corner_index(&grid)] * scale)?;
        }
    }
    Ok(out)
}

/// `T_psi lambda = sum_{v,m} lambda_{v,m} 2^{-vn/2} psi_v(. - 2^{-v} m)`.
pub fn synthesize<T: Real>(lambda: &DyadicCoefficients<T>, bank: &FilterBank<T>) -> Result<GridFunction<T>> {
    let dual = bank
        .dual
        .as_ref()
        .ok_or_else(|| Error::PreconditionViolation("synthesis needs the dual filters".into()))?;
    let grid = bank.grid;
    if !lambda.grid().same_as(&grid) {
        return Err(Error::InvalidConfiguration("coefficients and filter bank live on different grids".into()));
    }
    if lambda.max_level() > bank.max_level {
        return Err(Error::ResolutionExceeded {
            level: lambda.max_level() as i64,
            max: bank.max_level as i64,
        });
    }
    let plan = FftPlan::new(&grid);
    let inv_cell = T::one() / grid.cell_volume();
    let zero = Complex::new(T::zero(), T::zero());
    let mut total = vec![zero; grid.len()];
    for v in 0..=lambda.max_level() {
        let scale = T::lit(2.0).powf(-T::from_usize_lossy(v as usize * grid.dim()) / T::lit(2.0)) * inv_cell;
        let mut comb = vec![zero; grid.len()];
        let mut any = false;
        for (cube, z) in lambda.iter().filter(|(c, _)| c.level == v) {
            comb[cube.corner_index(&grid)] = *z * scale;
            any = true;
        }
        if !any {
            continue;
        }
        plan.forward(&mut comb);
        for ((t, c), m) in total.iter_mut().zip(&comb).zip(&dual[v as usize]) {
            *t = *t + *c * *m;
        }
    }
    plan.inverse(&mut total);
    GridFunction::new(grid, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTrip<T> {
    /// `sup |R S f - f| / sup |f|`.
    pub residual: T,
    /// Relative spectral energy of `f` beyond the band limit.
    pub out_of_band: T,
    /// Set when the input is not band-limited; the residual is then only
    /// informative.
    pub flagged: bool,
}

fn out_of_band_energy<T: Real>(plan: &FftPlan<T>, f: &GridFunction<T>, band: T) -> T {
    let s = plan.spectrum(f);
    let grid = f.grid();
    let (mut outside, mut total) = (T::zero(), T::zero());
    for (i, z) in s.iter().enumerate() {
        let e = z.norm_sqr();
        total = total + e;
        if grid.frequency_norm(i) > band {
            outside = outside + e;
        }
    }
    if total > T::zero() {
        (outside / total).sqrt()
    } else {
        T::zero()
    }
}

fn relative_sup<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    let scale = b.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    if scale == T::zero() {
        return a.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    }
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm())) / scale
}

/// `R((f_v)_v) = sum_v omega_v * f_v` applied to `S f = (phi_v * f)_v`.
pub fn retract_roundtrip<T: Real>(f: &GridFunction<T>, bank: &FilterBank<T>) -> Result<RoundTrip<T>> {
    same_grid(f, bank)?;
    let omega = bank
        .omega
        .as_ref()
        .ok_or_else(|| Error::PreconditionViolation("retraction needs the omega filters".into()))?;
    let plan = FftPlan::new(&bank.grid);
    let spectrum = plan.spectrum(f);
    let zero = Complex::new(T::zero(), T::zero());
    let mut total = vec![zero; spectrum.len()];
    for (phi, om) in bank.phi.iter().zip(omega) {
        // Each level is formed in space and transformed back so that the
        // retraction is applied to the sequence, not folded into one symbol.
        let mut level = plan.multiply_spectrum(&spectrum, phi);
        plan.forward(&mut level);
        for ((t, z), w) in total.iter_mut().zip(&level).zip(om) {
            *t = *t + *z * *w;
        }
    }
    plan.inverse(&mut total);
    let oob = out_of_band_energy(&plan, f, bank.band_limit());
    Ok(RoundTrip {
        residual: relative_sup(&total, f.values()),
        out_of_band: oob,
        flagged: oob > T::lit(1e-12),
    })
}

/// `T_psi S_phi f` compared with `f`.
pub fn phi_transform_roundtrip<T: Real>(f: &GridFunction<T>, bank: &FilterBank<T>) -> Result<RoundTrip<T>> {
    let back = synthesize(&analyze(f, bank)?, bank)?;
    let plan = FftPlan::new(&bank.grid);
    let oob = out_of_band_energy(&plan, f, bank.band_limit());
    Ok(RoundTrip {
        residual: relative_sup(back.values(), f.values()),
        out_of_band: oob,
        flagged: oob > T::lit(1e-12),
    })
}

/// `|2^{v alpha(x)} (phi_v * f)(x)|` for `v = 0..=V`.
pub fn weighted_levels<T: Real>(f: &GridFunction<T>, alpha: &ExponentField<T>, bank: &FilterBank<T>) -> Result<Vec<Vec<T>>> {
    same_grid(f, bank)?;
    if !alpha.grid().same_as(&bank.grid) {
        return Err(Error::InvalidConfiguration("smoothness and filter bank live on different grids".into()));
    }
    let plan = FftPlan::new(&bank.grid);
    let filtered = level_filtered(&plan, &plan.spectrum(f), bank);
    Ok(filtered
        .into_iter()
        .enumerate()
        .map(|(v, g)| {
            let v = T::from_usize_lossy(v);
            g.iter().zip(alpha.values()).map(|(z, &a)| (v * a).exp2() * z.norm()).collect()
        })
        .collect())
}

/// `||f||_{F^{alpha(.)}_{p(.),q(.)}} = ||(2^{v alpha} phi_v * f)_v||_{L^{p(.)}(l^{q(.)})}`.
#[allow(non_snake_case)]
pub fn F_norm<T: Real>(
    f: &GridFunction<T>,
    alpha: &ExponentField<T>,
    p: &ExponentField<T>,
    q: &ExponentField<T>,
    bank: &FilterBank<T>,
    tol: T,
) -> Result<NormResult<T>> {
    mixed_norm_abs(&weighted_levels(f, alpha, bank)?, p, q, tol)
}

/// `sup_P |P|^{-1/q} (sum_{v >= v_P} int_P |2^{v alpha} phi_v * f|^q)^{1/q}`.
#[allow(non_snake_case)]
pub fn F_infty_norm<T: Real>(f: &GridFunction<T>, alpha: &ExponentField<T>, q: T, bank: &FilterBank<T>) -> Result<T> {
    if !(q > T::zero()) || !q.is_finite() {
        return Err(Error::InvalidConfiguration(format!("q must be finite and positive, got {q}")));
    }
    let levels: Vec<Vec<T>> = weighted_levels(f, alpha, bank)?
        .into_iter()
        .map(|g| g.into_iter().map(|x| if x == T::zero() { x } else { x.powf(q) }).collect())
        .collect();
    Ok(sup_over_cubes(&bank.grid, &levels, q))
}

/// Level-`v` ψ atom `2^{-vn/2} psi_v(x - 2^{-v} m)` evaluated by a direct
/// Fourier sum; used to cross-check synthesis.
pub fn dual_atom<T: Real>(bank: &FilterBank<T>, cube: &DyadicCube) -> Result<Vec<Complex<T>>> {
    let dual = bank.dual.as_ref().ok_or_else(|| Error::PreconditionViolation("no dual filters".into()))?;
    cube.validate(&bank.grid)?;
    let grid = bank.grid;
    let corner: [T; 2] = cube.corner();
    let vol = grid.extent().powi(grid.dim() as i32);
    let scale = T::lit(2.0).powf(-T::from_usize_lossy(cube.level as usize * grid.dim()) / T::lit(2.0)) / vol;
    let m = &dual[cube.level as usize];
    let active: Vec<usize> = (0..grid.len()).filter(|&k| m[k] != T::zero()).collect();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.coords(i);
            let mut acc = Complex::new(T::zero(), T::zero());
            for &k in &active {
                let xi = grid.angular_frequency(k);
                let phase = xi[0] * (x[0] - corner[0]) + xi[1] * (x[1] - corner[1]);
                acc = acc + Complex::from_polar(m[k], phase);
            }
            acc * scale
        })
        .collect())
}

/// Max of the moduli of a spectrum over frequencies outside the band; used
/// by band-limited generators.
pub fn spectral_peak_outside<T: Real>(f: &GridFunction<T>, band: T) -> T {
    let plan = FftPlan::new(f.grid());
    let s = plan.spectrum(f);
    let g = f.grid();
    let outside: Vec<T> = s
        .iter()
        .enumerate()
        .filter(|(i, _)| g.frequency_norm(*i) > band)
        .map(|(_, z)| z.norm())
        .collect();
    if outside.is_empty() {
        T::zero()
    } else {
        max_of(&outside)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::Role;
    use crate::lebesgue::luxemburg_norm;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    fn default_grid() -> Grid<f64> {
        Grid::new(1, 4.0, 1024).unwrap()
    }

    /// Sum of a few modes with angular frequencies inside `band`.
    fn band_limited(g: Grid<f64>, band: f64, seed: u64) -> GridFunction<f64> {
        let l = g.half_extent();
        let kmax = (band * l / std::f64::consts::PI).floor() as i64;
        let mut modes = Vec::new();
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..12 {
            let k0 = (next() * (2 * kmax + 1) as f64) as i64 - kmax;
            let k1 = if g.dim() == 2 { (next() * (2 * kmax + 1) as f64) as i64 - kmax } else { 0 };
            let xi = [std::f64::consts::PI * k0 as f64 / l, std::f64::consts::PI * k1 as f64 / l];
            if (xi[0] * xi[0] + xi[1] * xi[1]).sqrt() <= band {
                modes.push((xi, Complex::new(next() - 0.5, next() - 0.5)));
            }
        }
        GridFunction::from_fn(g, |x| modes.iter().map(|(xi, a)| a * Complex::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1])).sum()).unwrap()
    }

    #[test]
    fn profile_shapes() {
        assert_eq!(smooth_step(0.5f64, 1.0, 2.0), 1.0);
        assert_eq!(smooth_step(2.5f64, 1.0, 2.0), 0.0);
        assert_relative_eq!(smooth_step(1.5f64, 1.0, 2.0), 0.5, epsilon = 1e-15);
        assert_eq!(band_pass(0.4f64), 0.0);
        assert_eq!(band_pass(1.0f64), 1.0);
        assert_eq!(band_pass(2.1f64), 0.0);
    }

    #[test]
    fn admissible_bank_invariants() {
        let bank = build_admissible_pair(&default_grid(), 4).unwrap();
        assert_eq!(bank.lower_bound, 1.0);
        assert_eq!(bank.support_leak, 0.0);
        assert!(band_pass_moments::<f64>(1) <= 1e-8);
        assert!(band_pass_moments::<f64>(2) <= 1e-8);
        assert!(matches!(build_admissible_pair(&default_grid(), 6), Err(Error::ResolutionExceeded { .. })));
    }

    #[test]
    fn dual_pair_examples() {
        let g = default_grid();
        let bank = build_dual_pair(&build_admissible_pair(&g, 4).unwrap()).unwrap();
        assert!(bank.dual_residual.unwrap() <= 1e-10);
        assert!(bank.min_denominator.unwrap() >= 1.0);
        let dual = bank.dual.as_ref().unwrap();
        for i in 0..g.len() {
            if g.frequency_norm(i) <= 0.5 {
                assert_eq!(dual[0][i], bank.phi[0][i]);
            }
        }
        let mut broken = build_admissible_pair(&g, 4).unwrap();
        broken.phi[2].iter_mut().for_each(|x| *x = 0.0);
        assert!(matches!(build_dual_pair(&broken), Err(Error::AdmissibilityFailure(_))));
    }

    #[test]
    fn resolution_of_unity_examples() {
        let g = default_grid();
        for v in [0, 2, 4] {
            let bank = build_resolution_of_unity(&g, v).unwrap();
            assert!(bank.partition_residual.unwrap() <= 1e-12);
            let omega = bank.omega.as_ref().unwrap();
            for (m, w) in bank.phi.iter().zip(omega) {
                for i in 0..g.len() {
                    if m[i] != 0.0 {
                        assert!((w[i] - 1.0).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn analysis_support_follows_frequency() {
        let g = default_grid();
        let bank = build_dual_pair(&build_admissible_pair(&g, 4).unwrap()).unwrap();
        assert!(analyze(&GridFunction::zeros(g), &bank).unwrap().is_zero());
        // xi = 2.5 lies only in the supports of phi_1 (1..4) and phi_2 (2..8).
        let k = 2.5 * 4.0 / std::f64::consts::PI;
        let xi = std::f64::consts::PI * k.round() / 4.0;
        let f = GridFunction::from_fn(g, |x| Complex::from_polar(1.0, xi * x[0])).unwrap();
        let lam = analyze(&f, &bank).unwrap();
        let expected: Vec<usize> = (0..=4).filter(|&v| bank.phi[v][k.round() as usize] != 0.0).collect();
        for v in 0..=4u32 {
            let big = lam.iter().filter(|(c, z)| c.level == v && z.norm() > 1e-8).count();
            assert_eq!(big > 0, expected.contains(&(v as usize)), "level {v}");
        }
    }

    #[test]
    fn phi_transform_round_trip() {
        for (dim, l, n, v) in [(1, 4.0, 1024, 4), (1, 2.0, 128, 2), (2, 2.0, 128, 2), (2, 2.0, 256, 3)] {
            let g = Grid::new(dim, l, n).unwrap();
            let bank = build_dual_pair(&build_admissible_pair(&g, v).unwrap()).unwrap();
            for seed in 0..5 {
                let f = band_limited(g, bank.band_limit(), seed);
                let rt = phi_transform_roundtrip(&f, &bank).unwrap();
                assert!(!rt.flagged);
                assert!(rt.residual <= 1e-6, "dim {dim} seed {seed}: {}", rt.residual);
            }
        }
    }

    #[test]
    fn synthesis_of_single_coefficient_matches_direct_atom() {
        let g = Grid::<f64>::new(1, 2.0, 256).unwrap();
        let bank = build_dual_pair(&build_admissible_pair(&g, 3).unwrap()).unwrap();
        let cube = DyadicCube::new(2, [5, 0]);
        let mut lam = DyadicCoefficients::new(g, 3).unwrap();
        lam.insert(cube, Complex::new(0.7, -0.2)).unwrap();
        let f = synthesize(&lam, &bank).unwrap();
        let atom = dual_atom(&bank, &cube).unwrap();
        for (a, b) in f.values().iter().zip(&atom) {
            assert!((a - b * Complex::new(0.7, -0.2)).norm() < 1e-10);
        }
        let zero = DyadicCoefficients::new(g, 3).unwrap();
        assert_eq!(synthesize(&zero, &bank).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn retraction_round_trip() {
        let g = default_grid();
        let bank = build_resolution_of_unity(&g, 4).unwrap();
        for seed in 0..5 {
            let f = band_limited(g, bank.band_limit(), seed);
            let rt = retract_roundtrip(&f, &bank).unwrap();
            assert!(rt.residual <= 1e-6 && !rt.flagged);
        }
        assert_eq!(retract_roundtrip(&GridFunction::zeros(g), &bank).unwrap().residual, 0.0);
        let rough = GridFunction::from_fn(g, |x| c(if x[0] < 1.0 { 1.0 } else { 0.0 })).unwrap();
        let rt = retract_roundtrip(&rough, &bank).unwrap();
        assert!(rt.flagged && rt.residual > 1e-3);
    }

    #[test]
    fn f_norm_frame_bounds_and_homogeneity() {
        let g = default_grid();
        let bank = build_admissible_pair(&g, 4).unwrap();
        let zero = ExponentField::constant(g, 0.0, Role::Smoothness).unwrap();
        let two = ExponentField::constant(g, 2.0, Role::Integrability).unwrap();
        let (lo, hi) = bank.frame_bounds();
        for seed in 0..5 {
            let f = band_limited(g, bank.band_limit(), seed);
            let fnorm = F_norm(&f, &zero, &two, &two, &bank, 1e-12).unwrap().value;
            let l2 = luxemburg_norm(&f, &two, 1e-12).unwrap().value;
            let r = fnorm / l2;
            assert!(r >= lo.sqrt() - 1e-9 && r <= hi.sqrt() + 1e-9, "{r} not in [{lo}, {hi}]");
            let doubled = F_norm(&f.scale(c(-3.0)), &zero, &two, &two, &bank, 1e-12).unwrap().value;
            assert_relative_eq!(doubled, 3.0 * fnorm, max_relative = 1e-9);
        }
        assert_eq!(F_norm(&GridFunction::zeros(g), &zero, &two, &two, &bank, 1e-12).unwrap().value, 0.0);
    }

    #[test]
    fn f_infty_examples() {
        let g = default_grid();
        let bank = build_admissible_pair(&g, 4).unwrap();
        let alpha = ExponentField::constant(g, 0.5, Role::Smoothness).unwrap();
        assert_eq!(F_infty_norm(&GridFunction::zeros(g), &alpha, 2.0, &bank).unwrap(), 0.0);
        // A mode at xi = 16 * pi / 4 * ... lands where only phi_3 is nonzero.
        let k = 40usize;
        let xi = std::f64::consts::PI * k as f64 / 4.0;
        let live: Vec<usize> = (0..=4).filter(|&v| bank.phi[v][k] != 0.0).collect();
        assert_eq!(live, vec![4]);
        let f = GridFunction::from_fn(g, |x| c((xi * x[0]).cos())).unwrap();
        let val = F_infty_norm(&f, &alpha, 2.0, &bank).unwrap();
        // Single level: the sup is attained on level-0..4 cubes of the level-4 integrand.
        let levels = weighted_levels(&f, &alpha, &bank).unwrap();
        let mut best = 0.0f64;
        for k in 0..=4u32 {
            for cube in enumerate_cubes(&g, k).unwrap() {
                let s: f64 = cube.cells(&g).iter().map(|&i| levels[4][i].powi(2)).sum::<f64>() * g.cell_volume();
                best = best.max((s / cube.measure::<f64>(1)).sqrt());
            }
        }
        assert_relative_eq!(val, best, max_relative = 1e-12);
        assert_relative_eq!(F_infty_norm(&f.scale(c(2.0)), &alpha, 2.0, &bank).unwrap(), 2.0 * val, max_relative = 1e-9);
    }
}
