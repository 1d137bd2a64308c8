//! Complex interpolation on the strip `0 <= Re z <= 1` for scalar-valued
//! variable Lebesgue spaces, and the retraction-route check for the
//! Triebel-Lizorkin scale.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{interpolate_exponents, ExponentField, InterpolationMode, Role};
use crate::grid::{Grid, GridFunction};
use crate::lebesgue::{luxemburg_norm_abs, modular_scaled};
use crate::lpf::{F_norm, FilterBank};
use crate::num::{pairwise_sum, Real};

/// Half-width of the `t` window used by every strip quadrature.
pub const STRIP_HALF_WIDTH: f64 = 8.0;
/// Step of the uniform `t` grid.
pub const STRIP_STEP: f64 = 1.0 / 256.0;

/// A point `theta + i t` of the closed strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripPoint<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> StripPoint<T> {
    pub fn new(re: T, im: T) -> Result<Self> {
        if !(re >= T::zero() && re <= T::one()) || !im.is_finite() {
            return Err(Error::InvalidInput(format!("{re} + {im}i is not in the strip")));
        }
        Ok(Self { re, im })
    }

    pub fn to_complex(self) -> Complex<T> {
        Complex::new(self.re, self.im)
    }
}

fn check_open<T: Real>(theta: T) -> Result<()> {
    if theta > T::zero() && theta < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("theta must lie in (0, 1), got {theta}")))
    }
}

/// Harmonic-measure densities of the two boundary lines seen from `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPoisson<T> {
    theta: T,
}

impl<T: Real> StripPoisson<T> {
    pub fn theta(&self) -> T {
        self.theta
    }

    /// Density on `Re z = 0`: `sin(pi theta) / (2 (cosh(pi t) - cos(pi theta)))`.
    pub fn mu0(&self, t: T) -> T {
        let a = T::PI() * self.theta;
        a.sin() / (T::lit(2.0) * ((T::PI() * t).cosh() - a.cos()))
    }

    /// Density on `Re z = 1`: `sin(pi theta) / (2 (cosh(pi t) + cos(pi theta)))`.
    pub fn mu1(&self, t: T) -> T {
        let a = T::PI() * self.theta;
        a.sin() / (T::lit(2.0) * ((T::PI() * t).cosh() + a.cos()))
    }

    /// Quadrature nodes `t_k` and trapezoid weights on `|t| <= T`.
    pub fn nodes(&self) -> (Vec<T>, Vec<T>) {
        quadrature_nodes()
    }

    /// `(int mu0, int mu1)` by quadrature.
    pub fn masses(&self) -> (T, T) {
        let (t, w) = self.nodes();
        let m0: Vec<T> = t.iter().zip(&w).map(|(&t, &w)| w * self.mu0(t)).collect();
        let m1: Vec<T> = t.iter().zip(&w).map(|(&t, &w)| w * self.mu1(t)).collect();
        (pairwise_sum(&m0), pairwise_sum(&m1))
    }

    /// Value at `theta + i t0` of the harmonic function with boundary values
    /// `u(i t)` and `u(1 + i t)`.
    pub fn reproduce(&self, t0: T, u: impl Fn(Complex<T>) -> T) -> T {
        let (t, w) = self.nodes();
        let terms: Vec<T> = t
            .iter()
            .zip(&w)
            .map(|(&s, &w)| {
                let tt = s + t0;
                w * (u(Complex::new(T::zero(), tt)) * self.mu0(s) + u(Complex::new(T::one(), tt)) * self.mu1(s))
            })
            .collect();
        pairwise_sum(&terms)
    }
}

fn quadrature_nodes<T: Real>() -> (Vec<T>, Vec<T>) {
    let steps = (2.0 * STRIP_HALF_WIDTH / STRIP_STEP).round() as usize;
    let h = T::lit(STRIP_STEP);
    let start = -T::lit(STRIP_HALF_WIDTH);
    let t = (0..=steps).map(|k| start + h * T::from_usize_lossy(k)).collect();
    let mut w = vec![h; steps + 1];
    w[0] = h / T::lit(2.0);
    w[steps] = h / T::lit(2.0);
    (t, w)
}

pub fn strip_poisson<T: Real>(theta: T) -> Result<StripPoisson<T>> {
    check_open(theta)?;
    Ok(StripPoisson { theta })
}

/// A finite combination `sum_j a_j chi_{A_j}` of disjoint grid regions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction<T> {
    grid: Grid<T>,
    regions: Vec<(Complex<T>, Vec<usize>)>,
}

impl<T: Real> SimpleFunction<T> {
    pub fn new(grid: Grid<T>, mut regions: Vec<(Complex<T>, Vec<usize>)>) -> Result<Self> {
        let mut owner = vec![false; grid.len()];
        for (a, cells) in regions.iter_mut() {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::InvalidInput("region value is not finite".into()));
            }
            if cells.is_empty() {
                return Err(Error::InvalidInput("empty region".into()));
            }
            cells.sort_unstable();
            for &i in cells.iter() {
                if i >= grid.len() {
                    return Err(Error::InvalidInput(format!("cell {i} outside the grid")));
                }
                if owner[i] {
                    return Err(Error::InvalidInput(format!("regions overlap at cell {i}")));
                }
                owner[i] = true;
            }
        }
        Ok(Self { grid, regions })
    }

    /// `a chi_{[lo, hi)}` along the first axis (the whole second axis in 2D).
    pub fn indicator(grid: Grid<T>, lo: T, hi: T, a: Complex<T>) -> Result<Self> {
        let cells: Vec<usize> = (0..grid.len())
            .filter(|&i| {
                let x = grid.coords(i)[0];
                x >= lo && x < hi
            })
            .collect();
        Self::new(grid, vec![(a, cells)])
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn regions(&self) -> &[(Complex<T>, Vec<usize>)] {
        &self.regions
    }

    pub fn to_grid_function(&self) -> GridFunction<T> {
        let mut values = vec![Complex::new(T::zero(), T::zero()); self.grid.len()];
        for (a, cells) in &self.regions {
            for &i in cells {
                values[i] = *a;
            }
        }
        GridFunction::new(self.grid, values).expect("length matches grid")
    }

    pub fn abs(&self) -> Vec<T> {
        self.to_grid_function().abs()
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            grid: self.grid,
            regions: self.regions.iter().map(|(a, r)| (*a * c, r.clone())).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.regions.iter().all(|(a, _)| a.norm() == T::zero())
    }
}

/// The analytic family `g(x, z) = f(x) |f(x)|^{(p/p1 - p/p0)(x) (z - theta)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitorFamily<T> {
    pub f: SimpleFunction<T>,
    pub p0: ExponentField<T>,
    pub p1: ExponentField<T>,
    pub p: ExponentField<T>,
    pub theta: T,
    /// `p/p1 - p/p0` at every grid point.
    pub rate: Vec<T>,
}

impl<T: Real> CompetitorFamily<T> {
    pub fn eval(&self, idx: usize, z: Complex<T>) -> Complex<T> {
        let f = self.value(idx);
        let a = f.norm();
        if a == T::zero() {
            return f;
        }
        let w = (z - Complex::new(self.theta, T::zero())) * self.rate[idx];
        f * (w * a.ln()).exp()
    }

    pub fn value(&self, idx: usize) -> Complex<T> {
        self.f
            .regions
            .iter()
            .find(|(_, cells)| cells.binary_search(&idx).is_ok())
            .map_or(Complex::new(T::zero(), T::zero()), |(a, _)| *a)
    }

    /// `|g(x, z)|` on the whole grid.
    pub fn modulus(&self, z: Complex<T>) -> Vec<T> {
        let f = self.f.abs();
        let shift = z.re - self.theta;
        f.iter()
            .zip(&self.rate)
            .map(|(&a, &r)| if a == T::zero() { a } else { a * (shift * r * a.ln()).exp() })
            .collect()
    }
}

pub fn competitor_family<T: Real>(
    f: &SimpleFunction<T>,
    p0: &ExponentField<T>,
    p1: &ExponentField<T>,
    theta: T,
) -> Result<CompetitorFamily<T>> {
    check_open(theta)?;
    if f.is_zero() {
        return Err(Error::InvalidInput("competitor needs a nonzero function".into()));
    }
    if !f.grid.same_as(p0.grid()) {
        return Err(Error::InvalidConfiguration("function and exponents live on different grids".into()));
    }
    let p = interpolate_exponents(p0, p1, theta, InterpolationMode::Harmonic)?;
    let rate = (0..p.values().len()).map(|i| p.at(i) / p1.at(i) - p.at(i) / p0.at(i)).collect();
    Ok(CompetitorFamily {
        f: f.clone(),
        p0: p0.clone(),
        p1: p1.clone(),
        p,
        theta,
        rate,
    })
}

fn normalized<T: Real>(fam: &CompetitorFamily<T>) -> Result<()> {
    let n = luxemburg_norm_abs(&fam.f.abs(), &fam.p, T::default_tolerance())?.value;
    if (n - T::one()).abs() > T::lit(1e-8).max(T::epsilon() * T::lit(64.0)) {
        return Err(Error::InvalidInput(format!("competitor function has norm {n}, expected 1")));
    }
    Ok(())
}

fn t_samples<T: Real>() -> Vec<T> {
    [-4.0, -1.0, -0.25, 0.0, 0.5, 2.0, 6.0].iter().map(|&t| T::lit(t)).collect()
}

/// `sup_t rho_{p0}(g(it))` and `sup_t rho_{p1}(g(1+it))` over a sample of `t`.
pub fn boundary_modulars<T: Real>(fam: &CompetitorFamily<T>) -> Result<(T, T)> {
    normalized(fam)?;
    let mut r0 = T::zero();
    let mut r1 = T::zero();
    for t in t_samples::<T>() {
        r0 = r0.max(modular_scaled(&fam.modulus(Complex::new(T::zero(), t)), &fam.p0, T::one()));
        r1 = r1.max(modular_scaled(&fam.modulus(Complex::new(T::one(), t)), &fam.p1, T::one()));
    }
    Ok((r0, r1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeLinesReport<T> {
    pub region: usize,
    /// Smallest `rhs(x) - |f(x)|` over the region.
    pub worst_slack: T,
    pub max_abs: T,
}

/// Right-hand side of the three-lines bound
/// `(int |g(x,it)| mu0/(1-theta))^{1-theta} (int |g(x,1+it)| mu1/theta)^theta`
/// at every point of `cells`.
fn three_lines_rhs<T: Real>(fam: &CompetitorFamily<T>, cells: &[usize]) -> Vec<T> {
    let kernel = StripPoisson { theta: fam.theta };
    let (ts, ws) = kernel.nodes();
    let s = T::one() - fam.theta;
    cells
        .iter()
        .map(|&i| {
            let a: Vec<T> = ts
                .iter()
                .zip(&ws)
                .map(|(&t, &w)| w * fam.eval(i, Complex::new(T::zero(), t)).norm() * kernel.mu0(t))
                .collect();
            let b: Vec<T> = ts
                .iter()
                .zip(&ws)
                .map(|(&t, &w)| w * fam.eval(i, Complex::new(T::one(), t)).norm() * kernel.mu1(t))
                .collect();
            (pairwise_sum(&a) / s).powf(s) * (pairwise_sum(&b) / fam.theta).powf(fam.theta)
        })
        .collect()
}

pub fn three_lines_bound<T: Real>(fam: &CompetitorFamily<T>, region: usize) -> Result<ThreeLinesReport<T>> {
    let (_, cells) = fam
        .f
        .regions
        .get(region)
        .ok_or_else(|| Error::InvalidInput(format!("no region {region}")))?;
    let rhs = three_lines_rhs(fam, cells);
    let mut worst = T::infinity();
    let mut max_abs = T::zero();
    for (&i, r) in cells.iter().zip(rhs) {
        let a = fam.value(i).norm();
        worst = worst.min(r - a);
        max_abs = max_abs.max(a);
    }
    Ok(ThreeLinesReport {
        region,
        worst_slack: worst,
        max_abs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport<T> {
    pub norm: T,
    /// Largest boundary norm of the normalized competitor; bounds the
    /// interpolation norm of `f / ||f||` from above.
    pub upper_ratio: T,
    /// `||f|| / (B0^{1-theta} B1^theta)` with `B_i` the norms of the
    /// Poisson-averaged boundary moduli.
    pub lower_ratio: T,
    pub rho0: T,
    pub rho1: T,
}

/// Both certified ratios between the interpolation functional and `||f||_{p(.)}`.
pub fn scalar_interp_sandwich<T: Real>(
    f: &SimpleFunction<T>,
    p0: &ExponentField<T>,
    p1: &ExponentField<T>,
    theta: T,
    tol: T,
) -> Result<SandwichReport<T>> {
    let fam = competitor_family(f, p0, p1, theta)?;
    let norm = luxemburg_norm_abs(&f.abs(), &fam.p, tol)?.value;
    let unit = f.scale(Complex::new(T::one() / norm, T::zero()));
    let fam = competitor_family(&unit, p0, p1, theta)?;
    let (rho0, rho1) = boundary_modulars(&fam)?;
    let mut upper = T::zero();
    for t in t_samples::<T>() {
        let n0 = luxemburg_norm_abs(&fam.modulus(Complex::new(T::zero(), t)), p0, tol)?.value;
        let n1 = luxemburg_norm_abs(&fam.modulus(Complex::new(T::one(), t)), p1, tol)?.value;
        upper = upper.max(n0).max(n1);
    }

    let all: Vec<usize> = (0..f.grid.len()).collect();
    let kernel = StripPoisson { theta };
    let (ts, ws) = kernel.nodes();
    let s = T::one() - theta;
    let averaged = |re: T, mu: &(dyn Fn(T) -> T + Sync), mass: T| -> Vec<T> {
        all.par_iter()
            .map(|&i| {
                let terms: Vec<T> = ts
                    .iter()
                    .zip(&ws)
                    .map(|(&t, &w)| w * fam.eval(i, Complex::new(re, t)).norm() * mu(t))
                    .collect();
                pairwise_sum(&terms) / mass
            })
            .collect()
    };
    let b0 = averaged(T::zero(), &|t| kernel.mu0(t), s);
    let b1 = averaged(T::one(), &|t| kernel.mu1(t), theta);
    let nb0 = luxemburg_norm_abs(&b0, p0, tol)?.value;
    let nb1 = luxemburg_norm_abs(&b1, p1, tol)?.value;
    Ok(SandwichReport {
        norm,
        upper_ratio: upper,
        lower_ratio: T::one() / (nb0.powf(s) * nb1.powf(theta)),
        rho0,
        rho1,
    })
}

/// Constant-coefficient parameters of the retraction-route check.
#[derive(Debug, Clone, PartialEq)]
pub struct InterRestParams<T> {
    pub theta: T,
    pub p0: ExponentField<T>,
    pub p1: ExponentField<T>,
    pub alpha0: T,
    pub alpha1: T,
    pub q0: T,
    pub q1: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterRestReport<T> {
    /// `||f||_{F^alpha_{p,q}}` with the admissible bank.
    pub direct: T,
    /// The same weighted mixed norm of `(phi_v * f)_v` for the
    /// resolution-of-unity family.
    pub anchor: T,
    pub ratio: T,
}

/// Compares the Triebel-Lizorkin norm at the interpolated parameters with the
/// sequence-side norm reached through the resolution-of-unity retraction.
pub fn inter_rest_check<T: Real>(
    f: &GridFunction<T>,
    params: &InterRestParams<T>,
    admissible: &FilterBank<T>,
    unity: &FilterBank<T>,
    tol: T,
) -> Result<InterRestReport<T>> {
    let grid = *f.grid();
    let p = interpolate_exponents(&params.p0, &params.p1, params.theta, InterpolationMode::Harmonic)?;
    let s = T::one() - params.theta;
    let q = T::one() / (s / params.q0 + params.theta / params.q1);
    let alpha = s * params.alpha0 + params.theta * params.alpha1;
    let alpha = ExponentField::constant(grid, alpha, Role::Smoothness)?;
    let q = ExponentField::constant(grid, q, Role::Integrability)?;
    let direct = F_norm(f, &alpha, &p, &q, admissible, tol)?.value;
    let anchor = F_norm(f, &alpha, &p, &q, unity, tol)?.value;
    Ok(InterRestReport {
        direct,
        anchor,
        ratio: anchor / direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpf::{build_admissible_pair, build_resolution_of_unity};

    fn grid() -> Grid<f64> {
        Grid::new(1, 4.0, 256).unwrap()
    }

    fn field(g: Grid<f64>, f: impl Fn(f64) -> f64) -> ExponentField<f64> {
        ExponentField::from_fn(g, Role::Integrability, |x| f(x[0])).unwrap()
    }

    fn two_regions(g: Grid<f64>) -> SimpleFunction<f64> {
        let a: Vec<usize> = (0..g.len()).filter(|&i| g.coords(i)[0] < 1.0).collect();
        let b: Vec<usize> = (0..g.len()).filter(|&i| (2.0..3.5).contains(&g.coords(i)[0])).collect();
        SimpleFunction::new(g, vec![(Complex::new(3.0, 1.0), a), (Complex::new(0.0, -0.2), b)]).unwrap()
    }

    #[test]
    fn poisson_masses() {
        for theta in [0.1f64, 0.25, 0.5, 0.75, 0.9] {
            let k = strip_poisson(theta).unwrap();
            let (m0, m1) = k.masses();
            assert!((m0 - (1.0 - theta)).abs() <= 1e-8, "{theta}: {m0}");
            assert!((m1 - theta).abs() <= 1e-8, "{theta}: {m1}");
        }
        assert!(strip_poisson(1.0).is_err());
    }

    #[test]
    fn poisson_reflection_symmetry() {
        let a = strip_poisson(0.3).unwrap();
        let b = strip_poisson(0.7).unwrap();
        for k in -40..=40 {
            let t = k as f64 * 0.1;
            assert!((a.mu0(t) - b.mu1(t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn poisson_reproduces_polynomials() {
        for theta in [0.2, 0.5, 0.8] {
            let k = strip_poisson(theta).unwrap();
            for t0 in [0.0, 0.7, -1.3] {
                let z = Complex::new(theta, t0);
                for p in 0..=2 {
                    let got = k.reproduce(t0, |w: Complex<f64>| w.powi(p).re);
                    assert!((got - z.powi(p).re).abs() <= 1e-6, "theta {theta} t0 {t0} k {p}: {got}");
                }
            }
        }
    }

    #[test]
    fn competitor_equals_f_at_theta() {
        let g = grid();
        let f = two_regions(g);
        let fam = competitor_family(&f, &field(g, |x| 2.0 + 0.5 * x.sin()), &field(g, |x| 4.0 + x.cos()), 0.4).unwrap();
        let ff = f.to_grid_function();
        for i in 0..g.len() {
            assert_eq!(fam.eval(i, Complex::new(0.4, 0.0)), ff.values()[i]);
        }
        let same = competitor_family(&f, &field(g, |_| 3.0), &field(g, |_| 3.0), 0.4).unwrap();
        for i in 0..g.len() {
            assert!((same.eval(i, Complex::new(0.9, 2.0)) - ff.values()[i]).norm() <= 1e-15);
        }
    }

    #[test]
    fn overlapping_regions_are_rejected() {
        let g = grid();
        let r = SimpleFunction::new(g, vec![(Complex::new(1.0, 0.0), vec![1, 2]), (Complex::new(2.0, 0.0), vec![2, 3])]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn boundary_modulars_of_normalized_families() {
        let g = grid();
        let p0 = field(g, |x| 1.5 + 0.5 * x.sin());
        let p1 = field(g, |x| 5.0 + x.cos());
        let f = two_regions(g);
        let p = interpolate_exponents(&p0, &p1, 0.4, InterpolationMode::Harmonic).unwrap();
        let n = luxemburg_norm_abs(&f.abs(), &p, 1e-13).unwrap().value;
        let unit = f.scale(Complex::new(1.0 / n, 0.0));
        let fam = competitor_family(&unit, &p0, &p1, 0.4).unwrap();
        let (r0, r1) = boundary_modulars(&fam).unwrap();
        assert!(r0 <= 1.0 + 1e-9 && r1 <= 1.0 + 1e-9, "{r0} {r1}");
        assert!(r0 > 0.99 && r1 > 0.99);
        let raw = competitor_family(&f, &p0, &p1, 0.4).unwrap();
        assert!(matches!(boundary_modulars(&raw), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn three_lines_holds_and_scales() {
        let g = grid();
        let p0 = field(g, |x| 1.5 + 0.5 * x.sin());
        let p1 = field(g, |x| 5.0 + x.cos());
        let f = two_regions(g);
        let fam = competitor_family(&f, &p0, &p1, 0.6).unwrap();
        let big = competitor_family(&f.scale(Complex::new(0.0, 5.0)), &p0, &p1, 0.6).unwrap();
        for r in 0..2 {
            let a = three_lines_bound(&fam, r).unwrap();
            assert!(a.worst_slack >= -1e-8, "{a:?}");
            let b = three_lines_bound(&big, r).unwrap();
            assert!((b.max_abs - 5.0 * a.max_abs).abs() <= 1e-12);
        }
    }

    #[test]
    fn closed_form_sandwich() {
        let g = grid();
        let f = SimpleFunction::indicator(g, 0.0, 1.0, Complex::new(1.0, 0.0)).unwrap();
        let r = scalar_interp_sandwich(&f, &field(g, |_| 2.0), &field(g, |_| 4.0), 0.5, 1e-13).unwrap();
        assert!((r.norm - 1.0).abs() <= 1e-9);
        assert!((r.upper_ratio - 1.0).abs() <= 1e-9, "{r:?}");
        assert!((r.lower_ratio - 1.0).abs() <= 1e-6, "{r:?}");
    }

    #[test]
    fn degenerate_sandwich_is_one() {
        let g = grid();
        let p = field(g, |x| 2.0 + 0.3 * x.sin());
        let r = scalar_interp_sandwich(&two_regions(g), &p, &p, 0.3, 1e-13).unwrap();
        assert!((r.upper_ratio - 1.0).abs() <= 1e-9 && (r.lower_ratio - 1.0).abs() <= 1e-6, "{r:?}");
    }

    #[test]
    fn inter_rest_degenerate_is_theta_independent() {
        let g = Grid::new(1, 4.0, 1024).unwrap();
        let adm = build_admissible_pair(&g, 4).unwrap();
        let unity = build_resolution_of_unity(&g, 4).unwrap();
        let f = GridFunction::from_fn(g, |x| Complex::new((std::f64::consts::PI * x[0] / 4.0).cos(), 0.0)).unwrap();
        let p = field(g, |x| 2.0 + 0.5 * x.sin());
        let run = |theta| {
            let params = InterRestParams {
                theta,
                p0: p.clone(),
                p1: p.clone(),
                alpha0: 0.5,
                alpha1: 0.5,
                q0: 2.0,
                q1: 2.0,
            };
            inter_rest_check(&f, &params, &adm, &unity, 1e-12).unwrap().ratio
        };
        let (a, b) = (run(0.2), run(0.7));
        assert!((a - b).abs() <= 1e-9 * a);
        assert!(a > 0.2 && a < 5.0);
    }
}
