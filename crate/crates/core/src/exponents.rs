//! Variable exponents `p(.)`, `q(.)` and smoothness functions `alpha(.)`
//! sampled on a grid, together with log-Hölder diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::num::{max_of, min_of, Real};

/// What an exponent field is used for; integrability exponents must lie in
/// `[1, inf)`, smoothness functions may take any finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Integrability,
    Smoothness,
}

/// Named recipes for building exponent fields. All recipes depend on the
/// first coordinate only and are periodic on the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Recipe {
    Constant {
        value: f64,
    },
    /// `base + amplitude * sin(2 pi frequency x_1 / (2L))`.
    SinePerturbation {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// Equal to `left` in a belt around the box boundary and to `right` in a
    /// plateau around the center, joined by linear ramps of width `width`.
    PlateauRamp {
        left: f64,
        right: f64,
        width: f64,
    },
}

impl Recipe {
    fn sample<T: Real>(&self, grid: &Grid<T>, x: [T; 2]) -> T {
        match *self {
            Recipe::Constant { value } => T::lit(value),
            Recipe::SinePerturbation {
                base,
                amplitude,
                frequency,
            } => {
                let phase = T::TAU() * T::lit(frequency) * x[0] / grid.extent();
                T::lit(base) + T::lit(amplitude) * phase.sin()
            }
            Recipe::PlateauRamp { left, right, width } => {
                let l = grid.half_extent();
                let d = (x[0] - l).abs();
                let half = T::lit(0.5);
                let r = ((l * half - d) / T::lit(width) + half).max(T::zero()).min(T::one());
                T::lit(left) + (T::lit(right) - T::lit(left)) * r
            }
        }
    }

    /// The value approached near the box boundary, used as the decay target.
    pub fn boundary_limit(&self) -> f64 {
        match *self {
            Recipe::Constant { value } => value,
            Recipe::SinePerturbation { base, .. } => base,
            Recipe::PlateauRamp { left, .. } => left,
        }
    }

    fn check<T: Real>(&self, grid: &Grid<T>) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidExponent(format!("{name} must be finite")))
            }
        };
        match *self {
            Recipe::Constant { value } => finite(value, "value"),
            Recipe::SinePerturbation {
                base,
                amplitude,
                frequency,
            } => {
                finite(base, "base")?;
                finite(amplitude, "amplitude")?;
                finite(frequency, "frequency")
            }
            Recipe::PlateauRamp { left, right, width } => {
                finite(left, "left")?;
                finite(right, "right")?;
                if !(width > 0.0) || width > grid.half_extent().as_f64() {
                    return Err(Error::InvalidExponent(format!(
                        "ramp width must lie in (0, L], got {width}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// A pre-sampled exponent field.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField<T> {
    grid: Grid<T>,
    values: Vec<T>,
    role: Role,
    lo: T,
    hi: T,
    limit: Option<T>,
}

impl<T: Real> ExponentField<T> {
    /// Wraps raw samples after validating them against the role constraints.
    pub fn from_values(grid: Grid<T>, values: Vec<T>, role: Role, limit: Option<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidExponent(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidExponent(format!("non-finite exponent at index {i}")));
        }
        let lo = min_of(&values);
        let hi = max_of(&values);
        if role == Role::Integrability && lo < T::one() {
            return Err(Error::InvalidExponent(format!(
                "integrability exponent dips to {lo} < 1"
            )));
        }
        Ok(Self {
            grid,
            values,
            role,
            lo,
            hi,
            limit,
        })
    }

    pub fn constant(grid: Grid<T>, value: T, role: Role) -> Result<Self> {
        Self::from_values(grid, vec![value; grid.len()], role, Some(value))
    }

    pub fn from_fn(grid: Grid<T>, role: Role, mut f: impl FnMut([T; 2]) -> T) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self::from_values(grid, values, role, None)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn at(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Essential infimum on the grid (`p^-`).
    pub fn min(&self) -> T {
        self.lo
    }

    /// Essential supremum on the grid (`p^+`).
    pub fn max(&self) -> T {
        self.hi
    }

    pub fn limit(&self) -> Option<T> {
        self.limit
    }

    pub fn is_constant(&self) -> bool {
        self.lo == self.hi
    }

    /// Pointwise reciprocal `1/p`, tagged as a smoothness-type field.
    pub fn reciprocal(&self) -> Self {
        let values = self.values.iter().map(|&v| T::one() / v).collect();
        Self::from_values(
            self.grid,
            values,
            Role::Smoothness,
            self.limit.map(|l| T::one() / l),
        )
        .expect("reciprocal of a valid exponent is finite")
    }

    /// Resamples the recipe-free field on another grid of the same box by
    /// nearest-lower grid point. Prefer rebuilding from the recipe.
    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid)
    }
}

/// Samples a recipe on `grid` and validates the result for `role`.
pub fn build_exponent<T: Real>(recipe: &Recipe, grid: &Grid<T>, role: Role) -> Result<ExponentField<T>> {
    recipe.check(grid)?;
    let values: Vec<T> = (0..grid.len()).map(|i| recipe.sample(grid, grid.coords(i))).collect();
    ExponentField::from_values(*grid, values, role, Some(T::lit(recipe.boundary_limit())))
}

/// Pointwise conjugate exponent `p' = p / (p - 1)`.
pub fn conjugate<T: Real>(field: &ExponentField<T>) -> Result<ExponentField<T>> {
    if field.role != Role::Integrability {
        return Err(Error::InvalidExponent("conjugate needs an integrability exponent".into()));
    }
    if let Some(index) = field.values.iter().position(|&p| p <= T::one()) {
        return Err(Error::ConjugateUndefined { index });
    }
    let conj = |p: T| p / (p - T::one());
    let values = field.values.iter().map(|&p| conj(p)).collect();
    ExponentField::from_values(
        field.grid,
        values,
        Role::Integrability,
        field.limit.filter(|&l| l > T::one()).map(conj),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationMode {
    /// `1/p = (1-theta)/p0 + theta/p1`.
    Harmonic,
    /// `alpha = (1-theta) alpha0 + theta alpha1`.
    Affine,
}

fn check_theta<T: Real>(theta: T) -> Result<()> {
    if theta > T::zero() && theta < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidConfiguration(format!("theta must lie in (0, 1), got {theta}")))
    }
}

/// Interpolates two exponent fields at parameter `theta`.
pub fn interpolate_exponents<T: Real>(
    a0: &ExponentField<T>,
    a1: &ExponentField<T>,
    theta: T,
    mode: InterpolationMode,
) -> Result<ExponentField<T>> {
    check_theta(theta)?;
    if !a0.same_grid(a1) {
        return Err(Error::InvalidConfiguration("exponent fields live on different grids".into()));
    }
    let one_minus = T::one() - theta;
    match mode {
        InterpolationMode::Harmonic => {
            if a0.role != Role::Integrability || a1.role != Role::Integrability {
                return Err(Error::InvalidConfiguration(
                    "harmonic interpolation applies to integrability exponents".into(),
                ));
            }
            let h = |p0: T, p1: T| T::one() / (one_minus / p0 + theta / p1);
            let values = a0.values.iter().zip(&a1.values).map(|(&p0, &p1)| h(p0, p1)).collect();
            let limit = a0.limit.zip(a1.limit).map(|(l0, l1)| h(l0, l1));
            ExponentField::from_values(a0.grid, values, Role::Integrability, limit)
        }
        InterpolationMode::Affine => {
            if a0.role != Role::Smoothness || a1.role != Role::Smoothness {
                return Err(Error::InvalidConfiguration(
                    "affine interpolation applies to smoothness functions".into(),
                ));
            }
            let a = |x0: T, x1: T| one_minus * x0 + theta * x1;
            let values = a0.values.iter().zip(&a1.values).map(|(&x, &y)| a(x, y)).collect();
            let limit = a0.limit.zip(a1.limit).map(|(l0, l1)| a(l0, l1));
            ExponentField::from_values(a0.grid, values, Role::Smoothness, limit)
        }
    }
}

/// Harmonic interpolation against an infinite second endpoint:
/// `1/p = (1-theta)/p0`.
pub fn interpolate_with_infinite_endpoint<T: Real>(p0: &ExponentField<T>, theta: T) -> Result<ExponentField<T>> {
    check_theta(theta)?;
    if p0.role != Role::Integrability {
        return Err(Error::InvalidConfiguration(
            "harmonic interpolation applies to integrability exponents".into(),
        ));
    }
    let s = T::one() - theta;
    let values = p0.values.iter().map(|&p| p / s).collect();
    ExponentField::from_values(p0.grid, values, Role::Integrability, p0.limit.map(|l| l / s))
}

/// Estimated log-Hölder constants of a sampled field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogHolderReport<T> {
    /// Smallest `c` with `|g(x)-g(y)| <= c / log(e + 1/|x-y|)` over the examined pairs.
    pub c_loc: T,
    /// Smallest `c` with `|g(x)-g_inf| <= c / log(e + |x - center|)`.
    pub c_dec: T,
    pub limit: T,
    pub pairs_examined: u64,
    pub exhaustive: bool,
    /// `Some(c_loc <= budget)` when a budget was configured.
    pub pass: Option<bool>,
}

/// Pair-sampling configuration for [`log_holder_constants_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogHolderOptions {
    /// Enumerate all pairs when the grid has at most this many points.
    pub exhaustive_limit: usize,
    /// Window half-width (in cells, per axis) enumerated around every point
    /// in sampled mode.
    pub neighbourhood: usize,
    /// Random global pairs drawn per point in sampled mode.
    pub random_pairs_per_point: usize,
    pub seed: u64,
    pub budget: Option<f64>,
}

impl Default for LogHolderOptions {
    fn default() -> Self {
        Self {
            exhaustive_limit: 1 << 12,
            neighbourhood: 8,
            random_pairs_per_point: 16,
            seed: 0x5eed,
            budget: None,
        }
    }
}

pub fn log_holder_constants<T: Real>(field: &ExponentField<T>) -> LogHolderReport<T> {
    log_holder_constants_with(field, &LogHolderOptions::default())
}

pub fn log_holder_constants_with<T: Real>(field: &ExponentField<T>, opts: &LogHolderOptions) -> LogHolderReport<T> {
    let grid = &field.grid;
    let vals = &field.values;
    let e = T::E();
    let weight = |i: usize, j: usize| -> T {
        let d = grid.periodic_distance(i, j);
        (vals[i] - vals[j]).abs() * (e + T::one() / d).ln()
    };
    let n = grid.len();
    let exhaustive = n <= opts.exhaustive_limit;

    let (c_loc, pairs) = if exhaustive {
        let c = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| weight(i, j)).fold(T::zero(), T::max))
            .reduce(T::zero, T::max);
        (c, (n as u64) * (n as u64 - 1) / 2)
    } else {
        let npa = grid.points_per_axis();
        let r = opts.neighbourhood.min(npa / 2) as i64;
        let dim = grid.dim();
        let c = (0..n)
            .into_par_iter()
            .map(|i| {
                let [i0, i1] = grid.axis_indices(i);
                let mut best = T::zero();
                let r1 = if dim == 2 { r } else { 0 };
                for d1 in -r1..=r1 {
                    for d0 in -r..=r {
                        if d0 == 0 && d1 == 0 {
                            continue;
                        }
                        let j0 = (i0 as i64 + d0).rem_euclid(npa as i64) as usize;
                        let j1 = (i1 as i64 + d1).rem_euclid(npa as i64) as usize;
                        best = best.max(weight(i, grid.flat_index([j0, j1])));
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                for _ in 0..opts.random_pairs_per_point {
                    let j = rng.gen_range(0..n);
                    if j != i {
                        best = best.max(weight(i, j));
                    }
                }
                best
            })
            .reduce(T::zero, T::max);
        let window = (2 * r + 1).pow(dim as u32) as u64 - 1;
        (c, n as u64 * (window + opts.random_pairs_per_point as u64))
    };

    let limit = field.limit.unwrap_or(vals[0]);
    let c_dec = (0..n)
        .map(|i| (vals[i] - limit).abs() * (e + grid.distance_to_center(i)).ln())
        .fold(T::zero(), T::max);

    LogHolderReport {
        c_loc,
        c_dec,
        limit,
        pairs_examined: pairs,
        exhaustive,
        pass: opts.budget.map(|b| c_loc.as_f64() <= b),
    }
}
