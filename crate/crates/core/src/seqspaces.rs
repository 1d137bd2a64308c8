//! Dyadic coefficient sequences and the sequence spaces
//! `f^{alpha(.)}_{p(.),q(.)}` and `f^{alpha(.)}_{inf,q}`.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentField;
use crate::grid::{enumerate_cubes, DyadicCube, Grid};
use crate::lebesgue::{mixed_norm_abs, NormResult};
use crate::num::{pairwise_sum, Real};

/// Serializable form of one coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRecord {
    pub level: u32,
    pub index: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Finitely supported sequence `lambda_{v,m}` on the cubes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicCoefficients<T> {
    grid: Grid<T>,
    max_level: u32,
    coeffs: BTreeMap<DyadicCube, Complex<T>>,
}

impl<T: Real> DyadicCoefficients<T> {
    pub fn new(grid: Grid<T>, max_level: u32) -> Result<Self> {
        if max_level > grid.finest_level() {
            return Err(Error::ResolutionExceeded {
                level: max_level as i64,
                max: grid.finest_level() as i64,
            });
        }
        Ok(Self {
            grid,
            max_level,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// Sets `lambda_Q`. Zero values are stored as given.
    pub fn insert(&mut self, cube: DyadicCube, value: Complex<T>) -> Result<()> {
        if cube.level > self.max_level {
            return Err(Error::ResolutionExceeded {
                level: cube.level as i64,
                max: self.max_level as i64,
            });
        }
        cube.validate(&self.grid)?;
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite coefficient on {cube:?}")));
        }
        self.coeffs.insert(cube, value);
        Ok(())
    }

    pub fn get(&self, cube: &DyadicCube) -> Complex<T> {
        self.coeffs.get(cube).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicCube, &Complex<T>)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Cubes carrying a nonzero coefficient.
    pub fn support(&self) -> Vec<DyadicCube> {
        self.coeffs.iter().filter(|(_, z)| z.norm() > T::zero()).map(|(c, _)| *c).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|z| z.norm() == T::zero())
    }

    pub fn map(&self, f: impl Fn(&DyadicCube, Complex<T>) -> Complex<T>) -> Self {
        Self {
            grid: self.grid,
            max_level: self.max_level,
            coeffs: self.coeffs.iter().map(|(c, &z)| (*c, f(c, z))).collect(),
        }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        self.map(|_, z| z * c)
    }

    pub fn to_records(&self) -> Vec<CoefficientRecord> {
        let active = self.grid.dim();
        self.coeffs
            .iter()
            .map(|(c, z)| CoefficientRecord {
                level: c.level,
                index: c.index[..active].to_vec(),
                re: z.re.as_f64(),
                im: z.im.as_f64(),
            })
            .collect()
    }

    pub fn from_records(grid: Grid<T>, max_level: u32, records: &[CoefficientRecord]) -> Result<Self> {
        let mut out = Self::new(grid, max_level)?;
        for r in records {
            if r.index.len() != grid.dim() {
                return Err(Error::InvalidInput(format!(
                    "coefficient index {:?} does not match dimension {}",
                    r.index,
                    grid.dim()
                )));
            }
            let index = [r.index[0], r.index.get(1).copied().unwrap_or(0)];
            out.insert(DyadicCube::new(r.level, index), Complex::new(T::lit(r.re), T::lit(r.im)))?;
        }
        Ok(out)
    }
}

fn check_grid<T: Real>(lambda: &DyadicCoefficients<T>, fields: &[&ExponentField<T>]) -> Result<()> {
    if fields.iter().any(|f| !f.grid().same_as(&lambda.grid)) {
        return Err(Error::InvalidConfiguration("coefficients and exponents live on different grids".into()));
    }
    Ok(())
}

/// `2^{v(alpha(x)+n/2)}` at every grid point.
pub(crate) fn level_weight<T: Real>(alpha: &ExponentField<T>, v: u32) -> Vec<T> {
    let half_n = T::from_usize_lossy(alpha.grid().dim()) / T::lit(2.0);
    let v = T::from_usize_lossy(v as usize);
    alpha.values().iter().map(|&a| (v * (a + half_n)).exp2()).collect()
}

/// The level functions `F_v(x) = sum_m 2^{v(alpha(x)+n/2)} |lambda_{v,m}| chi_{v,m}(x)`
/// for `v = 0..=V`.
pub fn level_functions<T: Real>(lambda: &DyadicCoefficients<T>, alpha: &ExponentField<T>) -> Vec<Vec<T>> {
    let grid = &lambda.grid;
    (0..=lambda.max_level)
        .into_par_iter()
        .map(|v| {
            let w = level_weight(alpha, v);
            let mut out = vec![T::zero(); grid.len()];
            let lo = DyadicCube::new(v, [i64::MIN, i64::MIN]);
            let hi = DyadicCube::new(v, [i64::MAX, i64::MAX]);
            for (cube, z) in lambda.coeffs.range(lo..=hi) {
                let a = z.norm();
                if a == T::zero() {
                    continue;
                }
                for i in cube.cells(grid) {
                    out[i] = w[i] * a;
                }
            }
            out
        })
        .collect()
}

/// `||lambda||_{f^{alpha(.)}_{p(.),q(.)}}`.
pub fn f_norm<T: Real>(
    lambda: &DyadicCoefficients<T>,
    alpha: &ExponentField<T>,
    p: &ExponentField<T>,
    q: &ExponentField<T>,
    tol: T,
) -> Result<NormResult<T>> {
    check_grid(lambda, &[alpha, p, q])?;
    mixed_norm_abs(&level_functions(lambda, alpha), p, q, tol)
}

/// `sup_P |P|^{-1/q} (sum_{v >= v_P} int_P F_v^q)^{1/q}` over the dyadic cubes
/// `P` of side at most one.
pub fn f_infty_norm<T: Real>(lambda: &DyadicCoefficients<T>, alpha: &ExponentField<T>, q: T) -> Result<T> {
    check_grid(lambda, &[alpha])?;
    if !(q > T::zero()) || !q.is_finite() {
        return Err(Error::InvalidConfiguration(format!("q must be finite and positive, got {q}")));
    }
    let levels: Vec<Vec<T>> = level_functions(lambda, alpha)
        .into_iter()
        .map(|f| f.into_iter().map(|x| if x == T::zero() { x } else { x.powf(q) }).collect())
        .collect();
    Ok(sup_over_cubes(&lambda.grid, &levels, q))
}

/// Shared cube scan: `levels[v]` holds the integrand of level `v` already
/// raised to the power `q`.
pub(crate) fn sup_over_cubes<T: Real>(grid: &Grid<T>, levels: &[Vec<T>], q: T) -> T {
    let depth = levels.len();
    let mut tail = vec![T::zero(); grid.len()];
    let mut best = T::zero();
    let dim = grid.dim();
    let cell = grid.cell_volume();
    // Walk k from the top so that `tail` is the sum over v >= k.
    for k in (0..=grid.finest_level() as usize).rev() {
        if k < depth {
            for (t, &x) in tail.iter_mut().zip(&levels[k]) {
                *t = *t + x;
            }
        } else {
            continue;
        }
        let cubes = enumerate_cubes(grid, k as u32).expect("level within grid range");
        let measure: T = cubes[0].measure(dim);
        let level_best = cubes
            .par_iter()
            .map(|c| {
                let vals: Vec<T> = c.cells(grid).into_iter().map(|i| tail[i]).collect();
                pairwise_sum(&vals) * cell
            })
            .reduce(T::zero, T::max);
        best = best.max((level_best / measure).powf(T::one() / q));
    }
    best
}

/// Largest `|lambda_{j,m}| 2^{j(alpha(x) - n/p(x) + n/2)} / ||lambda||` over
/// supported cubes and grid points inside them.
pub fn coefficient_bound_check<T: Real>(
    lambda: &DyadicCoefficients<T>,
    alpha: &ExponentField<T>,
    p: &ExponentField<T>,
    q: &ExponentField<T>,
    tol: T,
) -> Result<T> {
    let norm = f_norm(lambda, alpha, p, q, tol)?.value;
    if !(norm > T::zero()) {
        return Err(Error::InvalidInput("coefficient sequence has zero norm".into()));
    }
    let grid = &lambda.grid;
    let n = T::from_usize_lossy(grid.dim());
    let half_n = n / T::lit(2.0);
    let worst = lambda
        .coeffs
        .par_iter()
        .map(|(cube, z)| {
            let a = z.norm();
            let j = T::from_usize_lossy(cube.level as usize);
            cube.cells(grid)
                .into_iter()
                .map(|i| a * (j * (alpha.at(i) - n / p.at(i) + half_n)).exp2())
                .fold(T::zero(), T::max)
        })
        .reduce(T::zero, T::max);
    Ok(worst / norm)
}

/// Subsets `E_Q` of the supported cubes with `|E_Q| > fraction |Q|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSelection<T> {
    pub masks: BTreeMap<DyadicCube, Vec<usize>>,
    pub fraction: T,
}

impl<T: Real> SubsetSelection<T> {
    pub fn new(masks: BTreeMap<DyadicCube, Vec<usize>>) -> Self {
        Self {
            masks,
            fraction: T::lit(0.5),
        }
    }

    pub fn with_fraction(mut self, fraction: T) -> Self {
        self.fraction = fraction;
        self
    }

    /// Checks the measure condition and that every mask lies in its cube.
    pub fn validate(&self, grid: &Grid<T>) -> Result<()> {
        if !(self.fraction > T::zero() && self.fraction < T::one()) {
            return Err(Error::InvalidSelection(format!("fraction {} outside (0, 1)", self.fraction)));
        }
        for (cube, mask) in &self.masks {
            cube.validate(grid).map_err(|e| Error::InvalidSelection(e.to_string()))?;
            let cells = cube.cells(grid);
            let mut sorted = mask.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != mask.len() || sorted.iter().any(|i| cells.binary_search(i).is_err()) {
                return Err(Error::InvalidSelection(format!("mask for {cube:?} leaves the cube")));
            }
            let measure = T::from_usize_lossy(mask.len()) * grid.cell_volume();
            if !(measure > self.fraction * cube.measure::<T>(grid.dim())) {
                return Err(Error::InvalidSelection(format!(
                    "mask for {cube:?} covers {measure}, needs more than {} of {}",
                    self.fraction,
                    cube.measure::<T>(grid.dim())
                )));
            }
        }
        Ok(())
    }
}

/// `E_Q = Q` for every supported cube.
pub fn full_selection<T: Real>(lambda: &DyadicCoefficients<T>) -> SubsetSelection<T> {
    SubsetSelection::new(lambda.support().into_iter().map(|c| (c, c.cells(&lambda.grid))).collect())
}

/// `sum_{v,m} 2^{v(alpha+n/2)q} |lambda_{v,m}|^q chi_{Q_{v,m}}` at every grid point.
fn full_integrand<T: Real>(lambda: &DyadicCoefficients<T>, alpha: &ExponentField<T>, q: T) -> Vec<T> {
    let mut acc = vec![T::zero(); lambda.grid.len()];
    for f in level_functions(lambda, alpha) {
        for (a, x) in acc.iter_mut().zip(f) {
            if x > T::zero() {
                *a = *a + x.powf(q);
            }
        }
    }
    acc
}

/// Keeps, in every cube, the `floor(cells/2) + 1` cells where the full
/// integrand is smallest (ties by cell index).
pub fn greedy_selection<T: Real>(lambda: &DyadicCoefficients<T>, alpha: &ExponentField<T>, q: T) -> SubsetSelection<T> {
    let key = full_integrand(lambda, alpha, q);
    let masks = lambda
        .support()
        .into_iter()
        .map(|cube| {
            let mut cells = cube.cells(&lambda.grid);
            cells.sort_by(|&a, &b| key[a].partial_cmp(&key[b]).unwrap().then(a.cmp(&b)));
            cells.truncate(cells.len() / 2 + 1);
            cells.sort_unstable();
            (cube, cells)
        })
        .collect();
    SubsetSelection::new(masks)
}

/// Grid maximum of `(sum_{v,m} 2^{v(alpha+n/2)q} |lambda_{v,m}|^q chi_{E_{v,m}})^{1/q}`.
pub fn f_infty_subset_norm<T: Real>(
    lambda: &DyadicCoefficients<T>,
    alpha: &ExponentField<T>,
    q: T,
    sel: &SubsetSelection<T>,
) -> Result<T> {
    check_grid(lambda, &[alpha])?;
    sel.validate(&lambda.grid)?;
    let support = lambda.support();
    if support.len() != sel.masks.len() || support.iter().any(|c| !sel.masks.contains_key(c)) {
        return Err(Error::InvalidSelection("selection does not cover exactly the support".into()));
    }
    let weights: Vec<Vec<T>> = (0..=lambda.max_level).map(|v| level_weight(alpha, v)).collect();
    let mut acc = vec![T::zero(); lambda.grid.len()];
    for (cube, mask) in &sel.masks {
        let a = lambda.get(cube).norm();
        let w = &weights[cube.level as usize];
        for &i in mask {
            acc[i] = acc[i] + (w[i] * a).powf(q);
        }
    }
    Ok(acc.into_iter().fold(T::zero(), T::max).powf(T::one() / q))
}

/// Infimum of [`f_infty_subset_norm`] over all admissible selections, by
/// enumerating minimal masks. Fails when more than `cap` combinations exist.
pub fn brute_force_subset_infimum<T: Real>(
    lambda: &DyadicCoefficients<T>,
    alpha: &ExponentField<T>,
    q: T,
    cap: u64,
) -> Result<T> {
    let grid = &lambda.grid;
    let support = lambda.support();
    let choices: Vec<Vec<Vec<usize>>> = support
        .iter()
        .map(|c| {
            let cells = c.cells(grid);
            combinations(&cells, cells.len() / 2 + 1)
        })
        .collect();
    let total = choices.iter().try_fold(1u64, |acc, ch| acc.checked_mul(ch.len() as u64));
    match total {
        Some(t) if t <= cap => {}
        _ => return Err(Error::UnsupportedParameters("too many masks for exhaustive search".into())),
    }
    let mut best = T::infinity();
    let mut pick = vec![0usize; support.len()];
    loop {
        let masks = support.iter().zip(&pick).map(|(c, &k)| (*c, choices_at(&choices, c, &support, k))).collect();
        best = best.min(f_infty_subset_norm(lambda, alpha, q, &SubsetSelection::new(masks))?);
        let mut i = 0;
        loop {
            if i == pick.len() {
                return Ok(if support.is_empty() { T::zero() } else { best });
            }
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

fn choices_at(choices: &[Vec<Vec<usize>>], cube: &DyadicCube, support: &[DyadicCube], k: usize) -> Vec<usize> {
    let pos = support.iter().position(|c| c == cube).expect("cube in support");
    choices[pos][k].clone()
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Report<T> {
    pub f_infty: T,
    pub best_subset: T,
    /// `f_infty / best_subset`, absent when both vanish.
    pub ratio: Option<T>,
    pub exhaustive: bool,
}

/// Compares `||lambda||_{f_{inf,q}}` with the best subset value found by the
/// greedy rule and, on tiny instances, by exhaustive search.
pub fn prop1_equivalence_check<T: Real>(lambda: &DyadicCoefficients<T>, alpha: &ExponentField<T>, q: T) -> Result<Prop1Report<T>> {
    let grid = &lambda.grid;
    let support = lambda.support();
    let cells: usize = support.iter().map(|c| c.cell_count(grid)).sum();
    if cells > 1 << 20 {
        return Err(Error::UnsupportedParameters(format!("support covers {cells} cells")));
    }
    let f_inf = f_infty_norm(lambda, alpha, q)?;
    let greedy = f_infty_subset_norm(lambda, alpha, q, &greedy_selection(lambda, alpha, q))?;
    let (best, exhaustive) = if cells <= 1 << 12 {
        match brute_force_subset_infimum(lambda, alpha, q, 1 << 16) {
            Ok(b) => (b.min(greedy), true),
            Err(_) => (greedy, false),
        }
    } else {
        (greedy, false)
    };
    Ok(Prop1Report {
        f_infty: f_inf,
        best_subset: best,
        ratio: (best > T::zero()).then(|| f_inf / best),
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{build_exponent, Recipe, Role};
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    fn konst(g: Grid<f64>, v: f64, role: Role) -> ExponentField<f64> {
        ExponentField::constant(g, v, role).unwrap()
    }

    fn single(g: Grid<f64>, v: u32, m: [i64; 2], a: f64) -> DyadicCoefficients<f64> {
        let mut l = DyadicCoefficients::new(g, g.finest_level()).unwrap();
        l.insert(DyadicCube::new(v, m), c(a)).unwrap();
        l
    }

    #[test]
    fn f_norm_examples() {
        let g = Grid::<f64>::new(1, 4.0, 256).unwrap();
        let zero = konst(g, 0.0, Role::Smoothness);
        let two = konst(g, 2.0, Role::Integrability);
        assert_relative_eq!(f_norm(&single(g, 0, [0, 0], 1.0), &zero, &two, &two, 1e-12).unwrap().value, 1.0, epsilon = 1e-14);
        for (dim, alpha, p, q) in [(1, 0.7, 3.0, 1.5), (2, -0.4, 1.5, 2.5), (1, 1.3, 2.0, 4.0)] {
            let g = Grid::<f64>::new(dim, 2.0, if dim == 1 { 256 } else { 64 }).unwrap();
            let a = konst(g, alpha, Role::Smoothness);
            let pp = konst(g, p, Role::Integrability);
            let qq = konst(g, q, Role::Integrability);
            for j in 0..=g.finest_level() {
                let n = dim as f64;
                let expect = 2f64.powf(j as f64 * (alpha + n / 2.0 - n / p));
                let got = f_norm(&single(g, j, [1, 0], 1.0), &a, &pp, &qq, 1e-13).unwrap().value;
                assert_relative_eq!(got, expect, max_relative = 1e-10);
            }
        }
        let empty = DyadicCoefficients::new(g, 3).unwrap();
        assert_eq!(f_norm(&empty, &zero, &two, &two, 1e-12).unwrap().value, 0.0);
        let mut bad = DyadicCoefficients::new(g, 2).unwrap();
        assert!(matches!(bad.insert(DyadicCube::new(3, [0, 0]), c(1.0)), Err(Error::ResolutionExceeded { .. })));
        assert!(DyadicCoefficients::new(g, 4).is_err());
    }

    /// Independent per-cube scan: for every candidate cube recompute the tail
    /// integral from the coefficient list directly.
    fn scan_f_infty(l: &DyadicCoefficients<f64>, alpha: f64, q: f64) -> f64 {
        let g = l.grid();
        let n = g.dim() as f64;
        let mut best = 0.0f64;
        for k in 0..=g.finest_level() {
            for p in enumerate_cubes(g, k).unwrap() {
                let pc = p.cells(g);
                let mut s = 0.0;
                for (cube, z) in l.iter() {
                    if cube.level < k {
                        continue;
                    }
                    let overlap = cube.cells(g).iter().filter(|i| pc.contains(i)).count() as f64 * g.cell_volume();
                    s += 2f64.powf(cube.level as f64 * (alpha + n / 2.0) * q) * z.norm().powf(q) * overlap;
                }
                best = best.max((s / p.measure::<f64>(g.dim())).powf(1.0 / q));
            }
        }
        best
    }

    #[test]
    fn f_infty_examples() {
        let g = Grid::<f64>::new(1, 2.0, 128).unwrap();
        let a = konst(g, 0.3, Role::Smoothness);
        for v in 0..=g.finest_level() {
            let l = single(g, v, [1, 0], 1.7);
            let expect = 2f64.powf(v as f64 * 0.8) * 1.7;
            assert_relative_eq!(f_infty_norm(&l, &a, 2.0).unwrap(), expect, max_relative = 1e-12);
            assert_relative_eq!(scan_f_infty(&l, 0.3, 2.0), expect, max_relative = 1e-12);
        }
        let mut two = single(g, 2, [0, 0], 1.7);
        two.insert(DyadicCube::new(2, [5, 0]), c(1.7)).unwrap();
        assert_relative_eq!(f_infty_norm(&two, &a, 2.0).unwrap(), 2f64.powf(1.6) * 1.7, max_relative = 1e-12);
        let empty = DyadicCoefficients::new(g, 3).unwrap();
        assert_eq!(f_infty_norm(&empty, &a, 2.0).unwrap(), 0.0);

        let mut mixed = DyadicCoefficients::new(g, 3).unwrap();
        for (v, m, z) in [(0u32, 1i64, 0.5), (1, 2, -1.0), (2, 5, 0.3), (3, 6, 2.0), (3, 7, 1.0)] {
            mixed.insert(DyadicCube::new(v, [m, 0]), c(z)).unwrap();
        }
        for q in [0.5, 1.0, 3.0] {
            assert_relative_eq!(f_infty_norm(&mixed, &a, q).unwrap(), scan_f_infty(&mixed, 0.3, q), max_relative = 1e-12);
        }
    }

    #[test]
    fn coefficient_bound_examples() {
        let g = Grid::<f64>::new(1, 2.0, 256).unwrap();
        let a = konst(g, 0.5, Role::Smoothness);
        let p = konst(g, 3.0, Role::Integrability);
        let q = konst(g, 1.5, Role::Integrability);
        let r = coefficient_bound_check(&single(g, 2, [3, 0], 0.8), &a, &p, &q, 1e-13).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-9);
        let empty = DyadicCoefficients::new(g, 3).unwrap();
        assert!(matches!(coefficient_bound_check(&empty, &a, &p, &q, 1e-12), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn subset_examples() {
        let g = Grid::<f64>::new(1, 2.0, 64).unwrap();
        let a = konst(g, 0.2, Role::Smoothness);
        let l = single(g, 1, [2, 0], 1.5);
        let full = f_infty_subset_norm(&l, &a, 2.0, &full_selection(&l)).unwrap();
        assert_relative_eq!(full, 2f64.powf(0.7) * 1.5, max_relative = 1e-12);
        let greedy = f_infty_subset_norm(&l, &a, 2.0, &greedy_selection(&l, &a, 2.0)).unwrap();
        assert!(greedy <= full);

        let mut sel = full_selection(&l);
        sel.masks.values_mut().for_each(|m| m.truncate(m.len() / 2));
        assert!(matches!(f_infty_subset_norm(&l, &a, 2.0, &sel), Err(Error::InvalidSelection(_))));
        assert!(f_infty_subset_norm(&l, &a, 2.0, &SubsetSelection::new(BTreeMap::new())).is_err());
    }

    #[test]
    fn greedy_within_factor_four_of_brute_force() {
        // Two level-1 cubes of eight cells each, overlapping level-0 content.
        let g = Grid::<f64>::new(1, 0.5, 16).unwrap();
        let a = build_exponent(&Recipe::SinePerturbation { base: 0.0, amplitude: 0.5, frequency: 1.0 }, &g, Role::Smoothness).unwrap();
        let mut l = DyadicCoefficients::new(g, 1).unwrap();
        l.insert(DyadicCube::new(1, [0, 0]), c(1.0)).unwrap();
        l.insert(DyadicCube::new(1, [1, 0]), c(-0.6)).unwrap();
        let brute = brute_force_subset_infimum(&l, &a, 2.0, 1 << 20).unwrap();
        let greedy = f_infty_subset_norm(&l, &a, 2.0, &greedy_selection(&l, &a, 2.0)).unwrap();
        assert!(brute <= greedy && greedy <= 4.0 * brute, "{brute} {greedy}");
        let rep = prop1_equivalence_check(&l, &a, 2.0).unwrap();
        assert!(rep.exhaustive);
        assert_eq!(rep.best_subset, brute);
    }

    #[test]
    fn prop1_examples() {
        let g = Grid::<f64>::new(1, 2.0, 64).unwrap();
        let a = konst(g, 0.0, Role::Smoothness);
        let l = single(g, 1, [1, 0], 1.0);
        let rep = prop1_equivalence_check(&l, &a, 2.0).unwrap();
        assert_relative_eq!(rep.f_infty, 2f64.powf(0.5), max_relative = 1e-12);
        assert!(rep.ratio.unwrap() >= 1.0 - 1e-12);
        let empty = DyadicCoefficients::new(g, 2).unwrap();
        let rep = prop1_equivalence_check(&empty, &a, 2.0).unwrap();
        assert_eq!((rep.f_infty, rep.best_subset, rep.ratio), (0.0, 0.0, None));
    }

    #[test]
    fn records_round_trip() {
        let g = Grid::<f64>::new(2, 1.0, 32).unwrap();
        let mut l = DyadicCoefficients::new(g, 2).unwrap();
        l.insert(DyadicCube::new(2, [3, 1]), Complex::new(0.5, -0.25)).unwrap();
        l.insert(DyadicCube::new(0, [1, 0]), c(2.0)).unwrap();
        let recs = l.to_records();
        assert_eq!(DyadicCoefficients::from_records(g, 2, &recs).unwrap(), l);
        let json = serde_json::to_string(&recs).unwrap();
        let back: Vec<CoefficientRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, recs);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn grid() -> Grid<f64> {
            Grid::new(1, 2.0, 128).unwrap()
        }

        fn coeffs() -> impl Strategy<Value = Vec<(u32, i64, f64)>> {
            proptest::collection::vec((0u32..=3, 0i64..32, -3.0f64..3.0), 1..40)
        }

        fn build(g: Grid<f64>, spec: &[(u32, i64, f64)]) -> DyadicCoefficients<f64> {
            let mut l = DyadicCoefficients::new(g, 3).unwrap();
            for &(v, m, z) in spec {
                let per = g.cubes_per_axis(v) as i64;
                l.insert(DyadicCube::new(v, [m % per, 0]), c(z)).unwrap();
            }
            l
        }

        fn fields(g: Grid<f64>) -> (ExponentField<f64>, ExponentField<f64>, ExponentField<f64>) {
            (
                build_exponent(&Recipe::SinePerturbation { base: 0.3, amplitude: 0.4, frequency: 1.0 }, &g, Role::Smoothness).unwrap(),
                build_exponent(&Recipe::PlateauRamp { left: 1.5, right: 3.0, width: 1.0 }, &g, Role::Integrability).unwrap(),
                build_exponent(&Recipe::SinePerturbation { base: 2.0, amplitude: 0.5, frequency: 2.0 }, &g, Role::Integrability).unwrap(),
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn lattice(spec in coeffs(), shrink in proptest::collection::vec(0.0f64..=1.0, 40)) {
                let g = grid();
                let (a, p, q) = fields(g);
                let l = build(g, &spec);
                let records: Vec<_> = l.to_records().into_iter().enumerate().map(|(i, mut r)| { r.re *= shrink[i % 40]; r }).collect();
                let smaller = DyadicCoefficients::from_records(g, 3, &records).unwrap();
                let big = f_norm(&l, &a, &p, &q, 1e-12).unwrap();
                let small = f_norm(&smaller, &a, &p, &q, 1e-12).unwrap();
                prop_assert!(small.lower <= big.value);
            }

            #[test]
            fn homogeneity(spec in coeffs(), s in -10.0f64..10.0) {
                prop_assume!(s.abs() > 1e-3);
                let g = grid();
                let (a, p, q) = fields(g);
                let l = build(g, &spec);
                let base = f_norm(&l, &a, &p, &q, 1e-13).unwrap().value;
                let scaled = f_norm(&l.scale(c(s)), &a, &p, &q, 1e-13).unwrap().value;
                prop_assert!((scaled - s.abs() * base).abs() <= 1e-9 * (s.abs() * base).max(1e-300));
            }

            #[test]
            fn level_shift_scaling(alpha in -1.0f64..1.0, pv in 1.0f64..4.0, qv in 1.0f64..4.0, j in 0u32..3, m in 0i64..4) {
                let g = grid();
                let a = konst(g, alpha, Role::Smoothness);
                let p = konst(g, pv, Role::Integrability);
                let q = konst(g, qv, Role::Integrability);
                let lo = f_norm(&single(g, j, [m, 0], 1.0), &a, &p, &q, 1e-13).unwrap().value;
                let hi = f_norm(&single(g, j + 1, [2 * m, 0], 1.0), &a, &p, &q, 1e-13).unwrap().value;
                prop_assert!((hi / lo - 2f64.powf(alpha + 0.5 - 1.0 / pv)).abs() <= 1e-10);
            }

            #[test]
            fn f_infty_single_closed_form(alpha in -1.0f64..1.0, v in 0u32..=3, m in 0i64..4, z in 0.01f64..5.0, qv in 0.5f64..4.0) {
                let g = grid();
                let a = konst(g, alpha, Role::Smoothness);
                let got = f_infty_norm(&single(g, v, [m, 0], z), &a, qv).unwrap();
                let expect = 2f64.powf(v as f64 * (alpha + 0.5)) * z;
                prop_assert!((got - expect).abs() <= 1e-9 * expect);
            }

            #[test]
            fn coefficient_bound_constant_exponents(spec in coeffs()) {
                let g = grid();
                let a = konst(g, 0.4, Role::Smoothness);
                let p = konst(g, 2.5, Role::Integrability);
                let q = konst(g, 1.5, Role::Integrability);
                let l = build(g, &spec);
                prop_assume!(!l.is_zero());
                let r = coefficient_bound_check(&l, &a, &p, &q, 1e-13).unwrap();
                prop_assert!(r <= 1.0 + 1e-9);
            }
        }
    }
}
