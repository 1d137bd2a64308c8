//! Calderón products of the sequence spaces `f^{alpha}_{p,q}`.
//!
//! The product norm itself is an infimum over factorizations and is never
//! computed. Instead every coefficient sequence gets a bracket: the
//! interpolated norm from below and an explicit factorization from above.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{interpolate_exponents, interpolate_with_infinite_endpoint, ExponentField, InterpolationMode};
use crate::grid::DyadicCube;
use crate::lebesgue::pointwise_lq;
use crate::num::Real;
use crate::seqspaces::{f_infty_norm, f_infty_subset_norm, f_norm, level_functions, DyadicCoefficients, SubsetSelection};

fn identity_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(256.0))
}

fn recon_tol<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(1024.0))
}

/// Which explicit factorization to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// Pointwise powers, valid when `p/p0 = q/q0` everywhere.
    Pp,
    /// Level sets of the normalizer, for constant `q0, q1`.
    PqInfty,
}

/// Parameter pattern of an interpolation couple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    CaseI,
    CaseII,
    Unsupported,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::CaseI => "case-i",
            CaseTag::CaseII => "case-ii",
            CaseTag::Unsupported => "unsupported",
        }
    }
}

/// A sequence space `f^{alpha}_{p,q}` or `f^{alpha}_{inf,q}`.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpace<T> {
    Lebesgue {
        alpha: ExponentField<T>,
        p: ExponentField<T>,
        q: ExponentField<T>,
    },
    Infinity {
        alpha: ExponentField<T>,
        q: T,
    },
}

impl<T: Real> SequenceSpace<T> {
    pub fn norm(&self, lambda: &DyadicCoefficients<T>, tol: T) -> Result<T> {
        match self {
            SequenceSpace::Lebesgue { alpha, p, q } => Ok(f_norm(lambda, alpha, p, q, tol)?.value),
            SequenceSpace::Infinity { alpha, q } => f_infty_norm(lambda, alpha, *q),
        }
    }
}

/// Endpoint exponents of an interpolation couple together with the derived
/// interpolated exponents and the auxiliary fields `u, v, gamma, delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationParams<T> {
    pub theta: T,
    pub p0: ExponentField<T>,
    /// `None` stands for `p1 = inf`.
    pub p1: Option<ExponentField<T>>,
    pub q0: ExponentField<T>,
    pub q1: ExponentField<T>,
    pub alpha0: ExponentField<T>,
    pub alpha1: ExponentField<T>,
    pub p: ExponentField<T>,
    pub q: ExponentField<T>,
    pub alpha: ExponentField<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
    /// `p/p0 - q/q0`.
    pub gamma: Vec<T>,
    /// `p/p1 - q/q1`, or `-q/q1` when `p1 = inf`.
    pub delta: Vec<T>,
}

impl<T: Real> FactorizationParams<T> {
    /// The diagonal couple `f^{alpha0}_{p0,p0}`, `f^{alpha1}_{p1,p1}`.
    pub fn pp(
        theta: T,
        p0: ExponentField<T>,
        p1: ExponentField<T>,
        alpha0: ExponentField<T>,
        alpha1: ExponentField<T>,
    ) -> Result<Self> {
        Self::general(theta, p0.clone(), Some(p1.clone()), p0, p1, alpha0, alpha1)
    }

    /// The couple `f^{alpha0}_{p0,q0}`, `f^{alpha1}_{inf,q1}` with constant `q0, q1`.
    pub fn pq_infty(
        theta: T,
        p0: ExponentField<T>,
        alpha0: ExponentField<T>,
        alpha1: ExponentField<T>,
        q0: T,
        q1: T,
    ) -> Result<Self> {
        let grid = *p0.grid();
        let role = p0.role();
        let q0 = ExponentField::constant(grid, q0, role)?;
        let q1 = ExponentField::constant(grid, q1, role)?;
        Self::general(theta, p0, None, q0, q1, alpha0, alpha1)
    }

    /// Any couple `f^{alpha0}_{p0,q0}`, `f^{alpha1}_{p1,q1}`.
    pub fn general(
        theta: T,
        p0: ExponentField<T>,
        p1: Option<ExponentField<T>>,
        q0: ExponentField<T>,
        q1: ExponentField<T>,
        alpha0: ExponentField<T>,
        alpha1: ExponentField<T>,
    ) -> Result<Self> {
        let fields = [Some(&p0), p1.as_ref(), Some(&q0), Some(&q1), Some(&alpha0), Some(&alpha1)];
        if fields.iter().flatten().any(|f| !f.same_grid(&p0)) {
            return Err(Error::InvalidConfiguration("exponent fields live on different grids".into()));
        }
        for (name, f) in [("p0", Some(&p0)), ("p1", p1.as_ref()), ("q0", Some(&q0)), ("q1", Some(&q1))] {
            if let Some(f) = f {
                if f.min() < T::one() {
                    return Err(Error::InvalidExponent(format!("{name} must be at least 1, got minimum {}", f.min())));
                }
            }
        }
        let p = match &p1 {
            Some(p1) => interpolate_exponents(&p0, p1, theta, InterpolationMode::Harmonic)?,
            None => interpolate_with_infinite_endpoint(&p0, theta)?,
        };
        let q = interpolate_exponents(&q0, &q1, theta, InterpolationMode::Harmonic)?;
        let alpha = interpolate_exponents(&alpha0, &alpha1, theta, InterpolationMode::Affine)?;

        let grid = p0.grid();
        let half_n = T::from_usize_lossy(grid.dim()) / T::lit(2.0);
        let s = T::one() - theta;
        let len = grid.len();
        let mut u = Vec::with_capacity(len);
        let mut v = Vec::with_capacity(len);
        let mut gamma = Vec::with_capacity(len);
        let mut delta = Vec::with_capacity(len);
        for i in 0..len {
            let (qq, qq0, qq1) = (q.at(i), q0.at(i), q1.at(i));
            let (a0, a1) = (alpha0.at(i), alpha1.at(i));
            u.push(qq * theta * (a1 / qq0 - a0 / qq1) + half_n * (qq / qq0 - T::one()));
            v.push(qq * s * (a0 / qq1 - a1 / qq0) + half_n * (qq / qq1 - T::one()));
            let p_over_p1 = p1.as_ref().map_or(T::zero(), |p1| p.at(i) / p1.at(i));
            gamma.push(p.at(i) / p0.at(i) - qq / qq0);
            delta.push(p_over_p1 - qq / qq1);
        }
        let params = Self {
            theta,
            p0,
            p1,
            q0,
            q1,
            alpha0,
            alpha1,
            p,
            q,
            alpha,
            u,
            v,
            gamma,
            delta,
        };
        params.check_identities()?;
        Ok(params)
    }

    /// Largest violation of `(1-t)u + tv = 0`, `(1-t)p/p0 + tp/p1 = 1`,
    /// `(1-t)q/q0 + tq/q1 = 1` and `(1-t)gamma + t delta = 0` over the grid.
    pub fn identity_residual(&self) -> T {
        let t = self.theta;
        let s = T::one() - t;
        let mut worst = T::zero();
        for i in 0..self.u.len() {
            let p = self.p.at(i);
            let p_over_p1 = self.p1.as_ref().map_or(T::zero(), |p1| p / p1.at(i));
            let q = self.q.at(i);
            let scale = T::one() + self.u[i].abs().max(self.v[i].abs());
            let r = [
                (s * self.u[i] + t * self.v[i]).abs() / scale,
                (s * p / self.p0.at(i) + t * p_over_p1 - T::one()).abs(),
                (s * q / self.q0.at(i) + t * q / self.q1.at(i) - T::one()).abs(),
                (s * self.gamma[i] + t * self.delta[i]).abs(),
            ];
            worst = r.into_iter().fold(worst, T::max);
        }
        worst
    }

    fn check_identities(&self) -> Result<()> {
        let r = self.identity_residual();
        if r > identity_tol() {
            return Err(Error::InvalidConfiguration(format!("exponent identities fail by {r}")));
        }
        Ok(())
    }

    pub fn is_infinite_endpoint(&self) -> bool {
        self.p1.is_none()
    }

    pub fn case(&self) -> CaseTag {
        classify(&self.gamma, self.q0.is_constant() && self.q1.is_constant())
    }

    /// `f^{alpha}_{p,q}`.
    pub fn target_space(&self) -> SequenceSpace<T> {
        SequenceSpace::Lebesgue {
            alpha: self.alpha.clone(),
            p: self.p.clone(),
            q: self.q.clone(),
        }
    }

    pub fn space0(&self) -> SequenceSpace<T> {
        SequenceSpace::Lebesgue {
            alpha: self.alpha0.clone(),
            p: self.p0.clone(),
            q: self.q0.clone(),
        }
    }

    pub fn space1(&self) -> SequenceSpace<T> {
        match &self.p1 {
            Some(p1) => SequenceSpace::Lebesgue {
                alpha: self.alpha1.clone(),
                p: p1.clone(),
                q: self.q1.clone(),
            },
            None => SequenceSpace::Infinity {
                alpha: self.alpha1.clone(),
                q: self.q1.at(0),
            },
        }
    }
}

fn classify<T: Real>(gamma: &[T], q_constant: bool) -> CaseTag {
    let tol = identity_tol::<T>();
    if gamma.iter().all(|g| g.abs() <= tol) {
        CaseTag::CaseI
    } else if q_constant && gamma.iter().all(|g| g.abs() > tol) {
        CaseTag::CaseII
    } else {
        CaseTag::Unsupported
    }
}

/// Classifies a couple by `gamma = p/p0 - q/q0`. `p1 = None` means `p1 = inf`.
pub fn case_classifier<T: Real>(
    p0: &ExponentField<T>,
    p1: Option<&ExponentField<T>>,
    q0: &ExponentField<T>,
    q1: &ExponentField<T>,
    theta: T,
) -> Result<CaseTag> {
    let p = match p1 {
        Some(p1) => interpolate_exponents(p0, p1, theta, InterpolationMode::Harmonic)?,
        None => interpolate_with_infinite_endpoint(p0, theta)?,
    };
    let q = interpolate_exponents(q0, q1, theta, InterpolationMode::Harmonic)?;
    let gamma: Vec<T> = (0..p.values().len()).map(|i| p.at(i) / p0.at(i) - q.at(i) / q0.at(i)).collect();
    Ok(classify(&gamma, q0.is_constant() && q1.is_constant()))
}

/// Outcome of the Hölder direction check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport<T> {
    pub norm: T,
    pub norm0: T,
    pub norm1: T,
    /// `norm0^{1-theta} norm1^theta`.
    pub bound: T,
    /// `bound - norm`.
    pub margin: T,
    /// Same bound with `||lambda1||` measured in `L^inf(l^{q1})`, for which
    /// Hölder's inequality is exact. Equal to `bound` for finite `p1`.
    pub exact_bound: T,
}

impl<T: Real> HolderReport<T> {
    /// `margin >= -slack * bound`.
    pub fn holds(&self, slack: T) -> bool {
        self.margin >= -slack * self.bound
    }
}

/// Checks `||lambda|| <= ||lambda0||^{1-theta} ||lambda1||^theta` after
/// verifying the pointwise domination `|lambda| <= |lambda0|^{1-theta} |lambda1|^theta`.
pub fn verify_holder_direction<T: Real>(
    lambda: &DyadicCoefficients<T>,
    lambda0: &DyadicCoefficients<T>,
    lambda1: &DyadicCoefficients<T>,
    params: &FactorizationParams<T>,
    tol: T,
) -> Result<HolderReport<T>> {
    let t = params.theta;
    let s = T::one() - t;
    let slack = recon_tol::<T>();
    let offending: Vec<DyadicCube> = lambda
        .iter()
        .filter(|(cube, z)| {
            let dom = lambda0.get(cube).norm().powf(s) * lambda1.get(cube).norm().powf(t);
            z.norm() > dom * (T::one() + slack)
        })
        .map(|(c, _)| *c)
        .collect();
    if !offending.is_empty() {
        let shown: Vec<String> = offending.iter().take(8).map(|c| format!("({}, {:?})", c.level, c.index)).collect();
        return Err(Error::PreconditionViolation(format!(
            "domination fails on {} cubes: {}",
            offending.len(),
            shown.join(", ")
        )));
    }
    let norm = params.target_space().norm(lambda, tol)?;
    let norm0 = params.space0().norm(lambda0, tol)?;
    let norm1 = params.space1().norm(lambda1, tol)?;
    let bound = norm0.powf(s) * norm1.powf(t);
    let exact_bound = if params.is_infinite_endpoint() {
        let g1 = pointwise_lq(&level_functions(lambda1, &params.alpha1), &params.q1);
        norm0.powf(s) * g1.into_iter().fold(T::zero(), T::max).powf(t)
    } else {
        bound
    };
    Ok(HolderReport {
        norm,
        norm0,
        norm1,
        bound,
        margin: bound - norm,
        exact_bound,
    })
}

/// Level sets `A_l = {(g/||lambda||)^gamma > 2^l}` and the cube classes `C_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetDecomposition<T> {
    /// `g(x) = (sum_{j,m} 2^{j(alpha+n/2)q} |lambda_{j,m}|^q chi_{j,m}(x))^{1/q}`.
    pub g: Vec<T>,
    pub norm: T,
    /// `gamma(x) log2(g(x)/||lambda||)`, so that `x in A_l` iff `s(x) > l`.
    pub log_level: Vec<T>,
    pub ell_min: i64,
    pub ell_max: i64,
    pub classes: BTreeMap<i64, Vec<DyadicCube>>,
    /// Stored cubes in no class; their coefficients vanish.
    pub unassigned: Vec<DyadicCube>,
}

impl<T: Real> LevelSetDecomposition<T> {
    /// Indicator of `A_l` on the grid.
    pub fn set(&self, ell: i64) -> Vec<bool> {
        let l = T::from_i64(ell).expect("level fits the scalar type");
        self.log_level.iter().map(|&s| s > l).collect()
    }

    /// Class index of a cube, if any.
    pub fn class_of(&self, cube: &DyadicCube) -> Option<i64> {
        self.classes.iter().find(|(_, cs)| cs.binary_search(cube).is_ok()).map(|(&l, _)| l)
    }

    pub fn class_sizes(&self) -> BTreeMap<i64, usize> {
        self.classes.iter().map(|(&l, c)| (l, c.len())).collect()
    }

    /// Re-derives the nesting, disjointness and membership rule by counting.
    pub fn check_invariants(&self, lambda: &DyadicCoefficients<T>) -> Result<()> {
        let grid = lambda.grid();
        if !self.classes.is_empty() {
            let mut prev = self.set(self.ell_min);
            for ell in self.ell_min + 1..=self.ell_max + 1 {
                let cur = self.set(ell);
                if cur.iter().zip(&prev).any(|(&c, &p)| c && !p) {
                    return Err(Error::PreconditionViolation(format!("A_{ell} is not contained in A_{}", ell - 1)));
                }
                prev = cur;
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (&ell, cubes) in &self.classes {
            let l = T::from_i64(ell).expect("level fits the scalar type");
            for cube in cubes {
                if !seen.insert(*cube) {
                    return Err(Error::PreconditionViolation(format!("cube {cube:?} in two classes")));
                }
                let cells = cube.cells(grid);
                let half = cells.len();
                let inside = cells.iter().filter(|&&i| self.log_level[i] > l).count();
                let above = cells.iter().filter(|&&i| self.log_level[i] > l + T::one()).count();
                if 2 * inside <= half || 2 * above > half {
                    return Err(Error::PreconditionViolation(format!("cube {cube:?} violates the rule for class {ell}")));
                }
            }
        }
        let zero = T::lit(1e-12) * self.norm;
        if let Some(c) = self.unassigned.iter().find(|c| lambda.get(c).norm() > zero) {
            return Err(Error::PreconditionViolation(format!("unassigned cube {c:?} carries a nonzero coefficient")));
        }
        Ok(())
    }
}

/// `k`-th largest entry (1-based).
fn kth_largest<T: Real>(mut xs: Vec<T>, k: usize) -> T {
    let idx = xs.len() - k;
    let (_, x, _) = xs.select_nth_unstable_by(idx, |a, b| a.partial_cmp(b).expect("finite levels"));
    *x
}

/// Splits the support of `lambda` into the classes `C_l` using the
/// interpolated `alpha, q` and `gamma` of `params`.
pub fn build_level_sets<T: Real>(
    lambda: &DyadicCoefficients<T>,
    params: &FactorizationParams<T>,
    tol: T,
) -> Result<LevelSetDecomposition<T>> {
    if params.gamma.iter().any(|g| g.abs() <= identity_tol()) {
        return Err(Error::InvalidConfiguration("gamma vanishes somewhere; use the pointwise construction".into()));
    }
    if !params.q.is_constant() {
        return Err(Error::InvalidConfiguration("level sets need a constant q".into()));
    }
    let grid = lambda.grid();
    let g = pointwise_lq(&level_functions(lambda, &params.alpha), &params.q);
    let support = lambda.support();
    let unassigned: Vec<DyadicCube> = lambda.iter().map(|(c, _)| *c).filter(|c| support.binary_search(c).is_err()).collect();
    if support.is_empty() {
        return Ok(LevelSetDecomposition {
            g,
            norm: T::zero(),
            log_level: vec![T::neg_infinity(); grid.len()],
            ell_min: 0,
            ell_max: -1,
            classes: BTreeMap::new(),
            unassigned,
        });
    }
    let norm = params.target_space().norm(lambda, tol)?;
    let log_level: Vec<T> = g.iter().zip(&params.gamma).map(|(&x, &gm)| gm * (x / norm).log2()).collect();
    let mut classes: BTreeMap<i64, Vec<DyadicCube>> = BTreeMap::new();
    for cube in &support {
        let vals: Vec<T> = cube.cells(grid).into_iter().map(|i| log_level[i]).collect();
        let k = vals.len() / 2 + 1;
        let sk = kth_largest(vals, k);
        if !sk.is_finite() {
            return Err(Error::SolverFailure { iterations: 0 });
        }
        let ell = sk.ceil().to_i64().expect("level index fits i64") - 1;
        classes.entry(ell).or_default().push(*cube);
    }
    for cubes in classes.values_mut() {
        cubes.sort_unstable();
    }
    let ell_min = *classes.keys().next().expect("nonempty support");
    let ell_max = *classes.keys().next_back().expect("nonempty support");
    Ok(LevelSetDecomposition {
        g,
        norm,
        log_level,
        ell_min,
        ell_max,
        classes,
        unassigned,
    })
}

/// Summary of a level-set decomposition kept with a factorization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetSummary {
    pub ell_min: i64,
    pub ell_max: i64,
    pub class_sizes: BTreeMap<i64, usize>,
    pub zero_count: usize,
}

/// The factors `lambda0, lambda1` with `|lambda| = ||lambda|| lambda0^{1-theta} lambda1^theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationResult<T> {
    pub lambda0: DyadicCoefficients<T>,
    pub lambda1: DyadicCoefficients<T>,
    pub norm: T,
    pub reconstruction_error: T,
    pub norm0: T,
    /// `||lambda1||` as used by the upper bound: the subset evaluation with
    /// `E_Q = Q \ A_{l+1}` when `p1 = inf`, the plain norm otherwise.
    pub norm1: T,
    /// Plain `||lambda1||_{f_{inf,q1}}` when `p1 = inf`.
    pub norm1_direct: Option<T>,
    pub level_sets: Option<LevelSetSummary>,
}

fn reconstruction_error<T: Real>(
    lambda: &DyadicCoefficients<T>,
    l0: &DyadicCoefficients<T>,
    l1: &DyadicCoefficients<T>,
    norm: T,
    theta: T,
) -> T {
    lambda
        .iter()
        .map(|(c, z)| (z.norm() - norm * l0.get(c).re.powf(T::one() - theta) * l1.get(c).re.powf(theta)).abs())
        .fold(T::zero(), T::max)
}

fn nonzero_norm<T: Real>(lambda: &DyadicCoefficients<T>, params: &FactorizationParams<T>, tol: T) -> Result<T> {
    let norm = params.target_space().norm(lambda, tol)?;
    if !(norm > T::zero()) {
        return Err(Error::InvalidInput("coefficient sequence has zero norm".into()));
    }
    Ok(norm)
}

/// `lambda0 = 2^{ju(x)} (|lambda|/||lambda||)^{p/p0}` and
/// `lambda1 = 2^{jv(x)} (|lambda|/||lambda||)^{p/p1}` at the lower-left corner `x`.
pub fn factorize_pp<T: Real>(
    lambda: &DyadicCoefficients<T>,
    params: &FactorizationParams<T>,
    tol: T,
) -> Result<FactorizationResult<T>> {
    if params.case() != CaseTag::CaseI {
        return Err(Error::InvalidConfiguration("pointwise construction needs p/p0 = q/q0 everywhere".into()));
    }
    let Some(p1) = &params.p1 else {
        return Err(Error::InvalidConfiguration("pointwise construction needs a finite p1".into()));
    };
    let norm = nonzero_norm(lambda, params, tol)?;
    let grid = *lambda.grid();
    let factor = |exp: &[T], pe: &ExponentField<T>| {
        lambda.map(|cube, z| {
            if z.norm() == T::zero() {
                return num_complex::Complex::new(T::zero(), T::zero());
            }
            let x = cube.corner_index(&grid);
            let j = T::from_usize_lossy(cube.level as usize);
            let r = params.p.at(x) / pe.at(x);
            num_complex::Complex::new((j * exp[x]).exp2() * (z.norm() / norm).powf(r), T::zero())
        })
    };
    let lambda0 = factor(&params.u, &params.p0);
    let lambda1 = factor(&params.v, p1);
    let norm0 = params.space0().norm(&lambda0, tol)?;
    let norm1 = params.space1().norm(&lambda1, tol)?;
    Ok(FactorizationResult {
        reconstruction_error: reconstruction_error(lambda, &lambda0, &lambda1, norm, params.theta),
        lambda0,
        lambda1,
        norm,
        norm0,
        norm1,
        norm1_direct: None,
        level_sets: None,
    })
}

/// `lambda0 = 2^{l + ju(x)} (|lambda|/||lambda||)^{q/q0}` and
/// `lambda1 = 2^{l delta/gamma + jv(x)} (|lambda|/||lambda||)^{q/q1}` on the class `C_l`.
pub fn factorize_pq_infty<T: Real>(
    lambda: &DyadicCoefficients<T>,
    params: &FactorizationParams<T>,
    tol: T,
) -> Result<FactorizationResult<T>> {
    if params.case() != CaseTag::CaseII {
        return Err(Error::InvalidConfiguration(
            "level-set construction needs constant q0, q1 and gamma nowhere zero".into(),
        ));
    }
    let ratio: Vec<T> = params.delta.iter().zip(&params.gamma).map(|(&d, &g)| d / g).collect();
    let r0 = ratio[0];
    if !(r0 < T::zero()) || ratio.iter().any(|&r| (r - r0).abs() > identity_tol::<T>() * (T::one() + r0.abs())) {
        return Err(Error::PreconditionViolation("delta/gamma is not a negative constant".into()));
    }
    let norm = nonzero_norm(lambda, params, tol)?;
    let dec = build_level_sets(lambda, params, tol)?;
    let grid = *lambda.grid();
    let q = params.q.at(0);
    let mut lambda0 = DyadicCoefficients::new(grid, lambda.max_level())?;
    let mut lambda1 = DyadicCoefficients::new(grid, lambda.max_level())?;
    let mut masks = BTreeMap::new();
    for (&ell, cubes) in &dec.classes {
        let l = T::from_i64(ell).expect("level fits the scalar type");
        for cube in cubes {
            let x = cube.corner_index(&grid);
            let j = T::from_usize_lossy(cube.level as usize);
            let a = lambda.get(cube).norm() / norm;
            let z0 = (l + j * params.u[x]).exp2() * a.powf(q / params.q0.at(x));
            let z1 = (l * ratio[x] + j * params.v[x]).exp2() * a.powf(q / params.q1.at(x));
            lambda0.insert(*cube, num_complex::Complex::new(z0, T::zero()))?;
            lambda1.insert(*cube, num_complex::Complex::new(z1, T::zero()))?;
            let above = l + T::one();
            let keep: Vec<usize> = cube.cells(&grid).into_iter().filter(|&i| !(dec.log_level[i] > above)).collect();
            masks.insert(*cube, keep);
        }
    }
    let norm0 = params.space0().norm(&lambda0, tol)?;
    let (norm1, norm1_direct) = if params.is_infinite_endpoint() {
        let sel = SubsetSelection::new(masks).with_fraction(T::lit(0.25));
        let subset = f_infty_subset_norm(&lambda1, &params.alpha1, params.q1.at(0), &sel)?;
        (subset, Some(params.space1().norm(&lambda1, tol)?))
    } else {
        (params.space1().norm(&lambda1, tol)?, None)
    };
    let summary = LevelSetSummary {
        ell_min: dec.ell_min,
        ell_max: dec.ell_max,
        class_sizes: dec.class_sizes(),
        zero_count: dec.unassigned.len(),
    };
    Ok(FactorizationResult {
        reconstruction_error: reconstruction_error(lambda, &lambda0, &lambda1, norm, params.theta),
        lambda0,
        lambda1,
        norm,
        norm0,
        norm1,
        norm1_direct,
        level_sets: Some(summary),
    })
}

pub fn factorize<T: Real>(
    lambda: &DyadicCoefficients<T>,
    params: &FactorizationParams<T>,
    construction: Construction,
    tol: T,
) -> Result<FactorizationResult<T>> {
    match construction {
        Construction::Pp => factorize_pp(lambda, params, tol),
        Construction::PqInfty => factorize_pq_infty(lambda, params, tol),
    }
}

/// Upper bound `||lambda|| max(1,||lambda0||)^{1-theta} max(1,||lambda1||)^theta`
/// for the Calderón product norm.
pub fn calderon_upper<T: Real>(
    lambda: &DyadicCoefficients<T>,
    params: &FactorizationParams<T>,
    construction: Construction,
    tol: T,
) -> Result<T> {
    Ok(upper_from(&factorize(lambda, params, construction, tol)?, params.theta))
}

fn upper_from<T: Real>(f: &FactorizationResult<T>, theta: T) -> T {
    f.norm * f.norm0.max(T::one()).powf(T::one() - theta) * f.norm1.max(T::one()).powf(theta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport<T> {
    pub norms: Vec<T>,
    pub target: T,
    pub monotone: bool,
    pub final_gap: T,
    pub pass: bool,
}

/// Norms of increasing truncations `lambda_n` of `lambda` should increase to `||lambda||`.
pub fn lattice_property_check<T: Real>(
    truncations: &[DyadicCoefficients<T>],
    lambda: &DyadicCoefficients<T>,
    space: &SequenceSpace<T>,
    tol: T,
) -> Result<LatticeReport<T>> {
    let slack = recon_tol::<T>();
    for (n, t) in truncations.iter().enumerate() {
        if let Some((c, _)) = t.iter().find(|(c, z)| z.norm() > lambda.get(c).norm() * (T::one() + slack)) {
            return Err(Error::PreconditionViolation(format!("truncation {n} exceeds lambda at {c:?}")));
        }
    }
    let norms: Vec<T> = truncations.par_iter().map(|t| space.norm(t, tol)).collect::<Result<_>>()?;
    let target = space.norm(lambda, tol)?;
    let monotone = norms.windows(2).all(|w| w[1] >= w[0] * (T::one() - slack));
    let final_gap = norms.last().map_or(target, |&l| (target - l).abs());
    let pass = monotone && final_gap <= slack * target.max(T::min_positive_value());
    Ok(LatticeReport {
        norms,
        target,
        monotone,
        final_gap,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceRow<T> {
    pub corpus_id: usize,
    pub lower: T,
    pub upper: T,
    pub ratio: T,
    pub case_tag: CaseTag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport<T> {
    pub rows: Vec<EquivalenceRow<T>>,
    pub min_ratio: T,
    pub max_ratio: T,
    pub max_reconstruction_error: T,
}

impl<T: Real> EquivalenceReport<T> {
    /// CSV with columns `corpus-id, lower, upper, ratio, case-tag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["corpus-id", "lower", "upper", "ratio", "case-tag"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.corpus_id.to_string(),
                format!("{:e}", r.lower),
                format!("{:e}", r.upper),
                format!("{:e}", r.ratio),
                r.case_tag.as_str().to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }
}

/// Brackets the Calderón product norm of every corpus element between the
/// interpolated norm and [`calderon_upper`].
pub fn equivalence_experiment<T: Real>(
    corpus: &[DyadicCoefficients<T>],
    params: &FactorizationParams<T>,
    construction: Construction,
    tol: T,
) -> Result<EquivalenceReport<T>> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    let case_tag = params.case();
    let rows: Vec<(EquivalenceRow<T>, T)> = corpus
        .par_iter()
        .enumerate()
        .map(|(id, lambda)| {
            let f = factorize(lambda, params, construction, tol)?;
            let upper = upper_from(&f, params.theta);
            let row = EquivalenceRow {
                corpus_id: id,
                lower: f.norm,
                upper,
                ratio: upper / f.norm,
                case_tag,
            };
            Ok((row, f.reconstruction_error / f.norm))
        })
        .collect::<Result<_>>()?;
    let min_ratio = rows.iter().map(|(r, _)| r.ratio).fold(T::infinity(), T::min);
    let max_ratio = rows.iter().map(|(r, _)| r.ratio).fold(T::zero(), T::max);
    let max_reconstruction_error = rows.iter().map(|(_, e)| *e).fold(T::zero(), T::max);
    Ok(EquivalenceReport {
        rows: rows.into_iter().map(|(r, _)| r).collect(),
        min_ratio,
        max_ratio,
        max_reconstruction_error,
    })
}
