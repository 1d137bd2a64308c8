//! The acceptance suite: every criterion at desk scale on a 1D grid
//! `(L, N, V) = (4, 1024, 4)` and, where cheap enough, a 2D grid
//! `(L, N, V) = (2, 256, 3)`.
//!
//! Runtimes are kept out of the CSV so that a rerun with the same seed
//! reproduces it byte for byte; they live in the per-criterion summary.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calderon::{build_level_sets, equivalence_experiment, factorize, verify_holder_direction};
use crate::calderon::{Construction, FactorizationParams, FactorizationResult};
use crate::corpus::{random_band_limited, random_coefficients, random_integrability, random_simple, random_smoothness};
use crate::corpus::{stream, transfer, BandLimited};
use crate::error::{Error, Result};
use crate::experiment::{summarize, Collector, Report};
use crate::exponents::{build_exponent, log_holder_constants, ExponentField, Recipe, Role};
use crate::grid::{DyadicCube, Grid};
use crate::interp::{scalar_interp_sandwich, strip_poisson, SimpleFunction};
use crate::kernels::{continuum_eta_mass, eta, gauss_legendre, verify_alpha_shift, verify_jensen_gamma};
use crate::lebesgue::{luxemburg_bisection_abs, luxemburg_norm};
use crate::lpf::{
    analyze, build_admissible_pair, build_dual_pair, build_resolution_of_unity, phi_transform_roundtrip,
    retract_roundtrip, FilterBank, F_norm,
};
use crate::report::{csv_string, Row};
use crate::seqspaces::{coefficient_bound_check, f_norm, DyadicCoefficients};

/// `(n, L, N, V)` of the two suite grids.
pub const GRID_1D: (usize, f64, usize, u32) = (1, 4.0, 1024, 4);
pub const GRID_2D: (usize, f64, usize, u32) = (2, 2.0, 256, 3);
/// Limit on one full pass over both grids.
pub const TOTAL_LIMIT_S: f64 = 300.0;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionSummary {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub rows: usize,
    pub failed: usize,
    /// Time spent on the 1D grid, which the runtime limit applies to.
    pub runtime_s: f64,
    pub runtime_limit_s: Option<f64>,
    pub errors: Vec<String>,
}

#[derive(Clone, Copy)]
struct Ctx {
    seed: u64,
    grid: Grid<f64>,
    levels: u32,
    tag: &'static str,
}

impl Ctx {
    fn new(seed: u64, spec: (usize, f64, usize, u32), tag: &'static str) -> Result<Self> {
        Ok(Self {
            seed,
            grid: Grid::new(spec.0, spec.1, spec.2)?,
            levels: spec.3,
            tag,
        })
    }

    fn is_1d(&self) -> bool {
        self.grid.dim() == 1
    }

    fn count(&self, one: usize, two: usize) -> usize {
        if self.is_1d() {
            one
        } else {
            two
        }
    }

    fn rng(&self, criterion: u64, item: usize) -> ChaCha8Rng {
        stream(self.seed, (criterion << 40) | ((self.grid.dim() as u64) << 32) | item as u64)
    }

    fn check(&self, name: &str) -> String {
        format!("{}:{name}", self.tag)
    }

    fn inputs(&self, extra: &str) -> String {
        format!(
            "seed={} n={} L={} N={} V={} {extra}",
            self.seed,
            self.grid.dim(),
            self.grid.half_extent(),
            self.grid.points_per_axis(),
            self.levels
        )
    }

    fn refined(&self) -> Result<Self> {
        Ok(Self {
            grid: Grid::new(self.grid.dim(), self.grid.half_extent(), 2 * self.grid.points_per_axis())?,
            ..*self
        })
    }

    fn deeper(&self) -> Self {
        Self {
            levels: self.levels + 1,
            ..*self
        }
    }

    fn field(&self, recipe: &Recipe, role: Role) -> Result<ExponentField<f64>> {
        build_exponent(recipe, &self.grid, role)
    }

    fn band_limited(&self, band: f64, rng: &mut ChaCha8Rng) -> BandLimited {
        random_band_limited(self.grid.dim(), self.grid.half_extent(), band, 6, rng)
    }
}

/// Adds `rows` from a list of per-item results: the worst value is held to
/// `bound`, and every failed item is recorded as an error.
fn worst_of(c: &mut Collector, ctx: &Ctx, criterion: &str, check: &str, inputs: &str, items: Vec<Result<f64>>, bound: f64, at_most: bool) {
    let mut worst = if at_most { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut failed = false;
    for (k, r) in items.into_iter().enumerate() {
        match r {
            Ok(v) if v.is_nan() => failed = true,
            Ok(v) => worst = if at_most { worst.max(v) } else { worst.min(v) },
            Err(e) => {
                c.errors.push(format!("{criterion}/{} [item {k}]: {e}", ctx.check(check)));
                failed = true;
            }
        }
    }
    if failed {
        c.push(Row::error(criterion, &ctx.check(check), inputs));
    } else if at_most {
        c.push(Row::at_most(criterion, &ctx.check(check), inputs, worst, bound));
    } else {
        c.push(Row::at_least(criterion, &ctx.check(check), inputs, worst, bound));
    }
}

fn guard(c: &mut Collector, ctx: &Ctx, criterion: &str, check: &str, inputs: &str, f: impl FnOnce(&mut Collector) -> Result<()>) {
    if let Err(e) = f(c) {
        c.error(criterion, &ctx.check(check), inputs, &e);
    }
}

fn ratio_change(a: f64, b: f64) -> f64 {
    (a / b).max(b / a)
}

struct Couple {
    params: FactorizationParams<f64>,
    desc: String,
}

fn random_pp(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Couple> {
    let theta = rng.gen_range(0.1..0.9);
    let r0 = random_integrability(1.2, 4.0, rng);
    let r1 = random_integrability(1.2, 4.0, rng);
    let a0 = random_smoothness(rng);
    let a1 = random_smoothness(rng);
    let params = FactorizationParams::pp(
        theta,
        ctx.field(&r0, Role::Integrability)?,
        ctx.field(&r1, Role::Integrability)?,
        ctx.field(&a0, Role::Smoothness)?,
        ctx.field(&a1, Role::Smoothness)?,
    )?;
    Ok(Couple {
        params,
        desc: format!("pp theta={theta} p0={r0:?} p1={r1:?} a0={a0:?} a1={a1:?}"),
    })
}

fn random_pq(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Couple> {
    let theta = rng.gen_range(0.1..0.9);
    let r0 = random_integrability(1.2, 4.0, rng);
    let q0 = rng.gen_range(1.2..4.0);
    let q1 = rng.gen_range(1.2..4.0);
    let a0 = random_smoothness(rng);
    let a1 = random_smoothness(rng);
    let params = FactorizationParams::pq_infty(
        theta,
        ctx.field(&r0, Role::Integrability)?,
        ctx.field(&a0, Role::Smoothness)?,
        ctx.field(&a1, Role::Smoothness)?,
        q0,
        q1,
    )?;
    Ok(Couple {
        params,
        desc: format!("pq-infty theta={theta} p0={r0:?} q0={q0} q1={q1} a0={a0:?} a1={a1:?}"),
    })
}

const SINE_P: Recipe = Recipe::SinePerturbation {
    base: 2.5,
    amplitude: 0.5,
    frequency: 1.0,
};
const RAMP_P: Recipe = Recipe::PlateauRamp {
    left: 3.0,
    right: 1.8,
    width: 1.0,
};
const SINE_ALPHA: Recipe = Recipe::SinePerturbation {
    base: 0.3,
    amplitude: 0.2,
    frequency: 1.0,
};
const CONST_ALPHA: Recipe = Recipe::Constant { value: -0.2 };

fn fixed_pp(ctx: &Ctx) -> Result<FactorizationParams<f64>> {
    FactorizationParams::pp(
        0.4,
        ctx.field(&SINE_P, Role::Integrability)?,
        ctx.field(&RAMP_P, Role::Integrability)?,
        ctx.field(&SINE_ALPHA, Role::Smoothness)?,
        ctx.field(&CONST_ALPHA, Role::Smoothness)?,
    )
}

fn fixed_pq(ctx: &Ctx) -> Result<FactorizationParams<f64>> {
    FactorizationParams::pq_infty(
        0.4,
        ctx.field(&SINE_P, Role::Integrability)?,
        ctx.field(&SINE_ALPHA, Role::Smoothness)?,
        ctx.field(&CONST_ALPHA, Role::Smoothness)?,
        2.0,
        4.0,
    )
}

fn max_over(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}

// ---- 1: exponent identities ------------------------------------------------

fn uv_residual(p: &FactorizationParams<f64>) -> f64 {
    let t = p.theta;
    max_over(p.u.iter().zip(&p.v).map(|(u, v)| ((1.0 - t) * u + t * v).abs()))
}

fn p_residual(p: &FactorizationParams<f64>) -> f64 {
    let t = p.theta;
    max_over((0..p.p.values().len()).map(|i| {
        let second = p.p1.as_ref().map_or(0.0, |p1| t * p.p.at(i) / p1.at(i));
        ((1.0 - t) * p.p.at(i) / p.p0.at(i) + second - 1.0).abs()
    }))
}

fn q_residual(p: &FactorizationParams<f64>) -> f64 {
    let t = p.theta;
    max_over((0..p.q.values().len()).map(|i| ((1.0 - t) * p.q.at(i) / p.q0.at(i) + t * p.q.at(i) / p.q1.at(i) - 1.0).abs()))
}

fn delta_gamma_residual(p: &FactorizationParams<f64>) -> f64 {
    let t = p.theta;
    max_over(p.gamma.iter().zip(&p.delta).map(|(g, d)| ((1.0 - t) + d / g * t).abs()))
}

fn c1(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let n = ctx.count(100, 20);
    let sets: Vec<Result<(Couple, Couple)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ctx.rng(1, k);
            Ok((random_pp(ctx, &mut rng)?, random_pq(ctx, &mut rng)?))
        })
        .collect();
    let inputs = ctx.inputs(&format!("sets={n}"));
    let pick = |f: &dyn Fn(&(Couple, Couple)) -> f64| -> Vec<Result<f64>> {
        sets.iter().map(|s| s.as_ref().map(f).map_err(Clone::clone)).collect()
    };
    worst_of(&mut c, ctx, "1", "pp-uv", &inputs, pick(&|s| uv_residual(&s.0.params)), 1e-12, true);
    worst_of(&mut c, ctx, "1", "pp-p", &inputs, pick(&|s| p_residual(&s.0.params)), 1e-12, true);
    worst_of(&mut c, ctx, "1", "pq-infty-uv", &inputs, pick(&|s| uv_residual(&s.1.params)), 1e-12, true);
    worst_of(&mut c, ctx, "1", "pq-infty-p", &inputs, pick(&|s| p_residual(&s.1.params)), 1e-12, true);
    worst_of(&mut c, ctx, "1", "pq-infty-q", &inputs, pick(&|s| q_residual(&s.1.params)), 1e-12, true);
    worst_of(&mut c, ctx, "1", "pq-infty-delta-gamma", &inputs, pick(&|s| delta_gamma_residual(&s.1.params)), 1e-12, true);
    c
}

// ---- 2, 3: factorization corpus --------------------------------------------

struct Triple {
    construction: Construction,
    constant_p: bool,
    lambda: DyadicCoefficients<f64>,
    params: FactorizationParams<f64>,
    desc: String,
    result: Result<FactorizationResult<f64>>,
}

#[derive(Default)]
struct Cache {
    triples: OnceLock<Vec<Triple>>,
}

fn factorization_corpus<'a>(ctx: &Ctx, cache: &'a Cache) -> &'a [Triple] {
    cache.triples.get_or_init(|| {
        let n = ctx.count(100, 20);
        let per: Vec<Vec<Triple>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = ctx.rng(2, k);
                let size = rng.gen_range(50..=500);
                let lambda = random_coefficients(ctx.grid, ctx.levels, size, &mut rng);
                let couples = [(Construction::Pp, random_pp(ctx, &mut rng)), (Construction::PqInfty, random_pq(ctx, &mut rng))];
                let Ok(lambda) = lambda else {
                    return Vec::new();
                };
                couples
                    .into_iter()
                    .filter_map(|(construction, couple)| {
                        let couple = couple.ok()?;
                        let p = &couple.params;
                        let constant_p = p.p0.is_constant() && p.p1.as_ref().map_or(true, ExponentField::is_constant);
                        Some(Triple {
                            construction,
                            constant_p,
                            result: factorize(&lambda, p, construction, 1e-12),
                            lambda: lambda.clone(),
                            desc: format!("item={k} size={size} {}", couple.desc),
                            params: couple.params,
                        })
                    })
                    .collect()
            })
            .collect();
        per.into_iter().flatten().collect()
    })
}

fn per_coefficient_reconstruction(t: &Triple, f: &FactorizationResult<f64>) -> f64 {
    let th = t.params.theta;
    max_over(t.lambda.iter().filter(|(_, z)| z.norm() > 0.0).map(|(cube, z)| {
        let rebuilt = f.norm * f.lambda0.get(cube).norm().powf(1.0 - th) * f.lambda1.get(cube).norm().powf(th);
        (z.norm() - rebuilt).abs() / z.norm()
    }))
}

fn c2(ctx: &Ctx, cache: &Cache) -> Collector {
    let mut c = Collector::default();
    let n = ctx.count(100, 20);
    let triples = factorization_corpus(ctx, cache);
    if triples.len() != 2 * n {
        c.errors.push(format!("2/{}: corpus generation failed", ctx.check("corpus")));
        c.push(Row::error("2", &ctx.check("corpus"), &ctx.inputs("")));
    }
    for (construction, name) in [(Construction::Pp, "pp-reconstruction"), (Construction::PqInfty, "pq-infty-reconstruction")] {
        let items: Vec<Result<f64>> = triples
            .iter()
            .filter(|t| t.construction == construction)
            .map(|t| match &t.result {
                Ok(f) => Ok(per_coefficient_reconstruction(t, f)),
                Err(e) => Err(Error::InvalidInput(format!("{}: {e}", t.desc))),
            })
            .collect();
        worst_of(&mut c, ctx, "2", name, &ctx.inputs(&format!("sets={n}")), items, 1e-9, true);
    }
    c
}

fn c3(ctx: &Ctx, cache: &Cache) -> Collector {
    let mut c = Collector::default();
    let triples = factorization_corpus(ctx, cache);
    let margins: Vec<Result<f64>> = triples
        .par_iter()
        .map(|t| {
            let f = t.result.as_ref().map_err(Clone::clone)?;
            let unit = t.lambda.scale(Complex::new(1.0 / f.norm, 0.0));
            let h = verify_holder_direction(&unit, &f.lambda0, &f.lambda1, &t.params, 1e-12)?;
            // The infinite endpoint is estimated through the sup of the
            // pointwise l^{q1} sums of the second factor.
            let product = if t.params.is_infinite_endpoint() { h.exact_bound } else { h.bound };
            Ok((product - h.norm) / product)
        })
        .collect();
    let groups: [(&str, Box<dyn Fn(&Triple) -> bool>); 3] = [
        ("pp-constant-exponents", Box::new(|t| t.construction == Construction::Pp && t.constant_p)),
        ("pp-variable-exponents", Box::new(|t| t.construction == Construction::Pp && !t.constant_p)),
        ("pq-infty", Box::new(|t| t.construction == Construction::PqInfty)),
    ];
    for (name, select) in groups {
        let items: Vec<Result<f64>> = triples
            .iter()
            .zip(&margins)
            .filter(|(t, _)| select(t))
            .map(|(_, m)| m.clone())
            .collect();
        if items.is_empty() {
            continue;
        }
        let inputs = ctx.inputs(&format!("triples={}", items.len()));
        let worst_idx = triples
            .iter()
            .zip(&margins)
            .filter(|(t, m)| select(t) && m.is_ok())
            .min_by(|a, b| a.1.as_ref().unwrap().total_cmp(b.1.as_ref().unwrap()));
        if let Some((t, Ok(m))) = worst_idx {
            if *m < -1e-9 {
                c.errors.push(format!("3/{}: worst relative margin {m:e} at {}", ctx.check(name), t.desc));
            }
        }
        worst_of(&mut c, ctx, "3", name, &inputs, items, -1e-9, false);
    }
    c
}

// ---- 4: factor-norm stability ---------------------------------------------

fn factor_constant(
    ctx: &Ctx,
    corpus: &[DyadicCoefficients<f64>],
    params: &FactorizationParams<f64>,
    construction: Construction,
) -> Result<f64> {
    let _ = ctx;
    let norms: Vec<f64> = corpus
        .par_iter()
        .map(|l| factorize(l, params, construction, 1e-12).map(|f| f.norm0.max(f.norm1)))
        .collect::<Result<_>>()?;
    Ok(max_over(norms.into_iter()))
}

fn corpus_at(ctx: &Ctx, criterion: u64, sets: usize, size: usize) -> Result<Vec<DyadicCoefficients<f64>>> {
    (0..sets)
        .into_par_iter()
        .map(|k| random_coefficients(ctx.grid, ctx.levels, size, &mut ctx.rng(criterion, k)))
        .collect()
}

fn c4(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let inputs = ctx.inputs("sets=20 size=150 fixed recipes");
    guard(&mut c, ctx, "4", "factor-norms", &inputs, |c| {
        let base = corpus_at(ctx, 4, 20, 150)?;
        let fine = ctx.refined()?;
        let fine_corpus: Vec<_> = base.iter().map(|l| transfer(l, fine.grid)).collect::<Result<_>>()?;
        let deep = ctx.deeper();
        let deep_corpus = corpus_at(&deep, 4, 20, 150)?;
        for (name, construction, build) in [
            ("pp", Construction::Pp, fixed_pp as fn(&Ctx) -> Result<FactorizationParams<f64>>),
            ("pq-infty", Construction::PqInfty, fixed_pq),
        ] {
            let c0 = factor_constant(ctx, &base, &build(ctx)?, construction)?;
            let cn = factor_constant(&fine, &fine_corpus, &build(&fine)?, construction)?;
            let cv = factor_constant(&deep, &deep_corpus, &build(&deep)?, construction)?;
            c.bracket(&format!("4:{name}-factor-norm"), c0);
            c.push(Row::finite("4", &ctx.check(&format!("{name}-base")), &inputs, c0));
            c.push(Row::at_most("4", &ctx.check(&format!("{name}-growth-N")), &inputs, cn / c0, 2.0));
            c.push(Row::at_most("4", &ctx.check(&format!("{name}-growth-V")), &inputs, cv / c0, 2.0));
        }
        Ok(())
    });
    c
}

// ---- 5: equivalence brackets -----------------------------------------------

fn family_params(ctx: &Ctx, family: &str) -> Result<(FactorizationParams<f64>, Construction)> {
    let int = |r: Recipe| ctx.field(&r, Role::Integrability);
    let sm = |r: Recipe| ctx.field(&r, Role::Smoothness);
    let k = |value| Recipe::Constant { value };
    Ok(match family {
        "constant" => (FactorizationParams::pp(0.5, int(k(2.0))?, int(k(4.0))?, sm(k(0.5))?, sm(k(-0.25))?)?, Construction::Pp),
        "case-i" => (fixed_pp(ctx)?, Construction::Pp),
        "case-ii" => (
            FactorizationParams::general(0.5, int(k(2.0))?, Some(int(k(5.0))?), int(k(3.0))?, int(k(3.0))?, sm(SINE_ALPHA)?, sm(k(0.1))?)?,
            Construction::PqInfty,
        ),
        _ => (fixed_pq(ctx)?, Construction::PqInfty),
    })
}

fn c5(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    for family in ["constant", "case-i", "case-ii", "p-infty"] {
        let inputs = ctx.inputs(&format!("family={family} sets=20 size=100"));
        guard(&mut c, ctx, "5", family, &inputs, |c| {
            let corpus = corpus_at(ctx, 5, 40, 100)?;
            let (params, construction) = family_params(ctx, family)?;
            let base = equivalence_experiment(&corpus[..20], &params, construction, 1e-12)?;
            let doubled = equivalence_experiment(&corpus, &params, construction, 1e-12)?;
            let fine = ctx.refined()?;
            let fine_corpus: Vec<_> = corpus[..20].iter().map(|l| transfer(l, fine.grid)).collect::<Result<_>>()?;
            let (fine_params, _) = family_params(&fine, family)?;
            let refined = equivalence_experiment(&fine_corpus, &fine_params, construction, 1e-12)?;
            c.bracket(&format!("5:{family}-ratio"), base.min_ratio);
            c.bracket(&format!("5:{family}-ratio"), base.max_ratio);
            c.push(Row::at_least("5", &ctx.check(&format!("{family}-ordered")), &inputs, base.min_ratio, 1.0 - 1e-9));
            c.push(Row::at_most("5", &ctx.check(&format!("{family}-refine-N")), &inputs, ratio_change(refined.max_ratio, base.max_ratio), 2.0));
            c.push(Row::at_most("5", &ctx.check(&format!("{family}-double-corpus")), &inputs, ratio_change(doubled.max_ratio, base.max_ratio), 2.0));
            Ok(())
        });
    }
    c
}

// ---- 6: Luxemburg norm -------------------------------------------------------

fn closed_form(a: &[f64], p: f64, cell: f64) -> f64 {
    let s: f64 = a.iter().map(|x| x.powf(p)).sum();
    (cell * s).powf(1.0 / p)
}

fn c6(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let n = ctx.count(200, 50);
    let inputs = ctx.inputs(&format!("inputs={n}"));
    let cell = ctx.grid.cell_volume();
    let closed: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ctx.rng(6, k);
            let p = rng.gen_range(1.0..6.0);
            let a: Vec<f64> = (0..ctx.grid.len())
                .map(|_| if rng.gen_bool(0.1) { 0.0 } else { 10f64.powf(rng.gen_range(-3.0..3.0)) })
                .collect();
            let field = ExponentField::constant(ctx.grid, p, Role::Integrability)?;
            let got = luxemburg_bisection_abs(&a, &field, 1e-13)?.value;
            let want = closed_form(&a, p, cell);
            Ok((got - want).abs() / want)
        })
        .collect();
    worst_of(&mut c, ctx, "6", "closed-form", &inputs, closed, 1e-8, true);

    let variable: Vec<Result<(bool, f64)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ctx.rng(6, 1_000_000 + k);
            let recipe = random_integrability(1.0, 5.0, &mut rng);
            let p = ctx.field(&recipe, Role::Integrability)?;
            let f = ctx.band_limited(ctx.grid.nyquist() / 8.0, &mut rng).sample(&ctx.grid)?;
            let norm = luxemburg_norm(&f, &p, 1e-12)?.value;
            let dist = rng.gen_range(1e-3..0.5);
            let s = if rng.gen_bool(0.5) { 1.0 + dist } else { 1.0 - dist };
            let g = f.scale(Complex::new(s / norm, 0.0));
            let norm_le = luxemburg_norm(&g, &p, 1e-12)?.value <= 1.0;
            let modular: f64 = g.abs().iter().zip(p.values()).map(|(x, e)| x.powf(*e)).sum::<f64>() * cell;
            let agree = norm_le == (modular <= 1.0);
            let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
            let scaled = luxemburg_norm(&f.scale(Complex::new(0.0, scale)), &p, 1e-12)?.value;
            Ok((agree, (scaled - scale * norm).abs() / (scale * norm)))
        })
        .collect();
    let agree: Vec<Result<f64>> = variable.iter().map(|r| r.as_ref().map(|x| if x.0 { 1.0 } else { 0.0 }).map_err(Clone::clone)).collect();
    let count = agree.iter().filter(|r| matches!(r, Ok(v) if *v == 1.0)).count();
    c.push(Row::at_least("6", &ctx.check("unit-ball-agreement"), &inputs, count as f64, n as f64));
    let homog: Vec<Result<f64>> = variable.into_iter().map(|r| r.map(|x| x.1)).collect();
    worst_of(&mut c, ctx, "6", "homogeneity", &inputs, homog, 1e-9, true);
    c
}

// ---- 7: eta mass -------------------------------------------------------------

/// `int_{-R}^{R} (1+|u|)^{-2} du` by Gauss-Legendre on geometric panels.
fn quadrature_mass(r: f64) -> f64 {
    let (x, w) = gauss_legendre(32);
    let mut acc = 0.0;
    let (mut a, mut b) = (0.0, 1.0f64.min(r));
    while a < r {
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        acc += x.iter().zip(&w).map(|(xi, wi)| wi * half * (1.0 + mid + half * xi).powi(-2)).sum::<f64>();
        a = b;
        b = (2.0 * b).min(r);
    }
    2.0 * acc
}

fn c7(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let l = ctx.grid.half_extent();
    for v in 0..=6u32 {
        let inputs = ctx.inputs(&format!("m=2 v={v}"));
        guard(&mut c, ctx, "7", "mass", &inputs, |c| {
            let k = eta(v, 2.0, &ctx.grid)?;
            let r = 2f64.powi(v as i32) * l;
            let formula = 2.0 * (1.0 - 1.0 / (1.0 + r));
            c.push(Row::at_most("7", &ctx.check(&format!("mass-v{v}")), &inputs, (k.mass - formula).abs(), 1e-6));
            c.push(Row::at_most("7", &ctx.check(&format!("quadrature-v{v}")), &inputs, (quadrature_mass(r) - formula).abs(), 1e-6));
            Ok(())
        });
    }
    // Successive levels once 2^v L >= 1000.
    let first = (1000.0 / l).log2().ceil() as i32;
    for v in first..first + 4 {
        let a = continuum_eta_mass(1, 2.0, 2f64.powi(v) * l);
        let b = continuum_eta_mass(1, 2.0, 2f64.powi(v + 1) * l);
        c.push(Row::at_most("7", &ctx.check(&format!("variation-v{v}")), &ctx.inputs(&format!("m=2 v={v}")), (b - a).abs(), 1e-3));
    }
    c
}

// ---- 8: alpha shift ----------------------------------------------------------

fn c8(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let levels: Vec<u32> = (0..=6).collect();
    let budget = (ctx.grid.len() * ctx.grid.len()) as u64;
    let inputs = ctx.inputs("h=2 levels=0..6 exhaustive");
    guard(&mut c, ctx, "8", "alpha-shift", &inputs, |c| {
        let constant = ExponentField::constant(ctx.grid, 0.3, Role::Smoothness)?;
        let r = verify_alpha_shift(&constant, 2.0, 0.0, &levels, budget, ctx.seed);
        c.push(Row::at_most("8", &ctx.check("constant-alpha"), &inputs, (r.constant - 1.0).abs(), 0.0));

        let sine = ctx.field(
            &Recipe::SinePerturbation {
                base: 0.0,
                amplitude: 1.0,
                frequency: 1.0,
            },
            Role::Smoothness,
        )?;
        let c_loc = log_holder_constants(&sine).c_loc;
        let with_r = verify_alpha_shift(&sine, 2.0, c_loc, &levels, budget, ctx.seed);
        let without = verify_alpha_shift(&sine, 2.0, 0.0, &levels, budget, ctx.seed);
        c.bracket("8:shift-constant", with_r.constant);
        c.push(Row::finite("8", &ctx.check("sine-finite"), &inputs, with_r.constant));
        let last = with_r.per_level[6];
        let prev = with_r.per_level[5];
        c.push(Row::at_most("8", &ctx.check("sine-stable"), &inputs, last / prev, 2.0));
        c.push(Row::at_least("8", &ctx.check("divergence-without-shift"), &inputs, without.per_level[6] / with_r.constant, 2.0));
        Ok(())
    });
    c
}

// ---- 9: Jensen-type inequality -----------------------------------------------

fn c9(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let n = ctx.count(20, 5);
    let m = (ctx.grid.dim() + 1) as f64;
    let inputs = ctx.inputs(&format!("functions={n} m={m} levels=0..3"));
    let margins: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ctx.rng(9, k);
            let p = ctx.field(&random_integrability(1.2, 4.0, &mut rng), Role::Integrability)?;
            let f = ctx.band_limited(ctx.grid.nyquist() / 8.0, &mut rng).sample(&ctx.grid)?;
            let size = luxemburg_norm(&f, &p, 1e-12)?.value + f.max_abs();
            let g = f.scale(Complex::new(1.0 / size, 0.0));
            Ok(verify_jensen_gamma(&p, m, &g, &[0, 1, 2, 3], None)?.worst_margin)
        })
        .collect();
    worst_of(&mut c, ctx, "9", "worst-margin", &inputs, margins, 0.0, false);
    c
}

// ---- 10, 11: filter banks ----------------------------------------------------

struct Banks {
    dual: FilterBank<f64>,
    unity: FilterBank<f64>,
}

fn banks(ctx: &Ctx) -> Result<Banks> {
    Ok(Banks {
        dual: build_dual_pair(&build_admissible_pair(&ctx.grid, ctx.levels)?)?,
        unity: build_resolution_of_unity(&ctx.grid, ctx.levels)?,
    })
}

fn c10(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let inputs = ctx.inputs("");
    guard(&mut c, ctx, "10", "banks", &inputs, |c| {
        let b = banks(ctx)?;
        let dual = b.dual.dual.as_ref().expect("dual pair");
        let (mut partition, mut duality) = (0.0f64, 0.0f64);
        for i in 0..ctx.grid.len() {
            let r = ctx.grid.frequency_norm(i);
            if r <= b.unity.band_limit() {
                partition = partition.max((b.unity.phi.iter().map(|m| m[i]).sum::<f64>() - 1.0).abs());
            }
            if r <= b.dual.band_limit() {
                duality = duality.max((b.dual.phi.iter().zip(dual).map(|(a, d)| a[i] * d[i]).sum::<f64>() - 1.0).abs());
            }
        }
        c.push(Row::at_most("10", &ctx.check("partition"), &inputs, partition, 1e-12));
        c.push(Row::at_most("10", &ctx.check("duality"), &inputs, duality, 1e-10));
        Ok(())
    });
    c
}

fn c11(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let n = ctx.count(50, 10);
    let inputs = ctx.inputs(&format!("functions={n}"));
    guard(&mut c, ctx, "11", "banks", &inputs, |c| {
        let b = banks(ctx)?;
        let band = 0.9 * b.dual.band_limit().min(b.unity.band_limit());
        let out: Vec<Result<(f64, f64, bool)>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let f = ctx.band_limited(band, &mut ctx.rng(11, k)).sample(&ctx.grid)?;
                let a = phi_transform_roundtrip(&f, &b.dual)?;
                let r = retract_roundtrip(&f, &b.unity)?;
                Ok((a.residual, r.residual, a.flagged || r.flagged))
            })
            .collect();
        let pick = |i: usize| -> Vec<Result<f64>> {
            out.iter()
                .map(|r| r.as_ref().map(|x| if i == 0 { x.0 } else { x.1 }).map_err(Clone::clone))
                .collect()
        };
        worst_of(c, ctx, "11", "phi-transform", &inputs, pick(0), 1e-6, true);
        worst_of(c, ctx, "11", "retraction", &inputs, pick(1), 1e-6, true);
        let flagged = out.iter().filter(|r| matches!(r, Ok((_, _, true)))).count();
        c.push(Row::at_most("11", &ctx.check("out-of-band-inputs"), &inputs, flagged as f64, 0.0));
        Ok(())
    });
    c
}

// ---- 12: phi-transform norm equivalence --------------------------------------

fn phi_bracket(ctx: &Ctx, functions: &[BandLimited]) -> Result<(f64, f64)> {
    let bank = build_dual_pair(&build_admissible_pair(&ctx.grid, ctx.levels)?)?;
    let p = ctx.field(&SINE_P, Role::Integrability)?;
    let q = ExponentField::constant(ctx.grid, 2.0, Role::Integrability)?;
    let alpha = ctx.field(&SINE_ALPHA, Role::Smoothness)?;
    let ratios: Vec<f64> = functions
        .par_iter()
        .map(|f| {
            let g = f.sample(&ctx.grid)?;
            let seq = f_norm(&analyze(&g, &bank)?, &alpha, &p, &q, 1e-12)?.value;
            let fun = F_norm(&g, &alpha, &p, &q, &bank, 1e-12)?.value;
            Ok(seq / fun)
        })
        .collect::<Result<_>>()?;
    Ok((ratios.iter().copied().fold(f64::INFINITY, f64::min), max_over(ratios.into_iter())))
}

fn c12(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let inputs = ctx.inputs("functions=20");
    guard(&mut c, ctx, "12", "phi-bracket", &inputs, |c| {
        let band = 0.9 * build_admissible_pair(&ctx.grid, ctx.levels)?.band_limit();
        let functions: Vec<BandLimited> = (0..20).map(|k| ctx.band_limited(band, &mut ctx.rng(12, k))).collect();
        let base = phi_bracket(ctx, &functions)?;
        let fine = phi_bracket(&ctx.refined()?, &functions)?;
        let deep = phi_bracket(&ctx.deeper(), &functions)?;
        c.bracket("12:phi-ratio", base.0);
        c.bracket("12:phi-ratio", base.1);
        c.push(Row::finite("12", &ctx.check("bracket-max"), &inputs, base.1));
        c.push(Row::at_least("12", &ctx.check("bracket-min"), &inputs, base.0, f64::MIN_POSITIVE));
        let change = |a: (f64, f64)| ratio_change(a.0, base.0).max(ratio_change(a.1, base.1));
        c.push(Row::at_most("12", &ctx.check("refine-N"), &inputs, change(fine), 2.0));
        c.push(Row::at_most("12", &ctx.check("refine-V"), &inputs, change(deep), 2.0));
        Ok(())
    });
    c
}

// ---- 13: strip Poisson kernels -----------------------------------------------

fn c13(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    for theta in [0.1f64, 0.25, 0.5, 0.75, 0.9] {
        let inputs = format!("theta={theta}");
        guard(&mut c, ctx, "13", "poisson", &inputs, |c| {
            let k = strip_poisson(theta)?;
            let (m0, m1) = k.masses();
            c.push(Row::at_most("13", &format!("mass0-theta{theta}"), &inputs, (m0 - (1.0 - theta)).abs(), 1e-8));
            c.push(Row::at_most("13", &format!("mass1-theta{theta}"), &inputs, (m1 - theta).abs(), 1e-8));
            let mut worst = 0.0f64;
            for power in 0..=2 {
                for t0 in [0.0, 0.3, -0.7] {
                    let got = k.reproduce(t0, |z: Complex<f64>| z.powi(power).re);
                    let want = Complex::new(theta, t0).powi(power).re;
                    worst = worst.max((got - want).abs());
                }
            }
            c.push(Row::at_most("13", &format!("harmonic-theta{theta}"), &inputs, worst, 1e-6));
            Ok(())
        });
    }
    c
}

// ---- 14: scalar interpolation ------------------------------------------------

fn c14(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let inputs = ctx.inputs("functions=10");
    let uppers: Vec<Result<f64>> = (0..10)
        .into_par_iter()
        .map(|k| {
            let mut rng = ctx.rng(14, k);
            let p0 = ctx.field(&random_integrability(1.2, 4.0, &mut rng), Role::Integrability)?;
            let p1 = ctx.field(&random_integrability(1.2, 4.0, &mut rng), Role::Integrability)?;
            let theta = rng.gen_range(0.1..0.9);
            let f = random_simple(ctx.grid, 3, &mut rng)?;
            Ok(scalar_interp_sandwich(&f, &p0, &p1, theta, 1e-12)?.upper_ratio)
        })
        .collect();
    for u in uppers.iter().flatten() {
        c.bracket("14:upper-ratio", *u);
    }
    worst_of(&mut c, ctx, "14", "upper-ratio", &inputs, uppers, 1.0 + 1e-6, true);
    let inputs = ctx.inputs("p0=2 p1=4 theta=0.5 f=chi[0,1)");
    guard(&mut c, ctx, "14", "closed-form", &inputs, |c| {
        let p0 = ExponentField::constant(ctx.grid, 2.0, Role::Integrability)?;
        let p1 = ExponentField::constant(ctx.grid, 4.0, Role::Integrability)?;
        let f = SimpleFunction::indicator(ctx.grid, 0.0, 1.0, Complex::new(1.0, 0.0))?;
        let r = scalar_interp_sandwich(&f, &p0, &p1, 0.5, 1e-13)?;
        c.push(Row::at_most("14", &ctx.check("closed-form"), &inputs, (r.upper_ratio - 1.0).abs(), 1e-9));
        Ok(())
    });
    c
}

// ---- 15: coefficient bound ---------------------------------------------------

fn c15(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let inputs = ctx.inputs("single=20");
    let singles: Vec<Result<f64>> = (0..20)
        .into_par_iter()
        .map(|k| {
            let mut rng = ctx.rng(15, k);
            let level = rng.gen_range(0..=ctx.levels);
            let per_axis = ctx.grid.cubes_per_axis(level) as i64;
            let cube = DyadicCube::new(level, [rng.gen_range(0..per_axis), 0]);
            let mut lambda = DyadicCoefficients::new(ctx.grid, ctx.levels)?;
            lambda.insert(cube, Complex::from_polar(10f64.powf(rng.gen_range(-3.0..3.0)), rng.gen_range(0.0..6.0)))?;
            let constant = |v: f64, role| ExponentField::constant(ctx.grid, v, role);
            let p = constant(rng.gen_range(1.2..4.0), Role::Integrability)?;
            let q = constant(rng.gen_range(1.2..4.0), Role::Integrability)?;
            let alpha = constant(rng.gen_range(-1.0..1.0), Role::Smoothness)?;
            Ok((coefficient_bound_check(&lambda, &alpha, &p, &q, 1e-13)? - 1.0).abs())
        })
        .collect();
    worst_of(&mut c, ctx, "15", "single-coefficient", &inputs, singles, 1e-9, true);
    let inputs = ctx.inputs("sets=20 size=150 fixed recipes");
    guard(&mut c, ctx, "15", "corpus", &inputs, |c| {
        let corpus = corpus_at(ctx, 15, 20, 150)?;
        let worst = |ctx: &Ctx, corpus: &[DyadicCoefficients<f64>]| -> Result<f64> {
            let p = ctx.field(&SINE_P, Role::Integrability)?;
            let q = ctx.field(&RAMP_P, Role::Integrability)?;
            let alpha = ctx.field(&SINE_ALPHA, Role::Smoothness)?;
            let r: Vec<f64> = corpus.par_iter().map(|l| coefficient_bound_check(l, &alpha, &p, &q, 1e-12)).collect::<Result<_>>()?;
            Ok(max_over(r.into_iter()))
        };
        let base = worst(ctx, &corpus)?;
        let fine = ctx.refined()?;
        let fine_corpus: Vec<_> = corpus.iter().map(|l| transfer(l, fine.grid)).collect::<Result<_>>()?;
        let refined = worst(&fine, &fine_corpus)?;
        c.bracket("15:corpus-max-ratio", base);
        c.push(Row::finite("15", &ctx.check("corpus-max"), &inputs, base));
        c.push(Row::at_most("15", &ctx.check("refine-N"), &inputs, ratio_change(refined, base), 2.0));
        Ok(())
    });
    c
}

// ---- 16: level sets ----------------------------------------------------------

/// Re-derives `g` from the coefficients and checks the class rule by
/// measuring `Q cap A_l` and `Q cap A_{l+1}` cube by cube.
fn recount(lambda: &DyadicCoefficients<f64>, params: &FactorizationParams<f64>, dec_norm: f64, classes: &std::collections::BTreeMap<i64, Vec<DyadicCube>>) -> bool {
    let grid = lambda.grid();
    let half_n = grid.dim() as f64 / 2.0;
    let q = params.q.at(0);
    let mut acc = vec![0.0f64; grid.len()];
    for (cube, z) in lambda.iter() {
        for i in cube.cells(grid) {
            acc[i] += (2f64.powf(cube.level as f64 * (params.alpha.at(i) + half_n)) * z.norm()).powf(q);
        }
    }
    let level: Vec<f64> = acc.iter().zip(&params.gamma).map(|(a, g)| (a.powf(1.0 / q) / dec_norm).powf(*g)).collect();
    let cell = grid.cell_volume();
    let mut assigned = 0;
    for (&ell, cubes) in classes {
        for cube in cubes {
            let cells = cube.cells(grid);
            let half = cube.measure::<f64>(grid.dim()) / 2.0;
            let inside = cells.iter().filter(|&&i| level[i] > 2f64.powi(ell as i32)).count() as f64 * cell;
            let above = cells.iter().filter(|&&i| level[i] > 2f64.powi(ell as i32 + 1)).count() as f64 * cell;
            if !(inside > half && above <= half) {
                return false;
            }
            assigned += 1;
        }
    }
    assigned == lambda.iter().filter(|(_, z)| z.norm() > 0.0).count()
}

fn c16(ctx: &Ctx, _: &Cache) -> Collector {
    let mut c = Collector::default();
    let n = ctx.count(100, 20);
    let inputs = ctx.inputs(&format!("decompositions={n}"));
    let out: Vec<Result<(bool, bool)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ctx.rng(16, k);
            let couple = random_pq(ctx, &mut rng)?;
            let size = rng.gen_range(50..=500);
            let lambda = random_coefficients(ctx.grid, ctx.levels, size, &mut rng)?;
            let dec = build_level_sets(&lambda, &couple.params, 1e-12)?;
            Ok((dec.check_invariants(&lambda).is_ok(), recount(&lambda, &couple.params, dec.norm, &dec.classes)))
        })
        .collect();
    for e in out.iter().filter_map(|r| r.as_ref().err()) {
        c.errors.push(format!("16/{}: {e}", ctx.check("decomposition")));
    }
    let ok = |i: usize| out.iter().filter(|r| matches!(r, Ok(x) if if i == 0 { x.0 } else { x.1 })).count() as f64;
    c.push(Row::at_least("16", &ctx.check("invariants"), &inputs, ok(0), n as f64));
    c.push(Row::at_least("16", &ctx.check("membership-recount"), &inputs, ok(1), n as f64));
    c
}

// ---- driver ------------------------------------------------------------------

type CriterionFn = fn(&Ctx, &Cache) -> Collector;

struct Spec {
    id: u32,
    title: &'static str,
    run: CriterionFn,
    two_d: bool,
    limit_s: Option<f64>,
}

const SPECS: [Spec; 16] = [
    Spec { id: 1, title: "exponent identities", run: c1, two_d: true, limit_s: Some(1.0) },
    Spec { id: 2, title: "factorization reconstruction", run: c2, two_d: true, limit_s: Some(30.0) },
    Spec { id: 3, title: "Hölder direction", run: c3, two_d: true, limit_s: None },
    Spec { id: 4, title: "factor-norm stability", run: c4, two_d: false, limit_s: None },
    Spec { id: 5, title: "equivalence brackets", run: c5, two_d: false, limit_s: None },
    Spec { id: 6, title: "Luxemburg correctness", run: c6, two_d: true, limit_s: None },
    Spec { id: 7, title: "eta-kernel mass", run: c7, two_d: false, limit_s: None },
    Spec { id: 8, title: "alpha-shift verifier", run: c8, two_d: false, limit_s: None },
    Spec { id: 9, title: "Jensen-type verifier", run: c9, two_d: true, limit_s: None },
    Spec { id: 10, title: "partition and duality identities", run: c10, two_d: true, limit_s: None },
    Spec { id: 11, title: "round trips", run: c11, two_d: true, limit_s: Some(60.0) },
    Spec { id: 12, title: "phi-transform equivalence", run: c12, two_d: false, limit_s: None },
    Spec { id: 13, title: "Poisson masses", run: c13, two_d: false, limit_s: None },
    Spec { id: 14, title: "scalar interpolation sandwich", run: c14, two_d: false, limit_s: None },
    Spec { id: 15, title: "coefficient bound", run: c15, two_d: false, limit_s: None },
    Spec { id: 16, title: "level-set structure", run: c16, two_d: true, limit_s: None },
];

/// Criteria and their 1D runtimes from one pass over both grids.
fn pass(seed: u64, only: Option<&[u32]>) -> Result<(Vec<Collector>, Vec<f64>)> {
    let one = Ctx::new(seed, GRID_1D, "1d")?;
    let two = Ctx::new(seed, GRID_2D, "2d")?;
    let (cache1, cache2) = (Cache::default(), Cache::default());
    let mut out = Vec::new();
    let mut times = Vec::new();
    for spec in SPECS.iter().filter(|s| only.map_or(true, |o| o.contains(&s.id))) {
        let start = Instant::now();
        let mut c = (spec.run)(&one, &cache1);
        times.push(start.elapsed().as_secs_f64());
        if spec.two_d {
            c.extend((spec.run)(&two, &cache2));
        }
        out.push(c);
    }
    Ok((out, times))
}

/// Runs the full suite. Criterion 17 reruns criteria 1 to 16 and compares
/// the CSV bytes.
pub fn run(seed: u64) -> Result<Report> {
    run_selected(seed, None)
}

/// Runs the listed criteria; criterion 17 is included when listed.
pub fn run_selected(seed: u64, only: Option<&[u32]>) -> Result<Report> {
    let start = Instant::now();
    let (parts, times) = pass(seed, only)?;
    let first_runtime = start.elapsed().as_secs_f64();
    let selected: Vec<&Spec> = SPECS.iter().filter(|s| only.map_or(true, |o| o.contains(&s.id))).collect();
    let mut summaries = Vec::new();
    let mut all = Collector::default();
    for ((spec, c), t) in selected.iter().zip(parts).zip(times) {
        summaries.push(criterion_summary(spec.id, spec.title, &c, t, spec.limit_s));
        all.extend(c);
    }
    if only.map_or(true, |o| o.contains(&17)) {
        let first = csv_string(&all.rows);
        let (again, _) = pass(seed, only)?;
        let mut rerun = Collector::default();
        for c in again {
            rerun.extend(c);
        }
        let mut c = Collector::default();
        let inputs = format!("seed={seed} rows={}", all.rows.len());
        c.push(Row::holds("17", "csv-bytes-identical", &inputs, first == csv_string(&rerun.rows)));
        summaries.push(criterion_summary(17, "determinism and runtime", &c, first_runtime, Some(TOTAL_LIMIT_S)));
        all.extend(c);
    }
    let config = serde_json::json!({
        "seed": seed,
        "grids": [
            {"n": GRID_1D.0, "half-extent": GRID_1D.1, "points": GRID_1D.2, "levels": GRID_1D.3},
            {"n": GRID_2D.0, "half-extent": GRID_2D.1, "points": GRID_2D.2, "levels": GRID_2D.3},
        ],
    });
    Ok(summarize("suite", config, all, start.elapsed().as_secs_f64(), Some(summaries)))
}

fn criterion_summary(id: u32, title: &str, c: &Collector, runtime_s: f64, limit_s: Option<f64>) -> CriterionSummary {
    let failed = c.rows.iter().filter(|r| !r.pass).count();
    let within = limit_s.map_or(true, |l| runtime_s <= l);
    CriterionSummary {
        id,
        title: title.to_string(),
        pass: failed == 0 && c.errors.is_empty() && within,
        rows: c.rows.len(),
        failed,
        runtime_s,
        runtime_limit_s: limit_s,
        errors: c.errors.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_oracle_matches_formula() {
        for r in [4.0, 64.0, 256.0] {
            assert!((quadrature_mass(r) - 2.0 * (1.0 - 1.0 / (1.0 + r))).abs() < 1e-12);
        }
    }

    #[test]
    fn cheap_criteria_pass_and_are_deterministic() {
        let a = run_selected(5, Some(&[1, 10, 13])).unwrap();
        let b = run_selected(5, Some(&[1, 10, 13])).unwrap();
        assert_eq!(csv_string(&a.rows), csv_string(&b.rows));
        let crit = a.summary.criteria.as_ref().unwrap();
        assert_eq!(crit.len(), 3);
        for c in crit {
            assert!(c.failed == 0 && c.errors.is_empty(), "{c:?}");
        }
    }
}
