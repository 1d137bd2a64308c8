//! Execution of a configured experiment into report rows and a JSON summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::calderon::{
    build_level_sets, factorize, verify_holder_direction, CaseTag, Construction, FactorizationParams,
};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::corpus::{random_band_limited, random_coefficients, random_simple, stream};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::interp::{competitor_family, inter_rest_check, scalar_interp_sandwich, three_lines_bound, InterRestParams};
use crate::lebesgue::{luxemburg_norm, mixed_norm};
use crate::lpf::{
    build_admissible_pair, build_dual_pair, build_resolution_of_unity, phi_transform_roundtrip,
    retract_roundtrip, FilterBank, F_infty_norm, F_norm,
};
use crate::report::{write_csv, Row};
use crate::seqspaces::{coefficient_bound_check, f_infty_norm, f_norm, DyadicCoefficients};
use crate::suite::{self, CriterionSummary};

/// Round-trip contract of the filter banks.
pub const ROUNDTRIP_TOL: f64 = 1e-6;
/// Contract of the scalar interpolation upper ratio.
pub const SANDWICH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub version: String,
    pub config: serde_json::Value,
    pub rows: usize,
    pub failed: usize,
    pub pass: bool,
    /// Smallest margin of every check.
    pub worst_margins: BTreeMap<String, f64>,
    /// `[min, max]` of every recorded ratio.
    pub brackets: BTreeMap<String, [f64; 2]>,
    pub errors: Vec<String>,
    pub runtime_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<CriterionSummary>>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    /// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let io = |e: std::io::Error| Error::InvalidInput(format!("writing report: {e}"));
        std::fs::create_dir_all(dir).map_err(io)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        write_csv(&self.rows, std::fs::File::create(&csv_path).map_err(io)?)?;
        let json = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        std::fs::write(&json_path, json + "\n").map_err(io)?;
        Ok((csv_path, json_path))
    }
}

/// Accumulates rows together with ratio brackets and error messages.
#[derive(Debug, Default)]
pub(crate) struct Collector {
    pub rows: Vec<Row>,
    pub brackets: BTreeMap<String, [f64; 2]>,
    pub errors: Vec<String>,
}

impl Collector {
    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn bracket(&mut self, name: &str, value: f64) {
        let e = self.brackets.entry(name.to_string()).or_insert([f64::INFINITY, f64::NEG_INFINITY]);
        e[0] = e[0].min(value);
        e[1] = e[1].max(value);
    }

    pub fn error(&mut self, criterion: &str, check: &str, inputs: &str, err: &Error) {
        self.errors.push(format!("{criterion}/{check} [{inputs}]: {err}"));
        self.rows.push(Row::error(criterion, check, inputs));
    }

    pub fn extend(&mut self, other: Collector) {
        self.rows.extend(other.rows);
        for (k, [lo, hi]) in other.brackets {
            self.bracket(&k, lo);
            self.bracket(&k, hi);
        }
        self.errors.extend(other.errors);
    }
}

pub(crate) fn summarize(
    experiment: &str,
    config: serde_json::Value,
    c: Collector,
    runtime_s: f64,
    criteria: Option<Vec<CriterionSummary>>,
) -> Report {
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    for r in &c.rows {
        let key = format!("{}/{}", r.criterion, r.check);
        let e = worst.entry(key).or_insert(f64::INFINITY);
        // NaN margins dominate.
        if r.margin.is_nan() || r.margin < *e {
            *e = r.margin;
        }
    }
    let failed = c.rows.iter().filter(|r| !r.pass).count();
    let criteria_pass = criteria.as_ref().map_or(true, |cs| cs.iter().all(|c| c.pass));
    Report {
        summary: Summary {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            rows: c.rows.len(),
            failed,
            pass: failed == 0 && c.errors.is_empty() && criteria_pass,
            worst_margins: worst,
            brackets: c.brackets,
            errors: c.errors,
            runtime_s,
            criteria,
        },
        rows: c.rows,
    }
}

fn relative_reconstruction(
    lambda: &DyadicCoefficients<f64>,
    l0: &DyadicCoefficients<f64>,
    l1: &DyadicCoefficients<f64>,
    norm: f64,
    theta: f64,
) -> f64 {
    let scale = lambda.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
    lambda
        .iter()
        .map(|(c, z)| (z.norm() - norm * l0.get(c).norm().powf(1.0 - theta) * l1.get(c).norm().powf(theta)).abs())
        .fold(0.0, f64::max)
        / scale
}

struct Setup {
    grid: Grid<f64>,
    levels: u32,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let grid = cfg.grid.build()?;
    Ok(Setup {
        levels: cfg.grid.max_level(&grid),
        grid,
    })
}

fn coefficients(cfg: &ExperimentConfig, s: &Setup, item: usize) -> Result<DyadicCoefficients<f64>> {
    random_coefficients(s.grid, s.levels, cfg.corpus.coefficients, &mut stream(cfg.corpus.seed, item as u64))
}

fn band_limited(cfg: &ExperimentConfig, s: &Setup, band: f64, item: usize) -> Result<GridFunction<f64>> {
    let mut rng = stream(cfg.corpus.seed, item as u64);
    random_band_limited(s.grid.dim(), s.grid.half_extent(), band, cfg.corpus.modes, &mut rng).sample(&s.grid)
}

fn construction_for(params: &FactorizationParams<f64>) -> Construction {
    if params.case() == CaseTag::CaseI {
        Construction::Pp
    } else {
        Construction::PqInfty
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    if cfg.experiment == ExperimentKind::Suite {
        return suite::run(cfg.corpus.seed);
    }
    let s = setup(cfg)?;
    let items: Vec<usize> = (0..cfg.corpus.count).collect();
    let kind = cfg.experiment.as_str();
    let parts: Vec<Collector> = match cfg.experiment {
        ExperimentKind::Norms => items.par_iter().map(|&i| norms_item(cfg, &s, i)).collect(),
        ExperimentKind::FactorizePp | ExperimentKind::FactorizePqInfty => {
            let construction = if cfg.experiment == ExperimentKind::FactorizePp {
                Construction::Pp
            } else {
                Construction::PqInfty
            };
            let params: Vec<FactorizationParams<f64>> =
                cfg.theta.iter().map(|&t| cfg.exponents.params(&s.grid, t)).collect::<Result<_>>()?;
            let mut head = Collector::default();
            for (p, t) in params.iter().zip(&cfg.theta) {
                head.push(Row::at_most(kind, "exponent-identities", &format!("theta={t}"), p.identity_residual(), 1e-12));
            }
            let mut parts = vec![head];
            parts.extend(items.par_iter().map(|&i| factorize_item(cfg, &s, &params, construction, i)).collect::<Vec<_>>());
            parts
        }
        ExperimentKind::Holder => {
            let params: Vec<FactorizationParams<f64>> =
                cfg.theta.iter().map(|&t| cfg.exponents.params(&s.grid, t)).collect::<Result<_>>()?;
            items.par_iter().map(|&i| holder_item(cfg, &s, &params, i)).collect()
        }
        ExperimentKind::Roundtrip => {
            let dual = build_dual_pair(&build_admissible_pair(&s.grid, s.levels)?)?;
            let unity = build_resolution_of_unity(&s.grid, s.levels)?;
            let band = 0.9 * dual.band_limit().min(unity.band_limit());
            items.par_iter().map(|&i| roundtrip_item(cfg, &s, &dual, &unity, band, i)).collect()
        }
        ExperimentKind::LebesgueInterp => items.par_iter().map(|&i| interp_item(cfg, &s, i)).collect(),
        ExperimentKind::InterRest => {
            let admissible = build_admissible_pair(&s.grid, s.levels)?;
            let unity = build_resolution_of_unity(&s.grid, s.levels)?;
            let band = 0.9 * admissible.band_limit().min(unity.band_limit());
            items.par_iter().map(|&i| inter_rest_item(cfg, &s, &admissible, &unity, band, i)).collect()
        }
        ExperimentKind::Suite => unreachable!(),
    };
    let mut all = Collector::default();
    for p in parts {
        all.extend(p);
    }
    let config = serde_json::to_value(cfg).expect("config serializes");
    Ok(summarize(kind, config, all, start.elapsed().as_secs_f64(), None))
}

fn norms_item(cfg: &ExperimentConfig, s: &Setup, i: usize) -> Collector {
    let mut c = Collector::default();
    let inputs = format!("seed={} item={i}", cfg.corpus.seed);
    let tol = cfg.tolerances.norm;
    let res = (|| -> Result<()> {
        let f = cfg.exponents.build(&s.grid)?;
        let lambda = coefficients(cfg, s, i)?;
        let n = f_norm(&lambda, &f.alpha0, &f.p0, &f.q0, tol)?.value;
        c.push(Row::finite("norms", "f-norm", &inputs, n));
        let n2 = f_norm(&lambda.scale(Complex::new(0.0, 2.5)), &f.alpha0, &f.p0, &f.q0, tol)?.value;
        c.push(Row::at_most("norms", "f-norm-homogeneity", &inputs, (n2 / n - 2.5).abs() / 2.5, cfg.tolerances.contract));
        let ratio = coefficient_bound_check(&lambda, &f.alpha0, &f.p0, &f.q0, tol)?;
        c.push(Row::finite("norms", "coefficient-bound", &inputs, ratio));
        c.bracket("coefficient-bound", ratio);
        let g = band_limited(cfg, s, s.grid.nyquist() / 4.0, i)?;
        let l = luxemburg_norm(&g, &f.p0, tol)?.value;
        let l2 = luxemburg_norm(&g.scale(Complex::new(-3.0, 0.0)), &f.p0, tol)?.value;
        c.push(Row::finite("norms", "luxemburg", &inputs, l));
        c.push(Row::at_most("norms", "luxemburg-homogeneity", &inputs, (l2 / l - 3.0).abs() / 3.0, cfg.tolerances.contract));
        Ok(())
    })();
    if let Err(e) = res {
        c.error("norms", "evaluation", &inputs, &e);
    }
    c
}

fn factorize_item(
    cfg: &ExperimentConfig,
    s: &Setup,
    params: &[FactorizationParams<f64>],
    construction: Construction,
    i: usize,
) -> Collector {
    let kind = cfg.experiment.as_str();
    let mut c = Collector::default();
    for p in params {
        let inputs = format!("seed={} item={i} theta={}", cfg.corpus.seed, p.theta);
        let res = (|| -> Result<()> {
            let lambda = coefficients(cfg, s, i)?;
            let f = factorize(&lambda, p, construction, cfg.tolerances.norm)?;
            let err = relative_reconstruction(&lambda, &f.lambda0, &f.lambda1, f.norm, p.theta);
            c.push(Row::at_most(kind, "reconstruction", &inputs, err, cfg.tolerances.contract));
            let upper = f.norm * f.norm0.max(1.0).powf(1.0 - p.theta) * f.norm1.max(1.0).powf(p.theta);
            let ratio = upper / f.norm;
            c.push(Row::at_least(kind, "bracket-ratio", &inputs, ratio, 1.0 - cfg.tolerances.contract));
            c.bracket("bracket-ratio", ratio);
            c.bracket("factor-norm-0", f.norm0);
            c.bracket("factor-norm-1", f.norm1);
            if construction == Construction::PqInfty {
                let dec = build_level_sets(&lambda, p, cfg.tolerances.norm)?;
                let ok = dec.check_invariants(&lambda);
                if let Err(e) = &ok {
                    c.errors.push(format!("{kind}/level-sets [{inputs}]: {e}"));
                }
                c.push(Row::holds(kind, "level-sets", &inputs, ok.is_ok()));
            }
            Ok(())
        })();
        if let Err(e) = res {
            c.error(kind, "factorize", &inputs, &e);
        }
    }
    c
}

fn holder_item(cfg: &ExperimentConfig, s: &Setup, params: &[FactorizationParams<f64>], i: usize) -> Collector {
    let mut c = Collector::default();
    for p in params {
        let inputs = format!("seed={} item={i} theta={}", cfg.corpus.seed, p.theta);
        let res = (|| -> Result<()> {
            let lambda = coefficients(cfg, s, i)?;
            let f = factorize(&lambda, p, construction_for(p), cfg.tolerances.norm)?;
            let l0 = match cfg.holder.corrupt_factors {
                Some(k) => f.lambda0.scale(Complex::new(k, 0.0)),
                None => f.lambda0,
            };
            let unit = lambda.scale(Complex::new(1.0 / f.norm, 0.0));
            match verify_holder_direction(&unit, &l0, &f.lambda1, p, cfg.tolerances.norm) {
                Ok(h) => {
                    c.push(Row::holds("holder", "domination", &inputs, true));
                    let reference = if p.is_infinite_endpoint() { h.exact_bound } else { h.bound };
                    c.push(Row::at_most("holder", "holder-bound", &inputs, h.norm, reference * (1.0 + cfg.tolerances.contract)));
                    c.bracket("norm-over-bound", h.norm / reference);
                }
                Err(e @ Error::PreconditionViolation(_)) => {
                    c.errors.push(format!("holder/domination [{inputs}]: {e}"));
                    c.push(Row::holds("holder", "domination", &inputs, false));
                }
                Err(e) => return Err(e),
            }
            Ok(())
        })();
        if let Err(e) = res {
            c.error("holder", "evaluation", &inputs, &e);
        }
    }
    c
}

fn roundtrip_item(
    cfg: &ExperimentConfig,
    s: &Setup,
    dual: &FilterBank<f64>,
    unity: &FilterBank<f64>,
    band: f64,
    i: usize,
) -> Collector {
    let mut c = Collector::default();
    let inputs = format!("seed={} item={i} band={band}", cfg.corpus.seed);
    let res = (|| -> Result<()> {
        let f = band_limited(cfg, s, band, i)?;
        let a = phi_transform_roundtrip(&f, dual)?;
        let b = retract_roundtrip(&f, unity)?;
        c.push(Row::at_most("roundtrip", "phi-transform", &inputs, a.residual, ROUNDTRIP_TOL));
        c.push(Row::at_most("roundtrip", "retraction", &inputs, b.residual, ROUNDTRIP_TOL));
        Ok(())
    })();
    if let Err(e) = res {
        c.error("roundtrip", "evaluation", &inputs, &e);
    }
    c
}

fn interp_item(cfg: &ExperimentConfig, s: &Setup, i: usize) -> Collector {
    let mut c = Collector::default();
    for &theta in &cfg.theta {
        let inputs = format!("seed={} item={i} theta={theta}", cfg.corpus.seed);
        let res = (|| -> Result<()> {
            let fields = cfg.exponents.build(&s.grid)?;
            let p1 = fields.p1.as_ref().expect("validated finite p1");
            let f = random_simple(s.grid, cfg.corpus.regions, &mut stream(cfg.corpus.seed, i as u64))?;
            let r = scalar_interp_sandwich(&f, &fields.p0, p1, theta, cfg.tolerances.norm)?;
            c.push(Row::at_most("lebesgue-interp", "upper-ratio", &inputs, r.upper_ratio, 1.0 + SANDWICH_TOL));
            c.push(Row::finite("lebesgue-interp", "lower-ratio", &inputs, r.lower_ratio));
            c.bracket("upper-ratio", r.upper_ratio);
            c.bracket("lower-ratio", r.lower_ratio);
            let fam = competitor_family(&f, &fields.p0, p1, theta)?;
            for region in 0..f.regions().len() {
                let t = three_lines_bound(&fam, region)?;
                c.push(Row::at_least(
                    "lebesgue-interp",
                    "three-lines",
                    &format!("{inputs} region={region}"),
                    t.worst_slack,
                    -cfg.tolerances.contract * t.max_abs,
                ));
            }
            Ok(())
        })();
        if let Err(e) = res {
            c.error("lebesgue-interp", "evaluation", &inputs, &e);
        }
    }
    c
}

fn inter_rest_item(
    cfg: &ExperimentConfig,
    s: &Setup,
    admissible: &FilterBank<f64>,
    unity: &FilterBank<f64>,
    band: f64,
    i: usize,
) -> Collector {
    let mut c = Collector::default();
    for &theta in &cfg.theta {
        let inputs = format!("seed={} item={i} theta={theta}", cfg.corpus.seed);
        let res = (|| -> Result<()> {
            let fields = cfg.exponents.build(&s.grid)?;
            let params = InterRestParams {
                theta,
                p0: fields.p0.clone(),
                p1: fields.p1.clone().expect("validated finite p1"),
                alpha0: fields.alpha0.at(0),
                alpha1: fields.alpha1.at(0),
                q0: fields.q0.at(0),
                q1: fields.q1.as_ref().expect("validated finite q1").at(0),
            };
            let f = band_limited(cfg, s, band, i)?;
            let r = inter_rest_check(&f, &params, admissible, unity, cfg.tolerances.norm)?;
            c.push(Row::at_most("inter-rest", "route-ratio", &inputs, r.ratio.max(1.0 / r.ratio), 2.0));
            c.bracket("route-ratio", r.ratio);
            Ok(())
        })();
        if let Err(e) = res {
            c.error("inter-rest", "evaluation", &inputs, &e);
        }
    }
    c
}

/// Norm families available to the `norm` verb.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// `||f||_{p0}` of band-limited functions.
    Lux,
    /// `L^{p0}(l^{q0})` of the Littlewood-Paley pieces of band-limited functions.
    Mixed,
    /// `f^{alpha0}_{p0,q0}` of coefficient sets.
    F,
    /// `f^{alpha1}_{inf,q1}` of coefficient sets.
    Finfty,
    /// `F^{alpha0}_{p0,q0}` of band-limited functions.
    FunctionF,
    /// `F^{alpha1}_{inf,q1}` of band-limited functions.
    FunctionFinfty,
}

/// One norm per corpus item.
pub fn norm_values(cfg: &ExperimentConfig, kind: NormKind) -> Result<Vec<f64>> {
    let s = setup(cfg)?;
    let f = cfg.exponents.build(&s.grid)?;
    let tol = cfg.tolerances.norm;
    let q1 = || {
        f.q1.as_ref()
            .filter(|q| q.is_constant())
            .map(|q| q.at(0))
            .ok_or_else(|| Error::InvalidConfiguration("this norm needs a constant q1".into()))
    };
    let needs_bank = matches!(kind, NormKind::Mixed | NormKind::FunctionF | NormKind::FunctionFinfty);
    let bank = if needs_bank { Some(build_admissible_pair(&s.grid, s.levels)?) } else { None };
    let band = bank.as_ref().map_or(s.grid.nyquist() / 4.0, |b| 0.9 * b.band_limit());
    (0..cfg.corpus.count)
        .into_par_iter()
        .map(|i| match kind {
            NormKind::Lux => Ok(luxemburg_norm(&band_limited(cfg, &s, band, i)?, &f.p0, tol)?.value),
            NormKind::Mixed => {
                let g = band_limited(cfg, &s, band, i)?;
                let bank = bank.as_ref().expect("bank built");
                let plan = crate::fft::FftPlan::new(&s.grid);
                let spec = plan.spectrum(&g);
                let family: Vec<GridFunction<f64>> = bank
                    .phi
                    .iter()
                    .map(|m| GridFunction::new(s.grid, plan.multiply_spectrum(&spec, m)))
                    .collect::<Result<_>>()?;
                Ok(mixed_norm(&family, &f.p0, &f.q0, tol)?.value)
            }
            NormKind::F => Ok(f_norm(&coefficients(cfg, &s, i)?, &f.alpha0, &f.p0, &f.q0, tol)?.value),
            NormKind::Finfty => f_infty_norm(&coefficients(cfg, &s, i)?, &f.alpha1, q1()?),
            NormKind::FunctionF => Ok(F_norm(&band_limited(cfg, &s, band, i)?, &f.alpha0, &f.p0, &f.q0, bank.as_ref().expect("bank built"), tol)?.value),
            NormKind::FunctionFinfty => F_infty_norm(&band_limited(cfg, &s, band, i)?, &f.alpha1, q1()?, bank.as_ref().expect("bank built")),
        })
        .collect()
}
