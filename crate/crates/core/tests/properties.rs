//! Cross-module properties on random inputs.

use proptest::prelude::*;
use vexint::calderon::{equivalence_experiment, Construction, FactorizationParams};
use vexint::corpus::{random_coefficients, random_simple, stream, transfer};
use vexint::exponents::{build_exponent, conjugate, ExponentField, Recipe, Role};
use vexint::grid::{cube_mask, enumerate_cubes, Grid};
use vexint::interp::{competitor_family, scalar_interp_sandwich, three_lines_bound};
use vexint::kernels::eta;
use vexint::lebesgue::luxemburg_norm;

fn sine(base: f64, amplitude: f64) -> Recipe {
    Recipe::SinePerturbation {
        base,
        amplitude,
        frequency: 1.0,
    }
}

fn chi_bracket(grid: &Grid<f64>, p: &Recipe, levels: std::ops::RangeInclusive<u32>) -> f64 {
    let p = build_exponent(p, grid, Role::Integrability).unwrap();
    let pc = conjugate(&p).unwrap();
    let mut worst = 1.0f64;
    for level in levels {
        for cube in enumerate_cubes(grid, level).unwrap() {
            let chi = cube_mask(&cube, grid).unwrap();
            let a = luxemburg_norm(&chi, &p, 1e-12).unwrap().value;
            let b = luxemburg_norm(&chi, &pc, 1e-12).unwrap().value;
            let r = a * b / cube.measure::<f64>(grid.dim());
            worst = worst.max(r).max(1.0 / r);
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cube_masks_partition_and_nest(dim in 1usize..=2, k in 2u32..=4, half in prop::sample::select(vec![1.0, 2.0, 4.0])) {
        let grid = Grid::<f64>::new(dim, half, ((2.0 * half) as usize * (1 << k)).max(16)).unwrap();
        for level in 0..=grid.finest_level() {
            let cubes = enumerate_cubes(&grid, level).unwrap();
            let mut total = vec![0.0; grid.len()];
            for cube in &cubes {
                let mask = cube_mask(cube, &grid).unwrap();
                for (t, v) in total.iter_mut().zip(mask.values()) {
                    *t += v.re;
                }
                let want = cube.measure::<f64>(dim);
                prop_assert!((mask.mass().re - want).abs() <= 1e-12 * want);
                if level > 0 {
                    let parent = cube.parent().unwrap();
                    let outer = parent.cells(&grid);
                    prop_assert!(cube.cells(&grid).iter().all(|i| outer.contains(i)));
                }
            }
            prop_assert!(total.iter().all(|&t| t == 1.0));
        }
    }

    #[test]
    fn eta_mass_approaches_its_limit(m in 1.5f64..4.0, half in prop::sample::select(vec![2.0, 4.0])) {
        let grid = Grid::<f64>::new(1, half, 256).unwrap();
        let mut last = 0.0;
        for v in 0..=6u32 {
            let k = eta(v, m, &grid).unwrap();
            let limit = k.mass_limit.unwrap();
            let tail = 2.0 / (m - 1.0) * (1.0 + 2f64.powi(v as i32) * half).powf(-(m - 1.0));
            prop_assert!((limit - k.mass - tail).abs() <= 1e-12 * limit, "v={v}: {} {limit}", k.mass);
            prop_assert!(k.mass > last);
            last = k.mass;
        }
    }

    #[test]
    fn three_lines_never_fails(seed in any::<u64>(), theta in 0.1f64..0.9) {
        let grid = Grid::<f64>::new(1, 4.0, 256).unwrap();
        let mut rng = stream(seed, 0);
        let f = random_simple(grid, 4, &mut rng).unwrap();
        let p0 = build_exponent(&sine(2.0, 0.6), &grid, Role::Integrability).unwrap();
        let p1 = build_exponent(&Recipe::PlateauRamp { left: 4.0, right: 1.5, width: 1.0 }, &grid, Role::Integrability).unwrap();
        let fam = competitor_family(&f, &p0, &p1, theta).unwrap();
        for region in 0..f.regions().len() {
            let r = three_lines_bound(&fam, region).unwrap();
            prop_assert!(r.worst_slack >= -1e-6 * r.max_abs.max(1.0), "{r:?}");
        }
    }

    #[test]
    fn equal_endpoints_give_unit_sandwich(seed in any::<u64>(), base in 1.3f64..4.0, theta in 0.1f64..0.9) {
        let grid = Grid::<f64>::new(1, 4.0, 256).unwrap();
        let f = random_simple(grid, 3, &mut stream(seed, 1)).unwrap();
        let p = build_exponent(&sine(base, 0.2), &grid, Role::Integrability).unwrap();
        let r = scalar_interp_sandwich(&f, &p, &p, theta, 1e-13).unwrap();
        prop_assert!((r.upper_ratio - 1.0).abs() <= 1e-6, "{r:?}");
        prop_assert!((r.lower_ratio - 1.0).abs() <= 1e-6, "{r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn characteristic_function_bracket_is_refinement_stable(base in 1.5f64..3.5, amplitude in 0.0f64..0.4) {
        let recipe = sine(base, amplitude);
        let coarse = chi_bracket(&Grid::new(1, 2.0, 128).unwrap(), &recipe, 0..=3);
        let fine = chi_bracket(&Grid::new(1, 2.0, 256).unwrap(), &recipe, 0..=3);
        prop_assert!(coarse.is_finite() && fine.is_finite());
        prop_assert!(fine / coarse <= 2.0 && coarse / fine <= 2.0, "{coarse} {fine}");
    }

    #[test]
    fn constant_exponent_brackets_are_refinement_stable(seed in any::<u64>(), p0 in 1.5f64..4.0, p1 in 1.5f64..4.0, theta in 0.2f64..0.8) {
        let bracket = |grid: Grid<f64>, corpus: &[vexint::seqspaces::DyadicCoefficients<f64>]| {
            let k = |v, role| ExponentField::constant(grid, v, role).unwrap();
            let params = FactorizationParams::pp(
                theta,
                k(p0, Role::Integrability),
                k(p1, Role::Integrability),
                k(0.4, Role::Smoothness),
                k(-0.3, Role::Smoothness),
            )
            .unwrap();
            let r = equivalence_experiment(corpus, &params, Construction::Pp, 1e-12).unwrap();
            r.max_ratio / r.min_ratio
        };
        let grid = Grid::new(1, 4.0, 512).unwrap();
        let fine = Grid::new(1, 4.0, 1024).unwrap();
        let corpus: Vec<_> = (0..6).map(|k| random_coefficients(grid, 4, 60, &mut stream(seed, k)).unwrap()).collect();
        let moved: Vec<_> = corpus.iter().map(|l| transfer(l, fine).unwrap()).collect();
        let (a, b) = (bracket(grid, &corpus), bracket(fine, &moved));
        prop_assert!(a >= 1.0 - 1e-9 && b >= 1.0 - 1e-9);
        prop_assert!(a / b <= 2.0 && b / a <= 2.0, "{a} {b}");
    }
}

#[test]
fn constant_exponent_chi_bracket_is_one() {
    let grid = Grid::new(1, 2.0, 128).unwrap();
    let c = chi_bracket(&grid, &Recipe::Constant { value: 2.5 }, 0..=3);
    assert!((c - 1.0).abs() < 1e-9, "{c}");
}
