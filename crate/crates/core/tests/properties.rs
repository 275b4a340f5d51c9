#![allow(clippy::field_reassign_with_default)]

use std::collections::BTreeSet;

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rxnfit::abm::{self, AbmConfig, CellKind};
use rxnfit::eql::{self, Coefficients};
use rxnfit::ode::{eval_rhs, find_equilibrium, integrate_steps, DEFAULT_BLOWUP_BOUND};
use rxnfit::solvers::{self, RegressionProblem};
use rxnfit::ssa::{self, Grid, SsaConfig};
use rxnfit::{PolynomialOde, RateVector, ReactionLibrary, TimeSeries};

fn reference_rates() -> RateVector {
    let mut k = vec![0.0; 17];
    for (id, v) in [
        (5, 3.2039137),
        (7, 2.983428),
        (9, 3.132762),
        (10, 9.107733),
        (12, 0.116421),
        (14, 0.119287),
        (15, 3.855036),
        (17, 4.520207),
    ] {
        k[id - 1] = v;
    }
    RateVector::new(k).unwrap()
}

fn reference_model() -> PolynomialOde {
    ReactionLibrary::enumerate(2).unwrap().assemble(&reference_rates()).unwrap()
}

fn reference_data(steps: usize) -> TimeSeries {
    integrate_steps(&reference_model(), &[0.001, 0.324], 0.0, 80.0 / 3.0 / 1800.0, steps, DEFAULT_BLOWUP_BOUND).unwrap()
}

fn matrix(seed: u64, m: usize, n: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

fn vector(seed: u64, m: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0))
}

fn problem_strategy() -> impl Strategy<Value = RegressionProblem> {
    (1usize..=17, 0usize..=43, any::<u64>()).prop_map(|(n, extra, seed)| {
        let m = n + extra;
        RegressionProblem::new(matrix(seed, m, n), vector(seed ^ 0x5eed, m)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn nnls_satisfies_kkt(p in problem_strategy()) {
        let sol = solvers::solve_nnls(&p).unwrap();
        let x = DVector::from_vec(sol.x.clone());
        let g = p.a().transpose() * (p.a() * &x - p.b());
        for j in 0..p.ncols() {
            prop_assert!(x[j] >= 0.0);
            if x[j] > 0.0 {
                prop_assert!(g[j].abs() <= 1e-8, "free gradient {}", g[j]);
            } else {
                prop_assert!(g[j] >= -1e-8, "bound gradient {}", g[j]);
            }
        }
        prop_assert!((sol.residual_norm - p.residual_norm(&sol.x)).abs() <= 1e-12 * (1.0 + sol.residual_norm));
    }

    #[test]
    fn ridge_norm_shrinks(p in problem_strategy(), k1 in 0.0f64..5.0, dk in 0.0f64..5.0) {
        let norm = |k: f64| solvers::solve_ridge(&p, k).unwrap().x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm(k1 + dk) <= norm(k1) * (1.0 + 1e-10));
    }

    #[test]
    fn lasso_objective_non_increasing(p in problem_strategy(), lambda in 0.0f64..2.0) {
        let mut last = f64::INFINITY;
        for it in 1..=15 {
            let x = solvers::solve_lasso(&p, lambda, it, 0.0).unwrap().x;
            let obj = solvers::lasso_objective(&p, &x, lambda);
            prop_assert!(obj <= last * (1.0 + 1e-12) + 1e-15, "iteration {it}: {obj} > {last}");
            last = obj;
        }
    }

    #[test]
    fn stacking_matches_assembly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lib = ReactionLibrary::enumerate(2).unwrap();
        let k: Vec<f64> = (0..17).map(|_| rng.random::<f64>() * 5.0).collect();
        let model = lib.assemble(&RateVector::new(k.clone()).unwrap()).unwrap();
        let rows: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let ts = TimeSeries::from_rows(0.0, 0.1, &rows).unwrap();
        let design = eql::coupled_design_matrix(&ts, &lib).unwrap();
        let stacked = &design.entries * DVector::from_vec(k);
        let n = ts.len();
        for (t, row) in rows.iter().enumerate() {
            let f = model.eval(row).unwrap();
            for i in 0..2 {
                prop_assert!((stacked[i * n + t] - f[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn abm_invariants_hold(seed in 0u64..1000) {
        let mut cfg = AbmConfig::default();
        cfg.lattice_size = 20;
        cfg.tumour_density = 0.05;
        cfg.seed = seed;
        let mut state = abm::init_state(&cfg).unwrap();
        let obstacles = state.census().obstacles;
        for _ in 0..200 {
            let fence_before = state.fence().to_vec();
            state.advance(&cfg);
            let c = state.census();
            prop_assert_eq!(c.empty + c.obstacles + c.healthy + c.tumour, 400);
            prop_assert_eq!(c.obstacles, obstacles);
            prop_assert!(state
                .cells()
                .filter(|c| c.kind == CellKind::Healthy)
                .all(|c| c.division_count <= cfg.max_healthy_divisions));
            prop_assert!(state.fence().iter().zip(&fence_before).all(|(now, before)| !now || *before));
        }
    }
}

#[test]
fn nnls_matches_least_squares_when_feasible() {
    for seed in 0..50 {
        let a = matrix(seed, 40, 8);
        let x_true = DVector::from_fn(8, |i, _| 0.5 + i as f64 * 0.1);
        let b = &a * &x_true;
        let sol = solvers::solve_nnls(&RegressionProblem::new(a, b).unwrap()).unwrap();
        for (u, v) in sol.x.iter().zip(x_true.iter()) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-10);
        }
    }
}

#[test]
fn normal_equations_beat_grid_neighbours() {
    let p = RegressionProblem::new(matrix(3, 6, 3), vector(4, 6)).unwrap();
    let x = solvers::solve_normal_equations(&p).unwrap().x;
    let best = p.residual_norm(&x);
    let steps = [-1e-2, -1e-3, 0.0, 1e-3, 1e-2];
    for &d0 in &steps {
        for &d1 in &steps {
            for &d2 in &steps {
                let y = [x[0] + d0, x[1] + d1, x[2] + d2];
                assert!(p.residual_norm(&y) >= best - 1e-14);
            }
        }
    }
}

#[test]
fn lsqr_agrees_with_normal_equations() {
    let p = RegressionProblem::new(matrix(11, 30, 6), vector(12, 30)).unwrap();
    let exact = solvers::solve_normal_equations(&p).unwrap().x;
    let it = solvers::solve_lsqr(&p, 200, 1e-14).unwrap();
    assert!(it.converged);
    for (u, v) in it.x.iter().zip(&exact) {
        assert_abs_diff_eq!(u, v, epsilon = 1e-9);
    }
}

#[test]
fn lsqr_flags_iteration_cap_on_ill_conditioned_system() {
    let a = DMatrix::from_fn(10, 5, |i, j| ((i + 1) as f64 / 10.0).powi(j as i32));
    let p = RegressionProblem::new(a, vector(13, 10)).unwrap();
    let r = solvers::solve_lsqr(&p, 1, 1e-14).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 1);
    assert!(r.x.iter().any(|&v| v != 0.0));
    assert!(r.residual_norm < p.b().norm());
}

#[test]
fn stlsq_recovers_every_planted_support() {
    let a = matrix(21, 20, 5);
    for mask in 1u32..32 {
        let coef = DVector::from_fn(5, |j, _| if mask & (1 << j) != 0 { 1.0 + j as f64 * 0.5 } else { 0.0 });
        let b = &a * &coef;
        let x = solvers::solve_stlsq(&RegressionProblem::new(a.clone(), b).unwrap(), 0.0, 0.1, 10).unwrap().x;
        let support: u32 = x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, _)| 1 << j).sum();
        assert_eq!(support, mask, "planted {mask:05b}");
    }
    let b = DVector::zeros(20);
    let r = solvers::solve_stlsq(&RegressionProblem::new(a, b).unwrap(), 0.0, 0.1, 10).unwrap();
    assert!(r.all_pruned);
}

#[test]
fn reference_rhs_at_unit_tumour_state() {
    let f = eval_rhs(&reference_model(), &[1.0, 0.0]).unwrap();
    assert_abs_diff_eq!(f[0], 3.2039137 - 3.132762 - 0.116421, epsilon = 1e-12);
    assert_abs_diff_eq!(f[1], 0.116421 / 2.0, epsilon = 1e-12);
    assert!((f[0] - -0.0452).abs() < 1e-4 && (f[1] - 0.0582).abs() < 1e-4);
}

#[test]
fn reference_equilibrium_is_interior() {
    let model = reference_model();
    let y = find_equilibrium(&model, &[0.001, 0.324], 1e4, 1e-8).unwrap();
    let f = eval_rhs(&model, &y).unwrap();
    assert!(f.iter().all(|v| v.abs() < 1e-8));
    assert!(y.iter().all(|&v| v > 0.0 && v < 1.0), "{y:?}");
}

#[test]
fn coupled_fit_is_deterministic_and_stable_under_subsampling() {
    let lib = ReactionLibrary::enumerate(2).unwrap();
    let data = reference_data(1800);
    let a = eql::fit_coupled(&data, &lib).unwrap();
    assert_eq!(a, eql::fit_coupled(&data, &lib).unwrap());
    let coarse = eql::fit_coupled(&eql::subsample(&data, 10).unwrap(), &lib).unwrap();
    let dev = coarse.model.relative_deviation(&a.model);
    assert!(dev.iter().all(|&d| d < 0.01), "{dev:?}");
}

#[test]
fn pruned_rates_keep_original_numbering() {
    let lib = ReactionLibrary::enumerate(2).unwrap();
    let data = reference_data(1800);
    let fit = eql::prune_and_refit(&data, &lib, &BTreeSet::from([11, 5, 2])).unwrap();
    let Coefficients::Rates(k) = &fit.coefficients else { panic!("coupled fit") };
    assert_eq!(k.len(), 17);
    for j in [2, 5, 11] {
        assert_eq!(k.values()[j], 0.0);
    }
    assert_eq!(fit.excluded_reactions, vec![2, 5, 11]);
    assert!(fit.active_reactions.iter().all(|j| ![2, 5, 11].contains(j)));
}

#[test]
fn birth_death_mean_within_three_standard_errors() {
    // X -> X + X at 0.5 and X -> 0 at 1: mean count n0 exp(-t/2).
    let lib = ReactionLibrary::enumerate(1).unwrap();
    let rates = RateVector::new(vec![1.0, 0.5, 0.0, 0.0]).unwrap();
    let cfg = SsaConfig { initial_counts: vec![50], volume: 50.0, t_end: 2.0, record: Grid { t0: 0.0, h: 0.25, len: 9 }, seed: 3 };
    let runs = 500;
    let ens = ssa::gillespie_ensemble(&lib, &rates, &cfg, runs).unwrap();
    for n in 1..cfg.record.len {
        let v: Vec<f64> = ens.runs().iter().map(|r| r.row(n)[0]).collect();
        let mean = v.iter().sum::<f64>() / runs as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt();
        let want = (-0.5 * cfg.record.time(n)).exp();
        assert!((mean - want).abs() <= 3.0 * sd / (runs as f64).sqrt(), "t = {}", cfg.record.time(n));
    }
    assert_eq!(ens.mean(), ssa::gillespie_ensemble(&lib, &rates, &cfg, runs).unwrap().mean());
}

#[test]
fn ssa_tracks_linear_ode() {
    // Unimolecular network: X -> Z at 1, Z -> 0 at 0.5, Z -> X at 0.25.
    let lib = ReactionLibrary::enumerate(2).unwrap();
    let mut k = vec![0.0; 17];
    k[2] = 1.0;
    k[1] = 0.5;
    k[3] = 0.25;
    let rates = RateVector::new(k).unwrap();
    let cfg = SsaConfig { initial_counts: vec![200, 0], volume: 200.0, t_end: 3.0, record: Grid { t0: 0.0, h: 0.5, len: 7 }, seed: 17 };
    let runs = 400;
    let ens = ssa::gillespie_ensemble(&lib, &rates, &cfg, runs).unwrap();
    let ode = integrate_steps(&lib.assemble(&rates).unwrap(), &[1.0, 0.0], 0.0, 0.005, 600, DEFAULT_BLOWUP_BOUND).unwrap();
    for n in 1..cfg.record.len {
        for i in 0..2 {
            let v: Vec<f64> = ens.runs().iter().map(|r| r.row(n)[i]).collect();
            let mean = v.iter().sum::<f64>() / runs as f64;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt();
            let want = ode.row(n * 100)[i];
            assert!((mean - want).abs() <= 4.0 * sd / (runs as f64).sqrt() + 1e-12, "t = {}, species {i}", cfg.record.time(n));
        }
    }
}

#[test]
fn abm_seed_determinism_and_independence() {
    let mut cfg = AbmConfig::default();
    cfg.lattice_size = 20;
    cfg.steps = 200;
    cfg.seed = 42;
    let a = abm::run(&cfg).unwrap();
    assert_eq!(a, abm::run(&cfg).unwrap());
    assert_eq!(a.len(), 201);
    assert!(a.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    let ens = abm::run_ensemble(&cfg, 4, 42).unwrap();
    assert_eq!(ens.runs()[0], a);
    assert_ne!(ens.runs()[1], a);
}
