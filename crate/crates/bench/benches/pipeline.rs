use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rxnfit::abm::{self, AbmConfig};
use rxnfit::eql;
use rxnfit::ode::{integrate_steps, DEFAULT_BLOWUP_BOUND};
use rxnfit::solvers::{solve_nnls, RegressionProblem};
use rxnfit::{RateVector, ReactionLibrary, TimeSeries};

fn reference_data() -> (ReactionLibrary, TimeSeries) {
    let mut k = vec![0.0; 17];
    for (id, v) in [(5, 3.2039), (7, 2.9834), (9, 3.1328), (10, 9.1077), (12, 0.1164), (14, 0.1193), (15, 3.855), (17, 4.5202)] {
        k[id - 1] = v;
    }
    let lib = ReactionLibrary::enumerate(2).unwrap();
    let model = lib.assemble(&RateVector::new(k).unwrap()).unwrap();
    let ts = integrate_steps(&model, &[0.001, 0.324], 0.0, 2.0 / 135.0, 1800, DEFAULT_BLOWUP_BOUND).unwrap();
    (lib, ts)
}

fn bench_fit(c: &mut Criterion) {
    let (lib, ts) = reference_data();
    let design = eql::coupled_design_matrix(&ts, &lib).unwrap();
    let deriv = eql::finite_difference(&ts).unwrap();
    let problem = RegressionProblem::new(design.entries, nalgebra::DVector::from_vec(deriv.stacked())).unwrap();
    c.bench_function("nnls_coupled_3602x17", |b| b.iter(|| solve_nnls(black_box(&problem)).unwrap()));
    c.bench_function("fit_coupled_1801", |b| b.iter(|| eql::fit_coupled(black_box(&ts), &lib).unwrap()));
}

fn bench_abm(c: &mut Criterion) {
    let cfg = AbmConfig::default();
    let state = abm::init_state(&cfg).unwrap();
    c.bench_function("abm_step_100x100", |b| b.iter(|| abm::step(black_box(&state), &cfg)));
}

criterion_group!(benches, bench_fit, bench_abm);
criterion_main!(benches);
