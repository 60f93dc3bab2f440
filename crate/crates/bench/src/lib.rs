//! Fixtures shared by the benchmarks.

use levycal::calib::{build_model, prepare_targets, CalibProblem, DataSource, FormConfig, Mode, Objective};
use levycal::simulate::{sample_stable_increments, sample_truncated_normal, RngState, DEFAULT_DIRECTIONS};

/// A ready objective and a starting point for it.
pub struct Fixture {
    pub objective: Objective,
    pub theta: Vec<f64>,
    pub problem: CalibProblem,
}

/// Stable mode, 1000 increments at alpha 1.5 with uniform spectral density.
pub fn stable_fixture(form: FormConfig) -> Fixture {
    let data = sample_stable_increments(|_| 1.0, 1.5, 0.5, 1000, DEFAULT_DIRECTIONS, &RngState::new(0))
        .expect("simulation");
    build(CalibProblem::new(Mode::Stable, form, DataSource::Increments(data)))
}

/// Lévy mode, 1000 compound-Poisson increments with truncated-normal jumps.
pub fn levy_fixture(form: FormConfig) -> Fixture {
    let data = sample_truncated_normal(0.5, 1000, &RngState::new(0)).expect("simulation").series;
    build(CalibProblem::new(Mode::Levy, form, DataSource::Increments(data)))
}

fn build(problem: CalibProblem) -> Fixture {
    let (targets, _) = prepare_targets(&problem).expect("targets");
    let model = build_model(&problem).expect("model");
    let mut theta = vec![0.1; model.num_params()];
    if problem.mode == Mode::Stable {
        *theta.last_mut().unwrap() = 0.0;
    }
    let objective = Objective::new(model, &targets, problem.data.dt()).expect("objective");
    Fixture { objective, theta, problem }
}
