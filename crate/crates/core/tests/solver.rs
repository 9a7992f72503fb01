use kinetic_core::scheme::{BoundaryData, SchemeOperator, Side, ZeroBoundary};
use kinetic_core::solver::{nor_bound, optimal_s, richardson_solve, richardson_solve_with};
use kinetic_core::{
    run_simulation, DensityField, Error, Relaxation, SolverSettings, SpaceGrid, StepReport,
    TimeGrid, TimeStepper, VelIndex, VelocityGrid,
};
use kinetic_testkit::{
    dense_lhs, dense_solve, from_vector, inf_norm_of_iteration_matrix, random_field, rng,
    row_bound_formula, to_vector,
};

fn op(m1: usize, m2: usize, tau: f64, nu: f64) -> SchemeOperator {
    let sg = SpaceGrid::new(1.0, 1.0, m1, m2).unwrap();
    let vg = VelocityGrid::new(0.5, 0.5, 1, 1, 1, 1).unwrap();
    SchemeOperator::new(sg, vg, TimeGrid::new(tau * 20.0, 20).unwrap(), nu).unwrap()
}

fn tight() -> SolverSettings {
    SolverSettings {
        tol_linear: 1e-13,
        max_linear_iters: 5000,
        ..SolverSettings::default()
    }
}

#[test]
fn recovers_known_solution() {
    let mut g = rng(21);
    for (m1, m2, tau, nu) in [(5, 5, 0.02, 0.01), (3, 7, 0.05, 0.0), (6, 4, 0.01, 0.3)] {
        let o = op(m1, m2, tau, nu);
        let w = random_field(o.space(), o.velocity(), &mut g, -1.0, 1.0);
        let f = o.apply_a(&w).unwrap();
        let sol = richardson_solve(&o, &f, &tight()).unwrap();
        assert!(sol.x.max_abs_diff(&w) < 1e-11, "{}", sol.x.max_abs_diff(&w));
    }
}

#[test]
fn matches_dense_lu() {
    let mut g = rng(22);
    let o = op(4, 5, 0.03, 0.05);
    let f = random_field(o.space(), o.velocity(), &mut g, -1.0, 1.0);
    let sol = richardson_solve(&o, &f, &SolverSettings::default()).unwrap();
    let a = dense_lhs(o.space(), o.velocity(), o.tau(), 0.05);
    let exact = from_vector(&dense_solve(&a, &to_vector(&f)), o.space(), o.velocity());
    assert!(sol.x.max_abs_diff(&exact) < 1e-8);
}

#[test]
fn error_contracts_by_at_most_nor() {
    let mut g = rng(23);
    let o = op(6, 6, 0.04, 0.02);
    let nor = nor_bound(o.coefficients(), o.velocity()).nor;
    assert!(nor < 1.0);
    let f = random_field(o.space(), o.velocity(), &mut g, -1.0, 1.0);
    let a = dense_lhs(o.space(), o.velocity(), o.tau(), 0.02);
    let exact = from_vector(&dense_solve(&a, &to_vector(&f)), o.space(), o.velocity());
    let mut errors = Vec::new();
    let settings = SolverSettings {
        tol_linear: 1e-14,
        max_linear_iters: 30,
        ..SolverSettings::default()
    };
    let _ = richardson_solve_with(&o, &f, &settings, |_, x| {
        errors.push(x.max_abs_diff(&exact))
    });
    assert!(errors.len() > 5);
    for pair in errors.windows(2) {
        if pair[0] > 1e-13 {
            assert!(
                pair[1] <= (nor + 1e-12) * pair[0],
                "{} > {} * {}",
                pair[1],
                nor,
                pair[0]
            );
        }
    }
}

#[test]
fn nor_bounds_the_iteration_matrix_norm() {
    for (tau, nu) in [(0.02, 0.0), (0.04, 0.01), (0.01, 0.2)] {
        let o = op(4, 3, tau, nu);
        let a = dense_lhs(o.space(), o.velocity(), tau, nu);
        let s = optimal_s(&o.coefficients()[0]);
        let nor = nor_bound(o.coefficients(), o.velocity()).nor;
        let norm = inf_norm_of_iteration_matrix(&a, s);
        assert!((norm - row_bound_formula(&a, s)).abs() < 1e-14);
        assert!(norm <= nor + 1e-14);
    }
}

#[test]
fn unstable_configuration_is_refused() {
    let sg = SpaceGrid::new(1.0, 1.0, 31, 31).unwrap();
    let vg = VelocityGrid::new(2.0, 2.0, 2, 2, 2, 2).unwrap();
    let o = SchemeOperator::new(sg, vg, TimeGrid::new(1.0, 10).unwrap(), 0.0).unwrap();
    let f = DensityField::zeros(&sg, &vg);
    assert!(matches!(
        richardson_solve(&o, &f, &SolverSettings::default()),
        Err(Error::Stability { .. })
    ));
    assert!(matches!(
        TimeStepper::new(o, 1.0, &ZeroBoundary, SolverSettings::default()),
        Err(Error::Stability { .. })
    ));
}

#[test]
fn fixed_relaxation_is_used() {
    let o = op(4, 4, 0.02, 0.0);
    let f = random_field(o.space(), o.velocity(), &mut rng(1), 0.0, 1.0);
    let auto = richardson_solve(&o, &f, &SolverSettings::default()).unwrap();
    let slow = SolverSettings {
        relaxation: Relaxation::Fixed(0.5),
        ..SolverSettings::default()
    };
    let fixed = richardson_solve(&o, &f, &slow).unwrap();
    assert!(fixed.iterations > auto.iterations);
    assert!(fixed.x.max_abs_diff(&auto.x) < 1e-9);
}

fn ramp_boundary(side: Side, n: usize, j: usize, l: VelIndex) -> f64 {
    let inward = match side {
        Side::Left => l.l1 > 0,
        Side::Right => l.l1 < 0,
        Side::Bottom => l.l2 > 0,
        Side::Top => l.l2 < 0,
    };
    if inward {
        0.1 * (n as f64 + 1.0) * (1.0 + j as f64).ln()
    } else {
        0.0
    }
}

#[test]
fn step_result_is_a_fixed_point_of_the_discrete_equation() {
    let o = op(7, 7, 0.02, 0.01);
    let bd = ramp_boundary;
    let stepper = TimeStepper::new(o, 2.0, &bd, tight()).unwrap();
    let u0 = random_field(
        stepper.operator().space(),
        stepper.operator().velocity(),
        &mut rng(2),
        0.0,
        1.0,
    );
    let (u1, report) = stepper.step(&u0, 3).unwrap();
    assert!(report.picard_iters >= 2);
    let mut rhs = stepper.known_terms(&u0, 3).unwrap();
    rhs.axpy(0.5 * stepper.operator().tau(), &stepper.mixer_field(&u1));
    let mut r = stepper.operator().apply_a(&u1).unwrap();
    r.axpy(-1.0, &rhs);
    let tol = stepper.settings().picard_tolerance(&u0);
    assert!(r.max_abs() < 10.0 * tol, "{}", r.max_abs());
}

#[test]
fn run_equals_repeated_steps() {
    let o = op(5, 5, 0.02, 0.01);
    let bd = ramp_boundary;
    let stepper = TimeStepper::new(o, 1.5, &bd, SolverSettings::default()).unwrap();
    let u0 = DensityField::zeros(stepper.operator().space(), stepper.operator().velocity());
    let (u1, _) = stepper.step(&u0, 0).unwrap();
    let (u2, _) = stepper.step(&u1, 1).unwrap();
    let mut seen = Vec::new();
    let mut obs = |n: usize, _: &DensityField, r: Option<&StepReport>| {
        seen.push((n, r.is_some()));
        Ok(())
    };
    let out = run_simulation(&stepper, u0, 2, &mut obs).unwrap();
    assert_eq!(out.final_field, u2);
    assert_eq!(out.reports.len(), 2);
    assert_eq!(seen, vec![(0, false), (1, true), (2, true)]);
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let o = op(9, 9, 0.02, 0.005);
            let bd = ramp_boundary;
            let stepper = TimeStepper::new(o, 3.0, &bd, SolverSettings::default()).unwrap();
            let u0 = DensityField::zeros(stepper.operator().space(), stepper.operator().velocity());
            run_simulation(
                &stepper,
                u0,
                10,
                &mut |_: usize, _: &DensityField, _: Option<&StepReport>| Ok(()),
            )
            .unwrap()
            .final_field
        })
    };
    let a = run(1);
    assert_eq!(a.as_slice(), run(4).as_slice());
    assert_eq!(a.as_slice(), run(1).as_slice());
}

#[test]
fn halving_tau_does_not_increase_picard_count() {
    let bd = ramp_boundary;
    let count = |tau: f64| {
        let o = op(7, 7, tau, 0.01);
        let stepper = TimeStepper::new(o, 2.0, &bd, SolverSettings::default()).unwrap();
        let u0 = random_field(
            stepper.operator().space(),
            stepper.operator().velocity(),
            &mut rng(4),
            0.0,
            1.0,
        );
        stepper.step(&u0, 0).unwrap().1.picard_iters
    };
    assert!(count(0.01) <= count(0.02));
    assert!(count(0.005) <= count(0.01));
}

#[test]
fn picard_cap_reports_nonconvergence_with_step_number() {
    let o = op(5, 5, 0.02, 0.01);
    let bd = ramp_boundary;
    let settings = SolverSettings {
        max_picard_iters: 1,
        ..SolverSettings::default()
    };
    let stepper = TimeStepper::new(o, 4.0, &bd, settings).unwrap();
    let u0 = DensityField::zeros(stepper.operator().space(), stepper.operator().velocity());
    let err = run_simulation(
        &stepper,
        u0,
        3,
        &mut |_: usize, _: &DensityField, _: Option<&StepReport>| Ok(()),
    )
    .unwrap_err();
    match err {
        Error::Step { step, source } => {
            assert_eq!(step, 1);
            assert!(matches!(
                *source,
                Error::NonConvergence {
                    stage: "Picard",
                    ..
                }
            ));
        }
        other => panic!("{other:?}"),
    }
    let _ = BoundaryData::value(&bd, Side::Left, 0, 1, VelIndex::new(1, 0));
}
