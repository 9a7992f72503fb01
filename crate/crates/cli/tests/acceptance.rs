//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kinetic_cli::{parse_config, run, Config};
use kinetic_core::euler::{euler_density, full_grid_moments, mass_budget};
use kinetic_core::manufactured::{ManufacturedSolution, WaveParams};
use kinetic_core::mixer::{mixer_integral, mixer_kernel, r, MixerInput};
use kinetic_core::scenario::{collision_boundary, empty_initial, CollisionParams};
use kinetic_core::solver::{nor_bound, optimal_s, richardson_solve, richardson_solve_with};
use kinetic_core::{
    DensityField, QuadratureWeights, SchemeOperator, SolverSettings, SpaceGrid, TimeGrid,
    TimeStepper, VectorField, VelIndex, VelocityGrid, ZeroBoundary,
};
use kinetic_testkit::{
    dense_lhs, dense_rhs, dense_solve, from_vector, inf_norm_of_iteration_matrix, observed_order,
    random_field, rng, row_bound_formula, to_vector,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn mixer_identities() -> Outcome {
    let start = Instant::now();
    let vg = VelocityGrid::new(0.5, 0.5, 2, 2, 2, 2).unwrap();
    let w = QuadratureWeights::trapezoid(&vg);
    let norms: Vec<f64> = (0..vg.len())
        .map(|i| {
            let (a1, a2) = vg.alpha_flat(i);
            a1.hypot(a2)
        })
        .collect();
    let mut g = rng(1001);
    let mut antisym_failures = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut integral_failures = 0;
    for _ in 0..1000 {
        let slice: Vec<f64> = (0..vg.len()).map(|_| g.gen_range(-1.0..10.0)).collect();
        for a in 0..vg.len() {
            for b in 0..vg.len() {
                let m = mixer_kernel(MixerInput {
                    rho_alpha: slice[a],
                    rho_beta: slice[b],
                    norm_alpha: norms[a],
                    norm_beta: norms[b],
                });
                let s = mixer_kernel(MixerInput {
                    rho_alpha: slice[b],
                    rho_beta: slice[a],
                    norm_alpha: norms[b],
                    norm_beta: norms[a],
                });
                if m != -s {
                    antisym_failures += 1;
                }
            }
        }
        let f = mixer_integral(&slice, &vg, &w, g.gen_range(0.1..5.0)).unwrap();
        let total = f.weighted_sum(&w).abs();
        let scale: f64 = f
            .values
            .iter()
            .zip(w.as_slice())
            .map(|(v, w)| w * v.abs())
            .sum();
        if total > 1e-12 * scale {
            integral_failures += 1;
        }
        if scale > 0.0 {
            worst_ratio = worst_ratio.max(total / scale);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        antisym_failures == 0 && integral_failures == 0 && within(elapsed, 1.0),
        format!(
            "antisymmetry failures {antisym_failures}, integral failures {integral_failures}, \
             worst |sum w F| / sum w|F| = {worst_ratio:.2e}, {elapsed:.2?}"
        ),
    )
}

fn r_lipschitz() -> Outcome {
    let start = Instant::now();
    let mut g = rng(1002);
    let mut failures = 0;
    for i in 0..1_000_000 {
        let d = sample(&mut g);
        let e = if i % 2 == 0 {
            sample(&mut g)
        } else {
            d + g.gen_range(-1e-3..1e-3) * d.abs().max(1e-12)
        };
        if (r(d) - r(e)).abs() > (d - e).abs() || r(d).abs() >= 1.0 || r(e).abs() >= 1.0 {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && within(elapsed, 1.0),
        format!("{failures} failures in 10^6 pairs, {elapsed:.2?}"),
    )
}

fn sample(g: &mut impl Rng) -> f64 {
    let mag = 10f64.powf(g.gen_range(-8.0..8.0));
    if g.gen_bool(0.5) {
        mag
    } else {
        -mag
    }
}

fn dense_oracle() -> Outcome {
    let start = Instant::now();
    let mut g = rng(1003);
    let mut worst_apply: f64 = 0.0;
    let mut worst_solve: f64 = 0.0;
    let settings = SolverSettings {
        tol_linear: 1e-10,
        ..SolverSettings::default()
    };
    for m1 in 1..=4 {
        for m2 in 1..=4 {
            for (mr, pr) in [(1, 1), (0, 2)] {
                let sg = SpaceGrid::new(1.0, 1.2, m1, m2).unwrap();
                let vg = VelocityGrid::new(0.5, 0.4, mr, pr, pr, mr).unwrap();
                let (tau, nu) = (0.04, 0.03);
                let op = SchemeOperator::new(sg, vg, TimeGrid::new(tau * 10.0, 10).unwrap(), nu)
                    .unwrap();
                let a = dense_lhs(&sg, &vg, tau, nu);
                let b = dense_rhs(&sg, &vg, tau, nu);
                let u = random_field(&sg, &vg, &mut g, -1.0, 1.0);
                let x = to_vector(&u);
                worst_apply = worst_apply
                    .max(
                        op.apply_a(&u)
                            .unwrap()
                            .max_abs_diff(&from_vector(&(&a * &x), &sg, &vg)),
                    )
                    .max(
                        op.apply_b(&u)
                            .unwrap()
                            .max_abs_diff(&from_vector(&(&b * &x), &sg, &vg)),
                    );
                let sol = richardson_solve(&op, &u, &settings).unwrap();
                let exact = from_vector(&dense_solve(&a, &x), &sg, &vg);
                worst_solve = worst_solve.max(sol.x.max_abs_diff(&exact));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst_apply <= 1e-14 && worst_solve <= 1e-8 && within(elapsed, 10.0),
        format!("apply error {worst_apply:.2e}, solve error {worst_solve:.2e}, {elapsed:.2?}"),
    )
}

fn richardson_contraction() -> Outcome {
    let mut g = rng(1004);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_formula: f64 = 0.0;
    let mut worst_nor: f64 = 0.0;
    for (m, tau, nu) in [
        (4, 0.05, 0.0),
        (5, 0.03, 0.02),
        (6, 0.02, 0.2),
        (3, 0.08, 0.01),
    ] {
        let sg = SpaceGrid::new(1.0, 1.0, m, m).unwrap();
        let vg = VelocityGrid::new(0.5, 0.5, 1, 1, 1, 1).unwrap();
        let op = SchemeOperator::new(sg, vg, TimeGrid::new(tau * 10.0, 10).unwrap(), nu).unwrap();
        let nor = nor_bound(op.coefficients(), &vg).nor;
        worst_nor = worst_nor.max(nor);
        let exact = random_field(&sg, &vg, &mut g, -1.0, 1.0);
        let f = op.apply_a(&exact).unwrap();
        let settings = SolverSettings {
            tol_linear: 1e-15,
            max_linear_iters: 40,
            ..SolverSettings::default()
        };
        let mut errors = Vec::new();
        let _ = richardson_solve_with(&op, &f, &settings, |_, x| {
            errors.push(x.max_abs_diff(&exact))
        });
        for pair in errors.windows(2) {
            if pair[0] > 1e-12 {
                worst_excess = worst_excess.max(pair[1] / pair[0] - nor);
            }
        }
        let a = dense_lhs(&sg, &vg, tau, nu);
        let s = optimal_s(&op.coefficients()[0]);
        worst_formula = worst_formula
            .max((inf_norm_of_iteration_matrix(&a, s) - row_bound_formula(&a, s)).abs());
    }
    outcome(
        worst_excess <= 1e-12 && worst_formula <= 1e-14,
        format!(
            "max(ratio - NOR) = {worst_excess:.2e} (NOR up to {worst_nor:.3}), \
             |entrywise norm - formula| = {worst_formula:.2e}"
        ),
    )
}

fn nonlinear_fixed_point() -> Outcome {
    let start = Instant::now();
    let sg = SpaceGrid::new(1.0, 1.0, 8, 8).unwrap();
    let vg = VelocityGrid::new(0.5, 0.5, 1, 1, 1, 1).unwrap();
    let op = SchemeOperator::new(sg, vg, TimeGrid::new(0.6, 30).unwrap(), 0.01).unwrap();
    let bd = collision_boundary(CollisionParams::new(&vg, 0.1, 1.0), &sg, &vg).unwrap();
    let settings = SolverSettings::default();
    let stepper = TimeStepper::new(op, 2.0, &bd, settings).unwrap();
    let mut u = empty_initial(&sg, &vg);
    let mut worst_ratio: f64 = 0.0;
    let mut max_picard = 0;
    for n in 0..30 {
        let (next, report) = stepper.step(&u, n).unwrap();
        max_picard = max_picard.max(report.picard_iters);
        let mut rhs = stepper.known_terms(&u, n).unwrap();
        rhs.axpy(0.5 * stepper.operator().tau(), &stepper.mixer_field(&next));
        let mut res = stepper.operator().apply_a(&next).unwrap();
        res.axpy(-1.0, &rhs);
        let bound = 10.0 * (settings.picard_tolerance(&u) + settings.tol_linear);
        worst_ratio = worst_ratio.max(res.max_abs() / bound);
        u = next;
    }
    let elapsed = start.elapsed();
    outcome(
        worst_ratio <= 1.0 && within(elapsed, 30.0),
        format!(
            "max residual / 10(tol_picard + tol_linear) = {worst_ratio:.2e} over 30 steps \
             (Picard up to {max_picard}), {elapsed:.2?}"
        ),
    )
}

struct Refinement {
    errors: Vec<f64>,
    budgets: Vec<f64>,
}

/// Runs the manufactured solution on `M + 1 = 8, 16, 32` intervals with
/// `tau` halved alongside `h`.
fn manufactured_levels(kappa: f64) -> Refinement {
    let vg = VelocityGrid::new(0.5, 0.5, 1, 1, 1, 1).unwrap();
    let w = QuadratureWeights::trapezoid(&vg);
    let nu = 0.05;
    let settings = SolverSettings {
        tol_linear: 1e-13,
        max_linear_iters: 2000,
        tol_picard: 1e-12,
        picard_relative: false,
        max_picard_iters: 100,
        ..SolverSettings::default()
    };
    let mut errors = Vec::new();
    let mut budgets = Vec::new();
    for level in 0..3 {
        let m = (8 << level) - 1;
        let steps = 8 << level;
        let sg = SpaceGrid::new(1.0, 1.0, m, m).unwrap();
        let time = TimeGrid::new(0.4, steps).unwrap();
        let op = SchemeOperator::new(sg, vg, time, nu).unwrap();
        let exact =
            ManufacturedSolution::new(WaveParams::default(), sg, vg, time, nu, kappa).unwrap();
        let stepper = TimeStepper::new(op, kappa, &exact, settings)
            .unwrap()
            .with_source(&exact);
        let mut u = exact.exact_field(0);
        let weight = if kappa == 0.0 { 1.0 } else { kappa };
        let mut prev = full_grid_moments(&u, &exact, 0, &vg, &w, weight).unwrap();
        let mut worst_budget: f64 = 0.0;
        for n in 0..steps {
            u = stepper.step(&u, n).unwrap().0;
            let next = full_grid_moments(&u, &exact, n + 1, &vg, &w, weight).unwrap();
            let (n1, n2) = next.1.dims();
            let p_mid = VectorField::from_fn(n1, n2, |i, j| {
                let (a, b) = (prev.1.get(i, j), next.1.get(i, j));
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            });
            let b = mass_budget(&prev.0, &next.0, &p_mid, &sg, nu, time.tau()).unwrap();
            worst_budget = worst_budget.max(b.residual.abs());
            prev = next;
        }
        errors.push(exact.max_error(&u, steps));
        budgets.push(worst_budget);
    }
    Refinement { errors, budgets }
}

fn orders(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .map(|p| observed_order(p[0], p[1]))
        .collect()
}

fn order_of_accuracy(levels: &[(f64, Refinement)], elapsed: Duration) -> Outcome {
    let mut pass = within(elapsed, 120.0);
    let mut parts = Vec::new();
    for (kappa, r) in levels {
        let o = orders(&r.errors);
        pass &= o.iter().all(|&p| p >= 1.8);
        parts.push(format!(
            "kappa={kappa}: errors {:.2e}/{:.2e}/{:.2e}, orders {:.2}/{:.2}",
            r.errors[0], r.errors[1], r.errors[2], o[0], o[1]
        ));
    }
    parts.push(format!("{elapsed:.2?}"));
    outcome(pass, parts.join("; "))
}

fn mass_budget_check(levels: &[(f64, Refinement)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (kappa, r) in levels {
        let o = orders(&r.budgets);
        pass &= o.iter().all(|&p| p >= 1.0);
        parts.push(format!(
            "kappa={kappa}: residuals {:.2e}/{:.2e}/{:.2e}, orders {:.2}/{:.2}",
            r.budgets[0], r.budgets[1], r.budgets[2], o[0], o[1]
        ));
    }
    // zero scenario: exactly zero in every step
    let sg = SpaceGrid::new(1.0, 1.0, 9, 9).unwrap();
    let vg = VelocityGrid::new(0.5, 0.5, 2, 2, 2, 2).unwrap();
    let w = QuadratureWeights::trapezoid(&vg);
    let op = SchemeOperator::new(sg, vg, TimeGrid::new(0.1, 10).unwrap(), 0.01).unwrap();
    let stepper = TimeStepper::new(op, 3.0, &ZeroBoundary, SolverSettings::default()).unwrap();
    let mut u = DensityField::zeros(&sg, &vg);
    let mut zero_max: f64 = 0.0;
    let mut prev = full_grid_moments(&u, &ZeroBoundary, 0, &vg, &w, 3.0).unwrap();
    for n in 0..10 {
        u = stepper.step(&u, n).unwrap().0;
        let next = full_grid_moments(&u, &ZeroBoundary, n + 1, &vg, &w, 3.0).unwrap();
        let b = mass_budget(&prev.0, &next.0, &next.1, &sg, 0.01, 0.01).unwrap();
        zero_max = zero_max.max(b.residual.abs()).max(b.mass.abs());
        prev = next;
    }
    pass &= zero_max == 0.0;
    parts.push(format!("zero scenario max |residual| = {zero_max:e}"));
    outcome(pass, parts.join("; "))
}

const COLLISION: &str = "\
L1 = 1
L2 = 1
M1 = 31
M2 = 31
ah1 = 0.5
ah2 = 0.5
MR1 = 2
PR1 = 2
MR2 = 2
PR2 = 2
T = 3
N = 300
nu = 0.002
kappa = 5
scenario = collision
ramp_rate = 0.02
base_height = 0
eps_div = 1e-3
snapshots = 100,200,final
";

/// `(k1, k2, l)` mapped through symmetry `t` of the square (bit 0: flip x1,
/// bit 1: flip x2, bit 2: transpose).
fn transform(t: usize, m: usize, k1: usize, k2: usize, l: VelIndex) -> (usize, usize, VelIndex) {
    let (k1, k2, l1, l2) = if t & 4 != 0 {
        (k2, k1, l.l2, l.l1)
    } else {
        (k1, k2, l.l1, l.l2)
    };
    let (k1, l1) = if t & 1 != 0 {
        (m - 1 - k1, -l1)
    } else {
        (k1, l1)
    };
    let (k2, l2) = if t & 2 != 0 {
        (m - 1 - k2, -l2)
    } else {
        (k2, l2)
    };
    (k1, k2, VelIndex::new(l1, l2))
}

fn collision(cfg: &Config, dir: &std::path::Path) -> Vec<Outcome> {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    cfg.output = dir.to_path_buf();
    let summary = match run(&cfg, &mut std::io::sink()) {
        Ok(s) => s,
        Err(e) => {
            let fail = || outcome(false, format!("run failed: {e}"));
            return vec![fail(), fail(), fail(), fail()];
        }
    };
    let elapsed = start.elapsed();
    let recs = &summary.records;

    // (a) empty centre, then positive for good
    let first_positive = recs.iter().position(|r| r.center_rho > 1e-12);
    let a = match first_positive {
        Some(k) if k > 1 => {
            let stays = recs[k..].iter().all(|r| r.center_rho > 0.0);
            outcome(
                stays && within(elapsed, 300.0),
                format!(
                    "centre density <= 1e-12 for steps 0..{}, positive from step {k} on: {stays} \
                     (final {:.3e}), run {elapsed:.2?}",
                    k - 1,
                    recs.last().unwrap().center_rho
                ),
            )
        }
        other => outcome(
            false,
            format!("no initial empty phase (first positive step {other:?})"),
        ),
    };

    // (b) mass never decreases
    let drops = recs.windows(2).filter(|p| p[1].mass < p[0].mass).count();
    let b = outcome(
        drops == 0,
        format!(
            "{drops} decreasing steps; mass {:.3e} -> {:.3e}",
            recs[0].mass,
            recs.last().unwrap().mass
        ),
    );

    // (c) dihedral symmetry of the final density and its Euler density
    let sg = cfg.space();
    let vg = cfg.velocity();
    let m = sg.m1();
    let u = &summary.final_field;
    let rho = euler_density(u, &QuadratureWeights::trapezoid(&vg), cfg.kappa).unwrap();
    let mut rel: f64 = 0.0;
    for t in 1..8 {
        for lf in 0..vg.len() {
            let l = vg.index(lf);
            for k2 in 0..m {
                for k1 in 0..m {
                    let (j1, j2, lt) = transform(t, m, k1, k2, l);
                    let diff = (u.get(k1, k2, lf) - u.get(j1, j2, vg.flat(lt).unwrap())).abs();
                    rel = rel.max(diff / u.max_abs());
                }
            }
        }
        for k2 in 0..m {
            for k1 in 0..m {
                let (j1, j2, _) = transform(t, m, k1, k2, VelIndex::new(0, 0));
                rel = rel.max((rho.get(k1, k2) - rho.get(j1, j2)).abs() / rho.max_abs());
            }
        }
    }
    let c = outcome(
        rel <= 1e-6,
        format!("max relative asymmetry {rel:.2e} over 8 symmetries"),
    );

    // (d) vorticity quiet before the streams meet, eddies afterwards
    let early_end = first_positive.unwrap_or(recs.len());
    let early = recs[..early_end]
        .iter()
        .map(|r| r.max_vorticity)
        .fold(0.0, f64::max);
    let (late, late_step) = recs[early_end..]
        .iter()
        .map(|r| (r.max_vorticity, r.step))
        .fold((0.0, 0), |acc, v| if v.0 > acc.0 { v } else { acc });
    let d = outcome(
        late >= 10.0 * early && late >= 0.1,
        format!(
            "max |vorticity| {early:.2e} before step {early_end}, {late:.2e} later (step {late_step}), ratio {:.1}",
            late / early.max(f64::MIN_POSITIVE)
        ),
    );
    vec![a, b, c, d]
}

fn determinism(dir: &std::path::Path) -> Outcome {
    let mut cfg = parse_config(
        &COLLISION
            .replace("M1 = 31", "M1 = 15")
            .replace("M2 = 31", "M2 = 15"),
    )
    .unwrap();
    cfg.steps = 60;
    cfg.t_final = 0.6;
    cfg.snapshots = vec![0, 20, 40, 60];
    let mut outputs = Vec::new();
    for (i, threads) in [1, 2, 4, 0].into_iter().enumerate() {
        cfg.threads = threads;
        cfg.output = dir.join(format!("t{i}"));
        if let Err(e) = run(&cfg, &mut std::io::sink()) {
            return outcome(false, format!("run failed: {e}"));
        }
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&cfg.output)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    let csvs = outputs[0]
        .iter()
        .filter(|(n, _)| n.ends_with(".csv"))
        .count();
    let same = outputs.iter().all(|o| *o == outputs[0]);
    outcome(
        same && csvs > 10,
        format!("{csvs} CSV files byte-identical across 1, 2, 4 and all threads: {same}"),
    )
}

fn main() -> ExitCode {
    let tmp = std::env::temp_dir().join(format!("kinetic-acceptance-{}", std::process::id()));
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 mixer identities", mixer_identities()),
        ("2 r Lipschitz and bounded", r_lipschitz()),
        ("3 dense-oracle equivalence", dense_oracle()),
        ("4 Richardson contraction", richardson_contraction()),
        ("5 nonlinear fixed point", nonlinear_fixed_point()),
    ];
    let start = Instant::now();
    let levels = vec![
        (0.0, manufactured_levels(0.0)),
        (1.5, manufactured_levels(1.5)),
    ];
    results.push((
        "6 order of accuracy",
        order_of_accuracy(&levels, start.elapsed()),
    ));
    results.push(("7 mass budget", mass_budget_check(&levels)));
    let cfg = parse_config(COLLISION).unwrap();
    let names = [
        "8a streams meet in the centre",
        "8b mass nondecreasing",
        "8c square symmetry",
        "8d vorticity rises",
    ];
    for (name, o) in names
        .into_iter()
        .zip(collision(&cfg, &tmp.join("collision")))
    {
        results.push((name, o));
    }
    results.push(("9 determinism", determinism(&tmp.join("determinism"))));
    let _ = fs::remove_dir_all(&tmp);

    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
