//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::time::Instant;

use perspeed::eigen::{self, EigenOptions, EigenProblem};
use perspeed::grid::{sample, PeriodicCoefficient, PeriodicGrid};
use perspeed::habitat::{self, HabitatSpec};
use perspeed::model::{
    CompetitionConfig, CompetitionModel, HomogeneousParams, ModelConfig, SpeciesConfig,
};
use perspeed::sim::{self, Boundary, InitialCondition, Simulation, SimulationConfig};
use perspeed::speeds::{self, Family};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn eg(n: usize) -> CompetitionModel {
    CompetitionModel::homogeneous(HomogeneousParams::reference(), 1.0, n).unwrap()
}

/// Fourier coefficient with mean `a0` and at most three modes of total
/// amplitude below `spread * a0`.
fn random_fourier(rng: &mut ChaCha8Rng, a0: f64, spread: f64, even: bool) -> PeriodicCoefficient {
    let modes = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
    let total: f64 = weights.iter().map(|w: &f64| w.abs()).sum::<f64>() * if even { 1.0 } else { 2.0 };
    let scale = spread * a0.abs().max(0.2) / total.max(1e-12);
    let cos: Vec<f64> = weights.iter().map(|w| w * scale).collect();
    let sin: Vec<f64> = if even {
        Vec::new()
    } else {
        weights.iter().rev().map(|w| w * scale).collect()
    };
    PeriodicCoefficient::fourier(a0, cos, sin)
}

fn random_problem(rng: &mut ChaCha8Rng, grid: PeriodicGrid, even: bool) -> EigenProblem {
    let d = { let a0 = rng.random_range(0.5..1.5); random_fourier(rng, a0, 0.4, even) };
    let g = if even {
        PeriodicCoefficient::constant(0.0)
    } else {
        { let a0 = rng.random_range(-0.5..0.5); random_fourier(rng, a0, 1.0, false) }
    };
    let m = { let a0 = rng.random_range(-1.0..1.0); random_fourier(rng, a0, 1.5, even) };
    EigenProblem::new(
        sample(&d, &grid).unwrap(),
        sample(&g, &grid).unwrap(),
        sample(&m, &grid).unwrap(),
        0.0,
    )
    .unwrap()
}

fn criterion_1() -> Outcome {
    let model = eg(256);
    let cert = speeds::determinacy_certificate(&model).unwrap();
    let c_err = (cert.speed.c - 2f64.sqrt()).abs();
    let mu_err = (cert.speed.mu0 - 0.5f64.sqrt()).abs();
    let phi2 = cert.phi2_star.as_ref().unwrap();
    let k_err = cert
        .phi1_star
        .values()
        .iter()
        .zip(phi2.values())
        .map(|(p1, p2)| (p2 / p1 - 0.8).abs())
        .fold(0.0, f64::max);
    let pass = c_err <= 1e-6 && mu_err <= 1e-6 && cert.d1_holds && cert.d2_holds && k_err <= 1e-8;
    outcome(
        pass,
        format!(
            "c0 = {:.9} (err {c_err:.1e}), mu0 = {:.9} (err {mu_err:.1e}), D1 = {}, D2 = {}, max|phi2/phi1 - 0.8| = {k_err:.1e}",
            cert.speed.c, cert.speed.mu0, cert.d1_holds, cert.d2_holds
        ),
    )
}

fn criterion_2() -> Outcome {
    let config = SimulationConfig::default();
    let traces = sim::measure_speed_levels(&eg(20), &config, &[0.5, 0.25]).unwrap();
    let target = 2f64.sqrt();
    let rel = (traces[0].fitted_speed / target - 1.0).abs();
    let theta_gap = (traces[1].fitted_speed / traces[0].fitted_speed - 1.0).abs();
    outcome(
        rel <= 0.05 && theta_gap <= 0.02,
        format!(
            "fitted {:.6} (theta 0.5), {:.6} (theta 0.25); rel err {rel:.4}, theta gap {theta_gap:.4}",
            traces[0].fitted_speed, traces[1].fitted_speed
        ),
    )
}

fn criterion_3() -> Outcome {
    let spec = HabitatSpec::reference();
    let closed = habitat::dispersion_speed(&spec).unwrap();
    let grid = spec.grid_speed(1024).unwrap();
    let rel = (grid.c / closed.c0_plus - 1.0).abs();
    let small = HabitatSpec { l1: 0.05, l2: 0.05, ..spec };
    let small_c = habitat::dispersion_speed(&small).unwrap().c0_plus;
    let approx = habitat::small_period_speed(&small);
    let small_rel = (small_c / approx - 1.0).abs();
    outcome(
        rel <= 1e-3 && small_rel <= 0.02 && (approx - 1.224745).abs() < 1e-6,
        format!(
            "dispersion {:.9} vs grid {:.9} (rel {rel:.1e}); l = 0.1: {small_c:.6} vs {approx:.6} (rel {small_rel:.1e})",
            closed.c0_plus, grid.c
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = PeriodicGrid::new(1.0, 256).unwrap();
    let bump = sample(&PeriodicCoefficient::fourier(0.1, vec![0.1], vec![]), &grid).unwrap();
    let (mut worst_gain, mut worst_convex, mut worst_even) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let mus: Vec<f64> = (0..=16).map(|k| -2.0 + 0.25 * k as f64).collect();
    for _ in 0..10 {
        let p = random_problem(&mut rng, grid, false);
        let base = eigen::principal_eigenvalue(&p).unwrap();
        let raised = p.with_potential(p.m().zip_with(&bump, |a, b| a + b)).unwrap();
        worst_gain = worst_gain.min(eigen::principal_eigenvalue(&raised).unwrap() - base);
        let curve = speeds::LambdaCurve::new(p.clone()).sample(&mus).unwrap();
        for w in curve.windows(3) {
            worst_convex = worst_convex.min(w[0].1 - 2.0 * w[1].1 + w[2].1);
        }
        let q = random_problem(&mut rng, grid, true);
        let curve = speeds::LambdaCurve::new(q).sample(&mus).unwrap();
        for k in 0..mus.len() {
            worst_even = worst_even.max((curve[k].1 - curve[mus.len() - 1 - k].1).abs());
        }
    }
    outcome(
        worst_gain > 0.0 && worst_convex >= -1e-8 && worst_even <= 1e-8,
        format!(
            "min potential gain {worst_gain:.3e}, min second difference {worst_convex:.3e}, max |lambda(mu) - lambda(-mu)| {worst_even:.1e}"
        ),
    )
}

fn random_model(rng: &mut ChaCha8Rng) -> CompetitionModel {
    let species = |rng: &mut ChaCha8Rng| SpeciesConfig {
        d: { let a0 = rng.random_range(0.5..2.0); random_fourier(rng, a0, 0.4, false) },
        g: { let a0 = rng.random_range(-0.5..0.5); random_fourier(rng, a0, 1.0, false) },
        b: { let a0 = rng.random_range(0.3..1.5); random_fourier(rng, a0, 1.5, false) },
    };
    let positive = |rng: &mut ChaCha8Rng| { let a0 = rng.random_range(0.5..1.5); random_fourier(rng, a0, 0.5, false) };
    let config = ModelConfig {
        period: rng.random_range(0.5..3.0),
        n: 256,
        species1: species(rng),
        species2: species(rng),
        competition: CompetitionConfig {
            a11: positive(rng),
            a12: positive(rng),
            a21: positive(rng),
            a22: positive(rng),
        },
    };
    CompetitionModel::new(config).unwrap()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut models = 0;
    while models < 10 {
        let model = random_model(&mut rng);
        let h = perspeed::model::hypothesis_h1_h2(&model);
        if !h.as_ref().is_ok_and(|h| h.h1) {
            continue;
        }
        models += 1;
        let curve = speeds::LambdaCurve::of(&model, Family::Lambda2).unwrap();
        worst = worst.max(curve.eval(0.0).unwrap().abs());
    }
    outcome(worst <= 5e-7, format!("max |lambda(d2, g2, b2 - a22 u2*)| over 10 models = {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let grid = PeriodicGrid::new(1.0, 1024).unwrap();
    let a = sample(&PeriodicCoefficient::fourier(1.0, vec![], vec![0.5]), &grid).unwrap();
    let zero = sample(&PeriodicCoefficient::constant(0.0), &grid).unwrap();
    let lam = |d: f64| {
        let p = EigenProblem::new(sample(&PeriodicCoefficient::constant(d), &grid).unwrap(), zero.clone(), a.clone(), 0.0)
            .unwrap();
        eigen::principal_eigenvalue(&p).unwrap()
    };
    let (l1, l2) = (lam(1.0), lam(2.0));
    outcome(
        l1 - 1.0 > 1e-4 && l1 > l2,
        format!("lambda(1, 0, a) = {l1:.9} (margin {:.3e}), lambda(2, 0, a) = {l2:.9}", l1 - 1.0),
    )
}

fn attractivity(model: &CompetitionModel) -> sim::AttractivityRun {
    let u1: Vec<f64> = model.u1_star().unwrap().values().iter().map(|v| 0.1 * v).collect();
    let u2: Vec<f64> = model.u2_star().unwrap().values().iter().map(|v| 0.9 * v).collect();
    sim::run_periodic_ivp(model, &u1, &u2, 200.0, None, 0.5).unwrap()
}

fn criterion_7() -> Outcome {
    let runs = [
        ("homogeneous", attractivity(&eg(20))),
        ("habitat", attractivity(&HabitatSpec::reference().model(20).unwrap())),
    ];
    let pass = runs.iter().all(|(_, r)| r.reached_at.is_some());
    let detail = runs
        .iter()
        .map(|(name, r)| match r.reached_at {
            Some(t) => format!("{name}: below 1e-3 at t = {t}"),
            None => format!("{name}: distance at t = 200 is {:.3e}", r.final_distance),
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn criterion_8() -> Outcome {
    let model = HabitatSpec::reference().model(20).unwrap();
    let config = SimulationConfig {
        domain: (-20.0, 430.0),
        t_final: 330.0,
        boundary: Boundary::RelativeReflecting,
        ..Default::default()
    };
    let speed = sim::measure_speed(&model, &config).unwrap().fitted_speed;
    let profile = sim::extract_profile(&model, &config, speed).unwrap();
    let d = &profile.diagnostics;
    outcome(
        d.u1_nonincreasing && d.u2_nondecreasing && d.left_edge_error <= 1e-2 && d.right_edge_error <= 1e-2,
        format!(
            "speed {speed:.5}; u1 increase {:.1e}, u2 decrease {:.1e}; edge errors {:.2e} (left), {:.2e} (right); registration {:.1e}",
            d.u1_increase, d.u2_decrease, d.left_edge_error, d.right_edge_error, d.registration_residual
        ),
    )
}

/// Principal eigenvalue of a cyclic tridiagonal Z-matrix: `s > lambda` iff
/// `s I - A` has only positive pivots in unpivoted elimination.
fn pivot_bisection(a: &perspeed::banded::Tridiagonal) -> f64 {
    let n = a.len();
    let dense = a.to_dense_cyclic();
    let row_max = dense
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let above = |s: f64| {
        let mut m: Vec<Vec<f64>> = dense
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().enumerate().map(|(j, &v)| if i == j { s - v } else { -v }).collect())
            .collect();
        for k in 0..n {
            let piv = m[k][k];
            if !(piv > 0.0) {
                return false;
            }
            let cols: Vec<usize> = (k + 1..n).filter(|&j| m[k][j] != 0.0).collect();
            for i in k + 1..n {
                let f = m[i][k];
                if f == 0.0 {
                    continue;
                }
                let f = f / piv;
                for &j in &cols {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        true
    };
    let (mut lo, mut hi) = (-row_max, row_max);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let base = random_problem(&mut rng, PeriodicGrid::new(1.0, 256).unwrap(), false);
        let (d, g, m) = (base.d().clone(), base.g().clone(), base.m().clone());
        let coeffs = [d, g, m].map(|f| PeriodicCoefficient::samples(f.values().to_vec()));
        let mu = rng.random_range(-1.0..1.0);
        let (mut oracle, mut ours) = (Vec::new(), Vec::new());
        for n in [256usize, 512, 1024] {
            // Refined grids interpolate the 256-point samples, so every level
            // discretizes the same piecewise-linear coefficients.
            let grid = PeriodicGrid::new(1.0, n).unwrap();
            let [d, g, m] = coeffs.clone().map(|c| sample(&c, &grid).unwrap());
            let p = EigenProblem::new(d, g, m, mu).unwrap();
            oracle.push(pivot_bisection(&eigen::discretize(&p).unwrap()));
            ours.push(eigen::principal_eigenpair_with(&p, &EigenOptions::with_tol(1e-12)).unwrap().lambda);
        }
        let rich = |v: &[f64]| {
            let r1 = (4.0 * v[1] - v[0]) / 3.0;
            let r2 = (4.0 * v[2] - v[1]) / 3.0;
            (16.0 * r2 - r1) / 15.0
        };
        let ours_rich = (4.0 * ours[2] - ours[1]) / 3.0;
        worst = worst.max((ours_rich - rich(&oracle)).abs());
    }

    let n = SimulationConfig {
        domain: (-2.0, 3.0),
        ..Default::default()
    }
    .node_count();
    let config = SimulationConfig {
        domain: (-2.0, 3.0),
        dt: Some(2.5e-4),
        initial: InitialCondition::Custom {
            u1: vec![0.2; n],
            u2: vec![0.3; n],
        },
        ..Default::default()
    };
    let mut run = Simulation::new(&eg(20), &config).unwrap();
    let f = |u: (f64, f64)| (u.0 * (1.0 - u.0 - 0.5 * u.1), u.1 * (1.0 - u.0 - u.1));
    let mut ode = (0.2f64, 0.3f64);
    let h = 1e-5;
    let mut uniform: f64 = 0.0;
    for k in 1..=10 {
        for _ in 0..100_000 {
            let k1 = f(ode);
            let k2 = f((ode.0 + 0.5 * h * k1.0, ode.1 + 0.5 * h * k1.1));
            let k3 = f((ode.0 + 0.5 * h * k2.0, ode.1 + 0.5 * h * k2.1));
            let k4 = f((ode.0 + h * k3.0, ode.1 + h * k3.1));
            ode.0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            ode.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        run.advance_to(k as f64).unwrap();
        let (u1, u2) = run.state();
        for i in 0..n {
            uniform = uniform.max((u1[i] - ode.0).abs()).max((u2[i] - ode.1).abs());
        }
    }
    outcome(
        worst <= 1e-6 && uniform <= 1e-10,
        format!("max eigenvalue gap to extrapolated oracle {worst:.2e}; uniform-state gap to RK4 {uniform:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("homogeneous linear determinacy", criterion_1),
        ("simulated front speed", criterion_2),
        ("dispersion pipeline", criterion_3),
        ("eigenvalue property suite", criterion_4),
        ("steady-state identity", criterion_5),
        ("variational lower bound", criterion_6),
        ("global attractivity", criterion_7),
        ("pulsating profile structure", criterion_8),
        ("oracle equivalence", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{verdict}] {name}: {} ({:.1} s)",
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
