//! Acceptance suite: every release criterion as one test with a printed
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

mod common;

use std::time::Instant;

use common::{
    race_density, random_model, rng, shared_shock_posterior, unconditional_markov_survival,
    uniform_in, ModelShape,
};
use phasemix::distributions::{
    competing_risk_bi, cross_moment_bi, density_joint_bi, density_joint_multi, density_uni,
    laplace_joint_bi, laplace_uni, moment_uni, singular_cdf_bi, survival_joint, survival_uni,
    Branch, Conditioning, TimeGrid,
};
use phasemix::model::{exponential_mixture, marshall_olkin_mixture, MixtureModel};
use phasemix::observation::{
    belief_state, state_update, switching_update, BeliefState, Information,
};
use phasemix::simulate::{
    empirical_competing_risks, empirical_joint_survival, empirical_singular_mass, SimConfig,
};

fn criterion(number: u32, name: &str, started: Instant, budget_s: f64, worst: f64, tol: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    let ok = worst <= tol && elapsed < budget_s;
    println!(
        "[acceptance] criterion {number} ({name}): {} (worst {worst:.3e} vs tol {tol:.1e}, {elapsed:.2}s)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        worst <= tol,
        "criterion {number} ({name}): worst deviation {worst:.6e} exceeds {tol:.1e}"
    );
    assert!(
        elapsed < budget_s,
        "criterion {number} ({name}): runtime {elapsed:.2}s exceeds {budget_s}s"
    );
}

/// Criterion 1: With both regimes equal, the joint survival at time zero reduces to the
/// unconditional multivariate phase-type form, evaluated independently.
#[test]
fn criterion_1_markov_reduction() {
    let started = Instant::now();
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let shape = ModelShape {
            exit_sets: 1 + trial % 3,
            max_transient: 6,
            max_rate: 2.0,
            direct_absorption: true,
        };
        let mut model = random_model(&mut rng, &shape);
        model.generators.b = model.generators.a.clone();
        let belief = BeliefState::initial(&model);
        for _ in 0..50 {
            let times: Vec<f64> = (0..shape.exit_sets)
                .map(|_| uniform_in(&mut rng, 0.0, 2.5))
                .collect();
            let grid = TimeGrid::new(0.0, times.clone()).unwrap();
            let engine = survival_joint(&model, &belief, Conditioning::NoExit, &grid).unwrap();
            let direct = unconditional_markov_survival(&model, &times);
            worst = worst.max((engine - direct).abs());
        }
    }
    criterion(1, "markov-reduction", started, 5.0, worst, 1e-12);
}

/// Criterion 2: The generic engine reproduces the closed-form exponential-race density
/// on a grid, with an exactly zero singular branch.
#[test]
fn criterion_2_race_oracle() {
    let started = Instant::now();
    let mut rng = rng(202);
    let mut worst = 0.0f64;
    // rates on a dyadic lattice so closed-set row sums are exact in floating
    // point and the singular branch must vanish exactly
    let dyadic = |rng: &mut _, lo: f64, hi: f64| {
        let steps = ((hi - lo) * 64.0) as u64;
        lo + (rand_chacha::rand_core::RngCore::next_u64(rng) % (steps + 1)) as f64 / 64.0
    };
    for _ in 0..5 {
        let p = dyadic(&mut rng, 0.125, 0.875);
        let a = [dyadic(&mut rng, 0.5, 2.0), dyadic(&mut rng, 0.5, 2.0)];
        let b = [dyadic(&mut rng, 2.0, 4.0), dyadic(&mut rng, 2.0, 4.0)];
        let model = exponential_mixture(a, b, [p, p, p]).unwrap();
        let belief = BeliefState::initial(&model);
        for i in 0..20 {
            for j in 0..20 {
                let (t1, t2) = (i as f64 * 0.1, j as f64 * 0.1);
                let eval =
                    density_joint_bi(&model, &belief, Conditioning::AtState(0), t1, t2).unwrap();
                if t1 == t2 {
                    assert_eq!(eval.branch, Branch::Singular);
                    assert_eq!(eval.value, 0.0, "singular branch must be identically zero");
                } else {
                    worst = worst.max((eval.value - race_density(p, a, b, t1, t2)).abs());
                }
            }
        }
    }
    criterion(2, "race-oracle", started, 1.0, worst, 1e-10);
}

/// Criterion 3: All three branches of the shared-shock example match their closed
/// forms, including the posterior switching probability, at t > 0.
#[test]
fn criterion_3_shared_shock_oracle() {
    let started = Instant::now();
    let p = 0.35;
    let a = [1.0, 2.0, 0.5];
    let b = [2.5, 1.5, 1.0];
    let model = marshall_olkin_mixture(a, b, [p, p, p]).unwrap();
    let a_total: f64 = a.iter().sum();
    let b_total: f64 = b.iter().sum();
    let mut worst = 0.0f64;
    for &t in &[0.0, 0.3, 0.8] {
        let belief = belief_state(&model, &Information::NoInfoKnownStart { t, start: 0 }).unwrap();
        let s1 = shared_shock_posterior(p, a_total, b_total, t);
        worst = worst.max((belief.switching[0].unwrap() - s1).abs());

        let branch1 = |r: [f64; 3], t1: f64, t2: f64| {
            r[1] * (r[0] + r[2])
                * (-r[0] * (t1 - t)).exp()
                * (-r[1] * (t2 - t)).exp()
                * (-r[2] * (t1 - t)).exp()
        };
        let branch2 = |r: [f64; 3], t1: f64, t2: f64| {
            r[0] * (r[1] + r[2])
                * (-r[0] * (t1 - t)).exp()
                * (-r[1] * (t2 - t)).exp()
                * (-r[2] * (t2 - t)).exp()
        };
        let diagonal = |r: [f64; 3], u: f64| r[2] * (-(r[0] + r[1] + r[2]) * (u - t)).exp();
        for i in 0..8 {
            for j in 0..8 {
                let (t1, t2) = (t + i as f64 * 0.17, t + j as f64 * 0.17);
                let eval =
                    density_joint_bi(&model, &belief, Conditioning::AtState(0), t1, t2).unwrap();
                let want = if t1 == t2 {
                    assert_eq!(eval.branch, Branch::Singular);
                    s1 * diagonal(b, t1) + (1.0 - s1) * diagonal(a, t1)
                } else if t1 > t2 {
                    s1 * branch1(b, t1, t2) + (1.0 - s1) * branch1(a, t1, t2)
                } else {
                    s1 * branch2(b, t1, t2) + (1.0 - s1) * branch2(a, t1, t2)
                };
                worst = worst.max((eval.value - want).abs());
            }
        }
    }
    criterion(3, "shared-shock-oracle", started, 1.0, worst, 1e-10);
}

/// Criterion 4: Both absolutely continuous components plus the diagonal mass integrate
/// to one, by adaptive quadrature, on random bivariate models.
#[test]
fn criterion_4_normalization() {
    let started = Instant::now();
    let mut rng = rng(404);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let shape = ModelShape {
            exit_sets: 2,
            max_transient: 5,
            max_rate: 2.0,
            direct_absorption: true,
        };
        let model = random_model(&mut rng, &shape);
        let belief = BeliefState::initial(&model);
        let total =
            phasemix::cli::bivariate_normalization(&model, &belief, Conditioning::NoExit).unwrap();
        worst = worst.max((total - 1.0).abs());
    }
    criterion(4, "normalization", started, 30.0, worst, 1e-6);
}

/// Criterion 5: Survival-only conditioning equals the state-distribution-weighted
/// mixture of the per-state quantities, at t > 0, across every quantity.
#[test]
fn criterion_5_mixture_relation() {
    let started = Instant::now();
    let mut rng = rng(505);
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let shape = ModelShape {
            exit_sets: 2,
            max_transient: 5,
            max_rate: 2.0,
            direct_absorption: true,
        };
        let model = random_model(&mut rng, &shape);
        let t = uniform_in(&mut rng, 0.2, 0.8);
        let belief = belief_state(&model, &Information::NoInfo { t }).unwrap();
        let grid = TimeGrid::new(t, vec![t + 0.7, t + 0.4]).unwrap();
        let quantities: Vec<Box<dyn Fn(Conditioning) -> f64>> = vec![
            Box::new(|c| survival_uni(&model, &belief, c, t + 0.9).unwrap()),
            Box::new(|c| density_uni(&model, &belief, c, t + 0.9).unwrap()),
            Box::new(|c| laplace_uni(&model, &belief, c, 1.1).unwrap()),
            Box::new(|c| moment_uni(&model, &belief, c, 1).unwrap()),
            Box::new(|c| moment_uni(&model, &belief, c, 2).unwrap()),
            Box::new(|c| survival_joint(&model, &belief, c, &grid).unwrap()),
            Box::new(|c| {
                density_joint_bi(&model, &belief, c, t + 0.7, t + 0.4)
                    .unwrap()
                    .value
            }),
            Box::new(|c| laplace_joint_bi(&model, &belief, c, 0.6, 1.4).unwrap()),
            Box::new(|c| cross_moment_bi(&model, &belief, c).unwrap()),
        ];
        for f in quantities {
            let direct = f(Conditioning::NoExit);
            let mixed: f64 = belief
                .distribution
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(i, &w)| w * f(Conditioning::AtState(i)))
                .sum();
            worst = worst.max((direct - mixed).abs());
        }
    }
    criterion(5, "mixture-relation", started, 10.0, worst, 1e-12);
}

/// Criterion 6: The Laplace transform is 1 at zero and its one-sided finite differences
/// at zero reproduce the first two moments.
#[test]
fn criterion_6_laplace_moment_consistency() {
    let started = Instant::now();
    let mut rng = rng(606);
    let mut worst_unit = 0.0f64;
    let mut worst_rel = 0.0f64;
    for trial in 0..10 {
        let shape = ModelShape {
            exit_sets: 1 + trial % 2,
            max_transient: 5,
            max_rate: 2.0,
            direct_absorption: true,
        };
        let model = random_model(&mut rng, &shape);
        let belief = BeliefState::initial(&model);
        let cond = Conditioning::NoExit;
        let at_zero = laplace_uni(&model, &belief, cond, 0.0).unwrap();
        worst_unit = worst_unit.max((at_zero - 1.0).abs());

        let m1 = moment_uni(&model, &belief, cond, 1).unwrap();
        let m2 = moment_uni(&model, &belief, cond, 2).unwrap();
        // the transform varies on the lambda scale 1/m1
        let h = 1e-3 / m1;
        let f = |l: f64| laplace_uni(&model, &belief, cond, l).unwrap();
        // second-order one-sided stencils keep lambda >= 0
        let d1 = (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
        let d2 = (2.0 * f(0.0) - 5.0 * f(h) + 4.0 * f(2.0 * h) - f(3.0 * h)) / (h * h);
        worst_rel = worst_rel.max(((-d1 - m1) / m1).abs());
        worst_rel = worst_rel.max(((d2 - m2) / m2).abs());
    }
    assert!(
        worst_unit <= 1e-12,
        "laplace at zero deviates from 1 by {worst_unit:.3e}"
    );
    criterion(
        6,
        "laplace-moment-consistency",
        started,
        10.0,
        worst_rel,
        1e-4,
    );
}

/// Criterion 7: Monte Carlo estimates agree with the analytic engine within four
/// standard errors on the examples and random models; a mismatched model
/// fails loudly.
#[test]
fn criterion_7_monte_carlo_agreement() {
    let started = Instant::now();
    let n = 1_000_000u64;
    let seed = 20_260_809;
    let mut worst_z = 0.0f64;

    let mut models: Vec<MixtureModel> = vec![
        exponential_mixture([1.0, 2.0], [3.0, 4.0], [0.3, 0.3, 0.3]).unwrap(),
        marshall_olkin_mixture([1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [0.5, 0.5, 0.5]).unwrap(),
    ];
    let mut generator = rng(707);
    for _ in 0..3 {
        let shape = ModelShape {
            exit_sets: 2,
            max_transient: 4,
            max_rate: 2.0,
            direct_absorption: true,
        };
        models.push(random_model(&mut generator, &shape));
    }

    let z = |analytic: f64, value: f64, se: f64| -> f64 {
        if se == 0.0 {
            if (analytic - value).abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (value - analytic).abs() / se
        }
    };

    for model in &models {
        let belief = BeliefState::initial(model);
        let config = SimConfig::new(n, seed);
        for (t1, t2) in [(0.3, 0.3), (0.7, 0.25), (0.2, 0.9)] {
            let grid = TimeGrid::new(0.0, vec![t1, t2]).unwrap();
            let analytic = survival_joint(model, &belief, Conditioning::NoExit, &grid).unwrap();
            let est = empirical_joint_survival(model, &config, &grid).unwrap();
            worst_z = worst_z.max(z(analytic, est.value, est.std_error));
        }
        let analytic = singular_cdf_bi(model, &belief, Conditioning::NoExit, 0.0).unwrap();
        let est = empirical_singular_mass(model, &config, 0.0).unwrap();
        worst_z = worst_z.max(z(analytic, est.value, est.std_error));
        for cause in 0..2 {
            let analytic =
                competing_risk_bi(model, &belief, Conditioning::NoExit, cause, f64::INFINITY)
                    .unwrap();
            let est = empirical_competing_risks(model, &config, 0.0, f64::INFINITY, cause).unwrap();
            worst_z = worst_z.max(z(analytic, est.estimate.value, est.estimate.std_error));
        }
    }

    // negative control: analytic values from one model, paths from another
    let analytic_model = &models[0];
    let wrong = exponential_mixture([1.45, 2.6], [3.0, 4.0], [0.3, 0.3, 0.3]).unwrap();
    let belief = BeliefState::initial(analytic_model);
    let grid = TimeGrid::new(0.0, vec![0.5, 0.25]).unwrap();
    let analytic = survival_joint(analytic_model, &belief, Conditioning::NoExit, &grid).unwrap();
    let est = empirical_joint_survival(&wrong, &SimConfig::new(n, seed), &grid).unwrap();
    let control_z = z(analytic, est.value, est.std_error);
    assert!(
        control_z > 4.0,
        "negative control z = {control_z} should exceed 4"
    );

    criterion(7, "monte-carlo-agreement", started, 60.0, worst_z, 4.0);
}

/// Criterion 8: Time-zero updates return the priors exactly; equal generators pin the
/// posterior to the starting state's prior; the scalar case evaluates to 1/3.
#[test]
fn criterion_8_bayesian_updates() {
    let started = Instant::now();
    let mut rng = rng(808);
    let mut worst = 0.0f64;
    for trial in 0..6 {
        let shape = ModelShape {
            exit_sets: 1 + trial % 3,
            max_transient: 6,
            max_rate: 2.0,
            direct_absorption: true,
        };
        let model = random_model(&mut rng, &shape);
        // exactness at t = 0 for every information regime
        for info in [
            Information::NoInfo { t: 0.0 },
            Information::NoInfoKnownStart { t: 0.0, start: 0 },
        ] {
            let s = switching_update(&model, &info).unwrap();
            for (got, want) in s.iter().zip(&model.switching) {
                assert_eq!(got.unwrap(), *want, "s_j(0) must equal s_j exactly");
            }
            let pi = state_update(&model, &info).unwrap();
            assert_eq!(pi, model.initial, "pi(0) must equal pi exactly");
        }

        // equal generators: every defined posterior equals the start's prior
        let mut markov = model.clone();
        markov.generators.b = markov.generators.a.clone();
        let s =
            switching_update(&markov, &Information::NoInfoKnownStart { t: 0.9, start: 0 }).unwrap();
        for value in s.iter().flatten() {
            worst = worst.max((value - markov.switching[0]).abs());
        }
    }
    assert!(
        worst <= 1e-14,
        "equal-generator posterior drifts by {worst:.3e}"
    );

    // scalar case at t = ln 2
    let model = MixtureModel::from_json(
        r#"{
            "states": ["1", "D"],
            "A": [[-1.0]],
            "B": [[-2.0]],
            "pi": [1.0],
            "s": [0.5],
            "closed_sets": [[]]
        }"#,
    )
    .unwrap();
    let t = 2.0f64.ln();
    let s = switching_update(&model, &Information::NoInfoKnownStart { t, start: 0 }).unwrap();
    let scalar_dev = (s[0].unwrap() - 1.0 / 3.0).abs();
    criterion(
        8,
        "bayesian-updates",
        started,
        10.0,
        worst.max(scalar_dev),
        1e-12,
    );
}

/// Criterion 9: Central finite differences of the joint survival reproduce the
/// absolutely continuous joint density at interior points, for two and three
/// exit sets.
#[test]
fn criterion_9_density_finite_differences() {
    let started = Instant::now();
    let mut rng = rng(909);
    let mut worst = 0.0f64;
    let h = 1e-3;
    for &n_sets in &[2usize, 3, 2, 3] {
        let shape = ModelShape {
            exit_sets: n_sets,
            max_transient: 5,
            max_rate: 1.2,
            direct_absorption: true,
        };
        let model = random_model(&mut rng, &shape);
        let belief = BeliefState::initial(&model);
        let cond = Conditioning::NoExit;
        let mut accepted = 0;
        while accepted < 20 {
            let times: Vec<f64> = (0..n_sets)
                .map(|_| uniform_in(&mut rng, 0.3, 1.5))
                .collect();
            // keep the stencil inside one ordering region
            let mut sorted = times.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if sorted.windows(2).any(|w| w[1] - w[0] < 4.0 * h) {
                continue;
            }
            accepted += 1;

            let density = {
                let grid = TimeGrid::new(0.0, times.clone()).unwrap();
                density_joint_multi(&model, &belief, cond, &grid).unwrap()
            };
            // alternating-sign stencil over all corner offsets
            let mut fd = 0.0;
            for corner in 0..(1u32 << n_sets) {
                let mut shifted = times.clone();
                let mut sign = 1.0;
                for (k, tk) in shifted.iter_mut().enumerate() {
                    if corner >> k & 1 == 1 {
                        *tk += h;
                    } else {
                        *tk -= h;
                        sign = -sign;
                    }
                }
                let grid = TimeGrid::new(0.0, shifted).unwrap();
                fd += sign * survival_joint(&model, &belief, cond, &grid).unwrap();
            }
            fd /= (2.0 * h).powi(n_sets as i32);
            if n_sets % 2 == 1 {
                fd = -fd;
            }
            worst = worst.max((fd - density).abs());
        }
    }
    criterion(9, "density-finite-differences", started, 30.0, worst, 1e-5);
}

/// Criterion 10: The verification command is byte-identical across repeated runs and
/// across single- vs multi-threaded execution.
#[test]
fn criterion_10_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    let model = marshall_olkin_mixture([1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [0.5, 0.5, 0.5]).unwrap();
    std::fs::write(&model_path, model.to_json()).unwrap();

    let run = |threads: &str| -> (String, i32) {
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_phasemix"))
            .args([
                "verify",
                model_path.to_str().unwrap(),
                "--n",
                "200000",
                "--seed",
                "7",
            ])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .expect("binary runs");
        (
            String::from_utf8(output.stdout).unwrap(),
            output.status.code().unwrap_or(-1),
        )
    };
    let (first, code1) = run("1");
    let (second, code2) = run("1");
    let (parallel, code3) = run("8");
    assert_eq!(
        code1, 0,
        "verify must pass on a well-specified model:\n{first}"
    );
    assert_eq!(code1, code2);
    assert_eq!(code1, code3);
    assert_eq!(first, second, "repeated runs must be byte-identical");
    assert_eq!(first, parallel, "thread count must not change the report");

    criterion(10, "determinism", started, 120.0, 0.0, 1.0);
}
