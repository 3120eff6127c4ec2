//! Shared helpers for integration tests: seeded random model generation and
//! independent oracle evaluations.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phasemix::matrix::{dot, expm, ones, Matrix};
use phasemix::model::{ExitStructure, GeneratorPair, MixtureModel, StateSpace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

pub fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Options for the random model generator.
pub struct ModelShape {
    pub exit_sets: usize,
    pub max_transient: usize,
    pub max_rate: f64,
    /// Allow states outside every exit set to jump straight to absorption
    /// (which creates simultaneous-exit mass).
    pub direct_absorption: bool,
}

/// Draw a valid mixture model: a block of free states (outside every exit
/// set), disjoint per-set blocks, closed generators with strictly positive
/// absorption routes, initial mass on the free states only.
pub fn random_model(rng: &mut ChaCha8Rng, shape: &ModelShape) -> MixtureModel {
    let n = shape.exit_sets;
    assert!(shape.max_transient > n);
    let free = 1 + below(rng, 2.min(shape.max_transient - n));
    let mut sizes = vec![0usize; n];
    let mut m = free;
    // with a single exit set, its intersection is itself and must be exactly
    // the absorbing state; with several, keep the transient blocks disjoint
    if n > 1 {
        for size in sizes.iter_mut() {
            let room = shape.max_transient - m;
            *size = below(rng, 1 + 2.min(room));
            m += *size;
        }
    }

    // membership[i] = None for free states, Some(k) for states in set k
    let mut membership: Vec<Option<usize>> = vec![None; free];
    for (k, &size) in sizes.iter().enumerate() {
        membership.extend(std::iter::repeat_n(Some(k), size));
    }

    let draw_generator = |rng: &mut ChaCha8Rng| -> Matrix {
        let mut g = Matrix::zeros(m, m);
        let mut delta_rate = vec![0.0; m];
        for i in 0..m {
            let targets: Vec<usize> = (0..m)
                .filter(|&j| {
                    j != i
                        && match membership[i] {
                            None => true,
                            Some(k) => membership[j] == Some(k),
                        }
                })
                .collect();
            for &j in &targets {
                if uniform(rng) < 0.5 {
                    g[(i, j)] = uniform_in(rng, 0.1, shape.max_rate);
                }
            }
            delta_rate[i] = match membership[i] {
                // exit-set states always absorb directly so the generator
                // stays nonsingular
                Some(_) => uniform_in(rng, 0.1, shape.max_rate),
                None => {
                    if shape.direct_absorption && uniform(rng) < 0.5 {
                        uniform_in(rng, 0.1, shape.max_rate)
                    } else {
                        0.0
                    }
                }
            };
            if delta_rate[i] == 0.0 {
                // guarantee an escape route out of the free block
                let escapes: Vec<usize> = (0..m)
                    .filter(|&j| j != i && membership[j].is_some())
                    .collect();
                if escapes.is_empty() {
                    delta_rate[i] = uniform_in(rng, 0.1, shape.max_rate);
                } else {
                    let j = escapes[below(rng, escapes.len())];
                    if g[(i, j)] == 0.0 {
                        g[(i, j)] = uniform_in(rng, 0.1, shape.max_rate);
                    }
                }
            }
            let row_sum: f64 = (0..m).filter(|&j| j != i).map(|j| g[(i, j)]).sum();
            g[(i, i)] = -(row_sum + delta_rate[i]);
        }
        g
    };
    let a = draw_generator(rng);
    let b = draw_generator(rng);

    let labels: Vec<String> = (1..=m)
        .map(|i| i.to_string())
        .chain(["D".to_string()])
        .collect();
    let mut initial = vec![0.0; m];
    let mut total = 0.0;
    for p in initial.iter_mut().take(free) {
        *p = uniform_in(rng, 0.2, 1.0);
        total += *p;
    }
    for p in initial.iter_mut() {
        *p /= total;
    }
    let switching: Vec<f64> = (0..m).map(|_| uniform_in(rng, 0.05, 0.95)).collect();
    let sets: Vec<Vec<usize>> = (0..n)
        .map(|k| (0..m).filter(|&i| membership[i] == Some(k)).collect())
        .collect();

    let model = MixtureModel {
        space: StateSpace::new(labels).expect("labels are unique"),
        generators: GeneratorPair::new(a, b),
        initial,
        switching,
        exits: ExitStructure::from_transient_members(sets, m).expect("valid sets"),
    };
    let violations = model.validate();
    assert!(
        violations.is_empty(),
        "generator produced an invalid model: {violations:?}"
    );
    model
}

/// Direct evaluation of the unconditional multivariate phase-type survival:
/// the ordered product of exponentials and projections of the single
/// generator, weighted by the initial distribution. Independent of the
/// mixture engine's evaluation path.
pub fn unconditional_markov_survival(model: &MixtureModel, times: &[f64]) -> f64 {
    let m = model.transient_count();
    let mut idx: Vec<usize> = (0..times.len()).collect();
    idx.sort_by(|&x, &y| times[x].partial_cmp(&times[y]).unwrap().then(x.cmp(&y)));
    let mut product = Matrix::identity(m);
    let mut prev = 0.0;
    for &k in &idx {
        let step = expm(&model.generators.a, times[k] - prev).expect("expm");
        product = product
            .matmul(&step)
            .matmul(&model.exits.projection(k).expect("projection"));
        prev = times[k];
    }
    dot(&product.vec_mul(&model.initial), &ones(m))
}

/// Closed form of the exponential-race joint density at time zero.
pub fn race_density(p: f64, a: [f64; 2], b: [f64; 2], t1: f64, t2: f64) -> f64 {
    p * b[0] * (-b[0] * t1).exp() * b[1] * (-b[1] * t2).exp()
        + (1.0 - p) * a[0] * (-a[0] * t1).exp() * a[1] * (-a[1] * t2).exp()
}

/// Posterior regime-1 probability of the shared-shock example started in the
/// free state, observed nowhere, at time `t`.
pub fn shared_shock_posterior(p: f64, a_total: f64, b_total: f64, t: f64) -> f64 {
    let num = p * (-b_total * t).exp();
    num / (num + (1.0 - p) * (-a_total * t).exp())
}
