//! Conditional distributional quantities of the exit-time vector: transition
//! matrices, univariate and joint survival functions, densities with their
//! absolutely-continuous/singular decomposition, Laplace transforms and
//! moments.
//!
//! Every quantity has the shape
//!   row · { S(t) M_B + [I - S(t)] M_A } · 1
//! where the row is a unit vector (conditioning on the current state) or the
//! time-t state distribution (conditioning on survival only), S(t) is the
//! diagonal switching-probability matrix, and M_A / M_B are products of
//! matrix exponentials, projections and resolvents of the two phase
//! generators. Conditioning on survival is evaluated as the
//! distribution-weighted mixture of the per-state quantities, which is exact.
//!
//! Laplace transforms and moments are taken in the elapsed-time variable
//! (time measured from the conditioning time t), matching the integral
//! definitions; see `moment_uni_raw` for the absolute-time reading.

use thiserror::Error;

use crate::matrix::{commutator, expm, ones, solve_vec, Matrix, MatrixError};
use crate::model::MixtureModel;
use crate::observation::BeliefState;

/// Entrywise tolerance for deciding that a model has no simultaneous-exit
/// mass.
pub const SINGULAR_FREE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid time argument: {0}")]
    InvalidTime(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("query needs {expected} time coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("state index {0} is not a transient state")]
    NotTransient(usize),
    #[error("belief is undefined at state index {0} (conditioning event unreachable)")]
    UndefinedBelief(usize),
    #[error("tied query times hit the singular set; the absolutely continuous density is undefined there")]
    TiedTimes,
    #[error("conditioning must be supported on states outside every exit set: {0}")]
    BlockStructure(String),
    #[error("model error: {0}")]
    Model(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// What the distributional quantity conditions on at the belief time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// The process sits in the given transient state.
    AtState(usize),
    /// Only that no absorption has occurred.
    NoExit,
}

/// Conditioning time plus one query time per exit set.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t: f64,
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t: f64, times: Vec<f64>) -> Result<Self, EvalError> {
        if !t.is_finite() || t < 0.0 {
            return Err(EvalError::InvalidTime(format!("conditioning time {t}")));
        }
        for &tk in &times {
            if !tk.is_finite() {
                return Err(EvalError::InvalidTime(format!("query time {tk}")));
            }
            if tk < t {
                return Err(EvalError::InvalidTime(format!(
                    "query time {tk} precedes the conditioning time {t}"
                )));
            }
        }
        if times.is_empty() {
            return Err(EvalError::ArityMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(TimeGrid { t, times })
    }

    pub fn conditioning_time(&self) -> f64 {
        self.t
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Permutation sorting the query times ascending; ties break by index,
    /// which is immaterial because the projections commute and a zero-length
    /// exponential is the identity.
    pub fn ordering(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.times.len()).collect();
        idx.sort_by(|&a, &b| {
            self.times[a]
                .partial_cmp(&self.times[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Which piece of the bivariate density produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// First coordinate strictly later.
    Component1,
    /// Second coordinate strictly later.
    Component2,
    /// Equal coordinates: the density of the simultaneous-exit mass.
    Singular,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Component1 => write!(f, "component1"),
            Branch::Component2 => write!(f, "component2"),
            Branch::Singular => write!(f, "singular"),
        }
    }
}

/// A density value together with the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointEvaluation {
    pub value: f64,
    pub branch: Branch,
}

fn check_belief(model: &MixtureModel, belief: &BeliefState) -> Result<(), EvalError> {
    let m = model.transient_count();
    if belief.switching.len() != m || belief.distribution.len() != m {
        return Err(EvalError::InvalidArgument(format!(
            "belief dimension does not match the model ({} transient states)",
            m
        )));
    }
    Ok(())
}

/// Combine the per-regime column vectors under the requested conditioning.
/// Survival-only conditioning is the state-distribution-weighted mixture of
/// the per-state values.
fn mix(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    v_b: &[f64],
    v_a: &[f64],
) -> Result<f64, EvalError> {
    check_belief(model, belief)?;
    let m = model.transient_count();
    let state_value = |i: usize| -> Result<f64, EvalError> {
        let s = belief.switching[i].ok_or(EvalError::UndefinedBelief(i))?;
        Ok(s * v_b[i] + (1.0 - s) * v_a[i])
    };
    match cond {
        Conditioning::AtState(i) => {
            if i >= m {
                return Err(EvalError::NotTransient(i));
            }
            // + 0.0 flushes negative zero out of sign-carrying terms
            state_value(i).map(|v| v + 0.0)
        }
        Conditioning::NoExit => {
            let mut acc = 0.0;
            for i in 0..m {
                let w = belief.distribution[i];
                if w > 0.0 {
                    acc += w * state_value(i)?;
                }
            }
            Ok(acc + 0.0)
        }
    }
}

fn elapsed(belief: &BeliefState, s: f64) -> Result<f64, EvalError> {
    if !s.is_finite() || s < belief.t {
        return Err(EvalError::InvalidTime(format!(
            "query time {s} precedes the belief time {}",
            belief.t
        )));
    }
    Ok(s - belief.t)
}

fn expm_vec(m: &Matrix, dt: f64, v: &[f64]) -> Result<Vec<f64>, EvalError> {
    Ok(expm(m, dt)?.mul_vec(v))
}

fn projection(model: &MixtureModel, k: usize) -> Result<Matrix, EvalError> {
    model
        .exits
        .projection(k)
        .map_err(|e| EvalError::Model(e.to_string()))
}

fn projections_bi(model: &MixtureModel) -> Result<(Matrix, Matrix), EvalError> {
    if model.exits.count() != 2 {
        return Err(EvalError::ArityMismatch {
            expected: 2,
            got: model.exits.count(),
        });
    }
    Ok((projection(model, 0)?, projection(model, 1)?))
}

/// Core of the simultaneous-exit (singular) terms:
/// `H2 X H1 + H1 X H2 - X H1 H2`. Applied to the ones vector this reads off
/// minus the direct absorbing rate on states outside both exit sets and
/// vanishes elsewhere.
fn singular_core(x: &Matrix, h1: &Matrix, h2: &Matrix) -> Matrix {
    h2.matmul(x)
        .matmul(h1)
        .add(&h1.matmul(x).matmul(h2))
        .sub(&x.matmul(&h1.matmul(h2)))
}

/// Conditional transition matrix over the full state space for a horizon
/// `s >= t`: the belief-weighted combination of the two regimes' transition
/// matrices. Requires the switching probability to be defined at every
/// transient state.
pub fn transition_matrix(
    model: &MixtureModel,
    belief: &BeliefState,
    s: f64,
) -> Result<Matrix, EvalError> {
    check_belief(model, belief)?;
    let dt = elapsed(belief, s)?;
    let m = model.transient_count();
    let mut diag = vec![0.0; m + 1];
    for (i, d) in diag.iter_mut().take(m).enumerate() {
        *d = belief.switching[i].ok_or(EvalError::UndefinedBelief(i))?;
    }
    // the absorbing row is (0,...,0,1) under either regime, so its switching
    // entry is immaterial
    let s_tilde = Matrix::diag(&diag);
    let complement = Matrix::identity(m + 1).sub(&s_tilde);
    let p1 = expm(&model.intensity_regime1(), dt)?;
    let p0 = expm(&model.intensity_regime0(), dt)?;
    Ok(s_tilde.matmul(&p1).add(&complement.matmul(&p0)))
}

/// Survival function of the absorption time: `P{tau > s | conditioning}`.
pub fn survival_uni(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    s: f64,
) -> Result<f64, EvalError> {
    let dt = elapsed(belief, s)?;
    let one = ones(model.transient_count());
    let v_b = expm_vec(&model.generators.b, dt, &one)?;
    let v_a = expm_vec(&model.generators.a, dt, &one)?;
    mix(model, belief, cond, &v_b, &v_a)
}

/// Density of the absorption time at `s >= t`.
pub fn density_uni(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    s: f64,
) -> Result<f64, EvalError> {
    let dt = elapsed(belief, s)?;
    let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<_>>();
    let v_b = neg(expm_vec(
        &model.generators.b,
        dt,
        &model.generators.b.row_sums(),
    )?);
    let v_a = neg(expm_vec(
        &model.generators.a,
        dt,
        &model.generators.a.row_sums(),
    )?);
    mix(model, belief, cond, &v_b, &v_a)
}

/// Laplace transform of the elapsed absorption time,
/// `E{exp(-lambda (tau - t)) | conditioning}` for `lambda >= 0`.
pub fn laplace_uni(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    lambda: f64,
) -> Result<f64, EvalError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(EvalError::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let m = model.transient_count();
    let resolvent_term = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        let shifted = Matrix::diag(&vec![lambda; m]).sub(g);
        let x = solve_vec(&shifted, &g.row_sums())?;
        Ok(x.into_iter().map(|v| -v).collect())
    };
    let v_b = resolvent_term(&model.generators.b)?;
    let v_a = resolvent_term(&model.generators.a)?;
    mix(model, belief, cond, &v_b, &v_a)
}

/// n-th moment of the elapsed absorption time `tau - t`, as produced by the
/// resolvent formula. `moment_uni_raw` shifts this to absolute time.
pub fn moment_uni(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    n: u32,
) -> Result<f64, EvalError> {
    let m = model.transient_count();
    let power_term = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        let mut v = ones(m);
        for _ in 0..n {
            v = solve_vec(g, &v)?;
        }
        Ok(v)
    };
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let scale = sign * factorial;
    let v_b: Vec<f64> = power_term(&model.generators.b)?
        .iter()
        .map(|v| scale * v)
        .collect();
    let v_a: Vec<f64> = power_term(&model.generators.a)?
        .iter()
        .map(|v| scale * v)
        .collect();
    mix(model, belief, cond, &v_b, &v_a)
}

/// n-th moment of the absolute absorption time `tau`, obtained from the
/// elapsed-time moments by the binomial shift with offset `t`.
pub fn moment_uni_raw(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    n: u32,
) -> Result<f64, EvalError> {
    let t = belief.t;
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=n {
        // binom = C(n, k)
        let residual = moment_uni(model, belief, cond, k)?;
        total += binom * t.powi((n - k) as i32) * residual;
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    Ok(total)
}

/// Joint survival `P{tau_1 > t_1, ..., tau_n > t_n | conditioning}` for one
/// query time per exit set.
pub fn survival_joint(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    grid: &TimeGrid,
) -> Result<f64, EvalError> {
    let n = model.exits.count();
    if grid.times().len() != n {
        return Err(EvalError::ArityMismatch {
            expected: n,
            got: grid.times().len(),
        });
    }
    if grid.conditioning_time() != belief.t {
        return Err(EvalError::InvalidTime(format!(
            "grid conditioning time {} differs from the belief time {}",
            grid.conditioning_time(),
            belief.t
        )));
    }
    let order = grid.ordering();
    let projections: Vec<Matrix> = (0..n)
        .map(|k| projection(model, k))
        .collect::<Result<_, _>>()?;

    let product_ones = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        // evaluate the ordered product against the ones vector from the right
        let mut v = ones(model.transient_count());
        for pos in (0..n).rev() {
            let k = order[pos];
            v = projections[k].mul_vec(&v);
            let prev = if pos == 0 {
                belief.t
            } else {
                grid.times()[order[pos - 1]]
            };
            v = expm_vec(g, grid.times()[k] - prev, &v)?;
        }
        Ok(v)
    };
    let v_b = product_ones(&model.generators.b)?;
    let v_a = product_ones(&model.generators.a)?;
    mix(model, belief, cond, &v_b, &v_a)
}

/// Bivariate exit-time density with its branch decomposition. Exactly equal
/// query times select the singular (simultaneous-exit) branch.
pub fn density_joint_bi(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    t1: f64,
    t2: f64,
) -> Result<JointEvaluation, EvalError> {
    let (h1, h2) = projections_bi(model)?;
    let u1 = elapsed(belief, t1)?;
    let u2 = elapsed(belief, t2)?;

    if t1 == t2 {
        let diag_term = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
            let w = singular_core(g, &h1, &h2).row_sums();
            let v = expm_vec(g, u1, &w)?;
            Ok(v.into_iter().map(|x| -x).collect())
        };
        let v_b = diag_term(&model.generators.b)?;
        let v_a = diag_term(&model.generators.a)?;
        let value = mix(model, belief, cond, &v_b, &v_a)?;
        return Ok(JointEvaluation {
            value,
            branch: Branch::Singular,
        });
    }

    // strict ordering: propagate to the earlier time, cross the commutator of
    // the earlier exit's projection, then run to the later time
    let (early, late, h_early, h_late, branch) = if t1 > t2 {
        (u2, u1, &h2, &h1, Branch::Component1)
    } else {
        (u1, u2, &h1, &h2, Branch::Component2)
    };
    let ac_term = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        let mut v = g.matmul(h_late).row_sums();
        v = expm_vec(g, late - early, &v)?;
        v = commutator(g, h_early)?.mul_vec(&v);
        expm_vec(g, early, &v)
    };
    let v_b = ac_term(&model.generators.b)?;
    let v_a = ac_term(&model.generators.a)?;
    let value = mix(model, belief, cond, &v_b, &v_a)?;
    Ok(JointEvaluation { value, branch })
}

/// Mass of the simultaneous-exit event beyond `t1`:
/// `P{tau_1 = tau_2 > t1 | conditioning}`.
pub fn singular_cdf_bi(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    t1: f64,
) -> Result<f64, EvalError> {
    let (h1, h2) = projections_bi(model)?;
    let dt = elapsed(belief, t1)?;
    let tail = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        let w = singular_core(g, &h1, &h2).row_sums();
        let w = solve_vec(g, &w)?;
        expm_vec(g, dt, &w)
    };
    let v_b = tail(&model.generators.b)?;
    let v_a = tail(&model.generators.a)?;
    mix(model, belief, cond, &v_b, &v_a)
}

/// Whether the joint exit-time law puts no mass on simultaneous exits:
/// equivalently, no state outside both exit sets carries a direct absorbing
/// rate, under either regime.
pub fn is_singular_free(model: &MixtureModel) -> Result<bool, EvalError> {
    let (h1, h2) = projections_bi(model)?;
    for g in [&model.generators.a, &model.generators.b] {
        let w = singular_core(g, &h1, &h2).row_sums();
        if w.iter().any(|v| v.abs() > SINGULAR_FREE_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Joint Laplace transform of the elapsed exit times,
/// `E{exp(-l1 (tau_1 - t) - l2 (tau_2 - t)) | conditioning}`.
pub fn laplace_joint_bi(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64, EvalError> {
    for l in [lambda1, lambda2] {
        if !l.is_finite() || l < 0.0 {
            return Err(EvalError::InvalidArgument(format!(
                "lambda must be >= 0, got {l}"
            )));
        }
    }
    let (h1, h2) = projections_bi(model)?;
    let m = model.transient_count();
    let shifted = |g: &Matrix, l: f64| Matrix::diag(&vec![l; m]).sub(g);

    let term = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        // [G,H2] (l1 I - G)^{-1} G H1 1
        let mut w1 = g.matmul(&h1).row_sums();
        w1 = solve_vec(&shifted(g, lambda1), &w1)?;
        w1 = commutator(g, &h2)?.mul_vec(&w1);
        // [G,H1] (l2 I - G)^{-1} G H2 1
        let mut w2 = g.matmul(&h2).row_sums();
        w2 = solve_vec(&shifted(g, lambda2), &w2)?;
        w2 = commutator(g, &h1)?.mul_vec(&w2);
        // minus the simultaneous-exit core
        let w3 = singular_core(g, &h1, &h2).row_sums();
        let combined: Vec<f64> = (0..m).map(|i| w1[i] + w2[i] - w3[i]).collect();
        solve_vec(&shifted(g, lambda1 + lambda2), &combined).map_err(EvalError::from)
    };
    let v_b = term(&model.generators.b)?;
    let v_a = term(&model.generators.a)?;
    mix(model, belief, cond, &v_b, &v_a)
}

/// Expected product of the elapsed exit times,
/// `E{(tau_1 - t)(tau_2 - t) | conditioning}`.
pub fn cross_moment_bi(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
) -> Result<f64, EvalError> {
    let (h1, h2) = projections_bi(model)?;
    let h12 = h1.matmul(&h2);
    let term = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        // 2 G^{-2} H1 H2 1
        let mut lead = h12.row_sums();
        lead = solve_vec(g, &lead)?;
        lead = solve_vec(g, &lead)?;
        // G^{-2} ([G,H2] G^{-1} H1 + [G,H1] G^{-1} H2) 1
        let mut c1 = solve_vec(g, &h1.row_sums())?;
        c1 = commutator(g, &h2)?.mul_vec(&c1);
        let mut c2 = solve_vec(g, &h2.row_sums())?;
        c2 = commutator(g, &h1)?.mul_vec(&c2);
        let mut cross: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a + b).collect();
        cross = solve_vec(g, &cross)?;
        cross = solve_vec(g, &cross)?;
        Ok(lead.iter().zip(&cross).map(|(l, c)| 2.0 * l + c).collect())
    };
    let v_b = term(&model.generators.b)?;
    let v_a = term(&model.generators.a)?;
    mix(model, belief, cond, &v_b, &v_a)
}

/// Absolutely continuous joint density at strictly distinct query times, for
/// any number of exit sets. Tied times are rejected: their mass is singular
/// and (beyond the bivariate case) has no closed form here.
pub fn density_joint_multi(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    grid: &TimeGrid,
) -> Result<f64, EvalError> {
    let n = model.exits.count();
    if grid.times().len() != n {
        return Err(EvalError::ArityMismatch {
            expected: n,
            got: grid.times().len(),
        });
    }
    if grid.conditioning_time() != belief.t {
        return Err(EvalError::InvalidTime(format!(
            "grid conditioning time {} differs from the belief time {}",
            grid.conditioning_time(),
            belief.t
        )));
    }
    let order = grid.ordering();
    for pair in order.windows(2) {
        if grid.times()[pair[0]] == grid.times()[pair[1]] {
            return Err(EvalError::TiedTimes);
        }
    }
    let projections: Vec<Matrix> = (0..n)
        .map(|k| projection(model, k))
        .collect::<Result<_, _>>()?;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };

    let term = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        let last = order[n - 1];
        let mut v = g.matmul(&projections[last]).row_sums();
        let prev = if n == 1 {
            belief.t
        } else {
            grid.times()[order[n - 2]]
        };
        v = expm_vec(g, grid.times()[last] - prev, &v)?;
        for pos in (0..n - 1).rev() {
            let k = order[pos];
            v = commutator(g, &projections[k])?.mul_vec(&v);
            let prev = if pos == 0 {
                belief.t
            } else {
                grid.times()[order[pos - 1]]
            };
            v = expm_vec(g, grid.times()[k] - prev, &v)?;
        }
        Ok(v.into_iter().map(|x| sign * x).collect())
    };
    let v_b = term(&model.generators.b)?;
    let v_a = term(&model.generators.a)?;
    mix(model, belief, cond, &v_b, &v_a)
}

/// Marginal survival of one exit time in a two-exit model, evaluated on the
/// generator restricted to the states outside that exit set. Conditioning
/// must be supported on states outside both exit sets.
pub fn marginal_exit(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    k: usize,
    s: f64,
) -> Result<f64, EvalError> {
    check_belief(model, belief)?;
    if model.exits.count() != 2 {
        return Err(EvalError::ArityMismatch {
            expected: 2,
            got: model.exits.count(),
        });
    }
    if k >= 2 {
        return Err(EvalError::InvalidArgument(format!(
            "exit-set index {k} out of range"
        )));
    }
    let dt = elapsed(belief, s)?;
    let m = model.transient_count();
    let free: Vec<usize> = model.exits.common_complement(m);
    let keep: Vec<usize> = (0..m).filter(|i| !model.exits.contains(k, *i)).collect();
    if keep.is_empty() {
        return Err(EvalError::BlockStructure(
            "the exit set covers every transient state".into(),
        ));
    }
    let pos_of = |i: usize| keep.iter().position(|&j| j == i);
    let check_free = |i: usize| -> Result<usize, EvalError> {
        if !free.contains(&i) {
            return Err(EvalError::BlockStructure(format!(
                "state '{}' lies inside an exit set",
                model.space.label(i)
            )));
        }
        Ok(pos_of(i).expect("free states remain in the restriction"))
    };

    let reduced_b = model.generators.b.submatrix(&keep);
    let reduced_a = model.generators.a.submatrix(&keep);
    let v_b = expm_vec(&reduced_b, dt, &ones(keep.len()))?;
    let v_a = expm_vec(&reduced_a, dt, &ones(keep.len()))?;

    let state_value = |i: usize| -> Result<f64, EvalError> {
        let p = check_free(i)?;
        let sw = belief.switching[i].ok_or(EvalError::UndefinedBelief(i))?;
        Ok(sw * v_b[p] + (1.0 - sw) * v_a[p])
    };
    match cond {
        Conditioning::AtState(i) => {
            if i >= m {
                return Err(EvalError::NotTransient(i));
            }
            state_value(i)
        }
        Conditioning::NoExit => {
            let mut acc = 0.0;
            for i in 0..m {
                let w = belief.distribution[i];
                if w > 0.0 {
                    acc += w * state_value(i)?;
                }
            }
            Ok(acc)
        }
    }
}

/// Probability that the first exit happens in `[t, s)` and is caused by exit
/// set `k`, with simultaneous exits credited to the lower-indexed set:
/// `P{t <= min(tau_1, tau_2) < s, argmin = k | conditioning}`.
/// An infinite `s` gives the total cause-k proportion.
pub fn competing_risk_bi(
    model: &MixtureModel,
    belief: &BeliefState,
    cond: Conditioning,
    k: usize,
    s: f64,
) -> Result<f64, EvalError> {
    let (h1, h2) = projections_bi(model)?;
    if k >= 2 {
        return Err(EvalError::InvalidArgument(format!(
            "cause index {k} out of range"
        )));
    }
    let dt = if s == f64::INFINITY {
        f64::INFINITY
    } else {
        elapsed(belief, s)?
    };
    let (h_own, h_other) = if k == 0 { (&h1, &h2) } else { (&h2, &h1) };

    // e^{G dt} v, where an infinite horizon kills every transient state
    let propagate = |g: &Matrix, v: &[f64]| -> Result<Vec<f64>, EvalError> {
        if dt.is_infinite() {
            Ok(vec![0.0; v.len()])
        } else {
            expm_vec(g, dt, v)
        }
    };

    let term = |g: &Matrix| -> Result<Vec<f64>, EvalError> {
        // strict part: - G^{-1} (e^{G dt} - I) [G, H_own] H_other 1
        let w = h_other.mul_vec(&ones(model.transient_count()));
        let w = commutator(g, h_own)?.mul_vec(&w);
        let ew = propagate(g, &w)?;
        let diff: Vec<f64> = ew.iter().zip(&w).map(|(e, x)| e - x).collect();
        let mut strict = solve_vec(g, &diff)?;
        for v in &mut strict {
            *v = -*v;
        }
        if k == 0 {
            // simultaneous exits: (I - e^{G dt}) G^{-1} N 1
            let tail = solve_vec(g, &singular_core(g, &h1, &h2).row_sums())?;
            let etail = propagate(g, &tail)?;
            for i in 0..strict.len() {
                strict[i] += tail[i] - etail[i];
            }
        }
        Ok(strict)
    };
    let v_b = term(&model.generators.b)?;
    let v_a = term(&model.generators.a)?;
    mix(model, belief, cond, &v_b, &v_a)
}
