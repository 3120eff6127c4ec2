//! Observed sample paths, their likelihoods under each regime, and the
//! Bayesian belief state (switching probabilities and state distribution)
//! for the three information regimes: a fully observed path, no observation,
//! and no observation with a known starting state.

use thiserror::Error;

use crate::matrix::{expm, Matrix, MatrixError};
use crate::model::MixtureModel;

#[derive(Debug, Error)]
pub enum ObservationError {
    #[error("malformed path: {0}")]
    MalformedPath(String),
    #[error("path is inconsistent with the model: {0}")]
    InconsistentPath(String),
    #[error("conditioning event has zero probability: {0}")]
    ImpossibleObservation(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// A piecewise-constant trajectory observed on `[0, horizon]`,
/// right-continuous: `states[k]` holds from `epochs[k]` until the next epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedPath {
    epochs: Vec<f64>,
    states: Vec<usize>,
    horizon: f64,
}

impl ObservedPath {
    pub fn new(
        epochs: Vec<f64>,
        states: Vec<usize>,
        horizon: f64,
    ) -> Result<Self, ObservationError> {
        let bad = |msg: String| Err(ObservationError::MalformedPath(msg));
        if epochs.is_empty() || epochs.len() != states.len() {
            return bad("epochs and states must be non-empty and equally long".into());
        }
        if epochs[0] != 0.0 {
            return bad(format!("first epoch must be 0, got {}", epochs[0]));
        }
        if !horizon.is_finite() || horizon < 0.0 {
            return bad(format!("horizon must be finite and >= 0, got {horizon}"));
        }
        for w in epochs.windows(2) {
            if !(w[1] > w[0]) {
                return bad(format!(
                    "epochs must be strictly increasing ({} then {})",
                    w[0], w[1]
                ));
            }
        }
        if *epochs.last().unwrap() > horizon {
            return bad(format!(
                "last epoch {} exceeds the horizon {horizon}",
                epochs.last().unwrap()
            ));
        }
        for w in states.windows(2) {
            if w[0] == w[1] {
                return bad(format!("consecutive states must differ (state {})", w[0]));
            }
        }
        Ok(ObservedPath {
            epochs,
            states,
            horizon,
        })
    }

    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.states[0]
    }

    /// State occupied at the horizon.
    pub fn terminal_state(&self) -> usize {
        *self.states.last().unwrap()
    }

    /// Check state indices against a model and reject jumps after absorption.
    fn check_against(&self, model: &MixtureModel) -> Result<(), ObservationError> {
        let absorbing = model.space.absorbing();
        for (k, &s) in self.states.iter().enumerate() {
            if s > absorbing {
                return Err(ObservationError::InconsistentPath(format!(
                    "state index {s} out of range"
                )));
            }
            if s == absorbing && k + 1 < self.states.len() {
                return Err(ObservationError::MalformedPath(
                    "the path continues after entering the absorbing state".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Sufficient statistics of a path: occupancy time per state, jump counts,
/// and the terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStats {
    pub occupancy: Vec<f64>,
    pub jump_counts: Vec<Vec<u64>>,
    pub terminal_state: usize,
}

/// Occupancy times and jump counts over a state space of `state_count`
/// states, the last being absorbing.
pub fn path_stats(path: &ObservedPath, state_count: usize) -> Result<PathStats, ObservationError> {
    if let Some(&bad) = path.states.iter().find(|&&s| s >= state_count) {
        return Err(ObservationError::InconsistentPath(format!(
            "state index {bad} out of range"
        )));
    }
    let absorbing = state_count - 1;
    if path
        .states
        .iter()
        .position(|&s| s == absorbing)
        .is_some_and(|k| k + 1 < path.states.len())
    {
        return Err(ObservationError::MalformedPath(
            "the path jumps after entering the absorbing state".into(),
        ));
    }
    let mut occupancy = vec![0.0; state_count];
    let mut jump_counts = vec![vec![0u64; state_count]; state_count];
    for k in 0..path.states.len() {
        let leave = if k + 1 < path.epochs.len() {
            path.epochs[k + 1]
        } else {
            path.horizon
        };
        occupancy[path.states[k]] += leave - path.epochs[k];
        if k + 1 < path.states.len() {
            jump_counts[path.states[k]][path.states[k + 1]] += 1;
        }
    }
    Ok(PathStats {
        occupancy,
        jump_counts,
        terminal_state: path.terminal_state(),
    })
}

/// Likelihood of the observed statistics under one regime's full intensity
/// matrix. Computed in log space; a counted jump whose rate is zero makes
/// the path impossible and short-circuits to exactly zero.
pub fn path_likelihood(stats: &PathStats, intensity: &Matrix) -> Result<f64, ObservationError> {
    let n = stats.occupancy.len();
    if intensity.rows() != n || intensity.cols() != n {
        return Err(ObservationError::InconsistentPath(format!(
            "intensity is {}x{}, expected {n}x{n}",
            intensity.rows(),
            intensity.cols()
        )));
    }
    let mut log_lik = 0.0;
    for k in 0..n {
        let hold_rate = -intensity[(k, k)];
        log_lik -= hold_rate * stats.occupancy[k];
        for j in 0..n {
            let count = stats.jump_counts[k][j];
            if count == 0 || k == j {
                continue;
            }
            let rate = intensity[(k, j)];
            if rate <= 0.0 {
                return Ok(0.0);
            }
            log_lik += count as f64 * rate.ln();
        }
    }
    Ok(log_lik.exp())
}

/// What is known at the conditioning time.
#[derive(Debug, Clone, PartialEq)]
pub enum Information {
    /// The whole trajectory up to its horizon.
    FullPath(ObservedPath),
    /// Nothing but the elapsed time.
    NoInfo { t: f64 },
    /// Elapsed time plus the initial state.
    NoInfoKnownStart { t: f64, start: usize },
}

impl Information {
    pub fn time(&self) -> f64 {
        match self {
            Information::FullPath(p) => p.horizon(),
            Information::NoInfo { t } | Information::NoInfoKnownStart { t, .. } => *t,
        }
    }
}

/// Which information regime produced a belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeliefRegime {
    FullObservation,
    NoObservation,
    NoObservationKnownStart,
}

/// Time-t Bayesian state: per-state switching probabilities (undefined where
/// the conditioning event is impossible) and the state distribution given
/// that no absorption has happened.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub t: f64,
    /// s_j(t) for each transient state; `None` where both regime likelihoods
    /// vanish (the state cannot be reached under either regime).
    pub switching: Vec<Option<f64>>,
    /// Distribution over transient states given survival to `t`.
    pub distribution: Vec<f64>,
    pub regime: BeliefRegime,
}

impl BeliefState {
    /// The time-zero belief is the model prior itself, exactly.
    pub fn initial(model: &MixtureModel) -> Self {
        BeliefState {
            t: 0.0,
            switching: model.switching.iter().map(|&s| Some(s)).collect(),
            distribution: model.initial.clone(),
            regime: BeliefRegime::NoObservation,
        }
    }

    /// Assemble a belief from raw parts; used by callers that maintain their
    /// own conditioning.
    pub fn from_parts(t: f64, switching: Vec<Option<f64>>, distribution: Vec<f64>) -> Self {
        BeliefState {
            t,
            switching,
            distribution,
            regime: BeliefRegime::NoObservation,
        }
    }

    /// Switching probability at a state, erring on undefined entries.
    pub fn switching_at(&self, state: usize) -> Result<f64, ObservationError> {
        self.switching.get(state).copied().flatten().ok_or_else(|| {
            ObservationError::ImpossibleObservation(format!(
                "switching probability is undefined at state index {state}"
            ))
        })
    }
}

/// Per-state numerators of the posterior: regime-1 part and regime-0 part.
/// Shared by the switching and state updates.
fn posterior_numerators(
    model: &MixtureModel,
    info: &Information,
) -> Result<(Vec<f64>, Vec<f64>), ObservationError> {
    let m = model.transient_count();
    match info {
        Information::FullPath(path) => {
            path.check_against(model)?;
            let stats = path_stats(path, m + 1)?;
            let start = path.initial_state();
            if start >= m {
                return Err(ObservationError::InconsistentPath(
                    "the path starts in the absorbing state".into(),
                ));
            }
            let prior = model.initial[start];
            if prior <= 0.0 {
                return Err(ObservationError::InconsistentPath(format!(
                    "the path starts in '{}' which has zero initial probability",
                    model.space.label(start)
                )));
            }
            let lik1 = path_likelihood(&stats, &model.intensity_regime1())?;
            let lik0 = path_likelihood(&stats, &model.intensity_regime0())?;
            let s0 = model.switching[start];
            let mut one = vec![0.0; m];
            let mut zero = vec![0.0; m];
            let terminal = stats.terminal_state;
            if terminal < m {
                one[terminal] = prior * s0 * lik1;
                zero[terminal] = prior * (1.0 - s0) * lik0;
            }
            Ok((one, zero))
        }
        Information::NoInfo { t } => {
            numerators_from_exponentials(model, *t, &model.initial, &model.switching)
        }
        Information::NoInfoKnownStart { t, start } => {
            if *start >= m {
                return Err(ObservationError::InconsistentPath(format!(
                    "known start index {start} is not a transient state"
                )));
            }
            let mut pinned = vec![0.0; m];
            pinned[*start] = 1.0;
            numerators_from_exponentials(model, *t, &pinned, &model.switching)
        }
    }
}

fn numerators_from_exponentials(
    model: &MixtureModel,
    t: f64,
    prior: &[f64],
    switching: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ObservationError> {
    if !t.is_finite() || t < 0.0 {
        return Err(ObservationError::MalformedPath(format!(
            "conditioning time must be finite and >= 0, got {t}"
        )));
    }
    let m = model.transient_count();
    // full-state-space exponentials, read on the transient block
    let p1 = expm(&model.intensity_regime1(), t)?;
    let p0 = expm(&model.intensity_regime0(), t)?;
    let mut one = vec![0.0; m];
    let mut zero = vec![0.0; m];
    for i in 0..m {
        let w = prior[i];
        if w == 0.0 {
            continue;
        }
        let s = switching[i];
        for j in 0..m {
            one[j] += w * s * p1[(i, j)];
            zero[j] += w * (1.0 - s) * p0[(i, j)];
        }
    }
    Ok((one, zero))
}

/// Posterior regime-1 probability per terminal state. Entries are `None`
/// where the conditioning event has zero probability under both regimes.
pub fn switching_update(
    model: &MixtureModel,
    info: &Information,
) -> Result<Vec<Option<f64>>, ObservationError> {
    if info.time() == 0.0 {
        // the time-zero posterior is the prior by definition
        return Ok(model.switching.iter().map(|&s| Some(s)).collect());
    }
    let (one, zero) = posterior_numerators(model, info)?;
    Ok(one
        .iter()
        .zip(&zero)
        .map(|(&n1, &n0)| {
            let den = n1 + n0;
            if den > 0.0 {
                Some(n1 / den)
            } else {
                None
            }
        })
        .collect())
}

/// Posterior state distribution given survival to the conditioning time.
pub fn state_update(
    model: &MixtureModel,
    info: &Information,
) -> Result<Vec<f64>, ObservationError> {
    if info.time() == 0.0 {
        return Ok(model.initial.clone());
    }
    let (one, zero) = posterior_numerators(model, info)?;
    let weights: Vec<f64> = one.iter().zip(&zero).map(|(a, b)| a + b).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(ObservationError::ImpossibleObservation(
            "survival to the conditioning time has zero probability".into(),
        ));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Both updates bundled with their provenance tag.
pub fn belief_state(
    model: &MixtureModel,
    info: &Information,
) -> Result<BeliefState, ObservationError> {
    let regime = match info {
        Information::FullPath(_) => BeliefRegime::FullObservation,
        Information::NoInfo { .. } => BeliefRegime::NoObservation,
        Information::NoInfoKnownStart { .. } => BeliefRegime::NoObservationKnownStart,
    };
    Ok(BeliefState {
        t: info.time(),
        switching: switching_update(model, info)?,
        distribution: state_update(model, info)?,
        regime,
    })
}

/// Parse the path CSV: header `time,state`, one row per epoch starting at
/// time 0, and a final `horizon,<t>` directive.
pub fn parse_path_csv(
    text: &str,
    space: &crate::model::StateSpace,
) -> Result<ObservedPath, ObservationError> {
    let mut epochs = Vec::new();
    let mut states = Vec::new();
    let mut horizon: Option<f64> = None;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines
        .next()
        .ok_or_else(|| ObservationError::MalformedPath("empty path file".into()))?;
    if header.trim().to_lowercase() != "time,state" {
        return Err(ObservationError::MalformedPath(format!(
            "expected header 'time,state', got '{}'",
            header.trim()
        )));
    }

    for (idx, line) in lines {
        let line_no = idx + 1;
        let mut parts = line.splitn(2, ',');
        let first = parts.next().unwrap_or("").trim();
        let second = parts
            .next()
            .ok_or_else(|| {
                ObservationError::MalformedPath(format!("line {line_no}: expected two fields"))
            })?
            .trim();
        if horizon.is_some() {
            return Err(ObservationError::MalformedPath(format!(
                "line {line_no}: rows after the horizon directive"
            )));
        }
        if first.eq_ignore_ascii_case("horizon") {
            let t: f64 = second.parse().map_err(|_| {
                ObservationError::MalformedPath(format!("line {line_no}: bad horizon '{second}'"))
            })?;
            horizon = Some(t);
            continue;
        }
        let time: f64 = first.parse().map_err(|_| {
            ObservationError::MalformedPath(format!("line {line_no}: bad time '{first}'"))
        })?;
        let state = space.index_of(second).ok_or_else(|| {
            ObservationError::InconsistentPath(format!(
                "line {line_no}: unknown state label '{second}'"
            ))
        })?;
        epochs.push(time);
        states.push(state);
    }

    let horizon = horizon.ok_or_else(|| {
        ObservationError::MalformedPath("missing final 'horizon,<t>' directive".into())
    })?;
    ObservedPath::new(epochs, states, horizon)
}
