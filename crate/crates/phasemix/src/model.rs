//! Mixture-model definition and validation.
//!
//! A model couples a finite state space (transient states plus one absorbing
//! state) with two phase generators moving at different speeds, an initial
//! distribution, per-state switching probabilities, and a family of
//! stochastically closed exit sets whose first-entry times form the joint
//! exit-time vector.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{rcond, Matrix, RCOND_TOL};

/// Tolerance applied to probability sums and generator row sums; model files
/// are human-written decimals.
pub const VALIDATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Semantic(String),
    #[error("model is invalid:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A single validation failure, tied to the field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Finite state space: `m` transient states followed by one absorbing state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    /// Labels include the absorbing state as the last entry.
    pub fn new(labels: Vec<String>) -> Result<Self, ModelError> {
        if labels.len() < 2 {
            return Err(ModelError::Semantic(
                "state space needs at least one transient and one absorbing label".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(ModelError::Semantic(format!("duplicate state label '{l}'")));
            }
        }
        Ok(StateSpace { labels })
    }

    /// Number of transient states.
    pub fn transient_count(&self) -> usize {
        self.labels.len() - 1
    }

    /// Index of the absorbing state (always the last).
    pub fn absorbing(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// The two phase generators: `a` drives the regime-0 process, `b` the
/// regime-1 process.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPair {
    pub a: Matrix,
    pub b: Matrix,
}

impl GeneratorPair {
    pub fn new(a: Matrix, b: Matrix) -> Self {
        GeneratorPair { a, b }
    }

    /// Build the pair from one phase generator and per-state speed factors:
    /// row i of `b` is `speeds[i]` times row i of `a`. Zero speed gives the
    /// mover-stayer regime that never leaves state i; unit speeds collapse
    /// the mixture to a single Markov process.
    pub fn from_speed_factors(phase: Matrix, speeds: &[f64]) -> Result<Self, ModelError> {
        if !phase.is_square() {
            return Err(ModelError::Semantic(
                "phase generator must be square".into(),
            ));
        }
        if phase.check_finite().is_err() {
            return Err(ModelError::Semantic(
                "phase generator has non-finite entries".into(),
            ));
        }
        for i in 0..phase.rows() {
            let mut row_sum = 0.0;
            for j in 0..phase.cols() {
                let v = phase[(i, j)];
                row_sum += v;
                if (i == j && v > 0.0) || (i != j && v < 0.0) {
                    return Err(ModelError::Semantic(format!(
                        "phase generator sign pattern violated at ({i},{j}) = {v}"
                    )));
                }
            }
            if row_sum > VALIDATION_TOL {
                return Err(ModelError::Semantic(format!(
                    "phase generator row {i} sums to {row_sum} > 0"
                )));
            }
        }
        if phase.rows() != speeds.len() {
            return Err(ModelError::Semantic(format!(
                "speed vector length {} does not match generator dimension {}",
                speeds.len(),
                phase.rows()
            )));
        }
        if let Some(bad) = speeds.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(ModelError::Semantic(format!(
                "speed factors must be >= 0, got {bad}"
            )));
        }
        let b = Matrix::diag(speeds).matmul(&phase);
        Ok(GeneratorPair { a: phase, b })
    }
}

/// Stochastically closed exit sets, stored over full state indices
/// (0..=m, the absorbing state being m). Every set must contain the
/// absorbing state; this is checked rather than implied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitStructure {
    sets: Vec<BTreeSet<usize>>,
    state_count: usize,
}

impl ExitStructure {
    pub fn new(sets: Vec<BTreeSet<usize>>, state_count: usize) -> Result<Self, ModelError> {
        if sets.is_empty() {
            return Err(ModelError::Semantic(
                "at least one exit set is required".into(),
            ));
        }
        for (k, set) in sets.iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&s| s >= state_count) {
                return Err(ModelError::Semantic(format!(
                    "exit set {} references state index {bad} out of range",
                    k + 1
                )));
            }
        }
        Ok(ExitStructure { sets, state_count })
    }

    /// Convenience: sets given over transient indices, absorbing membership
    /// added here.
    pub fn from_transient_members(
        members: Vec<Vec<usize>>,
        transient_count: usize,
    ) -> Result<Self, ModelError> {
        let absorbing = transient_count;
        let sets = members
            .into_iter()
            .map(|m| {
                let mut s: BTreeSet<usize> = m.into_iter().collect();
                s.insert(absorbing);
                s
            })
            .collect();
        ExitStructure::new(sets, transient_count + 1)
    }

    pub fn count(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, k: usize) -> &BTreeSet<usize> {
        &self.sets[k]
    }

    pub fn contains(&self, k: usize, state: usize) -> bool {
        self.sets[k].contains(&state)
    }

    /// Diagonal 0/1 projection onto the transient complement of exit set `k`
    /// (1 exactly at transient states outside the set).
    pub fn projection(&self, k: usize) -> Result<Matrix, ModelError> {
        if k >= self.sets.len() {
            return Err(ModelError::Semantic(format!(
                "exit set index {k} out of range (model has {})",
                self.sets.len()
            )));
        }
        let m = self.state_count - 1;
        let diag: Vec<f64> = (0..m)
            .map(|i| if self.sets[k].contains(&i) { 0.0 } else { 1.0 })
            .collect();
        if diag.iter().all(|&d| d == 0.0) {
            return Err(ModelError::Semantic(format!(
                "exit set {} covers every transient state; its complement is empty",
                k + 1
            )));
        }
        Ok(Matrix::diag(&diag))
    }

    /// Transient states lying outside every exit set.
    pub fn common_complement(&self, transient_count: usize) -> Vec<usize> {
        (0..transient_count)
            .filter(|i| self.sets.iter().all(|s| !s.contains(i)))
            .collect()
    }
}

/// The full mixture model.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub space: StateSpace,
    pub generators: GeneratorPair,
    /// Initial distribution over transient states.
    pub initial: Vec<f64>,
    /// Per-state probability of drawing the regime-1 process at time zero.
    pub switching: Vec<f64>,
    pub exits: ExitStructure,
}

impl MixtureModel {
    pub fn transient_count(&self) -> usize {
        self.space.transient_count()
    }

    /// Extend a phase generator to the full intensity matrix: the absorbing
    /// column absorbs each row's deficit and the absorbing row is zero.
    pub fn extend_generator(phase: &Matrix) -> Matrix {
        let m = phase.rows();
        let mut q = Matrix::zeros(m + 1, m + 1);
        for i in 0..m {
            let mut row_sum = 0.0;
            for j in 0..m {
                q[(i, j)] = phase[(i, j)];
                row_sum += phase[(i, j)];
            }
            q[(i, m)] = -row_sum;
        }
        q
    }

    /// Full intensity matrix of the regime-0 process.
    pub fn intensity_regime0(&self) -> Matrix {
        Self::extend_generator(&self.generators.a)
    }

    /// Full intensity matrix of the regime-1 process.
    pub fn intensity_regime1(&self) -> Matrix {
        Self::extend_generator(&self.generators.b)
    }

    /// Check every structural invariant; an empty list means the model is
    /// sound. Violations are reported all at once rather than failing fast.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = self.transient_count();
        let violation = |field: &str, message: String| Violation {
            field: field.into(),
            message,
        };

        for (name, g) in [("A", &self.generators.a), ("B", &self.generators.b)] {
            if g.rows() != m || g.cols() != m {
                out.push(violation(
                    name,
                    format!("must be {m}x{m}, got {}x{}", g.rows(), g.cols()),
                ));
                continue;
            }
            if let Some((i, j)) = g.find_non_finite() {
                out.push(violation(name, format!("non-finite entry at ({i},{j})")));
                continue;
            }
            for i in 0..m {
                let mut row_sum = 0.0;
                for j in 0..m {
                    let v = g[(i, j)];
                    row_sum += v;
                    if i == j && v > 0.0 {
                        out.push(violation(
                            name,
                            format!("diagonal must be <= 0, entry ({i},{i}) = {v}"),
                        ));
                    }
                    if i != j && v < 0.0 {
                        out.push(violation(
                            name,
                            format!("off-diagonal must be >= 0, entry ({i},{j}) = {v}"),
                        ));
                    }
                }
                if row_sum > VALIDATION_TOL {
                    out.push(violation(name, format!("row {i} sums to {row_sum} > 0")));
                }
            }
            // absorption must be certain: generator nonsingular
            match rcond(g) {
                Ok(rc) if rc < RCOND_TOL => out.push(violation(
                    name,
                    format!("singular to tolerance (rcond = {rc:.3e}); absorption is not certain"),
                )),
                Ok(_) => {}
                Err(e) => out.push(violation(name, format!("cannot assess conditioning: {e}"))),
            }
        }

        if self.initial.len() != m {
            out.push(violation(
                "pi",
                format!("length {} != transient count {m}", self.initial.len()),
            ));
        } else {
            let mut sum = 0.0;
            for (i, &p) in self.initial.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    out.push(violation("pi", format!("entry {i} = {p} outside [0,1]")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > VALIDATION_TOL {
                out.push(violation("pi", format!("entries sum to {sum}, expected 1")));
            }
        }

        if self.switching.len() != m {
            out.push(violation(
                "s",
                format!("length {} != transient count {m}", self.switching.len()),
            ));
        } else {
            for (i, &p) in self.switching.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    out.push(violation("s", format!("entry {i} = {p} outside [0,1]")));
                }
            }
        }

        // exit sets: absorbing membership, common intersection, closedness
        let absorbing = self.space.absorbing();
        let mut common: BTreeSet<usize> = (0..=absorbing).collect();
        for (k, set) in self.exits.sets.iter().enumerate() {
            let field = format!("closed_sets[{}]", k + 1);
            if !set.contains(&absorbing) {
                out.push(violation(&field, "must contain the absorbing state".into()));
            }
            if (0..m).all(|i| set.contains(&i)) {
                out.push(violation(
                    &field,
                    "covers every transient state; complement is empty".into(),
                ));
            }
            common = common.intersection(set).copied().collect();
            for (gname, g) in [("A", &self.generators.a), ("B", &self.generators.b)] {
                if g.rows() != m || g.cols() != m {
                    continue;
                }
                for &i in set.iter().filter(|&&i| i < m) {
                    for j in (0..m).filter(|j| !set.contains(j)) {
                        if g[(i, j)] != 0.0 {
                            out.push(violation(
                                &field,
                                format!(
                                    "not closed under {gname}: rate {} from '{}' to '{}'",
                                    g[(i, j)],
                                    self.space.label(i),
                                    self.space.label(j)
                                ),
                            ));
                        }
                    }
                }
            }
        }
        if common != BTreeSet::from([absorbing]) {
            out.push(violation(
                "closed_sets",
                "the intersection of all exit sets must be exactly the absorbing state".into(),
            ));
        }

        // initial mass must avoid every exit set so exit times are positive
        if self.initial.len() == m {
            for (i, &p) in self.initial.iter().enumerate() {
                if p > 0.0 {
                    for (k, set) in self.exits.sets.iter().enumerate() {
                        if set.contains(&i) {
                            out.push(violation(
                                "pi",
                                format!(
                                    "positive mass on '{}' which already lies in exit set {}",
                                    self.space.label(i),
                                    k + 1
                                ),
                            ));
                        }
                    }
                }
            }
        }

        out
    }

    /// Validate and wrap violations as an error.
    pub fn require_valid(&self) -> Result<(), ModelError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    /// Parse the JSON model document.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn to_json(&self) -> String {
        let m = self.transient_count();
        let file = ModelFile {
            states: self.space.labels().to_vec(),
            a: matrix_to_rows(&self.generators.a),
            b: Some(matrix_to_rows(&self.generators.b)),
            psi: None,
            pi: self.initial.clone(),
            s: self.switching.clone(),
            closed_sets: self
                .exits
                .sets
                .iter()
                .map(|set| {
                    set.iter()
                        .filter(|&&i| i < m)
                        .map(|&i| self.space.label(i).to_string())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// On-disk schema. `B` and `psi` are mutually exclusive ways of giving the
/// second generator.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    states: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    psi: Option<Vec<f64>>,
    pi: Vec<f64>,
    s: Vec<f64>,
    closed_sets: Vec<Vec<String>>,
}

impl ModelFile {
    fn into_model(self) -> Result<MixtureModel, ModelError> {
        let space = StateSpace::new(self.states)?;
        let m = space.transient_count();
        let a = rows_to_matrix(&self.a, "A")?;
        let b = match (self.b, self.psi) {
            (Some(rows), None) => rows_to_matrix(&rows, "B")?,
            (None, Some(psi)) => GeneratorPair::from_speed_factors(a.clone(), &psi)?.b,
            (Some(_), Some(_)) => {
                return Err(ModelError::Semantic(
                    "give either 'B' or 'psi', not both".into(),
                ))
            }
            (None, None) => {
                return Err(ModelError::Semantic(
                    "one of 'B' or 'psi' is required".into(),
                ))
            }
        };
        let mut sets = Vec::with_capacity(self.closed_sets.len());
        for (k, labels) in self.closed_sets.iter().enumerate() {
            let mut set = BTreeSet::new();
            for l in labels {
                let idx = space.index_of(l).ok_or_else(|| {
                    ModelError::Semantic(format!(
                        "closed_sets[{}]: unknown state label '{l}'",
                        k + 1
                    ))
                })?;
                if idx == space.absorbing() {
                    // absorbing membership is implicit; listing it is allowed
                    continue;
                }
                set.insert(idx);
            }
            set.insert(space.absorbing());
            sets.push(set);
        }
        let exits = ExitStructure::new(sets, m + 1)?;
        Ok(MixtureModel {
            space,
            generators: GeneratorPair::new(a, b),
            initial: self.pi,
            switching: self.s,
            exits,
        })
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], name: &str) -> Result<Matrix, ModelError> {
    Matrix::from_rows(rows).map_err(|e| ModelError::Semantic(format!("{name}: {e}")))
}

/// The three-state exponential-race example: from the single free state the
/// process exits to either closed set, never both at once.
pub fn exponential_mixture(
    a: [f64; 2],
    b: [f64; 2],
    s: [f64; 3],
) -> Result<MixtureModel, ModelError> {
    if a.iter()
        .chain(b.iter())
        .any(|&r| !(r > 0.0) || !r.is_finite())
    {
        return Err(ModelError::Semantic(
            "rates must be positive and finite".into(),
        ));
    }
    if s.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(ModelError::Semantic(
            "switching probabilities must lie in [0,1]".into(),
        ));
    }
    let gen = |r: [f64; 2]| {
        Matrix::from_rows(&[
            [-(r[0] + r[1]), r[0], r[1]],
            [0.0, -r[1], 0.0],
            [0.0, 0.0, -r[0]],
        ])
        .expect("fixed shape")
    };
    build_three_state(gen(a), gen(b), s)
}

/// The shared-shock example: the free state also carries a direct absorbing
/// rate, so both exit clocks can ring at the same instant.
pub fn marshall_olkin_mixture(
    a: [f64; 3],
    b: [f64; 3],
    s: [f64; 3],
) -> Result<MixtureModel, ModelError> {
    if a[..2]
        .iter()
        .chain(b[..2].iter())
        .any(|&r| !(r > 0.0) || !r.is_finite())
    {
        return Err(ModelError::Semantic(
            "rates must be positive and finite".into(),
        ));
    }
    if a[2] < 0.0 || b[2] < 0.0 || !a[2].is_finite() || !b[2].is_finite() {
        return Err(ModelError::Semantic(
            "shared-shock rates must be >= 0 and finite".into(),
        ));
    }
    if s.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(ModelError::Semantic(
            "switching probabilities must lie in [0,1]".into(),
        ));
    }
    let gen = |r: [f64; 3]| {
        Matrix::from_rows(&[
            [-(r[0] + r[1] + r[2]), r[0], r[1]],
            [0.0, -(r[1] + r[2]), 0.0],
            [0.0, 0.0, -(r[0] + r[2])],
        ])
        .expect("fixed shape")
    };
    build_three_state(gen(a), gen(b), s)
}

fn build_three_state(a: Matrix, b: Matrix, s: [f64; 3]) -> Result<MixtureModel, ModelError> {
    let space = StateSpace::new(vec!["1".into(), "2".into(), "3".into(), "D".into()])?;
    let exits = ExitStructure::from_transient_members(vec![vec![1], vec![2]], 3)?;
    let model = MixtureModel {
        space,
        generators: GeneratorPair::new(a, b),
        initial: vec![1.0, 0.0, 0.0],
        switching: s.to_vec(),
        exits,
    };
    model.require_valid()?;
    Ok(model)
}
