//! Monte Carlo oracle: samples the mixture process and produces empirical
//! estimates with standard errors for every analytic quantity.
//!
//! Reproducibility contract: each replicate draws from a ChaCha8 stream whose
//! key is `seed_from_u64(seed)` and whose stream id is the replicate index.
//! Estimators aggregate integer indicator counts, so results are bit-for-bit
//! identical across runs and across any parallel execution width.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::distributions::TimeGrid;
use crate::model::MixtureModel;
use crate::observation::ObservedPath;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("conditioning event was never hit within {0} replicates")]
    EmptyConditioning(u64),
}

/// Conditioning applied by rejection: the path must be alive at `time`, and
/// optionally sit in a specific state there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCondition {
    pub time: f64,
    pub state: Option<usize>,
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub replicates: u64,
    pub seed: u64,
    /// Hard horizon; paths still unabsorbed here park and report
    /// infinite exit times. Defaults to `100 / (smallest positive exit rate)`.
    pub horizon_cap: Option<f64>,
    pub condition: Option<PathCondition>,
}

impl SimConfig {
    pub fn new(replicates: u64, seed: u64) -> Self {
        SimConfig {
            replicates,
            seed,
            horizon_cap: None,
            condition: None,
        }
    }

    pub fn with_condition(mut self, condition: PathCondition) -> Self {
        self.condition = Some(condition);
        self
    }
}

/// One sampled trajectory with its regime draw and first-entry times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    /// 0 or 1: which underlying process the path follows.
    pub regime: u8,
    pub epochs: Vec<f64>,
    pub states: Vec<usize>,
    /// First entry time into each exit set; infinite if not reached before
    /// the horizon cap.
    pub exit_times: Vec<f64>,
    /// True when the path was cut off at the horizon cap.
    pub capped: bool,
}

impl SampledPath {
    /// State occupied at `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        let mut state = self.states[0];
        for (e, s) in self.epochs.iter().zip(&self.states) {
            if *e <= t {
                state = *s;
            } else {
                break;
            }
        }
        state
    }

    /// The trajectory truncated at `t`, as an observation record.
    pub fn observed_until(&self, t: f64) -> ObservedPath {
        let mut epochs = Vec::new();
        let mut states = Vec::new();
        for (e, s) in self.epochs.iter().zip(&self.states) {
            if *e <= t {
                epochs.push(*e);
                states.push(*s);
            }
        }
        ObservedPath::new(epochs, states, t).expect("a sampled prefix is a valid path")
    }
}

/// The replicate RNG: one independent ChaCha8 stream per replicate index.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    // 53 uniformly random mantissa bits in [0, 1)
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Per-state jump table of one regime: outgoing targets with rates.
struct JumpTable {
    total_rate: Vec<f64>,
    targets: Vec<Vec<(usize, f64)>>,
}

impl JumpTable {
    fn new(intensity: &crate::matrix::Matrix) -> Self {
        let n = intensity.rows();
        let mut total_rate = vec![0.0; n];
        let mut targets = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j && intensity[(i, j)] > 0.0 {
                    targets[i].push((j, intensity[(i, j)]));
                    total_rate[i] += intensity[(i, j)];
                }
            }
        }
        JumpTable {
            total_rate,
            targets,
        }
    }
}

/// Precomputed sampling machinery for a model.
pub struct Sampler {
    regimes: [JumpTable; 2],
    initial_cdf: Vec<f64>,
    switching: Vec<f64>,
    exit_membership: Vec<Vec<bool>>,
    absorbing: usize,
    cap: f64,
}

impl Sampler {
    pub fn new(model: &MixtureModel, config: &SimConfig) -> Result<Self, SimError> {
        if config.replicates < 1 {
            return Err(SimError::BadConfig(
                "at least one replicate is required".into(),
            ));
        }
        let cap = match config.horizon_cap {
            Some(c) if c > 0.0 && c.is_finite() => c,
            Some(c) => {
                return Err(SimError::BadConfig(format!(
                    "horizon cap must be > 0, got {c}"
                )))
            }
            None => default_horizon_cap(model),
        };
        let m = model.transient_count();
        let mut cdf = Vec::with_capacity(m);
        let mut acc = 0.0;
        for &p in &model.initial {
            acc += p;
            cdf.push(acc);
        }
        let n_sets = model.exits.count();
        let membership = (0..=m)
            .map(|state| {
                (0..n_sets)
                    .map(|k| model.exits.contains(k, state))
                    .collect()
            })
            .collect();
        Ok(Sampler {
            regimes: [
                JumpTable::new(&model.intensity_regime0()),
                JumpTable::new(&model.intensity_regime1()),
            ],
            initial_cdf: cdf,
            switching: model.switching.clone(),
            exit_membership: membership,
            absorbing: m,
            cap,
        })
    }

    pub fn horizon_cap(&self) -> f64 {
        self.cap
    }

    fn draw_initial(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = uniform(rng);
        for (i, &c) in self.initial_cdf.iter().enumerate() {
            if u < c {
                return i;
            }
        }
        self.initial_cdf.len() - 1
    }

    /// Sample one trajectory: draw the starting state, then the regime, then
    /// run the chosen Markov jump process until absorption or the cap.
    /// States with zero total rate park in place until the cap.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> SampledPath {
        let start = self.draw_initial(rng);
        let regime = if uniform(rng) < self.switching[start] {
            1u8
        } else {
            0u8
        };
        let table = &self.regimes[regime as usize];

        let n_sets = self.exit_membership[0].len();
        let mut exit_times = vec![f64::INFINITY; n_sets];
        let record_entry = |state: usize, time: f64, exit_times: &mut Vec<f64>| {
            for (k, t) in exit_times.iter_mut().enumerate() {
                if t.is_infinite() && self.exit_membership[state][k] {
                    *t = time;
                }
            }
        };

        let mut epochs = vec![0.0];
        let mut states = vec![start];
        let mut now = 0.0;
        let mut here = start;
        record_entry(here, 0.0, &mut exit_times);
        let mut capped = false;
        loop {
            if here == self.absorbing {
                break;
            }
            let rate = table.total_rate[here];
            if rate <= 0.0 {
                // stayer: never leaves
                capped = true;
                break;
            }
            let hold = -(1.0 - uniform(rng)).ln() / rate;
            now += hold;
            if now >= self.cap {
                capped = true;
                break;
            }
            let mut pick = uniform(rng) * rate;
            let choices = &table.targets[here];
            let mut next = choices[choices.len() - 1].0;
            for &(j, r) in choices {
                if pick < r {
                    next = j;
                    break;
                }
                pick -= r;
            }
            here = next;
            epochs.push(now);
            states.push(here);
            record_entry(here, now, &mut exit_times);
        }
        SampledPath {
            regime,
            epochs,
            states,
            exit_times,
            capped,
        }
    }
}

/// Default hard horizon: long enough that only pathological mover-stayer
/// paths ever hit it.
pub fn default_horizon_cap(model: &MixtureModel) -> f64 {
    let mut min_rate = f64::INFINITY;
    for g in [&model.generators.a, &model.generators.b] {
        for i in 0..g.rows().min(g.cols()) {
            let rate = -g[(i, i)];
            if rate > 0.0 {
                min_rate = min_rate.min(rate);
            }
        }
    }
    if min_rate.is_finite() {
        100.0 / min_rate
    } else {
        100.0
    }
}

/// Convenience single-path sampler used by tests and examples.
pub fn sample_path(model: &MixtureModel, rng: &mut ChaCha8Rng) -> Result<SampledPath, SimError> {
    let sampler = Sampler::new(model, &SimConfig::new(1, 0))?;
    Ok(sampler.sample(rng))
}

/// An indicator-mean estimate with its binomial standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// Paths passing the conditioning event (the effective sample size).
    pub accepted: u64,
    pub replicates: u64,
    /// Paths cut off at the horizon cap among the accepted ones.
    pub capped_paths: u64,
    pub warnings: Vec<String>,
}

fn finish_estimate(hits: u64, accepted: u64, capped: u64, replicates: u64) -> Estimate {
    let p = hits as f64 / accepted as f64;
    let se = if accepted > 1 {
        (p * (1.0 - p) / accepted as f64).sqrt()
    } else {
        0.0
    };
    let mut warnings = Vec::new();
    if accepted <= 1 {
        warnings.push("standard error is undefined with fewer than two accepted paths".into());
    }
    if capped > 0 {
        warnings.push(format!(
            "{capped} accepted path(s) hit the horizon cap; exit times were treated as infinite"
        ));
    }
    Estimate {
        value: p,
        std_error: se,
        accepted,
        replicates,
        capped_paths: capped,
        warnings,
    }
}

fn accepts(condition: &Option<PathCondition>, path: &SampledPath, absorbing: usize) -> bool {
    match condition {
        None => true,
        Some(c) => {
            let state = path.state_at(c.time);
            match c.state {
                Some(target) => state == target,
                None => state != absorbing,
            }
        }
    }
}

/// Run the sampler over all replicates in parallel, folding integer counts.
/// `classify` maps an accepted path to the number of indicator hits (0 or 1).
fn indicator_estimate<F>(
    model: &MixtureModel,
    config: &SimConfig,
    classify: F,
) -> Result<(u64, u64, u64), SimError>
where
    F: Fn(&SampledPath) -> bool + Sync,
{
    let sampler = Sampler::new(model, config)?;
    let absorbing = model.space.absorbing();
    let (hits, accepted, capped) = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(config.seed, r);
            let path = sampler.sample(&mut rng);
            if !accepts(&config.condition, &path, absorbing) {
                return (0u64, 0u64, 0u64);
            }
            let hit = u64::from(classify(&path));
            (hit, 1u64, u64::from(path.capped))
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    if accepted == 0 {
        return Err(SimError::EmptyConditioning(config.replicates));
    }
    Ok((hits, accepted, capped))
}

/// Empirical joint survival: the fraction of accepted paths whose exit times
/// all exceed the grid.
pub fn empirical_joint_survival(
    model: &MixtureModel,
    config: &SimConfig,
    grid: &TimeGrid,
) -> Result<Estimate, SimError> {
    if config.replicates < 100 {
        return Err(SimError::BadConfig(
            "joint-survival estimation needs at least 100 replicates".into(),
        ));
    }
    if grid.times().len() != model.exits.count() {
        return Err(SimError::BadConfig(format!(
            "grid has {} times but the model has {} exit sets",
            grid.times().len(),
            model.exits.count()
        )));
    }
    let times = grid.times().to_vec();
    let (hits, accepted, capped) = indicator_estimate(model, config, move |path| {
        path.exit_times.iter().zip(&times).all(|(tau, t)| tau > t)
    })?;
    Ok(finish_estimate(hits, accepted, capped, config.replicates))
}

/// Empirical mass of simultaneous exits. Simultaneous entry is an event of
/// the embedded chain, so `tol_equal = 0` (exact equality) is well defined.
pub fn empirical_singular_mass(
    model: &MixtureModel,
    config: &SimConfig,
    tol_equal: f64,
) -> Result<Estimate, SimError> {
    if model.exits.count() != 2 {
        return Err(SimError::BadConfig(format!(
            "singular mass needs exactly 2 exit sets, model has {}",
            model.exits.count()
        )));
    }
    let (hits, accepted, capped) = indicator_estimate(model, config, move |path| {
        let (t1, t2) = (path.exit_times[0], path.exit_times[1]);
        t1.is_finite() && t2.is_finite() && (t1 - t2).abs() <= tol_equal
    })?;
    Ok(finish_estimate(hits, accepted, capped, config.replicates))
}

/// Cause-specific first-exit estimate with tie accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetingRisksEstimate {
    /// `P{window_start <= min tau < window_end, argmin = cause}` with ties
    /// assigned to the smallest index.
    pub estimate: Estimate,
    /// Fraction of accepted paths whose first exit was a tie.
    pub tie_fraction: f64,
}

/// Empirical competing-risks proportion for `cause` over `[window_start,
/// window_end)`.
pub fn empirical_competing_risks(
    model: &MixtureModel,
    config: &SimConfig,
    window_start: f64,
    window_end: f64,
    cause: usize,
) -> Result<CompetingRisksEstimate, SimError> {
    if !(window_end > window_start) {
        return Err(SimError::BadConfig(format!(
            "window end {window_end} must exceed window start {window_start}"
        )));
    }
    if cause >= model.exits.count() {
        return Err(SimError::BadConfig(format!(
            "cause index {cause} out of range"
        )));
    }

    let sampler = Sampler::new(model, config)?;
    let absorbing = model.space.absorbing();
    let (hits, ties, accepted, capped) = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(config.seed, r);
            let path = sampler.sample(&mut rng);
            if !accepts(&config.condition, &path, absorbing) {
                return (0u64, 0u64, 0u64, 0u64);
            }
            let min_tau = path
                .exit_times
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let winners: Vec<usize> = path
                .exit_times
                .iter()
                .enumerate()
                .filter(|(_, &t)| t == min_tau && t.is_finite())
                .map(|(k, _)| k)
                .collect();
            let tie = u64::from(winners.len() > 1);
            let in_window = min_tau >= window_start && min_tau < window_end;
            let hit = u64::from(in_window && winners.first() == Some(&cause));
            (hit, tie, 1u64, u64::from(path.capped))
        })
        .reduce(
            || (0, 0, 0, 0),
            |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2, x.3 + y.3),
        );
    if accepted == 0 {
        return Err(SimError::EmptyConditioning(config.replicates));
    }
    Ok(CompetingRisksEstimate {
        estimate: finish_estimate(hits, accepted, capped, config.replicates),
        tie_fraction: ties as f64 / accepted as f64,
    })
}
