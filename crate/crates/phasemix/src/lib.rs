//! Conditional joint phase-type distributions for mixtures of absorbing
//! Markov jump processes.
//!
//! A mixture process follows one of two Markov jump processes on a shared
//! finite state space, picked once at time zero by an unobserved regime
//! variable whose probability depends on the starting state. The process is
//! not Markov, but conditioning on what has been observed gives explicit
//! formulas for everything of interest: transition matrices, survival
//! functions of the absorption time, joint laws of the first-entry times
//! into stochastically closed exit sets (with their simultaneous-exit
//! singular components), Laplace transforms and moments. This crate
//! evaluates all of them, keeps the Bayesian belief over the hidden regime
//! up to date from observations, and ships a deterministic Monte Carlo
//! simulator that doubles as an independent oracle.
//!
//! # Modules
//!
//! - [`matrix`]: dense kernels (matrix exponential, solves, commutators)
//! - [`model`]: model definition, validation, JSON model files
//! - [`observation`]: observed paths, likelihoods, Bayesian belief updates
//! - [`distributions`]: every conditional distributional quantity
//! - [`simulate`]: reproducible Monte Carlo estimation
//! - [`quad`]: adaptive quadrature used for oracle-style checks
//! - [`cli`]: the `phasemix` command-line tool
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example model_validation
//! cargo run --example exponential_mixture
//! cargo run --example marshall_olkin
//! cargo run --example bayesian_updates
//! cargo run --example univariate_quantities
//! cargo run --example competing_risks
//! cargo run --example monte_carlo_verification
//! ```
//!
//! # Quick start
//!
//! ```
//! use phasemix::distributions::{survival_joint, Conditioning, TimeGrid};
//! use phasemix::model::exponential_mixture;
//! use phasemix::observation::BeliefState;
//!
//! let model = exponential_mixture([1.0, 2.0], [3.0, 4.0], [0.3, 0.3, 0.3]).unwrap();
//! let belief = BeliefState::initial(&model);
//! let grid = TimeGrid::new(0.0, vec![0.5, 0.25]).unwrap();
//! let p = survival_joint(&model, &belief, Conditioning::NoExit, &grid).unwrap();
//! assert!(p > 0.0 && p < 1.0);
//! ```

// negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributions;
pub mod matrix;
pub mod model;
pub mod observation;
pub mod quad;
pub mod simulate;

pub use distributions::{Branch, Conditioning, JointEvaluation, TimeGrid};
pub use matrix::Matrix;
pub use model::{ExitStructure, GeneratorPair, MixtureModel, StateSpace};
pub use observation::{BeliefState, Information, ObservedPath, PathStats};
pub use simulate::{SampledPath, SimConfig};
