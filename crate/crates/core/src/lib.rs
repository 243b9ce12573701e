//! Heterogeneous combined payoff-and-strategy reinforcement learning for
//! two-player zero-sum stochastic games.
//!
//! - [`game`]: the game model, mixed strategies and payoff sampling.
//! - [`equilibrium`]: exact saddle points and logit equilibria.
//! - [`learners`]: the CRL0, CRL1, CRL2, RL2 and RL3 updates and rate schedules.
//! - [`ode`]: deterministic mean dynamics, an RK4 integrator and closed-form solutions.
//! - [`sim`]: seeded learning episodes, aggregation and ODE comparison.
//! - [`config`]: the TOML experiment file.
//! - [`output`]: trajectory CSV files.

pub mod config;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod learners;
pub mod ode;
pub mod output;
pub mod rng;
pub mod sim;

pub use config::ExperimentConfig;
pub use equilibrium::{solve_logit, solve_saddle, LogitEquilibrium, SaddleSolution};
pub use error::{Error, Result};
pub use game::{GameSpec, MixedStrategy, NoiseModel, PayoffMatrix, Player};
pub use learners::{LearnerConfig, LearnerState, RateSchedule, Scheme};
pub use ode::{DynamicsSystem, OdeState, SystemKind};
pub use rng::RandomSource;
pub use sim::{AggregateReport, Experiment, Record, Trajectory};
