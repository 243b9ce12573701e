//! Experiment files.
//!
//! ```toml
//! [game]
//! matrix = [[5.0, 2.0], [1.0, 3.0]]     # rows: player 1, columns: player 2
//! c = 6.0                               # player 2 receives c - U (RL2 needs it >= 0)
//! noise = { kind = "uniform", lo = -1.0, hi = 1.0 }
//!
//! [players.p1]
//! scheme = "CRL1"                       # CRL0, CRL1, CRL2, RL2, RL3
//! lambda = { family = "R4", rho = 0.7 } # R1, R2, R3, R4, scaled, constant
//! mu = { family = "R4", rho = 0.55 }
//! epsilon = 0.05
//! initial_strategy = [0.5, 0.5]         # optional, default uniform
//! initial_estimates = [0.0, 0.0]        # optional, default zeros
//!
//! [players.p2]
//! scheme = "RL2"
//! lambda = { family = "R1" }
//!
//! [run]
//! horizon = 8000
//! seeds = [1, 2, 3]
//! record_stride = 10
//!
//! [output]
//! directory = "out/example"
//! plots = false
//!
//! [compare]                             # optional, used by `compare`
//! system = "replicator"
//! max_dt = 1e-3
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, MixedStrategy, NoiseModel, PayoffMatrix, Player};
use crate::learners::{LearnerConfig, RateSchedule, Scheme};
use crate::ode::{DynamicsSystem, SystemKind};
use crate::sim::{Experiment, PlayerSetup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSection,
    pub players: Players,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub matrix: PayoffMatrix,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Players {
    pub p1: PlayerSection,
    pub p2: PlayerSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSection {
    pub scheme: Scheme,
    pub lambda: RateSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<RateSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rl3_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rl3_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_strategy: Option<MixedStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_estimates: Option<Vec<f64>>,
}

impl PlayerSection {
    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            scheme: self.scheme,
            lambda: self.lambda.clone(),
            mu: self.mu.clone(),
            epsilon: self.epsilon,
            rl3_n: self.rl3_n,
            rl3_c: self.rl3_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
}

fn default_stride() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default)]
    pub plots: bool,
}

fn default_directory() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: default_directory(), plots: false }
    }
}

/// The mean ODE a stochastic run is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub system: String,
    /// Defaults to player 1's temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "unit")]
    pub k1: f64,
    #[serde(default = "unit")]
    pub k2: f64,
    #[serde(default = "default_max_dt")]
    pub max_dt: f64,
    /// Whose strategy rate defines the clock.
    #[serde(default = "default_clock")]
    pub clock: Player,
}

fn unit() -> f64 {
    1.0
}

fn default_max_dt() -> f64 {
    1e-3
}

fn default_clock() -> Player {
    Player::P1
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub horizon: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    /// Applied to every temperature in the file.
    pub epsilon: Option<f64>,
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.experiment()?;
        if let Some(c) = &cfg.compare {
            c.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("serialize config: {e}")))
    }

    pub fn spec(&self) -> Result<GameSpec> {
        GameSpec::new(self.game.matrix.clone(), self.game.c, self.game.noise)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(h) = o.horizon {
            self.run.horizon = h;
        }
        if let Some(s) = &o.seeds {
            self.run.seeds = s.clone();
        }
        if let Some(e) = o.epsilon {
            for p in [&mut self.players.p1, &mut self.players.p2] {
                if p.scheme.uses_temperature() || p.epsilon.is_some() {
                    p.epsilon = Some(e);
                }
            }
            if let Some(c) = &mut self.compare {
                c.epsilon = Some(e);
            }
        }
    }

    /// The validated experiment together with the learners' warnings.
    pub fn experiment_with_warnings(&self) -> Result<(Experiment, Vec<String>)> {
        let spec = self.spec()?;
        let setup = |p: &PlayerSection, player: Player| -> PlayerSetup {
            let mut s = PlayerSetup::new(p.learner(), spec.action_count(player));
            if let Some(f) = &p.initial_strategy {
                s = s.starting_at(f.clone());
            }
            if let Some(e) = &p.initial_estimates {
                s = s.with_estimates(e.clone());
            }
            s
        };
        let exp = Experiment {
            p1: setup(&self.players.p1, Player::P1),
            p2: setup(&self.players.p2, Player::P2),
            spec: spec.clone(),
            horizon: self.run.horizon,
            seeds: self.run.seeds.clone(),
            record_stride: self.run.record_stride,
        };
        let warnings = exp.validate()?;
        Ok((exp, warnings))
    }

    pub fn experiment(&self) -> Result<Experiment> {
        Ok(self.experiment_with_warnings()?.0)
    }

    /// The `[compare]` system, or `name` when given.
    pub fn compare_system(&self, name: Option<&str>) -> Result<(DynamicsSystem, CompareSection)> {
        let mut section = self.compare.clone().unwrap_or(CompareSection {
            system: "replicator".into(),
            epsilon: None,
            k1: 1.0,
            k2: 1.0,
            max_dt: default_max_dt(),
            clock: Player::P1,
        });
        if let Some(n) = name {
            section.system = n.to_string();
        }
        section.validate()?;
        let spec = self.spec()?;
        let epsilon = section.epsilon.or(self.players.p1.epsilon).or(self.players.p2.epsilon).unwrap_or(0.05);
        let f0 = self.players.p1.initial_strategy.clone();
        let kind = SystemKind::from_name(&section.system, epsilon, section.k1, section.k2, f0, spec.matrix.rows())?;
        let system = DynamicsSystem::new(kind, spec).map_err(|e| Error::Config(e.to_string()))?;
        Ok((system, section))
    }
}

impl CompareSection {
    fn validate(&self) -> Result<()> {
        if !SystemKind::NAMES.contains(&self.system.as_str()) {
            return Err(Error::Config(format!(
                "unknown system {:?}; expected one of {}",
                self.system,
                SystemKind::NAMES.join(", ")
            )));
        }
        if !(self.max_dt > 0.0) {
            return Err(Error::Config(format!("max_dt = {} must be positive", self.max_dt)));
        }
        Ok(())
    }
}
