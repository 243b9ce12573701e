//! Zero-sum stochastic game model.
//!
//! The game is a base payoff matrix `M` (rows are player 1 actions, columns
//! are player 2 actions), a constant `c` and an i.i.d. entrywise noise model.
//! Player 1 receives `U = M[a1, a2] + s` and maximizes; player 2 receives
//! `c - U`. The i.i.d. state is the noise draw itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Absolute tolerance on the probability-sum constraint.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over a finite action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, SIMPLEX_TOL)
    }

    /// Validates with a caller-supplied tolerance on the sum (entries must
    /// still lie in `[0, 1]` up to the same tolerance).
    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("mixed strategy needs at least one action"));
        }
        for (a, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < -tol || p > 1.0 + tol {
                return Err(Error::domain(format!("probability {p} at action {a} outside [0, 1]")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Clips negatives and rescales onto the simplex.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self> {
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::domain("non-finite weight"));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || sum <= 0.0 {
            return Err(Error::domain("weights have no positive mass"));
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(Self(probs))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        debug_assert!(Self::with_tolerance(probs.clone(), 1e-9).is_ok(), "{probs:?}");
        Self(probs)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform strategy over zero actions");
        Self(vec![1.0 / n as f64; n])
    }

    /// The unit vector `e_a`.
    pub fn vertex(n: usize, a: usize) -> Result<Self> {
        if a >= n {
            return Err(Error::ActionOutOfRange { action: a, count: n });
        }
        let mut v = vec![0.0; n];
        v[a] = 1.0;
        Ok(Self(v))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&p| p > 0.0)
    }

    /// Sup-norm distance.
    pub fn distance(&self, other: &MixedStrategy) -> f64 {
        sup_distance(&self.0, &other.0)
    }
}

impl std::ops::Index<usize> for MixedStrategy {
    type Output = f64;
    fn index(&self, a: usize) -> &f64 {
        &self.0[a]
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        // Hand-edited config files rarely sum to 1 within 1e-12.
        Self::with_tolerance(v, 1e-9).and_then(|s| Self::normalized(s.0))
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(s: MixedStrategy) -> Vec<f64> {
        s.0
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense row-major payoff matrix; entries are payoffs to player 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PayoffMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::domain("payoff matrix has no rows"));
        }
        let c = rows[0].len();
        if c == 0 {
            return Err(Error::domain("payoff matrix has no columns"));
        }
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != c {
                return Err(Error::domain(format!("row {i} has {} entries, expected {c}", row.len())));
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(Error::domain(format!("non-finite entry {x} in row {i}")));
            }
            data.extend(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `M g`
    pub fn times_col(&self, g: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().zip(g).map(|(m, q)| m * q).sum()).collect()
    }

    /// `fᵀ M`
    pub fn row_times(&self, f: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| f[i] * self.get(i, j)).sum()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for PayoffMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<PayoffMatrix> for Vec<Vec<f64>> {
    fn from(m: PayoffMatrix) -> Self {
        m.to_rows()
    }
}

/// Entrywise payoff perturbation `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseModel {
    #[default]
    None,
    /// i.i.d. uniform on `[lo, hi]` for every entry.
    Uniform { lo: f64, hi: f64 },
}

impl NoiseModel {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let n = NoiseModel::Uniform { lo, hi };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                    Err(Error::domain(format!("noise bounds [{lo}, {hi}] invalid")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            NoiseModel::None => (0.0, 0.0),
            NoiseModel::Uniform { lo, hi } => (lo, hi),
        }
    }

    fn sample(&self, rng: &mut RandomSource) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { lo, hi } => rng.uniform_range(lo, hi),
        }
    }
}

/// Which side of the game a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    /// Row player, maximizer of `M`.
    P1,
    /// Column player, receives `c - U`.
    P2,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::P1 => 1,
            Player::P2 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub matrix: PayoffMatrix,
    #[serde(default)]
    pub constant_c: f64,
    #[serde(default)]
    pub noise: NoiseModel,
}

impl GameSpec {
    pub fn new(matrix: PayoffMatrix, constant_c: f64, noise: NoiseModel) -> Result<Self> {
        if !constant_c.is_finite() {
            return Err(Error::domain("constant c must be finite"));
        }
        noise.validate()?;
        Ok(Self { matrix, constant_c, noise })
    }

    /// Noise-free zero-sum game from matrix rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(PayoffMatrix::from_rows(rows)?, 0.0, NoiseModel::None)
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant_c = c;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn action_count(&self, player: Player) -> usize {
        match player {
            Player::P1 => self.matrix.rows(),
            Player::P2 => self.matrix.cols(),
        }
    }

    /// Inclusive range of realized payoffs a player can observe.
    pub fn payoff_bounds(&self, player: Player) -> (f64, f64) {
        let (lo, hi) = self.noise.bounds();
        let (u_lo, u_hi) = (self.matrix.min() + lo, self.matrix.max() + hi);
        match player {
            Player::P1 => (u_lo, u_hi),
            Player::P2 => (self.constant_c - u_hi, self.constant_c - u_lo),
        }
    }

    fn check_action(&self, player: Player, a: usize) -> Result<()> {
        let count = self.action_count(player);
        if a >= count {
            Err(Error::ActionOutOfRange { action: a, count })
        } else {
            Ok(())
        }
    }

    fn check_dim(&self, player: Player, s: &MixedStrategy) -> Result<()> {
        let expected = self.action_count(player);
        if s.len() != expected {
            Err(Error::Dimension { expected, got: s.len() })
        } else {
            Ok(())
        }
    }

    /// One play of the game: draws the state and returns `(u1, u2)`.
    pub fn sample_payoff(&self, rng: &mut RandomSource, a1: usize, a2: usize) -> Result<(f64, f64)> {
        self.check_action(Player::P1, a1)?;
        self.check_action(Player::P2, a2)?;
        // Only the realized entry of S is observed; drawing it alone has the
        // same law as drawing the whole matrix.
        let u1 = self.matrix.get(a1, a2) + self.noise.sample(rng);
        Ok((u1, self.constant_c - u1))
    }

    /// `E_s E_{f,g} U`, payoff to player 1.
    pub fn expected_value(&self, f: &MixedStrategy, g: &MixedStrategy) -> Result<f64> {
        self.check_dim(Player::P1, f)?;
        self.check_dim(Player::P2, g)?;
        let mg = self.matrix.times_col(g.probs());
        Ok(f.probs().iter().zip(&mg).map(|(p, v)| p * v).sum::<f64>() + self.noise.mean())
    }

    /// Expected payoff to `player` for each of its pure actions against
    /// `opponent`. Player 2's entries are `c - u1`.
    pub fn payoff_vector(&self, player: Player, opponent: &MixedStrategy) -> Result<Vec<f64>> {
        let shift = self.noise.mean();
        match player {
            Player::P1 => {
                self.check_dim(Player::P2, opponent)?;
                Ok(self.matrix.times_col(opponent.probs()).into_iter().map(|v| v + shift).collect())
            }
            Player::P2 => {
                self.check_dim(Player::P1, opponent)?;
                Ok(self.matrix.row_times(opponent.probs()).into_iter().map(|v| self.constant_c - (v + shift)).collect())
            }
        }
    }

    /// `max_a u1(e_a, g) - min_b u1(f, e_b)`; zero exactly at a saddle point.
    pub fn exploitability(&self, f: &MixedStrategy, g: &MixedStrategy) -> Result<f64> {
        self.check_dim(Player::P1, f)?;
        self.check_dim(Player::P2, g)?;
        let best_row = self.matrix.times_col(g.probs()).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let best_col = self.matrix.row_times(f.probs()).into_iter().fold(f64::INFINITY, f64::min);
        // Noise shift cancels; clamp round-off below zero.
        Ok((best_row - best_col).max(0.0))
    }
}
