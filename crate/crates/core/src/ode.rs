//! Mean dynamics of the learning schemes, a fixed-step RK4 integrator and
//! closed-form solutions for frozen or prescribed opponents.
//!
//! State vectors are laid out `[f, g, û1]`; `û1` is present only for the
//! coupled system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, MixedStrategy, Player};
use crate::learners::softmax;

/// Tolerance on payoff ties when forming pure best-response sets.
pub const BR_TIE_TOL: f64 = 1e-9;
/// Renormalize a strategy block once its mass drifts further than this.
pub const RENORM_TOL: f64 = 1e-12;
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum SystemKind {
    /// Both players follow the replicator equation scaled by `k`.
    #[serde(rename = "replicator")]
    Replicator {
        #[serde(default = "one")]
        k: f64,
    },
    /// Payoff-normalized (Maynard-Smith) replicator for both players.
    #[serde(rename = "adjusted_replicator")]
    AdjustedReplicator {
        #[serde(default = "one")]
        k: f64,
    },
    /// `ḟ = k (β1(g) - f)`, `ġ = k (β2(f) - g)`.
    #[serde(rename = "smooth_br")]
    SmoothBr {
        epsilon: f64,
        #[serde(default = "one")]
        k: f64,
    },
    /// Estimates, logit strategy of player 1 and replicator player 2.
    #[serde(rename = "coupled_thm1")]
    CoupledThm1 {
        epsilon: f64,
        #[serde(default = "one")]
        k1: f64,
        #[serde(default = "one")]
        k2: f64,
    },
    /// Slow replicator player 1 against a fast player 2 collapsed to `β2(f)`.
    #[serde(rename = "composite_T1")]
    CompositeT1 { epsilon: f64 },
    /// Smooth-BR player 2 against a player 1 collapsed to its replicator
    /// solution `ξ(a) ∝ f0(a) exp(t u1(e_a, g))`. Non-autonomous.
    #[serde(rename = "composite_T2")]
    CompositeT2 { epsilon: f64, f0: MixedStrategy },
}

fn one() -> f64 {
    1.0
}

impl SystemKind {
    pub const NAMES: [&'static str; 6] =
        ["replicator", "adjusted_replicator", "smooth_br", "coupled_thm1", "composite_T1", "composite_T2"];

    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Replicator { .. } => "replicator",
            SystemKind::AdjustedReplicator { .. } => "adjusted_replicator",
            SystemKind::SmoothBr { .. } => "smooth_br",
            SystemKind::CoupledThm1 { .. } => "coupled_thm1",
            SystemKind::CompositeT1 { .. } => "composite_T1",
            SystemKind::CompositeT2 { .. } => "composite_T2",
        }
    }

    /// Builds a system from its name and the shared knobs. `f0` only matters
    /// for `composite_T2` and defaults to uniform there.
    pub fn from_name(
        name: &str,
        epsilon: f64,
        k1: f64,
        k2: f64,
        f0: Option<MixedStrategy>,
        rows: usize,
    ) -> Result<Self> {
        Ok(match name {
            "replicator" => SystemKind::Replicator { k: k1 },
            "adjusted_replicator" => SystemKind::AdjustedReplicator { k: k1 },
            "smooth_br" => SystemKind::SmoothBr { epsilon, k: k1 },
            "coupled_thm1" => SystemKind::CoupledThm1 { epsilon, k1, k2 },
            "composite_T1" => SystemKind::CompositeT1 { epsilon },
            "composite_T2" => {
                SystemKind::CompositeT2 { epsilon, f0: f0.unwrap_or_else(|| MixedStrategy::uniform(rows)) }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown system {other:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

fn check_positive(what: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} = {x} must be positive")))
    }
}

/// A vector field on `[f, g, û1]` for one game.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSystem {
    pub kind: SystemKind,
    pub spec: GameSpec,
    /// Hold player 2's strategy fixed (`ġ = 0`).
    pub frozen_p2: bool,
}

/// A point on a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeState {
    pub f: MixedStrategy,
    pub g: MixedStrategy,
    pub u_hat1: Option<Vec<f64>>,
    pub time: f64,
}

impl OdeState {
    pub fn new(f: MixedStrategy, g: MixedStrategy) -> Self {
        Self { f, g, u_hat1: None, time: 0.0 }
    }

    pub fn with_estimates(mut self, u_hat1: Vec<f64>) -> Self {
        self.u_hat1 = Some(u_hat1);
        self
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    fn flatten(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.f.len() * 2 + self.g.len());
        y.extend_from_slice(self.f.probs());
        y.extend_from_slice(self.g.probs());
        if let Some(u) = &self.u_hat1 {
            y.extend_from_slice(u);
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub states: Vec<OdeState>,
    /// Largest mass correction applied to a strategy block after one step.
    pub max_drift: f64,
}

impl OdeTrajectory {
    pub fn last(&self) -> &OdeState {
        self.states.last().expect("a trajectory holds at least its initial state")
    }
}

// Slice kernels. RK4 stages are affine combinations of simplex points and
// may sit a rounding error off the simplex, so the fields take raw slices.

fn payoffs(spec: &GameSpec, player: Player, opp: &[f64]) -> Vec<f64> {
    let shift = spec.noise.mean();
    match player {
        Player::P1 => spec.matrix.times_col(opp).into_iter().map(|v| v + shift).collect(),
        Player::P2 => spec.matrix.row_times(opp).into_iter().map(|v| spec.constant_c - (v + shift)).collect(),
    }
}

fn replicator(own: &[f64], u: &[f64]) -> Vec<f64> {
    let avg: f64 = own.iter().zip(u).map(|(p, v)| p * v).sum();
    own.iter().zip(u).map(|(p, v)| p * (v - avg)).collect()
}

fn adjusted(own: &[f64], u: &[f64], k: f64) -> Result<Vec<f64>> {
    let avg: f64 = own.iter().zip(u).map(|(p, v)| p * v).sum();
    if !(avg > 0.0) {
        return Err(Error::domain(format!(
            "average payoff {avg} must be positive for the adjusted replicator; shift payoffs with the constant c"
        )));
    }
    Ok(own.iter().zip(u).map(|(p, v)| k * p * (v - avg) / avg).collect())
}

fn toward(target: &[f64], own: &[f64], k: f64) -> Vec<f64> {
    target.iter().zip(own).map(|(b, p)| k * (b - p)).collect()
}

fn logit(spec: &GameSpec, player: Player, opp: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    Ok(softmax(&payoffs(spec, player, opp), epsilon)?.into_vec())
}

/// `ξ(a) ∝ f0(a) exp(t u1(e_a, g))`.
fn xi_frozen(spec: &GameSpec, f0: &[f64], g: &[f64], t: f64) -> Vec<f64> {
    let exps: Vec<f64> = payoffs(spec, Player::P1, g).into_iter().map(|u| t * u).collect();
    weighted_logit(f0, &exps)
}

/// `w(a) exp(x(a))`, normalized with max-subtraction over the support of `w`.
fn weighted_logit(w: &[f64], x: &[f64]) -> Vec<f64> {
    let top = w.iter().zip(x).filter(|(p, _)| **p > 0.0).map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = w.iter().zip(x).map(|(p, v)| if *p > 0.0 { p * (v - top).exp() } else { 0.0 }).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / z).collect()
}

/// Replicator field `own(a) [u(e_a, opp) - ū]` for `player`.
pub fn replicator_field(spec: &GameSpec, player: Player, own: &MixedStrategy, opp: &MixedStrategy) -> Result<Vec<f64>> {
    let u = spec.payoff_vector(player, opp)?;
    check_len(own, u.len())?;
    Ok(replicator(own.probs(), &u))
}

/// `k own(a) [u(e_a, opp) - ū] / ū`; requires `ū > 0`.
pub fn adjusted_replicator_field(
    spec: &GameSpec,
    player: Player,
    own: &MixedStrategy,
    opp: &MixedStrategy,
    k: f64,
) -> Result<Vec<f64>> {
    let u = spec.payoff_vector(player, opp)?;
    check_len(own, u.len())?;
    adjusted(own.probs(), &u, k)
}

/// `k (β_ε(u(·, opp)) - own)`.
pub fn smooth_br_field(
    spec: &GameSpec,
    player: Player,
    own: &MixedStrategy,
    opp: &MixedStrategy,
    epsilon: f64,
    k: f64,
) -> Result<Vec<f64>> {
    let b = softmax(&spec.payoff_vector(player, opp)?, epsilon)?;
    check_len(own, b.len())?;
    Ok(toward(b.probs(), own.probs(), k))
}

fn check_len(s: &MixedStrategy, n: usize) -> Result<()> {
    if s.len() == n {
        Ok(())
    } else {
        Err(Error::Dimension { expected: n, got: s.len() })
    }
}

/// Time derivative of each block of an [`OdeState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub u_hat1: Vec<f64>,
}

impl StateDerivative {
    pub fn sup_norm(&self) -> f64 {
        self.f.iter().chain(&self.g).chain(&self.u_hat1).fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Coupled estimate/logit/replicator field:
///
/// ```text
/// d û1(a)/dt = u1(e_a, g) - û1(a)
/// ḟ = k1 (β1(g) - f)
/// ġ = k2 g(b) [u2(e_b, f) - ū2]
/// ```
pub fn coupled_thm1_field(
    spec: &GameSpec,
    state: &OdeState,
    epsilon: f64,
    k1: f64,
    k2: f64,
) -> Result<StateDerivative> {
    let u1 = spec.payoff_vector(Player::P1, &state.g)?;
    let u_hat = state.u_hat1.as_ref().ok_or_else(|| Error::domain("coupled system needs payoff estimates"))?;
    if u_hat.len() != u1.len() {
        return Err(Error::Dimension { expected: u1.len(), got: u_hat.len() });
    }
    check_len(&state.f, u1.len())?;
    let b1 = softmax(&u1, epsilon)?;
    let u2 = spec.payoff_vector(Player::P2, &state.f)?;
    Ok(StateDerivative {
        f: toward(b1.probs(), state.f.probs(), k1),
        g: replicator(state.g.probs(), &u2).into_iter().map(|x| k2 * x).collect(),
        u_hat1: u1.iter().zip(u_hat).map(|(u, h)| u - h).collect(),
    })
}

/// Replicator field of player 1 against `β2,ε(f)`.
pub fn composite_t1_field(spec: &GameSpec, f: &MixedStrategy, epsilon: f64) -> Result<Vec<f64>> {
    let b2 = softmax(&spec.payoff_vector(Player::P2, f)?, epsilon)?;
    replicator_field(spec, Player::P1, f, &b2)
}

/// `β2,ε(ξ) - g` with `ξ(a) ∝ f0(a) exp(t u1(e_a, g))`, `t > 0`.
pub fn composite_t2_field(
    spec: &GameSpec,
    g: &MixedStrategy,
    t: f64,
    epsilon: f64,
    f0: &MixedStrategy,
) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::domain(format!(
            "composite_T2 needs t > 0, got {t}: the logit temperature 1/t is undefined"
        )));
    }
    check_len(f0, spec.matrix.rows())?;
    check_len(g, spec.matrix.cols())?;
    let xi = xi_frozen(spec, f0.probs(), g.probs(), t);
    let b2 = logit(spec, Player::P2, &xi, epsilon)?;
    Ok(toward(&b2, g.probs(), 1.0))
}

impl DynamicsSystem {
    pub fn new(kind: SystemKind, spec: GameSpec) -> Result<Self> {
        match &kind {
            SystemKind::Replicator { k } | SystemKind::AdjustedReplicator { k } => check_positive("k", *k)?,
            SystemKind::SmoothBr { epsilon, k } => {
                check_positive("epsilon", *epsilon)?;
                check_positive("k", *k)?;
            }
            SystemKind::CoupledThm1 { epsilon, k1, k2 } => {
                check_positive("epsilon", *epsilon)?;
                check_positive("k1", *k1)?;
                check_positive("k2", *k2)?;
            }
            SystemKind::CompositeT1 { epsilon } => check_positive("epsilon", *epsilon)?,
            SystemKind::CompositeT2 { epsilon, f0 } => {
                check_positive("epsilon", *epsilon)?;
                check_len(f0, spec.matrix.rows())?;
            }
        }
        Ok(Self { kind, spec, frozen_p2: false })
    }

    /// Holds player 2 fixed, as in the closed-form lemmas.
    pub fn with_frozen_p2(mut self) -> Self {
        self.frozen_p2 = true;
        self
    }

    pub fn carries_estimates(&self) -> bool {
        matches!(self.kind, SystemKind::CoupledThm1 { .. })
    }

    pub fn dimension(&self) -> usize {
        let (n1, n2) = (self.spec.matrix.rows(), self.spec.matrix.cols());
        n1 + n2 + if self.carries_estimates() { n1 } else { 0 }
    }

    /// Uniform strategies, zero estimates where carried, `time = 0`.
    pub fn uniform_start(&self) -> OdeState {
        let n1 = self.spec.matrix.rows();
        let s = OdeState::new(MixedStrategy::uniform(n1), MixedStrategy::uniform(self.spec.matrix.cols()));
        if self.carries_estimates() {
            s.with_estimates(vec![0.0; n1])
        } else {
            s
        }
    }

    fn rates(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let spec = &self.spec;
        let (n1, n2) = (spec.matrix.rows(), spec.matrix.cols());
        let (f, rest) = y.split_at(n1);
        let (g, u_hat) = rest.split_at(n2);
        let (mut df, mut dg, mut du) = match &self.kind {
            SystemKind::Replicator { k } => {
                let a = replicator(f, &payoffs(spec, Player::P1, g));
                let b = replicator(g, &payoffs(spec, Player::P2, f));
                (scale(a, *k), scale(b, *k), vec![])
            }
            SystemKind::AdjustedReplicator { k } => (
                adjusted(f, &payoffs(spec, Player::P1, g), *k)?,
                adjusted(g, &payoffs(spec, Player::P2, f), *k)?,
                vec![],
            ),
            SystemKind::SmoothBr { epsilon, k } => (
                toward(&logit(spec, Player::P1, g, *epsilon)?, f, *k),
                toward(&logit(spec, Player::P2, f, *epsilon)?, g, *k),
                vec![],
            ),
            SystemKind::CoupledThm1 { epsilon, k1, k2 } => {
                let u1 = payoffs(spec, Player::P1, g);
                let du = u1.iter().zip(u_hat).map(|(u, h)| u - h).collect();
                let df = toward(&softmax(&u1, *epsilon)?.into_vec(), f, *k1);
                let dg = scale(replicator(g, &payoffs(spec, Player::P2, f)), *k2);
                (df, dg, du)
            }
            SystemKind::CompositeT1 { epsilon } => {
                let b2 = logit(spec, Player::P2, f, *epsilon)?;
                (replicator(f, &payoffs(spec, Player::P1, &b2)), vec![0.0; n2], vec![])
            }
            SystemKind::CompositeT2 { epsilon, f0 } => {
                if !(t > 0.0) {
                    return Err(Error::domain("composite_T2 needs t > 0"));
                }
                let xi = xi_frozen(spec, f0.probs(), g, t);
                (vec![0.0; n1], toward(&logit(spec, Player::P2, &xi, *epsilon)?, g, 1.0), vec![])
            }
        };
        if self.frozen_p2 {
            dg.iter_mut().for_each(|x| *x = 0.0);
        }
        df.append(&mut dg);
        df.append(&mut du);
        Ok(df)
    }

    /// Rewrites the collapsed block of the composite systems from the
    /// integrated one.
    fn project(&self, t: f64, y: &mut [f64]) -> Result<()> {
        let n1 = self.spec.matrix.rows();
        match &self.kind {
            SystemKind::CompositeT1 { epsilon } if !self.frozen_p2 => {
                let b2 = logit(&self.spec, Player::P2, &y[..n1], *epsilon)?;
                y[n1..n1 + b2.len()].copy_from_slice(&b2);
            }
            SystemKind::CompositeT2 { f0, .. } => {
                let xi = xi_frozen(&self.spec, f0.probs(), &y[n1..], t);
                y[..n1].copy_from_slice(&xi);
            }
            _ => {}
        }
        Ok(())
    }

    /// Field at a state.
    pub fn derivative(&self, state: &OdeState) -> Result<StateDerivative> {
        self.check_state(state)?;
        let d = self.rates(state.time, &state.flatten())?;
        let (n1, n2) = (self.spec.matrix.rows(), self.spec.matrix.cols());
        Ok(StateDerivative { f: d[..n1].to_vec(), g: d[n1..n1 + n2].to_vec(), u_hat1: d[n1 + n2..].to_vec() })
    }

    fn check_state(&self, s: &OdeState) -> Result<()> {
        check_len(&s.f, self.spec.matrix.rows())?;
        check_len(&s.g, self.spec.matrix.cols())?;
        match (&s.u_hat1, self.carries_estimates()) {
            (Some(u), true) if u.len() == s.f.len() => Ok(()),
            (Some(u), true) => Err(Error::Dimension { expected: s.f.len(), got: u.len() }),
            (None, true) => Err(Error::domain(format!("{} needs initial payoff estimates", self.kind.name()))),
            (_, false) => Ok(()),
        }
    }

    fn unflatten(&self, y: &[f64], time: f64) -> OdeState {
        let (n1, n2) = (self.spec.matrix.rows(), self.spec.matrix.cols());
        OdeState {
            f: MixedStrategy::from_raw(y[..n1].to_vec()),
            g: MixedStrategy::from_raw(y[n1..n1 + n2].to_vec()),
            u_hat1: self.carries_estimates().then(|| y[n1 + n2..].to_vec()),
            time,
        }
    }

    fn rk4(&self, t: f64, y: &mut [f64], h: f64) -> Result<f64> {
        let wrap = |e: Error| match e {
            e @ Error::Integration { .. } => e,
            other => Error::Integration { time: t, reason: other.to_string() },
        };
        let eval = |tt: f64, yy: &[f64]| -> Result<Vec<f64>> {
            let d = self.rates(tt, yy).map_err(wrap)?;
            if d.iter().any(|x| !x.is_finite()) {
                return Err(Error::Integration { time: tt, reason: "non-finite field value".into() });
            }
            Ok(d)
        };
        let shift = |k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        let k1 = eval(t, y)?;
        let k2 = eval(t + 0.5 * h, &shift(&k1, 0.5 * h))?;
        let k3 = eval(t + 0.5 * h, &shift(&k2, 0.5 * h))?;
        let k4 = eval(t + h, &shift(&k3, h))?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let (n1, n2) = (self.spec.matrix.rows(), self.spec.matrix.cols());
        let drift = restore_simplex(&mut y[..n1]).max(restore_simplex(&mut y[n1..n1 + n2]));
        self.project(t + h, y).map_err(wrap)?;
        Ok(drift)
    }

    /// Fixed-step RK4 from `init` to `t_end`, recording every `stride` steps
    /// and the final state. The step is shrunk at most slightly so the grid
    /// lands on `t_end`.
    pub fn integrate(&self, init: &OdeState, t_end: f64, dt: f64, stride: usize) -> Result<OdeTrajectory> {
        self.check_state(init)?;
        check_positive("dt", dt)?;
        if stride == 0 {
            return Err(Error::domain("record stride must be at least 1"));
        }
        if !(t_end > init.time) {
            return Err(Error::domain(format!("t_end = {t_end} must exceed the start time {}", init.time)));
        }
        if matches!(self.kind, SystemKind::CompositeT2 { .. }) && !(init.time > 0.0) {
            return Err(Error::domain(
                "composite_T2 must start at t0 > 0: the logit temperature 1/t is undefined at 0",
            ));
        }
        let steps = ((t_end - init.time) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (t_end - init.time) / steps as f64;
        let mut y = init.flatten();
        self.project(init.time, &mut y)?;
        let mut states = vec![self.unflatten(&y, init.time)];
        let mut max_drift: f64 = 0.0;
        for i in 1..=steps {
            let t = init.time + (i - 1) as f64 * h;
            max_drift = max_drift.max(self.rk4(t, &mut y, h)?);
            if i % stride == 0 || i == steps {
                states.push(self.unflatten(&y, init.time + i as f64 * h));
            }
        }
        Ok(OdeTrajectory { states, max_drift })
    }

    /// Integrates through the increasing times `grid` (starting at
    /// `init.time`), taking RK4 steps no longer than `max_dt`, and returns the
    /// state at every grid point.
    pub fn integrate_on_grid(&self, init: &OdeState, grid: &[f64], max_dt: f64) -> Result<Vec<OdeState>> {
        self.check_state(init)?;
        check_positive("max_dt", max_dt)?;
        let mut y = init.flatten();
        let mut t = init.time;
        self.project(t, &mut y)?;
        let mut out = Vec::with_capacity(grid.len());
        for &target in grid {
            if target < t - 1e-12 {
                return Err(Error::domain("time grid must be non-decreasing"));
            }
            let span = target - t;
            if span > 0.0 {
                let n = (span / max_dt).ceil().max(1.0) as usize;
                let h = span / n as f64;
                for i in 0..n {
                    self.rk4(t + i as f64 * h, &mut y, h)?;
                }
                t = target;
            }
            out.push(self.unflatten(&y, t));
        }
        Ok(out)
    }
}

fn scale(mut v: Vec<f64>, k: f64) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x *= k);
    v
}

/// Clips a strategy block at zero and renormalizes when its mass has drifted
/// by more than [`RENORM_TOL`]. Returns the size of the correction.
fn restore_simplex(block: &mut [f64]) -> f64 {
    let mut drift: f64 = 0.0;
    for x in block.iter_mut() {
        if *x < 0.0 {
            drift = drift.max(-*x);
            *x = 0.0;
        }
    }
    let s: f64 = block.iter().sum();
    drift = drift.max((s - 1.0).abs());
    if drift > RENORM_TOL {
        block.iter_mut().for_each(|x| *x /= s);
    }
    drift
}

/// Opponent strategy as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyPath {
    Constant(MixedStrategy),
    /// `points[i]` is the strategy at `i * dt`; linear in between.
    Sampled {
        dt: f64,
        points: Vec<MixedStrategy>,
    },
}

impl StrategyPath {
    pub fn sampled(dt: f64, points: Vec<MixedStrategy>) -> Result<Self> {
        check_positive("path stride", dt)?;
        let first = points.first().ok_or_else(|| Error::domain("a sampled path needs at least one point"))?;
        if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
            return Err(Error::Dimension { expected: first.len(), got: bad.len() });
        }
        Ok(StrategyPath::Sampled { dt, points })
    }

    /// Samples `path` on `0, dt, ..., ≥ t_end`.
    pub fn from_fn(dt: f64, t_end: f64, path: impl Fn(f64) -> Result<MixedStrategy>) -> Result<Self> {
        check_positive("path stride", dt)?;
        let n = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
        let points = (0..=n).map(|i| path(i as f64 * dt)).collect::<Result<Vec<_>>>()?;
        Self::sampled(dt, points)
    }

    pub fn len(&self) -> usize {
        match self {
            StrategyPath::Constant(g) => g.len(),
            StrategyPath::Sampled { points, .. } => points[0].len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn end(&self) -> f64 {
        match self {
            StrategyPath::Constant(_) => f64::INFINITY,
            StrategyPath::Sampled { dt, points } => dt * (points.len() - 1) as f64,
        }
    }

    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        match self {
            StrategyPath::Constant(g) => Ok(g.probs().to_vec()),
            StrategyPath::Sampled { dt, points } => {
                if t < 0.0 || t > self.end() * (1.0 + 1e-12) + 1e-12 {
                    return Err(Error::domain(format!("path sampled on [0, {}] queried at {t}", self.end())));
                }
                let x = t / dt;
                let i = (x.floor() as usize).min(points.len() - 1);
                if i + 1 >= points.len() {
                    return Ok(points[i].probs().to_vec());
                }
                let w = x - i as f64;
                Ok(points[i].probs().iter().zip(points[i + 1].probs()).map(|(a, b)| (1.0 - w) * a + w * b).collect())
            }
        }
    }

    /// Trapezoidal `∫_0^t weight(s) h(g_s) ds` on the path grid, plus a final
    /// partial panel ending at `t`.
    fn integrate<H>(&self, t: f64, weight: impl Fn(f64) -> f64, h: H) -> Result<Vec<f64>>
    where
        H: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let dt = match self {
            StrategyPath::Constant(_) => {
                return Err(Error::Internal("constant paths are integrated in closed form".into()))
            }
            StrategyPath::Sampled { dt, .. } => *dt,
        };
        let mut nodes: Vec<f64> = (0..).map(|i| i as f64 * dt).take_while(|s| *s < t - 1e-12 * dt).collect();
        nodes.push(t);
        let mut prev = (nodes[0], scale(h(&self.at(nodes[0])?)?, weight(nodes[0])));
        let mut acc = vec![0.0; prev.1.len()];
        for &s in &nodes[1..] {
            let cur = scale(h(&self.at(s)?)?, weight(s));
            let w = 0.5 * (s - prev.0);
            for (a, (x, y)) in acc.iter_mut().zip(prev.1.iter().zip(&cur)) {
                *a += w * (x + y);
            }
            prev = (s, cur);
        }
        Ok(acc)
    }
}

/// Smooth best-response solution
/// `ξ(t) = e^{-t} f0 + ∫_0^t e^{s-t} β1,ε(g_s) ds`.
/// For constant `g` this is `(1 - e^{-t}) β1,ε(g) + e^{-t} f0`; otherwise the
/// integral is trapezoidal on the path grid and the result renormalized.
pub fn explicit_sbr_solution(
    spec: &GameSpec,
    f0: &MixedStrategy,
    g_path: &StrategyPath,
    t: f64,
    epsilon: f64,
) -> Result<MixedStrategy> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t = {t} must be non-negative")));
    }
    check_len(f0, spec.matrix.rows())?;
    let decay = (-t).exp();
    match g_path {
        StrategyPath::Constant(g) => {
            let b = softmax(&spec.payoff_vector(Player::P1, g)?, epsilon)?;
            Ok(MixedStrategy::from_raw(
                b.probs().iter().zip(f0.probs()).map(|(b, f)| (1.0 - decay) * b + decay * f).collect(),
            ))
        }
        path => {
            if t == 0.0 {
                return Ok(f0.clone());
            }
            let integral = path.integrate(t, |s| (s - t).exp(), |g| logit(spec, Player::P1, g, epsilon))?;
            MixedStrategy::normalized(integral.iter().zip(f0.probs()).map(|(i, f)| i + decay * f).collect())
        }
    }
}

/// Replicator solution against a prescribed opponent path,
/// `ξ(a) ∝ f0(a) exp(∫_0^t u1(e_a, g_s) ds)`.
pub fn explicit_replicator_solution(
    spec: &GameSpec,
    f0: &MixedStrategy,
    g_path: &StrategyPath,
    t: f64,
) -> Result<MixedStrategy> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t = {t} must be non-negative")));
    }
    check_len(f0, spec.matrix.rows())?;
    if !f0.is_interior() {
        return Err(Error::domain("initial strategy must be strictly interior"));
    }
    let exponents = cumulative_payoff(spec, g_path, t)?;
    Ok(MixedStrategy::from_raw(weighted_logit(f0.probs(), &exponents)))
}

/// `∫_0^t u1(e_a, g_s) ds` for every row `a`.
fn cumulative_payoff(spec: &GameSpec, g_path: &StrategyPath, t: f64) -> Result<Vec<f64>> {
    match g_path {
        StrategyPath::Constant(g) => Ok(scale(spec.payoff_vector(Player::P1, g)?, t)),
        _ if t == 0.0 => Ok(vec![0.0; spec.matrix.rows()]),
        path => path.integrate(t, |_| 1.0, |g| Ok(payoffs(spec, Player::P1, g))),
    }
}

/// Time average `(1/t) ∫_0^t g_s ds` on the path grid.
pub fn time_average(g_path: &StrategyPath, t: f64) -> Result<MixedStrategy> {
    check_positive("t", t)?;
    match g_path {
        StrategyPath::Constant(g) => Ok(g.clone()),
        path => MixedStrategy::normalized(scale(path.integrate(t, |_| 1.0, |g| Ok(g.to_vec()))?, 1.0 / t)),
    }
}

/// Sup distance between the replicator solution from uniform `f0` and the
/// logit of the time-averaged payoff `V(a) = u1(e_a, ḡ_t)` at temperature
/// `1/t`. Both sides use the same quadrature, so the distance is round-off.
pub fn prop1_equivalence_check(spec: &GameSpec, g_path: &StrategyPath, t: f64) -> Result<f64> {
    check_positive("t", t)?;
    let f0 = MixedStrategy::uniform(spec.matrix.rows());
    let lhs = explicit_replicator_solution(spec, &f0, g_path, t)?;
    let v = spec.payoff_vector(Player::P1, &time_average(g_path, t)?)?;
    let rhs = softmax(&v, 1.0 / t)?;
    Ok(lhs.distance(&rhs))
}

/// Limit of the replicator solution against a frozen `g` as `t → ∞`:
/// `f0` restricted to the pure best responses to `g` and renormalized.
pub fn slow_learner_limit(spec: &GameSpec, f0: &MixedStrategy, g: &MixedStrategy) -> Result<MixedStrategy> {
    check_len(f0, spec.matrix.rows())?;
    if !f0.is_interior() {
        return Err(Error::domain("initial strategy must be strictly interior"));
    }
    let u = spec.payoff_vector(Player::P1, g)?;
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let masked: Vec<f64> =
        u.iter().zip(f0.probs()).map(|(v, p)| if v >= &(top - BR_TIE_TOL) { *p } else { 0.0 }).collect();
    MixedStrategy::normalized(masked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{solve_logit_default, solve_saddle};
    use proptest::prelude::*;

    fn security_game() -> GameSpec {
        GameSpec::from_rows(vec![vec![5.0, 2.0], vec![1.0, 3.0]]).unwrap()
    }

    fn ms(v: &[f64]) -> MixedStrategy {
        MixedStrategy::new(v.to_vec()).unwrap()
    }

    fn sum(v: &[f64]) -> f64 {
        v.iter().sum()
    }

    #[test]
    fn replicator_examples() {
        let spec = security_game();
        let g = ms(&[0.3, 0.7]);
        assert!(replicator_field(&spec, Player::P1, &ms(&[1.0, 0.0]), &g).unwrap().iter().all(|x| *x == 0.0));
        let u = spec.payoff_vector(Player::P1, &g).unwrap();
        let v = replicator_field(&spec, Player::P1, &ms(&[0.5, 0.5]), &g).unwrap();
        assert!((v[0] - 0.25 * (u[0] - u[1])).abs() < 1e-12);
        assert!(sum(&v).abs() < 1e-12);
    }

    #[test]
    fn adjusted_replicator_examples() {
        // u = [1, 1] against anything: ū = 1
        let spec = GameSpec::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let g = ms(&[0.5, 0.5]);
        let f = ms(&[0.3, 0.7]);
        assert_eq!(
            adjusted_replicator_field(&spec, Player::P1, &f, &g, 1.0).unwrap(),
            replicator_field(&spec, Player::P1, &f, &g).unwrap()
        );
        let spec = security_game();
        let f = ms(&[0.2, 0.8]);
        let g = ms(&[0.6, 0.4]);
        let a = adjusted_replicator_field(&spec, Player::P1, &f, &g, 2.0).unwrap();
        let r = replicator_field(&spec, Player::P1, &f, &g).unwrap();
        let avg = spec.expected_value(&f, &g).unwrap();
        for (x, y) in a.iter().zip(&r) {
            assert!((x - 2.0 * y / avg).abs() < 1e-12);
            assert_eq!(x.signum(), y.signum());
        }
        assert!(adjusted_replicator_field(&spec, Player::P1, &ms(&[0.0, 1.0]), &g, 1.0)
            .unwrap()
            .iter()
            .all(|x| *x == 0.0));
        // P2 payoffs with c = 0 are negative
        assert!(matches!(adjusted_replicator_field(&spec, Player::P2, &g, &f, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn smooth_br_examples() {
        let spec = security_game();
        let g = ms(&[0.2, 0.8]);
        let f = ms(&[0.1, 0.9]);
        let v = smooth_br_field(&spec, Player::P1, &f, &g, 0.05, 3.0).unwrap();
        assert!((v[0] - 3.0 * (0.5 - 0.1)).abs() < 1e-12 && (v[1] - 3.0 * (0.5 - 0.9)).abs() < 1e-12);
        let b = softmax(&spec.payoff_vector(Player::P1, &ms(&[0.7, 0.3])).unwrap(), 0.4).unwrap();
        let z = smooth_br_field(&spec, Player::P1, &b, &ms(&[0.7, 0.3]), 0.4, 1.0).unwrap();
        assert!(z.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn coupled_examples() {
        let spec = security_game();
        let s = OdeState::new(ms(&[0.5, 0.5]), ms(&[0.2, 0.8])).with_estimates(vec![0.0, 0.0]);
        let d = coupled_thm1_field(&spec, &s, 0.05, 1.0, 1.0).unwrap();
        assert!((d.u_hat1[0] - 2.6).abs() < 1e-12 && (d.u_hat1[1] - 2.6).abs() < 1e-12);
        // unit rates are the plain system
        let sys =
            DynamicsSystem::new(SystemKind::CoupledThm1 { epsilon: 0.05, k1: 1.0, k2: 1.0 }, spec.clone()).unwrap();
        assert_eq!(sys.derivative(&s).unwrap(), d);
        let d2 = coupled_thm1_field(&spec, &s, 0.05, 2.0, 3.0).unwrap();
        assert!(d2.f.iter().zip(&d.f).all(|(a, b)| (a - 2.0 * b).abs() < 1e-12));
        assert!(d2.g.iter().zip(&d.g).all(|(a, b)| (a - 3.0 * b).abs() < 1e-12));
    }

    /// Rest point of the coupled system: P2 indifferent (f = f*), β1(g) = f*,
    /// û1 = u1(·, g). Solve β1(g) = f* for g by bisection on g(0).
    fn coupled_rest_point(spec: &GameSpec, eps: f64) -> OdeState {
        let f_star = solve_saddle(spec).unwrap().f_star;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let b = softmax(&spec.payoff_vector(Player::P1, &ms(&[mid, 1.0 - mid])).unwrap(), eps).unwrap();
            // β1(g)(0) increases with g(0) on this game
            if b[0] < f_star[0] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let g = ms(&[lo, 1.0 - lo]);
        let u = spec.payoff_vector(Player::P1, &g).unwrap();
        OdeState::new(f_star, g).with_estimates(u)
    }

    #[test]
    fn coupled_rest_point_near_logit_equilibrium() {
        let spec = security_game();
        let rest = coupled_rest_point(&spec, 0.05);
        let d = coupled_thm1_field(&spec, &rest, 0.05, 1.0, 1.0).unwrap();
        assert!(d.sup_norm() < 1e-9, "{}", d.sup_norm());
        let l = solve_logit_default(&spec, 0.05).unwrap();
        // The player-2 block is a replicator, not a logit response, so the
        // rest point is f* rather than f_eps; both are within 0.05.
        assert!(rest.f.distance(&l.f_eps).max(rest.g.distance(&l.g_eps)) < 0.05);
        assert!(spec.exploitability(&rest.f, &rest.g).unwrap() < 0.1);
    }

    #[test]
    fn coupled_integration_reaches_rest_point() {
        let spec = security_game();
        let sys =
            DynamicsSystem::new(SystemKind::CoupledThm1 { epsilon: 0.05, k1: 1.0, k2: 1.0 }, spec.clone()).unwrap();
        let tr = sys.integrate(&sys.uniform_start(), 200.0, 1e-2, 100).unwrap();
        let end = tr.last();
        let rest = coupled_rest_point(&spec, 0.05);
        assert!(end.f.distance(&rest.f).max(end.g.distance(&rest.g)) < 1e-3);
        assert!(tr.max_drift < 1e-9);
    }

    #[test]
    fn composite_t1_examples() {
        let spec = security_game();
        assert!(composite_t1_field(&spec, &ms(&[0.0, 1.0]), 0.05).unwrap().iter().all(|x| *x == 0.0));
        let v = composite_t1_field(&spec, &ms(&[0.4, 0.6]), 0.05).unwrap();
        assert!(sum(&v).abs() < 1e-12);
        // oracle: β2(f*) is uniform since P2 is indifferent, then M·[.5,.5] = [3.5, 2]
        let u = [3.5, 2.0];
        let avg = 0.4 * u[0] + 0.6 * u[1];
        let want = [0.4 * (u[0] - avg), 0.6 * (u[1] - avg)];
        assert!((v[0] - want[0]).abs() < 1e-9 && (v[1] - want[1]).abs() < 1e-9);
        assert!((v[0] - 0.36).abs() < 1e-9);
    }

    #[test]
    fn composite_t2_examples() {
        // constant payoff vector -> ξ uniform for every t
        let spec = GameSpec::from_rows(vec![vec![1.0, 3.0], vec![1.0, 3.0]]).unwrap();
        let f0 = MixedStrategy::uniform(2);
        let g = ms(&[0.3, 0.7]);
        for t in [0.1, 10.0, 1e4] {
            let xi = xi_frozen(&spec, f0.probs(), g.probs(), t);
            assert_eq!(xi, vec![0.5, 0.5]);
        }
        let spec = security_game();
        let v = composite_t2_field(&spec, &g, 2.0, 0.05, &f0).unwrap();
        assert!(sum(&v).abs() < 1e-12);
        assert!(composite_t2_field(&spec, &g, 0.0, 0.05, &f0).is_err());
        // unique best response to g = e_D is row 0
        let xi = xi_frozen(&spec, f0.probs(), &[1.0, 0.0], 1e3);
        assert!(xi[0] > 1.0 - 1e-12);
    }

    #[test]
    fn integrate_rest_point_is_constant() {
        let spec = security_game();
        let sys = DynamicsSystem::new(SystemKind::Replicator { k: 1.0 }, spec.clone()).unwrap();
        let init = OdeState::new(ms(&[1.0, 0.0]), ms(&[0.0, 1.0]));
        let tr = sys.integrate(&init, 5.0, 1e-2, 10).unwrap();
        assert!(tr.states.iter().all(|s| s.f == init.f && s.g == init.g));
        let s = solve_saddle(&spec).unwrap();
        let tr = sys.integrate(&OdeState::new(s.f_star.clone(), s.g_star.clone()), 5.0, 1e-2, 10).unwrap();
        assert!(tr.states.iter().all(|x| x.f.distance(&s.f_star) < 1e-12 && x.g.distance(&s.g_star) < 1e-12));
    }

    #[test]
    fn integrate_record_count() {
        let sys = DynamicsSystem::new(SystemKind::SmoothBr { epsilon: 0.1, k: 1.0 }, security_game()).unwrap();
        let tr = sys.integrate(&sys.uniform_start(), 1.0, 0.01, 30).unwrap();
        // steps 30, 60, 90 and the final step 100
        assert_eq!(tr.states.len(), 5);
        assert!((tr.last().time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_br_matches_closed_form() {
        let spec = security_game();
        let g = ms(&[0.35, 0.65]);
        let f0 = ms(&[0.9, 0.1]);
        let sys =
            DynamicsSystem::new(SystemKind::SmoothBr { epsilon: 0.5, k: 1.0 }, spec.clone()).unwrap().with_frozen_p2();
        let tr = sys.integrate(&OdeState::new(f0.clone(), g.clone()), 10.0, 1e-3, 100).unwrap();
        let path = StrategyPath::Constant(g);
        for s in &tr.states {
            let want = explicit_sbr_solution(&spec, &f0, &path, s.time, 0.5).unwrap();
            assert!(s.f.distance(&want) < 1e-6, "t {}: {}", s.time, s.f.distance(&want));
        }
    }

    #[test]
    fn replicator_matches_closed_form() {
        let spec = security_game();
        let g = ms(&[0.35, 0.65]);
        let f0 = ms(&[0.2, 0.8]);
        let sys = DynamicsSystem::new(SystemKind::Replicator { k: 1.0 }, spec.clone()).unwrap().with_frozen_p2();
        let tr = sys.integrate(&OdeState::new(f0.clone(), g.clone()), 10.0, 1e-3, 100).unwrap();
        let path = StrategyPath::Constant(g);
        for s in &tr.states {
            let want = explicit_replicator_solution(&spec, &f0, &path, s.time).unwrap();
            assert!(s.f.distance(&want) < 1e-6, "t {}: {}", s.time, s.f.distance(&want));
        }
    }

    #[test]
    fn sbr_closed_form_examples() {
        let spec = security_game();
        let f0 = ms(&[0.9, 0.1]);
        let g = StrategyPath::Constant(ms(&[0.6, 0.4]));
        assert_eq!(explicit_sbr_solution(&spec, &f0, &g, 0.0, 0.2).unwrap(), f0);
        let b = softmax(&spec.payoff_vector(Player::P1, &ms(&[0.6, 0.4])).unwrap(), 0.2).unwrap();
        assert!(explicit_sbr_solution(&spec, &f0, &g, 40.0, 0.2).unwrap().distance(&b) < 1e-6);
        let mid = explicit_sbr_solution(&spec, &f0, &g, 2f64.ln(), 0.2).unwrap();
        for a in 0..2 {
            assert!((mid[a] - 0.5 * (b[a] + f0[a])).abs() < 1e-12);
        }
    }

    #[test]
    fn sbr_quadrature_agrees_with_constant_path() {
        let spec = security_game();
        let f0 = ms(&[0.9, 0.1]);
        let g = ms(&[0.6, 0.4]);
        let sampled = StrategyPath::from_fn(1e-3, 5.0, |_| Ok(g.clone())).unwrap();
        let a = explicit_sbr_solution(&spec, &f0, &sampled, 3.3, 0.2).unwrap();
        let b = explicit_sbr_solution(&spec, &f0, &StrategyPath::Constant(g), 3.3, 0.2).unwrap();
        assert!(a.distance(&b) < 1e-6);
    }

    #[test]
    fn sbr_quadrature_matches_integration_on_moving_path() {
        let spec = security_game();
        let f0 = ms(&[0.5, 0.5]);
        let eps = 0.3;
        let gp = |t: f64| ms(&[0.5 + 0.3 * t.sin(), 0.5 - 0.3 * t.sin()]);
        let path = StrategyPath::from_fn(1e-3, 4.0, |t| Ok(gp(t))).unwrap();
        // oracle: RK4 on ḟ = β(g_t) - f with g_t explicit
        let mut f = f0.probs().to_vec();
        let h = 1e-3;
        let field = |t: f64, f: &[f64]| -> Vec<f64> {
            let b = softmax(&spec.payoff_vector(Player::P1, &gp(t)).unwrap(), eps).unwrap();
            toward(b.probs(), f, 1.0)
        };
        for i in 0..4000 {
            let t = i as f64 * h;
            let k1 = field(t, &f);
            let y2: Vec<f64> = f.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
            let k2 = field(t + 0.5 * h, &y2);
            let y3: Vec<f64> = f.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
            let k3 = field(t + 0.5 * h, &y3);
            let y4: Vec<f64> = f.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
            let k4 = field(t + h, &y4);
            for j in 0..2 {
                f[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        let q = explicit_sbr_solution(&spec, &f0, &path, 4.0, eps).unwrap();
        assert!((q[0] - f[0]).abs() < 1e-5, "{} {}", q[0], f[0]);
    }

    #[test]
    fn replicator_closed_form_examples() {
        let spec = security_game();
        let f0 = ms(&[0.3, 0.7]);
        let g = StrategyPath::Constant(ms(&[0.6, 0.4]));
        assert!(explicit_replicator_solution(&spec, &f0, &g, 0.0).unwrap().distance(&f0) < 1e-15);
        // equal payoffs at g*
        let flat = StrategyPath::Constant(ms(&[0.2, 0.8]));
        assert!(explicit_replicator_solution(&spec, &f0, &flat, 7.0).unwrap().distance(&f0) < 1e-12);
        assert!(explicit_replicator_solution(&spec, &f0, &g, 50.0).unwrap()[0] > 1.0 - 1e-6);
        assert!(explicit_replicator_solution(&spec, &ms(&[1.0, 0.0]), &g, 1.0).is_err());
    }

    #[test]
    fn replicator_logit_identity_examples() {
        let spec = security_game();
        let g = StrategyPath::Constant(ms(&[0.6, 0.4]));
        assert!(prop1_equivalence_check(&spec, &g, 3.0).unwrap() < 1e-12);
        let wave =
            StrategyPath::from_fn(1e-4, 5.0, |t| Ok(ms(&[0.5 + 0.4 * (2.0 * t).sin(), 0.5 - 0.4 * (2.0 * t).sin()])))
                .unwrap();
        assert!(prop1_equivalence_check(&spec, &wave, 5.0).unwrap() < 1e-6);
        let lhs = explicit_replicator_solution(&spec, &MixedStrategy::uniform(2), &wave, 1e-9).unwrap();
        assert!(lhs.distance(&MixedStrategy::uniform(2)) < 1e-6);
        assert!(prop1_equivalence_check(&spec, &wave, 1e-9).unwrap() < 1e-9);
    }

    #[test]
    fn slow_learner_examples() {
        let spec = security_game();
        let f0 = ms(&[0.3, 0.7]);
        assert_eq!(slow_learner_limit(&spec, &f0, &ms(&[1.0, 0.0])).unwrap().probs(), &[1.0, 0.0]);
        assert!(slow_learner_limit(&spec, &f0, &ms(&[0.2, 0.8])).unwrap().distance(&f0) < 1e-15);
        let three = GameSpec::from_rows(vec![vec![1.0], vec![1.0], vec![0.0]]).unwrap();
        let lim = slow_learner_limit(&three, &MixedStrategy::uniform(3), &ms(&[1.0])).unwrap();
        assert_eq!(lim.probs(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn faces_forward_invariant() {
        let spec = GameSpec::from_rows(vec![vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]]).unwrap();
        let sys = DynamicsSystem::new(SystemKind::Replicator { k: 1.0 }, spec).unwrap();
        let init = OdeState::new(ms(&[0.5, 0.5, 0.0]), ms(&[0.2, 0.3, 0.5]));
        let tr = sys.integrate(&init, 20.0, 1e-2, 50).unwrap();
        assert!(tr.states.iter().all(|s| s.f[2] == 0.0));
    }

    #[test]
    fn dominated_action_decays_under_t1() {
        let spec = GameSpec::from_rows(vec![vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let sys = DynamicsSystem::new(SystemKind::CompositeT1 { epsilon: 0.01 }, spec).unwrap();
        let tr = sys.integrate(&sys.uniform_start(), 100.0, 1e-2, 1000).unwrap();
        assert!(tr.last().f[1] < 1e-3);
    }

    #[test]
    fn composite_t2_needs_positive_start() {
        let spec = security_game();
        let kind = SystemKind::CompositeT2 { epsilon: 0.05, f0: MixedStrategy::uniform(2) };
        let sys = DynamicsSystem::new(kind, spec).unwrap();
        assert!(sys.integrate(&sys.uniform_start(), 1.0, 1e-2, 1).is_err());
        let tr = sys.integrate(&sys.uniform_start().at_time(1e-2), 5.0, 1e-2, 10).unwrap();
        assert!(tr.max_drift < 1e-9);
    }

    #[test]
    fn adjusted_replicator_needs_positive_average() {
        let spec = security_game();
        let sys = DynamicsSystem::new(SystemKind::AdjustedReplicator { k: 1.0 }, spec.clone()).unwrap();
        assert!(matches!(sys.integrate(&sys.uniform_start(), 1.0, 1e-2, 1), Err(Error::Integration { .. })));
        let shifted = DynamicsSystem::new(SystemKind::AdjustedReplicator { k: 1.0 }, spec.with_constant(6.0)).unwrap();
        assert!(shifted.integrate(&shifted.uniform_start(), 1.0, 1e-2, 1).is_ok());
    }

    #[test]
    fn unknown_system_name() {
        assert!(SystemKind::from_name("lotka", 0.1, 1.0, 1.0, None, 2).is_err());
        for name in SystemKind::NAMES {
            assert_eq!(SystemKind::from_name(name, 0.1, 1.0, 1.0, None, 2).unwrap().name(), name);
        }
    }

    fn systems(spec: &GameSpec) -> Vec<DynamicsSystem> {
        let shifted = spec.clone().with_constant(10.0);
        vec![
            DynamicsSystem::new(SystemKind::Replicator { k: 1.0 }, spec.clone()).unwrap(),
            DynamicsSystem::new(SystemKind::AdjustedReplicator { k: 1.0 }, shifted).unwrap(),
            DynamicsSystem::new(SystemKind::SmoothBr { epsilon: 0.05, k: 1.0 }, spec.clone()).unwrap(),
            DynamicsSystem::new(SystemKind::CoupledThm1 { epsilon: 0.05, k1: 1.0, k2: 1.0 }, spec.clone()).unwrap(),
            DynamicsSystem::new(SystemKind::CompositeT1 { epsilon: 0.05 }, spec.clone()).unwrap(),
            DynamicsSystem::new(SystemKind::CompositeT2 { epsilon: 0.05, f0: MixedStrategy::uniform(2) }, spec.clone())
                .unwrap(),
        ]
    }

    #[test]
    fn shipped_systems_stay_on_simplex() {
        let spec = GameSpec::from_rows(vec![vec![5.0, 2.0], vec![1.0, 3.0]]).unwrap();
        for sys in systems(&spec) {
            let init = sys.uniform_start().at_time(1e-2);
            let tr = sys.integrate(&init, 30.0, 1e-2, 100).unwrap();
            assert!(tr.max_drift < 1e-9, "{}: {}", sys.kind.name(), tr.max_drift);
        }
    }

    proptest! {
        #[test]
        fn fields_are_tangent(a in 0.01f64..0.99, b in 0.01f64..0.99, u0 in -5.0f64..5.0, t in 0.1f64..20.0) {
            let spec = security_game();
            let state = OdeState::new(ms(&[a, 1.0 - a]), ms(&[b, 1.0 - b])).with_estimates(vec![u0, -u0]).at_time(t);
            for sys in systems(&spec) {
                let d = sys.derivative(&state).unwrap();
                prop_assert!(sum(&d.f).abs() < 1e-12, "{}", sys.kind.name());
                prop_assert!(sum(&d.g).abs() < 1e-12, "{}", sys.kind.name());
            }
        }
    }
}
