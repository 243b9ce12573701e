//! Seeded learning episodes, seed aggregation and comparison against the
//! mean ODE.

use rayon::prelude::*;

use crate::equilibrium::{solve_saddle, SaddleSolution};
use crate::error::{Error, Result};
use crate::game::{GameSpec, MixedStrategy, Player};
use crate::learners::{choose_action, softmax, step, LearnerConfig, LearnerState, RateSchedule, Scheme, StepParams};
use crate::ode::{DynamicsSystem, OdeState, OdeTrajectory};
use crate::rng::{RandomSource, STREAM_NOISE, STREAM_P1, STREAM_P2};

/// Reinforcement schemes need `λ U < 1`; the strategy rate is capped at
/// this fraction of `1 / max U`.
pub const REINFORCEMENT_CAP: f64 = 0.99;

/// A learner and where it starts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSetup {
    pub learner: LearnerConfig,
    pub initial_strategy: MixedStrategy,
    pub initial_estimates: Vec<f64>,
}

impl PlayerSetup {
    /// Uniform strategy, zero estimates.
    pub fn new(learner: LearnerConfig, actions: usize) -> Self {
        Self { learner, initial_strategy: MixedStrategy::uniform(actions), initial_estimates: vec![0.0; actions] }
    }

    pub fn starting_at(mut self, strategy: MixedStrategy) -> Self {
        self.initial_strategy = strategy;
        self
    }

    pub fn with_estimates(mut self, estimates: Vec<f64>) -> Self {
        self.initial_estimates = estimates;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub spec: GameSpec,
    pub p1: PlayerSetup,
    pub p2: PlayerSetup,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub record_stride: u64,
}

/// Per-player constants fixed before the first step.
#[derive(Debug, Clone)]
struct Resolved {
    scheme: Scheme,
    lambda: RateSchedule,
    mu: Option<RateSchedule>,
    epsilon: f64,
    rl3_n: f64,
    rl3_c: f64,
    lambda_cap: f64,
}

impl Resolved {
    fn params(&self, t: u64) -> StepParams {
        StepParams {
            lambda: self.lambda.rate(t).min(self.lambda_cap),
            mu: self.mu.as_ref().map_or(0.0, |m| m.rate(t)),
            epsilon: self.epsilon,
            rl3_n: self.rl3_n,
            rl3_c: self.rl3_c,
        }
    }
}

impl Experiment {
    pub fn new(spec: GameSpec, p1: LearnerConfig, p2: LearnerConfig) -> Self {
        let (n1, n2) = (spec.matrix.rows(), spec.matrix.cols());
        Self {
            spec,
            p1: PlayerSetup::new(p1, n1),
            p2: PlayerSetup::new(p2, n2),
            horizon: 1000,
            seeds: vec![0],
            record_stride: 1,
        }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_stride(mut self, stride: u64) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_initial(mut self, f: MixedStrategy, g: MixedStrategy) -> Self {
        self.p1.initial_strategy = f;
        self.p2.initial_strategy = g;
        self
    }

    pub fn setup(&self, player: Player) -> &PlayerSetup {
        match player {
            Player::P1 => &self.p1,
            Player::P2 => &self.p2,
        }
    }

    /// Checks every precondition that can fail before a run starts and
    /// returns the learners' soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut warnings = Vec::new();
        for player in [Player::P1, Player::P2] {
            let s = self.setup(player);
            let n = self.spec.action_count(player);
            let label = format!("player {}", player.index());
            if s.initial_strategy.len() != n {
                return Err(Error::Config(format!(
                    "{label}: initial strategy has {} entries, game has {n} actions",
                    s.initial_strategy.len()
                )));
            }
            if s.initial_estimates.len() != n {
                return Err(Error::Config(format!(
                    "{label}: initial estimates have {} entries, game has {n} actions",
                    s.initial_estimates.len()
                )));
            }
            warnings.extend(s.learner.validate()?.into_iter().map(|w| format!("{label}: {w}")));
            self.resolve(player)?;
        }
        Ok(warnings)
    }

    fn resolve(&self, player: Player) -> Result<Resolved> {
        let cfg = &self.setup(player).learner;
        let (lo, hi) = self.spec.payoff_bounds(player);
        let label = format!("player {} ({})", player.index(), cfg.scheme.name());
        if cfg.scheme.needs_nonnegative_payoffs() && lo < 0.0 {
            return Err(Error::Config(format!(
                "{label} needs non-negative payoffs but they can reach {lo}; raise the constant c"
            )));
        }
        let lambda_cap = match cfg.scheme {
            Scheme::CRL0 | Scheme::RL2 if hi > 0.0 => REINFORCEMENT_CAP / hi,
            _ => f64::INFINITY,
        };
        let rl3_c = cfg.rl3_c.unwrap_or(hi);
        if cfg.scheme == Scheme::RL3 && rl3_c < hi {
            return Err(Error::Config(format!("{label}: rl3_c = {rl3_c} is below the largest payoff {hi}")));
        }
        if cfg.scheme == Scheme::RL3 && !(rl3_c > 0.0) {
            return Err(Error::Config(format!("{label}: payoffs are never positive, RL3 cannot learn")));
        }
        Ok(Resolved {
            scheme: cfg.scheme,
            lambda: cfg.lambda.clone(),
            mu: cfg.mu.clone(),
            epsilon: cfg.epsilon.unwrap_or(f64::NAN),
            rl3_n: cfg.rl3_n.unwrap_or(self.spec.action_count(player) as f64),
            rl3_c,
            lambda_cap,
        })
    }

    /// Strategy step actually applied to `player` at step `t`, after the
    /// reinforcement cap.
    pub fn effective_lambda(&self, player: Player, t: u64) -> Result<f64> {
        Ok(self.resolve(player)?.params(t).lambda)
    }

    /// `τ_t = Σ_{k<t} λ_k` for `player`, evaluated at each of the increasing
    /// steps in `steps`.
    pub fn clock(&self, player: Player, steps: &[u64]) -> Result<Vec<f64>> {
        let r = self.resolve(player)?;
        let mut out = Vec::with_capacity(steps.len());
        let (mut k, mut tau) = (0u64, 0.0);
        for &t in steps {
            if t < k {
                return Err(Error::domain("clock steps must be non-decreasing"));
            }
            while k < t {
                tau += r.params(k).lambda;
                k += 1;
            }
            out.push(tau);
        }
        Ok(out)
    }
}

/// One recorded point.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Empty when the source carries no estimates.
    pub uhat1: Vec<f64>,
    pub uhat2: Vec<f64>,
    /// Realized payoffs of the step that led here (NaN for the initial row).
    pub payoff1: f64,
    pub payoff2: f64,
    pub exploitability: f64,
    pub dist_saddle_sup: f64,
    /// Largest `|û_i(a) - u_i(e_a, opponent)|` over estimate-carrying players.
    pub estimate_error: f64,
}

fn metrics(spec: &GameSpec, saddle: &SaddleSolution, f: &MixedStrategy, g: &MixedStrategy) -> Result<(f64, f64)> {
    let e = spec.exploitability(f, g)?;
    Ok((e, f.distance(&saddle.f_star).max(g.distance(&saddle.g_star))))
}

fn estimate_gap(spec: &GameSpec, player: Player, estimates: &[f64], opp: &MixedStrategy) -> Result<f64> {
    let u = spec.payoff_vector(player, opp)?;
    Ok(u.iter().zip(estimates).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("a trajectory holds at least its initial record")
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

struct Recorder<'a> {
    spec: &'a GameSpec,
    saddle: &'a SaddleSolution,
    estimates: (bool, bool),
}

impl Recorder<'_> {
    fn record(&self, t: u64, s1: &LearnerState, s2: &LearnerState, payoffs: (f64, f64)) -> Result<Record> {
        let (exploitability, dist) = metrics(self.spec, self.saddle, &s1.strategy, &s2.strategy)?;
        let mut err = f64::NAN;
        if self.estimates.0 {
            err = estimate_gap(self.spec, Player::P1, &s1.estimates, &s2.strategy)?;
        }
        if self.estimates.1 {
            let e2 = estimate_gap(self.spec, Player::P2, &s2.estimates, &s1.strategy)?;
            err = if err.is_nan() { e2 } else { err.max(e2) };
        }
        Ok(Record {
            t: t as f64,
            f: s1.strategy.probs().to_vec(),
            g: s2.strategy.probs().to_vec(),
            uhat1: if self.estimates.0 { s1.estimates.clone() } else { Vec::new() },
            uhat2: if self.estimates.1 { s2.estimates.clone() } else { Vec::new() },
            payoff1: payoffs.0,
            payoff2: payoffs.1,
            exploitability,
            dist_saddle_sup: dist,
            estimate_error: err,
        })
    }
}

/// Plays `exp.horizon` rounds with one seed. Rows are recorded at `t = 0`,
/// every multiple of the stride, and at the horizon.
pub fn run_episode(exp: &Experiment, seed: u64) -> Result<Trajectory> {
    exp.validate()?;
    let saddle = solve_saddle(&exp.spec)?;
    run_prepared(exp, &saddle, seed)
}

fn run_prepared(exp: &Experiment, saddle: &SaddleSolution, seed: u64) -> Result<Trajectory> {
    let (r1, r2) = (exp.resolve(Player::P1)?, exp.resolve(Player::P2)?);
    let mut noise = RandomSource::substream(seed, STREAM_NOISE);
    let mut rng1 = RandomSource::substream(seed, STREAM_P1);
    let mut rng2 = RandomSource::substream(seed, STREAM_P2);
    let mut s1 = LearnerState::new(exp.p1.initial_strategy.clone(), exp.p1.initial_estimates.clone())?;
    let mut s2 = LearnerState::new(exp.p2.initial_strategy.clone(), exp.p2.initial_estimates.clone())?;
    let rec = Recorder { spec: &exp.spec, saddle, estimates: (r1.scheme.uses_estimates(), r2.scheme.uses_estimates()) };
    let rows = exp.horizon.div_ceil(exp.record_stride) as usize + 1;
    let mut records = Vec::with_capacity(rows);
    records.push(rec.record(0, &s1, &s2, (f64::NAN, f64::NAN))?);
    let fail = |t: u64| move |e: Error| Error::Episode { seed, step: t, source: Box::new(e) };
    for t in 0..exp.horizon {
        let a1 = choose_action(&s1.strategy, &mut rng1);
        let a2 = choose_action(&s2.strategy, &mut rng2);
        let (u1, u2) = exp.spec.sample_payoff(&mut noise, a1, a2)?;
        s1 = step(r1.scheme, &s1, a1, u1, &r1.params(t)).map_err(fail(t))?;
        s2 = step(r2.scheme, &s2, a2, u2, &r2.params(t)).map_err(fail(t))?;
        let done = t + 1;
        if done % exp.record_stride == 0 || done == exp.horizon {
            records.push(rec.record(done, &s1, &s2, (u1, u2))?);
        }
    }
    Ok(Trajectory { seed, records })
}

/// Runs every seed, at most `jobs` at a time (all cores when `None`).
/// Output order follows `exp.seeds`.
pub fn run_seeds(exp: &Experiment, jobs: Option<usize>) -> Result<Vec<Trajectory>> {
    exp.validate()?;
    let saddle = solve_saddle(&exp.spec)?;
    let work = || exp.seeds.par_iter().map(|&seed| run_prepared(exp, &saddle, seed)).collect::<Result<Vec<_>>>();
    match jobs {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work),
    }
}

/// Across-seed statistics of every numeric column at every recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub seeds: Vec<u64>,
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    /// `mean[i][j]`: column `j` at time `times[i]`.
    pub mean: Vec<Vec<f64>>,
    /// Population standard deviation, same layout as `mean`.
    pub std: Vec<Vec<f64>>,
    /// Each seed's last record.
    pub finals: Vec<Record>,
}

impl AggregateReport {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Mean of `name` at the last recorded time.
    pub fn final_mean(&self, name: &str) -> Option<f64> {
        Some(self.mean.last()?[self.column(name)?])
    }
}

/// Column names of a record in CSV order, without `t`.
pub fn column_names(n1: usize, n2: usize) -> Vec<String> {
    let mut c = Vec::new();
    c.extend((0..n1).map(|i| format!("f_{i}")));
    c.extend((0..n2).map(|i| format!("g_{i}")));
    c.extend((0..n1).map(|i| format!("uhat1_{i}")));
    c.extend((0..n2).map(|i| format!("uhat2_{i}")));
    c.extend(["payoff1", "payoff2", "exploitability", "dist_saddle_sup"].map(String::from));
    c
}

impl Record {
    /// Values matching [`column_names`]; missing estimates become NaN.
    pub fn values(&self) -> Vec<f64> {
        let (n1, n2) = (self.f.len(), self.g.len());
        let pad = |v: &[f64], n: usize| if v.is_empty() { vec![f64::NAN; n] } else { v.to_vec() };
        let mut out = Vec::with_capacity(2 * (n1 + n2) + 4);
        out.extend_from_slice(&self.f);
        out.extend_from_slice(&self.g);
        out.extend(pad(&self.uhat1, n1));
        out.extend(pad(&self.uhat2, n2));
        out.extend([self.payoff1, self.payoff2, self.exploitability, self.dist_saddle_sup]);
        out
    }
}

pub fn aggregate(trajectories: &[Trajectory]) -> Result<AggregateReport> {
    let first = trajectories.first().ok_or_else(|| Error::Config("no trajectories to aggregate".into()))?;
    let times = first.times();
    if let Some(bad) = trajectories.iter().find(|t| t.times() != times) {
        return Err(Error::Internal(format!("seed {} recorded at different times", bad.seed)));
    }
    let columns = column_names(first.records[0].f.len(), first.records[0].g.len());
    let n = trajectories.len() as f64;
    let (mut mean, mut std) = (Vec::with_capacity(times.len()), Vec::with_capacity(times.len()));
    for i in 0..times.len() {
        let rows: Vec<Vec<f64>> = trajectories.iter().map(|t| t.records[i].values()).collect();
        let m: Vec<f64> = (0..columns.len()).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let s: Vec<f64> =
            (0..columns.len()).map(|j| (rows.iter().map(|r| (r[j] - m[j]).powi(2)).sum::<f64>() / n).sqrt()).collect();
        mean.push(m);
        std.push(s);
    }
    Ok(AggregateReport {
        seeds: trajectories.iter().map(|t| t.seed).collect(),
        columns,
        times,
        mean,
        std,
        finals: trajectories.iter().map(|t| t.last().clone()).collect(),
    })
}

pub fn run_aggregate(exp: &Experiment, jobs: Option<usize>) -> Result<AggregateReport> {
    aggregate(&run_seeds(exp, jobs)?)
}

/// A point of [`compare_to_ode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparePoint {
    pub t: f64,
    pub tau: f64,
    pub distance: f64,
}

/// Integrates `system` from the trajectory's first record on the clock
/// `taus` (one entry per record) and returns the sup distance between the
/// strategy blocks at each record.
pub fn compare_to_ode(
    traj: &Trajectory,
    system: &DynamicsSystem,
    taus: &[f64],
    max_dt: f64,
) -> Result<Vec<ComparePoint>> {
    if taus.len() != traj.records.len() {
        return Err(Error::Dimension { expected: traj.records.len(), got: taus.len() });
    }
    let first = &traj.records[0];
    let (n1, n2) = (system.spec.matrix.rows(), system.spec.matrix.cols());
    if first.f.len() != n1 {
        return Err(Error::Dimension { expected: n1, got: first.f.len() });
    }
    if first.g.len() != n2 {
        return Err(Error::Dimension { expected: n2, got: first.g.len() });
    }
    let mut init =
        OdeState::new(MixedStrategy::new(first.f.clone())?, MixedStrategy::new(first.g.clone())?).at_time(taus[0]);
    if system.carries_estimates() {
        init = init.with_estimates(if first.uhat1.is_empty() { vec![0.0; n1] } else { first.uhat1.clone() });
    }
    let states = system.integrate_on_grid(&init, taus, max_dt)?;
    Ok(traj
        .records
        .iter()
        .zip(&states)
        .zip(taus)
        .map(|((r, s), &tau)| ComparePoint {
            t: r.t,
            tau,
            distance: crate::game::sup_distance(&r.f, s.f.probs()).max(crate::game::sup_distance(&r.g, s.g.probs())),
        })
        .collect())
}

/// Records for an ODE trajectory in the shared CSV layout. Payoff columns
/// hold the expected payoffs of the state.
pub fn records_from_ode(spec: &GameSpec, traj: &OdeTrajectory) -> Result<Vec<Record>> {
    let saddle = solve_saddle(spec)?;
    traj.states
        .iter()
        .map(|s| {
            let (exploitability, dist) = metrics(spec, &saddle, &s.f, &s.g)?;
            let v = spec.expected_value(&s.f, &s.g)?;
            let uhat1 = s.u_hat1.clone().unwrap_or_default();
            let estimate_error = match &s.u_hat1 {
                Some(u) => estimate_gap(spec, Player::P1, u, &s.g)?,
                None => f64::NAN,
            };
            Ok(Record {
                t: s.time,
                f: s.f.probs().to_vec(),
                g: s.g.probs().to_vec(),
                uhat1,
                uhat2: vec![],
                payoff1: v,
                payoff2: spec.constant_c - v,
                exploitability,
                dist_saddle_sup: dist,
                estimate_error,
            })
        })
        .collect()
}

/// `‖g_t - β2,ε(f_t)‖_∞` at every record.
pub fn tracking_gap(spec: &GameSpec, traj: &Trajectory, epsilon: f64) -> Result<Vec<f64>> {
    traj.records
        .iter()
        .map(|r| {
            let f = MixedStrategy::new(r.f.clone())?;
            let b = softmax(&spec.payoff_vector(Player::P2, &f)?, epsilon)?;
            Ok(crate::game::sup_distance(&r.g, b.probs()))
        })
        .collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn trend_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Rows of player 1 that strictly dominate `action` in the expected game.
pub fn dominators(spec: &GameSpec, action: usize) -> Result<Vec<usize>> {
    let m = &spec.matrix;
    if action >= m.rows() {
        return Err(Error::ActionOutOfRange { action, count: m.rows() });
    }
    Ok((0..m.rows()).filter(|&b| b != action && (0..m.cols()).all(|j| m.get(b, j) > m.get(action, j))).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceProbe {
    pub action: usize,
    /// Final probability of `action` for each seed.
    pub finals: Vec<f64>,
    pub mean: f64,
    /// Least-squares slope of the action's probability over the last 10% of
    /// each seed's records.
    pub tail_slopes: Vec<f64>,
}

/// Runs `exp` and reports the mass player 1 keeps on a strictly dominated
/// `action`.
pub fn dominated_strategy_probe(exp: &Experiment, action: usize, jobs: Option<usize>) -> Result<DominanceProbe> {
    if dominators(&exp.spec, action)?.is_empty() {
        return Err(Error::Config(format!("row {action} is not strictly dominated by any pure row")));
    }
    let runs = run_seeds(exp, jobs)?;
    let finals: Vec<f64> = runs.iter().map(|t| t.last().f[action]).collect();
    let tail_slopes = runs
        .iter()
        .map(|t| {
            let k = (t.records.len() / 10).max(2);
            let tail = &t.records[t.records.len().saturating_sub(k)..];
            let xs: Vec<f64> = tail.iter().map(|r| r.t).collect();
            let ys: Vec<f64> = tail.iter().map(|r| r.f[action]).collect();
            trend_slope(&xs, &ys)
        })
        .collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    Ok(DominanceProbe { action, finals, mean, tail_slopes })
}
