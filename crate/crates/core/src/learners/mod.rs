//! Combined payoff-and-strategy learning schemes.
//!
//! Each scheme is a pure one-step update from a [`LearnerState`] and the
//! player's own realized payoff. No scheme observes the opponent's action.
//!
//! | scheme | strategy update                              | estimate update            |
//! |--------|----------------------------------------------|----------------------------|
//! | CRL0   | `f + λU(e_a - f)`                            | `û(a) += μ(U - û(a))`       |
//! | CRL1   | `(1-λ)f + λ softmax(û, ε)`                   | `û(a) += μ/f(a) (U - û(a))` |
//! | CRL2   | `(1-λ)f + λ imitative_softmax(f, û, ε)`      | as CRL1                    |
//! | RL2    | `f + λU(e_a - f)`                            | none                       |
//! | RL3    | `C(n+1)/(nC+U) (f + U e_a)`, renormalized    | none                       |

mod maps;
mod schedule;

pub use maps::{choose_action, imitative_softmax, perturb_strategy, softmax};
pub use schedule::RateSchedule;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MixedStrategy;

/// Floor on `f(a)` in the importance-weighted estimate update.
pub const ESTIMATE_DIVISOR_FLOOR: f64 = 1e-8;

/// Ceiling on the importance weight `mu / f(a)`. Beyond 1 the estimate
/// would overshoot the payoff just observed; a rarely played action could
/// then land far outside the payoff range and never be tried again.
pub const ESTIMATE_WEIGHT_CAP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    CRL0,
    CRL1,
    CRL2,
    RL2,
    RL3,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::CRL0, Scheme::CRL1, Scheme::CRL2, Scheme::RL2, Scheme::RL3];

    /// Schemes whose strategy update needs `0 <= λU < 1` (or `0 <= U <= C`).
    pub fn needs_nonnegative_payoffs(self) -> bool {
        matches!(self, Scheme::CRL0 | Scheme::RL2 | Scheme::RL3)
    }

    pub fn uses_estimates(self) -> bool {
        matches!(self, Scheme::CRL0 | Scheme::CRL1 | Scheme::CRL2)
    }

    pub fn uses_temperature(self) -> bool {
        matches!(self, Scheme::CRL1 | Scheme::CRL2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CRL0 => "CRL0",
            Scheme::CRL1 => "CRL1",
            Scheme::CRL2 => "CRL2",
            Scheme::RL2 => "RL2",
            Scheme::RL3 => "RL3",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}; expected one of CRL0, CRL1, CRL2, RL2, RL3")))
    }
}

/// One player's learning rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub scheme: Scheme,
    /// Strategy step size.
    pub lambda: RateSchedule,
    /// Estimate step size; unused by RL2 and RL3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<RateSchedule>,
    /// Logit temperature; CRL1 and CRL2 only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// RL3 normalizing constant `n` (defaults to the action count).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rl3_n: Option<f64>,
    /// RL3 payoff bound `C` (defaults to the largest attainable payoff).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rl3_c: Option<f64>,
}

impl LearnerConfig {
    pub fn new(scheme: Scheme, lambda: RateSchedule) -> Self {
        Self { scheme, lambda, mu: None, epsilon: None, rl3_n: None, rl3_c: None }
    }

    pub fn with_mu(mut self, mu: RateSchedule) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_rl3(mut self, n: f64, c: f64) -> Self {
        self.rl3_n = Some(n);
        self.rl3_c = Some(c);
        self
    }

    /// Checks hard preconditions and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        self.lambda.validate()?;
        if let Some(mu) = &self.mu {
            mu.validate()?;
        }
        if self.scheme.uses_estimates() && self.mu.is_none() {
            return Err(Error::Config(format!("{} needs an estimate schedule `mu`", self.scheme.name())));
        }
        if self.scheme.uses_temperature() {
            match self.epsilon {
                Some(e) if e > 0.0 && e.is_finite() => {}
                Some(e) => return Err(Error::Config(format!("epsilon = {e} must be positive"))),
                None => return Err(Error::Config(format!("{} needs a temperature `epsilon`", self.scheme.name()))),
            }
            let mu = self.mu.as_ref().expect("checked above");
            if !self.lambda.vanishes_relative_to(mu) {
                warnings.push(format!(
                    "{}: strategy rate lambda does not vanish relative to estimate rate mu; \
                     the payoff estimates may not run on the faster timescale",
                    self.scheme.name()
                ));
            }
        }
        if let Some(n) = self.rl3_n {
            if !(n > 0.0) {
                return Err(Error::Config(format!("rl3_n = {n} must be positive")));
            }
        }
        if let Some(c) = self.rl3_c {
            if !(c > 0.0) {
                return Err(Error::Config(format!("rl3_c = {c} must be positive")));
            }
        }
        Ok(warnings)
    }

    pub fn epsilon_or_err(&self) -> Result<f64> {
        self.epsilon.ok_or_else(|| Error::Config("missing epsilon".into()))
    }
}

/// One player's strategy, payoff estimates and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub strategy: MixedStrategy,
    pub estimates: Vec<f64>,
    pub t: u64,
}

impl LearnerState {
    pub fn new(strategy: MixedStrategy, estimates: Vec<f64>) -> Result<Self> {
        if estimates.len() != strategy.len() {
            return Err(Error::Dimension { expected: strategy.len(), got: estimates.len() });
        }
        if estimates.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("payoff estimates must be finite"));
        }
        Ok(Self { strategy, estimates, t: 0 })
    }

    /// Uniform strategy, zero estimates.
    pub fn uniform(n: usize) -> Self {
        Self { strategy: MixedStrategy::uniform(n), estimates: vec![0.0; n], t: 0 }
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.strategy.len() {
            Err(Error::ActionOutOfRange { action: a, count: self.strategy.len() })
        } else {
            Ok(())
        }
    }
}

fn check_reinforcement(lambda: f64, payoff: f64) -> Result<f64> {
    let step = lambda * payoff;
    if !(0.0..1.0).contains(&step) {
        return Err(Error::StepBound(format!("lambda * U = {lambda} * {payoff} = {step} outside [0, 1)")));
    }
    Ok(step)
}

fn check_mixing(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::StepBound(format!("mixing weight lambda = {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// `f + s (e_a - f)` for `s in [0, 1)`.
fn reinforce(strategy: &MixedStrategy, a: usize, step: f64) -> MixedStrategy {
    let probs =
        strategy.probs().iter().enumerate().map(|(b, &p)| p + step * (if b == a { 1.0 } else { 0.0 } - p)).collect();
    MixedStrategy::from_raw(probs)
}

fn mix(strategy: &MixedStrategy, target: &MixedStrategy, lambda: f64) -> MixedStrategy {
    let probs = strategy.probs().iter().zip(target.probs()).map(|(p, q)| (1.0 - lambda) * p + lambda * q).collect();
    MixedStrategy::from_raw(probs)
}

fn check_payoff(u: f64) -> Result<()> {
    if u.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("realized payoff {u} is not finite")))
    }
}

fn importance_weighted(state: &LearnerState, a: usize, u: f64, mu: f64) -> Vec<f64> {
    let mut est = state.estimates.clone();
    let weight = (mu / state.strategy[a].max(ESTIMATE_DIVISOR_FLOOR)).min(ESTIMATE_WEIGHT_CAP);
    est[a] += weight * (u - est[a]);
    est
}

/// Linear reward-inaction strategy update with a plain running-average
/// payoff estimate.
pub fn crl0_step(state: &LearnerState, a: usize, u: f64, lambda: f64, mu: f64) -> Result<LearnerState> {
    state.check_action(a)?;
    check_payoff(u)?;
    let step = check_reinforcement(lambda, u)?;
    let mut estimates = state.estimates.clone();
    estimates[a] += mu * (u - estimates[a]);
    Ok(LearnerState { strategy: reinforce(&state.strategy, a, step), estimates, t: state.t + 1 })
}

/// Logit-mixing strategy update; the estimate of the played action moves by
/// the importance-weighted error.
pub fn crl1_step(state: &LearnerState, a: usize, u: f64, lambda: f64, mu: f64, epsilon: f64) -> Result<LearnerState> {
    state.check_action(a)?;
    check_payoff(u)?;
    check_mixing(lambda)?;
    let target = softmax(&state.estimates, epsilon)?;
    Ok(LearnerState {
        strategy: mix(&state.strategy, &target, lambda),
        estimates: importance_weighted(state, a, u, mu),
        t: state.t + 1,
    })
}

/// CRL1 with the imitative logit map in place of the plain one.
pub fn crl2_step(state: &LearnerState, a: usize, u: f64, lambda: f64, mu: f64, epsilon: f64) -> Result<LearnerState> {
    state.check_action(a)?;
    check_payoff(u)?;
    check_mixing(lambda)?;
    let target = imitative_softmax(&state.strategy, &state.estimates, epsilon)?;
    Ok(LearnerState {
        strategy: mix(&state.strategy, &target, lambda),
        estimates: importance_weighted(state, a, u, mu),
        t: state.t + 1,
    })
}

pub fn rl2_step(state: &LearnerState, a: usize, u: f64, lambda: f64) -> Result<LearnerState> {
    state.check_action(a)?;
    check_payoff(u)?;
    let step = check_reinforcement(lambda, u)?;
    Ok(LearnerState {
        strategy: reinforce(&state.strategy, a, step),
        estimates: state.estimates.clone(),
        t: state.t + 1,
    })
}

/// Normalized reinforcement. The raw update is rescaled onto the simplex.
pub fn rl3_step(state: &LearnerState, a: usize, u: f64, n: f64, c: f64) -> Result<LearnerState> {
    state.check_action(a)?;
    check_payoff(u)?;
    if !(n > 0.0) {
        return Err(Error::domain(format!("RL3 constant n = {n} must be positive")));
    }
    if !(0.0..=c).contains(&u) {
        return Err(Error::StepBound(format!("RL3 payoff U = {u} outside [0, C = {c}]")));
    }
    let scale = c * (n + 1.0) / (n * c + u);
    let raw: Vec<f64> =
        state.strategy.probs().iter().enumerate().map(|(b, &p)| scale * (p + if b == a { u } else { 0.0 })).collect();
    let z: f64 = raw.iter().sum();
    Ok(LearnerState {
        strategy: MixedStrategy::from_raw(raw.into_iter().map(|x| x / z).collect()),
        estimates: state.estimates.clone(),
        t: state.t + 1,
    })
}

/// Rates and constants resolved for one update.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub lambda: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub rl3_n: f64,
    pub rl3_c: f64,
}

/// Dispatches to the scheme's update.
pub fn step(scheme: Scheme, state: &LearnerState, a: usize, u: f64, p: &StepParams) -> Result<LearnerState> {
    match scheme {
        Scheme::CRL0 => crl0_step(state, a, u, p.lambda, p.mu),
        Scheme::CRL1 => crl1_step(state, a, u, p.lambda, p.mu, p.epsilon),
        Scheme::CRL2 => crl2_step(state, a, u, p.lambda, p.mu, p.epsilon),
        Scheme::RL2 => rl2_step(state, a, u, p.lambda),
        Scheme::RL3 => rl3_step(state, a, u, p.rl3_n, p.rl3_c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use proptest::prelude::*;

    fn ms(v: &[f64]) -> MixedStrategy {
        MixedStrategy::new(v.to_vec()).unwrap()
    }

    fn state(f: &[f64], est: &[f64]) -> LearnerState {
        LearnerState::new(ms(f), est.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn crl0_examples() {
        let s = state(&[0.5, 0.5], &[0.0, 0.0]);
        let n = crl0_step(&s, 0, 1.0, 0.1, 0.5).unwrap();
        assert!(close(n.strategy.probs(), &[0.55, 0.45]));
        assert_eq!(n.t, 1);

        let s = state(&[0.3, 0.7], &[2.0, 1.0]);
        let n = crl0_step(&s, 0, 0.0, 0.1, 0.5).unwrap();
        assert_eq!(n.strategy, s.strategy);
        assert_eq!(n.estimates, vec![1.0, 1.0]);

        let s = state(&[0.5, 0.5], &[0.0, 0.0]);
        let n = crl0_step(&s, 0, 2.0, 0.1, 0.5).unwrap();
        assert_eq!(n.estimates, vec![1.0, 0.0]);
    }

    #[test]
    fn crl0_step_bound() {
        let s = LearnerState::uniform(2);
        match crl0_step(&s, 0, 2.0, 0.5, 0.1) {
            Err(Error::StepBound(msg)) => assert!(msg.contains("= 1")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(crl0_step(&s, 0, -1.0, 0.1, 0.1), Err(Error::StepBound(_))));
        assert!(matches!(crl0_step(&s, 5, 1.0, 0.1, 0.1), Err(Error::ActionOutOfRange { .. })));
    }

    #[test]
    fn crl1_examples() {
        let s = state(&[0.3, 0.7], &[1.0, 4.0]);
        assert_eq!(crl1_step(&s, 1, 3.0, 0.0, 0.1, 0.05).unwrap().strategy, s.strategy);

        let s = state(&[0.3, 0.7], &[2.6, 2.6]);
        assert!(close(crl1_step(&s, 0, 3.0, 1.0, 0.1, 0.05).unwrap().strategy.probs(), &[0.5, 0.5]));

        let s = state(&[0.5, 0.5], &[0.0, 0.0]);
        assert_eq!(crl1_step(&s, 0, 2.0, 0.1, 0.25, 0.05).unwrap().estimates, vec![1.0, 0.0]);
        assert!(matches!(crl1_step(&s, 0, 2.0, 1.5, 0.25, 0.05), Err(Error::StepBound(_))));
    }

    #[test]
    fn crl1_divisor_floor() {
        let s = state(&[1.0, 0.0], &[0.0, 0.0]);
        let n = crl1_step(&s, 1, 1.0, 0.0, 1e-9, 0.1).unwrap();
        assert!((n.estimates[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn estimate_never_overshoots_the_observation() {
        // mu / f(a) = 0.2 / 1e-4 would throw the estimate to -3999
        let s = state(&[0.9999, 0.0001], &[0.0, -2.0]);
        let n = crl1_step(&s, 1, -3.0, 0.0, 0.2, 0.05).unwrap();
        assert_eq!(n.estimates, vec![0.0, -3.0]);
        let n = crl2_step(&s, 1, -3.0, 0.0, 0.2, 0.05).unwrap();
        assert_eq!(n.estimates, vec![0.0, -3.0]);
    }

    #[test]
    fn crl2_examples() {
        let s = state(&[0.5, 0.5], &[0.7, -0.2]);
        let a = crl2_step(&s, 1, 1.0, 0.3, 0.2, 0.4).unwrap();
        let b = crl1_step(&s, 1, 1.0, 0.3, 0.2, 0.4).unwrap();
        assert!(close(a.strategy.probs(), b.strategy.probs()));
        assert_eq!(a.estimates, b.estimates);

        let s = state(&[1.0, 0.0], &[-3.0, 8.0]);
        assert_eq!(crl2_step(&s, 0, 1.0, 0.7, 0.2, 0.1).unwrap().strategy.probs(), &[1.0, 0.0]);

        let s = state(&[0.2, 0.8], &[-3.0, 8.0]);
        assert_eq!(crl2_step(&s, 0, 1.0, 0.0, 0.2, 0.1).unwrap().strategy, s.strategy);
    }

    #[test]
    fn rl2_examples() {
        let s = state(&[0.5, 0.5], &[0.0, 0.0]);
        assert!(close(rl2_step(&s, 0, 1.0, 0.1).unwrap().strategy.probs(), &[0.55, 0.45]));
        assert_eq!(rl2_step(&s, 1, 0.0, 0.1).unwrap().strategy, s.strategy);
        let v = state(&[1.0, 0.0], &[0.0, 0.0]);
        assert_eq!(rl2_step(&v, 0, 3.0, 0.3).unwrap().strategy.probs(), &[1.0, 0.0]);
        assert!(matches!(rl2_step(&s, 0, 3.0, 0.5), Err(Error::StepBound(_))));
    }

    #[test]
    fn rl3_examples() {
        let s = state(&[0.3, 0.7], &[0.0, 0.0]);
        assert!(close(rl3_step(&s, 0, 0.0, 2.0, 5.0).unwrap().strategy.probs(), &[0.3, 0.7]));
        let s = state(&[0.5, 0.5], &[0.0, 0.0]);
        assert!(close(rl3_step(&s, 0, 1.0, 1.0, 1.0).unwrap().strategy.probs(), &[0.75, 0.25]));
        let v = state(&[1.0, 0.0], &[0.0, 0.0]);
        assert_eq!(rl3_step(&v, 0, 0.5, 2.0, 1.0).unwrap().strategy.probs(), &[1.0, 0.0]);
        assert!(matches!(rl3_step(&s, 0, 1.5, 1.0, 1.0), Err(Error::StepBound(_))));
        assert!(matches!(rl3_step(&s, 0, -0.5, 1.0, 1.0), Err(Error::StepBound(_))));
    }

    #[test]
    fn scheme_names_parse() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("CRL3".parse::<Scheme>().is_err());
    }

    #[test]
    fn config_validation() {
        let crl1 = LearnerConfig::new(Scheme::CRL1, RateSchedule::R1);
        assert!(crl1.validate().is_err());
        let crl1 = crl1.with_mu(RateSchedule::power(0.6, 1.0).unwrap()).with_epsilon(0.05);
        assert!(crl1.validate().unwrap().is_empty());
        let same = LearnerConfig::new(Scheme::CRL1, RateSchedule::R1).with_mu(RateSchedule::R1).with_epsilon(0.05);
        assert_eq!(same.validate().unwrap().len(), 1);
        let bad = LearnerConfig::new(Scheme::CRL2, RateSchedule::R1).with_mu(RateSchedule::R1).with_epsilon(0.0);
        assert!(bad.validate().is_err());
        assert!(LearnerConfig::new(Scheme::RL2, RateSchedule::R1).validate().unwrap().is_empty());
    }

    #[test]
    fn crl1_learns_frozen_payoffs() {
        // Frozen opponent, deterministic payoffs per action: estimates converge
        // to the payoffs on every action the strategy keeps in play.
        let payoffs = [2.0, 3.0, 1.5];
        let mut s = LearnerState::uniform(3);
        let mut rng = RandomSource::new(5);
        let lam = RateSchedule::R1;
        let mu = RateSchedule::power(0.6, 1.0).unwrap();
        for t in 0..50_000 {
            let a = choose_action(&s.strategy, &mut rng);
            s = crl1_step(&s, a, payoffs[a], lam.rate(t), mu.rate(t), 2.0).unwrap();
        }
        for a in 0..3 {
            assert!(s.strategy[a] > ESTIMATE_DIVISOR_FLOOR);
            assert!((s.estimates[a] - payoffs[a]).abs() < 1e-3, "{:?}", s.estimates);
        }
    }

    fn any_state(n: usize) -> impl Strategy<Value = LearnerState> {
        (proptest::collection::vec(0.0f64..1.0, n), proptest::collection::vec(-5.0f64..5.0, n))
            .prop_filter("mass", |(w, _)| w.iter().sum::<f64>() > 1e-6)
            .prop_map(|(w, est)| LearnerState::new(MixedStrategy::normalized(w).unwrap(), est).unwrap())
    }

    fn on_simplex(s: &MixedStrategy) -> bool {
        (s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12 && s.probs().iter().all(|p| (0.0..=1.0).contains(p))
    }

    proptest! {
        #[test]
        fn steps_preserve_simplex(s in any_state(4), a in 0usize..4, u in 0.0f64..6.0, lam in 0.0f64..1.0, mu in 0.0f64..1.0, eps in 0.01f64..2.0) {
            let lam_r = lam / 6.0;
            prop_assert!(on_simplex(&crl0_step(&s, a, u, lam_r, mu).unwrap().strategy));
            prop_assert!(on_simplex(&crl1_step(&s, a, u, lam, mu, eps).unwrap().strategy));
            prop_assert!(on_simplex(&crl2_step(&s, a, u, lam, mu, eps).unwrap().strategy));
            prop_assert!(on_simplex(&rl2_step(&s, a, u, lam_r).unwrap().strategy));
            prop_assert!(on_simplex(&rl3_step(&s, a, u, 4.0, 6.0).unwrap().strategy));
        }

        #[test]
        fn rl2_matches_crl0_strategy(s in any_state(3), a in 0usize..3, u in 0.0f64..1.0, lam in 0.0f64..0.99, mu in 0.0f64..1.0) {
            let x = crl0_step(&s, a, u, lam, mu).unwrap();
            let y = rl2_step(&s, a, u, lam).unwrap();
            prop_assert_eq!(x.strategy, y.strategy);
        }
    }
}
