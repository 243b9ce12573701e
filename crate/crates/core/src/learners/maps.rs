//! Boltzmann-Gibbs maps and action sampling.

use crate::error::{Error, Result};
use crate::game::MixedStrategy;
use crate::rng::RandomSource;

fn check_temperature(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("temperature epsilon = {epsilon} must be positive")))
    }
}

/// Logit map: `exp(u(a)/ε) / Σ exp(u(a')/ε)`, evaluated with max-subtraction.
pub fn softmax(u: &[f64], epsilon: f64) -> Result<MixedStrategy> {
    check_temperature(epsilon)?;
    if u.is_empty() || u.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("payoff vector must be non-empty and finite"));
    }
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = u.iter().map(|x| ((x - top) / epsilon).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(MixedStrategy::from_raw(w.into_iter().map(|x| x / z).collect()))
}

/// Imitative logit map: weights `strategy(a) exp(u(a)/ε)`, normalized.
/// Actions with zero probability stay at zero.
pub fn imitative_softmax(strategy: &MixedStrategy, u: &[f64], epsilon: f64) -> Result<MixedStrategy> {
    check_temperature(epsilon)?;
    if u.len() != strategy.len() {
        return Err(Error::Dimension { expected: strategy.len(), got: u.len() });
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("payoff vector must be finite"));
    }
    // Subtract the max over the support only, so off-support entries cannot
    // underflow the whole vector.
    let top =
        strategy.probs().iter().zip(u).filter(|(p, _)| **p > 0.0).map(|(_, x)| *x).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = strategy
        .probs()
        .iter()
        .zip(u)
        .map(|(p, x)| if *p > 0.0 { p * ((x - top) / epsilon).exp() } else { 0.0 })
        .collect();
    let z: f64 = w.iter().sum();
    if !(z > 0.0) {
        return Err(Error::domain("imitative weights vanish"));
    }
    Ok(MixedStrategy::from_raw(w.into_iter().map(|x| x / z).collect()))
}

/// `(1 - eps) strategy + eps uniform`.
pub fn perturb_strategy(strategy: &MixedStrategy, eps: f64) -> Result<MixedStrategy> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::domain(format!("perturbation {eps} outside [0, 1]")));
    }
    let n = strategy.len() as f64;
    Ok(MixedStrategy::from_raw(strategy.probs().iter().map(|p| (1.0 - eps) * p + eps / n).collect()))
}

/// Inverse-CDF sampling from a single uniform draw.
pub fn choose_action(strategy: &MixedStrategy, rng: &mut RandomSource) -> usize {
    let u = rng.uniform();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (a, &p) in strategy.probs().iter().enumerate() {
        if p > 0.0 {
            last_positive = a;
            cum += p;
            if u < cum {
                return a;
            }
        }
    }
    // Round-off left the cumulative sum just below u.
    last_positive
}
