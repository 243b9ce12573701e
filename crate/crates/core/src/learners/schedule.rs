//! Deterministic step-size sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning-rate family. Config files name the families `R1`, `R2`, `R3`,
/// `R4`, `scaled` and `constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum RateSchedule {
    /// `1 / (t + 1)`
    R1,
    /// `1 / ((t + 1) ln(t + 1))`, capped at 1.
    R2,
    /// `1 / (sqrt(t + 1) ln²(t + 1))`, capped at 1.
    R3,
    /// `1 / (t + offset)^rho` with `1/2 < rho <= 1`, `offset > 0`.
    R4 {
        rho: f64,
        #[serde(default = "default_offset")]
        offset: f64,
    },
    /// `k * base(t)`
    #[serde(rename = "scaled")]
    Scaled { k: f64, base: Box<RateSchedule> },
    /// Fixed step; used for ODE-tracking experiments and frozen players.
    #[serde(rename = "constant")]
    Constant { value: f64 },
}

fn default_offset() -> f64 {
    1.0
}

impl RateSchedule {
    pub fn power(rho: f64, offset: f64) -> Result<Self> {
        let s = RateSchedule::R4 { rho, offset };
        s.validate()?;
        Ok(s)
    }

    pub fn scaled(base: RateSchedule, k: f64) -> Result<Self> {
        let s = RateSchedule::Scaled { k, base: Box::new(base) };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(value: f64) -> Result<Self> {
        let s = RateSchedule::Constant { value };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RateSchedule::R1 | RateSchedule::R2 | RateSchedule::R3 => Ok(()),
            RateSchedule::R4 { rho, offset } => {
                if !(*rho > 0.5 && *rho <= 1.0) {
                    return Err(Error::Config(format!("R4 exponent rho = {rho} must lie in (1/2, 1]")));
                }
                if !(*offset > 0.0 && offset.is_finite()) {
                    return Err(Error::Config(format!("R4 offset c' = {offset} must be positive")));
                }
                Ok(())
            }
            RateSchedule::Scaled { k, base } => {
                if !(*k > 0.0 && k.is_finite()) {
                    return Err(Error::Config(format!("scale factor k = {k} must be positive")));
                }
                base.validate()
            }
            RateSchedule::Constant { value } => {
                if !(*value >= 0.0 && value.is_finite()) {
                    Err(Error::Config(format!("constant rate {value} must be non-negative")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Step size at iteration `t >= 0`.
    pub fn rate(&self, t: u64) -> f64 {
        let n = (t + 1) as f64;
        match self {
            RateSchedule::R1 => 1.0 / n,
            // ln(1) = 0, so the log families are capped at 1 near the origin.
            RateSchedule::R2 => {
                if t == 0 {
                    1.0
                } else {
                    (1.0 / (n * n.ln())).min(1.0)
                }
            }
            RateSchedule::R3 => {
                if t == 0 {
                    1.0
                } else {
                    let l = n.ln();
                    (1.0 / (n.sqrt() * l * l)).min(1.0)
                }
            }
            RateSchedule::R4 { rho, offset } => (t as f64 + offset).powf(-rho),
            RateSchedule::Scaled { k, base } => k * base.rate(t),
            RateSchedule::Constant { value } => *value,
        }
    }

    /// Asymptotic decay order `(p, q)` meaning `rate(t) ~ t^-p (ln t)^-q`.
    pub fn decay_order(&self) -> (f64, f64) {
        match self {
            RateSchedule::R1 => (1.0, 0.0),
            RateSchedule::R2 => (1.0, 1.0),
            RateSchedule::R3 => (0.5, 2.0),
            RateSchedule::R4 { rho, .. } => (*rho, 0.0),
            RateSchedule::Scaled { base, .. } => base.decay_order(),
            RateSchedule::Constant { value } => {
                if *value == 0.0 {
                    (f64::INFINITY, 0.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// True when `self(t) / other(t) -> 0`, decided from the families alone.
    pub fn vanishes_relative_to(&self, other: &RateSchedule) -> bool {
        let (p1, q1) = self.decay_order();
        let (p2, q2) = other.decay_order();
        p1 > p2 || (p1 == p2 && q1 > q2)
    }

    /// `Σ_{k < t} rate(k)`, the stochastic-approximation clock.
    pub fn clock(&self, t: u64) -> f64 {
        (0..t).map(|k| self.rate(k)).sum()
    }
}
