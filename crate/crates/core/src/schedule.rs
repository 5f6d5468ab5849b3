//! Piecewise-constant input profiles.

use crate::error::{Error, Result};
use crate::network::NetworkInputs;

/// Right-continuous step function: the value at a breakpoint is the new value.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    breakpoints: Vec<(f64, f64)>,
}

impl Profile {
    /// `breakpoints` must start at `t = 0` and be strictly increasing.
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        match breakpoints.first() {
            None => return Err(Error::Semantic("profile has no breakpoints".into())),
            Some((t0, _)) if *t0 != 0.0 => {
                return Err(Error::Semantic(format!("profile must start at t = 0, starts at {t0}")))
            }
            _ => {}
        }
        if breakpoints.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::Semantic("profile contains non-finite entries".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Semantic("non-monotone breakpoints".into()));
        }
        Ok(Self { breakpoints })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, value)],
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn times(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|(t, _)| *t).collect()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|(tb, _)| *tb <= t);
        self.breakpoints[idx.saturating_sub(1)].1
    }

    pub fn max_abs(&self) -> f64 {
        self.breakpoints.iter().fold(0.0, |a, (_, v)| a.max(v.abs()))
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().map(|(t, v)| (*t, f(*v))).collect(),
        }
    }
}

/// Profiles for every input of a network, in the network's input order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputSchedule {
    pub supply_pressure: Vec<Profile>,
    pub demand: Vec<Profile>,
    pub setpoints: Vec<Profile>,
}

impl InputSchedule {
    pub fn inputs_at(&self, t: f64) -> NetworkInputs {
        NetworkInputs {
            supply_pressure: self.supply_pressure.iter().map(|p| p.value_at(t)).collect(),
            demand: self.demand.iter().map(|p| p.value_at(t)).collect(),
            setpoints: self.setpoints.iter().map(|p| p.value_at(t)).collect(),
        }
    }

    /// Largest supply pressure at `t = 0`.
    pub fn reference_pressure(&self) -> Option<f64> {
        self.supply_pressure
            .iter()
            .map(|p| p.value_at(0.0))
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Largest absolute demand over the whole horizon, floored at 1.
    pub fn reference_momentum(&self) -> f64 {
        self.demand.iter().fold(1.0, |a, p| a.max(p.max_abs()))
    }

    /// All breakpoint times, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .supply_pressure
            .iter()
            .chain(&self.demand)
            .chain(&self.setpoints)
            .flat_map(|p| p.times())
            .collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}
