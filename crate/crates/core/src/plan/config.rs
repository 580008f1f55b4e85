//! Model parameters, frequency surrogate and rule sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Restoration policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleSet {
    /// Dynamic formation with the safe-transition restriction.
    Ssdmgf,
    /// Dynamic formation without the safe-transition restriction.
    Ndmgf,
    /// Rule-based: safe transitions, and no SSW closes before the TG returns.
    Rr,
}

impl RuleSet {
    pub fn safe_transitions(self) -> bool {
        !matches!(self, RuleSet::Ndmgf)
    }

    pub fn tg_lockout(self) -> bool {
        matches!(self, RuleSet::Rr)
    }
}

impl std::str::FromStr for RuleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssdmgf" => Ok(RuleSet::Ssdmgf),
            "ndmgf" => Ok(RuleSet::Ndmgf),
            "rr" => Ok(RuleSet::Rr),
            other => Err(Error::Config(format!("unknown rule set '{other}'"))),
        }
    }
}

impl std::fmt::Display for RuleSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RuleSet::Ssdmgf => "ssdmgf",
            RuleSet::Ndmgf => "ndmgf",
            RuleSet::Rr => "rr",
        })
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Band { lo, hi }
    }

    /// Distance outside the band, zero inside.
    pub fn excess(&self, v: f64) -> f64 {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }
}

/// Stand-in for the grid-forming inverter dynamics.
///
/// Each BESS has a no-load setpoint (from the feeder file). An island group
/// without the TG settles at the rating-weighted mean setpoint minus
/// `droop_gain` times the group's output per unit of group rating; a group
/// holding the TG sits at nominal. When islands merge, the new island takes
/// the rating-weighted mean of the merging groups' frequencies. RoCoF and
/// nadir follow from the step increase of each unit's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencySurrogate {
    pub nominal_hz: f64,
    /// Hz per unit of output on the group's own rating.
    pub droop_gain: f64,
    /// Virtual inertia constant in seconds.
    pub inertia_s: f64,
    /// Nadir depth in Hz per unit of output step on the unit rating.
    pub nadir_depth: f64,
    /// Synchronization tolerance.
    pub epsilon: f64,
    /// Pairwise frequency offset used by the synchronization indicators.
    pub mu: f64,
    pub f: Band,
    pub qss: Band,
    pub rocof: Band,
    pub nadir: Band,
}

impl Default for FrequencySurrogate {
    fn default() -> Self {
        FrequencySurrogate {
            nominal_hz: 60.0,
            droop_gain: 0.02,
            inertia_s: 10.0,
            nadir_depth: 0.5,
            epsilon: 0.05,
            mu: 0.0,
            f: Band::new(59.5, 60.5),
            qss: Band::new(59.5, 60.5),
            rocof: Band::new(0.0, 2.0),
            nadir: Band::new(59.0, 60.5),
        }
    }
}

impl FrequencySurrogate {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("f", self.f), ("qss", self.qss), ("rocof", self.rocof), ("nadir", self.nadir)] {
            if !(b.lo <= b.hi) {
                return Err(Error::Config(format!("frequency band '{name}' is not ordered")));
            }
        }
        if !(self.f.lo <= self.nominal_hz && self.nominal_hz <= self.f.hi) {
            return Err(Error::Config("nominal frequency outside the frequency band".into()));
        }
        if self.epsilon <= 0.0 || self.inertia_s <= 0.0 {
            return Err(Error::Config("epsilon and inertia must be positive".into()));
        }
        Ok(())
    }

    /// Group frequency without the TG.
    pub fn group_frequency(&self, setpoints_and_ratings: &[(f64, f64)], output: f64) -> f64 {
        let s: f64 = setpoints_and_ratings.iter().map(|(_, s)| s).sum();
        let mean: f64 = setpoints_and_ratings.iter().map(|(f, s)| f * s).sum::<f64>() / s;
        mean - self.droop_gain * output / s
    }

    pub fn rocof(&self, step_increase: f64, rating: f64) -> f64 {
        self.nominal_hz * step_increase.max(0.0) / (2.0 * self.inertia_s * rating)
    }

    pub fn nadir(&self, f: f64, step_increase: f64, rating: f64) -> f64 {
        f - self.nadir_depth * step_increase.max(0.0) / rating
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    pub alpha_cl: f64,
    pub alpha_nl: f64,
    pub clpu_beta: [f64; 3],
    pub frequency: FrequencySurrogate,
    /// Band on squared voltage magnitudes of energized buses.
    pub voltage_band: Band,
    /// Steps between block energization and PV reconnection.
    pub pv_delay: usize,
    pub tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            alpha_cl: 10.0,
            alpha_nl: 1.0,
            clpu_beta: [1.0, 0.6, 0.3],
            frequency: FrequencySurrogate::default(),
            voltage_band: Band::new(0.95 * 0.95, 1.05 * 1.05),
            pv_delay: 1,
            tolerance: 1e-6,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.frequency.validate()?;
        if !(self.voltage_band.lo <= self.voltage_band.hi) {
            return Err(Error::Config("voltage band is not ordered".into()));
        }
        if self.tolerance <= 0.0 {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn droop_example() {
        let s = FrequencySurrogate { droop_gain: 0.2, ..Default::default() };
        let f = s.group_frequency(&[(60.0, 1.0)], 0.5);
        assert!((f - 59.9).abs() < 1e-12);
    }

    #[test]
    fn rule_flags() {
        assert!(RuleSet::Ssdmgf.safe_transitions());
        assert!(!RuleSet::Ndmgf.safe_transitions());
        assert!(RuleSet::Rr.safe_transitions() && RuleSet::Rr.tg_lockout());
        assert_eq!("RR".parse::<RuleSet>().unwrap(), RuleSet::Rr);
    }

    #[test]
    fn defaults_are_ordered() {
        Params::default().validate().unwrap();
        let b = Params::default().voltage_band;
        assert!((b.lo - 0.9025).abs() < 1e-15 && (b.hi - 1.1025).abs() < 1e-15);
    }
}
