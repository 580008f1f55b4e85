//! Violation reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Constraint families checked by the validator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// TG block frequency pinned to nominal times availability.
    TgFrequency,
    /// BESS frequency equals QSS value plus the synchronization adjustment,
    /// and the QSS value follows the surrogate.
    BessFrequency,
    /// Frequency, QSS, RoCoF and nadir within limits.
    FrequencySecurity,
    /// Switch terminal buses of a BS block share its frequency.
    TerminalFrequency,
    /// A closed ESW propagates frequency.
    EswFrequency,
    /// A closed SSW requires frequency matching within tolerance.
    SswFrequency,
    /// Zero flow through an SSW at its closing step.
    SswClosingFlow,
    /// Class selection is one-hot and equals the slack count.
    ClassSelection,
    /// Exactly the modes of the selected class may be selected.
    ModeSelection,
    SyncMonotone,
    /// Synchronization indicators agree with frequency differences.
    SyncIndicator,
    /// Synchronization indicators agree with the selected mode.
    ModeSync,
    /// At most one island merges into another per event.
    SafeTransition,
    BlockMonotone,
    /// Buses share their block's status.
    BlockBuses,
    /// Non-switchable lines share their block's status.
    BlockLines,
    /// A closed ESW requires its blocks energized.
    EswBlock,
    /// Limit on new ESW closures per block and step.
    EswPickup,
    /// A closed ESW needs an energized terminal at the previous step.
    EswTerminal,
    /// A new ESW closure may not join two energized terminals.
    EswMerge,
    SswMonotone,
    /// A closed SSW needs both terminals energized at the previous step.
    SswTerminals,
    /// Energized lines equal energized buses minus islands.
    Radiality,
    /// Slack count follows sources and closed SSWs.
    SlackCount,
    TgCapacity,
    BessCapacity,
    SocDynamics,
    SocBounds,
    PvOutput,
    ClDemand,
    NlDemand,
    /// NL pickup only in energized blocks.
    NlBlock,
    NlMonotone,
    NodalBalance,
    VoltageDrop,
    LineLimit,
    VoltageBand,
    /// Recorded TG availability matches the scenario.
    TgSchedule,
    /// BESS blocks always energized; TG block energized exactly when the TG is.
    SourceEnergization,
    DamagedBlock,
    /// Switchable line status equals switch status; closed lines need
    /// energized ends.
    LineStatus,
    /// Energized topology is a forest with a source in every tree.
    Forest,
    /// Synchronization indicators equal island co-membership.
    SyncIslands,
    /// The selected mode covers exactly the active BS set.
    ModeActiveSet,
    /// No SSW closed while the TG is unavailable under rule-based restoration.
    TgLockout,
    /// Open SSWs carry no flow.
    OpenSswFlow,
}

impl Constraint {
    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub t: usize,
    pub entity: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, c: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }

    pub fn counts(&self) -> BTreeMap<Constraint, usize> {
        let mut m = BTreeMap::new();
        for v in &self.violations {
            *m.entry(v.constraint).or_default() += 1;
        }
        m
    }
}

/// Collects violations whose residual exceeds a tolerance.
#[derive(Debug)]
pub(crate) struct Collector {
    pub t: usize,
    pub tol: f64,
    pub out: Vec<Violation>,
}

impl Collector {
    pub fn new(t: usize, tol: f64) -> Self {
        Collector { t, tol, out: Vec::new() }
    }

    /// Records `residual` if it exceeds the tolerance.
    pub fn check(&mut self, c: Constraint, entity: impl FnOnce() -> String, residual: f64) {
        if residual > self.tol || residual.is_nan() {
            self.out.push(Violation { constraint: c, t: self.t, entity: entity(), residual });
        }
    }

    /// Records a failed logical condition with unit residual.
    pub fn require(&mut self, c: Constraint, entity: impl FnOnce() -> String, ok: bool) {
        if !ok {
            self.out.push(Violation { constraint: c, t: self.t, entity: entity(), residual: 1.0 });
        }
    }

    /// Records `|a - b|` beyond tolerance.
    pub fn equal(&mut self, c: Constraint, entity: impl FnOnce() -> String, a: f64, b: f64) {
        self.check(c, entity, (a - b).abs());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_kebab_case() {
        assert_eq!(Constraint::SswClosingFlow.name(), "ssw-closing-flow");
        assert_eq!(Constraint::Radiality.to_string(), "radiality");
    }

    #[test]
    fn collector_respects_tolerance() {
        let mut c = Collector::new(3, 1e-6);
        c.check(Constraint::SocBounds, || "x".into(), 1e-7);
        c.check(Constraint::SocBounds, || "x".into(), 1e-3);
        c.require(Constraint::Forest, || "y".into(), false);
        assert_eq!(c.out.len(), 2);
        assert_eq!(c.out[0].t, 3);
    }
}
