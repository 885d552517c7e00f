//! Failure taxonomy: detection, planning and exploration errors.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StoppedNearTarget,
    StoppedFar,
    BudgetExhausted,
    FrontiersExhausted,
    Stuck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    None,
    Detection,
    Planning,
    Exploration,
}

/// What the episode recorded about the target, for classifying a failure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEvidence {
    /// The agent stopped believing a non-target cell held the target.
    pub false_target_at_stop: bool,
    /// Some true target cell was visible at some step.
    pub target_ever_visible: bool,
    /// The target label was reported at a true target cell at least once.
    pub target_ever_reported: bool,
    /// At the end, a true target cell carries the target label in the map.
    pub target_mapped: bool,
    /// Path planning toward the goal failed at some point.
    pub stuck_signaled: bool,
}

/// Assigns exactly one class to a failed episode.
pub fn classify_error(stop: StopReason, ev: &FailureEvidence) -> ErrorClass {
    if (stop == StopReason::StoppedFar && ev.false_target_at_stop)
        || (ev.target_ever_visible && !ev.target_ever_reported)
    {
        return ErrorClass::Detection;
    }
    let ended_without_reaching = matches!(stop, StopReason::Stuck | StopReason::BudgetExhausted);
    if (ev.target_mapped && ended_without_reaching) || ev.stuck_signaled {
        return ErrorClass::Planning;
    }
    ErrorClass::Exploration
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn false_positive_stop_is_detection() {
        let ev = FailureEvidence {
            false_target_at_stop: true,
            ..Default::default()
        };
        assert_eq!(classify_error(StopReason::StoppedFar, &ev), ErrorClass::Detection);
    }

    #[test]
    fn seen_but_never_reported_is_detection() {
        let ev = FailureEvidence {
            target_ever_visible: true,
            ..Default::default()
        };
        assert_eq!(classify_error(StopReason::BudgetExhausted, &ev), ErrorClass::Detection);
    }

    #[test]
    fn mapped_then_stuck_is_planning() {
        let ev = FailureEvidence {
            target_ever_visible: true,
            target_ever_reported: true,
            target_mapped: true,
            stuck_signaled: true,
            ..Default::default()
        };
        assert_eq!(classify_error(StopReason::Stuck, &ev), ErrorClass::Planning);
        let ev = FailureEvidence {
            stuck_signaled: false,
            ..ev
        };
        assert_eq!(classify_error(StopReason::BudgetExhausted, &ev), ErrorClass::Planning);
    }

    #[test]
    fn never_seen_is_exploration() {
        let ev = FailureEvidence::default();
        assert_eq!(classify_error(StopReason::BudgetExhausted, &ev), ErrorClass::Exploration);
        assert_eq!(classify_error(StopReason::FrontiersExhausted, &ev), ErrorClass::Exploration);
    }
}
