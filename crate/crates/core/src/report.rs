//! Machine-readable checker verdicts shared by every checker in the crate.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    // Resolution proofs.
    ParentNotEarlier,
    NotAnAxiom,
    PivotMismatch,
    ResolventMismatch,
    WeakeningNotSuperset,
    WeakeningDisallowed,
    NotOrdered,
    NotHalfOrdered,
    NotRefutation,
    // P0 proofs.
    WrongLineType,
    NotPiSmallest,
    AlreadyAssigned,
    NotUnit,
    PivotNotInTrail,
    PremiseNotBeforePivot,
    ResolventNotFalsified,
    // Runs.
    ActionNotAvailable,
    ActionFiltered,
    BadJustification,
    LearnedClauseNotDerivable,
    NotTerminal,
    BudgetExceeded,
    // Width audits.
    TrailNotTrivial,
    SmallVarsMissing,
    WidthTooSmall,
    WidthAmendmentViolated,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based line, node or step number.
    pub location: usize,
    pub code: ViolationCode,
    pub detail: String,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub valid: bool,
    pub size: usize,
    pub width: usize,
    pub violation: Option<Violation>,
}

impl CheckReport {
    pub fn ok(size: usize, width: usize) -> CheckReport {
        CheckReport { valid: true, size, width, violation: None }
    }

    pub fn fail(size: usize, width: usize, location: usize, code: ViolationCode, detail: impl Into<String>) -> CheckReport {
        CheckReport {
            valid: false,
            size,
            width,
            violation: Some(Violation { location, code, detail: detail.into() }),
        }
    }

    pub fn code(&self) -> Option<ViolationCode> {
        self.violation.as_ref().map(|v| v.code)
    }

    pub fn location(&self) -> Option<usize> {
        self.violation.as_ref().map(|v| v.location)
    }
}
