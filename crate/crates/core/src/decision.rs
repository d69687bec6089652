//! Three-valued decision outcomes shared across the solver and formula layers.

use serde::Serialize;

use crate::valued_fields::FieldElement;

/// Truth value of a decision procedure. `Indeterminate` means the question
/// could not be settled within the configured precision caps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    True,
    False,
    Indeterminate,
}

impl Decision {
    pub fn and(self, other: Decision) -> Decision {
        use Decision::*;
        match (self, other) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Indeterminate,
        }
    }

    pub fn or(self, other: Decision) -> Decision {
        use Decision::*;
        match (self, other) {
            (True, _) | (_, True) => True,
            (False, False) => False,
            _ => Indeterminate,
        }
    }

    pub fn not(self) -> Decision {
        use Decision::*;
        match self {
            True => False,
            False => True,
            Indeterminate => Indeterminate,
        }
    }

    pub fn is_true(self) -> bool {
        self == Decision::True
    }

    pub fn is_false(self) -> bool {
        self == Decision::False
    }
}

/// A decision together with an optional witness element and a human-readable
/// certificate trace explaining how the answer was reached.
#[derive(Clone, Debug)]
pub struct DecisionResult {
    pub decision: Decision,
    pub witness: Option<FieldElement>,
    pub certificate: Vec<String>,
}

impl DecisionResult {
    pub fn yes(witness: Option<FieldElement>, reason: impl Into<String>) -> Self {
        DecisionResult {
            decision: Decision::True,
            witness,
            certificate: vec![reason.into()],
        }
    }

    pub fn no(reason: impl Into<String>) -> Self {
        DecisionResult {
            decision: Decision::False,
            witness: None,
            certificate: vec![reason.into()],
        }
    }

    pub fn indeterminate(reason: impl Into<String>) -> Self {
        DecisionResult {
            decision: Decision::Indeterminate,
            witness: None,
            certificate: vec![reason.into()],
        }
    }

    pub fn push(mut self, line: impl Into<String>) -> Self {
        self.certificate.push(line.into());
        self
    }
}
