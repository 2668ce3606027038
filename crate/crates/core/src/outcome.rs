//! Three-valued verdicts for bounded searches.
//!
//! Every checker in this crate that searches a space it cannot always exhaust
//! reports `Holds`, `Fails`, or `Inconclusive`, never a silent best guess.
//! `Fails` always comes with a witness that an independent pass can replay;
//! `Inconclusive` records how far the search got.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    /// Process exit code used by the command-line tools.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Holds => "HOLDS",
            Verdict::Fails => "FAILS",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        f.write_str(s)
    }
}

/// Result of a bounded check: the verdict plus enough context to interpret it.
///
/// `W` is the witness type for failures, `C` a certificate for positive
/// verdicts where one exists (for instance a completing embedding). `explored`
/// and `complete` say how much of the space was visited and whether the
/// enumeration finished; an incomplete `Holds` is reported as `Inconclusive`
/// by every checker here, so `Holds` with `complete == false` never escapes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome<W, C = ()> {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<W>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<C>,
    /// Extension depth actually used, for depth-bounded checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_used: Option<usize>,
    /// Candidates visited before the verdict was reached.
    pub explored: u64,
    /// Whether the bounded search space was exhausted.
    pub complete: bool,
    /// Free-form reason, mainly for inconclusive verdicts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl<W, C> CheckOutcome<W, C> {
    pub fn holds() -> Self {
        CheckOutcome {
            verdict: Verdict::Holds,
            witness: None,
            certificate: None,
            depth_used: None,
            explored: 0,
            complete: true,
            note: None,
        }
    }

    pub fn fails(witness: W) -> Self {
        CheckOutcome {
            verdict: Verdict::Fails,
            witness: Some(witness),
            certificate: None,
            depth_used: None,
            explored: 0,
            complete: true,
            note: None,
        }
    }

    pub fn inconclusive(note: impl Into<String>) -> Self {
        CheckOutcome {
            verdict: Verdict::Inconclusive,
            witness: None,
            certificate: None,
            depth_used: None,
            explored: 0,
            complete: false,
            note: Some(note.into()),
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth_used = Some(depth);
        self
    }

    pub fn with_explored(mut self, explored: u64) -> Self {
        self.explored = explored;
        self
    }

    pub fn with_certificate(mut self, cert: C) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}
