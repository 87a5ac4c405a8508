//! Verdicts and check reports shared by every audit.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ext::Ext;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// Quantifier had no applicable instances.
    Vacuous,
    /// Preconditions unmet; nothing was asserted.
    NotApplicable,
    /// Evidence is a certified subset only (caps, truncation).
    Partial,
    Fail,
}

impl Verdict {
    /// Fail dominates, then partial; pass when anything passed.
    pub fn combine(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
        let (mut any_pass, mut any_partial, mut any_vacuous) = (false, false, false);
        for v in vs {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Partial => any_partial = true,
                Verdict::Pass => any_pass = true,
                Verdict::Vacuous => any_vacuous = true,
                Verdict::NotApplicable => {}
            }
        }
        if any_partial {
            Verdict::Partial
        } else if any_pass {
            Verdict::Pass
        } else if any_vacuous {
            Verdict::Vacuous
        } else {
            Verdict::NotApplicable
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Vacuous | Verdict::NotApplicable => 0,
            Verdict::Fail => 1,
            Verdict::Partial => 2,
        }
    }

    pub fn is_ok(self) -> bool {
        self.exit_code() == 0
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::Vacuous => "vacuous",
            Verdict::NotApplicable => "not-applicable",
            Verdict::Partial => "partial",
            Verdict::Fail => "fail",
        };
        f.write_str(s)
    }
}

/// A concrete counterexample or extremal instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Witness {
    /// Indices into whatever the check quantifies over (apex indices for
    /// projection data).
    pub indices: Vec<usize>,
    pub labels: Vec<String>,
    pub values: Vec<Ext>,
    pub detail: String,
}

/// Result of one check or audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub verdict: Verdict,
    /// Parameters the verdict depends on (θ, K, window, bounds ...).
    pub stamps: BTreeMap<String, Value>,
    pub checked: u64,
    pub skipped: u64,
    pub violations: u64,
    /// Sorted; at most [`Report::MAX_WITNESSES`] kept.
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl Report {
    pub const MAX_WITNESSES: usize = 32;

    pub fn new(check: impl Into<String>) -> Report {
        Report {
            check: check.into(),
            verdict: Verdict::Vacuous,
            stamps: BTreeMap::new(),
            checked: 0,
            skipped: 0,
            violations: 0,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn stamp(mut self, key: &str, value: impl Serialize) -> Report {
        self.stamps
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn set_stamp(&mut self, key: &str, value: impl Serialize) {
        self.stamps
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn violation(&mut self, w: Witness) {
        self.violations += 1;
        self.witnesses.push(w);
    }

    /// Sorts witnesses, truncates the list and derives the verdict from the
    /// counts unless it was already set to fail or partial.
    pub fn finish(mut self) -> Report {
        self.witnesses.sort();
        self.witnesses.truncate(Self::MAX_WITNESSES);
        self.verdict = if self.violations > 0 {
            Verdict::Fail
        } else if self.verdict == Verdict::Partial || self.verdict == Verdict::NotApplicable {
            self.verdict
        } else if self.checked > 0 {
            Verdict::Pass
        } else {
            Verdict::Vacuous
        };
        self
    }

    /// Merges counts and witnesses from a partial report over a sub-range.
    pub fn absorb(&mut self, other: Report) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.violations += other.violations;
        self.witnesses.extend(other.witnesses);
        self.notes.extend(other.notes);
        if other.verdict == Verdict::Partial {
            self.verdict = Verdict::Partial;
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{:<28} {:<14} checked={} skipped={} violations={}",
            self.check, self.verdict, self.checked, self.skipped, self.violations
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_precedence() {
        use Verdict::*;
        assert_eq!(Verdict::combine([Pass, Fail, Partial]), Fail);
        assert_eq!(Verdict::combine([Pass, Partial]), Partial);
        assert_eq!(Verdict::combine([Pass, Vacuous, NotApplicable]), Pass);
        assert_eq!(Verdict::combine([Vacuous, NotApplicable]), Vacuous);
        assert_eq!(Verdict::combine([]), NotApplicable);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Verdict::Pass.exit_code(), 0);
        assert_eq!(Verdict::Fail.exit_code(), 1);
        assert_eq!(Verdict::Partial.exit_code(), 2);
    }

    #[test]
    fn finish_derives_verdict() {
        let mut r = Report::new("x");
        r.checked = 3;
        assert_eq!(r.clone().finish().verdict, Verdict::Pass);
        r.violation(Witness {
            indices: vec![1],
            labels: vec![],
            values: vec![Ext::Inf],
            detail: String::new(),
        });
        assert_eq!(r.finish().verdict, Verdict::Fail);
        assert_eq!(Report::new("y").finish().verdict, Verdict::Vacuous);
    }
}
