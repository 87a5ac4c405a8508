//! Named constants and the inequalities tying them together.
//!
//! Everything is exact: fractional powers of two are compared by raising both
//! sides to the denominator, and `δ·log₂ δ` is floored with a rounding note.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::Verdict;

/// `floor(2^(num/den))`, saturating at `u64::MAX`.
pub fn pow2_frac_floor(num: u64, den: u64) -> u64 {
    assert!(den > 0, "zero denominator");
    if num / den >= 64 {
        return u64::MAX;
    }
    let big = BigUint::from(1u8) << num;
    let root = big.nth_root(u32::try_from(den).expect("denominator fits in u32"));
    u64::try_from(root).unwrap_or(u64::MAX)
}

/// `value ≥ 2^(num/den)`, exactly.
pub fn at_least_pow2_frac(value: u64, num: u64, den: u64) -> bool {
    assert!(den > 0, "zero denominator");
    if value == 0 {
        return false;
    }
    let lhs = BigUint::from(value).pow(u32::try_from(den).expect("denominator fits in u32"));
    lhs >= BigUint::from(1u8) << num
}

/// `2^(num/den) > value`, exactly.
pub fn pow2_frac_exceeds(num: u64, den: u64, value: u64) -> bool {
    assert!(den > 0, "zero denominator");
    BigUint::from(value).pow(u32::try_from(den).expect("denominator fits in u32"))
        < BigUint::from(1u8) << num
}

/// `floor(δ·log₂ δ)` and whether the logarithm was exact.
pub fn delta_log2_delta(delta: u64) -> (u64, bool) {
    assert!(delta > 0);
    if delta.is_power_of_two() {
        return (delta * delta.trailing_zeros() as u64, true);
    }
    // largest n with 2^n ≤ δ^δ
    let target = BigUint::from(delta).pow(delta as u32);
    (target.bits() - 1, false)
}

/// `2^(num/den) - sub`, floored, as a signed value.
fn pow2_minus(num: u64, den: u64, sub: u64) -> i64 {
    pow2_frac_floor(num, den).min(i64::MAX as u64) as i64 - sub as i64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub delta: u64,
    pub rho: u64,
    #[serde(rename = "R")]
    pub r: u64,
    pub theta: u64,
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(rename = "M")]
    pub m: u64,
    /// Spinning constant; negative for parameters too small to be useful.
    #[serde(rename = "L")]
    pub l: i64,
    /// Canoe constant, the least integer above `4M + K`.
    #[serde(rename = "C")]
    pub c: u64,
    /// Per-triple spinning bound `2^((R-2)/δ) - 4 - 6δ`.
    pub spin_bound: i64,
    pub notes: Vec<String>,
}

impl ParameterSet {
    /// Fills in the derived constants from `δ, ρ, R, θ, K` without checking
    /// anything.
    pub fn from_core(delta: u64, rho: u64, r: u64, theta: u64, k: u64) -> ParameterSet {
        let delta = delta.max(1);
        let m = 8 * k + 2 * theta;
        let l = pow2_minus(r.saturating_sub(2), delta, 4 + 248 * delta);
        ParameterSet {
            delta,
            rho,
            r,
            theta,
            k,
            m,
            l,
            c: 4 * m + k + 1,
            spin_bound: pow2_minus(r.saturating_sub(2), delta, 4 + 6 * delta),
            notes: Vec::new(),
        }
    }

    pub fn canoe_threshold(&self) -> u64 {
        4 * self.m + self.k
    }
}

/// `θ = 121δ`, `K = 3θ`, `R = δ log₂ δ + 16δ` (floored).
pub fn derive_parameters(delta: u64, rho: u64) -> Result<ParameterSet> {
    if delta == 0 {
        return Err(Error::Parameters("delta must be at least 1".into()));
    }
    let (dlog, exact) = delta_log2_delta(delta);
    let theta = 121 * delta;
    let mut p = ParameterSet::from_core(delta, rho, dlog + 16 * delta, theta, 3 * theta);
    if !exact {
        p.notes.push(format!(
            "log2({delta}) is irrational; R uses floor(delta*log2 delta) = {dlog}"
        ));
    }
    let ledger = validate_parameters(&p);
    if let Some(bad) = ledger.lines.iter().find(|l| l.verdict == Verdict::Fail) {
        return Err(Error::Parameters(format!(
            "{} fails: {} (lhs {}, rhs {})",
            bad.name, bad.statement, bad.lhs, bad.rhs
        )));
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerLine {
    pub name: String,
    pub statement: String,
    pub lhs: String,
    pub rhs: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterLedger {
    pub params: ParameterSet,
    pub lines: Vec<LedgerLine>,
    pub verdict: Verdict,
}

impl ParameterLedger {
    pub fn line(&self, name: &str) -> Option<&LedgerLine> {
        self.lines.iter().find(|l| l.name == name)
    }
}

fn line(name: &str, statement: String, lhs: impl ToString, rhs: impl ToString, ok: bool) -> LedgerLine {
    LedgerLine {
        name: name.into(),
        statement,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    }
}

/// Checks every inequality relating the constants, one line each.
pub fn validate_parameters(p: &ParameterSet) -> ParameterLedger {
    let d = p.delta.max(1);
    let mut lines = Vec::new();

    // ρ ≥ 2δ log₂ δ + 38δ  ⇔  2^(ρ - 38δ) ≥ δ^(2δ)
    let rho_ok = p.rho >= 38 * d && {
        let lhs = BigUint::from(1u8) << (p.rho - 38 * d);
        lhs >= BigUint::from(d).pow(2 * d as u32)
    };
    let (dlog, _) = delta_log2_delta(d);
    lines.push(line(
        "rho_bound",
        format!("rho >= 2*delta*log2(delta) + 38*delta (about {})", 2 * dlog + 38 * d),
        p.rho,
        format!("2*{d}*log2({d}) + {}", 38 * d),
        rho_ok,
    ));
    lines.push(line(
        "radius_lower",
        "R >= 2 + 2*delta".into(),
        p.r,
        2 + 2 * d,
        p.r >= 2 + 2 * d,
    ));
    // R ≤ ρ/2 - 3δ  ⇔  2R + 6δ ≤ ρ
    lines.push(line(
        "radius_upper",
        "R <= rho/2 - 3*delta".into(),
        p.r,
        format!("{}/2 - {}", p.rho, 3 * d),
        2 * p.r + 6 * d <= p.rho,
    ));
    lines.push(line(
        "theta_lower",
        "theta >= 121*delta".into(),
        p.theta,
        121 * d,
        p.theta >= 121 * d,
    ));
    lines.push(line("k_lower", "K >= 3*theta".into(), p.k, 3 * p.theta, p.k >= 3 * p.theta));
    lines.push(line(
        "m_formula",
        "M = 8K + 2*theta".into(),
        p.m,
        8 * p.k + 2 * p.theta,
        p.m == 8 * p.k + 2 * p.theta,
    ));
    let want_l = pow2_minus(p.r.saturating_sub(2), d, 4 + 248 * d);
    lines.push(line(
        "l_formula",
        "L = 2^((R-2)/delta) - 4 - 248*delta".into(),
        p.l,
        want_l,
        p.l == want_l,
    ));
    let want_spin = pow2_minus(p.r.saturating_sub(2), d, 4 + 6 * d);
    lines.push(line(
        "spin_bound_formula",
        "per-triple bound = 2^((R-2)/delta) - 4 - 6*delta".into(),
        p.spin_bound,
        want_spin,
        p.spin_bound == want_spin,
    ));
    let threshold = 4 * p.m + p.k;
    // L > 4M + K, evaluated before flooring
    lines.push(line(
        "l_exceeds_canoe_threshold",
        "L > 4M + K".into(),
        p.l,
        threshold,
        pow2_frac_exceeds(p.r.saturating_sub(2), d, threshold + 4 + 248 * d),
    ));
    lines.push(line(
        "c_exceeds_canoe_threshold",
        "C > 4M + K".into(),
        p.c,
        threshold,
        p.c > threshold,
    ));
    // Sufficient form used for the standard choice of θ and K.
    lines.push(line(
        "sufficient_check",
        format!("2^(R/delta) > 4*13199*delta = {}", 4 * 13199 * d),
        pow2_frac_floor(p.r, d),
        4 * 13199 * d,
        pow2_frac_exceeds(p.r, d, 4 * 13199 * d),
    ));

    let verdict = Verdict::combine(lines.iter().map(|l| l.verdict));
    ParameterLedger {
        params: p.clone(),
        lines,
        verdict,
    }
}
