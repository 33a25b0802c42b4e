//! Error-bound evaluators.
//!
//! Every evaluator returns a [`BoundReport`] listing the preconditions it
//! checked, whether the bound applies, and its value. Gate inequalities of
//! the form `lhs ≤ rhs` accept `lhs` up to [`GATE_TOL`] above `rhs`; strict
//! inequalities are checked exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

pub const GATE_TOL: f64 = 1e-9;

/// Default Δ for the simplified pseudolabel-correction bound.
pub const DEFAULT_DELTA_PARAM: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    FuBaseline,
    WeiApplicability,
    PlcMain,
    PlcSimplified,
    CoverageMain,
    CoverageWeak,
    WeiPlc,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::FuBaseline,
        TheoremId::WeiApplicability,
        TheoremId::PlcMain,
        TheoremId::PlcSimplified,
        TheoremId::CoverageMain,
        TheoremId::CoverageWeak,
        TheoremId::WeiPlc,
    ];

    /// The theorems the brute-force harness checks.
    pub const VERIFIABLE: [TheoremId; 4] = [
        TheoremId::PlcMain,
        TheoremId::CoverageMain,
        TheoremId::CoverageWeak,
        TheoremId::WeiPlc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::FuBaseline => "fu-baseline",
            TheoremId::WeiApplicability => "wei-applicability",
            TheoremId::PlcMain => "plc-main",
            TheoremId::PlcSimplified => "plc-simplified",
            TheoremId::CoverageMain => "coverage-main",
            TheoremId::CoverageWeak => "coverage-weak",
            TheoremId::WeiPlc => "wei-plc",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown theorem `{s}`")))
    }
}

/// Which precondition the pseudolabel-correction bound is gated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlcGate {
    /// P(f ≠ ỹ or f not robust | S_i) ≤ 1 − q − α_i.
    #[default]
    Main,
    /// The stricter pair P(...) ≤ (1 − α_i + 3cα_i)/4 and q < (3/4)(1 − 2α_i).
    Headline,
}

/// Echo of the scalar inputs a bound was evaluated on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_weak: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonrobust_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    pub name: String,
    /// Left-hand side of the inequality.
    pub value: f64,
    /// Right-hand side of the inequality.
    pub threshold: f64,
    pub satisfied: bool,
}

impl Precondition {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Precondition {
            name: name.to_string(),
            value,
            threshold,
            satisfied: value <= threshold + GATE_TOL,
        }
    }

    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Precondition {
            name: name.to_string(),
            value,
            threshold,
            satisfied: value < threshold,
        }
    }

    fn above(name: &str, value: f64, threshold: f64) -> Self {
        Precondition {
            name: name.to_string(),
            value,
            threshold,
            satisfied: value > threshold,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Precondition {
            name: name.to_string(),
            value,
            threshold,
            satisfied: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clamp {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub inputs: BoundInputs,
    pub preconditions: Vec<Precondition>,
    pub applicable: bool,
    /// The bound, clamped to [0, 1]; present exactly when applicable, except
    /// for applicability-only checks, which never carry one.
    pub value: Option<f64>,
    /// The formula's value before clamping.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped: Option<Clamp>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub robustness_assumed_zero: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(theorem: TheoremId, inputs: BoundInputs) -> Self {
        BoundReport {
            theorem,
            inputs,
            preconditions: Vec::new(),
            applicable: false,
            value: None,
            raw_value: None,
            clamped: None,
            robustness_assumed_zero: false,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, p: Precondition) -> bool {
        let ok = p.satisfied;
        self.preconditions.push(p);
        ok
    }

    /// Sets the value when every recorded precondition holds.
    fn finish(mut self, raw: f64) -> Self {
        self.applicable = self.preconditions.iter().all(|p| p.satisfied);
        if self.applicable {
            let (value, clamp) = clamp_unit(raw);
            self.raw_value = Some(raw);
            self.value = Some(value);
            self.clamped = clamp;
        }
        self
    }

    /// A not-applicable report for a bound whose inputs could not be formed.
    pub fn unavailable(theorem: TheoremId, note: impl Into<String>) -> Self {
        let mut r = BoundReport::new(theorem, BoundInputs::default());
        r.notes.push(note.into());
        r
    }

    fn not_applicable(mut self) -> Self {
        self.applicable = false;
        self
    }

    /// Marks the robustness terms as defaulted to zero rather than measured.
    pub fn assume_zero_robustness(mut self) -> Self {
        self.robustness_assumed_zero = true;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.inputs.eta = Some(eta);
        self
    }
}

fn clamp_unit(raw: f64) -> (f64, Option<Clamp>) {
    if raw < 0.0 {
        (0.0, Some(Clamp::Low))
    } else if raw > 1.0 {
        (1.0, Some(Clamp::High))
    } else {
        (raw, None)
    }
}

fn prob(name: &'static str, v: f64) -> Result<()> {
    check_range(name, v, 0.0, 1.0, "[0, 1]")
}

fn alpha_open_half(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Parameter {
            name: "alpha",
            value: alpha,
            range: "(0, 1/2)",
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value: v,
            range: "(0, inf)",
        })
    }
}

/// Mass of {f ≠ ỹ or f not η-robust} used by a gate: the exact joint when
/// known, otherwise the union-bound proxy err + nonrobust.
fn gate_mass(err_weak: f64, nonrobust: f64, joint: Option<f64>) -> f64 {
    joint.unwrap_or_else(|| (err_weak + nonrobust).min(1.0))
}

/// Caps an expansion coefficient at 1 for bounds whose argument needs it,
/// noting the substitution. Expansion at c implies expansion at any c' < c.
fn cap_at_one(report: &mut BoundReport, name: &str, c: f64) -> f64 {
    if c > 1.0 {
        report
            .notes
            .push(format!("{name} = {c} capped at 1 for evaluation"));
        1.0
    } else {
        c
    }
}

/// Teacher-only baseline: P(S)·4α(1−α) + P(T).
pub fn fu_baseline_bound(p_s: f64, alpha: f64) -> Result<BoundReport> {
    prob("p_s", p_s)?;
    prob("alpha", alpha)?;
    let inputs = BoundInputs {
        p_s: Some(p_s),
        alpha: Some(alpha),
        ..BoundInputs::default()
    };
    let raw = p_s * 4.0 * alpha * (1.0 - alpha) + (1.0 - p_s);
    Ok(BoundReport::new(TheoremId::FuBaseline, inputs).finish(raw))
}

/// Applicability of the earlier expansion analysis, which needs coverage ≥ 2/3.
/// Never carries a value.
pub fn wei_applicability(coverage: f64) -> Result<BoundReport> {
    prob("coverage", coverage)?;
    let inputs = BoundInputs {
        coverage: Some(coverage),
        ..BoundInputs::default()
    };
    let mut r = BoundReport::new(TheoremId::WeiApplicability, inputs);
    r.check(Precondition::at_least("coverage >= 2/3", coverage, 2.0 / 3.0));
    r.applicable = r.preconditions[0].satisfied;
    Ok(r)
}

/// c' = c / (1 − α + cα), exactly 1 at c = 1.
pub fn c_prime(c: f64, alpha: f64) -> f64 {
    if c == 1.0 {
        1.0
    } else {
        c / (1.0 - alpha + c * alpha)
    }
}

/// Pseudolabel correction on S_i.
pub fn plc_bound(
    c: f64,
    q: f64,
    alpha: f64,
    err_weak: f64,
    nonrobust: f64,
    gate: PlcGate,
) -> Result<BoundReport> {
    plc_bound_with_joint(c, q, alpha, err_weak, nonrobust, None, gate)
}

/// [`plc_bound`] gated on a known joint mass P(f ≠ ỹ or f not robust | S_i).
pub fn plc_bound_with_joint(
    c: f64,
    q: f64,
    alpha: f64,
    err_weak: f64,
    nonrobust: f64,
    joint: Option<f64>,
    gate: PlcGate,
) -> Result<BoundReport> {
    alpha_open_half(alpha)?;
    positive("c", c)?;
    prob("q", q)?;
    prob("err_weak", err_weak)?;
    prob("nonrobust_mass", nonrobust)?;
    if let Some(j) = joint {
        prob("joint_mass", j)?;
    }
    let inputs = BoundInputs {
        c: Some(c),
        q: Some(q),
        alpha: Some(alpha),
        err_weak: Some(err_weak),
        nonrobust_mass: Some(nonrobust),
        joint_mass: joint,
        ..BoundInputs::default()
    };
    let mut r = BoundReport::new(TheoremId::PlcMain, inputs);
    let mass = gate_mass(err_weak, nonrobust, joint);
    match gate {
        PlcGate::Main => {
            r.check(Precondition::at_most("joint <= 1 - q - alpha", mass, 1.0 - q - alpha));
        }
        PlcGate::Headline => {
            r.check(Precondition::at_most(
                "joint <= (1 - alpha + 3c alpha)/4",
                mass,
                (1.0 - alpha + 3.0 * c * alpha) / 4.0,
            ));
            r.check(Precondition::below("q < 3/4 (1 - 2 alpha)", q, 0.75 * (1.0 - 2.0 * alpha)));
        }
    }
    let cp = c_prime(c, alpha);
    let denom = 1.0 - 2.0 * cp * alpha;
    if !r.check(Precondition::above("1 - 2c' alpha > 0", denom, 0.0)) {
        return Ok(r.not_applicable());
    }
    let raw = (err_weak - alpha * (2.0 * cp - 1.0) + 2.0 * cp * alpha * nonrobust) / denom;
    Ok(r.finish(raw))
}

/// Simplified pseudolabel-correction bound with free parameter Δ ∈ (0, 1].
pub fn plc_simplified_bound(
    c: f64,
    alpha: f64,
    err_weak: f64,
    nonrobust: f64,
    delta_param: f64,
) -> Result<BoundReport> {
    alpha_open_half(alpha)?;
    positive("c", c)?;
    prob("err_weak", err_weak)?;
    prob("nonrobust_mass", nonrobust)?;
    if !(delta_param > 0.0 && delta_param <= 1.0) {
        return Err(Error::Parameter {
            name: "delta_param",
            value: delta_param,
            range: "(0, 1]",
        });
    }
    let inputs = BoundInputs {
        c: Some(c),
        alpha: Some(alpha),
        err_weak: Some(err_weak),
        nonrobust_mass: Some(nonrobust),
        delta_param: Some(delta_param),
        ..BoundInputs::default()
    };
    let mut r = BoundReport::new(TheoremId::PlcSimplified, inputs);
    let c = cap_at_one(&mut r, "c", c);
    let feasible = c * alpha * delta_param + (1.0 - alpha) * (1.0 - delta_param);
    r.check(Precondition::at_most(
        "err_weak <= c alpha D + (1 - alpha)(1 - D)",
        err_weak,
        feasible,
    ));
    let raw = 2.0 * alpha / (1.0 - 2.0 * alpha) * nonrobust
        + err_weak
        + alpha * (1.0 - 2.0 * c * delta_param);
    Ok(r.finish(raw))
}

/// Coverage expansion onto T_i with separate coefficients for the good-edge
/// (c1) and bad-edge (c2) expansions.
pub fn coverage_bound(
    c1: f64,
    c2: f64,
    q: f64,
    alpha: f64,
    err_weak: f64,
    nonrobust_t: f64,
) -> Result<BoundReport> {
    alpha_open_half(alpha)?;
    positive("c1", c1)?;
    positive("c2", c2)?;
    prob("q", q)?;
    prob("err_weak", err_weak)?;
    prob("nonrobust_mass", nonrobust_t)?;
    let inputs = BoundInputs {
        c1: Some(c1),
        c2: Some(c2),
        q: Some(q),
        alpha: Some(alpha),
        err_weak: Some(err_weak),
        nonrobust_mass: Some(nonrobust_t),
        ..BoundInputs::default()
    };
    let mut r = BoundReport::new(TheoremId::CoverageMain, inputs);
    let c1 = cap_at_one(&mut r, "c1", c1);
    let c2 = cap_at_one(&mut r, "c2", c2);
    r.check(Precondition::below(
        "err_weak + nonrobust_T < c1 (1 - q - alpha)",
        err_weak + nonrobust_t,
        c1 * (1.0 - q - alpha),
    ));
    // With equal coefficients the denominator is written c(1 - 2α) so the
    // single-coefficient form is reproduced exactly.
    let ratio_den = if c1 == c2 {
        c1 * (1.0 - 2.0 * alpha)
    } else {
        c1 - (c1 + c2) * alpha
    };
    if !r.check(Precondition::above("c1 - (c1 + c2) alpha > 0", ratio_den, 0.0)) {
        return Ok(r.not_applicable());
    }
    let (lo, hi) = (c1.min(c2), c1.max(c2));
    let robust_den = lo / hi - 2.0 * alpha;
    let robust_term = if nonrobust_t > 0.0 {
        if !r.check(Precondition::above("c_min/c_max - 2 alpha > 0", robust_den, 0.0)) {
            return Ok(r.not_applicable());
        }
        (1.0 + alpha / robust_den) * nonrobust_t
    } else {
        if robust_den <= 0.0 {
            r.notes.push(format!(
                "c_min/c_max - 2 alpha = {robust_den} <= 0; waived because the nonrobust mass is 0"
            ));
        }
        0.0
    };
    let ratio = (err_weak - c2 * alpha).max(0.0) / ratio_den;
    Ok(r.finish(robust_term + q.max(ratio)))
}

/// Coverage expansion through good edges only.
pub fn coverage_bound_weak(
    c: f64,
    q: f64,
    alpha: f64,
    err_weak: f64,
    nonrobust_t: f64,
) -> Result<BoundReport> {
    alpha_open_half(alpha)?;
    positive("c", c)?;
    prob("q", q)?;
    prob("err_weak", err_weak)?;
    prob("nonrobust_mass", nonrobust_t)?;
    let inputs = BoundInputs {
        c: Some(c),
        q: Some(q),
        alpha: Some(alpha),
        err_weak: Some(err_weak),
        nonrobust_mass: Some(nonrobust_t),
        ..BoundInputs::default()
    };
    let raw = nonrobust_t + q.max(err_weak / (c * (1.0 - alpha)));
    Ok(BoundReport::new(TheoremId::CoverageWeak, inputs).finish(raw))
}

/// Pseudolabel correction via expansion from good to bad points.
pub fn wei_plc_bound(
    c: f64,
    q: f64,
    alpha: f64,
    err_weak: f64,
    nonrobust: f64,
) -> Result<BoundReport> {
    wei_plc_bound_with_joint(c, q, alpha, err_weak, nonrobust, None)
}

pub fn wei_plc_bound_with_joint(
    c: f64,
    q: f64,
    alpha: f64,
    err_weak: f64,
    nonrobust: f64,
    joint: Option<f64>,
) -> Result<BoundReport> {
    alpha_open_half(alpha)?;
    check_range("c", c, 0.0, f64::MAX, "[0, inf)")?;
    prob("q", q)?;
    prob("err_weak", err_weak)?;
    prob("nonrobust_mass", nonrobust)?;
    if let Some(j) = joint {
        prob("joint_mass", j)?;
    }
    let inputs = BoundInputs {
        c: Some(c),
        q: Some(q),
        alpha: Some(alpha),
        err_weak: Some(err_weak),
        nonrobust_mass: Some(nonrobust),
        joint_mass: joint,
        ..BoundInputs::default()
    };
    let mut r = BoundReport::new(TheoremId::WeiPlc, inputs);
    if !r.check(Precondition::above("c > alpha/(1 - alpha)", c, alpha / (1.0 - alpha))) {
        return Ok(r.not_applicable());
    }
    let c_tilde = c * (1.0 - alpha) / alpha;
    r.check(Precondition::at_most(
        "joint <= alpha (1 + q (c~ - 1))",
        gate_mass(err_weak, nonrobust, joint),
        alpha * (1.0 + q * (c_tilde - 1.0)),
    ));
    let raw = 2.0 * (q * alpha + nonrobust) + err_weak - alpha;
    Ok(r.finish(raw))
}
