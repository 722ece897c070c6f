//! Rest points of the replicator system, their feasibility and their linear
//! stability.
//!
//! Coordinates are transcribed closed forms. Stability always comes from a
//! numerical Jacobian. Where closed-form eigenvalues are known they are kept
//! alongside as a cross-check.

use std::fmt;

use num_complex::Complex64;

use super::{rhs_coords, ReplicatorState, Variant};
use crate::error::Result;
use crate::game::PayoffTable;
use crate::linalg::{eigenvalues, multiset_distance, Matrix};
use crate::params::GameParams;

/// Central-difference step for the Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Real parts within this distance of 0 count as zero.
pub const ZERO_REAL_PART: f64 = 1e-8;
/// Free-coordinate samples taken from each equilibrium set.
pub const SET_SAMPLES: [f64; 3] = [0.0, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    DegenerateNonstable,
    Infeasible,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::DegenerateNonstable => "degenerate-nonstable",
            Stability::Infeasible => "infeasible",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Stability {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable" => Ok(Stability::Stable),
            "unstable" => Ok(Stability::Unstable),
            "degenerate-nonstable" => Ok(Stability::DegenerateNonstable),
            "infeasible" => Ok(Stability::Infeasible),
            _ => Err(crate::Error::Csv(format!("unknown stability {s:?}"))),
        }
    }
}

/// Stability from a spectrum: any real part within [`ZERO_REAL_PART`] of 0
/// makes the point degenerate, otherwise it is stable iff every real part
/// is negative.
pub fn stability_of(eigs: &[Complex64]) -> Stability {
    if eigs.iter().any(|e| e.re.abs() <= ZERO_REAL_PART) {
        Stability::DegenerateNonstable
    } else if eigs.iter().all(|e| e.re < -ZERO_REAL_PART) {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumRecord {
    /// `p1`..`p17` or `q1`..`q8`.
    pub label: String,
    /// For members of an equilibrium set, which member, e.g. `w=0.5`.
    pub member: Option<String>,
    /// For members of an equilibrium set, the whole set, e.g.
    /// `x=0, y=0, z=1-w, w in [0,1], alpha=0`.
    pub set: Option<&'static str>,
    pub state: ReplicatorState,
    pub feasible: bool,
    pub reason: String,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
    /// Largest `|rhs|` component at the point; NaN when infeasible.
    pub max_rhs: f64,
}

impl EquilibriumRecord {
    fn candidate(label: &str, state: ReplicatorState, feasible: bool, reason: impl Into<String>) -> Self {
        Self {
            label: label.to_string(),
            member: None,
            set: None,
            state,
            feasible,
            reason: reason.into(),
            eigenvalues: Vec::new(),
            stability: Stability::Infeasible,
            max_rhs: f64::NAN,
        }
    }

    /// Label with the set member appended, e.g. `p1[w=0.5]`.
    pub fn display_label(&self) -> String {
        match &self.member {
            Some(m) => format!("{}[{m}]", self.label),
            None => self.label.clone(),
        }
    }
}

fn in_unit_cube(state: &ReplicatorState, variant: Variant) -> std::result::Result<(), String> {
    let named = [("x", state.x), ("y", state.y), ("z", state.z), ("w", state.w), ("alpha", state.alpha)];
    for (name, v) in named {
        if !v.is_finite() {
            return Err(format!("{name} is undefined"));
        }
        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(format!("{name} = {v} outside [0,1]"));
        }
    }
    if variant == Variant::Five && state.dtg() < -1e-12 {
        return Err(format!("user shares sum to {}", 1.0 - state.dtg()));
    }
    Ok(())
}

/// A candidate whose feasibility is a printed condition. The point is only
/// kept if its coordinates also land in the unit cube.
fn conditional(label: &str, state: ReplicatorState, condition: bool, text: &str, variant: Variant) -> EquilibriumRecord {
    match (condition, in_unit_cube(&state, variant)) {
        (true, Ok(())) => EquilibriumRecord::candidate(label, state, true, format!("{text} holds")),
        (false, _) => EquilibriumRecord::candidate(label, state, false, format!("{text} fails")),
        (true, Err(why)) => {
            EquilibriumRecord::candidate(label, state, false, format!("{text} holds but {why}"))
        }
    }
}

/// All equilibrium candidates of `variant` with feasibility verdicts but no
/// stability yet.
pub fn equilibrium_candidates(p: &GameParams, variant: Variant) -> Vec<EquilibriumRecord> {
    match variant {
        Variant::Five => five_strategy_candidates(p),
        Variant::Three => three_strategy_candidates(p),
    }
}

fn five_strategy_candidates(p: &GameParams) -> Vec<EquilibriumRecord> {
    let bu = p.user_benefit;
    let bc = p.creator_benefit;
    let c = p.safety_cost;
    let v = p.punishment;
    let mu = p.risk;
    let e = p.monitoring_cost;
    let pt = p.trust_check_prob;
    let pd = p.distrust_check_prob;
    let tt = p.trust_threshold as f64;
    let td = p.distrust_threshold as f64;
    let r = p.r();
    let s = ReplicatorState::new;
    let always = "in the unit cube for all parameters";
    let mut out = Vec::new();

    for w in SET_SAMPLES {
        let mut rec = EquilibriumRecord::candidate("p1", s(0.0, 0.0, 1.0 - w, w, 0.0), true, always);
        rec.member = Some(format!("w={w}"));
        rec.set = Some("x=0, y=0, z=1-w, w in [0,1], alpha=0");
        out.push(rec);
    }
    for z in SET_SAMPLES {
        let mut rec = EquilibriumRecord::candidate("p2", s(0.0, 0.0, z, 0.0, 1.0), true, always);
        rec.member = Some(format!("z={z}"));
        rec.set = Some("x=0, y=0, z in [0,1], w=0, alpha=1");
        out.push(rec);
    }
    let corners = [
        ("p3", s(0.0, 0.0, 1.0, 0.0, 0.0)),
        ("p4", s(0.0, 1.0, 0.0, 0.0, 0.0)),
        ("p5", s(1.0, 0.0, 0.0, 0.0, 0.0)),
        ("p6", s(0.0, 0.0, 0.0, 1.0, 0.0)),
        ("p7", s(0.0, 0.0, 0.0, 0.0, 0.0)),
        ("p8", s(0.0, 1.0, 0.0, 0.0, 1.0)),
        ("p9", s(1.0, 0.0, 0.0, 0.0, 1.0)),
        ("p10", s(0.0, 0.0, 0.0, 1.0, 1.0)),
        ("p11", s(0.0, 0.0, 0.0, 0.0, 1.0)),
    ];
    for (label, st) in corners {
        out.push(EquilibriumRecord::candidate(label, st, true, always));
    }

    let v5 = Variant::Five;
    out.push(conditional(
        "p12",
        s(c / v, (v - c) / v, 0.0, 0.0, mu / (mu - 1.0)),
        0.0 <= c && c <= v && mu < 0.0,
        "0 <= c <= v and mu < 0",
        v5,
    ));

    let big_d = bc * r - bc + v;
    let y_share = (bc * r - bc - c * r + v) / big_d;
    let creator_ok = 0.0 <= c * r && c * r <= big_d;
    out.push(conditional(
        "p13",
        s(0.0, y_share, c * r / big_d, 0.0, (r * e - bu * mu) / (bu * (r - mu))),
        creator_ok && mu / r <= e / bu && e / bu <= 1.0,
        "0 <= cr <= b_c r - b_c + v and mu/r <= eps/b_u <= 1",
        v5,
    ));

    let distrust_num = -bu * mu + pd * r * e - td * pd * e + td * e;
    out.push(conditional(
        "p14",
        s(0.0, y_share, 0.0, 0.0, distrust_num / (distrust_num + bu * r - r * e)),
        creator_ok && bu * mu <= e * (pd * r + (1.0 - pd) * td),
        "0 <= cr <= b_c r - b_c + v and b_u mu <= eps[p_D r + (1-p_D) theta_D]",
        v5,
    ));

    let x_share = (bc * r - bc - c * r + v) / ((r - 1.0) * (bc - v));
    out.push(EquilibriumRecord::candidate(
        "p15",
        s(
            x_share,
            0.0,
            0.0,
            -c * r / big_d,
            (bu * mu - bu * mu * r - r * e) / (bu * mu - bu * mu * r + pt * r * e - tt * pt * e - r * e + tt * e),
        ),
        false,
        "w = -cr/(b_c r - b_c + v) < 0",
    ));
    out.push(EquilibriumRecord::candidate(
        "p16",
        s(
            x_share,
            0.0,
            -r * (c - v) / ((r - 1.0) * (v - bc)),
            0.0,
            (-bu * mu + bu * mu * r + r * e) / (bu * mu * (r - 1.0)),
        ),
        false,
        "alpha = (-b_u mu + b_u mu r + r eps)/(b_u mu (r-1)) > 1",
    ));
    let p17_num = -bu * mu + bu * mu * r + pd * r * e - td * pd * e + td * e;
    out.push(EquilibriumRecord::candidate(
        "p17",
        s(x_share, 0.0, 0.0, 0.0, p17_num / (p17_num - r * e)),
        false,
        "alpha outside [0,1]",
    ));
    out
}

fn three_strategy_candidates(p: &GameParams) -> Vec<EquilibriumRecord> {
    let bu = p.user_benefit;
    let bc = p.creator_benefit;
    let c = p.safety_cost;
    let v = p.punishment;
    let mu = p.risk;
    let e = p.monitoring_cost;
    let r = p.r();
    let three = |x: f64, y: f64, a: f64| ReplicatorState::from_coords(Variant::Three, &[x, y, a]);
    let always = "in the unit cube for all parameters";
    let by_coords = |label: &str, st: ReplicatorState| match in_unit_cube(&st, Variant::Three) {
        Ok(()) => EquilibriumRecord::candidate(label, st, true, "coordinates in the unit cube"),
        Err(why) => EquilibriumRecord::candidate(label, st, false, why),
    };
    vec![
        by_coords("q1", three(0.0, 1.0 - c * r / (bc * (r - 1.0) + v), (r * e - bu * mu) / (bu * r - bu * mu))),
        EquilibriumRecord::candidate("q2", three(0.0, 1.0, 0.0), true, always),
        EquilibriumRecord::candidate("q3", three(1.0, 0.0, 0.0), true, always),
        EquilibriumRecord::candidate("q4", three(0.0, 0.0, 0.0), true, always),
        EquilibriumRecord::candidate("q5", three(0.0, 1.0, 1.0), true, always),
        EquilibriumRecord::candidate("q6", three(1.0, 0.0, 1.0), true, always),
        EquilibriumRecord::candidate("q7", three(0.0, 0.0, 1.0), true, always),
        by_coords("q8", three(c / v, 1.0 - c / v, mu / (mu - 1.0))),
    ]
}

/// Central-difference Jacobian of the replicator field at `coords`.
pub fn jacobian(coords: &[f64], table: &PayoffTable, variant: Variant) -> Matrix {
    let n = coords.len();
    let mut jac = Matrix::zeros(n, n);
    for j in 0..n {
        let mut plus = coords.to_vec();
        let mut minus = coords.to_vec();
        plus[j] += JACOBIAN_STEP;
        minus[j] -= JACOBIAN_STEP;
        let fp = rhs_coords(&plus, table, variant);
        let fm = rhs_coords(&minus, table, variant);
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    jac
}

/// Fills in the residual, spectrum and stability of a feasible record.
pub fn classify_stability(mut record: EquilibriumRecord, p: &GameParams, variant: Variant) -> Result<EquilibriumRecord> {
    if !record.feasible {
        record.stability = Stability::Infeasible;
        record.eigenvalues.clear();
        return Ok(record);
    }
    let table = PayoffTable::new(p)?;
    let coords = record.state.coords(variant);
    record.max_rhs = rhs_coords(&coords, &table, variant).iter().fold(0.0, |m, d| m.max(d.abs()));
    record.eigenvalues = eigenvalues(&jacobian(&coords, &table, variant))?;
    record.stability = stability_of(&record.eigenvalues);
    Ok(record)
}

/// Every candidate of `variant`, classified.
pub fn equilibrium_catalog(p: &GameParams, variant: Variant) -> Result<Vec<EquilibriumRecord>> {
    equilibrium_candidates(p, variant).into_iter().map(|r| classify_stability(r, p, variant)).collect()
}

/// Closed-form spectra of the five-strategy points `p1`..`p12`.
pub fn tabulated_eigenvalues(label: &str, p: &GameParams) -> Option<Vec<Complex64>> {
    let bu = p.user_benefit;
    let bc = p.creator_benefit;
    let c = p.safety_cost;
    let v = p.punishment;
    let mu = p.risk;
    let e = p.monitoring_cost;
    let pt = p.trust_check_prob;
    let pd = p.distrust_check_prob;
    let tt = p.trust_threshold as f64;
    let td = p.distrust_threshold as f64;
    let r = p.r();
    let creator_gap = (bc * (r - 1.0) - c * r + v) / r;
    let trust_check = e * (tt + pt * (r - tt)) / r;
    let distrust_check = e * (td + pd * (r - td)) / r;
    let real = |vals: [f64; 5]| Some(vals.iter().map(|&x| Complex64::new(x, 0.0)).collect());
    match label {
        "p1" | "p3" | "p6" => real([
            0.0,
            creator_gap,
            -(pd - 1.0) * e * (r - td) / r,
            e - bu * mu / r,
            bu * mu * (r - 1.0) / r + e,
        ]),
        "p2" | "p11" => real([0.0, -creator_gap, e, e - bu, -(pt - 1.0) * e * (r - tt) / r]),
        "p4" => real([-c, bu * mu, bu * mu / r - e, bu * mu / r - e, (bu * mu + pd * e * (td - r) - td * e) / r]),
        "p5" => real([
            v - c,
            -bu * mu,
            bu * mu * (1.0 / r - 1.0) - e,
            bu * mu * (1.0 / r - 1.0) - e,
            (-bu * mu * (r - 1.0) + pd * e * (td - r) - td * e) / r,
        ]),
        "p7" => real([
            creator_gap,
            (pd - 1.0) * e * (r - td) / r,
            (pd - 1.0) * e * (r - td) / r,
            (-bu * mu) / r + distrust_check,
            bu * mu * (r - 1.0) / r + distrust_check,
        ]),
        "p8" => real([bu, c, bu - e, bu - e, bu + tt * (pt - 1.0) * e / r - pt * e]),
        "p9" => real([-bu, c - v, -e, -e, tt * (pt - 1.0) * e / r - pt * e]),
        "p10" => real([
            -creator_gap,
            trust_check,
            (pt - 1.0) * e * (r - tt) / r,
            (pt - 1.0) * e * (r - tt) / r,
            trust_check - bu,
        ]),
        "p12" => {
            let sq = |x: f64| Complex64::new(x, 0.0).sqrt();
            let i = Complex64::new(0.0, 1.0);
            let pair = i * sq(bu) * sq(c) * sq(c - v) / (sq((mu - 1.0) / mu) * sq(v));
            let denom = (mu - 1.0) * r;
            Some(vec![
                -pair,
                pair,
                Complex64::new((r * (bu * mu - mu * e + e) - bu * mu) / denom, 0.0),
                Complex64::new((bu * mu * (r - 1.0) + pd * e * (r - td) + e * (td - mu * r)) / denom, 0.0),
                Complex64::new((bu * mu * (r - 1.0) - mu * e * (tt + pt * (r - tt)) + r * e) / denom, 0.0),
            ])
        }
        _ => None,
    }
}

/// Distance between the numerical spectrum of a record and its closed form,
/// or `None` when no closed form is tabulated.
pub fn tabulated_mismatch(record: &EquilibriumRecord, p: &GameParams) -> Option<f64> {
    let expected = tabulated_eigenvalues(&record.label, p)?;
    if !record.feasible || record.eigenvalues.len() != expected.len() {
        return None;
    }
    Some(multiset_distance(&record.eigenvalues, &expected))
}

/// A stability claim that should hold for a labelled point.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaExpectation {
    pub label: &'static str,
    pub condition: &'static str,
    pub expect_stable: bool,
}

/// Analytic stability claims for `variant` at `p`.
pub fn lemma_expectations(p: &GameParams, variant: Variant) -> Vec<LemmaExpectation> {
    let c = p.safety_cost;
    let v = p.punishment;
    let mu = p.risk;
    let (unsafe_user, adopt_unsafe, adopt_safe) = match variant {
        Variant::Five => ("p4", "p5", "p9"),
        Variant::Three => ("q2", "q3", "q6"),
    };
    let mut out = Vec::new();
    if variant == Variant::Five {
        out.push(LemmaExpectation { label: "p1", condition: "never (degenerate set)", expect_stable: false });
        out.push(LemmaExpectation { label: "p2", condition: "never (degenerate set)", expect_stable: false });
    }
    out.push(LemmaExpectation { label: unsafe_user, condition: "mu < 0", expect_stable: mu < 0.0 });
    out.push(LemmaExpectation { label: adopt_unsafe, condition: "mu > 0 and v < c", expect_stable: mu > 0.0 && v < c });
    // The spectrum of the safe-adoption point contains -eps, so the claim
    // needs costly monitoring.
    out.push(LemmaExpectation {
        label: adopt_safe,
        condition: "c < v and eps > 0",
        expect_stable: c < v && p.monitoring_cost > 0.0,
    });
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub params: GameParams,
    pub label: String,
    pub condition: &'static str,
    pub expect_stable: bool,
    pub stability: Stability,
}

impl LemmaCheck {
    pub fn agrees(&self) -> bool {
        self.expect_stable == (self.stability == Stability::Stable)
    }
}

/// Compares the numerical verdicts with [`lemma_expectations`] at every
/// grid point. Every sampled member of a set is checked.
pub fn lemma_check(points: &[GameParams], variant: Variant) -> Result<Vec<LemmaCheck>> {
    let mut out = Vec::new();
    for p in points {
        let catalog = equilibrium_catalog(p, variant)?;
        for exp in lemma_expectations(p, variant) {
            for rec in catalog.iter().filter(|r| r.label == exp.label) {
                out.push(LemmaCheck {
                    params: *p,
                    label: rec.display_label(),
                    condition: exp.condition,
                    expect_stable: exp.expect_stable,
                    stability: rec.stability,
                });
            }
        }
    }
    Ok(out)
}

/// `(c, v)` on a 5x5 grid over [0.1, 0.9] and `mu` in `{-|mu|, |mu|}`.
pub fn lemma_grid(base: &GameParams) -> Vec<GameParams> {
    let axis: Vec<f64> = (0..5).map(|i| 0.1 + 0.2 * i as f64).collect();
    let mu = if base.risk == 0.0 { 0.2 } else { base.risk.abs() };
    let mut out = Vec::new();
    for sign in [-1.0, 1.0] {
        for &c in &axis {
            for &v in &axis {
                out.push(base.with_risk(sign * mu).with_safety_cost(c).with_punishment(v));
            }
        }
    }
    out
}
