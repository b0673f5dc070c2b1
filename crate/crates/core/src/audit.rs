//! Numerical audits of the standing assumptions and the monotonicity
//! conditions behind the uniqueness argument.
//!
//! | condition | tested quantity                     | required |
//! |-----------|-------------------------------------|----------|
//! | `SA`      | sign pattern of `f±`, `K⁻ < K⁺`     |          |
//! | `M⁻`      | `(f⁻)'` on `[K⁻, K⁺]`                | `< 0`    |
//! | `C1⁺`     | `(√F⁺)''` on `(K⁻, K⁺)`              | `≤ 0`    |
//! | `C2⁺`     | `(F⁺/((F⁺)')²)''` on `(K⁻, K⁺)`      | `≥ 0`    |
//! | `C1⁻`     | `(√G⁻)''`, `G⁻ = F⁻ − F⁻(K⁺)`        | `≤ 0`    |
//! | `C2⁻`     | `(G⁻/((G⁻)')²)''`                    | `≥ 0`    |
//!
//! A grid pass only means no violation was sampled. The Richards family
//! also has an exact polynomial audit, see [`richards_closed_form_audit`].

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::reaction::{PatchProblem, ReactionSpec, Side};

/// A sampled value must miss its inequality by more than this to count as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Samples this close to zero trigger local grid refinement.
pub const NEAR_VIOLATION: f64 = 1e-6;
const REFINE_POINTS: usize = 16;
const SA_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Condition {
    SA,
    Mminus,
    C1plus,
    C2plus,
    C1minus,
    C2minus,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::SA,
        Condition::Mminus,
        Condition::C1plus,
        Condition::C2plus,
        Condition::C1minus,
        Condition::C2minus,
    ];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::SA => "SA",
            Condition::Mminus => "M-",
            Condition::C1plus => "C1+",
            Condition::C2plus => "C2+",
            Condition::C1minus => "C1-",
            Condition::C2minus => "C2-",
        };
        f.write_str(s)
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Ok(match key.as_str() {
            "sa" => Condition::SA,
            "m-" | "mminus" => Condition::Mminus,
            "c1+" | "c1plus" => Condition::C1plus,
            "c2+" | "c2plus" => Condition::C2plus,
            "c1-" | "c1minus" => Condition::C1minus,
            "c2-" | "c2minus" => Condition::C2minus,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown condition '{s}' (expected SA, M-, C1+, C2+, C1- or C2-)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// What a verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// No violation on the sampled grid.
    GridConsistent,
    /// Exact argument for the Richards family.
    ClosedForm,
    /// A sampled point violates the inequality.
    Counterexample,
    /// The tested quantity could not be evaluated or sits on the boundary.
    Unresolved,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::GridConsistent => "grid-consistent",
            Basis::ClosedForm => "closed-form",
            Basis::Counterexample => "counterexample",
            Basis::Unresolved => "unresolved",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub u: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub basis: Basis,
    /// Samples violating the inequality by more than [`VIOLATION_TOL`].
    pub witnesses: Vec<Witness>,
    /// The sample closest to violating the inequality.
    pub tightest: Option<Witness>,
    /// Every evaluated sample, sorted by `u`.
    pub samples: Vec<Witness>,
    pub grid: String,
    /// Sub-interval left out because the tested identity is singular there.
    pub excluded_band: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

/// `[h, h', h'', h''']` for `h = √F` from the jet `[F, F', F'', F''']`, `F > 0`.
pub fn sqrt_derivatives(jet: [f64; 4]) -> [f64; 4] {
    let [f, f1, f2, f3] = jet;
    let s = f.sqrt();
    [
        s,
        f1 / (2.0 * s),
        (2.0 * f * f2 - f1 * f1) / (4.0 * f * s),
        (4.0 * f * f * f3 - 6.0 * f * f1 * f2 + 3.0 * f1.powi(3)) / (8.0 * f * f * s),
    ]
}

/// `(F/(F')²)''` through `3(h'')² − h'h''' = ((F')⁴/(8F²))·(F/(F')²)''`, `h = √F`.
pub fn quotient_second_derivative(jet: [f64; 4]) -> f64 {
    let [f, f1, ..] = jet;
    let [_, h1, h2, h3] = sqrt_derivatives(jet);
    8.0 * f * f * (3.0 * h2 * h2 - h1 * h3) / f1.powi(4)
}

/// `n` Chebyshev points of the first kind on `(a, b)`, ascending.
fn chebyshev(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (0..n)
        .map(|k| mid - half * (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos())
        .collect()
}

/// `n` Chebyshev–Lobatto points on `[a, b]`, ascending, endpoints included.
fn chebyshev_lobatto(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut pts: Vec<f64> = (0..n)
        .map(|k| mid - half * (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
        .collect();
    pts[0] = a;
    pts[n - 1] = b;
    pts
}

#[derive(Clone, Copy)]
enum Sense {
    /// value ≤ 0 required
    NonPositive,
    /// value ≥ 0 required
    NonNegative,
    /// value < 0 required
    Negative,
}

impl Sense {
    /// Signed distance into the violating region (positive = violated).
    fn excess(self, value: f64) -> f64 {
        match self {
            Sense::NonPositive | Sense::Negative => value,
            Sense::NonNegative => -value,
        }
    }
}

struct GridOutcome {
    samples: Vec<Witness>,
    failures: Vec<(f64, String)>,
}

fn evaluate_grid<F: Fn(f64) -> Result<f64>>(nodes: Vec<f64>, lo: f64, hi: f64, eval: &F) -> GridOutcome {
    let mut samples = Vec::with_capacity(nodes.len());
    let mut failures = Vec::new();
    let mut push = |u: f64, samples: &mut Vec<Witness>| match eval(u) {
        Ok(v) if v.is_finite() => samples.push(Witness { u, value: v }),
        Ok(v) => failures.push((u, format!("non-finite value {v}"))),
        Err(e) => failures.push((u, e.to_string())),
    };
    for &u in &nodes {
        push(u, &mut samples);
    }
    // refine around near-violations
    let near: Vec<usize> = (0..nodes.len())
        .filter(|&i| {
            samples
                .iter()
                .find(|w| w.u == nodes[i])
                .is_some_and(|w| w.value.abs() < NEAR_VIOLATION)
        })
        .collect();
    for i in near {
        let a = if i == 0 { lo } else { nodes[i - 1] };
        let b = if i + 1 == nodes.len() { hi } else { nodes[i + 1] };
        for j in 1..=REFINE_POINTS {
            let u = a + (b - a) * j as f64 / (REFINE_POINTS + 1) as f64;
            push(u, &mut samples);
        }
    }
    samples.sort_by(|x, y| x.u.total_cmp(&y.u));
    samples.dedup_by(|x, y| x.u == y.u);
    GridOutcome { samples, failures }
}

fn grid_report(
    condition: Condition,
    outcome: GridOutcome,
    sense: Sense,
    grid: String,
    excluded_band: Option<(f64, f64)>,
    closed_form: bool,
    mut notes: Vec<String>,
) -> ConditionReport {
    let witnesses: Vec<Witness> = outcome
        .samples
        .iter()
        .copied()
        .filter(|w| sense.excess(w.value) > VIOLATION_TOL)
        .collect();
    let tightest = outcome
        .samples
        .iter()
        .copied()
        .max_by(|a, b| sense.excess(a.value).total_cmp(&sense.excess(b.value)));
    for (u, cause) in &outcome.failures {
        notes.push(format!("evaluation failed at u = {u}: {cause}"));
    }
    let (verdict, basis) = if !witnesses.is_empty() {
        (Verdict::Fail, Basis::Counterexample)
    } else if !outcome.failures.is_empty() {
        (Verdict::Inconclusive, Basis::Unresolved)
    } else if matches!(sense, Sense::Negative)
        && tightest.is_some_and(|w| w.value > -VIOLATION_TOL)
    {
        notes.push("strict inequality is within tolerance of failing".into());
        (Verdict::Inconclusive, Basis::Unresolved)
    } else if closed_form {
        (Verdict::Pass, Basis::ClosedForm)
    } else {
        (Verdict::Pass, Basis::GridConsistent)
    };
    ConditionReport {
        condition,
        verdict,
        basis,
        witnesses,
        tightest,
        samples: outcome.samples,
        grid,
        excluded_band,
        notes,
    }
}

/// Evaluates `condition` for `problem` on a grid of `grid_size` Chebyshev nodes.
pub fn check_condition(problem: &PatchProblem, condition: Condition, grid_size: usize) -> Result<ConditionReport> {
    if grid_size < 16 {
        return Err(Error::InvalidParameter(format!(
            "audit grid needs at least 16 points, got {grid_size}"
        )));
    }
    if condition == Condition::SA {
        return Ok(standing_assumptions(problem));
    }
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    if !(km < kp) {
        return Ok(ConditionReport {
            condition,
            verdict: Verdict::Inconclusive,
            basis: Basis::Unresolved,
            witnesses: vec![],
            tightest: None,
            samples: vec![],
            grid: String::new(),
            excluded_band: None,
            notes: vec![format!("requires K- < K+, got K- = {km}, K+ = {kp}")],
        });
    }
    let width = kp - km;
    let margin = 1e-6 * width;
    let (lo, hi) = (km + margin, kp - margin);

    if condition == Condition::Mminus {
        let left = problem.reaction(Side::Left).clone();
        let nodes = chebyshev_lobatto(km, kp, grid_size);
        let outcome = evaluate_grid(nodes, km, kp, &|u| left.derivative(u, 1));
        let grid = format!("{grid_size} Chebyshev-Lobatto nodes on [{km}, {kp}]");
        return Ok(grid_report(condition, outcome, Sense::Negative, grid, None, false, vec![]));
    }

    let side = match condition {
        Condition::C1plus | Condition::C2plus => Side::Right,
        _ => Side::Left,
    };
    let pot = problem.potential(side);
    let shift = match side {
        Side::Right => 0.0,
        Side::Left => pot.value(kp)?,
    };
    let jet = move |pot: &Potential, u: f64| -> Result<[f64; 4]> {
        let [f, f1, f2, f3] = pot.jet(u)?;
        Ok([f - shift, f1, f2, f3])
    };
    let mut notes = Vec::new();
    let is_c2 = matches!(condition, Condition::C2plus | Condition::C2minus);
    // the quotient identity is singular where F' vanishes
    let (lo, hi, band) = if is_c2 {
        let skip = 1e-4 * width;
        match side {
            Side::Right => (lo, kp - skip, Some((kp - skip, kp))),
            Side::Left => (km + skip, hi, Some((km, km + skip))),
        }
    } else {
        (lo, hi, None)
    };
    if let Some((a, b)) = band {
        notes.push(format!("excluded [{a}, {b}] where the derivative of the potential vanishes"));
    }
    let nodes = chebyshev(lo, hi, grid_size);
    let eval = |u: f64| -> Result<f64> {
        let j = jet(&pot, u)?;
        if !(j[0] > 0.0) {
            return Err(Error::Numeric {
                what: format!("potential is not positive at u = {u}"),
                achieved: j[0],
            });
        }
        Ok(if is_c2 {
            quotient_second_derivative(j)
        } else {
            sqrt_derivatives(j)[2]
        })
    };
    let outcome = evaluate_grid(nodes, lo, hi, &eval);
    let grid = format!(
        "{grid_size} Chebyshev nodes on ({lo}, {hi}) with endpoint margin {margin:e}"
    );
    let sense = if is_c2 { Sense::NonNegative } else { Sense::NonPositive };
    let closed_form = match (condition, problem.reaction(Side::Right)) {
        (Condition::C1plus, ReactionSpec::Richards { .. }) => true,
        (Condition::C2plus, ReactionSpec::Richards { p, .. }) => {
            if *p < 1.0 {
                let audit = richards_closed_form_audit(*p, 256)?;
                let predicted = audit.c2_plus_for_ratio(km / kp);
                notes.push(format!(
                    "closed form predicts {predicted:?}: P has its root at z = {:.6}, (K-/K+)^p = {:.6}",
                    audit.p_root.unwrap_or(f64::NAN),
                    (km / kp).powf(*p)
                ));
            }
            *p >= 1.0
        }
        _ => false,
    };
    Ok(grid_report(condition, outcome, sense, grid, band, closed_form, notes))
}

fn standing_assumptions(problem: &PatchProblem) -> ConditionReport {
    let mut witnesses = Vec::new();
    let mut notes = Vec::new();
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    if !(km < kp) {
        notes.push(format!("K- = {km} is not below K+ = {kp}; reverse the orientation"));
    }
    for side in [Side::Left, Side::Right] {
        let f = problem.reaction(side);
        let k = f.carrying_capacity();
        let mut pts: Vec<f64> = (1..=SA_GRID).map(|i| 3.0 * k * i as f64 / SA_GRID as f64).collect();
        pts.push(k);
        let scale = pts.iter().map(|&u| f.rate(u).unwrap_or(0.0).abs()).fold(1.0, f64::max);
        let zero_tol = 1e-10 * scale;
        let f0 = f.rate(0.0).unwrap_or(f64::NAN);
        if !(f0.abs() <= zero_tol) {
            witnesses.push(Witness { u: 0.0, value: f0 });
            notes.push(format!("{side}: f(0) = {f0:e} is not zero"));
        }
        let d0 = f.derivative(0.0, 1).unwrap_or(f64::NAN);
        if !(d0 > 0.0) {
            witnesses.push(Witness { u: 0.0, value: d0 });
            notes.push(format!("{side}: f'(0) = {d0:e} is not positive"));
        }
        for u in pts {
            let v = f.rate(u).unwrap_or(f64::NAN);
            let ok = if (u - k).abs() <= 1e-12 * k {
                v.abs() <= zero_tol
            } else if u < k {
                v > 0.0
            } else {
                v < 0.0
            };
            if !ok {
                witnesses.push(Witness { u, value: v });
                notes.push(format!("{side}: f({u}) = {v:e} has the wrong sign"));
            }
        }
    }
    notes.truncate(20);
    let pass = witnesses.is_empty() && km < kp;
    let richards = problem.left.is_richards() && problem.right.is_richards();
    ConditionReport {
        condition: Condition::SA,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        basis: match (pass, richards) {
            (true, true) => Basis::ClosedForm,
            (true, false) => Basis::GridConsistent,
            _ => Basis::Counterexample,
        },
        witnesses,
        tightest: None,
        samples: vec![],
        grid: format!("{SA_GRID} uniform points on (0, 3K] plus {{0, K}} per side"),
        excluded_band: None,
        notes,
    }
}

/// Exact audit of the Richards rate `r·u·(1 − (u/K)^p)` with `r = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RichardsAuditResult {
    pub p: f64,
    pub samples: usize,
    /// `max Q(z)` on the sampled unit interval.
    pub q_max: f64,
    /// Largest disagreement between the two forms of `Q`.
    pub q_forms_max_diff: f64,
    pub p_at_zero: f64,
    pub p_at_one: f64,
    pub p_sign_change: bool,
    /// Root of `P` in `(0, 1)` when it changes sign there.
    pub p_root: Option<f64>,
    pub r_prime_min: f64,
    pub r_doubleprime_min: f64,
    pub c1_plus: Verdict,
    pub c2_plus: Verdict,
}

impl RichardsAuditResult {
    /// C2⁺ for a specific `K⁻/K⁺`: the quotient's second derivative has the
    /// sign of `P(z)`, `z = (u/K⁺)^p`, and `P` is concave with `P(1) > 0`.
    pub fn c2_plus_for_ratio(&self, ratio: f64) -> Verdict {
        match self.p_root {
            None => Verdict::Pass,
            Some(z) if ratio.powf(self.p) < z => Verdict::Fail,
            Some(_) => Verdict::Pass,
        }
    }
}

pub fn q_definition(p: f64, z: f64) -> f64 {
    (1.0 - 2.0 * z / (p + 2.0)) * (1.0 - (p + 1.0) * z) - (1.0 - z).powi(2)
}

pub fn q_factored(p: f64, z: f64) -> f64 {
    p / (p + 2.0) * z * (z - (p + 1.0))
}

/// `R(z) = (1 − 2z/(p+2)) / (2(1 − z)²)`, so that `F/(F')² = (d/r)·R((u/K)^p)`.
pub fn r_quotient(p: f64, z: f64) -> f64 {
    (1.0 - 2.0 * z / (p + 2.0)) / (2.0 * (1.0 - z).powi(2))
}

pub fn r_prime(p: f64, z: f64) -> f64 {
    (p + 1.0 - z) / ((p + 2.0) * (1.0 - z).powi(3))
}

pub fn r_double_prime(p: f64, z: f64) -> f64 {
    (3.0 * p + 2.0 - 2.0 * z) / ((p + 2.0) * (1.0 - z).powi(4))
}

pub fn p_polynomial(p: f64, z: f64) -> f64 {
    p * z * (3.0 * p + 2.0 - 2.0 * z) + (p - 1.0) * (p + 1.0 - z) * (1.0 - z)
}

/// Root of `P` in `(0, 1)`; exists exactly when `p < 1`.
pub fn p_polynomial_root(p: f64) -> Option<f64> {
    if p >= 1.0 {
        return None;
    }
    // P(z) = −(p+1)z² + (2p² + p + 2)z + (p² − 1)
    let (a, b, c) = (-(p + 1.0), 2.0 * p * p + p + 2.0, p * p - 1.0);
    let disc = (b * b - 4.0 * a * c).sqrt();
    // numerically stable form of the smaller root
    let z = 2.0 * c / (-b - disc);
    (z > 0.0 && z < 1.0).then_some(z)
}

pub fn richards_closed_form_audit(p: f64, samples: usize) -> Result<RichardsAuditResult> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent p must be positive, got {p}")));
    }
    if samples < 16 {
        return Err(Error::InvalidParameter(format!(
            "closed-form audit needs at least 16 samples, got {samples}"
        )));
    }
    let z_max = 1.0 - 1e-6;
    let zs: Vec<f64> = (0..samples).map(|i| z_max * i as f64 / (samples - 1) as f64).collect();
    let mut q_max = f64::NEG_INFINITY;
    let mut q_diff: f64 = 0.0;
    let (mut rp_min, mut rpp_min) = (f64::INFINITY, f64::INFINITY);
    let (mut neg, mut pos) = (false, false);
    for &z in &zs {
        let (qd, qf) = (q_definition(p, z), q_factored(p, z));
        q_max = q_max.max(qd);
        q_diff = q_diff.max((qd - qf).abs());
        if z > 0.0 {
            rp_min = rp_min.min(r_prime(p, z));
            rpp_min = rpp_min.min(r_double_prime(p, z));
        }
        let pz = p_polynomial(p, z);
        neg |= pz < 0.0;
        pos |= pz > 0.0;
    }
    let sign_change = neg && pos;
    Ok(RichardsAuditResult {
        p,
        samples,
        q_max,
        q_forms_max_diff: q_diff,
        p_at_zero: p_polynomial(p, 0.0),
        p_at_one: p_polynomial(p, 1.0),
        p_sign_change: sign_change,
        p_root: p_polynomial_root(p),
        r_prime_min: rp_min,
        r_doubleprime_min: rpp_min,
        c1_plus: if q_max <= 0.0 { Verdict::Pass } else { Verdict::Fail },
        c2_plus: if sign_change || rp_min <= 0.0 || rpp_min <= 0.0 {
            Verdict::Fail
        } else {
            Verdict::Pass
        },
    })
}
