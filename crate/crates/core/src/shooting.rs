//! Phase-plane shooting for the two-patch steady state.
//!
//! The left half is the forward `H⁻` orbit from `(α, 0)` at `x = −L⁻`, the
//! right half the backward `H⁺` orbit from `(β, 0)` at `x = L⁺`. A steady
//! state is a pair `(α*, β*)` whose orbits meet at `x = 0` with equal density
//! and equal flux `d⁻v⁻ = d⁺v⁺`. For each `α ∈ [K⁻, α⁻]` the density match
//! fixes `β(α)`; the flux mismatch along that curve is then monotone and is
//! solved by bisection.

use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{check_condition, Condition, ConditionReport, Verdict};
use crate::error::{Error, Result};
use crate::flow::{flow, Direction, FlowOptions, FlowResult, PhaseState, Termination};
use crate::reaction::{PatchProblem, Side};
use crate::roots::bisect_predicate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapStatus {
    Valid,
    /// The orbit reached `u = 0`.
    LeftRegion,
    /// The orbit tripped the blow-up guard.
    BlowUp,
}

/// Interface values of one shooting orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingMapSample {
    /// `α` for the left map, `β` for the right map.
    pub parameter: f64,
    pub u_at_interface: f64,
    pub v_at_interface: f64,
    pub status: MapStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// `u⁻(0, α⁻) = K⁺`.
    pub alpha_minus: f64,
    /// `u⁺(0, β⁺) = K⁻`.
    pub beta_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchResult {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub interface_u: f64,
    /// `d⁺v⁺(0, β*) − d⁻v⁻(0, α*)`.
    pub flux_residual: f64,
    /// `u⁺(0, β*) − u⁻(0, α*)`.
    pub density_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub flow: FlowOptions,
    /// Bisection width for `α⁻` and `β⁺`.
    pub threshold_tol: f64,
    /// Bisection width for `β(α)`.
    pub match_tol: f64,
    /// Bisection width for `α*`.
    pub alpha_tol: f64,
    pub scan_points: usize,
    /// Adjacent scan values closer than this count as non-decreasing.
    pub tie_tol: f64,
    /// Uniform profile points per half (dense-output nodes are added).
    pub profile_points: usize,
    pub audit_grid: usize,
    /// Interface and Neumann residual tolerance.
    pub residual_tol: f64,
    /// Pointwise `|d·u'' + f(u)|` tolerance.
    pub ode_residual_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            flow: FlowOptions::default(),
            threshold_tol: 1e-11,
            match_tol: 1e-11,
            alpha_tol: 1e-13,
            scan_points: 64,
            tie_tol: 1e-10,
            profile_points: 512,
            audit_grid: 256,
            residual_tol: 1e-8,
            ode_residual_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    /// Every integration and root-finding tolerance halved.
    pub fn halved(&self) -> Self {
        let mut o = *self;
        o.flow.rtol *= 0.5;
        o.flow.atol *= 0.5;
        o.threshold_tol *= 0.5;
        o.match_tol *= 0.5;
        o.alpha_tol *= 0.5;
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub x: f64,
    pub u: f64,
    pub u_x: f64,
}

/// A steady-state profile split at the interface. Both halves contain `x = 0`
/// (as their last and first point respectively) so that the derivative jump
/// is represented.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Profile {
    pub left: Vec<ProfilePoint>,
    pub right: Vec<ProfilePoint>,
}

impl Profile {
    /// Points ordered by `x`; `x = 0` appears twice.
    pub fn points(&self) -> impl Iterator<Item = &ProfilePoint> {
        self.left.iter().chain(self.right.iter())
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    /// `u(x)` by cubic Hermite interpolation on the profile points.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let half = if x <= 0.0 { &self.left } else { &self.right };
        hermite(half, x)
    }
}

fn hermite(pts: &[ProfilePoint], x: f64) -> Option<f64> {
    let first = pts.first()?;
    let last = pts.last()?;
    if x < first.x - 1e-12 || x > last.x + 1e-12 {
        return None;
    }
    let i = pts.partition_point(|p| p.x < x).clamp(1, pts.len().max(2) - 1);
    if pts.len() == 1 {
        return Some(first.u);
    }
    let (a, b) = (&pts[i - 1], &pts[i]);
    let h = b.x - a.x;
    if h <= 0.0 {
        return Some(b.u);
    }
    let t = ((x - a.x) / h).clamp(0.0, 1.0);
    let (t2, t3) = (t * t, t * t * t);
    Some(
        (2.0 * t3 - 3.0 * t2 + 1.0) * a.u
            + (t3 - 2.0 * t2 + t) * h * a.u_x
            + (-2.0 * t3 + 3.0 * t2) * b.u
            + (t3 - t2) * h * b.u_x,
    )
}

/// Flux mismatch sampled along `[K⁻, α⁻]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchScan {
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    pub strictly_decreasing: bool,
    pub sign_changes: usize,
    /// Whether the grid was doubled because of near-ties.
    pub refined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificationRoute {
    /// SA, M⁻, C1⁺, C2⁺.
    MonotoneLeftRate,
    /// SA, C1⁻, C2⁻, C1⁺, C2⁺.
    LeftPotentialConditions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub certified: bool,
    pub route: Option<CertificationRoute>,
    pub reasons: Vec<String>,
}

impl Certification {
    pub fn label(&self) -> &'static str {
        if self.certified {
            "unique (certified)"
        } else {
            "uniqueness uncertified"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// Outcome of the structural checks every positive steady state must satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessaryConditionsReport {
    pub checks: Vec<NamedCheck>,
    pub all_passed: bool,
}

impl NecessaryConditionsReport {
    pub fn check(&self, name: &str) -> Option<&NamedCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_LEFT_END: &str = "left endpoint above K-";
pub const CHECK_RIGHT_END: &str = "right endpoint below K+";
pub const CHECK_MONOTONE: &str = "strictly increasing";
pub const CHECK_RANGE: &str = "range within (K-, K+)";
pub const CHECK_DENSITY: &str = "interface density continuity";
pub const CHECK_FLUX: &str = "interface flux continuity";
pub const CHECK_NEUMANN: &str = "neumann residuals";

#[derive(Debug, Clone, Serialize)]
pub struct SteadyStateSolution {
    pub profile: Profile,
    /// `u_x(0−)` and `u_x(0+)`.
    pub left_derivative_at_interface: f64,
    pub right_derivative_at_interface: f64,
    pub matched: MatchResult,
    pub thresholds: Thresholds,
    pub certification: Certification,
    pub audits: Vec<ConditionReport>,
    pub scan: MismatchScan,
    pub necessary: NecessaryConditionsReport,
    /// `max |d·u'' + f(u)|` over the profile points.
    pub ode_residual: f64,
    pub neumann_residual: f64,
}

fn status_of(termination: Termination) -> MapStatus {
    match termination {
        Termination::Completed => MapStatus::Valid,
        Termination::LeftHalfPlane { .. } => MapStatus::LeftRegion,
        Termination::BlowUpGuard { .. } => MapStatus::BlowUp,
    }
}

fn check_parameter(problem: &PatchProblem, name: &str, value: f64) -> Result<()> {
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    if !(value >= km && value <= kp) {
        return Err(Error::Domain(format!("{name} = {value} must lie in [K-, K+] = [{km}, {kp}]")));
    }
    Ok(())
}

fn left_flow(problem: &PatchProblem, alpha: f64, opts: &FlowOptions) -> Result<FlowResult> {
    let pot = problem.potential(Side::Left);
    let l = problem.l_left;
    flow(&pot, -l, PhaseState::new(&pot, alpha, 0.0)?, l, Direction::Forward, opts)
}

fn right_flow(problem: &PatchProblem, beta: f64, opts: &FlowOptions) -> Result<FlowResult> {
    let pot = problem.potential(Side::Right);
    let l = problem.l_right;
    flow(&pot, l, PhaseState::new(&pot, beta, 0.0)?, l, Direction::Backward, opts)
}

fn sample_of(parameter: f64, f: &FlowResult) -> ShootingMapSample {
    ShootingMapSample {
        parameter,
        u_at_interface: f.final_state.u,
        v_at_interface: f.final_state.v,
        status: status_of(f.termination),
    }
}

/// `(u⁻(0, α), v⁻(0, α))`.
pub fn shoot_left(problem: &PatchProblem, alpha: f64, opts: &FlowOptions) -> Result<ShootingMapSample> {
    check_parameter(problem, "alpha", alpha)?;
    Ok(sample_of(alpha, &left_flow(problem, alpha, opts)?))
}

/// `(u⁺(0, β), v⁺(0, β))`.
pub fn shoot_right(problem: &PatchProblem, beta: f64, opts: &FlowOptions) -> Result<ShootingMapSample> {
    check_parameter(problem, "beta", beta)?;
    Ok(sample_of(beta, &right_flow(problem, beta, opts)?))
}

/// `α⁻` with `u⁻(0, α⁻) = K⁺`. Blow-up counts as overshooting.
pub fn find_alpha_minus(problem: &PatchProblem, opts: &SolverOptions) -> Result<f64> {
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    let top = shoot_left(problem, kp, &opts.flow)?;
    if top.status == MapStatus::Valid && top.u_at_interface <= kp {
        return Err(Error::Structural(format!(
            "u-(0, K+) = {} does not exceed K+ = {kp}; the left shooting map has no threshold",
            top.u_at_interface
        )));
    }
    bisect_predicate(
        |a| {
            let s = shoot_left(problem, a, &opts.flow)?;
            Ok(match s.status {
                MapStatus::BlowUp => true,
                MapStatus::LeftRegion => false,
                MapStatus::Valid => s.u_at_interface >= kp,
            })
        },
        km,
        kp,
        opts.threshold_tol,
    )
}

/// `β⁺` with `u⁺(0, β⁺) = K⁻`. Leaving `u > 0` counts as undershooting.
pub fn find_beta_plus(problem: &PatchProblem, opts: &SolverOptions) -> Result<f64> {
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    bisect_predicate(
        |b| {
            let s = shoot_right(problem, b, &opts.flow)?;
            Ok(match s.status {
                MapStatus::LeftRegion => false,
                MapStatus::BlowUp => true,
                MapStatus::Valid => s.u_at_interface >= km,
            })
        },
        km,
        kp,
        opts.threshold_tol,
    )
}

pub fn find_thresholds(problem: &PatchProblem, opts: &SolverOptions) -> Result<Thresholds> {
    Ok(Thresholds {
        alpha_minus: find_alpha_minus(problem, opts)?,
        beta_plus: find_beta_plus(problem, opts)?,
    })
}

const MATCH_SLACK: f64 = 1e-9;

/// `β(α) ∈ [β⁺, K⁺]` with `u⁺(0, β) = u⁻(0, α)`.
pub fn match_beta(problem: &PatchProblem, alpha: f64, th: &Thresholds, opts: &SolverOptions) -> Result<f64> {
    let left = shoot_left(problem, alpha, &opts.flow)?;
    match_beta_to(problem, left, th, opts)
}

fn match_beta_to(
    problem: &PatchProblem,
    left: ShootingMapSample,
    th: &Thresholds,
    opts: &SolverOptions,
) -> Result<f64> {
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    let target = left.u_at_interface;
    if left.status != MapStatus::Valid {
        return Err(Error::Structural(format!(
            "left orbit from alpha = {} ended with status {:?}; alpha must lie in [K-, alpha-]",
            left.parameter, left.status
        )));
    }
    if target < km - MATCH_SLACK || target > kp + MATCH_SLACK {
        return Err(Error::Structural(format!(
            "u-(0, {}) = {target} lies outside [K-, K+]; the left shooting map is not monotone on [K-, alpha-]",
            left.parameter
        )));
    }
    if target <= km + MATCH_SLACK {
        return Ok(th.beta_plus);
    }
    if target >= kp - MATCH_SLACK {
        return Ok(kp);
    }
    bisect_predicate(
        |b| {
            let s = shoot_right(problem, b, &opts.flow)?;
            Ok(match s.status {
                MapStatus::LeftRegion => false,
                MapStatus::BlowUp => true,
                MapStatus::Valid => s.u_at_interface >= target,
            })
        },
        th.beta_plus,
        kp,
        opts.match_tol,
    )
}

/// `d⁺v⁺(0, β(α)) − d⁻v⁻(0, α)`.
pub fn flux_mismatch(problem: &PatchProblem, alpha: f64, th: &Thresholds, opts: &SolverOptions) -> Result<f64> {
    Ok(mismatch_detail(problem, alpha, th, opts)?.0)
}

fn mismatch_detail(
    problem: &PatchProblem,
    alpha: f64,
    th: &Thresholds,
    opts: &SolverOptions,
) -> Result<(f64, ShootingMapSample, ShootingMapSample)> {
    let left = shoot_left(problem, alpha, &opts.flow)?;
    let beta = match_beta_to(problem, left, th, opts)?;
    let right = shoot_right(problem, beta, &opts.flow)?;
    let m = problem.d_right * right.v_at_interface - problem.d_left * left.v_at_interface;
    Ok((m, left, right))
}

/// Samples the flux mismatch on `n` uniform points of `[K⁻, α⁻]`.
pub fn scan_mismatch(problem: &PatchProblem, th: &Thresholds, n: usize, opts: &SolverOptions) -> Result<MismatchScan> {
    let run = |n: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let km = problem.k_minus();
        let alphas: Vec<f64> = (0..n)
            .map(|i| km + (th.alpha_minus - km) * i as f64 / (n - 1) as f64)
            .collect();
        let values = alphas
            .par_iter()
            .map(|&a| flux_mismatch(problem, a, th, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok((alphas, values))
    };
    let n = n.max(3);
    let decreasing = |v: &[f64], tol: f64| v.windows(2).all(|w| w[1] < w[0] - tol);
    let (mut alphas, mut values) = run(n)?;
    let mut refined = false;
    if !decreasing(&values, opts.tie_tol) {
        (alphas, values) = run(2 * n - 1)?;
        refined = true;
    }
    let sign_changes = values
        .windows(2)
        .filter(|w| (w[0] > 0.0 && w[1] <= 0.0) || (w[0] < 0.0 && w[1] >= 0.0))
        .count();
    Ok(MismatchScan {
        strictly_decreasing: decreasing(&values, 0.0),
        alphas,
        values,
        sign_changes,
        refined,
    })
}

fn certify(audits: &[ConditionReport], scan: &MismatchScan, necessary: &NecessaryConditionsReport) -> Certification {
    let pass = |c: Condition| audits.iter().any(|r| r.condition == c && r.verdict == Verdict::Pass);
    let mut reasons = Vec::new();
    let route = if pass(Condition::Mminus) && pass(Condition::C1plus) && pass(Condition::C2plus) {
        Some(CertificationRoute::MonotoneLeftRate)
    } else if [Condition::C1minus, Condition::C2minus, Condition::C1plus, Condition::C2plus]
        .into_iter()
        .all(pass)
    {
        Some(CertificationRoute::LeftPotentialConditions)
    } else {
        None
    };
    if !pass(Condition::SA) {
        reasons.push("standing assumptions not verified".to_string());
    }
    if route.is_none() {
        let failed: Vec<String> = audits
            .iter()
            .filter(|r| r.verdict != Verdict::Pass)
            .map(|r| format!("{} {:?}", r.condition, r.verdict))
            .collect();
        reasons.push(format!(
            "neither sufficient-condition set holds ({})",
            failed.join(", ")
        ));
    }
    if !scan.strictly_decreasing {
        reasons.push("flux mismatch is not strictly decreasing on the scan grid".to_string());
    }
    if !necessary.all_passed {
        let failed: Vec<&str> = necessary
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        reasons.push(format!("necessary conditions failed: {}", failed.join(", ")));
    }
    Certification {
        certified: reasons.is_empty() && route.is_some(),
        route,
        reasons,
    }
}

fn half_profile(f: &FlowResult, from: f64, to: f64, n: usize) -> Vec<ProfilePoint> {
    let mut xs = f.dense.nodes();
    xs.extend((0..=n).map(|i| from + (to - from) * i as f64 / n as f64));
    xs.retain(|x| *x >= from.min(to) && *x <= from.max(to));
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    let (lo, hi) = (from.min(to), from.max(to));
    if let Some(x) = xs.first_mut() {
        *x = lo;
    }
    if let Some(x) = xs.last_mut() {
        *x = hi;
    }
    xs.into_iter()
        .map(|x| {
            let (u, v) = f.dense.eval(x).expect("profile point inside the flow range");
            ProfilePoint { x, u, u_x: v }
        })
        .collect()
}

fn ode_residual(problem: &PatchProblem, side: Side, f: &FlowResult, pts: &[ProfilePoint]) -> f64 {
    let d = problem.diffusivity(side);
    let reaction = problem.reaction(side);
    pts.iter()
        .filter_map(|p| {
            let (_, dv) = f.dense.eval_derivative(p.x)?;
            let (u, _) = f.dense.eval(p.x)?;
            Some((d * dv + reaction.rate(u.max(0.0)).ok()?).abs())
        })
        .fold(0.0, f64::max)
}

/// Runs every audit, locates `(α*, β*)`, assembles the profile and certifies it.
pub fn solve_steady_state(problem: &PatchProblem, opts: &SolverOptions) -> Result<SteadyStateSolution> {
    let audits: Vec<ConditionReport> = Condition::ALL
        .par_iter()
        .map(|&c| check_condition(problem, c, opts.audit_grid))
        .collect::<Result<_>>()?;
    let sa = &audits[0];
    if sa.verdict == Verdict::Fail {
        return Err(Error::Structural(format!(
            "standing assumptions fail: {}",
            sa.notes.join("; ")
        )));
    }
    let th = find_thresholds(problem, opts)?;
    let km = problem.k_minus();

    let scan = scan_mismatch(problem, &th, opts.scan_points, opts)?;
    if scan.sign_changes != 1 {
        return Err(Error::Uniqueness(format!(
            "flux mismatch changes sign {} times on {} samples of [K-, alpha-] = [{km}, {}]",
            scan.sign_changes,
            scan.alphas.len(),
            th.alpha_minus
        )));
    }
    // narrow the bracket to the scan interval containing the sign change
    let k = scan
        .values
        .windows(2)
        .position(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .expect("one sign change");
    let (lo, hi) = (scan.alphas[k], scan.alphas[k + 1]);
    let alpha_star = if scan.values[k + 1] == 0.0 {
        hi
    } else {
        bisect_predicate(
            |a| Ok(flux_mismatch(problem, a, &th, opts)? < 0.0),
            lo,
            hi,
            opts.alpha_tol,
        )?
    };
    let (flux_residual, left_s, right_s) = mismatch_detail(problem, alpha_star, &th, opts)?;
    let beta_star = right_s.parameter;
    let matched = MatchResult {
        alpha_star,
        beta_star,
        interface_u: 0.5 * (left_s.u_at_interface + right_s.u_at_interface),
        flux_residual,
        density_residual: right_s.u_at_interface - left_s.u_at_interface,
    };

    let lf = left_flow(problem, alpha_star, &opts.flow)?;
    let rf = right_flow(problem, beta_star, &opts.flow)?;
    let profile = Profile {
        left: half_profile(&lf, -problem.l_left, 0.0, opts.profile_points),
        right: half_profile(&rf, 0.0, problem.l_right, opts.profile_points),
    };
    let ode_res = ode_residual(problem, Side::Left, &lf, &profile.left)
        .max(ode_residual(problem, Side::Right, &rf, &profile.right));
    let necessary = verify_necessary_conditions_with(problem, &profile, opts.residual_tol);
    let mut certification = certify(&audits, &scan, &necessary);
    if !(ode_res <= opts.ode_residual_tol) {
        certification.certified = false;
        certification
            .reasons
            .push(format!("ODE residual {ode_res:e} exceeds {:e}", opts.ode_residual_tol));
    }
    if !certification.certified {
        log::warn!(
            "uniqueness uncertified: {}",
            certification.reasons.join("; ")
        );
    }
    let neumann = profile.left[0].u_x.abs().max(profile.right.last().map_or(0.0, |p| p.u_x.abs()));
    Ok(SteadyStateSolution {
        left_derivative_at_interface: lf.final_state.v,
        right_derivative_at_interface: rf.final_state.v,
        profile,
        matched,
        thresholds: th,
        certification,
        audits,
        scan,
        necessary,
        ode_residual: ode_res,
        neumann_residual: neumann,
    })
}

/// Checks the properties any positive steady state has, with tolerance 1e-8
/// on the interface and boundary residuals.
pub fn verify_necessary_conditions(problem: &PatchProblem, profile: &Profile) -> NecessaryConditionsReport {
    verify_necessary_conditions_with(problem, profile, SolverOptions::default().residual_tol)
}

pub fn verify_necessary_conditions_with(
    problem: &PatchProblem,
    profile: &Profile,
    tol: f64,
) -> NecessaryConditionsReport {
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    let mut checks = Vec::new();
    let mut add = |name: &str, passed: bool, value: f64, tolerance: f64, detail: String| {
        checks.push(NamedCheck {
            name: name.to_string(),
            passed,
            value,
            tolerance,
            detail,
        })
    };
    let (Some(first), Some(last), Some(l0), Some(r0)) = (
        profile.left.first(),
        profile.right.last(),
        profile.left.last(),
        profile.right.first(),
    ) else {
        add("non-empty profile", false, f64::NAN, 0.0, "profile half is empty".into());
        return NecessaryConditionsReport {
            checks,
            all_passed: false,
        };
    };

    let gap = first.u - km;
    add(CHECK_LEFT_END, gap > 0.0, gap, 0.0, format!("u(-L-) - K- = {gap:e}"));
    let gap = kp - last.u;
    add(CHECK_RIGHT_END, gap > 0.0, gap, 0.0, format!("K+ - u(L+) = {gap:e}"));

    // strict increase: positive steps and positive slope away from the ends
    let mut worst_step = f64::INFINITY;
    let mut worst_slope = f64::INFINITY;
    let mut where_ = 0.0;
    for half in [&profile.left, &profile.right] {
        for w in half.windows(2) {
            let du = w[1].u - w[0].u;
            if du < worst_step {
                worst_step = du;
                where_ = w[0].x;
            }
        }
        let n = half.len();
        for p in half.iter().take(n.saturating_sub(1)).skip(1) {
            worst_slope = worst_slope.min(p.u_x);
        }
    }
    let x_ends = [first.x, last.x];
    let interior_slope = profile
        .points()
        .filter(|p| !x_ends.contains(&p.x))
        .map(|p| p.u_x)
        .fold(f64::INFINITY, f64::min);
    let monotone = worst_step > 0.0 && interior_slope > 0.0 && l0.u_x > 0.0 && r0.u_x > 0.0;
    add(
        CHECK_MONOTONE,
        monotone,
        worst_step.min(interior_slope),
        0.0,
        format!("smallest step {worst_step:e} near x = {where_}, smallest interior slope {worst_slope:e}"),
    );

    let (umin, umax) = profile
        .points()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.u), b.max(p.u)));
    let in_range = umin > km && umax < kp;
    add(
        CHECK_RANGE,
        in_range,
        (umin - km).min(kp - umax),
        0.0,
        format!("u ranges over [{umin}, {umax}]"),
    );

    let jump = (r0.u - l0.u).abs();
    add(CHECK_DENSITY, jump <= tol, jump, tol, format!("|u(0+) - u(0-)| = {jump:e}"));
    let flux = (problem.d_right * r0.u_x - problem.d_left * l0.u_x).abs();
    add(CHECK_FLUX, flux <= tol, flux, tol, format!("|d+ u_x(0+) - d- u_x(0-)| = {flux:e}"));
    let neu = first.u_x.abs().max(last.u_x.abs());
    add(CHECK_NEUMANN, neu <= tol, neu, tol, format!("max(|u_x(-L-)|, |u_x(L+)|) = {neu:e}"));

    let all_passed = checks.iter().all(|c| c.passed);
    NecessaryConditionsReport { checks, all_passed }
}
