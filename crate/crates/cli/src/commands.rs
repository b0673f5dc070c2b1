//! The six workflows. Each writes its artifacts into `out` and reports an exit code.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twopatch::audit::{richards_closed_form_audit, RichardsAuditResult};
use twopatch::export::{fd_rows, scan_rows, write_rows};
use twopatch::shooting::{MatchResult, Thresholds};
use twopatch::{
    check_condition, compare_solutions, fd_steady_solve, solve_steady_state, Condition, ConditionReport,
    FdComparison, FdGrid, FdInit, PatchProblem, ReactionSpec, Side, SteadyStateSolution, TimeMap, Verdict,
};

use crate::config::{AnchorConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
/// The run finished but its result is uncertified or out of tolerance.
pub const EXIT_UNCERTIFIED: i32 = 2;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Artifacts<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self { dir, files: vec![] })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let w = self.create(name)?;
        write_rows(w, rows)?;
        Ok(())
    }

    fn finish(self, code: i32, summary: String) -> Outcome {
        Outcome { code, summary, files: self.files }
    }
}

/// One row of `solution.csv`; `x = 0` appears once per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub side: Side,
    pub x: f64,
    pub u: f64,
    pub u_x: f64,
}

pub fn solution_rows(sol: &SteadyStateSolution) -> Vec<SolutionRow> {
    let half = |side, pts: &[twopatch::shooting::ProfilePoint]| {
        pts.iter()
            .map(move |p| SolutionRow { side, x: p.x, u: p.u, u_x: p.u_x })
            .collect::<Vec<_>>()
    };
    let mut rows = half(Side::Left, &sol.profile.left);
    rows.extend(half(Side::Right, &sol.profile.right));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchFile {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub interface_u: f64,
    pub u_x_left: f64,
    pub u_x_right: f64,
    pub flux_residual: f64,
    pub density_residual: f64,
    pub alpha_minus: f64,
    pub beta_plus: f64,
}

impl MatchFile {
    fn new(m: &MatchResult, th: &Thresholds, sol: &SteadyStateSolution) -> Self {
        Self {
            alpha_star: m.alpha_star,
            beta_star: m.beta_star,
            interface_u: m.interface_u,
            u_x_left: sol.left_derivative_at_interface,
            u_x_right: sol.right_derivative_at_interface,
            flux_residual: m.flux_residual,
            density_residual: m.density_residual,
            alpha_minus: th.alpha_minus,
            beta_plus: th.beta_plus,
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    exit_code: i32,
    certified: bool,
    status: &'a str,
    config: &'a RunConfig,
    options: twopatch::SolverOptions,
    certification: &'a twopatch::shooting::Certification,
    ode_residual: f64,
    neumann_residual: f64,
    necessary: &'a twopatch::shooting::NecessaryConditionsReport,
    scan: &'a twopatch::shooting::MismatchScan,
    audits: &'a [ConditionReport],
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let opts = cfg.solver_options();
    let sol = solve_steady_state(&problem, &opts).context("steady-state solve failed")?;
    let code = if sol.certification.certified { EXIT_OK } else { EXIT_UNCERTIFIED };
    let mut art = Artifacts::new(out)?;
    art.csv("solution.csv", solution_rows(&sol))?;
    art.json("match.json", &MatchFile::new(&sol.matched, &sol.thresholds, &sol))?;
    art.json(
        "report.json",
        &SolveReport {
            exit_code: code,
            certified: sol.certification.certified,
            status: sol.certification.label(),
            config: cfg,
            options: opts,
            certification: &sol.certification,
            ode_residual: sol.ode_residual,
            neumann_residual: sol.neumann_residual,
            necessary: &sol.necessary,
            scan: &sol.scan,
            audits: &sol.audits,
        },
    )?;
    let summary = format!(
        "alpha* = {:.12}  beta* = {:.12}  {}",
        sol.matched.alpha_star,
        sol.matched.beta_star,
        sol.certification.label()
    );
    Ok(art.finish(code, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RichardsEntry {
    pub side: Side,
    pub k_ratio: f64,
    /// C2 verdict at this side's `K⁻/K⁺`; `None` on the left.
    pub c2_at_ratio: Option<Verdict>,
    pub result: RichardsAuditResult,
}

#[derive(Serialize)]
struct AuditFile<'a> {
    grid: usize,
    conditions: &'a [ConditionReport],
    richards: &'a [RichardsEntry],
}

pub fn audit(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let grid = cfg.grids.audit;
    let reports = Condition::ALL
        .par_iter()
        .map(|&c| check_condition(&problem, c, grid))
        .collect::<twopatch::Result<Vec<_>>>()?;
    let ratio = problem.k_minus() / problem.k_plus();
    let mut richards = vec![];
    for side in [Side::Left, Side::Right] {
        if let ReactionSpec::Richards { p, .. } = problem.reaction(side) {
            let result = richards_closed_form_audit(*p, 1000)?;
            let c2_at_ratio = (side == Side::Right).then(|| result.c2_plus_for_ratio(ratio));
            richards.push(RichardsEntry { side, k_ratio: ratio, c2_at_ratio, result });
        }
    }
    let mut art = Artifacts::new(out)?;
    art.json("audit.json", &AuditFile { grid, conditions: &reports, richards: &richards })?;
    let summary = reports
        .iter()
        .map(|r| format!("{}: {:?}", r.condition, r.verdict))
        .collect::<Vec<_>>()
        .join("  ");
    Ok(art.finish(EXIT_OK, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMapEntry {
    pub file: String,
    pub anchor: AnchorConfig,
    pub e_lo: f64,
    pub e_hi: f64,
    pub energy_shift: f64,
    pub strictly_increasing: bool,
    pub all_slopes_positive: bool,
    pub min_adjacent_gap: f64,
}

pub fn timemap(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let anchors = cfg.anchors();
    let n = cfg.grids.timemap;
    let reports = anchors
        .par_iter()
        .map(|a| {
            TimeMap::new(&problem, a.side, a.anchor())
                .and_then(|m| m.monotonicity_scan(n))
                .with_context(|| format!("time map for anchor {a:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut art = Artifacts::new(out)?;
    let mut entries = vec![];
    for (i, (a, rep)) in anchors.iter().zip(&reports).enumerate() {
        let file = format!("timemap_{i}.csv");
        art.csv(&file, scan_rows(rep))?;
        entries.push(TimeMapEntry {
            file,
            anchor: *a,
            e_lo: rep.spec.e_lo,
            e_hi: rep.spec.e_hi,
            energy_shift: rep.spec.energy_shift,
            strictly_increasing: rep.strictly_increasing,
            all_slopes_positive: rep.all_slopes_positive,
            min_adjacent_gap: rep.min_adjacent_gap,
        });
    }
    art.json("timemap.json", &entries)?;
    let monotone = entries.iter().all(|e| e.strictly_increasing && e.all_slopes_positive);
    let code = if monotone { EXIT_OK } else { EXIT_UNCERTIFIED };
    let summary = format!(
        "{} scans, {}",
        entries.len(),
        if monotone { "all monotone" } else { "monotonicity violated" }
    );
    Ok(art.finish(code, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub parameter: String,
    pub value: f64,
    pub alpha_star: Option<f64>,
    pub beta_star: Option<f64>,
    /// `certified`, `uncertified` or `failed`.
    pub certification: String,
    pub sign_changes: Option<usize>,
    pub error: Option<String>,
}

fn sweep_one(cfg: &RunConfig, parameter: &str, index: usize, value: f64) -> SweepRow {
    let mut row = SweepRow {
        index,
        parameter: parameter.to_string(),
        value,
        alpha_star: None,
        beta_star: None,
        certification: "failed".into(),
        sign_changes: None,
        error: None,
    };
    let run = cfg
        .with_parameter(parameter, value)
        .and_then(|c| Ok(solve_steady_state(&c.problem()?, &c.solver_options())?));
    match run {
        Ok(sol) => {
            row.alpha_star = Some(sol.matched.alpha_star);
            row.beta_star = Some(sol.matched.beta_star);
            row.sign_changes = Some(sol.scan.sign_changes);
            row.certification = if sol.certification.certified { "certified" } else { "uncertified" }.into();
        }
        Err(e) => row.error = Some(format!("{e:#}")),
    }
    row
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let sweep = cfg
        .sweep
        .as_ref()
        .context("the sweep command needs a [sweep] section")?;
    let values = sweep.points()?;
    // validate the parameter name once so a typo is a config error, not N failed rows
    cfg.with_parameter(&sweep.parameter, values[0])?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| sweep_one(cfg, &sweep.parameter, i, v))
        .collect();
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let mut art = Artifacts::new(out)?;
    art.csv("sweep.csv", &rows)?;
    let code = if failed == 0 { EXIT_OK } else { EXIT_UNCERTIFIED };
    let summary = format!("{} runs, {failed} failed", rows.len());
    Ok(art.finish(code, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub n: usize,
    pub linf: f64,
    pub l2: f64,
    pub interface_flux_discrepancy: f64,
    /// `log2` of the L∞ ratio to the previous grid.
    pub observed_order: Option<f64>,
}

#[derive(Serialize)]
struct ValidateFile<'a> {
    n: usize,
    iterations: usize,
    max_residual: f64,
    residual_history: &'a [f64],
    flags: &'a [twopatch::fdm::FdFlag],
    comparison: FdComparison,
    linf_tolerance: f64,
    refinement: &'a [RefinementRow],
}

/// FD solve from a linear initial guess compared against the shooting profile.
pub fn refinement_study(problem: &PatchProblem, sol: &SteadyStateSolution, n0: usize, doublings: usize) -> Result<Vec<RefinementRow>> {
    let sizes: Vec<usize> = (0..=doublings).map(|k| n0 << k).collect();
    let cmps = sizes
        .par_iter()
        .map(|&n| {
            let fd = fd_steady_solve(problem, FdGrid::uniform(n)?, &FdInit::Linear)?;
            compare_solutions(problem, &fd, &sol.profile)
        })
        .collect::<twopatch::Result<Vec<_>>>()?;
    Ok(sizes
        .iter()
        .zip(&cmps)
        .enumerate()
        .map(|(i, (&n, c))| RefinementRow {
            n,
            linf: c.linf,
            l2: c.l2,
            interface_flux_discrepancy: c.interface_flux_discrepancy,
            observed_order: (i > 0).then(|| (cmps[i - 1].linf / c.linf).log2()),
        })
        .collect())
}

pub fn validate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let sol = solve_steady_state(&problem, &cfg.solver_options()).context("shooting solve failed")?;
    let n = cfg.grids.fd;
    let fd = fd_steady_solve(&problem, FdGrid::uniform(n)?, &FdInit::Linear).context("FD solve failed")?;
    let comparison = compare_solutions(&problem, &fd, &sol.profile)?;
    let refinement = if cfg.grids.refinements > 0 {
        refinement_study(&problem, &sol, n, cfg.grids.refinements)?
    } else {
        vec![]
    };
    let tol = cfg.tolerances.validate_linf;
    let mut art = Artifacts::new(out)?;
    art.csv("fd.csv", fd_rows(&fd))?;
    art.json(
        "validate.json",
        &ValidateFile {
            n,
            iterations: fd.iterations,
            max_residual: fd.max_residual,
            residual_history: &fd.residual_history,
            flags: &fd.flags,
            comparison,
            linf_tolerance: tol,
            refinement: &refinement,
        },
    )?;
    let ok = comparison.linf <= tol && fd.flags.is_empty();
    let summary = format!("n = {n}: L-inf {:.3e}, L2 {:.3e}", comparison.linf, comparison.l2);
    Ok(art.finish(if ok { EXIT_OK } else { EXIT_UNCERTIFIED }, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Level curve `H = E` of one side's Hamiltonian.
    Level,
    /// Arc traced by the matched steady state.
    Matched,
    /// Vertical segment joining `u_x(0−)` and `u_x(0+)`.
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub family: Family,
    pub side: Side,
    /// Curve index within the family and side.
    pub orbit: usize,
    pub energy: f64,
    pub u: f64,
    pub v: f64,
}

fn level_curve(problem: &PatchProblem, side: Side, orbit: usize, energy: f64, u_max: f64, n: usize) -> Vec<PhaseRow> {
    let pot = problem.potential(side);
    let mut upper = vec![];
    for i in 0..=n {
        let u = u_max * i as f64 / n as f64;
        let gap = energy - pot.value(u).unwrap_or(f64::INFINITY);
        if gap >= 0.0 {
            upper.push((u, (2.0 * gap).sqrt()));
        }
    }
    let row = |(u, v): (f64, f64)| PhaseRow { family: Family::Level, side, orbit, energy, u, v };
    let lower: Vec<_> = upper.iter().rev().map(|&(u, v)| row((u, -v))).collect();
    upper.into_iter().map(row).chain(lower).collect()
}

pub fn phase(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.problem()?;
    let sol = solve_steady_state(&problem, &cfg.solver_options()).context("steady-state solve failed")?;
    let levels = cfg.grids.phase_levels.max(1);
    let u_max = 1.5 * problem.k_plus();
    let mut rows = vec![];
    for side in [Side::Left, Side::Right] {
        let pot = problem.potential(side);
        let top = pot.value(pot.k())?;
        // energies from below F(0) up to the centre energy F(K)
        for j in 0..levels {
            let e = top * (-0.5 + 1.5 * (j + 1) as f64 / levels as f64);
            rows.extend(level_curve(&problem, side, j, e, u_max, cfg.grids.phase_points));
        }
        let arc = match side {
            Side::Left => &sol.profile.left,
            Side::Right => &sol.profile.right,
        };
        for p in arc {
            let energy = 0.5 * p.u_x * p.u_x + pot.value(p.u)?;
            rows.push(PhaseRow { family: Family::Matched, side, orbit: 0, energy, u: p.u, v: p.u_x });
        }
    }
    let u0 = sol.matched.interface_u;
    for (side, v) in [
        (Side::Left, sol.left_derivative_at_interface),
        (Side::Right, sol.right_derivative_at_interface),
    ] {
        let energy = 0.5 * v * v + problem.potential(side).value(u0)?;
        rows.push(PhaseRow { family: Family::Jump, side, orbit: 0, energy, u: u0, v });
    }
    let mut art = Artifacts::new(out)?;
    art.csv("phase.csv", &rows)?;
    let summary = format!("{} phase-plane samples", rows.len());
    Ok(art.finish(EXIT_OK, summary))
}
