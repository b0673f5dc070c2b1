//! Finite-difference steady-state solver used as an independent check on the
//! shooting construction.
//!
//! Vertex-centred finite volumes on uniform grids over `[−L⁻, 0]` and
//! `[0, L⁺]` with a single shared node at `x = 0`. Each equation is the flux
//! balance of its control volume, which equals the mirrored-ghost Neumann
//! treatment at the ends and makes the interface stencil conservative:
//!
//! ```text
//! interior:  d(u[i+1] − 2u[i] + u[i−1])/h + h·f(u[i])                     = 0
//! ends:      d(u[1] − u[0])/h + (h/2)·f(u[0])                            = 0
//! interface: d⁺(u[m+1] − u[m])/h⁺ − d⁻(u[m] − u[m−1])/h⁻
//!              + (h⁻/2)·f⁻(u[m]) + (h⁺/2)·f⁺(u[m])                         = 0
//! ```
//!
//! The Jacobian is tridiagonal; Newton steps are damped by halving.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reaction::{PatchProblem, ReactionSpec};
use crate::shooting::{Profile, ProfilePoint};

pub const FD_RESIDUAL_TOL: f64 = 1e-10;
pub const FD_MAX_ITER: usize = 100;
const MIN_DAMPING: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FdGrid {
    pub n_left: usize,
    pub n_right: usize,
}

impl FdGrid {
    pub fn new(n_left: usize, n_right: usize) -> Result<Self> {
        if n_left < 16 || n_right < 16 {
            return Err(Error::InvalidParameter(format!(
                "finite-difference grid needs at least 16 cells per side, got {n_left}/{n_right}"
            )));
        }
        Ok(Self { n_left, n_right })
    }

    /// `n` cells on each side.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn h_left(&self, problem: &PatchProblem) -> f64 {
        problem.l_left / self.n_left as f64
    }

    pub fn h_right(&self, problem: &PatchProblem) -> f64 {
        problem.l_right / self.n_right as f64
    }

    pub fn interface_index(&self) -> usize {
        self.n_left
    }

    pub fn len(&self) -> usize {
        self.n_left + self.n_right + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self, problem: &PatchProblem) -> Vec<f64> {
        let (hl, hr) = (self.h_left(problem), self.h_right(problem));
        let left = (0..self.n_left).map(|i| -problem.l_left + i as f64 * hl);
        let right = (0..=self.n_right).map(|j| {
            if j == self.n_right {
                problem.l_right
            } else {
                j as f64 * hr
            }
        });
        left.chain(right).collect()
    }
}

#[derive(Debug, Clone)]
pub enum FdInit {
    /// Interpolates a shooting profile onto the nodes.
    FromShooting(Profile),
    /// Straight line from `K⁻` at `x = −L⁻` to `K⁺` at `x = L⁺`.
    Linear,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FdFlag {
    /// Some nodal value is `≤ 0`.
    NonPositive { min_u: f64 },
    /// `u[i+1] ≤ u[i]` somewhere.
    NonIncreasing { x: f64 },
    /// `u(−L⁻) ≤ K⁻` or `u(L⁺) ≥ K⁺`.
    EndpointBounds { u_left: f64, u_right: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FdSolution {
    pub grid: FdGrid,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub iterations: usize,
    /// `max |R|` before each Newton step and after the last one.
    pub residual_history: Vec<f64>,
    pub max_residual: f64,
    /// Possible spurious root indicators; empty for a plausible steady state.
    pub flags: Vec<FdFlag>,
    h_left: f64,
    h_right: f64,
    d_left: f64,
    d_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdComparison {
    pub linf: f64,
    pub l2: f64,
    /// `|d⁻u_x(0−)|` difference between the FD estimate and the reference.
    pub interface_flux_discrepancy: f64,
    pub nodes: usize,
}

fn rate(f: &ReactionSpec, u: f64) -> f64 {
    f.rate_extended(u)
}

fn rate_slope(f: &ReactionSpec, u: f64) -> f64 {
    f.first_derivative_raw(u.max(0.0))
}

struct System<'a> {
    problem: &'a PatchProblem,
    m: usize,
    hl: f64,
    hr: f64,
}

impl System<'_> {
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let p = self.problem;
        let (dl, dr, hl, hr, m) = (p.d_left, p.d_right, self.hl, self.hr, self.m);
        let n = u.len();
        let mut r = vec![0.0; n];
        r[0] = dl * (u[1] - u[0]) / hl + 0.5 * hl * rate(&p.left, u[0]);
        for i in 1..m {
            r[i] = dl * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / hl + hl * rate(&p.left, u[i]);
        }
        r[m] = dr * (u[m + 1] - u[m]) / hr - dl * (u[m] - u[m - 1]) / hl
            + 0.5 * hl * rate(&p.left, u[m])
            + 0.5 * hr * rate(&p.right, u[m]);
        for i in m + 1..n - 1 {
            r[i] = dr * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / hr + hr * rate(&p.right, u[i]);
        }
        r[n - 1] = dr * (u[n - 2] - u[n - 1]) / hr + 0.5 * hr * rate(&p.right, u[n - 1]);
        r
    }

    /// `(sub, diag, sup)` of the Jacobian.
    fn jacobian(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = self.problem;
        let (dl, dr, hl, hr, m) = (p.d_left, p.d_right, self.hl, self.hr, self.m);
        let n = u.len();
        let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        b[0] = -dl / hl + 0.5 * hl * rate_slope(&p.left, u[0]);
        c[0] = dl / hl;
        for i in 1..m {
            a[i] = dl / hl;
            b[i] = -2.0 * dl / hl + hl * rate_slope(&p.left, u[i]);
            c[i] = dl / hl;
        }
        a[m] = dl / hl;
        b[m] = -dr / hr - dl / hl
            + 0.5 * hl * rate_slope(&p.left, u[m])
            + 0.5 * hr * rate_slope(&p.right, u[m]);
        c[m] = dr / hr;
        for i in m + 1..n - 1 {
            a[i] = dr / hr;
            b[i] = -2.0 * dr / hr + hr * rate_slope(&p.right, u[i]);
            c[i] = dr / hr;
        }
        a[n - 1] = dr / hr;
        b[n - 1] = -dr / hr + 0.5 * hr * rate_slope(&p.right, u[n - 1]);
        (a, b, c)
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm); `a[0]` and
/// `c[n−1]` are ignored.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut denom = b[0];
    for i in 0..n {
        if i > 0 {
            denom = b[i] - a[i] * cp[i - 1];
        }
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Numeric {
                what: format!("tridiagonal solve hit a zero pivot at row {i}"),
                achieved: denom,
            });
        }
        cp[i] = if i + 1 < n { c[i] / denom } else { 0.0 };
        dp[i] = (rhs[i] - if i > 0 { a[i] * dp[i - 1] } else { 0.0 }) / denom;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn initial_values(problem: &PatchProblem, x: &[f64], init: &FdInit) -> Result<Vec<f64>> {
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    let total = problem.l_left + problem.l_right;
    Ok(match init {
        FdInit::Constant(c) => vec![*c; x.len()],
        FdInit::Linear => x
            .iter()
            .map(|&x| km + (kp - km) * (x + problem.l_left) / total)
            .collect(),
        FdInit::FromShooting(profile) => x
            .iter()
            .map(|&x| {
                profile.interpolate(x).ok_or_else(|| {
                    Error::Domain(format!("shooting profile does not cover x = {x}"))
                })
            })
            .collect::<Result<_>>()?,
    })
}

fn flags_for(problem: &PatchProblem, x: &[f64], u: &[f64]) -> Vec<FdFlag> {
    let mut flags = Vec::new();
    let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
    if min_u <= 0.0 {
        flags.push(FdFlag::NonPositive { min_u });
    }
    if let Some(i) = (0..u.len() - 1).find(|&i| u[i + 1] <= u[i]) {
        flags.push(FdFlag::NonIncreasing { x: x[i] });
    }
    let (ul, ur) = (u[0], u[u.len() - 1]);
    if !(ul > problem.k_minus() && ur < problem.k_plus()) {
        flags.push(FdFlag::EndpointBounds {
            u_left: ul,
            u_right: ur,
        });
    }
    flags
}

/// Damped Newton solve of the discrete steady-state equations.
pub fn fd_steady_solve(problem: &PatchProblem, grid: FdGrid, init: &FdInit) -> Result<FdSolution> {
    let grid = FdGrid::new(grid.n_left, grid.n_right)?;
    let x = grid.nodes(problem);
    let sys = System {
        problem,
        m: grid.interface_index(),
        hl: grid.h_left(problem),
        hr: grid.h_right(problem),
    };
    let mut u = initial_values(problem, &x, init)?;
    let mut r = sys.residual(&u);
    let mut norm = max_abs(&r);
    let mut history = vec![norm];
    let mut iterations = 0;
    while !(norm <= FD_RESIDUAL_TOL) {
        if iterations == FD_MAX_ITER || !norm.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                last: norm,
                history,
            });
        }
        iterations += 1;
        let (a, b, c) = sys.jacobian(&u);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = solve_tridiagonal(&a, &b, &c, &rhs)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(u, d)| u + lambda * d).collect();
            let rt = sys.residual(&trial);
            let nt = max_abs(&rt);
            if nt <= norm || lambda <= MIN_DAMPING {
                u = trial;
                r = rt;
                norm = nt;
                break;
            }
            lambda *= 0.5;
        }
        history.push(norm);
    }
    let flags = flags_for(problem, &x, &u);
    Ok(FdSolution {
        grid,
        flags,
        x,
        u,
        iterations,
        residual_history: history,
        max_residual: norm,
        h_left: sys.hl,
        h_right: sys.hr,
        d_left: problem.d_left,
        d_right: problem.d_right,
    })
}

/// Runs several initializations in parallel; results keep the input order.
pub fn fd_multi_start(problem: &PatchProblem, grid: FdGrid, inits: &[FdInit]) -> Vec<Result<FdSolution>> {
    inits.par_iter().map(|i| fd_steady_solve(problem, grid, i)).collect()
}

impl FdSolution {
    pub fn interface_index(&self) -> usize {
        self.grid.interface_index()
    }

    /// Second-order flux estimates `(d⁻u_x(0−), d⁺u_x(0+))` from the
    /// interface half-cells.
    pub fn interface_fluxes(&self, problem: &PatchProblem) -> (f64, f64) {
        let m = self.interface_index();
        let u = &self.u;
        let um = u[m].max(0.0);
        let left = self.d_left * (u[m] - u[m - 1]) / self.h_left
            - 0.5 * self.h_left * problem.left.rate(um).unwrap_or(f64::NAN);
        let right = self.d_right * (u[m + 1] - u[m]) / self.h_right
            + 0.5 * self.h_right * problem.right.rate(um).unwrap_or(f64::NAN);
        (left, right)
    }

    /// The nodal values as a profile, with second-order derivative estimates;
    /// the interface node is listed on both halves.
    pub fn to_profile(&self, problem: &PatchProblem) -> Profile {
        let m = self.interface_index();
        let n = self.u.len();
        let (fl, fr) = self.interface_fluxes(problem);
        let slope = |i: usize, h: f64| (self.u[i + 1] - self.u[i - 1]) / (2.0 * h);
        let mut left = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let u_x = if i == 0 {
                0.0
            } else if i == m {
                fl / self.d_left
            } else {
                slope(i, self.h_left)
            };
            left.push(ProfilePoint { x: self.x[i], u: self.u[i], u_x });
        }
        let mut right = Vec::with_capacity(n - m);
        for i in m..n {
            let u_x = if i == m {
                fr / self.d_right
            } else if i == n - 1 {
                0.0
            } else {
                slope(i, self.h_right)
            };
            right.push(ProfilePoint { x: self.x[i], u: self.u[i], u_x });
        }
        Profile { left, right }
    }
}

/// Differences between an FD solution and a reference profile, which is
/// interpolated onto the FD nodes with cubic Hermite polynomials.
pub fn compare_solutions(problem: &PatchProblem, fd: &FdSolution, reference: &Profile) -> Result<FdComparison> {
    let (Some(a), Some(b)) = (reference.left.first(), reference.right.last()) else {
        return Err(Error::Domain("reference profile is empty".into()));
    };
    let (x0, x1) = (fd.x[0], fd.x[fd.x.len() - 1]);
    let tol = 1e-12 * (problem.l_left + problem.l_right);
    if (a.x - x0).abs() > tol || (b.x - x1).abs() > tol {
        return Err(Error::Domain(format!(
            "domains differ: FD covers [{x0}, {x1}], reference covers [{}, {}]",
            a.x, b.x
        )));
    }
    let m = fd.interface_index();
    let mut linf: f64 = 0.0;
    let mut sq = 0.0;
    let n = fd.x.len();
    for i in 0..n {
        // the shared node takes the left limit of the reference
        let r = if i == m {
            reference.left.last().map(|p| p.u)
        } else {
            reference.interpolate(fd.x[i])
        }
        .ok_or_else(|| Error::Domain(format!("reference does not cover x = {}", fd.x[i])))?;
        let e = fd.u[i] - r;
        linf = linf.max(e.abs());
        let w = match i {
            0 => 0.5 * fd.h_left,
            i if i < m => fd.h_left,
            i if i == m => 0.5 * (fd.h_left + fd.h_right),
            i if i == n - 1 => 0.5 * fd.h_right,
            _ => fd.h_right,
        };
        sq += w * e * e;
    }
    let (fl, _) = fd.interface_fluxes(problem);
    let ref_flux = problem.d_left * reference.left.last().map_or(f64::NAN, |p| p.u_x);
    Ok(FdComparison {
        linf,
        l2: sq.sqrt(),
        interface_flux_discrepancy: (fl - ref_flux).abs(),
        nodes: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::{solve_steady_state, SolverOptions};

    #[test]
    fn tridiagonal_solver_matches_dense() {
        let a = [0.0, 1.0, 2.0, -1.0];
        let b = [4.0, 5.0, 6.0, 7.0];
        let c = [1.0, -2.0, 1.0, 0.0];
        let x = [1.0, -1.0, 2.0, 0.5];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                b[i] * x[i]
                    + if i > 0 { a[i] * x[i - 1] } else { 0.0 }
                    + if i < 3 { c[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let got = solve_tridiagonal(&a, &b, &c, &rhs).unwrap();
        for i in 0..4 {
            assert!((got[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn equal_capacities_give_the_constant_root() {
        let p = PatchProblem::new_unoriented(
            ReactionSpec::logistic(1.0, 1.5).unwrap(),
            ReactionSpec::logistic(2.0, 1.5).unwrap(),
            1.2,
            2.0,
            1.0,
            1.0,
        )
        .unwrap();
        let s = fd_steady_solve(&p, FdGrid::uniform(32).unwrap(), &FdInit::Constant(1.5)).unwrap();
        assert!(s.u.iter().all(|&u| u == 1.5));
        assert_eq!(s.max_residual, 0.0);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn small_grids_are_rejected() {
        assert!(FdGrid::new(8, 32).is_err());
    }

    #[test]
    fn nodes_cover_the_domain() {
        let p = PatchProblem::reference_logistic();
        let g = FdGrid::new(16, 20).unwrap();
        let x = g.nodes(&p);
        assert_eq!(x.len(), 37);
        assert_eq!(x[0], -p.l_left);
        assert_eq!(x[16], 0.0);
        assert_eq!(x[36], p.l_right);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn reference_problem_agrees_with_shooting() {
        let p = PatchProblem::reference_logistic();
        let shot = solve_steady_state(&p, &SolverOptions::default()).unwrap();
        let grid = FdGrid::uniform(256).unwrap();
        let fd = fd_steady_solve(&p, grid, &FdInit::FromShooting(shot.profile.clone())).unwrap();
        assert!(fd.iterations <= 10);
        assert!(fd.flags.is_empty(), "{:?}", fd.flags);
        let cmp = compare_solutions(&p, &fd, &shot.profile).unwrap();
        assert!(cmp.linf <= 5e-4, "{cmp:?}");
        let lin = fd_steady_solve(&p, grid, &FdInit::Linear).unwrap();
        let gap = fd.u.iter().zip(&lin.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap <= 1e-6);
    }

    #[test]
    fn self_comparison_is_zero_and_bumps_are_measured() {
        let p = PatchProblem::reference_logistic();
        let fd = fd_steady_solve(&p, FdGrid::uniform(64).unwrap(), &FdInit::Linear).unwrap();
        let prof = fd.to_profile(&p);
        let cmp = compare_solutions(&p, &fd, &prof).unwrap();
        assert_eq!(cmp.linf, 0.0);
        assert_eq!(cmp.l2, 0.0);
        let mut bumped = prof.clone();
        for pt in bumped.left.iter_mut().chain(bumped.right.iter_mut()) {
            pt.u += 1e-3 * (-(pt.x / 0.2).powi(2)).exp();
        }
        let cmp = compare_solutions(&p, &fd, &bumped).unwrap();
        assert!((cmp.linf - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn mismatched_domains_are_rejected() {
        let p = PatchProblem::reference_logistic();
        let fd = fd_steady_solve(&p, FdGrid::uniform(32).unwrap(), &FdInit::Linear).unwrap();
        let q = p.with_lengths(1.0, 1.0).unwrap();
        let other = fd_steady_solve(&q, FdGrid::uniform(32).unwrap(), &FdInit::Linear).unwrap();
        assert!(compare_solutions(&p, &fd, &other.to_profile(&q)).is_err());
    }
}
