//! Steady states of a two-patch reaction–diffusion population model.
//!
//! Positive solutions of
//!
//! ```text
//! d⁻u'' + f⁻(u) = 0 on (−L⁻, 0),   d⁺u'' + f⁺(u) = 0 on (0, L⁺),
//! u(0−) = u(0+),  d⁻u'(0−) = d⁺u'(0+),  u'(−L⁻) = u'(L⁺) = 0
//! ```
//!
//! are computed by shooting in the phase planes of the Hamiltonians
//! `H± = v²/2 + F±(u)`, certified with sufficient-condition audits, and
//! cross-checked against an independent finite-difference solver.

pub mod audit;
pub mod error;
pub mod export;
pub mod fdm;
pub mod flow;
pub mod potential;
pub mod quadrature;
pub mod reaction;
pub mod roots;
pub mod shooting;
pub mod timemap;

pub use audit::{check_condition, richards_closed_form_audit, Condition, ConditionReport, RichardsAuditResult, Verdict};
pub use error::{Error, Result};
pub use fdm::{compare_solutions, fd_steady_solve, FdComparison, FdGrid, FdInit, FdSolution};
pub use flow::{flow, flow_to_event, Direction, Event, FlowOptions, FlowResult, PhaseState, Termination};
pub use potential::{shifted_potential_g, Branch, Potential};
pub use reaction::{CustomReaction, PatchProblem, ReactionSpec, Side};
pub use shooting::{solve_steady_state, SolverOptions, SteadyStateSolution};
pub use timemap::{Anchor, TimeMap, TimeMapSpec};
