//! Transit-time maps `T(E)` between a transversal segment and the u-axis.
//!
//! Four variants: right/left Hamiltonian, anchored on a vertical line
//! `u = u₀` or a horizontal line `v = v₀`. With `Ê` the (shifted) energy and
//! `h = √(F − shift)`, the substitutions `r = h(u)`, `r = √Ê·sin θ` turn the
//! inverse-square-root singular integral into
//!
//! ```text
//! T(E) = (1/√2) ∫_{φ(E)}^{π/2} dθ / |h'(h⁻¹(√Ê sin θ))|,   sin φ = √(Ê_start / Ê),
//! ```
//!
//! whose integrand is smooth, so fixed-order Gauss–Legendre converges fast.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{flow_to_event, level_curve_v, transit_time_quadrature, Direction, Event, FlowOptions, PhaseState};
use crate::potential::{Branch, Potential};
use crate::quadrature::{gauss_legendre, GL_ORDERS};
use crate::reaction::{PatchProblem, Side};

/// Energies closer than this to an admissible endpoint are rejected.
pub const ENDPOINT_EXCLUSION: f64 = 1e-9;
/// Agreement required between successive Gauss–Legendre orders.
pub const GL_AGREEMENT: f64 = 1e-10;
/// Tolerance in `u` when inverting `h`.
pub const H_INVERSE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Anchor {
    /// Segment on the line `u = u₀`.
    U0(f64),
    /// Segment on the line `v = v₀`.
    V0(f64),
}

/// A time-map variant with its admissible energy interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeMapSpec {
    pub side: Side,
    pub anchor: Anchor,
    pub e_lo: f64,
    pub e_hi: f64,
    /// `0` on the right, `F⁻(K⁺)` on the left (`G⁻ = F⁻ − F⁻(K⁺)`).
    pub energy_shift: f64,
}

impl TimeMapSpec {
    pub fn new(problem: &PatchProblem, side: Side, anchor: Anchor, guard: f64) -> Result<Self> {
        let (km, kp) = (problem.k_minus(), problem.k_plus());
        let pot = problem.potential(side);
        let lm = pot.landmarks().expect("problem potentials carry landmarks");
        let check_u0 = |u0: f64| {
            if !(u0 > km && u0 < kp) {
                return Err(Error::InvalidParameter(format!(
                    "u0 must lie in (K-, K+) = ({km}, {kp}), got {u0}"
                )));
            }
            Ok(())
        };
        let (e_lo, e_hi, shift) = match (side, anchor) {
            (Side::Right, Anchor::U0(u0)) => {
                check_u0(u0)?;
                (pot.value(u0)?, lm.e_k_plus, 0.0)
            }
            (Side::Right, Anchor::V0(v0)) => {
                let vmax = (2.0 * lm.e_k_plus).sqrt();
                if !(v0 > 0.0 && v0 < vmax) {
                    return Err(Error::InvalidParameter(format!(
                        "v0 must lie in (0, sqrt(2 E_K+)) = (0, {vmax}), got {v0}"
                    )));
                }
                (0.5 * v0 * v0 + lm.e_k_minus, lm.e_k_plus, 0.0)
            }
            (Side::Left, Anchor::U0(u0)) => {
                check_u0(u0)?;
                (pot.value(u0)?, lm.e_k_minus, lm.e_k_plus)
            }
            (Side::Left, Anchor::V0(v0)) => {
                // F⁻ at the blow-up guard stands in for F⁻ at infinity
                let f_inf = pot.value(guard)?;
                let vmax = (2.0 * (lm.e_k_minus - f_inf)).sqrt();
                if !(v0 > 0.0 && v0 < vmax) {
                    return Err(Error::InvalidParameter(format!(
                        "v0 must lie in (0, sqrt(2(E_K- - F-_inf))) = (0, {vmax}), got {v0}"
                    )));
                }
                (0.5 * v0 * v0 + lm.e_k_plus, lm.e_k_minus, lm.e_k_plus)
            }
        };
        if !(e_lo < e_hi) {
            return Err(Error::InvalidParameter(format!(
                "anchor {anchor:?} leaves an empty energy interval ({e_lo}, {e_hi})"
            )));
        }
        Ok(Self {
            side,
            anchor,
            e_lo,
            e_hi,
            energy_shift: shift,
        })
    }

    pub fn width(&self) -> f64 {
        self.e_hi - self.e_lo
    }

    /// Relative position `(E − E_lo)/(E_hi − E_lo)` mapped back to an energy.
    pub fn energy_at(&self, fraction: f64) -> f64 {
        self.e_lo + fraction * self.width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeMapSample {
    pub energy: f64,
    pub time: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub spec: TimeMapSpec,
    pub samples: Vec<TimeMapSample>,
    pub strictly_increasing: bool,
    pub min_adjacent_gap: f64,
    pub all_slopes_positive: bool,
}

/// A time map bound to its potential.
#[derive(Debug, Clone)]
pub struct TimeMap {
    pub spec: TimeMapSpec,
    pot: Potential,
    flow_opts: FlowOptions,
}

impl TimeMap {
    pub fn new(problem: &PatchProblem, side: Side, anchor: Anchor) -> Result<Self> {
        let opts = FlowOptions::default();
        let guard = 100.0 * problem.k_plus();
        Ok(Self {
            spec: TimeMapSpec::new(problem, side, anchor, guard)?,
            pot: problem.potential(side),
            flow_opts: opts,
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    fn branch(&self) -> Branch {
        match self.spec.side {
            Side::Right => Branch::IncreasingOnZeroK,
            Side::Left => Branch::DecreasingPastK,
        }
    }

    fn check_energy(&self, e: f64) -> Result<()> {
        let s = &self.spec;
        if !(e > s.e_lo + ENDPOINT_EXCLUSION && e < s.e_hi - ENDPOINT_EXCLUSION) {
            return Err(Error::Domain(format!(
                "energy {e} is not strictly inside the admissible interval ({}, {})",
                s.e_lo, s.e_hi
            )));
        }
        Ok(())
    }

    /// Shifted energy at the anchor end of the orbit arc.
    fn start_energy(&self, e: f64) -> Result<f64> {
        let shift = self.spec.energy_shift;
        Ok(match self.spec.anchor {
            Anchor::U0(u0) => self.pot.value(u0)? - shift,
            Anchor::V0(v0) => e - shift - 0.5 * v0 * v0,
        })
    }

    /// `h⁻¹(r)`: solves `F(u) − shift = r²` on the map's monotone branch.
    fn h_inverse(&self, r: f64) -> Result<f64> {
        self.pot
            .invert_with_tol(r * r + self.spec.energy_shift, self.branch(), H_INVERSE_TOL)
    }

    fn integrand(&self, e_hat: f64, theta: f64) -> Result<f64> {
        let r = e_hat.sqrt() * theta.sin();
        let u = self.h_inverse(r)?;
        // |h'(u)| = |F'(u)| / (2 r)
        let fp = self.pot.derivative(u, 1)?.abs();
        if !(fp > 0.0) {
            return Err(Error::Numeric {
                what: format!("h'(u) vanished at u = {u}"),
                achieved: fp,
            });
        }
        Ok(2.0 * r / fp)
    }

    fn eval_at_order(&self, e: f64, order_index: usize) -> Result<f64> {
        let e_hat = e - self.spec.energy_shift;
        let ratio = (self.start_energy(e)? / e_hat).clamp(0.0, 1.0);
        let phi = ratio.sqrt().asin();
        let rule = gauss_legendre(order_index);
        let val = rule.try_integrate(phi, std::f64::consts::FRAC_PI_2, |t| self.integrand(e_hat, t))?;
        Ok(val / std::f64::consts::SQRT_2)
    }

    /// `T(E)` with the Gauss–Legendre order index that converged.
    fn eval_with_order(&self, e: f64) -> Result<(f64, usize)> {
        self.check_energy(e)?;
        let mut prev = self.eval_at_order(e, 0)?;
        let mut diff = f64::INFINITY;
        for k in 1..GL_ORDERS.len() {
            let next = self.eval_at_order(e, k)?;
            diff = (next - prev).abs();
            if diff <= GL_AGREEMENT * next.abs().max(1.0) {
                return Ok((next, k));
            }
            prev = next;
        }
        Err(Error::Numeric {
            what: format!("time map quadrature at E = {e}"),
            achieved: diff,
        })
    }

    /// `T(E)` via the θ-substitution and Gauss–Legendre order doubling.
    pub fn eval(&self, e: f64) -> Result<f64> {
        Ok(self.eval_with_order(e)?.0)
    }

    /// Default finite-difference step `1e-6·max(|E|, E_hi − E_lo)`.
    pub fn default_step(&self, e: f64) -> f64 {
        1e-6 * e.abs().max(self.spec.width())
    }

    /// `dT/dE` by central differences with the default step.
    pub fn derivative(&self, e: f64) -> Result<f64> {
        self.derivative_with_step(e, self.default_step(e))
    }

    pub fn derivative_with_step(&self, e: f64, step: f64) -> Result<f64> {
        let s = &self.spec;
        if !(e - 2.0 * step > s.e_lo && e + 2.0 * step < s.e_hi) {
            return Err(Error::Domain(format!(
                "energy {e} is within 2·step = {} of the interval ({}, {})",
                2.0 * step,
                s.e_lo,
                s.e_hi
            )));
        }
        let (_, k1) = self.eval_with_order(e - step)?;
        let (_, k2) = self.eval_with_order(e + step)?;
        let k = k1.max(k2);
        let lo = self.eval_at_order(e - step, k)?;
        let hi = self.eval_at_order(e + step, k)?;
        Ok((hi - lo) / (2.0 * step))
    }

    /// `u` at the start and end of the traversed arc (in flow order).
    pub fn arc_endpoints(&self, e: f64) -> Result<(f64, f64)> {
        let turning = self.pot.invert(e, self.branch())?;
        let anchor_u = match self.spec.anchor {
            Anchor::U0(u0) => u0,
            Anchor::V0(v0) => self.pot.invert(e - 0.5 * v0 * v0, self.branch())?,
        };
        Ok(match self.spec.side {
            Side::Right => (anchor_u, turning),
            Side::Left => (turning, anchor_u),
        })
    }

    /// Independent route: direct quadrature of `∫ du/√(2(E − F(u)))` over the arc.
    pub fn direct_quadrature(&self, e: f64) -> Result<f64> {
        self.check_energy(e)?;
        let (a, b) = self.arc_endpoints(e)?;
        transit_time_quadrature(&self.pot, a, b, e)
    }

    /// Independent route: integrate the Hamiltonian flow and time the event.
    pub fn flow_time(&self, e: f64) -> Result<f64> {
        self.check_energy(e)?;
        let (start, event) = match (self.spec.side, self.spec.anchor) {
            (Side::Right, Anchor::U0(u0)) => {
                let v = level_curve_v(&self.pot, e, u0)?;
                (PhaseState::new(&self.pot, u0, v)?, Event::VZero)
            }
            (Side::Right, Anchor::V0(v0)) => {
                let (u_start, _) = self.arc_endpoints(e)?;
                (PhaseState::new(&self.pot, u_start, v0)?, Event::VZero)
            }
            (Side::Left, Anchor::U0(u0)) => {
                let alpha = self.pot.invert(e, Branch::DecreasingPastK)?;
                (PhaseState::new(&self.pot, alpha, 0.0)?, Event::ULine(u0))
            }
            (Side::Left, Anchor::V0(v0)) => {
                let alpha = self.pot.invert(e, Branch::DecreasingPastK)?;
                (PhaseState::new(&self.pot, alpha, 0.0)?, Event::VLine(v0))
            }
        };
        let hit = flow_to_event(&self.pot, start, Direction::Forward, event, 1e4, &self.flow_opts)?;
        Ok(hit.elapsed)
    }

    /// Samples `T` and `dT/dE` at `n` Chebyshev-distributed interior energies.
    pub fn monotonicity_scan(&self, n: usize) -> Result<MonotonicityReport> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "monotonicity scan needs at least 3 samples, got {n}"
            )));
        }
        let s = self.spec;
        let mid = 0.5 * (s.e_lo + s.e_hi);
        let half = 0.5 * s.width();
        let energies: Vec<f64> = (0..n)
            .map(|k| {
                let c = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos();
                mid - half * c
            })
            .collect();
        let samples = energies
            .par_iter()
            .map(|&e| {
                let time = self.eval(e).map_err(|err| tag_energy(err, e))?;
                let margin = (e - s.e_lo).min(s.e_hi - e);
                let step = self.default_step(e).min(margin / 2.5);
                let slope = self
                    .derivative_with_step(e, step)
                    .map_err(|err| tag_energy(err, e))?;
                Ok(TimeMapSample {
                    energy: e,
                    time,
                    slope,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let min_gap = samples
            .windows(2)
            .map(|w| w[1].time - w[0].time)
            .fold(f64::INFINITY, f64::min);
        Ok(MonotonicityReport {
            spec: s,
            strictly_increasing: min_gap > 0.0,
            min_adjacent_gap: min_gap,
            all_slopes_positive: samples.iter().all(|x| x.slope > 0.0),
            samples,
        })
    }
}

fn tag_energy(err: Error, e: f64) -> Error {
    match err {
        Error::Numeric { what, achieved } => Error::Numeric {
            what: format!("{what} (scan energy {e})"),
            achieved,
        },
        Error::Domain(m) => Error::Domain(format!("{m} (scan energy {e})")),
        other => other,
    }
}

/// Central difference `(g(x + h) − g(x − h)) / 2h`.
pub fn central_difference<G: Fn(f64) -> Result<f64>>(g: G, x: f64, h: f64) -> Result<f64> {
    Ok((g(x + h)? - g(x - h)?) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> PatchProblem {
        PatchProblem::reference_logistic()
    }

    #[test]
    fn intervals_match_definitions() {
        let p = reference();
        let right = p.potential(Side::Right);
        let left = p.potential(Side::Left);
        let m = TimeMap::new(&p, Side::Right, Anchor::U0(1.1)).unwrap();
        assert_eq!(m.spec.e_lo, right.value(1.1).unwrap());
        assert_eq!(m.spec.e_hi, right.value(2.2).unwrap());
        let m = TimeMap::new(&p, Side::Left, Anchor::U0(1.75)).unwrap();
        assert_eq!(m.spec.e_lo, left.value(1.75).unwrap());
        assert_eq!(m.spec.e_hi, left.value(1.0).unwrap());
        let m = TimeMap::new(&p, Side::Left, Anchor::V0(0.7348)).unwrap();
        assert!((m.spec.e_lo - (0.5 * 0.7348f64.powi(2) + left.value(2.2).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn bad_anchors_are_rejected() {
        let p = reference();
        assert!(TimeMap::new(&p, Side::Right, Anchor::U0(0.9)).is_err());
        assert!(TimeMap::new(&p, Side::Right, Anchor::U0(2.2)).is_err());
        assert!(TimeMap::new(&p, Side::Right, Anchor::V0(0.0)).is_err());
        assert!(TimeMap::new(&p, Side::Right, Anchor::V0(0.95)).is_err());
        // inside (0, sqrt(2 E_K+)) but above the line through (K-, ·): empty interval
        assert!(TimeMap::new(&p, Side::Right, Anchor::V0(0.85)).is_err());
        assert!(TimeMap::new(&p, Side::Left, Anchor::V0(-0.1)).is_err());
    }

    #[test]
    fn energies_outside_interval_are_rejected() {
        let m = TimeMap::new(&reference(), Side::Right, Anchor::U0(1.1)).unwrap();
        assert!(m.eval(m.spec.e_lo).is_err());
        assert!(m.eval(m.spec.e_hi + 0.1).is_err());
        assert!(m.eval(m.spec.e_lo + 1e-10).is_err());
        assert!(m.derivative(m.spec.e_lo + 1e-8).is_err());
    }

    #[test]
    fn right_u_line_matches_flow() {
        let p = reference();
        let m = TimeMap::new(&p, Side::Right, Anchor::U0(1.1)).unwrap();
        let e = p.potential(Side::Right).value(1.8).unwrap();
        let t = m.eval(e).unwrap();
        assert!(t.is_finite() && t > 0.0);
        let (a, b) = m.arc_endpoints(e).unwrap();
        assert_eq!(a, 1.1);
        assert!((b - 1.8).abs() < 1e-11);
        assert!((m.flow_time(e).unwrap() - t).abs() < 1e-6);
    }

    #[test]
    fn near_lower_endpoint_is_finite_and_continuous() {
        let m = TimeMap::new(&reference(), Side::Right, Anchor::U0(1.1)).unwrap();
        let ts: Vec<f64> = (2..=6)
            .map(|k| m.eval(m.spec.e_lo + 10f64.powi(-k)).unwrap())
            .collect();
        assert!(ts.iter().all(|t| t.is_finite() && *t > 0.0));
        // shrinking chords: T decreases towards the degenerate limit
        assert!(ts.windows(2).all(|w| w[1] < w[0]));
        assert!(ts[4] < 1e-2);
    }

    #[test]
    fn left_u_line_increases() {
        let m = TimeMap::new(&reference(), Side::Left, Anchor::U0(1.75)).unwrap();
        let e1 = m.spec.energy_at(0.3);
        let e2 = m.spec.energy_at(0.7);
        assert!(m.eval(e1).unwrap() < m.eval(e2).unwrap());
    }

    #[test]
    fn derivative_is_positive_and_matches_least_squares_slope() {
        let m = TimeMap::new(&reference(), Side::Right, Anchor::U0(1.1)).unwrap();
        let e = m.spec.energy_at(0.5);
        let d = m.derivative(e).unwrap();
        assert!(d > 0.0);
        let dx = 1e-4 * m.spec.width();
        let xs: Vec<f64> = (-2..=2).map(|i| e + i as f64 * dx).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| m.eval(x).unwrap()).collect();
        let xm = xs.iter().sum::<f64>() / 5.0;
        let ym = ys.iter().sum::<f64>() / 5.0;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let den: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
        let slope = num / den;
        assert!((slope - d).abs() <= 0.05 * d.abs());
    }

    #[test]
    fn derivative_of_constant_map_vanishes() {
        let d = central_difference(|_| Ok(3.25), 0.4, 1e-6).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn small_scan_is_well_ordered() {
        let m = TimeMap::new(&reference(), Side::Right, Anchor::V0(0.4491)).unwrap();
        let r = m.monotonicity_scan(3).unwrap();
        assert_eq!(r.samples.len(), 3);
        assert!(r.samples.windows(2).all(|w| w[0].energy < w[1].energy));
        assert!(r.samples.iter().all(|s| s.energy > m.spec.e_lo && s.energy < m.spec.e_hi));
        assert!(m.monotonicity_scan(2).is_err());
    }
}
