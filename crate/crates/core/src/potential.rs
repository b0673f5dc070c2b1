//! Potentials `F(u) = (1/d)∫₀ᵘ f(s) ds`, their derivatives and branch inverses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::reaction::{PatchProblem, ReactionSpec, Side};
use crate::roots::bisect_newton;

/// Absolute tolerance of the quadrature fallback for custom rates.
pub const POTENTIAL_QUAD_TOL: f64 = 1e-12;
/// Default tolerance in `u` for branch inversion.
pub const INVERSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    ClosedForm,
    Quadrature,
}

/// Monotone branch of `F` used for inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `F` increasing on `[0, K]`.
    IncreasingOnZeroK,
    /// `F` decreasing on `[K, ∞)`.
    DecreasingPastK,
}

/// Energies of the two carrying capacities under one potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub k_minus: f64,
    pub k_plus: f64,
    /// `F(K⁻)`
    pub e_k_minus: f64,
    /// `F(K⁺)`
    pub e_k_plus: f64,
}

#[derive(Debug, Clone)]
pub struct Potential {
    reaction: ReactionSpec,
    d: f64,
    mode: EvalMode,
    landmarks: Option<Landmarks>,
}

impl Potential {
    pub fn new(reaction: ReactionSpec, d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diffusivity must be positive, got {d}"
            )));
        }
        let mode = if reaction.is_richards() {
            EvalMode::ClosedForm
        } else {
            EvalMode::Quadrature
        };
        Ok(Self {
            reaction,
            d,
            mode,
            landmarks: None,
        })
    }

    pub(crate) fn with_landmarks(reaction: ReactionSpec, d: f64, k_minus: f64, k_plus: f64) -> Self {
        let mut pot = Self::new(reaction, d).expect("problem diffusivities are validated");
        let e_k_minus = pot.value_raw(k_minus);
        let e_k_plus = pot.value_raw(k_plus);
        pot.landmarks = Some(Landmarks {
            k_minus,
            k_plus,
            e_k_minus,
            e_k_plus,
        });
        pot
    }

    /// Forces quadrature evaluation even for closed-form rates.
    pub fn quadrature_only(mut self) -> Self {
        self.mode = EvalMode::Quadrature;
        self
    }

    pub fn for_side(problem: &PatchProblem, side: Side) -> Self {
        problem.potential(side)
    }

    pub fn reaction(&self) -> &ReactionSpec {
        &self.reaction
    }

    pub fn diffusivity(&self) -> f64 {
        self.d
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    pub fn landmarks(&self) -> Option<Landmarks> {
        self.landmarks
    }

    /// Carrying capacity of this potential's own reaction.
    pub fn k(&self) -> f64 {
        self.reaction.carrying_capacity()
    }

    /// `F(u)` for `u ≥ 0`.
    pub fn value(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("potential needs u >= 0, got {u}")));
        }
        match self.mode {
            EvalMode::ClosedForm => Ok(self.closed_form(u)),
            EvalMode::Quadrature => self.quadrature(u),
        }
    }

    fn closed_form(&self, u: f64) -> f64 {
        match &self.reaction {
            ReactionSpec::Richards { r, k, p } => {
                r / self.d * (0.5 * u * u - u.powf(p + 2.0) / ((p + 2.0) * k.powf(*p)))
            }
            ReactionSpec::Custom(_) => unreachable!("custom rates have no closed form"),
        }
    }

    fn quadrature(&self, u: f64) -> Result<f64> {
        let integral = integrate_adaptive(
            |s| self.reaction.rate_extended(s),
            0.0,
            u,
            POTENTIAL_QUAD_TOL * self.d,
            4000,
        )?;
        Ok(integral / self.d)
    }

    /// Infallible variant for points already known to be admissible.
    pub(crate) fn value_raw(&self, u: f64) -> f64 {
        self.value(u).unwrap_or(f64::NAN)
    }

    /// `F'(u) = f(u)/d`, also defined (by linear extension) for `u < 0`.
    pub(crate) fn force(&self, u: f64) -> f64 {
        self.reaction.rate_extended(u) / self.d
    }

    /// `F^(order)(u)` for order 1..=3: `f/d`, `f'/d`, `f''/d`.
    pub fn derivative(&self, u: f64, order: u8) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!(
                "potential derivatives need u > 0, got {u}"
            )));
        }
        match order {
            1 => Ok(self.reaction.rate(u)? / self.d),
            2 | 3 => Ok(self.reaction.derivative(u, order - 1)? / self.d),
            _ => Err(Error::InvalidParameter(format!(
                "potential derivative order must be 1, 2 or 3, got {order}"
            ))),
        }
    }

    /// `(F, F', F'', F''')` at `u > 0`.
    pub(crate) fn jet(&self, u: f64) -> Result<[f64; 4]> {
        Ok([
            self.value(u)?,
            self.derivative(u, 1)?,
            self.derivative(u, 2)?,
            self.derivative(u, 3)?,
        ])
    }

    /// Solves `F(u) = energy` on the requested monotone branch.
    pub fn invert(&self, energy: f64, branch: Branch) -> Result<f64> {
        self.invert_with_tol(energy, branch, INVERSION_TOL)
    }

    pub fn invert_with_tol(&self, energy: f64, branch: Branch, tol: f64) -> Result<f64> {
        let k = self.k();
        let e_k = self.value(k)?;
        let slack = 1e-14 * e_k.abs().max(1.0);
        if !energy.is_finite() {
            return Err(Error::Bracket(format!("energy {energy} is not finite")));
        }
        if energy > e_k + slack {
            return Err(Error::Bracket(format!(
                "energy {energy} exceeds the maximum F(K) = {e_k}"
            )));
        }
        if energy >= e_k - 1e-300 {
            return Ok(k);
        }
        let fd = |u: f64| (self.value_raw(u) - energy, self.force(u));
        match branch {
            Branch::IncreasingOnZeroK => {
                if energy < -slack {
                    return Err(Error::Bracket(format!(
                        "energy {energy} is below F(0) = 0 on the increasing branch"
                    )));
                }
                if energy <= 0.0 {
                    return Ok(0.0);
                }
                bisect_newton(fd, 0.0, k, 1e-6 * k, tol)
            }
            Branch::DecreasingPastK => {
                let mut hi = 2.0 * k;
                let mut tries = 0;
                while self.value(hi)? > energy {
                    hi *= 2.0;
                    tries += 1;
                    if tries > 60 {
                        return Err(Error::Bracket(format!(
                            "energy {energy} is below the range of F past K"
                        )));
                    }
                }
                bisect_newton(fd, k, hi, 1e-6 * k, tol)
            }
        }
    }
}

/// `G⁻(u) = F⁻(u) − F⁻(K⁺)` on `[K⁻, K⁺]`.
pub fn shifted_potential_g(problem: &PatchProblem, u: f64) -> Result<f64> {
    let (km, kp) = (problem.k_minus(), problem.k_plus());
    if !(u >= km && u <= kp) {
        return Err(Error::Domain(format!(
            "shifted potential is defined on [K-, K+] = [{km}, {kp}], got {u}"
        )));
    }
    let pot = problem.potential(Side::Left);
    if u == kp {
        return Ok(0.0);
    }
    Ok(pot.value(u)? - pot.value(kp)?)
}
