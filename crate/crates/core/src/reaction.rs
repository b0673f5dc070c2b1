//! Reaction rates and the two-patch problem definition.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Scalar map used for user-supplied rates and derivatives.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which patch of the habitat: `Left` is `(-L⁻, 0)`, `Right` is `(0, L⁺)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "left"),
            Side::Right => write!(f, "right"),
        }
    }
}

/// A user-supplied reaction rate with optional analytic derivatives.
///
/// Missing derivatives fall back to central differences with step
/// `max(1e-5, 1e-5·u)`.
#[derive(Clone)]
pub struct CustomReaction {
    pub name: String,
    pub carrying_capacity: f64,
    rate: ScalarFn,
    first: Option<ScalarFn>,
    second: Option<ScalarFn>,
}

impl CustomReaction {
    pub fn new(
        name: impl Into<String>,
        carrying_capacity: f64,
        rate: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            carrying_capacity,
            rate: Arc::new(rate),
            first: None,
            second: None,
        }
    }

    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.first = Some(Arc::new(df));
        self
    }

    pub fn with_second_derivative(
        mut self,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.second = Some(Arc::new(d2f));
        self
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.first.is_some() && self.second.is_some()
    }
}

impl fmt::Debug for CustomReaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomReaction")
            .field("name", &self.name)
            .field("carrying_capacity", &self.carrying_capacity)
            .field("analytic_first", &self.first.is_some())
            .field("analytic_second", &self.second.is_some())
            .finish()
    }
}

/// Reaction rate `f(u)` with carrying capacity `K`.
#[derive(Debug, Clone)]
pub enum ReactionSpec {
    /// Generalized logistic rate `r·u·(1 − (u/K)^p)`.
    Richards { r: f64, k: f64, p: f64 },
    Custom(CustomReaction),
}

fn fd_step(u: f64) -> f64 {
    (1e-5 * u.abs()).max(1e-5)
}

impl ReactionSpec {
    pub fn richards(r: f64, k: f64, p: f64) -> Result<Self> {
        for (name, v) in [("r", r), ("K", k), ("p", p)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Richards parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(ReactionSpec::Richards { r, k, p })
    }

    /// Verhulst logistic rate, the `p = 1` Richards rate.
    pub fn logistic(r: f64, k: f64) -> Result<Self> {
        Self::richards(r, k, 1.0)
    }

    /// Wraps a custom rate after probing the standing sign assumptions:
    /// `f(0) = 0`, `f(K) = 0`, `f'(0) > 0`, `f > 0` on `(0, K)` and `f < 0` on `(K, 3K]`.
    pub fn custom(reaction: CustomReaction) -> Result<Self> {
        let k = reaction.carrying_capacity;
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "carrying capacity must be positive, got {k}"
            )));
        }
        let spec = ReactionSpec::Custom(reaction);
        if let Some(problem) = spec.sign_violations(1000).first() {
            return Err(Error::InvalidParameter(format!(
                "custom reaction violates the standing assumptions: {problem}"
            )));
        }
        Ok(spec)
    }

    pub fn carrying_capacity(&self) -> f64 {
        match self {
            ReactionSpec::Richards { k, .. } => *k,
            ReactionSpec::Custom(c) => c.carrying_capacity,
        }
    }

    pub fn is_richards(&self) -> bool {
        matches!(self, ReactionSpec::Richards { .. })
    }

    /// `f(u)` for `u ≥ 0`.
    pub fn rate(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("reaction rate needs u >= 0, got {u}")));
        }
        Ok(self.rate_raw(u))
    }

    fn rate_raw(&self, u: f64) -> f64 {
        match self {
            ReactionSpec::Richards { r, k, p } => r * u * (1.0 - (u / k).powf(*p)),
            ReactionSpec::Custom(c) => (c.rate)(u),
        }
    }

    /// Rate extended linearly (slope `f'(0)`) to `u < 0`, so integrator stages
    /// that probe just across the axis stay finite.
    pub(crate) fn rate_extended(&self, u: f64) -> f64 {
        if u >= 0.0 {
            self.rate_raw(u)
        } else {
            self.first_derivative_raw(0.0) * u
        }
    }

    /// `f'(u)` or `f''(u)` (`order` 1 or 2).
    pub fn derivative(&self, u: f64, order: u8) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("reaction derivative needs u >= 0, got {u}")));
        }
        match order {
            1 => Ok(self.first_derivative_raw(u)),
            2 => Ok(self.second_derivative_raw(u)),
            _ => Err(Error::InvalidParameter(format!(
                "reaction derivative order must be 1 or 2, got {order}"
            ))),
        }
    }

    pub(crate) fn first_derivative_raw(&self, u: f64) -> f64 {
        match self {
            ReactionSpec::Richards { r, k, p } => r * (1.0 - (p + 1.0) * (u / k).powf(*p)),
            ReactionSpec::Custom(c) => match &c.first {
                Some(df) => df(u),
                None => {
                    let h = fd_step(u);
                    if u >= h {
                        ((c.rate)(u + h) - (c.rate)(u - h)) / (2.0 * h)
                    } else {
                        (-3.0 * (c.rate)(u) + 4.0 * (c.rate)(u + h) - (c.rate)(u + 2.0 * h))
                            / (2.0 * h)
                    }
                }
            },
        }
    }

    pub(crate) fn second_derivative_raw(&self, u: f64) -> f64 {
        match self {
            ReactionSpec::Richards { r, k, p } => {
                -r * p * (p + 1.0) * u.powf(p - 1.0) / k.powf(*p)
            }
            ReactionSpec::Custom(c) => match (&c.second, &c.first) {
                (Some(d2f), _) => d2f(u),
                (None, Some(df)) => {
                    let h = fd_step(u);
                    if u >= h {
                        (df(u + h) - df(u - h)) / (2.0 * h)
                    } else {
                        (-3.0 * df(u) + 4.0 * df(u + h) - df(u + 2.0 * h)) / (2.0 * h)
                    }
                }
                (None, None) => {
                    let h = fd_step(u);
                    let f = &c.rate;
                    if u >= h {
                        (f(u + h) - 2.0 * f(u) + f(u - h)) / (h * h)
                    } else {
                        (2.0 * f(u) - 5.0 * f(u + h) + 4.0 * f(u + 2.0 * h) - f(u + 3.0 * h))
                            / (h * h)
                    }
                }
            },
        }
    }

    /// Probes the sign pattern of `f` on a uniform grid of `n` points over
    /// `(0, 3K]` plus the endpoints `{0, K}` and returns human-readable
    /// descriptions of every violation found.
    pub fn sign_violations(&self, n: usize) -> Vec<String> {
        let k = self.carrying_capacity();
        let mut out = Vec::new();
        let scale = (1..=n)
            .map(|i| self.rate_raw(3.0 * k * i as f64 / n as f64).abs())
            .fold(1e-300, f64::max);
        let zero_tol = 1e-10 * scale.max(1.0);
        let f0 = self.rate_raw(0.0);
        if f0.abs() > zero_tol || !f0.is_finite() {
            out.push(format!("f(0) = {f0:e} is not zero"));
        }
        let fk = self.rate_raw(k);
        if fk.abs() > zero_tol || !fk.is_finite() {
            out.push(format!("f(K) = {fk:e} is not zero"));
        }
        let d0 = self.first_derivative_raw(0.0);
        if !(d0 > 0.0) {
            out.push(format!("f'(0) = {d0:e} is not positive"));
        }
        for i in 1..=n {
            let u = 3.0 * k * i as f64 / n as f64;
            if (u - k).abs() < 1e-12 * k {
                continue;
            }
            let f = self.rate_raw(u);
            let ok = if u < k { f > 0.0 } else { f < 0.0 };
            if !ok {
                out.push(format!("f({u}) = {f:e} has the wrong sign"));
            }
        }
        out
    }
}

/// A two-patch steady-state problem on `[-L⁻, L⁺]`.
#[derive(Debug, Clone)]
pub struct PatchProblem {
    pub left: ReactionSpec,
    pub right: ReactionSpec,
    pub d_left: f64,
    pub d_right: f64,
    pub l_left: f64,
    pub l_right: f64,
}

impl PatchProblem {
    /// Builds a problem, enforcing `K⁻ < K⁺`.
    pub fn new(
        left: ReactionSpec,
        right: ReactionSpec,
        d_left: f64,
        d_right: f64,
        l_left: f64,
        l_right: f64,
    ) -> Result<Self> {
        let p = Self::new_unoriented(left, right, d_left, d_right, l_left, l_right)?;
        let (km, kp) = (p.k_minus(), p.k_plus());
        if !(km < kp) {
            return Err(Error::InvalidParameter(format!(
                "carrying capacities must satisfy K- < K+ (got K- = {km}, K+ = {kp}); \
                 reverse the orientation of the interval by swapping the left and right patches"
            )));
        }
        Ok(p)
    }

    /// Builds a problem without the `K⁻ < K⁺` orientation check. Only the
    /// finite-difference validator accepts such problems.
    pub fn new_unoriented(
        left: ReactionSpec,
        right: ReactionSpec,
        d_left: f64,
        d_right: f64,
        l_left: f64,
        l_right: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("d-", d_left),
            ("d+", d_right),
            ("L-", l_left),
            ("L+", l_right),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            left,
            right,
            d_left,
            d_right,
            l_left,
            l_right,
        })
    }

    /// Logistic reference instance: `r± = 1`, `K⁻ = 1`,
    /// `K⁺ = 2.2`, `d⁻ = 1.2`, `d⁺ = 2`, `L⁻ = 1.0349`, `L⁺ = 1.1671`.
    pub fn reference_logistic() -> Self {
        Self::new(
            ReactionSpec::logistic(1.0, 1.0).expect("valid"),
            ReactionSpec::logistic(1.0, 2.2).expect("valid"),
            1.2,
            2.0,
            1.0349,
            1.1671,
        )
        .expect("valid")
    }

    pub fn k_minus(&self) -> f64 {
        self.left.carrying_capacity()
    }

    pub fn k_plus(&self) -> f64 {
        self.right.carrying_capacity()
    }

    pub fn reaction(&self, side: Side) -> &ReactionSpec {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn diffusivity(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.d_left,
            Side::Right => self.d_right,
        }
    }

    pub fn length(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.l_left,
            Side::Right => self.l_right,
        }
    }

    /// Potential `F±` with the landmark energies `F±(K⁻)`, `F±(K⁺)` cached.
    pub fn potential(&self, side: Side) -> Potential {
        Potential::with_landmarks(
            self.reaction(side).clone(),
            self.diffusivity(side),
            self.k_minus(),
            self.k_plus(),
        )
    }

    /// Same problem with both patch lengths replaced.
    pub fn with_lengths(&self, l_left: f64, l_right: f64) -> Result<Self> {
        Self::new_unoriented(
            self.left.clone(),
            self.right.clone(),
            self.d_left,
            self.d_right,
            l_left,
            l_right,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richards_values() {
        let f = ReactionSpec::logistic(1.0, 2.2).unwrap();
        assert_eq!(f.rate(2.2).unwrap(), 0.0);
        assert!((f.rate(1.1).unwrap() - 0.55).abs() < 1e-15);
        let g = ReactionSpec::logistic(1.0, 1.0).unwrap();
        assert_eq!(g.rate(0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_density_is_a_domain_error() {
        let f = ReactionSpec::logistic(1.0, 1.0).unwrap();
        assert!(matches!(f.rate(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn richards_rejects_bad_parameters() {
        assert!(ReactionSpec::richards(0.0, 1.0, 1.0).is_err());
        assert!(ReactionSpec::richards(1.0, -1.0, 1.0).is_err());
        assert!(ReactionSpec::richards(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn orientation_is_enforced() {
        let err = PatchProblem::new(
            ReactionSpec::logistic(1.0, 2.2).unwrap(),
            ReactionSpec::logistic(1.0, 1.0).unwrap(),
            1.2,
            2.0,
            1.0,
            1.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("reverse the orientation"));
    }

    #[test]
    fn lengths_must_be_positive() {
        let f = || ReactionSpec::logistic(1.0, 1.0).unwrap();
        let g = || ReactionSpec::logistic(1.0, 2.0).unwrap();
        assert!(PatchProblem::new(f(), g(), 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(PatchProblem::new(f(), g(), -1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn custom_reaction_probing() {
        let ok = CustomReaction::new("cubic", 2.0, |u| u * (1.0 - u / 2.0) * (1.0 + u));
        assert!(ReactionSpec::custom(ok).is_ok());
        // Allee-type rate: f'(0) < 0 and a sign change below K
        let allee = CustomReaction::new("allee", 2.0, |u| u * (u - 0.5) * (2.0 - u));
        assert!(ReactionSpec::custom(allee).is_err());
        let wrong_k = CustomReaction::new("shifted", 1.5, |u| u * (1.0 - u / 2.0));
        assert!(ReactionSpec::custom(wrong_k).is_err());
    }

    #[test]
    fn finite_difference_derivatives_match_analytic() {
        let analytic = ReactionSpec::richards(1.3, 2.0, 1.7).unwrap();
        let numeric = ReactionSpec::custom(CustomReaction::new("richards", 2.0, |u: f64| {
            1.3 * u * (1.0 - (u / 2.0).powf(1.7))
        }))
        .unwrap();
        for u in [0.05, 0.5, 1.0, 1.9, 3.0] {
            let a1 = analytic.derivative(u, 1).unwrap();
            let n1 = numeric.derivative(u, 1).unwrap();
            assert!((a1 - n1).abs() < 1e-8 * a1.abs().max(1.0), "u={u}");
            let a2 = analytic.derivative(u, 2).unwrap();
            let n2 = numeric.derivative(u, 2).unwrap();
            assert!((a2 - n2).abs() < 1e-4 * a2.abs().max(1.0), "u={u}: {a2} vs {n2}");
        }
    }
}
