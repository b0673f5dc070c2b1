//! TOML run configuration.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use twopatch::{CustomReaction, FlowOptions, PatchProblem, ReactionSpec, Side, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `r·u·(1 − (u/K)^p)`, `p = 1` when omitted.
    Richards,
    /// `r·u·(1 − u/K)·exp(c·(1 − u/K))`.
    Tilted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    #[serde(default = "default_model")]
    pub model: Model,
    pub r: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub d: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

fn default_model() -> Model {
    Model::Richards
}

impl PatchConfig {
    pub fn reaction(&self, side: &str) -> Result<ReactionSpec> {
        match self.model {
            Model::Richards => {
                if self.c.is_some() {
                    bail!("[{side}] key 'c' only applies to model = \"tilted\"");
                }
                Ok(ReactionSpec::richards(self.r, self.k, self.p.unwrap_or(1.0))?)
            }
            Model::Tilted => {
                if self.p.is_some() {
                    bail!("[{side}] key 'p' only applies to model = \"richards\"");
                }
                let c = self
                    .c
                    .ok_or_else(|| anyhow!("[{side}] model \"tilted\" needs the tilt 'c'"))?;
                Ok(ReactionSpec::custom(tilted(self.r, self.k, c))?)
            }
        }
    }
}

/// Logistic rate multiplied by `exp(c·(1 − u/K))`; large `c` makes `f'` turn
/// back up past `K`.
pub fn tilted(r: f64, k: f64, c: f64) -> CustomReaction {
    CustomReaction::new(format!("tilted(c={c})"), k, move |u: f64| {
        let s = u / k;
        r * u * (1.0 - s) * (c * (1.0 - s)).exp()
    })
    .with_derivative(move |u: f64| {
        let s = u / k;
        r * (c * (1.0 - s)).exp() * (1.0 - 2.0 * s - c * s * (1.0 - s))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub threshold_tol: f64,
    pub match_tol: f64,
    pub alpha_tol: f64,
    pub tie_tol: f64,
    pub residual_tol: f64,
    pub ode_residual_tol: f64,
    /// Largest accepted shooting/FD discrepancy in `validate`.
    pub validate_linf: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            rtol: s.flow.rtol,
            atol: s.flow.atol,
            threshold_tol: s.threshold_tol,
            match_tol: s.match_tol,
            alpha_tol: s.alpha_tol,
            tie_tol: s.tie_tol,
            residual_tol: s.residual_tol,
            ode_residual_tol: s.ode_residual_tol,
            validate_linf: 5e-4,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 9] = [
        "rtol",
        "atol",
        "threshold_tol",
        "match_tol",
        "alpha_tol",
        "tie_tol",
        "residual_tol",
        "ode_residual_tol",
        "validate_linf",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "rtol" => &mut self.rtol,
            "atol" => &mut self.atol,
            "threshold_tol" => &mut self.threshold_tol,
            "match_tol" => &mut self.match_tol,
            "alpha_tol" => &mut self.alpha_tol,
            "tie_tol" => &mut self.tie_tol,
            "residual_tol" => &mut self.residual_tol,
            "ode_residual_tol" => &mut self.ode_residual_tol,
            "validate_linf" => &mut self.validate_linf,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    /// Mismatch scan points.
    pub scan: usize,
    /// Uniform profile points per half.
    pub profile: usize,
    /// Condition audit samples.
    pub audit: usize,
    /// FD intervals per side.
    pub fd: usize,
    /// Grid doublings after the base FD grid in `validate`.
    pub refinements: usize,
    /// Energies per time-map scan.
    pub timemap: usize,
    /// `u` samples per level curve in `phase`.
    pub phase_points: usize,
    /// Level curves per side in `phase`.
    pub phase_levels: usize,
}

impl Default for Grids {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            scan: s.scan_points,
            profile: s.profile_points,
            audit: s.audit_grid,
            fd: 256,
            refinements: 3,
            timemap: 50,
            phase_points: 400,
            phase_levels: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorKind {
    U0,
    V0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorConfig {
    pub side: Side,
    pub kind: AnchorKind,
    pub value: f64,
}

impl AnchorConfig {
    pub fn anchor(&self) -> twopatch::Anchor {
        match self.kind {
            AnchorKind::U0 => twopatch::Anchor::U0(self.value),
            AnchorKind::V0 => twopatch::Anchor::V0(self.value),
        }
    }
}

/// The four anchors used when `[[anchors]]` is absent.
pub fn default_anchors() -> Vec<AnchorConfig> {
    vec![
        AnchorConfig { side: Side::Right, kind: AnchorKind::U0, value: 1.1 },
        AnchorConfig { side: Side::Right, kind: AnchorKind::V0, value: 0.4491 },
        AnchorConfig { side: Side::Left, kind: AnchorKind::U0, value: 1.75 },
        AnchorConfig { side: Side::Left, kind: AnchorKind::V0, value: 0.7348 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `left.<key>` or `right.<key>` with key one of `r`, `K`, `p`, `c`, `d`, `L`.
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl SweepConfig {
    pub fn points(&self) -> Result<Vec<f64>> {
        match (&self.values, self.from, self.to, self.count) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) if n >= 1 => Ok(if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }),
            _ => bail!("[sweep] needs either a nonempty 'values' list or all of 'from', 'to', 'count'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub left: PatchConfig,
    pub right: PatchConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<AnchorConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.problem()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// The logistic reference instance.
    pub fn reference() -> Self {
        let patch = |k: f64, d: f64, l: f64| PatchConfig {
            model: Model::Richards,
            r: 1.0,
            k,
            p: None,
            c: None,
            d,
            l,
        };
        Self {
            left: patch(1.0, 1.2, 1.0349),
            right: patch(2.2, 2.0, 1.1671),
            tolerances: Tolerances::default(),
            grids: Grids::default(),
            anchors: None,
            sweep: None,
        }
    }

    pub fn problem(&self) -> Result<PatchProblem> {
        Ok(PatchProblem::new(
            self.left.reaction("left")?,
            self.right.reaction("right")?,
            self.left.d,
            self.right.d,
            self.left.l,
            self.right.l,
        )?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let t = &self.tolerances;
        let g = &self.grids;
        SolverOptions {
            flow: FlowOptions {
                rtol: t.rtol,
                atol: t.atol,
                ..FlowOptions::default()
            },
            threshold_tol: t.threshold_tol,
            match_tol: t.match_tol,
            alpha_tol: t.alpha_tol,
            scan_points: g.scan,
            tie_tol: t.tie_tol,
            profile_points: g.profile,
            audit_grid: g.audit,
            residual_tol: t.residual_tol,
            ode_residual_tol: t.ode_residual_tol,
        }
    }

    pub fn anchors(&self) -> Vec<AnchorConfig> {
        self.anchors.clone().unwrap_or_else(default_anchors)
    }

    /// Applies one `NAME=VALUE` override.
    pub fn apply_tolerance(&mut self, assignment: &str) -> Result<()> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("--tol expects NAME=VALUE, got '{assignment}'"))?;
        let name = name.trim();
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("--tol {name}: '{value}' is not a number"))?;
        if !(value.is_finite() && value > 0.0) {
            bail!("--tol {name}: tolerance must be positive, got {value}");
        }
        let slot = self.tolerances.slot(name).ok_or_else(|| {
            anyhow!("unknown tolerance '{name}', expected one of {}", Tolerances::NAMES.join(", "))
        })?;
        *slot = value;
        Ok(())
    }

    /// Copy with one problem parameter replaced, e.g. `right.p`.
    pub fn with_parameter(&self, parameter: &str, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        let (side, key) = parameter
            .split_once('.')
            .ok_or_else(|| anyhow!("sweep parameter must look like 'right.p', got '{parameter}'"))?;
        let patch = match side {
            "left" => &mut cfg.left,
            "right" => &mut cfg.right,
            _ => bail!("sweep parameter side must be 'left' or 'right', got '{side}'"),
        };
        match key {
            "r" => patch.r = value,
            "K" => patch.k = value,
            "p" => patch.p = Some(value),
            "c" => patch.c = Some(value),
            "d" => patch.d = value,
            "L" => patch.l = value,
            _ => bail!("unknown sweep key '{key}', expected r, K, p, c, d or L"),
        }
        Ok(cfg)
    }
}
