//! Run configuration: TOML with one table per section.
//!
//! ```toml
//! [grid]
//! nx = 32
//! ny = 256
//! y_max = 20.0
//!
//! [weights]
//! gamma = 2.0
//! sigma = 3.0
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use prandtl_core::compat::{Tail, UnsteadyDataOptions};
use prandtl_core::inequality::InequalityKind;
use prandtl_core::steady::SteadyParams;
use prandtl_core::unsteady::UnsteadyParams;
use prandtl_core::WeightParams;

use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "d_nx")]
    pub nx: usize,
    #[serde(default = "d_ny")]
    pub ny: usize,
    #[serde(default = "d_ymax")]
    pub y_max: f64,
    #[serde(default)]
    pub stretch: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default = "one")]
    pub rho_inf: f64,
    #[serde(default = "one")]
    pub u_inf: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default = "d_gamma")]
    pub gamma: f64,
    #[serde(default = "d_sigma")]
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnsteadySection {
    #[serde(default = "d_eps")]
    pub eps: f64,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_tfinal")]
    pub t_final: f64,
    #[serde(default = "d_s")]
    pub s_order: usize,
    /// Size of the x-dependent perturbation of the builder data.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub delta_bl: f64,
    #[serde(default = "d_kappa1")]
    pub kappa1: f64,
    #[serde(default = "d_kappa2")]
    pub kappa2: f64,
    #[serde(default = "d_cfl")]
    pub cfl_max: f64,
    #[serde(default)]
    pub upwind_blend: f64,
    #[serde(default = "d_mode")]
    pub mode: u32,
    #[serde(default = "d_report")]
    pub report_every: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySection {
    #[serde(default = "d_schedule")]
    pub theta_schedule: Vec<f64>,
    #[serde(default = "d_dx")]
    pub dx: f64,
    #[serde(rename = "L", alias = "length", default = "d_length")]
    pub length: f64,
    #[serde(default = "d_m")]
    pub m: usize,
    #[serde(default = "d_sigma_tilde")]
    pub sigma_tilde: f64,
    pub kappa3: Option<f64>,
    pub lambda0: Option<f64>,
    pub xi0: Option<f64>,
    #[serde(default = "d_delta_nb")]
    pub delta_nb: f64,
    #[serde(default = "d_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "d_picard_iters")]
    pub picard_max_iters: usize,
    /// Size of the `y^6 e^{-2y}` perturbation added to `u0`.
    #[serde(default)]
    pub perturbation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Builder,
    Tanh,
    Erf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    Algebraic,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default = "d_profile")]
    pub profile: Profile,
    #[serde(default = "one")]
    pub slope: f64,
    #[serde(default = "d_yc")]
    pub y_c: f64,
    #[serde(default = "d_order")]
    pub order: usize,
    #[serde(default = "d_tail")]
    pub tail: TailKind,
    /// Power of the algebraic tail or rate of the exponential one.
    #[serde(default = "d_tail_param")]
    pub tail_param: f64,
    /// `rho0 = rho_inf + rho_amplitude e^{-y}` for the one-dimensional data.
    #[serde(default = "d_rho_amp")]
    pub rho_amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalitySection {
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Weight exponent; defaults to `gamma` when `[weights]` is given, else 1.
    pub lambda: Option<f64>,
    /// Weight exponent of the second Hardy inequality (must be below -1/2).
    #[serde(default = "d_lambda_h2")]
    pub lambda_hardy2: f64,
    #[serde(default = "d_kinds")]
    pub kinds: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub snapshot_every: usize,
    /// Digits after the point in scientific notation.
    #[serde(default = "d_precision")]
    pub csv_precision: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: Option<GridSection>,
    #[serde(default = "d_flow")]
    pub flow: FlowSection,
    pub weights: Option<WeightsSection>,
    pub unsteady: Option<UnsteadySection>,
    pub steady: Option<SteadySection>,
    #[serde(default = "d_data")]
    pub data: DataSection,
    #[serde(default = "d_ineq")]
    pub inequalities: InequalitySection,
    #[serde(default = "d_output")]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}
fn d_nx() -> usize {
    32
}
fn d_ny() -> usize {
    256
}
fn d_ymax() -> f64 {
    20.0
}
fn d_gamma() -> f64 {
    2.0
}
fn d_sigma() -> f64 {
    3.0
}
fn d_eps() -> f64 {
    1e-2
}
fn d_dt() -> f64 {
    1e-3
}
fn d_tfinal() -> f64 {
    0.25
}
fn d_s() -> usize {
    2
}
fn d_kappa1() -> f64 {
    0.25
}
fn d_kappa2() -> f64 {
    4.0
}
fn d_cfl() -> f64 {
    0.8
}
fn d_mode() -> u32 {
    1
}
fn d_report() -> usize {
    10
}
fn d_schedule() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 0.0]
}
fn d_dx() -> f64 {
    1e-3
}
fn d_length() -> f64 {
    0.1
}
fn d_m() -> usize {
    3
}
fn d_sigma_tilde() -> f64 {
    2.0
}
fn d_delta_nb() -> f64 {
    0.5
}
fn d_picard_tol() -> f64 {
    1e-8
}
fn d_picard_iters() -> usize {
    40
}
fn d_profile() -> Profile {
    Profile::Builder
}
fn d_yc() -> f64 {
    0.5
}
fn d_order() -> usize {
    6
}
fn d_tail() -> TailKind {
    TailKind::Algebraic
}
fn d_tail_param() -> f64 {
    2.0
}
fn d_rho_amp() -> f64 {
    0.2
}
fn d_samples() -> usize {
    100
}
fn d_lambda_h2() -> f64 {
    -1.0
}
fn d_kinds() -> Vec<String> {
    InequalityKind::ALL.iter().map(|k| k.name().to_string()).collect()
}
fn d_ineq() -> InequalitySection {
    toml::from_str("").expect("defaults")
}
fn d_dir() -> PathBuf {
    PathBuf::from("out")
}
fn d_precision() -> usize {
    16
}
fn d_flow() -> FlowSection {
    FlowSection { rho_inf: 1.0, u_inf: 1.0 }
}
fn d_data() -> DataSection {
    toml::from_str("").expect("defaults")
}
fn d_output() -> OutputSection {
    toml::from_str("").expect("defaults")
}

/// Key fragments that describe a non-constant outer flow `U(x)`, `P(x)`.
const OUTER_FLOW_KEYS: [&str; 6] = ["outer", "pressure", "dpdx", "p_x", "u_e", "bernoulli"];

fn reject_outer_flow(v: &toml::Value, path: &str) -> Result<()> {
    if let toml::Value::Table(t) = v {
        for (k, sub) in t {
            let lower = k.to_ascii_lowercase();
            let full = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            if OUTER_FLOW_KEYS.iter().any(|f| lower.contains(f)) {
                return Err(LabError::Config(format!(
                    "`{full}` describes a non-constant outer flow; only constant rho_inf and u_inf \
                     (which satisfy the Bernoulli law with zero pressure gradient) are supported"
                )));
            }
            reject_outer_flow(sub, &full)?;
        }
    }
    Ok(())
}

/// Names the first violated inequality of `gamma > 3/2`,
/// `gamma + 1/2 < sigma <= 2 gamma - 1`.
pub fn weight_violation(gamma: f64, sigma: f64) -> Option<&'static str> {
    if !(gamma > 1.5) {
        Some("γ > 3/2 violated")
    } else if !(sigma <= 2.0 * gamma - 1.0) {
        Some("σ ≤ 2γ−1 violated")
    } else if !(gamma + 0.5 < sigma) {
        Some("γ + 1/2 < σ violated")
    } else {
        None
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: toml::Value = toml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
    reject_outer_flow(&raw, "")?;
    let cfg: RunConfig = toml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        let g = self.grid.as_ref().ok_or_else(|| LabError::Config("missing [grid] section".into()))?;
        if g.nx == 0 || !g.nx.is_power_of_two() {
            return Err(LabError::Config(format!("grid.nx = {} must be a power of two", g.nx)));
        }
        if g.ny < 8 {
            return Err(LabError::Config(format!("grid.ny = {} must be at least 8", g.ny)));
        }
        positive("grid.y_max", g.y_max)?;
        if !(g.stretch >= 0.0) {
            return Err(LabError::Config("grid.stretch must be nonnegative".into()));
        }
        positive("flow.rho_inf", self.flow.rho_inf)?;
        positive("flow.u_inf", self.flow.u_inf)?;
        if let Some(w) = &self.weights {
            if let Some(msg) = weight_violation(w.gamma, w.sigma) {
                return Err(LabError::Config(format!("weights (γ, σ) = ({}, {}): {msg}", w.gamma, w.sigma)));
            }
        }
        if let Some(u) = &self.unsteady {
            positive("unsteady.dt", u.dt)?;
            if !(u.eps >= 0.0) || !(u.t_final >= 0.0) {
                return Err(LabError::Config("unsteady.eps and unsteady.t_final must be nonnegative".into()));
            }
            if !(1..=6).contains(&u.s_order) {
                return Err(LabError::Config("unsteady.s_order must lie in 1..=6".into()));
            }
            if !(u.kappa1 > 0.0 && 2.0 * u.kappa1 <= 0.5 * u.kappa2) {
                return Err(LabError::Config("unsteady density band needs 0 < 2 kappa1 <= kappa2 / 2".into()));
            }
        }
        if let Some(s) = &self.steady {
            self.steady_params_of(s).validate().map_err(|e| LabError::Config(e.to_string()))?;
        }
        let d = &self.data;
        positive("data.slope", d.slope)?;
        positive("data.y_c", d.y_c)?;
        positive("data.tail_param", d.tail_param)?;
        self.inequality_kinds()?;
        if self.inequalities.samples == 0 {
            return Err(LabError::Config("inequalities.samples must be positive".into()));
        }
        if self.output.csv_precision == 0 || self.output.csv_precision > 20 {
            return Err(LabError::Config("output.csv_precision must lie in 1..=20".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> &GridSection {
        self.grid.as_ref().expect("validated")
    }

    pub fn require_weights(&self) -> Result<WeightParams> {
        let w = self.weights.as_ref().ok_or_else(|| LabError::Config("missing [weights] section".into()))?;
        Ok(WeightParams { gamma: w.gamma, sigma: w.sigma })
    }

    pub fn require_unsteady(&self) -> Result<&UnsteadySection> {
        self.unsteady.as_ref().ok_or_else(|| LabError::Config("missing [unsteady] section".into()))
    }

    pub fn require_steady(&self) -> Result<&SteadySection> {
        self.steady.as_ref().ok_or_else(|| LabError::Config("missing [steady] section".into()))
    }

    pub fn unsteady_params(&self) -> Result<UnsteadyParams> {
        let u = self.require_unsteady()?;
        Ok(UnsteadyParams {
            eps: u.eps,
            rho_inf: self.flow.rho_inf,
            u_inf: self.flow.u_inf,
            dt: u.dt,
            t_final: u.t_final,
            cfl_max: u.cfl_max,
            s_order: u.s_order,
            upwind_blend: u.upwind_blend,
            far_field_tol: 1e-6,
        })
    }

    fn steady_params_of(&self, s: &SteadySection) -> SteadyParams {
        SteadyParams {
            theta: s.theta_schedule.last().copied().unwrap_or(0.0),
            theta_schedule: s.theta_schedule.clone(),
            m: s.m,
            sigma_tilde: s.sigma_tilde,
            dx: s.dx,
            length: s.length,
            lambda0: s.lambda0,
            xi0: s.xi0,
            kappa3: s.kappa3,
            delta_nb: s.delta_nb,
            picard_tol: s.picard_tol,
            picard_max_iters: s.picard_max_iters,
            rho_inf: self.flow.rho_inf,
            u_inf: self.flow.u_inf,
        }
    }

    pub fn steady_params(&self) -> Result<SteadyParams> {
        Ok(self.steady_params_of(self.require_steady()?))
    }

    pub fn inequality_kinds(&self) -> Result<Vec<InequalityKind>> {
        self.inequalities
            .kinds
            .iter()
            .map(|n| {
                InequalityKind::ALL
                    .into_iter()
                    .find(|k| k.name() == n)
                    .ok_or_else(|| LabError::Config(format!("unknown inequality kind `{n}`")))
            })
            .collect()
    }

    pub fn inequality_lambda(&self) -> f64 {
        self.inequalities.lambda.or(self.weights.as_ref().map(|w| w.gamma)).unwrap_or(1.0)
    }

    pub fn tail(&self) -> Tail {
        match self.data.tail {
            TailKind::Algebraic => Tail::Algebraic { power: self.data.tail_param },
            TailKind::Exponential => Tail::Exponential { rate: self.data.tail_param },
        }
    }

    pub fn data_options(&self) -> UnsteadyDataOptions {
        UnsteadyDataOptions {
            rho_inf: self.flow.rho_inf,
            u_inf: self.flow.u_inf,
            slope: self.data.slope,
            y_c: self.data.y_c,
            m: self.data.order,
            tail: self.tail(),
            mode: self.unsteady.as_ref().map_or(1, |u| u.mode),
            phase: 0.0,
        }
    }
}
