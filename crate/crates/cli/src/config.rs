//! Experiment configuration read from TOML.

use std::path::Path;
use std::sync::Arc;

use fracwave::laplace::LaplaceProbe;
use fracwave::linear::{check_order, SourceTerm, TimeGrid};
use fracwave::profiles::DataProfile;
use fracwave::semilinear::{check_b_window, exponent_set_for_b, NonlinearitySpec};
use fracwave::spectral::{build_fd_basis, build_interval_basis, build_rectangle_basis, EigenBasis, ModalCoeffs};
use fracwave::strichartz::{EstimateConfig, ExponentSet};
use fracwave::Error;
use serde::{Deserialize, Serialize};

use crate::output::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Order r ∈ (0, 1/4) of the W^{1,1} stability ratio.
    #[serde(default = "default_stability_r")]
    pub stability_r: f64,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub time: TimeSpec,
    pub nonlinearity: Option<NonlinearityConfig>,
    #[serde(default)]
    pub exponents: ExponentOverrides,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub estimate: EstimateSpec,
    #[serde(default)]
    pub semilinear: SemilinearSpec,
    #[serde(default)]
    pub mlf: MlfSpec,
}

fn default_alpha() -> f64 {
    1.5
}

fn default_stability_r() -> f64 {
    0.125
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    #[default]
    Interval,
    Box,
    /// Finite differences for -(a u')' + V u on an interval.
    Fd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub lengths: Vec<f64>,
    pub modes: usize,
    /// Cells of the finite-difference mesh.
    pub mesh: usize,
    /// a(x) = a0 + a1 x for the finite-difference operator.
    pub a0: f64,
    pub a1: f64,
    /// Constant potential V.
    pub potential: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self {
            kind: DomainKind::Interval,
            lengths: vec![std::f64::consts::PI],
            modes: 16,
            mesh: 256,
            a0: 1.0,
            a1: 0.0,
            potential: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSpec {
    pub u0: DataProfile,
    pub u1: DataProfile,
    /// Spatial profile of a time-independent source.
    pub f: DataProfile,
    pub u0_scale: f64,
    pub u1_scale: f64,
    pub f_scale: f64,
    /// Time modulation f(t) = f cos(ωt); the source is constant when absent.
    pub f_frequency: Option<f64>,
    /// Spectral decay exponent of random profiles.
    pub decay: f64,
    /// Tabulated modal coefficients; these take precedence over profiles.
    pub u0_coeffs: Option<Vec<f64>>,
    pub u1_coeffs: Option<Vec<f64>>,
    pub f_coeffs: Option<Vec<f64>>,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            u0: DataProfile::Mode(1),
            u1: DataProfile::Zero,
            f: DataProfile::Zero,
            u0_scale: 1.0,
            u1_scale: 1.0,
            f_scale: 1.0,
            f_frequency: None,
            decay: 1.0,
            u0_coeffs: None,
            u1_coeffs: None,
            f_coeffs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    /// Horizon T; semilinear runs derive T from the existence-time formula when absent.
    pub horizon: Option<f64>,
    pub steps: usize,
    /// Grading exponent χ ≥ 1 (1 is uniform).
    pub grading: f64,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { horizon: None, steps: 64, grading: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub b: f64,
    #[serde(default = "one")]
    pub mu: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentOverrides {
    /// Dimension of the exponent calculus; defaults to the domain's.
    pub d: Option<usize>,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub ell: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSpec {
    pub p_min: f64,
    pub p_max: f64,
    pub count: usize,
    /// Defaults to 5 T.
    pub t_max: Option<f64>,
    /// Scales the computed trajectory before the check (negative control).
    pub corrupt_scale: Option<f64>,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { p_min: 0.5, p_max: 20.0, count: 16, t_max: None, corrupt_scale: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub laplace: f64,
    pub picard: f64,
    pub max_iter: usize,
    /// When set, solve-linear also solves on the refined grid and compares.
    pub refinement: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { laplace: 1e-4, picard: 1e-10, max_iter: 50, refinement: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSpec {
    pub horizons: Vec<f64>,
    pub trials: usize,
    pub time_steps: usize,
    pub grading: f64,
    pub rho: f64,
    pub with_source: bool,
    pub unit_probes: bool,
}

impl Default for EstimateSpec {
    fn default() -> Self {
        let d = EstimateConfig::default();
        Self {
            horizons: d.horizons,
            trials: d.trials,
            time_steps: d.time_steps,
            grading: d.grading,
            rho: d.rho,
            with_source: d.with_source,
            unit_probes: d.unit_probes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemilinearSpec {
    pub t0: f64,
    /// The assembled constant C; estimated when absent.
    pub c: Option<f64>,
    /// Multiplier applied to the fitted C0_hat (1+T0)^δ.
    pub safety: f64,
    /// Data scalings ε for a sweep of T(ε).
    pub eps: Vec<f64>,
    /// Constant C̃0 of the small-data horizon; derived from C when absent.
    pub c0_tilde: Option<f64>,
    pub oversampling: usize,
}

impl Default for SemilinearSpec {
    fn default() -> Self {
        Self { t0: 1.0, c: None, safety: 2.0, eps: Vec::new(), c0_tilde: None, oversampling: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlfSpec {
    pub alpha: Option<f64>,
    pub beta: f64,
    /// Points x ≤ 0 at which E_{α,β}(x) is evaluated.
    pub x: Vec<f64>,
}

impl Default for MlfSpec {
    fn default() -> Self {
        Self { alpha: None, beta: 1.0, x: vec![0.0, -1.0, -10.0] }
    }
}

pub fn load(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let Some(path) = path else { return Ok(ExperimentConfig::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
}

fn validation(message: impl Into<String>) -> CliError {
    CliError::Validation(message.into())
}

impl ExperimentConfig {
    /// Checks the constraints every command relies on: 1 < α < 2, the b
    /// window, the ℓ window and admissibility of the exponent overrides.
    pub fn validate(&self) -> Result<(), CliError> {
        check_order(self.alpha).map_err(|e| validation(format!("α must satisfy 1 < α < 2: {e}")))?;
        let d = &self.domain;
        if d.modes == 0 {
            return Err(validation("domain.modes must be at least 1"));
        }
        match d.kind {
            DomainKind::Interval | DomainKind::Fd if d.lengths.len() != 1 => {
                return Err(validation("interval domains take exactly one length"))
            }
            DomainKind::Box if !(2..=3).contains(&d.lengths.len()) => {
                return Err(validation("box domains take two or three lengths"))
            }
            _ => {}
        }
        if let Some(n) = self.nonlinearity {
            let w = check_b_window(self.exponent_dimension(), self.alpha, n.b)?;
            if !w.admissible {
                return Err(validation(format!(
                    "b = {} violates the window dα/(dα+4(1-α)) < b < (dα+4)/(dα+4(1-α)) = ({}, {}) for d = {}, α = {}",
                    n.b,
                    w.lower,
                    w.upper,
                    self.exponent_dimension(),
                    self.alpha
                )));
            }
        }
        if let Some(ell) = self.exponents.ell {
            let hi = 1.0 / (2.0 - self.alpha);
            if !(ell >= 1.0 && ell < hi) {
                return Err(validation(format!("ℓ = {ell} violates 1 ≤ ℓ < 1/(2-α) = {hi}")));
            }
        }
        if self.nonlinearity.is_some() || self.exponents.gamma.is_some() {
            self.exponent_set()?;
        }
        if let Some(tol) = self.tolerances.refinement {
            if !(tol >= 0.0) {
                return Err(validation(format!("tolerances.refinement must be nonnegative, got {tol}")));
            }
        }
        if self.data.f_frequency.is_some_and(|w| !w.is_finite()) {
            return Err(validation("data.f_frequency must be finite"));
        }
        if self.time.steps == 0 || !(self.time.grading >= 1.0) {
            return Err(validation("time.steps must be positive and time.grading at least 1"));
        }
        Ok(())
    }

    /// Dimension used by the exponent calculus.
    pub fn exponent_dimension(&self) -> usize {
        self.exponents.d.unwrap_or(match self.domain.kind {
            DomainKind::Box => self.domain.lengths.len(),
            _ => 1,
        })
    }

    pub fn basis(&self) -> Result<Arc<EigenBasis>, CliError> {
        let d = &self.domain;
        let basis = match d.kind {
            DomainKind::Interval => build_interval_basis(d.lengths[0], d.modes)?,
            DomainKind::Box => build_rectangle_basis(&d.lengths, d.modes)?,
            DomainKind::Fd => {
                let (a0, a1, v) = (d.a0, d.a1, d.potential);
                build_fd_basis(move |x| a0 + a1 * x, move |_| v, d.lengths[0], d.mesh, d.modes)?
            }
        };
        Ok(Arc::new(basis))
    }

    pub fn grid(&self, horizon: f64) -> Result<TimeGrid, CliError> {
        let t = &self.time;
        Ok(if t.grading == 1.0 {
            TimeGrid::uniform(horizon, t.steps)?
        } else {
            TimeGrid::graded(horizon, t.steps, t.grading)?
        })
    }

    pub fn horizon(&self) -> Result<f64, CliError> {
        self.time.horizon.ok_or_else(|| validation("time.horizon is required for this command"))
    }

    fn coeffs(&self, basis: &EigenBasis, table: &Option<Vec<f64>>, profile: DataProfile, scale: f64) -> Result<ModalCoeffs, CliError> {
        match table {
            Some(c) if c.len() == basis.mode_count() => Ok(ModalCoeffs(c.clone()).scaled(scale)),
            Some(c) => Err(validation(format!("tabulated data has {} coefficients, expected {}", c.len(), basis.mode_count()))),
            None => Ok(profile.coefficients(basis, scale, self.data.decay)?),
        }
    }

    pub fn initial_data(&self, basis: &EigenBasis) -> Result<(ModalCoeffs, ModalCoeffs), CliError> {
        let d = &self.data;
        Ok((self.coeffs(basis, &d.u0_coeffs, d.u0, d.u0_scale)?, self.coeffs(basis, &d.u1_coeffs, d.u1, d.u1_scale)?))
    }

    pub fn source(&self, basis: &EigenBasis, grid: &TimeGrid) -> Result<SourceTerm, CliError> {
        let d = &self.data;
        let c = self.coeffs(basis, &d.f_coeffs, d.f, d.f_scale)?;
        let omega = d.f_frequency.unwrap_or(0.0);
        Ok(SourceTerm::from_fn(grid, basis.mode_count(), |k, t| c[k] * (omega * t).cos()))
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec, CliError> {
        let n = self.nonlinearity.ok_or_else(|| validation("this command needs a [nonlinearity] section"))?;
        Ok(NonlinearitySpec::new(n.b, n.mu)?)
    }

    /// Exponents from b when a nonlinearity is configured, otherwise from γ.
    pub fn exponent_set(&self) -> Result<ExponentSet, CliError> {
        let o = &self.exponents;
        let d = self.exponent_dimension();
        let set = match self.nonlinearity {
            Some(n) => exponent_set_for_b(d, self.alpha, n.b, o.p, o.ell),
            None => {
                let gamma = o.gamma.ok_or_else(|| validation("exponents.gamma is required without a nonlinearity"))?;
                ExponentSet::new(d, self.alpha, gamma, o.p, o.q, o.ell)
            }
        };
        set.map_err(|e| match e {
            Error::Validation(m) | Error::Domain(m) => validation(m),
            other => other.into(),
        })
    }

    pub fn probe(&self, horizon: f64) -> Result<LaplaceProbe, CliError> {
        let p = &self.probe;
        Ok(LaplaceProbe::log_spaced(p.p_min, p.p_max, p.count, p.t_max.unwrap_or(5.0 * horizon))?)
    }

    pub fn estimate_config(&self) -> EstimateConfig {
        let e = &self.estimate;
        EstimateConfig {
            horizons: e.horizons.clone(),
            trials: e.trials,
            seed: self.seed,
            time_steps: e.time_steps,
            grading: e.grading,
            rho: e.rho,
            with_source: e.with_source,
            unit_probes: e.unit_probes,
        }
    }
}
