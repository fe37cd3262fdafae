//! JSON configuration files and their conversion into core objects.

use std::path::Path;
use std::sync::Arc;

use oscillab_core::hermite::{construct_rank_2_bounded, construct_rank_m, pure_hermite, sin_cos_pair, Psi};
use oscillab_core::hermite_process::HermiteProcessConfig;
use oscillab_core::lrd::SlowlyVarying;
use oscillab_core::{CoefficientSampler, Error, IntegrandFn, KernelSpec, RankedFunction};
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowlyVaryingConfig {
    #[default]
    One,
    LogPower { p: f64 },
}

impl SlowlyVaryingConfig {
    pub fn to_core(self) -> SlowlyVarying {
        match self {
            SlowlyVaryingConfig::One => SlowlyVarying::ConstantOne,
            SlowlyVaryingConfig::LogPower { p } => SlowlyVarying::LogPower { p },
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Gaussian path parameters (`simulate-path`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub m: u32,
    pub h0: f64,
    #[serde(default)]
    pub slowly_varying: SlowlyVaryingConfig,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default)]
    pub window: Option<f64>,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl KernelConfig {
    pub fn kernel(&self) -> Result<KernelSpec, Error> {
        KernelSpec::new(self.m, self.h0, self.slowly_varying.to_core())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiMethod {
    PureHermite,
    Rank2Bounded,
    OuVandermonde,
    /// `Φ ≡ 0`, i.e. a deterministic coefficient `a ≡ a*`.
    Constant,
}

/// Description of `Φ` (`build-phi`, and the `phi` field of experiments).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    pub method: PhiMethod,
    #[serde(default)]
    pub m: usize,
    #[serde(default = "one")]
    pub a_star: f64,
    #[serde(default)]
    pub nodes: Option<Vec<f64>>,
    #[serde(default)]
    pub psi: Option<String>,
}

impl PhiConfig {
    /// The default bounded construction of rank `m` used by the solver.
    pub fn bounded_default(m: usize, a_star: f64) -> Self {
        PhiConfig {
            method: if m == 2 { PhiMethod::Rank2Bounded } else { PhiMethod::OuVandermonde },
            m,
            a_star,
            nodes: None,
            psi: None,
        }
    }

    pub fn build(&self) -> Result<RankedFunction, Error> {
        let f = match self.method {
            PhiMethod::PureHermite => pure_hermite(self.m)?,
            PhiMethod::Rank2Bounded => {
                if self.m != 2 && self.m != 0 {
                    return Err(Error::Inconsistent(format!(
                        "rank2_bounded builds rank 2, but m = {} was requested",
                        self.m
                    )));
                }
                match self.psi.as_deref() {
                    None | Some("sin_cos") => {
                        let (h1, h2) = sin_cos_pair();
                        construct_rank_2_bounded(self.a_star, h1, h2)?
                    }
                    Some(other) => {
                        return Err(Error::Inconsistent(format!(
                            "rank2_bounded supports the pair `sin_cos`, got `{other}`"
                        )))
                    }
                }
            }
            PhiMethod::OuVandermonde => {
                let psi = Psi::by_name(self.psi.as_deref().unwrap_or("shifted_logistic"))?;
                construct_rank_m(self.m, self.a_star, &psi, self.nodes.as_deref())?
            }
            PhiMethod::Constant => RankedFunction::constant(0.0),
        };
        Ok(f.tabulated())
    }

    pub fn sampler(&self) -> Result<CoefficientSampler, Error> {
        CoefficientSampler::new(self.build()?, self.a_star)
    }
}

/// Hermite process path parameters (`hermite-path`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermitePathConfig {
    pub m: u32,
    pub h0: f64,
    #[serde(default = "one")]
    pub t_max: f64,
    #[serde(default)]
    pub t_left: Option<f64>,
    pub n_grid: usize,
    #[serde(default)]
    pub seed: u64,
}

impl HermitePathConfig {
    pub fn to_core(&self) -> Result<HermiteProcessConfig, Error> {
        HermiteProcessConfig::new(self.m, self.h0, self.t_max, self.n_grid, self.t_left, self.seed)
    }
}

/// Test function `h` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegrandConfig {
    /// `one` (h ≡ 1), `half` (1 on (0, 1/2]), `sin` (sin πx) or `linear` (x).
    Named { name: String },
    Step { breakpoints: Vec<f64>, levels: Vec<f64> },
}

impl Default for IntegrandConfig {
    fn default() -> Self {
        IntegrandConfig::Named { name: "one".into() }
    }
}

impl IntegrandConfig {
    pub fn build(&self) -> Result<IntegrandFn, Error> {
        match self {
            IntegrandConfig::Named { name } => match name.as_str() {
                "one" => IntegrandFn::indicator(0.0, 1.0),
                "half" => IntegrandFn::indicator(0.0, 0.5),
                "sin" => IntegrandFn::continuous(Arc::new(|x: f64| (std::f64::consts::PI * x).sin()), 0.0, 1.0),
                "linear" => IntegrandFn::continuous(Arc::new(|x: f64| x), 0.0, 1.0),
                other => Err(Error::Inconsistent(format!(
                    "unknown integrand `{other}` (known: one, half, sin, linear)"
                ))),
            },
            IntegrandConfig::Step { breakpoints, levels } => IntegrandFn::step(breakpoints.clone(), levels.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Oscillatory,
    Corrector,
    Covariance,
    TaqquFdd,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Oscillatory => "oscillatory",
            Mode::Corrector => "corrector",
            Mode::Covariance => "covariance",
            Mode::TaqquFdd => "taqqu_fdd",
        }
    }

    fn distributional(self) -> bool {
        !matches!(self, Mode::Covariance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_p")]
    pub p_value: f64,
    #[serde(default = "default_ratio")]
    pub variance_ratio: f64,
    #[serde(default = "default_z")]
    pub z_score: f64,
}

fn default_p() -> f64 {
    0.01
}
fn default_ratio() -> f64 {
    0.15
}
fn default_z() -> f64 {
    3.0
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            p_value: default_p(),
            variance_ratio: default_ratio(),
            z_score: default_z(),
        }
    }
}

fn default_samples_per_unit() -> f64 {
    20.0
}
fn default_z_grid() -> usize {
    400
}
fn default_permutations() -> usize {
    200
}
fn default_probes() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}
fn default_lags() -> Vec<f64> {
    vec![1.0, 10.0, 100.0, 1e3, 1e4, 1e5]
}
fn default_ts() -> Vec<f64> {
    vec![1e2, 1e3, 1e4]
}
fn default_source() -> String {
    "sin".into()
}

/// Monte Carlo experiment (`oscillatory`, `corrector`, `covariance`, `taqqu`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: u32,
    pub h0: f64,
    #[serde(default)]
    pub slowly_varying: SlowlyVaryingConfig,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub h: IntegrandConfig,
    #[serde(default)]
    pub replicas: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub phi: Option<PhiConfig>,
    #[serde(default = "default_samples_per_unit")]
    pub samples_per_unit: f64,
    /// Cells of the Hermite-process grid on `[0, 1]` used for the limit ensemble.
    #[serde(default = "default_z_grid")]
    pub z_grid: usize,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_probes")]
    pub probes: Vec<f64>,
    #[serde(default = "default_lags")]
    pub lags: Vec<f64>,
    /// Paths used for the Monte Carlo covariance column (0 disables it).
    #[serde(default)]
    pub mc_paths: usize,
    #[serde(default)]
    pub mc_length: usize,
    #[serde(default = "default_ts")]
    pub ts: Vec<f64>,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default = "default_source")]
    pub source: String,
}

impl ExperimentConfig {
    pub fn minimal(m: u32, h0: f64, mode: Mode) -> Self {
        ExperimentConfig {
            m,
            h0,
            slowly_varying: SlowlyVaryingConfig::One,
            epsilons: Vec::new(),
            h: IntegrandConfig::default(),
            replicas: 0,
            seed_base: 0,
            mode: Some(mode),
            phi: None,
            samples_per_unit: default_samples_per_unit(),
            z_grid: default_z_grid(),
            permutations: default_permutations(),
            thresholds: Thresholds::default(),
            probes: default_probes(),
            lags: default_lags(),
            mc_paths: 0,
            mc_length: 0,
            ts: default_ts(),
            delta: 1.0,
            b: 1.0,
            source: default_source(),
        }
    }

    pub fn kernel(&self) -> Result<KernelSpec, Error> {
        KernelSpec::new(self.m, self.h0, self.slowly_varying.to_core())
    }

    pub fn mode(&self) -> Result<Mode, LabError> {
        self.mode
            .ok_or_else(|| LabError::Validation("mode is required (oscillatory, corrector, covariance or taqqu_fdd)".into()))
    }

    /// `Φ` for the experiment: the configured one, or `H_m` for oscillatory
    /// runs and the bounded default of rank `m` otherwise.
    pub fn phi_config(&self) -> PhiConfig {
        if let Some(p) = &self.phi {
            return p.clone();
        }
        match self.mode {
            Some(Mode::Corrector) => PhiConfig::bounded_default(self.m as usize, 1.0),
            _ => PhiConfig {
                method: PhiMethod::PureHermite,
                m: self.m as usize,
                a_star: 1.0,
                nodes: None,
                psi: None,
            },
        }
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let mode = self.mode()?;
        self.kernel()?;
        let needs_eps = matches!(mode, Mode::Oscillatory | Mode::Corrector);
        if needs_eps && self.epsilons.is_empty() {
            return Err(LabError::Validation("epsilons must list at least one scale".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(LabError::Validation("epsilons must lie in (0, 1)".into()));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(LabError::Validation("epsilons must be strictly decreasing".into()));
        }
        if mode.distributional() && self.replicas < 100 {
            return Err(LabError::Validation(format!(
                "replicas = {} but distributional tests need at least 100",
                self.replicas
            )));
        }
        if !(self.samples_per_unit >= 1.0) {
            return Err(LabError::Validation("samples_per_unit must be at least 1".into()));
        }
        if self.probes.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(LabError::Validation("probe points must lie in [0, 1]".into()));
        }
        if self.ts.windows(2).any(|w| !(w[1] > w[0])) || self.ts.iter().any(|t| !(*t > 0.0)) {
            return Err(LabError::Validation("ts must be positive and increasing".into()));
        }
        if !(self.delta > 0.0) {
            return Err(LabError::Validation("delta must be positive".into()));
        }
        let phi = self.phi_config();
        if phi.method != PhiMethod::Constant && phi.m != self.m as usize {
            return Err(LabError::Validation(format!(
                "phi has rank {} but the experiment uses m = {}",
                phi.m, self.m
            )));
        }
        self.h.build()?;
        Ok(())
    }
}

/// Reads and parses a JSON file; parse failures are validation errors.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, Vec<u8>), LabError> {
    let bytes = std::fs::read(path).map_err(|e| LabError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes)
        .map_err(|e| LabError::Validation(format!("invalid config {}: {e}", path.display())))?;
    Ok((value, bytes))
}
