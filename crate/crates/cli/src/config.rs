//! The flat run configuration shared by every subcommand.
//!
//! One TOML table holds every knob; each subcommand reads the keys it cares
//! about and ignores the rest, so a single file can drive a whole study
//! (simulate, fit, benchmark) without editing. Unknown keys are rejected —
//! a typo should fail loudly, not silently fall back to a default. Parsed
//! configs round-trip through [`RunConfig::to_toml_string`], which is what
//! the run manifests rely on.
//!
//! `docs/config.example.toml` at the repository root documents every key
//! with its default.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use irwal::{
    lambda_grid, BetaInit, Criterion, DgpSpec, IrwalConfig, LagIndexSets, LambdaPolicy,
    SupportRule, VolKind, VolatilitySpec,
};

/// Every knob of every subcommand, one flat table.
///
/// Keys under "estimator" apply to `fit`; the benchmark studies derive the
/// volatility recursion from the generating process instead (same power,
/// same lag order, threshold terms iff the generator has them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // io
    /// Input CSV for `fit`: header of series names, one column per series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    /// Directory every artifact of the run is written into.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Base RNG seed for simulation and the studies.
    pub seed: u64,
    /// Worker threads for the studies; 0 keeps the machine default.
    pub threads: usize,

    // estimator
    /// Power of the volatility recursion fitted by `fit`.
    pub delta: f64,
    /// Adaptive-penalty exponent; 0 disables the pilot machinery.
    pub tau: f64,
    /// Pilot coefficients when `tau > 0`: "none", "ols", or "lasso".
    pub pilot: String,
    /// Penalty level of the "lasso" pilot; absent means BIC-selected.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pilot_lambda: Option<f64>,
    /// Grid winner rule: "aic", "hqc", or "bic".
    pub criterion: String,
    /// Reweighting round budget.
    pub k_max: usize,
    /// Stopping threshold on the σ̂ difference; absent resolves to
    /// 1e-3 × the round-1 residual scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_epsilon: Option<f64>,
    /// Coordinate-descent convergence tolerance.
    pub solver_tol: f64,
    /// Sweep budget per lasso solve.
    pub max_sweeps: usize,
    /// Score λ candidates on weighted residuals (matching the solver
    /// objective) or raw ones.
    pub weighted_ic: bool,
    /// Mean-equation lag horizon for `fit`; 0 derives ⌊5√T⌋ from the input.
    pub mean_lag_max: usize,
    /// Volatility-recursion lag horizon for `fit`.
    pub vol_lag_max: usize,
    /// Add sign-gated threshold terms to the fitted recursion.
    pub threshold: bool,
    /// Lower bound for fitted scales; absent derives one from the residuals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_floor: Option<f64>,
    /// λ grid `2^hi … 2^lo`, log-spaced, descending.
    pub lambda_hi_exp: f64,
    pub lambda_lo_exp: f64,
    pub lambda_len: usize,
    /// Skip the grid and fit at one fixed level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_fixed: Option<f64>,

    // generating process
    /// Observations to simulate; also the sample size of `bench-mae`.
    pub n: usize,
    /// Warm-up steps discarded by the simulator.
    pub burn_in: usize,
    /// Geometric decay of the autoregressive coefficient profile.
    pub phi: f64,
    /// Total coefficient mass.
    pub mass: f64,
    /// Support lags: "squares", "none", or a comma list like "1,4,9".
    pub support: String,
    /// Innovation scale recursion: "arch", "tarch", or "constant".
    pub vol_kind: String,
    /// Scale used by the "constant" recursion.
    pub sigma_const: f64,

    // study shape
    /// Sample sizes for `bench-inclusion` and `bench-trend`, ascending.
    pub n_values: Vec<usize>,
    /// Replications per sample size.
    pub n_reps: usize,
    /// Reweighting depths to record; `bench-trend` uses the first entry.
    pub k_list: Vec<usize>,
    /// Restrict the `bench-mae` design to the true support lags.
    pub oracle: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: None,
            seed: 1,
            threads: 0,
            delta: 1.0,
            tau: 0.0,
            pilot: "none".into(),
            pilot_lambda: None,
            criterion: "bic".into(),
            k_max: 3,
            stop_epsilon: None,
            solver_tol: 1e-7,
            max_sweeps: 10_000,
            weighted_ic: true,
            mean_lag_max: 0,
            vol_lag_max: 2,
            threshold: false,
            sigma_floor: None,
            lambda_hi_exp: -4.0,
            lambda_lo_exp: -18.0,
            lambda_len: 100,
            lambda_fixed: None,
            n: 600,
            burn_in: 5000,
            phi: 0.85,
            mass: 0.95,
            support: "squares".into(),
            vol_kind: "arch".into(),
            sigma_const: 0.05,
            n_values: vec![300, 600, 1200],
            n_reps: 200,
            k_list: vec![1, 2, 3],
            oracle: false,
        }
    }
}

impl RunConfig {
    /// Reads a TOML config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Parses the flat TOML table; unknown keys are an error.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Extracts the `[config]` table of a run manifest, so a run can be
    /// replayed from the manifest alone.
    pub fn from_manifest_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).context("parsing manifest")?;
        let config = value
            .get("config")
            .context("manifest has no [config] table")?;
        Ok(config.clone().try_into()?)
    }

    /// The flat table back as TOML.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("a flat config table always serializes")
    }

    /// Parses the `criterion` key.
    pub fn criterion(&self) -> Result<Criterion> {
        match self.criterion.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "hqc" => Ok(Criterion::Hqc),
            "bic" => Ok(Criterion::Bic),
            other => bail!("unknown criterion {other:?} (expected aic, hqc, or bic)"),
        }
    }

    /// Parses the `support` key.
    pub fn support_rule(&self) -> Result<SupportRule> {
        let text = self.support.trim();
        match text.to_ascii_lowercase().as_str() {
            "squares" => return Ok(SupportRule::SquareNumbers),
            "none" | "" => return Ok(SupportRule::Explicit(Vec::new())),
            _ => {}
        }
        let mut lags = Vec::new();
        for field in text.split(',') {
            let lag: usize = field.trim().parse().with_context(|| {
                format!("support {text:?}: {field:?} is not a lag (expected \"squares\", \"none\", or a comma list like \"1,4,9\")")
            })?;
            lags.push(lag);
        }
        Ok(SupportRule::Explicit(lags))
    }

    /// Parses the `vol_kind` key.
    pub fn vol_kind(&self) -> Result<VolKind<f64>> {
        match self.vol_kind.to_ascii_lowercase().as_str() {
            "arch" => Ok(VolKind::arch_default()),
            "tarch" => Ok(VolKind::tarch_default()),
            "constant" => Ok(VolKind::Constant(self.sigma_const)),
            other => bail!("unknown vol_kind {other:?} (expected arch, tarch, or constant)"),
        }
    }

    /// The generating process the simulation keys describe.
    pub fn dgp(&self) -> Result<DgpSpec<f64>> {
        Ok(DgpSpec {
            n: self.n,
            burn_in: self.burn_in,
            phi: self.phi,
            mass: self.mass,
            support: self.support_rule()?,
            vol: self.vol_kind()?,
            seed: self.seed,
            stream: 0,
        })
    }

    /// The descending λ grid of the grid keys, as penalty levels.
    pub fn lambda_levels(&self) -> Result<Vec<f64>> {
        if let Some(lambda) = self.lambda_fixed {
            return Ok(vec![lambda]);
        }
        Ok(lambda_grid(self.lambda_hi_exp, self.lambda_lo_exp, self.lambda_len)?)
    }

    /// The reweighted-fit configuration for one target series inside a
    /// `d`-series panel.
    pub fn estimator(&self, d: usize) -> Result<IrwalConfig<f64>> {
        let policy = match self.lambda_fixed {
            Some(lambda) => LambdaPolicy::Fixed(lambda),
            None => LambdaPolicy::Grid {
                lambdas: self.lambda_levels()?,
                criterion: self.criterion()?,
            },
        };
        let mut vol = VolatilitySpec::new(
            self.delta,
            LagIndexSets::uniform(d, self.vol_lag_max)?,
            self.threshold,
        );
        vol.sigma_floor = self.sigma_floor;
        let mut cfg = IrwalConfig::new(policy, vol);
        cfg.tau = self.tau;
        cfg.beta_init = match self.pilot.to_ascii_lowercase().as_str() {
            "none" => BetaInit::None,
            "ols" => BetaInit::Ols,
            "lasso" => BetaInit::Lasso {
                lambda: self.pilot_lambda,
            },
            other => bail!("unknown pilot {other:?} (expected none, ols, or lasso)"),
        };
        cfg.k_max = self.k_max;
        cfg.stop_epsilon = self.stop_epsilon;
        cfg.solver_tol = self.solver_tol;
        cfg.max_sweeps = self.max_sweeps;
        cfg.weighted_ic = self.weighted_ic;
        Ok(cfg)
    }
}
