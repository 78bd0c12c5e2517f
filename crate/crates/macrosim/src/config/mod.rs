//! Model parameters, scenario definitions, and configuration loading.
//!
//! Configuration files use a small TOML subset: a `[params]` table with
//! annual-rate parameters, a `[run]` table with batch controls, and one
//! `[scenarios.<name>]` table per scenario. All rate parameters are given
//! in annual units in the file and converted to per-step units at load
//! time: drifts, adjustment speeds, propensities, interest rates, and
//! depreciation scale by `dt`, and volatilities scale by `sqrt(dt)`.
//! Everything downstream of [`load_config`] works in per-step units only.

pub mod rng;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

pub use rng::{AgentKind, Purpose, RngPolicy};

/// Policy for choosing the initially distressed set in the systemic-risk
/// score recorded each period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DebtRankPolicy {
    /// Distress each bank alone and average the resulting scores.
    EachBankMean,
    /// Distress only the bank with the largest loan book.
    SingleLargestBank,
}

impl fmt::Display for DebtRankPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DebtRankPolicy::EachBankMean => write!(f, "each-bank-mean"),
            DebtRankPolicy::SingleLargestBank => write!(f, "single-largest-bank"),
        }
    }
}

impl std::str::FromStr for DebtRankPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "each-bank-mean" => Ok(DebtRankPolicy::EachBankMean),
            "single-largest-bank" => Ok(DebtRankPolicy::SingleLargestBank),
            other => Err(format!(
                "unknown policy {other:?}; expected each-bank-mean or single-largest-bank"
            )),
        }
    }
}

/// Engine-facing parameter set, already scaled to per-step units.
///
/// Invariants are enforced by [`Params::validate`]: populations are
/// positive and households divide evenly across firms, adjustment speeds
/// and propensities lie strictly in (0, 1), volatilities and rates are
/// non-negative, and the repayment fraction times the loan term is
/// exactly 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Params {
    /// Step length in years.
    pub dt: f64,
    /// Number of households.
    pub n_households: usize,
    /// Number of consumption-good firms.
    pub n_cfirms: usize,
    /// Number of capital-good firms.
    pub n_kfirms: usize,
    /// Number of banks.
    pub n_banks: usize,
    /// Consumption-good sellers sampled per household per step.
    pub n_consumption_visits: usize,
    /// Capital-good sellers sampled per investing firm per step.
    pub n_capital_visits: usize,
    /// Job applications submitted per unemployed household per step.
    pub n_job_applications: usize,
    /// Banks sampled per borrowing firm per step (the credit search uses a
    /// single bank; this knob is kept for experimentation).
    pub n_bank_visits: usize,
    /// Per-step labour productivity drift.
    pub g: f64,
    /// Per-step productivity volatility.
    pub sigma_a: f64,
    /// Per-step price adjustment volatility.
    pub sigma_p: f64,
    /// Per-step wage adjustment volatility.
    pub sigma_w: f64,
    /// Per-step loan rate adjustment volatility.
    pub sigma_r: f64,
    /// Expected-demand adaptation speed.
    pub gamma_z: f64,
    /// Price mean-reversion speed toward the market index.
    pub gamma_p: f64,
    /// Wage mean-reversion speed toward the market index.
    pub gamma_w: f64,
    /// Loan-rate mean-reversion speed toward the natural rate.
    pub gamma_r: f64,
    /// Per-step propensity to consume out of deposits.
    pub c: f64,
    /// Capital-output ratio.
    pub nu: f64,
    /// Desired debt ratio: intercept.
    pub d0: f64,
    /// Desired debt ratio: productivity-growth coefficient.
    pub d1: f64,
    /// Desired debt ratio: profit-rate coefficient.
    pub d2: f64,
    /// Per-step capital depreciation rate.
    pub delta: f64,
    /// Desired excess inventory share for capital-good firms.
    pub xi: f64,
    /// Loan term in steps.
    pub n_repay: u32,
    /// Principal fraction repaid per step (1 / n_repay).
    pub rho: f64,
    /// Bank capital-ratio target: intercept.
    pub kappa1: f64,
    /// Bank capital-ratio target: expected-loss coefficient.
    pub kappa2: f64,
    /// Per-step deposit interest rate.
    pub r_m: f64,
    /// Per-step natural loan rate (initial rate and reversion level).
    pub r_n: f64,
    /// Record seller demand using the buyer's full desired expenditure at
    /// every visit instead of the remaining budget. The remaining-budget
    /// default preserves spend conservation; the literal variant is kept
    /// behind this switch.
    pub literal_demand_accounting: bool,
    /// Interpret the bank risk slope input as loan book over expected bad
    /// loans instead of the default expected bad loans over loan book.
    pub reciprocal_expected_loss_ratio: bool,
    /// Initial-distress policy for the per-period systemic-risk score.
    pub debtrank_policy: DebtRankPolicy,
}

impl Default for Params {
    fn default() -> Self {
        RawParams::default()
            .to_params()
            .expect("default parameters are valid")
    }
}

impl Params {
    /// Validate invariants; the error names the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn bad(key: &str, message: impl Into<String>) -> ConfigError {
            ConfigError::InvalidParam {
                key: key.to_string(),
                message: message.into(),
            }
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(bad("dt", "step length must lie in (0, 1]"));
        }
        for (key, n) in [
            ("n_households", self.n_households),
            ("n_cfirms", self.n_cfirms),
            ("n_kfirms", self.n_kfirms),
            ("n_banks", self.n_banks),
            ("n_consumption_visits", self.n_consumption_visits),
            ("n_capital_visits", self.n_capital_visits),
            ("n_job_applications", self.n_job_applications),
            ("n_bank_visits", self.n_bank_visits),
        ] {
            if n == 0 {
                return Err(bad(key, "must be at least 1"));
            }
        }
        let firms = self.n_cfirms + self.n_kfirms;
        if self.n_households % firms != 0 {
            return Err(bad(
                "n_households",
                format!("must be divisible by n_cfirms + n_kfirms = {firms} so the initial allocation is even"),
            ));
        }
        for (key, v) in [
            ("gamma_z", self.gamma_z),
            ("gamma_p", self.gamma_p),
            ("gamma_w", self.gamma_w),
            ("gamma_r", self.gamma_r),
            ("c", self.c),
            ("xi", self.xi),
            ("delta", self.delta),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(bad(key, format!("per-step value {v} must lie strictly in (0, 1)")));
            }
        }
        for (key, v) in [
            ("g", self.g),
            ("sigma_a", self.sigma_a),
            ("sigma_p", self.sigma_p),
            ("sigma_w", self.sigma_w),
            ("sigma_r", self.sigma_r),
            ("d0", self.d0),
            ("d1", self.d1),
            ("d2", self.d2),
            ("kappa2", self.kappa2),
            ("r_m", self.r_m),
            ("r_n", self.r_n),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(bad(key, format!("value {v} must be finite and non-negative")));
            }
        }
        if !(self.nu > 0.0) {
            return Err(bad("nu", "capital-output ratio must be positive"));
        }
        if !(self.kappa1 > 0.0) {
            return Err(bad("kappa1", "capital-ratio intercept must be positive"));
        }
        if self.n_repay == 0 {
            return Err(bad("n_repay", "loan term must be at least one step"));
        }
        if self.rho * self.n_repay as f64 != 1.0 {
            return Err(bad(
                "n_repay",
                format!(
                    "repayment fraction 1/{} times the term must round-trip to exactly 1",
                    self.n_repay
                ),
            ));
        }
        Ok(())
    }

    /// Stable hexadecimal digest of every parameter; recorded in run
    /// manifests so outputs can be tied to the exact configuration.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let body = serde_json::to_string(self).expect("params serialize");
        let mut hasher = Sha256::new();
        hasher.update(body.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Batch controls shared by every scenario unless overridden per scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSettings {
    /// Steps simulated and discarded before recording starts.
    pub burn_in_steps: u32,
    /// Steps recorded after burn-in.
    pub recorded_steps: u32,
    /// Monte Carlo runs per scenario in `batch`.
    pub n_runs: u32,
    /// Seed for the keyed stream policy; run k of a batch uses seed + k.
    pub master_seed: u64,
    /// Absolute step indices at which per-agent snapshots are written.
    pub snapshot_steps: Vec<u32>,
    /// Record burn-in steps in the trace as well.
    pub record_burn_in: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            burn_in_steps: 200,
            recorded_steps: 400,
            n_runs: 50,
            master_seed: 42,
            snapshot_steps: vec![300],
            record_burn_in: false,
        }
    }
}

/// A named experiment: overrides applied on top of the base parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Annual productivity drift override (scaled by dt when applied).
    pub g_annual: Option<f64>,
    /// Desired-debt productivity coefficient override.
    pub d1: Option<f64>,
    /// Desired-debt profit coefficient override.
    pub d2: Option<f64>,
    pub burn_in_steps: Option<u32>,
    pub recorded_steps: Option<u32>,
    pub n_runs: Option<u32>,
    pub master_seed: Option<u64>,
}

impl Scenario {
    /// Base parameters with this scenario's overrides applied.
    pub fn apply(&self, base: &Params) -> Params {
        let mut p = base.clone();
        if let Some(g) = self.g_annual {
            p.g = g * p.dt;
        }
        if let Some(d1) = self.d1 {
            p.d1 = d1;
        }
        if let Some(d2) = self.d2 {
            p.d2 = d2;
        }
        p
    }

    /// Base run settings with this scenario's overrides applied.
    pub fn run_settings(&self, base: &RunSettings) -> RunSettings {
        let mut r = base.clone();
        if let Some(v) = self.burn_in_steps {
            r.burn_in_steps = v;
        }
        if let Some(v) = self.recorded_steps {
            r.recorded_steps = v;
        }
        if let Some(v) = self.n_runs {
            r.n_runs = v;
        }
        if let Some(v) = self.master_seed {
            r.master_seed = v;
        }
        r
    }
}

/// The four canonical scenarios: each productivity regime (trend growth
/// versus none) crossed with a moderate and an aggressive target debt
/// ratio.
pub fn canonical_scenarios() -> Vec<Scenario> {
    let mk = |name: &str, g: f64, d1: f64, d2: f64| Scenario {
        name: name.to_string(),
        g_annual: Some(g),
        d1: Some(d1),
        d2: Some(d2),
        burn_in_steps: None,
        recorded_steps: None,
        n_runs: None,
        master_seed: None,
    };
    vec![
        mk("growth_s1", 0.02, 3.0, 2.0),
        mk("growth_s2", 0.02, 5.0, 3.0),
        mk("zero_growth_s1", 0.0, 3.0, 2.0),
        mk("zero_growth_s2", 0.0, 5.0, 3.0),
    ]
}

/// Fully resolved configuration: per-step parameters, run controls, and
/// the scenario table.
#[derive(Debug, Clone)]
pub struct Config {
    pub params: Params,
    pub run: RunSettings,
    pub scenarios: Vec<Scenario>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            params: Params::default(),
            run: RunSettings::default(),
            scenarios: canonical_scenarios(),
        }
    }
}

impl Config {
    /// Look up a scenario by name.
    pub fn scenario(&self, name: &str) -> Result<&Scenario, ConfigError> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ConfigError::UnknownScenario {
                name: name.to_string(),
                known: self.scenarios.iter().map(|s| s.name.clone()).collect(),
            })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid parameter {key}: {message}")]
    InvalidParam { key: String, message: String },
    #[error("unknown scenario {name:?}; known scenarios: {}", known.join(", "))]
    UnknownScenario { name: String, known: Vec<String> },
}

/// Annual-rate parameters as they appear in a config file. Every field is
/// optional; omitted fields take the baseline defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    dt: Option<f64>,
    n_households: Option<usize>,
    n_cfirms: Option<usize>,
    n_kfirms: Option<usize>,
    n_banks: Option<usize>,
    n_consumption_visits: Option<usize>,
    n_capital_visits: Option<usize>,
    n_job_applications: Option<usize>,
    n_bank_visits: Option<usize>,
    /// Annual productivity drift.
    g: Option<f64>,
    /// Annual volatilities (scaled by sqrt(dt)).
    sigma_a: Option<f64>,
    sigma_p: Option<f64>,
    sigma_w: Option<f64>,
    sigma_r: Option<f64>,
    /// Annual adjustment speeds (scaled by dt).
    gamma_z: Option<f64>,
    gamma_p: Option<f64>,
    gamma_w: Option<f64>,
    gamma_r: Option<f64>,
    /// Annual propensity to consume out of deposits (scaled by dt).
    c: Option<f64>,
    nu: Option<f64>,
    d0: Option<f64>,
    d1: Option<f64>,
    d2: Option<f64>,
    /// Annual depreciation rate (scaled by dt).
    delta: Option<f64>,
    xi: Option<f64>,
    /// Loan term in years (steps = years / dt).
    loan_term_years: Option<f64>,
    kappa1: Option<f64>,
    kappa2: Option<f64>,
    /// Annual interest rates (scaled by dt).
    r_m: Option<f64>,
    r_n: Option<f64>,
    literal_demand_accounting: Option<bool>,
    reciprocal_expected_loss_ratio: Option<bool>,
    debtrank_policy: Option<DebtRankPolicy>,
}

impl Default for RawParams {
    fn default() -> Self {
        RawParams {
            dt: None,
            n_households: None,
            n_cfirms: None,
            n_kfirms: None,
            n_banks: None,
            n_consumption_visits: None,
            n_capital_visits: None,
            n_job_applications: None,
            n_bank_visits: None,
            g: None,
            sigma_a: None,
            sigma_p: None,
            sigma_w: None,
            sigma_r: None,
            gamma_z: None,
            gamma_p: None,
            gamma_w: None,
            gamma_r: None,
            c: None,
            nu: None,
            d0: None,
            d1: None,
            d2: None,
            delta: None,
            xi: None,
            loan_term_years: None,
            kappa1: None,
            kappa2: None,
            r_m: None,
            r_n: None,
            literal_demand_accounting: None,
            reciprocal_expected_loss_ratio: None,
            debtrank_policy: None,
        }
    }
}

impl RawParams {
    /// Apply per-step scaling and validate.
    fn to_params(&self) -> Result<Params, ConfigError> {
        let dt = self.dt.unwrap_or(0.25);
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(ConfigError::InvalidParam {
                key: "dt".to_string(),
                message: format!("step length {dt} must lie in (0, 1]"),
            });
        }
        let sqrt_dt = dt.sqrt();
        let loan_term_years = self.loan_term_years.unwrap_or(10.0);
        let term_steps = loan_term_years / dt;
        if !(term_steps.is_finite() && term_steps > 0.0 && term_steps.fract() == 0.0) {
            return Err(ConfigError::InvalidParam {
                key: "loan_term_years".to_string(),
                message: format!("{loan_term_years} years is not a whole number of steps at dt = {dt}"),
            });
        }
        let n_repay = term_steps as u32;
        let params = Params {
            dt,
            n_households: self.n_households.unwrap_or(2000),
            n_cfirms: self.n_cfirms.unwrap_or(200),
            n_kfirms: self.n_kfirms.unwrap_or(50),
            n_banks: self.n_banks.unwrap_or(10),
            n_consumption_visits: self.n_consumption_visits.unwrap_or(2),
            n_capital_visits: self.n_capital_visits.unwrap_or(2),
            n_job_applications: self.n_job_applications.unwrap_or(4),
            n_bank_visits: self.n_bank_visits.unwrap_or(1),
            g: self.g.unwrap_or(0.02) * dt,
            sigma_a: self.sigma_a.unwrap_or(0.03) * sqrt_dt,
            sigma_p: self.sigma_p.unwrap_or(0.03) * sqrt_dt,
            sigma_w: self.sigma_w.unwrap_or(0.03) * sqrt_dt,
            sigma_r: self.sigma_r.unwrap_or(0.03) * sqrt_dt,
            gamma_z: self.gamma_z.unwrap_or(0.1) * dt,
            gamma_p: self.gamma_p.unwrap_or(0.1) * dt,
            gamma_w: self.gamma_w.unwrap_or(0.1) * dt,
            gamma_r: self.gamma_r.unwrap_or(0.1) * dt,
            c: self.c.unwrap_or(0.4) * dt,
            nu: self.nu.unwrap_or(3.0),
            d0: self.d0.unwrap_or(0.5),
            d1: self.d1.unwrap_or(3.0),
            d2: self.d2.unwrap_or(2.0),
            delta: self.delta.unwrap_or(0.07) * dt,
            xi: self.xi.unwrap_or(0.1),
            n_repay,
            rho: 1.0 / n_repay as f64,
            kappa1: self.kappa1.unwrap_or(0.06),
            kappa2: self.kappa2.unwrap_or(1.0),
            r_m: self.r_m.unwrap_or(0.001) * dt,
            r_n: self.r_n.unwrap_or(0.02) * dt,
            literal_demand_accounting: self.literal_demand_accounting.unwrap_or(false),
            reciprocal_expected_loss_ratio: self.reciprocal_expected_loss_ratio.unwrap_or(false),
            debtrank_policy: self.debtrank_policy.unwrap_or(DebtRankPolicy::EachBankMean),
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    burn_in_steps: Option<u32>,
    recorded_steps: Option<u32>,
    n_runs: Option<u32>,
    master_seed: Option<u64>,
    snapshot_steps: Option<Vec<u32>>,
    record_burn_in: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    /// Annual productivity drift override.
    g: Option<f64>,
    d1: Option<f64>,
    d2: Option<f64>,
    burn_in_steps: Option<u32>,
    recorded_steps: Option<u32>,
    n_runs: Option<u32>,
    master_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    params: Option<RawParams>,
    run: Option<RawRun>,
    scenarios: Option<BTreeMap<String, RawScenario>>,
}

/// Parse a config file. `[params]`, `[run]`, and `[scenarios.*]` are all
/// optional; missing pieces fall back to the baseline defaults and the
/// canonical scenario table.
pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

/// Parse configuration text; `origin` names the source in errors.
pub fn parse_config(text: &str, origin: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let params = raw.params.unwrap_or_default().to_params()?;
    let mut run = RunSettings::default();
    if let Some(r) = raw.run {
        if let Some(v) = r.burn_in_steps {
            run.burn_in_steps = v;
        }
        if let Some(v) = r.recorded_steps {
            run.recorded_steps = v;
        }
        if let Some(v) = r.n_runs {
            run.n_runs = v;
        }
        if let Some(v) = r.master_seed {
            run.master_seed = v;
        }
        if let Some(v) = r.snapshot_steps {
            run.snapshot_steps = v;
        }
        if let Some(v) = r.record_burn_in {
            run.record_burn_in = v;
        }
    }
    if run.recorded_steps == 0 {
        return Err(ConfigError::InvalidParam {
            key: "recorded_steps".to_string(),
            message: "at least one recorded step is required".to_string(),
        });
    }
    let scenarios = match raw.scenarios {
        None => canonical_scenarios(),
        Some(map) => map
            .into_iter()
            .map(|(name, s)| Scenario {
                name,
                g_annual: s.g,
                d1: s.d1,
                d2: s.d2,
                burn_in_steps: s.burn_in_steps,
                recorded_steps: s.recorded_steps,
                n_runs: s.n_runs,
                master_seed: s.master_seed,
            })
            .collect(),
    };
    Ok(Config {
        params,
        run,
        scenarios,
    })
}
