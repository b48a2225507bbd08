//! Run configuration: a TOML file with `[standardization]`, `[solver]`,
//! and `[backtest]` sections, every field overridable from the command
//! line (command line wins).

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::backtest::{sqrt_252, BacktestConfig, GateMode};
use crate::error::{Error, Result};
use crate::preprocess::{StandardizationMode, StandardizationSpec};
use crate::solver::{L2Form, SolverConfig};

/// Backtest section of the config file. `train_size` has no default; the
/// backtest and sweep commands require it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestSection {
    pub train_size: Option<usize>,
    pub retrain_every: usize,
    pub gate_threshold: f64,
    pub gate_mode: GateMode,
    pub corrective_factor: bool,
    pub annualization_factor: f64,
}

impl Default for BacktestSection {
    fn default() -> Self {
        Self {
            train_size: None,
            retrain_every: 1,
            gate_threshold: 1.0,
            gate_mode: GateMode::TwoSided,
            corrective_factor: false,
            annualization_factor: sqrt_252(),
        }
    }
}

/// Full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Prices CSV (`date,price`).
    pub prices: PathBuf,
    /// Features CSV (`date,<name>,...`).
    pub features: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Fill empty feature cells with the previous row's value instead of
    /// failing.
    #[serde(default)]
    pub forward_fill: bool,
    #[serde(default)]
    pub standardization: StandardizationSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub backtest: BacktestSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text)?;
        Ok(config)
    }

    /// Validation that does not need the data: ranges, file existence,
    /// solver conflicts.
    pub fn validate(&self) -> Result<()> {
        for path in [&self.prices, &self.features] {
            if !path.exists() {
                return Err(Error::InvalidConfig(format!(
                    "input file {} does not exist",
                    path.display()
                )));
            }
        }
        self.standardization.validate()?;
        self.solver.validate()?;
        if let Some(train_size) = self.backtest.train_size {
            if train_size < 3 {
                return Err(Error::InvalidConfig(format!(
                    "train_size must be >= 3, got {train_size}"
                )));
            }
        }
        Ok(())
    }

    /// Assembles the engine config; the backtest and sweep commands need a
    /// training size.
    pub fn backtest_config(&self) -> Result<BacktestConfig> {
        let train_size = self.backtest.train_size.ok_or_else(|| {
            Error::InvalidConfig("backtest.train_size is required for this command".into())
        })?;
        Ok(BacktestConfig {
            train_size,
            retrain_every: self.backtest.retrain_every,
            gate_threshold: self.backtest.gate_threshold,
            gate_mode: self.backtest.gate_mode,
            corrective_factor: self.backtest.corrective_factor,
            annualization_factor: self.backtest.annualization_factor,
            solver: self.solver.clone(),
            std_spec: self.standardization.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Global,
    Rolling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GateModeArg {
    LongOnly,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum L2FormArg {
    Additive,
    Normalized,
}

/// Config path plus command-line overrides for every scalar field.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    pub config: PathBuf,

    #[arg(long, help = "Override: prices CSV path")]
    pub prices: Option<PathBuf>,
    #[arg(long, help = "Override: features CSV path")]
    pub features: Option<PathBuf>,
    #[arg(long, help = "Override: output directory")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, help = "Override: deterministic seed")]
    pub seed: Option<u64>,
    #[arg(long, help = "Override: fill empty feature cells forward")]
    pub forward_fill: Option<bool>,

    #[arg(long, value_enum, help = "Override: standardization mode")]
    pub std_mode: Option<ModeArg>,
    #[arg(long, help = "Override: rolling standardization window")]
    pub std_window: Option<usize>,
    #[arg(long, help = "Override: drop constant feature columns")]
    pub drop_constant: Option<bool>,

    #[arg(long, help = "Override: L2 ridge strength")]
    pub l2_lambda: Option<f64>,
    #[arg(long, value_enum, help = "Override: L2 form")]
    pub l2_form: Option<L2FormArg>,
    #[arg(long, help = "Override: principal components to keep")]
    pub pca_k: Option<usize>,
    #[arg(long, help = "Override: L1 penalty strength")]
    pub l1_lambda: Option<f64>,
    #[arg(long, help = "Override: scale the L1 penalty by max Sharpe")]
    pub l1_scaled: Option<bool>,
    #[arg(long, help = "Override: significance threshold in (0,1]")]
    pub p_threshold: Option<f64>,
    #[arg(long, help = "Override: retry singular covariances with a tiny ridge")]
    pub ridge_fallback: Option<bool>,

    #[arg(long, help = "Override: training window length")]
    pub train_size: Option<usize>,
    #[arg(long, help = "Override: refit cadence in steps")]
    pub retrain_every: Option<usize>,
    #[arg(long, help = "Override: gate z-score threshold")]
    pub gate_threshold: Option<f64>,
    #[arg(long, value_enum, help = "Override: gate mode")]
    pub gate_mode: Option<GateModeArg>,
    #[arg(long, help = "Override: multiply signal by sign of previous PnL")]
    pub corrective_factor: Option<bool>,
    #[arg(long, help = "Override: Sharpe annualization factor")]
    pub annualization_factor: Option<f64>,
}

impl RunArgs {
    /// Loads the config file and applies the overrides on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(v) = &self.prices {
            config.prices = v.clone();
        }
        if let Some(v) = &self.features {
            config.features = v.clone();
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.forward_fill {
            config.forward_fill = v;
        }
        if let Some(v) = self.std_mode {
            config.standardization.mode = match v {
                ModeArg::Global => StandardizationMode::Global,
                ModeArg::Rolling => StandardizationMode::Rolling,
            };
        }
        if let Some(v) = self.std_window {
            config.standardization.window = Some(v);
        }
        if let Some(v) = self.drop_constant {
            config.standardization.drop_constant = v;
        }
        if let Some(v) = self.l2_lambda {
            config.solver.l2_lambda = v;
        }
        if let Some(v) = self.l2_form {
            config.solver.l2_form = match v {
                L2FormArg::Additive => L2Form::Additive,
                L2FormArg::Normalized => L2Form::Normalized,
            };
        }
        if let Some(v) = self.pca_k {
            config.solver.pca_k = Some(v);
        }
        if let Some(v) = self.l1_lambda {
            config.solver.l1_lambda = v;
        }
        if let Some(v) = self.l1_scaled {
            config.solver.l1_scaled = v;
        }
        if let Some(v) = self.p_threshold {
            config.solver.p_threshold = Some(v);
        }
        if let Some(v) = self.ridge_fallback {
            config.solver.ridge_fallback = v;
        }
        if let Some(v) = self.train_size {
            config.backtest.train_size = Some(v);
        }
        if let Some(v) = self.retrain_every {
            config.backtest.retrain_every = v;
        }
        if let Some(v) = self.gate_threshold {
            config.backtest.gate_threshold = v;
        }
        if let Some(v) = self.gate_mode {
            config.backtest.gate_mode = match v {
                GateModeArg::LongOnly => GateMode::LongOnly,
                GateModeArg::TwoSided => GateMode::TwoSided,
            };
        }
        if let Some(v) = self.corrective_factor {
            config.backtest.corrective_factor = v;
        }
        if let Some(v) = self.annualization_factor {
            config.backtest.annualization_factor = v;
        }
        Ok(config)
    }
}
