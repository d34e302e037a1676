use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::closed_loop::{LoopConfig, SignalSpec};
use crate::error::{Error, Result};
use crate::lti::RationalTF;
use crate::signals::{PrbsSpec, RngStream};

/// Transfer function section: ascending coefficient arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfSection {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TfSection {
    pub fn to_tf(&self, what: &str) -> Result<RationalTF> {
        if self.num.iter().chain(&self.den).any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("[{what}] has non-finite coefficients")));
        }
        let tf = RationalTF::from_coeffs(&self.num, &self.den).map_err(|e| Error::Config(format!("[{what}]: {e}")))?;
        if !tf.is_proper() {
            return Err(Error::Config(format!("[{what}] is improper")));
        }
        Ok(tf)
    }

    pub fn from_tf(tf: &RationalTF) -> Self {
        TfSection {
            num: tf.num().coeffs().to_vec(),
            den: tf.den().coeffs().to_vec(),
        }
    }
}

/// Where the PRBS enters the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    R1,
    #[default]
    R2,
}

fn default_r1_sign() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationSection {
    pub order: usize,
    pub amplitude: f64,
    pub periods: usize,
    pub sigma: f64,
    #[serde(default)]
    pub channel: Channel,
    #[serde(default = "default_r1_sign")]
    pub r1_sign: f64,
    /// Overrides `periods * (2^order - 1)`; the PRBS wraps periodically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
}

impl ExcitationSection {
    pub fn length(&self) -> usize {
        self.length.unwrap_or(self.periods * ((1usize << self.order) - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dslp,
    DualYoula,
    Coprime,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dslp => "dslp",
            Method::DualYoula => "dual_youla",
            Method::Coprime => "coprime",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Nominal plant for the baselines, as written in the config file.
///
/// Either the keyword `"zero"`, the keyword `"two_stage"`, or an inline table
/// `{ label, num, den }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NominalSpec {
    Keyword(String),
    Expr { label: String, num: Vec<f64>, den: Vec<f64> },
}

/// Validated nominal choice.
#[derive(Debug, Clone, PartialEq)]
pub enum Nominal {
    Zero,
    /// Dual-Youla with `G0 = 0` on a first dataset, its estimate reused as `G0`
    /// on a second, independent dataset.
    TwoStage,
    Expr { label: String, tf: RationalTF },
}

impl Nominal {
    pub fn label(&self) -> &str {
        match self {
            Nominal::Zero => "zero",
            Nominal::TwoStage => "two_stage",
            Nominal::Expr { label, .. } => label,
        }
    }
}

impl NominalSpec {
    pub fn resolve(&self) -> Result<Nominal> {
        match self {
            NominalSpec::Keyword(k) if k == "zero" => Ok(Nominal::Zero),
            NominalSpec::Keyword(k) if k == "two_stage" => Ok(Nominal::TwoStage),
            NominalSpec::Keyword(k) => Err(Error::Config(format!(
                "unknown nominal `{k}` (expected \"zero\", \"two_stage\" or {{ label, num, den }})"
            ))),
            NominalSpec::Expr { label, num, den } => {
                if label.is_empty() || matches!(label.as_str(), "zero" | "two_stage" | "two_stage_s1" | "-") || label.contains(',') {
                    return Err(Error::Config(format!("nominal label `{label}` is reserved or invalid")));
                }
                let tf = TfSection {
                    num: num.clone(),
                    den: den.clone(),
                }
                .to_tf(&format!("nominal {label}"))?;
                Ok(Nominal::Expr { label: label.clone(), tf })
            }
        }
    }
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    pub horizon: usize,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub nominals: Vec<NominalSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Metric grid size; defaults to the nominal data length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub plant: TfSection,
    pub controller: TfSection,
    pub noise_filter: TfSection,
    pub excitation: ExcitationSection,
    pub estimation: EstimationSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Stream tag for the first dataset of a trial.
pub const PURPOSE_PRIMARY: u64 = 1;
/// Stream tag for the second dataset of a two-stage trial.
pub const PURPOSE_SECOND_STAGE: u64 = 2;

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.to_tf("plant")?;
        self.controller.to_tf("controller")?;
        self.noise_filter.to_tf("noise_filter")?;
        let ex = &self.excitation;
        if !(2..=16).contains(&ex.order) {
            return Err(Error::Config(format!("excitation order {} outside 2..=16", ex.order)));
        }
        if ex.periods == 0 {
            return Err(Error::Config("excitation periods must be positive".into()));
        }
        if !ex.amplitude.is_finite() || !ex.sigma.is_finite() || ex.sigma < 0.0 || !ex.r1_sign.is_finite() {
            return Err(Error::Config("amplitude, sigma and r1_sign must be finite, sigma >= 0".into()));
        }
        let est = &self.estimation;
        if est.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if est.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if est.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &est.methods {
            if !seen.insert(*m) {
                return Err(Error::Config(format!("method {m} listed twice")));
            }
        }
        let nominals = self.nominals()?;
        if nominals.is_empty() && est.methods.iter().any(|m| *m != Method::Dslp) {
            return Err(Error::Config("baseline methods need at least one nominal".into()));
        }
        let mut labels = std::collections::BTreeSet::new();
        for n in &nominals {
            if !labels.insert(n.label().to_string()) {
                return Err(Error::Config(format!("nominal `{}` listed twice", n.label())));
            }
        }
        if ex.length() <= est.horizon {
            return Err(Error::LengthTooShort {
                length: ex.length(),
                horizon: est.horizon,
            });
        }
        if self.grid_size() < 2 {
            return Err(Error::Config("grid_size must be at least 2".into()));
        }
        Ok(())
    }

    pub fn nominals(&self) -> Result<Vec<Nominal>> {
        self.estimation.nominals.iter().map(NominalSpec::resolve).collect()
    }

    pub fn plant_tf(&self) -> Result<RationalTF> {
        self.plant.to_tf("plant")
    }

    pub fn controller_tf(&self) -> Result<RationalTF> {
        self.controller.to_tf("controller")
    }

    pub fn length(&self) -> usize {
        self.excitation.length()
    }

    pub fn grid_size(&self) -> usize {
        self.estimation
            .grid_size
            .unwrap_or_else(|| self.excitation.periods * ((1usize << self.excitation.order) - 1))
    }

    pub fn with_length(&self, length: usize) -> Self {
        let mut c = self.clone();
        if c.estimation.grid_size.is_none() {
            c.estimation.grid_size = Some(self.grid_size());
        }
        c.excitation.length = Some(length);
        c
    }

    /// RNG stream for one dataset of one trial: `(trial << 8) | purpose`.
    pub fn rng_stream(&self, trial: usize, purpose: u64) -> RngStream {
        RngStream::new(self.estimation.seed, ((trial as u64) << 8) | purpose)
    }

    pub fn loop_config(&self, trial: usize, purpose: u64) -> Result<LoopConfig> {
        let ex = &self.excitation;
        let prbs = SignalSpec::Prbs(PrbsSpec::new(ex.order, ex.amplitude, ex.periods));
        let (r1, r2) = match ex.channel {
            Channel::R1 => (prbs, SignalSpec::Zero),
            Channel::R2 => (SignalSpec::Zero, prbs),
        };
        Ok(LoopConfig {
            plant: self.plant_tf()?,
            controller: self.controller_tf()?,
            noise_filter: self.noise_filter.to_tf("noise_filter")?,
            r1,
            r2,
            length: ex.length(),
            sigma: ex.sigma,
            rng: self.rng_stream(trial, purpose),
            r1_sign: ex.r1_sign,
        })
    }
}

/// Built-in configuration.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

fn benchmark_with_controller(name: &str, controller: TfSection) -> ExperimentConfig {
    ExperimentConfig {
        name: Some(name.to_string()),
        plant: TfSection {
            num: vec![0.0, 0.0, 1.0],
            den: vec![0.89, -1.6, 1.0],
        },
        controller,
        noise_filter: TfSection {
            num: vec![-0.3338, 1.045, -1.56, 1.0],
            den: vec![-0.6675, 2.09, -2.35, 1.0],
        },
        excitation: ExcitationSection {
            order: 9,
            amplitude: 10.0,
            periods: 10,
            sigma: 2.0,
            channel: Channel::R2,
            r1_sign: 1.0,
            length: None,
        },
        estimation: EstimationSection {
            horizon: 15,
            methods: vec![Method::Dslp, Method::DualYoula, Method::Coprime],
            nominals: vec![
                NominalSpec::Expr {
                    label: "g0_a".into(),
                    num: vec![-1.0],
                    den: vec![0.5, 1.0],
                },
                NominalSpec::Keyword("zero".into()),
                NominalSpec::Keyword("two_stage".into()),
            ],
            trials: 100,
            seed: 2020,
            grid_size: Some(5110),
        },
        output: OutputSection::default(),
    }
}

pub fn presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "benchmark",
            description: "second-order resonant plant, strictly proper K = -(z-0.8)/z^2, PRBS on r2, sigma 2, T 15",
            config: benchmark_with_controller(
                "benchmark",
                TfSection {
                    num: vec![0.8, -1.0],
                    den: vec![0.0, 0.0, 1.0],
                },
            ),
        },
        Preset {
            name: "benchmark_proper",
            description: "same loop with the proper controller K = -(z-0.8)/z",
            config: benchmark_with_controller(
                "benchmark_proper",
                TfSection {
                    num: vec![0.8, -1.0],
                    den: vec![0.0, 1.0],
                },
            ),
        },
    ]
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    presets().into_iter().find(|p| p.name == name).map(|p| p.config)
}
