//! Run configuration: a strict TOML schema mapped onto the solver types.

use std::path::Path;

use elm_core::lagrangian::{DualUpdate, SolverConfig, StepSchedule, Tracker};
use elm_core::methods::Method;
use elm_core::oracle::{NoiseKind, NoiseModel};
use elm_core::problems::{ProblemKind, SlackNetOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub run: RunSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    AffineL1 {
        n: usize,
        p: usize,
        #[serde(default)]
        seed: u64,
    },
    SlackL1Net {
        #[serde(default = "default_widths")]
        widths: Vec<usize>,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "default_train_size")]
        train_size: usize,
        #[serde(default = "default_test_size")]
        test_size: usize,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
        #[serde(default)]
        dataset_seed: u64,
        #[serde(default = "one_u64")]
        init_seed: u64,
        #[serde(default = "one")]
        spread: f64,
    },
    StochasticAffine {
        n: usize,
        p: usize,
        noise_scale: f64,
        #[serde(default)]
        seed: u64,
    },
    #[serde(rename = "exactness_1d")]
    Exactness1d { slope: f64 },
}

impl ProblemSpec {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Self::AffineL1 { .. } => ProblemKind::AffineL1,
            Self::SlackL1Net { .. } => ProblemKind::SlackL1Net,
            Self::StochasticAffine { .. } => ProblemKind::StochasticAffine,
            Self::Exactness1d { .. } => ProblemKind::Exactness1d,
        }
    }

    pub fn net_options(&self) -> Option<SlackNetOptions> {
        match self {
            Self::SlackL1Net {
                widths,
                radius,
                train_size,
                test_size,
                batch_size,
                dataset_seed,
                init_seed,
                spread,
            } => Some(SlackNetOptions {
                widths: widths.clone(),
                radius: *radius,
                train_size: *train_size,
                test_size: *test_size,
                batch_size: *batch_size,
                dataset_seed: *dataset_seed,
                init_seed: *init_seed,
                spread: *spread,
            }),
            _ => None,
        }
    }
}

fn default_widths() -> Vec<usize> {
    vec![2, 8, 2]
}
fn default_train_size() -> usize {
    256
}
fn default_test_size() -> usize {
    128
}
fn default_batch_size() -> usize {
    32
}
fn one() -> f64 {
    1.0
}
fn one_u64() -> u64 {
    1
}
fn default_record_every() -> usize {
    10
}
fn default_kkt_probe() -> f64 {
    1e-3
}
fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub rho: f64,
    pub beta: f64,
    /// Constant dual stepsize `θ_k = θ₀`.
    pub theta: f64,
    pub max_iters: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_kkt_probe")]
    pub kkt_probe: f64,
    pub method: MethodSpec,
    pub eta: EtaSpec,
    #[serde(default)]
    pub tracker: TrackerSpec,
    #[serde(default)]
    pub dual: DualSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    // Braces make serde apply `deny_unknown_fields` to the variant.
    ProxSgd {},
    ProxSgdm { tau: f64, alpha: f64 },
    ProxAdam { tau1: f64, tau2: f64, alpha: f64, eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaSpec {
    Constant {
        value: f64,
    },
    Power {
        scale: f64,
        exponent: f64,
    },
    /// `epoch_len` defaults to the problem's minibatch steps per epoch.
    InvSqrtEpoch {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epoch_len: Option<usize>,
    },
    InvSqrtTime {
        scale: f64,
        horizon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrackerSpec {
    Exact {},
    Correction { tau_tilde: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DualSpec {
    Regu {},
    Ialm {
        beta_tilde: f64,
        sigma: f64,
        theta_tilde: f64,
        #[serde(default = "one_usize")]
        inner_steps: usize,
    },
}

impl Default for TrackerSpec {
    fn default() -> Self {
        Self::Exact {}
    }
}

impl Default for DualSpec {
    fn default() -> Self {
        Self::Regu {}
    }
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub bound: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::None,
            bound: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Base seed; repetition `r` uses `seed + r`.
    #[serde(default)]
    pub seed: u64,
    /// Column prefix in comparison tables; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            repetitions: default_repetitions(),
            seed: 0,
            label: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that can be checked without building the problem.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.run.repetitions == 0 {
            return Err(CliError::Config("run.repetitions must be >= 1".into()));
        }
        if self.problem.kind().is_stochastic() && !matches!(self.solver.tracker, TrackerSpec::Correction { .. }) {
            return Err(CliError::Config(
                "stochastic_affine has expectation constraints and needs tracker.kind = \"correction\"".into(),
            ));
        }
        if matches!(self.solver.eta, EtaSpec::InvSqrtEpoch { epoch_len: None, .. })
            && self.problem.kind() != ProblemKind::SlackL1Net
        {
            return Err(CliError::Config(
                "eta.epoch_len is required for problems without minibatches".into(),
            ));
        }
        self.solver_config(0, Some(1))?;
        Ok(())
    }

    /// Core solver configuration for repetition seed `seed`. `steps_per_epoch`
    /// fills an omitted epoch length.
    pub fn solver_config(&self, seed: u64, steps_per_epoch: Option<usize>) -> Result<SolverConfig<f64>, CliError> {
        let s = &self.solver;
        let method = match s.method {
            MethodSpec::ProxSgd {} => Ok(Method::sgd()),
            MethodSpec::ProxSgdm { tau, alpha } => Method::sgdm(tau, alpha),
            MethodSpec::ProxAdam { tau1, tau2, alpha, eps } => Method::adam(tau1, tau2, alpha, eps),
        }
        .map_err(config_error)?;
        let eta = match s.eta {
            EtaSpec::Constant { value } => StepSchedule::Constant(value),
            EtaSpec::Power { scale, exponent } => StepSchedule::Power { scale, exponent },
            EtaSpec::InvSqrtEpoch { scale, epoch_len } => StepSchedule::InvSqrtEpoch {
                scale,
                epoch_len: epoch_len
                    .or(steps_per_epoch)
                    .ok_or_else(|| CliError::Config("eta.epoch_len is required".into()))?,
            },
            EtaSpec::InvSqrtTime { scale, horizon } => StepSchedule::InvSqrtTime { scale, horizon },
        };
        let tracker = match s.tracker {
            TrackerSpec::Exact {} => Tracker::Exact,
            TrackerSpec::Correction { tau_tilde } => Tracker::Correction { tau_tilde },
        };
        let dual = match s.dual {
            DualSpec::Regu {} => DualUpdate::Regu,
            DualSpec::Ialm {
                beta_tilde,
                sigma,
                theta_tilde,
                inner_steps,
            } => DualUpdate::Ialm {
                beta_tilde,
                sigma,
                theta_tilde,
                inner_steps,
            },
        };
        let noise = NoiseModel {
            kind: s.noise.kind,
            bound: s.noise.bound,
            seed: noise_seed(seed),
        };
        let mut cfg = SolverConfig::new(s.rho, s.beta, s.theta, eta, method);
        cfg.tracker = tracker;
        cfg.dual = dual;
        cfg.noise = noise;
        cfg.max_iters = s.max_iters;
        cfg.record_every = s.record_every;
        cfg.kkt_probe = s.kkt_probe;
        cfg.seed = seed;
        cfg.validate().map_err(config_error)?;
        Ok(cfg)
    }

    /// Seed of repetition `rep`.
    pub fn repetition_seed(&self, rep: usize) -> u64 {
        self.run.seed.wrapping_add(rep as u64)
    }

    /// Returns a copy with the dotted key `param` set to `value`, re-validated.
    /// Keys outside the schema are reported as unknown parameters.
    pub fn with_parameter(&self, param: &str, value: f64) -> Result<Self, CliError> {
        let base: toml::Table = toml::from_str(&self.to_toml_string()).expect("serialized config parses");
        let parts: Vec<&str> = param.split('.').collect();
        let existing = parent_table(&base, &parts)
            .ok_or_else(|| CliError::UnknownParameter(param.into()))?
            .get(*parts.last().expect("split yields at least one part"));
        let integral = value.fract() == 0.0 && value.abs() < 9.0e15;
        let candidates = match existing {
            Some(toml::Value::Integer(_)) if integral => vec![toml::Value::Integer(value as i64)],
            Some(toml::Value::Integer(_)) => {
                return Err(CliError::Config(format!("{param} needs an integer value, got {value}")));
            }
            Some(toml::Value::Float(_)) => vec![toml::Value::Float(value)],
            None if integral => vec![toml::Value::Integer(value as i64), toml::Value::Float(value)],
            None => vec![toml::Value::Float(value)],
            Some(_) => return Err(CliError::UnknownParameter(param.into())),
        };
        for candidate in candidates {
            let mut table = base.clone();
            set_leaf(&mut table, &parts, candidate);
            let text = toml::to_string(&table).expect("table serializes");
            match toml::from_str::<RunConfig>(&text) {
                Ok(cfg) => {
                    cfg.validate()?;
                    return Ok(cfg);
                }
                Err(e) if e.message().contains("unknown field") => {
                    return Err(CliError::UnknownParameter(param.into()));
                }
                Err(_) => continue,
            }
        }
        Err(CliError::Config(format!("value {value} is not valid for {param}")))
    }
}

fn parent_table<'a>(table: &'a toml::Table, parts: &[&str]) -> Option<&'a toml::Table> {
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        cur = cur.get(*part)?.as_table()?;
    }
    Some(cur)
}

fn set_leaf(table: &mut toml::Table, parts: &[&str], value: toml::Value) {
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        cur = cur
            .get_mut(*part)
            .and_then(toml::Value::as_table_mut)
            .expect("parent checked by parent_table");
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
}

fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

fn config_error(e: elm_core::Error) -> CliError {
    use elm_core::Error;
    match e {
        Error::DualStepOutOfRange { theta, beta } => CliError::Config(format!(
            "dual stepsize bounds violated: need 0 < theta_min <= theta_max < beta (theta={theta}, beta={beta})"
        )),
        other => CliError::Config(other.to_string()),
    }
}
