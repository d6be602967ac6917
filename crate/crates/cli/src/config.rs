//! JSON run configuration.

use std::fmt;

use metastab::disorder::{DisorderDistribution, SamplingMode};
use metastab::landscape::beta_critical;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at {}: {}", self.path, self.message)
    }
}

/// Absolute value, or a multiple of beta_c written "113*beta_c".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Absolute(f64),
    BetaCMultiple(f64),
}

impl Scalar {
    pub fn resolve(self, beta_c: f64) -> f64 {
        match self {
            Scalar::Absolute(x) => x,
            Scalar::BetaCMultiple(m) => m * beta_c,
        }
    }

    fn parse(text: &str) -> Result<Scalar, String> {
        let t = text.trim();
        if t == "beta_c" {
            return Ok(Scalar::BetaCMultiple(1.0));
        }
        if let Some(head) = t.strip_suffix("beta_c") {
            let head = head.trim_end();
            let head = head.strip_suffix('*').ok_or_else(|| format!("expected \"<number>*beta_c\", got {text:?}"))?;
            let m: f64 = head.trim().parse().map_err(|_| format!("bad multiplier in {text:?}"))?;
            return Ok(Scalar::BetaCMultiple(m));
        }
        t.parse().map(Scalar::Absolute).map_err(|_| format!("not a number or \"<number>*beta_c\": {text:?}"))
    }

    fn from_value(v: &serde_json::Value) -> Result<Scalar, String> {
        match v {
            serde_json::Value::Number(x) => Ok(Scalar::Absolute(x.as_f64().expect("finite json number"))),
            serde_json::Value::String(s) => Scalar::parse(s),
            other => Err(format!("expected a number or \"<number>*beta_c\", got {other}")),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Absolute(x) => s.serialize_f64(*x),
            Scalar::BetaCMultiple(m) => s.serialize_str(&format!("{m}*beta_c")),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Scalar::from_value(&serde_json::Value::deserialize(d)?).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub min: Scalar,
    pub max: Scalar,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSpec {
    Value(Scalar),
    Sweep(Sweep),
}

impl Default for ParamSpec {
    fn default() -> Self {
        ParamSpec::Value(Scalar::Absolute(0.0))
    }
}

impl Serialize for ParamSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ParamSpec::Value(x) => x.serialize(s),
            ParamSpec::Sweep(w) => w.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ParamSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.is_object() {
            serde_json::from_value(v).map(ParamSpec::Sweep).map_err(|e| D::Error::custom(format!("sweep: {e}")))
        } else {
            Scalar::from_value(&v).map(ParamSpec::Value).map_err(D::Error::custom)
        }
    }
}

impl ParamSpec {
    pub fn values(&self, beta_c: f64) -> Vec<f64> {
        match self {
            ParamSpec::Value(x) => vec![x.resolve(beta_c)],
            ParamSpec::Sweep(w) => {
                let (lo, hi) = (w.min.resolve(beta_c), w.max.resolve(beta_c));
                let last = (w.count - 1) as f64;
                (0..w.count)
                    .map(|i| {
                        let t = i as f64 / last;
                        match w.scale {
                            Scale::Linear => lo + (hi - lo) * t,
                            Scale::Log => lo * (hi / lo).powf(t),
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, path: &str, beta_c: f64, allow_beta_c: bool) -> Result<(), ConfigError> {
        let check = |sub: &str, x: &Scalar| -> Result<f64, ConfigError> {
            if !allow_beta_c && matches!(x, Scalar::BetaCMultiple(_)) {
                return Err(ConfigError::new(format!("{path}{sub}"), "beta_c multiples apply to beta only"));
            }
            let v = x.resolve(beta_c);
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::new(format!("{path}{sub}"), format!("{v} must be finite and >= 0")));
            }
            Ok(v)
        };
        match self {
            ParamSpec::Value(x) => check("", x).map(|_| ()),
            ParamSpec::Sweep(w) => {
                let lo = check(".min", &w.min)?;
                let hi = check(".max", &w.max)?;
                if w.count < 2 {
                    return Err(ConfigError::new(format!("{path}.count"), format!("{} < 2", w.count)));
                }
                if !(lo < hi) {
                    return Err(ConfigError::new(format!("{path}.max"), format!("max {hi} not above min {lo}")));
                }
                if w.scale == Scale::Log && lo <= 0.0 {
                    return Err(ConfigError::new(format!("{path}.min"), "log sweep needs min > 0"));
                }
                Ok(())
            }
        }
    }
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub landscape: String,
    pub tcurve: String,
    pub phase_diagram: String,
    pub phase_grid: String,
    pub prediction: String,
    pub samples: String,
    pub summary: String,
    pub validation: String,
    pub fluctuations: String,
    pub histogram: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            dir: None,
            landscape: "landscape.json".into(),
            tcurve: "tcurve.csv".into(),
            phase_diagram: "phase_diagram.csv".into(),
            phase_grid: "phase_grid.csv".into(),
            prediction: "prediction.json".into(),
            samples: "samples.csv".into(),
            summary: "summary.json".into(),
            validation: "validation.csv".into(),
            fluctuations: "fluctuations.json".into(),
            histogram: "fluctuation_histogram.csv".into(),
        }
    }
}

fn default_trials() -> u64 {
    1000
}

fn default_sampling() -> SamplingMode {
    SamplingMode::ExactProportions
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub distribution: DisorderDistribution,
    pub beta: ParamSpec,
    #[serde(default)]
    pub h: ParamSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// System sizes for `validate`; defaults to `[n]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<u64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingMode,
    /// Index of the metastable minimum among the critical points; by default
    /// the minimum of highest free energy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimum: Option<usize>,
    /// Disorder draws for `fluctuations`; defaults to `trials`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder_draws: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { "config".to_string() } else { path }, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn beta_c(&self) -> f64 {
        beta_critical(&self.distribution)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let beta_c = self.beta_c();
        self.beta.validate("beta", beta_c, true)?;
        self.h.validate("h", beta_c, false)?;
        if let ParamSpec::Value(x) = &self.beta {
            if !(x.resolve(beta_c) > 0.0) {
                return Err(ConfigError::new("beta", "must be > 0"));
            }
        }
        if self.n == Some(0) {
            return Err(ConfigError::new("n", "must be >= 1"));
        }
        if let Some(ns) = &self.n_values {
            if ns.is_empty() {
                return Err(ConfigError::new("n_values", "empty list"));
            }
            if let Some(i) = ns.iter().position(|&n| n == 0) {
                return Err(ConfigError::new(format!("n_values[{i}]"), "must be >= 1"));
            }
        }
        if self.trials < 1 {
            return Err(ConfigError::new("trials", "must be >= 1"));
        }
        if self.disorder_draws == Some(0) {
            return Err(ConfigError::new("disorder_draws", "must be >= 1"));
        }
        if self.max_steps == Some(0) {
            return Err(ConfigError::new("max_steps", "must be >= 1"));
        }
        Ok(())
    }

    pub fn require_n(&self) -> Result<u64, ConfigError> {
        self.n.ok_or_else(|| ConfigError::new("n", "required by this command"))
    }

    pub fn n_list(&self) -> Result<Vec<u64>, ConfigError> {
        match (&self.n_values, self.n) {
            (Some(ns), _) => Ok(ns.clone()),
            (None, Some(n)) => Ok(vec![n]),
            (None, None) => Err(ConfigError::new("n_values", "required by validate (or give n)")),
        }
    }

    pub fn single_beta(&self) -> Result<f64, ConfigError> {
        match &self.beta {
            ParamSpec::Value(x) => Ok(x.resolve(self.beta_c())),
            ParamSpec::Sweep(_) => Err(ConfigError::new("beta", "a single value is required by this command")),
        }
    }

    pub fn single_h(&self) -> Result<f64, ConfigError> {
        match &self.h {
            ParamSpec::Value(x) => Ok(x.resolve(self.beta_c())),
            ParamSpec::Sweep(_) => Err(ConfigError::new("h", "a single value is required by this command")),
        }
    }
}
