//! Flat dotted-key configuration (`beam.tension = 1.0`).
//!
//! Files are parsed as TOML; nested tables are flattened, so `[beam]`
//! sections and dotted keys are interchangeable. Every key must appear in
//! [`REGISTRY`].

use std::collections::BTreeMap;
use std::fmt;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Str,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Debug formatting round-trips and always keeps a decimal point.
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => write!(f, "{}", toml::Value::String(s.clone())),
        }
    }
}

pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    /// `None` for keys whose default depends on other values.
    pub default: Option<DefaultValue>,
    pub help: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub enum DefaultValue {
    Float(f64),
    Int(i64),
    Str(&'static str),
}

const fn float(key: &'static str, v: f64, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        kind: Kind::Float,
        default: Some(DefaultValue::Float(v)),
        help,
    }
}

const fn int(key: &'static str, v: i64, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        kind: Kind::Int,
        default: Some(DefaultValue::Int(v)),
        help,
    }
}

const fn string(key: &'static str, v: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        kind: Kind::Str,
        default: Some(DefaultValue::Str(v)),
        help,
    }
}

const fn optional(key: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        kind: Kind::Float,
        default: None,
        help,
    }
}

pub const REGISTRY: &[KeySpec] = &[
    float("beam.length", 1.0, "beam length l"),
    float("beam.tension", 1.0, "axial tension T"),
    float("beam.gain", 1.0, "tip feedback gain kappa"),
    float("beam.alpha", 0.1, "delayed damping coefficient"),
    float("beam.delay", 1.0, "delay tau"),
    float("beam.xi", 0.2, "history weight xi"),
    int("grid.N", 128, "spatial cells"),
    int("grid.M", 64, "time steps per delay"),
    float("grid.t_f", 50.0, "final time"),
    optional("weights.delta1", "Lyapunov weight delta1"),
    optional("weights.delta2", "Lyapunov weight delta2"),
    optional("weights.eps1", "Young constant eps1"),
    optional("weights.eps2", "Young constant eps2"),
    string("initial.preset", "default", "zero | default | smooth"),
    int("initial.seed", 0, "seed for the smooth preset"),
    int("output.stride", 1, "record every k-th step"),
    optional("fit.t_start", "start of the decay fit window"),
    optional("fit.t_end", "end of the decay fit window"),
    float("sweep.alpha_min", -0.2, "sweep alpha range"),
    float("sweep.alpha_max", 0.2, "sweep alpha range"),
    int("sweep.alpha_count", 5, "sweep alpha points"),
    float("sweep.xi_min", 0.05, "sweep xi range"),
    float("sweep.xi_max", 0.45, "sweep xi range"),
    int("sweep.xi_count", 5, "sweep xi points"),
    float("region.alpha_min", -0.7, "region alpha range"),
    float("region.alpha_max", 0.7, "region alpha range"),
    optional(
        "region.xi_min",
        "region xi lower end (default delta1 / resolution)",
    ),
    optional("region.xi_max", "region xi upper end (default delta1)"),
    int("region.resolution", 201, "points per region axis"),
    string("resolvent.preset", "smooth", "zero | smooth | manufactured"),
    int(
        "resolvent.seed",
        0,
        "seed for the smooth data and Wronskian samples",
    ),
    int("resolvent.base_n", 64, "coarsest of three grid levels"),
    int("resolvent.s_intervals", 16, "history-variable subintervals"),
    int(
        "resolvent.wronskian_samples",
        5,
        "random (x, rho) Wronskian checks",
    ),
];

fn key_spec(key: &str) -> Option<&'static KeySpec> {
    REGISTRY.iter().find(|s| s.key == key)
}

/// Explicitly set values, keyed by dotted name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigMap {
    values: BTreeMap<String, Value>,
}

fn convert(key: &str, raw: &toml::Value) -> Result<Value, CliError> {
    let ks = key_spec(key).ok_or_else(|| CliError::Config(format!("unknown config key `{key}`")))?;
    let mismatch = || CliError::Config(format!("key `{key}` expects {:?}, got `{raw}`", ks.kind));
    match (ks.kind, raw) {
        (Kind::Float, toml::Value::Float(v)) => Ok(Value::Float(*v)),
        (Kind::Float, toml::Value::Integer(v)) => Ok(Value::Float(*v as f64)),
        (Kind::Int, toml::Value::Integer(v)) => Ok(Value::Int(*v)),
        (Kind::Str, toml::Value::String(s)) => Ok(Value::Str(s.clone())),
        _ => Err(mismatch()),
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut ConfigMap) -> Result<(), CliError> {
    for (name, value) in table {
        let key = if prefix.is_empty() {
            name.clone()
        } else {
            format!("{prefix}.{name}")
        };
        match value {
            toml::Value::Table(t) => flatten(&key, t, out)?,
            other => {
                let v = convert(&key, other)?;
                out.values.insert(key, v);
            }
        }
    }
    Ok(())
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
        let mut out = Self::default();
        flatten("", &table, &mut out)?;
        Ok(out)
    }

    /// Applies `key=value`; the value is read as a TOML scalar, falling back
    /// to a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let parsed = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let v = convert(key, &parsed)?;
        self.values.insert(key.to_string(), v);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: Value) -> Result<(), CliError> {
        if key_spec(key).is_none() {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    fn get(&self, key: &str) -> Option<Value> {
        self.values.get(key).cloned().or_else(|| {
            key_spec(key).expect("registered key").default.map(|d| match d {
                DefaultValue::Float(v) => Value::Float(v),
                DefaultValue::Int(v) => Value::Int(v),
                DefaultValue::Str(s) => Value::Str(s.to_string()),
            })
        })
    }

    fn float(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Value::Float(v)) => Some(v),
            _ => None,
        }
    }

    fn int(&self, key: &str) -> Result<i64, CliError> {
        match self.get(key) {
            Some(Value::Int(v)) => Ok(v),
            _ => Err(CliError::Config(format!("missing integer `{key}`"))),
        }
    }

    fn count(&self, key: &str) -> Result<usize, CliError> {
        let v = self.int(key)?;
        usize::try_from(v)
            .map_err(|_| CliError::Config(format!("`{key}` must be non-negative, got {v}")))
    }

    fn string(&self, key: &str) -> String {
        match self.get(key) {
            Some(Value::Str(s)) => s,
            _ => String::new(),
        }
    }

    /// Every key with a value, defaults included, one `key = value` per line.
    pub fn resolved_text(&self) -> String {
        let mut out = String::new();
        for s in REGISTRY {
            if let Some(v) = self.get(s.key) {
                out.push_str(&format!("{} = {v}\n", s.key));
            }
        }
        out
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let f = |k: &str| self.float(k).expect("float key with default");
        let beam = BeamSection {
            length: f("beam.length"),
            tension: f("beam.tension"),
            gain: f("beam.gain"),
            alpha: f("beam.alpha"),
            delay: f("beam.delay"),
            xi: f("beam.xi"),
        };
        let initial = match self.string("initial.preset").as_str() {
            "zero" => InitialPreset::Zero,
            "default" => InitialPreset::QuadraticVelocity,
            "smooth" => InitialPreset::Smooth,
            other => {
                return Err(CliError::Config(format!(
                    "`initial.preset`: unknown preset `{other}` (zero, default, smooth)"
                )))
            }
        };
        let resolvent_preset = match self.string("resolvent.preset").as_str() {
            "zero" => StaticPreset::Zero,
            "smooth" => StaticPreset::Smooth,
            "manufactured" => StaticPreset::Manufactured,
            other => {
                return Err(CliError::Config(format!(
                    "`resolvent.preset`: unknown preset `{other}` (zero, smooth, manufactured)"
                )))
            }
        };
        let weights = WeightsSection {
            delta1: self.float("weights.delta1"),
            delta2: self.float("weights.delta2"),
            eps1: self.float("weights.eps1"),
            eps2: self.float("weights.eps2"),
        };
        if weights.delta1.is_some() != weights.delta2.is_some() {
            return Err(CliError::Config(
                "`weights.delta1` and `weights.delta2` must be set together".into(),
            ));
        }
        if weights.delta1.is_none() && (weights.eps1.is_some() || weights.eps2.is_some()) {
            return Err(CliError::Config(
                "`weights.eps1`/`weights.eps2` need `weights.delta1` and `weights.delta2`".into(),
            ));
        }
        let positive = |key: &str| -> Result<usize, CliError> {
            let n = self.count(key)?;
            if n == 0 {
                return Err(CliError::Config(format!("`{key}` must be positive")));
            }
            Ok(n)
        };
        let seed = |key: &str| -> Result<u64, CliError> { Ok(self.count(key)? as u64) };
        Ok(RunConfig {
            beam,
            grid: GridSection {
                n_cells: positive("grid.N")?,
                steps_per_delay: positive("grid.M")?,
                horizon: f("grid.t_f"),
            },
            weights,
            initial,
            initial_seed: seed("initial.seed")?,
            stride: positive("output.stride")?,
            fit_start: self.float("fit.t_start"),
            fit_end: self.float("fit.t_end"),
            sweep: SweepSection {
                alpha_min: f("sweep.alpha_min"),
                alpha_max: f("sweep.alpha_max"),
                alpha_count: positive("sweep.alpha_count")?,
                xi_min: f("sweep.xi_min"),
                xi_max: f("sweep.xi_max"),
                xi_count: positive("sweep.xi_count")?,
            },
            region: RegionSection {
                alpha_min: f("region.alpha_min"),
                alpha_max: f("region.alpha_max"),
                xi_min: self.float("region.xi_min"),
                xi_max: self.float("region.xi_max"),
                resolution: positive("region.resolution")?,
            },
            resolvent: ResolventSection {
                preset: resolvent_preset,
                seed: seed("resolvent.seed")?,
                base_n: positive("resolvent.base_n")?,
                s_intervals: positive("resolvent.s_intervals")?,
                wronskian_samples: self.count("resolvent.wronskian_samples")?,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSection {
    pub length: f64,
    pub tension: f64,
    pub gain: f64,
    pub alpha: f64,
    pub delay: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSection {
    pub n_cells: usize,
    pub steps_per_delay: usize,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightsSection {
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPreset {
    Zero,
    QuadraticVelocity,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticPreset {
    Zero,
    Smooth,
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSection {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_count: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSection {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub xi_min: Option<f64>,
    pub xi_max: Option<f64>,
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSection {
    pub preset: StaticPreset,
    pub seed: u64,
    pub base_n: usize,
    pub s_intervals: usize,
    pub wronskian_samples: usize,
}

/// Typed view of a [`ConfigMap`] with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beam: BeamSection,
    pub grid: GridSection,
    pub weights: WeightsSection,
    pub initial: InitialPreset,
    pub initial_seed: u64,
    pub stride: usize,
    pub fit_start: Option<f64>,
    pub fit_end: Option<f64>,
    pub sweep: SweepSection,
    pub region: RegionSection,
    pub resolvent: ResolventSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        ConfigMap::default()
            .resolve()
            .expect("registry defaults resolve")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = ConfigMap::parse("[beam]\ntension = 0.5\n[grid]\nN = 64\n").unwrap();
        let b = ConfigMap::parse("beam.tension = 0.5\ngrid.N = 64\n").unwrap();
        assert_eq!(a, b);
        let cfg = a.resolve().unwrap();
        assert_eq!(cfg.beam.tension, 0.5);
        assert_eq!(cfg.grid.n_cells, 64);
        assert_eq!(cfg.grid.steps_per_delay, 64);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ConfigMap::parse("beam.tensoin = 1.0").unwrap_err();
        assert!(err.to_string().contains("beam.tensoin"));
        assert_eq!(err.exit_code(), 2);
        let err = ConfigMap::parse("grid.N = 1.5").unwrap_err();
        assert!(err.to_string().contains("grid.N"));
    }

    #[test]
    fn overrides() {
        let mut m = ConfigMap::default();
        m.apply_override("beam.alpha=-0.05").unwrap();
        m.apply_override("initial.preset = smooth").unwrap();
        m.apply_override("grid.t_f=10").unwrap();
        let cfg = m.resolve().unwrap();
        assert_eq!(cfg.beam.alpha, -0.05);
        assert_eq!(cfg.initial, InitialPreset::Smooth);
        assert_eq!(cfg.grid.horizon, 10.0);
        assert!(m.apply_override("nope.key=1").is_err());
        assert!(m.apply_override("beam.alpha").is_err());
    }

    #[test]
    fn resolved_text_round_trips() {
        let mut m =
            ConfigMap::parse("beam.xi = 0.3\nweights.delta1 = 0.5\nweights.delta2 = 0.1").unwrap();
        m.apply_override("initial.preset=zero").unwrap();
        let again = ConfigMap::parse(&m.resolved_text()).unwrap();
        assert_eq!(again.resolve().unwrap(), m.resolve().unwrap());
    }

    #[test]
    fn bad_presets_and_weights() {
        assert!(ConfigMap::parse("initial.preset = \"x\"")
            .unwrap()
            .resolve()
            .is_err());
        assert!(ConfigMap::parse("weights.delta1 = 0.5")
            .unwrap()
            .resolve()
            .is_err());
        assert!(ConfigMap::parse("grid.N = 0").unwrap().resolve().is_err());
    }
}
