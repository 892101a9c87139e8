//! Scenario configuration and the TOML loader.
//!
//! Frequencies are ordinary frequencies in Hz. A key may carry a `_2pi`
//! suffix (`omega_2pi = 5e6` for an angular frequency of 2 pi x 5 MHz),
//! and a value may be a string with a unit (`"5 MHz"`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use raman_core::cumulant::PhysicalParams;
use raman_core::engine::SweepAxis;
use raman_core::model::ModelKind;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::scenarios;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Pulse,
    Sweep,
    Steady,
    Spectrum,
    OracleCheck,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Pulse => "pulse",
            RunKind::Sweep => "sweep",
            RunKind::Steady => "steady",
            RunKind::Spectrum => "spectrum",
            RunKind::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What each sweep point computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Pulse peak, timing and widths.
    Pulse,
    /// Steady photon number.
    Steady,
    /// Steady photon number plus the fitted line.
    Spectrum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Axis values: Hz for frequencies, a count for `N`.
    pub values: Vec<f64>,
    pub metric: Metric,
    /// Values are multiples of `N Gamma` (pumping axis only).
    #[serde(default)]
    pub relative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelKind,
    pub kind: RunKind,
    pub params: PhysicalParams,
    /// Sets `gamma12` to this multiple of `N Gamma`.
    pub pumping: Option<f64>,
    /// Pulse horizon (s).
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Ends a pulse once the photon number falls below this fraction of
    /// its maximum.
    pub stop_fraction: Option<f64>,
    /// Bound on the steady-state search (s).
    pub steady_t_max: f64,
    pub sweep: Option<SweepSpec>,
    /// Oracle check: also compare a two-atom pulse with the exact
    /// density-matrix evolution.
    #[serde(default)]
    pub exact_pulse: bool,
}

impl ScenarioConfig {
    pub fn new(name: &str, model: ModelKind, kind: RunKind) -> Self {
        ScenarioConfig {
            name: name.to_string(),
            model,
            kind,
            params: PhysicalParams::reference(),
            pumping: None,
            t_end: 1e-3,
            rtol: 1e-8,
            atol: 1e-10,
            stop_fraction: None,
            steady_t_max: 2.0,
            sweep: None,
            exact_pulse: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(|e| ConfigError::invalid(e.to_string()))?;
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.t_end) || !positive(self.steady_t_max) {
            return Err(ConfigError::invalid("time horizons must be positive"));
        }
        if !positive(self.rtol) || !positive(self.atol) {
            return Err(ConfigError::invalid("tolerances must be positive"));
        }
        if let Some(f) = self.stop_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(ConfigError::invalid("stop_fraction must lie in (0, 1)"));
            }
        }
        if let Some(p) = self.pumping {
            if !(p.is_finite() && p >= 0.0) {
                return Err(ConfigError::invalid("pumping must be non-negative"));
            }
        }
        match (&self.sweep, self.kind) {
            (None, RunKind::Sweep) => return Err(ConfigError::invalid("sweep runs need a [sweep] table")),
            (Some(s), RunKind::Sweep) => {
                if s.values.is_empty() {
                    return Err(ConfigError::invalid("sweep needs at least one value"));
                }
                if s.relative && s.axis != SweepAxis::Gamma12 {
                    return Err(ConfigError::invalid("relative sweep values apply to gamma12 only"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    At { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

impl ConfigError {
    fn invalid(m: impl Into<String>) -> Self {
        ConfigError::Invalid(m.into())
    }
}

/// Raw file layout; every key is optional and overrides the base scenario.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<Spanned<String>>,
    name: Option<String>,
    model: Option<Spanned<String>>,
    kind: Option<Spanned<String>>,
    pumping: Option<f64>,
    t_end: Option<f64>,
    rtol: Option<f64>,
    atol: Option<f64>,
    stop_fraction: Option<f64>,
    steady_t_max: Option<f64>,
    exact_pulse: Option<bool>,
    params: Option<BTreeMap<Spanned<String>, Spanned<toml::Value>>>,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Spanned<String>,
    values: Option<Vec<Spanned<toml::Value>>>,
    values_2pi: Option<Vec<Spanned<toml::Value>>>,
    metric: Option<Spanned<String>>,
    relative: Option<bool>,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn at<T>(src: &str, s: &Spanned<T>, message: impl Into<String>) -> ConfigError {
    ConfigError::At { line: line_of(src, s.span().start), message: message.into() }
}

/// `5e6`, `"5e6"` or `"5 MHz"`, in Hz.
fn frequency(src: &str, v: &Spanned<toml::Value>) -> Result<f64, ConfigError> {
    match v.get_ref() {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => parse_with_unit(s).map_err(|m| at(src, v, m)),
        other => Err(at(src, v, format!("expected a number, found {}", other.type_str()))),
    }
}

fn parse_with_unit(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let split = t.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E').unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let x: f64 = num.trim().parse().map_err(|_| format!("cannot parse `{s}` as a number"))?;
    let scale = match unit.trim() {
        "" | "Hz" => 1.0,
        "kHz" => 1e3,
        "MHz" => 1e6,
        "GHz" => 1e9,
        "THz" => 1e12,
        u => return Err(format!("unknown unit `{u}` in `{s}` (expected Hz, kHz, MHz, GHz or THz)")),
    };
    Ok(x * scale)
}

fn number(src: &str, v: &Spanned<toml::Value>) -> Result<f64, ConfigError> {
    match v.get_ref() {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(at(src, v, format!("expected a number, found {}", other.type_str()))),
    }
}

fn set_param(p: &mut PhysicalParams, key: &str, value: f64) -> bool {
    let slot = match key {
        "wc" => &mut p.wc_hz,
        "w31" => &mut p.w31_hz,
        "w32" => &mut p.w32_hz,
        "w21" => &mut p.w21_hz,
        "wd" => &mut p.wd_hz,
        "g31" => &mut p.g31_hz,
        "omega" => &mut p.omega_hz,
        "kappa" => &mut p.kappa_hz,
        "gamma31" => &mut p.gamma31_hz,
        "gamma12" => &mut p.gamma12_hz,
        _ => return false,
    };
    *slot = value;
    true
}

fn is_frequency_axis(axis: SweepAxis) -> bool {
    axis != SweepAxis::N
}

/// Parses a configuration; `fallback` supplies the base when no
/// `scenario` key is given.
pub fn parse_config(src: &str, fallback: Option<&ScenarioConfig>) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| match e.span() {
        Some(span) => ConfigError::At { line: line_of(src, span.start), message: e.message().to_string() },
        None => ConfigError::Invalid(e.message().to_string()),
    })?;
    let mut cfg = match (&raw.scenario, fallback) {
        (Some(name), _) => scenarios::find(name.get_ref())
            .map(|s| s.config)
            .ok_or_else(|| at(src, name, format!("unknown scenario `{}`", name.get_ref())))?,
        (None, Some(base)) => base.clone(),
        (None, None) => ScenarioConfig::new("custom", ModelKind::Full, RunKind::Pulse),
    };
    if let Some(n) = raw.name {
        cfg.name = n;
    }
    if let Some(m) = &raw.model {
        cfg.model = ModelKind::from_str(m.get_ref()).map_err(|e| at(src, m, e))?;
    }
    if let Some(k) = &raw.kind {
        cfg.kind = toml::Value::String(k.get_ref().clone())
            .try_into()
            .map_err(|_| at(src, k, format!("unknown run kind `{}`", k.get_ref())))?;
    }
    cfg.pumping = raw.pumping.or(cfg.pumping);
    cfg.t_end = raw.t_end.unwrap_or(cfg.t_end);
    cfg.rtol = raw.rtol.unwrap_or(cfg.rtol);
    cfg.atol = raw.atol.unwrap_or(cfg.atol);
    cfg.stop_fraction = raw.stop_fraction.or(cfg.stop_fraction);
    cfg.steady_t_max = raw.steady_t_max.unwrap_or(cfg.steady_t_max);
    cfg.exact_pulse = raw.exact_pulse.unwrap_or(cfg.exact_pulse);

    if let Some(params) = &raw.params {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (key, value) in params {
            let name = key.get_ref().as_str();
            let base = name.strip_suffix("_2pi").unwrap_or(name);
            let line = line_of(src, key.span().start);
            if let Some(first) = seen.insert(base, line) {
                return Err(at(src, key, format!("`{base}` already set on line {first}")));
            }
            if base == "n_atoms" || base == "N" {
                if base != name {
                    return Err(at(src, key, "the atom number takes no `_2pi` suffix"));
                }
                cfg.params.n_atoms = number(src, value)?;
            } else if base == "delta" {
                cfg.params = cfg.params.with_raman_detuning(frequency(src, value)?);
            } else if !set_param(&mut cfg.params, base, frequency(src, value)?) {
                return Err(at(src, key, format!("unknown parameter `{name}`")));
            }
        }
    }

    if let Some(s) = &raw.sweep {
        let axis: SweepAxis = s.axis.get_ref().parse().map_err(|e: String| at(src, &s.axis, e))?;
        let values = match (&s.values, &s.values_2pi) {
            (Some(_), Some(_)) => return Err(at(src, &s.axis, "give either `values` or `values_2pi`")),
            (None, None) => return Err(at(src, &s.axis, "sweep needs `values`")),
            (Some(v), None) => {
                let frequencies = is_frequency_axis(axis) && !s.relative.unwrap_or(false);
                v.iter().map(|x| if frequencies { frequency(src, x) } else { number(src, x) }).collect::<Result<Vec<_>, _>>()?
            }
            (None, Some(v)) => {
                if !is_frequency_axis(axis) {
                    return Err(at(src, &s.axis, "`values_2pi` needs a frequency axis"));
                }
                v.iter().map(|x| frequency(src, x)).collect::<Result<Vec<_>, _>>()?
            }
        };
        let metric = match &s.metric {
            Some(m) => toml::Value::String(m.get_ref().clone())
                .try_into()
                .map_err(|_| at(src, m, format!("unknown metric `{}` (expected pulse, steady or spectrum)", m.get_ref())))?,
            None => cfg.sweep.as_ref().map_or(Metric::Pulse, |b| b.metric),
        };
        cfg.sweep = Some(SweepSpec { axis, values, metric, relative: s.relative.unwrap_or(false) });
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, fallback: Option<&ScenarioConfig>) -> Result<ScenarioConfig, ConfigError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&src, fallback)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_atom_number_overridden() {
        let cfg = parse_config("[params]\nN = 2e4\n", None).unwrap();
        let mut expected = PhysicalParams::reference();
        expected.n_atoms = 2e4;
        assert_eq!(cfg.params, expected);
        assert_eq!(cfg.kind, RunKind::Pulse);
    }

    #[test]
    fn suffix_and_units_agree() {
        let a = parse_config("[params]\nomega_2pi = 4e6\n", None).unwrap();
        let b = parse_config("[params]\nomega = \"4 MHz\"\n", None).unwrap();
        let c = parse_config("[params]\nkappa = 1.2e6\nomega = 4000000\n", None).unwrap();
        assert_eq!(a.params.omega_hz, 4e6);
        assert_eq!(a.params, b.params);
        assert_eq!(c.params.omega_hz, 4e6);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("model = \"full\"\n\n[params]\nomegaa = 1.0\n", None).unwrap_err();
        assert!(matches!(e, ConfigError::At { line: 4, .. }), "{e}");
        let e = parse_config("[params]\nkappa = \"3 MHZ\"\n", None).unwrap_err();
        assert!(matches!(e, ConfigError::At { line: 2, .. }), "{e}");
        let e = parse_config("colour = 1\n", None).unwrap_err();
        assert!(matches!(e, ConfigError::At { line: 1, .. }), "{e}");
        let e = parse_config("[params]\nomega = 1e6\nomega_2pi = 2e6\n", None).unwrap_err();
        assert!(matches!(e, ConfigError::At { line: 3, .. }), "{e}");
        let e = parse_config("scenario = \"fig9z\"\n", None).unwrap_err();
        assert!(matches!(e, ConfigError::At { line: 1, .. }), "{e}");
    }

    #[test]
    fn sweep_tables() {
        let cfg = parse_config("kind = \"sweep\"\n[sweep]\naxis = \"Omega\"\nvalues = [\"2.5 MHz\", 5e6]\n", None).unwrap();
        let s = cfg.sweep.unwrap();
        assert_eq!((s.axis, s.values, s.metric), (SweepAxis::Omega, vec![2.5e6, 5e6], Metric::Pulse));
        assert!(parse_config("kind = \"sweep\"\n", None).is_err());
        assert!(parse_config("kind = \"sweep\"\n[sweep]\naxis = \"N\"\nvalues = [1e4]\nrelative = true\n", None).is_err());
        let rel = parse_config("kind = \"sweep\"\n[sweep]\naxis = \"gamma12\"\nvalues = [0.5]\nrelative = true\nmetric = \"steady\"\n", None)
            .unwrap();
        assert_eq!(rel.sweep.unwrap().values, vec![0.5]);
    }

    #[test]
    fn unit_strings() {
        assert_eq!(parse_with_unit("12.4 kHz").unwrap(), 12.4e3);
        assert_eq!(parse_with_unit("2GHz").unwrap(), 2e9);
        assert_eq!(parse_with_unit("1e3").unwrap(), 1e3);
        assert!(parse_with_unit("3 furlongs").is_err());
        assert!(parse_with_unit("MHz").is_err());
    }
}
