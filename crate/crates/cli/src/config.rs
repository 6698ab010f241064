//! Run configuration: JSON file values merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use screening_core::costs::CostFunction;
use screening_core::distributions::Prior;

/// A configuration problem, reported with the offending field.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn field(name: &str, msg: impl std::fmt::Display) -> Self {
        Self(format!("{name}: {msg}"))
    }
}

/// Bias grid: an explicit list or `n` evenly spaced points from `start` to `stop`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, n: usize },
}

impl GridSpec {
    /// Parses `start:stop:n` or a comma-separated list.
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let err = |m: String| ConfigError::field("b_grid", m);
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            let num = |p: &str| p.trim().parse::<f64>().map_err(|e| err(format!("bad number {p:?}: {e}")));
            let n = parts[2].trim().parse::<usize>().map_err(|e| err(format!("bad count {:?}: {e}", parts[2])))?;
            return Ok(GridSpec::Range { start: num(parts[0])?, stop: num(parts[1])?, n });
        }
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| err(format!("bad number {p:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()
            .map(GridSpec::List)
    }

    pub fn points(&self) -> Result<Vec<f64>, ConfigError> {
        let err = |m: &str| ConfigError::field("b_grid", m);
        let pts = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range { start, stop, n } => match n {
                0 => return Err(err("count must be positive")),
                1 => vec![*start],
                _ => (0..*n).map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64).collect(),
            },
        };
        if pts.is_empty() {
            return Err(err("grid is empty"));
        }
        if !pts.iter().all(|b| b.is_finite() && *b > 0.0) {
            return Err(err("every bias must be positive"));
        }
        if pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(err("grid must be strictly increasing"));
        }
        Ok(pts)
    }
}

/// Every setting a subcommand may read. All fields are optional so that a
/// file and the flags can each supply a subset.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `uniform`, `power:k` or `csv:path`.
    pub prior: Option<String>,
    /// `power:k` or `tabulated:path`.
    pub cost: Option<String>,
    pub q_bar: Option<f64>,
    pub b: Option<f64>,
    pub b_grid: Option<GridSpec>,
    pub cap: Option<usize>,
    /// `auto`, `mussa-rosen`, `bhm` or `bhm-finite`.
    pub regime: Option<String>,
    /// Item count for `bhm-finite`.
    pub items: Option<usize>,
    pub grid_m: Option<usize>,
    /// Obedience tolerance for `verify`.
    pub tol: Option<f64>,
    pub jobs: Option<usize>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())))
    }

    /// Values set in `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            prior: self.prior.or(base.prior),
            cost: self.cost.or(base.cost),
            q_bar: self.q_bar.or(base.q_bar),
            b: self.b.or(base.b),
            b_grid: self.b_grid.or(base.b_grid),
            cap: self.cap.or(base.cap),
            regime: self.regime.or(base.regime),
            items: self.items.or(base.items),
            grid_m: self.grid_m.or(base.grid_m),
            tol: self.tol.or(base.tol),
            jobs: self.jobs.or(base.jobs),
            output: self.output.or(base.output),
        }
    }

    pub fn prior(&self) -> Result<Prior, ConfigError> {
        let spec = self.prior.as_deref().unwrap_or("uniform");
        let err = |m: String| ConfigError::field("prior", m);
        match spec.split_once(':') {
            None if spec == "uniform" => Ok(Prior::uniform()),
            Some(("power", k)) => {
                let k: f64 = k.parse().map_err(|e| err(format!("bad exponent {k:?}: {e}")))?;
                Prior::power_cdf(k).map_err(|e| err(e.to_string()))
            }
            Some(("csv", path)) => Prior::from_csv_path(Path::new(path)).map_err(|e| err(e.to_string())),
            _ => Err(err(format!("expected uniform, power:k or csv:path, got {spec:?}"))),
        }
    }

    pub fn cost(&self) -> Result<CostFunction, ConfigError> {
        let spec = self.cost.as_deref().unwrap_or("power:2");
        let err = |m: String| ConfigError::field("cost", m);
        let cost = match spec.split_once(':') {
            Some(("power", k)) => {
                let k: f64 = k.parse().map_err(|e| err(format!("bad exponent {k:?}: {e}")))?;
                CostFunction::power(k).map_err(|e| err(e.to_string()))?
            }
            Some(("tabulated", path)) => CostFunction::from_csv_path(Path::new(path)).map_err(|e| err(e.to_string()))?,
            _ => return Err(err(format!("expected power:k or tabulated:path, got {spec:?}"))),
        };
        match self.q_bar {
            Some(q) => cost.with_q_bar(q).map_err(|e| ConfigError::field("q_bar", e)),
            None => Ok(cost),
        }
    }

    /// The bias, required and positive.
    pub fn bias(&self) -> Result<f64, ConfigError> {
        match self.b {
            None => Err(ConfigError::field("b", "required")),
            Some(b) if b.is_finite() && b > 0.0 => Ok(b),
            Some(b) => Err(ConfigError::field("b", format!("must be positive, got {b}"))),
        }
    }

    pub fn cap(&self) -> Result<Option<usize>, ConfigError> {
        match self.cap {
            Some(0) => Err(ConfigError::field("cap", "must be at least 1")),
            c => Ok(c),
        }
    }

    pub fn grid_m(&self) -> Result<usize, ConfigError> {
        let m = self.grid_m.unwrap_or(screening_core::persuasion::DEFAULT_GRID_M);
        if m < screening_core::persuasion::MIN_GRID_M {
            return Err(ConfigError::field(
                "grid_m",
                format!("must be at least {}, got {m}", screening_core::persuasion::MIN_GRID_M),
            ));
        }
        Ok(m)
    }

    pub fn tol(&self) -> Result<Option<f64>, ConfigError> {
        match self.tol {
            Some(t) if !(t.is_finite() && t >= 0.0) => Err(ConfigError::field("tol", format!("must be nonnegative, got {t}"))),
            t => Ok(t),
        }
    }

    pub fn jobs(&self) -> Result<usize, ConfigError> {
        match self.jobs {
            Some(0) => Err(ConfigError::field("jobs", "must be at least 1")),
            j => Ok(j.unwrap_or(1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(GridSpec::parse("0.1,0.2").unwrap().points().unwrap(), vec![0.1, 0.2]);
        let pts = GridSpec::parse("0.1:0.3:3").unwrap().points().unwrap();
        assert!((pts[1] - 0.2).abs() < 1e-15 && pts.len() == 3);
        assert!(GridSpec::parse("0.2,0.1").unwrap().points().is_err());
        assert!(GridSpec::parse("0,0.1").unwrap().points().is_err());
        assert!(GridSpec::parse("x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig { b: Some(0.1), cap: Some(2), ..Default::default() };
        let flags = RunConfig { b: Some(0.2), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!(merged.b, Some(0.2));
        assert_eq!(merged.cap, Some(2));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<RunConfig, _> = serde_json::from_str(r#"{"bias": 0.1}"#);
        assert!(r.unwrap_err().to_string().contains("bias"));
        let r: RunConfig = serde_json::from_str(r#"{"b_grid": {"start": 0.1, "stop": 0.2, "n": 2}}"#).unwrap();
        assert_eq!(r.b_grid.unwrap().points().unwrap(), vec![0.1, 0.2]);
    }

    #[test]
    fn spec_strings() {
        let c = RunConfig { prior: Some("power:2".into()), cost: Some("power:3".into()), ..Default::default() };
        assert!(c.prior().is_ok() && c.cost().is_ok());
        let bad = RunConfig { prior: Some("normal".into()), ..Default::default() };
        assert!(bad.prior().unwrap_err().0.starts_with("prior:"));
        let bad = RunConfig { b: Some(0.0), ..Default::default() };
        assert!(bad.bias().unwrap_err().0.starts_with("b:"));
    }
}
