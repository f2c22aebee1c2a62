//! One-parameter sweeps over independent runs.

use std::fmt;
use std::str::FromStr;

use delaydisp_core::{DampingFamily, DampingProfile, RunConfig};
use rayon::prelude::*;

use crate::config::AnalysisSettings;
use crate::error::{SimError, SimResult};
use crate::runner::{simulate, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Tau,
    Nu,
    Mu,
    Profile,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Tau => "tau",
            Axis::Nu => "nu",
            Axis::Mu => "mu",
            Axis::Profile => "profile",
        }
    }
}

impl FromStr for Axis {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        match s {
            "tau" => Ok(Axis::Tau),
            "nu" => Ok(Axis::Nu),
            "mu" => Ok(Axis::Mu),
            "profile" => Ok(Axis::Profile),
            other => Err(SimError::Config(format!(
                "unknown sweep axis '{other}'; expected tau, nu, mu or profile"
            ))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValue {
    Number(f64),
    Profile(DampingFamily),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(v) => write!(f, "{v}"),
            SweepValue::Profile(family) => {
                let coeffs: Vec<String> = family
                    .coefficients()
                    .iter()
                    .map(|c| c.to_string())
                    .collect();
                write!(f, "{}({})", family.name(), coeffs.join(","))
            }
        }
    }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(text: &str) -> SimResult<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(SimError::Config(format!("unbalanced ')' in '{text}'")));
                }
            }
            ',' if depth == 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(SimError::Config(format!("unbalanced '(' in '{text}'")));
    }
    parts.push(text[start..].trim());
    Ok(parts)
}

fn parse_number(s: &str) -> SimResult<f64> {
    s.parse::<f64>()
        .map_err(|_| SimError::Config(format!("'{s}' is not a number")))
}

/// Parses `name(c1,c2,...)`, for example `combined(1,2,1,2)`.
pub fn parse_profile(s: &str) -> SimResult<DampingFamily> {
    let (name, rest) = s
        .split_once('(')
        .ok_or_else(|| SimError::Config(format!("profile '{s}' must look like name(c1,...)")))?;
    let inner = rest
        .strip_suffix(')')
        .ok_or_else(|| SimError::Config(format!("profile '{s}' is missing ')'")))?;
    let coeffs = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner
            .split(',')
            .map(|c| parse_number(c.trim()))
            .collect::<SimResult<Vec<_>>>()?
    };
    Ok(DampingFamily::from_name(name.trim(), &coeffs)?)
}

/// Parses a comma-separated value list for `axis`. An empty string gives no values.
pub fn parse_values(axis: Axis, text: &str) -> SimResult<Vec<SweepValue>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top_level(text)?
        .into_iter()
        .map(|s| match axis {
            Axis::Profile => parse_profile(s).map(SweepValue::Profile),
            _ => parse_number(s).map(SweepValue::Number),
        })
        .collect()
}

/// Returns `base` with `axis` set to `value`, validated.
pub fn apply(base: &RunConfig, axis: Axis, value: &SweepValue) -> SimResult<RunConfig> {
    let mut config = base.clone();
    match (axis, value) {
        (Axis::Tau, SweepValue::Number(v)) => config.params.tau = *v,
        (Axis::Nu, SweepValue::Number(v)) => config.params.nu = *v,
        (Axis::Mu, SweepValue::Number(v)) => config.params.mu = *v,
        (Axis::Profile, SweepValue::Profile(family)) => {
            config.profile = DampingProfile::new(family.clone(), config.params.ell)?;
        }
        _ => {
            return Err(SimError::Config(format!(
                "value '{value}' does not fit sweep axis '{axis}'"
            )))
        }
    }
    config.validate()?;
    Ok(config)
}

/// Runs every value concurrently; results keep the order of `values`.
///
/// All configurations are validated before any run starts.
pub fn run_sweep(
    base: &RunConfig,
    axis: Axis,
    values: &[SweepValue],
    settings: &AnalysisSettings,
) -> SimResult<Vec<RunResult>> {
    settings.validate()?;
    let configs = values
        .iter()
        .map(|v| apply(base, axis, v))
        .collect::<SimResult<Vec<_>>>()?;
    configs.par_iter().map(|c| simulate(c, settings)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn paren_aware_split() {
        let v = parse_values(Axis::Profile, "constant(1), combined(1,2,1,2),affine(1,1)").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(
            v[1],
            SweepValue::Profile(DampingFamily::Combined {
                b0: 1.0,
                c1: 2.0,
                c2: 1.0,
                k: 2.0
            })
        );
        assert_eq!(v[1].to_string(), "combined(1,2,1,2)");
        assert!(parse_values(Axis::Profile, "constant(1").is_err());
        assert!(parse_values(Axis::Profile, "constant)1(").is_err());
        assert!(parse_values(Axis::Profile, "constant").is_err());
        assert!(parse_values(Axis::Tau, "0.5,x").is_err());
    }

    #[test]
    fn empty_values() {
        assert!(parse_values(Axis::Tau, "").unwrap().is_empty());
        let base = presets::preset("fig9").unwrap().base;
        assert!(
            run_sweep(&base, Axis::Tau, &[], &AnalysisSettings::default())
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn rejects_whole_sweep() {
        let base = presets::preset("fig9").unwrap().base;
        let values = parse_values(Axis::Tau, "0.5,0.0005,1").unwrap();
        let err = run_sweep(&base, Axis::Tau, &values, &AnalysisSettings::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let err = apply(&base, Axis::Nu, &SweepValue::Number(-1.0)).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(apply(&base, Axis::Profile, &SweepValue::Number(1.0)).is_err());
        assert!("kappa".parse::<Axis>().is_err());
    }

    #[test]
    fn ordered_results() {
        let mut base = presets::preset("fig9").unwrap().base;
        base.n = 19;
        base.t_end = 0.02;
        let values = parse_values(Axis::Tau, "0.02,0.005,0.01").unwrap();
        let out = run_sweep(&base, Axis::Tau, &values, &AnalysisSettings::default()).unwrap();
        let taus: Vec<f64> = out.iter().map(|r| r.config.params.tau).collect();
        assert_eq!(taus, [0.02, 0.005, 0.01]);
    }
}
