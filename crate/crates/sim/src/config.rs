//! Run configuration files.
//!
//! The format is TOML: flat `key = value` lines grouped under section
//! headers, with keys named after the fields of [`RunConfig`].
//!
//! ```toml
//! n = 199
//! dt = 0.001
//! T_end = 10.0
//! bdf_order = 2
//! snapshot_every = 100
//!
//! [params]
//! nu = 0.01
//! mu = 0.001
//! tau = 1.0
//! ell = 1.0
//!
//! [profile]
//! family = "combined"
//! coefficients = [1.0, 2.0, 1.0, 2.0]
//!
//! [history]
//! kind = "constant"
//!
//! [history.u0]
//! shape = "sine"
//! amplitude = 1.0
//! k = 1.0
//! ```

use std::path::Path;

use delaydisp_core::{
    BdfOrder, DampingFamily, DampingProfile, HistorySpec, ModelParams, RunConfig, SpaceProfile,
};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::presets;

/// Settings for the post-run stability analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Free parameter in `(0, 1]` of the stability constants.
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_p() -> f64 {
    delaydisp_core::analysis::DEFAULT_P
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self { p: default_p() }
    }
}

impl AnalysisSettings {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(SimError::Config(format!(
                "analysis.p must lie in (0, 1], got {}",
                self.p
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSection {
    family: String,
    #[serde(default)]
    coefficients: Vec<f64>,
}

fn default_bdf_order() -> BdfOrder {
    BdfOrder::Two
}

fn default_snapshot_every() -> usize {
    presets::SNAPSHOT_EVERY
}

fn default_history() -> HistorySpec {
    HistorySpec::constant(SpaceProfile::Sine {
        amplitude: 1.0,
        k: 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n: usize,
    dt: f64,
    #[serde(rename = "T_end")]
    t_end: f64,
    #[serde(default = "default_bdf_order")]
    bdf_order: BdfOrder,
    #[serde(default = "default_snapshot_every")]
    snapshot_every: usize,
    params: ModelParams,
    profile: ProfileSection,
    #[serde(default = "default_history")]
    history: HistorySpec,
    #[serde(default)]
    analysis: AnalysisSettings,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> SimResult<(RunConfig, AnalysisSettings)> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
    let family = DampingFamily::from_name(&file.profile.family, &file.profile.coefficients)?;
    let config = RunConfig {
        profile: DampingProfile::new(family, file.params.ell)?,
        params: file.params,
        history: file.history,
        n: file.n,
        dt: file.dt,
        t_end: file.t_end,
        bdf_order: file.bdf_order,
        snapshot_every: file.snapshot_every,
    };
    config.validate()?;
    file.analysis.validate()?;
    Ok((config, file.analysis))
}

pub fn load_config(path: &Path) -> SimResult<(RunConfig, AnalysisSettings)> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_config(&text)
}

/// Renders a configuration in the format read by [`parse_config`].
pub fn render_config(config: &RunConfig, analysis: &AnalysisSettings) -> SimResult<String> {
    let family = config.profile.family();
    let file = ConfigFile {
        n: config.n,
        dt: config.dt,
        t_end: config.t_end,
        bdf_order: config.bdf_order,
        snapshot_every: config.snapshot_every,
        params: config.params,
        profile: ProfileSection {
            family: family.name().to_string(),
            coefficients: family.coefficients(),
        },
        history: config.history.clone(),
        analysis: *analysis,
    };
    toml::to_string(&file).map_err(|e| SimError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
n = 99
dt = 0.002
T_end = 1.5
bdf_order = 1

[params]
nu = 0.01
mu = 0.001
tau = 0.5
ell = 1.0

[profile]
family = "combined"
coefficients = [1.0, 2.0, 1.0, 2.0]

[history]
kind = "separable"

[history.phi]
shape = "sine_squared"
amplitude = 0.5
k = 1.0

[history.psi]
shape = "exponential"
rate = -1.0

[analysis]
p = 0.5
"#;

    #[test]
    fn parses_all_sections() {
        let (c, a) = parse_config(EXAMPLE).unwrap();
        assert_eq!(c.n, 99);
        assert_eq!(c.t_end, 1.5);
        assert_eq!(c.bdf_order, BdfOrder::One);
        assert_eq!(c.snapshot_every, presets::SNAPSHOT_EVERY);
        assert_eq!(
            c.profile.family(),
            &DampingFamily::Combined {
                b0: 1.0,
                c1: 2.0,
                c2: 1.0,
                k: 2.0
            }
        );
        assert!(matches!(c.history, HistorySpec::Separable { .. }));
        assert_eq!(a.p, 0.5);
    }

    #[test]
    fn render_round_trip() {
        let (c, a) = parse_config(EXAMPLE).unwrap();
        let text = render_config(&c, &a).unwrap();
        assert_eq!(parse_config(&text).unwrap(), (c, a));
        let base = presets::preset("fig7d").unwrap().base;
        let text = render_config(&base, &AnalysisSettings::default()).unwrap();
        assert_eq!(parse_config(&text).unwrap().0, base);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            EXAMPLE.replace("tau = 0.5", "tau = 0.001"),
            EXAMPLE.replace("n = 99", "n = 3"),
            EXAMPLE.replace("\"combined\"", "\"cubic\""),
            EXAMPLE.replace("[1.0, 2.0, 1.0, 2.0]", "[1.0]"),
            EXAMPLE.replace("p = 0.5", "p = 1.5"),
            EXAMPLE.replace("bdf_order = 1", "bdf_order = 3"),
            EXAMPLE.replace("dt = 0.002", "dt = 0.002\nextra = 1"),
            "n = ".to_string(),
        ];
        for text in cases {
            let err = parse_config(&text).unwrap_err();
            assert_eq!(err.exit_code(), 3, "{err}");
        }
    }

    #[test]
    fn default_history_is_sine() {
        let text = EXAMPLE.split("[history]").next().unwrap();
        let (c, _) = parse_config(text).unwrap();
        assert_eq!(c.history, default_history());
    }
}
