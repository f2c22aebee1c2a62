//! Named scenarios for the simulation study.
//!
//! Every preset uses `ell = 1`, `nu = 0.01`, `mu = 0.001`, `u0 = sin(pi x)`,
//! `dt = 0.001`, 199 interior nodes and `T_end = 10`.

use delaydisp_core::{
    BdfOrder, DampingFamily, DampingProfile, HistorySpec, ModelParams, RunConfig, SpaceProfile,
};

use crate::error::{SimError, SimResult};
use crate::sweep::{Axis, SweepValue};

pub const NU: f64 = 0.01;
pub const MU: f64 = 0.001;
pub const DT: f64 = 0.001;
pub const N: usize = 199;
pub const T_END: f64 = 10.0;
pub const SNAPSHOT_EVERY: usize = 100;
/// Delay values swept by `fig9` to `fig12`.
pub const TAU_SWEEP: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// `0, -1, -2, -3`.
pub fn nonpositive_profiles() -> [DampingFamily; 4] {
    [0.0, -1.0, -2.0, -3.0].map(|c0| DampingFamily::Constant { c0 })
}

/// `1`, `1 + x`, `1 + sin(pi x)`, `1 + 2x + sin(2 pi x)`.
pub fn positive_profiles() -> [DampingFamily; 4] {
    [
        DampingFamily::Constant { c0: 1.0 },
        DampingFamily::Affine { b0: 1.0, c1: 1.0 },
        DampingFamily::Sinusoidal {
            b0: 1.0,
            c2: 1.0,
            k: 1.0,
        },
        DampingFamily::Combined {
            b0: 1.0,
            c1: 2.0,
            c2: 1.0,
            k: 2.0,
        },
    ]
}

/// A preset: one configuration, optionally swept along an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub base: RunConfig,
    pub sweep: Option<(Axis, Vec<SweepValue>)>,
}

pub fn base_config(family: DampingFamily, tau: f64) -> RunConfig {
    RunConfig {
        params: ModelParams {
            nu: NU,
            mu: MU,
            tau,
            ell: 1.0,
        },
        profile: DampingProfile::new(family, 1.0).expect("preset profiles are valid"),
        history: HistorySpec::constant(SpaceProfile::Sine {
            amplitude: 1.0,
            k: 1.0,
        }),
        n: N,
        dt: DT,
        t_end: T_END,
        bdf_order: BdfOrder::Two,
        snapshot_every: SNAPSHOT_EVERY,
    }
}

pub fn names() -> Vec<String> {
    let mut out = Vec::new();
    for (fig, family) in [
        (1, false),
        (2, true),
        (3, false),
        (4, true),
        (5, false),
        (6, true),
        (7, false),
        (8, true),
    ] {
        if family {
            out.push(format!("fig{fig}"));
        } else {
            out.extend(["a", "b", "c", "d"].iter().map(|s| format!("fig{fig}{s}")));
        }
    }
    out.extend((9..=12).map(|f| format!("fig{f}")));
    out
}

fn profile_sweep(profiles: [DampingFamily; 4]) -> (Axis, Vec<SweepValue>) {
    (
        Axis::Profile,
        profiles.into_iter().map(SweepValue::Profile).collect(),
    )
}

pub fn preset(name: &str) -> SimResult<Preset> {
    let unknown = || {
        SimError::Config(format!(
            "unknown preset '{name}'; available: {}",
            names().join(", ")
        ))
    };
    let fig: u32 = name
        .strip_prefix("fig")
        .map(|s| s.trim_end_matches(['a', 'b', 'c', 'd']))
        .and_then(|s| s.parse().ok())
        .ok_or_else(unknown)?;
    let panel = name.chars().last().filter(|c| c.is_ascii_alphabetic());
    let panel_index = panel.map(|c| (c as u8 - b'a') as usize);

    let (profiles, tau, has_panels) = match fig {
        1 => (nonpositive_profiles(), 0.0, true),
        2 => (nonpositive_profiles(), 0.0, false),
        3 => (positive_profiles(), 0.0, true),
        4 => (positive_profiles(), 0.0, false),
        5 => (nonpositive_profiles(), 1.0, true),
        6 => (nonpositive_profiles(), 1.0, false),
        7 => (positive_profiles(), 1.0, true),
        8 => (positive_profiles(), 1.0, false),
        9..=12 => {
            if panel.is_some() {
                return Err(unknown());
            }
            let family = positive_profiles()[(fig - 9) as usize].clone();
            return Ok(Preset {
                name: name.to_string(),
                base: base_config(family, 1.0),
                sweep: Some((
                    Axis::Tau,
                    TAU_SWEEP.iter().map(|&t| SweepValue::Number(t)).collect(),
                )),
            });
        }
        _ => return Err(unknown()),
    };
    match (has_panels, panel_index) {
        (true, Some(i)) => Ok(Preset {
            name: name.to_string(),
            base: base_config(profiles[i].clone(), tau),
            sweep: None,
        }),
        (false, None) => Ok(Preset {
            name: name.to_string(),
            base: base_config(profiles[0].clone(), tau),
            sweep: Some(profile_sweep(profiles)),
        }),
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_lookup() {
        let p = preset("fig1b").unwrap();
        assert_eq!(
            p.base.profile.family(),
            &DampingFamily::Constant { c0: -1.0 }
        );
        assert_eq!(p.base.params.tau, 0.0);
        let p = preset("fig7d").unwrap();
        assert_eq!(p.base.profile.family(), &positive_profiles()[3]);
        assert_eq!(p.base.params.tau, 1.0);
        let p = preset("fig9").unwrap();
        assert_eq!(
            p.base.profile.family(),
            &DampingFamily::Constant { c0: 1.0 }
        );
        assert_eq!(p.sweep.unwrap().0, Axis::Tau);
    }

    #[test]
    fn unknown_lists_names() {
        for bad in ["fig13", "fig2a", "fig1e", "fig9a", "nope", "fig"] {
            let err = preset(bad).unwrap_err().to_string();
            assert!(
                err.contains("fig1a") && err.contains("fig12"),
                "{bad}: {err}"
            );
        }
    }

    #[test]
    fn every_name_resolves() {
        for n in names() {
            preset(&n).unwrap();
        }
        assert_eq!(names().len(), 4 * 4 + 4 + 4);
    }

    #[test]
    fn single_run_coverage() {
        // Each profile and delay pair appears in exactly one panel preset.
        let mut seen = Vec::new();
        for n in names() {
            let p = preset(&n).unwrap();
            if p.sweep.is_none() {
                seen.push((p.base.profile.family().clone(), p.base.params.tau.to_bits()));
            }
        }
        assert_eq!(seen.len(), 16);
        for (i, a) in seen.iter().enumerate() {
            assert!(seen[i + 1..].iter().all(|b| b != a));
        }
    }
}
