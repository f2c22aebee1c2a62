//! Physical parameters, damping coefficients and initial histories.
//!
//! Everything here is immutable once constructed. Damping profiles carry
//! their own lower bound `a0` and sup-norm, recomputed from the closed form
//! (or the samples) at construction time and never taken from the caller.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::math;
use crate::state::StateVector;

/// Physical constants of the delayed equation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    /// Diffusion coefficient.
    pub nu: f64,
    /// Dispersion (fourth-order) coefficient.
    pub mu: f64,
    /// Time delay; zero selects the undelayed equation.
    pub tau: f64,
    /// Domain length.
    pub ell: f64,
}

impl ModelParams {
    pub fn new(nu: f64, mu: f64, tau: f64, ell: f64) -> Result<Self> {
        let params = Self { nu, mu, tau, ell };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.nu.is_finite()
            && self.mu.is_finite()
            && self.tau.is_finite()
            && self.ell.is_finite();
        if !finite {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if self.nu <= 0.0 {
            return Err(Error::Config(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::Config(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if self.tau < 0.0 {
            return Err(Error::Config(format!(
                "tau must be non-negative, got {}",
                self.tau
            )));
        }
        if self.ell <= 0.0 {
            return Err(Error::Config(format!(
                "ell must be positive, got {}",
                self.ell
            )));
        }
        Ok(())
    }
}

/// Shape of the damping coefficient `a(x)`.
///
/// All analytic families are special cases of `b0 + c1 x + c2 sin(k pi x / ell)`.
/// `Tabulated` holds equispaced samples on `[0, ell]`, endpoints included,
/// and is evaluated by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "lowercase"))]
pub enum DampingFamily {
    Constant { c0: f64 },
    Affine { b0: f64, c1: f64 },
    Sinusoidal { b0: f64, c2: f64, k: f64 },
    Combined { b0: f64, c1: f64, c2: f64, k: f64 },
    Tabulated { samples: Vec<f64> },
}

/// Minimum number of samples a tabulated profile needs for the fourth-difference check.
pub const MIN_TABULATED_SAMPLES: usize = 5;

impl DampingFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DampingFamily::Constant { .. } => "constant",
            DampingFamily::Affine { .. } => "affine",
            DampingFamily::Sinusoidal { .. } => "sinusoidal",
            DampingFamily::Combined { .. } => "combined",
            DampingFamily::Tabulated { .. } => "tabulated",
        }
    }

    /// Coefficients in the order used by the config files.
    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            DampingFamily::Constant { c0 } => alloc::vec![*c0],
            DampingFamily::Affine { b0, c1 } => alloc::vec![*b0, *c1],
            DampingFamily::Sinusoidal { b0, c2, k } => alloc::vec![*b0, *c2, *k],
            DampingFamily::Combined { b0, c1, c2, k } => alloc::vec![*b0, *c1, *c2, *k],
            DampingFamily::Tabulated { samples } => samples.clone(),
        }
    }

    /// Inverse of [`DampingFamily::name`] + [`DampingFamily::coefficients`].
    pub fn from_name(name: &str, coefficients: &[f64]) -> Result<Self> {
        let expect = |count: usize| -> Result<()> {
            if coefficients.len() != count {
                return Err(Error::Config(format!(
                    "damping family '{name}' takes {count} coefficients, got {}",
                    coefficients.len()
                )));
            }
            Ok(())
        };
        let family = match name {
            "constant" => {
                expect(1)?;
                DampingFamily::Constant { c0: coefficients[0] }
            }
            "affine" => {
                expect(2)?;
                DampingFamily::Affine {
                    b0: coefficients[0],
                    c1: coefficients[1],
                }
            }
            "sinusoidal" => {
                expect(3)?;
                DampingFamily::Sinusoidal {
                    b0: coefficients[0],
                    c2: coefficients[1],
                    k: coefficients[2],
                }
            }
            "combined" => {
                expect(4)?;
                DampingFamily::Combined {
                    b0: coefficients[0],
                    c1: coefficients[1],
                    c2: coefficients[2],
                    k: coefficients[3],
                }
            }
            "tabulated" => DampingFamily::Tabulated {
                samples: coefficients.to_vec(),
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown damping family '{other}' (expected constant, affine, sinusoidal, combined or tabulated)"
                )))
            }
        };
        Ok(family)
    }

    /// `(b0, c1, c2, k)` for analytic families.
    fn analytic(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            DampingFamily::Constant { c0 } => Some((c0, 0.0, 0.0, 1.0)),
            DampingFamily::Affine { b0, c1 } => Some((b0, c1, 0.0, 1.0)),
            DampingFamily::Sinusoidal { b0, c2, k } => Some((b0, 0.0, c2, k)),
            DampingFamily::Combined { b0, c1, c2, k } => Some((b0, c1, c2, k)),
            DampingFamily::Tabulated { .. } => None,
        }
    }
}

/// The damping coefficient together with its certified bounds on `[0, ell]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "DampingProfileRepr", into = "DampingProfileRepr")
)]
pub struct DampingProfile {
    family: DampingFamily,
    ell: f64,
    a0: f64,
    sup_norm: f64,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct DampingProfileRepr {
    #[serde(flatten)]
    family: DampingFamily,
    ell: f64,
    #[serde(default)]
    a0: f64,
    #[serde(default)]
    sup_norm: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<DampingProfileRepr> for DampingProfile {
    type Error = Error;

    // Stored bounds are ignored and recomputed.
    fn try_from(repr: DampingProfileRepr) -> Result<Self> {
        DampingProfile::new(repr.family, repr.ell)
    }
}

#[cfg(feature = "serde")]
impl From<DampingProfile> for DampingProfileRepr {
    fn from(p: DampingProfile) -> Self {
        DampingProfileRepr {
            family: p.family,
            ell: p.ell,
            a0: p.a0,
            sup_norm: p.sup_norm,
        }
    }
}

impl DampingProfile {
    pub fn new(family: DampingFamily, ell: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::Config(format!("ell must be positive, got {ell}")));
        }
        let (a0, sup_norm) = match &family {
            DampingFamily::Tabulated { samples } => {
                if samples.len() < MIN_TABULATED_SAMPLES {
                    return Err(Error::TooFewSamples {
                        len: samples.len(),
                        min: MIN_TABULATED_SAMPLES,
                    });
                }
                if samples.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(
                        "tabulated damping samples must be finite".into(),
                    ));
                }
                let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, lo.abs().max(hi.abs()))
            }
            other => {
                let (b0, c1, c2, k) = other.analytic().expect("analytic family");
                if !(b0.is_finite() && c1.is_finite() && c2.is_finite() && k.is_finite()) {
                    return Err(Error::Config("damping coefficients must be finite".into()));
                }
                if c2 != 0.0 && k <= 0.0 {
                    return Err(Error::Config(format!(
                        "sinusoidal wavenumber k must be positive, got {k}"
                    )));
                }
                let (lo, hi) = analytic_range(b0, c1, c2, k, ell);
                (lo, lo.abs().max(hi.abs()))
            }
        };
        Ok(Self {
            family,
            ell,
            a0,
            sup_norm,
        })
    }

    pub fn constant(c0: f64, ell: f64) -> Result<Self> {
        Self::new(DampingFamily::Constant { c0 }, ell)
    }

    pub fn family(&self) -> &DampingFamily {
        &self.family
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Minimum of `a` over `[0, ell]`.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// `max |a|` over `[0, ell]`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_analytic(&self) -> bool {
        self.family.analytic().is_some()
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.family {
            DampingFamily::Tabulated { samples } => interpolate_equispaced(samples, self.ell, x),
            f => {
                let (b0, c1, c2, k) = f.analytic().expect("analytic family");
                b0 + c1 * x + c2 * math::sin(k * PI * x / self.ell)
            }
        }
    }

    /// `a''(x)` for analytic families.
    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        let (_, _, c2, k) = self.family.analytic()?;
        let kappa = k * PI / self.ell;
        Some(-c2 * kappa * kappa * math::sin(kappa * x))
    }

    /// `a''''(x)` for analytic families.
    pub fn fourth_derivative(&self, x: f64) -> Option<f64> {
        let (_, _, c2, k) = self.family.analytic()?;
        let kappa = k * PI / self.ell;
        Some(c2 * kappa * kappa * kappa * kappa * math::sin(kappa * x))
    }
}

/// Min and max of `b0 + c1 x + c2 sin(k pi x / ell)` on `[0, ell]`, from endpoints and critical points.
fn analytic_range(b0: f64, c1: f64, c2: f64, k: f64, ell: f64) -> (f64, f64) {
    let eval = |x: f64| b0 + c1 * x + c2 * math::sin(k * PI * x / ell);
    let mut lo = eval(0.0).min(eval(ell));
    let mut hi = eval(0.0).max(eval(ell));
    if c2 != 0.0 {
        let kappa = k * PI / ell;
        // a'(x) = c1 + c2 kappa cos(kappa x) = 0
        let r = -c1 / (c2 * kappa);
        if r.abs() <= 1.0 {
            let theta0 = math::acos(r);
            let theta_max = k * PI;
            let periods = math::ceil(theta_max / (2.0 * PI)) as i64 + 1;
            for m in 0..=periods {
                let base = 2.0 * PI * m as f64;
                for theta in [base + theta0, base - theta0] {
                    if (0.0..=theta_max).contains(&theta) {
                        let v = eval(theta / kappa);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
            }
        }
    }
    (lo, hi)
}

/// Range of `sin` on `[0, theta_max]`.
fn sin_range(theta_max: f64) -> (f64, f64) {
    let mut lo = 0.0f64.min(math::sin(theta_max));
    let mut hi = 0.0f64.max(math::sin(theta_max));
    let mut m = 0i64;
    loop {
        let theta = PI / 2.0 + m as f64 * PI;
        if theta > theta_max {
            break;
        }
        let s = math::sin(theta);
        lo = lo.min(s);
        hi = hi.max(s);
        m += 1;
    }
    (lo, hi)
}

fn interpolate_equispaced(samples: &[f64], ell: f64, x: f64) -> f64 {
    let m = samples.len();
    let pos = (x / ell).clamp(0.0, 1.0) * (m - 1) as f64;
    let i = (math::floor(pos) as usize).min(m - 2);
    let w = pos - i as f64;
    samples[i] * (1.0 - w) + samples[i + 1] * w
}

/// Outcome of checking the damping hypotheses of the exponential-stability result.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypothesisReport {
    /// `a(x) >= a0 > 0` on `[0, ell]`.
    pub positive_above_a0: bool,
    /// `a''(x) <= 0` on `[0, ell]`.
    pub concave_second_derivative: bool,
    /// `a''''(x) >= 0` on `[0, ell]`.
    pub nonneg_fourth_derivative: bool,
    pub a0: f64,
    pub sup_norm: f64,
}

impl HypothesisReport {
    pub fn all_satisfied(&self) -> bool {
        self.positive_above_a0 && self.concave_second_derivative && self.nonneg_fourth_derivative
    }
}

/// Relative slack for the finite-difference sign checks on tabulated profiles.
pub const TABULATED_SIGN_TOLERANCE: f64 = 1e-8;

const SIGN_EPS: f64 = 1e-12;

/// Evaluates the damping hypotheses: exactly for analytic families, by finite
/// differences for tabulated ones.
pub fn validate_damping(profile: &DampingProfile, grid: &SpatialGrid) -> Result<HypothesisReport> {
    // Bounds are refreshed against the profile's own domain; the grid only
    // has to describe the same interval.
    if (grid.ell() - profile.ell()).abs() > 1e-12 * profile.ell() {
        return Err(Error::Config(format!(
            "grid length {} differs from profile length {}",
            grid.ell(),
            profile.ell()
        )));
    }
    let refreshed = DampingProfile::new(profile.family.clone(), profile.ell)?;
    let positive = refreshed.a0 > 0.0;
    let (concave, fourth) = match &refreshed.family {
        DampingFamily::Tabulated { samples } => {
            if samples.len() < MIN_TABULATED_SAMPLES {
                return Err(Error::TooFewSamples {
                    len: samples.len(),
                    min: MIN_TABULATED_SAMPLES,
                });
            }
            let hs = refreshed.ell / (samples.len() - 1) as f64;
            let scale = refreshed.sup_norm.max(1.0);
            let tol2 = TABULATED_SIGN_TOLERANCE * scale / (hs * hs);
            let tol4 = TABULATED_SIGN_TOLERANCE * scale / (hs * hs * hs * hs);
            let concave = samples
                .windows(3)
                .all(|w| (w[0] - 2.0 * w[1] + w[2]) / (hs * hs) <= tol2);
            let fourth = samples.windows(5).all(|w| {
                (w[0] - 4.0 * w[1] + 6.0 * w[2] - 4.0 * w[3] + w[4]) / (hs * hs * hs * hs) >= -tol4
            });
            (concave, fourth)
        }
        f => {
            let (_, _, c2, k) = f.analytic().expect("analytic family");
            if c2 == 0.0 {
                (true, true)
            } else {
                // a'' = -c2 kappa^2 sin(theta), a'''' = c2 kappa^4 sin(theta): both
                // hypotheses reduce to c2 sin(theta) >= 0 on [0, k pi].
                let (smin, smax) = sin_range(k * PI);
                let ok = if c2 > 0.0 {
                    smin >= -SIGN_EPS
                } else {
                    smax <= SIGN_EPS
                };
                (ok, ok)
            }
        }
    };
    Ok(HypothesisReport {
        positive_above_a0: positive,
        concave_second_derivative: concave,
        nonneg_fourth_derivative: fourth,
        a0: refreshed.a0,
        sup_norm: refreshed.sup_norm,
    })
}

/// `a(x_i)` at the interior nodes.
pub fn sample_profile(profile: &DampingProfile, grid: &SpatialGrid) -> Vec<f64> {
    grid.nodes().map(|x| profile.value(x)).collect()
}

/// Spatial factor of an initial history.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum SpaceProfile {
    Zero,
    /// `amplitude * sin(k pi x / ell)`.
    Sine {
        amplitude: f64,
        k: f64,
    },
    /// `amplitude * sin^2(k pi x / ell)`; vanishes with its slope at both ends.
    SineSquared {
        amplitude: f64,
        k: f64,
    },
    /// `amplitude * x^2 (ell - x)^2`.
    ClampedBump {
        amplitude: f64,
    },
    /// Equispaced samples on `[0, ell]`, endpoints included.
    Tabulated {
        samples: Vec<f64>,
    },
}

impl SpaceProfile {
    pub fn value(&self, x: f64, ell: f64) -> f64 {
        match self {
            SpaceProfile::Zero => 0.0,
            SpaceProfile::Sine { amplitude, k } => amplitude * math::sin(k * PI * x / ell),
            SpaceProfile::SineSquared { amplitude, k } => {
                let s = math::sin(k * PI * x / ell);
                amplitude * s * s
            }
            SpaceProfile::ClampedBump { amplitude } => {
                let r = ell - x;
                amplitude * x * x * r * r
            }
            SpaceProfile::Tabulated { samples } => interpolate_equispaced(samples, ell, x),
        }
    }

    /// Whether the profile satisfies `phi = phi' = 0` at both ends.
    pub fn is_clamped_compatible(&self) -> bool {
        match self {
            SpaceProfile::Zero
            | SpaceProfile::SineSquared { .. }
            | SpaceProfile::ClampedBump { .. } => true,
            SpaceProfile::Sine { amplitude, .. } => *amplitude == 0.0,
            SpaceProfile::Tabulated { samples } => {
                let m = samples.len();
                m >= 2
                    && samples[0] == 0.0
                    && samples[m - 1] == 0.0
                    && samples[1] == 0.0
                    && samples[m - 2] == 0.0
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SpaceProfile::Tabulated { samples } if samples.len() < 2 => Err(Error::TooFewSamples {
                len: samples.len(),
                min: 2,
            }),
            _ => Ok(()),
        }
    }
}

/// Temporal factor of a separable history, defined for `s <= 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum TimeProfile {
    Constant,
    /// `exp(rate * s)`.
    Exponential {
        rate: f64,
    },
    /// Piecewise-linear through `(times[i], values[i])`, held constant outside.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TimeProfile {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Exponential { rate } => math::exp(rate * s),
            TimeProfile::Tabulated { times, values } => interpolate_series(times, values, s),
        }
    }
}

fn interpolate_series(times: &[f64], values: &[f64], s: f64) -> f64 {
    let m = times.len();
    if s <= times[0] {
        return values[0];
    }
    if s >= times[m - 1] {
        return values[m - 1];
    }
    let j = times.partition_point(|&t| t <= s).clamp(1, m - 1);
    let (t0, t1) = (times[j - 1], times[j]);
    let w = (s - t0) / (t1 - t0);
    values[j - 1] * (1.0 - w) + values[j] * w
}

/// Initial history `v(x, s)` on `[0, ell] x [-tau, 0]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum HistorySpec {
    /// `v(x, s) = u0(x)` for every `s`.
    Constant { u0: SpaceProfile },
    /// `v(x, s) = phi(x) psi(s)`.
    Separable { phi: SpaceProfile, psi: TimeProfile },
    /// Snapshots at ascending `times`; each state is equispaced on `[0, ell]`
    /// with endpoints included. Linear in `s` between snapshots.
    Tabulated {
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
    },
}

impl HistorySpec {
    pub fn constant(u0: SpaceProfile) -> Self {
        HistorySpec::Constant { u0 }
    }

    pub fn zero() -> Self {
        HistorySpec::Constant {
            u0: SpaceProfile::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HistorySpec::Constant { u0 } => u0.validate(),
            HistorySpec::Separable { phi, psi } => {
                phi.validate()?;
                if let TimeProfile::Tabulated { times, values } = psi {
                    check_series(times, values.len())?;
                }
                Ok(())
            }
            HistorySpec::Tabulated { times, states } => {
                check_series(times, states.len())?;
                let width = states[0].len();
                if width < 2 {
                    return Err(Error::TooFewSamples { len: width, min: 2 });
                }
                if let Some(bad) = states.iter().find(|s| s.len() != width) {
                    return Err(Error::DimensionMismatch {
                        expected: width,
                        got: bad.len(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Whether `v(., s)` and its slope vanish at both ends for every `s`.
    pub fn is_clamped_compatible(&self) -> bool {
        match self {
            HistorySpec::Constant { u0 } => u0.is_clamped_compatible(),
            HistorySpec::Separable { phi, .. } => phi.is_clamped_compatible(),
            HistorySpec::Tabulated { states, .. } => states
                .iter()
                .all(|s| SpaceProfile::Tabulated { samples: s.clone() }.is_clamped_compatible()),
        }
    }

    /// `v(x, s)` without range checking; `s` outside the tabulated range is clamped.
    pub fn value(&self, x: f64, s: f64, ell: f64) -> f64 {
        match self {
            HistorySpec::Constant { u0 } => u0.value(x, ell),
            HistorySpec::Separable { phi, psi } => phi.value(x, ell) * psi.value(s),
            HistorySpec::Tabulated { times, states } => {
                let m = times.len();
                let column = |j: usize| interpolate_equispaced(&states[j], ell, x);
                if m == 1 || s <= times[0] {
                    return column(0);
                }
                if s >= times[m - 1] {
                    return column(m - 1);
                }
                let j = times.partition_point(|&t| t <= s).clamp(1, m - 1);
                let w = (s - times[j - 1]) / (times[j] - times[j - 1]);
                column(j - 1) * (1.0 - w) + column(j) * w
            }
        }
    }

    /// Interior-node samples of `v(., s)` without range checking.
    pub fn sample_unchecked(&self, grid: &SpatialGrid, s: f64) -> Vec<f64> {
        let ell = grid.ell();
        grid.nodes().map(|x| self.value(x, s, ell)).collect()
    }
}

fn check_series(times: &[f64], len: usize) -> Result<()> {
    if times.is_empty() {
        return Err(Error::TooFewSamples { len: 0, min: 1 });
    }
    if times.len() != len {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: len,
        });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "history times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Samples `v(., s)` at the interior nodes for `s` in `[-tau, 0]`.
pub fn sample_history(
    spec: &HistorySpec,
    grid: &SpatialGrid,
    tau: f64,
    s: f64,
) -> Result<StateVector> {
    // Small slack so lattice times like -k*dt computed in floating point are accepted.
    let slack = 1e-12 * tau.max(1.0);
    if !(s <= slack && s >= -tau - slack) {
        return Err(Error::HistoryRange { s, tau });
    }
    Ok(StateVector::new(spec.sample_unchecked(grid, s), s))
}

/// Human-readable description used in run metadata.
pub fn describe_family(family: &DampingFamily) -> String {
    let coefs: Vec<String> = family
        .coefficients()
        .iter()
        .map(|c| format!("{c}"))
        .collect();
    format!("{}({})", family.name(), coefs.join(","))
}
