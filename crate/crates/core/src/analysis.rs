//! Norm diagnostics and the closed-form constants of the exponential-stability bound.
//!
//! The decay certificate reads `||u_xx(t)||^2 <= (M^2 / 4) exp(-omega_tilde t)`
//! for delays below `tau_hat = min(sigma, tau_2)`, with the auxiliary splitting
//! constants frozen at `delta_1 = delta_2 = 1/6` and `delta_3 = 1 / (6 ||a||_inf)`.
//!
//! Two quirks of the closed forms are kept verbatim rather than corrected:
//! the `||a||_inf` term in the dissipation rate carries `1/(2 delta_3)` where the
//! estimate feeding it has `1/(4 delta_3)`, and the `sigma` condition carries
//! `exp(omega_tilde tau)` and `(pi^2 omega_tilde)^-1` factors that the exponent
//! inside `M` does not.
//!
//! `M` can be astronomically large for ordinary data, so it is carried in log
//! space and only exponentiated for reporting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::grid::{Operators, Quadrature};
use crate::math;
use crate::model::{validate_damping, DampingProfile, HistorySpec, HypothesisReport, ModelParams};
use crate::state::StateVector;

/// Wirtinger ratios may exceed one by at most `WIRTINGER_SLACK * h`.
pub const WIRTINGER_SLACK: f64 = 5.0;
/// Relative slack of the decay-bound comparison.
pub const BOUND_CHECK_TOL: f64 = 1e-6;
/// Points in the `sigma` scan over `[0, tau_2]`.
pub const SIGMA_LATTICE_POINTS: usize = 10_000;
/// The dissipation inequality is tested up to `DISSIPATION_TOL_STEPS * dt`.
pub const DISSIPATION_TOL_STEPS: f64 = 10.0;
/// Default weight `p` in the admissible-viscosity condition.
pub const DEFAULT_P: f64 = 1.0;

/// Norms of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub t: f64,
    pub l2_u: f64,
    pub h1_u: f64,
    pub h2_u: f64,
    /// Signed root of `integral a u^2`; equals `||sqrt(a) u||` whenever `a >= 0`.
    pub weighted: f64,
}

/// Per-step norm history of a run.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormSeries {
    pub t: Vec<f64>,
    pub l2_u: Vec<f64>,
    pub h1_u: Vec<f64>,
    pub h2_u: Vec<f64>,
    pub weighted: Vec<f64>,
}

impl NormSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            l2_u: Vec::with_capacity(n),
            h1_u: Vec::with_capacity(n),
            h2_u: Vec::with_capacity(n),
            weighted: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, row: NormRow) {
        self.t.push(row.t);
        self.l2_u.push(row.l2_u);
        self.h1_u.push(row.h1_u);
        self.h2_u.push(row.h2_u);
        self.weighted.push(row.weighted);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn row(&self, k: usize) -> NormRow {
        NormRow {
            t: self.t[k],
            l2_u: self.l2_u[k],
            h1_u: self.h1_u[k],
            h2_u: self.h2_u[k],
            weighted: self.weighted[k],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = NormRow> + '_ {
        (0..self.len()).map(move |k| self.row(k))
    }

    pub fn fit_l2(&self, window: (f64, f64)) -> Result<DecayFit> {
        fit_decay(&self.t, &self.l2_u, window)
    }

    pub fn fit_h2(&self, window: (f64, f64)) -> Result<DecayFit> {
        fit_decay(&self.t, &self.h2_u, window)
    }
}

/// `||u||`, `||u_x||`, `||u_xx||` and the damping-weighted norm of one state.
pub fn norms_of(
    state: &StateVector,
    ops: &Operators,
    quadrature: &Quadrature,
    a_samples: &[f64],
) -> NormRow {
    let u = &state.values;
    let ux = ops.d1.apply(u);
    let uxx = ops.d2.apply(u);
    let weighted_sq: f64 = quadrature
        .weights
        .iter()
        .zip(a_samples.iter().zip(u))
        .map(|(w, (a, v))| w * a * v * v)
        .sum();
    let weighted = if weighted_sq >= 0.0 {
        math::sqrt(weighted_sq)
    } else {
        -math::sqrt(-weighted_sq)
    };
    NormRow {
        t: state.t,
        l2_u: quadrature.norm(u),
        h1_u: quadrature.norm(&ux),
        h2_u: quadrature.norm(&uxx),
        weighted,
    }
}

/// `(||u||^2 pi^2 / (ell^2 ||u_x||^2), ||u_x||^2 pi^2 / (ell^2 ||u_xx||^2))`;
/// a vanishing denominator reports `0`.
pub fn wirtinger_check(row: &NormRow, ell: f64) -> (f64, f64) {
    let k = PI * PI / (ell * ell);
    let ratio = |num: f64, den: f64| {
        if den == 0.0 {
            0.0
        } else {
            num * num * k / (den * den)
        }
    };
    (ratio(row.l2_u, row.h1_u), ratio(row.h1_u, row.h2_u))
}

/// `gamma = 4 p pi^2 sqrt(a0) / (ell (4 p mu sqrt(a0) - nu^2))`.
pub fn compute_gamma(p: f64, a0: f64, mu: f64, nu: f64, ell: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Hypothesis(format!("p must lie in (0, 1], got {p}")));
    }
    if !(a0 > 0.0) {
        return Err(Error::Hypothesis(format!(
            "damping lower bound a0 must be positive, got {a0}"
        )));
    }
    let sqrt_a0 = math::sqrt(a0);
    let threshold = 4.0 * p * mu * sqrt_a0;
    if nu * nu >= threshold {
        return Err(Error::Hypothesis(format!(
            "nu^2 < 4 p mu sqrt(a0) fails: nu^2 = {} >= {}",
            nu * nu,
            threshold
        )));
    }
    Ok(4.0 * p * PI * PI * sqrt_a0 / (ell * (threshold - nu * nu)))
}

/// Norms of the initial history entering `M` and `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistoryNorms {
    /// `||v(0)||`.
    pub l2_0: f64,
    /// `||v_xx(0)||`.
    pub h2_0: f64,
    /// `sup_{-tau <= s <= 0} ||v_x(s)||` over the history slots.
    pub sup_h1: f64,
    /// `integral_{-tau}^0 ||v_x(s)||^2 ds` by the trapezoid rule over the slots.
    pub h1_sq_window: f64,
}

/// Evaluates discrete history norms at arbitrary `s <= 0`.
#[derive(Debug, Clone, Copy)]
pub struct HistoryProbe<'a> {
    pub spec: &'a HistorySpec,
    pub ops: &'a Operators,
    pub quadrature: &'a Quadrature,
}

impl<'a> HistoryProbe<'a> {
    pub fn new(spec: &'a HistorySpec, ops: &'a Operators, quadrature: &'a Quadrature) -> Self {
        Self {
            spec,
            ops,
            quadrature,
        }
    }

    fn sample(&self, s: f64) -> Vec<f64> {
        self.spec.sample_unchecked(&self.ops.grid, s)
    }

    /// `||v_x(s)||^2`.
    pub fn h1_sq(&self, s: f64) -> f64 {
        let v = self.sample(s);
        let n = self.quadrature.norm(&self.ops.d1.apply(&v));
        n * n
    }

    /// History norms on the slots `s = max(-k dt, -tau)`, `k = 0..=ceil(tau / dt)`.
    pub fn norms(&self, tau: f64, dt: f64) -> HistoryNorms {
        let v0 = self.sample(0.0);
        let l2_0 = self.quadrature.norm(&v0);
        let h2_0 = self.quadrature.norm(&self.ops.d2.apply(&v0));
        let mut slots: Vec<(f64, f64)> = Vec::new();
        if tau > 0.0 {
            let lag = math::ceil(tau / dt - 1e-9) as i64;
            for k in 0..=lag {
                let s = (-(k as f64) * dt).max(-tau);
                slots.push((s, self.h1_sq(s)));
            }
        } else {
            slots.push((0.0, self.h1_sq(0.0)));
        }
        let sup_sq = slots.iter().map(|p| p.1).fold(0.0f64, f64::max);
        let window = slots
            .windows(2)
            .map(|w| 0.5 * (w[0].0 - w[1].0) * (w[0].1 + w[1].1))
            .sum();
        HistoryNorms {
            l2_0,
            h2_0,
            sup_h1: math::sqrt(sup_sq),
            h1_sq_window: window,
        }
    }

    /// Cumulative trapezoid `integral_{-kappa}^0 ||v_x||^2` at each lattice point
    /// (ascending, starting at zero).
    pub fn cumulative_h1_sq(&self, lattice: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(lattice.len());
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for &kappa in lattice {
            let value = self.h1_sq(-kappa);
            if let Some((k0, v0)) = prev {
                acc += 0.5 * (kappa - k0) * (v0 + value);
            }
            out.push(acc);
            prev = Some((kappa, value));
        }
        out
    }
}

/// `M`, kept in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MConstant {
    /// `exp(ln_value)`; `+inf` when that overflows.
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub value: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub ln_value: f64,
    pub overflow: bool,
}

impl MConstant {
    pub fn from_ln(ln_value: f64) -> Self {
        let value = math::exp(ln_value);
        Self {
            value,
            ln_value,
            overflow: !value.is_finite(),
        }
    }

    pub fn from_value(value: f64) -> Self {
        Self {
            value,
            ln_value: if value > 0.0 {
                math::ln(value)
            } else {
                f64::NEG_INFINITY
            },
            overflow: false,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_value == f64::NEG_INFINITY
    }

    /// `ln(M^2 / 4)`.
    pub fn ln_quarter_square(&self) -> f64 {
        2.0 * self.ln_value - 2.0 * LN_2
    }
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        math::ln(x)
    } else {
        f64::NEG_INFINITY
    }
}

/// `M = sup ||v_x|| + 4 [(||v(0)||^2 + ||v_xx(0)||^2) exp(gamma ||v_x||_tau^2 + gamma ell^2 ||v(0)||^2 / pi^2)]^(1/2)`.
pub fn compute_m(history: &HistoryNorms, gamma: f64, ell: f64) -> MConstant {
    let p = history.l2_0 * history.l2_0 + history.h2_0 * history.h2_0;
    let exponent =
        gamma * (history.h1_sq_window + ell * ell * history.l2_0 * history.l2_0 / (PI * PI));
    let ln_bracket = if p > 0.0 {
        2.0 * LN_2 + 0.5 * (math::ln(p) + exponent)
    } else {
        f64::NEG_INFINITY
    };
    MConstant::from_ln(math::log_add_exp(ln_or_neg_inf(history.sup_h1), ln_bracket))
}

/// Parameters shared by the interval and rate formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    pub nu: f64,
    pub mu: f64,
    pub ell: f64,
    pub sup_a: f64,
}

/// Roots `(tau_1, tau_2)` of `omega(tau) = 0`.
///
/// Evaluated with `q = M^-2` and the upper root rationalized,
/// `tau_2 = 2 nu^2 q / (mu ell + R)`, which is algebraically identical to the
/// quadratic-formula form and avoids its cancellation.
pub fn compute_tau_interval(
    m: &MConstant,
    nu: f64,
    mu: f64,
    ell: f64,
    sup_a: f64,
) -> Result<(f64, f64)> {
    if m.is_zero() {
        return Err(Error::Degenerate(
            "M = 0: zero history needs no delay bound".into(),
        ));
    }
    let q = math::exp(-2.0 * m.ln_value);
    let pi2 = PI * PI;
    let b = nu * nu * ell + sup_a * sup_a * math::powi(ell, 5) / (pi2 * pi2);
    let d = math::powi(ell, 4) / pi2 + b * q;
    let r = math::sqrt(mu * mu * ell * ell + 12.0 * nu * nu * d);
    let tau1 = -q * (mu * ell + r) / (6.0 * d);
    let tau2 = 2.0 * nu * nu * q / (mu * ell + r);
    Ok((tau1, tau2))
}

/// `omega(tau) = nu - sqrt(tau ell [3 ell^3 tau M^4 / pi^2 + (mu + 3 nu^2 tau + 3 ||a||^2 ell^4 tau / pi^4) M^2])`
/// with no range check; may be negative or `-inf`.
pub fn omega_unchecked(tau: f64, m: &MConstant, rates: &RateInputs) -> f64 {
    if tau == 0.0 {
        return rates.nu;
    }
    let RateInputs { nu, mu, ell, sup_a } = *rates;
    let m2 = math::exp(2.0 * m.ln_value);
    let pi2 = PI * PI;
    let bracket =
        mu + 3.0 * nu * nu * tau + 3.0 * sup_a * sup_a * math::powi(ell, 4) * tau / (pi2 * pi2);
    let radicand = tau * ell * (3.0 * math::powi(ell, 3) * tau * m2 * m2 / pi2 + bracket * m2);
    nu - math::sqrt(radicand)
}

/// `min(omega (pi / ell)^2, mu)`.
pub fn omega_tilde_of(omega: f64, mu: f64, ell: f64) -> f64 {
    (omega * PI * PI / (ell * ell)).min(mu)
}

/// `(omega, omega_tilde)` for `0 <= tau <= tau_2`.
pub fn compute_omega(
    tau: f64,
    m: &MConstant,
    nu: f64,
    mu: f64,
    ell: f64,
    sup_a: f64,
) -> Result<(f64, f64)> {
    if tau < 0.0 {
        return Err(Error::Hypothesis(format!(
            "delay must be non-negative, got {tau}"
        )));
    }
    let rates = RateInputs { nu, mu, ell, sup_a };
    if tau > 0.0 {
        let (_, tau2) = compute_tau_interval(m, nu, mu, ell, sup_a)?;
        if tau > tau2 {
            return Err(Error::Hypothesis(format!(
                "tau = {tau} exceeds tau_2 = {tau2}; the dissipation rate would be negative"
            )));
        }
    }
    let omega = omega_unchecked(tau, m, &rates);
    // Round-off at tau = tau_2 can leave a tiny negative value.
    let omega_tilde = omega_tilde_of(omega, mu, ell).max(0.0);
    Ok((omega, omega_tilde))
}

/// The `sigma` search: the condition, its lattice and the window integrals.
pub struct SigmaProblem {
    pub gamma: f64,
    pub m: MConstant,
    pub rates: RateInputs,
    pub tau2: f64,
    /// `||v(0)||^2`.
    pub l2_0_sq: f64,
    /// `ln(||v(0)||^2 + ||v_xx(0)||^2)`.
    pub ln_p: f64,
    lattice: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Outcome of the `sigma` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaResult {
    pub sigma: f64,
    pub tau_hat: f64,
    /// Whether the condition holds at `tau = 0`; when false, `sigma = 0`.
    pub holds_at_zero: bool,
    /// Whether the condition held on the whole lattice, so `sigma` was capped at `tau_2`.
    pub capped: bool,
}

impl SigmaProblem {
    pub fn new(
        probe: &HistoryProbe<'_>,
        history: &HistoryNorms,
        gamma: f64,
        m: MConstant,
        rates: RateInputs,
        tau2: f64,
    ) -> Self {
        let points = SIGMA_LATTICE_POINTS;
        let lattice: Vec<f64> = (0..points)
            .map(|i| tau2 * i as f64 / (points - 1) as f64)
            .collect();
        let cumulative = probe.cumulative_h1_sq(&lattice);
        let p = history.l2_0 * history.l2_0 + history.h2_0 * history.h2_0;
        Self {
            gamma,
            m,
            rates,
            tau2,
            l2_0_sq: history.l2_0 * history.l2_0,
            ln_p: ln_or_neg_inf(p),
            lattice,
            cumulative,
        }
    }

    /// `integral_{-kappa}^0 ||v_x||^2`, linear between lattice points.
    fn window(&self, kappa: f64) -> f64 {
        if self.tau2 <= 0.0 || kappa <= 0.0 {
            return 0.0;
        }
        let pos = (kappa / self.tau2).clamp(0.0, 1.0) * (self.lattice.len() - 1) as f64;
        let i = (math::floor(pos) as usize).min(self.lattice.len() - 2);
        let w = pos - i as f64;
        self.cumulative[i] * (1.0 - w) + self.cumulative[i + 1] * w
    }

    /// Log of the left-hand side of the `sigma` condition at delay `kappa`.
    pub fn ln_lhs(&self, kappa: f64) -> f64 {
        if self.ln_p == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let omega = omega_unchecked(kappa, &self.m, &self.rates);
        let omega_tilde = omega_tilde_of(omega, self.rates.mu, self.rates.ell);
        let ell = self.rates.ell;
        let tail = if self.l2_0_sq == 0.0 {
            0.0
        } else if omega_tilde > 0.0 {
            ell * ell * self.l2_0_sq / (PI * PI * omega_tilde)
        } else {
            f64::INFINITY
        };
        self.ln_p + self.gamma * math::exp(omega_tilde * kappa) * (self.window(kappa) + tail)
    }

    pub fn holds(&self, kappa: f64) -> bool {
        self.ln_lhs(kappa) <= self.m.ln_quarter_square()
    }

    fn refine(&self, mut good: f64, mut bad: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (good + bad);
            if mid <= good || mid >= bad {
                break;
            }
            if self.holds(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    }

    fn finish(&self, sigma: f64, holds_at_zero: bool, capped: bool) -> SigmaResult {
        SigmaResult {
            sigma,
            tau_hat: sigma.min(self.tau2),
            holds_at_zero,
            capped,
        }
    }

    /// Longest lattice prefix on which the condition holds, refined by
    /// bisection inside the first failing cell.
    pub fn scan(&self) -> SigmaResult {
        if !self.holds(0.0) {
            return self.finish(0.0, false, false);
        }
        let mut last_good = 0usize;
        for (i, &kappa) in self.lattice.iter().enumerate().skip(1) {
            if self.holds(kappa) {
                last_good = i;
            } else {
                let sigma = self.refine(self.lattice[last_good], kappa);
                return self.finish(sigma, true, false);
            }
        }
        self.finish(self.tau2, true, true)
    }

    /// Plain bisection over `[0, tau_2]`; agrees with [`SigmaProblem::scan`] when
    /// the condition is monotone.
    pub fn bisect(&self) -> SigmaResult {
        if !self.holds(0.0) {
            return self.finish(0.0, false, false);
        }
        if self.holds(self.tau2) {
            return self.finish(self.tau2, true, true);
        }
        self.finish(self.refine(0.0, self.tau2), true, false)
    }
}

/// `sigma` by lattice scan and `tau_hat = min(sigma, tau_2)`.
pub fn compute_sigma_and_tau_hat(problem: &SigmaProblem) -> SigmaResult {
    problem.scan()
}

/// Every constant of the exponential-stability bound for one configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub p: f64,
    pub gamma: f64,
    #[cfg_attr(feature = "serde", serde(rename = "M", with = "crate::serde_float"))]
    pub m: f64,
    #[cfg_attr(feature = "serde", serde(rename = "ln_M", with = "crate::serde_float"))]
    pub ln_m: f64,
    #[cfg_attr(feature = "serde", serde(rename = "M_overflow"))]
    pub m_overflow: bool,
    /// Delay the report was evaluated at.
    pub tau: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub omega: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_float"))]
    pub omega_tilde: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub sigma: f64,
    pub tau_hat: f64,
    /// `nu^2 < 4 p mu sqrt(a0)`.
    pub nu_condition: bool,
    pub damping: HypothesisReport,
    /// `tau < tau_hat`.
    pub tau_below_tau_hat: bool,
    /// The history and its slope vanish at both ends.
    pub history_clamped: bool,
    pub sigma_holds_at_zero: bool,
    pub sigma_capped: bool,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub history: HistoryNorms,
}

impl StabilityReport {
    /// Builds the report for the delay `tau`, using history slots spaced `dt`.
    #[allow(clippy::too_many_arguments)]
    pub fn compute(
        params: &ModelParams,
        profile: &DampingProfile,
        history: &HistorySpec,
        ops: &Operators,
        quadrature: &Quadrature,
        tau: f64,
        dt: f64,
        p: f64,
    ) -> Result<Self> {
        let damping = validate_damping(profile, &ops.grid)?;
        let gamma = compute_gamma(p, damping.a0, params.mu, params.nu, params.ell)?;
        let probe = HistoryProbe::new(history, ops, quadrature);
        let norms = probe.norms(tau, dt);
        let m = compute_m(&norms, gamma, params.ell);
        let sup_a = damping.sup_norm;
        let (tau1, tau2) = compute_tau_interval(&m, params.nu, params.mu, params.ell, sup_a)?;
        let rates = RateInputs {
            nu: params.nu,
            mu: params.mu,
            ell: params.ell,
            sup_a,
        };
        let omega = omega_unchecked(tau, &m, &rates);
        let mut omega_tilde = omega_tilde_of(omega, params.mu, params.ell);
        if tau <= tau2 {
            omega_tilde = omega_tilde.max(0.0);
        }
        let sigma = SigmaProblem::new(&probe, &norms, gamma, m, rates, tau2).scan();
        Ok(Self {
            p,
            gamma,
            m: m.value,
            ln_m: m.ln_value,
            m_overflow: m.overflow,
            tau,
            omega,
            omega_tilde,
            tau1,
            tau2,
            sigma: sigma.sigma,
            tau_hat: sigma.tau_hat,
            nu_condition: true,
            damping,
            tau_below_tau_hat: tau < sigma.tau_hat,
            history_clamped: history.is_clamped_compatible(),
            sigma_holds_at_zero: sigma.holds_at_zero,
            sigma_capped: sigma.capped,
            delta1: 1.0 / 6.0,
            delta2: 1.0 / 6.0,
            delta3: if sup_a > 0.0 {
                1.0 / (6.0 * sup_a)
            } else {
                f64::INFINITY
            },
            history: norms,
        })
    }

    pub fn m_constant(&self) -> MConstant {
        MConstant {
            value: self.m,
            ln_value: self.ln_m,
            overflow: self.m_overflow,
        }
    }

    /// All hypotheses of the decay bound hold for this configuration.
    pub fn applicable(&self) -> bool {
        self.nu_condition
            && self.damping.all_satisfied()
            && self.tau_below_tau_hat
            && self.history_clamped
    }
}

/// Result of comparing a trajectory with the decay bound.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "outcome", rename_all = "snake_case"))]
pub enum BoundCheck {
    NotApplicable { reason: String },
    Checked { violations: usize, steps: usize },
}

impl BoundCheck {
    pub fn violations(&self) -> Option<usize> {
        match self {
            BoundCheck::Checked { violations, .. } => Some(*violations),
            BoundCheck::NotApplicable { .. } => None,
        }
    }
}

/// Counts steps with `||u_xx||^2 > exp(ln_quarter_m2 - rate t) (1 + tol)`.
pub fn count_bound_violations(norms: &NormSeries, ln_quarter_m2: f64, rate: f64) -> usize {
    let ln_slack = libm::log1p(BOUND_CHECK_TOL);
    norms
        .t
        .iter()
        .zip(&norms.h2_u)
        .filter(|(t, h2)| 2.0 * ln_or_neg_inf(**h2) > ln_quarter_m2 - rate * **t + ln_slack)
        .count()
}

/// Checks `||u_xx(t)||^2 <= (M^2 / 4) exp(-omega_tilde t)` along a healthy run.
pub fn theorem_bound_check(
    norms: &NormSeries,
    report: &StabilityReport,
    healthy: bool,
) -> BoundCheck {
    let reason = if !healthy {
        Some("run did not stay healthy")
    } else if !report.damping.all_satisfied() {
        Some("damping profile violates a(x) > a0 > 0, a'' <= 0 or a'''' >= 0")
    } else if !report.nu_condition {
        Some("nu^2 < 4 p mu sqrt(a0) fails")
    } else if !report.tau_below_tau_hat {
        Some("tau is not below tau_hat")
    } else if !report.history_clamped {
        Some("history does not satisfy the clamped boundary conditions")
    } else {
        None
    };
    if let Some(reason) = reason {
        return BoundCheck::NotApplicable {
            reason: reason.into(),
        };
    }
    BoundCheck::Checked {
        violations: count_bound_violations(
            norms,
            report.m_constant().ln_quarter_square(),
            report.omega_tilde,
        ),
        steps: norms.len(),
    }
}

/// Fraction of steps where the discrete energy derivative exceeds
/// `-2 omega ||u_x||^2 - 2 mu ||u_xx||^2 + 10 dt` (norms taken at the later time).
pub fn dissipation_check(norms: &NormSeries, omega: f64, mu: f64, dt: f64) -> f64 {
    let steps = norms.len().saturating_sub(1);
    if steps == 0 {
        return 0.0;
    }
    let tol = DISSIPATION_TOL_STEPS * dt;
    let violations = (0..steps)
        .filter(|&k| {
            let (a, b) = (norms.l2_u[k], norms.l2_u[k + 1]);
            let rate = (b * b - a * a) / dt;
            let h1 = norms.h1_u[k + 1];
            let h2 = norms.h2_u[k + 1];
            rate > -2.0 * omega * h1 * h1 - 2.0 * mu * h2 * h2 + tol
        })
        .count();
    violations as f64 / steps as f64
}

/// Least-squares line through `(t, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayFit {
    pub window: [f64; 2],
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `ln value = intercept + slope t` over samples with `t` in `window`.
pub fn fit_decay(t: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ta, tb) = window;
    let eps = 1e-9 * tb.abs().max(1.0);
    let mut n = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (&ti, &vi) in t.iter().zip(values) {
        if ti < ta - eps || ti > tb + eps {
            continue;
        }
        if !(vi > 0.0) || !vi.is_finite() {
            return Err(Error::NonPositiveInWindow { t: ti, value: vi });
        }
        let y = math::ln(vi);
        points.push((ti, y));
        n += 1.0;
        sx += ti;
        sy += y;
    }
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "fit window [{ta}, {tb}] holds {} samples, need at least 2",
            points.len()
        )));
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("fit window holds a single time".into()));
    }
    // Zero variance in the values: a flat line fits exactly.
    let flat = syy <= 1e-24 * n * (1.0 + my * my);
    let slope = if flat { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let r_squared = if flat {
        1.0
    } else {
        let ss_res: f64 = points
            .iter()
            .map(|&(x, y)| math::powi(y - intercept - slope * x, 2))
            .sum();
        (1.0f64 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        window: [ta, tb],
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::model::SpaceProfile;

    fn setup(n: usize) -> (Operators, Quadrature) {
        let g = SpatialGrid::new(1.0, n).unwrap();
        (Operators::assemble(&g), Quadrature::trapezoidal(&g))
    }

    #[test]
    fn sine_norms() {
        let (ops, q) = setup(999);
        let u = StateVector::new(ops.grid.sample(|x| libm::sin(PI * x)), 0.0);
        let a = alloc::vec![1.0; 999];
        let r = norms_of(&u, &ops, &q, &a);
        let s2 = core::f64::consts::FRAC_1_SQRT_2;
        assert!((r.l2_u - s2).abs() < 1e-4);
        // sin(pi x) has nonzero slope at the ends, which the interior rule misses.
        assert!((r.h1_u - PI * s2).abs() < 5e-3);
        assert!((r.h2_u - PI * PI * s2).abs() < 1e-3);
        assert!((r.weighted - r.l2_u).abs() < 1e-15);
    }

    #[test]
    fn zero_norms_and_ratios() {
        let (ops, q) = setup(20);
        let r = norms_of(&StateVector::zeros(20, 0.0), &ops, &q, &[1.0; 20]);
        assert_eq!((r.l2_u, r.h1_u, r.h2_u, r.weighted), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(wirtinger_check(&r, 1.0), (0.0, 0.0));
    }

    #[test]
    fn bump_norm() {
        let (ops, q) = setup(999);
        let u = StateVector::new(ops.grid.sample(|x| x * x * (1.0 - x) * (1.0 - x)), 0.0);
        let r = norms_of(&u, &ops, &q, &[0.0; 999]);
        assert!((r.l2_u * r.l2_u - 1.0 / 630.0).abs() < 1e-6);
    }

    #[test]
    fn wirtinger_sine_saturates() {
        let (ops, q) = setup(999);
        let u = StateVector::new(ops.grid.sample(|x| libm::sin(PI * x)), 0.0);
        let (r1, r2) = wirtinger_check(&norms_of(&u, &ops, &q, &[0.0; 999]), 1.0);
        let tol = WIRTINGER_SLACK * ops.grid.h();
        assert!((r1 - 1.0).abs() < tol, "{r1}");
        assert!((r2 - 1.0).abs() < tol, "{r2}");
    }

    #[test]
    fn wirtinger_bump_strict() {
        // Exact integrals: ||u||^2 = 1/630, ||u_x||^2 = 2/105, ||u_xx||^2 = 4/5.
        let r1_exact = (1.0 / 630.0) * PI * PI / (2.0 / 105.0);
        let r2_exact = (2.0 / 105.0) * PI * PI / (4.0 / 5.0);
        assert!(r1_exact < 1.0 && r2_exact < 1.0);
        let (ops, q) = setup(999);
        let u = StateVector::new(ops.grid.sample(|x| x * x * (1.0 - x) * (1.0 - x)), 0.0);
        let (r1, r2) = wirtinger_check(&norms_of(&u, &ops, &q, &[0.0; 999]), 1.0);
        assert!((r1 - r1_exact).abs() < 1e-3 && r1 < 1.0);
        assert!((r2 - r2_exact).abs() < 1e-2 && r2 < 1.0);
    }

    #[test]
    fn gamma_hypothesis() {
        assert!(matches!(
            compute_gamma(1.0, 1.0, 0.001, 0.1, 1.0),
            Err(Error::Hypothesis(_))
        ));
        assert!(compute_gamma(1.0, 0.0, 0.001, 0.01, 1.0).is_err());
        assert!(compute_gamma(1.5, 1.0, 0.001, 0.01, 1.0).is_err());
        let g: Vec<f64> = [0.01, 0.04, 0.06]
            .iter()
            .map(|&nu| compute_gamma(1.0, 1.0, 0.001, nu, 1.0).unwrap())
            .collect();
        assert!(g[0] < g[1] && g[1] < g[2]);
    }

    #[test]
    fn zero_history_gives_zero_m() {
        let (ops, q) = setup(30);
        let spec = HistorySpec::zero();
        let norms = HistoryProbe::new(&spec, &ops, &q).norms(1.0, 0.01);
        let m = compute_m(&norms, 100.0, 1.0);
        assert_eq!(m.value, 0.0);
        assert!(m.is_zero());
        assert!(matches!(
            compute_tau_interval(&m, 0.01, 0.001, 1.0, 1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn m_scaling_monotone() {
        let (ops, q) = setup(99);
        let gamma = compute_gamma(1.0, 1.0, 0.001, 0.01, 1.0).unwrap();
        let m_of = |amp: f64| {
            let spec = HistorySpec::constant(SpaceProfile::Sine {
                amplitude: amp,
                k: 1.0,
            });
            compute_m(
                &HistoryProbe::new(&spec, &ops, &q).norms(0.5, 0.01),
                gamma,
                1.0,
            )
        };
        for amp in [1e-3, 1e-2, 1.0] {
            assert!(m_of(0.5 * amp).ln_value <= m_of(amp).ln_value);
        }
    }

    #[test]
    fn omega_identities() {
        let m = MConstant::from_value(1.0);
        let (nu, mu, ell, a) = (0.01, 0.001, 1.0, 1.0);
        let (omega, _) = compute_omega(0.0, &m, nu, mu, ell, a).unwrap();
        assert_eq!(omega, nu);
        let (_, tau2) = compute_tau_interval(&m, nu, mu, ell, a).unwrap();
        let (omega, omega_tilde) = compute_omega(tau2, &m, nu, mu, ell, a).unwrap();
        assert!(omega.abs() <= 1e-12 * nu, "{omega}");
        assert!(omega_tilde >= 0.0);
        assert!(compute_omega(tau2 * 1.01, &m, nu, mu, ell, a).is_err());
        // Large mu selects the omega branch.
        let (_, omega_tilde) = compute_omega(0.0, &m, nu, 1.0, ell, a).unwrap();
        assert_eq!(omega_tilde, nu * PI * PI);
    }

    #[test]
    fn inviscid_limit_closes_interval() {
        let m = MConstant::from_value(2.0);
        let (tau1, tau2) = compute_tau_interval(&m, 0.0, 0.001, 1.0, 1.0).unwrap();
        assert_eq!(tau2, 0.0);
        assert!(tau1 < 0.0);
    }

    #[test]
    fn decay_fit_exact() {
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|&x| libm::exp(-2.0 * x)).collect();
        let f = fit_decay(&t, &v, (0.0, 10.0)).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);

        let c = alloc::vec![3.0; t.len()];
        let f = fit_decay(&t, &c, (2.0, 10.0)).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r_squared, 1.0);

        let scaled: Vec<f64> = v.iter().map(|x| 7.0 * x).collect();
        let g = fit_decay(&t, &scaled, (0.0, 10.0)).unwrap();
        assert!((g.slope - fit_decay(&t, &v, (0.0, 10.0)).unwrap().slope).abs() < 1e-12);
    }

    #[test]
    fn decay_fit_rejects_nonpositive() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let v = [1.0, 0.5, 0.0, 0.1];
        match fit_decay(&t, &v, (0.0, 3.0)) {
            Err(Error::NonPositiveInWindow { t, .. }) => assert_eq!(t, 2.0),
            other => panic!("unexpected {other:?}"),
        }
        // Outside the window it is ignored.
        assert!(fit_decay(&t, &v, (0.0, 1.0)).is_ok());
    }

    #[test]
    fn bound_check_zero_and_not_applicable() {
        let mut norms = NormSeries::default();
        for k in 0..10 {
            norms.push(NormRow {
                t: k as f64 * 0.1,
                l2_u: 0.0,
                h1_u: 0.0,
                h2_u: 0.0,
                weighted: 0.0,
            });
        }
        assert_eq!(count_bound_violations(&norms, -10.0, 0.0), 0);
        assert_eq!(dissipation_check(&norms, 0.01, 0.001, 0.1), 0.0);
    }
}
