//! Semi-implicit BDF1/BDF2 time stepping.
//!
//! Each step solves
//! `(alpha I + mu D4 - nu D2 + diag(a) + diag(c) D1) u = rhs`
//! where `c` is the delayed state. For `tau >= dt` the coefficient is already
//! in the history buffer, so a step is one banded factorization and solve.
//! For `tau = 0` the coefficient is the unknown itself and is resolved by
//! Picard iteration.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{norms_of, NormSeries};
use crate::banded::BandedLu;
use crate::delayline::{init_from_history, HistoryBuffer, TauSnap};
use crate::error::{Error, Result};
use crate::grid::{BandedOperator, Operators, Quadrature, SpatialGrid};
use crate::math;
use crate::model::{sample_profile, DampingProfile, HistorySpec, ModelParams};
use crate::state::StateVector;

/// Source term `f(x, t)`; only used for manufactured-solution checks.
pub trait Forcing {
    fn value(&self, x: f64, t: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> Forcing for F {
    fn value(&self, x: f64, t: f64) -> f64 {
        self(x, t)
    }
}

/// Divergence and steady-state classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Thresholds {
    /// A run diverges once `max |u|` exceeds this.
    pub blowup: f64,
    /// Steady once `||u^{n+1} - u^n|| / dt` stays below this...
    pub steady_tol: f64,
    /// ...for this long.
    pub steady_window: f64,
    /// States with `||u||` below this are decaying to zero, not steady.
    pub steady_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            blowup: 1e6,
            steady_tol: 1e-8,
            steady_window: 1.0,
            steady_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PicardSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 25,
        }
    }
}

/// Time integrator order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub enum BdfOrder {
    One,
    Two,
}

impl TryFrom<u8> for BdfOrder {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(BdfOrder::One),
            2 => Ok(BdfOrder::Two),
            _ => Err(Error::Config(format!("bdf_order must be 1 or 2, got {v}"))),
        }
    }
}

impl From<BdfOrder> for u8 {
    fn from(o: BdfOrder) -> u8 {
        match o {
            BdfOrder::One => 1,
            BdfOrder::Two => 2,
        }
    }
}

/// The step matrix without the mass and convection terms, plus a cached
/// factorization of the last full matrix.
#[derive(Debug, Clone)]
pub struct StepOperator {
    /// `mu D4 - nu D2 + diag(a)`.
    base: BandedOperator,
    d1: BandedOperator,
    key: Option<(f64, Vec<f64>)>,
    lu: Option<BandedLu>,
    factorizations: usize,
}

impl StepOperator {
    pub fn new(ops: &Operators, params: &ModelParams, a_samples: &[f64]) -> Self {
        let mut base = ops.d4.scaled(params.mu).widened(2, 2);
        base.add_scaled(-params.nu, &ops.d2);
        base.add_diagonal(a_samples);
        Self {
            base,
            d1: ops.d1.clone(),
            key: None,
            lu: None,
            factorizations: 0,
        }
    }

    /// `alpha I + base + diag(c) D1`.
    pub fn matrix(&self, alpha: f64, c: &[f64]) -> BandedOperator {
        let mut m = self.base.clone();
        m.add_identity(alpha);
        m.add_scaled(1.0, &self.d1.row_scaled(c));
        m
    }

    /// Solves with the matrix for `(alpha, c)`, refactoring only when they changed.
    pub fn solve(&mut self, alpha: f64, c: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let hit = matches!(&self.key, Some((a, cc)) if *a == alpha && cc.as_slice() == c);
        if !hit {
            self.lu = Some(BandedLu::factor(&self.matrix(alpha, c))?);
            self.key = Some((alpha, c.to_vec()));
            self.factorizations += 1;
        }
        Ok(self.lu.as_ref().expect("factorization present").solve(rhs))
    }

    pub fn factorizations(&self) -> usize {
        self.factorizations
    }
}

/// Everything a single step needs besides the states.
pub struct StepContext<'a> {
    pub grid: &'a SpatialGrid,
    pub params: &'a ModelParams,
    pub forcing: Option<&'a dyn Forcing>,
    pub picard: PicardSettings,
    /// When false the delayed coefficient is forced to zero.
    pub convection: bool,
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: StateVector,
    /// Picard iterations used (zero when the coefficient was known data).
    pub picard_iterations: usize,
    /// Max-norm change between successive Picard iterates.
    pub picard_increments: Vec<f64>,
    /// Picard stalled and the lagged-coefficient step was used instead.
    pub lagged_fallback: bool,
}

fn forcing_at(ctx: &StepContext<'_>, t: f64) -> Option<Vec<f64>> {
    ctx.forcing
        .map(|f| ctx.grid.nodes().map(|x| f.value(x, t)).collect())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn advance(
    op: &mut StepOperator,
    buffer: &HistoryBuffer,
    ctx: &StepContext<'_>,
    alpha: f64,
    mut rhs: Vec<f64>,
    u_n: &StateVector,
    t_next: f64,
) -> Result<StepOutcome> {
    if let Some(f) = forcing_at(ctx, t_next) {
        for (r, fi) in rhs.iter_mut().zip(f) {
            *r += fi;
        }
    }
    let n = rhs.len();
    if !ctx.convection {
        let values = op.solve(alpha, &vec![0.0; n], &rhs)?;
        return Ok(StepOutcome {
            state: StateVector::new(values, t_next),
            picard_iterations: 0,
            picard_increments: Vec::new(),
            lagged_fallback: false,
        });
    }
    if buffer.tau() > 0.0 {
        let c = buffer.delayed_state(t_next)?;
        let values = op.solve(alpha, &c.values, &rhs)?;
        return Ok(StepOutcome {
            state: StateVector::new(values, t_next),
            picard_iterations: 0,
            picard_increments: Vec::new(),
            lagged_fallback: false,
        });
    }

    let lagged = op.solve(alpha, &u_n.values, &rhs)?;
    let mut current = lagged.clone();
    let mut previous = u_n.values.clone();
    let mut increments = Vec::new();
    for iter in 1..=ctx.picard.max_iter {
        let delta = max_diff(&current, &previous);
        increments.push(delta);
        let scale = current.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if delta <= ctx.picard.tol * scale {
            return Ok(StepOutcome {
                state: StateVector::new(current, t_next),
                picard_iterations: iter,
                picard_increments: increments,
                lagged_fallback: false,
            });
        }
        if !delta.is_finite() {
            break;
        }
        let next = op.solve(alpha, &current, &rhs)?;
        previous = core::mem::replace(&mut current, next);
    }
    Ok(StepOutcome {
        state: StateVector::new(lagged, t_next),
        picard_iterations: ctx.picard.max_iter,
        picard_increments: increments,
        lagged_fallback: true,
    })
}

/// Backward Euler step from `state_n` to `t_n + dt`.
pub fn step_bdf1(
    state_n: &StateVector,
    buffer: &HistoryBuffer,
    op: &mut StepOperator,
    ctx: &StepContext<'_>,
    t_next: f64,
) -> Result<StepOutcome> {
    let dt = buffer.dt();
    let alpha = 1.0 / dt;
    let rhs = state_n.values.iter().map(|v| v * alpha).collect();
    advance(op, buffer, ctx, alpha, rhs, state_n, t_next)
}

/// Second-order BDF step using the two most recent states.
pub fn step_bdf2(
    state_n: &StateVector,
    state_nm1: &StateVector,
    buffer: &HistoryBuffer,
    op: &mut StepOperator,
    ctx: &StepContext<'_>,
    t_next: f64,
) -> Result<StepOutcome> {
    if state_n.len() != state_nm1.len() {
        return Err(Error::DimensionMismatch {
            expected: state_n.len(),
            got: state_nm1.len(),
        });
    }
    let dt = buffer.dt();
    let alpha = 1.5 / dt;
    let rhs = state_n
        .values
        .iter()
        .zip(&state_nm1.values)
        .map(|(a, b)| (4.0 * a - b) / (2.0 * dt))
        .collect();
    advance(op, buffer, ctx, alpha, rhs, state_n, t_next)
}

/// Complete description of one simulation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunConfig {
    pub params: ModelParams,
    pub profile: DampingProfile,
    pub history: HistorySpec,
    /// Interior nodes.
    pub n: usize,
    pub dt: f64,
    #[cfg_attr(feature = "serde", serde(rename = "T_end"))]
    pub t_end: f64,
    pub bdf_order: BdfOrder,
    /// Store a full profile every this many steps.
    pub snapshot_every: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if (self.profile.ell() - self.params.ell).abs() > 1e-12 * self.params.ell {
            return Err(Error::Config(format!(
                "damping profile built for ell = {} but params use ell = {}",
                self.profile.ell(),
                self.params.ell
            )));
        }
        if self.n < 5 {
            return Err(Error::Config(format!(
                "n must be at least 5, got {}",
                self.n
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.params.tau > 0.0 && self.dt > self.params.tau {
            return Err(Error::Config(format!(
                "dt = {} exceeds tau = {}",
                self.dt, self.params.tau
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "T_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        self.history.validate()
    }

    /// Number of steps to reach `T_end`.
    pub fn steps(&self) -> usize {
        math::round(self.t_end / self.dt) as usize
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.params.ell, self.n)
    }
}

/// Per-run knobs that are not part of the physical configuration.
#[derive(Clone, Copy)]
pub struct RunOptions<'a> {
    pub thresholds: Thresholds,
    pub picard: PicardSettings,
    pub forcing: Option<&'a dyn Forcing>,
    pub convection: bool,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            picard: PicardSettings::default(),
            forcing: None,
            convection: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "state", rename_all = "snake_case"))]
pub enum RunStatus {
    Healthy,
    Diverged {
        t_blowup: f64,
    },
    /// `t_settle` starts the first quiet window; `residual` is `||u^{n+1} - u^n|| / dt`
    /// and `level` is `||u||` when the window completed.
    Steady {
        t_settle: f64,
        residual: f64,
        level: f64,
    },
}

impl RunStatus {
    pub fn is_diverged(&self) -> bool {
        matches!(self, RunStatus::Diverged { .. })
    }

    pub fn is_steady(&self) -> bool {
        matches!(self, RunStatus::Steady { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Healthy => "healthy",
            RunStatus::Diverged { .. } => "diverged",
            RunStatus::Steady { .. } => "steady",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunStats {
    pub steps: usize,
    pub factorizations: usize,
    pub picard_iterations: usize,
    pub picard_max_iterations: usize,
    pub picard_fallbacks: usize,
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub norms: NormSeries,
    pub snapshots: Vec<StateVector>,
    pub final_state: StateVector,
    pub status: RunStatus,
    pub stats: RunStats,
    pub tau_snap: TauSnap,
    pub warnings: Vec<String>,
    /// Error that stopped the run early, if any.
    pub breakdown: Option<Error>,
}

impl Trajectory {
    pub fn healthy(&self) -> bool {
        !self.status.is_diverged() && self.breakdown.is_none()
    }
}

/// Integrates from `t = 0` to `T_end`, recording norms every step.
///
/// A steady classification is latched and integration continues to
/// `T_end`; divergence or a solver breakdown stops the run.
pub fn run(config: &RunConfig, options: &RunOptions<'_>) -> Result<Trajectory> {
    config.validate()?;
    let grid = config.grid()?;
    let ops = Operators::assemble(&grid);
    let quadrature = Quadrature::trapezoidal(&grid);
    let a = sample_profile(&config.profile, &grid);
    let mut buffer = init_from_history(&config.history, &grid, &config.params, config.dt)?;
    let mut op = StepOperator::new(&ops, &config.params, &a);
    let ctx = StepContext {
        grid: &grid,
        params: &config.params,
        forcing: options.forcing,
        picard: options.picard,
        convection: options.convection,
    };

    let dt = config.dt;
    let steps = config.steps();
    let th = options.thresholds;
    let quiet_needed = math::ceil(th.steady_window / dt - 1e-9) as usize;

    let mut norms = NormSeries::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut stats = RunStats::default();
    let mut warnings = Vec::new();
    let mut status = RunStatus::Healthy;
    let mut breakdown = None;

    let mut current = buffer.newest();
    let mut previous: Option<StateVector> = None;
    norms.push(norms_of(&current, &ops, &quadrature, &a));
    snapshots.push(current.clone());
    let mut quiet = 0usize;

    for k in 1..=steps {
        let t_next = k as f64 * dt;
        let outcome = match (config.bdf_order, &previous) {
            (BdfOrder::Two, Some(prev)) => {
                step_bdf2(&current, prev, &buffer, &mut op, &ctx, t_next)
            }
            _ => step_bdf1(&current, &buffer, &mut op, &ctx, t_next),
        };
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                breakdown = Some(e);
                break;
            }
        };
        stats.picard_iterations += outcome.picard_iterations;
        stats.picard_max_iterations = stats.picard_max_iterations.max(outcome.picard_iterations);
        if outcome.lagged_fallback {
            stats.picard_fallbacks += 1;
            if stats.picard_fallbacks == 1 {
                warnings.push(format!(
                    "Picard iteration stalled at t = {t_next}; used the lagged-coefficient step"
                ));
            }
        }
        let next = outcome.state;
        stats.steps = k;

        if !next.is_finite() || next.max_abs() > th.blowup {
            if next.is_finite() {
                norms.push(norms_of(&next, &ops, &quadrature, &a));
            }
            status = RunStatus::Diverged { t_blowup: t_next };
            current = next;
            break;
        }

        let change: Vec<f64> = next
            .values
            .iter()
            .zip(&current.values)
            .map(|(x, y)| x - y)
            .collect();
        let residual = quadrature.norm(&change) / dt;
        let level = quadrature.norm(&next.values);
        if residual < th.steady_tol && level >= th.steady_floor {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= quiet_needed && !status.is_steady() {
            status = RunStatus::Steady {
                t_settle: (k - quiet) as f64 * dt,
                residual,
                level,
            };
        }

        norms.push(norms_of(&next, &ops, &quadrature, &a));
        if k % config.snapshot_every == 0 {
            snapshots.push(next.clone());
        }
        if let Err(e) = buffer.push(next.clone()) {
            breakdown = Some(e);
            current = next;
            break;
        }
        previous = Some(core::mem::replace(&mut current, next));
    }
    stats.factorizations = op.factorizations();
    if buffer.interpolating() {
        warnings.push(format!(
            "tau = {} is not a multiple of dt; delayed values are interpolated",
            config.params.tau
        ));
    }
    Ok(Trajectory {
        norms,
        snapshots,
        final_state: current,
        status,
        stats,
        tau_snap: buffer.snap(),
        warnings,
        breakdown,
    })
}
