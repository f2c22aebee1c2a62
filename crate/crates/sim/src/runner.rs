use delaydisp_core::{
    dissipation_check, fit_decay, run, theorem_bound_check, validate_damping, BoundCheck, DecayFit,
    HypothesisReport, NormSeries, Operators, Quadrature, RunConfig, RunOptions, RunStats,
    RunStatus, StabilityReport, StateVector, TauSnap, Thresholds, Trajectory,
};
use serde::{Deserialize, Serialize};

use crate::config::AnalysisSettings;
use crate::error::SimResult;

/// Decay fits start here unless the run is shorter.
pub const FIT_START: f64 = 2.0;

pub fn fit_window(t_end: f64) -> (f64, f64) {
    if t_end > FIT_START {
        (FIT_START, t_end)
    } else {
        (0.0, t_end)
    }
}

/// Log-linear fits of `||u||` and `||u_xx||`; failures are kept as messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub l2: Option<DecayFit>,
    pub h2: Option<DecayFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

/// Everything derived from a norm series and a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub settings: AnalysisSettings,
    pub hypotheses: HypothesisReport,
    pub stability: Option<StabilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_error: Option<String>,
    pub decay: DecaySummary,
    pub bound_check: BoundCheck,
    /// Share of steps violating the discrete energy inequality; needs `omega`.
    pub dissipation_fraction: Option<f64>,
}

pub fn analyze(
    config: &RunConfig,
    settings: &AnalysisSettings,
    norms: &NormSeries,
    healthy: bool,
) -> SimResult<Analysis> {
    let grid = config.grid()?;
    let ops = Operators::assemble(&grid);
    let quadrature = Quadrature::trapezoidal(&grid);
    let hypotheses = validate_damping(&config.profile, &grid)?;

    let (stability, stability_error) = match StabilityReport::compute(
        &config.params,
        &config.profile,
        &config.history,
        &ops,
        &quadrature,
        config.params.tau,
        config.dt,
        settings.p,
    ) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let window = fit_window(config.t_end);
    let mut errors = Vec::new();
    let mut fit = |values: &[f64], label: &str| match fit_decay(&norms.t, values, window) {
        Ok(f) => Some(f),
        Err(e) => {
            errors.push(format!("{label}: {e}"));
            None
        }
    };
    let l2 = fit(&norms.l2_u, "l2");
    let h2 = fit(&norms.h2_u, "h2");

    let bound_check = match &stability {
        Some(report) => theorem_bound_check(norms, report, healthy),
        None => BoundCheck::NotApplicable {
            reason: stability_error.clone().unwrap_or_default(),
        },
    };
    let dissipation_fraction = stability
        .as_ref()
        .filter(|r| r.omega.is_finite())
        .map(|r| dissipation_check(norms, r.omega, config.params.mu, config.dt));

    Ok(Analysis {
        settings: *settings,
        hypotheses,
        stability,
        stability_error,
        decay: DecaySummary { l2, h2, errors },
        bound_check,
        dissipation_fraction,
    })
}

/// Solver diagnostics stored alongside the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub thresholds: Thresholds,
    pub tau_snap: TauSnap,
    pub stats: RunStats,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<String>,
}

/// One simulated configuration with its analysis.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub norms: NormSeries,
    pub snapshots: Vec<StateVector>,
    pub status: RunStatus,
    pub analysis: Analysis,
    pub metadata: RunMetadata,
}

impl RunResult {
    pub fn healthy(&self) -> bool {
        !self.status.is_diverged() && self.metadata.breakdown.is_none()
    }

    pub fn l2_fit(&self) -> Option<&DecayFit> {
        self.analysis.decay.l2.as_ref()
    }
}

pub fn simulate(config: &RunConfig, settings: &AnalysisSettings) -> SimResult<RunResult> {
    simulate_with(config, settings, &RunOptions::default())
}

pub fn simulate_with(
    config: &RunConfig,
    settings: &AnalysisSettings,
    options: &RunOptions<'_>,
) -> SimResult<RunResult> {
    settings.validate()?;
    let traj: Trajectory = run(config, options)?;
    let analysis = analyze(config, settings, &traj.norms, traj.healthy())?;
    Ok(RunResult {
        config: config.clone(),
        status: traj.status,
        analysis,
        metadata: RunMetadata {
            thresholds: options.thresholds,
            tau_snap: traj.tau_snap,
            stats: traj.stats,
            warnings: traj.warnings,
            breakdown: traj.breakdown.map(|e| e.to_string()),
        },
        norms: traj.norms,
        snapshots: traj.snapshots,
    })
}
