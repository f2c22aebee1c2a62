//! Solver and stability diagnostics for the delayed fourth-order equation
//!
//! `u_t - nu u_xx + mu u_xxxx + u(x, t - tau) u_x + a(x) u = 0` on `[0, ell]`
//! with clamped ends `u = u_x = 0` and a prescribed history on `[-tau, 0]`.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line live
//! in the companion `delaydisp-sim` crate.

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod math;
#[cfg(feature = "serde")]
mod serde_float;

pub mod analysis;
pub mod banded;
pub mod delayline;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod state;
pub mod verify;

pub use analysis::{
    compute_gamma, compute_m, compute_omega, compute_sigma_and_tau_hat, compute_tau_interval,
    dissipation_check, fit_decay, norms_of, theorem_bound_check, wirtinger_check, BoundCheck,
    DecayFit, HistoryNorms, MConstant, NormRow, NormSeries, StabilityReport,
};
pub use banded::BandedLu;
pub use delayline::{init_from_history, HistoryBuffer, TauSnap};
pub use error::{Error, Result};
pub use grid::{BandedOperator, Operators, Quadrature, SpatialGrid};
pub use integrator::{
    run, step_bdf1, step_bdf2, BdfOrder, Forcing, PicardSettings, RunConfig, RunOptions, RunStats,
    RunStatus, StepOperator, Thresholds, Trajectory,
};
pub use model::{
    sample_history, sample_profile, validate_damping, DampingFamily, DampingProfile, HistorySpec,
    HypothesisReport, ModelParams, SpaceProfile, TimeProfile,
};
pub use state::StateVector;
