//! Ring of past states covering the delay window.
//!
//! Slots are addressed by integer step index; the time of slot `k` is
//! `k * dt`, so stamps form an exact lattice. The initial history fills
//! indices `-K..=0` with `K = ceil(tau / dt)`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::math;
use crate::model::{HistorySpec, ModelParams};
use crate::state::StateVector;

/// Fractional offsets closer than this to an integer count as lattice hits.
const LATTICE_EPS: f64 = 1e-9;

/// How the requested delay was mapped onto the step lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TauSnap {
    pub requested: f64,
    pub effective: f64,
    /// The effective delay differs from the requested one.
    pub snapped: bool,
    /// The effective delay is not a lattice multiple, so lookups interpolate.
    pub interpolating: bool,
}

impl TauSnap {
    /// Snaps `tau` to the nearest multiple of `dt` when it lies strictly
    /// closer than `dt / 2`.
    pub fn resolve(tau: f64, dt: f64) -> Self {
        if tau == 0.0 {
            return Self {
                requested: 0.0,
                effective: 0.0,
                snapped: false,
                interpolating: false,
            };
        }
        let r = tau / dt;
        let k = math::round(r);
        if (r - k).abs() < 0.5 - LATTICE_EPS {
            let effective = k * dt;
            Self {
                requested: tau,
                effective,
                snapped: effective != tau,
                interpolating: false,
            }
        } else {
            Self {
                requested: tau,
                effective: tau,
                snapped: false,
                interpolating: true,
            }
        }
    }

    /// `ceil(tau_eff / dt)`, the number of history steps before `t = 0`.
    pub fn lag_steps(&self, dt: f64) -> i64 {
        math::ceil(self.effective / dt - LATTICE_EPS) as i64
    }
}

#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    dt: f64,
    snap: TauSnap,
    depth: usize,
    /// Step index of the front slot.
    oldest: i64,
    ring: VecDeque<Vec<f64>>,
}

impl HistoryBuffer {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tau(&self) -> f64 {
        self.snap.effective
    }

    pub fn snap(&self) -> TauSnap {
        self.snap
    }

    pub fn interpolating(&self) -> bool {
        self.snap.interpolating
    }

    /// Maximum number of slots the buffer ever holds.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn oldest_time(&self) -> f64 {
        self.oldest as f64 * self.dt
    }

    fn newest_index(&self) -> i64 {
        self.oldest + self.ring.len() as i64 - 1
    }

    pub fn newest_time(&self) -> f64 {
        self.newest_index() as f64 * self.dt
    }

    pub fn newest(&self) -> StateVector {
        StateVector::new(
            self.ring.back().expect("buffer never empty").clone(),
            self.newest_time(),
        )
    }

    /// Stored stamps, oldest first.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.ring.len()).map(move |k| (self.oldest + k as i64) as f64 * self.dt)
    }

    pub fn push(&mut self, state: StateVector) -> Result<()> {
        let expected = (self.newest_index() + 1) as f64 * self.dt;
        if (state.t - expected).abs() > 1e-6 * self.dt {
            return Err(Error::Sequencing {
                expected,
                got: state.t,
            });
        }
        let width = self.ring.back().map_or(state.values.len(), Vec::len);
        if state.values.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: state.values.len(),
            });
        }
        self.ring.push_back(state.values);
        // Keep everything no older than newest - tau - dt.
        let keep = math::floor(self.snap.effective / self.dt + 1.0 + LATTICE_EPS) as i64;
        let min_index = self.newest_index() - keep;
        while self.oldest < min_index {
            self.ring.pop_front();
            self.oldest += 1;
        }
        Ok(())
    }

    /// `u(., t - tau)`: a stored slot on lattice hits, linear interpolation otherwise.
    pub fn delayed_state(&self, t: f64) -> Result<StateVector> {
        let q = t - self.snap.effective;
        let r = q / self.dt;
        let coverage = || Error::Coverage {
            requested: q,
            oldest: self.oldest_time(),
            newest: self.newest_time(),
        };
        let nearest = math::round(r);
        let oldest = self.oldest as f64;
        let newest = self.newest_index() as f64;
        if (r - nearest).abs() <= LATTICE_EPS {
            if nearest < oldest || nearest > newest {
                return Err(coverage());
            }
            let slot = (nearest as i64 - self.oldest) as usize;
            return Ok(StateVector::new(self.ring[slot].clone(), q));
        }
        let lo = math::floor(r);
        if lo < oldest || lo + 1.0 > newest {
            return Err(coverage());
        }
        let w = r - lo;
        let slot = (lo as i64 - self.oldest) as usize;
        let (a, b) = (&self.ring[slot], &self.ring[slot + 1]);
        let values = a
            .iter()
            .zip(b)
            .map(|(x, y)| x * (1.0 - w) + y * w)
            .collect();
        Ok(StateVector::new(values, q))
    }
}

/// Pre-fills the buffer with `v(., -k dt)`, `k = 0..=ceil(tau / dt)`.
///
/// Times before `-tau` (only reached when `tau` is not a lattice multiple)
/// reuse `v(., -tau)`.
pub fn init_from_history(
    spec: &HistorySpec,
    grid: &SpatialGrid,
    params: &ModelParams,
    dt: f64,
) -> Result<HistoryBuffer> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let tau = params.tau;
    if tau > 0.0 && dt > tau {
        return Err(Error::Config(format!(
            "dt = {dt} exceeds the delay tau = {tau}; the delayed value must predate the unknown step"
        )));
    }
    spec.validate()?;
    let snap = TauSnap::resolve(tau, dt);
    let lag = snap.lag_steps(dt);
    let depth = lag as usize + 2;
    let mut ring = VecDeque::with_capacity(depth);
    for k in (0..=lag).rev() {
        let s = (-(k as f64) * dt).max(-tau);
        ring.push_back(spec.sample_unchecked(grid, s));
    }
    Ok(HistoryBuffer {
        dt,
        snap,
        depth,
        oldest: -lag,
        ring,
    })
}
