//! Independent oracles: a manufactured solution, a dense LU solver and
//! eigenvalue references for the difference operators.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::grid::{assemble_d2, assemble_d4, BandedOperator, Operators, SpatialGrid};
use crate::integrator::{run, BdfOrder, Forcing, RunConfig, RunOptions, StepOperator};
use crate::math;
use crate::model::{DampingProfile, HistorySpec, ModelParams, SpaceProfile, TimeProfile};

/// `u*(x, t) = exp(-t) x^2 (ell - x)^2` and the source term that makes it exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub params: ModelParams,
    pub profile: DampingProfile,
}

impl ManufacturedCase {
    pub fn new(params: ModelParams, profile: DampingProfile) -> Self {
        Self { params, profile }
    }

    fn g(&self, x: f64) -> (f64, f64, f64) {
        let l = self.params.ell;
        let g = x * x * (l - x) * (l - x);
        let g1 = 2.0 * x * (l - x) * (l - 2.0 * x);
        let g2 = 12.0 * x * x - 12.0 * l * x + 2.0 * l * l;
        (g, g1, g2)
    }

    pub fn u_star(&self, x: f64, t: f64) -> f64 {
        math::exp(-t) * self.g(x).0
    }

    /// `u*_t - nu u*_xx + mu u*_xxxx + u*(x, t - tau) u*_x + a u*`.
    pub fn forcing(&self, x: f64, t: f64) -> f64 {
        let ModelParams { nu, mu, tau, .. } = self.params;
        let (g, g1, g2) = self.g(x);
        let a = self.profile.value(x);
        let e = math::exp(-t);
        e * (-g - nu * g2 + 24.0 * mu + a * g) + math::exp(-(t - tau)) * e * g * g1
    }

    /// `v(x, s) = u*(x, s)`.
    pub fn history(&self) -> HistorySpec {
        HistorySpec::Separable {
            phi: SpaceProfile::ClampedBump { amplitude: 1.0 },
            psi: TimeProfile::Exponential { rate: -1.0 },
        }
    }

    pub fn config(&self, n: usize, dt: f64, t_end: f64, bdf_order: BdfOrder) -> RunConfig {
        RunConfig {
            params: self.params,
            profile: self.profile.clone(),
            history: self.history(),
            n,
            dt,
            t_end,
            bdf_order,
            snapshot_every: usize::MAX,
        }
    }

    /// Max-node error against `u*` at `T_end`.
    pub fn error(&self, n: usize, dt: f64, t_end: f64, bdf_order: BdfOrder) -> Result<f64> {
        let config = self.config(n, dt, t_end, bdf_order);
        let options = RunOptions {
            forcing: Some(self),
            ..RunOptions::default()
        };
        let tr = run(&config, &options)?;
        if let Some(e) = tr.breakdown {
            return Err(e);
        }
        let grid = config.grid()?;
        let t = tr.final_state.t;
        Ok(grid
            .nodes()
            .zip(&tr.final_state.values)
            .fold(0.0f64, |m, (x, u)| m.max((u - self.u_star(x, t)).abs())))
    }
}

impl Forcing for ManufacturedCase {
    fn value(&self, x: f64, t: f64) -> f64 {
        self.forcing(x, t)
    }
}

/// Errors along one refinement axis and the observed orders between levels.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStudy {
    /// Mesh sizes (`h` or `dt`), coarsest first.
    pub sizes: Vec<f64>,
    pub errors: Vec<f64>,
    /// `ln(e_i / e_{i+1}) / ln(size_i / size_{i+1})`.
    pub orders: Vec<f64>,
}

impl RefinementStudy {
    pub fn from_errors(sizes: Vec<f64>, errors: Vec<f64>) -> Self {
        let orders = (1..errors.len())
            .map(|i| math::ln(errors[i - 1] / errors[i]) / math::ln(sizes[i - 1] / sizes[i]))
            .collect();
        Self {
            sizes,
            errors,
            orders,
        }
    }

    pub fn monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    /// Order between the two finest levels.
    pub fn observed_order(&self) -> f64 {
        *self.orders.last().unwrap_or(&f64::NAN)
    }

    pub fn table(&self) -> String {
        let mut s = String::from("size        error\n");
        for (h, e) in self.sizes.iter().zip(&self.errors) {
            let _ = writeln!(s, "{h:<11.4e} {e:.4e}");
        }
        s
    }
}

/// Spatial and temporal refinement results.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsReport {
    pub spatial: RefinementStudy,
    pub temporal: RefinementStudy,
}

/// Refines `n` at fixed `dt`, then `dt` at fixed `n_fine`; every level is
/// compared against `u*` at `t_end`.
pub fn mms_convergence(
    case: &ManufacturedCase,
    grid_sizes: &[usize],
    dt_fixed: f64,
    n_fine: usize,
    dt_values: &[f64],
    t_end: f64,
    bdf_order: BdfOrder,
) -> Result<MmsReport> {
    if grid_sizes.len() < 3 || dt_values.len() < 3 {
        return Err(Error::Config(
            "refinement studies need at least three levels per axis".into(),
        ));
    }
    let mut h = Vec::new();
    let mut errs = Vec::new();
    for &n in grid_sizes {
        h.push(case.params.ell / (n + 1) as f64);
        errs.push(case.error(n, dt_fixed, t_end, bdf_order)?);
    }
    let spatial = RefinementStudy::from_errors(h, errs);
    let mut errs = Vec::new();
    for &dt in dt_values {
        errs.push(case.error(n_fine, dt, t_end, bdf_order)?);
    }
    let temporal = RefinementStudy::from_errors(dt_values.to_vec(), errs);
    for (axis, study) in [("spatial", &spatial), ("temporal", &temporal)] {
        if !study.monotone() {
            return Err(Error::Degenerate(format!(
                "{axis} error does not decrease monotonically:\n{}",
                study.table()
            )));
        }
    }
    Ok(MmsReport { spatial, temporal })
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut lu: Vec<f64> = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            lu.extend_from_slice(r);
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[i * n + k].abs().total_cmp(&lu[j * n + k].abs()))
                .unwrap_or(k);
            let pivot = lu[p * n + k];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularMatrix { column: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            for i in k + 1..n {
                let l = lu[i * n + k] / pivot;
                lu[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= l * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }
}

/// Solves one step matrix `alpha I + mu D4 - nu D2 + diag(a) + diag(c) D1`
/// with the banded and the dense solver; returns the max abs discrepancy.
pub fn dense_cross_check(
    ops: &Operators,
    params: &ModelParams,
    a: &[f64],
    alpha: f64,
    c: &[f64],
    rhs: &[f64],
) -> Result<f64> {
    let mut step = StepOperator::new(ops, params, a);
    let banded = step.solve(alpha, c, rhs)?;
    let dense = DenseLu::factor(&step.matrix(alpha, c).to_dense())?.solve(rhs);
    Ok(banded
        .iter()
        .zip(&dense)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

/// Smallest eigenvalue of a symmetric positive definite matrix by inverse
/// iteration with a dense factorization.
pub fn smallest_eigenvalue(op: &BandedOperator) -> Result<f64> {
    let n = op.dim();
    let lu = DenseLu::factor(&op.to_dense())?;
    // A positive, non-symmetric start overlaps the ground state.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i as f64 / n as f64)).collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = lu.solve(&v);
        let norm = math::sqrt(w.iter().map(|x| x * x).sum());
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let av = op.apply(&next);
        let rq: f64 = av.iter().zip(&next).map(|(x, y)| x * y).sum();
        let converged = (rq - lambda).abs() <= 1e-15 * rq.abs();
        lambda = rq;
        v = next;
        if converged {
            break;
        }
    }
    Ok(lambda)
}

/// First positive root of `cos(beta) cosh(beta) = 1`.
pub fn clamped_beta1() -> f64 {
    let f = |b: f64| math::cos(b) - 1.0 / math::cosh(b);
    let (mut lo, mut hi) = (4.0, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One level of the clamped eigenvalue study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenLevel {
    pub n: usize,
    pub h: f64,
    pub lambda: f64,
    pub error: f64,
}

/// Smallest `D4` eigenvalue against `(beta_1 / ell)^4` for each grid size.
pub fn clamped_eigen_reference(grid_sizes: &[usize], ell: f64) -> Result<Vec<EigenLevel>> {
    let exact = math::powi(clamped_beta1() / ell, 4);
    grid_sizes
        .iter()
        .map(|&n| {
            let grid = SpatialGrid::new(ell, n)?;
            let lambda = smallest_eigenvalue(&assemble_d4(&grid))?;
            Ok(EigenLevel {
                n,
                h: grid.h(),
                lambda,
                error: (lambda - exact).abs(),
            })
        })
        .collect()
}

/// `(computed, exact)` smallest eigenvalue of `-D2`, the exact value being
/// `(2 / h^2)(1 - cos(pi h / ell))`.
pub fn dirichlet_d2_eigen(n: usize, ell: f64) -> Result<(f64, f64)> {
    let grid = SpatialGrid::new(ell, n)?;
    let neg = assemble_d2(&grid).scaled(-1.0);
    let h = grid.h();
    let exact = 2.0 / (h * h) * (1.0 - math::cos(PI * h / ell));
    Ok((smallest_eigenvalue(&neg)?, exact))
}

/// Zero-history run with zero forcing; returns the largest `|u|` seen.
pub fn zero_history_max(n: usize, dt: f64, t_end: f64, tau: f64) -> Result<f64> {
    let params = ModelParams::new(0.01, 0.001, tau, 1.0)?;
    let config = RunConfig {
        params,
        profile: DampingProfile::constant(1.0, 1.0)?,
        history: HistorySpec::zero(),
        n,
        dt,
        t_end,
        bdf_order: BdfOrder::Two,
        snapshot_every: 1,
    };
    let tr = run(&config, &RunOptions::default())?;
    Ok(tr.snapshots.iter().fold(0.0f64, |m, s| m.max(s.max_abs())))
}
