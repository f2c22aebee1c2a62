//! Recomputes the analysis of a stored run from its files.

use std::path::Path;

use delaydisp_core::RunStatus;
use serde::{Deserialize, Serialize};

use crate::emit::{read_meta, read_norms, META_FILE, NORMS_FILE};
use crate::error::SimResult;
use crate::runner::{analyze, Analysis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub status: RunStatus,
    pub rows: usize,
    pub analysis: Analysis,
}

/// Reads `meta.json` and `norms.csv` from `dir` and redoes the fits and bound check.
pub fn report(dir: &Path) -> SimResult<Report> {
    let meta = read_meta(&dir.join(META_FILE))?;
    let norms = read_norms(&dir.join(NORMS_FILE))?;
    let healthy = !meta.status.is_diverged() && meta.metadata.breakdown.is_none();
    let analysis = analyze(&meta.config, &meta.analysis.settings, &norms, healthy)?;
    Ok(Report {
        status: meta.status,
        rows: norms.len(),
        analysis,
    })
}

#[cfg(test)]
mod tests {
    use std::fs;

    use delaydisp_core::RunConfig;

    use super::*;
    use crate::config::AnalysisSettings;
    use crate::emit::{emit, read_norms};
    use crate::runner::simulate;

    fn small(name: &str, t_end: f64) -> RunConfig {
        let mut c = crate::preset(name).unwrap().base;
        c.n = 39;
        c.t_end = t_end;
        c.snapshot_every = 50;
        c
    }

    #[test]
    fn report_recomputes_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = simulate(&small("fig3b", 3.0), &AnalysisSettings::default()).unwrap();
        emit(&r, dir.path()).unwrap();
        let norms = read_norms(&dir.path().join(NORMS_FILE)).unwrap();
        assert_eq!(norms.len(), r.norms.len());
        let rep = report(dir.path()).unwrap();
        assert_eq!(rep.analysis.stability, r.analysis.stability);
        let (a, b) = (rep.analysis.decay.l2.unwrap(), r.analysis.decay.l2.unwrap());
        assert!((a.slope - b.slope).abs() < 1e-9 * b.slope.abs());
        assert!((a.r_squared - b.r_squared).abs() < 1e-9);
    }

    #[test]
    fn report_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(report(dir.path()).unwrap_err().exit_code(), 4);
        let r = simulate(&small("fig3a", 0.01), &AnalysisSettings::default()).unwrap();
        emit(&r, dir.path()).unwrap();
        fs::write(dir.path().join(NORMS_FILE), "t,x\n0,1\n").unwrap();
        assert_eq!(report(dir.path()).unwrap_err().exit_code(), 4);
    }
}
