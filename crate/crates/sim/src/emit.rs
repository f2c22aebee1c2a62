//! Result files: `norms.csv`, `snapshots.csv` and `meta.json`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use delaydisp_core::{NormRow, NormSeries, RunConfig, RunStatus};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::runner::{Analysis, RunMetadata, RunResult};

/// Bumped whenever a file layout changes.
pub const ARTIFACT_VERSION: u32 = 1;
pub const NORMS_FILE: &str = "norms.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.csv";
pub const META_FILE: &str = "meta.json";
pub const NORMS_HEADER: &str = "t,l2_u,h1_u,h2_u,weighted";
pub const SNAPSHOTS_HEADER: &str = "t,x,u";

const SIGNIFICANT_DIGITS: usize = 12;

/// Positional decimal with 12 significant digits and no trailing zeros.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v.abs());
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let (int_part, frac_part) = if exp >= 0 {
        let split = exp as usize + 1;
        if split >= digits.len() {
            (
                format!("{digits}{}", "0".repeat(split - digits.len())),
                String::new(),
            )
        } else {
            (digits[..split].to_string(), digits[split..].to_string())
        }
    } else {
        (
            "0".to_string(),
            format!("{}{digits}", "0".repeat((-exp - 1) as usize)),
        )
    };
    let frac_part = frac_part.trim_end_matches('0');
    let sign = if v < 0.0 { "-" } else { "" };
    if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub artifact_version: u32,
    pub config: RunConfig,
    pub status: RunStatus,
    pub analysis: Analysis,
    pub metadata: RunMetadata,
}

impl Meta {
    pub fn of(result: &RunResult) -> Self {
        Self {
            artifact_version: ARTIFACT_VERSION,
            config: result.config.clone(),
            status: result.status,
            analysis: result.analysis.clone(),
            metadata: result.metadata.clone(),
        }
    }
}

pub fn write_norms(w: &mut impl Write, norms: &NormSeries) -> std::io::Result<()> {
    writeln!(w, "{NORMS_HEADER}")?;
    for r in norms.rows() {
        writeln!(
            w,
            "{},{},{},{},{}",
            format_number(r.t),
            format_number(r.l2_u),
            format_number(r.h1_u),
            format_number(r.h2_u),
            format_number(r.weighted)
        )?;
    }
    Ok(())
}

/// Long format, boundary nodes included.
pub fn write_snapshots(w: &mut impl Write, result: &RunResult) -> std::io::Result<()> {
    writeln!(w, "{SNAPSHOTS_HEADER}")?;
    let n = result.config.n;
    let h = result.config.params.ell / (n + 1) as f64;
    for snap in &result.snapshots {
        let t = format_number(snap.t);
        for j in 0..n + 2 {
            let u = if j == 0 || j == n + 1 {
                0.0
            } else {
                snap.values[j - 1]
            };
            writeln!(
                w,
                "{t},{},{}",
                format_number(j as f64 * h),
                format_number(u)
            )?;
        }
    }
    Ok(())
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> SimResult<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| SimError::io(path, e))
}

/// Writes the three result files into `dir`, creating it if needed.
///
/// On failure every file written so far is removed.
pub fn emit(result: &RunResult, dir: &Path) -> SimResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let meta = serde_json::to_string_pretty(&Meta::of(result)).map_err(|e| SimError::Format {
        path: dir.join(META_FILE),
        message: e.to_string(),
    })?;
    let mut written = Vec::new();
    let mut attempt = |name: &str, body: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let path = dir.join(name);
        written.push(path.clone());
        write_file(&path, body)
    };
    let outcome = attempt(NORMS_FILE, &|w| write_norms(w, &result.norms))
        .and_then(|_| attempt(SNAPSHOTS_FILE, &|w| write_snapshots(w, result)))
        .and_then(|_| attempt(META_FILE, &|w| writeln!(w, "{meta}")));
    match outcome {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            Err(e)
        }
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> SimError {
    SimError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn read_meta(path: &Path) -> SimResult<Meta> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))?;
    if meta.artifact_version != ARTIFACT_VERSION {
        return Err(format_err(
            path,
            format!(
                "artifact version {} is not supported",
                meta.artifact_version
            ),
        ));
    }
    Ok(meta)
}

pub fn read_norms(path: &Path) -> SimResult<NormSeries> {
    let file = File::open(path).map_err(|e| SimError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| SimError::io(path, e))?
        .unwrap_or_default();
    if header.trim() != NORMS_HEADER {
        return Err(format_err(
            path,
            format!("expected header '{NORMS_HEADER}'"),
        ));
    }
    let mut norms = NormSeries::default();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| SimError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format_err(path, format!("line {}: {e}", k + 2)))?;
        let [t, l2_u, h1_u, h2_u, weighted] = fields[..] else {
            return Err(format_err(
                path,
                format!("line {}: expected 5 fields", k + 2),
            ));
        };
        norms.push(NormRow {
            t,
            l2_u,
            h1_u,
            h2_u,
            weighted,
        });
    }
    Ok(norms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AnalysisSettings;
    use crate::runner::simulate;

    fn small(name: &str, t_end: f64) -> RunConfig {
        let mut c = crate::preset(name).unwrap().base;
        c.n = 39;
        c.t_end = t_end;
        c.snapshot_every = 50;
        c
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(123456.7890123456), "123456.789012");
        assert_eq!(format_number(1.234e-5), "0.00001234");
        assert_eq!(format_number(2.0f64.powi(50)), "1125899906840000");
        assert_eq!(format_number(0.9999999999999), "1");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn parse_back_is_close() {
        for v in [std::f64::consts::PI, 1e-7 / 3.0, 42.0 / 7.0, -0.1] {
            let back: f64 = format_number(v).parse().unwrap();
            assert!((back - v).abs() <= 1e-11 * v.abs(), "{v}");
        }
    }

    #[test]
    fn zero_length_run_has_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let r = simulate(&small("fig3a", 0.0), &AnalysisSettings::default()).unwrap();
        emit(&r, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(NORMS_FILE)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], NORMS_HEADER);
        assert!(lines[1].starts_with("0,"));
        let snaps = fs::read_to_string(dir.path().join(SNAPSHOTS_FILE)).unwrap();
        assert_eq!(snaps.lines().next(), Some(SNAPSHOTS_HEADER));
        assert_eq!(snaps.lines().count(), 1 + 41);
    }

    #[test]
    fn meta_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small("fig7d", 0.2);
        c.params.nu = 0.1 + 0.2;
        c.dt = 1.0 / 3000.0;
        let r = simulate(&c, &AnalysisSettings { p: 0.7 }).unwrap();
        emit(&r, dir.path()).unwrap();
        let meta = read_meta(&dir.path().join(META_FILE)).unwrap();
        assert_eq!(meta.config, c);
        assert_eq!(meta.config.params.nu.to_bits(), c.params.nu.to_bits());
        assert_eq!(meta.config.dt.to_bits(), c.dt.to_bits());
        assert_eq!(meta.analysis, r.analysis);
        assert_eq!(meta.status, r.status);
    }

    #[test]
    fn overflowing_constant_survives_json() {
        // A non-clamped history at a long delay pushes M past f64 range.
        let dir = tempfile::tempdir().unwrap();
        let mut c = small("fig7a", 0.01);
        c.params.tau = 1.0;
        let r = simulate(&c, &AnalysisSettings::default()).unwrap();
        let report = r.analysis.stability.as_ref().unwrap();
        assert!(report.m_overflow && report.m.is_infinite());
        emit(&r, dir.path()).unwrap();
        let meta = read_meta(&dir.path().join(META_FILE)).unwrap();
        assert_eq!(meta.analysis, r.analysis);
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let c = small("fig5b", 1.0);
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            emit(
                &simulate(&c, &AnalysisSettings::default()).unwrap(),
                dir.path(),
            )
            .unwrap();
            outputs.push(
                [NORMS_FILE, SNAPSHOTS_FILE, META_FILE]
                    .map(|f| fs::read(dir.path().join(f)).unwrap()),
            );
        }
        assert_eq!(outputs[0], outputs[1]);
    }

    #[test]
    fn failed_emit_removes_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join(META_FILE)).unwrap();
        let r = simulate(&small("fig3a", 0.01), &AnalysisSettings::default()).unwrap();
        let err = emit(&r, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(!dir.path().join(NORMS_FILE).exists());
        assert!(!dir.path().join(SNAPSHOTS_FILE).exists());
    }
}
