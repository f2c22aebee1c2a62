use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use delaydisp::emit::format_number;
use delaydisp::{
    emit, load_config, parse_values, preset, report, run_sweep, simulate, verify_table,
    AnalysisSettings, Axis, RunResult, SimError, SimResult, SweepValue,
};
use delaydisp_core::RunConfig;

#[derive(Parser)]
#[command(
    name = "delaydisp",
    version,
    about = "Delayed dispersive equation solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration (or every member of a family preset).
    #[command(group(ArgGroup::new("source").required(true).args(["preset", "config"])))]
    Run {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Override the final time.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Sweep one parameter of a preset.
    Sweep {
        #[arg(long)]
        preset: String,
        /// tau, nu, mu or profile; defaults to the preset's own sweep.
        #[arg(long, requires = "values")]
        axis: Option<String>,
        /// Comma-separated values, e.g. `0.25,0.5` or `constant(1),affine(1,1)`.
        #[arg(long, requires = "axis", allow_hyphen_values = true)]
        values: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Recompute the analysis of a stored run and print it as JSON.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run the numerical oracles and print a pass/fail table.
    Verify {
        /// Also print the raw refinement tables.
        #[arg(long)]
        verbose: bool,
    },
}

/// 0 healthy, 2 diverged, 1 solver breakdown.
fn status_code(results: &[RunResult]) -> u8 {
    if results.iter().any(|r| r.status.is_diverged()) {
        2
    } else if results.iter().any(|r| r.metadata.breakdown.is_some()) {
        1
    } else {
        0
    }
}

fn describe(r: &RunResult) -> String {
    let fit = r
        .l2_fit()
        .map(|f| {
            format!(
                " l2_slope={} r2={}",
                format_number(f.slope),
                format_number(f.r_squared)
            )
        })
        .unwrap_or_default();
    format!("status={}{fit}", r.status.name())
}

fn with_t_end(mut config: RunConfig, t_end: Option<f64>) -> SimResult<RunConfig> {
    if let Some(t) = t_end {
        config.t_end = t;
        config.validate()?;
    }
    Ok(config)
}

fn sweep_to(
    base: &RunConfig,
    axis: Axis,
    values: &[SweepValue],
    settings: &AnalysisSettings,
    out: &Path,
) -> SimResult<Vec<RunResult>> {
    let results = run_sweep(base, axis, values, settings)?;
    std::fs::create_dir_all(out).map_err(|e| SimError::io(out, e))?;
    let mut summary = String::from("index,axis,value,status,l2_slope,l2_r_squared\n");
    for (i, (value, r)) in values.iter().zip(&results).enumerate() {
        let dir = out.join(format!("{i:02}_{axis}"));
        emit(r, &dir)?;
        let (slope, r2) = r
            .l2_fit()
            .map(|f| (format_number(f.slope), format_number(f.r_squared)))
            .unwrap_or_default();
        summary.push_str(&format!(
            "{i},{axis},\"{value}\",{},{slope},{r2}\n",
            r.status.name()
        ));
        println!("{}: {axis}={value} {}", dir.display(), describe(r));
    }
    let path = out.join("summary.csv");
    std::fs::write(&path, summary).map_err(|e| SimError::io(&path, e))?;
    Ok(results)
}

fn execute(command: Command) -> SimResult<u8> {
    let settings = AnalysisSettings::default();
    match command {
        Command::Run {
            preset: name,
            config,
            out,
            t_end,
        } => {
            if let Some(path) = config {
                let (config, settings) = load_config(&path)?;
                let config = with_t_end(config, t_end)?;
                let r = simulate(&config, &settings)?;
                emit(&r, &out)?;
                println!("{}: {}", out.display(), describe(&r));
                return Ok(status_code(std::slice::from_ref(&r)));
            }
            let p = preset(name.as_deref().unwrap_or_default())?;
            let base = with_t_end(p.base, t_end)?;
            match p.sweep {
                Some((axis, values)) => Ok(status_code(&sweep_to(
                    &base, axis, &values, &settings, &out,
                )?)),
                None => {
                    let r = simulate(&base, &settings)?;
                    emit(&r, &out)?;
                    println!("{}: {}", out.display(), describe(&r));
                    Ok(status_code(std::slice::from_ref(&r)))
                }
            }
        }
        Command::Sweep {
            preset: name,
            axis,
            values,
            out,
            t_end,
        } => {
            let p = preset(&name)?;
            let base = with_t_end(p.base, t_end)?;
            let (axis, values) = match (axis, values, p.sweep) {
                (Some(a), Some(v), _) => {
                    let axis: Axis = a.parse()?;
                    (axis, parse_values(axis, &v)?)
                }
                (_, _, Some(own)) => own,
                _ => {
                    return Err(SimError::Config(format!(
                        "preset '{name}' has no built-in sweep; pass --axis and --values"
                    )))
                }
            };
            Ok(status_code(&sweep_to(
                &base, axis, &values, &settings, &out,
            )?))
        }
        Command::Report { input } => {
            let rep = report(&input)?;
            let text = serde_json::to_string_pretty(&rep).map_err(|e| SimError::Format {
                path: input.clone(),
                message: e.to_string(),
            })?;
            println!("{text}");
            Ok(0)
        }
        Command::Verify { verbose } => {
            let rows = verify_table()?;
            for row in &rows {
                println!("{row}");
                if verbose && !row.detail.is_empty() {
                    for line in row.detail.lines() {
                        println!("       {line}");
                    }
                }
            }
            Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    // Usage errors share the configuration exit code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
