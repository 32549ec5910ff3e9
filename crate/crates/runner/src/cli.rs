//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, compare, execute, load_fit_input};
use crate::error::{RunnerError, RunnerResult};
use crate::output::{write_atomic, write_outcome, write_tables, RunArtifact};
use crate::presets::{preset, PRESETS};
use crate::scenario::Scenario;

pub const DEFAULT_THRESHOLD: f64 = 2e-2;

#[derive(Debug, Parser)]
#[command(name = "pseudomode", version, about = "Pseudomode, star-bath and dilation simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Sources {
    /// Scenario file (JSON).
    #[arg(long = "scenario", value_name = "PATH")]
    pub scenarios: Vec<PathBuf>,
    /// Built-in scenario.
    #[arg(long = "preset", value_name = "NAME")]
    pub presets: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its CSV artifacts.
    Run {
        #[command(flatten)]
        source: Sources,
        /// Output directory [default: pseudomode-out/<scenario name>].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run two scenarios and compare their reduced qubit trajectories.
    Compare {
        #[command(flatten)]
        source: Sources,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit damped modes to a correlation (`t,re,im`) or spectrum (`omega,S`) CSV.
    Fit {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        order: usize,
        /// Sampling horizon for spectrum input.
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        quad_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios, or print one.
    Presets {
        #[arg(long)]
        preset: Option<String>,
    },
}

pub fn load_scenario(path: &Path) -> RunnerResult<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| RunnerError::Io(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

pub fn named_preset(name: &str) -> RunnerResult<Scenario> {
    preset(name).ok_or_else(|| RunnerError::validation(format!("unknown preset `{name}`; available: {}", PRESETS.join(", "))))
}

fn resolve(src: &Sources) -> RunnerResult<Vec<Scenario>> {
    let mut out = Vec::new();
    for p in &src.scenarios {
        out.push(load_scenario(p)?);
    }
    for n in &src.presets {
        out.push(named_preset(n)?);
    }
    Ok(out)
}

fn out_dir(out: &Option<PathBuf>, name: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| Path::new("pseudomode-out").join(name))
}

fn print_json<T: serde::Serialize>(stdout: &mut dyn Write, v: &T) -> RunnerResult<()> {
    writeln!(stdout, "{}", serde_json::to_string_pretty(v).expect("serializable"))?;
    Ok(())
}

/// Parses `args` (program name first) and executes the command.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write) -> RunnerResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            write!(stdout, "{e}")?;
            return Ok(());
        }
        Err(e) => return Err(RunnerError::validation(format!("usage: {}", e.render().to_string().trim()))),
    };
    dispatch(cli.command, stdout)
}

pub fn dispatch(cmd: Command, stdout: &mut dyn Write) -> RunnerResult<()> {
    match cmd {
        Command::Run { source, out } => {
            let scns = resolve(&source)?;
            let [scn] = <[Scenario; 1]>::try_from(scns)
                .map_err(|v| RunnerError::validation(format!("run takes exactly one scenario, got {}", v.len())))?;
            let start = Instant::now();
            let outcome = execute(&scn)?;
            let art = write_outcome(&outcome, &out_dir(&out, &scn.name), start.elapsed().as_secs_f64())?;
            print_json(stdout, &art)
        }
        Command::Compare { source, threshold, out } => {
            let scns = resolve(&source)?;
            let [a, b] = <[Scenario; 2]>::try_from(scns)
                .map_err(|v| RunnerError::validation(format!("compare takes exactly two scenarios, got {}", v.len())))?;
            if !(threshold >= 0.0 && threshold.is_finite()) {
                return Err(RunnerError::validation("threshold must be a finite number >= 0"));
            }
            if a.time != b.time {
                return Err(RunnerError::validation(format!(
                    "grid mismatch: {:?} vs {:?}",
                    a.time, b.time
                )));
            }
            let start = Instant::now();
            let (oa, ob) = (execute(&a)?, execute(&b)?);
            let cmp = compare(&oa, &ob, threshold)?;
            let name = format!("{}-vs-{}", a.name, b.name);
            let dir = out_dir(&out, &name);
            write_atomic(&dir.join("comparison.csv"), cmp.csv().as_bytes())?;
            let report = serde_json::json!({
                "a": { "scenario": a.name, "hash": oa.hash },
                "b": { "scenario": b.name, "hash": ob.hash },
                "trace_distance": cmp.trace_distance,
                "dev_sz": cmp.dev_sz,
                "dev_sx": cmp.dev_sx,
                "dev_sy": cmp.dev_sy,
                "threshold": threshold,
                "pass": cmp.pass,
                "files": [dir.join("comparison.csv")],
                "wall_time_s": start.elapsed().as_secs_f64(),
            });
            print_json(stdout, &report)?;
            if cmp.pass {
                Ok(())
            } else {
                Err(RunnerError::Numerical(format!(
                    "max observable deviation {:.3e} exceeds threshold {threshold:.3e}",
                    cmp.max_observable_deviation()
                )))
            }
        }
        Command::Fit { input, order, t_end, samples, quad_tol, out } => {
            if order == 0 {
                return Err(RunnerError::validation("--order must be >= 1"));
            }
            let text = std::fs::read_to_string(&input).map_err(|e| RunnerError::Io(format!("{}: {e}", input.display())))?;
            let start = Instant::now();
            let table = load_fit_input(&text, t_end, samples, quad_tol)?;
            let mut s = commands::summary_for_fit();
            let (tables, _) = commands::fit_tables(&table, order, &mut s)?;
            let summary = commands::into_pairs(s);
            let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "fit".into());
            let dir = out_dir(&out, &format!("fit-{stem}"));
            let art: RunArtifact = write_tables("", &tables, &summary, &dir, start.elapsed().as_secs_f64())?;
            print_json(stdout, &art)
        }
        Command::Presets { preset: None } => {
            for p in PRESETS {
                writeln!(stdout, "{p}")?;
            }
            Ok(())
        }
        Command::Presets { preset: Some(name) } => {
            let scn = named_preset(&name)?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&scn).expect("serializable"))?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "name": "small",
        "system": {"omega": 0.7},
        "environment": {"kind": "pseudomodes", "modes": [{"eta": 0.7, "gamma": 0.4, "lambda": 0.6}]},
        "coupling": "rwa",
        "time": {"t_end": 2.0, "samples": 21},
        "numerics": {"n_max": 2}
    }"#;

    fn run(args: &[&str]) -> (RunnerResult<()>, String) {
        let mut out = Vec::new();
        let r = run_from(std::iter::once("pseudomode").chain(args.iter().copied()), &mut out);
        (r, String::from_utf8(out).unwrap())
    }

    fn code(args: &[&str]) -> i32 {
        run(args).0.err().map(|e| e.exit_code()).unwrap_or(0)
    }

    fn write(dir: &Path, name: &str, text: &str) -> String {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    }

    #[test]
    fn usage_errors_exit_with_validation_code() {
        assert_eq!(code(&["--help"]), 0);
        assert_eq!(code(&[]), 1);
        assert_eq!(code(&["run", "--bogus"]), 1);
        assert_eq!(code(&["run", "--preset", "no-such-preset"]), 1);
        assert_eq!(code(&["run"]), 1);
        assert_eq!(code(&["fit", "--input", "x.csv", "--order", "0"]), 1);
        assert_eq!(code(&["fit", "--input", "/nonexistent/x.csv", "--order", "2"]), 3);
        assert_eq!(code(&["run", "--scenario", "/nonexistent/s.json"]), 3);
    }

    #[test]
    fn empty_scenario_names_missing_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "empty.json", "");
        let err = run(&["run", "--scenario", &p]).0.unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let json: serde_json::Value = serde_json::from_str(&err.to_json()).unwrap();
        for key in ["name", "system", "environment", "coupling", "time"] {
            assert!(json["missing_keys"].as_array().unwrap().iter().any(|k| k == key), "{json}");
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "small.json", SMALL);
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        for d in [&a, &b] {
            let (r, stdout) = run(&["run", "--scenario", &p, "--out", d.to_str().unwrap()]);
            r.unwrap();
            assert!(stdout.contains("scenario_hash"));
        }
        let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(names.iter().any(|n| n == "summary.csv") && names.iter().any(|n| n == "trajectory.csv"));
        for n in names {
            assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
        }
    }

    #[test]
    fn self_comparison_is_zero_and_grid_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "small.json", SMALL);
        let out = dir.path().join("cmp");
        let (r, stdout) = run(&["compare", "--scenario", &p, "--scenario", &p, "--out", out.to_str().unwrap()]);
        r.unwrap();
        let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(v["trace_distance"], 0.0);
        assert_eq!(v["dev_sz"], 0.0);
        assert_eq!(v["pass"], true);
        assert!(std::fs::read_to_string(out.join("comparison.csv")).unwrap().starts_with("metric,value\n"));

        let longer = write(dir.path(), "longer.json", &SMALL.replace("\"t_end\": 2.0", "\"t_end\": 3.0"));
        let err = run(&["compare", "--scenario", &p, "--scenario", &longer, "--out", out.to_str().unwrap()]).0.unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("grid mismatch"));
        assert_eq!(code(&["compare", "--scenario", &p, "--scenario", &p, "--threshold", "-1"]), 1);
    }

    #[test]
    fn failed_threshold_is_numerical() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "small.json", SMALL);
        let other = write(dir.path(), "other.json", &SMALL.replace("\"gamma\": 0.4", "\"gamma\": 1.4"));
        let out = dir.path().join("cmp");
        let (r, stdout) = run(&["compare", "--scenario", &p, "--scenario", &other, "--threshold", "1e-6", "--out", out.to_str().unwrap()]);
        assert_eq!(r.unwrap_err().exit_code(), 2);
        assert!(stdout.contains("\"pass\": false"));
    }

    #[test]
    fn fit_command_reads_correlation_samples() {
        let dir = tempfile::tempdir().unwrap();
        let mut csv = String::from("t,re,im\n");
        for i in 0..120 {
            let t = i as f64 * 0.05;
            let v = pseudomode_core::C64::new(-0.15, -0.5).scale(t).exp() * 0.25;
            csv.push_str(&format!("{t},{},{}\n", v.re, v.im));
        }
        let p = write(dir.path(), "corr.csv", &csv);
        let out = dir.path().join("fit");
        let (r, _) = run(&["fit", "--input", &p, "--order", "1", "--out", out.to_str().unwrap()]);
        r.unwrap();
        let modes = std::fs::read_to_string(out.join("pseudomodes.csv")).unwrap();
        let row: Vec<f64> = modes.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((row[0] - 0.5).abs() < 1e-9 && (row[1] - 0.3).abs() < 1e-9 && (row[4] - 0.25).abs() < 1e-9, "{modes}");
    }

    #[test]
    fn presets_are_listed() {
        let (r, stdout) = run(&["presets"]);
        r.unwrap();
        assert_eq!(stdout.lines().collect::<Vec<_>>(), PRESETS.to_vec());
        assert_eq!(code(&["presets", "--preset", "nope"]), 1);
    }
}
