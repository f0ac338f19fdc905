use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use frontlab::eigen::principal_eigenvalue;
use frontlab::fronts::{extract_front_profile, run_front, FrontProfile, SpeedParams};
use frontlab::harness::acceptance::{self, resolve_suite, verdict_table_json, Tolerances, SUITES};
use frontlab::harness::{emit_report, run_scenario, run_stages, Formats, ReportBundle, Scenario, Stage};
use frontlab::wulff::{read_speeds_csv, wulff_shape, EVAL_DIRECTIONS};

#[derive(Parser)]
#[command(name = "frontlab", version, about = "Fronts and invasion shapes of periodic reaction-diffusion equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pulsating front speed in one direction.
    FrontSpeed {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_direction)]
        direction: [f64; 2],
        #[arg(long, default_value_t = 120.0)]
        t_final: f64,
    },
    /// Front profile `U(x, z)` as CSV rows `x_cell,z,U`.
    FrontProfile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_direction)]
        direction: [f64; 2],
        #[arg(long, default_value_t = 120.0)]
        t_final: f64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Principal eigenvalue of the twisted cell operator.
    Eigen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_direction)]
        direction: [f64; 2],
        #[arg(long)]
        lambda: f64,
    },
    /// Wulff shape from a speed table with columns `ex,ey,c`.
    Wulff {
        #[arg(long)]
        speeds: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Run one verification stage of a scenario.
    Verify {
        #[arg(value_enum)]
        check: VerifyKind,
        #[arg(long)]
        config: PathBuf,
        /// Also write the stage artifacts here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance suites and print one verdict line each.
    Acceptance {
        /// Suite names or `A<n>` prefixes; all suites when empty.
        suites: Vec<String>,
        /// TOML file overriding pinned tolerances.
        #[arg(long)]
        tolerances: Option<PathBuf>,
        /// Write the verdict table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run every stage a scenario requests and write the full report.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Hausdorff,
    Omega,
    Cones,
}

fn parse_direction(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected ex,ey, got {s:?}"));
    }
    let x: f64 = parts[0].parse().map_err(|_| format!("bad component {:?}", parts[0]))?;
    let y: f64 = parts[1].parse().map_err(|_| format!("bad component {:?}", parts[1]))?;
    let n = x.hypot(y);
    if !(n > 0.0) || !n.is_finite() {
        return Err("direction must be nonzero".into());
    }
    Ok([x / n, y / n])
}

fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Scenario::from_toml(&text)?)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn front_run(config: &Path, e: [f64; 2], t_final: f64) -> Result<(FrontProfile, frontlab::fronts::SpeedEstimate)> {
    let s = load(config)?;
    let m = s.medium()?;
    let params = SpeedParams {
        t_final,
        keep_from: Some(0.6 * t_final),
        step: s.step_options(),
        ..SpeedParams::default()
    };
    let run = run_front(&m, e, &params)?;
    let p = extract_front_profile(&m, &run.estimate, &run.snapshots, (-15.0, 20.0))?;
    Ok((p, run.estimate))
}

fn summarize(b: &ReportBundle) {
    for r in &b.stages {
        let state = match &r.status {
            frontlab::harness::StageStatus::Completed if r.passed() => "ok".to_string(),
            frontlab::harness::StageStatus::Completed => "checks failed".to_string(),
            frontlab::harness::StageStatus::Failed { error } => format!("failed: {error}"),
            frontlab::harness::StageStatus::Skipped { reason } => format!("skipped: {reason}"),
        };
        eprintln!("{:<10} {}", r.stage.name(), state);
        for c in &r.checks {
            eprintln!("    {:<28} {} ({:.3e})", c.name, if c.passed { "pass" } else { "FAIL" }, c.worst_residual);
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config, out } => {
            let s = load(&config)?;
            let b = run_stages(&s, &[Stage::Simulate])?;
            emit_report(&b, &out, Formats::default())?;
            summarize(&b);
            Ok(b.passed())
        }
        Command::FrontSpeed {
            config,
            direction,
            t_final,
        } => {
            let (p, est) = front_run(&config, direction, t_final)?;
            print_json(&json!({
                "c": est.c,
                "oscillation": est.oscillation,
                "lambda0": p.lambda0,
                "C": p.tail_c,
            }));
            Ok(true)
        }
        Command::FrontProfile {
            config,
            direction,
            t_final,
            out,
        } => {
            let (p, _) = front_run(&config, direction, t_final)?;
            let mut csv = String::from("x_cell,z,U\n");
            for cell in 0..p.cells() {
                for (k, z) in p.z_grid().iter().enumerate() {
                    let _ = writeln!(csv, "{},{},{}", cell, z, p.row(cell)[k]);
                }
            }
            match out {
                Some(path) => std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Command::Eigen {
            config,
            direction,
            lambda,
        } => {
            let s = load(&config)?;
            let pair = principal_eigenvalue(&s.medium()?, direction, lambda)?;
            print_json(&json!({
                "k": pair.k,
                "residual": pair.residual,
                "iterations": pair.iterations,
            }));
            Ok(true)
        }
        Command::Wulff { speeds, out, svg, dim } => {
            let text = std::fs::read_to_string(&speeds).with_context(|| format!("reading {}", speeds.display()))?;
            let (dirs, cs) = read_speeds_csv(&text)?;
            let w = wulff_shape(dim, &dirs, &cs, EVAL_DIRECTIONS)?;
            let mut js = serde_json::to_string_pretty(&w.to_json())?;
            js.push('\n');
            std::fs::write(&out, js).with_context(|| format!("writing {}", out.display()))?;
            if let Some(p) = svg {
                std::fs::write(&p, w.to_svg(None)).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(true)
        }
        Command::Verify { check, config, out } => {
            let mut s = load(&config)?;
            let stage = match check {
                VerifyKind::Hausdorff => Stage::Hausdorff,
                VerifyKind::Omega => Stage::Omega,
                VerifyKind::Cones => Stage::Cones,
            };
            let a = &mut s.analysis;
            match stage {
                Stage::Hausdorff if a.hausdorff.is_none() => bail!("scenario has no [analysis.hausdorff] section"),
                Stage::Omega if a.omega.is_none() => bail!("scenario has no [analysis.omega] section"),
                Stage::Cones if a.cones.is_none() => bail!("scenario has no [analysis.cones] section"),
                _ => {}
            }
            let b = run_stages(&s, &[stage])?;
            if let Some(dir) = out {
                emit_report(
                    &b,
                    &dir,
                    Formats {
                        snapshots: false,
                        ..Formats::default()
                    },
                )?;
            }
            summarize(&b);
            let rec = b.stage(stage).expect("requested stage ran");
            print_json(&serde_json::to_value(rec)?);
            Ok(b.passed())
        }
        Command::Acceptance {
            suites,
            tolerances,
            json,
        } => {
            let tol = match tolerances {
                Some(p) => Tolerances::from_toml(
                    &std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?,
                )?,
                None => Tolerances::default(),
            };
            let names: Vec<&str> = if suites.is_empty() {
                SUITES.to_vec()
            } else {
                suites
                    .iter()
                    .map(|s| resolve_suite(s).with_context(|| format!("unknown suite {s:?}")))
                    .collect::<Result<_>>()?
            };
            let mut verdicts = Vec::new();
            for n in names {
                let v = acceptance::acceptance(n, &tol)?;
                println!("{}", v.line());
                verdicts.push(v);
            }
            if let Some(p) = json {
                std::fs::write(&p, verdict_table_json(&verdicts)).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(verdicts.iter().all(|v| v.passed))
        }
        Command::Report { config, out } => {
            let s = load(&config)?;
            let b = run_scenario(&s)?;
            let files = emit_report(&b, &out, Formats::default())?;
            summarize(&b);
            eprintln!("{} files under {}", files.len(), out.join(&s.name).display());
            Ok(b.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
