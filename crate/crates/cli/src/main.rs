use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use solcusp::certify::{certify, CertifyError, CertifyStatus};
use solcusp::lattice::{build_sol_lattice, AnosovMatrix, LatticeReport};
use solcusp::pipeline::{parse_config, run_pipeline, write_files, RunConfig, WarpFamily};
use solcusp::riemann::FdOptions;
use solcusp::table::{default_grid, match_reference_table, MatchOptions, Pipeline};
use solcusp::volume::cusp_volume;
use solcusp::warp::{build_interpolation, check_conditions, uniform_grid, WarpFunction};

#[derive(Parser, Debug)]
#[command(
    name = "solcusp",
    version,
    about = "Build and certify a negatively curved finite-volume cusp over a Sol manifold"
)]
struct Cli {
    /// JSON run configuration (a bare config or a previous summary.json).
    /// Subcommand flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Deck group of the Sol manifold for a hyperbolic matrix.
    Lattice {
        /// Entries a,b,c,d of [[a, b], [c, d]].
        #[arg(long, allow_hyphen_values = true)]
        matrix: Option<String>,
    },
    /// Build and validate the interpolated warping function.
    BuildWarp {
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t1: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
        /// Also write t, f, f', f'' and the margins as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Match the closed-form component table against the computed tensor.
    VerifyRiemann {
        #[command(flatten)]
        warp: WarpArg,
        /// `t,t,...:z,z,...`; defaults to the 5x5 grid on [-2,2] x [-1,1].
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Difference step for the finite-difference pipeline.
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Bound sectional curvature over a t grid.
    Certify {
        #[command(flatten)]
        warp: WarpArg,
        #[arg(long, allow_hyphen_values = true)]
        t_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        agreement_tol: Option<f64>,
        /// Sample even when a condition margin is not positive.
        #[arg(long)]
        skip_condition_gate: bool,
    },
    /// Cusp volume with an explicit tail bound.
    Volume {
        #[command(flatten)]
        warp: WarpArg,
        /// Cross-section volume; defaults to that of the configured matrix.
        #[arg(long)]
        vol_c: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Full pipeline: every stage, all report files and a summary.
    Run {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        refine: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct WarpArg {
    /// pure-exp, shifted-exp, interpolated:T0,T1 or constant:C
    #[arg(long, allow_hyphen_values = true)]
    warp: Option<String>,
}

fn parse_warp(text: &str, cfg: &mut RunConfig) -> Result<()> {
    let (name, args) = text.split_once(':').unwrap_or((text, ""));
    let nums = || -> Result<Vec<f64>> {
        args.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad number {s:?}"))
            })
            .collect()
    };
    let w = &mut cfg.warp;
    match name {
        "pure-exp" | "pure_exp" => w.family = WarpFamily::PureExp,
        "shifted-exp" | "shifted_exp" => w.family = WarpFamily::ShiftedExp,
        "interpolated" => {
            w.family = WarpFamily::Interpolated;
            if !args.is_empty() {
                let v = nums()?;
                let [t0, t1] = v[..] else {
                    bail!("interpolated takes two numbers T0,T1");
                };
                w.t0 = t0;
                w.t1 = t1;
            }
        }
        "constant" => {
            let v = nums()?;
            let [c] = v[..] else {
                bail!("constant takes one number");
            };
            w.family = WarpFamily::Constant;
            w.value = Some(c);
        }
        _ => bail!("unknown warp {name:?}"),
    }
    Ok(())
}

/// Interpolated warps always go through the validating builder so that
/// every subcommand sees the same (possibly widened) function.
fn resolve_warp(cfg: &RunConfig) -> Result<WarpFunction> {
    let w = &cfg.warp;
    if w.family == WarpFamily::Interpolated {
        Ok(build_interpolation(w.t0, w.t1, w.step, w.margin)?.warp)
    } else {
        Ok(w.raw()?)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {x:?}"))
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<(f64, f64)>> {
    let (ts, zs) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("grid must look like t,t,...:z,z,..."))?;
    let (ts, zs) = (parse_list(ts)?, parse_list(zs)?);
    Ok(ts
        .iter()
        .flat_map(|&t| zs.iter().map(move |&z| (t, z)))
        .collect())
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.certify.seed = seed;
    }
    if let Some(dir) = &cli.output {
        cfg.output.directory = dir.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write_reports(dir: Option<&Path>, files: &[(String, String)]) -> Result<()> {
    if let Some(dir) = dir {
        write_files(dir, files)?;
    }
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn execute(cli: &Cli) -> Result<i32> {
    let mut cfg = load_config(cli)?;
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Lattice { matrix } => {
            if let Some(m) = matrix {
                let v: Vec<i64> = m
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<i64>()
                            .with_context(|| format!("bad entry {x:?}"))
                    })
                    .collect::<Result<_>>()?;
                cfg.matrix = v[..]
                    .try_into()
                    .map_err(|_| anyhow!("matrix needs four entries a,b,c,d"))?;
            }
            let [a, b, c, d] = cfg.matrix;
            let report = LatticeReport::new(&build_sol_lattice(AnosovMatrix::new(a, b, c, d)?));
            print_json(&report)?;
            write_reports(out, &[("lattice.json".into(), pretty(&report))])?;
            Ok(0)
        }
        Command::BuildWarp {
            t0,
            t1,
            step,
            margin,
            csv,
        } => {
            let w = &mut cfg.warp;
            w.t0 = t0.unwrap_or(w.t0);
            w.t1 = t1.unwrap_or(w.t1);
            w.step = step.unwrap_or(w.step);
            w.margin = margin.unwrap_or(w.margin);
            let v = build_interpolation(w.t0, w.t1, w.step, w.margin)?;
            let report = json!({
                "family": v.warp.name(),
                "T0": v.t0,
                "T1": v.t1,
                "requested_T0": v.requested_t0,
                "widenings": v.widenings,
                "min_margins": v.min_margins,
                "grid_start": v.grid_start,
                "grid_end": v.grid_end,
                "grid_step": v.grid_step,
            });
            print_json(&report)?;
            write_reports(out, &[("warp.json".into(), pretty(&report))])?;
            if let Some(path) = csv {
                let grid = uniform_grid(v.grid_start, v.grid_end, v.grid_step);
                let margins = check_conditions(&v.warp, &grid)?;
                let mut text = String::from("t,f,df,d2f,margin_a,margin_b,margin_c,margin_d\n");
                for m in &margins {
                    let e = v.warp.eval(m.t);
                    text.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        m.t, e.f, e.df, e.d2f, m.a, m.b, m.c, m.d
                    ));
                }
                std::fs::write(path, text)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(0)
        }
        Command::VerifyRiemann {
            warp,
            grid,
            fd_step,
        } => {
            if let Some(s) = &warp.warp {
                parse_warp(s, &mut cfg)?;
            }
            let w = resolve_warp(&cfg)?;
            let points = match grid {
                Some(g) => parse_grid(g)?,
                None => default_grid(),
            };
            let mut opts = MatchOptions::default();
            if let Some(h) = fd_step {
                opts.pipeline = Pipeline::FiniteDifference(FdOptions {
                    step: *h,
                    ..FdOptions::default()
                });
            }
            let report = match_reference_table(w, &points, opts)?;
            print_json(&report)?;
            write_reports(out, &[("riemann.json".into(), pretty(&report))])?;
            Ok(if report.matched { 0 } else { 2 })
        }
        Command::Certify {
            warp,
            t_min,
            t_max,
            step,
            samples,
            refine,
            floor,
            agreement_tol,
            skip_condition_gate,
        } => {
            if let Some(s) = &warp.warp {
                parse_warp(s, &mut cfg)?;
            }
            let w = resolve_warp(&cfg)?;
            let c = &mut cfg.certify;
            c.t_min = t_min.unwrap_or(c.t_min);
            c.t_max = t_max.unwrap_or(c.t_max);
            c.t_step = step.unwrap_or(c.t_step);
            c.n_samples = samples.unwrap_or(c.n_samples);
            c.n_refine = refine.unwrap_or(c.n_refine);
            c.floor = floor.unwrap_or(c.floor);
            c.agreement_tol = agreement_tol.unwrap_or(c.agreement_tol);
            if *skip_condition_gate {
                c.require_conditions = false;
            }
            let report = match certify(w, c) {
                Ok(r) => r,
                Err(e @ CertifyError::ConditionsFailed { .. }) => {
                    eprintln!("{e}");
                    return Ok(CertifyStatus::Inconclusive.exit_code());
                }
                Err(e) => return Err(e.into()),
            };
            let dir = PathBuf::from(&cfg.output.directory);
            write_files(
                &dir,
                &[
                    ("certify.json".into(), pretty(&report)),
                    ("certify.csv".into(), report.csv()),
                ],
            )?;
            print_json(&json!({
                "status": report.status,
                "global_negative": report.global_negative,
                "max_k": report.max_k,
                "min_k": report.min_k,
                "pinched_from": report.pinched_from(),
                "flagged_points": report.flagged_points.len(),
                "max_method_agreement": report.max_method_agreement,
                "witness": report.witness,
                "directory": dir,
            }))?;
            Ok(report.status.exit_code())
        }
        Command::Volume {
            warp,
            vol_c,
            t0,
            tol,
        } => {
            if let Some(s) = &warp.warp {
                parse_warp(s, &mut cfg)?;
            }
            let w = resolve_warp(&cfg)?;
            let vol_c = match vol_c {
                Some(v) => *v,
                None => {
                    let [a, b, c, d] = cfg.matrix;
                    LatticeReport::new(&build_sol_lattice(AnosovMatrix::new(a, b, c, d)?)).volume
                }
            };
            let r = cusp_volume(
                w,
                vol_c,
                t0.unwrap_or(cfg.volume.t0),
                tol.unwrap_or(cfg.volume.tol),
            )?;
            print_json(&r)?;
            write_reports(out, &[("volume.json".into(), pretty(&r))])?;
            Ok(0)
        }
        Command::Run { samples, refine } => {
            if let Some(n) = samples {
                cfg.certify.n_samples = *n;
            }
            if let Some(n) = refine {
                cfg.certify.n_refine = *n;
            }
            let dir = PathBuf::from(&cfg.output.directory);
            let run = run_pipeline(&cfg)?;
            write_files(&dir, &run.files(&cfg.output.formats))?;
            if let Some(s) = &run.summary {
                print_json(s)?;
            }
            Ok(run.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(cli.command, Command::Run { .. }) {
                if let Err(w) = write_error(&cli, &e) {
                    eprintln!("error: {w:#}");
                }
            }
            ExitCode::from(1)
        }
    }
}

/// A failed `run` leaves a single error.json and nothing else.
fn write_error(cli: &Cli, e: &anyhow::Error) -> Result<()> {
    let dir = match &cli.output {
        Some(d) => d.clone(),
        None => cli
            .config
            .as_ref()
            .and_then(|p| std::fs::read_to_string(p).ok())
            .and_then(|t| parse_config(&t).ok())
            .unwrap_or_default()
            .output
            .directory
            .into(),
    };
    let err = json!({"status": "error", "exit_code": 1, "message": format!("{e:#}")});
    write_files(&dir, &[("error.json".into(), pretty(&err))])?;
    Ok(())
}
