//! Command-line front end: `run`, `converge` and `kernel-check`.
//!
//! Exit codes: 0 success, 1 validation or usage error (including failed
//! checks), 2 runtime divergence, 3 I/O error.

pub mod config;
pub mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::kernel::{canonical_second_moment, PhiProfile};
use crate::sim::{run, SimConfig};
use crate::verify::refine_study;
use config::ConfigFile;
use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

const DEFAULT_OUTPUT_DIR: &str = "ibflow-out";

#[derive(Debug, Parser)]
#[command(name = "ibflow", version, about = "Periodic 2D flow past a tethered immersed-boundary particle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Directory for all written files (overrides output.dir).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Reserved; the scheme is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Suppress progress and diagnostics on stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation.
    Run { config: PathBuf },
    /// Grid-refinement study; the config describes the finest level.
    Converge {
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        levels: u32,
        #[arg(long, default_value_t = 1.7)]
        min_order: f64,
        #[arg(long, default_value_t = 2.3)]
        max_order: f64,
    },
    /// Tabulate the kernel profile and check its defining constraints.
    KernelCheck {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        samples: u32,
        /// Build the profile with this second moment instead of the canonical one.
        #[arg(long, hide = true)]
        second_moment: Option<f64>,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Level { source, .. } => exit_code(source),
        _ => EXIT_VALIDATION,
    }
}

struct Console {
    quiet: bool,
}

impl Console {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn output_dir(cli: &Cli, file: Option<&ConfigFile>) -> PathBuf {
    cli.output_dir
        .clone()
        .or_else(|| file.and_then(|f| f.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn load(path: &Path) -> Result<(ConfigFile, SimConfig)> {
    let file = ConfigFile::load(path)?;
    let cfg = file.to_sim_config()?;
    Ok((file, cfg))
}

fn print_reynolds(console: &Console, cfg: &SimConfig) {
    match cfg.reynolds() {
        Some(re) => console.say(format!(
            "Re = {re:.4} (R = {:.6} m, c = {} m)",
            cfg.kern.effective_radius(),
            cfg.kern.c()
        )),
        None => console.say("Re = n/a (no mean flow or zero viscosity)"),
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn cmd_run(cli: &Cli, config: &Path, console: &Console) -> Result<i32> {
    let started = Instant::now();
    let started_unix = now_unix();
    let (file, mut cfg) = load(config)?;
    let dir = output_dir(cli, Some(&file));
    cfg.output.dir = Some(dir.clone());
    print_reynolds(console, &cfg);
    console.say(format!(
        "grid {}x{} h = {:e} m, dt = {:e} s, {} steps",
        cfg.spec.n1(),
        cfg.spec.n2(),
        cfg.spec.h(),
        cfg.dt,
        cfg.n_steps()
    ));
    let out = run(&cfg)?;
    let last = out.samples.last().expect("initial sample is always recorded");
    console.say(format!(
        "t = {:.6} s, X = ({:.6}, {:.6}) m, div residual {:.2e}",
        last.t, last.x[0], last.x[1], last.diagnostics.div_residual
    ));

    let mut manifest = RunManifest {
        software: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: "run".to_string(),
        config: file,
        dt: cfg.dt,
        started_unix,
        wall_clock_seconds: 0.0,
        outputs: Vec::new(),
    };
    manifest.record_outputs(&dir, &out.files)?;
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let path = manifest.write_atomic(&dir)?;
    console.say(format!("wrote {} files and {}", out.files.len(), path.display()));
    Ok(EXIT_OK)
}

fn cmd_converge(cli: &Cli, config: &Path, levels: usize, bounds: (f64, f64), console: &Console) -> Result<i32> {
    let started = Instant::now();
    let started_unix = now_unix();
    let (file, cfg) = load(config)?;
    // reject non-halvable grids before any level runs
    crate::verify::level_configs(&cfg, levels).map_err(|e| Error::Config {
        key: "grid".into(),
        reason: e.to_string(),
    })?;
    let dir = output_dir(cli, Some(&file));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    print_reynolds(console, &cfg);
    let report = refine_study(&cfg, levels)?;
    let csv = dir.join("refinement.csv");
    report.write_csv(&csv)?;
    for r in &report.levels {
        console.say(format!(
            "level {} h = {:e} dt = {:e} du = {} dX = {}",
            r.level,
            r.h,
            r.dt,
            r.du_norm.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into()),
            r.dx_norm.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into()),
        ));
    }
    let fmt = |p: Option<f64>| p.map(|v| format!("{v:.4}")).unwrap_or_else(|| "NA".into());
    console.say(format!("order p_u = {}, p_X = {}", fmt(report.order_u), fmt(report.order_x)));

    let mut manifest = RunManifest {
        software: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: format!("converge --levels {levels}"),
        config: file,
        dt: cfg.dt,
        started_unix,
        wall_clock_seconds: 0.0,
        outputs: Vec::new(),
    };
    manifest.record_outputs(&dir, &[csv])?;
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write_atomic(&dir)?;

    let (lo, hi) = bounds;
    let in_bounds = |p: Option<f64>| p.is_some_and(|v| (lo..=hi).contains(&v));
    let ok = in_bounds(report.order_u) && (report.order_x.is_none() || in_bounds(report.order_x));
    if !ok {
        eprintln!("fitted order outside [{lo}, {hi}]");
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_OK)
}

pub const KERNEL_CHECK_HEADER: &str =
    "s,phi_m3,phi_m2,phi_m1,phi_0,phi_p1,phi_p2,even_sum,odd_sum,first_moment,second_moment,third_moment,sum_sq";

fn cmd_kernel_check(cli: &Cli, samples: usize, second_moment: Option<f64>, console: &Console) -> Result<i32> {
    let profile = match second_moment {
        Some(k) => PhiProfile::with_second_moment(k)?,
        None => PhiProfile::new(),
    };
    let k_target = canonical_second_moment();
    let mut csv = String::from(KERNEL_CHECK_HEADER);
    csv.push('\n');
    let mut worst: f64 = 0.0;
    let mut c_sum = 0.0;
    for i in 0..samples {
        let s = i as f64 / samples as f64;
        let w = profile.try_weights(s)?;
        let r = profile.residuals_against(s, k_target)?;
        worst = worst.max(r.max_linear());
        c_sum += r.sum_sq;
        let cols: Vec<String> = std::iter::once(s)
            .chain(w)
            .chain([r.even_sum, r.odd_sum, r.first_moment, r.second_moment, r.third_moment, r.sum_sq])
            .map(|v| format!("{v:e}"))
            .collect();
        csv.push_str(&cols.join(","));
        csv.push('\n');
    }
    let c = c_sum / samples as f64;

    match &cli.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join("kernel_check.csv");
            std::fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
            console.say(format!("wrote {}", path.display()));
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(csv.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    let pass = worst <= 1e-10 && (c - 0.326).abs() <= 5e-4;
    let verdict = if pass { "PASS" } else { "FAIL" };
    if !console.quiet || !pass {
        eprintln!("kernel-check {verdict}: max constraint residual {worst:.3e}, C = {c:.6}");
    }
    Ok(if pass { EXIT_OK } else { EXIT_VALIDATION })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let console = Console { quiet: cli.quiet };
    match &cli.command {
        Command::Run { config } => cmd_run(cli, config, &console),
        Command::Converge {
            config,
            levels,
            min_order,
            max_order,
        } => cmd_converge(cli, config, *levels as usize, (*min_order, *max_order), &console),
        Command::KernelCheck {
            samples,
            second_moment,
        } => cmd_kernel_check(cli, *samples as usize, *second_moment, &console),
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
