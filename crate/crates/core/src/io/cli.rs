//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{error, warn};
use serde::Serialize;

use super::{fmt_float, fmt_opt, read_config, write_csv, RunManifest};
use crate::dynamics::{integrate, Termination, VortexConfig};
use crate::equilibria::{polar_pair, vortex_crystal, FourVortexParams};
use crate::error::{Error, Result};
use crate::experiments::{
    blob_evolve, blob_initialize, montecarlo_collisions, stability_sweep, thread_pool, BlobLayout,
    CollisionRequest, Family, SweepRequest,
};
use crate::rng;
use crate::stability::linearize;
use crate::verify;

/// A list of reals: `v1,v2,...` or `start:stop:count` (inclusive, evenly spaced).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("{t:?} is not a number"))
                .and_then(|v| {
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(format!("{t:?} is not finite"))
                    }
                })
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [single] => Ok(Grid(
                single
                    .split(',')
                    .map(num)
                    .collect::<std::result::Result<_, _>>()?,
            )),
            [start, stop, count] => {
                let (a, b) = (num(start)?, num(stop)?);
                let n: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| format!("{count:?} is not a point count"))?;
                match n {
                    0 => Err("a range needs at least one point".into()),
                    1 => Ok(Grid(vec![a])),
                    _ => Ok(Grid(
                        (0..n)
                            .map(|k| {
                                if k + 1 == n {
                                    b
                                } else {
                                    a + (b - a) * k as f64 / (n - 1) as f64
                                }
                            })
                            .collect(),
                    )),
                }
            }
            _ => Err(format!("expected v1,v2,... or start:stop:count, got {s:?}")),
        }
    }
}

fn parse_layout(s: &str) -> std::result::Result<BlobLayout, String> {
    match s {
        "uniform" => Ok(BlobLayout::Uniform),
        "fibonacci" => Ok(BlobLayout::Fibonacci),
        _ => Err(format!(
            "unknown layout {s:?} (expected uniform or fibonacci)"
        )),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spherevortex",
    version,
    about = "Point vortices on the rotating sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory receiving data files and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a configuration file and record invariants.
    Simulate(SimulateArgs),
    /// Linearize an equilibrium and compute its spectrum.
    Stability(StabilityArgs),
    /// Largest real part of the spectrum over a parameter grid.
    Sweep(SweepArgs),
    /// Frequency of ε-collisions from random initial positions.
    Montecarlo(MonteCarloArgs),
    /// Evolve vortex blobs made of particles and track their spread.
    Blob(BlobArgs),
    /// Run the built-in checks, or replay a run manifest.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Override the configuration's Gauss-constraint setting.
    #[arg(long)]
    strict_gauss: Option<bool>,
}

/// Selects a configuration by family and parameters, or from a file.
#[derive(Debug, Args, Serialize)]
struct ConfigSource {
    #[arg(long, conflicts_with = "config")]
    #[serde(serialize_with = "serialize_family")]
    family: Option<Family>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Number of vortices in a crystal.
    #[arg(long)]
    n: Option<usize>,
    /// Ring strength (four-vortex) or pole strength (polar pair).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    strength: f64,
    #[arg(long)]
    strict_gauss: Option<bool>,
}

fn serialize_family<S: serde::Serializer>(
    f: &Option<Family>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match f {
        Some(f) => s.serialize_str(f.name()),
        None => s.serialize_none(),
    }
}

fn required<T>(v: Option<T>, name: &str, family: Family) -> Result<T> {
    v.ok_or_else(|| Error::invalid(name, format!("required for the {family} family")))
}

impl ConfigSource {
    fn load(&self) -> Result<(VortexConfig, Option<super::BlobSpec>)> {
        if let Some(path) = &self.config {
            let rc = read_config(path, self.strict_gauss)?;
            return Ok((rc.vortices, rc.blob));
        }
        let family = self
            .family
            .ok_or_else(|| Error::invalid("family", "either --family or --config is required"))?;
        let cfg = match family {
            Family::FourVortex => FourVortexParams::new(
                required(self.a, "a", family)?,
                required(self.gamma, "gamma", family)?,
                self.strength,
            )?
            .config()?,
            Family::VortexCrystal => vortex_crystal(
                required(self.n, "n", family)?,
                required(self.a, "a", family)?,
                required(self.kappa, "kappa", family)?,
                self.gamma.unwrap_or(0.0),
            )?,
            Family::PolarPair => polar_pair(self.strength, self.gamma.unwrap_or(0.0))?,
        };
        Ok((cfg, None))
    }
}

#[derive(Debug, Args, Serialize)]
struct StabilityArgs {
    #[command(flatten)]
    source: ConfigSource,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    #[serde(serialize_with = "serialize_family_plain")]
    family: Family,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Grid,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<Grid>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    strength: f64,
}

fn serialize_family_plain<S: serde::Serializer>(
    f: &Family,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(f.name())
}

#[derive(Debug, Args, Serialize)]
struct MonteCarloArgs {
    /// Number of vortices; must match the strengths when given.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = "1,1,-2", allow_hyphen_values = true)]
    strengths: Grid,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gamma: f64,
    /// Decreasing cutoffs.
    #[arg(long)]
    eps: Grid,
    #[arg(long, default_value_t = 5.0)]
    tau: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
}

#[derive(Debug, Args, Serialize)]
struct BlobArgs {
    #[command(flatten)]
    source: ConfigSource,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Particles per blob.
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long, value_parser = parse_layout)]
    layout: Option<BlobLayout>,
    #[arg(long, default_value_t = 2e-3)]
    dt: f64,
    #[arg(long, default_value_t = 50.0)]
    t_end: f64,
    /// Steps between diagnostics.
    #[arg(long, default_value_t = 10)]
    diag_every: usize,
    /// Orders n of the 4n-th moments.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    orders: Vec<u32>,
    /// Radii at which to report the circulation outside the cap around the center.
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
    /// End the run at the first exit from the confinement balls.
    #[arg(long)]
    stop_at_exit: bool,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Include the long-running checks.
    #[arg(long)]
    full: bool,
    /// Check the digests recorded in a manifest and replay its run.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

struct Outcome {
    files: Vec<String>,
    code: i32,
}

impl Outcome {
    fn ok(files: Vec<String>) -> Self {
        Self { files, code: 0 }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    println!("master_seed = {}", cli.seed);
    let start = Instant::now();
    let result = execute(&cli).and_then(|outcome| {
        if !outcome.files.is_empty() {
            let manifest = RunManifest {
                command: command_name(&cli.command).to_string(),
                args: replay_args(&argv),
                parameters: parameters(&cli.command),
                master_seed: cli.seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_time_seconds: start.elapsed().as_secs_f64(),
                outputs: RunManifest::digest_outputs(&cli.out_dir, &outcome.files)?,
            };
            manifest.write(&cli.out_dir)?;
        }
        Ok(outcome.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Stability(_) => "stability",
        Command::Sweep(_) => "sweep",
        Command::Montecarlo(_) => "montecarlo",
        Command::Blob(_) => "blob",
        Command::Verify(_) => "verify",
    }
}

fn parameters(c: &Command) -> serde_json::Value {
    let v = match c {
        Command::Simulate(a) => serde_json::to_value(a),
        Command::Stability(a) => serde_json::to_value(a),
        Command::Sweep(a) => serde_json::to_value(a),
        Command::Montecarlo(a) => serde_json::to_value(a),
        Command::Blob(a) => serde_json::to_value(a),
        Command::Verify(a) => serde_json::to_value(a),
    };
    v.unwrap_or(serde_json::Value::Null)
}

/// Arguments after the program name with `--out-dir` removed and `--config`
/// made absolute, so that a replay can run from anywhere.
fn replay_args(argv: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--out-dir" {
            it.next();
        } else if a.starts_with("--out-dir=") {
        } else if a == "--config" {
            out.push(a);
            if let Some(p) = it.next() {
                out.push(absolute(&p));
            }
        } else if let Some(p) = a.strip_prefix("--config=") {
            out.push(format!("--config={}", absolute(p)));
        } else {
            out.push(a);
        }
    }
    out
}

fn absolute(p: &str) -> String {
    std::fs::canonicalize(p)
        .map(|p| p.display().to_string())
        .unwrap_or_else(|_| p.to_string())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(super::io_error(dir))
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Verify(a) => return run_verify(a),
        _ => prepare_dir(&cli.out_dir)?,
    }
    let dir = cli.out_dir.as_path();
    match &cli.command {
        Command::Simulate(a) => run_simulate(a, dir),
        Command::Stability(a) => run_stability(a, dir),
        Command::Sweep(a) => run_sweep(a, dir),
        Command::Montecarlo(a) => run_montecarlo(a, cli.seed, dir),
        Command::Blob(a) => run_blob(a, cli.seed, dir),
        Command::Verify(_) => unreachable!("handled above"),
    }
}

fn run_simulate(a: &SimulateArgs, dir: &Path) -> Result<Outcome> {
    let rc = read_config(&a.config, a.strict_gauss)?;
    let traj = integrate(&rc.vortices, a.dt, a.t_end, a.record_every)?;
    let f = fmt_float;
    write_csv(
        &dir.join("trajectory.csv"),
        &["t", "i", "x", "y", "z", "gx", "gy", "gz"],
        traj.times.iter().enumerate().flat_map(|(k, t)| {
            let traj = &traj;
            (0..traj.states[k].len()).map(move |i| {
                let x = traj.states[k][i].as_vec();
                let g = traj.velocities[k][i];
                vec![
                    f(*t),
                    i.to_string(),
                    f(x.x),
                    f(x.y),
                    f(x.z),
                    f(g.x),
                    f(g.y),
                    f(g.z),
                ]
            })
        }),
    )?;
    write_csv(
        &dir.join("invariants.csv"),
        &["t", "H", "M3", "gauss_sum"],
        traj.times
            .iter()
            .zip(&traj.invariants)
            .map(|(t, s)| vec![f(*t), f(s.energy), f(s.vertical_moment), f(s.gauss_sum)]),
    )?;
    let first = traj.invariants.first().copied();
    write_csv(
        &dir.join("drift.csv"),
        &["t", "dH", "dM3", "dM"],
        traj.times.iter().zip(&traj.invariants).map(|(t, s)| {
            let s0 = first.unwrap_or(*s);
            vec![
                f(*t),
                f(s.energy - s0.energy),
                f(s.vertical_moment - s0.vertical_moment),
                f((s.moment - s0.moment).norm()),
            ]
        }),
    )?;
    let (dh, dm) = traj.invariant_drift();
    println!("max |dH| = {dh:e}, max |dM3| = {dm:e}");
    let files = vec![
        "trajectory.csv".into(),
        "invariants.csv".into(),
        "drift.csv".into(),
    ];
    match traj.termination {
        Termination::Completed => Ok(Outcome::ok(files)),
        Termination::DistanceUnderflow {
            time,
            i,
            j,
            distance,
        } => {
            error!("vortices {i} and {j} collided at t = {time} (distance {distance:e}); trajectory truncated");
            Ok(Outcome { files, code: 2 })
        }
    }
}

fn run_stability(a: &StabilityArgs, dir: &Path) -> Result<Outcome> {
    let (cfg, _) = a.source.load()?;
    let lin = linearize(&cfg)?;
    let f = fmt_float;
    let spec = &lin.spectrum;
    if !spec.is_certified() {
        warn!(
            "eigenvalue residuals above the certificate threshold (max {:e})",
            spec.max_residual()
        );
    }
    write_csv(
        &dir.join("spectrum.csv"),
        &["re", "im", "residual"],
        spec.eigenvalues
            .iter()
            .zip(&spec.residuals)
            .map(|(l, r)| vec![f(l.re), f(l.im), f(*r)]),
    )?;
    write_csv(
        &dir.join("spectrum_summary.csv"),
        &[
            "max_real_part",
            "Omega",
            "eq_residual",
            "frame_rate",
            "max_residual",
        ],
        [vec![
            f(spec.max_real_part),
            f(lin.equilibrium.omega),
            f(lin.equilibrium.residual),
            f(lin.frame_rate),
            f(spec.max_residual()),
        ]],
    )?;
    let n = lin.map.len();
    write_csv(
        &dir.join("jacobian.csv"),
        &["i", "j", "a11", "a12", "a21", "a22"],
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let b = lin.map.block(i, j);
                vec![
                    i.to_string(),
                    j.to_string(),
                    f(b[(0, 0)]),
                    f(b[(0, 1)]),
                    f(b[(1, 0)]),
                    f(b[(1, 1)]),
                ]
            }),
    )?;
    write_csv(
        &dir.join("bases.csv"),
        &["i", "x", "y", "z", "b1x", "b1y", "b1z", "b2x", "b2y", "b2z"],
        lin.map.bases().iter().enumerate().map(|(i, b)| {
            let x = b.base.as_vec();
            vec![
                i.to_string(),
                f(x.x),
                f(x.y),
                f(x.z),
                f(b.b1.x),
                f(b.b1.y),
                f(b.b1.z),
                f(b.b2.x),
                f(b.b2.y),
                f(b.b2.z),
            ]
        }),
    )?;
    println!("max_real_part = {}", f(spec.max_real_part));
    println!(
        "Omega = {}, equilibrium residual = {:e}",
        f(lin.equilibrium.omega),
        lin.equilibrium.residual
    );
    Ok(Outcome::ok(vec![
        "spectrum.csv".into(),
        "spectrum_summary.csv".into(),
        "jacobian.csv".into(),
        "bases.csv".into(),
    ]))
}

fn run_sweep(a: &SweepArgs, dir: &Path) -> Result<Outcome> {
    let req = SweepRequest {
        family: a.family,
        n: a.n,
        a_values: a.a.clone().map(|g| g.0).unwrap_or_default(),
        gamma_values: a.gamma.0.clone(),
        kappa_values: a.kappa.clone().map(|g| g.0).unwrap_or_default(),
        strength: a.strength,
    };
    let rows = thread_pool()?.install(|| stability_sweep(&req))?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        warn!(
            "row a={} kappa={} gamma={} failed: {}",
            r.a,
            r.kappa,
            r.gamma,
            r.error.as_deref().unwrap_or_default()
        );
    }
    let f = fmt_float;
    write_csv(
        &dir.join("sweep.csv"),
        &[
            "family",
            "N",
            "a",
            "kappa",
            "gamma",
            "eq_residual",
            "max_real_part",
            "Omega",
        ],
        rows.iter().map(|r| {
            vec![
                r.family.to_string(),
                r.n.to_string(),
                f(r.a),
                f(r.kappa),
                f(r.gamma),
                f(r.eq_residual),
                f(r.max_real_part),
                f(r.omega),
            ]
        }),
    )?;
    println!("{} rows", rows.len());
    Ok(Outcome::ok(vec!["sweep.csv".into()]))
}

fn run_montecarlo(a: &MonteCarloArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    if let Some(n) = a.n {
        if n != a.strengths.0.len() {
            return Err(Error::invalid(
                "n",
                format!("{n} vortices but {} strengths", a.strengths.0.len()),
            ));
        }
    }
    let req = CollisionRequest {
        strengths: a.strengths.0.clone(),
        gamma: a.gamma,
        eps_grid: a.eps.0.clone(),
        tau: a.tau,
        trials: a.trials,
        dt: a.dt,
        master_seed: seed,
    };
    let stats = thread_pool()?.install(|| montecarlo_collisions(&req))?;
    let f = fmt_float;
    write_csv(
        &dir.join("collisions.csv"),
        &["eps", "trials", "collided", "fraction", "std_error"],
        (0..stats.eps_grid.len()).map(|k| {
            vec![
                f(stats.eps_grid[k]),
                stats.trials.to_string(),
                stats.collided[k].to_string(),
                f(stats.fraction_collided[k]),
                f(stats.std_error[k]),
            ]
        }),
    )?;
    write_csv(
        &dir.join("trials.csv"),
        &["eps", "trial", "collided", "t_collision"],
        stats
            .collision_times
            .iter()
            .enumerate()
            .flat_map(|(k, row)| {
                let eps = stats.eps_grid[k];
                row.iter().enumerate().map(move |(t, c)| {
                    vec![
                        f(eps),
                        t.to_string(),
                        u8::from(c.is_some()).to_string(),
                        fmt_opt(*c),
                    ]
                })
            }),
    )?;
    for k in 0..stats.eps_grid.len() {
        println!(
            "eps = {}: {}/{} collided ({} ± {})",
            stats.eps_grid[k],
            stats.collided[k],
            stats.trials,
            stats.fraction_collided[k],
            stats.std_error[k]
        );
    }
    Ok(Outcome::ok(vec![
        "collisions.csv".into(),
        "trials.csv".into(),
    ]))
}

fn run_blob(a: &BlobArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    let (cfg, spec) = a.source.load()?;
    let eps = a.eps.or(spec.map(|s| s.eps)).ok_or_else(|| {
        Error::invalid("eps", "give --eps or a [blob] block in the configuration")
    })?;
    let beta = a.beta.or(spec.map(|s| s.beta)).unwrap_or(0.4);
    let m = a
        .particles
        .or(spec.map(|s| s.particles_per_blob))
        .unwrap_or(200);
    let layout = a.layout.or(spec.map(|s| s.layout)).unwrap_or_default();
    if a.orders.contains(&0) {
        return Err(Error::invalid("orders", "moment orders start at 1"));
    }
    let mut stream = rng::master(seed);
    let cloud = blob_initialize(&cfg, eps, m, beta, layout, &mut stream)?;
    let report = blob_evolve(
        &cloud,
        a.dt,
        a.t_end,
        a.diag_every,
        &a.orders,
        &a.radii,
        a.stop_at_exit,
    )?;
    let f = fmt_float;
    let mut header: Vec<String> = [
        "t",
        "blob",
        "cx",
        "cy",
        "cz",
        "I",
        "R",
        "max_deviation",
        "ref_x",
        "ref_y",
        "ref_z",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(a.orders.iter().map(|n| format!("m{n}")));
    header.extend(a.radii.iter().map(|r| format!("mass_outside@{r}")));
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &dir.join("moments.csv"),
        &header_ref,
        report.samples.iter().map(|s| {
            let m = &s.moments;
            let mut row = vec![
                f(s.time),
                s.blob.to_string(),
                f(m.center.x),
                f(m.center.y),
                f(m.center.z),
                f(m.second_moment),
                f(m.radius),
                f(s.max_deviation),
                f(s.reference.x),
                f(s.reference.y),
                f(s.reference.z),
            ];
            row.extend(m.higher_moments.iter().map(|v| f(*v)));
            row.extend(m.mass_outside.iter().map(|v| f(*v)));
            row
        }),
    )?;
    write_csv(
        &dir.join("exits.csv"),
        &["blob", "exit_time"],
        report
            .exit_times
            .iter()
            .enumerate()
            .map(|(b, t)| vec![b.to_string(), fmt_opt(*t)]),
    )?;
    if report.dropped_interactions > 0 {
        warn!(
            "{} coincident particle interactions skipped",
            report.dropped_interactions
        );
    }
    match report.exit_time {
        Some(t) => println!("exit_time = {}", f(t)),
        None => println!("exit_time = none (confined up to t = {})", a.t_end),
    }
    Ok(Outcome::ok(vec!["moments.csv".into(), "exits.csv".into()]))
}

fn run_verify(a: &VerifyArgs) -> Result<Outcome> {
    if let Some(path) = &a.manifest {
        return replay(path).map(|ok| Outcome {
            files: vec![],
            code: if ok { 0 } else { 2 },
        });
    }
    let level = if a.full {
        verify::Level::Full
    } else {
        verify::Level::Quick
    };
    let checks = verify::run_suite(level);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    Ok(Outcome {
        files: vec![],
        code: if failed == 0 { 0 } else { 2 },
    })
}

/// Checks recorded digests, then reruns the manifest's command into a scratch
/// directory and compares the regenerated files byte for byte.
fn replay(path: &Path) -> Result<bool> {
    let manifest = RunManifest::read(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut ok = true;
    let stale = manifest.mismatches(dir);
    for f in &stale {
        println!("FAIL digest of {f} differs from the manifest");
    }
    ok &= stale.is_empty();
    let scratch = tempfile::tempdir().map_err(super::io_error(Path::new("temporary directory")))?;
    let mut argv: Vec<String> = vec!["spherevortex".into()];
    argv.extend(manifest.args.iter().cloned());
    argv.push("--out-dir".into());
    argv.push(scratch.path().display().to_string());
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: format!("recorded arguments do not parse: {e}"),
    })?;
    if matches!(cli.command, Command::Verify(_)) {
        return Err(Error::invalid("manifest", "cannot replay a verify run"));
    }
    execute(&cli)?;
    let diff = manifest.mismatches(scratch.path());
    for o in &manifest.outputs {
        let status = if diff.contains(&o.file) {
            "FAIL"
        } else {
            "PASS"
        };
        println!("{status} replay of {}", o.file);
    }
    ok &= diff.is_empty();
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!("0.1,0.3".parse::<Grid>().unwrap(), Grid(vec![0.1, 0.3]));
        let g: Grid = "-2:2:81".parse().unwrap();
        assert_eq!(g.0.len(), 81);
        assert_eq!((g.0[0], g.0[40], g.0[80]), (-2.0, 0.0, 2.0));
        assert_eq!("5:7:1".parse::<Grid>().unwrap(), Grid(vec![5.0]));
        assert!("1:2".parse::<Grid>().is_err());
        assert!("a,1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }

    #[test]
    fn replay_arguments_drop_output_directory() {
        let argv: Vec<OsString> = [
            "spherevortex",
            "sweep",
            "--out-dir",
            "x",
            "--family",
            "polar-pair",
            "--out-dir=y",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        assert_eq!(replay_args(&argv), vec!["sweep", "--family", "polar-pair"]);
    }

    #[test]
    fn usage_errors_exit_with_validation_code() {
        assert_eq!(run(["spherevortex", "frobnicate"]), 1);
        assert_eq!(
            run(["spherevortex", "stability", "--family", "four-vortex"]),
            1
        );
    }
}
