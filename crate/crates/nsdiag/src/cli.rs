//! Subcommands `gen`, `besov`, `quantities`, `verify` and `simulate`.
//!
//! Exit codes: 0 success and all checks passing, 1 computational or check
//! failure, 2 usage error (bad flags, unreadable inputs, missing output
//! directories). Paths are validated before any computation starts.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self as stdio, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use nsdiag_core::generate::{generate_any, GeneratedField};
use nsdiag_core::heat::MeanPolicy;
use nsdiag_core::nse::{simulate_field, Dealias};
use nsdiag_core::quantities::{evaluate_kinematic, scan_radii};
use nsdiag_core::{besov_norm, BesovOptions, FieldKind, FieldSpec, ParabolicCylinder};
use serde_json::json;

use crate::io;
use crate::output::{self, QuantityRow, SummaryRow};
use crate::specfile::{parse_dealias, parse_triple, SimSettings};
use crate::suites::{all_checks, Profile, Runner, Suite};

#[derive(Debug, Parser)]
#[command(
    name = "nsdiag",
    version,
    about = "Navier-Stokes regularity diagnostics on periodic grids"
)]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "NSDIAG_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic field as F3B1.
    Gen(GenArgs),
    /// Heat-flow Besov norm of an F3B1 field, as JSON.
    Besov(BesovArgs),
    /// Scaled quantities of an ST31 record over a radius sweep, as CSV.
    Quantities(QuantitiesArgs),
    /// Run verification suites; one JSON report per check plus summary.csv.
    Verify(VerifyArgs),
    /// Integrate Navier-Stokes and write an ST31 record.
    Simulate(SimulateArgs),
}

fn parse_kind(s: &str) -> std::result::Result<FieldKind, String> {
    FieldKind::from_str(s).map_err(|e| e.to_string())
}

fn parse_center(s: &str) -> std::result::Result<[f64; 3], String> {
    parse_triple(s).map_err(|e| e.to_string())
}

fn parse_dealias_arg(s: &str) -> std::result::Result<Dealias, String> {
    parse_dealias(s).map_err(|e| e.to_string())
}

fn parse_cap(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let name = name.trim().replace('-', "_");
    if !all_checks().contains(&name.as_str()) {
        return Err(format!("unknown check '{name}'; known: {}", all_checks().join(", ")));
    }
    let value: f64 = value.trim().parse().map_err(|e| format!("'{value}': {e}"))?;
    if !(value > 0.0) {
        return Err("caps must be positive".into());
    }
    Ok((name, value))
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: FieldKind,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Box length.
    #[arg(long = "L", default_value_t = std::f64::consts::TAU)]
    pub box_length: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long)]
    pub length_scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `x,y,z`; defaults to the box center.
    #[arg(long, value_parser = parse_center)]
    pub center: Option<[f64; 3]>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BesovArgs {
    pub input: PathBuf,
    /// Geometric t-grid density.
    #[arg(long, default_value_t = 8)]
    pub per_decade: usize,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Remove a nonzero mean instead of rejecting the field.
    #[arg(long)]
    pub allow_mean: bool,
    /// JSON destination; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantitiesArgs {
    pub record: PathBuf,
    /// Cylinder center `x,y,z`.
    #[arg(long, value_parser = parse_center)]
    pub x0: [f64; 3],
    /// Cylinder top time; defaults to the last snapshot.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["r0", "halvings"])]
    pub radii: Option<Vec<f64>>,
    /// Largest radius of a halving sweep `r0 2^-j`, `j = 0..=halvings`.
    #[arg(long, requires = "halvings")]
    pub r0: Option<f64>,
    #[arg(long, requires = "r0")]
    pub halvings: Option<usize>,
    /// Exit 0 even when some radii fail; failures stay in the error column.
    #[arg(long)]
    pub keep_going: bool,
    /// CSV destination; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Smaller families, same tolerances.
    #[arg(long)]
    pub quick: bool,
    /// Ratio cap override `check=value`; repeatable.
    #[arg(long = "cap", value_parser = parse_cap)]
    pub caps: Vec<(String, f64)>,
    /// Report directory, created if missing.
    #[arg(short, long, default_value = "nsdiag-reports")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `key = value` spec file; flags override its entries.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Initial velocity as F3B1, instead of a generated kind.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<FieldKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "L")]
    pub box_length: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub length_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_center)]
    pub center: Option<[f64; 3]>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub save_every: Option<usize>,
    #[arg(long, value_parser = parse_dealias_arg)]
    pub dealias: Option<Dealias>,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Usage errors exit with 2, everything else with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

trait UsageExt<T> {
    fn usage(self) -> std::result::Result<T, Failure>;
    fn compute(self) -> std::result::Result<T, Failure>;
}

impl<T> UsageExt<T> for Result<T> {
    fn usage(self) -> std::result::Result<T, Failure> {
        self.map_err(Failure::Usage)
    }
    fn compute(self) -> std::result::Result<T, Failure> {
        self.map_err(Failure::Compute)
    }
}

fn readable(path: &Path) -> Result<()> {
    fs::metadata(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .and_then(|m| {
            if m.is_file() {
                Ok(())
            } else {
                Err(anyhow!("{} is not a file", path.display()))
            }
        })
}

fn writable_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(anyhow!("directory {} does not exist", p.display())),
        _ => Ok(()),
    }
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = stdio::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Compute(e)) = &f;
            eprintln!("error: {e:#}");
            f.exit_code()
        }
    }
}

/// `Ok(false)` when a check or a keep-going scan row failed.
pub fn run(cli: Cli) -> std::result::Result<bool, Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage(anyhow!("--threads must be at least 1")));
        }
        // A pool already exists when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Besov(a) => besov(a),
        Command::Quantities(a) => quantities(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn gen(a: GenArgs) -> std::result::Result<bool, Failure> {
    writable_parent(&a.output).usage()?;
    let mut spec = FieldSpec::new(a.kind, a.n, a.box_length)
        .with_amplitude(a.amplitude)
        .with_seed(a.seed);
    if let Some(l) = a.length_scale {
        spec = spec.with_length_scale(l);
    }
    if let Some(c) = a.center {
        spec = spec.with_center(c);
    }
    let generated = generate_any(&spec).map_err(|e| Failure::Compute(e.into()))?;
    for w in &generated.warnings {
        eprintln!("warning: {w}");
    }
    io::write_field(&a.output, &generated.field).compute()?;
    Ok(true)
}

fn besov(a: BesovArgs) -> std::result::Result<bool, Failure> {
    readable(&a.input).usage()?;
    if let Some(o) = &a.output {
        writable_parent(o).usage()?;
    }
    if a.per_decade == 0 {
        return Err(Failure::Usage(anyhow!("--per-decade must be positive")));
    }
    let field = io::read_field(&a.input).usage()?;
    let grid = match &field {
        GeneratedField::Scalar(f) => *f.grid(),
        GeneratedField::Vector(v) => *v.grid(),
    };
    let mut opts = BesovOptions::for_grid(&grid).with_points_per_decade(a.per_decade);
    if a.allow_mean {
        opts = opts.with_mean(MeanPolicy::Remove);
    }
    if let Some(t) = a.t_min {
        opts.t_min = t;
    }
    if let Some(t) = a.t_max {
        opts.t_max = t;
    }
    let estimate = match &field {
        GeneratedField::Scalar(f) => besov_norm(f, &opts),
        GeneratedField::Vector(v) => besov_norm(v, &opts),
    }
    .map_err(|e| Failure::Compute(e.into()))?;
    let config = json!({
        "command": "besov",
        "input_digest": io::file_digest(&a.input).compute()?,
        "options": opts,
    });
    let value = output::envelope(&config, &estimate).compute()?;
    emit(a.output.as_deref(), &output::to_json_bytes(&value).compute()?).compute()?;
    Ok(true)
}

fn quantities(a: QuantitiesArgs) -> std::result::Result<bool, Failure> {
    readable(&a.record).usage()?;
    if let Some(o) = &a.output {
        writable_parent(o).usage()?;
    }
    let radii = match (&a.radii, a.r0, a.halvings) {
        (Some(r), _, _) => r.clone(),
        (None, Some(r0), Some(h)) => (0..=h).map(|j| r0 / f64::from(1u32 << j.min(31))).collect(),
        _ => return Err(Failure::Usage(anyhow!("give --radii or --r0 with --halvings"))),
    };
    let (rec, _) = io::read_record(&a.record).usage()?;
    let t0 = a.t0.unwrap_or_else(|| rec.last_time());
    let rows: Vec<QuantityRow> = if rec.has_pressure() {
        scan_radii(&rec, a.x0, t0, &radii)
            .rows
            .into_iter()
            .map(|r| QuantityRow {
                r: r.r,
                quantities: r.quantities,
                error: r.error,
            })
            .collect()
    } else {
        let cyls: Vec<_> = radii.iter().map(|&r| ParabolicCylinder::new(a.x0, t0, r)).collect();
        let valid: Vec<ParabolicCylinder> = cyls.iter().filter_map(|c| c.as_ref().ok().copied()).collect();
        let mut results = evaluate_kinematic(&rec, &valid).into_iter();
        radii
            .iter()
            .zip(cyls)
            .map(|(&r, c)| {
                let out = c.and_then(|_| results.next().expect("one result per valid cylinder"));
                match out {
                    Ok(q) => QuantityRow {
                        r,
                        quantities: Some(q),
                        error: None,
                    },
                    Err(e) => QuantityRow {
                        r,
                        quantities: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    };
    let mut bytes = Vec::new();
    output::write_quantities(&mut bytes, &rows, rec.has_pressure()).compute()?;
    emit(a.output.as_deref(), &bytes).compute()?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} radii failed", rows.len());
    }
    Ok(failed == 0 || a.keep_going)
}

fn verify(a: VerifyArgs) -> std::result::Result<bool, Failure> {
    fs::create_dir_all(&a.output)
        .with_context(|| format!("creating {}", a.output.display()))
        .usage()?;
    let caps: BTreeMap<String, f64> = a.caps.into_iter().collect();
    let runner = Runner::new(Profile { quick: a.quick, caps });
    let outputs = runner.run(a.suite);
    let mut rows = Vec::new();
    for out in &outputs {
        match &out.outcome {
            Ok(report) => {
                let value = output::envelope(&out.config, report).compute()?;
                let path = a.output.join(format!("{}.json", out.check));
                fs::write(&path, output::to_json_bytes(&value).compute()?)
                    .with_context(|| format!("writing {}", path.display()))
                    .compute()?;
            }
            Err(e) => eprintln!("error: {}: {e}", out.check),
        }
        rows.push(SummaryRow {
            check: &out.check,
            report: out.outcome.as_ref().ok(),
        });
    }
    let summary = a.output.join("summary.csv");
    let file = fs::File::create(&summary)
        .with_context(|| format!("creating {}", summary.display()))
        .compute()?;
    output::write_summary(file, &rows).compute()?;
    for out in &outputs {
        let status = if out.passed() { "PASS" } else { "FAIL" };
        let detail = match &out.outcome {
            Ok(r) => {
                let mut s = format!(
                    "max_ratio={} cap={}",
                    r.max_ratio.map_or("-".into(), |m| format!("{m:.4e}")),
                    r.cap
                );
                for c in &r.criteria {
                    s.push_str(&format!(" {}={:.3e}/{:.1e}", c.name, c.value, c.limit));
                }
                s
            }
            Err(e) => e.clone(),
        };
        println!("{status} {} {detail}", out.check);
    }
    Ok(outputs.iter().all(|o| o.passed()))
}

fn simulate(a: SimulateArgs) -> std::result::Result<bool, Failure> {
    writable_parent(&a.output).usage()?;
    let file = match &a.spec {
        Some(p) => {
            readable(p).usage()?;
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .usage()?;
            SimSettings::parse(&text)
                .with_context(|| format!("in {}", p.display()))
                .usage()?
        }
        None => SimSettings::default(),
    };
    let flags = SimSettings {
        kind: a.kind,
        init: a.init.clone(),
        n: a.n,
        box_length: a.box_length,
        amplitude: a.amplitude,
        length_scale: a.length_scale,
        seed: a.seed,
        center: a.center,
        nu: a.nu,
        dt: a.dt,
        steps: a.steps,
        save_every: a.save_every,
        dealias: a.dealias,
    };
    let settings = file.overridden_by(&flags);
    let integration = settings.integration().usage()?;
    let record = if let Some(init) = &settings.init {
        readable(init).usage()?;
        let v0 = match io::read_field(init).usage()? {
            GeneratedField::Vector(v) => v,
            GeneratedField::Scalar(_) => {
                return Err(Failure::Usage(anyhow!("{} holds a scalar field", init.display())))
            }
        };
        let provenance = format!(
            "simulate init={} nu={} dt={} steps={} save_every={}",
            io::file_digest(init).compute()?,
            integration.viscosity,
            integration.dt,
            integration.steps,
            integration.save_every
        );
        simulate_field(&v0, integration, provenance)
    } else {
        let spec = settings.into_spec().usage()?;
        nsdiag_core::simulate(&spec)
    }
    .map_err(|e| Failure::Compute(e.into()))?;
    io::write_record(&a.output, &record).compute()?;
    eprintln!(
        "wrote {} snapshots (t = {} .. {}) to {}",
        record.len(),
        record.first_time(),
        record.last_time(),
        a.output.display()
    );
    Ok(true)
}
