//! Verification suites: fixed families, records and caps per check.
//!
//! A suite yields one report per check. Configurations hold only what feeds
//! that check, so a check run alone and inside `all` gives the same bytes.
//! `--quick` shrinks families and never touches tolerances.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use anyhow::{anyhow, ensure, Result};
use nsdiag_core::commutator::{
    cutoff_commutator, forced_heat_rk4, verify_cutoff_lemma, Bump, CutoffForcing, CUTOFF_CAP,
};
use nsdiag_core::generate::{generate_any, GeneratedField};
use nsdiag_core::norms::check_embedding;
use nsdiag_core::nse::simulate_streaming;
use nsdiag_core::quantities::scaled_quantities;
use nsdiag_core::report::Criterion;
use nsdiag_core::verify::{
    check_c_bounds, check_interpolation, check_localized, check_main_bound, check_pressure_decay, check_young,
    report_local_energy, run_iteration, EnergyTestFunction, IterationState, LocalEnergyAccumulator, DEFAULT_CAP,
    INTERPOLATION_CAP, LOCAL_ENERGY_TOLERANCE, STABILITY_FACTOR,
};
use nsdiag_core::{
    besov_norm, generate, BesovOptions, CheckCase, CheckReport, FieldKind, FieldSpec, Integration, ParabolicCylinder,
    ScalarField, SimSpec, SpaceTimeRecord, VectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Lemma21,
    Lemma22,
    Lemma23,
    CBounds,
    Energy,
    PressureDecay,
    Iteration,
    Embedding,
    MainBound,
    All,
}

impl Suite {
    pub const EACH: [Suite; 9] = [
        Suite::Lemma21,
        Suite::Lemma22,
        Suite::Lemma23,
        Suite::CBounds,
        Suite::Energy,
        Suite::PressureDecay,
        Suite::Iteration,
        Suite::Embedding,
        Suite::MainBound,
    ];

    /// Report names, which are also the `--cap` keys.
    pub fn checks(self) -> &'static [&'static str] {
        match self {
            Suite::Lemma21 => &["lemma21"],
            Suite::Lemma22 => &["lemma22"],
            Suite::Lemma23 => &["lemma23"],
            Suite::CBounds => &["c_bounds", "young"],
            Suite::Energy => &["local_energy"],
            Suite::PressureDecay => &["pressure_decay"],
            Suite::Iteration => &["iteration"],
            Suite::Embedding => &["embedding"],
            Suite::MainBound => &["main_bound", "bound_shape"],
            Suite::All => &[],
        }
    }
}

pub fn all_checks() -> Vec<&'static str> {
    Suite::EACH.iter().flat_map(|s| s.checks().iter().copied()).collect()
}

#[derive(Debug, Clone, Default)]
pub struct Profile {
    pub quick: bool,
    /// Cap overrides by check name.
    pub caps: BTreeMap<String, f64>,
}

impl Profile {
    fn cap(&self, check: &str, default: f64) -> f64 {
        self.caps.get(check).copied().unwrap_or(default)
    }
}

pub struct CheckOutput {
    pub check: String,
    pub config: Value,
    pub outcome: std::result::Result<CheckReport, String>,
}

impl CheckOutput {
    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(r) if r.pass)
    }
}

/// Navier-Stokes record shared by the c-bounds, pressure-decay and
/// main-bound suites, with its Besov supremum `M`.
pub struct SolverRecord {
    pub spec: SimSpec,
    pub record: SpaceTimeRecord,
    pub m: f64,
}

pub fn solver_spec() -> SimSpec {
    // Amplitude 0.2 keeps the spectrum inside |m| < 8, so the lambda = 2
    // dilation of the main-bound check stays on the grid.
    let init = FieldSpec::new(FieldKind::TaylorGreen, 32, PI).with_amplitude(0.2);
    SimSpec::new(init, Integration::new(5e-3, 200, 1).with_viscosity(0.1))
}

fn record_config(spec: &SimSpec) -> Value {
    json!({"simulation": spec, "m": "max over snapshots of the Besov norm, default options"})
}

pub struct Runner {
    profile: Profile,
    record: OnceLock<std::result::Result<Arc<SolverRecord>, String>>,
}

fn rebuilt(report: CheckReport, cap: f64) -> CheckReport {
    let criteria: Vec<Criterion> = report.criteria;
    let notes = report.notes;
    let mut out = CheckReport::new(report.name, cap, report.cases);
    for c in criteria {
        out = out.with_criterion(c.name, c.value, c.limit);
    }
    for n in notes {
        out = out.with_note(n);
    }
    out
}

/// Concatenates per-item reports, renumbering `field=0` labels by item.
fn merge(name: &str, cap: f64, parts: Vec<CheckReport>) -> CheckReport {
    let mut cases = Vec::new();
    let mut criteria = Vec::new();
    for (i, part) in parts.into_iter().enumerate() {
        for mut c in part.cases {
            if let Some(rest) = c.label.strip_prefix("field=0") {
                c.label = format!("field={i}{rest}");
            }
            cases.push(c);
        }
        criteria.extend(part.criteria);
    }
    let mut out = CheckReport::new(name, cap, cases);
    let mut worst: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for c in criteria {
        let e = worst.entry(c.name).or_insert((c.value, c.limit));
        if c.value > e.0 || c.value.is_nan() {
            e.0 = c.value;
        }
    }
    for (name, (value, limit)) in worst {
        out = out.with_criterion(name, value, limit);
    }
    out
}

fn as_vector(spec: &FieldSpec) -> Result<VectorField> {
    Ok(match generate_any(spec)?.field {
        GeneratedField::Vector(v) => v,
        GeneratedField::Scalar(s) => {
            let z = ScalarField::zeros(*s.grid());
            VectorField::new(s, z.clone(), z)?
        }
    })
}

/// Scalar kinds as is, vector kinds by one component.
#[derive(Debug, Clone, Serialize)]
struct ScalarSource {
    spec: FieldSpec,
    component: Option<usize>,
}

impl ScalarSource {
    fn field(&self) -> Result<ScalarField> {
        Ok(match (generate_any(&self.spec)?.field, self.component) {
            (GeneratedField::Scalar(s), None) => s,
            (GeneratedField::Vector(v), Some(d)) if d < 3 => v.component(d).clone(),
            _ => {
                return Err(anyhow!(
                    "component selection does not match the kind of {:?}",
                    self.spec.kind
                ))
            }
        })
    }
}

/// `lambda u(lambda x)` on the box shrunk by `lambda`.
fn scaled_spec(spec: &FieldSpec, lambda: f64) -> FieldSpec {
    let c = spec.resolved_center();
    FieldSpec {
        amplitude: spec.amplitude * lambda,
        length_scale: Some(spec.resolved_length_scale() / lambda),
        box_length: spec.box_length / lambda,
        center: Some([c[0] / lambda, c[1] / lambda, c[2] / lambda]),
        ..spec.clone()
    }
}

fn offset(box_length: f64, d: [f64; 3]) -> [f64; 3] {
    let c = 0.5 * box_length;
    [c + d[0], c + d[1], c + d[2]]
}

/// Closed-form interpolation ratio of the unit Gaussian `exp(-|x|^2)`:
/// `|u|_4 = (pi/4)^{3/8}`, `|grad u|_2^2 = 3 (pi/2)^{3/2}` and
/// `|u|_B = sup_t t^{1/2} (1 + 4t)^{-3/2} = 8^{-1/2} (3/2)^{-3/2}`.
pub fn gaussian_interpolation_ratio() -> f64 {
    let l4 = (PI / 4.0).powf(3.0 / 8.0);
    let grad = (3.0 * (PI / 2.0).powf(1.5)).sqrt();
    let besov = (1.0f64 / 8.0).sqrt() * 1.5f64.powf(-1.5);
    l4 / (besov * grad).sqrt()
}

fn max_rel_dev(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x / y - 1.0).abs()).fold(0.0, f64::max)
}

fn lemma21_family(quick: bool, n: usize, l: f64) -> Vec<FieldSpec> {
    let per = if quick { 3 } else { 10 };
    let widths = [1.0, 0.8, 1.2, 0.9, 1.1, 1.3, 0.75, 1.15, 1.05, 0.85];
    let amps = [1.0, 2.0, 0.5, 1.5, 3.0, 0.7, 1.2, 4.0, 0.9, 2.5];
    let shifts = [
        [0.0, 0.0, 0.0],
        [0.3, -0.2, 0.1],
        [-0.4, 0.5, 0.0],
        [0.2, 0.2, -0.6],
        [0.0, -0.7, 0.4],
        [0.6, 0.1, 0.3],
        [-0.3, -0.3, -0.3],
        [0.5, 0.0, -0.2],
        [0.1, 0.4, 0.6],
        [-0.6, 0.2, 0.1],
    ];
    let mut out = Vec::new();
    for i in 0..per {
        out.push(
            FieldSpec::new(FieldKind::Gaussian, n, l)
                .with_length_scale(widths[i])
                .with_amplitude(amps[i])
                .with_center(offset(l, shifts[i])),
        );
    }
    for i in 0..per {
        out.push(
            FieldSpec::new(FieldKind::GaussianVortex, n, l)
                .with_length_scale(widths[(i + 3) % 10])
                .with_amplitude(amps[(i + 5) % 10])
                .with_center(offset(l, shifts[(i + 1) % 10])),
        );
    }
    for i in 0..per {
        out.push(
            FieldSpec::new(FieldKind::RandomSolenoidal, n, l)
                .with_length_scale([1.0, 1.5, 2.0][i % 3])
                .with_amplitude(amps[(i + 2) % 10])
                .with_seed(1 + i as u64),
        );
    }
    out
}

fn lemma22_fields(quick: bool, n: usize, l: f64) -> Vec<ScalarSource> {
    let gauss = |w: f64, d: [f64; 3]| ScalarSource {
        spec: FieldSpec::new(FieldKind::Gaussian, n, l)
            .with_length_scale(w)
            .with_center(offset(l, d)),
        component: None,
    };
    let vortex = |w: f64, comp: usize| ScalarSource {
        spec: FieldSpec::new(FieldKind::GaussianVortex, n, l).with_length_scale(w),
        component: Some(comp),
    };
    let random = |seed: u64, w: f64, comp: usize| ScalarSource {
        spec: FieldSpec::new(FieldKind::RandomSolenoidal, n, l)
            .with_length_scale(w)
            .with_seed(seed),
        component: Some(comp),
    };
    let plateau = |r: f64| ScalarSource {
        spec: FieldSpec::new(FieldKind::Plateau, n, l).with_length_scale(r),
        component: None,
    };
    let mut out = vec![gauss(1.0, [0.0; 3]), vortex(1.0, 0), random(1, 1.5, 0), plateau(2.0)];
    if !quick {
        out.extend([
            gauss(0.8, [0.5, -0.3, 0.2]),
            gauss(1.2, [-0.4, 0.0, 0.6]),
            vortex(1.2, 1),
            random(2, 2.0, 2),
            random(3, 1.0, 1),
            plateau(1.5),
        ]);
    }
    out
}

fn lemma22_bumps(l: f64) -> Result<Vec<Bump>> {
    Ok(vec![
        Bump::standard(offset(l, [0.0; 3]), 1.5)?,
        Bump::standard(offset(l, [1.0, 0.0, 0.0]), 2.5)?,
        Bump::standard(offset(l, [-0.5, 0.7, 0.3]), 4.0)?,
    ])
}

#[derive(Debug, Clone, Serialize)]
struct DuhamelCase {
    source: ScalarSource,
    bump_center: [f64; 3],
    bump_support: f64,
    t: f64,
    rk4_steps: usize,
}

fn duhamel_cases(quick: bool) -> Vec<DuhamelCase> {
    let (n, l) = (32, 12.0);
    let gauss = |w: f64, d: [f64; 3]| ScalarSource {
        spec: FieldSpec::new(FieldKind::Gaussian, n, l)
            .with_length_scale(w)
            .with_center(offset(l, d)),
        component: None,
    };
    let mut out = vec![DuhamelCase {
        source: gauss(1.5, [0.0; 3]),
        bump_center: offset(l, [0.5, 0.0, -0.5]),
        bump_support: 2.5,
        t: 0.1,
        rk4_steps: 100,
    }];
    if !quick {
        out.push(DuhamelCase {
            source: gauss(1.6, [0.4, -0.2, 0.3]),
            bump_center: offset(l, [-0.3, 0.2, 0.0]),
            bump_support: 1.5,
            t: 0.05,
            rk4_steps: 50,
        });
        out.push(DuhamelCase {
            source: ScalarSource {
                spec: FieldSpec::new(FieldKind::GaussianVortex, n, l).with_length_scale(1.5),
                component: Some(0),
            },
            bump_center: offset(l, [0.0; 3]),
            bump_support: 4.0,
            t: 0.1,
            rk4_steps: 100,
        });
    }
    out
}

/// `max(|I + J - oracle|, |I + J - (phi w - w_phi)|) / (max|f| + 1)`.
fn duhamel_error(case: &DuhamelCase) -> Result<f64> {
    let f = case.source.field()?;
    let bump = Bump::standard(case.bump_center, case.bump_support)?;
    let rec = cutoff_commutator(&f, &bump, &[case.t])?;
    let forcing = CutoffForcing::new(&f, &bump.sample(f.grid())?)?;
    let sum = rec.duhamel_i[0].add(&rec.duhamel_j[0])?;
    let oracle = forced_heat_rk4(&forcing, case.t, case.rk4_steps);
    let err = sum.max_abs_diff(&oracle).max(rec.reconstruction_errors()[0]);
    Ok(err / (f.max_abs() + 1.0))
}

pub const DUHAMEL_TOLERANCE: f64 = 1e-6;
pub const AMPLITUDE_TOLERANCE: f64 = 1e-10;
pub const SCALING_TOLERANCE: f64 = 0.03;
pub const GAUSSIAN_ORACLE_TOLERANCE: f64 = 0.03;
/// Residual limit of the local energy balance at the halved time step.
pub const HALVED_STEP_TOLERANCE: f64 = 0.005;
pub const ITERATION_TOLERANCE: f64 = 1e-12;

/// Cylinder centers of the solver-record scans.
fn record_centers() -> [[f64; 3]; 3] {
    [[PI / 2.0, PI / 2.0, PI / 2.0], [0.5, 1.0, 2.3], [2.6, 0.2, 1.35]]
}

impl Runner {
    pub fn new(profile: Profile) -> Self {
        Runner {
            profile,
            record: OnceLock::new(),
        }
    }

    pub fn run(&self, suite: Suite) -> Vec<CheckOutput> {
        match suite {
            Suite::All => Suite::EACH.iter().flat_map(|&s| self.run(s)).collect(),
            Suite::Lemma21 => vec![self.lemma21()],
            Suite::Lemma22 => vec![self.lemma22()],
            Suite::Lemma23 => vec![self.lemma23()],
            Suite::CBounds => self.c_bounds(),
            Suite::Energy => vec![self.energy()],
            Suite::PressureDecay => vec![self.pressure_decay()],
            Suite::Iteration => vec![self.iteration()],
            Suite::Embedding => vec![self.embedding()],
            Suite::MainBound => self.main_bound(),
        }
    }

    fn output(
        &self,
        check: &str,
        config: Value,
        default_cap: f64,
        f: impl FnOnce(f64) -> Result<CheckReport>,
    ) -> CheckOutput {
        let cap = self.profile.cap(check, default_cap);
        let mut config = config;
        config["cap"] = json!(cap);
        let outcome = f(cap).map(|r| rebuilt(r, cap)).map_err(|e| format!("{e:#}"));
        CheckOutput {
            check: check.into(),
            config,
            outcome,
        }
    }

    fn solver_record(&self) -> Result<Arc<SolverRecord>> {
        self.record
            .get_or_init(|| {
                let spec = solver_spec();
                let run = || -> Result<SolverRecord> {
                    let record = nsdiag_core::simulate(&spec)?;
                    let opts = BesovOptions::for_grid(record.grid());
                    let norms: Vec<Result<f64>> = record
                        .snapshots()
                        .par_iter()
                        .map(|s| Ok(besov_norm(&s.velocity, &opts)?.norm_value))
                        .collect();
                    let mut m = 0.0f64;
                    for x in norms {
                        m = m.max(x?);
                    }
                    Ok(SolverRecord { spec, record, m })
                };
                run().map(Arc::new).map_err(|e| format!("{e:#}"))
            })
            .clone()
            .map_err(|e| anyhow!("solver record: {e}"))
    }

    fn lemma21(&self) -> CheckOutput {
        let (n, l) = (64, 12.0);
        let family = lemma21_family(self.profile.quick, n, l);
        let config = json!({
            "family": family,
            "amplitude_factor": 5.0,
            "scaling_lambda": 2.0,
            "besov": "default options per grid",
            "gaussian_oracle": gaussian_interpolation_ratio(),
        });
        self.output("lemma21", config, INTERPOLATION_CAP, |cap| {
            let parts: Vec<Result<CheckReport>> = family
                .par_iter()
                .map(|spec| {
                    let u = as_vector(spec)?;
                    let opts = BesovOptions::for_grid(u.grid());
                    let base = check_interpolation(std::slice::from_ref(&u), &opts, cap)?;
                    let five = check_interpolation(&[u.scaled(5.0)], &opts, cap)?;
                    let us = as_vector(&scaled_spec(spec, 2.0))?;
                    let scaled = check_interpolation(&[us.clone()], &BesovOptions::for_grid(us.grid()), cap)?;
                    let (amp, sc) = (
                        max_rel_dev(&base.ratios, &five.ratios),
                        max_rel_dev(&base.ratios, &scaled.ratios),
                    );
                    Ok(base
                        .with_criterion("amplitude_invariance", amp, AMPLITUDE_TOLERANCE)
                        .with_criterion("scaling_invariance", sc, SCALING_TOLERANCE))
                })
                .collect();
            let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
            let gaussian = parts[0].cases[0]
                .ratio
                .ok_or_else(|| anyhow!("unit Gaussian ratio is degenerate"))?;
            let oracle = gaussian_interpolation_ratio();
            Ok(merge("lemma21", cap, parts)
                .with_criterion(
                    "gaussian_oracle",
                    (gaussian / oracle - 1.0).abs(),
                    GAUSSIAN_ORACLE_TOLERANCE,
                )
                .with_note(format!("unit Gaussian ratio {gaussian}, closed form {oracle}")))
        })
    }

    fn lemma22(&self) -> CheckOutput {
        let (n, l) = (64, 12.0);
        let fields = lemma22_fields(self.profile.quick, n, l);
        let duhamel = duhamel_cases(self.profile.quick);
        let bumps = lemma22_bumps(l);
        let config = json!({
            "fields": fields,
            "bumps": bumps.as_ref().ok(),
            "duhamel": duhamel,
            "duhamel_tolerance": DUHAMEL_TOLERANCE,
        });
        self.output("lemma22", config, CUTOFF_CAP, |cap| {
            let bumps = bumps?;
            let parts: Vec<Result<CheckReport>> = fields
                .par_iter()
                .map(|src| {
                    let f = src.field()?;
                    Ok(verify_cutoff_lemma(
                        &[f.clone()],
                        &bumps,
                        &BesovOptions::for_grid(f.grid()),
                        cap,
                    )?)
                })
                .collect();
            let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
            let errors: Vec<Result<f64>> = duhamel.par_iter().map(duhamel_error).collect();
            let worst = errors.into_iter().try_fold(0.0f64, |m, e| e.map(|e| m.max(e)))?;
            Ok(merge("lemma22", cap, parts).with_criterion("duhamel_reconstruction", worst, DUHAMEL_TOLERANCE))
        })
    }

    fn lemma23(&self) -> CheckOutput {
        let (n, l) = (64, 17.0);
        let widths: &[f64] = if self.profile.quick { &[1.1] } else { &[1.1, 1.25, 1.4] };
        let family: Vec<FieldSpec> = widths
            .iter()
            .map(|&w| FieldSpec::new(FieldKind::Gaussian, n, l).with_length_scale(w))
            .collect();
        let radii = [0.5, 1.0, 2.0];
        let center = [0.5 * l; 3];
        let config = json!({"family": family, "center": center, "radii": radii});
        self.output("lemma23", config, DEFAULT_CAP, |cap| {
            let parts: Vec<Result<CheckReport>> = family
                .par_iter()
                .map(|spec| {
                    let u = as_vector(spec)?;
                    Ok(check_localized(
                        &[u.clone()],
                        center,
                        &radii,
                        &BesovOptions::for_grid(u.grid()),
                        cap,
                    )?)
                })
                .collect();
            Ok(merge("lemma23", cap, parts.into_iter().collect::<Result<Vec<_>>>()?))
        })
    }

    fn embedding(&self) -> CheckOutput {
        let (n, l) = (64, 2.0 * PI);
        let count = if self.profile.quick { 25 } else { 100 };
        let family: Vec<FieldSpec> = (0..count)
            .map(|i| {
                FieldSpec::new(FieldKind::RandomSolenoidal, n, l)
                    .with_length_scale([0.6, 1.0, 1.5][i % 3])
                    .with_seed(100 + i as u64)
            })
            .collect();
        let balls = [([PI, PI, PI], 0.5), ([2.0, 4.0, 1.0], 1.0), ([4.5, 1.5, 3.5], 1.5)];
        let config = json!({"family": family, "balls": balls});
        let default_cap = nsdiag_core::norms::embedding_constant() * (1.0 + nsdiag_core::norms::EMBEDDING_SLACK);
        self.output("embedding", config, default_cap, |cap| {
            let parts: Vec<Result<CheckReport>> = family
                .par_iter()
                .map(|spec| Ok(check_embedding(&[generate(spec)?], &balls)?))
                .collect();
            Ok(merge("embedding", cap, parts.into_iter().collect::<Result<Vec<_>>>()?))
        })
    }

    fn energy(&self) -> CheckOutput {
        let init = FieldSpec::new(FieldKind::TaylorGreen, 64, 2.0 * PI);
        let mut runs = vec![Integration::new(1e-3, 100, 1)];
        if !self.profile.quick {
            runs.push(Integration::new(5e-4, 200, 1));
        }
        let (x0, radius, t_center, half_width) = ([2.0, 1.3, 3.0], 1.5, 0.1, 0.1);
        let config = json!({
            "init": init,
            "runs": runs,
            "test_function": {"x0": x0, "radius": radius, "t0": t_center, "t_center": t_center, "half_width": half_width},
            "halved_step_tolerance": HALVED_STEP_TOLERANCE,
        });
        self.output("local_energy", config, LOCAL_ENERGY_TOLERANCE, |cap| {
            let cyl = ParabolicCylinder::new(x0, t_center, radius)?;
            let test = EnergyTestFunction::new(&cyl, t_center, half_width)?;
            let v0 = generate(&init)?;
            let balances: Vec<Result<(String, _)>> = runs
                .par_iter()
                .map(|run| {
                    let mut acc = LocalEnergyAccumulator::new(test);
                    simulate_streaming(&v0, *run, |s| acc.push(&s))?;
                    Ok((format!("dt={}", run.dt), acc.finish()?))
                })
                .collect();
            let balances = balances.into_iter().collect::<Result<Vec<_>>>()?;
            let mut report = report_local_energy(&balances, cap);
            if let Some((_, b)) = balances.get(1) {
                report = report.with_criterion("halved_step_residual", b.residual().abs(), HALVED_STEP_TOLERANCE);
            }
            Ok(report)
        })
    }

    fn iteration(&self) -> CheckOutput {
        let seed = 2024u64;
        let sweep = 100;
        let config = json!({
            "reference": {"theta": 1.0 / 16.0, "c_iter": 2.0, "e0": 1.0, "m2": 1.0, "m6": 1.0, "steps": 50},
            "sweep": {"seed": seed, "points": sweep, "theta": [0.01, 0.9], "e0": [0.0, 10.0], "m2": [0.0, 2.0], "m6": [0.0, 2.0], "steps": [1, 100]},
        });
        self.output("iteration", config, ITERATION_TOLERANCE, |cap| {
            let mut cases = Vec::new();
            let reference = run_iteration(IterationState::new(1.0 / 16.0, 2.0, 1.0, 1.0, 1.0)?, 50);
            cases.push(CheckCase::new(
                "reference theta=1/16 c=2",
                reference.max_relative_error,
                1.0,
            ));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..sweep {
                let theta: f64 = rng.gen_range(0.01..0.9);
                let c_iter = rng.gen_range(0.0..=0.5 / theta.sqrt());
                let (e0, m2, m6) = (
                    rng.gen_range(0.0..10.0),
                    rng.gen_range(0.0..2.0),
                    rng.gen_range(0.0..2.0),
                );
                let steps = rng.gen_range(1..=100usize);
                let out = run_iteration(IterationState::new(theta, c_iter, e0, m2, m6)?, steps);
                cases.push(CheckCase::new(
                    format!("sweep {i} theta={theta} c={c_iter} K={steps}"),
                    out.max_relative_error,
                    1.0,
                ));
            }
            // Pure decay and linearity in E0.
            let theta = 0.3f64;
            let q = theta.sqrt();
            let decay = run_iteration(IterationState::new(theta, 0.9, 3.0, 0.0, 0.0)?, 60);
            let geometric = decay
                .state
                .trajectory
                .iter()
                .enumerate()
                .map(|(k, e)| (e / (q.powi(k as i32) * 3.0) - 1.0).abs())
                .fold(0.0, f64::max);
            let one = run_iteration(IterationState::new(theta, 0.9, 1.0, 0.4, 0.2)?, 60);
            let two = run_iteration(IterationState::new(theta, 0.9, 2.0, 0.4, 0.2)?, 60);
            let linearity = one
                .state
                .trajectory
                .iter()
                .zip(&two.state.trajectory)
                .enumerate()
                .map(|(k, (a, b))| ((b - a) - q.powi(k as i32)).abs() / b.max(1.0))
                .fold(0.0, f64::max);
            Ok(CheckReport::new("iteration", cap, cases)
                .with_criterion("geometric_decay", geometric, ITERATION_TOLERANCE)
                .with_criterion("linearity_in_e0", linearity, ITERATION_TOLERANCE)
                .with_note(format!("reference c' = {}", reference.c_prime)))
        })
    }

    fn c_bounds(&self) -> Vec<CheckOutput> {
        let spec = solver_spec();
        let (t0, radii, outer) = (1.0, [0.2, 0.25, 0.35], [1.5, 2.0]);
        let centers = record_centers();
        let mut config = record_config(&spec);
        config["cylinders"] = json!({"centers": centers, "t0": t0, "radii": radii, "outer_factors": outer});
        let c_out = self.output("c_bounds", config, DEFAULT_CAP, |cap| {
            let sr = self.solver_record()?;
            let cyls = centers
                .iter()
                .flat_map(|&x0| radii.iter().map(move |&r| ParabolicCylinder::new(x0, t0, r)))
                .collect::<nsdiag_core::Result<Vec<_>>>()?;
            let parts: Vec<Result<CheckReport>> = cyls
                .par_iter()
                .map(|c| Ok(check_c_bounds(&sr.record, std::slice::from_ref(c), &outer, sr.m, cap)?))
                .collect();
            Ok(merge("c_bounds", cap, parts.into_iter().collect::<Result<Vec<_>>>()?)
                .with_note(format!("M = {}", sr.m)))
        });
        let (young_r, deltas) = ([0.175], [0.25, 0.5, 1.0]);
        let mut config = record_config(&spec);
        config["cylinders"] =
            json!({"centers": centers, "t0": t0, "radii": young_r, "rho_over_r": 4.0, "deltas": deltas});
        let y_out = self.output("young", config, DEFAULT_CAP, |cap| {
            let sr = self.solver_record()?;
            let parts: Vec<Result<CheckReport>> = centers
                .par_iter()
                .map(|&x0| Ok(check_young(&sr.record, x0, t0, &young_r, &deltas, sr.m, cap)?))
                .collect();
            Ok(merge("young", cap, parts.into_iter().collect::<Result<Vec<_>>>()?).with_note(format!("M = {}", sr.m)))
        });
        vec![c_out, y_out]
    }

    fn pressure_decay(&self) -> CheckOutput {
        let spec = solver_spec();
        let t0 = 1.0;
        let pairs = [(0.2, 0.35), (0.2, 0.7), (0.35, 0.7)];
        let centers = record_centers();
        let mut config = record_config(&spec);
        config["cylinders"] = json!({"centers": centers, "t0": t0, "pairs": pairs});
        self.output("pressure_decay", config, DEFAULT_CAP, |cap| {
            let sr = self.solver_record()?;
            let parts: Vec<Result<CheckReport>> = centers
                .par_iter()
                .map(|&x0| Ok(check_pressure_decay(&sr.record, x0, t0, &pairs, cap)?))
                .collect();
            Ok(merge(
                "pressure_decay",
                cap,
                parts.into_iter().collect::<Result<Vec<_>>>()?,
            ))
        })
    }

    fn main_bound(&self) -> Vec<CheckOutput> {
        let spec = solver_spec();
        let (x0, t0, r0) = ([1.1, 0.7, 1.9], 1.0, 0.5);
        let mut config = record_config(&spec);
        config["cylinder"] = json!({"x0": x0, "t0": t0, "r0": r0, "halved": 0.5 * r0, "rescale_lambda": 2.0});
        let direct = self.output("main_bound", config, DEFAULT_CAP, |cap| {
            let sr = self.solver_record()?;
            Ok(check_main_bound(&sr.record, x0, t0, r0, sr.m, cap)?)
        });
        let (theta, c_iter, steps) = (1.0f64 / 16.0, 2.0, 50);
        let mut config = record_config(&spec);
        config["cylinder"] = json!({"x0": x0, "t0": t0, "r0": [r0, 0.5 * r0]});
        config["iteration"] = json!({"theta": theta, "c_iter": c_iter, "steps": steps, "e0": "A + E + D at r0"});
        // E_k / (theta^{k/2} E0 + M2 + M6) <= 1 + c theta^-11 / (1 - theta^{1/2}).
        let shape_cap = 1.0 + c_iter * theta.powi(-11) / (1.0 - theta.sqrt());
        let shape = self.output("bound_shape", config, shape_cap, |cap| {
            let sr = self.solver_record()?;
            let mut cases = Vec::new();
            let mut constants = Vec::new();
            for r in [r0, 0.5 * r0] {
                let q = scaled_quantities(&sr.record, &ParabolicCylinder::new(x0, t0, r)?)?;
                let e0 = q.a + q.e + q.d;
                let out = run_iteration(
                    IterationState::new(theta, c_iter, e0, sr.m.powi(2), sr.m.powi(6))?,
                    steps,
                );
                ensure!(
                    out.max_relative_error <= ITERATION_TOLERANCE,
                    "recursion left its closed form at r0 = {r}"
                );
                constants.push(out.c_prime);
                cases.push(CheckCase::new(format!("r0={r} E0={e0}"), out.c_prime, 1.0));
            }
            let spread =
                constants.iter().copied().fold(0.0, f64::max) / constants.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(CheckReport::new("bound_shape", cap, cases)
                .with_criterion("halving_spread", spread, STABILITY_FACTOR)
                .with_note(format!("M = {}", sr.m)))
        });
        vec![direct, shape]
    }
}
