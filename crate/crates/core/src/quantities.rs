//! Scale-invariant quantities over parabolic cylinders
//! `Q(z0, r) = B(x0, r) x ]t0 - r^2, t0[`:
//!
//! ```text
//! A = sup_t (1/r)   int_B |v|^2        E = (1/r)   int_Q |grad v|^2
//! C =       (1/r^2) int_Q |v|^3        D = (1/r^2) int_Q |q|^{3/2}
//! G = max(A, E, C)                     g = min(A, E, C)
//! ```
//!
//! The supremum in `A` is the maximum over snapshots in the closed window;
//! time integrals use the trapezoid rule on the piecewise-linear interpolant
//! of the snapshots, clipped to the window.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::spectral::{dilate, gradient_norm_squared};

/// Snapshots per window required for the smallest radius: `dt_save <= r^2 / 8`.
pub const SLICES_PER_WINDOW: f64 = 8.0;

/// Relative slack on time comparisons, absorbing rounding in `t0 - r^2`.
const TIME_SLACK: f64 = 1e-9;

/// Pressure means above this fraction of `max(1, max|q|)` are rejected.
const PRESSURE_MEAN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub velocity: VectorField,
    pub pressure: Option<ScalarField>,
}

impl Snapshot {
    pub fn new(t: f64, velocity: VectorField, pressure: Option<ScalarField>) -> Self {
        Snapshot { t, velocity, pressure }
    }
}

/// Time-ordered velocity/pressure snapshots on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeRecord {
    grid: Grid,
    snapshots: Vec<Snapshot>,
    pub viscosity: f64,
    pub provenance: String,
}

impl SpaceTimeRecord {
    pub fn new(snapshots: Vec<Snapshot>, viscosity: f64, provenance: impl Into<String>) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidRecord("record has no snapshots".into()))?;
        let grid = *first.velocity.grid();
        for (i, s) in snapshots.iter().enumerate() {
            if !s.t.is_finite() {
                return Err(Error::NonFinite);
            }
            if i > 0 && s.t <= snapshots[i - 1].t {
                return Err(Error::InvalidRecord(format!(
                    "snapshot times must increase strictly (t[{}] = {}, t[{i}] = {})",
                    i - 1,
                    snapshots[i - 1].t,
                    s.t
                )));
            }
            if *s.velocity.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if let Some(q) = &s.pressure {
                if *q.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                if q.mean().abs() > PRESSURE_MEAN_TOLERANCE * q.max_abs().max(1.0) {
                    return Err(Error::InvalidRecord(format!(
                        "pressure at t = {} has mean {}; pressures must be zero-mean",
                        s.t,
                        q.mean()
                    )));
                }
            }
        }
        Ok(SpaceTimeRecord {
            grid,
            snapshots,
            viscosity,
            provenance: provenance.into(),
        })
    }

    /// The same velocity (and pressure) at each of `times`.
    pub fn time_constant(
        velocity: VectorField,
        pressure: Option<ScalarField>,
        times: &[f64],
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let snaps = times
            .iter()
            .map(|&t| Snapshot::new(t, velocity.clone(), pressure.clone()))
            .collect();
        Self::new(snaps, 1.0, provenance)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<Snapshot> {
        self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn first_time(&self) -> f64 {
        self.snapshots[0].t
    }

    pub fn last_time(&self) -> f64 {
        self.snapshots[self.snapshots.len() - 1].t
    }

    /// Largest gap between consecutive snapshots (0 for a single snapshot).
    pub fn dt_save(&self) -> f64 {
        self.snapshots.windows(2).map(|p| p[1].t - p[0].t).fold(0.0, f64::max)
    }

    pub fn has_pressure(&self) -> bool {
        self.snapshots.iter().all(|s| s.pressure.is_some())
    }

    /// Velocity times `alpha` and pressure times `alpha^2`, which is the
    /// pressure the scaled velocity would produce.
    pub fn scaled(&self, alpha: f64) -> Self {
        let snaps = self
            .snapshots
            .iter()
            .map(|s| {
                Snapshot::new(
                    s.t,
                    s.velocity.scaled(alpha),
                    s.pressure.as_ref().map(|q| q.scaled(alpha * alpha)),
                )
            })
            .collect();
        SpaceTimeRecord {
            snapshots: snaps,
            ..self.clone()
        }
    }

    /// Translation by whole grid cells.
    pub fn shifted(&self, shift: [i64; 3]) -> Self {
        let snaps = self
            .snapshots
            .iter()
            .map(|s| {
                Snapshot::new(
                    s.t,
                    s.velocity.shifted(shift),
                    s.pressure.as_ref().map(|q| q.shifted(shift)),
                )
            })
            .collect();
        SpaceTimeRecord {
            snapshots: snaps,
            ..self.clone()
        }
    }
}

/// `Q(z0, r)` with `z0 = (x0, t0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub x0: [f64; 3],
    pub t0: f64,
    pub r: f64,
}

impl ParabolicCylinder {
    pub fn new(x0: [f64; 3], t0: f64, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidRadius(r));
        }
        if !(t0.is_finite() && x0.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(ParabolicCylinder { x0, t0, r })
    }

    pub fn t_start(&self) -> f64 {
        self.t0 - self.r * self.r
    }

    pub fn with_radius(&self, r: f64) -> Result<Self> {
        Self::new(self.x0, self.t0, r)
    }

    /// Image under `x -> x / lambda`, `t -> t / lambda^2`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        ParabolicCylinder {
            x0: [self.x0[0] / lambda, self.x0[1] / lambda, self.x0[2] / lambda],
            t0: self.t0 / (lambda * lambda),
            r: self.r / lambda,
        }
    }

    /// Checks the window against the record and the time resolution.
    pub fn validate(&self, rec: &SpaceTimeRecord) -> Result<()> {
        let slack = TIME_SLACK * self.t0.abs().max(1.0);
        if self.t_start() < rec.first_time() - slack || self.t0 > rec.last_time() + slack {
            return Err(Error::InvalidCylinder(format!(
                "window [{}, {}] is not covered by the record [{}, {}]",
                self.t_start(),
                self.t0,
                rec.first_time(),
                rec.last_time()
            )));
        }
        let limit = self.r * self.r / SLICES_PER_WINDOW;
        let dt = rec.dt_save();
        if dt > limit * (1.0 + TIME_SLACK) {
            return Err(Error::TimeResolution { dt_save: dt, limit });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledQuantities {
    pub r: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "G")]
    pub g_max: f64,
    #[serde(rename = "g")]
    pub g_min: f64,
}

impl ScaledQuantities {
    pub fn new(r: f64, a: f64, e: f64, c: f64, d: f64) -> Self {
        ScaledQuantities {
            r,
            a,
            e,
            c,
            d,
            g_max: a.max(e).max(c),
            g_min: a.min(e).min(c),
        }
    }
}

/// Weights `w_i` with `sum_i w_i y_i` equal to the integral over `[a, b]` of
/// the piecewise-linear interpolant through `(times[i], y_i)`.
pub fn trapezoid_weights(times: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for i in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[i], times[i + 1]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let h = t1 - t0;
        let (al, ah) = ((lo - t0) / h, (hi - t0) / h);
        let half = 0.5 * (hi - lo);
        w[i] += half * ((1.0 - al) + (1.0 - ah));
        w[i + 1] += half * (al + ah);
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Wanted {
    /// A, E and C.
    Kinematic,
    /// A, E, C and D.
    All,
}

struct Plan {
    cyl: ParabolicCylinder,
    ball: Ball,
    weights: Vec<f64>,
    /// Snapshots whose time lies in the closed window.
    window: (usize, usize),
    a: f64,
    e: f64,
    c: f64,
    d: f64,
}

/// Quantities for many cylinders with one pass over the snapshots; each
/// snapshot's densities are computed at most once.
pub fn evaluate_cylinders(rec: &SpaceTimeRecord, cylinders: &[ParabolicCylinder]) -> Vec<Result<ScaledQuantities>> {
    evaluate(rec, cylinders, Wanted::All)
}

/// Like [`evaluate_cylinders`] without pressure; `D` is left at zero.
pub fn evaluate_kinematic(rec: &SpaceTimeRecord, cylinders: &[ParabolicCylinder]) -> Vec<Result<ScaledQuantities>> {
    evaluate(rec, cylinders, Wanted::Kinematic)
}

fn evaluate(rec: &SpaceTimeRecord, cylinders: &[ParabolicCylinder], wanted: Wanted) -> Vec<Result<ScaledQuantities>> {
    let times = rec.times();
    let mut plans: Vec<Result<Plan>> = cylinders
        .iter()
        .map(|cyl| {
            cyl.validate(rec)?;
            let ball = Ball::new(rec.grid(), cyl.x0, cyl.r)?;
            if ball.is_empty() {
                return Err(Error::EmptyBall);
            }
            let slack = TIME_SLACK * cyl.t0.abs().max(1.0);
            let (a, b) = (cyl.t_start().max(rec.first_time()), cyl.t0.min(rec.last_time()));
            let lo = times.iter().position(|&t| t >= cyl.t_start() - slack);
            let hi = times.iter().rposition(|&t| t <= cyl.t0 + slack);
            let window = match (lo, hi) {
                (Some(lo), Some(hi)) if lo <= hi => (lo, hi),
                _ => {
                    return Err(Error::EmptyTimeWindow {
                        t_start: cyl.t_start(),
                        t_end: cyl.t0,
                    })
                }
            };
            if hi.unwrap() - lo.unwrap() + 1 < 2 {
                return Err(Error::EmptyTimeWindow {
                    t_start: cyl.t_start(),
                    t_end: cyl.t0,
                });
            }
            Ok(Plan {
                cyl: *cyl,
                ball,
                weights: trapezoid_weights(&times, a, b),
                window,
                a: 0.0,
                e: 0.0,
                c: 0.0,
                d: 0.0,
            })
        })
        .collect();

    if wanted == Wanted::All {
        for p in plans.iter_mut() {
            let missing = match p {
                Ok(plan) => (0..times.len())
                    .filter(|&i| plan.weights[i] != 0.0)
                    .any(|i| rec.snapshots[i].pressure.is_none()),
                Err(_) => false,
            };
            if missing {
                *p = Err(Error::MissingPressure);
            }
        }
    }

    for (i, snap) in rec.snapshots.iter().enumerate() {
        let needed = plans.iter().any(|p| match p {
            Ok(p) => p.weights[i] != 0.0 || (p.window.0..=p.window.1).contains(&i),
            Err(_) => false,
        });
        if !needed {
            continue;
        }
        let v = &snap.velocity;
        let mut speed_sq = ScalarField::zeros(*v.grid());
        let mut speed_cubed = ScalarField::zeros(*v.grid());
        for (idx, (s2, s3)) in speed_sq
            .values_mut()
            .iter_mut()
            .zip(speed_cubed.values_mut().iter_mut())
            .enumerate()
        {
            let m = v.magnitude_at(idx);
            *s2 = m * m;
            *s3 = m * m * m;
        }
        let needs_integrals = plans.iter().any(|p| matches!(p, Ok(p) if p.weights[i] != 0.0));
        let grad_sq = if needs_integrals {
            Some(gradient_norm_squared(v))
        } else {
            None
        };
        let pressure_density = match (&snap.pressure, wanted) {
            (Some(q), Wanted::All) if needs_integrals => Some(q.map(|x| x.abs().powf(1.5))),
            _ => None,
        };
        for plan in plans.iter_mut().flatten() {
            let r = plan.cyl.r;
            if (plan.window.0..=plan.window.1).contains(&i) {
                plan.a = plan.a.max(plan.ball.integrate(&speed_sq) / r);
            }
            let w = plan.weights[i];
            if w != 0.0 {
                plan.e += w * plan.ball.integrate(grad_sq.as_ref().expect("computed when weighted")) / r;
                plan.c += w * plan.ball.integrate(&speed_cubed) / (r * r);
                if let Some(pd) = &pressure_density {
                    plan.d += w * plan.ball.integrate(pd) / (r * r);
                }
            }
        }
    }

    plans
        .into_iter()
        .map(|p| p.map(|p| ScaledQuantities::new(p.cyl.r, p.a, p.e, p.c, p.d)))
        .collect()
}

fn single(rec: &SpaceTimeRecord, cyl: &ParabolicCylinder, wanted: Wanted) -> Result<ScaledQuantities> {
    evaluate(rec, core::slice::from_ref(cyl), wanted)
        .pop()
        .expect("one cylinder in, one result out")
}

pub fn compute_a(rec: &SpaceTimeRecord, cyl: &ParabolicCylinder) -> Result<f64> {
    Ok(single(rec, cyl, Wanted::Kinematic)?.a)
}

pub fn compute_e(rec: &SpaceTimeRecord, cyl: &ParabolicCylinder) -> Result<f64> {
    Ok(single(rec, cyl, Wanted::Kinematic)?.e)
}

pub fn compute_c(rec: &SpaceTimeRecord, cyl: &ParabolicCylinder) -> Result<f64> {
    Ok(single(rec, cyl, Wanted::Kinematic)?.c)
}

/// Needs stored pressure; it is never recomputed from the velocity here.
pub fn compute_d(rec: &SpaceTimeRecord, cyl: &ParabolicCylinder) -> Result<f64> {
    Ok(single(rec, cyl, Wanted::All)?.d)
}

pub fn scaled_quantities(rec: &SpaceTimeRecord, cyl: &ParabolicCylinder) -> Result<ScaledQuantities> {
    single(rec, cyl, Wanted::All)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub r: f64,
    pub quantities: Option<ScaledQuantities>,
    pub error: Option<String>,
    /// `sup G` and `sup g` over the successful rows with radius `<= r`.
    pub sup_g_max: f64,
    pub sup_g_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusScan {
    pub x0: [f64; 3],
    pub t0: f64,
    pub rows: Vec<ScanRow>,
    pub sup_g_max: f64,
    pub sup_g_min: f64,
}

impl RadiusScan {
    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Quantities at each radius; failing radii are recorded and skipped.
pub fn scan_radii(rec: &SpaceTimeRecord, x0: [f64; 3], t0: f64, radii: &[f64]) -> RadiusScan {
    let cyls: Vec<Result<ParabolicCylinder>> = radii.iter().map(|&r| ParabolicCylinder::new(x0, t0, r)).collect();
    let valid: Vec<ParabolicCylinder> = cyls.iter().filter_map(|c| c.as_ref().ok().copied()).collect();
    let mut results = evaluate(rec, &valid, Wanted::All).into_iter();
    let outcomes: Vec<Result<ScaledQuantities>> = cyls
        .into_iter()
        .map(|c| match c {
            Ok(_) => results.next().expect("one result per valid cylinder"),
            Err(e) => Err(e),
        })
        .collect();
    let mut rows: Vec<ScanRow> = radii
        .iter()
        .zip(outcomes)
        .map(|(&r, out)| {
            let (quantities, error) = match out {
                Ok(q) => (Some(q), None),
                Err(e) => (None, Some(format!("{e}"))),
            };
            ScanRow {
                r,
                quantities,
                error,
                sup_g_max: 0.0,
                sup_g_min: 0.0,
            }
        })
        .collect();
    for i in 0..rows.len() {
        let r = rows[i].r;
        let below = rows.iter().filter(|row| row.r <= r).filter_map(|row| row.quantities);
        let (gm, gn) = below.fold((0.0f64, 0.0f64), |(a, b), q| (a.max(q.g_max), b.max(q.g_min)));
        rows[i].sup_g_max = gm;
        rows[i].sup_g_min = gn;
    }
    let (sup_g_max, sup_g_min) = rows
        .iter()
        .filter_map(|r| r.quantities)
        .fold((0.0f64, 0.0f64), |(a, b), q| (a.max(q.g_max), b.max(q.g_min)));
    RadiusScan {
        x0,
        t0,
        rows,
        sup_g_max,
        sup_g_min,
    }
}

/// Navier-Stokes rescaling `v -> lambda v(lambda x, lambda^2 t)`,
/// `q -> lambda^2 q(lambda x, lambda^2 t)` on the same box, by moving Fourier
/// mode `m` to `lambda m`. Fails when a significant mode would leave the
/// integer lattice or reach the Nyquist plane.
pub fn ns_rescale(rec: &SpaceTimeRecord, lambda: f64) -> Result<SpaceTimeRecord> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rescaling factor {lambda} must be positive"
        )));
    }
    let mut snaps = Vec::with_capacity(rec.len());
    for s in rec.snapshots() {
        let comps = s.velocity.components();
        let v = VectorField::new(
            dilate(&comps[0], lambda)?.scaled(lambda),
            dilate(&comps[1], lambda)?.scaled(lambda),
            dilate(&comps[2], lambda)?.scaled(lambda),
        )?;
        let q = match &s.pressure {
            Some(q) => Some(dilate(q, lambda)?.scaled(lambda * lambda)),
            None => None,
        };
        snaps.push(Snapshot::new(s.t / (lambda * lambda), v, q));
    }
    SpaceTimeRecord::new(
        snaps,
        rec.viscosity,
        format!("{} | ns_rescale(lambda={lambda})", rec.provenance),
    )
}
