//! Empirical checks of the functional inequalities and of the iteration
//! behind the regularity bound.
//!
//! Every inequality `lhs <= c rhs` becomes a [`CheckReport`] of ratios
//! `lhs / rhs` against a cap; the homogeneity degree of both sides under
//! `u -> alpha u` is noted per check, and equal degrees make ratios
//! amplitude invariant.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, ScalarField};
use crate::heat::{besov_norm, BesovOptions};
use crate::norms::{gradient_l2, lp_norm, weak_l4_on, weak_lp_norm, H1Densities};
use crate::quadrature::trapezoid_clipped;
use crate::quantities::{
    evaluate_cylinders, evaluate_kinematic, ns_rescale, ParabolicCylinder, ScaledQuantities, Snapshot, SpaceTimeRecord,
};
use crate::report::{field_digest, CheckCase, CheckReport};
use crate::spectral::gradient_norm_squared;

/// Default cap for the whole-space interpolation inequality.
pub const INTERPOLATION_CAP: f64 = 10.0;
/// Default cap for every other inequality.
pub const DEFAULT_CAP: f64 = 50.0;
/// Largest `max / min - 1` of the localized ratios across a radius sweep.
pub const LOCALIZED_BAND: f64 = 0.25;
/// Largest relative residual of the local energy balance.
pub const LOCAL_ENERGY_TOLERANCE: f64 = 0.02;
/// Largest spread `max c / min c` of the empirical bound constant.
pub const STABILITY_FACTOR: f64 = 2.0;
/// Smallest scanned radius, in grid cells.
pub const MIN_CELLS_PER_RADIUS: f64 = 2.0;

/// `|u|_{L4} / (|u|_B^{1/2} |grad u|_{L2}^{1/2})` per field, and the same
/// with the weak-L4 numerator. Both sides have degree 1.
pub fn check_interpolation<F: Field>(fields: &[F], opts: &BesovOptions, cap: f64) -> Result<CheckReport> {
    let mut cases = Vec::with_capacity(2 * fields.len());
    for (i, u) in fields.iter().enumerate() {
        let besov = besov_norm(u, opts)?.norm_value;
        let rhs = (besov * gradient_l2(u)).sqrt();
        let digest = field_digest(u);
        cases.push(CheckCase::new(format!("field={i} strong"), lp_norm(u, 4.0)?, rhs).with_digest(digest.clone()));
        cases.push(CheckCase::new(format!("field={i} weak"), weak_lp_norm(u, 4.0)?, rhs).with_digest(digest));
    }
    Ok(CheckReport::new("lemma21", cap, cases))
}

/// `|u|_{L4,inf(B_R)} / (|u|_B (|grad u|_{L2(B_2R)} + |u|_{L2(B_2R)} / R))^{1/2}`
/// over a radius sweep at `center`; degree 1. Passes when the ratios are
/// capped and, per field, within [`LOCALIZED_BAND`] of each other.
pub fn check_localized<F: Field>(
    fields: &[F],
    center: [f64; 3],
    radii: &[f64],
    opts: &BesovOptions,
    cap: f64,
) -> Result<CheckReport> {
    let mut cases = Vec::with_capacity(fields.len() * radii.len());
    let mut worst_band = 0.0f64;
    for (i, u) in fields.iter().enumerate() {
        let besov = besov_norm(u, opts)?.norm_value;
        let densities = H1Densities::new(u);
        let digest = field_digest(u);
        let mut ratios = Vec::with_capacity(radii.len());
        for &r in radii {
            let inner = Ball::new(u.grid(), center, r)?;
            let outer = Ball::new(u.grid(), center, 2.0 * r)?;
            let h1 = densities.on_ball(&outer);
            let case = CheckCase::new(
                format!("field={i} R={r}"),
                weak_l4_on(u, &inner),
                (besov * h1.combination).sqrt(),
            )
            .with_digest(digest.clone());
            if let Some(ratio) = case.ratio {
                ratios.push(ratio);
            }
            cases.push(case);
        }
        if let (Some(lo), Some(hi)) = (
            ratios.iter().copied().reduce(f64::min),
            ratios.iter().copied().reduce(f64::max),
        ) {
            worst_band = worst_band.max(hi / lo - 1.0);
        }
    }
    Ok(CheckReport::new("lemma23", cap, cases).with_criterion("radius_band", worst_band, LOCALIZED_BAND))
}

/// `max_t |v(t)|_B` over the snapshots.
pub fn record_besov_sup(rec: &SpaceTimeRecord, opts: &BesovOptions) -> Result<f64> {
    let mut m = 0.0f64;
    for s in rec.snapshots() {
        m = m.max(besov_norm(&s.velocity, opts)?.norm_value);
    }
    Ok(m)
}

fn label(cyl: &ParabolicCylinder) -> String {
    format!(
        "x0=({:.4},{:.4},{:.4}) t0={} r={}",
        cyl.x0[0], cyl.x0[1], cyl.x0[2], cyl.t0, cyl.r
    )
}

fn quantities_for(rec: &SpaceTimeRecord, cyls: &[ParabolicCylinder]) -> Result<Vec<ScaledQuantities>> {
    evaluate_cylinders(rec, cyls).into_iter().collect()
}

fn kinematic_for(rec: &SpaceTimeRecord, cyls: &[ParabolicCylinder]) -> Result<Vec<ScaledQuantities>> {
    evaluate_kinematic(rec, cyls).into_iter().collect()
}

/// The cubic-term bounds, with `M` the supremum of the snapshot norms:
///
/// * `C(r) / (M^{3/2} (A^{3/4}(2r) + E^{3/4}(2r)))` ("doubled" cases),
/// * `C(r) / (M^{3/2} (R/r)^{3/4} (A^{3/4}(R) + E^{3/4}(R)))` with
///   `R = factor * r` for each of `outer_factors` ("outer" cases).
///
/// Both sides have degree 3.
pub fn check_c_bounds(
    rec: &SpaceTimeRecord,
    cylinders: &[ParabolicCylinder],
    outer_factors: &[f64],
    m: f64,
    cap: f64,
) -> Result<CheckReport> {
    if outer_factors.iter().any(|&f| !(f >= 1.0)) {
        return Err(Error::InvalidParameter("outer radius factors must be >= 1".into()));
    }
    let mut all = Vec::new();
    for cyl in cylinders {
        all.push(*cyl);
        all.push(cyl.with_radius(2.0 * cyl.r)?);
        for &f in outer_factors {
            all.push(cyl.with_radius(f * cyl.r)?);
        }
    }
    let q = kinematic_for(rec, &all)?;
    let per = 2 + outer_factors.len();
    let m32 = m.powf(1.5);
    let mut cases = Vec::new();
    for (i, cyl) in cylinders.iter().enumerate() {
        let base = &q[i * per..(i + 1) * per];
        let c = base[0].c;
        let shell = |s: &ScaledQuantities| s.a.powf(0.75) + s.e.powf(0.75);
        cases.push(CheckCase::new(
            format!("doubled {}", label(cyl)),
            c,
            m32 * shell(&base[1]),
        ));
        for (j, &f) in outer_factors.iter().enumerate() {
            cases.push(CheckCase::new(
                format!("outer R/r={f} {}", label(cyl)),
                c,
                m32 * f.powf(0.75) * shell(&base[2 + j]),
            ));
        }
    }
    Ok(CheckReport::new("c_bounds", cap, cases).with_note(format!("M = {m}")))
}

/// `D(r) / ((r/R) D(R) + (R/r)^2 C(R))` for each `(r, R)`; degree 3.
pub fn check_pressure_decay(
    rec: &SpaceTimeRecord,
    x0: [f64; 3],
    t0: f64,
    pairs: &[(f64, f64)],
    cap: f64,
) -> Result<CheckReport> {
    let mut all = Vec::with_capacity(2 * pairs.len());
    for &(r, big) in pairs {
        if !(r < big) {
            return Err(Error::InvalidParameter(format!("need r < R, got r = {r}, R = {big}")));
        }
        all.push(ParabolicCylinder::new(x0, t0, r)?);
        all.push(ParabolicCylinder::new(x0, t0, big)?);
    }
    let q = quantities_for(rec, &all)?;
    let cases = pairs
        .iter()
        .enumerate()
        .map(|(i, &(r, big))| {
            let (small, large) = (&q[2 * i], &q[2 * i + 1]);
            CheckCase::new(
                format!("{} R={big}", label(&all[2 * i])),
                small.d,
                (r / big) * large.d + (big / r).powi(2) * large.c,
            )
        })
        .collect();
    Ok(CheckReport::new("pressure_decay", cap, cases))
}

/// Smooth nonnegative test function
/// `phi = (1 - |x - x0|^2 / R^2)^4 (1 - (t - tc)^2 / tau^2)^4`, supported in
/// `B(x0, R) x ]tc - tau, tc + tau[`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTestFunction {
    pub x0: [f64; 3],
    pub radius: f64,
    pub t_center: f64,
    pub half_width: f64,
}

/// `phi`, `d_t phi + lap phi` and `grad phi` on the grid at one time.
struct TestSample {
    phi: ScalarField,
    heat: ScalarField,
    grad: [ScalarField; 3],
}

impl EnergyTestFunction {
    /// Test function inside `cyl` extended to `]t0 - r^2, t0 + r^2[`; fails
    /// unless the support is contained in it.
    pub fn new(cyl: &ParabolicCylinder, t_center: f64, half_width: f64) -> Result<Self> {
        let r2 = cyl.r * cyl.r;
        let slack = 1e-12 * cyl.t0.abs().max(1.0);
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half width {half_width} must be positive"
            )));
        }
        if t_center - half_width < cyl.t0 - r2 - slack || t_center + half_width > cyl.t0 + r2 + slack {
            return Err(Error::InvalidCylinder(format!(
                "time support ]{}, {}[ leaves ]{}, {}[",
                t_center - half_width,
                t_center + half_width,
                cyl.t0 - r2,
                cyl.t0 + r2
            )));
        }
        Ok(EnergyTestFunction {
            x0: cyl.x0,
            radius: cyl.r,
            t_center,
            half_width,
        })
    }

    /// The widest choice: `tc = t0`, `tau = r^2`.
    pub fn parabolic(cyl: &ParabolicCylinder) -> Self {
        EnergyTestFunction {
            x0: cyl.x0,
            radius: cyl.r,
            t_center: cyl.t0,
            half_width: cyl.r * cyl.r,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.t_center - self.half_width, self.t_center + self.half_width)
    }

    fn eta(&self, t: f64) -> (f64, f64) {
        let s = (t - self.t_center) / self.half_width;
        if s.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let base = 1.0 - s * s;
        (base.powi(4), 4.0 * base.powi(3) * (-2.0 * s / self.half_width))
    }

    fn sample(&self, grid: &Grid, t: f64) -> TestSample {
        let (eta, deta) = self.eta(t);
        let r2 = self.radius * self.radius;
        let mut phi = ScalarField::zeros(*grid);
        let mut heat = ScalarField::zeros(*grid);
        let mut grad = [
            ScalarField::zeros(*grid),
            ScalarField::zeros(*grid),
            ScalarField::zeros(*grid),
        ];
        for idx in 0..grid.len() {
            let x = grid.position(idx);
            let d = [
                grid.periodic_delta(self.x0[0], x[0]),
                grid.periodic_delta(self.x0[1], x[1]),
                grid.periodic_delta(self.x0[2], x[2]),
            ];
            let u = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / r2;
            if u >= 1.0 {
                continue;
            }
            let w = 1.0 - u;
            let space = w.powi(4);
            phi.values_mut()[idx] = space * eta;
            let lap = w * w / r2 * (72.0 * u - 24.0);
            heat.values_mut()[idx] = space * deta + lap * eta;
            let g = -8.0 / r2 * w.powi(3) * eta;
            for a in 0..3 {
                grad[a].values_mut()[idx] = g * d[a];
            }
        }
        TestSample { phi, heat, grad }
    }
}

/// Both sides of the local energy balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergyBalance {
    /// `int phi |v(t)|^2 + 2 int int phi |grad v|^2`.
    pub lhs: f64,
    /// `int int |v|^2 (d_t phi + lap phi) + v . grad phi (|v|^2 + 2 q)`.
    pub rhs: f64,
    pub t_end: f64,
}

impl LocalEnergyBalance {
    pub fn residual(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs) / scale
        }
    }
}

/// Accumulates the local energy balance one snapshot at a time, so long
/// runs need not be stored.
pub struct LocalEnergyAccumulator {
    test: EnergyTestFunction,
    times: Vec<f64>,
    dissipation: Vec<f64>,
    flux: Vec<f64>,
    last_energy: f64,
}

impl LocalEnergyAccumulator {
    pub fn new(test: EnergyTestFunction) -> Self {
        LocalEnergyAccumulator {
            test,
            times: Vec::new(),
            dissipation: Vec::new(),
            flux: Vec::new(),
            last_energy: 0.0,
        }
    }

    /// Snapshots must arrive in time order and the first must not be later
    /// than the start of the test function's support.
    pub fn push(&mut self, snap: &Snapshot) -> Result<()> {
        let (start, end) = self.test.support();
        let slack = 1e-12 * start.abs().max(1.0);
        match self.times.last() {
            None if snap.t > start + slack => {
                return Err(Error::InvalidCylinder(format!(
                    "test function support starts at {start}, before the first snapshot {}",
                    snap.t
                )))
            }
            Some(&last) if snap.t <= last => {
                return Err(Error::InvalidRecord("snapshots must arrive in time order".into()))
            }
            _ => {}
        }
        if snap.t >= end {
            return Err(Error::InvalidCylinder(format!(
                "snapshot at {} is past the end {end} of the test function support",
                snap.t
            )));
        }
        let q = snap.pressure.as_ref().ok_or(Error::MissingPressure)?;
        let v = &snap.velocity;
        let g = *v.grid();
        let s = self.test.sample(&g, snap.t);
        let grad_sq = gradient_norm_squared(v);
        let (mut energy, mut diss, mut flux) = (0.0, 0.0, 0.0);
        let comps = v.components();
        for idx in 0..g.len() {
            let phi = s.phi.values()[idx];
            let heat = s.heat.values()[idx];
            if phi == 0.0 && heat == 0.0 {
                continue;
            }
            let vv = [comps[0].values()[idx], comps[1].values()[idx], comps[2].values()[idx]];
            let speed_sq = vv[0] * vv[0] + vv[1] * vv[1] + vv[2] * vv[2];
            let v_dot_grad =
                vv[0] * s.grad[0].values()[idx] + vv[1] * s.grad[1].values()[idx] + vv[2] * s.grad[2].values()[idx];
            energy += phi * speed_sq;
            diss += phi * grad_sq.values()[idx];
            flux += speed_sq * heat + v_dot_grad * (speed_sq + 2.0 * q.values()[idx]);
        }
        let dv = g.cell_volume();
        self.times.push(snap.t);
        self.dissipation.push(2.0 * diss * dv);
        self.flux.push(flux * dv);
        self.last_energy = energy * dv;
        Ok(())
    }

    pub fn finish(&self) -> Result<LocalEnergyBalance> {
        if self.times.len() < 2 {
            return Err(Error::EmptyTimeWindow {
                t_start: self.test.support().0,
                t_end: self.test.support().1,
            });
        }
        let (a, b) = (self.times[0], self.times[self.times.len() - 1]);
        Ok(LocalEnergyBalance {
            lhs: self.last_energy + trapezoid_clipped(&self.times, &self.dissipation, a, b),
            rhs: trapezoid_clipped(&self.times, &self.flux, a, b),
            t_end: b,
        })
    }
}

pub fn local_energy_balance(rec: &SpaceTimeRecord, test: &EnergyTestFunction) -> Result<LocalEnergyBalance> {
    let mut acc = LocalEnergyAccumulator::new(*test);
    for s in rec.snapshots() {
        acc.push(s)?;
    }
    acc.finish()
}

/// Relative residual of the local energy balance at the last snapshot;
/// exact for smooth solutions up to quadrature error. Degree 2 against 3,
/// so the residual is not amplitude invariant.
pub fn check_local_energy(rec: &SpaceTimeRecord, test: &EnergyTestFunction, tolerance: f64) -> Result<CheckReport> {
    let bal = local_energy_balance(rec, test)?;
    Ok(report_local_energy(&[(String::from("run"), bal)], tolerance))
}

/// One case per labelled balance; ratio `|lhs - rhs| / max(|lhs|, |rhs|)`.
pub fn report_local_energy(balances: &[(String, LocalEnergyBalance)], tolerance: f64) -> CheckReport {
    let cases = balances
        .iter()
        .map(|(name, b)| {
            CheckCase::new(
                format!("{name} t={} lhs={} rhs={}", b.t_end, b.lhs, b.rhs),
                (b.lhs - b.rhs).abs(),
                b.lhs.abs().max(b.rhs.abs()),
            )
        })
        .collect();
    CheckReport::new("local_energy", tolerance, cases)
}

/// Inputs of the three Young splittings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungInputs {
    /// `C(z0, 2r)`.
    pub c_2r: f64,
    /// `C(z0, rho / 2)`.
    pub c_half_rho: f64,
    pub a_rho: f64,
    pub e_rho: f64,
    pub rho_over_r: f64,
    pub m: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungSplit {
    /// `C(2r)`, `C(2r)^{2/3}` and `(rho/r)^2 C(rho/2)`.
    pub lhs: [f64; 3],
    /// `d(A+E) + d^-3 M^6 (rho/r)^3`, `d(A+E) + d^-1 M^2 (rho/r)` and
    /// `d(A+E) + d^-3 M^6 (rho/r)^8`, each with unit constant.
    pub rhs: [f64; 3],
}

pub fn young_split(inp: &YoungInputs) -> Result<YoungSplit> {
    let YoungInputs {
        c_2r,
        c_half_rho,
        a_rho,
        e_rho,
        rho_over_r,
        m,
        delta,
    } = *inp;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    if [c_2r, c_half_rho, a_rho, e_rho, rho_over_r, m]
        .iter()
        .any(|x| !(*x >= 0.0))
    {
        return Err(Error::InvalidParameter("Young split inputs must be nonnegative".into()));
    }
    let first = delta * (a_rho + e_rho);
    let (m2, m6) = (m * m, m.powi(6));
    Ok(YoungSplit {
        lhs: [c_2r, c_2r.powf(2.0 / 3.0), rho_over_r * rho_over_r * c_half_rho],
        rhs: [
            first + m6 * rho_over_r.powi(3) / delta.powi(3),
            first + m2 * rho_over_r / delta,
            first + m6 * rho_over_r.powi(8) / delta.powi(3),
        ],
    })
}

/// Young splittings on measured quantities at `rho = 4r` for each radius `r`
/// and each `delta`; the ratios are the empirical constants.
pub fn check_young(
    rec: &SpaceTimeRecord,
    x0: [f64; 3],
    t0: f64,
    radii: &[f64],
    deltas: &[f64],
    m: f64,
    cap: f64,
) -> Result<CheckReport> {
    let mut all = Vec::new();
    for &r in radii {
        let rho = 4.0 * r;
        all.push(ParabolicCylinder::new(x0, t0, 2.0 * r)?);
        all.push(ParabolicCylinder::new(x0, t0, rho / 2.0)?);
        all.push(ParabolicCylinder::new(x0, t0, rho)?);
    }
    let q = kinematic_for(rec, &all)?;
    let mut cases = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        for &delta in deltas {
            let split = young_split(&YoungInputs {
                c_2r: q[3 * i].c,
                c_half_rho: q[3 * i + 1].c,
                a_rho: q[3 * i + 2].a,
                e_rho: q[3 * i + 2].e,
                rho_over_r: 4.0,
                m,
                delta,
            })?;
            for (k, name) in ["cubic", "two_thirds", "outer"].iter().enumerate() {
                cases.push(CheckCase::new(
                    format!("{name} r={r} rho={} delta={delta}", 4.0 * r),
                    split.lhs[k],
                    split.rhs[k],
                ));
            }
        }
    }
    Ok(CheckReport::new("young", cap, cases).with_note(format!("M = {m}")))
}

/// Parameters and trajectory of `E_{k+1} = theta^{1/2} E_k + c (M2 theta^-2 + M6 theta^-11)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub theta: f64,
    pub c_iter: f64,
    pub e0: f64,
    pub m2: f64,
    pub m6: f64,
    pub trajectory: Vec<f64>,
}

impl IterationState {
    pub fn new(theta: f64, c_iter: f64, e0: f64, m2: f64, m6: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta = {theta} must lie in (0, 1)")));
        }
        if !(c_iter >= 0.0 && e0 >= 0.0 && m2 >= 0.0 && m6 >= 0.0) {
            return Err(Error::InvalidParameter("iteration inputs must be nonnegative".into()));
        }
        if 2.0 * c_iter * theta.sqrt() > 1.0 + 1e-12 {
            return Err(Error::Inadmissible { theta, c_iter });
        }
        Ok(IterationState {
            theta,
            c_iter,
            e0,
            m2,
            m6,
            trajectory: vec![e0],
        })
    }

    /// The constant forcing `c (M2 theta^-2 + M6 theta^-11)`.
    pub fn forcing(&self) -> f64 {
        self.c_iter * (self.m2 * self.theta.powi(-2) + self.m6 * self.theta.powi(-11))
    }

    pub fn closed_form(&self, k: usize) -> f64 {
        let q = self.theta.sqrt();
        let qk = q.powi(k as i32);
        qk * self.e0 + self.forcing() * (1.0 - qk) / (1.0 - q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub state: IterationState,
    pub closed_form: Vec<f64>,
    /// `max_k |E_k - closed_k| / max(1, |closed_k|)`.
    pub max_relative_error: f64,
    /// `max_k E_k / (theta^{k/2} E_0 + M2 + M6)`.
    pub c_prime: f64,
}

pub fn run_iteration(mut state: IterationState, steps: usize) -> IterationOutcome {
    let q = state.theta.sqrt();
    let f = state.forcing();
    state.trajectory.truncate(1);
    for k in 0..steps {
        let next = q * state.trajectory[k] + f;
        state.trajectory.push(next);
    }
    let closed: Vec<f64> = (0..=steps).map(|k| state.closed_form(k)).collect();
    let max_relative_error = state
        .trajectory
        .iter()
        .zip(&closed)
        .map(|(e, c)| (e - c).abs() / c.abs().max(1.0))
        .fold(0.0, f64::max);
    let c_prime = state
        .trajectory
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let bound = q.powi(k as i32) * state.e0 + state.m2 + state.m6;
            if bound > 0.0 {
                e / bound
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    IterationOutcome {
        state,
        closed_form: closed,
        max_relative_error,
        c_prime,
    }
}

/// Radii `r0 2^{-j/2}` down to [`MIN_CELLS_PER_RADIUS`] grid cells.
pub fn bound_radii(grid: &Grid, r0: f64) -> Vec<f64> {
    let r_min = MIN_CELLS_PER_RADIUS * grid.spacing();
    let mut out = Vec::new();
    let mut r = r0;
    while r >= r_min * (1.0 - 1e-12) && out.len() < 16 {
        out.push(r);
        r /= core::f64::consts::SQRT_2;
    }
    out
}

/// `sup_{r <= r0} G(z0, r)` over [`bound_radii`], and the empirical constant
/// against `r0^{1/2} + M^2 + M^6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub r0: f64,
    pub sup_g: f64,
    pub rhs: f64,
    pub radii: usize,
}

pub fn main_bound_sample(rec: &SpaceTimeRecord, x0: [f64; 3], t0: f64, r0: f64, m: f64) -> Result<BoundSample> {
    ParabolicCylinder::new(x0, t0, r0)?.validate(rec)?;
    let radii = bound_radii(rec.grid(), r0);
    if radii.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "r0 = {r0} is below {MIN_CELLS_PER_RADIUS} grid cells"
        )));
    }
    let cyls: Vec<ParabolicCylinder> = radii
        .iter()
        .map(|&r| ParabolicCylinder::new(x0, t0, r))
        .collect::<Result<_>>()?;
    let q = quantities_for(rec, &cyls)?;
    Ok(BoundSample {
        r0,
        sup_g: q.iter().map(|s| s.g_max).fold(0.0, f64::max),
        rhs: r0.sqrt() + m * m + m.powi(6),
        radii: radii.len(),
    })
}

/// Empirical constant of the regularity bound at `r0` and `r0 / 2`, and on
/// the rescaled record (`lambda = 2`) at the mapped cylinder. The spreads
/// `max c / min c` of both pairs must stay within [`STABILITY_FACTOR`].
pub fn check_main_bound(
    rec: &SpaceTimeRecord,
    x0: [f64; 3],
    t0: f64,
    r0: f64,
    m: f64,
    cap: f64,
) -> Result<CheckReport> {
    let full = main_bound_sample(rec, x0, t0, r0, m)?;
    let half = main_bound_sample(rec, x0, t0, 0.5 * r0, m)?;
    let lambda = 2.0;
    let mapped = ParabolicCylinder::new(x0, t0, r0)?.rescaled(lambda);
    let scaled_rec = ns_rescale(rec, lambda)?;
    let scaled = main_bound_sample(&scaled_rec, mapped.x0, mapped.t0, mapped.r, m)?;
    let case =
        |name: &str, s: &BoundSample| CheckCase::new(format!("{name} r0={} radii={}", s.r0, s.radii), s.sup_g, s.rhs);
    let cases = vec![case("base", &full), case("halved", &half), case("rescaled", &scaled)];
    let c: Vec<f64> = cases.iter().map(|c| c.ratio.unwrap_or(0.0)).collect();
    let spread = |a: f64, b: f64| {
        if a == 0.0 && b == 0.0 {
            1.0
        } else {
            a.max(b) / a.min(b)
        }
    };
    Ok(CheckReport::new("main_bound", cap, cases)
        .with_criterion("halving_spread", spread(c[0], c[1]), STABILITY_FACTOR)
        .with_criterion("rescale_spread", spread(c[0], c[2]), STABILITY_FACTOR)
        .with_note(format!("M = {m}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, FieldKind, FieldSpec};
    use crate::grid::VectorField;
    use crate::nse::{simulate, Integration, SimSpec};
    use crate::spectral::pressure_from_velocity;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(n: usize, box_length: f64, width: f64, amp: f64) -> ScalarField {
        let g = Grid::new(n, box_length).unwrap();
        let c = box_length / 2.0;
        ScalarField::from_fn(g, |x| {
            let r2 = (x[0] - c).powi(2) + (x[1] - c).powi(2) + (x[2] - c).powi(2);
            amp * (-r2 / (width * width)).exp()
        })
    }

    fn tg_record(n: usize, times: &[f64], with_pressure: bool) -> SpaceTimeRecord {
        let v = generate(&FieldSpec::new(FieldKind::TaylorGreen, n, 2.0 * PI)).unwrap();
        let q = with_pressure.then(|| pressure_from_velocity(&v).unwrap());
        SpaceTimeRecord::time_constant(v, q, times, "tg").unwrap()
    }

    fn uniform_times(t_end: f64, count: usize) -> Vec<f64> {
        (0..count).map(|k| t_end * k as f64 / (count - 1) as f64).collect()
    }

    #[test]
    fn gaussian_interpolation_ratio_matches_closed_form() {
        // |u|_4 = (pi/4)^{3/8}, |grad u|_2^2 = 3 (pi/2)^{3/2}, and
        // sup_t t^{1/2} (1 + 4t)^{-3/2} = 8^{-1/2} (3/2)^{-3/2}.
        let l4 = (PI / 4.0).powf(3.0 / 8.0);
        let grad = (3.0 * (PI / 2.0).powf(1.5)).sqrt();
        let besov = (1.0f64 / 8.0).sqrt() * 1.5f64.powf(-1.5);
        let oracle = l4 / (besov * grad).sqrt();
        assert!((oracle - 1.336).abs() < 1e-3);

        let u = gaussian(64, 12.0, 1.0, 1.0);
        let opts = BesovOptions::for_grid(u.grid());
        let report = check_interpolation(&[u], &opts, INTERPOLATION_CAP).unwrap();
        let strong = report.cases[0].ratio.unwrap();
        assert!((strong / oracle - 1.0).abs() < 0.03, "{strong} vs {oracle}");
        assert!(report.cases[1].ratio.unwrap() <= strong);
        assert!(report.pass);
    }

    #[test]
    fn interpolation_ratio_is_amplitude_and_scaling_invariant() {
        let u = gaussian(32, 12.0, 1.0, 1.0);
        let opts = BesovOptions::for_grid(u.grid());
        let base = check_interpolation(&[u.clone()], &opts, INTERPOLATION_CAP).unwrap();
        let five = check_interpolation(&[u.scaled(5.0)], &opts, INTERPOLATION_CAP).unwrap();
        for (a, b) in base.ratios.iter().zip(&five.ratios) {
            assert!((a / b - 1.0).abs() < 1e-10);
        }
        // u_2(x) = 2 u(2x) on the half box.
        let half = gaussian(32, 6.0, 0.5, 2.0);
        let scaled =
            check_interpolation(&[half.clone()], &BesovOptions::for_grid(half.grid()), INTERPOLATION_CAP).unwrap();
        for (a, b) in base.ratios.iter().zip(&scaled.ratios) {
            assert!((a / b - 1.0).abs() < 0.03);
        }
    }

    #[test]
    fn localized_ratio_band_and_degenerate_cases() {
        let u = gaussian(64, 17.0, 1.0, 1.0);
        let opts = BesovOptions::for_grid(u.grid());
        let report = check_localized(&[u], [8.5; 3], &[0.5, 1.0, 2.0], &opts, DEFAULT_CAP).unwrap();
        assert_eq!(report.ratios.len(), 3);
        assert!(report.criteria[0].value <= LOCALIZED_BAND, "{:?}", report.criteria);
        assert!(report.pass);

        let g = Grid::new(16, 16.0).unwrap();
        let z = check_localized(
            &[ScalarField::zeros(g)],
            [8.0; 3],
            &[1.0],
            &BesovOptions::for_grid(&g),
            DEFAULT_CAP,
        )
        .unwrap();
        assert_eq!(z.degenerate_cases, 1);
    }

    #[test]
    fn localized_ratio_is_translation_covariant() {
        let u = gaussian(32, 12.0, 1.0, 1.0);
        let g = *u.grid();
        let opts = BesovOptions::for_grid(&g);
        let shift = [3i64, -2, 5];
        let center = [6.0, 6.0, 6.0];
        let moved_center = [
            center[0] + 3.0 * g.spacing(),
            center[1] - 2.0 * g.spacing(),
            center[2] + 5.0 * g.spacing(),
        ];
        let a = check_localized(&[u.clone()], center, &[0.75, 1.25], &opts, DEFAULT_CAP).unwrap();
        let b = check_localized(&[u.shifted(shift)], moved_center, &[0.75, 1.25], &opts, DEFAULT_CAP).unwrap();
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            assert!((x / y - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn c_bounds_zero_field_and_outer_relation() {
        let times = uniform_times(1.0, 129);
        let zero = SpaceTimeRecord::time_constant(
            VectorField::zeros(Grid::new(16, 2.0 * PI).unwrap()),
            None,
            &times,
            "zero",
        )
        .unwrap();
        let cyl = ParabolicCylinder::new([PI; 3], 1.0, 0.5).unwrap();
        let r = check_c_bounds(&zero, &[cyl], &[2.0], 0.0, DEFAULT_CAP).unwrap();
        assert!(r.cases.iter().all(|c| c.lhs == 0.0 && c.is_degenerate()));

        let rec = tg_record(32, &times, false);
        let cyls: Vec<_> = [0.3, 0.4]
            .iter()
            .map(|&r| ParabolicCylinder::new([1.0, 2.0, 3.0], 1.0, r).unwrap())
            .collect();
        let m = record_besov_sup(&rec, &BesovOptions::for_grid(rec.grid())).unwrap();
        let r = check_c_bounds(&rec, &cyls, &[2.0], m, DEFAULT_CAP).unwrap();
        assert!(r.pass, "{:?}", r.ratios);
        for pair in r.cases.chunks(2) {
            let (doubled, outer) = (pair[0].ratio.unwrap(), pair[1].ratio.unwrap());
            assert!((outer / (doubled * 2f64.powf(-0.75)) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pressure_decay_zero_pressure_and_amplitude() {
        let times = uniform_times(1.0, 129);
        let pairs = [(0.25, 0.5), (0.25, 1.0), (0.5, 1.0)];
        let v = generate(&FieldSpec::new(FieldKind::TaylorGreen, 32, 2.0 * PI)).unwrap();
        let zero_q =
            SpaceTimeRecord::time_constant(v.clone(), Some(ScalarField::zeros(*v.grid())), &times, "q=0").unwrap();
        let r = check_pressure_decay(&zero_q, [1.0, 2.0, 3.0], 1.0, &pairs, DEFAULT_CAP).unwrap();
        assert!(r.cases.iter().all(|c| c.lhs == 0.0 && c.ratio == Some(0.0)));

        let base = tg_record(32, &times, true);
        let v2 = v.scaled(2.0);
        let q2 = pressure_from_velocity(&v2).unwrap();
        let doubled = SpaceTimeRecord::time_constant(v2, Some(q2), &times, "2tg").unwrap();
        let a = check_pressure_decay(&base, [1.0, 2.0, 3.0], 1.0, &pairs, DEFAULT_CAP).unwrap();
        let b = check_pressure_decay(&doubled, [1.0, 2.0, 3.0], 1.0, &pairs, DEFAULT_CAP).unwrap();
        assert!(a.pass);
        for (ca, cb) in a.cases.iter().zip(&b.cases) {
            assert!((cb.lhs / (8.0 * ca.lhs) - 1.0).abs() < 1e-10);
            assert!((cb.ratio.unwrap() / ca.ratio.unwrap() - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn local_energy_vanishes_for_zero_field() {
        let times = uniform_times(0.2, 21);
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let rec =
            SpaceTimeRecord::time_constant(VectorField::zeros(g), Some(ScalarField::zeros(g)), &times, "zero").unwrap();
        let cyl = ParabolicCylinder::new([PI; 3], 0.1, 1.0).unwrap();
        let test = EnergyTestFunction::new(&cyl, 0.15, 0.15).unwrap();
        let bal = local_energy_balance(&rec, &test).unwrap();
        assert_eq!((bal.lhs, bal.rhs, bal.residual()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn local_energy_constant_field_cancels() {
        // For constant v and q = 0 both sides reduce to quadratures of phi:
        // lhs = |v|^2 eta(T) S, rhs = |v|^2 (S int eta' + S_lap int eta), where
        // S and S_lap are grid sums of the spatial profile and its Laplacian.
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let vel = [0.3, -0.2, 0.5];
        let speed_sq: f64 = vel.iter().map(|c| c * c).sum();
        let v = VectorField::from_fn(g, |_| vel);
        let (radius, tc, tau) = (1.5, 0.5, 0.5);
        let cyl = ParabolicCylinder::new([PI; 3], 1.0, radius).unwrap();
        let test = EnergyTestFunction::new(&cyl, tc, tau).unwrap();
        let times = uniform_times(0.75, 201);
        let mut acc = LocalEnergyAccumulator::new(test);
        for &t in &times {
            acc.push(&Snapshot::new(t, v.clone(), Some(ScalarField::zeros(g))))
                .unwrap();
        }
        let bal = acc.finish().unwrap();

        let (mut s, mut s_lap) = (0.0, 0.0);
        for idx in 0..g.len() {
            let x = g.position(idx);
            let rho2: f64 = (0..3).map(|a| (x[a] - PI).powi(2)).sum();
            let u = rho2 / (radius * radius);
            if u < 1.0 {
                s += (1.0 - u).powi(4);
                s_lap += (1.0 - u).powi(2) * (72.0 * u - 24.0) / (radius * radius);
            }
        }
        let dv = g.cell_volume();
        let eta = |t: f64| (1.0 - ((t - tc) / tau).powi(2)).powi(4);
        let deta = |t: f64| -8.0 * (t - tc) / (tau * tau) * (1.0 - ((t - tc) / tau).powi(2)).powi(3);
        let trap = |f: &dyn Fn(f64) -> f64| {
            times
                .windows(2)
                .map(|w| 0.5 * (w[1] - w[0]) * (f(w[0]) + f(w[1])))
                .sum::<f64>()
        };
        let lhs = speed_sq * eta(0.75) * s * dv;
        let rhs = speed_sq * (s * dv * trap(&deta) + s_lap * dv * trap(&eta));
        assert!((bal.lhs / lhs - 1.0).abs() < 1e-10, "{} vs {lhs}", bal.lhs);
        assert!((bal.rhs / rhs - 1.0).abs() < 1e-10, "{} vs {rhs}", bal.rhs);
        assert!(bal.residual().abs() < 2e-3);
    }

    #[test]
    fn local_energy_on_taylor_green_run() {
        let spec = SimSpec::new(
            FieldSpec::new(FieldKind::TaylorGreen, 32, 2.0 * PI),
            Integration::new(1e-3, 100, 1),
        );
        let rec = simulate(&spec).unwrap();
        let cyl = ParabolicCylinder::new([2.0, 1.3, 3.0], 0.1, 1.5).unwrap();
        let test = EnergyTestFunction::new(&cyl, 0.1, 0.1).unwrap();
        let report = check_local_energy(&rec, &test, LOCAL_ENERGY_TOLERANCE).unwrap();
        assert!(report.pass);
        assert!(report.max_ratio.unwrap() < 1e-3);
    }

    #[test]
    fn energy_test_function_must_fit() {
        let cyl = ParabolicCylinder::new([PI; 3], 1.0, 0.5).unwrap();
        assert!(EnergyTestFunction::new(&cyl, 1.0, 0.25).is_ok());
        assert!(matches!(
            EnergyTestFunction::new(&cyl, 1.0, 0.3),
            Err(Error::InvalidCylinder(_))
        ));
        assert!(EnergyTestFunction::new(&cyl, 1.0, 0.0).is_err());
        assert_eq!(EnergyTestFunction::parabolic(&cyl).support(), (0.75, 1.25));
    }

    #[test]
    fn young_split_zero_norm() {
        let split = young_split(&YoungInputs {
            c_2r: 0.0,
            c_half_rho: 0.0,
            a_rho: 2.0,
            e_rho: 1.0,
            rho_over_r: 4.0,
            m: 0.0,
            delta: 0.5,
        })
        .unwrap();
        assert_eq!(split.rhs, [1.5; 3]);
        assert_eq!(split.lhs, [0.0; 3]);
    }

    #[test]
    fn young_exponent_pair_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(0.0..10.0);
            let b: f64 = rng.gen_range(0.0..10.0);
            let d: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
            assert!(a.powf(0.75) * b <= d * a + b.powi(4) / d.powi(3) + 1e-12);
        }
    }

    #[test]
    fn young_split_monotone_past_crossover() {
        let base = YoungInputs {
            c_2r: 1.0,
            c_half_rho: 1.0,
            a_rho: 1.0,
            e_rho: 1.0,
            rho_over_r: 4.0,
            m: 0.5,
            delta: 1.0,
        };
        let at = |delta: f64| young_split(&YoungInputs { delta, ..base }).unwrap().rhs;
        let mut prev = at(100.0);
        for k in 1..50 {
            let cur = at(100.0 * 1.2f64.powi(k));
            for i in 0..3 {
                assert!(cur[i] > prev[i]);
            }
            prev = cur;
        }
        assert!(young_split(&YoungInputs { delta: 0.0, ..base }).is_err());
    }

    #[test]
    fn iteration_closed_form_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let theta: f64 = rng.gen_range(0.01..0.9);
            let c_iter = rng.gen_range(0.0..1.0) / (2.0 * theta.sqrt());
            let state = IterationState::new(
                theta,
                c_iter,
                rng.gen_range(0.0..10.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            )
            .unwrap();
            assert!(run_iteration(state, 60).max_relative_error <= 1e-12);
        }
    }

    #[test]
    fn iteration_reference_parameters() {
        let state = IterationState::new(1.0 / 16.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        let out = run_iteration(state, 50);
        assert_eq!(out.state.trajectory.len(), 51);
        assert!(out.max_relative_error <= 1e-12);
        assert!(out.c_prime.is_finite() && out.c_prime > 0.0);
        assert!(matches!(
            IterationState::new(1.0 / 16.0, 2.1, 1.0, 1.0, 1.0),
            Err(Error::Inadmissible { .. })
        ));
    }

    #[test]
    fn iteration_pure_decay_and_linearity() {
        let free = run_iteration(IterationState::new(0.25, 1.0, 3.0, 0.0, 0.0).unwrap(), 20);
        for (k, e) in free.state.trajectory.iter().enumerate() {
            assert_eq!(*e, 3.0 * 0.5f64.powi(k as i32));
        }
        let one = run_iteration(IterationState::new(0.25, 1.0, 1.0, 0.2, 0.1).unwrap(), 20);
        let two = run_iteration(IterationState::new(0.25, 1.0, 2.0, 0.2, 0.1).unwrap(), 20);
        for (k, (a, b)) in one.state.trajectory.iter().zip(&two.state.trajectory).enumerate() {
            assert!((b - a - 0.5f64.powi(k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn main_bound_zero_field() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let times = uniform_times(1.0, 257);
        let rec =
            SpaceTimeRecord::time_constant(VectorField::zeros(g), Some(ScalarField::zeros(g)), &times, "zero").unwrap();
        let s = main_bound_sample(&rec, [PI; 3], 1.0, 1.0, 0.0).unwrap();
        assert_eq!(s.sup_g, 0.0);
        assert_eq!(s.radii, bound_radii(&g, 1.0).len());
        assert!(bound_radii(&g, 0.1).is_empty());
    }

    #[test]
    fn main_bound_rescale_is_stable() {
        let times = uniform_times(1.0, 129);
        let rec = tg_record(32, &times, true);
        let m = record_besov_sup(&rec, &BesovOptions::for_grid(rec.grid())).unwrap();
        let report = check_main_bound(&rec, [1.0, 2.0, 3.0], 1.0, 1.0, m, DEFAULT_CAP).unwrap();
        assert_eq!(report.cases.len(), 3);
        let rescale = report.criteria.iter().find(|c| c.name == "rescale_spread").unwrap();
        assert!(rescale.pass, "{rescale:?}");
    }
}
