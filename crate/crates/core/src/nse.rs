//! Pseudospectral Navier-Stokes stepper on the periodic box:
//! `d_t v + v . grad v - nu lap v = -grad q`, `div v = 0`.
//!
//! The nonlinearity is taken in rotational form `P(v x curl v)` with the 2/3
//! rule, viscosity is integrated exactly (Lawson integrating-factor RK4) and
//! every stage is Leray-projected.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::generate::{generate, FieldSpec};
use crate::grid::{Field, Grid, ScalarField, VectorField};
use crate::quantities::{Snapshot, SpaceTimeRecord};
use crate::report::text_digest;
use crate::spectral::{
    curl_spectral, divergence_scale, gradient_norm_squared, max_divergence, pressure_from_velocity, project_spectral,
    vector_forward, vector_inverse, SpectralField, SOLENOIDAL_TOLERANCE,
};

/// Advective limit `dt <= ADVECTIVE_CFL * dx / max|v|`.
pub const ADVECTIVE_CFL: f64 = 0.5;
/// Diffusive limit `dt <= DIFFUSIVE_CFL * dx^2 / nu`.
pub const DIFFUSIVE_CFL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dealias {
    /// Zero modes with `|m_i| >= n / 3` in any direction.
    #[default]
    TwoThirds,
    None,
}

/// Time-stepping parameters, independent of the initial field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integration {
    pub viscosity: f64,
    pub dt: f64,
    pub steps: usize,
    pub save_every: usize,
    pub dealias: Dealias,
}

impl Integration {
    pub fn new(dt: f64, steps: usize, save_every: usize) -> Self {
        Integration {
            viscosity: 1.0,
            dt,
            steps,
            save_every,
            dealias: Dealias::TwoThirds,
        }
    }

    pub fn with_viscosity(mut self, nu: f64) -> Self {
        self.viscosity = nu;
        self
    }

    pub fn with_dealias(mut self, d: Dealias) -> Self {
        self.dealias = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.viscosity.is_finite() && self.viscosity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "viscosity {} must be positive",
                self.viscosity
            )));
        }
        if self.save_every == 0 {
            return Err(Error::InvalidParameter("save_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Both CFL limits for a velocity on its grid.
    pub fn check_cfl(&self, v: &VectorField) -> Result<()> {
        let dx = v.grid().spacing();
        let diffusive = DIFFUSIVE_CFL * dx * dx / self.viscosity;
        if self.dt > diffusive {
            return Err(Error::Cfl {
                dt: self.dt,
                limit: diffusive,
                reason: "diffusive",
            });
        }
        let vmax = v.max_magnitude();
        if vmax > 0.0 {
            let advective = ADVECTIVE_CFL * dx / vmax;
            if self.dt > advective {
                return Err(Error::Cfl {
                    dt: self.dt,
                    limit: advective,
                    reason: "advective",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub init: FieldSpec,
    pub integration: Integration,
}

impl SimSpec {
    pub fn new(init: FieldSpec, integration: Integration) -> Self {
        SimSpec { init, integration }
    }

    /// Digest of the canonical rendering, stored in record provenance.
    pub fn digest(&self) -> String {
        text_digest(&format!("{self:?}"))
    }
}

/// Stepper state: velocity coefficients, time and the precomputed factors.
pub struct NavierStokes {
    grid: Grid,
    plan: Fft3,
    integration: Integration,
    /// `exp(-nu |k|^2 dt / 2)` and its square.
    half: Vec<f64>,
    full: Vec<f64>,
    keep: Vec<bool>,
    state: [SpectralField; 3],
    steps_taken: usize,
}

impl NavierStokes {
    pub fn new(v0: &VectorField, integration: Integration) -> Result<Self> {
        integration.validate()?;
        if v0
            .component_slice()
            .iter()
            .any(|c| c.values().iter().any(|x| !x.is_finite()))
        {
            return Err(Error::NonFinite);
        }
        let div = max_divergence(v0);
        if div > SOLENOIDAL_TOLERANCE * divergence_scale(v0).max(1.0) {
            return Err(Error::NotSolenoidal { max_divergence: div });
        }
        integration.check_cfl(v0)?;
        let grid = *v0.grid();
        let plan = Fft3::new(grid.n());
        let n = grid.n();
        let mut half = Vec::with_capacity(grid.len());
        let mut keep = Vec::with_capacity(grid.len());
        let cutoff = n as f64 / 3.0;
        for idx in 0..grid.len() {
            let [i, j, k] = grid.unravel(idx);
            let kk = [grid.wavenumber(i), grid.wavenumber(j), grid.wavenumber(k)];
            let k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
            half.push((-0.5 * integration.viscosity * integration.dt * k2).exp());
            let inside = [i, j, k].iter().all(|&a| (grid.mode(a).abs() as f64) < cutoff);
            keep.push(match integration.dealias {
                Dealias::TwoThirds => inside,
                Dealias::None => true,
            });
        }
        let full = half.iter().map(|h| h * h).collect();
        let state = vector_forward(&plan, v0);
        Ok(NavierStokes {
            grid,
            plan,
            integration,
            half,
            full,
            keep,
            state,
            steps_taken: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.integration.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn velocity(&self) -> VectorField {
        vector_inverse(&self.plan, &self.state)
    }

    /// `P(v x curl v)`, dealiased.
    fn nonlinear(&self, s: &[SpectralField; 3]) -> [SpectralField; 3] {
        let v = vector_inverse(&self.plan, s);
        let w = vector_inverse(&self.plan, &curl_spectral(s));
        let (v, w) = (v.into_components(), w.into_components());
        let len = self.grid.len();
        let mut cross = [
            Vec::with_capacity(len),
            Vec::with_capacity(len),
            Vec::with_capacity(len),
        ];
        for i in 0..len {
            let a = [v[0].values()[i], v[1].values()[i], v[2].values()[i]];
            let b = [w[0].values()[i], w[1].values()[i], w[2].values()[i]];
            cross[0].push(a[1] * b[2] - a[2] * b[1]);
            cross[1].push(a[2] * b[0] - a[0] * b[2]);
            cross[2].push(a[0] * b[1] - a[1] * b[0]);
        }
        let [cx, cy, cz] = cross;
        let cross = VectorField::new(
            ScalarField::from_raw(self.grid, cx),
            ScalarField::from_raw(self.grid, cy),
            ScalarField::from_raw(self.grid, cz),
        )
        .expect("components share a grid");
        let mut out = vector_forward(&self.plan, &cross);
        for comp in out.iter_mut() {
            for (c, &keep) in comp.coefficients_mut().iter_mut().zip(&self.keep) {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
        project_spectral(&mut out);
        out
    }

    /// `out = factor * (a + alpha * b)` mode by mode; no factor means one.
    fn combine(
        factor: Option<&[f64]>,
        a: &[SpectralField; 3],
        b: &[SpectralField; 3],
        alpha: f64,
    ) -> [SpectralField; 3] {
        let mut out = a.clone();
        for d in 0..3 {
            let bc = b[d].coefficients();
            for (idx, c) in out[d].coefficients_mut().iter_mut().enumerate() {
                let f = factor.map_or(1.0, |f| f[idx]);
                *c = (*c + bc[idx] * alpha) * f;
            }
        }
        out
    }

    fn scaled(factor: &[f64], a: &[SpectralField; 3]) -> [SpectralField; 3] {
        let mut out = a.clone();
        for comp in out.iter_mut() {
            for (c, f) in comp.coefficients_mut().iter_mut().zip(factor) {
                *c *= *f;
            }
        }
        out
    }

    /// One Lawson RK4 step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.integration.dt;
        let v = &self.state;
        let k1 = self.nonlinear(v);
        let k2 = self.nonlinear(&Self::combine(Some(&self.half), v, &k1, 0.5 * dt));
        let ehv = Self::scaled(&self.half, v);
        let k3 = self.nonlinear(&Self::combine(None, &ehv, &k2, 0.5 * dt));
        let k4 = self.nonlinear(&Self::combine(Some(&self.half), &ehv, &k3, dt));
        let mut next = v.clone();
        for d in 0..3 {
            let (c1, c2, c3, c4) = (
                k1[d].coefficients(),
                k2[d].coefficients(),
                k3[d].coefficients(),
                k4[d].coefficients(),
            );
            for (idx, out) in next[d].coefficients_mut().iter_mut().enumerate() {
                let (e, h) = (self.full[idx], self.half[idx]);
                *out = *out * e + (c1[idx] * e + (c2[idx] + c3[idx]) * (2.0 * h) + c4[idx]) * (dt / 6.0);
            }
        }
        if next
            .iter()
            .any(|s| s.coefficients().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())))
        {
            return Err(Error::NonFinite);
        }
        self.state = next;
        self.steps_taken += 1;
        Ok(())
    }

    /// Snapshot of the current state with its pressure.
    pub fn snapshot(&self) -> Result<Snapshot> {
        let v = self.velocity();
        let q = pressure_from_velocity(&v)?;
        Ok(Snapshot::new(self.time(), v, Some(q)))
    }
}

/// `int |v|^2`; for smooth solutions `d/dt int |v|^2 = -2 nu int |grad v|^2`.
pub fn energy(v: &VectorField) -> f64 {
    v.component_slice()
        .iter()
        .map(|c| c.values().iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        * v.grid().cell_volume()
}

/// `int |grad v|^2`.
pub fn enstrophy(v: &VectorField) -> f64 {
    gradient_norm_squared(v).integral()
}

/// Runs from `v0`, handing each saved snapshot (every `save_every` steps,
/// starting with `t = 0`) to `on_save`. Between saves only the advective
/// limit can change; it is rechecked at every save.
pub fn simulate_streaming(
    v0: &VectorField,
    integration: Integration,
    mut on_save: impl FnMut(Snapshot) -> Result<()>,
) -> Result<()> {
    let mut ns = NavierStokes::new(v0, integration)?;
    on_save(ns.snapshot()?)?;
    while ns.steps_taken() < integration.steps {
        ns.step()?;
        if ns.steps_taken() % integration.save_every == 0 {
            let snap = ns.snapshot()?;
            integration.check_cfl(&snap.velocity)?;
            on_save(snap)?;
        }
    }
    Ok(())
}

pub fn simulate_field(
    v0: &VectorField,
    integration: Integration,
    provenance: impl Into<String>,
) -> Result<SpaceTimeRecord> {
    integration.validate()?;
    let mut snaps = Vec::with_capacity(integration.steps / integration.save_every + 1);
    simulate_streaming(v0, integration, |s| {
        snaps.push(s);
        Ok(())
    })?;
    SpaceTimeRecord::new(snaps, integration.viscosity, provenance)
}

pub fn simulate(spec: &SimSpec) -> Result<SpaceTimeRecord> {
    let v0 = generate(&spec.init)?;
    let provenance = format!(
        "simulate spec={} init={} n={} L={} nu={} dt={} steps={} save_every={}",
        spec.digest(),
        spec.init.kind.name(),
        spec.init.n,
        spec.init.box_length,
        spec.integration.viscosity,
        spec.integration.dt,
        spec.integration.steps,
        spec.integration.save_every
    );
    simulate_field(&v0, spec.integration, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::FieldKind;
    use core::f64::consts::PI;

    fn tg(n: usize, amp: f64) -> FieldSpec {
        FieldSpec::new(FieldKind::TaylorGreen, n, 2.0 * PI).with_amplitude(amp)
    }

    #[test]
    fn single_mode_decays_like_heat() {
        let init = FieldSpec::new(FieldKind::SingleMode, 16, 2.0 * PI).with_amplitude(1e-6);
        let v0 = generate(&init).unwrap();
        let rec = simulate(&SimSpec::new(init, Integration::new(1e-3, 10, 10))).unwrap();
        let last = rec.snapshots().last().unwrap();
        assert!((last.t - 1e-2).abs() < 1e-15);
        let expected = v0.scaled((-last.t).exp());
        assert!(last.velocity.max_abs_diff(&expected) <= 1e-8 * 1e-6);
    }

    #[test]
    fn zero_stays_zero_and_steps_zero() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let rec = simulate_field(&VectorField::zeros(g), Integration::new(1e-2, 5, 1), "zero").unwrap();
        assert_eq!(rec.len(), 6);
        assert!(rec.snapshots().iter().all(|s| s.velocity.max_magnitude() == 0.0));
        let rec = simulate(&SimSpec::new(tg(8, 1.0), Integration::new(1e-2, 0, 1))).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.snapshots()[0].t, 0.0);
    }

    #[test]
    fn cadence_and_determinism() {
        let spec = SimSpec::new(tg(8, 1.0), Integration::new(1e-2, 7, 3));
        let a = simulate(&spec).unwrap();
        let b = simulate(&spec).unwrap();
        assert_eq!(a, b);
        let times: Vec<f64> = a.times();
        assert_eq!(times.len(), 3);
        assert!((times[2] - 0.06).abs() < 1e-15);
        assert!(a.provenance.contains(&spec.digest()));
    }

    #[test]
    fn cfl_violations() {
        let diffusive = SimSpec::new(tg(32, 1.0), Integration::new(0.01, 1, 1));
        assert!(matches!(
            simulate(&diffusive),
            Err(Error::Cfl {
                reason: "diffusive",
                ..
            })
        ));
        let advective = SimSpec::new(tg(8, 100.0), Integration::new(0.01, 1, 1));
        assert!(matches!(
            simulate(&advective),
            Err(Error::Cfl {
                reason: "advective",
                ..
            })
        ));
        let bad = SimSpec::new(tg(8, 1.0), Integration::new(0.01, 1, 0));
        assert!(simulate(&bad).is_err());
    }

    #[test]
    fn energy_balance_and_solenoidality() {
        let dt = 1e-3;
        let rec = simulate(&SimSpec::new(tg(32, 1.0), Integration::new(dt, 100, 1))).unwrap();
        let snaps = rec.snapshots();
        let energies: Vec<f64> = snaps.iter().map(|s| energy(&s.velocity)).collect();
        assert!(energies.windows(2).all(|w| w[1] <= w[0]));
        for i in 1..snaps.len() - 1 {
            let de = (energies[i + 1] - energies[i - 1]) / (2.0 * dt);
            let diss = 2.0 * enstrophy(&snaps[i].velocity);
            assert!(((de + diss) / diss).abs() <= 0.01, "step {i}: {de} vs {diss}");
            assert!(max_divergence(&snaps[i].velocity) <= 1e-10);
        }
    }

    #[test]
    fn fourth_order_in_time() {
        let t_end = 0.4;
        let run = |dt: f64| {
            let steps = (t_end / dt).round() as usize;
            let rec = simulate(&SimSpec::new(tg(16, 6.0), Integration::new(dt, steps, steps))).unwrap();
            rec.snapshots().last().unwrap().velocity.clone()
        };
        let (a, b, c) = (run(0.02), run(0.01), run(0.005));
        let e1 = a.max_abs_diff(&b);
        let e2 = b.max_abs_diff(&c);
        let order = (e1 / e2).log2();
        assert!(order >= 3.5, "order {order} from {e1} / {e2}");
    }
}
