//! Cutting-off in the heat-semigroup norm.
//!
//! For `w = S(t) f` and `w_phi = S(t)(phi f)` the commutator `u = phi w - w_phi`
//! solves `u_t - Lap u = -2 div(grad(phi) w) + w Lap(phi)` with `u(0) = 0`, so
//! `u = I + J` with
//!
//! ```text
//! I(t) = -int_0^t S(t - s) 2 div(grad(phi) w(s)) ds
//! J(t) =  int_0^t S(t - s) (w Lap(phi))(s) ds
//! ```
//!
//! Both integrals are evaluated mode by mode with composite Gauss-Legendre
//! panels refined geometrically toward `s = 0` and `s = t`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{Field, Grid, ScalarField};
use crate::heat::{apply_heat, besov_norm, BesovOptions, MeanPolicy};
use crate::quadrature::{composite_gauss, integrate_gauss};
use crate::report::{field_digest, CheckCase, CheckReport};
use crate::spectral::SpectralField;

/// Default cap on `|f phi| / |f|`.
pub const CUTOFF_CAP: f64 = 50.0;

/// Gauss-Legendre order of each Duhamel panel.
const DUHAMEL_ORDER: usize = 8;

/// `int_{|u| < radius} exp(-|u|^2) |u| du` in three dimensions.
pub fn appendix_constant_c0_truncated(radius: f64) -> f64 {
    let panels = 64;
    let breaks: Vec<f64> = (0..=panels).map(|i| radius * i as f64 / panels as f64).collect();
    4.0 * PI * integrate_gauss(|r| r * r * r * (-r * r).exp(), &breaks, 10)
}

/// `int_{R^3} exp(-|u|^2) |u| du = 2 pi`, by radial quadrature truncated at 12.
pub fn appendix_constant_c0() -> f64 {
    appendix_constant_c0_truncated(12.0)
}

/// Smooth radial cutoff: 1 on `|x - c| <= plateau_radius`, 0 beyond
/// `support_radius`, with a `C^inf` transition built from `exp(-1/s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 3],
    pub plateau_radius: f64,
    pub support_radius: f64,
}

fn smooth_step(s: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = h(s);
        a / (a + h(1.0 - s))
    }
}

impl Bump {
    pub fn new(center: [f64; 3], plateau_radius: f64, support_radius: f64) -> Result<Self> {
        if !(plateau_radius >= 0.0 && support_radius > plateau_radius && support_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bump radii must satisfy 0 <= plateau ({plateau_radius}) < support ({support_radius})"
            )));
        }
        Ok(Bump {
            center,
            plateau_radius,
            support_radius,
        })
    }

    /// Plain bump with no plateau.
    pub fn standard(center: [f64; 3], support_radius: f64) -> Result<Self> {
        Self::new(center, 0.0, support_radius)
    }

    pub fn profile(&self, distance: f64) -> f64 {
        smooth_step((self.support_radius - distance) / (self.support_radius - self.plateau_radius))
    }

    /// `|spt phi|`.
    pub fn support_volume(&self) -> f64 {
        4.0 * PI / 3.0 * self.support_radius.powi(3)
    }

    /// The support must stay at least `L/4` away from its own periodic images.
    pub fn check_fits(&self, grid: &Grid) -> Result<()> {
        let limit = 0.375 * grid.box_length();
        if self.support_radius > limit {
            return Err(Error::SupportTooLarge {
                extent: self.support_radius,
                limit,
            });
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Grid) -> Result<ScalarField> {
        self.check_fits(grid)?;
        Ok(ScalarField::from_fn(*grid, |x| {
            self.profile(grid.periodic_distance(x, self.center))
        }))
    }
}

/// `phi f`, componentwise for vector fields.
pub fn apply_cutoff<F: Field>(f: &F, phi: &ScalarField) -> Result<F> {
    if f.grid() != phi.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(f.map_each(|c| c.mul(phi).expect("grids checked")))
}

/// Band-limited data for the commutator forcing `-2 div(grad(phi) w) + w Lap(phi)`.
///
/// `f` and `phi` are replaced by their trigonometric interpolants without
/// Nyquist planes, and every product is formed on the doubled grid and
/// truncated back. Grid products alias, which would break the identity
/// `u = I + J` at the level of the spectral tail.
pub struct CutoffForcing {
    plan: Fft3,
    fine_plan: Fft3,
    fine: Grid,
    f_hat: SpectralField,
    phi_fine: ScalarField,
    grad_phi_fine: [ScalarField; 3],
    lap_phi_fine: ScalarField,
}

impl CutoffForcing {
    pub fn new(f: &ScalarField, phi: &ScalarField) -> Result<Self> {
        if f.grid() != phi.grid() {
            return Err(Error::GridMismatch);
        }
        let g = *f.grid();
        let fine = Grid::new(2 * g.n(), g.box_length())?;
        let plan = Fft3::new(g.n());
        let fine_plan = Fft3::new(fine.n());
        let mut f_hat = SpectralField::forward_with(&plan, f);
        f_hat.drop_nyquist();
        let mut phi_hat = SpectralField::forward_with(&plan, phi);
        phi_hat.drop_nyquist();
        let mut lap = phi_hat.clone();
        lap.apply_multiplier(|k| -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
        let up = |s: &SpectralField| -> Result<ScalarField> { Ok(s.resample(&fine)?.inverse_with(&fine_plan)) };
        let grad_phi_fine = [
            up(&phi_hat.derivative(0))?,
            up(&phi_hat.derivative(1))?,
            up(&phi_hat.derivative(2))?,
        ];
        Ok(CutoffForcing {
            phi_fine: up(&phi_hat)?,
            lap_phi_fine: up(&lap)?,
            grad_phi_fine,
            f_hat,
            fine,
            plan,
            fine_plan,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.f_hat.grid()
    }

    fn heat_spectrum(&self, t: f64) -> SpectralField {
        let mut s = self.f_hat.clone();
        apply_heat(&mut s, t);
        s
    }

    fn coarse(&self, fine: &SpectralField) -> SpectralField {
        fine.resample(self.grid()).expect("same box")
    }

    /// `w(t) = S(t) f`.
    pub fn heat_solution(&self, t: f64) -> ScalarField {
        self.heat_spectrum(t).inverse_with(&self.plan)
    }

    /// Alias-free `phi w(t)` and `phi f`.
    fn cutoff_spectra(&self, t: f64) -> (SpectralField, SpectralField) {
        let up = |s: &SpectralField| s.resample(&self.fine).expect("same box");
        let (w, f) = SpectralField::inverse_pair(&self.fine_plan, &up(&self.heat_spectrum(t)), &up(&self.f_hat));
        let (a, b) = SpectralField::forward_pair(
            &self.fine_plan,
            &w.mul(&self.phi_fine).expect("shared grid"),
            &f.mul(&self.phi_fine).expect("shared grid"),
        );
        (self.coarse(&a), self.coarse(&b))
    }

    /// Spectra of the two forcing parts at time `t`:
    /// `(-2 div(grad(phi) w), w Lap(phi))`.
    pub fn forcing_spectra(&self, t: f64) -> (SpectralField, SpectralField) {
        let w_hat = self.heat_spectrum(t).resample(&self.fine).expect("same box");
        let w = w_hat.inverse_with(&self.fine_plan);
        let prod = |a: &ScalarField| a.mul(&w).expect("shared grid");
        let (p0, p1) = SpectralField::forward_pair(
            &self.fine_plan,
            &prod(&self.grad_phi_fine[0]),
            &prod(&self.grad_phi_fine[1]),
        );
        let (p2, j) = SpectralField::forward_pair(
            &self.fine_plan,
            &prod(&self.grad_phi_fine[2]),
            &prod(&self.lap_phi_fine),
        );
        let mut i_part = self.coarse(&p0).derivative(0);
        i_part.add_scaled(&self.coarse(&p1).derivative(1), 1.0);
        i_part.add_scaled(&self.coarse(&p2).derivative(2), 1.0);
        i_part.scale(-2.0);
        (i_part, self.coarse(&j))
    }

    /// The full forcing in physical space.
    pub fn forcing(&self, t: f64) -> ScalarField {
        let (mut a, b) = self.forcing_spectra(t);
        a.add_scaled(&b, 1.0);
        a.inverse_with(&self.plan)
    }

    /// `(I(t), J(t))` by composite Gauss-Legendre in `s`.
    pub fn duhamel(&self, t: f64) -> Result<(ScalarField, ScalarField)> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let g = *self.grid();
        let mut acc_i = SpectralField::zeros(g);
        let mut acc_j = SpectralField::zeros(g);
        if t > 0.0 {
            for (s, weight) in duhamel_nodes(t, g.max_wavenumber_squared()) {
                let (mut fi, mut fj) = self.forcing_spectra(s);
                apply_heat(&mut fi, t - s);
                apply_heat(&mut fj, t - s);
                acc_i.add_scaled(&fi, weight);
                acc_j.add_scaled(&fj, weight);
            }
        }
        Ok((acc_i.inverse_with(&self.plan), acc_j.inverse_with(&self.plan)))
    }

    /// `(w, w_phi, u)` at time `t`, with `u = phi w - w_phi`.
    pub fn commutator(&self, t: f64) -> (ScalarField, ScalarField, ScalarField) {
        let (phi_w, mut phi_f) = self.cutoff_spectra(t);
        apply_heat(&mut phi_f, t);
        let mut u = phi_w;
        u.add_scaled(&phi_f, -1.0);
        let (w_phi, u) = SpectralField::inverse_pair(&self.plan, &phi_f, &u);
        (self.heat_solution(t), w_phi, u)
    }
}

/// Quadrature nodes on `[0, t]`: panels double in width away from both
/// endpoints, starting from `0.05 / k_max^2` (the fastest heat time scale).
pub fn duhamel_nodes(t: f64, max_wavenumber_squared: f64) -> Vec<(f64, f64)> {
    let floor = 0.05 / max_wavenumber_squared;
    let half = 0.5 * t;
    let mut left = vec![0.0];
    let mut h = floor;
    while h < half {
        left.push(h);
        h *= 2.0;
    }
    left.push(half);
    let mut breaks = left.clone();
    for &x in left.iter().rev().skip(1) {
        breaks.push(t - x);
    }
    composite_gauss(&breaks, DUHAMEL_ORDER)
}

/// Commutator `u = phi w - w_phi` and its Duhamel parts on a time grid.
#[derive(Debug, Clone)]
pub struct CommutatorRecord {
    pub times: Vec<f64>,
    pub w: Vec<ScalarField>,
    pub w_phi: Vec<ScalarField>,
    pub u: Vec<ScalarField>,
    pub duhamel_i: Vec<ScalarField>,
    pub duhamel_j: Vec<ScalarField>,
    pub support_volume: f64,
}

impl CommutatorRecord {
    /// `max_x |u - (I + J)|` per time.
    pub fn reconstruction_errors(&self) -> Vec<f64> {
        (0..self.times.len())
            .map(|k| {
                let sum = self.duhamel_i[k].add(&self.duhamel_j[k]).expect("shared grid");
                self.u[k].max_abs_diff(&sum)
            })
            .collect()
    }

    /// `max_t t^{1/2} |u(t)|_inf` over the recorded times.
    pub fn scaled_sup(&self) -> f64 {
        self.times
            .iter()
            .zip(&self.u)
            .map(|(t, u)| t.sqrt() * u.max_abs())
            .fold(0.0, f64::max)
    }
}

pub fn cutoff_commutator(f: &ScalarField, bump: &Bump, times: &[f64]) -> Result<CommutatorRecord> {
    if times.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter(
            "commutator times must be strictly increasing".into(),
        ));
    }
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NegativeTime(t));
    }
    let phi = bump.sample(f.grid())?;
    let forcing = CutoffForcing::new(f, &phi)?;
    let mut rec = CommutatorRecord {
        times: times.to_vec(),
        w: Vec::with_capacity(times.len()),
        w_phi: Vec::with_capacity(times.len()),
        u: Vec::with_capacity(times.len()),
        duhamel_i: Vec::with_capacity(times.len()),
        duhamel_j: Vec::with_capacity(times.len()),
        support_volume: bump.support_volume(),
    };
    for &t in times {
        let (w, w_phi, u) = forcing.commutator(t);
        let (i, j) = forcing.duhamel(t)?;
        rec.w.push(w);
        rec.w_phi.push(w_phi);
        rec.u.push(u);
        rec.duhamel_i.push(i);
        rec.duhamel_j.push(j);
    }
    Ok(rec)
}

/// Classical RK4 on `u' = -|k|^2 u + F(t)`, `u(0) = 0`, in Fourier space: an
/// independent check of the Duhamel quadrature in [`CutoffForcing::duhamel`].
pub fn forced_heat_rk4(forcing: &CutoffForcing, t_end: f64, steps: usize) -> ScalarField {
    let plan = Fft3::new(forcing.grid().n());
    let g = *forcing.grid();
    let dt = t_end / steps as f64;
    let rhs = |u: &SpectralField, t: f64| {
        let (mut a, b) = forcing.forcing_spectra(t);
        a.add_scaled(&b, 1.0);
        let mut lap = u.clone();
        lap.apply_multiplier(|k| -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
        a.add_scaled(&lap, 1.0);
        a
    };
    let mut u = SpectralField::zeros(g);
    for step in 0..steps {
        let t = step as f64 * dt;
        let k1 = rhs(&u, t);
        let mut y = u.clone();
        y.add_scaled(&k1, 0.5 * dt);
        let k2 = rhs(&y, t + 0.5 * dt);
        let mut y = u.clone();
        y.add_scaled(&k2, 0.5 * dt);
        let k3 = rhs(&y, t + 0.5 * dt);
        let mut y = u.clone();
        y.add_scaled(&k3, dt);
        let k4 = rhs(&y, t + dt);
        u.add_scaled(&k1, dt / 6.0);
        u.add_scaled(&k2, dt / 3.0);
        u.add_scaled(&k3, dt / 3.0);
        u.add_scaled(&k4, dt / 6.0);
    }
    u.inverse_with(&plan)
}

/// `|f phi| / |f|` over every `(f, phi)` pair. The zero mode is always
/// removed: a cut-off field has a mean, which on the torus is only a
/// periodization artifact of a decaying field.
pub fn verify_cutoff_lemma<F: Field>(
    fields: &[F],
    bumps: &[Bump],
    opts: &BesovOptions,
    cap: f64,
) -> Result<CheckReport> {
    if fields.is_empty() || bumps.is_empty() {
        return Err(Error::InvalidParameter("cutoff families must be nonempty".into()));
    }
    let opts = opts.with_mean(MeanPolicy::Remove);
    let mut cases = Vec::with_capacity(fields.len() * bumps.len());
    for (fi, f) in fields.iter().enumerate() {
        let base = besov_norm(f, &opts)?.norm_value;
        let digest = field_digest(f);
        for (bi, bump) in bumps.iter().enumerate() {
            let phi = bump.sample(f.grid())?;
            let cut = besov_norm(&apply_cutoff(f, &phi)?, &opts)?.norm_value;
            cases.push(
                CheckCase::new(
                    format!("field={fi} bump={bi} support={:.4}", bump.support_volume()),
                    cut,
                    base,
                )
                .with_digest(digest.clone()),
            );
        }
    }
    Ok(CheckReport::new("lemma22", cap, cases))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(g: Grid, c: f64) -> ScalarField {
        ScalarField::from_fn(g, |x| {
            (-((x[0] - c).powi(2) + (x[1] - c).powi(2) + (x[2] - c).powi(2))).exp()
        })
    }

    #[test]
    fn c0_is_two_pi() {
        assert!((appendix_constant_c0() - 2.0 * PI).abs() < 1e-6);
        assert!((appendix_constant_c0_truncated(8.0) - appendix_constant_c0()).abs() < 1e-10);
        assert_eq!(appendix_constant_c0_truncated(0.0), 0.0);
    }

    #[test]
    fn bump_profile() {
        let b = Bump::new([0.0; 3], 1.0, 2.0).unwrap();
        assert_eq!(b.profile(0.5), 1.0);
        assert_eq!(b.profile(2.0), 0.0);
        assert!((b.profile(1.5) - 0.5).abs() < 1e-15);
        let g = Grid::new(16, 4.0).unwrap();
        assert!(matches!(b.sample(&g), Err(Error::SupportTooLarge { .. })));
        assert!(Bump::new([0.0; 3], 2.0, 1.0).is_err());
    }

    #[test]
    fn nodes_integrate_exactly() {
        let nodes = duhamel_nodes(0.7, 100.0);
        let total: f64 = nodes.iter().map(|p| p.1).sum();
        assert!((total - 0.7).abs() < 1e-14);
        let exp: f64 = nodes.iter().map(|(s, w)| w * (-50.0 * (0.7 - s)).exp()).sum();
        assert!((exp - (1.0 - (-35.0f64).exp()) / 50.0).abs() < 1e-13);
    }

    #[test]
    fn plateau_commutator_vanishes_at_small_times() {
        let g = Grid::new(64, 24.0).unwrap();
        let f = gaussian(g, 12.0);
        let bump = Bump::new([12.0; 3], 4.5, 9.0).unwrap();
        let forcing = CutoffForcing::new(&f, &bump.sample(&g).unwrap()).unwrap();
        for t in [1e-4, 1e-3] {
            let u = forcing.commutator(t).2;
            assert!(u.max_abs() <= 1e-6, "{}", u.max_abs());
        }
    }

    #[test]
    fn duhamel_matches_time_stepping_and_commutator() {
        let g = Grid::new(32, 12.0).unwrap();
        let f = gaussian(g, 6.0);
        let bump = Bump::standard([6.5, 6.0, 5.5], 2.5).unwrap();
        let t = 0.1;
        let rec = cutoff_commutator(&f, &bump, &[t]).unwrap();
        let forcing = CutoffForcing::new(&f, &bump.sample(&g).unwrap()).unwrap();
        let sum = rec.duhamel_i[0].add(&rec.duhamel_j[0]).unwrap();
        let oracle = forced_heat_rk4(&forcing, t, 100);
        let err = sum.max_abs_diff(&oracle);
        assert!(err <= 1e-6 * (f.max_abs() + 1.0), "oracle {err}");
        let recon = rec.reconstruction_errors()[0];
        assert!(recon <= 1e-6 * (f.max_abs() + 1.0), "commutator {recon}");
    }
}
