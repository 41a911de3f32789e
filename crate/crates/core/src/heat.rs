//! Heat semigroup `S(t)` and the homogeneous norm
//! `|f| = sup_{t>0} t^{1/2} |S(t) f|_inf`.
//!
//! The supremum over `t > 0` is replaced by a maximum over a geometric time
//! grid between `dx^2/4` (below which the semigroup is unresolved) and
//! `(L/4)^2` (above which periodic images dominate), refined around the
//! coarse maximizer by golden-section search in `log t`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{Field, Grid};
use crate::spectral::SpectralField;

pub fn heat_evolve<F: Field>(f: &F, t: f64) -> Result<F> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let plan = Fft3::new(f.grid().n());
    Ok(f.map_each(|c| {
        let mut s = SpectralField::forward_with(&plan, c);
        apply_heat(&mut s, t);
        s.inverse_with(&plan)
    }))
}

/// Multiplies by `exp(-t |k|^2)`.
pub fn apply_heat(s: &mut SpectralField, t: f64) {
    let f = axis_heat_factors(s.grid(), t);
    let n = f.len();
    for (row, chunk) in s.coefficients_mut().chunks_mut(n).enumerate() {
        let fjk = f[row % n] * f[row / n];
        for (c, fi) in chunk.iter_mut().zip(&f) {
            *c *= fjk * fi;
        }
    }
}

/// `exp(-t k^2)` along one axis; the 3-d factor is the product over axes.
fn axis_heat_factors(grid: &Grid, t: f64) -> Vec<f64> {
    (0..grid.n())
        .map(|i| {
            let k = grid.wavenumber(i);
            (-t * k * k).exp()
        })
        .collect()
}

/// How a non-zero mean is treated by [`besov_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPolicy {
    /// Reject means above [`MEAN_TOLERANCE`] times `max|f|`; smaller means
    /// (periodization residue of decaying fields) are removed.
    Strict,
    /// Always remove the zero mode.
    Remove,
}

pub const MEAN_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
    pub mean: MeanPolicy,
    /// Golden-section refinement around the grid maximizer.
    pub refine: bool,
}

impl BesovOptions {
    pub fn for_grid(grid: &Grid) -> Self {
        let h = grid.spacing();
        let quarter = grid.box_length() / 4.0;
        BesovOptions {
            t_min: h * h / 4.0,
            t_max: quarter * quarter,
            points_per_decade: 8,
            mean: MeanPolicy::Strict,
            refine: true,
        }
    }

    pub fn with_points_per_decade(mut self, p: usize) -> Self {
        self.points_per_decade = p;
        self
    }

    pub fn with_mean(mut self, mean: MeanPolicy) -> Self {
        self.mean = mean;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovEstimate {
    pub norm_value: f64,
    pub argmax_t: f64,
    pub t_grid: Vec<f64>,
    pub profile: Vec<f64>,
}

/// `points_per_decade` geometric points per factor of ten, endpoints included.
pub fn geometric_time_grid(t_min: f64, t_max: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
        return Err(Error::InvalidTimeRange { t_min, t_max });
    }
    if points_per_decade == 0 {
        return Err(Error::InvalidParameter("points_per_decade must be positive".into()));
    }
    let decades = (t_max / t_min).log10();
    let steps = ((decades * points_per_decade as f64).ceil() as usize).max(1);
    let ratio = (t_max / t_min).ln() / steps as f64;
    let mut grid: Vec<f64> = (0..=steps).map(|k| t_min * (ratio * k as f64).exp()).collect();
    grid[steps] = t_max;
    Ok(grid)
}

/// Spectra of a field with its mean handled, ready for repeated
/// `sup_x |S(t) f|` evaluations.
pub struct HeatProfile {
    plan: Fft3,
    spectra: Vec<SpectralField>,
}

impl HeatProfile {
    pub fn new<F: Field>(f: &F, mean: MeanPolicy) -> Result<Self> {
        let plan = Fft3::new(f.grid().n());
        let scale = f.max_magnitude();
        let mut spectra = Vec::new();
        for c in f.component_slice() {
            let mut s = SpectralField::forward_with(&plan, c);
            let m = s.mean();
            if mean == MeanPolicy::Strict && m.abs() > MEAN_TOLERANCE * scale {
                return Err(Error::NonZeroMean { mean: m });
            }
            s.coefficients_mut()[0] = Complex64::new(0.0, 0.0);
            spectra.push(s);
        }
        Ok(HeatProfile { plan, spectra })
    }

    /// `sup_x |S(t) f|` with the Euclidean magnitude for vector fields.
    pub fn sup_norm_at(&self, t: f64) -> f64 {
        let grid = *self.spectra[0].grid();
        let f = axis_heat_factors(&grid, t);
        let n = f.len();
        let mut sq = vec![0.0f64; grid.len()];
        let mut buf: Vec<Complex64> = Vec::with_capacity(grid.len());
        // Two real components share one complex transform as re + i im.
        for pair in self.spectra.chunks(2) {
            buf.clear();
            let a = pair[0].coefficients();
            let b = pair.get(1).map(|s| s.coefficients());
            for (row, chunk) in a.chunks(n).enumerate() {
                let fjk = f[row % n] * f[row / n];
                for (i, ca) in chunk.iter().enumerate() {
                    let m = fjk * f[i];
                    let idx = row * n + i;
                    let z = match b {
                        Some(b) => {
                            let cb = b[idx];
                            Complex64::new(ca.re - cb.im, ca.im + cb.re)
                        }
                        None => *ca,
                    };
                    buf.push(z * m);
                }
            }
            self.plan.inverse(&mut buf);
            for (s, z) in sq.iter_mut().zip(&buf) {
                *s += z.re * z.re + if b.is_some() { z.im * z.im } else { 0.0 };
            }
        }
        sq.iter().fold(0.0f64, |m, &v| m.max(v)).sqrt()
    }

    pub fn scaled_at(&self, t: f64) -> f64 {
        t.sqrt() * self.sup_norm_at(t)
    }
}

pub fn besov_norm<F: Field>(f: &F, opts: &BesovOptions) -> Result<BesovEstimate> {
    let profile = HeatProfile::new(f, opts.mean)?;
    let t_grid = geometric_time_grid(opts.t_min, opts.t_max, opts.points_per_decade)?;
    let values: Vec<f64> = t_grid.iter().map(|&t| profile.scaled_at(t)).collect();
    let mut points: Vec<(f64, f64)> = t_grid.into_iter().zip(values).collect();

    let best = argmax(&points);
    if opts.refine && best > 0 && best + 1 < points.len() && points[best].1 > 0.0 {
        let lo = points[best - 1].0.ln();
        let hi = points[best + 1].0.ln();
        let extra = golden_section(|s| profile.scaled_at(s.exp()), lo, hi, 18);
        for (s, v) in extra {
            points.push((s.exp(), v));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|a, b| a.0 == b.0);
    }
    let best = argmax(&points);
    Ok(BesovEstimate {
        norm_value: points[best].1,
        argmax_t: points[best].0,
        t_grid: points.iter().map(|p| p.0).collect(),
        profile: points.iter().map(|p| p.1).collect(),
    })
}

fn argmax(points: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.1 > points[best].1 {
            best = i;
        }
    }
    best
}

/// Golden-section maximization; returns every evaluated point.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> Vec<(f64, f64)> {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut out = Vec::with_capacity(iters + 2);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    out.push((c, fc));
    out.push((d, fd));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            out.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            out.push((d, fd));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ScalarField, VectorField};
    use core::f64::consts::PI;

    fn gaussian(g: Grid, width: f64, amp: f64) -> ScalarField {
        let c = g.box_length() / 2.0;
        ScalarField::from_fn(g, |x| {
            let r2 = (x[0] - c).powi(2) + (x[1] - c).powi(2) + (x[2] - c).powi(2);
            amp * (-r2 / (width * width)).exp()
        })
    }

    #[test]
    fn gaussian_heat_evolution_closed_form() {
        let g = Grid::new(64, 12.0).unwrap();
        let f = gaussian(g, 1.0, 1.0);
        let t = 0.3;
        let out = heat_evolve(&f, t).unwrap();
        let s = 1.0 + 4.0 * t;
        // Periodized closed form: sum over the nearest images.
        let exact = ScalarField::from_fn(g, |x| {
            let mut acc = 0.0;
            for a in -1..=1 {
                for b in -1..=1 {
                    for c in -1..=1 {
                        let d = [a as f64 * 12.0, b as f64 * 12.0, c as f64 * 12.0];
                        let r2 =
                            (x[0] - 6.0 + d[0]).powi(2) + (x[1] - 6.0 + d[1]).powi(2) + (x[2] - 6.0 + d[2]).powi(2);
                        acc += (-r2 / s).exp();
                    }
                }
            }
            s.powf(-1.5) * acc
        });
        assert!(out.max_abs_diff(&exact) < 1e-8);
    }

    #[test]
    fn zero_time_is_identity_and_negative_time_fails() {
        let g = Grid::new(8, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        assert_eq!(heat_evolve(&f, 0.0).unwrap(), f);
        assert_eq!(heat_evolve(&f, -1.0), Err(Error::NegativeTime(-1.0)));
    }

    #[test]
    fn semigroup_and_mean() {
        let g = Grid::new(16, 5.0).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 1.2566).sin() + 0.3 + (x[1] * 2.513).cos() * x[2].sin());
        let a = heat_evolve(&heat_evolve(&f, 0.02).unwrap(), 0.05).unwrap();
        let b = heat_evolve(&f, 0.07).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12 * f.max_abs());
        assert!((b.mean() - f.mean()).abs() < 1e-13);
    }

    #[test]
    fn time_grid_is_geometric() {
        let grid = geometric_time_grid(0.01, 10.0, 8).unwrap();
        assert_eq!(grid.len(), 25);
        assert_eq!(grid[0], 0.01);
        assert_eq!(grid[24], 10.0);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        assert!(geometric_time_grid(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn unit_gaussian_norm() {
        let g = Grid::new(64, 12.0).unwrap();
        let est = besov_norm(&gaussian(g, 1.0, 1.0), &BesovOptions::for_grid(&g)).unwrap();
        let exact = (0.125f64).sqrt() * 1.5f64.powf(-1.5);
        assert!((est.norm_value / exact - 1.0).abs() < 0.01, "{}", est.norm_value);
        assert!((est.argmax_t / 0.125 - 1.0).abs() < 0.1, "{}", est.argmax_t);
        let max = est.profile.iter().copied().fold(0.0, f64::max);
        assert_eq!(max, est.norm_value);
        assert!(est.t_grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn single_mode_norm() {
        let l = 8.0;
        let g = Grid::new(32, l).unwrap();
        for m in [1.0, 2.0, 3.0] {
            let kappa = 2.0 * PI * m / l;
            let f = ScalarField::from_fn(g, |x| (kappa * x[0]).sin());
            let est = besov_norm(&f, &BesovOptions::for_grid(&g)).unwrap();
            let exact = 1.0 / (2.0 * core::f64::consts::E * kappa * kappa).sqrt();
            assert!((est.norm_value / exact - 1.0).abs() < 0.01, "m = {m}");
        }
    }

    #[test]
    fn mean_policy() {
        let g = Grid::new(16, 4.0).unwrap();
        let f = ScalarField::from_fn(g, |x| 1.0 + (x[0] * PI / 2.0).sin());
        let opts = BesovOptions::for_grid(&g);
        assert!(matches!(besov_norm(&f, &opts), Err(Error::NonZeroMean { .. })));
        let est = besov_norm(&f, &opts.with_mean(MeanPolicy::Remove)).unwrap();
        let plain = ScalarField::from_fn(g, |x| (x[0] * PI / 2.0).sin());
        let reference = besov_norm(&plain, &opts).unwrap();
        assert!((est.norm_value - reference.norm_value).abs() < 1e-12);
        assert_eq!(besov_norm(&ScalarField::zeros(g), &opts).unwrap().norm_value, 0.0);
    }

    #[test]
    fn vector_norm_uses_euclidean_magnitude() {
        let l = 2.0 * PI;
        let g = Grid::new(16, l).unwrap();
        let v = VectorField::from_fn(g, |x| [x[1].sin(), x[2].sin(), 0.0]);
        let s = ScalarField::from_fn(g, |x| x[1].sin());
        let opts = BesovOptions::for_grid(&g);
        let nv = besov_norm(&v, &opts).unwrap().norm_value;
        let ns = besov_norm(&s, &opts).unwrap().norm_value;
        assert!((nv / ns - 2f64.sqrt()).abs() < 1e-9);
    }
}
