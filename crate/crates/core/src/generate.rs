//! Deterministic synthetic fields: the divergence-free families used by the
//! checks, plus two scalar profiles.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{Field, Grid, ScalarField, VectorField};
use crate::spectral::{curl_spectral, project_spectral, vector_forward, vector_inverse, SpectralField};

/// Samples at distance `>= L/4` from the center of a localized field must be
/// below this fraction of its maximum.
pub const DECAY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    TaylorGreen,
    GaussianVortex,
    Abc,
    RandomSolenoidal,
    SingleMode,
    /// Scalar indicator of a ball.
    Plateau,
    /// Scalar `exp(-|x - c|^2 / l^2)`.
    Gaussian,
}

impl FieldKind {
    pub const ALL: [FieldKind; 7] = [
        FieldKind::TaylorGreen,
        FieldKind::GaussianVortex,
        FieldKind::Abc,
        FieldKind::RandomSolenoidal,
        FieldKind::SingleMode,
        FieldKind::Plateau,
        FieldKind::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::TaylorGreen => "taylor_green",
            FieldKind::GaussianVortex => "gaussian_vortex",
            FieldKind::Abc => "abc",
            FieldKind::RandomSolenoidal => "random_solenoidal",
            FieldKind::SingleMode => "single_mode",
            FieldKind::Plateau => "plateau",
            FieldKind::Gaussian => "gaussian",
        }
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, FieldKind::Plateau | FieldKind::Gaussian)
    }

    fn is_localized(self) -> bool {
        matches!(self, FieldKind::GaussianVortex | FieldKind::Gaussian)
    }
}

/// Accepts `taylor_green` and `taylor-green` spellings.
impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        FieldKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown field kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub amplitude: f64,
    /// Width of localized kinds, filter scale of random kinds, and the
    /// wavelength `L / m` of the periodic kinds with mode number `m`.
    /// Defaults to 1 for localized and random kinds and `L` otherwise.
    pub length_scale: Option<f64>,
    pub seed: u64,
    pub n: usize,
    pub box_length: f64,
    /// Defaults to the box center.
    pub center: Option<[f64; 3]>,
}

impl FieldSpec {
    pub fn new(kind: FieldKind, n: usize, box_length: f64) -> Self {
        FieldSpec {
            kind,
            amplitude: 1.0,
            length_scale: None,
            seed: 0,
            n,
            box_length,
            center: None,
        }
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude = a;
        self
    }

    pub fn with_length_scale(mut self, l: f64) -> Self {
        self.length_scale = Some(l);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_center(mut self, c: [f64; 3]) -> Self {
        self.center = Some(c);
        self
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.box_length)
    }

    pub fn resolved_length_scale(&self) -> f64 {
        self.length_scale.unwrap_or(match self.kind {
            FieldKind::TaylorGreen | FieldKind::Abc | FieldKind::SingleMode => self.box_length,
            _ => 1.0,
        })
    }

    pub fn resolved_center(&self) -> [f64; 3] {
        self.center.unwrap_or([0.5 * self.box_length; 3])
    }

    /// Wavenumber `2 pi m / L` of the periodic kinds.
    fn wavenumber(&self) -> f64 {
        let m = (self.box_length / self.resolved_length_scale()).round().max(1.0);
        2.0 * PI * m / self.box_length
    }
}

#[derive(Debug, Clone)]
pub enum GeneratedField {
    Scalar(ScalarField),
    Vector(VectorField),
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub field: GeneratedField,
    /// Non-fatal diagnostics, such as a localized field that has not decayed
    /// by `L/4`.
    pub warnings: Vec<String>,
}

/// Builds the field described by `spec`, scalar or vector by kind.
pub fn generate_any(spec: &FieldSpec) -> Result<Generated> {
    let grid = spec.grid()?;
    let l = spec.resolved_length_scale();
    if !(l.is_finite() && l >= 4.0 * grid.spacing()) {
        return Err(Error::Unresolvable(format!(
            "length scale {l} is below 4 dx = {}",
            4.0 * grid.spacing()
        )));
    }
    if !spec.amplitude.is_finite() {
        return Err(Error::NonFinite);
    }
    let field = match spec.kind {
        FieldKind::Plateau => GeneratedField::Scalar(plateau(grid, spec)),
        FieldKind::Gaussian => GeneratedField::Scalar(gaussian(grid, spec)),
        FieldKind::TaylorGreen => GeneratedField::Vector(taylor_green(grid, spec)),
        FieldKind::Abc => GeneratedField::Vector(abc(grid, spec)),
        FieldKind::SingleMode => GeneratedField::Vector(single_mode(grid, spec)),
        FieldKind::GaussianVortex => GeneratedField::Vector(gaussian_vortex(grid, spec)),
        FieldKind::RandomSolenoidal => GeneratedField::Vector(random_solenoidal(grid, spec)),
    };
    let mut warnings = Vec::new();
    if spec.kind.is_localized() {
        let tail = match &field {
            GeneratedField::Scalar(f) => tail_fraction(f, spec.resolved_center()),
            GeneratedField::Vector(v) => tail_fraction(v, spec.resolved_center()),
        };
        if tail > DECAY_TOLERANCE {
            warnings.push(format!(
                "{} field is {tail:.3e} of its maximum at distance L/4 from its center; periodic images are not negligible",
                spec.kind.name()
            ));
        }
    }
    Ok(Generated { field, warnings })
}

/// Vector kinds only.
pub fn generate(spec: &FieldSpec) -> Result<VectorField> {
    match generate_any(spec)?.field {
        GeneratedField::Vector(v) => Ok(v),
        GeneratedField::Scalar(_) => Err(Error::InvalidParameter(format!(
            "{} is a scalar kind",
            spec.kind.name()
        ))),
    }
}

/// Scalar kinds only.
pub fn generate_scalar(spec: &FieldSpec) -> Result<ScalarField> {
    match generate_any(spec)?.field {
        GeneratedField::Scalar(f) => Ok(f),
        GeneratedField::Vector(_) => Err(Error::InvalidParameter(format!(
            "{} is a vector kind",
            spec.kind.name()
        ))),
    }
}

/// Largest magnitude at distance `>= L/4` from `center`, relative to the maximum.
pub fn tail_fraction<F: Field>(f: &F, center: [f64; 3]) -> f64 {
    let g = f.grid();
    let max = f.max_magnitude();
    if max == 0.0 {
        return 0.0;
    }
    let quarter = 0.25 * g.box_length();
    (0..g.len())
        .filter(|&i| g.periodic_distance(g.position(i), center) >= quarter)
        .map(|i| f.magnitude_at(i))
        .fold(0.0, f64::max)
        / max
}

fn squared_distance(g: &Grid, x: [f64; 3], c: [f64; 3]) -> f64 {
    let d = g.periodic_distance(x, c);
    d * d
}

fn plateau(g: Grid, spec: &FieldSpec) -> ScalarField {
    let (c, r, a) = (spec.resolved_center(), spec.resolved_length_scale(), spec.amplitude);
    ScalarField::from_fn(g, |x| if squared_distance(&g, x, c) <= r * r { a } else { 0.0 })
}

fn gaussian(g: Grid, spec: &FieldSpec) -> ScalarField {
    let (c, l, a) = (spec.resolved_center(), spec.resolved_length_scale(), spec.amplitude);
    ScalarField::from_fn(g, |x| a * (-squared_distance(&g, x, c) / (l * l)).exp())
}

fn taylor_green(g: Grid, spec: &FieldSpec) -> VectorField {
    let (k, a) = (spec.wavenumber(), spec.amplitude);
    VectorField::from_fn(g, |x| {
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        let cz = (k * x[2]).cos();
        [a * sx * cy * cz, -a * cx * sy * cz, 0.0]
    })
}

fn abc(g: Grid, spec: &FieldSpec) -> VectorField {
    let (k, a) = (spec.wavenumber(), spec.amplitude);
    VectorField::from_fn(g, |x| {
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        let (sz, cz) = (k * x[2]).sin_cos();
        [a * (sz + cy), a * (sx + cz), a * (sy + cx)]
    })
}

fn single_mode(g: Grid, spec: &FieldSpec) -> VectorField {
    let (k, a) = (spec.wavenumber(), spec.amplitude);
    VectorField::from_fn(g, |x| [a * (k * x[1]).sin(), 0.0, 0.0])
}

/// `curl(psi e_z)` with `psi = a l exp(-|x - c|^2 / l^2)`, differentiated
/// spectrally so the result is discretely divergence-free.
fn gaussian_vortex(g: Grid, spec: &FieldSpec) -> VectorField {
    let (c, l, a) = (spec.resolved_center(), spec.resolved_length_scale(), spec.amplitude);
    let psi = ScalarField::from_fn(g, |x| a * l * (-squared_distance(&g, x, c) / (l * l)).exp());
    let plan = Fft3::new(g.n());
    let s = [
        SpectralField::zeros(g),
        SpectralField::zeros(g),
        SpectralField::forward_with(&plan, &psi),
    ];
    vector_inverse(&plan, &curl_spectral(&s))
}

/// White noise filtered by `exp(-|k|^2 l^2 / 4)`, Leray-projected, mean
/// removed and scaled to `max |v| = amplitude`.
fn random_solenoidal(g: Grid, spec: &FieldSpec) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noise = || {
        let vals: Vec<f64> = (0..g.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        ScalarField::new(g, vals).expect("finite noise")
    };
    let v = VectorField::new(noise(), noise(), noise()).expect("shared grid");
    let plan = Fft3::new(g.n());
    let mut s = vector_forward(&plan, &v);
    let l = spec.resolved_length_scale();
    for c in s.iter_mut() {
        c.apply_multiplier(|k| (-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * l * l / 4.0).exp());
        c.coefficients_mut()[0] = num_complex::Complex64::new(0.0, 0.0);
    }
    project_spectral(&mut s);
    let v = vector_inverse(&plan, &s);
    let max = v.max_magnitude();
    if max > 0.0 {
        v.scaled(spec.amplitude / max)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_gauss;
    use crate::spectral::max_divergence;

    #[test]
    fn taylor_green_closed_form() {
        let v = generate(&FieldSpec::new(FieldKind::TaylorGreen, 32, 2.0 * PI)).unwrap();
        assert!(max_divergence(&v) <= 1e-12);
        assert!((v.max_magnitude() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn random_is_deterministic_and_solenoidal() {
        let spec = FieldSpec::new(FieldKind::RandomSolenoidal, 32, 8.0).with_seed(7);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert!(max_divergence(&a) <= 1e-10);
        assert!(a.component(0).mean().abs() < 1e-14);
        assert!((a.max_magnitude() - 1.0).abs() < 1e-12);
        let c = generate(&spec.clone().with_seed(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn vortex_energy_matches_radial_integral() {
        let (amp, l) = (0.7, 1.0);
        let spec = FieldSpec::new(FieldKind::GaussianVortex, 64, 16.0)
            .with_amplitude(amp)
            .with_length_scale(l);
        let v = generate(&spec).unwrap();
        assert!(max_divergence(&v) <= 1e-10);
        let energy = 0.5 * v.components().iter().map(|c| c.map(|x| x * x).integral()).sum::<f64>();
        // |v|^2 = |grad_h psi|^2 = (4 rho^2 / l^4) psi^2; average rho^2 = 2 r^2 / 3
        // over spheres, then integrate radially.
        let density = |r: f64| {
            let psi = amp * l * (-r * r / (l * l)).exp();
            4.0 * PI * r * r * 0.5 * 4.0 * (2.0 * r * r / 3.0) / l.powi(4) * psi * psi
        };
        let breaks: Vec<f64> = (0..=40).map(|i| 0.2 * i as f64).collect();
        let oracle = integrate_gauss(density, &breaks, 8);
        assert!((energy / oracle - 1.0).abs() < 0.01, "{energy} vs {oracle}");
    }

    #[test]
    fn scalar_kinds_and_errors() {
        let spec = FieldSpec::new(FieldKind::Plateau, 16, 8.0).with_length_scale(2.0);
        let p = generate_scalar(&spec).unwrap();
        assert_eq!(p.max_abs(), 1.0);
        assert!(generate(&spec).is_err());
        assert!(generate_scalar(&FieldSpec::new(FieldKind::Abc, 16, 8.0)).is_err());
        let coarse = FieldSpec::new(FieldKind::Gaussian, 16, 8.0).with_length_scale(1.0);
        assert!(matches!(generate_any(&coarse), Err(Error::Unresolvable(_))));
        let wide = FieldSpec::new(FieldKind::Gaussian, 16, 8.0).with_length_scale(2.0);
        assert_eq!(generate_any(&wide).unwrap().warnings.len(), 1);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in FieldKind::ALL {
            assert_eq!(k.name().parse::<FieldKind>().unwrap(), k);
        }
        assert_eq!("taylor-green".parse::<FieldKind>().unwrap(), FieldKind::TaylorGreen);
        assert!("vortex".parse::<FieldKind>().is_err());
    }

    #[test]
    fn periodic_kinds_are_solenoidal() {
        for kind in [FieldKind::Abc, FieldKind::SingleMode] {
            let v = generate(&FieldSpec::new(kind, 16, 2.0 * PI).with_amplitude(2.0)).unwrap();
            assert!(max_divergence(&v) <= 1e-12, "{kind:?}");
        }
    }
}
