//! Fourier-space calculus on periodic grids: derivatives, Leray projection,
//! pressure recovery and spectral dilation.
//!
//! First derivatives use [`Grid::derivative_wavenumber`] (Nyquist plane
//! zeroed) so `divergence(gradient(f)) == laplacian(f)` holds mode by mode.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::{conjugate_index, Fft3};
use crate::grid::{Field, Grid, ScalarField, VectorField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative bound on `max |div v|` (against `max|v| / dx`) below which a
/// velocity counts as divergence-free.
pub const SOLENOIDAL_TOLERANCE: f64 = 1e-8;

/// Fourier coefficients of a real field with exact Hermitian symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn forward(f: &ScalarField) -> Self {
        let plan = Fft3::new(f.grid().n());
        Self::forward_with(&plan, f)
    }

    pub fn forward_with(plan: &Fft3, f: &ScalarField) -> Self {
        let mut coeffs: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan.forward(&mut coeffs);
        let mut s = SpectralField {
            grid: *f.grid(),
            coeffs,
        };
        s.symmetrize();
        s
    }

    /// Transforms two real fields with one complex FFT.
    pub fn forward_pair(plan: &Fft3, a: &ScalarField, b: &ScalarField) -> (Self, Self) {
        let (ca, cb) = plan.forward_real_pair(a.values(), b.values());
        (
            SpectralField {
                grid: *a.grid(),
                coeffs: ca,
            },
            SpectralField {
                grid: *b.grid(),
                coeffs: cb,
            },
        )
    }

    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coefficients(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        let mut s = SpectralField { grid, coeffs };
        s.symmetrize();
        Ok(s)
    }

    pub fn inverse(&self) -> ScalarField {
        let plan = Fft3::new(self.grid.n());
        self.inverse_with(&plan)
    }

    pub fn inverse_with(&self, plan: &Fft3) -> ScalarField {
        let mut data = self.coeffs.clone();
        plan.inverse(&mut data);
        ScalarField::from_raw(self.grid, data.iter().map(|c| c.re).collect())
    }

    pub fn inverse_pair(plan: &Fft3, a: &SpectralField, b: &SpectralField) -> (ScalarField, ScalarField) {
        let (ra, rb) = plan.inverse_real_pair(&a.coeffs, &b.coeffs);
        (ScalarField::from_raw(a.grid, ra), ScalarField::from_raw(b.grid, rb))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mutable access; callers must keep the multiplier real-symmetric or call
    /// [`SpectralField::symmetrize`] afterwards.
    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Forces `c(-k) = conj(c(k))` exactly.
    pub fn symmetrize(&mut self) {
        let n = self.grid.n();
        for idx in 0..self.coeffs.len() {
            let p = conjugate_index(idx, n);
            if p == idx {
                self.coeffs[idx].im = 0.0;
            } else if p > idx {
                let avg = (self.coeffs[idx] + self.coeffs[p].conj()) * 0.5;
                self.coeffs[idx] = avg;
                self.coeffs[p] = avg.conj();
            }
        }
    }

    pub fn is_hermitian(&self) -> bool {
        let n = self.grid.n();
        (0..self.coeffs.len()).all(|idx| self.coeffs[conjugate_index(idx, n)] == self.coeffs[idx].conj())
    }

    /// Multiplies every coefficient by `m(k)` where `k` is the wavevector of the mode.
    pub fn apply_multiplier(&mut self, m: impl Fn([f64; 3]) -> f64) {
        let g = self.grid;
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            let [i, j, k] = g.unravel(idx);
            *c *= m([g.wavenumber(i), g.wavenumber(j), g.wavenumber(k)]);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in self.coeffs.iter_mut() {
            *c *= alpha;
        }
    }

    pub fn add_scaled(&mut self, other: &SpectralField, alpha: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re / self.grid.len() as f64
    }

    /// Zeroes every mode on a Nyquist plane, leaving `|m_i| < n/2`.
    pub fn drop_nyquist(&mut self) {
        let g = self.grid;
        let h = g.n() / 2;
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            if g.unravel(idx).contains(&h) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Moves the modes `|m_i| < min(n, n') / 2` to a grid of the same box
    /// with `n'` samples: trigonometric interpolation when refining, spectral
    /// truncation when coarsening. Nyquist planes are dropped.
    pub fn resample(&self, target: &Grid) -> Result<SpectralField> {
        let g = self.grid;
        if target.box_length() != g.box_length() {
            return Err(Error::GridMismatch);
        }
        let (small, large) = if target.n() >= g.n() {
            (g, *target)
        } else {
            (*target, g)
        };
        let h = small.n() / 2;
        let scale = target.len() as f64 / g.len() as f64;
        let mut out = SpectralField::zeros(*target);
        for idx in 0..small.len() {
            let [i, j, k] = small.unravel(idx);
            if i == h || j == h || k == h {
                continue;
            }
            let big = large.index(
                large.mode_index(small.mode(i)),
                large.mode_index(small.mode(j)),
                large.mode_index(small.mode(k)),
            );
            let (src, dst) = if target.n() >= g.n() { (idx, big) } else { (big, idx) };
            out.coeffs[dst] = self.coeffs[src] * scale;
        }
        Ok(out)
    }

    pub(crate) fn derivative(&self, axis: usize) -> SpectralField {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let k = g.derivative_wavenumber(g.unravel(idx)[axis]);
                I * k * c
            })
            .collect();
        SpectralField { grid: g, coeffs }
    }
}

fn derivative_wavevector(g: &Grid, idx: usize) -> [f64; 3] {
    let [i, j, k] = g.unravel(idx);
    [
        g.derivative_wavenumber(i),
        g.derivative_wavenumber(j),
        g.derivative_wavenumber(k),
    ]
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let plan = Fft3::new(f.grid().n());
    let s = SpectralField::forward_with(&plan, f);
    let dx = s.derivative(0);
    let dy = s.derivative(1);
    let dz = s.derivative(2);
    let (gx, gy) = SpectralField::inverse_pair(&plan, &dx, &dy);
    let gz = dz.inverse_with(&plan);
    VectorField::new(gx, gy, gz).expect("components share a grid")
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let plan = Fft3::new(v.grid().n());
    let (sx, sy) = SpectralField::forward_pair(&plan, v.component(0), v.component(1));
    let sz = SpectralField::forward_with(&plan, v.component(2));
    let mut out = sx.derivative(0);
    out.add_scaled(&sy.derivative(1), 1.0);
    out.add_scaled(&sz.derivative(2), 1.0);
    out.inverse_with(&plan)
}

/// Spectral Laplacian built from the first-derivative wavenumbers.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let plan = Fft3::new(f.grid().n());
    let mut s = SpectralField::forward_with(&plan, f);
    laplacian_in_place(&mut s);
    s.inverse_with(&plan)
}

pub(crate) fn laplacian_in_place(s: &mut SpectralField) {
    let g = s.grid;
    for (idx, c) in s.coeffs.iter_mut().enumerate() {
        let k = derivative_wavevector(&g, idx);
        *c *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    }
}

pub fn curl(v: &VectorField) -> VectorField {
    let plan = Fft3::new(v.grid().n());
    let s = vector_forward(&plan, v);
    let c = curl_spectral(&s);
    vector_inverse(&plan, &c)
}

pub(crate) fn vector_forward(plan: &Fft3, v: &VectorField) -> [SpectralField; 3] {
    let (sx, sy) = SpectralField::forward_pair(plan, v.component(0), v.component(1));
    let sz = SpectralField::forward_with(plan, v.component(2));
    [sx, sy, sz]
}

pub(crate) fn vector_inverse(plan: &Fft3, s: &[SpectralField; 3]) -> VectorField {
    let (x, y) = SpectralField::inverse_pair(plan, &s[0], &s[1]);
    let z = s[2].inverse_with(plan);
    VectorField::new(x, y, z).expect("components share a grid")
}

pub(crate) fn curl_spectral(s: &[SpectralField; 3]) -> [SpectralField; 3] {
    let g = s[0].grid;
    let mut out = [
        SpectralField::zeros(g),
        SpectralField::zeros(g),
        SpectralField::zeros(g),
    ];
    for idx in 0..g.len() {
        let k = derivative_wavevector(&g, idx);
        let (a, b, c) = (s[0].coeffs[idx], s[1].coeffs[idx], s[2].coeffs[idx]);
        out[0].coeffs[idx] = I * (k[1] * c - k[2] * b);
        out[1].coeffs[idx] = I * (k[2] * a - k[0] * c);
        out[2].coeffs[idx] = I * (k[0] * b - k[1] * a);
    }
    out
}

/// Removes the gradient part: `v - k (k . v) / |k|^2` mode by mode.
pub(crate) fn project_spectral(s: &mut [SpectralField; 3]) {
    let g = s[0].grid;
    for idx in 0..g.len() {
        let k = derivative_wavevector(&g, idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let dot = (s[0].coeffs[idx] * k[0] + s[1].coeffs[idx] * k[1] + s[2].coeffs[idx] * k[2]) / k2;
        for d in 0..3 {
            s[d].coeffs[idx] -= dot * k[d];
        }
    }
}

/// Orthogonal projection onto divergence-free fields; the mean is kept.
pub fn leray_project(v: &VectorField) -> VectorField {
    let plan = Fft3::new(v.grid().n());
    let mut s = vector_forward(&plan, v);
    project_spectral(&mut s);
    vector_inverse(&plan, &s)
}

pub fn max_divergence(v: &VectorField) -> f64 {
    divergence(v).max_abs()
}

/// Scale against which divergence is judged: `max|v| / dx`.
pub fn divergence_scale(v: &VectorField) -> f64 {
    v.max_magnitude() / v.grid().spacing()
}

/// `sum_ij d_i d_j (v_i v_j)`, the source of the pressure Poisson problem.
pub fn pressure_source(v: &VectorField) -> ScalarField {
    let plan = Fft3::new(v.grid().n());
    let s = pressure_source_spectral(&plan, v);
    s.inverse_with(&plan)
}

fn pressure_source_spectral(plan: &Fft3, v: &VectorField) -> SpectralField {
    let g = *v.grid();
    let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let products: Vec<ScalarField> = pairs
        .iter()
        .map(|&(a, b)| v.component(a).mul(v.component(b)).expect("same grid"))
        .collect();
    let mut spectra = Vec::with_capacity(6);
    for chunk in products.chunks(2) {
        let (x, y) = SpectralField::forward_pair(plan, &chunk[0], &chunk[1]);
        spectra.push(x);
        spectra.push(y);
    }
    let mut out = SpectralField::zeros(g);
    for idx in 0..g.len() {
        let k = derivative_wavevector(&g, idx);
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, &(a, b)) in pairs.iter().enumerate() {
            let weight = if a == b { 1.0 } else { 2.0 };
            acc -= spectra[p].coeffs[idx] * (weight * k[a] * k[b]);
        }
        out.coeffs[idx] = acc;
    }
    out
}

/// Solves `-lap q = d_i d_j (v_i v_j)` with zero mean.
pub fn pressure_from_velocity(v: &VectorField) -> Result<ScalarField> {
    let scale = divergence_scale(v);
    let max_div = max_divergence(v);
    if max_div > SOLENOIDAL_TOLERANCE * scale.max(1.0) {
        return Err(Error::NotSolenoidal {
            max_divergence: max_div,
        });
    }
    let plan = Fft3::new(v.grid().n());
    Ok(pressure_unchecked(&plan, v))
}

pub(crate) fn pressure_unchecked(plan: &Fft3, v: &VectorField) -> ScalarField {
    let g = *v.grid();
    let mut s = pressure_source_spectral(plan, v);
    for idx in 0..g.len() {
        let k = derivative_wavevector(&g, idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        s.coeffs[idx] = if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            s.coeffs[idx] / k2
        };
    }
    s.inverse_with(plan)
}

/// `sum_ij |d_i v_j|^2` at every sample.
pub fn gradient_norm_squared(v: &impl Field) -> ScalarField {
    let g = *v.grid();
    let plan = Fft3::new(g.n());
    let mut acc = vec![0.0; g.len()];
    for comp in v.component_slice() {
        let s = SpectralField::forward_with(&plan, comp);
        let (dx, dy) = SpectralField::inverse_pair(&plan, &s.derivative(0), &s.derivative(1));
        let dz = s.derivative(2).inverse_with(&plan);
        for (i, a) in acc.iter_mut().enumerate() {
            let (p, q, r) = (dx.values()[i], dy.values()[i], dz.values()[i]);
            *a += p * p + q * q + r * r;
        }
    }
    ScalarField::from_raw(g, acc)
}

/// Relative coefficient magnitude treated as numerically zero when checking
/// whether a dilation stays on the lattice.
const DILATION_TOLERANCE: f64 = 1e-9;

/// `out(x) = f(lambda x)` on the same periodic box.
///
/// Mode `m` moves to `lambda m`; this is exact when every significant mode
/// lands on an integer mode strictly inside the Nyquist band.
pub fn dilate(f: &ScalarField, lambda: f64) -> Result<ScalarField> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dilation factor {lambda} must be positive"
        )));
    }
    let g = *f.grid();
    let plan = Fft3::new(g.n());
    let s = SpectralField::forward_with(&plan, f);
    let biggest = s.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let threshold = DILATION_TOLERANCE * biggest;
    let half = (g.n() / 2) as i64;
    let mut out = SpectralField::zeros(g);
    for (idx, &c) in s.coeffs.iter().enumerate() {
        if c.norm() <= threshold {
            continue;
        }
        let axes = g.unravel(idx);
        let mut target = [0usize; 3];
        for d in 0..3 {
            let m = g.mode(axes[d]);
            let scaled = lambda * m as f64;
            let rounded = scaled.round();
            if (scaled - rounded).abs() > 1e-9 {
                return Err(Error::Unresolvable(format!(
                    "mode {m} maps to non-integer mode {scaled} under dilation by {lambda}"
                )));
            }
            let rounded = rounded as i64;
            if rounded.abs() >= half {
                return Err(Error::Unresolvable(format!(
                    "mode {m} maps to {rounded}, beyond the Nyquist band of n = {}",
                    g.n()
                )));
            }
            target[d] = g.mode_index(rounded);
        }
        out.coeffs[g.index(target[0], target[1], target[2])] += c;
    }
    out.symmetrize();
    Ok(out.inverse_with(&plan))
}
