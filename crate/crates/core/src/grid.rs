//! Uniform periodic grids and the real-valued fields that live on them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic cube `[0, L)^3` sampled at `x_i = i L / n` in every direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGridSize(n));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidBoxLength(box_length));
        }
        Ok(Grid { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    /// Number of samples, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        [idx % self.n, (idx / self.n) % self.n, idx / (self.n * self.n)]
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let [i, j, k] = self.unravel(idx);
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }

    /// Signed Fourier mode of storage index `i` along one axis; the Nyquist
    /// index maps to `-n/2`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn mode_index(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    /// Physical wavenumber `2 pi m / L`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.mode(i) as f64 / self.box_length
    }

    /// Wavenumber used by first derivatives: zero on the Nyquist plane so that
    /// derivatives of real fields stay real.
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    pub fn max_wavenumber_squared(&self) -> f64 {
        let k = PI / self.spacing();
        3.0 * k * k
    }

    /// Shortest periodic displacement `b - a` along one axis.
    pub fn periodic_delta(&self, a: f64, b: f64) -> f64 {
        let l = self.box_length;
        let mut d = (b - a) % l;
        if d > 0.5 * l {
            d -= l;
        } else if d < -0.5 * l {
            d += l;
        }
        d
    }

    pub fn periodic_distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let dx = self.periodic_delta(a[0], b[0]);
        let dy = self.periodic_delta(a[1], b[1]);
        let dz = self.periodic_delta(a[2], b[2]);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Real samples on a [`Grid`], x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Riemann sum over the whole torus.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(ScalarField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Periodic shift by whole cells: `out(x) = self(x - shift h)`.
    pub fn shifted(&self, shift: [i64; 3]) -> Self {
        let n = self.grid.n as i64;
        let mut values = vec![0.0; self.values.len()];
        for (idx, &v) in self.values.iter().enumerate() {
            let [i, j, k] = self.grid.unravel(idx);
            let ti = (i as i64 + shift[0]).rem_euclid(n) as usize;
            let tj = (j as i64 + shift[1]).rem_euclid(n) as usize;
            let tk = (k as i64 + shift[2]).rem_euclid(n) as usize;
            values[self.grid.index(ti, tj, tk)] = v;
        }
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Three scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        if x.grid != y.grid || x.grid != z.grid {
            return Err(Error::GridMismatch);
        }
        Ok(VectorField { components: [x, y, z] })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            components: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut comps = [
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
        ];
        for idx in 0..grid.len() {
            let v = f(grid.position(idx));
            for d in 0..3 {
                comps[d].push(v[d]);
            }
        }
        let [x, y, z] = comps;
        VectorField {
            components: [
                ScalarField::from_raw(grid, x),
                ScalarField::from_raw(grid, y),
                ScalarField::from_raw(grid, z),
            ],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.components[0].grid
    }

    pub fn component(&self, d: usize) -> &ScalarField {
        &self.components[d]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let grid = *self.grid();
        let values = (0..grid.len()).map(|i| self.magnitude_at(i)).collect();
        ScalarField::from_raw(grid, values)
    }

    pub fn magnitude_at(&self, idx: usize) -> f64 {
        let [x, y, z] = &self.components;
        let (a, b, c) = (x.values[idx], y.values[idx], z.values[idx]);
        (a * a + b * b + c * c).sqrt()
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid().len()).fold(0.0, |m, i| m.max(self.magnitude_at(i)))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map_components(|c| c.scaled(alpha))
    }

    pub fn map_components(&self, mut f: impl FnMut(&ScalarField) -> ScalarField) -> Self {
        let [x, y, z] = &self.components;
        VectorField {
            components: [f(x), f(y), f(z)],
        }
    }

    pub fn shifted(&self, shift: [i64; 3]) -> Self {
        self.map_components(|c| c.shifted(shift))
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        let [a, b, c] = &self.components;
        let [x, y, z] = &other.components;
        VectorField::new(a.add(x)?, b.add(y)?, c.add(z)?)
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        (0..3).fold(0.0, |m, d| m.max(self.components[d].max_abs_diff(&other.components[d])))
    }
}

/// Common view of scalar and vector fields as lists of scalar components.
pub trait Field: Clone {
    fn grid(&self) -> &Grid;
    fn component_slice(&self) -> &[ScalarField];
    /// Rebuilds a field of the same kind from transformed components.
    fn with_components(&self, components: Vec<ScalarField>) -> Self;

    /// Euclidean magnitude at one sample.
    fn magnitude_at(&self, idx: usize) -> f64 {
        let mut s = 0.0;
        for c in self.component_slice() {
            let v = c.values()[idx];
            s += v * v;
        }
        s.sqrt()
    }

    fn max_magnitude(&self) -> f64 {
        (0..self.grid().len()).fold(0.0, |m, i| m.max(self.magnitude_at(i)))
    }

    fn map_each(&self, f: impl FnMut(&ScalarField) -> ScalarField) -> Self {
        let comps = self.component_slice().iter().map(f).collect();
        self.with_components(comps)
    }
}

impl Field for ScalarField {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn component_slice(&self) -> &[ScalarField] {
        core::slice::from_ref(self)
    }

    fn with_components(&self, mut components: Vec<ScalarField>) -> Self {
        debug_assert_eq!(components.len(), 1);
        components.pop().expect("scalar field has one component")
    }

    fn magnitude_at(&self, idx: usize) -> f64 {
        self.values[idx].abs()
    }
}

impl Field for VectorField {
    fn grid(&self) -> &Grid {
        VectorField::grid(self)
    }

    fn component_slice(&self) -> &[ScalarField] {
        &self.components
    }

    fn with_components(&self, components: Vec<ScalarField>) -> Self {
        let mut it = components.into_iter();
        let x = it.next().expect("vector field has three components");
        let y = it.next().expect("vector field has three components");
        let z = it.next().expect("vector field has three components");
        VectorField { components: [x, y, z] }
    }

    fn magnitude_at(&self, idx: usize) -> f64 {
        VectorField::magnitude_at(self, idx)
    }
}
