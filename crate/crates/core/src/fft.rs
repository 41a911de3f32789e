//! Radix-2 complex FFT and the 3D transform used by every spectral operator.
//!
//! Forward transforms are unnormalized (`exp(-i k x)` kernel); inverse
//! transforms carry the `1/n^3` factor so `inverse(forward(f)) == f`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Plan for power-of-two transforms along one axis.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bit_reverse: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "fft length must be a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let bits = n.trailing_zeros();
        let bit_reverse = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        Fft {
            n,
            twiddles,
            bit_reverse,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transforms `n` rows of `row_len` contiguous values along the row index.
    /// With `row_len == 1` this is an ordinary 1D transform.
    fn transform_rows(&self, data: &mut [Complex64], row_len: usize, inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * row_len);
        if row_len == 1 {
            self.transform_line(data, inverse);
            return;
        }
        for i in 0..n {
            let j = self.bit_reverse[i];
            if j > i {
                for e in 0..row_len {
                    data.swap(i * row_len + e, j * row_len + e);
                }
            }
        }
        let mut half = 1;
        while half < n {
            let step = n / (2 * half);
            for block in (0..n).step_by(2 * half) {
                for m in 0..half {
                    let mut w = self.twiddles[m * step];
                    if inverse {
                        w = w.conj();
                    }
                    let a = (block + m) * row_len;
                    let b = (block + m + half) * row_len;
                    let (lo, hi) = data.split_at_mut(b);
                    let lo = &mut lo[a..a + row_len];
                    let hi = &mut hi[..row_len];
                    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                        let t = w * *y;
                        *y = *x - t;
                        *x += t;
                    }
                }
            }
            half *= 2;
        }
    }

    fn transform_line(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        for i in 0..n {
            let j = self.bit_reverse[i];
            if j > i {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let step = n / (2 * half);
            for block in (0..n).step_by(2 * half) {
                for m in 0..half {
                    let mut w = self.twiddles[m * step];
                    if inverse {
                        w = w.conj();
                    }
                    let t = w * data[block + m + half];
                    data[block + m + half] = data[block + m] - t;
                    data[block + m] += t;
                }
            }
            half *= 2;
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform_rows(data, 1, false);
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform_rows(data, 1, true);
    }
}

/// Cubic `n^3` transform, x-fastest storage.
#[derive(Debug, Clone)]
pub struct Fft3 {
    line: Fft,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        Fft3 { line: Fft::new(n) }
    }

    pub fn n(&self) -> usize {
        self.line.len()
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n();
        let plane = n * n;
        assert_eq!(data.len(), plane * n, "3D transform buffer has wrong length");
        for line in data.chunks_exact_mut(n) {
            self.line.transform_rows(line, 1, inverse);
        }
        for slab in data.chunks_exact_mut(plane) {
            self.line.transform_rows(slab, n, inverse);
        }
        self.line.transform_rows(data, plane, inverse);
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / data.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// Forward transform of two real arrays at once.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.forward(&mut z);
        let n = self.n();
        let neg = |m: usize| if m == 0 { 0 } else { n - m };
        let mut fa = Vec::with_capacity(z.len());
        let mut fb = Vec::with_capacity(z.len());
        // Both outputs come out exactly Hermitian: each pair (k, -k) is
        // built from the same two operands.
        for k in 0..n {
            for j in 0..n {
                let row = n * (j + n * k);
                let conj_row = n * (neg(j) + n * neg(k));
                for i in 0..n {
                    let zi = z[row + i];
                    let zc = z[conj_row + neg(i)].conj();
                    fa.push((zi + zc) * 0.5);
                    let d = zi - zc;
                    fb.push(Complex64::new(0.5 * d.im, -0.5 * d.re));
                }
            }
        }
        (fa, fb)
    }

    /// Inverse transform of two Hermitian spectra into two real arrays.
    pub fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
        self.inverse(&mut z);
        (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
    }
}

/// Index of the mode `-k` for the mode stored at `idx`.
pub fn conjugate_index(idx: usize, n: usize) -> usize {
    let i = idx % n;
    let j = (idx / n) % n;
    let k = idx / (n * n);
    let neg = |m: usize| if m == 0 { 0 } else { n - m };
    neg(i) + n * (neg(j) + n * neg(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                    let angle = -2.0 * PI * (j * k) as f64 / n as f64;
                    acc + v * Complex64::new(angle.cos(), angle.sin())
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[2usize, 4, 8, 16, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
                .collect();
            let mut y = x.clone();
            Fft::new(n).forward(&mut y);
            let expected = naive_dft(&x);
            for (a, b) in y.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-10 * n as f64);
            }
        }
    }

    #[test]
    fn three_d_round_trip() {
        let n = 8;
        let plan = Fft3::new(n);
        let x: Vec<Complex64> = (0..n * n * n)
            .map(|j| Complex64::new((j as f64 * 0.11).sin(), 0.0))
            .collect();
        let mut y = x.clone();
        plan.forward(&mut y);
        plan.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn real_pair_matches_separate_transforms() {
        let n = 8;
        let plan = Fft3::new(n);
        let a: Vec<f64> = (0..n * n * n).map(|j| (j as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..n * n * n).map(|j| (j as f64 * 0.07).cos()).collect();
        let (fa, fb) = plan.forward_real_pair(&a, &b);
        let mut za: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan.forward(&mut za);
        for (x, y) in fa.iter().zip(&za) {
            assert!((x - y).norm() < 1e-10);
        }
        let (ra, rb) = plan.inverse_real_pair(&fa, &fb);
        for (x, y) in ra.iter().zip(&a).chain(rb.iter().zip(&b)) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
