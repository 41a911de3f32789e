use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, ScalarField};

/// Samples whose centers lie in the closed periodic ball `|x - x0| <= r`.
///
/// Membership is by sample center only; each sample carries the full cell
/// volume `dx^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: [f64; 3],
    radius: f64,
    indices: Vec<usize>,
    cell_volume: f64,
}

impl Ball {
    pub fn new(grid: &Grid, center: [f64; 3], radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidRadius(radius));
        }
        if 2.0 * radius >= 0.5 * grid.box_length() {
            return Err(Error::BallTooLarge {
                radius,
                box_length: grid.box_length(),
            });
        }
        let h = grid.spacing();
        let n = grid.n() as i64;
        // Points exactly on the sphere are kept regardless of rounding.
        let r2 = radius * radius * (1.0 + 1e-12);
        let range = |c: f64| {
            let lo = ((c - radius) / h).floor() as i64;
            let hi = ((c + radius) / h).ceil() as i64;
            lo..=hi
        };
        let mut indices = Vec::new();
        for k in range(center[2]) {
            let dz = k as f64 * h - center[2];
            for j in range(center[1]) {
                let dy = j as f64 * h - center[1];
                for i in range(center[0]) {
                    let dx = i as f64 * h - center[0];
                    if dx * dx + dy * dy + dz * dz <= r2 {
                        indices.push(grid.index(
                            i.rem_euclid(n) as usize,
                            j.rem_euclid(n) as usize,
                            k.rem_euclid(n) as usize,
                        ));
                    }
                }
            }
        }
        Ok(Ball {
            center,
            radius,
            indices,
            cell_volume: grid.cell_volume(),
        })
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Discrete ball volume `#samples * dx^3`.
    pub fn volume(&self) -> f64 {
        self.indices.len() as f64 * self.cell_volume
    }

    /// `sum_{ball} density * dx^3`.
    pub fn integrate(&self, density: &ScalarField) -> f64 {
        let v = density.values();
        self.indices.iter().map(|&i| v[i]).sum::<f64>() * self.cell_volume
    }

    /// Pointwise magnitudes of `field` restricted to the ball.
    pub fn magnitudes<F: Field>(&self, field: &F) -> Vec<f64> {
        self.indices.iter().map(|&i| field.magnitude_at(i)).collect()
    }
}

/// Restriction of a field to `B(x0, r)`: the sample mask plus the values.
#[derive(Debug, Clone)]
pub struct BallSamples {
    pub ball: Ball,
    /// Euclidean magnitude at each masked sample.
    pub magnitudes: Vec<f64>,
}

pub fn restrict_ball<F: Field>(field: &F, center: [f64; 3], radius: f64) -> Result<BallSamples> {
    let ball = Ball::new(field.grid(), center, radius)?;
    let magnitudes = ball.magnitudes(field);
    Ok(BallSamples { ball, magnitudes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn unit_ball_volume() {
        let g = Grid::new(64, 8.0).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let b = Ball::new(&g, [4.0, 4.0, 4.0], 1.0).unwrap();
        let vol = b.integrate(&one);
        assert!((vol / (4.0 * PI / 3.0) - 1.0).abs() < 0.02, "vol = {vol}");
    }

    #[test]
    fn tiny_ball_is_one_sample() {
        let g = Grid::new(16, 1.0).unwrap();
        let b = Ball::new(&g, g.position(g.index(3, 5, 7)), 0.2 * g.spacing()).unwrap();
        assert_eq!(b.indices(), &[g.index(3, 5, 7)]);
    }

    #[test]
    fn corner_ball_matches_centered_ball() {
        let g = Grid::new(32, 8.0).unwrap();
        let a = Ball::new(&g, [0.0, 0.0, 0.0], 1.3).unwrap();
        let b = Ball::new(&g, [4.0, 4.0, 4.0], 1.3).unwrap();
        assert_eq!(a.len(), b.len());
        let mut sorted = a.indices().to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
    }

    #[test]
    fn rejects_wrapping_balls() {
        let g = Grid::new(16, 8.0).unwrap();
        assert!(matches!(Ball::new(&g, [0.0; 3], 2.0), Err(Error::BallTooLarge { .. })));
        assert!(matches!(Ball::new(&g, [0.0; 3], 0.0), Err(Error::InvalidRadius(_))));
        assert!(Ball::new(&g, [0.0; 3], 1.99).is_ok());
    }

    #[test]
    fn volume_error_shrinks_with_resolution() {
        // Lattice-count error oscillates, so check the O(dx) envelope.
        let exact = 4.0 * PI / 3.0;
        for n in [16, 32, 64, 128] {
            let g = Grid::new(n, 8.0).unwrap();
            let err = (Ball::new(&g, [4.0; 3], 1.0).unwrap().volume() - exact).abs() / exact;
            assert!(err <= g.spacing(), "n = {n}: {err}");
        }
    }
}
