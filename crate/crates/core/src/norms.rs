//! Lebesgue, weak-Lebesgue and Sobolev norms on balls and on the whole box.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::grid::{Field, ScalarField};
use crate::report::{field_digest, CheckCase, CheckReport};
use crate::spectral::gradient_norm_squared;

/// Sharp layer-cake constant of `|u|_{L3(B_r)} <= c r^{1/4} |u|_{L4,inf(B_r)}`:
/// `4^{1/3} (4 pi / 3)^{1/12}`.
pub fn embedding_constant() -> f64 {
    4f64.powf(1.0 / 3.0) * (4.0 * core::f64::consts::PI / 3.0).powf(1.0 / 12.0)
}

/// Allowance for ball-quadrature error on top of [`embedding_constant`].
pub const EMBEDDING_SLACK: f64 = 0.05;

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Lebesgue exponent {p} must be >= 1")))
    }
}

fn lp_of(magnitudes: impl Iterator<Item = f64>, cell_volume: f64, p: f64) -> f64 {
    let sum: f64 = magnitudes.map(|m| m.powf(p)).sum();
    (sum * cell_volume).powf(1.0 / p)
}

/// Weak-Lp quasi-norm of the discrete measure: `max_k m_k (#{|u| >= m_k} dx^3)^{1/p}`
/// over the sorted sample magnitudes, which is the supremum over levels.
fn weak_lp_of(mut magnitudes: Vec<f64>, cell_volume: f64, p: f64) -> f64 {
    magnitudes.sort_by(|a, b| b.total_cmp(a));
    let mut best = 0.0f64;
    let mut k = 0;
    while k < magnitudes.len() {
        let level = magnitudes[k];
        if level <= 0.0 {
            break;
        }
        let mut end = k + 1;
        while end < magnitudes.len() && magnitudes[end] == level {
            end += 1;
        }
        best = best.max(level * (end as f64 * cell_volume).powf(1.0 / p));
        k = end;
    }
    best
}

/// `(sum_{B(x0,r)} |u|^p dx^3)^{1/p}`.
pub fn lp_ball<F: Field>(u: &F, center: [f64; 3], radius: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let ball = Ball::new(u.grid(), center, radius)?;
    lp_on(u, &ball, p)
}

pub fn lp_on<F: Field>(u: &F, ball: &Ball, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if ball.is_empty() {
        return Err(Error::EmptyBall);
    }
    Ok(lp_of(
        ball.indices().iter().map(|&i| u.magnitude_at(i)),
        ball.cell_volume(),
        p,
    ))
}

pub fn weak_l4_ball<F: Field>(u: &F, center: [f64; 3], radius: f64) -> Result<f64> {
    let ball = Ball::new(u.grid(), center, radius)?;
    Ok(weak_lp_of(ball.magnitudes(u), ball.cell_volume(), 4.0))
}

pub fn weak_l4_on<F: Field>(u: &F, ball: &Ball) -> f64 {
    weak_lp_of(ball.magnitudes(u), ball.cell_volume(), 4.0)
}

/// Lp norm over the whole periodic box.
pub fn lp_norm<F: Field>(u: &F, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let g = u.grid();
    Ok(lp_of((0..g.len()).map(|i| u.magnitude_at(i)), g.cell_volume(), p))
}

/// Weak-Lp quasi-norm over the whole periodic box.
pub fn weak_lp_norm<F: Field>(u: &F, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let g = u.grid();
    let mags = (0..g.len()).map(|i| u.magnitude_at(i)).collect();
    Ok(weak_lp_of(mags, g.cell_volume(), p))
}

/// `|grad u|_{L2}` over the whole box.
pub fn gradient_l2<F: Field>(u: &F) -> f64 {
    gradient_norm_squared(u).integral().sqrt()
}

/// Ball-local H1 data: `|grad u|_{L2(B)}`, `|u|_{L2(B)}` and the scaled
/// combination `|grad u| + |u| / r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H1Ball {
    pub gradient_l2: f64,
    pub l2: f64,
    pub combination: f64,
}

/// Pointwise `|u|^2` and `|grad u|^2`, computed once and reused across balls.
#[derive(Debug, Clone)]
pub struct H1Densities {
    pub value_sq: ScalarField,
    pub gradient_sq: ScalarField,
}

impl H1Densities {
    pub fn new<F: Field>(u: &F) -> Self {
        let g = *u.grid();
        let mut value_sq = ScalarField::zeros(g);
        for (i, v) in value_sq.values_mut().iter_mut().enumerate() {
            let m = u.magnitude_at(i);
            *v = m * m;
        }
        H1Densities {
            value_sq,
            gradient_sq: gradient_norm_squared(u),
        }
    }

    pub fn on_ball(&self, ball: &Ball) -> H1Ball {
        let gradient_l2 = ball.integrate(&self.gradient_sq).max(0.0).sqrt();
        let l2 = ball.integrate(&self.value_sq).max(0.0).sqrt();
        H1Ball {
            gradient_l2,
            l2,
            combination: gradient_l2 + l2 / ball.radius(),
        }
    }
}

/// The gradient is the global spectral gradient restricted to the ball.
pub fn h1_ball<F: Field>(u: &F, center: [f64; 3], radius: f64) -> Result<H1Ball> {
    let ball = Ball::new(u.grid(), center, radius)?;
    Ok(H1Densities::new(u).on_ball(&ball))
}

/// One case of `|u|_{L3(B)} <= c r^{1/4} |u|_{L4,inf(B)}`; the ratio is the
/// empirical `c`.
pub fn embedding_l3_from_weak_l4<F: Field>(u: &F, center: [f64; 3], radius: f64) -> Result<CheckCase> {
    let ball = Ball::new(u.grid(), center, radius)?;
    let l3 = lp_on(u, &ball, 3.0)?;
    let weak = weak_l4_on(u, &ball);
    Ok(CheckCase::new(
        format!("x0=({:.4},{:.4},{:.4}) r={radius}", center[0], center[1], center[2]),
        l3,
        radius.powf(0.25) * weak,
    )
    .with_digest(field_digest(u)))
}

/// Runs the embedding over every `(field, ball)` pair; passes iff every
/// ratio stays below the sharp constant plus [`EMBEDDING_SLACK`].
pub fn check_embedding<F: Field>(fields: &[F], balls: &[([f64; 3], f64)]) -> Result<CheckReport> {
    let mut cases = Vec::with_capacity(fields.len() * balls.len());
    for f in fields {
        for &(c, r) in balls {
            cases.push(embedding_l3_from_weak_l4(f, c, r)?);
        }
    }
    Ok(CheckReport::new(
        "embedding",
        embedding_constant() * (1.0 + EMBEDDING_SLACK),
        cases,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, VectorField};
    use core::f64::consts::PI;

    fn ball_volume() -> f64 {
        4.0 * PI / 3.0
    }

    #[test]
    fn constant_field_norms() {
        let g = Grid::new(64, 8.0).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let l3 = lp_ball(&one, [4.0; 3], 1.0, 3.0).unwrap();
        assert!((l3 / ball_volume().powf(1.0 / 3.0) - 1.0).abs() < 0.02);
        let zero = ScalarField::zeros(g);
        assert_eq!(lp_ball(&zero, [4.0; 3], 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(weak_l4_ball(&zero, [4.0; 3], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_l4_over_large_ball() {
        let g = Grid::new(64, 12.0).unwrap();
        let u = ScalarField::from_fn(g, |x| {
            (-((x[0] - 6.0).powi(2) + (x[1] - 6.0).powi(2) + (x[2] - 6.0).powi(2))).exp()
        });
        let l4 = lp_ball(&u, [6.0; 3], 2.99, 4.0).unwrap();
        assert!((l4 / (PI / 4.0).powf(0.375) - 1.0).abs() < 0.01, "{l4}");
        let h1 = h1_ball(&u, [6.0; 3], 2.99).unwrap();
        let expected = (3.0 * (PI / 2.0).powf(1.5)).sqrt();
        assert!((h1.gradient_l2 / expected - 1.0).abs() < 0.01, "{}", h1.gradient_l2);
    }

    #[test]
    fn plateau_weak_l4() {
        let g = Grid::new(64, 8.0).unwrap();
        let u = ScalarField::from_fn(g, |x| {
            let r2 = (x[0] - 4.0).powi(2) + (x[1] - 4.0).powi(2) + (x[2] - 4.0).powi(2);
            if r2 <= 1.0 {
                1.0
            } else {
                0.0
            }
        });
        let w = weak_l4_ball(&u, [4.0; 3], 1.0).unwrap();
        assert!((w / ball_volume().powf(0.25) - 1.0).abs() < 0.02, "{w}");
        let case = embedding_l3_from_weak_l4(&u, [4.0; 3], 1.0).unwrap();
        let expected = ball_volume().powf(1.0 / 12.0);
        assert!((case.ratio.unwrap() / expected - 1.0).abs() < 0.02);
    }

    #[test]
    fn h1_of_constant() {
        let g = Grid::new(32, 8.0).unwrap();
        let c = 2.5;
        let r = 1.5;
        let h1 = h1_ball(&ScalarField::constant(g, c), [4.0; 3], r).unwrap();
        assert!(h1.gradient_l2 < 1e-12);
        let expected = c * ball_volume().sqrt() * r.powf(1.5);
        assert!((h1.l2 / expected - 1.0).abs() < 0.03);
        assert!((h1.combination - h1.l2 / r).abs() < 1e-12);
        let z = h1_ball(&ScalarField::zeros(g), [4.0; 3], r).unwrap();
        assert_eq!((z.gradient_l2, z.l2), (0.0, 0.0));
    }

    #[test]
    fn weak_norm_handles_ties_and_vectors() {
        let g = Grid::new(8, 8.0).unwrap();
        let v = VectorField::from_fn(g, |_| [3.0, 4.0, 0.0]);
        let w = weak_lp_norm(&v, 4.0).unwrap();
        assert!((w - 5.0 * 512f64.powf(0.25)).abs() < 1e-12);
        assert!((lp_norm(&v, 4.0).unwrap() - w).abs() < 1e-12);
    }

    #[test]
    fn zero_field_embedding_is_degenerate() {
        let g = Grid::new(16, 8.0).unwrap();
        let case = embedding_l3_from_weak_l4(&ScalarField::zeros(g), [4.0; 3], 1.0).unwrap();
        assert!(case.is_degenerate());
    }

    #[test]
    fn rejects_bad_exponent_and_balls() {
        let g = Grid::new(16, 8.0).unwrap();
        let f = ScalarField::constant(g, 1.0);
        assert!(lp_ball(&f, [0.0; 3], 1.0, 0.5).is_err());
        assert!(matches!(
            lp_ball(&f, [0.0; 3], 3.0, 2.0),
            Err(Error::BallTooLarge { .. })
        ));
    }
}
