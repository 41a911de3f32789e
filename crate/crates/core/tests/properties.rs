use std::f64::consts::PI;

use nsdiag_core::generate::{generate, FieldKind, FieldSpec};
use nsdiag_core::heat::{besov_norm, heat_evolve, BesovOptions};
use nsdiag_core::norms::{
    check_embedding, embedding_constant, lp_ball, lp_norm, weak_l4_ball, weak_lp_norm, EMBEDDING_SLACK,
};
use nsdiag_core::quantities::{ns_rescale, scaled_quantities, ParabolicCylinder, Snapshot, SpaceTimeRecord};
use nsdiag_core::spectral::{
    divergence, gradient, laplacian, leray_project, max_divergence, pressure_from_velocity, SpectralField,
};
use nsdiag_core::verify::{
    check_c_bounds, check_interpolation, check_localized, check_pressure_decay, DEFAULT_CAP, INTERPOLATION_CAP,
};
use nsdiag_core::{Grid, ScalarField, VectorField};
use proptest::prelude::*;

fn grid8() -> Grid {
    Grid::new(8, 2.0 * PI).unwrap()
}

fn noise(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn scalar(values: Vec<f64>) -> ScalarField {
    ScalarField::new(grid8(), values).unwrap()
}

fn vector(values: Vec<f64>) -> VectorField {
    let n = grid8().len();
    VectorField::new(
        scalar(values[..n].to_vec()),
        scalar(values[n..2 * n].to_vec()),
        scalar(values[2 * n..].to_vec()),
    )
    .unwrap()
}

fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    let num: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.values().iter().map(|y| y * y).sum();
    (num / den.max(1e-300)).sqrt()
}

fn random_solenoidal(n: usize, seed: u64) -> VectorField {
    generate(
        &FieldSpec::new(FieldKind::RandomSolenoidal, n, 2.0 * PI)
            .with_length_scale(1.6)
            .with_seed(seed),
    )
    .unwrap()
}

fn constant_record(v: VectorField, count: usize, t_end: f64) -> SpaceTimeRecord {
    let q = pressure_from_velocity(&v).unwrap();
    let times: Vec<f64> = (0..count).map(|k| t_end * k as f64 / (count - 1) as f64).collect();
    SpaceTimeRecord::time_constant(v, Some(q), &times, "property").unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transform_round_trip(values in noise(512)) {
        let f = scalar(values);
        let back = SpectralField::forward(&f).inverse();
        prop_assert!(rel_l2(&back, &f) <= 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_solenoidal(values in noise(3 * 512)) {
        let v = vector(values);
        let p = leray_project(&v);
        let pp = leray_project(&p);
        for a in 0..3 {
            prop_assert!(rel_l2(pp.component(a), p.component(a)) <= 1e-12);
        }
        prop_assert!(max_divergence(&p) <= 1e-10);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian(values in noise(512)) {
        let f = scalar(values);
        let lhs = divergence(&gradient(&f));
        let rhs = laplacian(&f);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * rhs.max_abs().max(1.0));
    }

    #[test]
    fn heat_semigroup_maximum_principle_and_mean(values in noise(512), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let f = scalar(values);
        let two_steps = heat_evolve(&heat_evolve(&f, s).unwrap(), t).unwrap();
        let one_step = heat_evolve(&f, s + t).unwrap();
        prop_assert!(rel_l2(&two_steps, &one_step) <= 1e-12);
        prop_assert!(one_step.max_abs() <= f.max_abs() * (1.0 + 1e-12));
        prop_assert!((one_step.mean() - f.mean()).abs() <= 1e-13);
    }

    #[test]
    fn besov_is_homogeneous_and_bounded(seed in 0u64..1000, alpha in -5.0f64..5.0) {
        prop_assume!(alpha.abs() > 1e-3);
        let v = random_solenoidal(16, seed);
        let opts = BesovOptions::for_grid(v.grid());
        let base = besov_norm(&v, &opts).unwrap().norm_value;
        let scaled = besov_norm(&v.scaled(alpha), &opts).unwrap().norm_value;
        prop_assert!(close(scaled, alpha.abs() * base, 1e-10));
        prop_assert!(base <= opts.t_max.sqrt() * v.max_magnitude() * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ball_norms_monotone_and_homogeneous(seed in 0u64..1000, r in 0.4f64..1.2, alpha in 0.1f64..10.0) {
        let v = random_solenoidal(16, seed);
        let c = [PI; 3];
        let (small, big) = (r, r + 0.3);
        for p in [2.0, 3.0, 4.0] {
            prop_assert!(lp_ball(&v, c, small, p).unwrap() <= lp_ball(&v, c, big, p).unwrap());
            let scaled = lp_ball(&v.scaled(alpha), c, r, p).unwrap();
            prop_assert!(close(scaled, alpha * lp_ball(&v, c, r, p).unwrap(), 1e-12));
        }
        let weak = weak_l4_ball(&v, c, r).unwrap();
        prop_assert!(weak <= weak_l4_ball(&v, c, big).unwrap());
        prop_assert!(weak <= lp_ball(&v, c, r, 4.0).unwrap() * (1.0 + 1e-12));
        prop_assert!(close(weak_l4_ball(&v.scaled(alpha), c, r).unwrap(), alpha * weak, 1e-12));
        prop_assert!(weak_lp_norm(&v, 4.0).unwrap() <= lp_norm(&v, 4.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn embedding_ratio_below_sharp_constant(seed in 0u64..1000, r in 0.4f64..1.5) {
        let v = random_solenoidal(16, seed);
        let report = check_embedding(&[v], &[([PI; 3], r), ([1.0, 2.0, 3.0], r)]).unwrap();
        prop_assert!(report.max_ratio.unwrap() <= embedding_constant() * (1.0 + EMBEDDING_SLACK));
    }

    #[test]
    fn quantities_follow_power_laws(seed in 0u64..1000, r in 0.75f64..1.5, alpha in 1.0f64..4.0) {
        let v = random_solenoidal(16, seed);
        let cyl = ParabolicCylinder::new([PI; 3], 2.5, r).unwrap();
        let base_rec = constant_record(v.clone(), 37, 2.5);
        let base = scaled_quantities(&base_rec, &cyl).unwrap();
        let big = scaled_quantities(&constant_record(v.scaled(alpha), 37, 2.5), &cyl).unwrap();
        prop_assert!(close(big.a, alpha.powi(2) * base.a, 1e-10));
        prop_assert!(close(big.e, alpha.powi(2) * base.e, 1e-10));
        prop_assert!(close(big.c, alpha.powi(3) * base.c, 1e-10));
        prop_assert!(close(big.d, alpha.powi(3) * base.d, 1e-10));
        prop_assert!(big.a >= base.a && big.e >= base.e && big.c >= base.c && big.d >= base.d);
        prop_assert_eq!(base.g_max, base.a.max(base.e).max(base.c));
        prop_assert_eq!(base.g_min, base.a.min(base.e).min(base.c));
    }

    #[test]
    fn quantities_are_translation_invariant(seed in 0u64..1000, r in 0.75f64..1.5, shift in prop::array::uniform3(-8i64..8)) {
        let rec = constant_record(random_solenoidal(16, seed), 37, 2.5);
        let h = rec.grid().spacing();
        let x0 = [PI, 2.0, 4.0];
        let moved = [x0[0] + shift[0] as f64 * h, x0[1] + shift[1] as f64 * h, x0[2] + shift[2] as f64 * h];
        let a = scaled_quantities(&rec, &ParabolicCylinder::new(x0, 2.5, r).unwrap()).unwrap();
        let b = scaled_quantities(&rec.shifted(shift), &ParabolicCylinder::new(moved, 2.5, r).unwrap()).unwrap();
        for (x, y) in [(a.a, b.a), (a.e, b.e), (a.c, b.c), (a.d, b.d)] {
            prop_assert!(close(x, y, 1e-12));
        }
    }

    #[test]
    fn same_degree_check_ratios_are_amplitude_invariant(seed in 0u64..1000, alpha in 0.2f64..5.0) {
        let v = random_solenoidal(16, seed);
        let opts = BesovOptions::for_grid(v.grid());
        let pairs = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| close(*x, *y, 1e-10));

        let i1 = check_interpolation(&[v.clone()], &opts, INTERPOLATION_CAP).unwrap();
        let i2 = check_interpolation(&[v.scaled(alpha)], &opts, INTERPOLATION_CAP).unwrap();
        prop_assert!(pairs(&i1.ratios, &i2.ratios));

        let l1 = check_localized(&[v.clone()], [PI; 3], &[0.5, 0.7], &opts, DEFAULT_CAP).unwrap();
        let l2 = check_localized(&[v.scaled(alpha)], [PI; 3], &[0.5, 0.7], &opts, DEFAULT_CAP).unwrap();
        prop_assert!(pairs(&l1.ratios, &l2.ratios));

        let rec = constant_record(v.clone(), 33, 1.0);
        let scaled = rec.scaled(alpha);
        let cyl = [ParabolicCylinder::new([PI; 3], 1.0, 0.5).unwrap()];
        let m = besov_norm(&v, &opts).unwrap().norm_value;
        let c1 = check_c_bounds(&rec, &cyl, &[2.0], m, DEFAULT_CAP).unwrap();
        let c2 = check_c_bounds(&scaled, &cyl, &[2.0], alpha * m, DEFAULT_CAP).unwrap();
        prop_assert!(pairs(&c1.ratios, &c2.ratios));

        let pd = [(0.5, 0.75)];
        let p1 = check_pressure_decay(&rec, [PI; 3], 1.0, &pd, DEFAULT_CAP).unwrap();
        let p2 = check_pressure_decay(&scaled, [PI; 3], 1.0, &pd, DEFAULT_CAP).unwrap();
        prop_assert!(pairs(&p1.ratios, &p2.ratios));
    }
}

#[test]
fn besov_scaling_invariance_on_gaussians() {
    let gaussian = |box_length: f64, width: f64, amp: f64| {
        let g = Grid::new(64, box_length).unwrap();
        let c = box_length / 2.0;
        ScalarField::from_fn(g, |x| {
            let r2 = (x[0] - c).powi(2) + (x[1] - c).powi(2) + (x[2] - c).powi(2);
            amp * (-r2 / (width * width)).exp()
        })
    };
    let base = gaussian(16.0, 1.0, 1.0);
    let b0 = besov_norm(&base, &BesovOptions::for_grid(base.grid()))
        .unwrap()
        .norm_value;
    for lambda in [2.0, 4.0] {
        // lambda f(lambda x), resolved on a box shrunk by lambda.
        let f = gaussian(16.0 / lambda, 1.0 / lambda, lambda);
        let b = besov_norm(&f, &BesovOptions::for_grid(f.grid())).unwrap().norm_value;
        assert!((b / b0 - 1.0).abs() <= 0.02, "lambda {lambda}: {b} vs {b0}");
    }
}

#[test]
fn ball_volume_converges_at_first_order() {
    let errors: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let g = Grid::new(n, 8.0).unwrap();
            let ball = nsdiag_core::Ball::new(&g, [4.0 + 0.013, 4.0 - 0.021, 4.0 + 0.007], 1.3).unwrap();
            (ball.volume() / (4.0 * PI / 3.0 * 1.3f64.powi(3)) - 1.0).abs()
        })
        .collect();
    let bound = 2.0 * errors[0].max(1e-3);
    assert!(errors[1] <= bound && errors[2] <= bound, "{errors:?}");
    assert!(errors[2] <= 0.03);
}

/// Heat-decaying Taylor-Green data with mode 2: band-limited, so the dilations
/// by 2 and 1/2 are exact on the grid.
fn decaying_taylor_green(n: usize) -> SpaceTimeRecord {
    let tg = generate(&FieldSpec::new(FieldKind::TaylorGreen, n, 2.0 * PI).with_length_scale(PI)).unwrap();
    let q = pressure_from_velocity(&tg).unwrap();
    let snaps = (0..=40)
        .map(|i| {
            let t = 0.5 * i as f64 / 40.0;
            let a = (-8.0 * t).exp();
            Snapshot::new(t, tg.scaled(a), Some(q.scaled(a * a)))
        })
        .collect();
    SpaceTimeRecord::new(snaps, 1.0, "decaying taylor-green").unwrap()
}

#[test]
fn quantities_invariant_under_ns_scaling() {
    let rec = decaying_taylor_green(64);
    let cyl = ParabolicCylinder::new([2.0, 1.3, 3.0], 0.5, 0.7).unwrap();
    let base = scaled_quantities(&rec, &cyl).unwrap();
    for lambda in [2.0, 0.5] {
        let q = scaled_quantities(&ns_rescale(&rec, lambda).unwrap(), &cyl.rescaled(lambda)).unwrap();
        for (x, y) in [(q.a, base.a), (q.e, base.e), (q.c, base.c), (q.d, base.d)] {
            assert!((x / y - 1.0).abs() <= 0.02, "lambda {lambda}: {q:?} vs {base:?}");
        }
    }
}
