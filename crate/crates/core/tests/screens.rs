use lightlike::catalog;
use lightlike::invariants::{AbsoluteInvariant, RelativeInvariant};
use lightlike::normalization::{
    construct_screen, invariant_log_derivative, projector_distance, screen_connection, triple_normalizations_4d,
    ScreenSpec,
};
use lightlike::nullframe::{GaugeField, GaugeTransform};
use lightlike::surface::SurfaceContext;
use lightlike::UnavailableReason;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn ellipsoid_ctx(u: &DVector<f64>) -> SurfaceContext {
    SurfaceContext::new(
        catalog::minkowski(4),
        catalog::ellipsoid_null_congruence(1.0, 1.3, 1.7).unwrap(),
        u,
    )
    .unwrap()
}

const RELATIVE_I1: ScreenSpec = ScreenSpec::Relative {
    invariant: RelativeInvariant::Elementary(1),
};
const RELATIVE_I2: ScreenSpec = ScreenSpec::Relative {
    invariant: RelativeInvariant::Elementary(2),
};

fn ratio() -> ScreenSpec {
    ScreenSpec::Absolute {
        invariant: AbsoluteInvariant::eigenvalue_ratio(),
    }
}

#[test]
fn screens_do_not_depend_on_the_gauge() {
    let u = v(&[0.5, 0.8, 0.7]);
    let base = ellipsoid_ctx(&u);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for spec in [RELATIVE_I1, RELATIVE_I2, ratio()] {
        let reference = construct_screen(&base, &u, spec).unwrap();
        for _ in 0..20 {
            let ctx = base.clone().with_gauge(GaugeField::random(&mut rng, &u, 2));
            let s = construct_screen(&ctx, &u, spec).unwrap();
            let d = projector_distance(&reference, &s);
            assert!(d < 1e-5, "{}: {d:e}", spec.label());
        }
    }
}

#[test]
fn screen_vectors_are_tangent_and_orthogonal_to_the_generator() {
    let u = v(&[0.3, 0.9, 1.0]);
    let ctx = ellipsoid_ctx(&u);
    let s = construct_screen(&ctx, &u, RELATIVE_I1).unwrap();
    let g = &s.frame.metric;
    let t = DMatrix::from_columns(&ctx.patch().tangent_basis(&u).unwrap());
    for e in &s.basis {
        assert!((e.transpose() * g * &s.frame.e1)[(0, 0)].abs() < 1e-12);
        let (_, r) = lightlike::linalg::least_squares(&t, e);
        assert!(r < 1e-10);
    }
}

#[test]
fn normalizing_object_absorbs_screen_shifts() {
    let u = v(&[0.5, 0.8, 0.7]);
    let base = ellipsoid_ctx(&u);
    let reference = construct_screen(&base, &u, RELATIVE_I1).unwrap();
    let shift = v(&[0.7, -0.4]);
    let gauge = GaugeField::constant(
        3,
        GaugeTransform {
            scale: 1.0,
            screen: DMatrix::identity(2, 2),
            shift: shift.clone(),
        },
    );
    let shifted = construct_screen(&base.clone().with_gauge(gauge), &u, RELATIVE_I1).unwrap();
    // ẽ_a = e_a + L_a e_1 must be the same vectors, so L moves by −t
    assert!((&shifted.coefficients - (&reference.coefficients - &shift)).amax() < 1e-6);
    for a in 0..2 {
        assert!((&shifted.basis[a] - &reference.basis[a]).amax() < 1e-6);
    }
}

#[test]
fn relative_k_has_weight_one() {
    let u = v(&[0.5, 0.8, 0.7]);
    let base = ellipsoid_ctx(&u);
    let inv = RelativeInvariant::Elementary(1);
    let k0 = invariant_log_derivative(&base, &u, 1, |w| inv.value(&base.shape(w)?)).unwrap();
    for c in [0.5, 3.0] {
        let ctx = base.clone().with_gauge(GaugeField::scaling(3, 2, c));
        let k = invariant_log_derivative(&ctx, &u, 1, |w| inv.value(&ctx.shape(w)?)).unwrap();
        assert!((k.k / (c * k0.k) - 1.0).abs() < 1e-6);
        assert!((&k.k_a - &k0.k_a).amax() < 1e-6 * k0.k_a.amax().max(1.0));
    }
}

#[test]
fn log_derivative_reconstructs_the_differential() {
    let u = v(&[0.5, 0.8, 0.7]);
    let ctx = ellipsoid_ctx(&u);
    let inv = RelativeInvariant::Elementary(1);
    let d = invariant_log_derivative(&ctx, &u, 1, |w| inv.value(&ctx.shape(w)?)).unwrap();
    let dir = v(&[0.3, -0.5, 0.8]);
    let frame = ctx.shape(&u).unwrap().frame;
    // d ln|I| − ω_1^1 evaluated directly along dir
    let h = 1e-3;
    let f = |t: f64| inv.value(&ctx.shape(&(&u + &dir * t)).unwrap()).unwrap().abs().ln();
    let dlog = (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
    let w11 = lightlike::nullframe::connection_along(&ctx, &u, &dir).unwrap().omega(0, 0);
    let x = DMatrix::from_columns(&ctx.patch().tangent_basis(&u).unwrap()) * &dir;
    let comps = frame.components(&x);
    let reconstructed = -d.k * comps[0] - d.k_a[0] * comps[1] - d.k_a[1] * comps[2];
    assert!((dlog - w11 - reconstructed).abs() < 1e-5);
}

#[test]
fn level_set_screen_is_integrable_and_tangent() {
    let u = v(&[0.5, 0.8, 0.7]);
    let ctx = ellipsoid_ctx(&u);
    let s = construct_screen(&ctx, &u, ratio()).unwrap();
    assert!(s.level_set_residual.unwrap() < 1e-6);
    let conn = screen_connection(&ctx, &u, ratio()).unwrap();
    assert!(conn.integrable, "asymmetry {:e} of {}", conn.asymmetry, conn.nu_ab);
    let rel = screen_connection(&ctx, &u, RELATIVE_I1).unwrap();
    assert!(!rel.integrable);
}

#[test]
fn both_weight_zero_invariants_give_one_screen_in_four_dimensions() {
    // I_1²/Ĩ_2 = (1 + r)²/(1 + r²) is a function of r = λ_2/λ_3
    let u = v(&[0.5, 0.8, 0.7]);
    let ctx = ellipsoid_ctx(&u);
    let a = construct_screen(&ctx, &u, ratio()).unwrap();
    let b = construct_screen(
        &ctx,
        &u,
        ScreenSpec::Absolute {
            invariant: AbsoluteInvariant::trace_ratio(),
        },
    )
    .unwrap();
    assert!(projector_distance(&a, &b) < 1e-6);
}

#[test]
fn flat_triple_has_proportional_k_and_a_level_set_screen() {
    let u = v(&[0.5, 0.8, 0.7]);
    let ctx = ellipsoid_ctx(&u);
    let t = triple_normalizations_4d(&ctx, &u).unwrap();
    let k = t.measured_k.unwrap();
    // with vanishing curvature K_a = λ_a
    for (ka, la) in k.iter().zip(t.eigenvalues) {
        assert!((ka - la).abs() < 1e-7);
    }
    assert_eq!(t.screens[0].as_ref().unwrap_err(), &UnavailableReason::KProportionalToEigenvalues);
    assert_eq!(t.screens[1].as_ref().unwrap_err(), &UnavailableReason::KProportionalToEigenvalues);
    let third = t.screens[2].as_ref().unwrap();
    assert!(third.level_set_residual.unwrap() < 1e-6);
    let measured = t.ratio_transversal.unwrap();
    assert!((measured - (k[1] - k[0])).abs() < 1e-7);
    assert!(measured.abs() > 1e-2);
}

#[test]
fn cone_relative_k_equals_umbilic_factor() {
    let metric = catalog::minkowski(4);
    let patch = catalog::light_cone(4, None);
    let s = 1.4;
    let u = v(&[s, 0.9, 0.3]);
    let ctx = SurfaceContext::new(metric, patch, &u).unwrap();
    let inv = RelativeInvariant::Elementary(1);
    let d = invariant_log_derivative(&ctx, &u, 1, |w| inv.value(&ctx.shape(w)?)).unwrap();
    assert!((d.k - 1.0 / s).abs() < 1e-8);
    assert!(d.k_a.amax() < 1e-8);
    for spec in [RELATIVE_I1, ScreenSpec::Umbilic] {
        let err = construct_screen(&ctx, &u, spec).unwrap_err();
        assert_eq!(err.unavailable_reason(), Some(UnavailableReason::KIsEigenvalue));
    }
    let t = triple_normalizations_4d(&ctx, &u).unwrap();
    for s in &t.screens {
        assert_eq!(s.as_ref().unwrap_err(), &UnavailableReason::EqualEigenvalues);
    }
    let flat_ratio = construct_screen(
        &ctx,
        &u,
        ScreenSpec::Absolute {
            invariant: AbsoluteInvariant::trace_ratio(),
        },
    )
    .unwrap_err();
    assert_eq!(flat_ratio.unavailable_reason(), Some(UnavailableReason::NonTransversal));
}

#[test]
fn totally_geodesic_blocks_every_construction_but_not_the_connection() {
    let u = v(&[0.2, 0.1, -0.3]);
    let ctx = SurfaceContext::new(catalog::minkowski(4), catalog::null_hyperplane(4), &u).unwrap();
    for spec in [RELATIVE_I1, RELATIVE_I2, ratio(), ScreenSpec::Umbilic] {
        let err = construct_screen(&ctx, &u, spec).unwrap_err();
        assert_eq!(err.unavailable_reason(), Some(UnavailableReason::TotallyGeodesic));
    }
    let t = triple_normalizations_4d(&ctx, &u).unwrap();
    assert!(t.screens.iter().all(|s| s.as_ref().unwrap_err() == &UnavailableReason::TotallyGeodesic));
    let conn = lightlike::normalization::induced_connection(&ctx, &u).unwrap();
    assert!(conn.nu_a.amax() < 1e-12 && conn.nu_ab.amax() < 1e-12);
    assert!(conn.integrable);
}
