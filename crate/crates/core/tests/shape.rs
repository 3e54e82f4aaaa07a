use lightlike::catalog;
use lightlike::hypersurface::{classify, verify_lightlike, CausalType, Classification};
use lightlike::nullframe::{self, FrameField, GaugeField, GaugeTransform};
use lightlike::surface::SurfaceContext;
use nalgebra::{DMatrix, DVector, Matrix2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Principal curvatures of the ellipsoid at (θ, φ) w.r.t. the outward normal,
/// from the classical first and second fundamental forms.
fn ellipsoid_curvatures(a: f64, b: f64, c: f64, th: f64, ph: f64) -> (f64, f64) {
    let (st, ct, sp, cp) = (th.sin(), th.cos(), ph.sin(), ph.cos());
    let r_t = Vector3::new(a * ct * cp, b * ct * sp, -c * st);
    let r_p = Vector3::new(-a * st * sp, b * st * cp, 0.0);
    let r_tt = Vector3::new(-a * st * cp, -b * st * sp, -c * ct);
    let r_tp = Vector3::new(-a * ct * sp, b * ct * cp, 0.0);
    let r_pp = Vector3::new(-a * st * cp, -b * st * sp, 0.0);
    let mut n = r_t.cross(&r_p).normalize();
    let y = Vector3::new(a * st * cp, b * st * sp, c * ct);
    if n.dot(&y) < 0.0 {
        n = -n;
    }
    let first = Matrix2::new(r_t.dot(&r_t), r_t.dot(&r_p), r_p.dot(&r_t), r_p.dot(&r_p));
    let second = -Matrix2::new(r_tt.dot(&n), r_tp.dot(&n), r_tp.dot(&n), r_pp.dot(&n));
    let s = first.try_inverse().unwrap() * second;
    let tr = s.trace();
    let det = s.determinant();
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}

#[test]
fn light_cone_is_lightlike_and_umbilical_with_inverse_parameter() {
    let metric = catalog::minkowski(4);
    let patch = catalog::light_cone(4, None);
    for &(s, th, ph) in &[(0.5, 0.7, 0.2), (1.3, 1.9, 2.5), (2.0, 0.4, -1.0)] {
        let u = v(&[s, th, ph]);
        assert_eq!(verify_lightlike(&patch, &metric, &u).unwrap(), CausalType::Lightlike);
        let ctx = SurfaceContext::new(metric.clone(), patch.clone(), &u).unwrap();
        let shape = ctx.shape(&u).unwrap();
        let expected = &shape.screen_gram / s;
        assert!((&shape.lambda_low - expected).amax() < 1e-8, "{}", shape.lambda_low);
        match classify(&shape, ctx.tolerances()) {
            Classification::TotallyUmbilical { lambda } => assert!((lambda * s - 1.0).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(shape.asymmetry < 1e-8);
        assert!(shape.geodesic_residual < 1e-8);
    }
}

#[test]
fn light_cone_in_five_dimensions() {
    let metric = catalog::minkowski(5);
    let patch = catalog::light_cone(5, None);
    let u = v(&[0.8, 0.9, 1.2, 0.3]);
    let ctx = SurfaceContext::new(metric, patch, &u).unwrap();
    let shape = ctx.shape(&u).unwrap();
    for e in shape.eigenvalues.iter() {
        assert!((e * 0.8 - 1.0).abs() < 1e-7);
    }
}

#[test]
fn null_hyperplane_is_totally_geodesic() {
    let metric = catalog::minkowski(4);
    let patch = catalog::null_hyperplane(4);
    let u = v(&[0.3, -0.2, 0.4]);
    let ctx = SurfaceContext::new(metric, patch, &u).unwrap();
    let shape = ctx.shape(&u).unwrap();
    assert!(shape.lambda_low.norm() < 1e-12);
    assert_eq!(classify(&shape, ctx.tolerances()), Classification::TotallyGeodesic);
}

#[test]
fn horizon_is_totally_geodesic() {
    let metric = catalog::eddington_finkelstein(1.0).unwrap();
    let patch = catalog::schwarzschild_horizon(1.0).unwrap();
    let u = v(&[0.5, 1.1, 0.3]);
    assert_eq!(verify_lightlike(&patch, &metric, &u).unwrap(), CausalType::Lightlike);
    let ctx = SurfaceContext::new(metric, patch, &u).unwrap();
    let shape = ctx.shape(&u).unwrap();
    assert!(shape.lambda_low.norm() < 1e-7, "{}", shape.lambda_low);
    assert_eq!(classify(&shape, ctx.tolerances()), Classification::TotallyGeodesic);
}

#[test]
fn ellipsoid_eigenvalues_follow_parallel_surface_curvatures() {
    let (a, b, c) = (1.0, 1.3, 1.7);
    let metric = catalog::minkowski(4);
    let patch = catalog::ellipsoid_null_congruence(a, b, c).unwrap();
    for &(s, th, ph) in &[(0.1, 0.5, 0.4), (0.6, 0.9, 0.8), (1.0, 1.2, 1.2)] {
        let u = v(&[s, th, ph]);
        let ctx = SurfaceContext::new(metric.clone(), patch.clone(), &u).unwrap();
        let shape = ctx.shape(&u).unwrap();
        let (k1, k2) = ellipsoid_curvatures(a, b, c, th, ph);
        let mut expected = [k1 / (1.0 + s * k1), k2 / (1.0 + s * k2)];
        expected.sort_by(f64::total_cmp);
        for i in 0..2 {
            assert!(
                (shape.eigenvalues[i] - expected[i]).abs() < 1e-8,
                "{} vs {:?}",
                shape.eigenvalues,
                expected
            );
        }
        assert_eq!(classify(&shape, ctx.tolerances()), Classification::Generic);
        assert!(shape.asymmetry < 1e-8);
    }
}

#[test]
fn lambda_has_weight_one_and_screen_changes_keep_eigenvalues() {
    let metric = catalog::minkowski(4);
    let patch = catalog::ellipsoid_null_congruence(1.0, 1.3, 1.7).unwrap();
    let u = v(&[0.4, 0.8, 0.7]);
    let base = SurfaceContext::new(metric, patch, &u).unwrap();
    let reference = base.shape(&u).unwrap();
    for c in [0.5, 3.0] {
        let ctx = base.clone().with_gauge(GaugeField::scaling(3, 2, c));
        let shape = ctx.shape(&u).unwrap();
        assert!((&shape.lambda_low - &reference.lambda_low * c).amax() < 1e-8);
        let ratio = shape.eigenvalues[0] / shape.eigenvalues[1];
        let ratio0 = reference.eigenvalues[0] / reference.eigenvalues[1];
        assert!((ratio / ratio0 - 1.0).abs() < 1e-6);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let mut g = GaugeField::random(&mut rng, &u, 2);
        g.base.scale = 1.0;
        g.log_scale_slope.fill(0.0);
        let shape = base.clone().with_gauge(g).shape(&u).unwrap();
        for i in 0..2 {
            assert!((shape.eigenvalues[i] / reference.eigenvalues[i] - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn connection_forms_on_the_cone() {
    let metric = catalog::minkowski(4);
    let patch = catalog::light_cone(4, None);
    let u = v(&[1.5, 0.8, 0.3]);
    let ctx = SurfaceContext::new(metric, patch, &u).unwrap();
    let frame = ctx.frame(&u).unwrap();
    let shape = ctx.shape(&u).unwrap();
    for b in 0..2 {
        let conn = nullframe::connection_form_values(&ctx, &u, &frame.screen[b]).unwrap();
        assert!(conn.structure_residual(&frame.screen_gram()) < 1e-6);
        assert!(conn.omega(0, 3).abs() < 1e-6 && conn.omega(3, 0).abs() < 1e-6);
        for a in 0..2 {
            // coefficient of e_n in ∇_{e_b} e_a
            assert!((conn.omega(a + 1, 3) - shape.lambda_low[(a, b)]).abs() < 1e-7);
        }
    }
}

#[test]
fn parallel_frame_on_hyperplane_has_zero_connection() {
    let metric = catalog::minkowski(4);
    let patch = catalog::null_hyperplane(4);
    let u = v(&[0.1, 0.2, 0.3]);
    let ctx = SurfaceContext::new(metric, patch, &u).unwrap();
    let frame = ctx.frame(&u).unwrap();
    for x in [frame.e1.clone(), frame.screen[0].clone(), frame.screen[1].clone()] {
        let conn = nullframe::connection_form_values(&ctx, &u, &x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!(conn.omega(i, j).abs() < 1e-12);
            }
        }
    }
    let not_tangent = v(&[-1.0, 0.0, 0.0, 1.0]);
    assert!(nullframe::connection_form_values(&ctx, &u, &not_tangent).is_err());
}

#[test]
fn scaling_gauge_shifts_omega_11_by_log_derivative() {
    let metric = catalog::minkowski(4);
    let patch = catalog::ellipsoid_null_congruence(1.0, 1.3, 1.7).unwrap();
    let u = v(&[0.4, 0.8, 0.7]);
    let base = SurfaceContext::new(metric, patch, &u).unwrap();
    let mut g = GaugeField::scaling(3, 2, 1.7);
    g.origin = u.clone();
    g.log_scale_slope = v(&[0.3, -0.2, 0.5]);
    let gauged = base.clone().with_gauge(g.clone());
    let du = v(&[0.2, 1.0, -0.4]);
    let w0 = nullframe::connection_along(&base, &u, &du).unwrap().omega(0, 0);
    let w1 = nullframe::connection_along(&gauged, &u, &du).unwrap().omega(0, 0);
    assert!((w1 - w0 - g.log_scale_slope.dot(&du)).abs() < 1e-7);
}

#[test]
fn catalog_frames_stay_valid_under_random_gauges() {
    let cases = vec![
        (catalog::minkowski(4), catalog::light_cone(4, None), v(&[0.9, 1.0, 0.5])),
        (catalog::de_sitter(4, 1.0).unwrap(), catalog::light_cone(4, None), v(&[0.9, 1.0, 0.5])),
        (catalog::minkowski(4), catalog::ellipsoid_null_congruence(1.0, 1.3, 1.7).unwrap(), v(&[0.3, 0.7, 0.6])),
        (
            catalog::eddington_finkelstein(1.0).unwrap(),
            catalog::schwarzschild_horizon(1.0).unwrap(),
            v(&[0.0, 1.0, 0.5]),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (metric, patch, u) in cases {
        let ctx = SurfaceContext::new(metric, patch, &u).unwrap();
        let frame = ctx.frame(&u).unwrap();
        assert!(frame.residual() < 1e-10);
        for _ in 0..100 {
            let g: GaugeTransform = GaugeField::random(&mut rng, &u, 2).at(&u);
            let h = nullframe::apply_gauge(&frame, &g).unwrap();
            let scale = frame.metric.amax().max(1.0);
            assert!(h.residual() < 1e-10 * scale * h.gram().amax().max(1.0));
        }
    }
}

#[test]
fn frames_on_catalog_surfaces_are_tangent() {
    let metric = catalog::de_sitter(4, 1.0).unwrap();
    let patch = catalog::light_cone(4, None);
    let u = v(&[0.7, 1.2, 0.1]);
    let ctx = SurfaceContext::new(metric, patch, &u).unwrap();
    let frame = ctx.frame(&u).unwrap();
    let t = DMatrix::from_columns(&ctx.tangent_basis(&u).unwrap());
    for x in std::iter::once(&frame.e1).chain(frame.screen.iter()) {
        let (_, r) = lightlike::linalg::least_squares(&t, x);
        assert!(r < 1e-12);
    }
}
