use lightlike::catalog;
use lightlike::geodesics::{
    attach_exp_images, focal_displacement, focal_points, integrate_isotropic_geodesic, jacobian_det, regular_segment,
    umbilical_focus,
};
use lightlike::normalization::{construct_screen, ScreenSpec};
use lightlike::nullframe::{FrameField, GaugeField};
use lightlike::surface::SurfaceContext;
use lightlike::tensorcalc::MetricField;
use lightlike::{Error, UnavailableReason};
use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// `w + α ∂_last` with `α` the root of the null condition nearest to `w`'s own.
fn null_completion(metric: &MetricField, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let g = metric.at(x).unwrap();
    let n = w.len();
    let mut t = DVector::zeros(n);
    t[n - 1] = 1.0;
    let a = (t.transpose() * &g * &t)[(0, 0)];
    let b = 2.0 * (w.transpose() * &g * &t)[(0, 0)];
    let c = (w.transpose() * &g * w)[(0, 0)];
    let disc = (b * b - 4.0 * a * c).sqrt();
    let alpha = (-b - disc) / (2.0 * a);
    w + t * alpha
}

#[test]
fn minkowski_geodesics_are_straight_lines() {
    let m = catalog::minkowski(4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let x0 = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
        let w = DVector::from_fn(4, |i, _| if i < 3 { rng.random_range(-1.0..1.0) } else { 0.0 });
        let v0 = null_completion(&m, &x0, &w);
        let rec = integrate_isotropic_geodesic(&m, &x0, &v0, 5.0, 26).unwrap();
        assert!(!rec.exited);
        for (s, x) in rec.s.iter().zip(&rec.x) {
            assert!((x - (&x0 + &v0 * *s)).amax() < 1e-10);
        }
        assert!(rec.null_drift() < 1e-12);
    }
}

#[test]
fn null_norm_is_conserved_on_catalog_metrics() {
    let metrics = vec![
        (catalog::minkowski(4), v(&[0.3, -0.2, 0.5, 0.1])),
        (catalog::de_sitter(4, 1.0).unwrap(), v(&[0.3, -0.2, 0.5, 0.1])),
        (catalog::anti_de_sitter(4, -1.0).unwrap(), v(&[0.3, -0.2, 0.5, 0.1])),
        (catalog::de_sitter(5, 0.5).unwrap(), v(&[0.3, -0.2, 0.5, 0.1, 0.4])),
        (catalog::eddington_finkelstein(1.0).unwrap(), v(&[4.0, 1.2, 0.4, 0.0])),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (metric, x0) in metrics {
        let n = metric.dim();
        for _ in 0..3 {
            let mut w = DVector::from_fn(n, |_, _| rng.random_range(-0.3..0.3));
            w[n - 1] = 0.0;
            if metric.name().starts_with("eddington") {
                w[0] = 0.5; // outgoing
            }
            let v0 = null_completion(&metric, &x0, &w);
            let rec = integrate_isotropic_geodesic(&metric, &x0, &v0, 5.0, 51).unwrap();
            assert!(!rec.exited, "{} left the chart at s = {:?}", metric.name(), rec.s.last());
            assert!(rec.null_drift() < 1e-7, "{}: {:e}", metric.name(), rec.null_drift());
        }
    }
}

#[test]
fn cone_generators_stay_on_the_cone() {
    let m = catalog::minkowski(4);
    let apex = v(&[0.2, -0.1, 0.3, 0.5]);
    let patch = catalog::light_cone(4, Some(apex.clone()));
    let u = v(&[0.7, 1.1, 0.4]);
    let ctx = SurfaceContext::new(m.clone(), patch, &u).unwrap();
    let frame = ctx.frame(&u).unwrap();
    let rec = integrate_isotropic_geodesic(&m, &frame.point, &frame.e1, 5.0, 51).unwrap();
    let level = |x: &DVector<f64>| {
        let d = x - &apex;
        d.rows(0, 3).norm() - d[3].abs()
    };
    assert!(rec.surface_residuals(level).iter().all(|r| *r < 1e-8));

    let ds = catalog::de_sitter(4, 1.0).unwrap();
    let cone = catalog::light_cone(4, None);
    let ctx = SurfaceContext::new(ds.clone(), cone, &u).unwrap();
    let frame = ctx.frame(&u).unwrap();
    // conformal invariance: the null cone of the origin is the same set in this chart
    let rec = integrate_isotropic_geodesic(&ds, &frame.point, &frame.e1, 1.0, 21).unwrap();
    assert!(!rec.exited);
    let level = |x: &DVector<f64>| x.rows(0, 3).norm() - x[3].abs();
    assert!(rec.surface_residuals(level).iter().all(|r| *r < 1e-8));
    assert!(rec.null_drift() < 1e-7);
}

#[test]
fn cone_has_a_single_focus_at_the_apex() {
    let m = catalog::minkowski(4);
    let apex = v(&[1.0, 0.5, -0.5, 2.0]);
    let patch = catalog::light_cone(4, Some(apex.clone()));
    for u in [v(&[0.5, 0.7, 0.2]), v(&[2.5, 2.0, -1.3])] {
        let base = SurfaceContext::new(m.clone(), patch.clone(), &u).unwrap();
        for c in [0.5, 1.0, 3.0] {
            let ctx = base.clone().with_gauge(GaugeField::scaling(3, 2, c));
            let shape = ctx.shape(&u).unwrap();
            let set = focal_points(&shape, ctx.tolerances());
            assert_eq!(set.count(), 2);
            assert_eq!(set.foci.len(), 1);
            assert_eq!(set.foci[0].multiplicity, 2);
            assert!((&set.foci[0].point - &apex).amax() < 1e-8);
            assert!(set.foci[0].jacobian.abs() < 1e-8);
            assert!((umbilical_focus(&shape, ctx.tolerances()).unwrap() - &apex).amax() < 1e-8);
        }
    }
}

#[test]
fn hyperplane_foci_are_at_infinity() {
    let u = v(&[0.3, 0.2, -0.1]);
    let ctx = SurfaceContext::new(catalog::minkowski(4), catalog::null_hyperplane(4), &u).unwrap();
    let shape = ctx.shape(&u).unwrap();
    let set = focal_points(&shape, ctx.tolerances());
    assert!(set.foci.is_empty());
    assert_eq!(set.at_infinity, 2);
    assert!(matches!(
        umbilical_focus(&shape, ctx.tolerances()),
        Err(Error::Unavailable(_))
    ));
    assert!(regular_segment(&shape, ctx.tolerances(), 1.0, 10.0, 100));
}

/// Classical focal points of the ellipsoid: `y − ν/κ`, reached at time `−1/κ`.
fn ellipsoid_foci(a: f64, b: f64, c: f64, th: f64, ph: f64) -> Vec<DVector<f64>> {
    let (st, ct, sp, cp) = (th.sin(), th.cos(), ph.sin(), ph.cos());
    let y = Vector3::new(a * st * cp, b * st * sp, c * ct);
    let r_t = Vector3::new(a * ct * cp, b * ct * sp, -c * st);
    let r_p = Vector3::new(-a * st * sp, b * st * cp, 0.0);
    let r_tt = Vector3::new(-a * st * cp, -b * st * sp, -c * ct);
    let r_tp = Vector3::new(-a * ct * sp, b * ct * cp, 0.0);
    let r_pp = Vector3::new(-a * st * cp, -b * st * sp, 0.0);
    let mut nu = r_t.cross(&r_p).normalize();
    if nu.dot(&y) < 0.0 {
        nu = -nu;
    }
    let first = nalgebra::Matrix2::new(r_t.dot(&r_t), r_t.dot(&r_p), r_p.dot(&r_t), r_p.dot(&r_p));
    let second = -nalgebra::Matrix2::new(r_tt.dot(&nu), r_tp.dot(&nu), r_tp.dot(&nu), r_pp.dot(&nu));
    let s = first.try_inverse().unwrap() * second;
    let (tr, det) = (s.trace(), s.determinant());
    let disc = (tr * tr / 4.0 - det).sqrt();
    [tr / 2.0 - disc, tr / 2.0 + disc]
        .iter()
        .map(|k| {
            let p = y - nu / *k;
            v(&[p.x, p.y, p.z, -1.0 / k])
        })
        .collect()
}

#[test]
fn ellipsoid_foci_match_classical_focal_surfaces() {
    let (a, b, c) = (1.0, 1.3, 1.7);
    let m = catalog::minkowski(4);
    let patch = catalog::ellipsoid_null_congruence(a, b, c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(s, th, ph) in &[(0.1, 0.5, 0.4), (0.6, 0.9, 0.8), (1.0, 1.2, 1.2)] {
        let u = v(&[s, th, ph]);
        let base = SurfaceContext::new(m.clone(), patch.clone(), &u).unwrap();
        let expected = ellipsoid_foci(a, b, c, th, ph);
        for k in 0..4 {
            let ctx = if k == 0 {
                base.clone()
            } else {
                base.clone().with_gauge(GaugeField::random(&mut rng, &u, 2))
            };
            let shape = ctx.shape(&u).unwrap();
            let mut set = focal_points(&shape, ctx.tolerances());
            assert_eq!(set.count(), 2);
            assert_eq!(set.foci.len(), 2);
            for f in &set.foci {
                assert!(f.jacobian.abs() < 1e-8);
                let hit = expected.iter().map(|e| (e - &f.point).amax()).fold(f64::INFINITY, f64::min);
                assert!(hit < 1e-7, "focus {} off by {hit:e}", f.point);
            }
            attach_exp_images(&m, &shape, &mut set);
            for f in &set.foci {
                assert!((f.exp_image.as_ref().unwrap() - &f.point).amax() < 1e-9);
            }
            // foci lie in the past of the ellipsoid; the future segment is regular
            assert!(set.foci.iter().all(|f| f.s < 0.0));
            assert!(regular_segment(&shape, ctx.tolerances(), 1.0, 10.0, 100));
            assert!(regular_segment(&shape, ctx.tolerances(), -1.0, 10.0, 100));
            assert!(jacobian_det(&shape, 0.0) == 1.0);
        }
    }
}

#[test]
fn generic_point_has_no_umbilical_focus() {
    let u = v(&[0.5, 0.8, 0.7]);
    let ctx = SurfaceContext::new(
        catalog::minkowski(4),
        catalog::ellipsoid_null_congruence(1.0, 1.3, 1.7).unwrap(),
        &u,
    )
    .unwrap();
    let shape = ctx.shape(&u).unwrap();
    assert!(matches!(umbilical_focus(&shape, ctx.tolerances()), Err(Error::NotUmbilical)));
}

#[test]
fn de_sitter_cone_focus_is_stationary_along_the_screen() {
    // In this chart K = λ on the cone of the origin, so the invariant umbilic
    // screen is unavailable; the focus does not move along any screen vector.
    let metric = catalog::de_sitter(4, 1.0).unwrap();
    let patch = catalog::light_cone(4, None);
    for u in [v(&[0.6, 0.9, 0.4]), v(&[1.1, 1.4, -0.7])] {
        let ctx = SurfaceContext::new(metric.clone(), patch.clone(), &u).unwrap();
        let err = construct_screen(&ctx, &u, ScreenSpec::Umbilic).unwrap_err();
        assert_eq!(err.unavailable_reason(), Some(UnavailableReason::KIsEigenvalue));
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..3 {
            let g = ctx.clone().with_gauge(GaugeField::random(&mut rng, &u, 2));
            let frame = g.frame(&u).unwrap();
            for e in &frame.screen {
                let d = focal_displacement(&g, &u, e).unwrap();
                assert!(d.amax() < 1e-5 * e.amax().max(1.0), "{d}");
            }
        }
    }
}

#[test]
fn flat_cone_focus_is_stationary_in_every_direction() {
    let ctx_u = v(&[0.9, 1.0, 0.3]);
    let ctx = SurfaceContext::new(catalog::minkowski(4), catalog::light_cone(4, None), &ctx_u).unwrap();
    let frame = ctx.frame(&ctx_u).unwrap();
    for x in std::iter::once(&frame.e1).chain(frame.screen.iter()) {
        assert!(focal_displacement(&ctx, &ctx_u, x).unwrap().amax() < 1e-6);
    }
}
