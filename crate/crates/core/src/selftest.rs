//! Built-in property checks run by `lightlike selftest`.
//!
//! Each check is seeded, so the printed report is reproducible byte for byte.

use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::catalog;
use crate::config::AnalysisConfig;
use crate::emit;
use crate::error::{Error, Result, UnavailableReason};
use crate::geodesics::{self, integrate_isotropic_geodesic};
use crate::hypersurface::{classify, Classification, HypersurfacePatch};
use crate::invariants::{self, AbsoluteInvariant, RelativeInvariant};
use crate::normalization::{
    self, construct_screen, projector_distance, screen_connection, InvariantFieldDerivative, ScreenSpec,
    TripleNormalization,
};
use crate::nullframe::{FrameField, GaugeField};
use crate::surface::SurfaceContext;
use crate::tensorcalc::{self, bilinear, MetricField};

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:>2} {:<34} {}", self.id, self.name, self.detail)
    }
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 11] = [
    ("constant-curvature oracle", constant_curvature),
    ("curvature symmetries", curvature_symmetries),
    ("totally geodesic fixtures", totally_geodesic),
    ("totally umbilical light cone", totally_umbilical),
    ("isotropic sectional curvature", isotropic_sectional),
    ("weight laws", weight_laws),
    ("screens are gauge independent", intrinsic_screens),
    ("screen hypothesis boundary", hypothesis_boundary),
    ("geodesic contracts", geodesic_contracts),
    ("generator derivative identity", generator_identity),
    ("determinism", determinism),
];

pub fn run() -> Vec<CriterionResult> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
            CriterionResult {
                id: i + 1,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn grid(ranges: &[(f64, f64)], counts: &[usize]) -> Vec<DVector<f64>> {
    let mut out = vec![DVector::zeros(ranges.len())];
    for (k, (&(lo, hi), &n)) in ranges.iter().zip(counts).enumerate() {
        out = out
            .into_iter()
            .flat_map(|u| {
                (0..n).map(move |i| {
                    let mut w = u.clone();
                    w[k] = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                    w
                })
            })
            .collect();
    }
    out
}

fn random_point(rng: &mut ChaCha8Rng, metric: &MetricField) -> DVector<f64> {
    if metric.name().starts_with("eddington") {
        v(&[
            rng.random_range(2.5..8.0),
            rng.random_range(0.3..2.8),
            rng.random_range(-3.0..3.0),
            rng.random_range(-2.0..2.0),
        ])
    } else {
        DVector::from_fn(metric.dim(), |_, _| rng.random_range(-1.0..1.0))
    }
}

fn catalog_metrics() -> Result<Vec<MetricField>> {
    Ok(vec![
        catalog::minkowski(4),
        catalog::de_sitter(4, 1.0)?,
        catalog::anti_de_sitter(4, -1.0)?,
        catalog::eddington_finkelstein(1.0)?,
    ])
}

/// A future null vector at `x` whose spatial part is `w`.
fn null_vector(metric: &MetricField, x: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    let g = metric.at(x)?;
    let n = w.len();
    let mut t = DVector::zeros(n);
    t[n - 1] = 1.0;
    let a = bilinear(&g, &t, &t);
    let b = 2.0 * bilinear(&g, w, &t);
    let c = bilinear(&g, w, w);
    let alpha = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    Ok(w + t * alpha)
}

fn constant_curvature() -> Result<(bool, String)> {
    let metric = catalog::de_sitter(4, 1.0)?.without_derivatives();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let x = random_point(&mut rng, &metric);
        let r = tensorcalc::riemann(&metric, &x)?;
        let exact = tensorcalc::constant_curvature_riemann(1.0, &metric, &x)?;
        worst = worst.max(r.max_difference(&exact) / exact.max_abs());
    }
    Ok((worst < 1e-5, format!("max relative error {worst:.2e} (finite differences, 25 points)")))
}

fn curvature_symmetries() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for metric in catalog_metrics()? {
        for _ in 0..25 {
            let x = random_point(&mut rng, &metric);
            let r = tensorcalc::riemann(&metric, &x)?;
            worst = worst.max(r.symmetry_residuals().max() / r.max_abs().max(1.0));
        }
    }
    Ok((worst < 1e-6, format!("max residual {worst:.2e} over 4 metrics x 25 points")))
}

fn all_screens_unavailable(ctx: &SurfaceContext, u: &DVector<f64>, expect: UnavailableReason) -> Result<bool> {
    let specs = [
        ScreenSpec::Relative {
            invariant: RelativeInvariant::Elementary(1),
        },
        ScreenSpec::Relative {
            invariant: RelativeInvariant::Elementary(2),
        },
        ScreenSpec::Absolute {
            invariant: AbsoluteInvariant::trace_ratio(),
        },
        ScreenSpec::Absolute {
            invariant: AbsoluteInvariant::eigenvalue_ratio(),
        },
    ];
    for spec in specs {
        match construct_screen(ctx, u, spec) {
            Err(Error::Unavailable(r)) if r == expect => {}
            Err(Error::Unavailable(_)) | Ok(_) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    let triple = normalization::triple_normalizations_4d(ctx, u)?;
    Ok(triple.screens.iter().all(|s| s.as_ref().err() == Some(&expect)))
}

fn totally_geodesic() -> Result<(bool, String)> {
    let metric = catalog::minkowski(4);
    let patch = catalog::null_hyperplane(4);
    let mut plane_max: f64 = 0.0;
    let mut unavailable = true;
    for u in grid(&[(-2.0, 2.0); 3], &[3, 3, 3]) {
        let ctx = SurfaceContext::new(metric.clone(), patch.clone(), &u)?;
        plane_max = plane_max.max(ctx.shape(&u)?.lambda_norm());
        unavailable &= all_screens_unavailable(&ctx, &u, UnavailableReason::TotallyGeodesic)?;
    }
    let ef = catalog::eddington_finkelstein(1.0)?;
    let horizon = catalog::schwarzschild_horizon(1.0)?;
    let mut horizon_max: f64 = 0.0;
    let mut classified = true;
    for u in grid(&[(-2.0, 2.0), (0.3, 2.8), (-3.0, 3.0)], &[3, 3, 3]) {
        let ctx = SurfaceContext::new(ef.clone(), horizon.clone(), &u)?;
        let shape = ctx.shape(&u)?;
        horizon_max = horizon_max.max(shape.lambda_norm());
        classified &= classify(&shape, ctx.tolerances()) == Classification::TotallyGeodesic;
    }
    let ok = plane_max < 1e-8 && unavailable && horizon_max < 1e-5 && classified;
    Ok((
        ok,
        format!(
            "hyperplane |lambda| {plane_max:.1e}, screens unavailable: {unavailable}; horizon |lambda| {horizon_max:.1e}, classified: {classified}"
        ),
    ))
}

fn totally_umbilical() -> Result<(bool, String)> {
    let metric = catalog::minkowski(4);
    let apex = v(&[0.5, -0.25, 1.0, 0.75]);
    let patch = catalog::light_cone(4, Some(apex.clone()));
    let mut lambda_err: f64 = 0.0;
    let mut focus_err: f64 = 0.0;
    let mut structure = true;
    for u in grid(&[(0.5, 3.0), (0.4, 2.7), (-3.0, 3.0)], &[3, 3, 3]) {
        let base = SurfaceContext::new(metric.clone(), patch.clone(), &u)?;
        for c in [0.5, 1.0, 3.0] {
            let ctx = base.clone().with_gauge(GaugeField::scaling(3, 2, c));
            let shape = ctx.shape(&u)?;
            match classify(&shape, ctx.tolerances()) {
                Classification::TotallyUmbilical { lambda } => {
                    // λ = 1/s for the generator normalized to unit time component
                    lambda_err = lambda_err.max((lambda * u[0] / c - 1.0).abs());
                }
                _ => structure = false,
            }
            let set = geodesics::focal_points(&shape, ctx.tolerances());
            structure &= set.foci.len() == 1 && set.foci[0].multiplicity == 2 && set.count() == 2;
            for f in &set.foci {
                focus_err = focus_err.max((&f.point - &apex).amax());
            }
        }
    }
    let ok = structure && lambda_err < 1e-6 && focus_err < 1e-8;
    Ok((
        ok,
        format!("lambda = 1/s rel err {lambda_err:.1e}; single double focus: {structure}; |F - apex| {focus_err:.1e}"),
    ))
}

fn isotropic_sectional() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let patch = catalog::light_cone(4, None);
    for metric in [catalog::minkowski(4), catalog::de_sitter(4, 1.0)?, catalog::anti_de_sitter(4, -1.0)?] {
        for u in grid(&[(0.3, 1.2), (0.4, 2.7), (-3.0, 3.0)], &[2, 3, 3]) {
            let ctx = SurfaceContext::new(metric.clone(), patch.clone(), &u)?;
            let frame = ctx.frame(&u)?;
            let curv = tensorcalc::riemann(&metric, &frame.point)?;
            for _ in 0..10 {
                let p = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
                worst = worst.max(invariants::isotropic_sectional_curvature(&frame, &p, &curv)?.abs());
            }
        }
    }
    // scaling, on a metric where K_N does not vanish
    let ef = catalog::eddington_finkelstein(1.0)?;
    let mut scale_err: f64 = 0.0;
    for _ in 0..10 {
        let x = random_point(&mut rng, &ef);
        let g = ef.at(&x)?;
        let curv = tensorcalc::riemann(&ef, &x)?;
        let w = v(&[rng.random_range(-0.5..0.5), 0.3, 0.2, 0.0]);
        let nv = null_vector(&ef, &x, &w)?;
        // P: combination of two coordinate vectors that is g-orthogonal to N
        let q = v(&[0.0, 1.0, -0.4, 0.0]);
        let t = v(&[0.0, 0.0, 1.0, 0.0]);
        let p = &q * bilinear(&g, &t, &nv) - &t * bilinear(&g, &q, &nv);
        let k1 = invariants::sectional_curvature(&g, &curv, &nv, &p)?;
        for c in [0.5, 3.0] {
            let kc = invariants::sectional_curvature(&g, &curv, &(&nv * c), &p)?;
            scale_err = scale_err.max((kc / (c * c * k1) - 1.0).abs());
        }
    }
    let ok = worst < 1e-6 && scale_err < 1e-6;
    Ok((ok, format!("max |K_N| {worst:.1e} on constant curvature; c^2 scaling rel err {scale_err:.1e}")))
}

fn ellipsoid() -> Result<(MetricField, HypersurfacePatch)> {
    Ok((catalog::minkowski(4), catalog::ellipsoid_null_congruence(1.0, 1.3, 1.7)?))
}

fn weight_laws() -> Result<(bool, String)> {
    let (metric, patch) = ellipsoid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut rel_err: f64 = 0.0;
    let mut e1_err: f64 = 0.0;
    let mut abs_err: f64 = 0.0;
    for u in [v(&[0.2, 0.6, 0.5]), v(&[0.8, 1.1, 1.0])] {
        let base = SurfaceContext::new(metric.clone(), patch.clone(), &u)?;
        let shape = base.shape(&u)?;
        let set = invariants::invariant_set(&shape);
        let e1 = invariants::normalized_e1(&shape.frame, set.elementary[0])?;
        for c in [0.5, 3.0] {
            let s = base.clone().with_gauge(GaugeField::scaling(3, 2, c)).shape(&u)?;
            let sc = invariants::invariant_set(&s);
            for p in 0..2 {
                rel_err = rel_err.max((sc.elementary[p] / (set.elementary[p] * c.powi(p as i32 + 1)) - 1.0).abs());
                rel_err = rel_err.max((sc.eigenvalues[p] / (set.eigenvalues[p] * c) - 1.0).abs());
            }
            let e1c = invariants::normalized_e1(&s.frame, sc.elementary[0])?;
            e1_err = e1_err.max((&e1c - &e1).amax() / e1.amax());
        }
        let tol = *base.tolerances();
        let js = [AbsoluteInvariant::trace_ratio(), AbsoluteInvariant::eigenvalue_ratio()];
        let j0: Vec<f64> = js.iter().map(|j| j.value(&shape, &tol)).collect::<Result<_>>()?;
        for _ in 0..20 {
            let s = base.clone().with_gauge(GaugeField::random(&mut rng, &u, 2)).shape(&u)?;
            for (j, v0) in js.iter().zip(&j0) {
                abs_err = abs_err.max((j.value(&s, &tol)? / v0 - 1.0).abs());
            }
        }
    }
    let ok = rel_err < 1e-6 && e1_err < 1e-6 && abs_err < 1e-6;
    Ok((
        ok,
        format!("I_p, lambda_a scaling {rel_err:.1e}; normalized e_1 {e1_err:.1e}; absolute invariants {abs_err:.1e}"),
    ))
}

fn intrinsic_screens() -> Result<(bool, String)> {
    let (metric, patch) = ellipsoid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let specs = [
        ScreenSpec::Relative {
            invariant: RelativeInvariant::Elementary(1),
        },
        ScreenSpec::Relative {
            invariant: RelativeInvariant::Elementary(2),
        },
        ScreenSpec::Absolute {
            invariant: AbsoluteInvariant::trace_ratio(),
        },
        TripleNormalization::SPECS[2],
    ];
    let mut spread: f64 = 0.0;
    let mut level: f64 = 0.0;
    let mut integrable = true;
    for u in grid(&[(0.1, 1.0), (0.5, 1.2), (0.4, 1.2)], &[2, 2, 2]) {
        let ctx = SurfaceContext::new(metric.clone(), patch.clone(), &u)?;
        for spec in specs {
            let reference = construct_screen(&ctx, &u, spec)?;
            for _ in 0..20 {
                let gauged = ctx.clone().with_gauge(GaugeField::random(&mut rng, &u, 2));
                spread = spread.max(projector_distance(&reference, &construct_screen(&gauged, &u, spec)?));
            }
            if let ScreenSpec::Absolute { .. } = spec {
                level = level.max(reference.level_set_residual.unwrap_or(f64::INFINITY));
                integrable &= screen_connection(&ctx, &u, spec)?.integrable;
            }
        }
    }
    let ok = spread < 1e-5 && level < 1e-6 && integrable;
    Ok((
        ok,
        format!("projector spread {spread:.1e} over 20 gauges; level-set residual {level:.1e}; integrable: {integrable}"),
    ))
}

fn hypothesis_boundary() -> Result<(bool, String)> {
    let (metric, patch) = ellipsoid()?;
    let u = v(&[0.5, 0.8, 0.7]);
    let ctx = SurfaceContext::new(metric, patch, &u)?;
    let shape = ctx.shape(&u)?;
    let forced = InvariantFieldDerivative {
        value: shape.eigenvalues[0],
        weight: 1,
        k: shape.eigenvalues[0],
        k_a: DVector::from_element(2, 0.3),
    };
    let forced_ok = matches!(
        normalization::screen_from_relative_invariant(&shape, &forced),
        Err(Error::Unavailable(UnavailableReason::KIsEigenvalue))
    );
    let triple = normalization::triple_normalizations_4d(&ctx, &u)?;
    let proportional = triple.screens[..2]
        .iter()
        .all(|s| s.as_ref().err() == Some(&UnavailableReason::KProportionalToEigenvalues));
    let ratio = triple.screens[2].is_ok();
    Ok((
        forced_ok && proportional && ratio,
        format!("forced K = lambda rejected: {forced_ok}; flat relative screens proportional: {proportional}; ratio screen built: {ratio}"),
    ))
}

fn geodesic_contracts() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut drift: f64 = 0.0;
    let mut exited = false;
    for metric in catalog_metrics()? {
        for _ in 0..3 {
            let x0 = if metric.name().starts_with("eddington") {
                v(&[4.0, 1.2, 0.4, 0.0])
            } else {
                DVector::from_fn(4, |_, _| rng.random_range(-0.5..0.5))
            };
            let mut w = DVector::from_fn(4, |_, _| rng.random_range(-0.3..0.3));
            w[3] = 0.0;
            if metric.name().starts_with("eddington") {
                w[0] = 0.5;
            }
            let v0 = null_vector(&metric, &x0, &w)?;
            let rec = integrate_isotropic_geodesic(&metric, &x0, &v0, 5.0, 51)?;
            exited |= rec.exited;
            drift = drift.max(rec.null_drift());
        }
    }
    let flat = catalog::minkowski(4);
    let mut line: f64 = 0.0;
    for _ in 0..3 {
        let x0 = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
        let mut w = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        w[3] = 0.0;
        let v0 = null_vector(&flat, &x0, &w)?;
        let rec = integrate_isotropic_geodesic(&flat, &x0, &v0, 5.0, 26)?;
        for (s, x) in rec.s.iter().zip(&rec.x) {
            line = line.max((x - (&x0 + &v0 * *s)).amax());
        }
    }
    let apex = v(&[0.2, -0.1, 0.3, 0.5]);
    let patch = catalog::light_cone(4, Some(apex.clone()));
    let mut cone: f64 = 0.0;
    for u in grid(&[(0.5, 1.5), (0.4, 2.7), (-3.0, 3.0)], &[2, 2, 2]) {
        let ctx = SurfaceContext::new(flat.clone(), patch.clone(), &u)?;
        let frame = ctx.frame(&u)?;
        let rec = integrate_isotropic_geodesic(&flat, &frame.point, &frame.e1, 5.0, 51)?;
        for x in &rec.x {
            let d = x - &apex;
            cone = cone.max((d.rows(0, 3).norm() - d[3].abs()).abs());
        }
    }
    let ok = !exited && drift < 1e-7 && line < 1e-10 && cone < 1e-8;
    Ok((
        ok,
        format!("null drift {drift:.1e}; straight-line error {line:.1e}; cone residual {cone:.1e}"),
    ))
}

fn generator_identity() -> Result<(bool, String)> {
    let patch = catalog::light_cone(4, None);
    let mut worst: f64 = 0.0;
    let mut curvature: f64 = 0.0;
    for (metric, apexless) in [(catalog::de_sitter(4, 1.0)?, true), (catalog::de_sitter(4, 0.25)?, true)] {
        let _ = apexless;
        for u in grid(&[(0.4, 1.2), (0.5, 2.5), (-2.0, 2.0)], &[2, 2, 2]) {
            let ctx = SurfaceContext::new(metric.clone(), patch.clone(), &u)?;
            let id = invariants::generator_identity(&ctx, &u)?;
            worst = worst.max((&id.derivative - &id.quadratic).amax());
            curvature = curvature.max(id.curvature.amax());
        }
    }
    let ok = worst < 1e-4 && curvature < 1e-6;
    Ok((
        ok,
        format!("max |D lambda + lambda g^-1 lambda| {worst:.1e}; max |R_1ab1| {curvature:.1e}"),
    ))
}

pub const DETERMINISM_CONFIG: &str = r#"metric.name = "minkowski"
metric.dim = 4
hypersurface.name = "ellipsoid_null_congruence"
hypersurface.a = 1.0
hypersurface.b = 1.3
hypersurface.c = 1.7
grid.counts = [2, 2, 3]
grid.ranges = [[0.2, 0.8], [0.6, 1.1], [0.5, 1.1]]
gauge_seed = 11
gauge_reruns = 2
"#;

fn emitted(report: &analysis::Report) -> Result<Vec<u8>> {
    let mut out = emit::table_bytes(report)?;
    out.extend(emit::structured_bytes(report)?);
    for (_, text) in emit::plotdata_files(report) {
        out.extend(text.into_bytes());
    }
    Ok(out)
}

fn determinism() -> Result<(bool, String)> {
    let cfg = AnalysisConfig::parse(DETERMINISM_CONFIG)?;
    let mut runs = Vec::new();
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Unsupported(e.to_string()))?;
        let report = pool.install(|| analysis::analyze(&cfg, DETERMINISM_CONFIG))?;
        runs.push(emitted(&report)?);
    }
    let same = runs[0] == runs[1];
    Ok((
        same,
        format!("analyze + emit on 1 and 3 threads: {} bytes, identical: {same}", runs[0].len()),
    ))
}
