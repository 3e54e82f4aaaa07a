//! The grid sweep behind `lightlike analyze`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{AnalysisConfig, Output};
use crate::error::{Error, Result};
use crate::geodesics::{self, FocalSet};
use crate::hypersurface::{classify, verify_lightlike, CausalType, Classification, ShapeData};
use crate::invariants::{self, AbsoluteInvariant, RelativeInvariant};
use crate::normalization::{
    self, construct_screen, projector_distance, screen_connection, ScreenSample, ScreenSpec, TripleNormalization,
};
use crate::nullframe::{FrameField, GaugeField};
use crate::surface::SurfaceContext;
use crate::tensorcalc::{self, MetricField};

pub const CONVENTION: &str = "R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj; \
constant curvature R_ijkl = K (g_ik g_jl - g_il g_jk); frame (e_1, e_a, e_n) with g(e_1, e_n) = -1; \
lambda_ab = g(e_a, nabla_{e_b} e_1); foci at s_a = -1/lambda_a in development coordinates x + s e_1";

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub provenance: Provenance,
    pub config: AnalysisConfig,
    pub summary: Summary,
    pub points: Vec<PointRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub metric: String,
    pub hypersurface: String,
    pub convention: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub params: Vec<f64>,
    pub point: Vec<f64>,
    /// Set when a computation failed at this point for a reason other than
    /// an unavailable screen; the remaining fields are then empty.
    pub error: Option<String>,
    pub shape: Option<ShapeRecord>,
    pub invariants: Option<InvariantRecord>,
    pub sectional: Option<SectionalRecord>,
    pub screens: Vec<ScreenRecord>,
    pub triple: Option<TripleRecord>,
    pub foci: Option<FociRecord>,
    pub connection: Option<ConnectionRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeRecord {
    pub classification: &'static str,
    pub umbilic_factor: Option<f64>,
    pub e1: Vec<f64>,
    pub lambda_ab: Vec<Vec<f64>>,
    pub shape_operator: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub roots: Vec<(f64, usize)>,
    pub lambda_norm: f64,
    pub asymmetry: f64,
    pub geodesic_residual: f64,
    pub frame_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantRecord {
    pub elementary: Vec<f64>,
    pub power_sums: Vec<f64>,
    pub newton_residual: f64,
    /// Absolute invariants by label; `None` when the denominator vanishes.
    pub absolute: BTreeMap<String, Option<f64>>,
    /// `e_1 / I_1`, when `I_1 ≠ 0`.
    pub normalized_e1: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionalRecord {
    /// Extremes of `K_N(σ)` over isotropic planes through `e_1` tangent to the hypersurface.
    pub range: Option<(f64, f64)>,
    /// Largest `|K_N|` over the random planes.
    pub sampled_max_abs: f64,
    pub samples: usize,
    /// `max |(∇λ − λω_1^1)(e_1) + λg⁻¹λ − R_1ab1|`.
    pub generator_identity_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScreenRecord {
    pub label: String,
    /// `constructed` or `unavailable`.
    pub status: &'static str,
    pub reason: Option<&'static str>,
    pub coefficients: Option<Vec<f64>>,
    pub basis: Option<Vec<Vec<f64>>>,
    /// Largest projector distance to the same screen rebuilt under random gauges.
    pub gauge_residual: Option<f64>,
    pub integrable: Option<bool>,
    pub connection_asymmetry: Option<f64>,
    pub level_set_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TripleRecord {
    pub eigenvalues: [f64; 2],
    pub measured_k: Option<[f64; 2]>,
    pub predicted_k: Option<[f64; 2]>,
    pub ratio_transversal: Option<f64>,
    pub predicted_ratio_transversal: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FociRecord {
    #[serde(flatten)]
    pub set: FocalSet,
    pub umbilical_focus: Option<Vec<f64>>,
    /// `det(δ + sλ) > 0` between the point and the nearest focus on either side.
    pub regular_segment: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionRecord {
    pub nu_a: Vec<f64>,
    pub nu_ab: Vec<Vec<f64>>,
    pub asymmetry: f64,
    pub integrable: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub points: usize,
    pub failed_points: usize,
    pub classification: BTreeMap<String, usize>,
    pub eigenvalue_ranges: Vec<(f64, f64)>,
    pub invariant_ranges: Vec<(f64, f64)>,
    pub screens: BTreeMap<String, ScreenSummary>,
    pub finite_foci: usize,
    pub foci_at_infinity: usize,
    pub max_focal_jacobian: f64,
    pub base_connection_integrable: usize,
    pub max_sectional_abs: Option<f64>,
    pub max_generator_identity_residual: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ScreenSummary {
    pub constructed: usize,
    pub unavailable: BTreeMap<&'static str, usize>,
    pub integrable: usize,
    pub max_gauge_residual: f64,
    pub max_level_set_residual: Option<f64>,
}

/// Hex SHA-256 of the config text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Runs the configured sweep. `config_text` only feeds the provenance hash.
pub fn analyze(config: &AnalysisConfig, config_text: &str) -> Result<Report> {
    let (metric, patch) = config.build()?;
    let n = config.grid.len();

    let first_bad = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let u = config.grid.point(i);
            let kind = match verify_lightlike(&patch, &metric, &u) {
                Ok(CausalType::Lightlike) => return None,
                Ok(CausalType::SpacelikeOrTimelike) => "spacelike or timelike tangent plane".to_string(),
                Ok(CausalType::Degenerate) => "radical of dimension above one".to_string(),
                Err(e) => e.to_string(),
            };
            Some((i, u, kind))
        })
        .min_by_key(|(i, _, _)| *i);
    if let Some((index, u, kind)) = first_bad {
        return Err(Error::NonLightlikeGridPoint {
            index,
            params: u.iter().copied().collect(),
            kind,
        });
    }

    let points: Vec<PointRecord> = (0..n)
        .into_par_iter()
        .map(|i| analyze_point(config, &metric, &patch, i))
        .collect();
    let summary = summarize(&points);
    Ok(Report {
        provenance: Provenance {
            tool: "lightlike",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_hash(config_text),
            metric: metric.name().to_string(),
            hypersurface: patch.name().to_string(),
            convention: CONVENTION,
        },
        config: config.clone(),
        summary,
        points,
    })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn analyze_point(
    config: &AnalysisConfig,
    metric: &MetricField,
    patch: &crate::hypersurface::HypersurfacePatch,
    index: usize,
) -> PointRecord {
    let u = config.grid.point(index);
    let mut rec = PointRecord {
        index,
        params: vec(&u),
        point: patch.point(&u).map(|x| vec(&x)).unwrap_or_default(),
        error: None,
        shape: None,
        invariants: None,
        sectional: None,
        screens: Vec::new(),
        triple: None,
        foci: None,
        connection: None,
    };
    if let Err(e) = fill_point(config, metric, patch, &u, &mut rec) {
        rec.error = Some(e.to_string());
        rec.shape = None;
        rec.invariants = None;
        rec.sectional = None;
        rec.screens.clear();
        rec.triple = None;
        rec.foci = None;
        rec.connection = None;
    }
    rec
}

fn fill_point(
    config: &AnalysisConfig,
    metric: &MetricField,
    patch: &crate::hypersurface::HypersurfacePatch,
    u: &DVector<f64>,
    rec: &mut PointRecord,
) -> Result<()> {
    let ctx = SurfaceContext::new(metric.clone(), patch.clone(), u)?.with_tolerances(config.tolerances);
    let tol = *ctx.tolerances();
    let shape = ctx.shape(u)?;
    let class = classify(&shape, &tol);
    let m = shape.screen_dim();
    let mut rng = point_rng(config.gauge_seed, rec.index);

    if config.wants(Output::Shape) {
        rec.shape = Some(ShapeRecord {
            classification: class.label(),
            umbilic_factor: match class {
                Classification::TotallyUmbilical { lambda } => Some(lambda),
                _ => None,
            },
            e1: vec(&shape.frame.e1),
            lambda_ab: rows(&shape.lambda_low),
            shape_operator: rows(&shape.lambda_up),
            eigenvalues: vec(&shape.eigenvalues),
            roots: shape.roots(&tol),
            lambda_norm: shape.lambda_norm(),
            asymmetry: shape.asymmetry,
            geodesic_residual: shape.geodesic_residual,
            frame_residual: shape.frame.residual(),
        });
    }

    if config.wants(Output::Invariants) {
        let set = invariants::invariant_set(&shape);
        let mut absolute = BTreeMap::new();
        if m >= 2 {
            for j in [AbsoluteInvariant::trace_ratio(), AbsoluteInvariant::eigenvalue_ratio()] {
                absolute.insert(j.label(), j.value(&shape, &tol).ok());
            }
        }
        rec.invariants = Some(InvariantRecord {
            newton_residual: set.newton_residual(),
            normalized_e1: invariants::normalized_e1(&shape.frame, set.elementary[0]).ok().map(|v| vec(&v)),
            elementary: set.elementary,
            power_sums: set.power_sums,
            absolute,
        });
    }

    if config.wants(Output::Sectional) {
        rec.sectional = Some(sectional(config, &ctx, u, &shape, &mut rng)?);
    }

    if config.wants(Output::Screens) {
        for spec in screen_specs(m, class) {
            rec.screens.push(screen_record(config, &ctx, u, spec, &spec.label(), &mut rng)?);
        }
        if metric.dim() == 4 {
            let triple = normalization::triple_normalizations_4d(&ctx, u)?;
            let labels = ["triple_lambda2", "triple_lambda3", "triple_lambda2_over_lambda3"];
            for (k, outcome) in triple.screens.iter().enumerate() {
                let spec = TripleNormalization::SPECS[k];
                let r = match outcome {
                    Ok(s) => constructed_record(config, &ctx, u, spec, labels[k], s, &mut rng)?,
                    Err(reason) => unavailable_record(labels[k], *reason),
                };
                rec.screens.push(r);
            }
            rec.triple = Some(TripleRecord {
                eigenvalues: triple.eigenvalues,
                measured_k: triple.measured_k,
                predicted_k: triple.predicted_k,
                ratio_transversal: triple.ratio_transversal,
                predicted_ratio_transversal: triple.predicted_ratio_transversal(),
            });
        }
    }

    if config.wants(Output::Foci) {
        let mut set = geodesics::focal_points(&shape, &tol);
        if config.metric.constant_curvature() != Some(0.0) {
            geodesics::attach_exp_images(metric, &shape, &mut set);
        }
        let far = 1e3 * patch.scale();
        rec.foci = Some(FociRecord {
            set,
            umbilical_focus: geodesics::umbilical_focus(&shape, &tol).ok().map(|v| vec(&v)),
            regular_segment: geodesics::regular_segment(&shape, &tol, 1.0, far, 100)
                && geodesics::regular_segment(&shape, &tol, -1.0, far, 100),
        });
    }

    if config.wants(Output::Connection) {
        let c = normalization::induced_connection(&ctx, u)?;
        rec.connection = Some(ConnectionRecord {
            nu_a: vec(&c.nu_a),
            nu_ab: rows(&c.nu_ab),
            asymmetry: c.asymmetry,
            integrable: c.integrable,
        });
    }
    Ok(())
}

fn screen_specs(m: usize, class: Classification) -> Vec<ScreenSpec> {
    let mut specs = vec![ScreenSpec::Relative {
        invariant: RelativeInvariant::Elementary(1),
    }];
    if m >= 2 {
        specs.push(ScreenSpec::Relative {
            invariant: RelativeInvariant::Elementary(2),
        });
        specs.push(ScreenSpec::Absolute {
            invariant: AbsoluteInvariant::trace_ratio(),
        });
    }
    if matches!(class, Classification::TotallyUmbilical { .. }) {
        specs.push(ScreenSpec::Umbilic);
    }
    specs
}

fn unavailable_record(label: &str, reason: crate::UnavailableReason) -> ScreenRecord {
    ScreenRecord {
        label: label.to_string(),
        status: "unavailable",
        reason: Some(reason.code()),
        coefficients: None,
        basis: None,
        gauge_residual: None,
        integrable: None,
        connection_asymmetry: None,
        level_set_residual: None,
    }
}

fn screen_record(
    config: &AnalysisConfig,
    ctx: &SurfaceContext,
    u: &DVector<f64>,
    spec: ScreenSpec,
    label: &str,
    rng: &mut ChaCha8Rng,
) -> Result<ScreenRecord> {
    match construct_screen(ctx, u, spec) {
        Ok(s) => constructed_record(config, ctx, u, spec, label, &s, rng),
        Err(Error::Unavailable(reason)) => Ok(unavailable_record(label, reason)),
        Err(e) => Err(e),
    }
}

fn constructed_record(
    config: &AnalysisConfig,
    ctx: &SurfaceContext,
    u: &DVector<f64>,
    spec: ScreenSpec,
    label: &str,
    sample: &ScreenSample,
    rng: &mut ChaCha8Rng,
) -> Result<ScreenRecord> {
    let mut residual: f64 = 0.0;
    for _ in 0..config.gauge_reruns {
        let gauged = ctx.clone().with_gauge(GaugeField::random(rng, u, ctx.screen_dim()));
        residual = match construct_screen(&gauged, u, spec) {
            Ok(s) => residual.max(projector_distance(sample, &s)),
            Err(Error::Unavailable(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
    }
    let conn = screen_connection(ctx, u, spec).ok();
    Ok(ScreenRecord {
        label: label.to_string(),
        status: "constructed",
        reason: None,
        coefficients: Some(vec(&sample.coefficients)),
        basis: Some(sample.basis.iter().map(vec).collect()),
        gauge_residual: (config.gauge_reruns > 0).then_some(residual),
        integrable: conn.as_ref().map(|c| c.integrable),
        connection_asymmetry: conn.as_ref().map(|c| c.asymmetry),
        level_set_residual: sample.level_set_residual,
    })
}

fn sectional(
    config: &AnalysisConfig,
    ctx: &SurfaceContext,
    u: &DVector<f64>,
    shape: &ShapeData,
    rng: &mut ChaCha8Rng,
) -> Result<SectionalRecord> {
    let frame = &shape.frame;
    let curv = tensorcalc::riemann(ctx.metric(), &frame.point)?;
    let m = frame.screen_dim();
    let mut max_abs: f64 = 0.0;
    for _ in 0..config.sectional_samples {
        let p = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        if let Ok(k) = invariants::isotropic_sectional_curvature(frame, &p, &curv) {
            max_abs = max_abs.max(k.abs());
        }
    }
    let identity = if shape.lambda_norm() > ctx.tolerances().geodesic_abs {
        Some(invariants::generator_identity(ctx, u)?.residual())
    } else {
        None
    };
    Ok(SectionalRecord {
        range: invariants::sectional_range(frame, &curv),
        sampled_max_abs: max_abs,
        samples: config.sectional_samples,
        generator_identity_residual: identity,
    })
}

fn widen(r: &mut Vec<(f64, f64)>, values: &[f64]) {
    if r.len() < values.len() {
        r.resize(values.len(), (f64::INFINITY, f64::NEG_INFINITY));
    }
    for (slot, v) in r.iter_mut().zip(values) {
        slot.0 = slot.0.min(*v);
        slot.1 = slot.1.max(*v);
    }
}

fn summarize(points: &[PointRecord]) -> Summary {
    let mut s = Summary {
        points: points.len(),
        ..Summary::default()
    };
    for p in points {
        if p.error.is_some() {
            s.failed_points += 1;
            continue;
        }
        if let Some(shape) = &p.shape {
            *s.classification.entry(shape.classification.to_string()).or_default() += 1;
            widen(&mut s.eigenvalue_ranges, &shape.eigenvalues);
        }
        if let Some(inv) = &p.invariants {
            widen(&mut s.invariant_ranges, &inv.elementary);
        }
        if let Some(sec) = &p.sectional {
            let cur = s.max_sectional_abs.unwrap_or(0.0);
            let range_abs = sec.range.map(|(a, b)| a.abs().max(b.abs())).unwrap_or(0.0);
            s.max_sectional_abs = Some(cur.max(sec.sampled_max_abs).max(range_abs));
            if let Some(r) = sec.generator_identity_residual {
                s.max_generator_identity_residual = Some(s.max_generator_identity_residual.unwrap_or(0.0).max(r));
            }
        }
        for sc in &p.screens {
            let e = s.screens.entry(sc.label.clone()).or_default();
            match sc.reason {
                Some(r) => *e.unavailable.entry(r).or_default() += 1,
                None => {
                    e.constructed += 1;
                    if sc.integrable == Some(true) {
                        e.integrable += 1;
                    }
                    e.max_gauge_residual = e.max_gauge_residual.max(sc.gauge_residual.unwrap_or(0.0));
                    if let Some(r) = sc.level_set_residual {
                        e.max_level_set_residual = Some(e.max_level_set_residual.unwrap_or(0.0).max(r));
                    }
                }
            }
        }
        if let Some(f) = &p.foci {
            s.finite_foci += f.set.foci.iter().map(|x| x.multiplicity).sum::<usize>();
            s.foci_at_infinity += f.set.at_infinity;
            for x in &f.set.foci {
                s.max_focal_jacobian = s.max_focal_jacobian.max(x.jacobian.abs());
            }
        }
        if p.connection.as_ref().is_some_and(|c| c.integrable) {
            s.base_connection_integrable += 1;
        }
    }
    s
}
