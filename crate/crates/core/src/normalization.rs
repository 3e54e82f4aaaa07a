//! Invariant screen distributions and the connections they induce.
//!
//! A screen is given by vectors `ẽ_a = e_a + L_a e_1`. For a relative
//! invariant `I` of weight `w`,
//!
//! ```text
//! d ln|I| / w − ω_1^1 = −K ω^1 − K_a ω^a
//! ```
//!
//! and when `K` is not an eigenvalue of `λ^a_b` the screen with
//! `L = (λ_ab g^{bc} − K δ)^{-1} K` does not depend on the frame. For an
//! absolute invariant `J` with `dJ = K ω^1 + K̃_a ω^a` and `K ≠ 0`, the screen
//! `L_a = −K̃_a / K` is tangent to the level sets of `J`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result, UnavailableReason};
use crate::fd::{self, FdPolicy, Stencil};
use crate::hypersurface::{classify, Classification, ShapeData};
use crate::invariants::{AbsoluteInvariant, RelativeInvariant};
use crate::linalg;
use crate::nullframe::{self, FrameField, IsotropicFrame};
use crate::surface::SurfaceContext;
use crate::tensorcalc::{self, MetricField};

/// Smallest singular value of `Λ` relative to `max(|λ|, |K|)` below which `K` counts as an eigenvalue.
pub const EIGENVALUE_GAP: f64 = 1e-6;
/// Relative size of `K_2 λ_3 − K_3 λ_2` below which `K_a` is proportional to `λ_a`.
pub const PROPORTIONALITY_TOL: f64 = 1e-6;
/// `|K|` relative to `|dJ|` below which level sets are not transversal to the generators.
pub const TRANSVERSALITY_TOL: f64 = 1e-6;
/// `|ν_ab − ν_ba|` relative to `max(1, |ν|)` below which a screen is integrable.
pub const INTEGRABILITY_TOL: f64 = 1e-5;
/// Tangent vectors may have at most this (relative) `e_n` component in a reduced frame.
pub const TANGENCY_TOL: f64 = 1e-8;

fn unavailable(reason: UnavailableReason) -> Error {
    Error::Unavailable(reason)
}

/// Coefficients of `d ln|I| / w − ω_1^1 = −K ω^1 − K_a ω^a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantFieldDerivative {
    pub value: f64,
    pub weight: u32,
    pub k: f64,
    pub k_a: DVector<f64>,
}

/// Differentiates `ln|I|` along the patch directions and decomposes the result on the coframe.
pub fn invariant_log_derivative<F, I>(
    field: &F,
    u: &DVector<f64>,
    weight: u32,
    invariant: I,
) -> Result<InvariantFieldDerivative>
where
    F: FrameField + ?Sized,
    I: Fn(&DVector<f64>) -> Result<f64>,
{
    let value = invariant(u)?;
    if value == 0.0 || !value.is_finite() {
        return Err(unavailable(UnavailableReason::VanishingInvariant));
    }
    let sign = value.signum();
    let frame = field.frame(u)?;
    let coframe = nullframe::coframe_matrix(field, u, &frame)?;
    let p = field.params();
    let rel = field.steps().invariant;
    let mut measured = DMatrix::zeros(p, 1);
    for k in 0..p {
        let dlog: f64 = fd::partial(
            |v| {
                let i = invariant(v)?;
                if i.signum() != sign || i == 0.0 {
                    return Err(unavailable(UnavailableReason::VanishingInvariant));
                }
                Ok(i.abs().ln())
            },
            u,
            k,
            rel,
            Stencil::Fourth,
        )?;
        let mut dir = DVector::zeros(p);
        dir[k] = 1.0;
        let w11 = nullframe::connection_along(field, u, &dir)?.omega(0, 0);
        measured[(k, 0)] = dlog / weight as f64 - w11;
    }
    let (coeffs, _) = nullframe::decompose_on_coframe(&coframe, &measured);
    Ok(InvariantFieldDerivative {
        value,
        weight,
        k: -coeffs[(0, 0)],
        k_a: DVector::from_fn(p - 1, |a, _| -coeffs[(a + 1, 0)]),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenMethod {
    AbsoluteInvariant,
    RelativeInvariant,
    LevelSet4d,
}

/// A screen subspace at one point.
#[derive(Clone, Debug)]
pub struct ScreenSample {
    pub params: DVector<f64>,
    pub method: ScreenMethod,
    /// `L_a` in the frame below.
    pub coefficients: DVector<f64>,
    pub frame: IsotropicFrame,
    /// `ẽ_a = e_a + L_a e_1`.
    pub basis: Vec<DVector<f64>>,
    /// For level-set screens: the `ω^1` coefficient of `dJ`.
    pub transversal: Option<f64>,
    /// For level-set screens: `max_a |dJ(ẽ_a)| / |dJ|`, measured directly.
    pub level_set_residual: Option<f64>,
}

impl ScreenSample {
    fn new(params: &DVector<f64>, method: ScreenMethod, frame: &IsotropicFrame, l: DVector<f64>) -> Self {
        let basis = frame
            .screen
            .iter()
            .enumerate()
            .map(|(a, e)| e + &frame.e1 * l[a])
            .collect();
        ScreenSample {
            params: params.clone(),
            method,
            coefficients: l,
            frame: frame.clone(),
            basis,
            transversal: None,
            level_set_residual: None,
        }
    }

    pub fn point(&self) -> &DVector<f64> {
        &self.frame.point
    }

    /// The `g`-orthogonal projector onto the screen.
    pub fn projector(&self) -> DMatrix<f64> {
        linalg::metric_projector(&self.frame.metric, &linalg::columns(&self.basis))
            .expect("a spacelike screen has an invertible gram matrix")
    }

    /// The frame `(e_1, ẽ_a, ẽ_n)` adapted to this screen.
    pub fn reduced_frame(&self) -> IsotropicFrame {
        let en = nullframe::complete_transversal(&self.frame.metric, &self.frame.e1, &self.basis);
        IsotropicFrame {
            point: self.frame.point.clone(),
            metric: self.frame.metric.clone(),
            e1: self.frame.e1.clone(),
            screen: self.basis.clone(),
            en,
        }
    }
}

/// Frobenius distance between screen projectors.
pub fn projector_distance(a: &ScreenSample, b: &ScreenSample) -> f64 {
    (a.projector() - b.projector()).norm()
}

/// Screen normalized by a relative invariant whose derivative is `deriv`.
pub fn screen_from_relative_invariant(shape: &ShapeData, deriv: &InvariantFieldDerivative) -> Result<ScreenSample> {
    let m = shape.screen_dim();
    let g_inv = shape
        .screen_gram
        .clone()
        .try_inverse()
        .ok_or(Error::FrameResidual { residual: f64::INFINITY })?;
    let lam = &shape.lambda_low * g_inv - DMatrix::identity(m, m) * deriv.k;
    let scale = shape.eigenvalues.amax().max(deriv.k.abs());
    let sv = lam.clone().singular_values();
    if !(sv.min() > EIGENVALUE_GAP * scale) {
        return Err(unavailable(UnavailableReason::KIsEigenvalue));
    }
    let l = lam
        .lu()
        .solve(&deriv.k_a)
        .ok_or(unavailable(UnavailableReason::KIsEigenvalue))?;
    Ok(ScreenSample::new(&shape.params, ScreenMethod::RelativeInvariant, &shape.frame, l))
}

/// Screen tangent to the level sets of the absolute invariant `j`.
pub fn screen_from_absolute_invariant<F, J>(field: &F, u: &DVector<f64>, j: J) -> Result<ScreenSample>
where
    F: FrameField + ?Sized,
    J: Fn(&DVector<f64>) -> Result<f64>,
{
    absolute_screen(field, u, j, true)
}

fn absolute_screen<F, J>(field: &F, u: &DVector<f64>, j: J, measure: bool) -> Result<ScreenSample>
where
    F: FrameField + ?Sized,
    J: Fn(&DVector<f64>) -> Result<f64>,
{
    let frame = field.frame(u)?;
    let coframe = nullframe::coframe_matrix(field, u, &frame)?;
    let p = field.params();
    let rel = field.steps().invariant;
    let j0 = j(u)?;
    let mut measured = DMatrix::zeros(p, 1);
    for k in 0..p {
        measured[(k, 0)] = fd::partial(&j, u, k, rel, Stencil::Fourth)?;
    }
    let (coeffs, _) = nullframe::decompose_on_coframe(&coframe, &measured);
    let coeffs = coeffs.column(0).into_owned();
    let k = coeffs[0];
    let norm = coeffs.norm();
    if norm <= TRANSVERSALITY_TOL * j0.abs().max(1.0) || k.abs() <= TRANSVERSALITY_TOL * norm {
        return Err(unavailable(UnavailableReason::NonTransversal));
    }
    let l = DVector::from_fn(p - 1, |a, _| -coeffs[a + 1] / k);
    let mut sample = ScreenSample::new(u, ScreenMethod::AbsoluteInvariant, &frame, l);
    sample.transversal = Some(k);
    if !measure {
        return Ok(sample);
    }
    let mut worst: f64 = 0.0;
    for e in &sample.basis {
        let du = nullframe::parameter_direction(field, u, e)?;
        let dj: f64 = fd::directional(&j, u, &du, rel, Stencil::Fourth)?;
        worst = worst.max(dj.abs());
    }
    sample.level_set_residual = Some(worst / norm);
    Ok(sample)
}

/// Which invariant a screen is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScreenSpec {
    Relative { invariant: RelativeInvariant },
    Absolute { invariant: AbsoluteInvariant },
    /// Relative invariant `λ` of a totally umbilical hypersurface.
    Umbilic,
}

impl ScreenSpec {
    pub fn label(&self) -> String {
        match self {
            ScreenSpec::Relative { invariant } => format!("relative_{}", invariant.label()),
            ScreenSpec::Absolute { invariant } => format!("absolute_{}", invariant.label().replace('/', "_over_")),
            ScreenSpec::Umbilic => "umbilic".into(),
        }
    }

    fn uses_eigenvalues(&self) -> bool {
        match self {
            ScreenSpec::Relative { invariant } => matches!(invariant, RelativeInvariant::Eigenvalue(_)),
            ScreenSpec::Absolute { invariant } => {
                matches!(invariant.num, RelativeInvariant::Eigenvalue(_))
                    || matches!(invariant.den, RelativeInvariant::Eigenvalue(_))
            }
            ScreenSpec::Umbilic => false,
        }
    }
}

fn relative_value(ctx: &SurfaceContext, inv: RelativeInvariant, v: &DVector<f64>) -> Result<f64> {
    inv.value(&ctx.shape(v)?)
}

/// Runs the construction named by `spec` at `u`.
///
/// Hypothesis failures come back as [`Error::Unavailable`] with a reason code.
pub fn construct_screen(ctx: &SurfaceContext, u: &DVector<f64>, spec: ScreenSpec) -> Result<ScreenSample> {
    let shape = ctx.shape(u)?;
    construct_screen_with(ctx, u, spec, &shape, true)
}

fn construct_screen_with(
    ctx: &SurfaceContext,
    u: &DVector<f64>,
    spec: ScreenSpec,
    shape: &ShapeData,
    measure: bool,
) -> Result<ScreenSample> {
    let tol = ctx.tolerances();
    let class = classify(shape, tol);
    if class == Classification::TotallyGeodesic {
        return Err(unavailable(UnavailableReason::TotallyGeodesic));
    }
    if spec.uses_eigenvalues() && shape.roots(tol).len() < shape.screen_dim() {
        return Err(unavailable(UnavailableReason::EqualEigenvalues));
    }
    match spec {
        ScreenSpec::Relative { invariant } => relative_screen(ctx, u, invariant, shape),
        ScreenSpec::Umbilic => {
            if !matches!(class, Classification::TotallyUmbilical { .. }) {
                return Err(Error::NotUmbilical);
            }
            relative_screen(ctx, u, RelativeInvariant::Mean, shape)
        }
        ScreenSpec::Absolute { invariant } => {
            invariant.value(shape, tol).map_err(|e| match e {
                Error::VanishingDenominator { .. } => unavailable(UnavailableReason::VanishingInvariant),
                other => other,
            })?;
            absolute_screen(ctx, u, |v| invariant.value(&ctx.shape(v)?, tol), measure)
        }
    }
}

fn relative_screen(
    ctx: &SurfaceContext,
    u: &DVector<f64>,
    invariant: RelativeInvariant,
    shape: &ShapeData,
) -> Result<ScreenSample> {
    if !(invariant.weight_one_value(shape)?.abs() > ctx.tolerances().geodesic_abs) {
        return Err(unavailable(UnavailableReason::VanishingInvariant));
    }
    let deriv = invariant_log_derivative(ctx, u, invariant.weight(), |v| relative_value(ctx, invariant, v))?;
    screen_from_relative_invariant(shape, &deriv)
}

/// The frame field `(e_1, ẽ_a, ẽ_n)` of an invariant screen.
pub struct ReducedFrameField<'a> {
    pub ctx: &'a SurfaceContext,
    pub spec: ScreenSpec,
}

impl FrameField for ReducedFrameField<'_> {
    fn metric(&self) -> &MetricField {
        self.ctx.metric()
    }

    fn point(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.ctx.point(u)
    }

    fn tangent_basis(&self, u: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        self.ctx.tangent_basis(u)
    }

    fn frame(&self, u: &DVector<f64>) -> Result<IsotropicFrame> {
        // the level-set residual is a diagnostic; skip it at every stencil point
        let shape = self.ctx.shape(u)?;
        construct_screen_with(self.ctx, u, self.spec, &shape, false).map(|s| s.reduced_frame())
    }

    fn steps(&self) -> FdPolicy {
        self.ctx.steps()
    }

    fn frame_stencil(&self) -> (f64, Stencil) {
        (self.steps().screen, Stencil::Fourth)
    }
}

/// Coefficients of `ω_a^1 = ν_a ω^1 + ν_ab ω^b` for a frame field whose screen is fixed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InducedConnection {
    pub nu_a: DVector<f64>,
    pub nu_ab: DMatrix<f64>,
    /// `|ν_ab − ν_ba|_F / 2`.
    pub asymmetry: f64,
    pub integrable: bool,
    /// Largest relative `e_n` component of a tangent vector in the reduced frame.
    pub tangency_residual: f64,
}

pub fn induced_connection<F: FrameField + ?Sized>(field: &F, u: &DVector<f64>) -> Result<InducedConnection> {
    let frame = field.frame(u)?;
    let p = field.params();
    let m = p - 1;
    let n = frame.dim();
    let mut tangency: f64 = 0.0;
    for t in field.tangent_basis(u)? {
        let c = frame.components(&t);
        tangency = tangency.max(c[n - 1].abs() / c.amax().max(f64::MIN_POSITIVE));
    }
    if !(tangency <= TANGENCY_TOL) {
        return Err(Error::InconsistentScreen { residual: tangency });
    }
    let coframe = nullframe::coframe_matrix(field, u, &frame)?;
    let mut measured = DMatrix::zeros(p, m);
    for k in 0..p {
        let mut dir = DVector::zeros(p);
        dir[k] = 1.0;
        let conn = nullframe::connection_along(field, u, &dir)?;
        for a in 0..m {
            measured[(k, a)] = conn.omega(a + 1, 0);
        }
    }
    let (coeffs, residual) = nullframe::decompose_on_coframe(&coframe, &measured);
    if !(residual <= 1e-8 * measured.amax().max(1.0)) {
        return Err(Error::InconsistentScreen { residual });
    }
    let nu_a = DVector::from_fn(m, |a, _| coeffs[(0, a)]);
    let nu_ab = DMatrix::from_fn(m, m, |a, b| coeffs[(b + 1, a)]);
    let asymmetry = linalg::asymmetry(&nu_ab);
    Ok(InducedConnection {
        integrable: asymmetry <= INTEGRABILITY_TOL * nu_ab.norm().max(1.0),
        nu_a,
        nu_ab,
        asymmetry,
        tangency_residual: tangency,
    })
}

/// Induced connection of the invariant screen `spec` at `u`.
pub fn screen_connection(ctx: &SurfaceContext, u: &DVector<f64>, spec: ScreenSpec) -> Result<InducedConnection> {
    induced_connection(&ReducedFrameField { ctx, spec }, u)
}

pub type ScreenOutcome = std::result::Result<ScreenSample, UnavailableReason>;

/// The three screens of a four-dimensional generic hypersurface.
#[derive(Clone, Debug)]
pub struct TripleNormalization {
    pub eigenvalues: [f64; 2],
    /// `ω^1` coefficients `K_2, K_3` of the eigenvalue log-derivatives, measured.
    pub measured_k: Option<[f64; 2]>,
    /// `K_a = λ_a − R_{1aa1}/λ_a` on the eigenvectors.
    pub predicted_k: Option<[f64; 2]>,
    /// `ω^1` coefficient of `d ln|λ_2/λ_3|`, measured.
    pub ratio_transversal: Option<f64>,
    /// screens from `λ_2`, from `λ_3`, and from `λ_2/λ_3`
    pub screens: [ScreenOutcome; 3],
}

impl TripleNormalization {
    pub const SPECS: [ScreenSpec; 3] = [
        ScreenSpec::Relative {
            invariant: RelativeInvariant::Eigenvalue(0),
        },
        ScreenSpec::Relative {
            invariant: RelativeInvariant::Eigenvalue(1),
        },
        ScreenSpec::Absolute {
            invariant: AbsoluteInvariant {
                num: RelativeInvariant::Eigenvalue(0),
                num_pow: 1,
                den: RelativeInvariant::Eigenvalue(1),
                den_pow: 1,
            },
        },
    ];

    fn all(eigenvalues: [f64; 2], reason: UnavailableReason) -> Self {
        TripleNormalization {
            eigenvalues,
            measured_k: None,
            predicted_k: None,
            ratio_transversal: None,
            screens: [Err(reason), Err(reason), Err(reason)],
        }
    }

    /// The `ω^1` coefficient of `d ln|λ_2/λ_3|` predicted from the measured `K_a`: `K_3 − K_2`.
    pub fn predicted_ratio_transversal(&self) -> Option<f64> {
        self.measured_k.map(|k| k[1] - k[0])
    }
}

fn outcome(r: Result<ScreenSample>) -> Result<ScreenOutcome> {
    match r {
        Ok(s) => Ok(Ok(s)),
        Err(Error::Unavailable(reason)) => Ok(Err(reason)),
        Err(e) => Err(e),
    }
}

pub fn triple_normalizations_4d(ctx: &SurfaceContext, u: &DVector<f64>) -> Result<TripleNormalization> {
    if ctx.metric().dim() != 4 {
        return Err(Error::Unsupported("the triple normalization needs a four-dimensional ambient space".into()));
    }
    let shape = ctx.shape(u)?;
    let tol = ctx.tolerances();
    let lam = [shape.eigenvalues[0], shape.eigenvalues[1]];
    if classify(&shape, tol) == Classification::TotallyGeodesic {
        return Ok(TripleNormalization::all(lam, UnavailableReason::TotallyGeodesic));
    }
    if shape.roots(tol).len() < 2 {
        return Ok(TripleNormalization::all(lam, UnavailableReason::EqualEigenvalues));
    }
    if lam.iter().any(|l| !(l.abs() > tol.geodesic_abs)) {
        return Ok(TripleNormalization::all(lam, UnavailableReason::VanishingInvariant));
    }

    let frame = &shape.frame;
    let curv = tensorcalc::riemann(ctx.metric(), &frame.point)?;
    let mut predicted = [0.0; 2];
    let mut derivs = Vec::with_capacity(2);
    for a in 0..2 {
        let mut v = DVector::zeros(4);
        for b in 0..2 {
            v += &frame.screen[b] * shape.eigenvectors[(b, a)];
        }
        predicted[a] = lam[a] - curv.contract(&frame.e1, &v, &v, &frame.e1) / lam[a];
        let inv = RelativeInvariant::Eigenvalue(a);
        derivs.push(invariant_log_derivative(ctx, u, 1, |w| relative_value(ctx, inv, w))?);
    }
    let k = [derivs[0].k, derivs[1].k];
    let scale = k.iter().chain(lam.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    let proportional = (k[0] * lam[1] - k[1] * lam[0]).abs() <= PROPORTIONALITY_TOL * scale * scale;

    let relative = |a: usize| -> Result<ScreenOutcome> {
        if proportional {
            return Ok(Err(UnavailableReason::KProportionalToEigenvalues));
        }
        outcome(screen_from_relative_invariant(&shape, &derivs[a]))
    };
    let first = relative(0)?;
    let second = relative(1)?;
    let mut third = outcome(construct_screen_with(ctx, u, TripleNormalization::SPECS[2], &shape, true))?;
    let ratio = lam[0] / lam[1];
    let ratio_transversal = third.as_ref().ok().and_then(|s| s.transversal).map(|t| t / ratio);
    if let Ok(s) = &mut third {
        s.method = ScreenMethod::LevelSet4d;
    }
    Ok(TripleNormalization {
        eigenvalues: lam,
        measured_k: Some(k),
        predicted_k: Some(predicted),
        ratio_transversal,
        screens: [first, second, third],
    })
}
