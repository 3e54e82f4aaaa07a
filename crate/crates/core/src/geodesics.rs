//! Null geodesics, the generator Jacobian and focal points.

use std::cell::Cell;
use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use ode_solvers::dopri5::Dopri5;
use ode_solvers::System;
use serde::Serialize;

use crate::error::{Error, Result, UnavailableReason};
use crate::fd::{self, Stencil};
use crate::hypersurface::{classify, Classification, ShapeData, Tolerances};
use crate::nullframe::{self, FrameField};
use crate::surface::SurfaceContext;
use crate::tensorcalc::{bilinear, christoffel, MetricField};

type OdeState = ode_solvers::DVector<f64>;

pub const RTOL: f64 = 1e-10;
pub const ATOL: f64 = 1e-12;
/// Initial `|g(v, v)|` accepted as null, relative to `|v|²`.
pub const NULL_TOL: f64 = 1e-9;

/// Samples of one integrated geodesic.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicRecord {
    pub x0: DVector<f64>,
    pub v0: DVector<f64>,
    pub s: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
    /// `g(v, v)` at each sample.
    pub null_norm: Vec<f64>,
    /// Set when the trajectory left the chart (or the integrator gave up) before `s_max`.
    pub exited: bool,
}

impl GeodesicRecord {
    pub fn null_drift(&self) -> f64 {
        self.null_norm.iter().fold(0.0, |m, n| m.max(n.abs()))
    }

    pub fn last(&self) -> (&DVector<f64>, &DVector<f64>) {
        (self.x.last().unwrap(), self.v.last().unwrap())
    }

    /// `|f(x(s_k))|` per sample, for a level function `f` of the hypersurface.
    pub fn surface_residuals<F: Fn(&DVector<f64>) -> f64>(&self, level: F) -> Vec<f64> {
        self.x.iter().map(|x| level(x).abs()).collect()
    }
}

struct GeodesicFlow<'a> {
    metric: &'a MetricField,
    n: usize,
    failed: Rc<Cell<bool>>,
}

impl System<f64, OdeState> for GeodesicFlow<'_> {
    fn system(&self, _s: f64, y: &OdeState, dy: &mut OdeState) {
        let n = self.n;
        let x = DVector::from_column_slice(&y.as_slice()[..n]);
        let v = DVector::from_column_slice(&y.as_slice()[n..]);
        match christoffel(self.metric, &x) {
            Ok(gamma) => {
                let acc = gamma.contract(&v, &v);
                for i in 0..n {
                    dy[i] = v[i];
                    dy[n + i] = -acc[i];
                }
            }
            Err(_) => {
                self.failed.set(true);
                dy.fill(0.0);
            }
        }
    }

    fn solout(&mut self, _s: f64, y: &OdeState, _dy: &OdeState) -> bool {
        let x = DVector::from_column_slice(&y.as_slice()[..self.n]);
        self.failed.get() || !self.metric.contains(&x)
    }
}

/// Integrates `ẍ^i + Γ^i_jk ẋ^j ẋ^k = 0` from `(x0, v0)` over `[0, s_max]`,
/// returning `samples` evenly spaced states.
///
/// The null norm is not renormalized; its drift is reported as is.
pub fn integrate_isotropic_geodesic(
    metric: &MetricField,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    s_max: f64,
    samples: usize,
) -> Result<GeodesicRecord> {
    let n = metric.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::Dimension { expected: n, found: x0.len().max(v0.len()) });
    }
    let g0 = metric.at(x0)?;
    let norm = bilinear(&g0, v0, v0);
    if norm.abs() > NULL_TOL * v0.norm_squared().max(1.0) {
        return Err(Error::NotNull { norm });
    }
    if samples < 2 || !(s_max > 0.0) {
        return Err(Error::Unsupported("need s_max > 0 and at least two samples".into()));
    }
    let failed = Rc::new(Cell::new(false));
    let flow = GeodesicFlow { metric, n, failed: failed.clone() };
    let y0 = OdeState::from_iterator(2 * n, x0.iter().chain(v0.iter()).copied());
    // a dense-output spacing equal to the whole interval makes the solver
    // interpolate the endpoint badly, so never ask for fewer than two intervals
    let stride = if samples == 2 { 2 } else { 1 };
    let ds = s_max / ((samples - 1) * stride) as f64;
    let mut solver = Dopri5::new(flow, 0.0, s_max, ds, y0, RTOL, ATOL);
    let finished = solver.integrate().is_ok();

    let mut rec = GeodesicRecord {
        x0: x0.clone(),
        v0: v0.clone(),
        s: Vec::new(),
        x: Vec::new(),
        v: Vec::new(),
        null_norm: Vec::new(),
        exited: false,
    };
    for (s, y) in solver.x_out().iter().zip(solver.y_out()).step_by(stride) {
        let x = DVector::from_column_slice(&y.as_slice()[..n]);
        let v = DVector::from_column_slice(&y.as_slice()[n..]);
        let Ok(g) = metric.at(&x) else {
            rec.exited = true;
            break;
        };
        rec.null_norm.push(bilinear(&g, &v, &v));
        rec.s.push(*s);
        rec.x.push(x);
        rec.v.push(v);
    }
    let reached = rec.s.last().is_some_and(|s| (s - s_max).abs() <= 1e-9 * s_max);
    rec.exited |= !finished || failed.get() || !reached;
    Ok(rec)
}

/// `det(δ^a_b + s λ^a_b)`.
pub fn jacobian_det(shape: &ShapeData, s: f64) -> f64 {
    let m = shape.screen_dim();
    (DMatrix::identity(m, m) + &shape.lambda_up * s).determinant()
}

#[derive(Clone, Debug, Serialize)]
pub struct Focus {
    /// The eigenvalue `λ_a` of the root.
    pub eigenvalue: f64,
    /// `s_a = −1/λ_a`.
    pub s: f64,
    pub multiplicity: usize,
    /// `x + s_a e_1`, in development coordinates.
    pub point: DVector<f64>,
    /// `det(δ + s_a λ)`.
    pub jacobian: f64,
    /// Endpoint of the integrated generator, when requested and reachable.
    pub exp_image: Option<DVector<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FocalSet {
    pub params: DVector<f64>,
    pub base: DVector<f64>,
    pub foci: Vec<Focus>,
    /// Number of vanishing eigenvalues (foci at infinity).
    pub at_infinity: usize,
}

impl FocalSet {
    /// Finite foci with multiplicity plus foci at infinity.
    pub fn count(&self) -> usize {
        self.foci.iter().map(|f| f.multiplicity).sum::<usize>() + self.at_infinity
    }
}

/// Singular points `F_a = x − (1/λ_a) e_1` of the generator through the shape's point.
pub fn focal_points(shape: &ShapeData, tol: &Tolerances) -> FocalSet {
    let mut at_infinity = 0;
    let mut foci = Vec::new();
    for (lambda, mult) in shape.roots(tol) {
        if lambda.abs() <= tol.geodesic_abs {
            at_infinity += mult;
            continue;
        }
        let s = -1.0 / lambda;
        foci.push(Focus {
            eigenvalue: lambda,
            s,
            multiplicity: mult,
            point: &shape.point + &shape.frame.e1 * s,
            jacobian: jacobian_det(shape, s),
            exp_image: None,
        });
    }
    FocalSet {
        params: shape.params.clone(),
        base: shape.point.clone(),
        foci,
        at_infinity,
    }
}

/// Fills [`Focus::exp_image`] by integrating the generator out to each `s_a`.
pub fn attach_exp_images(metric: &MetricField, shape: &ShapeData, set: &mut FocalSet) {
    for f in &mut set.foci {
        let v0 = &shape.frame.e1 * f.s.signum();
        f.exp_image = integrate_isotropic_geodesic(metric, &shape.point, &v0, f.s.abs(), 2)
            .ok()
            .filter(|r| !r.exited)
            .map(|r| r.last().0.clone());
    }
}

/// Whether `det(δ + sλ) > 0` on `samples` interior points between 0 and the
/// nearest focal parameter in the direction of `sign` (or out to `s_far` when
/// there is none).
pub fn regular_segment(shape: &ShapeData, tol: &Tolerances, sign: f64, s_far: f64, samples: usize) -> bool {
    let end = focal_points(shape, tol)
        .foci
        .iter()
        .map(|f| f.s)
        .filter(|s| s * sign > 0.0)
        .map(f64::abs)
        .fold(s_far, f64::min);
    (1..=samples).all(|k| {
        let s = sign * end * k as f64 / (samples + 1) as f64;
        jacobian_det(shape, s) > 0.0
    })
}

/// The single focus `x − (1/λ) e_1` of a totally umbilical point.
pub fn umbilical_focus(shape: &ShapeData, tol: &Tolerances) -> Result<DVector<f64>> {
    match classify(shape, tol) {
        Classification::TotallyUmbilical { lambda } => Ok(&shape.point - &shape.frame.e1 / lambda),
        Classification::TotallyGeodesic => Err(Error::Unavailable(UnavailableReason::TotallyGeodesic)),
        Classification::Generic => Err(Error::NotUmbilical),
    }
}

/// Frame components of `dF(X) = X − ∇_X(e_1/λ)` for the umbilical focus `F`,
/// with `X` a tangent vector at `u`.
pub fn focal_displacement(ctx: &SurfaceContext, u: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    let shape = ctx.shape(u)?;
    let lambda = match classify(&shape, ctx.tolerances()) {
        Classification::TotallyUmbilical { lambda } => lambda,
        Classification::TotallyGeodesic => return Err(Error::Unavailable(UnavailableReason::TotallyGeodesic)),
        Classification::Generic => return Err(Error::NotUmbilical),
    };
    let du = nullframe::parameter_direction(ctx, u, x)?;
    let conn = nullframe::connection_along(ctx, u, &du)?;
    let dlambda: f64 = fd::directional(
        |v| Ok(ctx.shape(v)?.mean_eigenvalue()),
        u,
        &du,
        ctx.steps().invariant,
        Stencil::Fourth,
    )?;
    let mut out = shape.frame.components(x);
    for j in 0..out.len() {
        out[j] -= conn.omega(0, j) / lambda;
    }
    out[0] += dlambda / (lambda * lambda);
    Ok(out)
}
