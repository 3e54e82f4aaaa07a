//! Lightlike hypersurface patches and their fundamental forms.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{self, Stencil};
use crate::linalg;
use crate::nullframe::{self, FrameField, IsotropicFrame, RADICAL_TOL};
use crate::tensorcalc::MetricField;

pub type MapFn = dyn Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync;
/// Columns are `∂x/∂u^k`.
pub type JacobianFn = dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync;

/// Relative step for the finite-difference tangent map fallback.
const JACOBIAN_STEP: f64 = 1e-3;

/// A parameterized patch `u ↦ x(u)` of a candidate lightlike hypersurface.
///
/// By convention `u^1` runs along the isotropic generators when the patch is
/// adapted, but nothing here depends on that.
#[derive(Clone)]
pub struct HypersurfacePatch {
    name: String,
    ambient_dim: usize,
    bounds: Vec<(f64, f64)>,
    map: Arc<MapFn>,
    jacobian: Option<Arc<JacobianFn>>,
    scale: f64,
}

impl fmt::Debug for HypersurfacePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HypersurfacePatch")
            .field("name", &self.name)
            .field("ambient_dim", &self.ambient_dim)
            .field("bounds", &self.bounds)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl HypersurfacePatch {
    pub fn new<F>(name: impl Into<String>, ambient_dim: usize, bounds: Vec<(f64, f64)>, map: F) -> Self
    where
        F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        assert_eq!(bounds.len() + 1, ambient_dim, "a hypersurface has n − 1 parameters");
        HypersurfacePatch {
            name: name.into(),
            ambient_dim,
            bounds,
            map: Arc::new(map),
            jacobian: None,
            scale: 1.0,
        }
    }

    pub fn with_jacobian<F>(mut self, jac: F) -> Self
    where
        F: Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    /// Characteristic length of the patch, used to scale absolute tolerances.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn params(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn contains(&self, u: &DVector<f64>) -> bool {
        u.len() == self.params()
            && u.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn point(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.params() {
            return Err(Error::Dimension {
                expected: self.params(),
                found: u.len(),
            });
        }
        let x = (self.map)(u)?;
        if x.len() != self.ambient_dim {
            return Err(Error::Dimension {
                expected: self.ambient_dim,
                found: x.len(),
            });
        }
        Ok(x)
    }

    /// Tangent map with columns `∂x/∂u^k`.
    pub fn jacobian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        if let Some(j) = &self.jacobian {
            return j(u);
        }
        let n = self.ambient_dim;
        let p = self.params();
        let mut jac = DMatrix::zeros(n, p);
        for k in 0..p {
            let col: DVector<f64> =
                fd::partial(|v| self.point(v), u, k, JACOBIAN_STEP, Stencil::Fourth)?;
            jac.column_mut(k).copy_from(&col);
        }
        Ok(jac)
    }

    pub fn tangent_basis(&self, u: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let j = self.jacobian(u)?;
        Ok(j.column_iter().map(|c| c.into_owned()).collect())
    }
}

/// Causal character of a tangent hyperplane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalType {
    Lightlike,
    SpacelikeOrTimelike,
    Degenerate,
}

/// Classifies the tangent plane at `u` by the rank of the induced metric.
pub fn verify_lightlike(
    patch: &HypersurfacePatch,
    metric: &MetricField,
    u: &DVector<f64>,
) -> Result<CausalType> {
    let x = patch.point(u)?;
    let g = metric.at(&x)?;
    let t = patch.jacobian(u)?;
    if linalg::condition_ratio(&t) < 1e-10 {
        return Err(Error::NotImmersed {
            params: u.iter().copied().collect(),
        });
    }
    let induced = t.transpose() * g * &t;
    let sv = induced.singular_values();
    let scale = sv.max();
    let radical = sv.iter().filter(|s| **s <= RADICAL_TOL * scale).count();
    Ok(match radical {
        0 => CausalType::SpacelikeOrTimelike,
        1 => CausalType::Lightlike,
        _ => CausalType::Degenerate,
    })
}

/// Thresholds used to classify shape data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// `‖λ_ab‖` below this is totally geodesic.
    pub geodesic_abs: f64,
    /// Relative deviation from `λ g_ab` below this is totally umbilical.
    pub umbilic_rel: f64,
    /// Relative separation below which eigenvalues are one root.
    pub cluster_rel: f64,
}

impl Tolerances {
    pub fn for_scale(scale: f64) -> Self {
        Tolerances {
            geodesic_abs: 1e-7 * scale,
            umbilic_rel: 1e-5,
            cluster_rel: 1e-6,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::for_scale(1.0)
    }
}

/// Second fundamental tensor and shape operator at one point.
#[derive(Clone, Debug)]
pub struct ShapeData {
    pub params: DVector<f64>,
    pub point: DVector<f64>,
    pub frame: IsotropicFrame,
    /// `g_ab`.
    pub screen_gram: DMatrix<f64>,
    /// `λ_ab`, symmetrized.
    pub lambda_low: DMatrix<f64>,
    /// `λ^a_b = g^{ac} λ_cb`.
    pub lambda_up: DMatrix<f64>,
    /// Eigenvalues of the pencil `(λ_ab, g_ab)`, ascending.
    pub eigenvalues: DVector<f64>,
    /// `g_ab`-orthonormal eigenvectors (screen components) as columns.
    pub eigenvectors: DMatrix<f64>,
    /// Frobenius norm of the antisymmetric part of the measured `λ_ab`.
    pub asymmetry: f64,
    /// `max_a |ω_1^a(e_1)|`: zero when the generators are geodesics.
    pub geodesic_residual: f64,
}

impl ShapeData {
    pub fn screen_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Distinct roots with multiplicities.
    pub fn roots(&self, tol: &Tolerances) -> Vec<(f64, usize)> {
        let v: Vec<f64> = self.eigenvalues.iter().copied().collect();
        linalg::cluster_sorted(&v, tol.cluster_rel, tol.geodesic_abs)
    }

    pub fn lambda_norm(&self) -> f64 {
        self.lambda_low.norm()
    }

    /// `λ = λ^a_a / (n−2)`, the umbilic factor when `λ_ab = λ g_ab`.
    pub fn mean_eigenvalue(&self) -> f64 {
        self.lambda_up.trace() / self.screen_dim() as f64
    }
}

/// Computes `λ_ab = g(e_a, ∇_{e_b} e_1)` from the frame field at `u`.
pub fn second_fundamental_form<F: FrameField + ?Sized>(field: &F, u: &DVector<f64>) -> Result<ShapeData> {
    let frame = field.frame(u)?;
    let m = frame.screen_dim();
    let gab = frame.screen_gram();
    let mut omega = DMatrix::zeros(m, m);
    for b in 0..m {
        let du = nullframe::parameter_direction(field, u, &frame.screen[b])?;
        let conn = nullframe::connection_along(field, u, &du)?;
        for c in 0..m {
            omega[(c, b)] = conn.omega(0, c + 1);
        }
    }
    let du1 = nullframe::parameter_direction(field, u, &frame.e1)?;
    let along = nullframe::connection_along(field, u, &du1)?;
    let geodesic_residual = (1..=m).map(|a| along.omega(0, a).abs()).fold(0.0, f64::max);

    let measured = &gab * omega;
    let asymmetry = linalg::asymmetry(&measured);
    let lambda_low = linalg::symmetrize(&measured);
    let g_inv = gab
        .clone()
        .try_inverse()
        .ok_or(Error::FrameResidual { residual: f64::INFINITY })?;
    let lambda_up = &g_inv * &lambda_low;
    let (eigenvalues, eigenvectors) = linalg::symmetric_pencil_eigen(&lambda_low, &gab)
        .ok_or(Error::FrameResidual { residual: f64::INFINITY })?;
    Ok(ShapeData {
        params: u.clone(),
        point: frame.point.clone(),
        screen_gram: gab,
        lambda_low,
        lambda_up,
        eigenvalues,
        eigenvectors,
        asymmetry,
        geodesic_residual,
        frame,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    TotallyGeodesic,
    TotallyUmbilical { lambda: f64 },
    Generic,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::TotallyGeodesic => "totally_geodesic",
            Classification::TotallyUmbilical { .. } => "totally_umbilical",
            Classification::Generic => "generic",
        }
    }
}

pub fn classify(shape: &ShapeData, tol: &Tolerances) -> Classification {
    let norm = shape.lambda_norm();
    if norm < tol.geodesic_abs {
        return Classification::TotallyGeodesic;
    }
    let lambda = shape.mean_eigenvalue();
    let dev = (&shape.lambda_low - &shape.screen_gram * lambda).norm();
    if dev < tol.umbilic_rel * norm {
        Classification::TotallyUmbilical { lambda }
    } else {
        Classification::Generic
    }
}
