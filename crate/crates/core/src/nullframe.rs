//! Adapted isotropic frames `(e_1, e_a, e_n)` and their connection forms.
//!
//! Frame vectors are indexed `0` for the isotropic tangent `e_1`,
//! `1..=n−2` for the screen basis `e_a`, and `n−1` for the isotropic
//! transversal `e_n`. The gram matrix of a valid frame is
//!
//! ```text
//! ( 0     0    −1 )
//! ( 0   g_ab    0 )
//! (−1     0     0 )
//! ```
//!
//! with `g_ab` positive definite.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::fd::{self, FdPolicy, Stencil};
use crate::linalg;
use crate::tensorcalc::{self, bilinear, MetricField};

/// Relative eigenvalue size below which a direction of the induced metric counts as radical.
pub const RADICAL_TOL: f64 = 1e-8;
/// Largest accepted deviation of a constructed frame from the block gram form.
pub const FRAME_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicFrame {
    pub point: DVector<f64>,
    /// Metric components at `point`.
    pub metric: DMatrix<f64>,
    pub e1: DVector<f64>,
    pub screen: Vec<DVector<f64>>,
    pub en: DVector<f64>,
}

impl IsotropicFrame {
    pub fn dim(&self) -> usize {
        self.e1.len()
    }

    pub fn screen_dim(&self) -> usize {
        self.screen.len()
    }

    pub fn vector(&self, k: usize) -> &DVector<f64> {
        let m = self.screen.len();
        match k {
            0 => &self.e1,
            k if k <= m => &self.screen[k - 1],
            _ => &self.en,
        }
    }

    /// Frame vectors as columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| self.vector(c)[r])
    }

    pub fn screen_matrix(&self) -> DMatrix<f64> {
        linalg::columns(&self.screen)
    }

    pub fn scalar(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        bilinear(&self.metric, a, b)
    }

    /// Full gram matrix `g(e_i, e_j)`.
    pub fn gram(&self) -> DMatrix<f64> {
        let f = self.matrix();
        f.transpose() * &self.metric * f
    }

    /// Screen gram matrix `g_ab`.
    pub fn screen_gram(&self) -> DMatrix<f64> {
        let s = self.screen_matrix();
        s.transpose() * &self.metric * s
    }

    /// The block form the gram matrix must take, built from the current `g_ab`.
    pub fn expected_gram(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        g[(0, n - 1)] = -1.0;
        g[(n - 1, 0)] = -1.0;
        g.view_mut((1, 1), (n - 2, n - 2))
            .copy_from(&linalg::symmetrize(&self.screen_gram()));
        g
    }

    /// Largest deviation of the six scalar-product constraints.
    pub fn residual(&self) -> f64 {
        (self.gram() - self.expected_gram()).amax()
    }

    /// Checks every frame invariant, including positivity of `g_ab`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let residual = self.residual();
        if !(residual <= tol) {
            return Err(Error::FrameResidual { residual });
        }
        if self.screen_gram().cholesky().is_none() {
            return Err(Error::FrameResidual {
                residual: f64::INFINITY,
            });
        }
        Ok(())
    }

    /// Coefficients of `v` in the frame.
    pub fn components(&self, v: &DVector<f64>) -> DVector<f64> {
        self.matrix()
            .lu()
            .solve(v)
            .unwrap_or_else(|| DVector::from_element(v.len(), f64::NAN))
    }
}

/// Choices that make frame construction reproducible across nearby points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameAnchor {
    /// Coordinate of `e_1` normalised to 1.
    pub scale_coord: usize,
    /// Tangent basis vector left out of the screen Gram–Schmidt.
    pub pivot: usize,
}

/// Builds the deterministic isotropic frame on a lightlike tangent plane.
///
/// `e_1` spans the radical of the induced metric and is scaled so that its
/// first significant coordinate, scanning from the last coordinate down, is
/// 1 ("significant" meaning at least 1e-3 of the largest entry). The screen is
/// the Gram–Schmidt orthonormalisation (in input order) of the tangent vectors
/// other than the one carrying the largest radical coefficient. `e_n` is the
/// null vector orthogonal to the screen with `g(e_1, e_n) = −1`.
pub fn build_isotropic_frame(
    metric: &MetricField,
    x: &DVector<f64>,
    tangent_basis: &[DVector<f64>],
) -> Result<IsotropicFrame> {
    build_anchored(metric, x, tangent_basis, None).map(|(f, _)| f)
}

/// As [`build_isotropic_frame`], reusing the anchor of a neighbouring point when given.
pub fn build_anchored(
    metric: &MetricField,
    x: &DVector<f64>,
    tangent_basis: &[DVector<f64>],
    anchor: Option<FrameAnchor>,
) -> Result<(IsotropicFrame, FrameAnchor)> {
    let n = metric.dim();
    if tangent_basis.len() + 1 != n {
        return Err(Error::Dimension {
            expected: n - 1,
            found: tangent_basis.len(),
        });
    }
    let g = metric.at(x)?;
    let t = linalg::columns(tangent_basis);
    if linalg::condition_ratio(&t) < 1e-10 {
        return Err(Error::NotImmersed {
            params: x.iter().copied().collect(),
        });
    }
    let induced = t.transpose() * &g * &t;
    let (vals, vecs) = linalg::symmetric_eigen_sorted(&induced);
    let scale = vals.amax();
    let radical: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i].abs() <= RADICAL_TOL * scale)
        .collect();
    match radical.len() {
        0 => return Err(Error::NotLightlike { radical_dim: 0 }),
        1 => {}
        d => return Err(Error::DegenerateInput { radical_dim: d }),
    }
    if vals.iter().any(|v| *v < -RADICAL_TOL * scale) {
        return Err(Error::NotLightlike { radical_dim: 1 });
    }
    let k = vecs.column(radical[0]).into_owned();
    let mut e1 = &t * &k;

    let anchor = match anchor {
        Some(a) => a,
        None => {
            let big = e1.amax();
            let scale_coord = (0..n)
                .rev()
                .find(|&i| e1[i].abs() >= 1e-3 * big)
                .unwrap_or(n - 1);
            let kmax = k.amax();
            let pivot = (0..k.len()).find(|&i| k[i].abs() == kmax).unwrap_or(0);
            FrameAnchor { scale_coord, pivot }
        }
    };
    let lead = e1[anchor.scale_coord];
    if lead.abs() <= 1e-9 * e1.amax() {
        return Err(Error::AnchorLost {
            coord: anchor.scale_coord,
        });
    }
    e1 /= lead;

    let mut screen: Vec<DVector<f64>> = Vec::with_capacity(n - 2);
    for (i, ti) in tangent_basis.iter().enumerate() {
        if i == anchor.pivot {
            continue;
        }
        let mut v = ti.clone();
        for e in &screen {
            v -= e * bilinear(&g, ti, e);
        }
        // second pass for stability
        for e in &screen {
            let c = bilinear(&g, &v, e);
            v -= e * c;
        }
        let nn = bilinear(&g, &v, &v);
        if !(nn > RADICAL_TOL * scale) {
            return Err(Error::DegenerateInput { radical_dim: 2 });
        }
        screen.push(v / nn.sqrt());
    }
    let en = complete_transversal(&g, &e1, &screen);
    let frame = IsotropicFrame {
        point: x.clone(),
        metric: g,
        e1,
        screen,
        en,
    };
    frame.validate(FRAME_TOL)?;
    Ok((frame, anchor))
}

/// The null vector `e_n` with `g(e_n, e_a) = 0` and `g(e_1, e_n) = −1`.
pub(crate) fn complete_transversal(
    g: &DMatrix<f64>,
    e1: &DVector<f64>,
    screen: &[DVector<f64>],
) -> DVector<f64> {
    let n = e1.len();
    let rows = screen.len() + 1;
    let mut m = DMatrix::zeros(rows, n);
    m.row_mut(0).copy_from(&(g * e1).transpose());
    for (a, e) in screen.iter().enumerate() {
        m.row_mut(a + 1).copy_from(&(g * e).transpose());
    }
    let mut rhs = DVector::zeros(rows);
    rhs[0] = -1.0;
    let (w, _) = linalg::least_squares(&m, &rhs);
    // w + α e_1 keeps the linear conditions; α fixes nullness
    let alpha = 0.5 * bilinear(g, &w, &w);
    w + e1 * alpha
}

/// Admissible change of isotropic frame at a point.
///
/// `e_1 ↦ c e_1`, `e_a ↦ A_a^b e_b + t_a e_1`, with `e_n` recomputed so the
/// block gram form is preserved.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTransform {
    pub scale: f64,
    pub screen: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl GaugeTransform {
    pub fn identity(screen_dim: usize) -> Self {
        GaugeTransform {
            scale: 1.0,
            screen: DMatrix::identity(screen_dim, screen_dim),
            shift: DVector::zeros(screen_dim),
        }
    }

    pub fn scaling(screen_dim: usize, c: f64) -> Self {
        GaugeTransform {
            scale: c,
            ..Self::identity(screen_dim)
        }
    }
}

pub fn apply_gauge(frame: &IsotropicFrame, gauge: &GaugeTransform) -> Result<IsotropicFrame> {
    let m = frame.screen_dim();
    if gauge.screen.nrows() != m || gauge.screen.ncols() != m || gauge.shift.len() != m {
        return Err(Error::Dimension {
            expected: m,
            found: gauge.shift.len(),
        });
    }
    let c = gauge.scale;
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidGauge("scale must be finite and nonzero"));
    }
    if linalg::condition_ratio(&gauge.screen) < 1e-12 {
        return Err(Error::InvalidGauge("screen matrix is singular"));
    }
    let gab = frame.screen_gram();
    let a_inv = gauge
        .screen
        .clone()
        .try_inverse()
        .ok_or(Error::InvalidGauge("screen matrix is singular"))?;
    let g_inv = gab
        .clone()
        .try_inverse()
        .ok_or(Error::InvalidGauge("screen gram is singular"))?;
    // A g ξ = t / c
    let xi = &g_inv * (&a_inv * &gauge.shift) / c;
    let beta = 0.5 * c * (xi.transpose() * &gab * &xi)[(0, 0)];

    let e1 = &frame.e1 * c;
    let screen: Vec<DVector<f64>> = (0..m)
        .map(|a| {
            let mut v = &frame.e1 * gauge.shift[a];
            for b in 0..m {
                v += &frame.screen[b] * gauge.screen[(a, b)];
            }
            v
        })
        .collect();
    let mut en = &frame.en / c + &frame.e1 * beta;
    for b in 0..m {
        en += &frame.screen[b] * xi[b];
    }
    Ok(IsotropicFrame {
        point: frame.point.clone(),
        metric: frame.metric.clone(),
        e1,
        screen,
        en,
    })
}

/// A smooth field of gauge transforms over patch parameters.
///
/// `c(u) = c₀ exp(β·(u − u₀))`, `A(u) = A₀ + Σ_k (u − u₀)_k A_k`,
/// `t(u) = t₀ + T (u − u₀)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeField {
    pub base: GaugeTransform,
    pub origin: DVector<f64>,
    pub log_scale_slope: DVector<f64>,
    pub screen_slopes: Vec<DMatrix<f64>>,
    pub shift_slope: DMatrix<f64>,
}

impl GaugeField {
    pub fn identity(params: usize, screen_dim: usize) -> Self {
        Self::constant(params, GaugeTransform::identity(screen_dim))
    }

    pub fn constant(params: usize, base: GaugeTransform) -> Self {
        let m = base.shift.len();
        GaugeField {
            base,
            origin: DVector::zeros(params),
            log_scale_slope: DVector::zeros(params),
            screen_slopes: vec![DMatrix::zeros(m, m); params],
            shift_slope: DMatrix::zeros(m, params),
        }
    }

    pub fn scaling(params: usize, screen_dim: usize, c: f64) -> Self {
        Self::constant(params, GaugeTransform::scaling(screen_dim, c))
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.origin.len(), self.base.shift.len())
    }

    /// A random smooth gauge with positive scale, centred at `origin`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, origin: &DVector<f64>, screen_dim: usize) -> Self {
        let p = origin.len();
        let m = screen_dim;
        let scale = (rng.random_range(-1.0f64..1.0) * 1.2).exp();
        // rotation-like part plus moderate stretching keeps A well conditioned
        let angle: f64 = rng.random_range(-3.0..3.0);
        let mut a0 = DMatrix::<f64>::identity(m, m);
        if m >= 2 {
            a0[(0, 0)] = angle.cos();
            a0[(0, 1)] = -angle.sin();
            a0[(1, 0)] = angle.sin();
            a0[(1, 1)] = angle.cos();
        }
        let stretch = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                rng.random_range(0.6..1.6)
            } else {
                rng.random_range(-0.3..0.3)
            }
        });
        let base = GaugeTransform {
            scale,
            screen: stretch * a0,
            shift: DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
        };
        GaugeField {
            base,
            origin: origin.clone(),
            log_scale_slope: DVector::from_fn(p, |_, _| rng.random_range(-0.4..0.4)),
            screen_slopes: (0..p)
                .map(|_| DMatrix::from_fn(m, m, |_, _| rng.random_range(-0.1..0.1)))
                .collect(),
            shift_slope: DMatrix::from_fn(m, p, |_, _| rng.random_range(-0.4..0.4)),
        }
    }

    pub fn at(&self, u: &DVector<f64>) -> GaugeTransform {
        let du = u - &self.origin;
        let mut screen = self.base.screen.clone();
        for (k, s) in self.screen_slopes.iter().enumerate() {
            screen += s * du[k];
        }
        GaugeTransform {
            scale: self.base.scale * self.log_scale_slope.dot(&du).exp(),
            screen,
            shift: &self.base.shift + &self.shift_slope * du,
        }
    }
}

/// A smooth assignment of isotropic frames over patch parameters.
pub trait FrameField: Sync {
    fn metric(&self) -> &MetricField;
    fn params(&self) -> usize {
        self.metric().dim() - 1
    }
    fn point(&self, u: &DVector<f64>) -> Result<DVector<f64>>;
    /// Columns `∂x/∂u^k`.
    fn tangent_basis(&self, u: &DVector<f64>) -> Result<Vec<DVector<f64>>>;
    fn frame(&self, u: &DVector<f64>) -> Result<IsotropicFrame>;
    fn steps(&self) -> FdPolicy;
    /// Relative step and stencil used when differentiating this field's frames.
    fn frame_stencil(&self) -> (f64, Stencil) {
        (self.steps().frame, self.steps().frame_stencil)
    }
}

/// Values `ω_i^j(X)` of the connection forms on one tangent vector.
///
/// `omega(from, to)` is the coefficient of `e_to` in `∇_X e_from`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionValues {
    pub direction: DVector<f64>,
    coeffs: DMatrix<f64>,
}

impl ConnectionValues {
    pub fn omega(&self, from: usize, to: usize) -> f64 {
        self.coeffs[(to, from)]
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Largest violation of the relations forced by the block gram form:
    /// `ω_1^n = ω_n^1 = 0`, `ω_1^1 + ω_n^n = 0`, `ω_a^n = g_ab ω_1^b`, `ω_a^1 = g_ab ω_n^b`.
    pub fn structure_residual(&self, screen_gram: &DMatrix<f64>) -> f64 {
        let n = self.dim();
        let last = n - 1;
        let mut r = self.omega(0, last).abs();
        r = r.max(self.omega(last, 0).abs());
        r = r.max((self.omega(0, 0) + self.omega(last, last)).abs());
        for a in 1..last {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for b in 1..last {
                s1 += screen_gram[(a - 1, b - 1)] * self.omega(0, b);
                s2 += screen_gram[(a - 1, b - 1)] * self.omega(last, b);
            }
            r = r.max((self.omega(a, last) - s1).abs());
            r = r.max((self.omega(a, 0) - s2).abs());
        }
        r
    }
}

/// Connection values along the tangent vector `J du` for a parameter direction `du`.
pub fn connection_along<F: FrameField + ?Sized>(
    field: &F,
    u: &DVector<f64>,
    du: &DVector<f64>,
) -> Result<ConnectionValues> {
    let frame = field.frame(u)?;
    let (rel, stencil) = field.frame_stencil();
    let d_frame: DMatrix<f64> =
        fd::directional(|v| field.frame(v).map(|f| f.matrix()), u, du, rel, stencil)?;
    let tangent = linalg::columns(&field.tangent_basis(u)?);
    let x_dir = &tangent * du;
    let gamma = tensorcalc::christoffel(field.metric(), &frame.point)?;
    let f = frame.matrix();
    let n = f.ncols();
    let mut cov = d_frame;
    for j in 0..n {
        let corr = gamma.contract(&x_dir, &f.column(j).into_owned());
        let mut col = cov.column_mut(j);
        col += corr;
    }
    let coeffs = f
        .lu()
        .solve(&cov)
        .ok_or(Error::FrameResidual {
            residual: f64::INFINITY,
        })?;
    Ok(ConnectionValues {
        direction: x_dir,
        coeffs,
    })
}

/// Solves `J du = X` for a tangent vector `X`; errors when `X` is not tangent.
pub fn parameter_direction<F: FrameField + ?Sized>(
    field: &F,
    u: &DVector<f64>,
    x_dir: &DVector<f64>,
) -> Result<DVector<f64>> {
    let tangent = linalg::columns(&field.tangent_basis(u)?);
    let (du, residual) = linalg::least_squares(&tangent, x_dir);
    if residual > 1e-8 * x_dir.amax().max(1e-300) {
        return Err(Error::NotTangent { residual });
    }
    Ok(du)
}

/// Connection values `ω_i^j(X)` for a tangent vector `X` of the hypersurface.
pub fn connection_form_values<F: FrameField + ?Sized>(
    field: &F,
    u: &DVector<f64>,
    direction: &DVector<f64>,
) -> Result<ConnectionValues> {
    let du = parameter_direction(field, u, direction)?;
    connection_along(field, u, &du)
}

/// Values of the coframe `(ω^1, ω^a)` on the patch coordinate directions,
/// one row per direction.
pub fn coframe_matrix<F: FrameField + ?Sized>(
    field: &F,
    u: &DVector<f64>,
    frame: &IsotropicFrame,
) -> Result<DMatrix<f64>> {
    let tangent = field.tangent_basis(u)?;
    let p = tangent.len();
    let mut c = DMatrix::zeros(p, p);
    for (k, t) in tangent.iter().enumerate() {
        let comps = frame.components(t);
        for alpha in 0..p {
            c[(k, alpha)] = comps[alpha];
        }
    }
    Ok(c)
}

/// Expresses 1-forms measured on the patch directions in the coframe `(ω^1, ω^a)`.
///
/// `measured` has one row per patch direction and one column per form; the
/// result has one row per coframe element. Also returns the solve residual.
pub fn decompose_on_coframe(coframe: &DMatrix<f64>, measured: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let mut out = DMatrix::zeros(coframe.ncols(), measured.ncols());
    let mut residual: f64 = 0.0;
    for j in 0..measured.ncols() {
        let b = measured.column(j).into_owned();
        let (x, r) = linalg::least_squares(coframe, &b);
        residual = residual.max(r);
        out.column_mut(j).copy_from(&x);
    }
    (out, residual)
}
