//! Coordinate tensor calculus over a Lorentzian metric field.
//!
//! # Curvature convention
//!
//! The curvature tensor is the coordinate commutator
//!
//! ```text
//! R^i_{jkl} = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj} + Γ^i_{km} Γ^m_{lj} − Γ^i_{lm} Γ^m_{kj}
//! R_{ijkl}  = g_{im} R^m_{jkl}
//! ```
//!
//! With this convention a metric of constant curvature `K` has
//! `R_{ijkl} = K (g_{ik} g_{jl} − g_{il} g_{jk})` with `K > 0` for de Sitter
//! space. The calibration is checked against [`constant_curvature_riemann`]
//! in the test suite. This is the only place the convention is fixed.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fd::{self, FdPolicy, Stencil};
use crate::linalg;

pub type ComponentsFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;
/// `result[k]` is `∂_k g`.
pub type FirstDerivativesFn = dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync;
/// `result[k][l]` is `∂_k ∂_l g`.
pub type SecondDerivativesFn = dyn Fn(&DVector<f64>) -> Vec<Vec<DMatrix<f64>>> + Send + Sync;
pub type DomainFn = dyn Fn(&DVector<f64>) -> bool + Send + Sync;

/// Singular-value ratio below which the metric counts as degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-10;

/// A smooth Lorentzian metric `g_ij(x)` on a coordinate chart.
///
/// Immutable once built; clones share the underlying closures.
#[derive(Clone)]
pub struct MetricField {
    name: String,
    dim: usize,
    bounds: Vec<(f64, f64)>,
    components: Arc<ComponentsFn>,
    first: Option<Arc<FirstDerivativesFn>>,
    second: Option<Arc<SecondDerivativesFn>>,
    domain: Option<Arc<DomainFn>>,
    steps: FdPolicy,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("bounds", &self.bounds)
            .field("analytic_derivatives", &self.first.is_some())
            .finish()
    }
}

impl MetricField {
    pub fn new<F>(name: impl Into<String>, dim: usize, bounds: Vec<(f64, f64)>, components: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        assert!(dim >= 3, "metric dimension must be at least 3");
        assert_eq!(bounds.len(), dim, "one coordinate interval per axis");
        MetricField {
            name: name.into(),
            dim,
            bounds,
            components: Arc::new(components),
            first: None,
            second: None,
            domain: None,
            steps: FdPolicy::default(),
        }
    }

    /// Restricts the chart to points where `pred` holds, in addition to the bounds.
    pub fn with_domain<F>(mut self, pred: F) -> Self
    where
        F: Fn(&DVector<f64>) -> bool + Send + Sync + 'static,
    {
        self.domain = Some(Arc::new(pred));
        self
    }

    /// Supplies analytic first and second derivatives; these replace finite differences.
    pub fn with_derivatives<F1, F2>(mut self, first: F1, second: F2) -> Self
    where
        F1: Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
        F2: Fn(&DVector<f64>) -> Vec<Vec<DMatrix<f64>>> + Send + Sync + 'static,
    {
        self.first = Some(Arc::new(first));
        self.second = Some(Arc::new(second));
        self
    }

    /// Drops any analytic derivatives so that finite differences are used.
    pub fn without_derivatives(mut self) -> Self {
        self.first = None;
        self.second = None;
        self
    }

    pub fn with_steps(mut self, steps: FdPolicy) -> Self {
        self.steps = steps;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn steps(&self) -> FdPolicy {
        self.steps
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.first.is_some()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
            && self.domain.as_ref().is_none_or(|d| d(x))
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(Error::OutOfChart {
                point: x.iter().copied().collect(),
            });
        }
        Ok(())
    }

    /// Metric components `g_ij` at `x`.
    pub fn at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        Ok((self.components)(x))
    }

    /// Metric and inverse metric at `x`.
    pub fn with_inverse(&self, x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let g = self.at(x)?;
        let ratio = linalg::condition_ratio(&g);
        if ratio < DEGENERACY_RATIO {
            return Err(Error::DegenerateMetric {
                point: x.iter().copied().collect(),
                ratio,
            });
        }
        let inv = g.clone().try_inverse().ok_or_else(|| Error::DegenerateMetric {
            point: x.iter().copied().collect(),
            ratio,
        })?;
        Ok((g, inv))
    }

    /// Verifies the signature `(n−1, 1)` at `x`.
    pub fn check_signature(&self, x: &DVector<f64>) -> Result<()> {
        let (g, _) = self.with_inverse(x)?;
        let (vals, _) = linalg::symmetric_eigen_sorted(&g);
        let negative = vals.iter().filter(|v| **v < 0.0).count();
        if negative != 1 {
            return Err(Error::Signature {
                point: x.iter().copied().collect(),
                negative,
            });
        }
        Ok(())
    }

    /// `∂_k g_ij` for every `k`.
    pub fn first_derivatives(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(x)?;
        if let Some(first) = &self.first {
            return Ok(first(x));
        }
        (0..self.dim)
            .map(|k| fd::partial(|y| self.at(y), x, k, self.steps.metric_first, Stencil::Second))
            .collect()
    }

    /// `∂_k ∂_l g_ij` for every `k, l`.
    pub fn second_derivatives(&self, x: &DVector<f64>) -> Result<Vec<Vec<DMatrix<f64>>>> {
        self.check_point(x)?;
        if let Some(second) = &self.second {
            return Ok(second(x));
        }
        let n = self.dim;
        let rel = self.steps.metric_second;
        let h: Vec<f64> = (0..n).map(|k| fd::axis_step(x[k], rel)).collect();
        let shifted = |pairs: &[(usize, f64)]| -> Result<DMatrix<f64>> {
            let mut y = x.clone();
            for &(k, d) in pairs {
                y[k] += d;
            }
            self.at(&y)
        };
        let g0 = self.at(x)?;
        let mut out = vec![vec![DMatrix::zeros(n, n); n]; n];
        for k in 0..n {
            let gp = shifted(&[(k, h[k])])?;
            let gm = shifted(&[(k, -h[k])])?;
            out[k][k] = (gp - &g0 * 2.0 + gm) / (h[k] * h[k]);
            for l in (k + 1)..n {
                let pp = shifted(&[(k, h[k]), (l, h[l])])?;
                let pm = shifted(&[(k, h[k]), (l, -h[l])])?;
                let mp = shifted(&[(k, -h[k]), (l, h[l])])?;
                let mm = shifted(&[(k, -h[k]), (l, -h[l])])?;
                let d = (pp - pm - mp + mm) / (4.0 * h[k] * h[l]);
                out[l][k] = d.clone();
                out[k][l] = d;
            }
        }
        Ok(out)
    }
}

/// `g(ξ, η) = g_ij ξ^i η^j` at `x`.
pub fn scalar_product(
    metric: &MetricField,
    x: &DVector<f64>,
    xi: &DVector<f64>,
    eta: &DVector<f64>,
) -> Result<f64> {
    let g = metric.at(x)?;
    Ok(bilinear(&g, xi, eta))
}

pub(crate) fn bilinear(g: &DMatrix<f64>, xi: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    (xi.transpose() * g * eta)[(0, 0)]
}

/// Christoffel symbols of the second kind `Γ^i_{jk}` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    /// `Γ^i_{jk} v^j w^k`.
    pub fn contract(&self, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |i, _| {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += self.get(i, j, k) * v[j] * w[k];
                }
            }
            s
        })
    }

    /// Largest `|Γ^i_{jk} − Γ^i_{kj}|`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    r = r.max((self.get(i, j, k) - self.get(i, k, j)).abs());
                }
            }
        }
        r
    }
}

fn first_kind(dg: &[DMatrix<f64>], l: usize, j: usize, k: usize) -> f64 {
    0.5 * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)])
}

/// Christoffel symbols at `x`, assembled symmetric in the lower indices.
pub fn christoffel(metric: &MetricField, x: &DVector<f64>) -> Result<Christoffel> {
    let (_, ginv) = metric.with_inverse(x)?;
    let dg = metric.first_derivatives(x)?;
    Ok(christoffel_from(&ginv, &dg))
}

fn christoffel_from(ginv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Christoffel {
    let n = ginv.nrows();
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(i, l)] * first_kind(dg, l, j, k);
                }
                data[(i * n + j) * n + k] = s;
                data[(i * n + k) * n + j] = s;
            }
        }
    }
    Christoffel { dim: n, data }
}

/// Residual of `∇_k g_ij = ∂_k g_ij − Γ^m_{ki} g_mj − Γ^m_{kj} g_im`, maximised over indices.
pub fn metric_compatibility_residual(metric: &MetricField, x: &DVector<f64>) -> Result<f64> {
    let g = metric.at(x)?;
    let dg = metric.first_derivatives(x)?;
    let gamma = christoffel(metric, x)?;
    let n = metric.dim();
    let mut r: f64 = 0.0;
    for (k, dgk) in dg.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let mut v = dgk[(i, j)];
                for m in 0..n {
                    v -= gamma.get(m, k, i) * g[(m, j)] + gamma.get(m, k, j) * g[(i, m)];
                }
                r = r.max(v.abs());
            }
        }
    }
    Ok(r)
}

/// Riemann tensor at a point, both index positions.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor {
    pub point: DVector<f64>,
    dim: usize,
    up: Vec<f64>,
    down: Vec<f64>,
}

/// Largest violations of the algebraic curvature identities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymmetryResiduals {
    pub antisym_first: f64,
    pub antisym_second: f64,
    pub pair_exchange: f64,
    pub first_bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.antisym_first
            .max(self.antisym_second)
            .max(self.pair_exchange)
            .max(self.first_bianchi)
    }
}

impl CurvatureTensor {
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R^i_{jkl}`
    pub fn up(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.up[self.idx(i, j, k, l)]
    }

    /// `R_{ijkl}`
    pub fn down(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.down[self.idx(i, j, k, l)]
    }

    /// `R_{ijkl} a^i b^j c^k d^l`.
    pub fn contract(
        &self,
        a: &DVector<f64>,
        b: &DVector<f64>,
        c: &DVector<f64>,
        d: &DVector<f64>,
    ) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if c[k] == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        s += self.down(i, j, k, l) * a[i] * b[j] * c[k] * d[l];
                    }
                }
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.down.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        let n = self.dim;
        let mut r = SymmetryResiduals::default();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.down(i, j, k, l);
                        r.antisym_first = r.antisym_first.max((v + self.down(j, i, k, l)).abs());
                        r.antisym_second = r.antisym_second.max((v + self.down(i, j, l, k)).abs());
                        r.pair_exchange = r.pair_exchange.max((v - self.down(k, l, i, j)).abs());
                        let b = v + self.down(i, k, l, j) + self.down(i, l, j, k);
                        r.first_bianchi = r.first_bianchi.max(b.abs());
                    }
                }
            }
        }
        r
    }

    /// Largest componentwise difference of the covariant tensors.
    pub fn max_difference(&self, other: &CurvatureTensor) -> f64 {
        self.down
            .iter()
            .zip(&other.down)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn from_down(point: DVector<f64>, g_inv: &DMatrix<f64>, down: Vec<f64>) -> Self {
        let n = g_inv.nrows();
        let mut t = CurvatureTensor {
            point,
            dim: n,
            up: vec![0.0; n * n * n * n],
            down,
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += g_inv[(i, m)] * t.down[t.idx(m, j, k, l)];
                        }
                        let id = t.idx(i, j, k, l);
                        t.up[id] = s;
                    }
                }
            }
        }
        t
    }
}

/// Riemann tensor at `x` from first and second metric derivatives.
pub fn riemann(metric: &MetricField, x: &DVector<f64>) -> Result<CurvatureTensor> {
    let n = metric.dim();
    let (g, ginv) = metric.with_inverse(x)?;
    let dg = metric.first_derivatives(x)?;
    let ddg = metric.second_derivatives(x)?;
    let gamma = christoffel_from(&ginv, &dg);

    // ∂_m g^{il} = −g^{ia} ∂_m g_{ab} g^{bl}
    let dginv: Vec<DMatrix<f64>> = dg.iter().map(|d| -(&ginv * d * &ginv)).collect();

    // dgamma[m] holds ∂_m Γ^i_{jk} at index (i, j, k).
    let mut dgamma = vec![vec![0.0; n * n * n]; n];
    for (m, slot) in dgamma.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        let d_first = 0.5
                            * (ddg[m][j][(l, k)] + ddg[m][k][(l, j)] - ddg[m][l][(j, k)]);
                        s += dginv[m][(i, l)] * first_kind(&dg, l, j, k) + ginv[(i, l)] * d_first;
                    }
                    slot[(i * n + j) * n + k] = s;
                    slot[(i * n + k) * n + j] = s;
                }
            }
        }
    }
    let dg_at = |m: usize, i: usize, j: usize, k: usize| dgamma[m][(i * n + j) * n + k];

    let mut up = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = dg_at(k, i, l, j) - dg_at(l, i, k, j);
                    for m in 0..n {
                        s += gamma.get(i, k, m) * gamma.get(m, l, j)
                            - gamma.get(i, l, m) * gamma.get(m, k, j);
                    }
                    up[((i * n + j) * n + k) * n + l] = s;
                }
            }
        }
    }
    let mut down = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += g[(i, m)] * up[((m * n + j) * n + k) * n + l];
                    }
                    down[((i * n + j) * n + k) * n + l] = s;
                }
            }
        }
    }
    Ok(CurvatureTensor {
        point: x.clone(),
        dim: n,
        up,
        down,
    })
}

/// Closed form `R_{ijkl} = K (g_ik g_jl − g_il g_jk)` at `x`.
pub fn constant_curvature_riemann(
    curvature: f64,
    metric: &MetricField,
    x: &DVector<f64>,
) -> Result<CurvatureTensor> {
    let (g, ginv) = metric.with_inverse(x)?;
    let n = metric.dim();
    let mut down = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    down[((i * n + j) * n + k) * n + l] =
                        curvature * (g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)]);
                }
            }
        }
    }
    Ok(CurvatureTensor::from_down(x.clone(), &ginv, down))
}
