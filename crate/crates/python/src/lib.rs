//! Python bindings: metrics, hypersurfaces, screens, foci and batch analysis.
//!
//! Vectors cross the boundary as lists of floats; matrices as lists of rows.

use std::path::PathBuf;

use lightlike::analysis;
use lightlike::catalog;
use lightlike::config::{AnalysisConfig, HypersurfaceSpec, MetricSpec};
use lightlike::emit::{self, Format};
use lightlike::geodesics;
use lightlike::hypersurface::{classify, Classification, HypersurfacePatch};
use lightlike::invariants::{self, AbsoluteInvariant, RelativeInvariant};
use lightlike::normalization::{construct_screen, screen_connection, ScreenSpec};
use lightlike::nullframe::{FrameField, GaugeField};
use lightlike::selftest;
use lightlike::surface::SurfaceContext;
use lightlike::tensorcalc::{self, MetricField};
use lightlike::Error;
use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(lightlike_py, LightlikeError, PyException);
create_exception!(lightlike_py, ScreenUnavailable, LightlikeError);
create_exception!(lightlike_py, ConfigError, LightlikeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Unavailable(r) => ScreenUnavailable::new_err(r.code()),
        Error::Config { .. } => ConfigError::new_err(e.to_string()),
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => LightlikeError::new_err(other.to_string()),
    }
}

fn vec_in(x: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(x)
}

fn vec_out(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

fn mat_out(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A Lorentzian metric from the catalog.
#[pyclass(frozen, module = "lightlike_py")]
struct Metric {
    spec: MetricSpec,
    field: MetricField,
}

impl Metric {
    fn from_spec(spec: MetricSpec) -> PyResult<Self> {
        let field = spec.build().map_err(to_py)?;
        Ok(Metric { spec, field })
    }
}

#[pymethods]
impl Metric {
    #[staticmethod]
    #[pyo3(signature = (dim = 4))]
    fn minkowski(dim: usize) -> PyResult<Self> {
        if dim < 3 {
            return Err(PyValueError::new_err("dimension must be at least 3"));
        }
        Self::from_spec(MetricSpec::Minkowski { dim })
    }

    #[staticmethod]
    #[pyo3(signature = (dim = 4, curvature = 1.0))]
    fn de_sitter(dim: usize, curvature: f64) -> PyResult<Self> {
        Self::from_spec(MetricSpec::DeSitter { dim, curvature })
    }

    #[staticmethod]
    #[pyo3(signature = (dim = 4, curvature = -1.0))]
    fn anti_de_sitter(dim: usize, curvature: f64) -> PyResult<Self> {
        Self::from_spec(MetricSpec::AntiDeSitter { dim, curvature })
    }

    #[staticmethod]
    #[pyo3(signature = (mass = 1.0))]
    fn eddington_finkelstein(mass: f64) -> PyResult<Self> {
        Self::from_spec(MetricSpec::EddingtonFinkelstein { mass })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.field.dim()
    }

    #[getter]
    fn name(&self) -> &str {
        self.field.name()
    }

    /// `g_ij` at `x`.
    fn components(&self, x: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(mat_out(&self.field.at(&vec_in(x)).map_err(to_py)?))
    }

    /// `Γ^i_jk` as nested lists `[i][j][k]`.
    fn christoffel(&self, x: Vec<f64>) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let c = tensorcalc::christoffel(&self.field, &vec_in(x)).map_err(to_py)?;
        let n = c.dim();
        Ok((0..n).map(|i| (0..n).map(|j| (0..n).map(|k| c.get(i, j, k)).collect()).collect()).collect())
    }

    /// `R_ijkl` (all indices down) as nested lists.
    fn riemann(&self, x: Vec<f64>) -> PyResult<Vec<Vec<Vec<Vec<f64>>>>> {
        let r = tensorcalc::riemann(&self.field, &vec_in(x)).map_err(to_py)?;
        let n = r.dim();
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| (0..n).map(|l| r.down(i, j, k, l)).collect()).collect())
                    .collect()
            })
            .collect())
    }

    /// Largest algebraic-symmetry residual of the curvature tensor at `x`.
    fn symmetry_residual(&self, x: Vec<f64>) -> PyResult<f64> {
        let r = tensorcalc::riemann(&self.field, &vec_in(x)).map_err(to_py)?;
        Ok(r.symmetry_residuals().max())
    }

    /// Integrates the null geodesic through `x0` with velocity `v0` over `[0, s_max]`.
    #[pyo3(signature = (x0, v0, s_max, samples = 101))]
    fn geodesic<'py>(
        &self,
        py: Python<'py>,
        x0: Vec<f64>,
        v0: Vec<f64>,
        s_max: f64,
        samples: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let rec = geodesics::integrate_isotropic_geodesic(&self.field, &vec_in(x0), &vec_in(v0), s_max, samples)
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("s", &rec.s)?;
        d.set_item("x", rec.x.iter().map(vec_out).collect::<Vec<_>>())?;
        d.set_item("v", rec.v.iter().map(vec_out).collect::<Vec<_>>())?;
        d.set_item("null_drift", rec.null_drift())?;
        d.set_item("exited", rec.exited)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Metric({:?})", self.spec)
    }
}

fn screen_spec(kind: &str) -> PyResult<ScreenSpec> {
    Ok(match kind {
        "relative_I1" => ScreenSpec::Relative {
            invariant: RelativeInvariant::Elementary(1),
        },
        "relative_I2" => ScreenSpec::Relative {
            invariant: RelativeInvariant::Elementary(2),
        },
        "relative_lambda2" => ScreenSpec::Relative {
            invariant: RelativeInvariant::Eigenvalue(0),
        },
        "relative_lambda3" => ScreenSpec::Relative {
            invariant: RelativeInvariant::Eigenvalue(1),
        },
        "absolute_trace_ratio" => ScreenSpec::Absolute {
            invariant: AbsoluteInvariant::trace_ratio(),
        },
        "absolute_eigenvalue_ratio" => ScreenSpec::Absolute {
            invariant: AbsoluteInvariant::eigenvalue_ratio(),
        },
        "umbilic" => ScreenSpec::Umbilic,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown screen `{other}` (expected relative_I1, relative_I2, relative_lambda2, relative_lambda3, \
                 absolute_trace_ratio, absolute_eigenvalue_ratio, umbilic)"
            )))
        }
    })
}

/// A catalog hypersurface in a catalog metric, with an optional constant gauge rescaling of `e_1`.
#[pyclass(frozen, module = "lightlike_py")]
struct Surface {
    metric: MetricField,
    patch: HypersurfacePatch,
    scale: f64,
}

impl Surface {
    fn ctx(&self, u: Vec<f64>) -> PyResult<(SurfaceContext, DVector<f64>)> {
        let u = vec_in(u);
        if u.len() != self.patch.params() {
            return Err(PyValueError::new_err(format!("expected {} parameters", self.patch.params())));
        }
        let mut ctx = SurfaceContext::new(self.metric.clone(), self.patch.clone(), &u).map_err(to_py)?;
        if self.scale != 1.0 {
            let m = self.patch.params() - 1;
            ctx = ctx.with_gauge(GaugeField::scaling(self.patch.params(), m, self.scale));
        }
        Ok((ctx, u))
    }
}

#[pymethods]
impl Surface {
    /// `name` is a catalog hypersurface; its parameters are keyword arguments
    /// (`apex`, `a`/`b`/`c`, `mass`, or `coords`/`params`/`bounds` for `custom`).
    #[new]
    #[pyo3(signature = (metric, name, *, apex = None, a = 1.0, b = 1.3, c = 1.7, mass = 1.0, coords = None, params = None, bounds = None, scale = 1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        metric: &Metric,
        name: &str,
        apex: Option<Vec<f64>>,
        a: f64,
        b: f64,
        c: f64,
        mass: f64,
        coords: Option<Vec<String>>,
        params: Option<Vec<String>>,
        bounds: Option<Vec<(f64, f64)>>,
        scale: f64,
    ) -> PyResult<Self> {
        let spec = match name {
            "null_hyperplane" => HypersurfaceSpec::NullHyperplane,
            "light_cone" => HypersurfaceSpec::LightCone { apex },
            "ellipsoid_null_congruence" => HypersurfaceSpec::EllipsoidNullCongruence { a, b, c },
            "schwarzschild_horizon" => HypersurfaceSpec::SchwarzschildHorizon { mass },
            "custom" => HypersurfaceSpec::Custom {
                coords: coords.ok_or_else(|| PyValueError::new_err("custom needs coords"))?,
                params: params.ok_or_else(|| PyValueError::new_err("custom needs params"))?,
                bounds: bounds.ok_or_else(|| PyValueError::new_err("custom needs bounds"))?,
            },
            other => return Err(PyValueError::new_err(format!("unknown hypersurface `{other}`"))),
        };
        if !(scale.is_finite() && scale > 0.0) {
            return Err(PyValueError::new_err("scale must be positive"));
        }
        let patch = spec.build(metric.field.dim()).map_err(to_py)?;
        Ok(Surface {
            metric: metric.field.clone(),
            patch,
            scale,
        })
    }

    #[getter]
    fn params(&self) -> usize {
        self.patch.params()
    }

    #[getter]
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.patch.bounds().to_vec()
    }

    fn point(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(vec_out(&self.patch.point(&vec_in(u)).map_err(to_py)?))
    }

    /// Isotropic frame `{e1, screen, en}` at `u`.
    fn frame<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let (ctx, u) = self.ctx(u)?;
        let f = ctx.frame(&u).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("point", vec_out(&f.point))?;
        d.set_item("e1", vec_out(&f.e1))?;
        d.set_item("screen", f.screen.iter().map(vec_out).collect::<Vec<_>>())?;
        d.set_item("en", vec_out(&f.en))?;
        Ok(d)
    }

    /// Second fundamental tensor, shape-operator eigenvalues and classification at `u`.
    fn shape<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let (ctx, u) = self.ctx(u)?;
        let s = ctx.shape(&u).map_err(to_py)?;
        let class = classify(&s, ctx.tolerances());
        let d = PyDict::new(py);
        d.set_item("lambda", mat_out(&s.lambda_low))?;
        d.set_item("screen_gram", mat_out(&s.screen_gram))?;
        d.set_item("eigenvalues", vec_out(&s.eigenvalues))?;
        d.set_item("classification", class.label())?;
        if let Classification::TotallyUmbilical { lambda } = class {
            d.set_item("umbilic_factor", lambda)?;
        }
        Ok(d)
    }

    /// Elementary invariants `I_p`, power sums and eigenvalues at `u`.
    fn invariants<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let (ctx, u) = self.ctx(u)?;
        let set = invariants::invariant_set(&ctx.shape(&u).map_err(to_py)?);
        let d = PyDict::new(py);
        d.set_item("elementary", &set.elementary)?;
        d.set_item("power_sums", &set.power_sums)?;
        d.set_item("eigenvalues", &set.eigenvalues)?;
        Ok(d)
    }

    /// Invariant screen at `u`; raises `ScreenUnavailable(reason)` when its hypotheses fail.
    fn screen<'py>(&self, py: Python<'py>, u: Vec<f64>, kind: &str) -> PyResult<Bound<'py, PyDict>> {
        let spec = screen_spec(kind)?;
        let (ctx, u) = self.ctx(u)?;
        let s = construct_screen(&ctx, &u, spec).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("coefficients", vec_out(&s.coefficients))?;
        d.set_item("basis", s.basis.iter().map(vec_out).collect::<Vec<_>>())?;
        d.set_item("projector", mat_out(&s.projector()))?;
        d.set_item("level_set_residual", s.level_set_residual)?;
        Ok(d)
    }

    /// Induced connection of a screen: `{integrable, asymmetry, nu_ab}`.
    fn connection<'py>(&self, py: Python<'py>, u: Vec<f64>, kind: &str) -> PyResult<Bound<'py, PyDict>> {
        let spec = screen_spec(kind)?;
        let (ctx, u) = self.ctx(u)?;
        let c = screen_connection(&ctx, &u, spec).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("integrable", c.integrable)?;
        d.set_item("asymmetry", c.asymmetry)?;
        d.set_item("nu_a", vec_out(&c.nu_a))?;
        d.set_item("nu_ab", mat_out(&c.nu_ab))?;
        Ok(d)
    }

    /// Focal points along the generator through `u`.
    fn foci<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let (ctx, u) = self.ctx(u)?;
        let s = ctx.shape(&u).map_err(to_py)?;
        let set = geodesics::focal_points(&s, ctx.tolerances());
        let foci: Vec<Bound<'py, PyDict>> = set
            .foci
            .iter()
            .map(|f| {
                let d = PyDict::new(py);
                d.set_item("s", f.s)?;
                d.set_item("multiplicity", f.multiplicity)?;
                d.set_item("point", vec_out(&f.point))?;
                d.set_item("jacobian", f.jacobian)?;
                Ok(d)
            })
            .collect::<PyResult<_>>()?;
        let d = PyDict::new(py);
        d.set_item("foci", foci)?;
        d.set_item("at_infinity", set.at_infinity)?;
        Ok(d)
    }
}

type Entry = (String, &'static str, Vec<(&'static str, &'static str)>, &'static str);

/// Catalog entries as `(kind, name, parameters, description)` tuples.
#[pyfunction]
fn catalog_entries() -> Vec<Entry> {
    catalog::catalog()
        .into_iter()
        .map(|e| (format!("{:?}", e.kind).to_lowercase(), e.name, e.parameters, e.description))
        .collect()
}

/// Runs a sweep from config text and returns the structured report as a JSON string.
#[pyfunction]
fn analyze(py: Python<'_>, config: &str) -> PyResult<String> {
    let report = py.detach(|| {
        let cfg = AnalysisConfig::parse(config)?;
        analysis::analyze(&cfg, config)
    });
    let bytes = emit::structured_bytes(&report.map_err(to_py)?).map_err(to_py)?;
    String::from_utf8(bytes).map_err(|e| LightlikeError::new_err(e.to_string()))
}

/// Runs a sweep from a config file and writes `format` output into `out`; returns the written paths.
#[pyfunction]
#[pyo3(signature = (config, out, format = "all"))]
fn analyze_to(py: Python<'_>, config: PathBuf, out: PathBuf, format: &str) -> PyResult<Vec<PathBuf>> {
    let format: Format = format.parse().map_err(PyValueError::new_err)?;
    py.detach(|| {
        let (cfg, text) = AnalysisConfig::from_path(&config)?;
        let report = analysis::analyze(&cfg, &text)?;
        emit::emit(&report, format, &out)
    })
    .map_err(to_py)
}

/// Built-in checks as `(id, name, passed, detail)` tuples.
#[pyfunction]
fn run_selftest(py: Python<'_>) -> Vec<(usize, &'static str, bool, String)> {
    py.detach(selftest::run)
        .into_iter()
        .map(|r| (r.id, r.name, r.passed, r.detail))
        .collect()
}

#[pymodule]
fn lightlike_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Metric>()?;
    m.add_class::<Surface>()?;
    m.add_function(wrap_pyfunction!(catalog_entries, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_to, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    m.add("LightlikeError", m.py().get_type::<LightlikeError>())?;
    m.add("ScreenUnavailable", m.py().get_type::<ScreenUnavailable>())?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
