//! Analysis configuration.
//!
//! A config is TOML, usually written as flat dotted keys:
//!
//! ```toml
//! metric.name = "minkowski"
//! metric.dim = 4
//! hypersurface.name = "ellipsoid_null_congruence"
//! hypersurface.a = 1.0
//! hypersurface.b = 1.3
//! hypersurface.c = 1.7
//! grid.counts = [3, 4, 4]
//! grid.ranges = [[0.1, 1.0], [0.5, 1.2], [0.4, 1.2]]
//! gauge_seed = 7
//! outputs = ["shape", "invariants", "screens", "foci"]
//! ```
//!
//! Errors name the offending key path.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;
use toml::{Table, Value};

use crate::catalog;
use crate::error::{Error, Result};
use crate::hypersurface::{HypersurfacePatch, Tolerances};
use crate::tensorcalc::MetricField;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum MetricSpec {
    Minkowski { dim: usize },
    DeSitter { dim: usize, curvature: f64 },
    AntiDeSitter { dim: usize, curvature: f64 },
    EddingtonFinkelstein { mass: f64 },
}

impl MetricSpec {
    pub fn dim(&self) -> usize {
        match self {
            MetricSpec::Minkowski { dim } | MetricSpec::DeSitter { dim, .. } | MetricSpec::AntiDeSitter { dim, .. } => {
                *dim
            }
            MetricSpec::EddingtonFinkelstein { .. } => 4,
        }
    }

    pub fn build(&self) -> Result<MetricField> {
        let wrap = |e: Error| Error::config("metric", e.to_string());
        match *self {
            MetricSpec::Minkowski { dim } => Ok(catalog::minkowski(dim)),
            MetricSpec::DeSitter { dim, curvature } => catalog::de_sitter(dim, curvature).map_err(wrap),
            MetricSpec::AntiDeSitter { dim, curvature } => catalog::anti_de_sitter(dim, curvature).map_err(wrap),
            MetricSpec::EddingtonFinkelstein { mass } => catalog::eddington_finkelstein(mass).map_err(wrap),
        }
    }

    /// True for the catalog metrics of constant curvature (including zero).
    pub fn constant_curvature(&self) -> Option<f64> {
        match *self {
            MetricSpec::Minkowski { .. } => Some(0.0),
            MetricSpec::DeSitter { curvature, .. } | MetricSpec::AntiDeSitter { curvature, .. } => Some(curvature),
            MetricSpec::EddingtonFinkelstein { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum HypersurfaceSpec {
    NullHyperplane,
    LightCone {
        apex: Option<Vec<f64>>,
    },
    EllipsoidNullCongruence {
        a: f64,
        b: f64,
        c: f64,
    },
    SchwarzschildHorizon {
        mass: f64,
    },
    Custom {
        coords: Vec<String>,
        params: Vec<String>,
        bounds: Vec<(f64, f64)>,
    },
}

impl HypersurfaceSpec {
    pub fn build(&self, dim: usize) -> Result<HypersurfacePatch> {
        let wrap = |e: Error| match e {
            Error::Config { .. } => e,
            other => Error::config("hypersurface", other.to_string()),
        };
        let patch = match self {
            HypersurfaceSpec::NullHyperplane => catalog::null_hyperplane(dim),
            HypersurfaceSpec::LightCone { apex } => {
                let apex = apex.as_ref().map(|a| DVector::from_column_slice(a));
                if apex.as_ref().is_some_and(|a| a.len() != dim) {
                    return Err(Error::config("hypersurface.apex", format!("expected {dim} coordinates")));
                }
                catalog::light_cone(dim, apex)
            }
            HypersurfaceSpec::EllipsoidNullCongruence { a, b, c } => {
                catalog::ellipsoid_null_congruence(*a, *b, *c).map_err(wrap)?
            }
            HypersurfaceSpec::SchwarzschildHorizon { mass } => catalog::schwarzschild_horizon(*mass).map_err(wrap)?,
            HypersurfaceSpec::Custom { coords, params, bounds } => {
                catalog::custom(coords, params, bounds.clone()).map_err(wrap)?
            }
        };
        if patch.ambient_dim() != dim {
            return Err(Error::config(
                "hypersurface.name",
                format!("{} lives in dimension {}, metric has dimension {dim}", patch.name(), patch.ambient_dim()),
            ));
        }
        Ok(patch)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Shape,
    Invariants,
    Sectional,
    Screens,
    Foci,
    Connection,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::Shape,
        Output::Invariants,
        Output::Sectional,
        Output::Screens,
        Output::Foci,
        Output::Connection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Shape => "shape",
            Output::Invariants => "invariants",
            Output::Sectional => "sectional",
            Output::Screens => "screens",
            Output::Foci => "foci",
            Output::Connection => "connection",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub counts: Vec<usize>,
    pub ranges: Vec<(f64, f64)>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameters of point `index`; the last axis varies fastest.
    pub fn point(&self, index: usize) -> DVector<f64> {
        let p = self.counts.len();
        let mut out = DVector::zeros(p);
        let mut rest = index;
        for k in (0..p).rev() {
            let n = self.counts[k];
            let i = rest % n;
            rest /= n;
            let (lo, hi) = self.ranges[k];
            out[k] = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub metric: MetricSpec,
    pub hypersurface: HypersurfaceSpec,
    pub grid: Grid,
    pub tolerances: Tolerances,
    pub gauge_seed: u64,
    /// Random gauges per screen used to measure gauge dependence.
    pub gauge_reruns: usize,
    /// Random isotropic planes per point for the sectional-curvature summary.
    pub sectional_samples: usize,
    pub outputs: BTreeSet<Output>,
}

impl AnalysisConfig {
    pub fn from_path(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::parse(&text)?;
        Ok((cfg, text))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::config("<document>", e.message()))?;
        let root = Node { path: String::new(), table: &table };
        root.deny_unknown(&["metric", "hypersurface", "grid", "tolerances", "gauge_seed", "gauge_reruns", "sectional_samples", "outputs"])?;

        let metric = parse_metric(&root.table_at("metric")?)?;
        let hypersurface = parse_hypersurface(&root.table_at("hypersurface")?)?;
        let dim = metric.dim();
        let patch = hypersurface.build(dim)?;
        let grid = parse_grid(root.optional_table("grid")?, &patch)?;

        let scale = patch.scale();
        let mut tolerances = Tolerances::for_scale(scale);
        if let Some(t) = root.optional_table("tolerances")? {
            t.deny_unknown(&["geodesic_abs", "umbilic_rel", "cluster_rel"])?;
            if let Some(v) = t.opt_positive("geodesic_abs")? {
                tolerances.geodesic_abs = v;
            }
            if let Some(v) = t.opt_positive("umbilic_rel")? {
                tolerances.umbilic_rel = v;
            }
            if let Some(v) = t.opt_positive("cluster_rel")? {
                tolerances.cluster_rel = v;
            }
        }

        let gauge_seed = root.opt_uint("gauge_seed")?.unwrap_or(0);
        let gauge_reruns = root.opt_uint("gauge_reruns")?.unwrap_or(3) as usize;
        let sectional_samples = root.opt_uint("sectional_samples")?.unwrap_or(10) as usize;
        let outputs = match root.get("outputs") {
            None => Output::ALL.into_iter().collect(),
            Some(v) => {
                let path = root.child("outputs");
                let arr = v.as_array().ok_or_else(|| Error::config(&path, "expected an array of strings"))?;
                let mut set = BTreeSet::new();
                for (i, item) in arr.iter().enumerate() {
                    let name = item
                        .as_str()
                        .ok_or_else(|| Error::config(format!("{path}[{i}]"), "expected a string"))?;
                    let out = Output::ALL.into_iter().find(|o| o.name() == name).ok_or_else(|| {
                        Error::config(
                            format!("{path}[{i}]"),
                            format!("unknown output `{name}` (expected one of shape, invariants, sectional, screens, foci, connection)"),
                        )
                    })?;
                    set.insert(out);
                }
                set
            }
        };
        Ok(AnalysisConfig {
            metric,
            hypersurface,
            grid,
            tolerances,
            gauge_seed,
            gauge_reruns,
            sectional_samples,
            outputs,
        })
    }

    pub fn build(&self) -> Result<(MetricField, HypersurfacePatch)> {
        let metric = self.metric.build()?;
        let patch = self.hypersurface.build(metric.dim())?;
        Ok((metric, patch))
    }

    pub fn wants(&self, out: Output) -> bool {
        self.outputs.contains(&out)
    }
}

fn parse_metric(t: &Node) -> Result<MetricSpec> {
    let name = t.req_str("name")?;
    let spec = match name {
        "minkowski" => {
            t.deny_unknown(&["name", "dim"])?;
            MetricSpec::Minkowski { dim: t.dim()? }
        }
        "de_sitter" => {
            t.deny_unknown(&["name", "dim", "curvature"])?;
            let k = t.opt_f64("curvature")?.unwrap_or(1.0);
            if !(k > 0.0) {
                return Err(Error::config(t.child("curvature"), "de Sitter curvature must be positive"));
            }
            MetricSpec::DeSitter { dim: t.dim()?, curvature: k }
        }
        "anti_de_sitter" => {
            t.deny_unknown(&["name", "dim", "curvature"])?;
            let k = t.opt_f64("curvature")?.unwrap_or(-1.0);
            if !(k < 0.0) {
                return Err(Error::config(t.child("curvature"), "anti-de Sitter curvature must be negative"));
            }
            MetricSpec::AntiDeSitter { dim: t.dim()?, curvature: k }
        }
        "eddington_finkelstein" => {
            t.deny_unknown(&["name", "mass"])?;
            MetricSpec::EddingtonFinkelstein { mass: t.mass()? }
        }
        other => {
            return Err(Error::config(
                t.child("name"),
                format!("unknown metric `{other}` (expected minkowski, de_sitter, anti_de_sitter, eddington_finkelstein)"),
            ))
        }
    };
    Ok(spec)
}

fn parse_hypersurface(t: &Node) -> Result<HypersurfaceSpec> {
    let name = t.req_str("name")?;
    let spec = match name {
        "null_hyperplane" => {
            t.deny_unknown(&["name"])?;
            HypersurfaceSpec::NullHyperplane
        }
        "light_cone" => {
            t.deny_unknown(&["name", "apex"])?;
            HypersurfaceSpec::LightCone {
                apex: t.opt_f64_list("apex")?,
            }
        }
        "ellipsoid_null_congruence" => {
            t.deny_unknown(&["name", "a", "b", "c"])?;
            let mut axes = [1.0, 1.3, 1.7];
            for (k, key) in ["a", "b", "c"].iter().enumerate() {
                if let Some(v) = t.opt_positive(key)? {
                    axes[k] = v;
                }
            }
            HypersurfaceSpec::EllipsoidNullCongruence {
                a: axes[0],
                b: axes[1],
                c: axes[2],
            }
        }
        "schwarzschild_horizon" => {
            t.deny_unknown(&["name", "mass"])?;
            HypersurfaceSpec::SchwarzschildHorizon { mass: t.mass()? }
        }
        "custom" => {
            t.deny_unknown(&["name", "coords", "params", "bounds"])?;
            let coords = t.req_str_list("coords")?;
            let params = t.req_str_list("params")?;
            let bounds = t.req_intervals("bounds")?;
            if bounds.len() != params.len() {
                return Err(Error::config(
                    t.child("bounds"),
                    format!("expected {} intervals, one per parameter", params.len()),
                ));
            }
            HypersurfaceSpec::Custom { coords, params, bounds }
        }
        other => {
            return Err(Error::config(
                t.child("name"),
                format!(
                    "unknown hypersurface `{other}` (expected null_hyperplane, light_cone, ellipsoid_null_congruence, schwarzschild_horizon, custom)"
                ),
            ))
        }
    };
    Ok(spec)
}

fn parse_grid(t: Option<Node>, patch: &HypersurfacePatch) -> Result<Grid> {
    let p = patch.params();
    let bounds = patch.bounds();
    let Some(t) = t else {
        return Err(Error::config("grid.counts", "missing; one sample count per parameter is required"));
    };
    t.deny_unknown(&["counts", "ranges"])?;
    let counts_path = t.child("counts");
    let raw = t
        .get("counts")
        .ok_or_else(|| Error::config(&counts_path, "missing; one sample count per parameter is required"))?;
    let arr = raw
        .as_array()
        .ok_or_else(|| Error::config(&counts_path, "expected an array of integers"))?;
    if arr.len() != p {
        return Err(Error::config(&counts_path, format!("expected {p} entries, found {}", arr.len())));
    }
    let mut counts = Vec::with_capacity(p);
    for (i, v) in arr.iter().enumerate() {
        let n = v
            .as_integer()
            .ok_or_else(|| Error::config(format!("{counts_path}[{i}]"), "expected an integer"))?;
        if n < 2 {
            return Err(Error::config(format!("{counts_path}[{i}]"), "sample count must be at least 2"));
        }
        counts.push(n as usize);
    }
    let ranges = match t.get("ranges") {
        None => bounds.to_vec(),
        Some(_) => t.req_intervals("ranges")?,
    };
    if ranges.len() != p {
        return Err(Error::config(t.child("ranges"), format!("expected {p} intervals, found {}", ranges.len())));
    }
    for (k, ((lo, hi), (blo, bhi))) in ranges.iter().zip(bounds).enumerate() {
        if !(lo < hi) {
            return Err(Error::config(format!("{}[{k}]", t.child("ranges")), "empty interval"));
        }
        if *lo < *blo || *hi > *bhi {
            return Err(Error::config(
                format!("{}[{k}]", t.child("ranges")),
                format!("[{lo}, {hi}] leaves the patch bounds [{blo}, {bhi}]"),
            ));
        }
    }
    Ok(Grid { counts, ranges })
}

/// A table together with its dotted path, for error messages.
struct Node<'a> {
    path: String,
    table: &'a Table,
}

impl<'a> Node<'a> {
    fn child(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.get(key)
    }

    fn table_at(&self, key: &str) -> Result<Node<'a>> {
        self.optional_table(key)?
            .ok_or_else(|| Error::config(self.child(key), "missing section"))
    }

    fn optional_table(&self, key: &str) -> Result<Option<Node<'a>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Node { path: self.child(key), table: t })),
            Some(_) => Err(Error::config(self.child(key), "expected a table")),
        }
    }

    fn deny_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.table.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::config(self.child(k), "unknown key")),
            None => Ok(()),
        }
    }

    fn req_str(&self, key: &str) -> Result<&'a str> {
        self.get(key)
            .ok_or_else(|| Error::config(self.child(key), "missing"))?
            .as_str()
            .ok_or_else(|| Error::config(self.child(key), "expected a string"))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => as_f64(v)
                .map(Some)
                .ok_or_else(|| Error::config(self.child(key), "expected a number")),
        }
    }

    fn opt_positive(&self, key: &str) -> Result<Option<f64>> {
        match self.opt_f64(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(Error::config(self.child(key), "must be positive")),
            other => Ok(other),
        }
    }

    fn opt_uint(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .filter(|i| *i >= 0)
                .map(|i| Some(i as u64))
                .ok_or_else(|| Error::config(self.child(key), "expected a non-negative integer")),
        }
    }

    fn dim(&self) -> Result<usize> {
        let dim = self.opt_uint("dim")?.unwrap_or(4);
        if dim < 3 {
            return Err(Error::config(self.child("dim"), "dimension must be at least 3"));
        }
        Ok(dim as usize)
    }

    fn mass(&self) -> Result<f64> {
        Ok(self.opt_positive("mass")?.unwrap_or(1.0))
    }

    fn opt_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let path = self.child(key);
        let arr = v.as_array().ok_or_else(|| Error::config(&path, "expected an array of numbers"))?;
        arr.iter()
            .enumerate()
            .map(|(i, x)| as_f64(x).ok_or_else(|| Error::config(format!("{path}[{i}]"), "expected a number")))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn req_str_list(&self, key: &str) -> Result<Vec<String>> {
        let path = self.child(key);
        let arr = self
            .get(key)
            .ok_or_else(|| Error::config(&path, "missing"))?
            .as_array()
            .ok_or_else(|| Error::config(&path, "expected an array of strings"))?;
        arr.iter()
            .enumerate()
            .map(|(i, x)| {
                x.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::config(format!("{path}[{i}]"), "expected a string"))
            })
            .collect()
    }

    fn req_intervals(&self, key: &str) -> Result<Vec<(f64, f64)>> {
        let path = self.child(key);
        let arr = self
            .get(key)
            .ok_or_else(|| Error::config(&path, "missing"))?
            .as_array()
            .ok_or_else(|| Error::config(&path, "expected an array of [lo, hi] pairs"))?;
        arr.iter()
            .enumerate()
            .map(|(i, x)| {
                let pair = x.as_array().filter(|p| p.len() == 2);
                match pair.map(|p| (as_f64(&p[0]), as_f64(&p[1]))) {
                    Some((Some(lo), Some(hi))) => Ok((lo, hi)),
                    _ => Err(Error::config(format!("{path}[{i}]"), "expected [lo, hi]")),
                }
            })
            .collect()
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}
