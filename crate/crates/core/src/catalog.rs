//! Built-in metrics and hypersurface patches.
//!
//! Coordinates put time last: Minkowski space is `diag(1, …, 1, −1)`.

use std::f64::consts::PI;

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes,
    Function, HashMapContext, Node, Value,
};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypersurface::HypersurfacePatch;
use crate::tensorcalc::MetricField;

/// Half-width of the coordinate box used by the flat and conformally flat charts.
const BOX: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Metric,
    Hypersurface,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub kind: EntryKind,
    pub name: &'static str,
    pub parameters: Vec<(&'static str, &'static str)>,
    pub description: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    use EntryKind::*;
    vec![
        CatalogEntry {
            kind: Metric,
            name: "minkowski",
            parameters: vec![("dim", "4")],
            description: "flat space, diag(1, …, 1, −1)",
        },
        CatalogEntry {
            kind: Metric,
            name: "de_sitter",
            parameters: vec![("dim", "4"), ("curvature", "1.0 (> 0)")],
            description: "constant curvature K > 0 in the conformally flat chart η/(1 + K⟨x,x⟩/4)²",
        },
        CatalogEntry {
            kind: Metric,
            name: "anti_de_sitter",
            parameters: vec![("dim", "4"), ("curvature", "-1.0 (< 0)")],
            description: "constant curvature K < 0 in the conformally flat chart",
        },
        CatalogEntry {
            kind: Metric,
            name: "eddington_finkelstein",
            parameters: vec![("mass", "1.0")],
            description: "Schwarzschild in ingoing coordinates (r, θ, φ, v)",
        },
        CatalogEntry {
            kind: Hypersurface,
            name: "null_hyperplane",
            parameters: vec![],
            description: "x¹ = xⁿ, parameters (s, y², …, yⁿ⁻¹)",
        },
        CatalogEntry {
            kind: Hypersurface,
            name: "light_cone",
            parameters: vec![("apex", "origin")],
            description: "future light cone, parameters (s, angles on Sⁿ⁻²)",
        },
        CatalogEntry {
            kind: Hypersurface,
            name: "ellipsoid_null_congruence",
            parameters: vec![("a", "1.0"), ("b", "1.3"), ("c", "1.7")],
            description: "null geodesics fired outward from a triaxial ellipsoid at t = 0, parameters (s, θ, φ); 4D",
        },
        CatalogEntry {
            kind: Hypersurface,
            name: "schwarzschild_horizon",
            parameters: vec![("mass", "1.0")],
            description: "r = 2m in Eddington–Finkelstein coordinates, parameters (v, θ, φ)",
        },
        CatalogEntry {
            kind: Hypersurface,
            name: "custom",
            parameters: vec![("coords", "n expressions"), ("params", "parameter names"), ("bounds", "per-parameter intervals")],
            description: "user parameterization; expressions may use sin cos tan exp ln sqrt sinh cosh tanh abs pow and pi",
        },
    ]
}

fn eta(n: usize) -> DMatrix<f64> {
    let mut d = DVector::from_element(n, 1.0);
    d[n - 1] = -1.0;
    DMatrix::from_diagonal(&d)
}

pub fn minkowski(n: usize) -> MetricField {
    let g = eta(n);
    MetricField::new(format!("minkowski({n})"), n, vec![(-BOX, BOX); n], move |_| g.clone())
        .with_derivatives(
            move |_| vec![DMatrix::zeros(n, n); n],
            move |_| vec![vec![DMatrix::zeros(n, n); n]; n],
        )
}

/// Constant curvature `k` in the chart `g = η/ψ²`, `ψ = 1 + k⟨x,x⟩/4`.
///
/// The chart is restricted to `ψ > 0.1`.
fn conformally_flat(name: String, n: usize, k: f64) -> MetricField {
    let e = eta(n);
    let psi = move |x: &DVector<f64>| {
        let ex = eta_apply(x);
        1.0 + 0.25 * k * x.dot(&ex)
    };
    let e1 = e.clone();
    let e2 = e.clone();
    let e3 = e.clone();
    MetricField::new(name, n, vec![(-BOX, BOX); n], move |x| &e1 / psi(x).powi(2))
        .with_domain(move |x| psi(x) > 0.1)
        .with_derivatives(
            move |x| {
                let p = psi(x);
                let dpsi = eta_apply(x) * (0.5 * k);
                (0..n).map(|i| &e2 * (-2.0 * dpsi[i] / p.powi(3))).collect()
            },
            move |x| {
                let p = psi(x);
                let dpsi = eta_apply(x) * (0.5 * k);
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let ddpsi = if i == j { 0.5 * k * e3[(i, i)] } else { 0.0 };
                                &e3 * (6.0 * dpsi[i] * dpsi[j] / p.powi(4) - 2.0 * ddpsi / p.powi(3))
                            })
                            .collect()
                    })
                    .collect()
            },
        )
}

fn eta_apply(x: &DVector<f64>) -> DVector<f64> {
    let mut v = x.clone();
    let n = v.len();
    v[n - 1] = -v[n - 1];
    v
}

pub fn de_sitter(n: usize, k: f64) -> Result<MetricField> {
    if !(k > 0.0) {
        return Err(Error::Unsupported(format!("de Sitter curvature must be positive, got {k}")));
    }
    Ok(conformally_flat(format!("de_sitter({n}, K={k})"), n, k))
}

pub fn anti_de_sitter(n: usize, k: f64) -> Result<MetricField> {
    if !(k < 0.0) {
        return Err(Error::Unsupported(format!("anti-de Sitter curvature must be negative, got {k}")));
    }
    Ok(conformally_flat(format!("anti_de_sitter({n}, K={k})"), n, k))
}

/// Schwarzschild metric in ingoing Eddington–Finkelstein coordinates `(r, θ, φ, v)`:
/// `−(1 − 2m/r) dv² + 2 dv dr + r² dθ² + r² sin²θ dφ²`.
pub fn eddington_finkelstein(m: f64) -> Result<MetricField> {
    if !(m > 0.0) {
        return Err(Error::Unsupported(format!("mass must be positive, got {m}")));
    }
    let bounds = vec![(0.2 * m, 60.0 * m), (0.01, PI - 0.01), (-4.0 * PI, 4.0 * PI), (-1e3, 1e3)];
    let metric = move |x: &DVector<f64>| {
        let (r, th) = (x[0], x[1]);
        let mut g = DMatrix::zeros(4, 4);
        g[(0, 3)] = 1.0;
        g[(3, 0)] = 1.0;
        g[(3, 3)] = -(1.0 - 2.0 * m / r);
        g[(1, 1)] = r * r;
        g[(2, 2)] = r * r * th.sin().powi(2);
        g
    };
    let first = move |x: &DVector<f64>| {
        let (r, th) = (x[0], x[1]);
        let mut dr = DMatrix::zeros(4, 4);
        dr[(3, 3)] = -2.0 * m / (r * r);
        dr[(1, 1)] = 2.0 * r;
        dr[(2, 2)] = 2.0 * r * th.sin().powi(2);
        let mut dth = DMatrix::zeros(4, 4);
        dth[(2, 2)] = r * r * (2.0 * th).sin();
        vec![dr, dth, DMatrix::zeros(4, 4), DMatrix::zeros(4, 4)]
    };
    let second = move |x: &DVector<f64>| {
        let (r, th) = (x[0], x[1]);
        let z = DMatrix::<f64>::zeros(4, 4);
        let mut rr = z.clone();
        rr[(3, 3)] = 4.0 * m / (r * r * r);
        rr[(1, 1)] = 2.0;
        rr[(2, 2)] = 2.0 * th.sin().powi(2);
        let mut rth = z.clone();
        rth[(2, 2)] = 2.0 * r * (2.0 * th).sin();
        let mut thth = z.clone();
        thth[(2, 2)] = 2.0 * r * r * (2.0 * th).cos();
        vec![
            vec![rr, rth.clone(), z.clone(), z.clone()],
            vec![rth, thth, z.clone(), z.clone()],
            vec![z.clone(); 4],
            vec![z.clone(); 4],
        ]
    };
    Ok(MetricField::new(format!("eddington_finkelstein(m={m})"), 4, bounds, metric)
        .with_derivatives(first, second))
}

/// `x¹ = xⁿ`: parameters `(s, y², …, yⁿ⁻¹)` map to `(s, y², …, yⁿ⁻¹, s)`.
pub fn null_hyperplane(n: usize) -> HypersurfacePatch {
    HypersurfacePatch::new("null_hyperplane", n, vec![(-BOX, BOX); n - 1], move |u| {
        let mut x = DVector::zeros(n);
        x[0] = u[0];
        for i in 1..n - 1 {
            x[i] = u[i];
        }
        x[n - 1] = u[0];
        Ok(x)
    })
    .with_jacobian(move |_| {
        let mut j = DMatrix::zeros(n, n - 1);
        j[(0, 0)] = 1.0;
        j[(n - 1, 0)] = 1.0;
        for i in 1..n - 1 {
            j[(i, i)] = 1.0;
        }
        Ok(j)
    })
}

/// Hyperspherical unit vector in `R^{d+1}` from `d` angles, and its angle derivatives.
///
/// `ω_i = sin α_1 ⋯ sin α_{i−1} cos α_i` for `i ≤ d`, `ω_{d+1} = sin α_1 ⋯ sin α_d`.
pub fn hyperspherical(angles: &[f64]) -> (DVector<f64>, Vec<DVector<f64>>) {
    let d = angles.len();
    let comp = |i: usize, diff: Option<usize>| -> f64 {
        let mut v = 1.0;
        for (j, &a) in angles.iter().enumerate().take(i.min(d)) {
            v *= if diff == Some(j) { a.cos() } else { a.sin() };
        }
        if i < d {
            v *= if diff == Some(i) { -angles[i].sin() } else { angles[i].cos() };
        }
        if let Some(k) = diff {
            if k > i || (k == i && i == d) {
                return 0.0;
            }
        }
        v
    };
    let omega = DVector::from_fn(d + 1, |i, _| comp(i, None));
    let dw = (0..d).map(|k| DVector::from_fn(d + 1, |i, _| comp(i, Some(k)))).collect();
    (omega, dw)
}

/// Future light cone `x = apex + s (ω, 1)` with `ω` on the unit sphere `Sⁿ⁻²`.
pub fn light_cone(n: usize, apex: Option<DVector<f64>>) -> HypersurfacePatch {
    let apex = apex.unwrap_or_else(|| DVector::zeros(n));
    let mut bounds = vec![(1e-3, BOX)];
    for k in 0..n - 2 {
        bounds.push(if k + 1 < n - 2 { (1e-3, PI - 1e-3) } else { (-4.0 * PI, 4.0 * PI) });
    }
    HypersurfacePatch::new("light_cone", n, bounds, move |u| {
        let angles: Vec<f64> = u.iter().skip(1).copied().collect();
        let (w, _) = hyperspherical(&angles);
        let mut x = apex.clone();
        for i in 0..n - 1 {
            x[i] += u[0] * w[i];
        }
        x[n - 1] += u[0];
        Ok(x)
    })
    .with_jacobian(move |u| {
        let angles: Vec<f64> = u.iter().skip(1).copied().collect();
        let (w, dw) = hyperspherical(&angles);
        let mut j = DMatrix::zeros(n, n - 1);
        for i in 0..n - 1 {
            j[(i, 0)] = w[i];
            for k in 0..n - 2 {
                j[(i, k + 1)] = u[0] * dw[k][i];
            }
        }
        j[(n - 1, 0)] = 1.0;
        Ok(j)
    })
}

/// Point, outward unit normal and their `(θ, φ)` derivatives on the ellipsoid
/// `(a sinθ cosφ, b sinθ sinφ, c cosθ)`.
struct EllipsoidFrame {
    y: [f64; 3],
    y_th: [f64; 3],
    y_ph: [f64; 3],
    nu: [f64; 3],
    nu_th: [f64; 3],
    nu_ph: [f64; 3],
}

fn ellipsoid_frame(a: f64, b: f64, c: f64, th: f64, ph: f64) -> EllipsoidFrame {
    let (st, ct, sp, cp) = (th.sin(), th.cos(), ph.sin(), ph.cos());
    let y = [a * st * cp, b * st * sp, c * ct];
    let y_th = [a * ct * cp, b * ct * sp, -c * st];
    let y_ph = [-a * st * sp, b * st * cp, 0.0];
    let axes = [a * a, b * b, c * c];
    let m: [f64; 3] = std::array::from_fn(|i| y[i] / axes[i]);
    let m_th: [f64; 3] = std::array::from_fn(|i| y_th[i] / axes[i]);
    let m_ph: [f64; 3] = std::array::from_fn(|i| y_ph[i] / axes[i]);
    let norm = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    let nu: [f64; 3] = std::array::from_fn(|i| m[i] / norm);
    let d_unit = |dm: [f64; 3]| -> [f64; 3] {
        let p = nu[0] * dm[0] + nu[1] * dm[1] + nu[2] * dm[2];
        std::array::from_fn(|i| (dm[i] - nu[i] * p) / norm)
    };
    EllipsoidFrame {
        y,
        y_th,
        y_ph,
        nu,
        nu_th: d_unit(m_th),
        nu_ph: d_unit(m_ph),
    }
}

/// Null hypersurface `x = (y(θ, φ) + s ν(θ, φ), s)` swept by the outward null
/// normals of a triaxial ellipsoid lying in the slice `t = 0`.
pub fn ellipsoid_null_congruence(a: f64, b: f64, c: f64) -> Result<HypersurfacePatch> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::Unsupported("ellipsoid semi-axes must be positive".into()));
    }
    let bounds = vec![(-0.5 * a.min(b).min(c), BOX), (1e-3, PI - 1e-3), (-4.0 * PI, 4.0 * PI)];
    Ok(HypersurfacePatch::new("ellipsoid_null_congruence", 4, bounds, move |u| {
        let f = ellipsoid_frame(a, b, c, u[1], u[2]);
        let s = u[0];
        Ok(DVector::from_fn(4, |i, _| if i < 3 { f.y[i] + s * f.nu[i] } else { s }))
    })
    .with_jacobian(move |u| {
        let f = ellipsoid_frame(a, b, c, u[1], u[2]);
        let s = u[0];
        let mut j = DMatrix::zeros(4, 3);
        for i in 0..3 {
            j[(i, 0)] = f.nu[i];
            j[(i, 1)] = f.y_th[i] + s * f.nu_th[i];
            j[(i, 2)] = f.y_ph[i] + s * f.nu_ph[i];
        }
        j[(3, 0)] = 1.0;
        Ok(j)
    })
    .with_scale(a.max(b).max(c)))
}

/// The event horizon `r = 2m` of [`eddington_finkelstein`], parameters `(v, θ, φ)`.
pub fn schwarzschild_horizon(m: f64) -> Result<HypersurfacePatch> {
    if !(m > 0.0) {
        return Err(Error::Unsupported(format!("mass must be positive, got {m}")));
    }
    let bounds = vec![(-1e3, 1e3), (0.01, PI - 0.01), (-4.0 * PI, 4.0 * PI)];
    Ok(HypersurfacePatch::new("schwarzschild_horizon", 4, bounds, move |u| {
        Ok(DVector::from_vec(vec![2.0 * m, u[1], u[2], u[0]]))
    })
    .with_jacobian(|_| {
        let mut j = DMatrix::zeros(4, 3);
        j[(3, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        j[(2, 2)] = 1.0;
        Ok(j)
    })
    .with_scale(2.0 * m))
}

type Unary = (&'static str, fn(f64) -> f64);

fn base_context() -> HashMapContext<DefaultNumericTypes> {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    let unary: [Unary; 9] = [
        ("sin", f64::sin),
        ("cos", f64::cos),
        ("tan", f64::tan),
        ("exp", f64::exp),
        ("ln", f64::ln),
        ("sqrt", f64::sqrt),
        ("sinh", f64::sinh),
        ("cosh", f64::cosh),
        ("tanh", f64::tanh),
    ];
    for (name, f) in unary {
        ctx.set_function(
            name.to_string(),
            Function::new(move |arg: &Value<DefaultNumericTypes>| Ok(Value::Float(f(arg.as_number()?)))),
        )
        .expect("function registration");
    }
    ctx.set_function(
        "abs".to_string(),
        Function::new(|arg: &Value<DefaultNumericTypes>| Ok(Value::Float(arg.as_number()?.abs()))),
    )
    .expect("function registration");
    ctx.set_function(
        "pow".to_string(),
        Function::new(|arg: &Value<DefaultNumericTypes>| {
            let t = arg.as_fixed_len_tuple(2)?;
            Ok(Value::Float(t[0].as_number()?.powf(t[1].as_number()?)))
        }),
    )
    .expect("function registration");
    ctx.set_value("pi".to_string(), Value::Float(PI))
        .expect("constant registration");
    ctx
}

/// A patch given by one expression per ambient coordinate in the named parameters.
pub fn custom(
    coords: &[String],
    params: &[String],
    bounds: Vec<(f64, f64)>,
) -> Result<HypersurfacePatch> {
    let n = coords.len();
    if params.len() + 1 != n {
        return Err(Error::config(
            "hypersurface.params",
            format!("expected {} parameter names for {n} coordinates, got {}", n - 1, params.len()),
        ));
    }
    if bounds.len() != params.len() {
        return Err(Error::config(
            "hypersurface.bounds",
            format!("expected {} intervals, got {}", params.len(), bounds.len()),
        ));
    }
    let trees: Vec<Node<DefaultNumericTypes>> = coords
        .iter()
        .enumerate()
        .map(|(i, e)| {
            build_operator_tree(e)
                .map_err(|err| Error::config(format!("hypersurface.coords[{i}]"), err.to_string()))
        })
        .collect::<Result<_>>()?;
    let names: Vec<String> = params.to_vec();
    let eval = move |u: &DVector<f64>| -> Result<DVector<f64>> {
        let mut ctx = base_context();
        for (name, v) in names.iter().zip(u.iter()) {
            ctx.set_value(name.clone(), Value::Float(*v))
                .map_err(|e| Error::Unsupported(e.to_string()))?;
        }
        let mut x = DVector::zeros(trees.len());
        for (i, t) in trees.iter().enumerate() {
            x[i] = t
                .eval_number_with_context(&ctx)
                .map_err(|e| Error::config(format!("hypersurface.coords[{i}]"), e.to_string()))?;
        }
        Ok(x)
    };
    let probe = DVector::from_iterator(bounds.len(), bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)));
    eval(&probe)?;
    Ok(HypersurfacePatch::new("custom", n, bounds, eval))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperspherical_is_unit_with_correct_derivatives() {
        let angles = [0.4, 1.1, -0.7];
        let (w, dw) = hyperspherical(&angles);
        assert!((w.norm() - 1.0).abs() < 1e-15);
        for k in 0..3 {
            let h = 1e-6;
            let mut p = angles;
            p[k] += h;
            let mut m = angles;
            m[k] -= h;
            let fd = (hyperspherical(&p).0 - hyperspherical(&m).0) / (2.0 * h);
            assert!((fd - &dw[k]).amax() < 1e-9);
        }
    }

    #[test]
    fn analytic_jacobians_match_fd() {
        let u = DVector::from_vec(vec![0.7, 0.9, 0.6]);
        for p in [light_cone(4, None), ellipsoid_null_congruence(1.0, 1.3, 1.7).unwrap()] {
            let analytic = p.jacobian(&u).unwrap();
            let bare = HypersurfacePatch::new("bare", 4, p.bounds().to_vec(), {
                let p = p.clone();
                move |v| p.point(v)
            });
            assert!((analytic - bare.jacobian(&u).unwrap()).amax() < 1e-10);
        }
    }

    #[test]
    fn custom_matches_catalog_hyperplane() {
        let c = custom(
            &["s".into(), "y".into(), "z".into(), "s".into()],
            &["s".into(), "y".into(), "z".into()],
            vec![(-1.0, 1.0); 3],
        )
        .unwrap();
        let u = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        assert_eq!(c.point(&u).unwrap(), null_hyperplane(4).point(&u).unwrap());
        let trig = custom(
            &["sin(s) * pow(y, 2)".into(), "y".into(), "z".into(), "s".into()],
            &["s".into(), "y".into(), "z".into()],
            vec![(-1.0, 1.0); 3],
        )
        .unwrap();
        assert!((trig.point(&u).unwrap()[0] - 0.3f64.sin() * 0.04).abs() < 1e-15);
    }

    #[test]
    fn custom_reports_bad_expressions() {
        let err = custom(
            &["s +".into(), "y".into(), "z".into(), "s".into()],
            &["s".into(), "y".into(), "z".into()],
            vec![(-1.0, 1.0); 3],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "hypersurface.coords[0]"));
    }

    #[test]
    fn invalid_parameters() {
        assert!(de_sitter(4, -1.0).is_err());
        assert!(anti_de_sitter(4, 1.0).is_err());
        assert!(eddington_finkelstein(0.0).is_err());
    }
}
