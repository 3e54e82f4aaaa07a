//! Relative and absolute invariants of the shape operator, and isotropic
//! sectional curvature.
//!
//! A relative invariant of weight `p` scales by `c^p` under `e_1 ↦ c e_1`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{self, Stencil};
use crate::hypersurface::{ShapeData, Tolerances};
use crate::linalg;
use crate::nullframe::{self, FrameField, IsotropicFrame};
use crate::surface::SurfaceContext;
use crate::tensorcalc::{self, bilinear, CurvatureTensor};

/// `|I|` at or below this cannot normalize `e_1`.
pub const NORMALIZATION_THRESHOLD: f64 = 1e-8;

/// Coefficients of the characteristic polynomial of `λ^a_b` and its power traces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantSet {
    /// `I_1 … I_{n−2}`: sums of principal minors, `I_p` has weight `p`.
    pub elementary: Vec<f64>,
    /// `Ĩ_p = tr (λ^a_b)^p`.
    pub power_sums: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

impl InvariantSet {
    /// `I_p` by Faddeev–LeVerrier; `det(t − A) = t^m − I_1 t^{m−1} + I_2 t^{m−2} − …`.
    pub fn of_matrix(a: &DMatrix<f64>) -> Self {
        let m = a.nrows();
        let id = DMatrix::<f64>::identity(m, m);
        let mut mk = id.clone();
        let mut elementary = Vec::with_capacity(m);
        for k in 1..=m {
            let am = a * &mk;
            let ck = -am.trace() / k as f64;
            elementary.push(if k % 2 == 0 { ck } else { -ck });
            mk = am + &id * ck;
        }
        let mut power_sums = Vec::with_capacity(m);
        let mut pw = id;
        for _ in 0..m {
            pw = &pw * a;
            power_sums.push(pw.trace());
        }
        InvariantSet {
            elementary,
            power_sums,
            eigenvalues: Vec::new(),
        }
    }

    pub fn newton_residual(&self) -> f64 {
        let e = |k: usize| if k == 0 { 1.0 } else { self.elementary[k - 1] };
        let mut worst: f64 = 0.0;
        for k in 1..=self.elementary.len() {
            let mut rhs = 0.0;
            let mut scale: f64 = (k as f64 * e(k)).abs();
            for i in 1..=k {
                let term = e(k - i) * self.power_sums[i - 1];
                scale = scale.max(term.abs());
                rhs += if i % 2 == 1 { term } else { -term };
            }
            let r = (k as f64 * e(k) - rhs).abs() / scale.max(f64::MIN_POSITIVE);
            worst = worst.max(r);
        }
        worst
    }
}

pub fn invariant_set(shape: &ShapeData) -> InvariantSet {
    let mut set = InvariantSet::of_matrix(&shape.lambda_up);
    set.eigenvalues = shape.eigenvalues.iter().copied().collect();
    set
}

/// Scalar built from the shape operator that scales by a power of `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum RelativeInvariant {
    /// `I_p`, 1-based.
    Elementary(usize),
    /// `Ĩ_p`, 1-based.
    PowerSum(usize),
    /// Eigenvalue number `i` (0-based) in ascending order.
    Eigenvalue(usize),
    /// `I_1/(n−2)`: the factor `λ` of a totally umbilical point.
    Mean,
}

impl RelativeInvariant {
    pub fn weight(&self) -> u32 {
        match self {
            RelativeInvariant::Elementary(p) | RelativeInvariant::PowerSum(p) => *p as u32,
            RelativeInvariant::Eigenvalue(_) | RelativeInvariant::Mean => 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            RelativeInvariant::Elementary(p) => format!("I{p}"),
            RelativeInvariant::PowerSum(p) => format!("P{p}"),
            RelativeInvariant::Eigenvalue(i) => format!("lambda{}", i + 2),
            RelativeInvariant::Mean => "mean".into(),
        }
    }

    pub fn value(&self, shape: &ShapeData) -> Result<f64> {
        let m = shape.screen_dim();
        let check = |p: usize| {
            if p == 0 || p > m {
                Err(Error::Unsupported(format!("invariant index {p} outside 1..={m}")))
            } else {
                Ok(())
            }
        };
        match *self {
            RelativeInvariant::Elementary(p) => {
                check(p)?;
                Ok(invariant_set(shape).elementary[p - 1])
            }
            RelativeInvariant::PowerSum(p) => {
                check(p)?;
                Ok(invariant_set(shape).power_sums[p - 1])
            }
            RelativeInvariant::Eigenvalue(i) => {
                check(i + 1)?;
                Ok(shape.eigenvalues[i])
            }
            RelativeInvariant::Mean => Ok(shape.mean_eigenvalue()),
        }
    }

    /// `sign(I) |I|^{1/p}`, a weight-one invariant.
    pub fn weight_one_value(&self, shape: &ShapeData) -> Result<f64> {
        let v = self.value(shape)?;
        let w = self.weight() as f64;
        Ok(v.signum() * v.abs().powf(1.0 / w))
    }
}

/// `J = num^p / den^q` with `p·w(num) = q·w(den)`, so that `J` has weight zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AbsoluteInvariant {
    pub num: RelativeInvariant,
    pub num_pow: u32,
    pub den: RelativeInvariant,
    pub den_pow: u32,
}

impl AbsoluteInvariant {
    pub fn new(num: RelativeInvariant, num_pow: u32, den: RelativeInvariant, den_pow: u32) -> Result<Self> {
        if num.weight() * num_pow != den.weight() * den_pow || num_pow == 0 {
            return Err(Error::Unsupported(format!(
                "{}^{num_pow} / {}^{den_pow} is not of weight zero",
                num.label(),
                den.label()
            )));
        }
        Ok(AbsoluteInvariant {
            num,
            num_pow,
            den,
            den_pow,
        })
    }

    /// `λ_2/λ_3` for the two smallest eigenvalues.
    pub fn eigenvalue_ratio() -> Self {
        AbsoluteInvariant {
            num: RelativeInvariant::Eigenvalue(0),
            num_pow: 1,
            den: RelativeInvariant::Eigenvalue(1),
            den_pow: 1,
        }
    }

    /// `I_1² / Ĩ_2`.
    pub fn trace_ratio() -> Self {
        AbsoluteInvariant {
            num: RelativeInvariant::Elementary(1),
            num_pow: 2,
            den: RelativeInvariant::PowerSum(2),
            den_pow: 1,
        }
    }

    pub fn label(&self) -> String {
        let part = |r: RelativeInvariant, p: u32| {
            if p == 1 {
                r.label()
            } else {
                format!("{}^{p}", r.label())
            }
        };
        format!("{}/{}", part(self.num, self.num_pow), part(self.den, self.den_pow))
    }

    /// Value of `J`; fails when the denominator's weight-one root is below `tol.geodesic_abs`.
    pub fn value(&self, shape: &ShapeData, tol: &Tolerances) -> Result<f64> {
        let d = self.den.value(shape)?.powi(self.den_pow as i32);
        let root = d.abs().powf(1.0 / (self.den.weight() * self.den_pow) as f64);
        if !(root > tol.geodesic_abs) {
            return Err(Error::VanishingDenominator { value: d });
        }
        Ok(self.num.value(shape)?.powi(self.num_pow as i32) / d)
    }
}

/// `ẽ_1 = e_1 / I` for a weight-one invariant value `I`; independent of the scale of `e_1`.
pub fn normalized_e1(frame: &IsotropicFrame, invariant: f64) -> Result<DVector<f64>> {
    if !(invariant.abs() > NORMALIZATION_THRESHOLD) {
        return Err(Error::NormalizationUnavailable { value: invariant });
    }
    Ok(&frame.e1 / invariant)
}

/// Isotropic sectional curvature of the plane spanned by `n` (null) and `p`:
/// `K_N(σ) = R(N, P, P, N) / g(P, P)`.
pub fn sectional_curvature(
    g: &DMatrix<f64>,
    curv: &CurvatureTensor,
    n: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<f64> {
    let gpp = bilinear(g, p, p);
    if !(gpp.abs() > 1e-12 * p.norm_squared() * g.amax()) {
        return Err(Error::IsotropicPlaneVector { value: gpp });
    }
    Ok(curv.contract(n, p, p, n) / gpp)
}

/// `K_N` for `N = e_1` and `P = p^a e_a`: `R_{1ab1} p^a p^b / (g_ab p^a p^b)`.
pub fn isotropic_sectional_curvature(
    frame: &IsotropicFrame,
    p_screen: &DVector<f64>,
    curv: &CurvatureTensor,
) -> Result<f64> {
    let mut p = DVector::zeros(frame.dim());
    for (a, e) in frame.screen.iter().enumerate() {
        p += e * p_screen[a];
    }
    sectional_curvature(&frame.metric, curv, &frame.e1, &p)
}

/// `R_{1ab1} = R(e_1, e_a, e_b, e_1)` on the screen basis.
pub fn screen_curvature(frame: &IsotropicFrame, curv: &CurvatureTensor) -> DMatrix<f64> {
    let m = frame.screen_dim();
    DMatrix::from_fn(m, m, |a, b| curv.contract(&frame.e1, &frame.screen[a], &frame.screen[b], &frame.e1))
}

/// Extremes of `K_N(σ)` over all planes `σ ∋ e_1` tangent to the hypersurface.
pub fn sectional_range(frame: &IsotropicFrame, curv: &CurvatureTensor) -> Option<(f64, f64)> {
    let r = screen_curvature(frame, curv);
    let (vals, _) = linalg::symmetric_pencil_eigen(&r, &frame.screen_gram())?;
    Some((vals[0], vals[vals.len() - 1]))
}

/// Both sides of the evolution of `λ_ab` along the generators,
/// `(∇λ_ab − λ_ab ω_1^1)(e_1) = −λ_ac g^{ce} λ_eb + R_{1ab1}`.
#[derive(Clone, Debug)]
pub struct GeneratorIdentity {
    /// Left side, measured by differentiating `λ_ab` along `e_1`.
    pub derivative: DMatrix<f64>,
    /// `−λ_ac g^{ce} λ_eb`.
    pub quadratic: DMatrix<f64>,
    /// `R_{1ab1}`.
    pub curvature: DMatrix<f64>,
}

impl GeneratorIdentity {
    pub fn residual(&self) -> f64 {
        (&self.derivative - &self.quadratic - &self.curvature).amax()
    }
}

pub fn generator_identity(ctx: &SurfaceContext, u: &DVector<f64>) -> Result<GeneratorIdentity> {
    let shape = ctx.shape(u)?;
    let frame = &shape.frame;
    let m = frame.screen_dim();
    let du = nullframe::parameter_direction(ctx, u, &frame.e1)?;
    let steps = ctx.steps();
    // one Richardson step on top of the fourth-order stencil: λ varies like 1/s near a vertex
    let d = |rel: f64| -> Result<DMatrix<f64>> {
        fd::directional(|v| ctx.shape(v).map(|s| s.lambda_low), u, &du, rel, Stencil::Fourth)
    };
    let (coarse, fine) = (d(steps.invariant)?, d(steps.invariant / 2.0)?);
    let dlam = &fine + (&fine - coarse) / 15.0;
    let conn = nullframe::connection_along(ctx, u, &du)?;
    let lam = &shape.lambda_low;
    let w = DMatrix::from_fn(m, m, |a, c| conn.omega(a + 1, c + 1));
    // ∇λ_ab = e_1(λ_ab) − ω_a^c λ_cb − ω_b^c λ_ac
    let cov = &dlam - &w * lam - lam * w.transpose();
    let derivative = cov - lam * conn.omega(0, 0);
    let g_inv = shape
        .screen_gram
        .clone()
        .try_inverse()
        .ok_or(Error::FrameResidual { residual: f64::INFINITY })?;
    let quadratic = -(lam * g_inv * lam);
    let curv = tensorcalc::riemann(ctx.metric(), &frame.point)?;
    Ok(GeneratorIdentity {
        derivative,
        quadratic,
        curvature: screen_curvature(frame, &curv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sum over all `p × p` principal minors.
    fn minor_sum(a: &DMatrix<f64>, p: usize) -> f64 {
        let m = a.nrows();
        let mut total = 0.0;
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize != p {
                continue;
            }
            let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let sub = DMatrix::from_fn(p, p, |r, c| a[(idx[r], idx[c])]);
            total += sub.determinant();
        }
        total
    }

    #[test]
    fn diagonal_two_by_two() {
        let s = InvariantSet::of_matrix(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])));
        assert_eq!(s.elementary, vec![5.0, 6.0]);
        assert_eq!(s.power_sums, vec![5.0, 13.0]);
    }

    #[test]
    fn faddeev_leverrier_matches_principal_minors() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.3, -0.2, 0.5, 0.7, -1.1, 0.4, 0.0, 0.2, 0.9, 2.0, -0.6, -0.4, 0.1, 0.3, 0.8,
            ],
        );
        let s = InvariantSet::of_matrix(&a);
        for p in 1..=4 {
            let oracle = minor_sum(&a, p);
            assert!((s.elementary[p - 1] - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
        }
        assert!(s.newton_residual() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_invariants() {
        let s = InvariantSet::of_matrix(&DMatrix::zeros(3, 3));
        assert!(s.elementary.iter().chain(&s.power_sums).all(|v| *v == 0.0));
        assert_eq!(s.newton_residual(), 0.0);
    }

    #[test]
    fn weights() {
        assert_eq!(RelativeInvariant::Elementary(3).weight(), 3);
        assert_eq!(RelativeInvariant::Eigenvalue(1).weight(), 1);
        assert!(AbsoluteInvariant::new(RelativeInvariant::Elementary(1), 1, RelativeInvariant::PowerSum(2), 1).is_err());
        assert_eq!(
            AbsoluteInvariant::new(RelativeInvariant::Elementary(1), 2, RelativeInvariant::PowerSum(2), 1).unwrap(),
            AbsoluteInvariant::trace_ratio()
        );
    }
}
