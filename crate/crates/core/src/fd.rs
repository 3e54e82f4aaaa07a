//! Central finite differences.
//!
//! Steps are relative: an axis step is `rel * max(1, |x_i|)`, rounded so that
//! `x_i + h` is exactly representable. Directional derivatives scale the step
//! by the infinity norm of the direction.

use std::ops::{Add, Mul, Sub};

use nalgebra::DVector;

use crate::error::Result;

/// Stencil order of a central difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    /// Three-point, second-order accurate.
    Second,
    /// Five-point, fourth-order accurate.
    Fourth,
}

/// Relative step sizes for the levels of nested differentiation.
///
/// `metric_first`/`metric_second` are used for derivatives of metric
/// components. Patch quantities are differentiated in up to three nested
/// levels (frames, then scalars built from the shape operator, then screens
/// built from derivatives of those scalars); each level uses a larger step
/// to stay above the noise floor of the level beneath it. Frames use a
/// fourth-order stencil: their rounding noise is what the outer levels amplify.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdPolicy {
    pub metric_first: f64,
    pub metric_second: f64,
    pub frame: f64,
    pub frame_stencil: Stencil,
    pub invariant: f64,
    pub screen: f64,
}

impl Default for FdPolicy {
    fn default() -> Self {
        let eps = f64::EPSILON;
        FdPolicy {
            metric_first: eps.powf(1.0 / 3.0),
            metric_second: eps.powf(1.0 / 4.0),
            frame: 1e-3,
            frame_stencil: Stencil::Fourth,
            invariant: 6e-3,
            screen: 1e-2,
        }
    }
}

/// Absolute step along axis value `x` for relative step `rel`.
pub fn axis_step(x: f64, rel: f64) -> f64 {
    let h = rel * x.abs().max(1.0);
    let xp = x + h;
    xp - x
}

/// Differentiates `f` at offset 0 along a line, `f(t)` being the value at offset `t`.
pub fn central<T, F>(mut f: F, h: f64, stencil: Stencil) -> Result<T>
where
    F: FnMut(f64) -> Result<T>,
    T: Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    match stencil {
        Stencil::Second => {
            let fp = f(h)?;
            let fm = f(-h)?;
            Ok((fp - fm) * (0.5 / h))
        }
        Stencil::Fourth => {
            let fp2 = f(2.0 * h)?;
            let fp1 = f(h)?;
            let fm1 = f(-h)?;
            let fm2 = f(-2.0 * h)?;
            Ok(((fp1 - fm1) * 8.0 - (fp2 - fm2)) * (1.0 / (12.0 * h)))
        }
    }
}

/// Directional derivative of `f` at `x` along `dir` with relative step `rel`.
pub fn directional<T, F>(
    mut f: F,
    x: &DVector<f64>,
    dir: &DVector<f64>,
    rel: f64,
    stencil: Stencil,
) -> Result<T>
where
    F: FnMut(&DVector<f64>) -> Result<T>,
    T: Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let scale = x.amax().max(1.0);
    let dnorm = dir.amax().max(f64::MIN_POSITIVE);
    let h = rel * scale / dnorm;
    central(|t| f(&(x + dir * t)), h, stencil)
}

/// Partial derivative of `f` at `x` along coordinate axis `k`.
pub fn partial<T, F>(mut f: F, x: &DVector<f64>, k: usize, rel: f64, stencil: Stencil) -> Result<T>
where
    F: FnMut(&DVector<f64>) -> Result<T>,
    T: Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let h = axis_step(x[k], rel);
    central(
        |t| {
            let mut y = x.clone();
            y[k] += t;
            f(&y)
        },
        h,
        stencil,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_and_fourth_order_on_sine() {
        let x = DVector::from_vec(vec![0.7]);
        let d2: f64 = partial(|y| Ok(y[0].sin()), &x, 0, 1e-5, Stencil::Second).unwrap();
        let d4: f64 = partial(|y| Ok(y[0].sin()), &x, 0, 1e-2, Stencil::Fourth).unwrap();
        assert!((d2 - 0.7f64.cos()).abs() < 1e-9);
        assert!((d4 - 0.7f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn fourth_order_is_exact_on_quartic() {
        let f = |t: f64| Ok(t.powi(4) - 3.0 * t.powi(3) + t);
        let d: f64 = central(f, 0.1, Stencil::Fourth).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn directional_matches_gradient() {
        let x = DVector::from_vec(vec![0.3, -1.2]);
        let dir = DVector::from_vec(vec![2.0, 1.0]);
        let f = |y: &DVector<f64>| Ok(y[0] * y[0] * y[1]);
        let d: f64 = directional(f, &x, &dir, 1e-5, Stencil::Second).unwrap();
        let expected = 2.0 * (2.0 * 0.3 * -1.2) + 1.0 * 0.09;
        assert!((d - expected).abs() < 1e-8);
    }

    #[test]
    fn axis_step_is_representable() {
        for &x in &[0.0, 0.1, 3.7, -123.456] {
            let h = axis_step(x, 6e-6);
            assert_eq!((x + h) - x, h);
        }
    }
}
