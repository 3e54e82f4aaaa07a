//! A metric, a patch and a gauge field bundled into a smooth frame field.

use nalgebra::DVector;

use crate::error::Result;
use crate::fd::FdPolicy;
use crate::hypersurface::{self, Classification, HypersurfacePatch, ShapeData, Tolerances};
use crate::nullframe::{self, FrameAnchor, FrameField, GaugeField, IsotropicFrame};
use crate::tensorcalc::MetricField;

/// Frame field on a patch: the deterministic frame at each point followed by a gauge.
///
/// The frame construction is anchored at one reference point so that every
/// stencil evaluation around it makes the same discrete choices.
#[derive(Clone, Debug)]
pub struct SurfaceContext {
    metric: MetricField,
    patch: HypersurfacePatch,
    gauge: GaugeField,
    anchor: FrameAnchor,
    steps: FdPolicy,
    tolerances: Tolerances,
}

impl SurfaceContext {
    /// Context anchored at `u` with the identity gauge.
    pub fn new(metric: MetricField, patch: HypersurfacePatch, u: &DVector<f64>) -> Result<Self> {
        let x = patch.point(u)?;
        let basis = patch.tangent_basis(u)?;
        let (frame, anchor) = nullframe::build_anchored(&metric, &x, &basis, None)?;
        let steps = metric.steps();
        let tolerances = Tolerances::for_scale(patch.scale());
        Ok(SurfaceContext {
            gauge: GaugeField::identity(patch.params(), frame.screen_dim()),
            metric,
            patch,
            anchor,
            steps,
            tolerances,
        })
    }

    /// Same metric, patch, gauge and settings, re-anchored at `u`.
    pub fn anchored_at(&self, u: &DVector<f64>) -> Result<Self> {
        let x = self.patch.point(u)?;
        let basis = self.patch.tangent_basis(u)?;
        let (_, anchor) = nullframe::build_anchored(&self.metric, &x, &basis, None)?;
        Ok(SurfaceContext {
            anchor,
            ..self.clone()
        })
    }

    pub fn with_gauge(mut self, gauge: GaugeField) -> Self {
        self.gauge = gauge;
        self
    }

    pub fn with_steps(mut self, steps: FdPolicy) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn patch(&self) -> &HypersurfacePatch {
        &self.patch
    }

    pub fn gauge(&self) -> &GaugeField {
        &self.gauge
    }

    pub fn anchor(&self) -> FrameAnchor {
        self.anchor
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn screen_dim(&self) -> usize {
        self.metric.dim() - 2
    }

    /// Frame before the gauge is applied.
    pub fn base_frame(&self, u: &DVector<f64>) -> Result<IsotropicFrame> {
        let x = self.patch.point(u)?;
        let basis = self.patch.tangent_basis(u)?;
        nullframe::build_anchored(&self.metric, &x, &basis, Some(self.anchor)).map(|(f, _)| f)
    }

    pub fn shape(&self, u: &DVector<f64>) -> Result<ShapeData> {
        hypersurface::second_fundamental_form(self, u)
    }

    pub fn classify(&self, u: &DVector<f64>) -> Result<Classification> {
        Ok(hypersurface::classify(&self.shape(u)?, &self.tolerances))
    }
}

impl FrameField for SurfaceContext {
    fn metric(&self) -> &MetricField {
        &self.metric
    }

    fn point(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.patch.point(u)
    }

    fn tangent_basis(&self, u: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        self.patch.tangent_basis(u)
    }

    fn frame(&self, u: &DVector<f64>) -> Result<IsotropicFrame> {
        let base = self.base_frame(u)?;
        if self.gauge.is_identity() {
            return Ok(base);
        }
        nullframe::apply_gauge(&base, &self.gauge.at(u))
    }

    fn steps(&self) -> FdPolicy {
        self.steps
    }
}
