//! Subnormal coordinates `(x⁰ = f, x¹, x²)` around a non-umbilical point:
//! `(x¹, x²)` are normal coordinates on the level set through the base point
//! with axes along the principal directions, and `x⁰` moves points along the
//! flow of `∇f/|∇f|²`.

use super::stencil::{flow, shoot_geodesic};
use super::{Cutoffs, LocalGeometry};
use crate::chart::{ChartPoint, Curvature};
use crate::error::{Error, Result};
use crate::jet::Taylor;
use crate::models::SolitonModel;
use crate::ode::rk4_dyn;

pub struct SubnormalChart<'a> {
    model: &'a dyn SolitonModel,
    base: LocalGeometry,
    extent: f64,
    substeps: usize,
    cutoffs: Cutoffs,
}

impl std::fmt::Debug for SubnormalChart<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubnormalChart")
            .field("base", &self.base.frame.point)
            .field("extent", &self.extent)
            .finish()
    }
}

pub fn subnormal_chart<'a>(
    model: &'a dyn SolitonModel,
    p: &ChartPoint,
    extent: f64,
) -> Result<SubnormalChart<'a>> {
    SubnormalChart::new(model, p, extent, Cutoffs::default())
}

/// `∂_b V^a` for the flow field `V = ∇f/|∇f|²`, from jets.
fn flow_differential(model: &dyn SolitonModel, p: &ChartPoint) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = p.dim();
    let c = Curvature::new(&model.metric_jet(p, 1)?)?;
    let f = model.potential_jet(p, 2)?;
    let df: Vec<Taylor> = (0..n).map(|a| f.taylor().derivative(a)).collect();
    let grad: Vec<Taylor> = (0..n)
        .map(|a| {
            (0..n).fold(Taylor::zero(n, 1), |acc, b| {
                &acc + &(c.inverse_metric_jet(a, b) * &df[b])
            })
        })
        .collect();
    let sq = (0..n).fold(Taylor::zero(n, 1), |acc, a| &acc + &(&grad[a] * &df[a]));
    let inv = sq.recip();
    let v: Vec<Taylor> = grad.iter().map(|g| g * &inv).collect();
    let values = v.iter().map(Taylor::value).collect();
    let dv = (0..n * n).map(|x| v[x / n].partial(&[x % n])).collect();
    Ok((values, dv))
}

impl<'a> SubnormalChart<'a> {
    pub fn new(
        model: &'a dyn SolitonModel,
        p: &ChartPoint,
        extent: f64,
        cutoffs: Cutoffs,
    ) -> Result<Self> {
        if !(extent > 0.0) {
            return Err(Error::InvalidInput(format!(
                "extent must be positive, got {extent}"
            )));
        }
        let base = LocalGeometry::new(model, p, 2, &cutoffs)?;
        base.frame.require_principal()?;
        Ok(Self {
            model,
            base,
            extent,
            substeps: 8,
            cutoffs,
        })
    }

    pub fn base(&self) -> &LocalGeometry {
        &self.base
    }

    pub fn base_level(&self) -> f64 {
        self.base.frame.level
    }

    fn check(&self, x: [f64; 3]) -> Result<()> {
        let dt = x[0] - self.base_level();
        if dt.abs() > self.extent || x[1].abs() > self.extent || x[2].abs() > self.extent {
            return Err(Error::OutsideDomain(format!(
                "subnormal coordinates {x:?} exceed extent {}",
                self.extent
            )));
        }
        Ok(())
    }

    /// Chart point with subnormal coordinates `x`.
    pub fn point(&self, x: [f64; 3]) -> Result<ChartPoint> {
        self.check(x)?;
        let fr = &self.base.frame;
        let len = x[1].hypot(x[2]);
        let on_level = if len == 0.0 {
            fr.point.clone()
        } else {
            let dir: Vec<f64> = (0..3)
                .map(|i| (x[1] * fr.e1[i] + x[2] * fr.e2[i]) / len)
                .collect();
            let shot = shoot_geodesic(
                self.model,
                &fr.point,
                &dir,
                &[],
                &[len],
                self.substeps,
                &self.cutoffs,
            )?;
            shot.into_iter().next().expect("one length").0
        };
        flow(
            self.model,
            &on_level,
            x[0] - self.base_level(),
            self.substeps,
            &self.cutoffs,
        )
    }

    /// Coordinate vectors `∂₀, ∂₁, ∂₂` at `x` by central differences of the
    /// chart map.
    pub fn coordinate_frame(&self, x: [f64; 3], step: f64) -> Result<[Vec<f64>; 3]> {
        let mut out: [Vec<f64>; 3] = Default::default();
        for (k, slot) in out.iter_mut().enumerate() {
            let mut plus = x;
            let mut minus = x;
            plus[k] += step;
            minus[k] -= step;
            let a = self.point(plus)?;
            let b = self.point(minus)?;
            *slot =
                a.0.iter()
                    .zip(&b.0)
                    .map(|(u, v)| (u - v) / (2.0 * step))
                    .collect();
        }
        Ok(out)
    }

    /// Point at `x⁰ = level + t` on the flow line through the base point,
    /// with `∂₁, ∂₂` pushed forward along the flow by the variational
    /// equation `J' = DV · J`.
    pub fn axis_frame(&self, t: f64) -> Result<(ChartPoint, [Vec<f64>; 2])> {
        self.check([self.base_level() + t, 0.0, 0.0])?;
        let fr = &self.base.frame;
        let mut y = fr.point.0.clone();
        y.extend_from_slice(&fr.e1);
        y.extend_from_slice(&fr.e2);
        if t != 0.0 {
            let model = self.model;
            let cutoffs = self.cutoffs;
            y = rk4_dyn(
                |s| {
                    let p = ChartPoint::new(s[..3].to_vec());
                    let (v, dv) = flow_differential(model, &p)?;
                    let norm_sq: f64 = {
                        let g = model.metric_jet(&p, 0)?;
                        let mut acc = 0.0;
                        for i in 0..3 {
                            for j in 0..3 {
                                acc += g.g(i, j) * v[i] * v[j];
                            }
                        }
                        acc
                    };
                    if !(1.0 / norm_sq.sqrt() > cutoffs.gradient) {
                        return Err(Error::GradientCritical {
                            grad_norm: 1.0 / norm_sq.sqrt(),
                        });
                    }
                    let mut out = v;
                    for e in 0..2 {
                        let j = &s[3 + 3 * e..6 + 3 * e];
                        out.extend(
                            (0..3).map(|a| (0..3).map(|b| dv[a * 3 + b] * j[b]).sum::<f64>()),
                        );
                    }
                    Ok(out)
                },
                y,
                t,
                self.substeps,
            )?;
        }
        let point = ChartPoint::new(y[..3].to_vec());
        Ok((point, [y[3..6].to_vec(), y[6..9].to_vec()]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{cigar_cross_line_model, perturbed_fixture};
    use approx::assert_relative_eq;

    #[test]
    fn base_point_metric_in_subnormal_coordinates() {
        let m = perturbed_fixture();
        let p = ChartPoint::new(vec![0.3, 0.5, -0.4]);
        let chart = subnormal_chart(&m, &p, 0.1).unwrap();
        let x = [chart.base_level(), 0.0, 0.0];
        let frame = chart.coordinate_frame(x, 1e-4).unwrap();
        let c = &chart.base().curvature;
        let gn = chart.base().frame.grad_norm;
        assert_relative_eq!(
            c.inner(&frame[0], &frame[0]),
            1.0 / (gn * gn),
            epsilon = 1e-7
        );
        for i in 1..3 {
            for j in 1..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c.inner(&frame[i], &frame[j]) - want).abs() < 1e-7);
            }
        }
        assert!(chart.base().shape(&frame[1], &frame[2]).abs() < 1e-7);
    }

    #[test]
    fn axis_frame_agrees_with_chart_differentials() {
        let m = perturbed_fixture();
        let p = ChartPoint::new(vec![0.3, 0.5, -0.4]);
        let chart = subnormal_chart(&m, &p, 0.1).unwrap();
        let t = 0.02;
        let (q, j) = chart.axis_frame(t).unwrap();
        let q2 = chart.point([chart.base_level() + t, 0.0, 0.0]).unwrap();
        for i in 0..3 {
            assert!((q.0[i] - q2.0[i]).abs() < 1e-10);
        }
        let fd = chart
            .coordinate_frame([chart.base_level() + t, 0.0, 0.0], 1e-4)
            .unwrap();
        for e in 0..2 {
            for i in 0..3 {
                assert!(
                    (j[e][i] - fd[e + 1][i]).abs() < 1e-6,
                    "{e} {i}: {} {}",
                    j[e][i],
                    fd[e + 1][i]
                );
            }
        }
    }

    #[test]
    fn umbilical_points_have_no_subnormal_chart() {
        let m = crate::models::flat_spheres_fixture();
        let err = subnormal_chart(&m, &ChartPoint::new(vec![1.0, 0.0, 0.0]), 0.1).unwrap_err();
        assert!(matches!(err, Error::EigenvectorDegenerate { .. }));
        assert!(subnormal_chart(
            &cigar_cross_line_model(),
            &ChartPoint::new(vec![1.0, 0.0, 0.0]),
            0.1
        )
        .is_ok());
    }
}
