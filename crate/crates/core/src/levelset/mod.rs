//! Extrinsic geometry of the level sets `Σ_t = {f = t}`.
//!
//! Shape operator sign: `h(X, Y) = −Hess f(X, Y)/|∇f|` on tangent vectors,
//! which is `Ric(X, Y)/|∇f|` on steady solitons, so that `H|∇f| = R − R_νν`.

mod stencil;
mod subnormal;

pub use stencil::{
    field_sample, flow_derivative_along_trajectory, FdOptions, Stencil, SurfaceFieldSample,
    TensorSample,
};
pub use subnormal::{subnormal_chart, SubnormalChart};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{ChartPoint, Curvature, ScalarJet, TensorValue};
use crate::error::{Error, Result};
use crate::models::SolitonModel;

/// Degeneracy thresholds for frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    /// Points with `|∇f|` at or below this are critical.
    pub gradient: f64,
    /// `U_σ` consumers reject `H` at or below this.
    pub mean_curvature: f64,
    /// Umbilical when `κ₂ − κ₁ < umbilical · max(1, |H|)`.
    pub umbilical: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self {
            gradient: 1e-8,
            mean_curvature: 1e-10,
            umbilical: 1e-10,
        }
    }
}

/// Adapted frame `(ν, e₁, e₂)` at a point of a level set, with its
/// principal curvatures and derived scalars. Vectors are contravariant chart
/// components.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetFrame {
    pub point: ChartPoint,
    pub level: f64,
    pub grad_norm: f64,
    pub nu: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub mean_curvature: f64,
    pub a2: f64,
    pub s2: f64,
    pub lambda: f64,
    /// `λ/(λ|∇f|² − 1)`; non-finite when the denominator vanishes.
    pub theta: f64,
    pub scalar: f64,
    pub r_nunu: f64,
    /// `κ₂ − κ₁` fell below the umbilical cutoff; `e₁, e₂` come from the
    /// tie-break rule.
    pub umbilical: bool,
}

impl LevelSetFrame {
    pub fn tangent(&self, i: usize) -> &[f64] {
        if i == 0 {
            &self.e1
        } else {
            &self.e2
        }
    }

    pub fn kappa(&self, i: usize) -> f64 {
        if i == 0 {
            self.kappa1
        } else {
            self.kappa2
        }
    }

    /// `S = κ₂ − κ₁ ≥ 0`.
    pub fn s(&self) -> f64 {
        self.kappa2 - self.kappa1
    }

    pub fn umbilical_ratio(&self, sigma: f64, cutoffs: &Cutoffs) -> Result<f64> {
        if !(self.mean_curvature > cutoffs.mean_curvature) {
            return Err(Error::MeanCurvatureDegenerate {
                mean_curvature: self.mean_curvature,
            });
        }
        Ok(self.s2 / self.mean_curvature.powf(2.0 + sigma))
    }

    pub fn theta_checked(&self) -> Result<f64> {
        let d = self.lambda * self.grad_norm * self.grad_norm - 1.0;
        if !self.theta.is_finite() || d.abs() < 1e-12 {
            return Err(Error::ThetaSingular { value: d });
        }
        Ok(self.theta)
    }

    fn require_principal(&self) -> Result<()> {
        if self.umbilical {
            return Err(Error::EigenvectorDegenerate { gap: self.s() });
        }
        Ok(())
    }
}

/// Pointwise jets and the frame at one point, for consumers that need more
/// than the frame itself (curvature contractions, `∇Rm`, `∇R`).
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub curvature: Curvature,
    pub potential: ScalarJet,
    pub frame: LevelSetFrame,
    /// Covariant Hessian of `f`, row-major.
    pub hess_f: Vec<f64>,
}

impl LocalGeometry {
    pub fn new(
        model: &dyn SolitonModel,
        p: &ChartPoint,
        order: usize,
        cutoffs: &Cutoffs,
    ) -> Result<Self> {
        if model.dim() != 3 {
            return Err(Error::Unsupported {
                model: model.name().into(),
                what: "level-set frames (requires 3-D model)".into(),
            });
        }
        let order = order.max(2);
        let curvature = Curvature::new(&model.metric_jet(p, order)?)?;
        let potential = model.potential_jet(p, order)?;
        let hess_f = curvature.hessian_of(&potential)?;
        let frame = build_frame(model, &curvature, &potential, &hess_f, cutoffs)?;
        Ok(Self {
            curvature,
            potential,
            frame,
            hess_f,
        })
    }

    /// `h(u, v) = −Hess f(u, v)/|∇f|` for chart vectors.
    pub fn shape(&self, u: &[f64], v: &[f64]) -> f64 {
        -bilinear(&self.hess_f, u, v) / self.frame.grad_norm
    }

    /// Frame vector by index: 0 = ν, 1 = e₁, 2 = e₂.
    pub fn frame_vector(&self, a: usize) -> &[f64] {
        match a {
            0 => &self.frame.nu,
            1 => &self.frame.e1,
            _ => &self.frame.e2,
        }
    }

    /// `Rm(a, b, c, d)` on frame vectors (0 = ν, 1 = e₁, 2 = e₂).
    pub fn riemann_frame(&self) -> [[[[f64; 3]; 3]; 3]; 3] {
        let mut out = [[[[0.0; 3]; 3]; 3]; 3];
        let c = &self.curvature;
        let vecs: Vec<&[f64]> = (0..3).map(|a| self.frame_vector(a)).collect();
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    for d in 0..3 {
                        let mut s = 0.0;
                        for i in 0..3 {
                            for j in 0..3 {
                                for k in 0..3 {
                                    for l in 0..3 {
                                        let w = vecs[a][i] * vecs[b][j] * vecs[cc][k] * vecs[d][l];
                                        if w != 0.0 {
                                            s += w * c.riemann(i, j, k, l);
                                        }
                                    }
                                }
                            }
                        }
                        out[a][b][cc][d] = s;
                    }
                }
            }
        }
        out
    }

    /// `(∇_m Rm)(a, b, c, d)` on frame vectors, indexed `[m][a][b][c][d]`.
    pub fn riemann_derivative_frame(&self) -> Result<Vec<f64>> {
        let raw = self.curvature.riemann_covariant_derivative()?;
        let vecs: Vec<&[f64]> = (0..3).map(|a| self.frame_vector(a)).collect();
        // contract one slot at a time
        let mut t = raw;
        for slot in 0..5 {
            let mut next = vec![0.0; 243];
            for idx in 0..243 {
                let mut digits = [0usize; 5];
                let mut x = idx;
                for s in (0..5).rev() {
                    digits[s] = x % 3;
                    x /= 3;
                }
                let a = digits[slot];
                let mut acc = 0.0;
                for i in 0..3 {
                    let mut d = digits;
                    d[slot] = i;
                    let j = d.iter().fold(0, |acc, &v| acc * 3 + v);
                    acc += vecs[a][i] * t[j];
                }
                next[idx] = acc;
            }
            t = next;
        }
        Ok(t)
    }

    /// `Ric(u, v)` for chart vectors.
    pub fn ricci(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.curvature.ricci(i, j) * u[i] * v[j];
            }
        }
        s
    }

    /// `dR` as a covector (needs order-3 jets).
    pub fn scalar_differential(&self) -> Result<Vec<f64>> {
        self.curvature.scalar_differential()
    }
}

fn bilinear(m: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += m[i * n + j] * u[i] * v[j];
        }
    }
    s
}

fn build_frame(
    model: &dyn SolitonModel,
    c: &Curvature,
    f: &ScalarJet,
    hess: &[f64],
    cutoffs: &Cutoffs,
) -> Result<LevelSetFrame> {
    let n = 3;
    let df: Vec<f64> = (0..n).map(|a| f.partial(&[a])).collect();
    let grad = c.raise(&df);
    let grad_sq: f64 = grad.iter().zip(&df).map(|(a, b)| a * b).sum();
    let grad_norm = grad_sq.max(0.0).sqrt();
    if !(grad_norm > cutoffs.gradient) {
        return Err(Error::GradientCritical { grad_norm });
    }
    let nu: Vec<f64> = grad.iter().map(|v| v / grad_norm).collect();

    // tangent basis from the chart axes, most-tangential axis first
    let project = |v: &[f64]| -> Vec<f64> {
        let d = c.inner(v, &nu);
        v.iter().zip(&nu).map(|(a, b)| a - d * b).collect()
    };
    let axis = |a: usize| -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[a] = 1.0 / c.metric(a, a).sqrt();
        v
    };
    let norm = |v: &[f64]| c.inner(v, v).sqrt();
    let projected: Vec<Vec<f64>> = (0..n).map(|a| project(&axis(a))).collect();
    let tangential: Vec<f64> = projected.iter().map(|v| norm(v)).collect();
    let first = (0..n).fold(0, |best, a| {
        if tangential[a] > tangential[best] + 1e-12 {
            a
        } else {
            best
        }
    });
    let t1: Vec<f64> = projected[first]
        .iter()
        .map(|v| v / tangential[first])
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (a, p) in projected.iter().enumerate() {
        if a == first {
            continue;
        }
        let d = c.inner(p, &t1);
        let r: Vec<f64> = p.iter().zip(&t1).map(|(x, y)| x - d * y).collect();
        let rn = norm(&r);
        if best.as_ref().is_none_or(|(b, _)| rn > *b + 1e-12) {
            best = Some((rn, r));
        }
    }
    let (rn, r) = best.expect("three axes");
    let t2: Vec<f64> = r.iter().map(|v| v / rn).collect();

    let a = -bilinear(hess, &t1, &t1) / grad_norm;
    let b = -bilinear(hess, &t1, &t2) / grad_norm;
    let d = -bilinear(hess, &t2, &t2) / grad_norm;
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let kappa1 = mean - half_gap;
    let kappa2 = mean + half_gap;
    let h_mean = a + d;
    let umbilical = kappa2 - kappa1 < cutoffs.umbilical * h_mean.abs().max(1.0);

    let (mut e1, mut e2) = if umbilical {
        (t1, t2)
    } else {
        let angle = 0.5 * (2.0 * b).atan2(a - d);
        let (s, co) = angle.sin_cos();
        let e2: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| co * x + s * y).collect();
        let e1: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| -s * x + co * y).collect();
        (e1, e2)
    };
    orient(&mut e1);
    orient(&mut e2);

    let scalar = c.scalar();
    let mut r_nunu = 0.0;
    for i in 0..n {
        for j in 0..n {
            r_nunu += c.ricci(i, j) * nu[i] * nu[j];
        }
    }
    let lambda = if model.is_steady_soliton() {
        1.0 / (scalar - r_nunu)
    } else {
        1.0 / (h_mean * grad_norm)
    };
    let theta = lambda / (lambda * grad_sq - 1.0);
    Ok(LevelSetFrame {
        point: f.point().clone(),
        level: f.value(),
        grad_norm,
        nu,
        e1,
        e2,
        kappa1,
        kappa2,
        mean_curvature: h_mean,
        a2: kappa1 * kappa1 + kappa2 * kappa2,
        s2: (kappa2 - kappa1) * (kappa2 - kappa1),
        lambda,
        theta,
        scalar,
        r_nunu,
        umbilical,
    })
}

/// Sign convention: the largest chart component is positive.
fn orient(v: &mut [f64]) {
    let k = (0..v.len()).fold(0, |b, i| {
        if v[i].abs() > v[b].abs() + 1e-14 {
            i
        } else {
            b
        }
    });
    if v[k] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn frame_at(model: &dyn SolitonModel, p: &ChartPoint) -> Result<LevelSetFrame> {
    frame_with(model, p, &Cutoffs::default())
}

pub fn frame_with(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    cutoffs: &Cutoffs,
) -> Result<LevelSetFrame> {
    Ok(LocalGeometry::new(model, p, 2, cutoffs)?.frame)
}

pub fn umbilical_ratio(model: &dyn SolitonModel, p: &ChartPoint, sigma: f64) -> Result<f64> {
    let cutoffs = Cutoffs::default();
    frame_with(model, p, &cutoffs)?.umbilical_ratio(sigma, &cutoffs)
}

/// `L = 2 dR ⊗ dR − |∇R|² g` and its `e₂e₂` component.
#[derive(Debug, Clone, PartialEq)]
pub struct LTensor {
    /// Covariant chart components.
    pub full: TensorValue,
    /// `L(e₂, e₂) = 2(e₂R)² − |∇R|²`.
    pub l22: f64,
    /// `(e₂R)² − (e₁R)²`, the form that drops the normal part of `∇R`.
    pub l22_tangential: f64,
}

/// The full tensor needs no frame and is defined at critical points too.
pub fn l_tensor_full(model: &dyn SolitonModel, p: &ChartPoint) -> Result<TensorValue> {
    let c = Curvature::new(&model.metric_jet(p, 3)?)?;
    let dr = c.scalar_differential()?;
    let grad = c.raise(&dr);
    let n = model.dim();
    let norm_sq: f64 = grad.iter().zip(&dr).map(|(a, b)| a * b).sum();
    let comps = (0..n * n)
        .map(|x| 2.0 * dr[x / n] * dr[x % n] - norm_sq * c.metric(x / n, x % n))
        .collect();
    Ok(TensorValue::new(0, 2, n, comps, p.clone()))
}

pub fn l_tensor(model: &dyn SolitonModel, p: &ChartPoint) -> Result<LTensor> {
    let g = LocalGeometry::new(model, p, 3, &Cutoffs::default())?;
    g.frame.require_principal()?;
    l_tensor_from(&g)
}

pub(crate) fn l_tensor_from(g: &LocalGeometry) -> Result<LTensor> {
    let dr = g.scalar_differential()?;
    let grad = g.curvature.raise(&dr);
    let norm_sq: f64 = grad.iter().zip(&dr).map(|(a, b)| a * b).sum();
    let e = |v: &[f64]| v.iter().zip(&dr).map(|(a, b)| a * b).sum::<f64>();
    let (e1r, e2r) = (e(&g.frame.e1), e(&g.frame.e2));
    let n = 3;
    let comps = (0..n * n)
        .map(|x| 2.0 * dr[x / n] * dr[x % n] - norm_sq * g.curvature.metric(x / n, x % n))
        .collect();
    Ok(LTensor {
        full: TensorValue::new(0, 2, n, comps, g.frame.point.clone()),
        l22: 2.0 * e2r * e2r - norm_sq,
        l22_tangential: e2r * e2r - e1r * e1r,
    })
}

/// A user-supplied scalar field.
pub type CustomFn = dyn Fn(&dyn SolitonModel, &ChartPoint) -> Result<f64> + Send + Sync;

/// Scalar fields that can be sampled on level sets.
#[derive(Clone)]
pub enum GeometricField {
    MeanCurvature,
    A2,
    S2,
    USigma(f64),
    Lambda,
    Scalar,
    GradNormSq,
    /// `(e₂R)² − (e₁R)²`.
    L22,
    /// The potential `f` itself.
    Potential,
    Custom(String, Arc<CustomFn>),
}

impl fmt::Debug for GeometricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometricField::Custom(name, _) => write!(f, "Custom({name})"),
            other => f.write_str(&other.id()),
        }
    }
}

impl GeometricField {
    pub fn id(&self) -> String {
        match self {
            GeometricField::MeanCurvature => "H".into(),
            GeometricField::A2 => "A2".into(),
            GeometricField::S2 => "S2".into(),
            GeometricField::USigma(s) => format!("U_sigma({s})"),
            GeometricField::Lambda => "lambda".into(),
            GeometricField::Scalar => "R".into(),
            GeometricField::GradNormSq => "grad_norm_sq".into(),
            GeometricField::L22 => "L22".into(),
            GeometricField::Potential => "f".into(),
            GeometricField::Custom(name, _) => name.clone(),
        }
    }

    /// Jet order needed for a pointwise evaluation.
    pub(crate) fn order(&self) -> usize {
        match self {
            GeometricField::L22 => 3,
            _ => 2,
        }
    }

    pub fn evaluate(
        &self,
        model: &dyn SolitonModel,
        p: &ChartPoint,
        cutoffs: &Cutoffs,
    ) -> Result<f64> {
        match self {
            GeometricField::Custom(_, func) => func(model, p),
            GeometricField::Potential => Ok(model.potential_jet(p, 0)?.value()),
            _ => {
                let g = LocalGeometry::new(model, p, self.order(), cutoffs)?;
                self.value_in(model, &g, cutoffs)
            }
        }
    }

    pub(crate) fn value_in(
        &self,
        model: &dyn SolitonModel,
        g: &LocalGeometry,
        cutoffs: &Cutoffs,
    ) -> Result<f64> {
        let fr = &g.frame;
        Ok(match self {
            GeometricField::MeanCurvature => fr.mean_curvature,
            GeometricField::A2 => fr.a2,
            GeometricField::S2 => fr.s2,
            GeometricField::USigma(s) => fr.umbilical_ratio(*s, cutoffs)?,
            GeometricField::Lambda => fr.lambda,
            GeometricField::Scalar => fr.scalar,
            GeometricField::GradNormSq => fr.grad_norm * fr.grad_norm,
            GeometricField::L22 => {
                fr.require_principal()?;
                l_tensor_from(g)?.l22_tangential
            }
            GeometricField::Potential => fr.level,
            GeometricField::Custom(_, func) => func(model, &fr.point)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        bryant_integrate, bryant_model, cigar_cross_line_model, euclidean_model, perturbed_fixture,
    };
    use approx::assert_relative_eq;

    fn cigar_at(rho: f64) -> ChartPoint {
        ChartPoint::new(vec![rho * 0.6, rho * 0.8, 0.7])
    }

    #[test]
    fn cigar_cross_line_frame_closed_forms() {
        let m = cigar_cross_line_model();
        let fr = frame_at(&m, &cigar_at(1.0)).unwrap();
        assert_relative_eq!(fr.grad_norm, 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(fr.mean_curvature, 0.5f64.sqrt(), epsilon = 1e-14);
        assert!(fr.kappa1.abs() < 1e-14);
        assert_relative_eq!(fr.kappa2, 0.5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(fr.s2, 0.5, epsilon = 1e-14);
        assert_relative_eq!(fr.lambda, 1.0, epsilon = 1e-14);
        assert_relative_eq!(fr.theta, 1.0, epsilon = 1e-13);
        assert_relative_eq!(fr.scalar, 2.0, epsilon = 1e-14);
        assert_relative_eq!(fr.r_nunu, 1.0, epsilon = 1e-14);
        // e₁ is the line direction
        assert!(fr.e1[2] > 0.999_999);
    }

    #[test]
    fn frame_is_orthonormal_and_flow_equation_holds() {
        let m = perturbed_fixture();
        let p = ChartPoint::new(vec![0.4, -0.3, 0.5]);
        let g = LocalGeometry::new(&m, &p, 2, &Cutoffs::default()).unwrap();
        let fr = &g.frame;
        let c = &g.curvature;
        let vs = [&fr.nu, &fr.e1, &fr.e2];
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c.inner(vs[i], vs[j]) - want).abs() < 1e-13);
            }
        }
        assert!(g.shape(&fr.e1, &fr.e2).abs() < 1e-13);
        assert_relative_eq!(g.shape(&fr.e1, &fr.e1), fr.kappa1, epsilon = 1e-13);
        assert!(fr.kappa1 <= fr.kappa2);
        assert!((2.0 * fr.a2 - fr.mean_curvature.powi(2) - fr.s2).abs() < 1e-12);
    }

    #[test]
    fn euclidean_is_gradient_critical() {
        let m = euclidean_model(3).unwrap();
        assert!(matches!(
            frame_at(&m, &ChartPoint::new(vec![1.0, 2.0, 3.0])),
            Err(Error::GradientCritical { .. })
        ));
    }

    #[test]
    fn umbilical_ratio_values() {
        let m = cigar_cross_line_model();
        assert_relative_eq!(
            umbilical_ratio(&m, &cigar_at(1.0), 0.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            umbilical_ratio(&m, &cigar_at(1.0), 2.0).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        let b = bryant_model(bryant_integrate(50.0, 1e-10).unwrap());
        let p = ChartPoint::new(vec![10.0, std::f64::consts::FRAC_PI_2, 0.0]);
        let fr = frame_at(&b, &p).unwrap();
        assert!(fr.s2 < 1e-10 && fr.mean_curvature > 0.0);
        assert!(fr.umbilical);
        assert!(umbilical_ratio(&b, &p, 2.0).unwrap() < 1e-10);
    }

    #[test]
    fn l_tensor_forms_and_trace() {
        let m = cigar_cross_line_model();
        let p = cigar_at(1.3);
        let l = l_tensor(&m, &p).unwrap();
        assert!(l.l22_tangential.abs() < 1e-14);
        // ∇R is normal on the product, so the full form is −|∇R|²
        assert!(l.l22 < 0.0);
        let c = Curvature::new(&m.metric_jet(&p, 2).unwrap()).unwrap();
        let mut tr = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                tr += c.inverse_metric(i, j) * l.full.get(&[i, j]);
            }
        }
        assert_relative_eq!(tr, l.l22, epsilon = 1e-12);
    }
}
