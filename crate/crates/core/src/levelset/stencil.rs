//! Finite-difference sampling of fields on a level set.
//!
//! Tangential derivatives come from central differences along geodesics of
//! `Σ_t` launched from the base point; tensor components are read in frames
//! parallel-transported along those geodesics. The surface Laplacian uses the
//! ambient identity `Δ_Σ Q = Δ Q − Hess Q(ν, ν) + H ⟨∇Q, ν⟩`.

use rayon::prelude::*;

use super::{Cutoffs, GeometricField, LocalGeometry};
use crate::chart::{ChartPoint, Curvature};
use crate::error::{Error, Result};
use crate::models::SolitonModel;
use crate::ode::rk4_dyn;

/// Finite-difference controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    /// Geodesic arclength of the outer stencil arm.
    pub step: f64,
    /// Ambient arm length as a multiple of `step`.
    pub ambient_scale: f64,
    /// Combine steps `h` and `h/2` to cancel the leading truncation term in
    /// ambient and flow-line differences.
    pub richardson: bool,
    /// Same for the geodesic (tangential) differences; off by default since
    /// it multiplies rounding noise in second differences about sixfold.
    pub tangential_richardson: bool,
    /// RK4 substeps per stencil arm.
    pub substeps: usize,
    pub cutoffs: Cutoffs,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            ambient_scale: 4.0,
            richardson: true,
            tangential_richardson: false,
            substeps: 4,
            cutoffs: Cutoffs::default(),
        }
    }
}

impl FdOptions {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    /// `base × 1/max(|κ₁|, |κ₂|, |H|, 1)`.
    pub fn scaled_step(base: f64, frame: &super::LevelSetFrame) -> f64 {
        let scale = frame
            .kappa1
            .abs()
            .max(frame.kappa2.abs())
            .max(frame.mean_curvature.abs())
            .max(1.0);
        base / scale
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidInput(format!(
                "finite-difference step must be positive, got {}",
                self.step
            )));
        }
        if !(self.ambient_scale > 0.0) || !self.ambient_scale.is_finite() {
            return Err(Error::InvalidInput(format!(
                "ambient arm scale must be positive, got {}",
                self.ambient_scale
            )));
        }
        Ok(())
    }
}

/// One scalar field sampled at a point of a level set.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFieldSample {
    pub value: f64,
    /// `(e₁Q, e₂Q)`.
    pub tangential_gradient: [f64; 2],
    /// From the ambient identity.
    pub surface_laplacian: f64,
    /// Surface Hessian in the `(e₁, e₂)` basis, from geodesic differences.
    pub surface_hessian: [[f64; 2]; 2],
    /// Covariant chart components `∂_a Q`.
    pub ambient_gradient: Vec<f64>,
    /// Ambient Hessian in the frame `(ν, e₁, e₂)`.
    pub ambient_hessian: [[f64; 3]; 3],
    /// Ambient Laplacian `Δ_M Q`.
    pub ambient_laplacian: f64,
    /// `⟨∇Q, ∇f⟩/|∇f|²`.
    pub flow_derivative: f64,
    /// Central difference of `Q` along the flow line of `∇f/|∇f|²`.
    pub trajectory_flow_derivative: f64,
}

impl SurfaceFieldSample {
    /// `⟨∇Q, ν⟩`.
    pub fn normal_derivative(&self, grad_norm: f64) -> f64 {
        self.flow_derivative * grad_norm
    }

    /// Ambient gradient in the frame `(ν, e₁, e₂)`.
    pub fn ambient_gradient_frame(&self, frame: &super::LevelSetFrame) -> [f64; 3] {
        let d = |v: &[f64]| {
            v.iter()
                .zip(&self.ambient_gradient)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        [d(&frame.nu), d(&frame.e1), d(&frame.e2)]
    }
}

/// The second fundamental form sampled in parallel frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSample {
    /// `h_ab` at the base point in `(e₁, e₂)`.
    pub value: [[f64; 2]; 2],
    /// `∇_k h_ab`, indexed `[k][a][b]`.
    pub gradient: [[[f64; 2]; 2]; 2],
    /// `Δ h_ab`.
    pub laplacian: [[f64; 2]; 2],
}

impl TensorSample {
    /// `|∇A|²`.
    pub fn gradient_norm_sq(&self) -> f64 {
        self.gradient
            .iter()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum()
    }
}

const DIRECTIONS: usize = 4;
const LEVELS: usize = 2;

/// A point on a geodesic arm and the frame transported to it.
type Shot = (ChartPoint, Vec<Vec<f64>>);

#[derive(Debug, Clone)]
struct GeodesicEnd {
    point: ChartPoint,
    frame: [Vec<f64>; 2],
}

/// Sample points around one base point, built once and reused for all fields.
pub struct Stencil<'a> {
    model: &'a dyn SolitonModel,
    opts: FdOptions,
    center: LocalGeometry,
    /// Indexed `(direction · 2 + sign) · LEVELS + level`; directions are
    /// `e₁, e₂, (e₁+e₂)/√2, (e₁−e₂)/√2`.
    geodesics: Vec<GeodesicEnd>,
    /// Per level: `±δ_a` for each axis, then `(±, ±)` for each axis pair.
    ambient: Vec<ChartPoint>,
    /// `(level, sign)` flow-line points.
    trajectory: Vec<ChartPoint>,
}

impl std::fmt::Debug for Stencil<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stencil")
            .field("point", &self.center.frame.point)
            .field("step", &self.opts.step)
            .finish()
    }
}

fn richardson(on: bool, outer: f64, inner: f64) -> f64 {
    if on {
        (4.0 * inner - outer) / 3.0
    } else {
        outer
    }
}

fn level_step(step: f64, level: usize) -> f64 {
    step / (1 << level) as f64
}

/// `(f, df, ∇f)` at a point from first-order jets.
pub(crate) fn potential_gradient(
    model: &dyn SolitonModel,
    p: &ChartPoint,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let g = model.metric_jet(p, 0)?;
    let f = model.potential_jet(p, 1)?;
    let n = p.dim();
    let df: Vec<f64> = (0..n).map(|a| f.partial(&[a])).collect();
    let inv = g.matrix().try_inverse().ok_or(Error::DegenerateMetric {
        min_eigenvalue: 0.0,
    })?;
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| inv[(i, j)] * df[j]).sum())
        .collect();
    Ok((f.value(), df, grad))
}

/// The flow vector field `∇f/|∇f|²`.
pub(crate) fn flow_field(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    cutoffs: &Cutoffs,
) -> Result<Vec<f64>> {
    let (_, df, grad) = potential_gradient(model, p)?;
    let sq: f64 = df.iter().zip(&grad).map(|(a, b)| a * b).sum();
    if !(sq.sqrt() > cutoffs.gradient) {
        return Err(Error::GradientCritical {
            grad_norm: sq.max(0.0).sqrt(),
        });
    }
    Ok(grad.iter().map(|v| v / sq).collect())
}

/// Moves `p` along the flow for time `t` (so `f` changes by `t`).
pub(crate) fn flow(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    t: f64,
    substeps: usize,
    cutoffs: &Cutoffs,
) -> Result<ChartPoint> {
    if t == 0.0 {
        return Ok(p.clone());
    }
    let y = rk4_dyn(
        |x| flow_field(model, &ChartPoint::new(x.to_vec()), cutoffs),
        p.0.clone(),
        t,
        substeps,
    )?;
    Ok(ChartPoint::new(y))
}

/// Newton iteration along `∇f` back onto `{f = level}`, run until the miss
/// reaches rounding level or stops shrinking; fails above `1e−12`.
pub(crate) fn project_to_level(
    model: &dyn SolitonModel,
    p: ChartPoint,
    level: f64,
) -> Result<ChartPoint> {
    let exact = 2.0 * f64::EPSILON * level.abs().max(1.0);
    let mut x = p;
    let mut best: Option<(f64, ChartPoint)> = None;
    for _ in 0..16 {
        let (f, df, grad) = potential_gradient(model, &x)?;
        let miss = f - level;
        if miss.abs() <= exact {
            return Ok(x);
        }
        if let Some((b, _)) = &best {
            if miss.abs() >= *b {
                break;
            }
        }
        best = Some((miss.abs(), x.clone()));
        let sq: f64 = df.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let next: Vec<f64> =
            x.0.iter()
                .zip(&grad)
                .map(|(a, g)| a - miss * g / sq)
                .collect();
        x = ChartPoint::new(next);
    }
    match best {
        Some((b, x)) if b < 1e-12 => Ok(x),
        Some((b, _)) => Err(Error::ProjectionFailed { residual: b }),
        None => Err(Error::ProjectionFailed { residual: f64::NAN }),
    }
}

/// Right-hand side of the geodesic-plus-transport system on `Σ`:
/// `x' = v`, `v' = −Γ(v, v) + h(v, v) ν`, `E' = −Γ(v, E) + h(v, E) ν`.
fn geodesic_rhs(model: &dyn SolitonModel, y: &[f64], cutoffs: &Cutoffs) -> Result<Vec<f64>> {
    let n = 3;
    let p = ChartPoint::new(y[..n].to_vec());
    let c = Curvature::new(&model.metric_jet(&p, 1)?)?;
    let f = model.potential_jet(&p, 2)?;
    let hess = c.hessian_of(&f)?;
    let df: Vec<f64> = (0..n).map(|a| f.partial(&[a])).collect();
    let grad = c.raise(&df);
    let sq: f64 = grad.iter().zip(&df).map(|(a, b)| a * b).sum();
    if !(sq.sqrt() > cutoffs.gradient) {
        return Err(Error::GradientCritical {
            grad_norm: sq.max(0.0).sqrt(),
        });
    }
    let v = &y[n..2 * n];
    // h(u, w) ν = −Hess f(u, w) ∇f/|∇f|²
    let accel = |u: &[f64], w: &[f64]| -> Vec<f64> {
        let mut hb = 0.0;
        for i in 0..n {
            for j in 0..n {
                hb += hess[i * n + j] * u[i] * w[j];
            }
        }
        (0..n)
            .map(|k| {
                let mut a = -hb * grad[k] / sq;
                for i in 0..n {
                    for j in 0..n {
                        a -= c.gamma(k, i, j) * u[i] * w[j];
                    }
                }
                a
            })
            .collect()
    };
    let mut out = Vec::with_capacity(y.len());
    out.extend_from_slice(v);
    out.extend(accel(v, v));
    for e in 0..(y.len() / n - 2) {
        let ev = &y[(2 + e) * n..(3 + e) * n];
        out.extend(accel(v, ev));
    }
    Ok(out)
}

/// Σ-geodesic from `p` with initial unit velocity `dir`, transporting
/// `frame`; returns the state at each arclength in `lengths` (increasing).
pub(crate) fn shoot_geodesic(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    dir: &[f64],
    frame: &[&[f64]],
    lengths: &[f64],
    substeps: usize,
    cutoffs: &Cutoffs,
) -> Result<Vec<Shot>> {
    let n = p.dim();
    let level = model.potential_jet(p, 0)?.value();
    let mut y: Vec<f64> = p.0.clone();
    y.extend_from_slice(dir);
    for e in frame {
        y.extend_from_slice(e);
    }
    let mut s = 0.0;
    let mut out = Vec::with_capacity(lengths.len());
    for &target in lengths {
        y = rk4_dyn(|x| geodesic_rhs(model, x, cutoffs), y, target - s, substeps)?;
        s = target;
        let point = project_to_level(model, ChartPoint::new(y[..n].to_vec()), level)?;
        // keep the transported vectors tangent at the projected point
        let (_, df, grad) = potential_gradient(model, &point)?;
        let sq: f64 = df.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let vecs = (0..frame.len())
            .map(|e| {
                let v = &y[(2 + e) * n..(3 + e) * n];
                let d: f64 = v.iter().zip(&df).map(|(a, b)| a * b).sum::<f64>() / sq;
                v.iter().zip(&grad).map(|(a, g)| a - d * g).collect()
            })
            .collect();
        out.push((point, vecs));
    }
    Ok(out)
}

impl<'a> Stencil<'a> {
    pub fn new(model: &'a dyn SolitonModel, p: &ChartPoint, opts: FdOptions) -> Result<Self> {
        opts.validate()?;
        let center = LocalGeometry::new(model, p, 2, &opts.cutoffs)?;
        let fr = &center.frame;
        let n = 3;
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let dirs: [Vec<f64>; DIRECTIONS] = [
            fr.e1.clone(),
            fr.e2.clone(),
            (0..n).map(|i| r2 * (fr.e1[i] + fr.e2[i])).collect(),
            (0..n).map(|i| r2 * (fr.e1[i] - fr.e2[i])).collect(),
        ];
        let lengths: Vec<f64> = (0..LEVELS)
            .rev()
            .map(|l| level_step(opts.step, l))
            .collect();
        let jobs: Vec<(usize, f64)> = (0..DIRECTIONS)
            .flat_map(|d| [(d, 1.0), (d, -1.0)])
            .collect();
        let shots: Vec<Result<Vec<Shot>>> = jobs
            .par_iter()
            .map(|&(d, sign)| {
                let v: Vec<f64> = dirs[d].iter().map(|x| sign * x).collect();
                shoot_geodesic(
                    model,
                    p,
                    &v,
                    &[&fr.e1, &fr.e2],
                    &lengths,
                    opts.substeps,
                    &opts.cutoffs,
                )
            })
            .collect();
        let mut geodesics = Vec::with_capacity(DIRECTIONS * 2 * LEVELS);
        for shot in shots {
            let mut shot = shot?;
            // `lengths` runs from the short arm to the long arm
            shot.reverse();
            for (point, vecs) in shot {
                let mut it = vecs.into_iter();
                geodesics.push(GeodesicEnd {
                    point,
                    frame: [it.next().expect("e1"), it.next().expect("e2")],
                });
            }
        }

        let mut ambient = Vec::with_capacity(LEVELS * 18);
        for l in 0..LEVELS {
            let s = opts.ambient_scale * level_step(opts.step, l);
            let delta: Vec<f64> = (0..n)
                .map(|a| s / center.curvature.metric(a, a).sqrt())
                .collect();
            for a in 0..n {
                for sign in [1.0, -1.0] {
                    let mut q = p.0.clone();
                    q[a] += sign * delta[a];
                    ambient.push(ChartPoint::new(q));
                }
            }
            for a in 0..n {
                for b in (a + 1)..n {
                    for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut q = p.0.clone();
                        q[a] += sa * delta[a];
                        q[b] += sb * delta[b];
                        ambient.push(ChartPoint::new(q));
                    }
                }
            }
        }

        let mut trajectory = Vec::with_capacity(LEVELS * 2);
        for l in 0..LEVELS {
            let dt = level_step(opts.step, l) * fr.grad_norm;
            for sign in [1.0, -1.0] {
                trajectory.push(flow(model, p, sign * dt, opts.substeps, &opts.cutoffs)?);
            }
        }
        Ok(Self {
            model,
            opts,
            center,
            geodesics,
            ambient,
            trajectory,
        })
    }

    pub fn geometry(&self) -> &LocalGeometry {
        &self.center
    }

    pub fn options(&self) -> &FdOptions {
        &self.opts
    }

    fn combine(&self, outer: f64, inner: f64) -> f64 {
        richardson(self.opts.richardson, outer, inner)
    }

    fn combine_tangential(&self, outer: f64, inner: f64) -> f64 {
        richardson(self.opts.tangential_richardson, outer, inner)
    }

    fn geo_index(dir: usize, sign: usize, level: usize) -> usize {
        (dir * 2 + sign) * LEVELS + level
    }

    /// Samples several fields; pointwise geometry is shared across fields.
    pub fn sample_many(&self, fields: &[GeometricField]) -> Result<Vec<SurfaceFieldSample>> {
        let order = fields.iter().map(GeometricField::order).max().unwrap_or(2);
        let mut points: Vec<&ChartPoint> = vec![&self.center.frame.point];
        points.extend(self.geodesics.iter().map(|g| &g.point));
        points.extend(self.ambient.iter());
        points.extend(self.trajectory.iter());
        let model = self.model;
        let cutoffs = self.opts.cutoffs;
        let values: Vec<Result<Vec<f64>>> = points
            .par_iter()
            .map(|p| {
                let needs_geometry = fields
                    .iter()
                    .any(|f| !matches!(f, GeometricField::Custom(..) | GeometricField::Potential));
                let geo = if needs_geometry {
                    Some(LocalGeometry::new(model, p, order, &cutoffs)?)
                } else {
                    None
                };
                fields
                    .iter()
                    .map(|f| match (f, &geo) {
                        (GeometricField::Custom(_, func), _) => func(model, p),
                        (GeometricField::Potential, _) => Ok(model.potential_jet(p, 0)?.value()),
                        (_, Some(g)) => f.value_in(model, g, &cutoffs),
                        (_, None) => unreachable!("geometry built when needed"),
                    })
                    .collect()
            })
            .collect();
        let values: Vec<Vec<f64>> = values.into_iter().collect::<Result<_>>()?;
        Ok((0..fields.len())
            .map(|k| self.assemble(&|i| values[i][k]))
            .collect())
    }

    pub fn sample(&self, field: &GeometricField) -> Result<SurfaceFieldSample> {
        Ok(self.sample_many(std::slice::from_ref(field))?.remove(0))
    }

    /// `q(i)` is the value at point `i` in the layout of `sample_many`.
    fn assemble(&self, q: &dyn Fn(usize) -> f64) -> SurfaceFieldSample {
        let fr = &self.center.frame;
        let c = &self.center.curvature;
        let n = 3;
        let q0 = q(0);
        let geo = |d: usize, s: usize, l: usize| q(1 + Self::geo_index(d, s, l));
        let first = |d: usize| {
            let at =
                |l: usize| (geo(d, 0, l) - geo(d, 1, l)) / (2.0 * level_step(self.opts.step, l));
            self.combine_tangential(at(0), at(1))
        };
        let second = |d: usize| {
            let at = |l: usize| {
                let s = level_step(self.opts.step, l);
                (geo(d, 0, l) - 2.0 * q0 + geo(d, 1, l)) / (s * s)
            };
            self.combine_tangential(at(0), at(1))
        };
        let h11 = second(0);
        let h22 = second(1);
        let h12 = 0.5 * (second(2) - second(3));

        let amb0 = 1 + self.geodesics.len();
        let per_level = 18;
        let delta = |a: usize, l: usize| {
            self.opts.ambient_scale * level_step(self.opts.step, l) / c.metric(a, a).sqrt()
        };
        let mut grad = vec![0.0; n];
        let mut d2 = vec![0.0; n * n];
        for a in 0..n {
            let at = |l: usize| {
                let base = amb0 + l * per_level + 2 * a;
                (q(base) - q(base + 1)) / (2.0 * delta(a, l))
            };
            grad[a] = self.combine(at(0), at(1));
            let at2 = |l: usize| {
                let base = amb0 + l * per_level + 2 * a;
                (q(base) - 2.0 * q0 + q(base + 1)) / (delta(a, l) * delta(a, l))
            };
            d2[a * n + a] = self.combine(at2(0), at2(1));
        }
        let mut pair = 0;
        for a in 0..n {
            for b in (a + 1)..n {
                let at = |l: usize| {
                    let base = amb0 + l * per_level + 2 * n + 4 * pair;
                    (q(base) - q(base + 1) - q(base + 2) + q(base + 3))
                        / (4.0 * delta(a, l) * delta(b, l))
                };
                let v = self.combine(at(0), at(1));
                d2[a * n + b] = v;
                d2[b * n + a] = v;
                pair += 1;
            }
        }
        let mut hess = d2;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    hess[i * n + j] -= c.gamma(k, i, j) * grad[k];
                }
            }
        }
        let mut lap = 0.0;
        for i in 0..n {
            for j in 0..n {
                lap += c.inverse_metric(i, j) * hess[i * n + j];
            }
        }
        let frame_vecs = [&fr.nu, &fr.e1, &fr.e2];
        let mut hess_frame = [[0.0; 3]; 3];
        for (a, u) in frame_vecs.iter().enumerate() {
            for (b, v) in frame_vecs.iter().enumerate() {
                hess_frame[a][b] = super::bilinear(&hess, u, v);
            }
        }
        let d_nu: f64 = fr.nu.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let surface_laplacian = lap - hess_frame[0][0] + fr.mean_curvature * d_nu;

        let traj0 = amb0 + LEVELS * per_level;
        let traj_at = |l: usize| {
            (q(traj0 + 2 * l) - q(traj0 + 2 * l + 1))
                / (2.0 * level_step(self.opts.step, l) * fr.grad_norm)
        };
        SurfaceFieldSample {
            value: q0,
            tangential_gradient: [first(0), first(1)],
            surface_laplacian,
            surface_hessian: [[h11, h12], [h12, h22]],
            ambient_gradient: grad,
            ambient_hessian: hess_frame,
            ambient_laplacian: lap,
            flow_derivative: d_nu / fr.grad_norm,
            trajectory_flow_derivative: self.combine(traj_at(0), traj_at(1)),
        }
    }

    /// `h` read in the parallel frames at the geodesic ends.
    pub fn shape_tensor(&self) -> Result<TensorSample> {
        let model = self.model;
        let cutoffs = self.opts.cutoffs;
        // only the e₁ and e₂ geodesics are needed
        let idx: Vec<usize> = (0..2)
            .flat_map(|d| {
                (0..2).flat_map(move |s| (0..LEVELS).map(move |l| Self::geo_index(d, s, l)))
            })
            .collect();
        let comps: Vec<Result<[[f64; 2]; 2]>> = idx
            .par_iter()
            .map(|&i| {
                let end = &self.geodesics[i];
                let g = LocalGeometry::new(model, &end.point, 2, &cutoffs)?;
                let mut m = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        m[a][b] = g.shape(&end.frame[a], &end.frame[b]);
                    }
                }
                Ok(m)
            })
            .collect();
        let comps: Vec<[[f64; 2]; 2]> = comps.into_iter().collect::<Result<_>>()?;
        let at = |d: usize, s: usize, l: usize| comps[(d * 2 + s) * LEVELS + l];
        let fr = &self.center.frame;
        let mut center = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                center[a][b] = self.center.shape(fr.tangent(a), fr.tangent(b));
            }
        }
        let mut gradient = [[[0.0; 2]; 2]; 2];
        let mut laplacian = [[0.0; 2]; 2];
        for k in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let d1 = |l: usize| {
                        (at(k, 0, l)[a][b] - at(k, 1, l)[a][b])
                            / (2.0 * level_step(self.opts.step, l))
                    };
                    gradient[k][a][b] = self.combine_tangential(d1(0), d1(1));
                    let d2 = |l: usize| {
                        let s = level_step(self.opts.step, l);
                        (at(k, 0, l)[a][b] - 2.0 * center[a][b] + at(k, 1, l)[a][b]) / (s * s)
                    };
                    laplacian[a][b] += self.combine_tangential(d2(0), d2(1));
                }
            }
        }
        Ok(TensorSample {
            value: center,
            gradient,
            laplacian,
        })
    }
}

/// Samples one field at `p`.
pub fn field_sample(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    field: &GeometricField,
    step: f64,
) -> Result<SurfaceFieldSample> {
    Stencil::new(model, p, FdOptions::with_step(step))?.sample(field)
}

/// `∂_t Q` by differencing `Q` along the integrated flow line through `p`.
pub fn flow_derivative_along_trajectory(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    field: &GeometricField,
    step: f64,
    richardson: bool,
) -> Result<f64> {
    let cutoffs = Cutoffs::default();
    let (_, df, grad) = potential_gradient(model, p)?;
    let norm = df.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>().sqrt();
    let at = |dt: f64| -> Result<f64> {
        let a = field.evaluate(model, &flow(model, p, dt, 4, &cutoffs)?, &cutoffs)?;
        let b = field.evaluate(model, &flow(model, p, -dt, 4, &cutoffs)?, &cutoffs)?;
        Ok((a - b) / (2.0 * dt))
    };
    let outer = at(step * norm)?;
    if !richardson {
        return Ok(outer);
    }
    let inner = at(0.5 * step * norm)?;
    Ok((4.0 * inner - outer) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{cigar_cross_line_model, flat_spheres_fixture, perturbed_fixture};
    use std::sync::Arc;

    #[test]
    fn sphere_laplacian_calibration() {
        let m = flat_spheres_fixture();
        let p = ChartPoint::new(vec![1.0, 0.0, 0.0]);
        let x = GeometricField::Custom(
            "x".into(),
            Arc::new(|_: &dyn SolitonModel, p: &ChartPoint| Ok(p.0[0])),
        );
        let s = field_sample(&m, &p, &x, 1e-3).unwrap();
        assert!(
            (s.surface_laplacian + 2.0).abs() < 1e-6,
            "{}",
            s.surface_laplacian
        );
        let tr = s.surface_hessian[0][0] + s.surface_hessian[1][1];
        assert!((tr + 2.0).abs() < 1e-6, "{tr}");
    }

    #[test]
    fn potential_has_no_tangential_gradient() {
        let m = perturbed_fixture();
        let p = ChartPoint::new(vec![0.3, 0.5, -0.4]);
        let s = field_sample(&m, &p, &GeometricField::Potential, 1e-3).unwrap();
        assert!(
            s.tangential_gradient.iter().all(|g| g.abs() < 1e-9),
            "{:?}",
            s.tangential_gradient
        );
        assert!((s.flow_derivative - 1.0).abs() < 1e-9);
        assert!((s.trajectory_flow_derivative - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_curvature_is_constant_on_product_cylinders() {
        let m = cigar_cross_line_model();
        let p = ChartPoint::new(vec![0.6, 0.8, 0.2]);
        let s = field_sample(&m, &p, &GeometricField::MeanCurvature, 1e-3).unwrap();
        assert!(
            s.tangential_gradient.iter().all(|g| g.abs() < 1e-8),
            "{:?}",
            s.tangential_gradient
        );
        assert!((s.flow_derivative - s.trajectory_flow_derivative).abs() < 1e-8);
    }

    #[test]
    fn tangential_gradient_matches_ambient_projection() {
        let m = perturbed_fixture();
        let p = ChartPoint::new(vec![0.3, 0.5, -0.4]);
        // (gradient gap, Laplacian gap)
        let gaps = |opts: FdOptions| {
            let st = Stencil::new(&m, &p, opts).unwrap();
            let s = st.sample(&GeometricField::MeanCurvature).unwrap();
            let amb = s.ambient_gradient_frame(&st.geometry().frame);
            let tr = s.surface_hessian[0][0] + s.surface_hessian[1][1];
            let grad = (0..2)
                .map(|i| (amb[i + 1] - s.tangential_gradient[i]).abs())
                .fold(0.0, f64::max);
            (grad, (tr - s.surface_laplacian).abs())
        };
        let (g, l) = gaps(FdOptions {
            tangential_richardson: true,
            ..FdOptions::default()
        });
        assert!(g < 1e-7 && l < 1e-6, "{g} {l}");
        // plain central differences: second order
        let (g0, l0) = gaps(FdOptions::default());
        let (g1, l1) = gaps(FdOptions::with_step(5e-4));
        assert!(g0 < 1e-5 && g1 < g0 / 3.0, "{g0} {g1}");
        assert!(l0 < 1e-4 && l1 < l0 / 3.0, "{l0} {l1}");
    }

    #[test]
    fn trajectory_difference_is_second_order() {
        let m = perturbed_fixture();
        let p = ChartPoint::new(vec![0.3, 0.5, -0.4]);
        let f = GeometricField::MeanCurvature;
        let exact = field_sample(&m, &p, &f, 1e-3).unwrap().flow_derivative;
        let e1 = (flow_derivative_along_trajectory(&m, &p, &f, 4e-2, false).unwrap() - exact).abs();
        let e2 = (flow_derivative_along_trajectory(&m, &p, &f, 1e-2, false).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }
}
