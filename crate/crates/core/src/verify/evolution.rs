//! Evolution identities along the level-set flow, checked by two independent
//! pipelines: the time derivative comes from differencing along integrated
//! flow lines, the right-hand sides from surface and ambient stencils plus
//! pointwise curvature.

use super::report::{residuals, OrderEstimate, ResidualReport};
use super::{error_row, relative_floor, IdentityId, Interpretation, VerifyOptions};
use crate::chart::ChartPoint;
use crate::error::Result;
use crate::levelset::{
    l_tensor_from, FdOptions, GeometricField, LocalGeometry, Stencil, SubnormalChart,
    SurfaceFieldSample, TensorSample,
};
use crate::models::SolitonModel;

/// Ambient curvature contractions entering the `|A|²` equation, with
/// `B = T₁ − T₂ − T₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureTerms {
    /// `4 h_ij h_jl R_lmim`.
    pub t1: f64,
    /// `4 h_ij h_lm R_iljm`.
    pub t2: f64,
    /// `2 h_ij (∇_j R_νlil + ∇_l R_νijl)`.
    pub t3: f64,
    /// `2S(∇₂Ric(ν, e₂) − ∇₁Ric(ν, e₁))`.
    pub t3_reduced: f64,
    /// `2S(∇₂Ric(ν, e₂) − ∇₁Ric(ν, e₂))`.
    pub t3_literal: f64,
    /// Curvature part of the `h_ij` equation, `[i][j]`.
    pub h_terms: [[f64; 2]; 2],
}

impl CurvatureTerms {
    pub fn b(&self) -> f64 {
        self.t1 - self.t2 - self.t3
    }

    pub fn new(g: &LocalGeometry) -> Result<Self> {
        let rm = g.riemann_frame();
        let drm = g.riemann_derivative_frame()?;
        let d = |m: usize, a: usize, b: usize, c: usize, e: usize| {
            drm[(((m * 3 + a) * 3 + b) * 3 + c) * 3 + e]
        };
        let fr = &g.frame;
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = g.shape(fr.tangent(i), fr.tangent(j));
            }
        }
        // tangent index i is frame index i + 1; ν is 0
        let r = |a: usize, b: usize, c: usize, e: usize| rm[a + 1][b + 1][c + 1][e + 1];
        let nabla = |i: usize, j: usize| -> f64 {
            (0..2)
                .map(|l| d(j + 1, 0, l + 1, i + 1, l + 1) + d(l + 1, 0, i + 1, j + 1, l + 1))
                .sum()
        };
        let (mut t1, mut t2, mut t3) = (0.0, 0.0, 0.0);
        let mut h_terms = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut c = nabla(i, j);
                for l in 0..2 {
                    for m in 0..2 {
                        t1 += 4.0 * h[i][j] * h[j][l] * r(l, m, i, m);
                        t2 += 4.0 * h[i][j] * h[l][m] * r(i, l, j, m);
                        c += -h[j][l] * r(l, m, i, m) - h[i][l] * r(l, m, j, m)
                            + 2.0 * h[l][m] * r(l, i, m, j);
                    }
                }
                h_terms[i][j] = c;
                t3 += 2.0 * h[i][j] * nabla(i, j);
            }
        }
        // (∇_a Ric)(ν, e_b) = Σ_c (∇_a Rm)(c, ν, c, e_b) over the full frame
        let dric = |a: usize, b: usize| -> f64 { (0..3).map(|c| d(a, c, 0, c, b)).sum() };
        let s = fr.s();
        Ok(Self {
            t1,
            t2,
            t3,
            t3_reduced: 2.0 * s * (dric(2, 2) - dric(1, 1)),
            t3_literal: 2.0 * s * (dric(2, 2) - dric(1, 2)),
            h_terms,
        })
    }
}

/// Field samples at one stencil step.
struct StepSamples {
    step: f64,
    h: SurfaceFieldSample,
    a2: SurfaceFieldSample,
    lambda: SurfaceFieldSample,
    s2: SurfaceFieldSample,
    u: Vec<SurfaceFieldSample>,
    tensor: TensorSample,
}

impl StepSamples {
    fn new(
        model: &dyn SolitonModel,
        p: &ChartPoint,
        step: f64,
        sigmas: &[f64],
        fd: &FdOptions,
    ) -> Result<Self> {
        let stencil = Stencil::new(model, p, FdOptions { step, ..*fd })?;
        let mut fields = vec![
            GeometricField::MeanCurvature,
            GeometricField::A2,
            GeometricField::Lambda,
            GeometricField::S2,
        ];
        fields.extend(sigmas.iter().map(|s| GeometricField::USigma(*s)));
        let mut samples = stencil.sample_many(&fields)?.into_iter();
        let mut next = || samples.next().expect("one sample per field");
        let (h, a2, lambda, s2) = (next(), next(), next(), next());
        let u = sigmas.iter().map(|_| next()).collect();
        Ok(Self {
            step,
            h,
            a2,
            lambda,
            s2,
            u,
            tensor: stencil.shape_tensor()?,
        })
    }
}

/// Derivatives of one scalar field under an interpretation of `∇`, `Δ`.
struct Derivs {
    /// Full gradient: tangential components, plus the normal one for the
    /// ambient reading.
    grad: Vec<f64>,
    tan: [f64; 2],
    lap: f64,
    hess: [[f64; 2]; 2],
}

fn derivs(s: &SurfaceFieldSample, g: &LocalGeometry, interp: Interpretation) -> Derivs {
    match interp {
        Interpretation::Intrinsic => Derivs {
            grad: s.tangential_gradient.to_vec(),
            tan: s.tangential_gradient,
            lap: s.surface_laplacian,
            hess: s.surface_hessian,
        },
        Interpretation::Ambient => {
            let v = s.ambient_gradient_frame(&g.frame);
            let a = &s.ambient_hessian;
            Derivs {
                grad: v.to_vec(),
                tan: [v[1], v[2]],
                lap: s.ambient_laplacian,
                hess: [[a[1][1], a[1][2]], [a[2][1], a[2][2]]],
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Everything the evolution identities need at one point.
struct EvolutionPoint<'m> {
    model: &'m dyn SolitonModel,
    geo: LocalGeometry,
    curv: CurvatureTerms,
    l22: Option<f64>,
    sigmas: Vec<f64>,
    steps: Vec<StepSamples>,
    interp: Interpretation,
}

/// Shared scalar terms of the `U_σ` equations at one step.
struct UTerms {
    u: f64,
    dt_traj: f64,
    dt_ambient: f64,
    /// `ΔU + 2(1+σ)/H ⟨∇H, ∇U⟩`.
    diffusion: f64,
    /// `2|∇_iH h_jk − H∇_ih_jk|²/H^{4+σ}`.
    gradient_square: f64,
    /// `σ(1+σ)|∇H|²/H² − σ(|A|² + R_νν)`.
    reaction: f64,
    /// `Δλ + 2⟨∇H, ∇λ⟩/H`.
    lambda_drift: f64,
    /// `D`.
    d: f64,
    /// `H(λ₂₂ − λ₁₁) + 2(H₂λ₂ − H₁λ₁)`.
    d_reduced: f64,
}

impl<'m> EvolutionPoint<'m> {
    fn frame_h(&self) -> [[f64; 2]; 2] {
        let fr = &self.geo.frame;
        [[fr.kappa1, 0.0], [0.0, fr.kappa2]]
    }

    fn c0(&self) -> Option<f64> {
        if self.model.is_steady_soliton() {
            self.model.hamilton_constant()
        } else {
            None
        }
    }

    fn h_equation(&self, sd: &StepSamples) -> (f64, f64, f64) {
        let fr = &self.geo.frame;
        let hd = derivs(&sd.h, &self.geo, self.interp);
        let ld = derivs(&sd.lambda, &self.geo, self.interp);
        let (l, h) = (fr.lambda, fr.mean_curvature);
        let terms = [
            l * hd.lap,
            l * h * (fr.a2 + fr.r_nunu),
            h * ld.lap,
            2.0 * dot(&ld.grad, &hd.grad),
        ];
        (
            sd.h.trajectory_flow_derivative,
            terms.iter().sum(),
            magnitude(&terms),
        )
    }

    fn a2_equation(&self, sd: &StepSamples) -> (f64, f64, f64) {
        let fr = &self.geo.frame;
        let ad = derivs(&sd.a2, &self.geo, self.interp);
        let hd = derivs(&sd.h, &self.geo, self.interp);
        let ld = derivs(&sd.lambda, &self.geo, self.interp);
        let (l, h) = (fr.lambda, fr.mean_curvature);
        let hh = self.frame_h();
        let mut coupling = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                coupling += hh[i][j] * (h * ld.hess[i][j] + 2.0 * hd.tan[i] * ld.tan[j]);
            }
        }
        let terms = [
            l * ad.lap,
            -2.0 * l * sd.tensor.gradient_norm_sq(),
            2.0 * l * fr.a2 * (fr.a2 + fr.r_nunu),
            -l * self.curv.b(),
            2.0 * coupling,
        ];
        (
            sd.a2.trajectory_flow_derivative,
            terms.iter().sum(),
            magnitude(&terms),
        )
    }

    /// Right-hand side of the `h_ij` equation, `[i][j]`.
    fn h_tensor_rhs(&self, sd: &StepSamples) -> [[f64; 2]; 2] {
        let fr = &self.geo.frame;
        let hd = derivs(&sd.h, &self.geo, Interpretation::Intrinsic);
        let ld = derivs(&sd.lambda, &self.geo, Interpretation::Intrinsic);
        let (l, h) = (fr.lambda, fr.mean_curvature);
        let hh = self.frame_h();
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let h2: f64 = (0..2).map(|k| hh[i][k] * hh[k][j]).sum();
                out[i][j] = l
                    * (sd.tensor.laplacian[i][j] - 2.0 * h * h2
                        + hh[i][j] * (fr.a2 + fr.r_nunu)
                        + self.curv.h_terms[i][j])
                    + h * ld.hess[i][j]
                    + hd.tan[i] * ld.tan[j]
                    + hd.tan[j] * ld.tan[i];
            }
        }
        out
    }

    fn u_terms(&self, sd: &StepSamples, k: usize) -> UTerms {
        let sigma = self.sigmas[k];
        let fr = &self.geo.frame;
        let us = &sd.u[k];
        let ud = derivs(us, &self.geo, self.interp);
        let hd = derivs(&sd.h, &self.geo, self.interp);
        let ld = derivs(&sd.lambda, &self.geo, self.interp);
        let h = fr.mean_curvature;
        let hh = self.frame_h();
        let mut g = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let v = hd.tan[i] * hh[j][k] - h * sd.tensor.gradient[i][j][k];
                    g += v * v;
                }
            }
        }
        let grad_h_sq = dot(&hd.grad, &hd.grad);
        let mut contraction = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                contraction += hh[i][j] * (h * ld.hess[i][j] + 2.0 * hd.tan[i] * ld.tan[j]);
            }
        }
        let hl = dot(&hd.grad, &ld.grad);
        UTerms {
            u: us.value,
            dt_traj: us.trajectory_flow_derivative,
            dt_ambient: us.flow_derivative,
            diffusion: ud.lap + 2.0 * (1.0 + sigma) / h * dot(&hd.grad, &ud.grad),
            gradient_square: 2.0 * g / h.powf(4.0 + sigma),
            reaction: sigma * (1.0 + sigma) * grad_h_sq / (h * h) - sigma * (fr.a2 + fr.r_nunu),
            lambda_drift: ld.lap + 2.0 * hl / h,
            d: contraction - 0.5 * h * (h * ld.lap + 2.0 * hl),
            d_reduced: h * (ld.hess[1][1] - ld.hess[0][0])
                + 2.0 * (hd.tan[1] * ld.tan[1] - hd.tan[0] * ld.tan[0]),
        }
    }

    /// `weight` multiplies the gradient-square, `B` and `D` terms: 1 is the
    /// published form, 2 the form that follows from the `H` and `|A|²`
    /// equations for the numerator `2|A|² − H²`.
    fn prop2(&self, sd: &StepSamples, k: usize, weight: f64) -> (f64, f64, f64) {
        let sigma = self.sigmas[k];
        let fr = &self.geo.frame;
        let (l, h) = (fr.lambda, fr.mean_curvature);
        let t = self.u_terms(sd, k);
        let hs = h.powf(2.0 + sigma);
        let terms = [
            l * t.diffusion,
            -weight * l * t.gradient_square,
            l * t.reaction * t.u,
            -weight * l * self.curv.b() / hs,
            -(2.0 + sigma) * t.lambda_drift * t.u,
            2.0 * weight * t.d / hs,
        ];
        (t.dt_traj, terms.iter().sum(), magnitude(&terms))
    }

    /// `2C₀ − (2+σ)⟨∇H, ∇f⟩/H − 2H|∇f|`.
    fn b_coefficient(&self, sd: &StepSamples, sigma: f64, c0: f64) -> f64 {
        let fr = &self.geo.frame;
        let gn = fr.grad_norm;
        let dh_df = sd.h.flow_derivative * gn * gn;
        2.0 * c0 - (2.0 + sigma) * dh_df / fr.mean_curvature - 2.0 * fr.mean_curvature * gn
    }

    fn l22_term(&self, sigma: f64, u: f64) -> f64 {
        let fr = &self.geo.frame;
        8.0 * self.l22.unwrap_or(0.0) * u.max(0.0).sqrt()
            / (fr.mean_curvature.powf(1.0 + sigma / 2.0) * fr.grad_norm.powi(3))
    }

    fn lemma_b(&self, sd: &StepSamples, k: usize, c0: f64) -> (f64, f64, f64) {
        let sigma = self.sigmas[k];
        let fr = &self.geo.frame;
        let u = &sd.u[k];
        let lhs = -self.curv.b() / fr.mean_curvature.powf(2.0 + sigma);
        let terms = [
            fr.grad_norm * fr.grad_norm * u.trajectory_flow_derivative,
            -self.b_coefficient(sd, sigma, c0) * u.value,
            -self.l22_term(sigma, u.value),
        ];
        (lhs, terms.iter().sum(), magnitude(&terms))
    }

    fn lemma_b_eq2(&self, sd: &StepSamples) -> (f64, f64, f64) {
        let fr = &self.geo.frame;
        let gn = fr.grad_norm;
        let s = fr.s();
        let terms = [
            gn * gn * sd.s2.trajectory_flow_derivative,
            2.0 * s * s * (-fr.r_nunu + fr.mean_curvature * gn - gn * gn),
            -8.0 * s * self.l22.unwrap_or(0.0) / gn.powi(3),
        ];
        (self.curv.t3, terms.iter().sum(), magnitude(&terms))
    }

    fn lemma_d(&self, sd: &StepSamples, k: usize) -> (f64, f64, f64) {
        let sigma = self.sigmas[k];
        let h = self.geo.frame.mean_curvature;
        let t = EvolutionPoint {
            interp: Interpretation::Intrinsic,
            ..self.shallow()
        }
        .u_terms(sd, k);
        (
            t.d,
            0.5 * h.powf(1.0 + sigma / 2.0) * t.d_reduced * t.u.max(0.0).sqrt(),
            0.0,
        )
    }

    /// `(∂_tU, right side of the U_σ equation without the λ|∇f|²∂_tU term, λ|∇f|² − 1)`.
    fn prop3_parts(&self, sd: &StepSamples, k: usize, c0: f64) -> (UTerms, [f64; 7], f64) {
        let sigma = self.sigmas[k];
        let fr = &self.geo.frame;
        let (l, h) = (fr.lambda, fr.mean_curvature);
        let t = self.u_terms(sd, k);
        let rest = [
            l * t.diffusion,
            -l * t.gradient_square,
            l * t.reaction * t.u,
            -l * self.b_coefficient(sd, sigma, c0) * t.u,
            -l * self.l22_term(sigma, t.u),
            -(2.0 + sigma) * t.lambda_drift * t.u,
            t.d_reduced / h.powf(1.0 + sigma / 2.0) * t.u.max(0.0).sqrt(),
        ];
        (t, rest, l * fr.grad_norm * fr.grad_norm - 1.0)
    }

    fn prop3(&self, sd: &StepSamples, k: usize, c0: f64) -> (f64, f64, f64) {
        let (t, rest, m) = self.prop3_parts(sd, k, c0);
        let drift = (m + 1.0) * t.dt_ambient;
        (
            t.dt_traj,
            rest.iter().sum::<f64>() + drift,
            magnitude(&rest).max(drift.abs()),
        )
    }

    /// The U_σ equation with `λ|∇f|²∂_tU` moved left and divided by `m`; the left side
    /// keeps both derivative sources so the defect is exactly `1/m` times the
    /// U_σ-equation defect. It equals `∂_τU` with `τ = −t`.
    fn prop3_theta(&self, sd: &StepSamples, k: usize, c0: f64) -> (f64, f64, f64) {
        let (t, rest, m) = self.prop3_parts(sd, k, c0);
        let drift = (m + 1.0) * t.dt_ambient;
        (
            (t.dt_traj - drift) / m,
            rest.iter().sum::<f64>() / m,
            magnitude(&rest) / m.abs(),
        )
    }

    fn shallow(&self) -> EvolutionPoint<'m> {
        EvolutionPoint {
            model: self.model,
            geo: self.geo.clone(),
            curv: self.curv,
            l22: self.l22,
            sigmas: self.sigmas.clone(),
            steps: Vec::new(),
            interp: self.interp,
        }
    }
}

/// Builds a row from a residual evaluated at steps `h` and `h/2`.
/// Largest single term of a sum.
fn magnitude(terms: &[f64]) -> f64 {
    terms.iter().fold(0.0, |m, t| m.max(t.abs()))
}

/// Residual sides at a stencil level, plus the magnitude of the largest
/// individual term (sets the relative floor when the terms cancel).
type LevelEval<'a> = dyn Fn(usize) -> (Vec<f64>, Vec<f64>, f64) + 'a;

/// Row at level 0 with the order from level 1 (half step); levels 2 and 3
/// repeat level 1 at nudged steps and measure rounding noise.
fn fd_row(
    id: &str,
    ep: &EvolutionPoint,
    p: &ChartPoint,
    sigma: Option<f64>,
    floor: f64,
    eval: &LevelEval,
) -> ResidualReport {
    let (lhs, rhs, scale) = eval(0);
    let (lhs1, rhs1, scale1) = eval(1);
    let floor0 = floor.max(1e-6 * scale);
    let (abs1, rel1) = residuals(&lhs1, &rhs1, floor.max(1e-6 * scale1));
    let mut noise = 0.0_f64;
    for probe in [2, 3] {
        let (lhs2, rhs2, _) = eval(probe);
        for ((a, b), (c, d)) in lhs1.iter().zip(&rhs1).zip(lhs2.iter().zip(&rhs2)) {
            noise = noise.max(((a - b) - (c - d)).abs());
        }
    }
    let row = ResidualReport::new(id, ep.model.name(), &p.0, sigma, lhs, rhs, floor0);
    let order = OrderEstimate::from_halving_with_noise(
        row.abs_residual.unwrap_or(f64::NAN),
        abs1,
        row.rel_residual.unwrap_or(f64::NAN),
        rel1,
        noise,
    );
    row.with_fd(ep.steps[0].step, order)
}

/// Lifts a scalar residual indexed by stencil level.
fn scalar(f: impl Fn(usize) -> (f64, f64, f64)) -> impl Fn(usize) -> (Vec<f64>, Vec<f64>, f64) {
    move |level| {
        let (a, b, m) = f(level);
        (vec![a], vec![b], m)
    }
}

/// `∂_t h_ij` in subnormal coordinates by differencing along the base flow
/// line, `[i][j]`.
fn h_time_derivative(
    chart: &SubnormalChart,
    model: &dyn SolitonModel,
    dt: f64,
    richardson: bool,
    fd: &FdOptions,
) -> Result<[[f64; 2]; 2]> {
    let comps = |t: f64| -> Result<[[f64; 2]; 2]> {
        let (q, j) = chart.axis_frame(t)?;
        let g = LocalGeometry::new(model, &q, 2, &fd.cutoffs)?;
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] = g.shape(&j[a], &j[b]);
            }
        }
        Ok(m)
    };
    let diff = |t: f64| -> Result<[[f64; 2]; 2]> {
        let (p, m) = (comps(t)?, comps(-t)?);
        let mut out = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] = (p[a][b] - m[a][b]) / (2.0 * t);
            }
        }
        Ok(out)
    };
    let outer = diff(dt)?;
    if !richardson {
        return Ok(outer);
    }
    let inner = diff(0.5 * dt)?;
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = (4.0 * inner[a][b] - outer[a][b]) / 3.0;
        }
    }
    Ok(out)
}

const NEEDS_PRINCIPAL: [IdentityId; 5] = [
    IdentityId::EvohH,
    IdentityId::Prop2,
    IdentityId::LemmaB,
    IdentityId::LemmaD,
    IdentityId::Prop3,
];

fn row_ids(id: IdentityId) -> &'static [&'static str] {
    match id {
        IdentityId::EvoH => &["evoh_H"],
        IdentityId::EvoA2 => &["evoh_A2"],
        IdentityId::EvohH => &["evoh_h"],
        IdentityId::Prop2 => &["prop2"],
        IdentityId::LemmaB => &["lemma_b"],
        IdentityId::LemmaD => &["lemma_d"],
        IdentityId::Prop3 => &["prop3"],
        _ => &[],
    }
}

fn per_sigma(id: IdentityId) -> bool {
    matches!(
        id,
        IdentityId::Prop2 | IdentityId::LemmaB | IdentityId::LemmaD | IdentityId::Prop3
    )
}

fn skip_rows(
    ids: &[IdentityId],
    model: &dyn SolitonModel,
    p: &ChartPoint,
    sigmas: &[f64],
    reason: &str,
) -> Vec<ResidualReport> {
    let mut out = Vec::new();
    for &id in ids {
        for name in row_ids(id) {
            if per_sigma(id) {
                out.extend(
                    sigmas.iter().map(|s| {
                        ResidualReport::skipped(name, model.name(), &p.0, Some(*s), reason)
                    }),
                );
            } else {
                out.push(ResidualReport::skipped(
                    name,
                    model.name(),
                    &p.0,
                    None,
                    reason,
                ));
            }
        }
    }
    out
}

fn fail_rows(
    ids: &[IdentityId],
    model: &dyn SolitonModel,
    p: &ChartPoint,
    sigmas: &[f64],
    e: &crate::Error,
) -> Vec<ResidualReport> {
    let mut out = Vec::new();
    for &id in ids {
        for name in row_ids(id) {
            if per_sigma(id) {
                out.extend(
                    sigmas
                        .iter()
                        .map(|s| error_row(name, model, p, Some(*s), e)),
                );
            } else {
                out.push(error_row(name, model, p, None, e));
            }
        }
    }
    out
}

/// Rows for every requested evolution identity at `p`; stencils are shared.
pub fn evolution_rows(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    ids: &[IdentityId],
    opts: &VerifyOptions,
) -> Vec<ResidualReport> {
    let ids: Vec<IdentityId> = ids.iter().copied().filter(|id| id.is_evolution()).collect();
    if ids.is_empty() {
        return Vec::new();
    }
    let sigmas = opts.sigmas.clone();
    let geo = match LocalGeometry::new(model, p, 3, &opts.fd.cutoffs) {
        Ok(g) => g,
        Err(e) => return fail_rows(&ids, model, p, &sigmas, &e),
    };
    let (principal, general): (Vec<IdentityId>, Vec<IdentityId>) =
        ids.iter().partition(|id| NEEDS_PRINCIPAL.contains(id));
    let mut out = Vec::new();
    let (active, umbilical_skipped) = if geo.frame.umbilical {
        (general, principal)
    } else {
        (ids.clone(), Vec::new())
    };
    out.extend(skip_rows(
        &umbilical_skipped,
        model,
        p,
        &sigmas,
        "umbilical: not applicable",
    ));
    if active.is_empty() {
        return out;
    }
    match evolution_active(model, p, geo, &active, opts) {
        Ok(rows) => out.extend(rows),
        Err(e) => out.extend(fail_rows(&active, model, p, &sigmas, &e)),
    }
    out
}

/// Relative step change of the noise probe; shifts truncation error by a
/// negligible amount while decorrelating rounding.
const PROBE_NUDGE: f64 = 1e-2;

fn evolution_active(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    geo: LocalGeometry,
    ids: &[IdentityId],
    opts: &VerifyOptions,
) -> Result<Vec<ResidualReport>> {
    let sigmas = opts.sigmas.clone();
    let step = FdOptions::scaled_step(opts.fd.step, &geo.frame);
    let steps = vec![
        StepSamples::new(model, p, step, &sigmas, &opts.fd)?,
        StepSamples::new(model, p, 0.5 * step, &sigmas, &opts.fd)?,
        StepSamples::new(
            model,
            p,
            0.5 * step * (1.0 + PROBE_NUDGE),
            &sigmas,
            &opts.fd,
        )?,
        StepSamples::new(
            model,
            p,
            0.5 * step * (1.0 - PROBE_NUDGE),
            &sigmas,
            &opts.fd,
        )?,
    ];
    let curv = CurvatureTerms::new(&geo)?;
    let l22 = if geo.frame.umbilical {
        None
    } else {
        Some(l_tensor_from(&geo)?.l22_tangential)
    };
    let ep = EvolutionPoint {
        model,
        geo,
        curv,
        l22,
        sigmas: sigmas.clone(),
        steps,
        interp: opts.interpretation,
    };
    let floor = relative_floor(model);
    let tol = opts.tolerances.for_model(model);
    let judge = |r: ResidualReport| r.judge(tol.evolution, tol.min_order);
    let name = model.name();
    let c0 = ep.c0();
    let mut out = Vec::new();
    for &id in ids {
        match id {
            IdentityId::EvoH => out.push(judge(fd_row(
                "evoh_H",
                &ep,
                p,
                None,
                floor,
                &scalar(|l| ep.h_equation(&ep.steps[l])),
            ))),
            IdentityId::EvoA2 => out.push(judge(fd_row(
                "evoh_A2",
                &ep,
                p,
                None,
                floor,
                &scalar(|l| ep.a2_equation(&ep.steps[l])),
            ))),
            IdentityId::EvohH => out.extend(h_tensor_rows(&ep, p, floor, opts)?),
            IdentityId::Prop2 => {
                for (k, s) in sigmas.iter().enumerate() {
                    out.push(judge(fd_row(
                        "prop2",
                        &ep,
                        p,
                        Some(*s),
                        floor,
                        &scalar(|l| ep.prop2(&ep.steps[l], k, 1.0)),
                    )));
                    out.push(judge(fd_row(
                        "prop2.corrected",
                        &ep,
                        p,
                        Some(*s),
                        floor,
                        &scalar(|l| ep.prop2(&ep.steps[l], k, 2.0)),
                    )));
                }
            }
            IdentityId::LemmaD => {
                for (k, s) in sigmas.iter().enumerate() {
                    out.push(judge(fd_row(
                        "lemma_d",
                        &ep,
                        p,
                        Some(*s),
                        floor,
                        &scalar(|l| ep.lemma_d(&ep.steps[l], k)),
                    )));
                }
            }
            IdentityId::LemmaB => {
                let Some(c0) = c0 else {
                    out.extend(skip_rows(
                        &[id],
                        model,
                        p,
                        &sigmas,
                        "not a steady soliton: skipped",
                    ));
                    continue;
                };
                for (k, s) in sigmas.iter().enumerate() {
                    out.push(judge(fd_row(
                        "lemma_b",
                        &ep,
                        p,
                        Some(*s),
                        floor,
                        &scalar(|l| ep.lemma_b(&ep.steps[l], k, c0)),
                    )));
                }
                let fr = &ep.geo.frame;
                let (r11, r22) = (ep.geo.ricci(&fr.e1, &fr.e1), ep.geo.ricci(&fr.e2, &fr.e2));
                out.push(
                    ResidualReport::new(
                        "lemma_b.s_identity",
                        name,
                        &p.0,
                        None,
                        vec![fr.s() * fr.grad_norm],
                        vec![r22 - r11],
                        floor,
                    )
                    .judge(tol.lsf, 0.0),
                );
                out.push(
                    ResidualReport::new(
                        "lemma_b.contraction",
                        name,
                        &p.0,
                        None,
                        vec![ep.curv.t3],
                        vec![ep.curv.t3_reduced],
                        floor,
                    )
                    .judge(tol.lsf, 0.0),
                );
                out.push(
                    ResidualReport::new(
                        "lemma_b.contraction_literal",
                        name,
                        &p.0,
                        None,
                        vec![ep.curv.t3],
                        vec![ep.curv.t3_literal],
                        floor,
                    )
                    .info(),
                );
                out.push(
                    fd_row(
                        "lemma_b.eq2",
                        &ep,
                        p,
                        None,
                        floor,
                        &scalar(|l| ep.lemma_b_eq2(&ep.steps[l])),
                    )
                    .info(),
                );
            }
            IdentityId::Prop3 => {
                let Some(c0) = c0 else {
                    out.extend(skip_rows(
                        &[id],
                        model,
                        p,
                        &sigmas,
                        "not a steady soliton: skipped",
                    ));
                    continue;
                };
                let theta_ok = ep.geo.frame.theta_checked().is_ok();
                for (k, s) in sigmas.iter().enumerate() {
                    out.push(judge(fd_row(
                        "prop3",
                        &ep,
                        p,
                        Some(*s),
                        floor,
                        &scalar(|l| ep.prop3(&ep.steps[l], k, c0)),
                    )));
                    if theta_ok {
                        out.push(judge(fd_row(
                            "prop3.theta",
                            &ep,
                            p,
                            Some(*s),
                            floor,
                            &scalar(|l| ep.prop3_theta(&ep.steps[l], k, c0)),
                        )));
                    } else {
                        out.push(ResidualReport::skipped(
                            "prop3.theta",
                            name,
                            &p.0,
                            Some(*s),
                            "theta-singular: skipped",
                        ));
                    }
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

fn h_tensor_rows(
    ep: &EvolutionPoint,
    p: &ChartPoint,
    floor: f64,
    opts: &VerifyOptions,
) -> Result<Vec<ResidualReport>> {
    let model = ep.model;
    let tol = opts.tolerances.for_model(model);
    let gn = ep.geo.frame.grad_norm;
    let mut lhs_by_step = Vec::new();
    for sd in &ep.steps {
        let dt = sd.step * gn;
        let chart = SubnormalChart::new(model, p, 4.0 * dt, opts.fd.cutoffs)?;
        lhs_by_step.push(h_time_derivative(
            &chart,
            model,
            dt,
            opts.fd.richardson,
            &opts.fd,
        )?);
    }
    let mut out = Vec::new();
    for (name, i, j) in [
        ("evoh_h.11", 0, 0),
        ("evoh_h.12", 0, 1),
        ("evoh_h.22", 1, 1),
    ] {
        let eval = |l: usize| {
            (
                vec![lhs_by_step[l][i][j]],
                vec![ep.h_tensor_rhs(&ep.steps[l])[i][j]],
                0.0,
            )
        };
        out.push(fd_row(name, ep, p, None, floor, &eval).judge(tol.evolution, tol.min_order));
    }
    // trace of the component residuals against the mean-curvature residual,
    // measured on the scale of the mean-curvature equation
    let intrinsic = EvolutionPoint {
        interp: crate::verify::Interpretation::Intrinsic,
        steps: Vec::new(),
        ..ep.shallow()
    };
    let sd0 = &ep.steps[0];
    let lhs = lhs_by_step[0];
    let rhs = ep.h_tensor_rhs(sd0);
    let trace_res = (lhs[0][0] - rhs[0][0]) + (lhs[1][1] - rhs[1][1]);
    let (dth, rhs_h, _) = intrinsic.h_equation(sd0);
    let scale = dth.abs().max(rhs_h.abs()).max(floor);
    let mut row = ResidualReport::new(
        "evoh_h.trace",
        model.name(),
        &p.0,
        None,
        vec![trace_res],
        vec![dth - rhs_h],
        scale,
    );
    row.fd_step = Some(sd0.step);
    out.push(row.judge(tol.evolution, tol.min_order));
    Ok(out)
}
