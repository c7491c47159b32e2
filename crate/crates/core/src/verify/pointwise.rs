//! Identities that need only jets at a single point.

use nalgebra::DMatrix;

use super::report::ResidualReport;
use super::{error_row, relative_floor, VerifyOptions};
use crate::chart::{ChartPoint, Curvature};
use crate::error::{Error, Result};
use crate::levelset::{Cutoffs, LocalGeometry};
use crate::models::SolitonModel;

/// `L⁻¹` for `g = L Lᵀ`; rows of the result map chart components to an
/// orthonormal frame.
fn orthonormalizer(c: &Curvature) -> Result<DMatrix<f64>> {
    let n = c.dim();
    let g = DMatrix::from_fn(n, n, |i, j| c.metric(i, j));
    let chol = g.cholesky().ok_or(Error::DegenerateMetric {
        min_eigenvalue: 0.0,
    })?;
    chol.l().try_inverse().ok_or(Error::DegenerateMetric {
        min_eigenvalue: 0.0,
    })
}

fn frame_covector(li: &DMatrix<f64>, w: &[f64]) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|a| (0..n).map(|i| li[(a, i)] * w[i]).sum())
        .collect()
}

fn frame_bilinear(li: &DMatrix<f64>, m: &[f64]) -> Vec<f64> {
    let n = li.nrows();
    let mm = DMatrix::from_row_slice(n, n, m);
    let out = li * mm * li.transpose();
    (0..n * n).map(|x| out[(x / n, x % n)]).collect()
}

fn require_steady(model: &dyn SolitonModel) -> std::result::Result<f64, &'static str> {
    match (model.soliton_constant(), model.hamilton_constant()) {
        (Some(0.0), Some(c0)) => Ok(c0),
        _ => Err("not a steady soliton: skipped"),
    }
}

fn soliton_rows(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    opts: &VerifyOptions,
) -> Result<ResidualReport> {
    let mu = model.soliton_constant().ok_or_else(|| Error::Unsupported {
        model: model.name().into(),
        what: "soliton equation (no soliton constant)".into(),
    })?;
    let c = Curvature::new(&model.metric_jet(p, 2)?)?;
    let hess = c.hessian_of(&model.potential_jet(p, 2)?)?;
    let n = c.dim();
    let li = orthonormalizer(&c)?;
    let ric: Vec<f64> = (0..n * n).map(|x| c.ricci(x / n, x % n)).collect();
    let lhs = frame_bilinear(&li, &ric);
    let rhs = frame_bilinear(&li, &hess)
        .iter()
        .enumerate()
        .map(|(x, h)| if x / n == x % n { mu - h } else { -h })
        .collect();
    let tol = opts.tolerances.for_model(model).soliton;
    Ok(ResidualReport::new(
        "soliton",
        model.name(),
        &p.0,
        None,
        lhs,
        rhs,
        relative_floor(model),
    )
    .judge(tol, 0.0))
}

/// `Ric = μ g − Hess f` in an orthonormal frame.
pub fn verify_soliton_equation(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    opts: &VerifyOptions,
) -> ResidualReport {
    soliton_rows(model, p, opts).unwrap_or_else(|e| error_row("soliton", model, p, None, &e))
}

pub const LEMMA1_PARTS: [char; 5] = ['a', 'b', 'c', 'd', 'e'];

fn lemma1_part(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    part: char,
    opts: &VerifyOptions,
) -> Result<ResidualReport> {
    let id = format!("lemma1.{part}");
    let name = model.name();
    let floor = relative_floor(model);
    let tol = opts.tolerances.for_model(model).lemma1;
    let soliton = model.soliton_constant() == Some(0.0);
    let order = match part {
        'c' => 4,
        'b' => 3,
        _ => 2,
    };
    let c = Curvature::new(&model.metric_jet(p, order)?)?;
    let f = model.potential_jet(p, order)?;
    let n = c.dim();
    let df: Vec<f64> = (0..n).map(|a| f.partial(&[a])).collect();
    let grad_f = c.raise(&df);
    let report = match part {
        'a' => {
            let hess = c.hessian_of(&f)?;
            let lap: f64 = (0..n * n)
                .map(|x| c.inverse_metric(x / n, x % n) * hess[x])
                .sum();
            ResidualReport::new(&id, name, &p.0, None, vec![c.scalar()], vec![-lap], floor)
        }
        'b' => {
            let dr = c.scalar_differential()?;
            let ric_grad: Vec<f64> = (0..n)
                .map(|a| 2.0 * (0..n).map(|b| c.ricci(a, b) * grad_f[b]).sum::<f64>())
                .collect();
            let li = orthonormalizer(&c)?;
            ResidualReport::new(
                &id,
                name,
                &p.0,
                None,
                frame_covector(&li, &dr),
                frame_covector(&li, &ric_grad),
                floor,
            )
        }
        'c' => {
            let dr = c.scalar_differential()?;
            let lhs = c.scalar_laplacian()? + 2.0 * c.ricci_norm_sq();
            let rhs: f64 = dr.iter().zip(&grad_f).map(|(a, b)| a * b).sum();
            ResidualReport::new(&id, name, &p.0, None, vec![lhs], vec![rhs], floor)
        }
        'd' => {
            let c0 = match require_steady(model) {
                Ok(c0) => c0,
                Err(reason) => return Ok(ResidualReport::skipped(&id, name, &p.0, None, reason)),
            };
            let sq: f64 = df.iter().zip(&grad_f).map(|(a, b)| a * b).sum();
            ResidualReport::new(
                &id,
                name,
                &p.0,
                None,
                vec![c.scalar() + sq],
                vec![c0],
                floor,
            )
        }
        'e' => {
            let r = c.scalar();
            let mut row = ResidualReport::new(&id, name, &p.0, None, vec![r], vec![0.0], floor);
            let deficit = (-r).max(0.0);
            row.abs_residual = Some(deficit);
            row.rel_residual = Some(deficit);
            return Ok(if soliton {
                row.judge(1e-12, 0.0)
            } else {
                row.info()
            });
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown lemma1 part `{other}`"
            )))
        }
    };
    Ok(if soliton {
        report.judge(tol, 0.0)
    } else {
        report.info()
    })
}

/// One part of the basic steady-soliton identities:
/// (a) `R = −Δf`; (b) `dR = 2 Ric(∇f, ·)`; (c) `ΔR + 2|Ric|² = ⟨∇R, ∇f⟩`;
/// (d) `R + |∇f|² = C₀`; (e) `R ≥ 0`.
pub fn verify_lemma1(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    part: char,
    opts: &VerifyOptions,
) -> ResidualReport {
    lemma1_part(model, p, part, opts)
        .unwrap_or_else(|e| error_row(&format!("lemma1.{part}"), model, p, None, &e))
}

fn level_set_rows(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    opts: &VerifyOptions,
) -> Result<Vec<ResidualReport>> {
    let name = model.name();
    if let Err(reason) = require_steady(model) {
        return Ok(["lsf", "lsf.s"]
            .iter()
            .map(|id| ResidualReport::skipped(id, name, &p.0, None, reason))
            .collect());
    }
    let g = LocalGeometry::new(model, p, 2, &opts.fd.cutoffs)?;
    let fr = &g.frame;
    let floor = relative_floor(model);
    let tol = opts.tolerances.for_model(model).lsf;
    let r11 = g.ricci(&fr.e1, &fr.e1);
    let r22 = g.ricci(&fr.e2, &fr.e2);
    Ok(vec![
        ResidualReport::new(
            "lsf",
            name,
            &p.0,
            None,
            vec![fr.mean_curvature * fr.grad_norm],
            vec![fr.scalar - fr.r_nunu],
            floor,
        )
        .judge(tol, 0.0),
        ResidualReport::new(
            "lsf.s",
            name,
            &p.0,
            None,
            vec![fr.s() * fr.grad_norm],
            vec![r22 - r11],
            floor,
        )
        .judge(tol, 0.0),
    ])
}

/// `H|∇f| = R − R_νν` and `(κ₂ − κ₁)|∇f| = R₂₂ − R₁₁` on level sets.
pub fn verify_level_set_identities(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    opts: &VerifyOptions,
) -> Vec<ResidualReport> {
    level_set_rows(model, p, opts).unwrap_or_else(|e| vec![error_row("lsf", model, p, None, &e)])
}

fn u0_rows(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    opts: &VerifyOptions,
) -> Result<Vec<ResidualReport>> {
    let name = model.name();
    if let Err(reason) = require_steady(model) {
        return Ok(vec![ResidualReport::skipped(
            "main_u0", name, &p.0, None, reason,
        )]);
    }
    let cutoffs: Cutoffs = opts.fd.cutoffs;
    let g = LocalGeometry::new(model, p, 2, &cutoffs)?;
    let fr = &g.frame;
    let frame_u0 = fr.umbilical_ratio(0.0, &cutoffs)?;
    let diff = g.ricci(&fr.e2, &fr.e2) - g.ricci(&fr.e1, &fr.e1);
    let denom = fr.grad_norm * fr.grad_norm * fr.mean_curvature * fr.mean_curvature;
    let floor = relative_floor(model);
    let tol = opts.tolerances.for_model(model).main_u0;
    Ok(vec![
        ResidualReport::new(
            "main_u0",
            name,
            &p.0,
            None,
            vec![frame_u0],
            vec![diff * diff / denom],
            floor,
        )
        .judge(tol, 0.0),
        ResidualReport::new(
            "main_u0.quarter",
            name,
            &p.0,
            None,
            vec![frame_u0],
            vec![diff * diff / (4.0 * denom)],
            floor,
        )
        .info(),
    ])
}

/// `U₀` from the principal curvatures against `(R₂₂ − R₁₁)²/(|∇f|²H²)`.
///
/// The `.quarter` row carries the same comparison with an extra factor `1/4`
/// in the Ricci form, as information.
pub fn verify_main_theorem_u0(
    model: &dyn SolitonModel,
    p: &ChartPoint,
    opts: &VerifyOptions,
) -> Vec<ResidualReport> {
    u0_rows(model, p, opts).unwrap_or_else(|e| vec![error_row("main_u0", model, p, None, &e)])
}

/// Pure algebra of the `D` reduction at a point, on synthetic frame data:
/// returns `(D, (H^{(2+σ)/2}/2)(H(λ₂₂ − λ₁₁) + 2(H₂λ₂ − H₁λ₁))√U_σ)`.
pub fn d_reduction(
    kappa: [f64; 2],
    grad_h: [f64; 2],
    grad_lambda: [f64; 2],
    hess_lambda: [[f64; 2]; 2],
    sigma: f64,
) -> (f64, f64) {
    let h = kappa[0] + kappa[1];
    let lap: f64 = hess_lambda[0][0] + hess_lambda[1][1];
    let dot = grad_h[0] * grad_lambda[0] + grad_h[1] * grad_lambda[1];
    let contraction: f64 = (0..2)
        .map(|i| kappa[i] * (h * hess_lambda[i][i] + 2.0 * grad_h[i] * grad_lambda[i]))
        .sum();
    let d = contraction - 0.5 * h * (h * lap + 2.0 * dot);
    let u = (kappa[1] - kappa[0]).powi(2) / h.powf(2.0 + sigma);
    let rhs = 0.5
        * h.powf(1.0 + sigma / 2.0)
        * (h * (hess_lambda[1][1] - hess_lambda[0][0])
            + 2.0 * (grad_h[1] * grad_lambda[1] - grad_h[0] * grad_lambda[0]))
        * u.sqrt();
    (d, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        bryant_integrate, bryant_model, cigar_cross_line_model, cigar_model, euclidean_model,
    };
    use crate::verify::report::Status;

    fn opts() -> VerifyOptions {
        VerifyOptions::default()
    }

    #[test]
    fn euclidean_lemma1_is_exact() {
        let m = euclidean_model(3).unwrap();
        let p = ChartPoint::new(vec![0.3, -0.2, 0.9]);
        for part in LEMMA1_PARTS {
            let r = verify_lemma1(&m, &p, part, &opts());
            assert_eq!(r.status, Status::Pass, "{part}");
            assert_eq!(r.abs_residual, Some(0.0));
        }
        assert_eq!(
            verify_soliton_equation(&m, &p, &opts()).abs_residual,
            Some(0.0)
        );
    }

    #[test]
    fn cigar_hamilton_identity_on_axis_and_off() {
        let m = cigar_model();
        for rho in [0.0, 1.0, 5.0] {
            let r = verify_lemma1(&m, &ChartPoint::new(vec![rho, 0.0]), 'd', &opts());
            assert!(r.abs_residual.unwrap() < 1e-12, "{rho}: {r:?}");
            assert_eq!(r.rhs, vec![4.0]);
        }
    }

    #[test]
    fn bochner_sides_nonzero_on_product() {
        let m = cigar_cross_line_model();
        let r = verify_lemma1(&m, &ChartPoint::new(vec![0.6, 0.8, 0.3]), 'c', &opts());
        assert!(r.lhs[0].abs() > 0.1 && r.rhs[0].abs() > 0.1);
        assert!(r.rel_residual.unwrap() < 1e-8);
    }

    #[test]
    fn u0_forms_on_product_and_bryant() {
        let m = cigar_cross_line_model();
        let rows = verify_main_theorem_u0(&m, &ChartPoint::new(vec![0.6, 0.8, 0.3]), &opts());
        assert!((rows[0].lhs[0] - 1.0).abs() < 1e-10);
        assert_eq!(rows[0].status, Status::Pass);
        assert!((rows[1].rhs[0] - 0.25).abs() < 1e-10);
        let b = bryant_model(bryant_integrate(50.0, 1e-11).unwrap());
        let rows = verify_main_theorem_u0(&b, &ChartPoint::new(vec![10.0, 1.2, 0.4]), &opts());
        assert!(rows[0].lhs[0] < 1e-10 && rows[0].rhs[0] < 1e-10);
        assert_eq!(rows[0].status, Status::Pass);
    }

    #[test]
    fn d_reduction_synthetic() {
        let (d, rhs) = d_reduction(
            [1.0, 3.0],
            [0.4, -0.7],
            [1.3, 0.2],
            [[0.5, 0.9], [0.9, -1.1]],
            2.0,
        );
        assert!((d - rhs).abs() < 1e-12 * d.abs().max(1.0), "{d} {rhs}");
        let (d, rhs) = d_reduction(
            [2.0, 2.0],
            [0.4, -0.7],
            [1.3, 0.2],
            [[0.5, 0.9], [0.9, -1.1]],
            0.0,
        );
        assert_eq!(rhs, 0.0);
        assert!(d.abs() < 1e-14);
    }

    #[test]
    fn non_soliton_rows_are_informational() {
        let m = crate::models::perturbed_fixture();
        let p = ChartPoint::new(vec![0.4, -0.3, 0.5]);
        assert_eq!(verify_lemma1(&m, &p, 'a', &opts()).status, Status::Info);
        assert!(matches!(
            verify_lemma1(&m, &p, 'd', &opts()).status,
            Status::Skipped(_)
        ));
        assert!(matches!(
            verify_level_set_identities(&m, &p, &opts())[0].status,
            Status::Skipped(_)
        ));
    }
}
