use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_power_law, geometric_radii, DecayFit, MIN_SAMPLES};
use super::{sigma_select, TheoremParams};
use crate::chart::{gradient_norm_sq, scalar_curvature, ChartPoint};
use crate::error::{Error, Result};
use crate::levelset::{frame_at, FdOptions, GeometricField, Stencil};
use crate::models::SolitonModel;
use crate::verify::skip_reason;

/// Slack on the fitted exponent when comparing against a prediction.
pub const CONSISTENCY_TOL: f64 = 0.05;

/// Quantities sampled along radial rays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum DecayQuantity {
    Scalar,
    L22Mag,
    GradLambdaNorm,
    HessLambdaNorm,
    USigma(f64),
    MeanCurvature,
    GradNormSq,
}

impl DecayQuantity {
    pub const IDS: &'static str =
        "R, L22_mag, grad_lambda_norm, hess_lambda_norm, U_sigma(<sigma>), H, grad_norm_sq";

    /// Value at `p`; `Err` when the quantity is undefined there.
    pub fn evaluate(&self, model: &dyn SolitonModel, p: &ChartPoint) -> Result<f64> {
        match self {
            DecayQuantity::Scalar => scalar_curvature(&model.metric_jet(p, 2)?),
            DecayQuantity::GradNormSq => {
                gradient_norm_sq(&model.metric_jet(p, 1)?, &model.potential_jet(p, 1)?)
            }
            DecayQuantity::MeanCurvature => {
                GeometricField::MeanCurvature.evaluate(model, p, &Default::default())
            }
            DecayQuantity::L22Mag => Ok(GeometricField::L22
                .evaluate(model, p, &Default::default())?
                .abs()),
            DecayQuantity::USigma(sigma) => {
                let fr = frame_at(model, p)?;
                if fr.umbilical {
                    return Err(Error::EigenvectorDegenerate {
                        gap: fr.kappa2 - fr.kappa1,
                    });
                }
                fr.umbilical_ratio(*sigma, &Default::default())
            }
            DecayQuantity::GradLambdaNorm | DecayQuantity::HessLambdaNorm => {
                let fr = frame_at(model, p)?;
                let scale = scalar_curvature(&model.metric_jet(p, 2)?)?
                    .abs()
                    .sqrt()
                    .recip();
                let step = 1e-3 * scale.clamp(1.0, model.radial_distance(p)?.max(1.0));
                let s = Stencil::new(model, p, FdOptions::with_step(step))?
                    .sample(&GeometricField::Lambda)?;
                Ok(match self {
                    DecayQuantity::GradLambdaNorm => s
                        .ambient_gradient_frame(&fr)
                        .iter()
                        .map(|v| v * v)
                        .sum::<f64>()
                        .sqrt(),
                    _ => s
                        .ambient_hessian
                        .iter()
                        .flatten()
                        .map(|v| v * v)
                        .sum::<f64>()
                        .sqrt(),
                })
            }
        }
    }
}

impl fmt::Display for DecayQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayQuantity::Scalar => f.write_str("R"),
            DecayQuantity::L22Mag => f.write_str("L22_mag"),
            DecayQuantity::GradLambdaNorm => f.write_str("grad_lambda_norm"),
            DecayQuantity::HessLambdaNorm => f.write_str("hess_lambda_norm"),
            DecayQuantity::USigma(s) => write!(f, "U_sigma({s})"),
            DecayQuantity::MeanCurvature => f.write_str("H"),
            DecayQuantity::GradNormSq => f.write_str("grad_norm_sq"),
        }
    }
}

impl FromStr for DecayQuantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let q = match s {
            "R" => DecayQuantity::Scalar,
            "L22_mag" => DecayQuantity::L22Mag,
            "grad_lambda_norm" => DecayQuantity::GradLambdaNorm,
            "hess_lambda_norm" => DecayQuantity::HessLambdaNorm,
            "H" => DecayQuantity::MeanCurvature,
            "grad_norm_sq" => DecayQuantity::GradNormSq,
            _ => {
                let sigma = s
                    .strip_prefix("U_sigma(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite());
                match sigma {
                    Some(v) => DecayQuantity::USigma(v),
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "unknown quantity `{s}`; valid: {}",
                            Self::IDS
                        )))
                    }
                }
            }
        };
        Ok(q)
    }
}

impl From<DecayQuantity> for String {
    fn from(q: DecayQuantity) -> String {
        q.to_string()
    }
}

impl TryFrom<String> for DecayQuantity {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Upper-bound exponent implied by `c₁r^{−b} ≤ R ≤ c₂r^{−a}`, where one is
/// known.
pub fn predicted_exponent(q: DecayQuantity, params: &TheoremParams) -> Option<f64> {
    let (a, b) = (params.a, params.b);
    match q {
        DecayQuantity::Scalar => Some(-a),
        DecayQuantity::GradNormSq => Some(0.0),
        DecayQuantity::L22Mag => Some(-3.0 * a),
        DecayQuantity::GradLambdaNorm => Some(2.0 * b - 1.5 * a),
        DecayQuantity::HessLambdaNorm => Some(3.0 * b - 3.0 * a),
        DecayQuantity::USigma(s) if s == sigma_select(params) => Some(0.0),
        _ => None,
    }
}

/// Ray range used when none is given.
pub fn default_ray_range(model: &dyn SolitonModel) -> Result<(f64, f64)> {
    match model.name() {
        "bryant" => Ok((100.0, model.radial_limit().unwrap_or(1e4).min(1e4))),
        "cigar" | "cigarxr" => Ok((1.0, 10.0)),
        _ => Err(Error::Unsupported {
            model: model.name().into(),
            what: "radial ray".into(),
        }),
    }
}

/// Samples `quantity` at `n` geometrically spaced radii along the model's
/// reference ray and fits a power law. Bryant fits are checked against the
/// `a = b = 1` predictions.
pub fn measure_decay(
    model: &dyn SolitonModel,
    quantity: DecayQuantity,
    range: (f64, f64),
    n: usize,
) -> Result<DecayFit> {
    let (r_min, r_max) = range;
    if !(r_min > 0.0 && r_max > r_min) || !r_max.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if n < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if let Some(limit) = model.radial_limit() {
        if r_max > limit {
            return Err(Error::OutsideDomain(format!(
                "r_max = {r_max} beyond the model's radial limit {limit}"
            )));
        }
    }
    let radii = geometric_radii(r_min, r_max, n);
    let values: Vec<Result<f64>> = radii
        .par_iter()
        .map(|&r| quantity.evaluate(model, &model.ray_point(r)?))
        .collect();
    let id = quantity.to_string();
    let mut samples = Vec::with_capacity(n);
    for (r, v) in radii.iter().zip(values) {
        match v {
            Ok(v) => samples.push((*r, v)),
            Err(e) => match skip_reason(&e) {
                Some(status) => {
                    return Ok(DecayFit::degenerate(
                        &id,
                        model.name(),
                        r_min,
                        r_max,
                        n,
                        status,
                    ))
                }
                None => return Err(e),
            },
        }
    }
    let mut fit = match fit_power_law(&samples) {
        Ok(f) => f,
        Err(Error::OutsideDomain(_)) => {
            return Ok(DecayFit::degenerate(
                &id,
                model.name(),
                r_min,
                r_max,
                n,
                "nonpositive sample: skipped",
            ))
        }
        Err(e) => return Err(e),
    };
    fit.quantity = id;
    fit.model = model.name().into();
    if model.name() == "bryant" {
        let params = TheoremParams::exponents(1.0, 1.0)?;
        fit.check_against(predicted_exponent(quantity, &params), CONSISTENCY_TOL);
    }
    Ok(fit)
}
