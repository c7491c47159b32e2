use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::report::fmt_real;

pub const MIN_SAMPLES: usize = 8;

/// Largest change of the log–log slope between the first and last thirds of
/// the range still accepted as a power law.
const MAX_SLOPE_DRIFT: f64 = 0.25;
const MIN_R2: f64 = 0.95;
/// Below this total spread of `ln v` the data are flat and `R²` says nothing.
const FLAT_LOG_SPREAD: f64 = 0.05;

/// Fit outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Verdict {
    PowerLaw,
    NotPowerLaw,
    /// The quantity could not be sampled along the ray; holds the status.
    Degenerate(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::PowerLaw => f.write_str("power law"),
            Verdict::NotPowerLaw => f.write_str("not power law"),
            Verdict::Degenerate(s) => f.write_str(s),
        }
    }
}

impl From<Verdict> for String {
    fn from(v: Verdict) -> String {
        v.to_string()
    }
}

impl From<String> for Verdict {
    fn from(s: String) -> Self {
        match s.as_str() {
            "power law" => Verdict::PowerLaw,
            "not power law" => Verdict::NotPowerLaw,
            _ => Verdict::Degenerate(s),
        }
    }
}

/// Least-squares fit `v ≈ k r^p` on log–log axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub quantity: String,
    pub model: String,
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
    pub r2: Option<f64>,
    /// RMS of the log residuals.
    pub residual_spread: Option<f64>,
    /// Slope over the last third of the samples minus slope over the first.
    pub slope_drift: Option<f64>,
    pub verdict: Verdict,
    /// Upper-bound exponent implied by the decay hypotheses, when one exists.
    #[serde(default)]
    pub predicted_exponent: Option<f64>,
    /// `exponent ≤ predicted + tolerance`.
    #[serde(default)]
    pub consistent: Option<bool>,
}

impl DecayFit {
    pub fn degenerate(
        quantity: &str,
        model: &str,
        r_min: f64,
        r_max: f64,
        n: usize,
        status: &str,
    ) -> Self {
        Self {
            quantity: quantity.into(),
            model: model.into(),
            r_min,
            r_max,
            n,
            exponent: None,
            constant: None,
            r2: None,
            residual_spread: None,
            slope_drift: None,
            verdict: Verdict::Degenerate(status.into()),
            predicted_exponent: None,
            consistent: None,
        }
    }

    pub fn is_power_law(&self) -> bool {
        self.verdict == Verdict::PowerLaw
    }

    /// Marks the fit against `predicted` with slack `tol`.
    pub fn check_against(&mut self, predicted: Option<f64>, tol: f64) {
        self.predicted_exponent = predicted;
        self.consistent = match (predicted, self.exponent, &self.verdict) {
            (Some(p), Some(e), Verdict::PowerLaw) => Some(e <= p + tol),
            _ => None,
        };
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.quantity,
            self.model,
            fmt_real(self.r_min),
            fmt_real(self.r_max),
            self.n,
            opt(self.exponent),
            opt(self.constant),
            opt(self.r2),
            self.verdict,
            opt(self.slope_drift),
            opt(self.predicted_exponent),
            self.consistent.map(|c| c.to_string()).unwrap_or_default()
        )
    }
}

pub const DECAY_CSV_COLUMNS: &str = "quantity,model,r_min,r_max,n,exponent,constant,r2,verdict,slope_drift,predicted_exponent,consistent";

struct Line {
    slope: f64,
    intercept: f64,
    r2: f64,
    rms: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Line {
        slope,
        intercept,
        r2,
        rms: (ss_res / n).sqrt(),
    }
}

/// Fits `v = k r^p` to `(r, v)` samples with increasing `r > 0` and `v > 0`.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidInput(format!(
                "radii must increase strictly: {} then {}",
                w[0].0, w[1].0
            )));
        }
    }
    if let Some(&(r, v)) = samples
        .iter()
        .find(|(r, v)| !(*r > 0.0 && *v > 0.0) || !r.is_finite() || !v.is_finite())
    {
        return Err(Error::OutsideDomain(format!(
            "power-law fit needs positive finite samples, got v({r}) = {v}"
        )));
    }
    let x: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let all = least_squares(&x, &y);
    let k = (samples.len() / 3).max(3);
    let first = least_squares(&x[..k], &y[..k]);
    let last = least_squares(&x[x.len() - k..], &y[y.len() - k..]);
    let drift = last.slope - first.slope;
    let spread = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - y.iter().cloned().fold(f64::INFINITY, f64::min);
    let poor_r2 = all.r2 < MIN_R2 && spread > FLAT_LOG_SPREAD;
    let verdict = if drift.abs() > MAX_SLOPE_DRIFT || poor_r2 {
        Verdict::NotPowerLaw
    } else {
        Verdict::PowerLaw
    };
    Ok(DecayFit {
        quantity: String::new(),
        model: String::new(),
        r_min: samples[0].0,
        r_max: samples[samples.len() - 1].0,
        n: samples.len(),
        exponent: Some(all.slope),
        constant: Some(all.intercept.exp()),
        r2: Some(all.r2),
        residual_spread: Some(all.rms),
        slope_drift: Some(drift),
        verdict,
        predicted_exponent: None,
        consistent: None,
    })
}

/// `n` radii spaced geometrically over `[r_min, r_max]`, endpoints exact.
pub(crate) fn geometric_radii(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    let ratio = (r_max / r_min).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => r_min,
            i if i == n - 1 => r_max,
            i => r_min * (ratio * i as f64).exp(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sampled(f: impl Fn(f64) -> f64, r_min: f64, r_max: f64, n: usize) -> Vec<(f64, f64)> {
        geometric_radii(r_min, r_max, n)
            .into_iter()
            .map(|r| (r, f(r)))
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_power_law(&sampled(|r| 5.0 / r, 1.0, 100.0, 12)).unwrap();
        assert_relative_eq!(fit.exponent.unwrap(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.constant.unwrap(), 5.0, epsilon = 1e-11);
        assert_relative_eq!(fit.r2.unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(fit.verdict, Verdict::PowerLaw);
    }

    #[test]
    fn perturbed_power_law() {
        let fit = fit_power_law(&sampled(|r| (1.0 + 0.01 * r.sin()) / r, 1e2, 1e4, 32)).unwrap();
        assert!((fit.exponent.unwrap() + 1.0).abs() < 0.02, "{fit:?}");
        assert!(fit.is_power_law());
    }

    #[test]
    fn exponential_is_not_power_law() {
        let fit = fit_power_law(&sampled(|r| 4.0 / r.cosh().powi(2), 1.0, 15.0, 32)).unwrap();
        assert_eq!(fit.verdict, Verdict::NotPowerLaw, "{fit:?}");
        assert!(fit.slope_drift.unwrap() < -0.25);
    }

    #[test]
    fn nearly_constant_is_power_law() {
        let fit = fit_power_law(&sampled(|r| 1.0 - 1.0 / r, 1e2, 1e4, 32)).unwrap();
        assert!(fit.r2.unwrap() < 0.95);
        assert!(fit.exponent.unwrap().abs() < 0.02);
        assert!(fit.is_power_law(), "{fit:?}");
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            fit_power_law(&[(1.0, 1.0), (2.0, 0.5)]),
            Err(Error::InvalidInput(_))
        ));
        let mut s = sampled(|r| 1.0 / r, 1.0, 10.0, 8);
        s[3].1 = 0.0;
        assert!(matches!(fit_power_law(&s), Err(Error::OutsideDomain(_))));
        let mut s = sampled(|r| 1.0 / r, 1.0, 10.0, 8);
        s.swap(2, 3);
        assert!(fit_power_law(&s).is_err());
    }

    #[test]
    fn verdict_round_trip() {
        for v in [
            Verdict::PowerLaw,
            Verdict::NotPowerLaw,
            Verdict::Degenerate("umbilical: not applicable".into()),
        ] {
            let j = serde_json::to_string(&v).unwrap();
            assert_eq!(serde_json::from_str::<Verdict>(&j).unwrap(), v);
        }
    }

    #[test]
    fn radii_are_geometric() {
        let r = geometric_radii(100.0, 1e4, 5);
        assert_eq!((r[0], r[4]), (100.0, 1e4));
        assert_relative_eq!(r[2], 1e3, max_relative = 1e-14);
    }
}
