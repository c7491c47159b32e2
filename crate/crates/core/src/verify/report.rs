use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bump when report columns change.
pub const FORMAT_VERSION: &str = "soliton-lab-report/1";

/// Outcome of one residual row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Status {
    Pass,
    Fail,
    /// Diagnostic row with no tolerance attached.
    Info,
    /// Not evaluated; the string is the reported status.
    Skipped(String),
}

impl Status {
    pub fn skipped(reason: &str) -> Self {
        Status::Skipped(reason.to_string())
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Status::Fail)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Pass => f.write_str("pass"),
            Status::Fail => f.write_str("fail"),
            Status::Info => f.write_str("info"),
            Status::Skipped(s) => f.write_str(s),
        }
    }
}

impl From<Status> for String {
    fn from(s: Status) -> String {
        s.to_string()
    }
}

impl From<String> for Status {
    fn from(s: String) -> Self {
        match s.as_str() {
            "pass" => Status::Pass,
            "fail" => Status::Fail,
            "info" => Status::Info,
            _ => Status::Skipped(s),
        }
    }
}

/// Step-halving order estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderEstimate {
    Value(f64),
    /// Both steps already sit below the relative noise floor.
    Label(String),
}

impl OrderEstimate {
    pub const NOISE_FLOOR: &'static str = "noise-floor";

    /// Order from absolute residuals at steps `h` and `h/2`; `rel_*` are the
    /// matching relative residuals.
    pub fn from_halving(res_h: f64, res_half: f64, rel_h: f64, rel_half: f64) -> Self {
        if rel_h < 1e-6 && rel_half < 1e-6 {
            OrderEstimate::Label(Self::NOISE_FLOOR.into())
        } else {
            OrderEstimate::Value((res_h / res_half).log2())
        }
    }

    /// As [`from_halving`](Self::from_halving), but also labels the row
    /// noise-floor when the residual at `h/2` is within a few multiples of
    /// `noise`, the spread between two evaluations whose truncation error
    /// agrees.
    pub fn from_halving_with_noise(
        res_h: f64,
        res_half: f64,
        rel_h: f64,
        rel_half: f64,
        noise: f64,
    ) -> Self {
        if res_half <= Self::NOISE_MULTIPLE * noise {
            OrderEstimate::Label(Self::NOISE_FLOOR.into())
        } else {
            Self::from_halving(res_h, res_half, rel_h, rel_half)
        }
    }

    pub const NOISE_MULTIPLE: f64 = 4.0;

    /// Whether the estimate meets `min_order`.
    pub fn meets(&self, min_order: f64) -> bool {
        match self {
            OrderEstimate::Value(v) => *v >= min_order,
            OrderEstimate::Label(l) => l == Self::NOISE_FLOOR,
        }
    }
}

impl fmt::Display for OrderEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderEstimate::Value(v) => write!(f, "{}", fmt_real(*v)),
            OrderEstimate::Label(l) => f.write_str(l),
        }
    }
}

/// One verified identity at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity: String,
    pub model: String,
    pub point_index: usize,
    pub point: Vec<f64>,
    pub sigma: Option<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub abs_residual: Option<f64>,
    pub rel_residual: Option<f64>,
    pub fd_step: Option<f64>,
    pub order_estimate: Option<OrderEstimate>,
    pub tolerance: Option<f64>,
    pub status: Status,
    /// Error text when evaluation failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `|lhs − rhs|∞` and `|lhs − rhs|∞ / max(|lhs|∞, |rhs|∞, floor)`.
pub fn residuals(lhs: &[f64], rhs: &[f64], floor: f64) -> (f64, f64) {
    let abs = lhs
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = lhs.iter().chain(rhs).map(|v| v.abs()).fold(floor, f64::max);
    (abs, abs / scale)
}

impl ResidualReport {
    pub fn new(
        identity: &str,
        model: &str,
        point: &[f64],
        sigma: Option<f64>,
        lhs: Vec<f64>,
        rhs: Vec<f64>,
        floor: f64,
    ) -> Self {
        let (abs, rel) = residuals(&lhs, &rhs, floor);
        let finite = abs.is_finite() && rel.is_finite();
        Self {
            identity: identity.into(),
            model: model.into(),
            point_index: 0,
            point: point.to_vec(),
            sigma,
            lhs,
            rhs,
            abs_residual: Some(abs),
            rel_residual: Some(rel),
            fd_step: None,
            order_estimate: None,
            tolerance: None,
            status: if finite { Status::Info } else { Status::Fail },
            note: None,
        }
    }

    pub fn skipped(
        identity: &str,
        model: &str,
        point: &[f64],
        sigma: Option<f64>,
        reason: &str,
    ) -> Self {
        Self {
            identity: identity.into(),
            model: model.into(),
            point_index: 0,
            point: point.to_vec(),
            sigma,
            lhs: Vec::new(),
            rhs: Vec::new(),
            abs_residual: None,
            rel_residual: None,
            fd_step: None,
            order_estimate: None,
            tolerance: None,
            status: Status::skipped(reason),
            note: None,
        }
    }

    pub fn with_fd(mut self, step: f64, order: OrderEstimate) -> Self {
        self.fd_step = Some(step);
        self.order_estimate = Some(order);
        self
    }

    /// Pass iff the relative residual is within `tol` and, for
    /// finite-difference rows, the order estimate meets `min_order`.
    pub fn judge(mut self, tol: f64, min_order: f64) -> Self {
        if matches!(self.status, Status::Skipped(_)) {
            return self;
        }
        self.tolerance = Some(tol);
        let rel_ok = self.rel_residual.is_some_and(|r| r <= tol);
        let order_ok = self
            .order_estimate
            .as_ref()
            .is_none_or(|o| o.meets(min_order));
        self.status = if rel_ok && order_ok {
            Status::Pass
        } else {
            Status::Fail
        };
        self
    }

    pub fn info(mut self) -> Self {
        if !matches!(self.status, Status::Skipped(_)) {
            self.status = Status::Info;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Reals with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(";")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

pub const CSV_COLUMNS: &str =
    "identity,model,point_index,point,sigma,lhs,rhs,abs_residual,rel_residual,fd_step,order_estimate,tolerance,status";

/// Flat CSV export; `header` lines are written first as `# ` comments.
pub fn write_csv<W: Write>(
    mut out: W,
    header: &[String],
    reports: &[ResidualReport],
) -> std::io::Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{CSV_COLUMNS}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.identity,
            r.model,
            r.point_index,
            fmt_list(&r.point),
            fmt_opt(r.sigma),
            fmt_list(&r.lhs),
            fmt_list(&r.rhs),
            fmt_opt(r.abs_residual),
            fmt_opt(r.rel_residual),
            fmt_opt(r.fd_step),
            r.order_estimate
                .as_ref()
                .map(|o| o.to_string())
                .unwrap_or_default(),
            fmt_opt(r.tolerance),
            r.status
        )?;
    }
    Ok(())
}

/// Pass/fail/skip counts for one identity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub identity: String,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    pub info: usize,
}

pub fn summarize(reports: &[ResidualReport]) -> Vec<IdentitySummary> {
    let mut out: Vec<IdentitySummary> = Vec::new();
    for r in reports {
        let root = r
            .identity
            .split('.')
            .next()
            .unwrap_or(&r.identity)
            .to_string();
        let entry = match out.iter_mut().find(|s| s.identity == root) {
            Some(e) => e,
            None => {
                out.push(IdentitySummary {
                    identity: root,
                    ..Default::default()
                });
                out.last_mut().expect("just pushed")
            }
        };
        match r.status {
            Status::Pass => entry.pass += 1,
            Status::Fail => entry.fail += 1,
            Status::Info => entry.info += 1,
            Status::Skipped(_) => entry.skipped += 1,
        }
    }
    out
}

/// Parses the `reports` array out of a JSON report document (or a bare array).
pub fn reports_from_json(text: &str) -> Result<Vec<ResidualReport>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let arr = match value {
        serde_json::Value::Object(mut m) => m
            .remove("reports")
            .ok_or_else(|| Error::InvalidInput("missing `reports`".into()))?,
        other => other,
    };
    serde_json::from_value(arr).map_err(|e| Error::InvalidInput(e.to_string()))
}
