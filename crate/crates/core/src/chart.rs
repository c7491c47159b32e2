//! Intrinsic curvature of a Riemannian metric from pointwise jets in one chart.
//!
//! Conventions:
//! - `Γ^k_ij` stored as `[k][i][j]`.
//! - `R^l_ijk` stored as `[l][i][j][k]`, with
//!   `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`,
//!   i.e. `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l`.
//! - Fully lowered `R_ijkl = g_km R^m_ijl`, so `R_1212` is the sectional
//!   curvature of a unit orthonormal pair and the round sphere is positive.
//! - `Ric_jl = R^i_ijl = g^{ik} R_ijkl`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Taylor;

/// Smallest admissible metric eigenvalue.
pub const DEGENERACY_CUTOFF: f64 = 1e-12;

/// A point in a single coordinate chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint(pub Vec<f64>);

impl ChartPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// `self + t * v` in chart coordinates.
    pub fn offset(&self, v: &[f64], t: f64) -> Self {
        Self(self.0.iter().zip(v).map(|(x, d)| x + t * d).collect())
    }
}

/// Metric components with analytic partial derivatives up to `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    point: ChartPoint,
    order: usize,
    /// Full `n × n` array of component jets (symmetric).
    comps: Vec<Taylor>,
}

impl MetricJet {
    /// Builds a jet from the upper triangle (`i <= j`, row-major) of the metric.
    pub fn from_upper(point: ChartPoint, upper: Vec<Taylor>) -> Result<Self> {
        let n = point.dim();
        if upper.len() != n * (n + 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: n * (n + 1) / 2,
                got: upper.len(),
            });
        }
        let order = upper.iter().map(Taylor::order).min().unwrap_or(0);
        let mut comps = vec![Taylor::zero(n, order); n * n];
        let mut it = upper.into_iter();
        for i in 0..n {
            for j in i..n {
                let t = it
                    .next()
                    .expect("upper triangle length checked")
                    .truncate(order);
                if t.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: t.dim(),
                    });
                }
                comps[j * n + i] = t.clone();
                comps[i * n + j] = t;
            }
        }
        let jet = Self {
            point,
            order,
            comps,
        };
        let min_eig = jet.min_eigenvalue();
        if !(min_eig > DEGENERACY_CUTOFF) {
            return Err(Error::DegenerateMetric {
                min_eigenvalue: min_eig,
            });
        }
        Ok(jet)
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn component(&self, i: usize, j: usize) -> &Taylor {
        &self.comps[i * self.dim() + j]
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.component(i, j).value()
    }

    /// `∂_k g_ij`.
    pub fn dg(&self, k: usize, i: usize, j: usize) -> f64 {
        self.component(i, j).partial(&[k])
    }

    /// `∂_k ∂_l g_ij`.
    pub fn d2g(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        self.component(i, j).partial(&[k, l])
    }

    pub fn d3g(&self, k: usize, l: usize, m: usize, i: usize, j: usize) -> f64 {
        self.component(i, j).partial(&[k, l, m])
    }

    pub fn d4g(&self, k: usize, l: usize, m: usize, p: usize, i: usize, j: usize) -> f64 {
        self.component(i, j).partial(&[k, l, m, p])
    }

    /// Metric value as a dense matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.g(i, j))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.matrix();
        if m.iter().any(|v| !v.is_finite()) {
            return f64::NAN;
        }
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Lowers the jet to `order`.
    pub fn truncate(&self, order: usize) -> Self {
        Self {
            point: self.point.clone(),
            order: order.min(self.order),
            comps: self.comps.iter().map(|c| c.truncate(order)).collect(),
        }
    }
}

/// A scalar function with analytic partial derivatives up to `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    point: ChartPoint,
    jet: Taylor,
}

impl ScalarJet {
    pub fn new(point: ChartPoint, jet: Taylor) -> Result<Self> {
        if jet.dim() != point.dim() {
            return Err(Error::DimensionMismatch {
                expected: point.dim(),
                got: jet.dim(),
            });
        }
        Ok(Self { point, jet })
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn order(&self) -> usize {
        self.jet.order()
    }

    pub fn value(&self) -> f64 {
        self.jet.value()
    }

    pub fn partial(&self, indices: &[usize]) -> f64 {
        self.jet.partial(indices)
    }

    pub fn taylor(&self) -> &Taylor {
        &self.jet
    }
}

/// A tensor evaluated at a chart point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorValue {
    pub contravariant: usize,
    pub covariant: usize,
    pub dim: usize,
    pub components: Vec<f64>,
    pub point: ChartPoint,
}

impl TensorValue {
    pub(crate) fn new(
        contravariant: usize,
        covariant: usize,
        dim: usize,
        components: Vec<f64>,
        point: ChartPoint,
    ) -> Self {
        debug_assert_eq!(
            components.len(),
            dim.pow((contravariant + covariant) as u32)
        );
        Self {
            contravariant,
            covariant,
            dim,
            components,
            point,
        }
    }

    pub fn rank(&self) -> usize {
        self.contravariant + self.covariant
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.rank());
        self.components[idx.iter().fold(0, |acc, &i| acc * self.dim + i)]
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn require_order(have: usize, need: usize) -> Result<()> {
    if have < need {
        Err(Error::InsufficientJetOrder {
            required: need,
            available: have,
        })
    } else {
        Ok(())
    }
}

/// Inverse of a symmetric matrix of jets (n ≤ 3) via the adjugate.
fn invert(n: usize, g: &[Taylor]) -> Vec<Taylor> {
    let at = |i: usize, j: usize| &g[i * n + j];
    match n {
        1 => vec![at(0, 0).recip()],
        2 => {
            let det = at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
            let inv = det.recip();
            vec![
                at(1, 1) * &inv,
                -(at(0, 1) * &inv),
                -(at(1, 0) * &inv),
                at(0, 0) * &inv,
            ]
        }
        3 => {
            let cof = |i: usize, j: usize| {
                let (r0, r1) = match i {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let (c0, c1) = match j {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let m = at(r0, c0) * at(r1, c1) - at(r0, c1) * at(r1, c0);
                if (i + j).is_multiple_of(2) {
                    m
                } else {
                    -m
                }
            };
            let c: Vec<Taylor> = (0..9).map(|k| cof(k / 3, k % 3)).collect();
            let det = &(&(at(0, 0) * &c[0]) + &(at(0, 1) * &c[1])) + &(at(0, 2) * &c[2]);
            let inv = det.recip();
            // inverse = adj / det, adj = cofactor transpose
            (0..9).map(|k| &c[(k % 3) * 3 + k / 3] * &inv).collect()
        }
        _ => panic!("unsupported dimension {n}"),
    }
}

/// All curvature jets derived from one metric jet.
///
/// Each derived tensor is itself a jet, of order `metric order − (number of
/// derivatives taken)`, so higher covariant derivatives come for free.
#[derive(Debug, Clone)]
pub struct Curvature {
    dim: usize,
    order: usize,
    point: ChartPoint,
    g: Vec<Taylor>,
    ginv: Vec<Taylor>,
    gamma: Vec<Taylor>,
    riemann_up: Option<Vec<Taylor>>,
    riemann: Option<Vec<Taylor>>,
    ricci: Option<Vec<Taylor>>,
    scalar: Option<Taylor>,
}

impl Curvature {
    pub fn new(jet: &MetricJet) -> Result<Self> {
        require_order(jet.order(), 1)?;
        let n = jet.dim();
        let g = jet.comps.clone();
        let ginv = invert(n, &g);
        let dg: Vec<Taylor> = (0..n * n * n)
            .map(|x| g[x % (n * n)].derivative(x / (n * n)))
            .collect();
        // dg[l][i][j] = ∂_l g_ij
        let d = |l: usize, i: usize, j: usize| &dg[l * n * n + i * n + j];
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = Taylor::zero(n, jet.order() - 1);
                    for l in 0..n {
                        let bracket = &(d(i, j, l) + d(j, i, l)) - d(l, i, j);
                        acc = &acc + &(&ginv[k * n + l] * &bracket);
                    }
                    gamma.push(acc.scale(0.5));
                }
            }
        }
        let mut out = Self {
            dim: n,
            order: jet.order(),
            point: jet.point.clone(),
            g,
            ginv,
            gamma,
            riemann_up: None,
            riemann: None,
            ricci: None,
            scalar: None,
        };
        if jet.order() >= 2 {
            out.build_riemann();
        }
        Ok(out)
    }

    fn build_riemann(&mut self) {
        let n = self.dim;
        let ord = self.order - 2;
        let gm = |k: usize, i: usize, j: usize| &self.gamma[k * n * n + i * n + j];
        let mut up = Vec::with_capacity(n.pow(4));
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut acc = &gm(l, j, k).derivative(i) - &gm(l, i, k).derivative(j);
                        for m in 0..n {
                            acc = &acc + &(gm(l, i, m) * gm(m, j, k));
                            acc = &acc - &(gm(l, j, m) * gm(m, i, k));
                        }
                        up.push(acc.truncate(ord));
                    }
                }
            }
        }
        let r_up = |l: usize, i: usize, j: usize, k: usize| &up[((l * n + i) * n + j) * n + k];
        let mut low = Vec::with_capacity(n.pow(4));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = Taylor::zero(n, ord);
                        for m in 0..n {
                            acc = &acc + &(&self.g[k * n + m] * r_up(m, i, j, l));
                        }
                        low.push(acc);
                    }
                }
            }
        }
        let mut ric = Vec::with_capacity(n * n);
        for j in 0..n {
            for l in 0..n {
                let mut acc = Taylor::zero(n, ord);
                for i in 0..n {
                    acc = &acc + r_up(i, i, j, l);
                }
                ric.push(acc);
            }
        }
        let mut scalar = Taylor::zero(n, ord);
        for j in 0..n {
            for l in 0..n {
                scalar = &scalar + &(&self.ginv[j * n + l] * &ric[j * n + l]);
            }
        }
        self.riemann_up = Some(up);
        self.riemann = Some(low);
        self.ricci = Some(ric);
        self.scalar = Some(scalar);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn metric(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.dim + j].value()
    }

    pub fn inverse_metric(&self, i: usize, j: usize) -> f64 {
        self.ginv[i * self.dim + j].value()
    }

    pub fn inverse_metric_jet(&self, i: usize, j: usize) -> &Taylor {
        &self.ginv[i * self.dim + j]
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.dim + i) * self.dim + j].value()
    }

    pub fn gamma_jet(&self, k: usize, i: usize, j: usize) -> &Taylor {
        &self.gamma[(k * self.dim + i) * self.dim + j]
    }

    fn need_riemann(&self) -> Result<()> {
        require_order(self.order, 2)
    }

    /// Lowered `R_ijkl` at the point.
    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.riemann.as_ref().expect("order >= 2")[((i * n + j) * n + k) * n + l].value()
    }

    pub fn riemann_jet(&self, i: usize, j: usize, k: usize, l: usize) -> Result<&Taylor> {
        self.need_riemann()?;
        let n = self.dim;
        Ok(&self.riemann.as_ref().expect("order >= 2")[((i * n + j) * n + k) * n + l])
    }

    pub fn ricci(&self, i: usize, j: usize) -> f64 {
        self.ricci.as_ref().expect("order >= 2")[i * self.dim + j].value()
    }

    pub fn ricci_jet(&self, i: usize, j: usize) -> Result<&Taylor> {
        self.need_riemann()?;
        Ok(&self.ricci.as_ref().expect("order >= 2")[i * self.dim + j])
    }

    pub fn scalar(&self) -> f64 {
        self.scalar.as_ref().expect("order >= 2").value()
    }

    pub fn scalar_jet(&self) -> Result<&Taylor> {
        self.need_riemann()?;
        Ok(self.scalar.as_ref().expect("order >= 2"))
    }

    /// Raises an index: `g^{ij} w_j`.
    pub fn raise(&self, w: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.inverse_metric(i, j) * w[j]).sum())
            .collect()
    }

    /// Lowers an index: `g_ij v^j`.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.metric(i, j) * v[j]).sum())
            .collect()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.metric(i, j) * u[i] * v[j];
            }
        }
        s
    }

    /// `∇_m R_ijkl` at the point, stored `[m][i][j][k][l]`.
    pub fn riemann_covariant_derivative(&self) -> Result<Vec<f64>> {
        require_order(self.order, 3)?;
        let n = self.dim;
        let rm = self.riemann.as_ref().expect("order >= 3");
        let r = |i: usize, j: usize, k: usize, l: usize| rm[((i * n + j) * n + k) * n + l].value();
        let mut out = Vec::with_capacity(n.pow(5));
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let mut v = rm[((i * n + j) * n + k) * n + l].partial(&[m]);
                            for p in 0..n {
                                v -= self.gamma(p, m, i) * r(p, j, k, l);
                                v -= self.gamma(p, m, j) * r(i, p, k, l);
                                v -= self.gamma(p, m, k) * r(i, j, p, l);
                                v -= self.gamma(p, m, l) * r(i, j, k, p);
                            }
                            out.push(v);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `∇_γ Ric_αβ`, stored `[γ][α][β]`.
    pub fn ricci_covariant_derivative(&self) -> Result<Vec<f64>> {
        require_order(self.order, 3)?;
        let n = self.dim;
        let ric = self.ricci.as_ref().expect("order >= 3");
        let mut out = Vec::with_capacity(n * n * n);
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut v = ric[a * n + b].partial(&[c]);
                    for p in 0..n {
                        v -= self.gamma(p, c, a) * ric[p * n + b].value();
                        v -= self.gamma(p, c, b) * ric[a * n + p].value();
                    }
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    /// `∂_a R` (covector).
    pub fn scalar_differential(&self) -> Result<Vec<f64>> {
        require_order(self.order, 3)?;
        let s = self.scalar_jet()?;
        Ok((0..self.dim).map(|a| s.partial(&[a])).collect())
    }

    /// `Δ R = g^{ij}(∂_i∂_j R − Γ^k_ij ∂_k R)`.
    pub fn scalar_laplacian(&self) -> Result<f64> {
        require_order(self.order, 4)?;
        let s = self.scalar_jet()?;
        Ok(self.laplacian_of(s))
    }

    fn laplacian_of(&self, s: &Taylor) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut h = s.partial(&[i, j]);
                for k in 0..n {
                    h -= self.gamma(k, i, j) * s.partial(&[k]);
                }
                acc += self.inverse_metric(i, j) * h;
            }
        }
        acc
    }

    /// `|Ric|² = g^{ac} g^{bd} R_ab R_cd`.
    pub fn ricci_norm_sq(&self) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        s += self.inverse_metric(a, c)
                            * self.inverse_metric(b, d)
                            * self.ricci(a, b)
                            * self.ricci(c, d);
                    }
                }
            }
        }
        s
    }

    /// Covariant Hessian `∂_i∂_j s − Γ^k_ij ∂_k s` of a scalar jet.
    pub fn hessian_of(&self, s: &ScalarJet) -> Result<Vec<f64>> {
        require_order(s.order(), 2)?;
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut h = s.partial(&[i, j]);
                for k in 0..n {
                    h -= self.gamma(k, i, j) * s.partial(&[k]);
                }
                out.push(h);
            }
        }
        Ok(out)
    }
}

fn check_dim(jet: &MetricJet, s: &ScalarJet) -> Result<()> {
    if jet.dim() != s.point().dim() {
        return Err(Error::DimensionMismatch {
            expected: jet.dim(),
            got: s.point().dim(),
        });
    }
    Ok(())
}

/// Christoffel symbols `Γ^k_ij`.
pub fn christoffel(jet: &MetricJet) -> Result<TensorValue> {
    let c = Curvature::new(jet)?;
    let n = jet.dim();
    let comps = (0..n * n * n).map(|x| c.gamma[x].value()).collect();
    Ok(TensorValue::new(1, 2, n, comps, jet.point.clone()))
}

/// Riemann tensor: `(R^l_ijk, R_ijkl)`.
pub fn riemann(jet: &MetricJet) -> Result<(TensorValue, TensorValue)> {
    require_order(jet.order(), 2)?;
    let c = Curvature::new(jet)?;
    let n = jet.dim();
    let up = c
        .riemann_up
        .as_ref()
        .expect("order >= 2")
        .iter()
        .map(Taylor::value)
        .collect();
    let low = c
        .riemann
        .as_ref()
        .expect("order >= 2")
        .iter()
        .map(Taylor::value)
        .collect();
    Ok((
        TensorValue::new(1, 3, n, up, jet.point.clone()),
        TensorValue::new(0, 4, n, low, jet.point.clone()),
    ))
}

pub fn ricci(jet: &MetricJet) -> Result<TensorValue> {
    require_order(jet.order(), 2)?;
    let c = Curvature::new(jet)?;
    let n = jet.dim();
    let comps = c
        .ricci
        .as_ref()
        .expect("order >= 2")
        .iter()
        .map(Taylor::value)
        .collect();
    Ok(TensorValue::new(0, 2, n, comps, jet.point.clone()))
}

pub fn scalar_curvature(jet: &MetricJet) -> Result<f64> {
    require_order(jet.order(), 2)?;
    Ok(Curvature::new(jet)?.scalar())
}

/// `∇_m R_ijkl`, stored `[m][i][j][k][l]`.
pub fn riemann_covariant_derivative(jet: &MetricJet) -> Result<TensorValue> {
    require_order(jet.order(), 3)?;
    let c = Curvature::new(jet)?;
    let comps = c.riemann_covariant_derivative()?;
    Ok(TensorValue::new(0, 5, jet.dim(), comps, jet.point.clone()))
}

pub fn hessian(jet: &MetricJet, s: &ScalarJet) -> Result<TensorValue> {
    check_dim(jet, s)?;
    let c = Curvature::new(jet)?;
    Ok(TensorValue::new(
        0,
        2,
        jet.dim(),
        c.hessian_of(s)?,
        jet.point.clone(),
    ))
}

pub fn laplacian(jet: &MetricJet, s: &ScalarJet) -> Result<f64> {
    let h = hessian(jet, s)?;
    let c = Curvature::new(jet)?;
    let n = jet.dim();
    Ok((0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| c.inverse_metric(i, j) * h.get(&[i, j]))
        .sum())
}

/// Contravariant gradient `g^{ij} ∂_j s`.
pub fn gradient(jet: &MetricJet, s: &ScalarJet) -> Result<TensorValue> {
    check_dim(jet, s)?;
    require_order(s.order(), 1)?;
    let c = Curvature::new(jet)?;
    let ds: Vec<f64> = (0..jet.dim()).map(|a| s.partial(&[a])).collect();
    Ok(TensorValue::new(
        1,
        0,
        jet.dim(),
        c.raise(&ds),
        jet.point.clone(),
    ))
}

pub fn gradient_norm_sq(jet: &MetricJet, s: &ScalarJet) -> Result<f64> {
    let grad = gradient(jet, s)?;
    let ds: Vec<f64> = (0..jet.dim()).map(|a| s.partial(&[a])).collect();
    Ok(grad.components.iter().zip(&ds).map(|(a, b)| a * b).sum())
}
