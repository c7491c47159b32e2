//! Truncated multivariate Taylor polynomials.
//!
//! A [`Taylor`] holds the Taylor coefficients `c_α = ∂^α F(p) / α!` of a smooth
//! function of up to three variables about a base point, truncated at a total
//! degree `order`. Arithmetic on these values propagates exact partial
//! derivatives (up to rounding), which is how models supply analytic metric
//! jets and how the curvature routines differentiate them.
//!
//! Monomials are stored in graded order, so a jet of order `k` is a prefix of
//! the same function's jet of any higher order.

use std::ops::{Add, Mul, Neg, Sub};

use once_cell::sync::Lazy;

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 6;
/// Largest supported number of variables.
pub const MAX_DIM: usize = 3;

struct Basis {
    exps: Vec<[u8; MAX_DIM]>,
    /// Number of monomials of total degree `<= k`, indexed by `k`.
    count: [usize; MAX_ORDER + 1],
    /// `(a, b, a+b)` index triples sorted by total degree of the product.
    products: Vec<(u16, u16, u16)>,
    /// Number of product triples whose degree is `<= k`.
    product_count: [usize; MAX_ORDER + 1],
    /// Shift table: `shift[i][m]` is the index of `exps[m] + e_i` or `u16::MAX`.
    shift: [Vec<u16>; MAX_DIM],
}

impl Basis {
    fn new(dim: usize) -> Self {
        let mut exps: Vec<[u8; MAX_DIM]> = Vec::new();
        let mut count = [0usize; MAX_ORDER + 1];
        for deg in 0..=MAX_ORDER {
            let mut level = Vec::new();
            enumerate(dim, deg, 0, [0; MAX_DIM], &mut level);
            // lexicographically descending within a degree: x0 first
            level.sort_by(|a, b| b.cmp(a));
            exps.extend(level);
            count[deg] = exps.len();
        }
        let index_of = |e: &[u8; MAX_DIM]| exps.iter().position(|x| x == e);
        let degree = |e: &[u8; MAX_DIM]| e.iter().map(|&v| v as usize).sum::<usize>();

        let mut products = Vec::new();
        for (a, ea) in exps.iter().enumerate() {
            for (b, eb) in exps.iter().enumerate() {
                let mut s = [0u8; MAX_DIM];
                for k in 0..MAX_DIM {
                    s[k] = ea[k] + eb[k];
                }
                if degree(&s) <= MAX_ORDER {
                    let t = index_of(&s).expect("monomial in basis");
                    products.push((a as u16, b as u16, t as u16));
                }
            }
        }
        products.sort_by_key(|&(_, _, t)| degree(&exps[t as usize]));
        let mut product_count = [0usize; MAX_ORDER + 1];
        for (deg, slot) in product_count.iter_mut().enumerate() {
            *slot = products
                .iter()
                .take_while(|&&(_, _, t)| degree(&exps[t as usize]) <= deg)
                .count();
        }

        let shift = std::array::from_fn(|i| {
            exps.iter()
                .map(|e| {
                    if i >= dim {
                        return u16::MAX;
                    }
                    let mut s = *e;
                    s[i] += 1;
                    if degree(&s) > MAX_ORDER {
                        u16::MAX
                    } else {
                        index_of(&s).map_or(u16::MAX, |x| x as u16)
                    }
                })
                .collect()
        });

        Self {
            exps,
            count,
            products,
            product_count,
            shift,
        }
    }
}

fn enumerate(
    dim: usize,
    remaining: usize,
    var: usize,
    cur: [u8; MAX_DIM],
    out: &mut Vec<[u8; MAX_DIM]>,
) {
    if var + 1 == dim {
        let mut e = cur;
        e[var] = remaining as u8;
        out.push(e);
        return;
    }
    for k in 0..=remaining {
        let mut e = cur;
        e[var] = k as u8;
        enumerate(dim, remaining - k, var + 1, e, out);
    }
}

static BASES: Lazy<[Basis; MAX_DIM]> = Lazy::new(|| [Basis::new(1), Basis::new(2), Basis::new(3)]);

fn basis(dim: usize) -> &'static Basis {
    &BASES[dim - 1]
}

/// Number of monomials in `dim` variables of total degree at most `order`.
pub fn monomial_count(dim: usize, order: usize) -> usize {
    basis(dim).count[order]
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A truncated Taylor polynomial in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    dim: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl Taylor {
    pub fn constant(dim: usize, order: usize, value: f64) -> Self {
        assert!((1..=MAX_DIM).contains(&dim) && order <= MAX_ORDER);
        let mut coeffs = vec![0.0; monomial_count(dim, order)];
        coeffs[0] = value;
        Self { dim, order, coeffs }
    }

    pub fn zero(dim: usize, order: usize) -> Self {
        Self::constant(dim, order, 0.0)
    }

    /// The coordinate function `x_var` expanded about `base`.
    pub fn variable(dim: usize, order: usize, var: usize, base: f64) -> Self {
        let mut t = Self::constant(dim, order, base);
        if order >= 1 {
            t.coeffs[1 + var] = 1.0;
        }
        t
    }

    /// Places a univariate coefficient sequence along axis `var`.
    pub fn from_univariate(dim: usize, order: usize, var: usize, coeffs: &[f64]) -> Self {
        let b = basis(dim);
        let mut t = Self::zero(dim, order);
        for (m, e) in b.exps[..b.count[order]].iter().enumerate() {
            let deg = e[var] as usize;
            let others: usize = e
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != var)
                .map(|(_, &v)| v as usize)
                .sum();
            if others == 0 && deg < coeffs.len() {
                t.coeffs[m] = coeffs[deg];
            }
        }
        t
    }

    /// Re-expresses this jet in a higher-dimensional variable set, mapping
    /// variable `k` to variable `map[k]`.
    pub fn embed(&self, dim: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.dim);
        let src = basis(self.dim);
        let dst = basis(dim);
        let mut out = Self::zero(dim, self.order);
        for (m, e) in src.exps[..self.coeffs.len()].iter().enumerate() {
            let mut target = [0u8; MAX_DIM];
            for (k, &to) in map.iter().enumerate() {
                target[to] += e[k];
            }
            let idx = dst.exps[..out.coeffs.len()]
                .iter()
                .position(|x| *x == target)
                .expect("embedded monomial");
            out.coeffs[idx] = self.coeffs[m];
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Truncates to a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            dim: self.dim,
            order,
            coeffs: self.coeffs[..monomial_count(self.dim, order)].to_vec(),
        }
    }

    /// The partial derivative `∂^α F` at the base point, with `α` given as a
    /// list of differentiation indices (order irrelevant).
    pub fn partial(&self, indices: &[usize]) -> f64 {
        if indices.len() > self.order {
            return f64::NAN;
        }
        let mut e = [0u8; MAX_DIM];
        for &i in indices {
            e[i] += 1;
        }
        let b = basis(self.dim);
        let idx = b.exps[..self.coeffs.len()]
            .iter()
            .position(|x| *x == e)
            .expect("partial index in range");
        let scale: f64 = e.iter().map(|&k| factorial(k as usize)).product();
        self.coeffs[idx] * scale
    }

    /// `∂F/∂x_var`, one order lower.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let b = basis(self.dim);
        let order = self.order - 1;
        let n = b.count[order];
        let mut coeffs = vec![0.0; n];
        for (m, c) in coeffs.iter_mut().enumerate() {
            let s = b.shift[var][m];
            if s != u16::MAX && (s as usize) < self.coeffs.len() {
                *c = (b.exps[m][var] as f64 + 1.0) * self.coeffs[s as usize];
            }
        }
        Self {
            dim: self.dim,
            order,
            coeffs,
        }
    }

    fn common(&self, other: &Self) -> usize {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        self.order.min(other.order)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add_const(&self, k: f64) -> Self {
        let mut t = self.clone();
        t.coeffs[0] += k;
        t
    }

    /// Reciprocal via the geometric series in the nilpotent part.
    pub fn recip(&self) -> Self {
        let a0 = self.coeffs[0];
        let mut t = self.scale(-1.0 / a0);
        t.coeffs[0] = 0.0;
        // 1/F = (1/a0) Σ t^n
        let series: Vec<f64> = vec![1.0; self.order + 1];
        nilpotent_series(&t, &series).scale(1.0 / a0)
    }

    /// Natural logarithm; requires a positive constant term.
    pub fn ln(&self) -> Self {
        let a0 = self.coeffs[0];
        let mut t = self.scale(1.0 / a0);
        t.coeffs[0] = 0.0;
        // ln(1+t) = Σ (-1)^{n+1} t^n / n
        let series: Vec<f64> = (0..=self.order)
            .map(|n| {
                if n == 0 {
                    0.0
                } else {
                    (if n % 2 == 1 { 1.0 } else { -1.0 }) / n as f64
                }
            })
            .collect();
        nilpotent_series(&t, &series).add_const(a0.ln())
    }

    /// Square root; requires a positive constant term.
    pub fn sqrt(&self) -> Self {
        let a0 = self.coeffs[0];
        let mut t = self.scale(1.0 / a0);
        t.coeffs[0] = 0.0;
        // (1+t)^{1/2} = Σ binom(1/2, n) t^n
        let mut series = vec![1.0; self.order + 1];
        for n in 1..=self.order {
            series[n] = series[n - 1] * (0.5 - (n as f64 - 1.0)) / n as f64;
        }
        nilpotent_series(&t, &series).scale(a0.sqrt())
    }

    /// Applies a univariate function given by its derivatives at the base
    /// value: `derivs[k] = g^{(k)}(F(p))`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let mut t = self.clone();
        t.coeffs[0] = 0.0;
        let series: Vec<f64> = (0..=self.order)
            .map(|k| derivs.get(k).copied().unwrap_or(0.0) / factorial(k))
            .collect();
        nilpotent_series(&t, &series)
    }

    pub fn sin(&self) -> Self {
        let a = self.coeffs[0];
        let (s, c) = a.sin_cos();
        let derivs: Vec<f64> = (0..=self.order).map(|k| [s, c, -s, -c][k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn cos(&self) -> Self {
        let a = self.coeffs[0];
        let (s, c) = a.sin_cos();
        let derivs: Vec<f64> = (0..=self.order).map(|k| [c, -s, -c, s][k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(self.dim, self.order, 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }
}

/// Evaluates `Σ series[n] t^n` for nilpotent `t` (zero constant term).
fn nilpotent_series(t: &Taylor, series: &[f64]) -> Taylor {
    // Horner: (((s_k) t + s_{k-1}) t + ...) + s_0
    let k = t.order;
    let mut acc = Taylor::constant(t.dim, t.order, series[k]);
    for n in (0..k).rev() {
        acc = (&acc * t).add_const(series[n]);
    }
    acc
}

impl<'a> Add<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        let order = self.common(rhs);
        let n = monomial_count(self.dim, order);
        Taylor {
            dim: self.dim,
            order,
            coeffs: (0..n).map(|m| self.coeffs[m] + rhs.coeffs[m]).collect(),
        }
    }
}

impl<'a> Sub<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        let order = self.common(rhs);
        let n = monomial_count(self.dim, order);
        Taylor {
            dim: self.dim,
            order,
            coeffs: (0..n).map(|m| self.coeffs[m] - rhs.coeffs[m]).collect(),
        }
    }
}

impl<'a> Mul<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        let order = self.common(rhs);
        let b = basis(self.dim);
        let mut coeffs = vec![0.0; b.count[order]];
        let na = self.coeffs.len();
        let nb = rhs.coeffs.len();
        for &(a, bb, t) in &b.products[..b.product_count[order]] {
            let (a, bb) = (a as usize, bb as usize);
            if a < na && bb < nb {
                coeffs[t as usize] += self.coeffs[a] * rhs.coeffs[bb];
            }
        }
        Taylor {
            dim: self.dim,
            order,
            coeffs,
        }
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<Taylor> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Taylor> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: &Taylor) -> Taylor {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Taylor> for &'a Taylor {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor {
                self.$m(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

/// Univariate Taylor coefficient arithmetic used for ODE series expansions.
pub mod series {
    /// Cauchy product truncated to the shorter length.
    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().min(b.len());
        (0..n)
            .map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum())
            .collect()
    }

    /// Series division `a / b` truncated to the shorter length.
    pub fn div(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().min(b.len());
        let mut q = vec![0.0; n];
        for k in 0..n {
            let s: f64 = (1..=k).map(|i| b[i] * q[k - i]).sum();
            q[k] = (a[k] - s) / b[0];
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monomial_counts_match_binomials() {
        assert_eq!(monomial_count(1, 4), 5);
        assert_eq!(monomial_count(2, 4), 15);
        assert_eq!(monomial_count(3, 4), 35);
        assert_eq!(monomial_count(3, 2), 10);
    }

    #[test]
    fn product_rule_partials() {
        // F = x^2 y + z at (1, 2, 3)
        let x = Taylor::variable(3, 4, 0, 1.0);
        let y = Taylor::variable(3, 4, 1, 2.0);
        let z = Taylor::variable(3, 4, 2, 3.0);
        let f = &(&(&x * &x) * &y) + &z;
        assert_relative_eq!(f.value(), 5.0);
        assert_relative_eq!(f.partial(&[0]), 4.0);
        assert_relative_eq!(f.partial(&[1]), 1.0);
        assert_relative_eq!(f.partial(&[2]), 1.0);
        assert_relative_eq!(f.partial(&[0, 0]), 4.0);
        assert_relative_eq!(f.partial(&[0, 1]), 2.0);
        assert_relative_eq!(f.partial(&[0, 0, 1]), 2.0);
        assert_relative_eq!(f.partial(&[1, 1]), 0.0);
    }

    #[test]
    fn reciprocal_and_log_derivatives() {
        // 1/(1+x^2) at x = 1: value 1/2, first 2x/(1+x^2)^2 -> -1/2
        let x = Taylor::variable(1, 4, 0, 1.0);
        let d = (&x * &x).add_const(1.0);
        let r = d.recip();
        assert_relative_eq!(r.value(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.partial(&[0]), -0.5, epsilon = 1e-15);
        // second derivative (6x^2-2)/(1+x^2)^3 = 4/8
        assert_relative_eq!(r.partial(&[0, 0]), 0.5, epsilon = 1e-14);
        let l = d.ln();
        assert_relative_eq!(l.value(), 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(l.partial(&[0]), 1.0, epsilon = 1e-15);
        // (2 - 2x^2)/(1+x^2)^2 = 0
        assert_relative_eq!(l.partial(&[0, 0]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sin_sqrt_and_embedding() {
        let t = Taylor::variable(1, 5, 0, 0.3);
        let s = t.sin();
        for k in 0..=5 {
            let idx = vec![0; k];
            let expected = [0.3f64.sin(), 0.3f64.cos(), -0.3f64.sin(), -0.3f64.cos()][k % 4];
            assert_relative_eq!(s.partial(&idx), expected, epsilon = 1e-13);
        }
        let q = Taylor::variable(2, 3, 1, 4.0).sqrt();
        assert_relative_eq!(q.partial(&[1]), 0.25, epsilon = 1e-15);
        assert_relative_eq!(q.partial(&[1, 1]), -1.0 / 32.0, epsilon = 1e-15);
        let e = q.embed(3, &[0, 2]);
        assert_relative_eq!(e.partial(&[2, 2]), -1.0 / 32.0, epsilon = 1e-15);
        assert_eq!(e.partial(&[1]), 0.0);
    }

    #[test]
    fn derivative_lowers_order() {
        let x = Taylor::variable(2, 3, 0, 2.0);
        let y = Taylor::variable(2, 3, 1, -1.0);
        let f = &(&x * &x) * &(&y * &y);
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 2);
        assert_relative_eq!(fx.value(), 2.0 * 2.0 * 1.0);
        assert_relative_eq!(fx.partial(&[1]), -(2.0 * 2.0 * 2.0));
        assert_relative_eq!(fx.partial(&[0, 1]), -4.0);
    }

    #[test]
    fn series_division_inverts_multiplication() {
        let a = [1.0, 2.0, -1.0, 0.5];
        let b = [2.0, 0.1, 0.3, -0.2];
        let q = series::div(&series::mul(&a, &b), &b);
        for (x, y) in q.iter().zip(a.iter()) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
    }
}
