//! The Bryant soliton as a numerically integrated warped product
//! `g = dr² + φ(r)² g_{S²}` with radial potential `f(r)`.
//!
//! Steady soliton equations on this ansatz:
//!
//! ```text
//! radial:     −2 φ''/φ + f''                           = 0
//! spherical:  −φ''/φ + (1 − φ'²)/φ² + f' φ'/φ          = 0
//! ```
//!
//! The state is `(φ, ε = 1 − φ', f, f')`. Carrying `ε` instead of `φ'` keeps
//! `1 − φ'²` accurate near the tip, where it is `O(r²)`.

use std::sync::Arc;

use super::{check_point, CriticalSet, SolitonModel};
use crate::chart::{ChartPoint, MetricJet, ScalarJet};
use crate::error::{Error, Result};
use crate::jet::{series, Taylor};
use crate::ode::{dopri_step, integrate_adaptive, AdaptiveOptions};

/// Radius at which the tip series hands over to the integrator.
pub const BRYANT_SEED_RADIUS: f64 = 1e-4;

/// Sectional curvature at the tip; `R(O) = 6 K₀ = 1`.
const TIP_CURVATURE: f64 = 1.0 / 6.0;

type State = [f64; 4];

/// `φ''` from the spherical equation.
fn phi_second(y: &State) -> f64 {
    let [phi, eps, _, w] = *y;
    eps * (2.0 - eps) / phi + w * (1.0 - eps)
}

fn rhs(_r: f64, y: &State) -> State {
    let [phi, eps, _, w] = *y;
    let psi_prime = phi_second(y);
    [1.0 - eps, -psi_prime, w, 2.0 * psi_prime / phi]
}

/// Scalar curvature of the warped product from the state.
pub(crate) fn scalar_from_state(y: &State) -> f64 {
    let [phi, eps, _, w] = *y;
    // R = −4φ''/φ + 2(1 − φ'²)/φ², with φ'' substituted from the ODE.
    -2.0 * eps * (2.0 - eps) / (phi * phi) - 4.0 * w * (1.0 - eps) / phi
}

/// Taylor seed at small `r`, from smoothness at the tip:
/// `φ = r + p₃r³ + p₅r⁵`, `f' = q₁r + q₃r³`.
fn tip_seed(r: f64) -> State {
    let p3 = -TIP_CURVATURE / 6.0;
    let q1 = 12.0 * p3;
    let p5 = 87.0 * p3 * p3 / 50.0;
    let q3 = 19.2 * p3 * p3;
    let r2 = r * r;
    [
        r * (1.0 + r2 * (p3 + p5 * r2)),
        -r2 * (3.0 * p3 + 5.0 * p5 * r2),
        r2 * (q1 / 2.0 + q3 * r2 / 4.0),
        r * (q1 + q3 * r2),
    ]
}

/// Taylor coefficients (in `r − r₀`) of the solution through `y`, up to `order`.
fn state_series(y: &State, order: usize) -> [Vec<f64>; 4] {
    let mut s: [Vec<f64>; 4] = std::array::from_fn(|i| vec![y[i]]);
    for m in 0..order {
        let len = m + 1;
        let phi = s[0][..len].to_vec();
        let eps = s[1][..len].to_vec();
        let w = s[3][..len].to_vec();
        let (phi, eps, w) = (&phi[..], &eps[..], &w[..]);
        let one_minus_eps: Vec<f64> = eps
            .iter()
            .enumerate()
            .map(|(k, e)| if k == 0 { 1.0 - e } else { -e })
            .collect();
        let two_minus_eps: Vec<f64> = eps
            .iter()
            .enumerate()
            .map(|(k, e)| if k == 0 { 2.0 - e } else { -e })
            .collect();
        let a = series::div(&series::mul(eps, &two_minus_eps), phi);
        let b = series::mul(w, &one_minus_eps);
        let psi_prime: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let w_prime = series::div(&psi_prime, phi);
        let next = (m + 1) as f64;
        s[0].push(one_minus_eps[m] / next);
        s[1].push(-psi_prime[m] / next);
        s[2].push(w[m] / next);
        s[3].push(2.0 * w_prime[m] / next);
    }
    s
}

/// One row of the profile export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BryantSample {
    pub r: f64,
    pub phi: f64,
    pub dphi: f64,
    pub f: f64,
    pub df: f64,
    pub scalar: f64,
    pub c0_check: f64,
}

/// Integrated Bryant profile on the adaptive grid.
#[derive(Debug, Clone)]
pub struct BryantProfile {
    radii: Vec<f64>,
    states: Vec<State>,
    tolerance: f64,
    hamilton_constant: f64,
}

/// Step tolerance as a fraction of the requested accuracy; global error on
/// the profile runs a few times the local one.
const LOCAL_TOLERANCE_FRACTION: f64 = 0.05;

/// Integrates the Bryant profile out to `r_max`; `tolerance` targets the
/// global error of the profile.
pub fn bryant_integrate(r_max: f64, tolerance: f64) -> Result<BryantProfile> {
    if !(r_max > BRYANT_SEED_RADIUS) || !r_max.is_finite() {
        return Err(Error::InvalidInput(format!(
            "r_max must exceed {BRYANT_SEED_RADIUS}, got {r_max}"
        )));
    }
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let y0 = tip_seed(BRYANT_SEED_RADIUS);
    let mut radii = vec![BRYANT_SEED_RADIUS];
    let mut states = vec![y0];
    let mut opts = AdaptiveOptions::new(tolerance * LOCAL_TOLERANCE_FRACTION);
    opts.initial_step = BRYANT_SEED_RADIUS * 0.1;
    integrate_adaptive(rhs, BRYANT_SEED_RADIUS, y0, r_max, opts, |r, y, _| {
        if !(y[0] > 0.0) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationFailure {
                last_valid_r: *radii.last().expect("seeded"),
                reason: "warp factor left the positive cone".into(),
            });
        }
        radii.push(r);
        states.push(*y);
        Ok(())
    })?;
    Ok(BryantProfile {
        radii,
        states,
        tolerance,
        hamilton_constant: scalar_from_state(&y0) + y0[3] * y0[3],
    })
}

impl BryantProfile {
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().expect("non-empty profile")
    }

    /// `R + f'²` at the seed radius; equals `R(O) = 1` up to seed truncation.
    pub fn hamilton_constant(&self) -> f64 {
        self.hamilton_constant
    }

    fn sample_of(r: f64, y: &State) -> BryantSample {
        let scalar = scalar_from_state(y);
        BryantSample {
            r,
            phi: y[0],
            dphi: 1.0 - y[1],
            f: y[2],
            df: y[3],
            scalar,
            c0_check: scalar + y[3] * y[3],
        }
    }

    /// Grid samples in increasing `r`.
    pub fn samples(&self) -> impl Iterator<Item = BryantSample> + '_ {
        self.radii
            .iter()
            .zip(&self.states)
            .map(|(&r, y)| Self::sample_of(r, y))
    }

    /// Largest `|R + f'² − C₀|` over the grid, with `C₀` normalized to 1.
    pub fn conservation_drift(&self) -> f64 {
        self.samples()
            .map(|s| (s.c0_check - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Reduced ODE residual `|−2φ''/φ + f''|` and spherical residual at grid
    /// point `k`, using the state's own derivative series.
    pub fn ode_residual(&self, k: usize) -> f64 {
        let s = state_series(&self.states[k], 2);
        let phi = s[0][0];
        let dphi = s[0][1];
        let d2phi = 2.0 * s[0][2];
        let df = s[2][1];
        let d2f = 2.0 * s[2][2];
        let radial = -2.0 * d2phi / phi + d2f;
        let spherical = -d2phi / phi + (1.0 - dphi * dphi) / (phi * phi) + df * dphi / phi;
        radial.abs().max(spherical.abs())
    }

    /// State at an arbitrary radius: one integrator step from the grid point
    /// below, never longer than the accepted step there.
    fn state_at(&self, r: f64) -> Result<State> {
        if !(r >= self.r_min() && r <= self.r_max()) {
            return Err(Error::OutsideDomain(format!(
                "r = {r} outside the integrated range [{}, {}]",
                self.r_min(),
                self.r_max()
            )));
        }
        let k = self.radii.partition_point(|&x| x <= r).saturating_sub(1);
        let base = self.radii[k];
        if r == base {
            return Ok(self.states[k]);
        }
        let mut f = rhs;
        Ok(dopri_step(&mut f, base, &self.states[k], r - base).0)
    }

    /// Writes the grid as CSV with 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,phi,dphi,f,df,R,C0_check")?;
        for s in self.samples() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.r, s.phi, s.dphi, s.f, s.df, s.scalar, s.c0_check
            )?;
        }
        Ok(())
    }

    /// Profile sample at an arbitrary radius.
    pub fn sample(&self, r: f64) -> Result<BryantSample> {
        Ok(Self::sample_of(r, &self.state_at(r)?))
    }

    /// Taylor coefficients of `(φ, f)` at `r`, derived from the ODE vector
    /// field rather than from the interpolant.
    pub fn radial_series(&self, r: f64, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let y = self.state_at(r)?;
        let s = state_series(&y, order);
        Ok((s[0].clone(), s[2].clone()))
    }
}

/// The Bryant soliton in the chart `(r, θ, ϕ)`.
#[derive(Debug, Clone)]
pub struct BryantModel {
    profile: Arc<BryantProfile>,
    /// Points with `r` below this are chart-singular.
    pub r_cutoff: f64,
    /// Points with `sin θ` below this are chart-singular.
    pub pole_cutoff: f64,
}

pub fn bryant_model(profile: BryantProfile) -> BryantModel {
    BryantModel {
        profile: Arc::new(profile),
        r_cutoff: 1e-3,
        pole_cutoff: 1e-6,
    }
}

impl BryantModel {
    pub fn profile(&self) -> &BryantProfile {
        &self.profile
    }

    fn check_chart(&self, p: &ChartPoint) -> Result<()> {
        let (r, theta) = (p.0[0], p.0[1]);
        if r < self.r_cutoff {
            return Err(Error::ChartSingular(format!(
                "r = {r} below cutoff {}",
                self.r_cutoff
            )));
        }
        if theta.sin() < self.pole_cutoff {
            return Err(Error::ChartSingular(format!(
                "theta = {theta} at a pole of the sphere chart"
            )));
        }
        Ok(())
    }
}

impl SolitonModel for BryantModel {
    fn name(&self) -> &str {
        "bryant"
    }

    fn dim(&self) -> usize {
        3
    }

    fn soliton_constant(&self) -> Option<f64> {
        Some(0.0)
    }

    fn hamilton_constant(&self) -> Option<f64> {
        Some(self.profile.hamilton_constant())
    }

    fn radial_limit(&self) -> Option<f64> {
        Some(self.profile.r_max())
    }

    fn jet_tolerance(&self) -> Option<f64> {
        Some(self.profile.tolerance())
    }

    fn metric_jet(&self, p: &ChartPoint, order: usize) -> Result<MetricJet> {
        check_point(self, p, order)?;
        self.check_chart(p)?;
        let (phi, _) = self.profile.radial_series(p.0[0], order)?;
        let warp = Taylor::from_univariate(3, order, 0, &phi);
        let sin = Taylor::variable(3, order, 1, p.0[1]).sin();
        let w2 = &warp * &warp;
        let zero = Taylor::zero(3, order);
        MetricJet::from_upper(
            p.clone(),
            vec![
                Taylor::constant(3, order, 1.0),
                zero.clone(),
                zero.clone(),
                w2.clone(),
                zero,
                &w2 * &(&sin * &sin),
            ],
        )
    }

    fn potential_jet(&self, p: &ChartPoint, order: usize) -> Result<ScalarJet> {
        check_point(self, p, order)?;
        self.check_chart(p)?;
        let (_, f) = self.profile.radial_series(p.0[0], order)?;
        ScalarJet::new(p.clone(), Taylor::from_univariate(3, order, 0, &f))
    }

    fn critical_set(&self) -> CriticalSet {
        CriticalSet::Point(ChartPoint::new(vec![0.0, 0.0, 0.0]))
    }

    fn radial_distance(&self, p: &ChartPoint) -> Result<f64> {
        check_point(self, p, 0)?;
        Ok(p.0[0])
    }

    fn ray_point(&self, r: f64) -> Result<ChartPoint> {
        Ok(ChartPoint::new(vec![r, std::f64::consts::FRAC_PI_2, 0.0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tip_seed_satisfies_ode_to_high_order() {
        for r in [1e-2, 5e-3] {
            let y = tip_seed(r);
            // compare the seed's own derivative with the vector field
            let h = 1e-6;
            let yp = tip_seed(r + h);
            let ym = tip_seed(r - h);
            let f = rhs(r, &y);
            for i in 0..4 {
                let fd = (yp[i] - ym[i]) / (2.0 * h);
                assert!((fd - f[i]).abs() < 1e-9, "component {i}: {fd} vs {}", f[i]);
            }
        }
    }

    #[test]
    fn tip_normalization() {
        let y = tip_seed(BRYANT_SEED_RADIUS);
        assert_relative_eq!(scalar_from_state(&y), 1.0, epsilon = 1e-8);
        assert_relative_eq!(scalar_from_state(&y) + y[3] * y[3], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn series_matches_vector_field() {
        let p = bryant_integrate(20.0, 1e-11).unwrap();
        let y = p.state_at(7.3).unwrap();
        let s = state_series(&y, 3);
        let f = rhs(7.3, &y);
        for i in 0..4 {
            assert_relative_eq!(s[i][1], f[i], epsilon = 1e-14);
        }
        assert!(p.ode_residual(p.len() / 2) < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bryant_integrate(-1.0, 1e-8).is_err());
        assert!(bryant_integrate(10.0, 0.0).is_err());
    }

    #[test]
    fn soliton_equation_from_chart_curvature() {
        use crate::chart::{hessian, ricci};
        let m = bryant_model(bryant_integrate(30.0, 1e-12).unwrap());
        for r in [0.05, 1.0, 4.7, 25.0] {
            let p = ChartPoint::new(vec![r, 1.1, 0.3]);
            let g = m.metric_jet(&p, 2).unwrap();
            let f = m.potential_jet(&p, 2).unwrap();
            let ric = ricci(&g).unwrap();
            let hess = hessian(&g, &f).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let v = ric.get(&[i, j]) + hess.get(&[i, j]);
                    assert!(
                        v.abs() < 1e-10 * g.g(i, j).abs().max(1.0),
                        "r={r} ({i},{j}): {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn conservation_and_asymptotics() {
        let p = bryant_integrate(1e3, 1e-12).unwrap();
        assert!(
            p.conservation_drift() < 1e-8,
            "drift {}",
            p.conservation_drift()
        );
        let last = p.samples().last().unwrap();
        assert!((last.df + 1.0).abs() < 1e-2);
        // R ~ 1/r far out
        assert!(
            (last.scalar * last.r - 1.0).abs() < 0.05,
            "{}",
            last.scalar * last.r
        );
    }

    #[test]
    fn chart_singularities() {
        let m = bryant_model(bryant_integrate(5.0, 1e-10).unwrap());
        assert!(matches!(
            m.metric_jet(&ChartPoint::new(vec![1e-5, 1.0, 0.0]), 2),
            Err(Error::ChartSingular(_))
        ));
        assert!(matches!(
            m.metric_jet(&ChartPoint::new(vec![1.0, 0.0, 0.0]), 2),
            Err(Error::ChartSingular(_))
        ));
        assert!(matches!(
            m.metric_jet(&ChartPoint::new(vec![6.0, 1.0, 0.0]), 2),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn csv_roundtrip_columns() {
        let p = bryant_integrate(2.0, 1e-9).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,phi,dphi,f,df,R,C0_check");
        assert_eq!(lines.count(), p.len());
    }
}
