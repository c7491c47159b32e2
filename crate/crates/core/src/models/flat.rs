use super::{check_point, CriticalSet, SolitonModel};
use crate::chart::{ChartPoint, MetricJet, ScalarJet};
use crate::error::{Error, Result};
use crate::jet::Taylor;

fn flat_metric(p: &ChartPoint, order: usize) -> Result<MetricJet> {
    let n = p.dim();
    let mut upper = Vec::new();
    for i in 0..n {
        for j in i..n {
            upper.push(Taylor::constant(n, order, if i == j { 1.0 } else { 0.0 }));
        }
    }
    MetricJet::from_upper(p.clone(), upper)
}

/// Flat space with `f ≡ 0`, the trivial steady soliton.
#[derive(Debug, Clone)]
pub struct Euclidean {
    dim: usize,
    name: String,
}

pub fn euclidean_model(dim: usize) -> Result<Euclidean> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!(
            "euclidean dimension must be 2 or 3, got {dim}"
        )));
    }
    Ok(Euclidean {
        dim,
        name: "euclidean".into(),
    })
}

impl SolitonModel for Euclidean {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn soliton_constant(&self) -> Option<f64> {
        Some(0.0)
    }

    fn hamilton_constant(&self) -> Option<f64> {
        Some(0.0)
    }

    fn metric_jet(&self, p: &ChartPoint, order: usize) -> Result<MetricJet> {
        check_point(self, p, order)?;
        flat_metric(p, order)
    }

    fn potential_jet(&self, p: &ChartPoint, order: usize) -> Result<ScalarJet> {
        check_point(self, p, order)?;
        ScalarJet::new(p.clone(), Taylor::zero(self.dim, order))
    }

    fn critical_set(&self) -> CriticalSet {
        CriticalSet::Everywhere
    }
}

/// Flat `ℝ³` with `f = −|x|²/2`: level sets are round spheres.
///
/// Not a soliton; used to calibrate the extrinsic surface operators.
#[derive(Debug, Clone, Default)]
pub struct FlatSpheres;

pub fn flat_spheres_fixture() -> FlatSpheres {
    FlatSpheres
}

impl SolitonModel for FlatSpheres {
    fn name(&self) -> &str {
        "flat-spheres"
    }

    fn dim(&self) -> usize {
        3
    }

    fn soliton_constant(&self) -> Option<f64> {
        None
    }

    fn hamilton_constant(&self) -> Option<f64> {
        None
    }

    fn metric_jet(&self, p: &ChartPoint, order: usize) -> Result<MetricJet> {
        check_point(self, p, order)?;
        flat_metric(p, order)
    }

    fn potential_jet(&self, p: &ChartPoint, order: usize) -> Result<ScalarJet> {
        check_point(self, p, order)?;
        let mut f = Taylor::zero(3, order);
        for k in 0..3 {
            let x = Taylor::variable(3, order, k, p.0[k]);
            f = &f - &(&x * &x).scale(0.5);
        }
        ScalarJet::new(p.clone(), f)
    }

    fn critical_set(&self) -> CriticalSet {
        CriticalSet::Point(ChartPoint::new(vec![0.0; 3]))
    }
}

/// A generic curved, non-symmetric metric/potential pair with no soliton
/// structure: `g = e^{2u} δ`, `u = 0.1 x + 0.05 y² − 0.08 xz`,
/// `f = −(x² + 2y² + 3z²)/2 + 0.1 xy`.
///
/// Level sets are non-umbilical and the ambient curvature is generic, so the
/// general hypersurface evolution identities are exercised with every term
/// active.
#[derive(Debug, Clone, Default)]
pub struct Perturbed;

pub fn perturbed_fixture() -> Perturbed {
    Perturbed
}

impl SolitonModel for Perturbed {
    fn name(&self) -> &str {
        "perturbed"
    }

    fn dim(&self) -> usize {
        3
    }

    fn soliton_constant(&self) -> Option<f64> {
        None
    }

    fn hamilton_constant(&self) -> Option<f64> {
        None
    }

    fn metric_jet(&self, p: &ChartPoint, order: usize) -> Result<MetricJet> {
        check_point(self, p, order)?;
        let x = Taylor::variable(3, order, 0, p.0[0]);
        let y = Taylor::variable(3, order, 1, p.0[1]);
        let z = Taylor::variable(3, order, 2, p.0[2]);
        let u = &(&x.scale(0.1) + &(&y * &y).scale(0.05)) - &(&x * &z).scale(0.08);
        // e^{2u}
        let w = u.scale(2.0);
        let e0 = w.value().exp();
        let c = w.compose(&vec![e0; order + 1]);
        let zero = Taylor::zero(3, order);
        MetricJet::from_upper(
            p.clone(),
            vec![c.clone(), zero.clone(), zero.clone(), c.clone(), zero, c],
        )
    }

    fn potential_jet(&self, p: &ChartPoint, order: usize) -> Result<ScalarJet> {
        check_point(self, p, order)?;
        let x = Taylor::variable(3, order, 0, p.0[0]);
        let y = Taylor::variable(3, order, 1, p.0[1]);
        let z = Taylor::variable(3, order, 2, p.0[2]);
        let q = &(&(&x * &x) + &(&y * &y).scale(2.0)) + &(&z * &z).scale(3.0);
        let f = &q.scale(-0.5) + &(&x * &y).scale(0.1);
        ScalarJet::new(p.clone(), f)
    }

    fn critical_set(&self) -> CriticalSet {
        CriticalSet::Point(ChartPoint::new(vec![0.0; 3]))
    }
}
