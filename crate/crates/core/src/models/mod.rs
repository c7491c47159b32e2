//! Steady soliton fixtures exposed as jet providers.

mod bryant;
mod cigar;
mod flat;

pub use bryant::{
    bryant_integrate, bryant_model, BryantModel, BryantProfile, BryantSample, BRYANT_SEED_RADIUS,
};
pub use cigar::{cigar_cross_line_model, cigar_model, Cigar, CigarCrossLine};
pub use flat::{
    euclidean_model, flat_spheres_fixture, perturbed_fixture, Euclidean, FlatSpheres, Perturbed,
};

use std::fmt::Debug;

use crate::chart::{ChartPoint, MetricJet, ScalarJet};
use crate::error::{Error, Result};

/// Where the potential function is critical.
#[derive(Debug, Clone, PartialEq)]
pub enum CriticalSet {
    /// A single point (the tip of a rotationally symmetric soliton).
    Point(ChartPoint),
    /// The line `{x = y = 0}` of a product with a line.
    Axis,
    /// `f` is constant.
    Everywhere,
}

/// A metric/potential pair evaluated in one chart.
///
/// Soliton fixtures satisfy `Ric + Hess f = μ g` with `μ = soliton_constant()`.
/// Non-soliton fixtures return `None` there; they exist to exercise the purely
/// extrinsic parts of the level-set machinery.
pub trait SolitonModel: Send + Sync + Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn soliton_constant(&self) -> Option<f64>;

    /// `C₀ = R + |∇f|²` for steady solitons.
    fn hamilton_constant(&self) -> Option<f64>;

    fn metric_jet(&self, p: &ChartPoint, order: usize) -> Result<MetricJet>;

    fn potential_jet(&self, p: &ChartPoint, order: usize) -> Result<ScalarJet>;

    fn critical_set(&self) -> CriticalSet;

    /// Highest jet order the model can supply.
    fn max_order(&self) -> usize {
        4
    }

    /// Geodesic distance from the distinguished point.
    fn radial_distance(&self, _p: &ChartPoint) -> Result<f64> {
        Err(Error::Unsupported {
            model: self.name().to_string(),
            what: "radial distance".into(),
        })
    }

    /// A chart point at geodesic distance `r` from the distinguished point
    /// along the model's fixed reference ray.
    fn ray_point(&self, _r: f64) -> Result<ChartPoint> {
        Err(Error::Unsupported {
            model: self.name().to_string(),
            what: "radial ray".into(),
        })
    }

    /// Largest radius the model can evaluate, when bounded.
    fn radial_limit(&self) -> Option<f64> {
        None
    }

    /// Accuracy of the jets when they come from numerical integration.
    fn jet_tolerance(&self) -> Option<f64> {
        None
    }

    fn is_steady_soliton(&self) -> bool {
        self.soliton_constant() == Some(0.0)
    }
}

/// Free-function form of [`SolitonModel::radial_distance`].
pub fn radial_distance(model: &dyn SolitonModel, p: &ChartPoint) -> Result<f64> {
    model.radial_distance(p)
}

pub(crate) fn check_point(model: &dyn SolitonModel, p: &ChartPoint, order: usize) -> Result<()> {
    if p.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: p.dim(),
        });
    }
    if !p.is_finite() {
        return Err(Error::OutsideDomain("non-finite coordinates".into()));
    }
    if order > model.max_order() {
        return Err(Error::InsufficientJetOrder {
            required: order,
            available: model.max_order(),
        });
    }
    Ok(())
}
