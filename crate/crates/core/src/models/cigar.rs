use super::{check_point, CriticalSet, SolitonModel};
use crate::chart::{ChartPoint, MetricJet, ScalarJet};
use crate::error::Result;
use crate::jet::Taylor;

/// Hamilton's cigar: `g = (dx² + dy²)/(1 + x² + y²)`, `f = −log(1 + x² + y²)`.
#[derive(Debug, Clone, Default)]
pub struct Cigar;

/// `Cigar × ℝ` in the global chart `(x, y, z)`.
#[derive(Debug, Clone, Default)]
pub struct CigarCrossLine;

pub fn cigar_model() -> Cigar {
    Cigar
}

pub fn cigar_cross_line_model() -> CigarCrossLine {
    CigarCrossLine
}

/// `(conformal factor 1/(1+ρ²), potential)` as 2-variable jets.
fn cigar_jets(x: f64, y: f64, order: usize) -> (Taylor, Taylor) {
    let tx = Taylor::variable(2, order, 0, x);
    let ty = Taylor::variable(2, order, 1, y);
    let d = (&(&tx * &tx) + &(&ty * &ty)).add_const(1.0);
    (d.recip(), -d.ln())
}

impl SolitonModel for Cigar {
    fn name(&self) -> &str {
        "cigar"
    }

    fn dim(&self) -> usize {
        2
    }

    fn soliton_constant(&self) -> Option<f64> {
        Some(0.0)
    }

    fn hamilton_constant(&self) -> Option<f64> {
        Some(4.0)
    }

    fn metric_jet(&self, p: &ChartPoint, order: usize) -> Result<MetricJet> {
        check_point(self, p, order)?;
        let (c, _) = cigar_jets(p.0[0], p.0[1], order);
        MetricJet::from_upper(p.clone(), vec![c.clone(), Taylor::zero(2, order), c])
    }

    fn potential_jet(&self, p: &ChartPoint, order: usize) -> Result<ScalarJet> {
        check_point(self, p, order)?;
        let (_, f) = cigar_jets(p.0[0], p.0[1], order);
        ScalarJet::new(p.clone(), f)
    }

    fn critical_set(&self) -> CriticalSet {
        CriticalSet::Point(ChartPoint::new(vec![0.0, 0.0]))
    }

    fn radial_distance(&self, p: &ChartPoint) -> Result<f64> {
        check_point(self, p, 0)?;
        Ok(p.0[0].hypot(p.0[1]).asinh())
    }

    fn ray_point(&self, r: f64) -> Result<ChartPoint> {
        Ok(ChartPoint::new(vec![r.sinh(), 0.0]))
    }
}

impl SolitonModel for CigarCrossLine {
    fn name(&self) -> &str {
        "cigarxr"
    }

    fn dim(&self) -> usize {
        3
    }

    fn soliton_constant(&self) -> Option<f64> {
        Some(0.0)
    }

    fn hamilton_constant(&self) -> Option<f64> {
        Some(4.0)
    }

    fn metric_jet(&self, p: &ChartPoint, order: usize) -> Result<MetricJet> {
        check_point(self, p, order)?;
        let (c, _) = cigar_jets(p.0[0], p.0[1], order);
        let c = c.embed(3, &[0, 1]);
        let z = Taylor::zero(3, order);
        MetricJet::from_upper(
            p.clone(),
            vec![
                c.clone(),
                z.clone(),
                z.clone(),
                c,
                z,
                Taylor::constant(3, order, 1.0),
            ],
        )
    }

    fn potential_jet(&self, p: &ChartPoint, order: usize) -> Result<ScalarJet> {
        check_point(self, p, order)?;
        let (_, f) = cigar_jets(p.0[0], p.0[1], order);
        ScalarJet::new(p.clone(), f.embed(3, &[0, 1]))
    }

    fn critical_set(&self) -> CriticalSet {
        CriticalSet::Axis
    }

    /// Distance to the axis foot-point `(0, 0, z)`.
    fn radial_distance(&self, p: &ChartPoint) -> Result<f64> {
        check_point(self, p, 0)?;
        Ok(p.0[0].hypot(p.0[1]).asinh())
    }

    fn ray_point(&self, r: f64) -> Result<ChartPoint> {
        Ok(ChartPoint::new(vec![r.sinh(), 0.0, 0.0]))
    }
}
