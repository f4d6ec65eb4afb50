//! Cluster boundaries and their density-weighted volume ∫_S f(s) ds.

use super::quadrature::Rule;
use crate::data::{argmax, MixtureModel};
use crate::error::{Error, Result};

/// Crossings are bracketed to this width before the midpoint is reported.
const CROSSING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    /// Crossing points of a 1-D boundary.
    Points(Vec<f64>),
    /// A curve in the plane, given by nodes and arc-length quadrature weights.
    Curve { nodes: Vec<[f64; 2]>, weights: Vec<f64> },
}

impl BoundarySpec {
    /// Curve t ↦ point(t) on [t0, t1]; `tangent` is its derivative.
    pub fn parametric(
        point: impl Fn(f64) -> [f64; 2],
        tangent: impl Fn(f64) -> [f64; 2],
        t0: f64,
        t1: f64,
        resolution: usize,
    ) -> Result<Self> {
        let rule = Rule::simpson(t0, t1, resolution)?;
        let nodes = rule.nodes.iter().map(|&t| point(t)).collect();
        let weights = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, w)| {
                let [dx, dy] = tangent(t);
                w * dx.hypot(dy)
            })
            .collect();
        Ok(BoundarySpec::Curve { nodes, weights })
    }

    /// Straight segment from `a` to `b`.
    pub fn segment(a: [f64; 2], b: [f64; 2], resolution: usize) -> Result<Self> {
        let d = [b[0] - a[0], b[1] - a[1]];
        Self::parametric(|t| [a[0] + t * d[0], a[1] + t * d[1]], |_| d, 0.0, 1.0, resolution)
    }

    pub fn dim(&self) -> usize {
        match self {
            BoundarySpec::Points(_) => 1,
            BoundarySpec::Curve { .. } => 2,
        }
    }
}

/// Points where the Bayes label changes, found on a `resolution`-node grid
/// over the domain and refined by bisection.
pub fn bayes_boundary_1d(model: &MixtureModel, resolution: usize) -> Result<BoundarySpec> {
    if model.dim() != 1 {
        return Err(Error::UnsupportedDimension("boundary search"));
    }
    let m0 = model.domain().half_width();
    let label = |x: f64| argmax(&model.evaluate_unchecked(&[x]).posterior);
    let grid = Rule::simpson(-m0, m0, resolution)?.nodes;
    let mut points = Vec::new();
    let mut prev = label(grid[0]);
    for w in grid.windows(2) {
        let next = label(w[1]);
        if next != prev {
            let (mut a, mut b) = (w[0], w[1]);
            while b - a > CROSSING_TOL * a.abs().max(b.abs()).max(1.0) {
                let mid = 0.5 * (a + b);
                if label(mid) == prev {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            points.push(0.5 * (a + b));
        }
        prev = next;
    }
    Ok(BoundarySpec::Points(points))
}

/// ∫_S f(s) ds: a sum of densities for crossing points, a line integral for
/// curves.
pub fn weighted_boundary_volume(model: &MixtureModel, boundary: &BoundarySpec) -> Result<f64> {
    if boundary.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: boundary.dim(),
        });
    }
    match boundary {
        BoundarySpec::Points(points) => points.iter().map(|&s| model.density(&[s])).sum(),
        BoundarySpec::Curve { nodes, weights } => {
            let mut total = 0.0;
            for (p, w) in nodes.iter().zip(weights) {
                total += w * model.density(p)?;
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ModelSpec;
    use crate::special::normal_pdf;

    fn standard_normal() -> MixtureModel {
        // mass outside ±40 is far below f64 resolution
        MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[(1.0, vec![0.0], 1.0)]).with_m0(40.0)).unwrap()
    }

    #[test]
    fn point_boundaries() {
        let m = standard_normal();
        let v = weighted_boundary_volume(&m, &BoundarySpec::Points(vec![0.0])).unwrap();
        assert!((v - normal_pdf(0.0)).abs() < 1e-15);
        assert!((v - 0.398_942).abs() < 1e-6);
        let v = weighted_boundary_volume(&m, &BoundarySpec::Points(vec![-1.0, 1.0])).unwrap();
        assert!((v - 2.0 * normal_pdf(1.0)).abs() < 1e-15);
        assert!((v - 0.483_941).abs() < 1e-6);
    }

    #[test]
    fn half_weight_halves_the_volume() {
        let half = MixtureModel::from_spec(
            &ModelSpec::gaussian_classes(&[(0.5, vec![0.0], 1.0), (0.5, vec![60.0], 1.0)]).with_m0(100.0),
        )
        .unwrap();
        let full = standard_normal();
        for s in [vec![0.0], vec![-1.0, 1.0]] {
            let a = weighted_boundary_volume(&half, &BoundarySpec::Points(s.clone())).unwrap();
            let b = weighted_boundary_volume(&full, &BoundarySpec::Points(s)).unwrap();
            assert!((a - 0.5 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_model_crosses_at_zero() {
        let m = MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[
            (0.5, vec![-1.0], 1.0),
            (0.5, vec![1.0], 1.0),
        ]))
        .unwrap();
        let BoundarySpec::Points(s) = bayes_boundary_1d(&m, 4001).unwrap() else {
            panic!("expected points")
        };
        assert_eq!(s.len(), 1);
        assert!(s[0].abs() < 1e-10);
    }

    #[test]
    fn unequal_priors_shift_the_crossing() {
        // π1 φ(x+1) = π2 φ(x-1)  ⇔  x = ln(π1/π2) / 2
        let m = MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[
            (0.7, vec![-1.0], 1.0),
            (0.3, vec![1.0], 1.0),
        ]))
        .unwrap();
        let BoundarySpec::Points(s) = bayes_boundary_1d(&m, 4001).unwrap() else {
            panic!("expected points")
        };
        assert_eq!(s.len(), 1);
        assert!((s[0] - 0.5 * (0.7_f64 / 0.3).ln()).abs() < 1e-10);
    }

    #[test]
    fn unequal_widths_cross_twice() {
        // narrow class inside a wide one: two crossings, symmetric about 0
        let m = MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[
            (0.5, vec![0.0], 0.5),
            (0.5, vec![0.0], 2.0),
        ]))
        .unwrap();
        let BoundarySpec::Points(s) = bayes_boundary_1d(&m, 4001).unwrap() else {
            panic!("expected points")
        };
        assert_eq!(s.len(), 2);
        assert!((s[0] + s[1]).abs() < 1e-10);
    }

    #[test]
    fn line_integral_over_a_segment() {
        // 2-D standard normal along x = 0: ∫ φ(0)φ(y) dy = φ(0)
        let m =
            MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[(1.0, vec![0.0, 0.0], 1.0)]).with_m0(12.0)).unwrap();
        let s = BoundarySpec::segment([0.0, -12.0], [0.0, 12.0], 2001).unwrap();
        let v = weighted_boundary_volume(&m, &s).unwrap();
        assert!((v - normal_pdf(0.0)).abs() < 1e-10, "{v}");
        assert!(weighted_boundary_volume(&standard_normal(), &s).is_err());
    }

    #[test]
    fn circle_length() {
        // uniform weight check: a circle of radius r in a flat region of a
        // very wide Gaussian has volume ≈ 2πr f(0)
        let m =
            MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[(1.0, vec![0.0, 0.0], 1e4)]).with_m0(10.0)).unwrap();
        let r = 2.0;
        let s = BoundarySpec::parametric(
            |t| [r * t.cos(), r * t.sin()],
            |t| [-r * t.sin(), r * t.cos()],
            0.0,
            std::f64::consts::TAU,
            401,
        )
        .unwrap();
        let f0 = m.density(&[0.0, 0.0]).unwrap();
        let v = weighted_boundary_volume(&m, &s).unwrap();
        assert!((v / (std::f64::consts::TAU * r * f0) - 1.0).abs() < 1e-6);
    }
}
