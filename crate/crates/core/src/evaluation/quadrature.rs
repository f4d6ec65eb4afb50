//! Composite Simpson rules on intervals and tensor grids.

use crate::error::{Error, Result};

/// Nodes and weights of a composite Simpson rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `resolution` nodes on [a, b], rounded up to an odd count of at least 3.
    pub fn simpson(a: f64, b: f64, resolution: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "empty integration interval [{a}, {b}]"
            )));
        }
        let nodes = resolution.max(3) | 1;
        let m = nodes - 1;
        let step = (b - a) / m as f64;
        let mut xs = Vec::with_capacity(nodes);
        let mut ws = Vec::with_capacity(nodes);
        for k in 0..nodes {
            xs.push(if k == m { b } else { a + k as f64 * step });
            let w = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            ws.push(w * step / 3.0);
        }
        Ok(Self { nodes: xs, weights: ws })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ_k w_k g(x_k), summed in node order.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }
}

/// Simpson intervals for a piece of length `len` when the whole range of
/// length `total` uses `resolution` nodes.
pub(crate) fn piece_resolution(len: f64, total: f64, resolution: usize) -> usize {
    let share = (len / total * resolution as f64).ceil() as usize;
    share.clamp(3, resolution.max(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics() {
        let r = Rule::simpson(-1.0, 2.0, 5).unwrap();
        let v = r.integrate(|x| x * x * x - 2.0 * x + 1.0);
        assert!((v - (16.0 / 4.0 - 1.0 / 4.0 - 3.0 + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn gaussian_mass() {
        let r = Rule::simpson(-8.0, 8.0, 4001).unwrap();
        let v = r.integrate(crate::special::normal_pdf);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_node_count() {
        assert_eq!(Rule::simpson(0.0, 1.0, 4).unwrap().len(), 5);
        assert_eq!(Rule::simpson(0.0, 1.0, 1).unwrap().len(), 3);
        assert!(Rule::simpson(1.0, 1.0, 5).is_err());
    }
}
