//! Identities linking integrals of kernel regression estimates to pairwise
//! sums over the sample, checked by quadrature on concrete instances.

use rayon::prelude::*;
use serde::Serialize;

use super::quadrature::Rule;
use super::risk::{partition_risk_quadrature, DEFAULT_RESOLUTION_1D, DEFAULT_RESOLUTION_2D};
use crate::bounds::{pairwise_sum_with_density, FlooredDensity, KernelKind, SumConvention};
use crate::classifiers::{Classifier, KernelPosterior};
use crate::data::{Dataset, Labeling, MixtureModel};
use crate::density::GaussianKernel;
use crate::error::{Error, Result};
use crate::special::normal_interval_mass;

/// Nodes per standard deviation of the narrowest Gaussian integrated.
const NODES_PER_WIDTH: f64 = 50.0;

/// Agreement tolerance of the quadrature side of an identity.
pub const IDENTITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainCheck {
    /// Σ_{i≠j} ∫ η̃_i η̃_j dx over the domain.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub quadrature: f64,
    /// The same quantity as a pairwise sum over the sample, per convention.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub unordered: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub ordered: f64,
    /// Kernel mass of the pairwise terms that falls outside the domain.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub slack: f64,
    /// Convention whose pairwise sum reproduces the quadrature, if any.
    pub convention: Option<SumConvention>,
}

impl ChainCheck {
    pub fn holds(&self) -> bool {
        self.convention == Some(SumConvention::Unordered)
    }

    fn matches(&self, value: f64) -> bool {
        // truncation only removes mass, so the quadrature may fall short of
        // the full-space sum by at most the slack
        let diff = value - self.quadrature;
        diff >= -IDENTITY_TOL && diff <= self.slack + IDENTITY_TOL
    }
}

/// Compares Σ_{i≠j} ∫ η̃_i η̃_j dx, with
/// η̃_i(x) = (1/n) Σ_{Y_l = i} K_h̃(x - X_l) / f(X_l)^½ built from the oracle
/// density, to the pairwise G(½, ½) sum at bandwidth √2·h̃. The convolution of
/// two Gaussian kernels makes the two equal on the whole line; the slack
/// accounts for the part of each product kernel outside the domain.
pub fn plugin_bound_chain(
    model: &MixtureModel,
    data: &Dataset,
    labeling: &Labeling,
    h_tilde: f64,
    resolution: Option<usize>,
) -> Result<ChainCheck> {
    if model.dim() != 1 || data.dim() != 1 {
        return Err(Error::UnsupportedDimension("pairwise identity check"));
    }
    labeling.ensure_len(data.len())?;
    let n = data.len();
    let q = labeling.q();
    let density = FlooredDensity::new(
        (0..n)
            .map(|l| model.density(data.point(l)))
            .collect::<Result<Vec<f64>>>()?,
    )?;
    let kernel = GaussianKernel::new(h_tilde, 1)?;
    let m0 = model.domain().half_width();
    let width = h_tilde / std::f64::consts::SQRT_2;
    let nodes =
        resolution.unwrap_or_else(|| ((2.0 * m0 / width * NODES_PER_WIDTH).ceil() as usize).max(DEFAULT_RESOLUTION_1D));
    let rule = Rule::simpson(-m0, m0, nodes)?;
    let scale: Vec<f64> = density.values.iter().map(|f| 1.0 / (n as f64 * f.sqrt())).collect();
    let values: Vec<f64> = rule
        .nodes
        .par_iter()
        .map(|&x| {
            let mut eta = vec![0.0; q];
            for l in 0..n {
                eta[labeling.label(l)] += kernel.at(&[x - data.point(l)[0]]) * scale[l];
            }
            let total: f64 = eta.iter().sum();
            total * total - eta.iter().map(|e| e * e).sum::<f64>()
        })
        .collect();
    let quadrature = values.iter().zip(&rule.weights).map(|(v, w)| v * w).sum();

    let h = std::f64::consts::SQRT_2 * h_tilde;
    let sum = pairwise_sum_with_density(data, labeling, h, KernelKind::HALF, &density)?;
    let wide = GaussianKernel::new(h, 1)?;
    let mut slack = 0.0;
    for l in 0..n {
        for m in l + 1..n {
            if !labeling.theta(l, m) {
                continue;
            }
            let (a, b) = (data.point(l)[0], data.point(m)[0]);
            let mid = 0.5 * (a + b);
            let outside = 1.0 - normal_interval_mass((-m0 - mid) / width, (m0 - mid) / width);
            let w = wide.at(&[a - b]) / (density.values[l] * density.values[m]).sqrt();
            slack += 2.0 * w * outside;
        }
    }
    slack /= (n * n) as f64;

    let mut check = ChainCheck {
        quadrature,
        unordered: sum.bound(SumConvention::Unordered),
        ordered: sum.bound(SumConvention::Ordered),
        slack,
        convention: None,
    };
    check.convention = if check.matches(check.unordered) {
        Some(SumConvention::Unordered)
    } else if check.matches(check.ordered) {
        Some(SumConvention::Ordered)
    } else {
        None
    };
    Ok(check)
}

/// Quantities around the soft plug-in estimate η̂ = kernel class fractions at
/// bandwidth `h`, all expectations taken under the oracle model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PluginRisks {
    /// Σ_{i≠j} E[η̂_i η̂_j].
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub pairwise: f64,
    /// E[1 - Σ_i η̂_i²].
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub quadratic: f64,
    /// E[1 - max_i η̂_i]: the risk the estimate assigns to its own argmax.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub self_assessed: f64,
}

pub fn plugin_risks(
    model: &MixtureModel,
    data: &Dataset,
    labeling: &Labeling,
    h: f64,
    resolution: Option<usize>,
) -> Result<PluginRisks> {
    if model.dim() > 2 {
        return Err(Error::UnsupportedDimension("quadrature"));
    }
    if model.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.dim(),
        });
    }
    let posterior = KernelPosterior::new(data, labeling, h)?;
    let m0 = model.domain().half_width();
    let res = resolution.unwrap_or(if model.dim() == 1 {
        DEFAULT_RESOLUTION_1D
    } else {
        DEFAULT_RESOLUTION_2D
    });
    let rule = Rule::simpson(-m0, m0, res)?;
    let at = |x: &[f64]| -> [f64; 3] {
        let f = model.evaluate_unchecked(x).f;
        let eta = posterior.posterior(x);
        let p = eta.probs();
        let mut pairs = 0.0;
        for (i, a) in p.iter().enumerate() {
            for (j, b) in p.iter().enumerate() {
                if i != j {
                    pairs += a * b;
                }
            }
        }
        let squares: f64 = p.iter().map(|v| v * v).sum();
        let top = p.iter().copied().fold(0.0, f64::max);
        [f * pairs, f * (1.0 - squares), f * (1.0 - top)]
    };
    let rows: Vec<[f64; 3]> = rule
        .nodes
        .par_iter()
        .map(|&x| {
            if model.dim() == 1 {
                at(&[x])
            } else {
                let mut acc = [0.0; 3];
                for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let v = at(&[x, y]);
                    for k in 0..3 {
                        acc[k] += w * v[k];
                    }
                }
                acc
            }
        })
        .collect();
    let mut total = [0.0; 3];
    for (row, w) in rows.iter().zip(&rule.weights) {
        for k in 0..3 {
            total[k] += w * row[k];
        }
    }
    Ok(PluginRisks {
        pairwise: total[0],
        quadratic: total[1],
        self_assessed: total[2],
    })
}

/// Error of the hard plug-in rule against the Bayes partition, in units of
/// h·∫_S f.
pub fn plugin_partition_ratio(
    model: &MixtureModel,
    data: &Dataset,
    labeling: &Labeling,
    h: f64,
    boundary_volume: f64,
) -> Result<f64> {
    if !(boundary_volume > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "boundary volume must be positive, got {boundary_volume}"
        )));
    }
    let c = Classifier::plug_in(data, labeling, h)?;
    Ok(partition_risk_quadrature(model, &c, None)?.risk / (h * boundary_volume))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ModelSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> MixtureModel {
        MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[
            (0.5, vec![-1.0], 1.0),
            (0.5, vec![1.0], 1.0),
        ]))
        .unwrap()
    }

    #[test]
    fn identity_holds_with_unordered_sum() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let n = rng.random_range(5..=30);
            let (data, _) = m.sample(n, rng.random()).unwrap();
            let labels = Labeling::new((0..n).map(|_| rng.random_range(0..2)).collect(), 2).unwrap();
            let h = rng.random_range(0.2..0.6);
            let c = plugin_bound_chain(&m, &data, &labels, h, None).unwrap();
            assert!(c.holds(), "{c:?}");
            assert!((c.ordered - 2.0 * c.unordered).abs() <= 1e-12 * c.ordered);
        }
    }

    #[test]
    fn identity_without_truncation_is_exact() {
        // points far inside a wide domain: no slack
        let m = MixtureModel::from_spec(
            &ModelSpec::gaussian_classes(&[(0.5, vec![-1.0], 1.0), (0.5, vec![1.0], 1.0)]).with_m0(30.0),
        )
        .unwrap();
        let data = Dataset::from_rows(*m.domain(), &[vec![-1.2], vec![-0.3], vec![0.4], vec![1.5]]).unwrap();
        let labels = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
        let c = plugin_bound_chain(&m, &data, &labels, 0.3, None).unwrap();
        assert!(c.slack < 1e-100);
        assert!((c.quadrature - c.unordered).abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn constant_labeling_gives_zero() {
        let m = model();
        let (data, _) = m.sample(20, 1).unwrap();
        let c = plugin_bound_chain(&m, &data, &Labeling::constant(20, 2).unwrap(), 0.3, None).unwrap();
        assert_eq!(c.unordered, 0.0);
        assert_eq!(c.quadrature, 0.0);
    }

    #[test]
    fn plugin_risk_forms_agree_and_order() {
        let m = model();
        let (data, labels) = m.sample(300, 3).unwrap();
        let r = plugin_risks(&m, &data, &labels, 0.4, None).unwrap();
        assert!((r.pairwise - r.quadratic).abs() < 1e-12);
        // Σ η̂² ≤ max η̂, so the self-assessed risk never exceeds the pair sum
        assert!(r.self_assessed <= r.quadratic + 1e-15);
    }

    #[test]
    fn identical_classes_approach_chance() {
        for q in [2usize, 3] {
            let classes: Vec<(f64, Vec<f64>, f64)> = (0..q).map(|_| (1.0 / q as f64, vec![0.0], 1.0)).collect();
            let m = MixtureModel::from_spec(&ModelSpec::gaussian_classes(&classes)).unwrap();
            let (data, labels) = m.sample(1000, 7).unwrap();
            let r = plugin_risks(&m, &data, &labels, 0.5, None).unwrap();
            let target = (q - 1) as f64 / q as f64;
            assert!((r.quadratic / target - 1.0).abs() < 0.03, "q = {q}: {}", r.quadratic);
        }
    }
}
