//! Datasets, hypothetical labelings and the truncated Gaussian-mixture models
//! that act as ground truth for every risk and convergence check.
//!
//! Class indices are zero-based throughout the library. The CSV and JSON
//! surfaces translate to the one-based labels users see.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_interval_mass, LN_SQRT_2PI};

/// Rejection attempts allowed per sampled point.
pub const REJECTION_CAP: usize = 100_000;

/// Default domain half-width is this many standard deviations beyond the
/// farthest component mean.
pub const DEFAULT_DOMAIN_SIGMAS: f64 = 6.0;

/// Mixes a base seed with a stream tag (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The box `[-half_width, half_width]^dim` all data lives in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    dim: usize,
    half_width: f64,
}

impl Domain {
    pub fn new(dim: usize, half_width: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain half-width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self { dim, half_width })
    }

    /// Smallest centred box holding every row of `points`.
    pub fn bounding(points: &Array2<f64>) -> Result<Self> {
        let m0 = points.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        Domain::new(points.ncols(), if m0 > 0.0 { m0 } else { 1.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.abs() <= self.half_width)
    }
}

/// An immutable sample `X_1..X_n` inside a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    domain: Domain,
    points: Array2<f64>,
}

impl Dataset {
    pub fn new(domain: Domain, points: Array2<f64>) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::InvalidParameter("dataset must hold at least one point".into()));
        }
        if points.ncols() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: points.ncols(),
            });
        }
        let points = points.as_standard_layout().into_owned();
        for (index, row) in points.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) || !domain.contains(row.as_slice().unwrap()) {
                return Err(Error::OutsideDomain {
                    index,
                    half_width: domain.half_width(),
                });
            }
        }
        Ok(Self { domain, points })
    }

    pub fn from_rows(domain: Domain, rows: &[Vec<f64>]) -> Result<Self> {
        let d = domain.dim();
        let mut flat = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let points =
            Array2::from_shape_vec((rows.len(), d), flat).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Dataset::new(domain, points)
    }

    /// Wraps points in their bounding domain.
    pub fn from_points(points: Array2<f64>) -> Result<Self> {
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        let domain = Domain::bounding(&points)?;
        Dataset::new(domain, points)
    }

    /// One-dimensional convenience constructor.
    pub fn from_values_1d(values: &[f64]) -> Result<Self> {
        let points = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Dataset::from_points(points)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    #[inline]
    pub fn point(&self, l: usize) -> &[f64] {
        let d = self.dim();
        &self.points.as_slice().expect("standard layout")[l * d..(l + 1) * d]
    }

    /// Per-axis sample standard deviation, averaged over axes.
    pub fn mean_axis_std(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for col in self.points.columns() {
            let mean = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            total += (ss / (n - 1) as f64).sqrt();
        }
        total / self.dim() as f64
    }

    /// Rows picked (and ordered) by `indices`.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut flat = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidParameter(format!("index {i} out of range")));
            }
            flat.extend_from_slice(self.point(i));
        }
        let points =
            Array2::from_shape_vec((indices.len(), d), flat).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Dataset::new(self.domain, points)
    }
}

/// A hypothetical labeling `Y_1..Y_n` with classes `0..q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    labels: Vec<usize>,
    q: usize,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("class count must be positive".into()));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= q) {
            return Err(Error::InvalidParameter(format!(
                "class index {bad} out of range for q = {q}"
            )));
        }
        Ok(Self { labels, q })
    }

    /// Builds from one-based labels; `q` defaults to the largest label.
    pub fn from_one_based(labels: &[usize], q: Option<usize>) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::InvalidParameter("one-based labels must be >= 1".into()));
        }
        let q = q.unwrap_or_else(|| labels.iter().copied().max().unwrap_or(1));
        Labeling::new(labels.iter().map(|y| y - 1).collect(), q)
    }

    /// A single-class labeling of `n` points.
    pub fn constant(n: usize, q: usize) -> Result<Self> {
        Labeling::new(vec![0; n], q)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn label(&self, l: usize) -> usize {
        self.labels[l]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|y| y + 1).collect()
    }

    /// θ_lm: whether points `l` and `m` carry different labels.
    #[inline]
    pub fn theta(&self, l: usize, m: usize) -> bool {
        self.labels[l] != self.labels[m]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.q];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Empirical priors n_i / n.
    pub fn class_fractions(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        self.class_counts().into_iter().map(|c| c as f64 / n).collect()
    }

    pub fn ensure_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.len(),
            });
        }
        Ok(())
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            q: self.q,
        }
    }

    /// Relabels classes in order of first appearance; partitions that agree
    /// up to renaming map to the same canonical labeling.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.q];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&y| {
                if map[y] == usize::MAX {
                    map[y] = next;
                    next += 1;
                }
                map[y]
            })
            .collect();
        Self { labels, q: self.q }
    }
}

/// Per-axis scale of a Gaussian component: a single σ or one per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleSpec {
    Isotropic(f64),
    Diagonal(Vec<f64>),
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    #[serde(default = "one")]
    pub weight: f64,
    pub mean: Vec<f64>,
    pub std: ScaleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub prior: f64,
    pub components: Vec<ComponentSpec>,
}

/// Serializable description of a [`MixtureModel`] (the `model` config key).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    pub classes: Vec<ClassSpec>,
}

impl ModelSpec {
    /// One isotropic Gaussian per class: `(prior, mean, std)`.
    pub fn gaussian_classes(classes: &[(f64, Vec<f64>, f64)]) -> Self {
        ModelSpec {
            m0: None,
            classes: classes
                .iter()
                .map(|(prior, mean, std)| ClassSpec {
                    prior: *prior,
                    components: vec![ComponentSpec {
                        weight: 1.0,
                        mean: mean.clone(),
                        std: ScaleSpec::Isotropic(*std),
                    }],
                })
                .collect(),
        }
    }

    pub fn with_m0(mut self, m0: f64) -> Self {
        self.m0 = Some(m0);
        self
    }
}

#[derive(Debug, Clone)]
struct TruncatedGaussian {
    mean: Vec<f64>,
    std: Vec<f64>,
    /// ln(weight) - ln(mass inside the domain) - Σ ln σ - d ln √(2π)
    log_scale: f64,
}

impl TruncatedGaussian {
    #[inline]
    fn log_density(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for ((xi, mi), si) in x.iter().zip(&self.mean).zip(&self.std) {
            let z = (xi - mi) / si;
            q += z * z;
        }
        self.log_scale - 0.5 * q
    }
}

/// Values of the oracle at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDensity {
    /// Marginal f(x).
    pub f: f64,
    /// Class-conditional densities f^(i)(x).
    pub class_densities: Vec<f64>,
    /// Posterior η^(i)(x); sums to one.
    pub posterior: Vec<f64>,
}

/// Ground-truth generative model: priors and truncated Gaussian-mixture
/// class conditionals on a bounded domain.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    spec: ModelSpec,
    domain: Domain,
    priors: Vec<f64>,
    classes: Vec<Vec<TruncatedGaussian>>,
    component_weights: Vec<Vec<f64>>,
}

impl MixtureModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        if spec.classes.is_empty() {
            return Err(Error::InvalidParameter("model needs at least one class".into()));
        }
        let dim = spec.classes[0].components.first().map(|c| c.mean.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidParameter("component means must be non-empty".into()));
        }

        let mut priors = Vec::with_capacity(spec.classes.len());
        let mut raw = Vec::with_capacity(spec.classes.len());
        let mut far = 0.0_f64;
        for class in &spec.classes {
            if !(class.prior >= 0.0 && class.prior.is_finite()) {
                return Err(Error::InvalidParameter(format!("invalid prior {}", class.prior)));
            }
            if class.components.is_empty() {
                return Err(Error::InvalidParameter("class needs at least one component".into()));
            }
            priors.push(class.prior);
            let wsum: f64 = class.components.iter().map(|c| c.weight).sum();
            if (wsum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "component weights sum to {wsum}, expected 1"
                )));
            }
            let mut comps = Vec::with_capacity(class.components.len());
            for c in &class.components {
                if c.mean.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: c.mean.len(),
                    });
                }
                if !(c.weight >= 0.0) {
                    return Err(Error::InvalidParameter(format!("invalid weight {}", c.weight)));
                }
                let std = match &c.std {
                    ScaleSpec::Isotropic(s) => vec![*s; dim],
                    ScaleSpec::Diagonal(v) if v.len() == dim => v.clone(),
                    ScaleSpec::Diagonal(v) => {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: v.len(),
                        })
                    }
                };
                if std.iter().any(|s| !(*s > 0.0 && s.is_finite())) || c.mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "component means must be finite and scales positive".into(),
                    ));
                }
                for (m, s) in c.mean.iter().zip(&std) {
                    far = far.max(m.abs() + DEFAULT_DOMAIN_SIGMAS * s);
                }
                comps.push((c.weight, c.mean.clone(), std));
            }
            raw.push(comps);
        }
        let psum: f64 = priors.iter().sum();
        if (psum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("priors sum to {psum}, expected 1")));
        }

        let domain = Domain::new(dim, spec.m0.unwrap_or(far))?;
        let m0 = domain.half_width();
        let mut classes = Vec::with_capacity(raw.len());
        let mut component_weights = Vec::with_capacity(raw.len());
        for (ci, comps) in raw.into_iter().enumerate() {
            let mut out = Vec::with_capacity(comps.len());
            let mut weights = Vec::with_capacity(comps.len());
            for (k, (weight, mean, std)) in comps.into_iter().enumerate() {
                let mut log_mass = 0.0;
                let mut log_sigma = 0.0;
                for (m, s) in mean.iter().zip(&std) {
                    log_mass += normal_interval_mass((-m0 - m) / s, (m0 - m) / s).ln();
                    log_sigma += s.ln();
                }
                if weight > 0.0 && log_mass < (1e-12_f64).ln() {
                    return Err(Error::NegligibleMass {
                        class: ci,
                        component: k,
                    });
                }
                out.push(TruncatedGaussian {
                    mean,
                    std,
                    log_scale: weight.ln() - log_mass - log_sigma - dim as f64 * LN_SQRT_2PI,
                });
                weights.push(weight);
            }
            classes.push(out);
            component_weights.push(weights);
        }

        Ok(Self {
            spec: spec.clone(),
            domain,
            priors,
            classes,
            component_weights,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn q(&self) -> usize {
        self.priors.len()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    fn log_class_density(&self, i: usize, x: &[f64]) -> f64 {
        let comps = &self.classes[i];
        if comps.len() == 1 {
            return comps[0].log_density(x);
        }
        let logs: Vec<f64> = comps.iter().map(|c| c.log_density(x)).collect();
        log_sum_exp(&logs)
    }

    /// f, f^(i) and η at `x`; rejects points outside the domain.
    pub fn evaluate(&self, x: &[f64]) -> Result<MixtureDensity> {
        self.check_point(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> MixtureDensity {
        let q = self.q();
        let mut log_joint = Vec::with_capacity(q);
        let mut class_densities = Vec::with_capacity(q);
        for i in 0..q {
            let lf = self.log_class_density(i, x);
            class_densities.push(lf.exp());
            log_joint.push(if self.priors[i] > 0.0 {
                self.priors[i].ln() + lf
            } else {
                f64::NEG_INFINITY
            });
        }
        let top = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut posterior: Vec<f64> = log_joint.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = posterior.iter().sum();
        for p in &mut posterior {
            *p /= total;
        }
        let f = self.priors.iter().zip(&class_densities).map(|(p, fi)| p * fi).sum();
        MixtureDensity {
            f,
            class_densities,
            posterior,
        }
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x)?.f)
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(x)?.posterior)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain {
                index: 0,
                half_width: self.domain.half_width(),
            });
        }
        Ok(())
    }

    /// Draws `n` labelled points; identical output for identical seeds.
    pub fn sample(&self, n: usize, seed: u64) -> Result<(Dataset, Labeling)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<(Dataset, Labeling)> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let d = self.dim();
        let mut flat = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        let mut x = vec![0.0; d];
        for _ in 0..n {
            let y = self.draw_into(rng, &mut x)?;
            flat.extend_from_slice(&x);
            labels.push(y);
        }
        let points = Array2::from_shape_vec((n, d), flat).expect("shape");
        Ok((Dataset::new(self.domain, points)?, Labeling::new(labels, self.q())?))
    }

    /// One draw of (X, Y): class by prior, then the class conditional by
    /// rejection against the domain.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) -> Result<usize> {
        let y = pick(&self.priors, rng.random::<f64>());
        let k = pick(&self.component_weights[y], rng.random::<f64>());
        let comp = &self.classes[y][k];
        for _ in 0..REJECTION_CAP {
            for ((xi, m), s) in x.iter_mut().zip(&comp.mean).zip(&comp.std) {
                let z: f64 = rng.sample(StandardNormal);
                *xi = m + s * z;
            }
            if self.domain.contains(x) {
                return Ok(y);
            }
        }
        Err(Error::RejectionCap(REJECTION_CAP))
    }

    /// argmax_i η^(i)(x), ties to the lowest class.
    pub fn bayes_label(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.evaluate(x)?.posterior))
    }
}

fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + values.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_pdf;

    fn two_class() -> MixtureModel {
        MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[
            (0.5, vec![-1.0], 1.0),
            (0.5, vec![1.0], 1.0),
        ]))
        .unwrap()
    }

    #[test]
    fn default_domain_leaves_six_sigma_margin() {
        assert_eq!(two_class().domain().half_width(), 7.0);
    }

    #[test]
    fn symmetric_pair_has_even_posterior_at_origin() {
        let m = two_class();
        let v = m.evaluate(&[0.0]).unwrap();
        assert!((v.posterior[0] - 0.5).abs() < 1e-15);
        assert!((v.posterior[1] - 0.5).abs() < 1e-15);
        // truncation at 6 and 8 sigma moves f(0) by well under 1e-8
        assert!((v.f - normal_pdf(1.0)).abs() < 1e-8);
        assert!((v.f - 0.241_971).abs() < 1e-6);
    }

    #[test]
    fn single_class_posterior_is_one() {
        let m = MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[(1.0, vec![0.0], 1.0)])).unwrap();
        assert_eq!(m.evaluate(&[0.3]).unwrap().posterior, vec![1.0]);
    }

    #[test]
    fn outside_domain_is_rejected() {
        let m = two_class();
        assert!(matches!(m.evaluate(&[7.5]), Err(Error::OutsideDomain { .. })));
        assert!(matches!(m.evaluate(&[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn posterior_defined_where_density_underflows() {
        let m = MixtureModel::from_spec(
            &ModelSpec::gaussian_classes(&[(0.5, vec![-1.0], 0.01), (0.5, vec![1.0], 0.01)]).with_m0(50.0),
        )
        .unwrap();
        let v = m.evaluate(&[40.0]).unwrap();
        assert_eq!(v.f, 0.0);
        assert!((v.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(argmax(&v.posterior), 1);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = two_class();
        let (a, la) = m.sample(200, 42).unwrap();
        let (b, lb) = m.sample(200, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let (c, _) = m.sample(200, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_prior_yields_single_label() {
        let m = MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[
            (1.0, vec![-1.0], 1.0),
            (0.0, vec![1.0], 1.0),
        ]))
        .unwrap();
        let (_, labels) = m.sample(500, 7).unwrap();
        assert!(labels.as_slice().iter().all(|&y| y == 0));
    }

    #[test]
    fn sample_mean_within_standard_error() {
        let m = MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[(1.0, vec![0.0], 1.0)])).unwrap();
        let n = 10_000;
        let (data, _) = m.sample(n, 11).unwrap();
        let mean = data.points().sum() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn negligible_component_mass_is_reported() {
        let spec = ModelSpec::gaussian_classes(&[(1.0, vec![30.0], 0.5)]).with_m0(5.0);
        assert!(matches!(
            MixtureModel::from_spec(&spec),
            Err(Error::NegligibleMass { .. })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_priors = ModelSpec::gaussian_classes(&[(0.7, vec![0.0], 1.0), (0.7, vec![1.0], 1.0)]);
        assert!(MixtureModel::from_spec(&bad_priors).is_err());
        let bad_std = ModelSpec::gaussian_classes(&[(1.0, vec![0.0], 0.0)]);
        assert!(MixtureModel::from_spec(&bad_std).is_err());
    }

    #[test]
    fn theta_is_symmetric_with_zero_diagonal() {
        let lab = Labeling::new(vec![0, 1, 1, 2, 0], 3).unwrap();
        for l in 0..5 {
            assert!(!lab.theta(l, l));
            for m in 0..5 {
                assert_eq!(lab.theta(l, m), lab.theta(m, l));
            }
        }
    }

    #[test]
    fn labeling_validation_and_canonical_form() {
        assert!(Labeling::new(vec![0, 3], 3).is_err());
        let lab = Labeling::from_one_based(&[2, 2, 1, 3], None).unwrap();
        assert_eq!(lab.q(), 3);
        assert_eq!(lab.canonical().as_slice(), &[0, 0, 1, 2]);
        assert_eq!(lab.one_based(), vec![2, 2, 1, 3]);
    }

    #[test]
    fn datasets_outside_domain_are_rejected() {
        let dom = Domain::new(1, 1.0).unwrap();
        assert!(Dataset::from_rows(dom, &[vec![0.5], vec![1.5]]).is_err());
        assert!(Dataset::from_rows(dom, &[]).is_err());
    }
}
