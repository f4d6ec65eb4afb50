//! Soft and hard nearest-neighbour rules, the kernel plug-in rule and the
//! Bayes rule of an oracle model.
//!
//! The soft nearest-neighbour posterior and the plug-in regression estimate
//! are the same kernel-weighted class fractions; they differ in how the
//! bandwidth is chosen and in whether the output is used soft or hard.

use crate::data::{argmax, Dataset, Labeling, MixtureModel};
use crate::density::{check_size, GaussianKernel, KernelIndex};
use crate::error::{Error, Result};

/// Class probabilities at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorVector(Vec<f64>);

impl PosteriorVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "posterior must be nonnegative and sum to 1, got {probs:?}"
            )));
        }
        Ok(Self(probs))
    }

    pub fn uniform(q: usize) -> Self {
        Self(vec![1.0 / q as f64; q])
    }

    pub fn one_hot(i: usize, q: usize) -> Self {
        let mut v = vec![0.0; q];
        v[i] = 1.0;
        Self(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Most probable class; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

fn check_inputs(data: &Dataset, labeling: &Labeling, x: &[f64]) -> Result<()> {
    check_size(data)?;
    labeling.ensure_len(data.len())?;
    if x.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Kernel-weighted class fractions bound to a labelled sample.
#[derive(Debug, Clone)]
pub struct KernelPosterior<'a> {
    index: KernelIndex<'a>,
    labeling: &'a Labeling,
    kernel: GaussianKernel,
}

impl<'a> KernelPosterior<'a> {
    pub fn new(data: &'a Dataset, labeling: &'a Labeling, h: f64) -> Result<Self> {
        check_size(data)?;
        labeling.ensure_len(data.len())?;
        Ok(Self {
            index: KernelIndex::new(data),
            labeling,
            kernel: GaussianKernel::new(h, data.dim())?,
        })
    }

    pub fn h(&self) -> f64 {
        self.kernel.h()
    }

    pub fn q(&self) -> usize {
        self.labeling.q()
    }

    pub fn posterior(&self, x: &[f64]) -> PosteriorVector {
        PosteriorVector(self.index.class_shares(&self.kernel, self.labeling, x))
    }
}

/// Nearest sample point's label, bound to a labelled sample.
#[derive(Debug, Clone)]
pub struct NearestNeighbor<'a> {
    index: KernelIndex<'a>,
    labeling: &'a Labeling,
}

impl<'a> NearestNeighbor<'a> {
    pub fn new(data: &'a Dataset, labeling: &'a Labeling) -> Result<Self> {
        labeling.ensure_len(data.len())?;
        Ok(Self {
            index: KernelIndex::new(data),
            labeling,
        })
    }

    pub fn classify(&self, x: &[f64]) -> usize {
        self.labeling.label(self.index.nearest(x).1)
    }
}

/// Probability that the soft nearest-neighbour rule with bandwidth `h_star`
/// assigns `x` to each class.
pub fn soft_nn_posterior(data: &Dataset, labeling: &Labeling, h_star: f64, x: &[f64]) -> Result<PosteriorVector> {
    check_inputs(data, labeling, x)?;
    Ok(KernelPosterior::new(data, labeling, h_star)?.posterior(x))
}

/// Label of the nearest sample point; ties go to the lowest point index.
pub fn nn_classify(data: &Dataset, labeling: &Labeling, x: &[f64]) -> Result<usize> {
    check_inputs(data, labeling, x)?;
    Ok(NearestNeighbor::new(data, labeling)?.classify(x))
}

/// η̂^(i)(x) = Σ_l K_h(x - X_l) 1{Y_l = i} / (n f̂(x)).
pub fn plugin_regression(data: &Dataset, labeling: &Labeling, h: f64, x: &[f64]) -> Result<PosteriorVector> {
    check_inputs(data, labeling, x)?;
    Ok(KernelPosterior::new(data, labeling, h)?.posterior(x))
}

/// argmax of the plug-in regression estimate, ties to the lowest class.
pub fn plugin_classify(data: &Dataset, labeling: &Labeling, h: f64, x: &[f64]) -> Result<usize> {
    Ok(plugin_regression(data, labeling, h, x)?.argmax())
}

/// argmax of the oracle posterior, ties to the lowest class.
pub fn bayes_classify(model: &MixtureModel, x: &[f64]) -> Result<usize> {
    model.bayes_label(x)
}

/// Output of a classifier at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Hard(usize),
    Soft(PosteriorVector),
}

/// A classifier bound to whatever it was trained on.
#[derive(Debug, Clone)]
pub enum Classifier<'a> {
    /// Soft nearest-neighbour rule; outputs a posterior.
    SoftNn(KernelPosterior<'a>),
    NearestNeighbor(NearestNeighbor<'a>),
    /// Hard plug-in rule: argmax of the kernel regression estimate.
    PlugIn(KernelPosterior<'a>),
    /// Soft use of the kernel regression estimate.
    PlugInSoft(KernelPosterior<'a>),
    Bayes(&'a MixtureModel),
    Constant {
        label: usize,
        q: usize,
    },
    ConstantPosterior(PosteriorVector),
}

impl<'a> Classifier<'a> {
    pub fn soft_nn(data: &'a Dataset, labeling: &'a Labeling, h_star: f64) -> Result<Self> {
        Ok(Classifier::SoftNn(KernelPosterior::new(data, labeling, h_star)?))
    }

    pub fn nearest_neighbor(data: &'a Dataset, labeling: &'a Labeling) -> Result<Self> {
        Ok(Classifier::NearestNeighbor(NearestNeighbor::new(data, labeling)?))
    }

    pub fn plug_in(data: &'a Dataset, labeling: &'a Labeling, h: f64) -> Result<Self> {
        Ok(Classifier::PlugIn(KernelPosterior::new(data, labeling, h)?))
    }

    pub fn plug_in_soft(data: &'a Dataset, labeling: &'a Labeling, h: f64) -> Result<Self> {
        Ok(Classifier::PlugInSoft(KernelPosterior::new(data, labeling, h)?))
    }

    pub fn constant(label: usize, q: usize) -> Result<Self> {
        if label >= q {
            return Err(Error::InvalidParameter(format!(
                "class {label} out of range for q = {q}"
            )));
        }
        Ok(Classifier::Constant { label, q })
    }

    pub fn q(&self) -> usize {
        match self {
            Classifier::SoftNn(k) | Classifier::PlugIn(k) | Classifier::PlugInSoft(k) => k.q(),
            Classifier::NearestNeighbor(nn) => nn.labeling.q(),
            Classifier::Bayes(m) => m.q(),
            Classifier::Constant { q, .. } => *q,
            Classifier::ConstantPosterior(p) => p.probs().len(),
        }
    }

    pub fn is_hard(&self) -> bool {
        matches!(
            self,
            Classifier::NearestNeighbor(_) | Classifier::PlugIn(_) | Classifier::Bayes(_) | Classifier::Constant { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classifier::SoftNn(_) => "soft-nn",
            Classifier::NearestNeighbor(_) => "hard-nn",
            Classifier::PlugIn(_) => "plug-in",
            Classifier::PlugInSoft(_) => "plug-in-soft",
            Classifier::Bayes(_) => "bayes",
            Classifier::Constant { .. } => "constant",
            Classifier::ConstantPosterior(_) => "constant-posterior",
        }
    }

    pub fn decide(&self, x: &[f64]) -> Result<Decision> {
        Ok(match self {
            Classifier::SoftNn(k) | Classifier::PlugInSoft(k) => Decision::Soft(k.posterior(x)),
            Classifier::PlugIn(k) => Decision::Hard(k.posterior(x).argmax()),
            Classifier::NearestNeighbor(nn) => Decision::Hard(nn.classify(x)),
            Classifier::Bayes(m) => Decision::Hard(m.bayes_label(x)?),
            Classifier::Constant { label, .. } => Decision::Hard(*label),
            Classifier::ConstantPosterior(p) => Decision::Soft(p.clone()),
        })
    }

    /// Writes P(c(x) = j) into `out`; one-hot for hard classifiers.
    pub(crate) fn probabilities_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Classifier::SoftNn(k) | Classifier::PlugInSoft(k) => out.copy_from_slice(k.posterior(x).probs()),
            Classifier::ConstantPosterior(p) => out.copy_from_slice(p.probs()),
            _ => {
                out.fill(0.0);
                out[self.hard_label(x)] = 1.0;
            }
        }
    }

    /// Label of a hard classifier; the argmax for soft ones. Callers keep `x`
    /// inside the model domain.
    pub(crate) fn hard_label(&self, x: &[f64]) -> usize {
        match self {
            Classifier::SoftNn(k) | Classifier::PlugIn(k) | Classifier::PlugInSoft(k) => k.posterior(x).argmax(),
            Classifier::NearestNeighbor(nn) => nn.classify(x),
            Classifier::Bayes(m) => argmax(&m.evaluate_unchecked(x).posterior),
            Classifier::Constant { label, .. } => *label,
            Classifier::ConstantPosterior(p) => p.argmax(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ModelSpec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair() -> (Dataset, Labeling) {
        (
            Dataset::from_values_1d(&[-1.0, 1.0]).unwrap(),
            Labeling::new(vec![0, 1], 2).unwrap(),
        )
    }

    fn two_gauss(priors: (f64, f64)) -> MixtureModel {
        MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[
            (priors.0, vec![-1.0], 1.0),
            (priors.1, vec![1.0], 1.0),
        ]))
        .unwrap()
    }

    #[test]
    fn soft_nn_symmetric_midpoint() {
        let (d, l) = pair();
        for h in [0.05, 1.0, 10.0] {
            assert_eq!(soft_nn_posterior(&d, &l, h, &[0.0]).unwrap().probs(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn soft_nn_small_bandwidth_is_decisive() {
        let (d, l) = pair();
        let p = soft_nn_posterior(&d, &l, 0.05, &[0.5]).unwrap();
        // the competing weight is exp(-450) / exp(-50)
        assert!(p.probs()[1] >= 1.0 - 1e-12);
    }

    #[test]
    fn single_class_posterior() {
        let d = Dataset::from_values_1d(&[0.0, 1.0, 3.0]).unwrap();
        let l = Labeling::new(vec![0, 0, 0], 3).unwrap();
        assert_eq!(
            soft_nn_posterior(&d, &l, 0.5, &[2.0]).unwrap().probs(),
            &[1.0, 0.0, 0.0]
        );
        assert_eq!(
            plugin_regression(&d, &l, 0.5, &[2.0]).unwrap().probs(),
            &[1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn nn_examples() {
        let d = Dataset::from_values_1d(&[0.0, 10.0]).unwrap();
        let l = Labeling::new(vec![0, 1], 2).unwrap();
        assert_eq!(nn_classify(&d, &l, &[1.0]).unwrap(), 0);

        let d = Dataset::from_values_1d(&[5.0, 6.0, 7.0, 1.0, 8.0, 9.0, 10.0, 3.0]).unwrap();
        let l = Labeling::new(vec![0, 0, 0, 1, 0, 0, 0, 0], 2).unwrap();
        // x = 2 is equidistant from index 3 (x=1) and index 7 (x=3)
        assert_eq!(nn_classify(&d, &l, &[2.0]).unwrap(), 1);
    }

    #[test]
    fn soft_nn_limit_matches_nn() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
        let labels: Vec<usize> = (0..40).map(|_| rng.random_range(0..3)).collect();
        let d = Dataset::from_values_1d(&xs).unwrap();
        let l = Labeling::new(labels, 3).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let h = 1e-3 * gap;
        for _ in 0..100 {
            let x = rng.random_range(-3.0..3.0);
            let soft = soft_nn_posterior(&d, &l, h, &[x]).unwrap().argmax();
            assert_eq!(soft, nn_classify(&d, &l, &[x]).unwrap());
        }
    }

    #[test]
    fn plugin_examples() {
        let d = Dataset::from_values_1d(&[0.0, 1.0]).unwrap();
        let l = Labeling::new(vec![0, 1], 2).unwrap();
        let p = plugin_regression(&d, &l, 1.0, &[0.0]).unwrap();
        let k0 = 0.398_942_280_401_432_7;
        let k1 = 0.241_970_724_519_143_37;
        assert!((p.probs()[0] - k0 / (k0 + k1)).abs() < 1e-15);
        assert!((p.probs()[0] - 0.622_459).abs() < 1e-6);
        assert!((p.probs()[1] - 0.377_541).abs() < 1e-6);
        assert_eq!(plugin_classify(&d, &l, 1.0, &[0.0]).unwrap(), 0);

        let (d, l) = pair();
        assert_eq!(plugin_classify(&d, &l, 0.8, &[0.0]).unwrap(), 0);
    }

    #[test]
    fn plugin_agrees_with_bayes_away_from_boundary() {
        let model = two_gauss((0.5, 0.5));
        let votes = (0..5)
            .filter(|&s| {
                let (d, l) = model.sample(5000, s).unwrap();
                let h = crate::density::BandwidthSpec::default()
                    .resolve(&d)
                    .unwrap()
                    .bandwidth_at(5000);
                plugin_classify(&d, &l, h, &[0.7]).unwrap() == 1
            })
            .count();
        assert!(votes >= 3);
    }

    #[test]
    fn bayes_examples() {
        let m = two_gauss((0.5, 0.5));
        assert_eq!(bayes_classify(&m, &[0.3]).unwrap(), 1);
        assert_eq!(bayes_classify(&m, &[0.0]).unwrap(), 0);
        assert!(bayes_classify(&m, &[100.0]).is_err());

        let skew = two_gauss((0.9, 0.1));
        let b = 9.0_f64.ln() / 2.0;
        assert!((b - 1.098_6).abs() < 1e-4);
        assert_eq!(bayes_classify(&skew, &[b - 1e-9]).unwrap(), 0);
        assert_eq!(bayes_classify(&skew, &[b + 1e-9]).unwrap(), 1);
    }

    #[test]
    fn soft_nn_converges_to_hard_nn() {
        let xs: Vec<f64> = (0..20).map(|k| -3.0 + 0.3 * k as f64).collect();
        let labels: Vec<usize> = (0..20).map(|k| (k / 4) % 2).collect();
        let d = Dataset::from_values_1d(&xs).unwrap();
        let l = Labeling::new(labels, 2).unwrap();
        // every grid point stays at least 0.05 away from a nearest-neighbour tie
        let grid: Vec<f64> = xs
            .iter()
            .flat_map(|x| [-0.1, -0.05, 0.0, 0.05, 0.1].map(|o| x + o))
            .collect();
        let scale = d.mean_axis_std();
        let mut last = f64::INFINITY;
        for factor in [1.0, 0.1, 0.01] {
            let h = factor * scale;
            let err = grid
                .iter()
                .map(|&x| {
                    let p = soft_nn_posterior(&d, &l, h, &[x]).unwrap();
                    let hard = nn_classify(&d, &l, &[x]).unwrap();
                    p.probs()
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v - if i == hard { 1.0 } else { 0.0 }).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            assert!(err <= last);
            last = err;
        }
        assert!(last < 1e-6, "{last}");
    }

    proptest! {
        #[test]
        fn relabeling_permutes_posterior(
            xs in prop::collection::vec(-4.0..4.0f64, 2..30),
            shift in 0usize..3,
            x in -5.0..5.0f64,
            h in 0.05..3.0f64,
        ) {
            let n = xs.len();
            let labels: Vec<usize> = (0..n).map(|l| (l * 5 + 1) % 3).collect();
            let perm = |y: usize| (y + shift) % 3;
            let d = Dataset::from_values_1d(&xs).unwrap();
            let a = Labeling::new(labels.clone(), 3).unwrap();
            let b = Labeling::new(labels.iter().map(|&y| perm(y)).collect(), 3).unwrap();
            let pa = soft_nn_posterior(&d, &a, h, &[x]).unwrap();
            let pb = soft_nn_posterior(&d, &b, h, &[x]).unwrap();
            for i in 0..3 {
                prop_assert!((pa.probs()[i] - pb.probs()[perm(i)]).abs() < 1e-15);
            }
        }

        #[test]
        fn plugin_components_sum_to_one(
            xs in prop::collection::vec(-4.0..4.0f64, 1..30),
            x in -50.0..50.0f64,
            h in 0.01..3.0f64,
        ) {
            let n = xs.len();
            let d = Dataset::from_values_1d(&xs).unwrap();
            let l = Labeling::new((0..n).map(|k| k % 2).collect(), 2).unwrap();
            let p = plugin_regression(&d, &l, h, &[x]).unwrap();
            prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
