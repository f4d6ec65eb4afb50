//! Gaussian kernels, kernel density estimates and bandwidth schedules.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{Dataset, Labeling};
use crate::error::{Error, Result};

/// Largest sample for which density estimates are evaluated.
pub const MAX_KDE_POINTS: usize = 20_000;

/// Kernel terms smaller than `exp(-CUTOFF)` times the largest term of a sum
/// are skipped; even summed over the largest sample they sit below double
/// precision.
const CUTOFF: f64 = 50.0;

/// The isotropic Gaussian kernel `h^-d (2π)^(-d/2) exp(-|u|² / 2h²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    h: f64,
    dim: usize,
    norm: f64,
    inv_two_h2: f64,
}

impl GaussianKernel {
    pub fn new(h: f64, dim: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be positive and finite, got {h}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let norm = (h * (2.0 * PI).sqrt()).powi(dim as i32).recip();
        Ok(Self {
            h,
            dim,
            norm,
            inv_two_h2: 0.5 / (h * h),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// K_h(0).
    pub fn peak(&self) -> f64 {
        self.norm
    }

    /// Kernel value at squared distance `d2`.
    #[inline]
    pub fn at_sq(&self, d2: f64) -> f64 {
        self.norm * (-d2 * self.inv_two_h2).exp()
    }

    /// `exp(-d2 / 2h²)`, the kernel without its normalization.
    #[inline]
    pub fn shape(&self, d2: f64) -> f64 {
        (-d2 * self.inv_two_h2).exp()
    }

    pub fn at(&self, u: &[f64]) -> f64 {
        self.at_sq(u.iter().map(|v| v * v).sum())
    }

    /// Squared radius beyond which terms are negligible relative to a term
    /// at squared distance `d2_min`.
    #[inline]
    pub(crate) fn cutoff_sq(&self, d2_min: f64) -> f64 {
        d2_min + 2.0 * CUTOFF * self.h * self.h
    }
}

/// K_h(u) with the h^-d normalization.
pub fn gaussian_kernel(u: &[f64], h: f64) -> Result<f64> {
    Ok(GaussianKernel::new(h, u.len())?.at(u))
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sample points sorted along the first axis, so that kernel sums only touch
/// points whose contribution is representable.
#[derive(Debug, Clone)]
pub struct KernelIndex<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    keys: Vec<f64>,
}

impl<'a> KernelIndex<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| data.point(a)[0].total_cmp(&data.point(b)[0]).then(a.cmp(&b)));
        let keys = order.iter().map(|&l| data.point(l)[0]).collect();
        Self { data, order, keys }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    /// Exact squared distance to the nearest sample point, and its index
    /// (lowest index among ties).
    pub fn nearest(&self, x: &[f64]) -> (f64, usize) {
        let pos = self.keys.partition_point(|&k| k < x[0]);
        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |p: usize, best: &mut (f64, usize)| {
            let l = self.order[p];
            let d2 = dist_sq(self.data.point(l), x);
            if d2 < best.0 || (d2 == best.0 && l < best.1) {
                *best = (d2, l);
            }
        };
        for p in pos..self.keys.len() {
            let dx = self.keys[p] - x[0];
            if dx * dx > best.0 {
                break;
            }
            consider(p, &mut best);
        }
        for p in (0..pos).rev() {
            let dx = x[0] - self.keys[p];
            if dx * dx > best.0 {
                break;
            }
            consider(p, &mut best);
        }
        best
    }

    /// Calls `f(l, d2)` for every sample point within squared distance `r2` of `x`.
    #[inline]
    pub fn visit(&self, x: &[f64], r2: f64, mut f: impl FnMut(usize, f64)) {
        let r = r2.sqrt();
        let lo = self.keys.partition_point(|&k| k < x[0] - r);
        let hi = self.keys.partition_point(|&k| k <= x[0] + r);
        for p in lo..hi {
            let l = self.order[p];
            let d2 = dist_sq(self.data.point(l), x);
            if d2 <= r2 {
                f(l, d2);
            }
        }
    }

    /// `Σ_l w_l K_h(x - X_l)` as `(scale, sum)` with the total equal to
    /// `scale * sum`; the split keeps ratios exact when the total underflows.
    pub fn weighted_sum(&self, kernel: &GaussianKernel, x: &[f64], w: impl Fn(usize) -> f64) -> (f64, f64) {
        let (d2_min, _) = self.nearest(x);
        let mut s = 0.0;
        self.visit(x, kernel.cutoff_sq(d2_min), |l, d2| {
            s += w(l) * kernel.shape(d2 - d2_min);
        });
        (kernel.at_sq(d2_min), s)
    }

    /// Per-class kernel weights at `x`, normalized to sum to one.
    pub fn class_shares(&self, kernel: &GaussianKernel, labeling: &Labeling, x: &[f64]) -> Vec<f64> {
        let (d2_min, _) = self.nearest(x);
        let mut acc = vec![0.0; labeling.q()];
        self.visit(x, kernel.cutoff_sq(d2_min), |l, d2| {
            acc[labeling.label(l)] += kernel.shape(d2 - d2_min);
        });
        let total: f64 = acc.iter().sum();
        for a in &mut acc {
            *a /= total;
        }
        acc
    }

    /// Visits unordered pairs `l != m` within the kernel cutoff, once each.
    pub(crate) fn pairs_from(&self, p: usize, r2: f64, mut f: impl FnMut(usize, usize, f64)) {
        let l = self.order[p];
        let x = self.data.point(l);
        let r = r2.sqrt();
        for q in p + 1..self.keys.len() {
            if self.keys[q] - self.keys[p] > r {
                break;
            }
            let m = self.order[q];
            let d2 = dist_sq(self.data.point(m), x);
            if d2 <= r2 {
                f(l, m, d2);
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.order.len()
    }
}

pub(crate) fn check_size(data: &Dataset) -> Result<()> {
    if data.len() > MAX_KDE_POINTS {
        return Err(Error::TooLarge {
            what: "kernel density estimate",
            n: data.len(),
            limit: MAX_KDE_POINTS,
        });
    }
    Ok(())
}

fn check_query(data: &Dataset, x: &[f64]) -> Result<()> {
    if x.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("query point is not finite".into()));
    }
    Ok(())
}

/// f̂_{n,h}(x) = (1/n) Σ_l K_h(x - X_l).
pub fn kde_at(data: &Dataset, h: f64, x: &[f64]) -> Result<f64> {
    Kde::new(data, h)?.at(x)
}

/// A density estimate bound to its sample.
#[derive(Debug, Clone)]
pub struct Kde<'a> {
    index: KernelIndex<'a>,
    kernel: GaussianKernel,
}

impl<'a> Kde<'a> {
    pub fn new(data: &'a Dataset, h: f64) -> Result<Self> {
        check_size(data)?;
        Ok(Self {
            kernel: GaussianKernel::new(h, data.dim())?,
            index: KernelIndex::new(data),
        })
    }

    pub fn kernel(&self) -> &GaussianKernel {
        &self.kernel
    }

    pub fn at(&self, x: &[f64]) -> Result<f64> {
        check_query(self.index.dataset(), x)?;
        let (scale, s) = self.index.weighted_sum(&self.kernel, x, |_| 1.0);
        Ok(scale * s / self.index.len() as f64)
    }

    /// f̂ at every sample point, in sample order.
    pub fn at_samples(&self) -> Vec<f64> {
        let data = self.index.dataset();
        (0..data.len())
            .into_par_iter()
            .map(|l| {
                let (scale, s) = self.index.weighted_sum(&self.kernel, data.point(l), |_| 1.0);
                scale * s / data.len() as f64
            })
            .collect()
    }
}

/// f̂ evaluated at each sample point with the sample's own bandwidth.
pub fn kde_at_points(data: &Dataset, h: f64) -> Result<Vec<f64>> {
    Ok(Kde::new(data, h)?.at_samples())
}

/// f̂^(i)(x) = (1/(n π̂_i)) Σ_l K_h(x - X_l) 1{Y_l = i}, π̂_i = n_i / n.
pub fn class_kde_at(data: &Dataset, labeling: &Labeling, i: usize, h: f64, x: &[f64]) -> Result<f64> {
    check_size(data)?;
    check_query(data, x)?;
    labeling.ensure_len(data.len())?;
    if i >= labeling.q() {
        return Err(Error::InvalidParameter(format!("class {i} out of range")));
    }
    let n_i = labeling.class_counts()[i];
    if n_i == 0 {
        return Err(Error::EmptyClass(i));
    }
    let kernel = GaussianKernel::new(h, data.dim())?;
    let index = KernelIndex::new(data);
    let (scale, s) = index.weighted_sum(&kernel, x, |l| if labeling.label(l) == i { 1.0 } else { 0.0 });
    Ok(scale * s / n_i as f64)
}

/// (1/n) Σ_l K_h(x - X_l) / g(X_l), an estimate of f/g.
pub fn generalized_kde_at(data: &Dataset, gvals: &[f64], h: f64, x: &[f64]) -> Result<f64> {
    check_size(data)?;
    check_query(data, x)?;
    if gvals.len() != data.len() {
        return Err(Error::LengthMismatch {
            expected: data.len(),
            got: gvals.len(),
        });
    }
    if let Some(bad) = gvals.iter().position(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "weight {bad} is {}, weights must be positive",
            gvals[bad]
        )));
    }
    let kernel = GaussianKernel::new(h, data.dim())?;
    let index = KernelIndex::new(data);
    let (scale, s) = index.weighted_sum(&kernel, x, |l| 1.0 / gvals[l]);
    Ok(scale * s / data.len() as f64)
}

/// Scale `c` of a schedule: fixed, or the mean per-axis sample standard
/// deviation of the data it is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScaleChoice {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for ScaleChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ScaleChoice::Auto => s.serialize_str("auto"),
            ScaleChoice::Fixed(c) => s.serialize_f64(*c),
        }
    }
}

impl<'de> Deserialize<'de> for ScaleChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(c) => Ok(ScaleChoice::Fixed(c)),
            Raw::Str(s) if s == "auto" => Ok(ScaleChoice::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "bandwidth scale must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

/// The `bandwidth` block of an experiment config.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub c: ScaleChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl BandwidthSpec {
    /// Checks the exponent against dimension `d` without resolving the scale.
    pub fn validate(&self, d: usize) -> Result<()> {
        BandwidthSchedule::new(self.beta_for(d), 1.0, self.gamma.unwrap_or(1.0), d).map(|_| ())?;
        if let ScaleChoice::Fixed(c) = self.c {
            BandwidthSchedule::new(self.beta_for(d), c, self.gamma.unwrap_or(1.0), d)?;
        }
        Ok(())
    }

    fn beta_for(&self, d: usize) -> f64 {
        self.beta.unwrap_or_else(|| BandwidthSchedule::default_beta(d))
    }

    /// Schedule for `data`, resolving `c = "auto"` from its spread.
    pub fn resolve(&self, data: &Dataset) -> Result<BandwidthSchedule> {
        let c = match self.c {
            ScaleChoice::Fixed(c) => c,
            ScaleChoice::Auto => {
                let s = data.mean_axis_std();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            }
        };
        BandwidthSchedule::new(self.beta_for(data.dim()), c, self.gamma.unwrap_or(1.0), data.dim())
    }
}

/// h_n = c n^-β under the joint decay conditions on β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthSchedule {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub beta: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub c: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub gamma: f64,
    pub d: usize,
}

impl BandwidthSchedule {
    pub fn new(beta: f64, c: f64, gamma: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth scale c must be positive, got {c}"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness gamma must lie in (0, 1], got {gamma}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Schedule {
                condition: "shrinking bandwidth (beta > 0)",
                beta,
                limit: 0.0,
            });
        }
        let df = d as f64;
        let smooth = 1.0 / (df + 2.0 * gamma);
        if beta >= smooth {
            return Err(Error::Schedule {
                condition: "density-consistency condition beta < 1/(d + 2*gamma)",
                beta,
                limit: smooth,
            });
        }
        let cut = 1.0 / (4.0 * df + 4.0);
        if beta >= cut {
            return Err(Error::Schedule {
                condition: "boundary-cut lower bound beta < 1/(4d + 4)",
                beta,
                limit: cut,
            });
        }
        Ok(Self { beta, c, gamma, d })
    }

    pub fn default_beta(d: usize) -> f64 {
        1.0 / (4.0 * d as f64 + 5.0)
    }

    /// β = 1/(4d+5), γ = 1.
    pub fn default_for(d: usize, c: f64) -> Result<Self> {
        Self::new(Self::default_beta(d), c, 1.0, d)
    }

    pub fn bandwidth_at(&self, n: usize) -> f64 {
        self.c * (n.max(1) as f64).powf(-self.beta)
    }
}
