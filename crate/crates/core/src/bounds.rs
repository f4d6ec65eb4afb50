//! Pairwise similarity kernels induced by the soft nearest-neighbour and
//! plug-in error bounds, and the bound / cut objectives they define.
//!
//! For a labeling with crossing indicator θ_lm the bounds are
//!
//! * H: `(1/n²) Σ_{l<m} θ_lm K_h(X_l - X_m) (1/f̂(X_l) + 1/f̂(X_m))`
//! * G(a,b): `(2/n²) Σ_{l<m} θ_lm K_h(X_l - X_m) / (f̂(X_l)^a f̂(X_m)^b)`
//!
//! with V = G(1,1) and the plain Gaussian affinity G(0,0). The ordered
//! convention sums over `l != m` instead and is exactly twice as large.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Labeling};
use crate::density::{check_size, dist_sq, kde_at_points, GaussianKernel, KernelIndex};
use crate::error::{Error, Result};

/// Density estimates below this fraction of the largest one are raised to it.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Largest sample for which a dense similarity matrix is built.
pub const MAX_DENSE_POINTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// H_lm = K_h (1/f̂_l + 1/f̂_m).
    Nn,
    /// G_lm = K_h / (f̂_l^a f̂_m^b).
    Plugin { a: f64, b: f64 },
    /// A user-supplied affinity, treated like G.
    Custom,
}

impl KernelKind {
    pub fn plugin(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "density exponents must be nonnegative, got ({a}, {b})"
            )));
        }
        Ok(KernelKind::Plugin { a, b })
    }

    /// G(½,½).
    pub const HALF: KernelKind = KernelKind::Plugin { a: 0.5, b: 0.5 };
    /// V = G(1,1).
    pub const V: KernelKind = KernelKind::Plugin { a: 1.0, b: 1.0 };
    /// Plain Gaussian affinity G(0,0).
    pub const GAUSS: KernelKind = KernelKind::Plugin { a: 0.0, b: 0.0 };

    pub fn label(&self) -> String {
        match *self {
            KernelKind::Nn => "H".into(),
            KernelKind::Plugin { a, b } if a == 1.0 && b == 1.0 => "V".into(),
            KernelKind::Plugin { a, b } if a == 0.0 && b == 0.0 => "gauss".into(),
            KernelKind::Plugin { a, b } => format!("G({a},{b})"),
            KernelKind::Custom => "custom".into(),
        }
    }

    /// Density-normalization exponent of the induced Markov kernel.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            KernelKind::Plugin { a, .. } => Some(a),
            _ => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            KernelKind::Plugin { a, b } => a == b,
            _ => true,
        }
    }

    /// Factor turning `Σ_{l<m} θ_lm w_lm` into the bound.
    fn bound_factor(&self, convention: SumConvention) -> f64 {
        let base = match self {
            KernelKind::Nn => 1.0,
            _ => 2.0,
        };
        match convention {
            SumConvention::Unordered => base,
            SumConvention::Ordered => 2.0 * base,
        }
    }
}

/// Whether pairwise sums run over `l < m` or over all `l != m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumConvention {
    #[default]
    Unordered,
    Ordered,
}

impl SumConvention {
    pub fn name(&self) -> &'static str {
        match self {
            SumConvention::Unordered => "unordered",
            SumConvention::Ordered => "ordered",
        }
    }
}

/// Density values at the sample points after the relative floor.
#[derive(Debug, Clone, PartialEq)]
pub struct FlooredDensity {
    pub values: Vec<f64>,
    pub clamped_points: usize,
}

impl FlooredDensity {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        let top = values.iter().copied().fold(0.0_f64, f64::max);
        if !(top > 0.0 && top.is_finite()) {
            return Err(Error::InvalidParameter("density must be positive somewhere".into()));
        }
        let floor = DENSITY_FLOOR * top;
        let mut clamped_points = 0;
        for v in &mut values {
            if !(*v >= floor) {
                *v = floor;
                clamped_points += 1;
            }
        }
        Ok(Self { values, clamped_points })
    }

    /// Entries of an n×n matrix touching a clamped point.
    pub fn clamped_entries(&self) -> usize {
        let n = self.values.len();
        let c = self.clamped_points;
        n * n - (n - c) * (n - c)
    }

    /// Per-point factors `(u, v)` with `w_lm = K (u_l v_m [+ u_m v_l])`.
    fn factors(&self, kind: KernelKind) -> (Vec<f64>, Vec<f64>) {
        match kind {
            KernelKind::Nn => (
                self.values.iter().map(|f| 1.0 / f).collect(),
                vec![1.0; self.values.len()],
            ),
            KernelKind::Plugin { a, b } => (
                self.values.iter().map(|f| f.powf(-a)).collect(),
                self.values.iter().map(|f| f.powf(-b)).collect(),
            ),
            KernelKind::Custom => (vec![1.0; self.values.len()], vec![1.0; self.values.len()]),
        }
    }
}

/// A dense n×n similarity matrix with the diagonal self-affinity included.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    kind: KernelKind,
    values: Array2<f64>,
    h: Option<f64>,
    density: Option<FlooredDensity>,
}

impl SimilarityMatrix {
    /// Wraps precomputed weights; must be square, finite and nonnegative.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        Self::from_parts(KernelKind::Custom, values, None)
    }

    pub fn from_parts(kind: KernelKind, values: Array2<f64>, h: Option<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "similarity matrix must be square and nonempty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "similarity entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            kind,
            values,
            h,
            density: None,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn h(&self) -> Option<f64> {
        self.h
    }

    pub fn density(&self) -> Option<&FlooredDensity> {
        self.density.as_ref()
    }

    pub fn clamped_entries(&self) -> usize {
        self.density.as_ref().map_or(0, FlooredDensity::clamped_entries)
    }

    /// (w_lm + w_ml) / 2.
    #[inline]
    pub fn symmetric_entry(&self, l: usize, m: usize) -> f64 {
        0.5 * (self.values[[l, m]] + self.values[[m, l]])
    }
}

/// Similarity matrix of `kind` at bandwidth `h`, with f̂ estimated from the
/// sample at the same bandwidth.
pub fn similarity(data: &Dataset, h: f64, kind: KernelKind) -> Result<SimilarityMatrix> {
    check_size(data)?;
    let density = FlooredDensity::new(kde_at_points(data, h)?)?;
    similarity_with_density(data, h, kind, density)
}

/// H matrix.
pub fn nn_similarity(data: &Dataset, h: f64) -> Result<SimilarityMatrix> {
    similarity(data, h, KernelKind::Nn)
}

/// G(a,b) matrix; V for a = b = 1.
pub fn plugin_similarity(data: &Dataset, h: f64, a: f64, b: f64) -> Result<SimilarityMatrix> {
    similarity(data, h, KernelKind::plugin(a, b)?)
}

/// Similarity matrix using supplied density values (e.g. an oracle density).
pub fn similarity_with_density(
    data: &Dataset,
    h: f64,
    kind: KernelKind,
    density: FlooredDensity,
) -> Result<SimilarityMatrix> {
    let n = data.len();
    if n > MAX_DENSE_POINTS {
        return Err(Error::TooLarge {
            what: "dense similarity matrix",
            n,
            limit: MAX_DENSE_POINTS,
        });
    }
    if density.values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: density.values.len(),
        });
    }
    let kernel = GaussianKernel::new(h, data.dim())?;
    let (u, v) = density.factors(kind);
    let mut values = Array2::<f64>::zeros((n, n));
    values
        .as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(l, row)| {
            let xl = data.point(l);
            for (m, w) in row.iter_mut().enumerate() {
                let k = kernel.at_sq(dist_sq(xl, data.point(m)));
                *w = match kind {
                    KernelKind::Nn => k * (u[l] + u[m]),
                    _ => k * u[l] * v[m],
                };
            }
        });
    Ok(SimilarityMatrix {
        kind,
        values,
        h: Some(h),
        density: Some(density),
    })
}

fn check_labeling(sim: &SimilarityMatrix, labeling: &Labeling) -> Result<()> {
    labeling.ensure_len(sim.n())
}

/// Σ_{l<m} θ_lm (w_lm + w_ml)/2.
pub fn cut_objective(sim: &SimilarityMatrix, labeling: &Labeling) -> Result<f64> {
    check_labeling(sim, labeling)?;
    let n = sim.n();
    let mut total = 0.0;
    for l in 0..n {
        for m in l + 1..n {
            if labeling.theta(l, m) {
                total += sim.symmetric_entry(l, m);
            }
        }
    }
    Ok(total)
}

/// The error bound of the matrix's kernel kind under `convention`.
pub fn pairwise_bound(sim: &SimilarityMatrix, labeling: &Labeling, convention: SumConvention) -> Result<f64> {
    let n = sim.n() as f64;
    Ok(sim.kind.bound_factor(convention) * cut_objective(sim, labeling)? / (n * n))
}

/// `Σ_{l<m} θ_lm w_lm` accumulated without storing the matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseSum {
    pub kind: KernelKind,
    pub n: usize,
    pub h: f64,
    /// Σ_{l<m} θ_lm (w_lm + w_ml)/2.
    pub cut: f64,
    pub clamped_points: usize,
}

impl PairwiseSum {
    pub fn bound(&self, convention: SumConvention) -> f64 {
        let n = self.n as f64;
        self.kind.bound_factor(convention) * self.cut / (n * n)
    }
}

/// Streaming [`pairwise_bound`] with f̂ estimated at bandwidth `h`.
pub fn pairwise_sum(data: &Dataset, labeling: &Labeling, h: f64, kind: KernelKind) -> Result<PairwiseSum> {
    check_size(data)?;
    let density = FlooredDensity::new(kde_at_points(data, h)?)?;
    pairwise_sum_with_density(data, labeling, h, kind, &density)
}

/// Streaming sum with supplied density values. Kernel terms below
/// `exp(-50)` of the peak are skipped.
pub fn pairwise_sum_with_density(
    data: &Dataset,
    labeling: &Labeling,
    h: f64,
    kind: KernelKind,
    density: &FlooredDensity,
) -> Result<PairwiseSum> {
    labeling.ensure_len(data.len())?;
    if density.values.len() != data.len() {
        return Err(Error::LengthMismatch {
            expected: data.len(),
            got: density.values.len(),
        });
    }
    let kernel = GaussianKernel::new(h, data.dim())?;
    let (u, v) = density.factors(kind);
    let index = KernelIndex::new(data);
    let r2 = kernel.cutoff_sq(0.0);
    let per_point: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|p| {
            let mut s = 0.0;
            index.pairs_from(p, r2, |l, m, d2| {
                if labeling.theta(l, m) {
                    s += kernel.at_sq(d2) * (u[l] * v[m] + u[m] * v[l]);
                }
            });
            s
        })
        .collect();
    let raw: f64 = per_point.iter().sum();
    let cut = match kind {
        KernelKind::Nn => raw,
        _ => 0.5 * raw,
    };
    Ok(PairwiseSum {
        kind,
        n: data.len(),
        h,
        cut,
        clamped_points: density.clamped_points,
    })
}
