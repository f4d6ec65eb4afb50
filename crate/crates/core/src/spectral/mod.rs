//! Graph operators built from similarity matrices: Markov normalization,
//! the normalized Laplacian, spectral embeddings, spectral clustering and
//! diffusion coordinates.

pub mod eigen;
pub mod kmeans;
pub mod mincut;

use ndarray::{Array2, Axis};

use crate::bounds::SimilarityMatrix;
use crate::data::Labeling;
use crate::error::{Error, Result};

pub use eigen::{symmetric_eigensolve, SpectralDecomposition};
pub use kmeans::{kmeans, KMeansResult};
pub use mincut::{exhaustive_min_cut, normalized_cut, MinCutResult};

/// Largest graph handled by the dense spectral routines.
pub const MAX_SPECTRAL_POINTS: usize = 4000;

fn check_spectral_size(n: usize) -> Result<()> {
    if n > MAX_SPECTRAL_POINTS {
        return Err(Error::TooLarge {
            what: "spectral decomposition",
            n,
            limit: MAX_SPECTRAL_POINTS,
        });
    }
    Ok(())
}

/// A row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    pub p: Array2<f64>,
    /// Density-normalization exponent of the affinity it came from.
    pub alpha: Option<f64>,
}

/// Row sums of the symmetrized weights; zero rows are rejected.
pub fn degrees(sim: &SimilarityMatrix) -> Result<Vec<f64>> {
    let deg = mincut::symmetric_degrees(sim);
    if let Some(row) = deg.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::ZeroDegree(row));
    }
    Ok(deg)
}

/// p(x, y) = w(x, y) / Σ_y w(x, y).
pub fn row_normalize(sim: &SimilarityMatrix) -> Result<MarkovKernel> {
    let mut p = sim.values().clone();
    for (row, mut r) in p.axis_iter_mut(Axis(0)).enumerate() {
        let s: f64 = r.sum();
        if !(s > 0.0) {
            return Err(Error::ZeroDegree(row));
        }
        r.mapv_inplace(|v| v / s);
    }
    Ok(MarkovKernel {
        p,
        alpha: sim.kind().alpha(),
    })
}

/// I - D^{-1/2} W D^{-1/2} for the symmetrized weights W.
pub fn normalized_laplacian(sim: &SimilarityMatrix) -> Result<Array2<f64>> {
    let n = sim.n();
    let deg = degrees(sim)?;
    let inv: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(Array2::from_shape_fn((n, n), |(l, m)| {
        let a = sim.symmetric_entry(l, m) * inv[l] * inv[m];
        if l == m {
            1.0 - a
        } else {
            -a
        }
    }))
}

/// The `k` smallest eigenpairs of the normalized Laplacian.
pub fn spectral_embedding(sim: &SimilarityMatrix, k: usize) -> Result<SpectralDecomposition> {
    check_spectral_size(sim.n())?;
    symmetric_eigensolve(&normalized_laplacian(sim)?, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralClustering {
    /// Classes renamed in order of first appearance.
    pub labeling: Labeling,
    pub eigenvalues: Vec<f64>,
    pub kmeans_inertia: f64,
}

/// Embeds points by the `q` smallest Laplacian eigenvectors, scales each
/// embedded row to unit length and splits the rows with k-means.
pub fn spectral_cluster(sim: &SimilarityMatrix, q: usize, seed: u64) -> Result<SpectralClustering> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!(
            "spectral clustering needs q >= 2, got {q}"
        )));
    }
    let n = sim.n();
    if q > n {
        return Err(Error::InvalidParameter(format!("q = {q} exceeds the {n} points")));
    }
    let dec = spectral_embedding(sim, q)?;
    let mut rows = dec.eigenvectors.clone();
    for mut r in rows.axis_iter_mut(Axis(0)) {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            r.mapv_inplace(|v| v / norm);
        }
    }
    let km = kmeans(&rows, q, seed)?;
    Ok(SpectralClustering {
        labeling: Labeling::new(km.labels, q)?.canonical(),
        eigenvalues: dec.eigenvalues,
        kmeans_inertia: km.inertia,
    })
}

/// Right eigenvectors of the Markov kernel D^{-1} W, skipping the constant one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMap {
    /// Markov eigenvalues, descending, trivial one excluded.
    pub eigenvalues: Vec<f64>,
    /// n×k coordinates ψ_1..ψ_k.
    pub coordinates: Array2<f64>,
    pub alpha: Option<f64>,
}

pub fn diffusion_coordinates(sim: &SimilarityMatrix, k: usize) -> Result<DiffusionMap> {
    let n = sim.n();
    if k + 1 > n {
        return Err(Error::InvalidParameter(format!(
            "{k} nontrivial coordinates need more than {n} points"
        )));
    }
    let deg = degrees(sim)?;
    let dec = spectral_embedding(sim, k + 1)?;
    let mut coordinates = Array2::zeros((n, k));
    for j in 0..k {
        for l in 0..n {
            coordinates[[l, j]] = dec.eigenvectors[[l, j + 1]] / deg[l].sqrt();
        }
    }
    Ok(DiffusionMap {
        eigenvalues: dec.eigenvalues[1..].iter().map(|v| 1.0 - v).collect(),
        coordinates,
        alpha: sim.kind().alpha(),
    })
}

/// Orthonormal basis of the column span (modified Gram-Schmidt, twice).
fn orthonormal_columns(a: &Array2<f64>) -> Result<Array2<f64>> {
    let mut q = a.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let dot = q.column(i).dot(&q.column(j));
                let qi = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-dot, &qi);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if !(norm > 1e-300) {
            return Err(Error::InvalidParameter(format!("column {j} is linearly dependent")));
        }
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(q)
}

/// Cosine of the largest principal angle between the column spans of `a`
/// and `b` (1 when one span contains the other).
pub fn subspace_alignment(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::LengthMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let qa = orthonormal_columns(a)?;
    let qb = orthonormal_columns(b)?;
    let m = qa.t().dot(&qb);
    // singular values of m are square roots of the eigenvalues of the smaller Gram matrix
    let gram = if m.nrows() <= m.ncols() {
        m.dot(&m.t())
    } else {
        m.t().dot(&m)
    };
    let gram = (&gram + &gram.t()) * 0.5;
    let dec = symmetric_eigensolve(&gram, 1)?;
    Ok(dec.eigenvalues[0].clamp(0.0, 1.0).sqrt())
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &Labeling, b: &Labeling) -> Result<f64> {
    a.ensure_len(b.len())?;
    let n = a.len();
    let mut table = vec![vec![0u64; b.q()]; a.q()];
    for l in 0..n {
        table[a.label(l)][b.label(l)] += 1;
    }
    let pairs = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let rows: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..b.q()).map(|j| pairs(table.iter().map(|r| r[j]).sum())).sum();
    let total = pairs(n as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
