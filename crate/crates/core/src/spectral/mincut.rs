//! Exhaustive two-way cut enumeration for small graphs.

use crate::bounds::SimilarityMatrix;
use crate::data::Labeling;
use crate::error::{Error, Result};

/// Largest graph the enumeration accepts.
pub const MAX_EXHAUSTIVE_POINTS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct MinCutResult {
    /// Minimizer of the plain cut Σ_{l<m} θ_lm w_lm.
    pub labeling: Labeling,
    pub cut: f64,
    /// Minimizer of the normalized cut.
    pub ncut_labeling: Labeling,
    pub ncut: f64,
    /// Number of admissible partitions examined.
    pub partitions: usize,
}

/// Symmetrized degrees, self-affinity included.
pub(crate) fn symmetric_degrees(sim: &SimilarityMatrix) -> Vec<f64> {
    let n = sim.n();
    (0..n)
        .map(|l| (0..n).map(|m| sim.symmetric_entry(l, m)).sum())
        .collect()
}

/// Σ_k cut(A_k, A_k^c) / vol(A_k) with vol the sum of degrees.
pub fn normalized_cut(sim: &SimilarityMatrix, labeling: &Labeling) -> Result<f64> {
    labeling.ensure_len(sim.n())?;
    let deg = symmetric_degrees(sim);
    let q = labeling.q();
    let mut vol = vec![0.0; q];
    let mut cut = vec![0.0; q];
    for l in 0..sim.n() {
        vol[labeling.label(l)] += deg[l];
        for m in 0..sim.n() {
            if labeling.theta(l, m) {
                cut[labeling.label(l)] += sim.symmetric_entry(l, m);
            }
        }
    }
    let mut total = 0.0;
    for k in 0..q {
        if vol[k] > 0.0 {
            total += cut[k] / vol[k];
        } else if cut[k] > 0.0 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(total)
}

/// Enumerates every two-way partition whose parts hold at least `min_size`
/// points and returns the minimizers of the cut and of the normalized cut.
/// Point 0 always lands in the first part; ties keep the first partition met.
pub fn exhaustive_min_cut(sim: &SimilarityMatrix, q: usize, min_size: usize) -> Result<MinCutResult> {
    let n = sim.n();
    if q != 2 {
        return Err(Error::InvalidParameter(format!(
            "exhaustive cuts are two-way only, got q = {q}"
        )));
    }
    if n > MAX_EXHAUSTIVE_POINTS {
        return Err(Error::TooLarge {
            what: "exhaustive min-cut",
            n,
            limit: MAX_EXHAUSTIVE_POINTS,
        });
    }
    if min_size == 0 || 2 * min_size > n {
        return Err(Error::InvalidParameter(format!(
            "min_size {min_size} admits no two-way partition of {n} points"
        )));
    }
    let w: Vec<Vec<f64>> = (0..n)
        .map(|l| (0..n).map(|m| sim.symmetric_entry(l, m)).collect())
        .collect();
    let deg = symmetric_degrees(sim);

    let mut best_cut = (f64::INFINITY, 0u32);
    let mut best_ncut = (f64::INFINITY, 0u32);
    let mut partitions = 0;
    for mask in 1u32..(1u32 << (n - 1)) {
        let side = |l: usize| l > 0 && mask & (1 << (l - 1)) != 0;
        let size_b = mask.count_ones() as usize;
        if size_b < min_size || n - size_b < min_size {
            continue;
        }
        partitions += 1;
        let mut cut = 0.0;
        let mut vol_b = 0.0;
        let mut vol_a = 0.0;
        for l in 0..n {
            if side(l) {
                vol_b += deg[l];
                continue;
            }
            vol_a += deg[l];
            for m in 1..n {
                if side(m) {
                    cut += w[l][m];
                }
            }
        }
        if cut < best_cut.0 {
            best_cut = (cut, mask);
        }
        let ncut = if vol_a > 0.0 && vol_b > 0.0 {
            cut / vol_a + cut / vol_b
        } else {
            f64::INFINITY
        };
        if ncut < best_ncut.0 {
            best_ncut = (ncut, mask);
        }
    }
    let to_labeling = |mask: u32| {
        let labels = (0..n)
            .map(|l| usize::from(l > 0 && mask & (1 << (l - 1)) != 0))
            .collect();
        Labeling::new(labels, 2)
    };
    Ok(MinCutResult {
        labeling: to_labeling(best_cut.1)?,
        cut: best_cut.0,
        ncut_labeling: to_labeling(best_ncut.1)?,
        ncut: best_ncut.0,
        partitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{cut_objective, similarity, KernelKind};
    use crate::data::Dataset;
    use ndarray::array;

    #[test]
    fn two_triangles_split_naturally() {
        let rows = vec![
            vec![-1.0, 0.0],
            vec![-1.1, 0.1],
            vec![-0.9, 0.1],
            vec![1.0, 0.0],
            vec![1.1, -0.1],
            vec![0.9, -0.1],
        ];
        let data = Dataset::from_rows(crate::data::Domain::new(2, 2.0).unwrap(), &rows).unwrap();
        for kind in [KernelKind::Nn, KernelKind::HALF, KernelKind::V, KernelKind::GAUSS] {
            let sim = similarity(&data, 0.3, kind).unwrap();
            let r = exhaustive_min_cut(&sim, 2, 1).unwrap();
            assert_eq!(r.labeling.as_slice(), &[0, 0, 0, 1, 1, 1], "{}", kind.label());
            assert_eq!(r.ncut_labeling.as_slice(), &[0, 0, 0, 1, 1, 1]);
            assert!((r.cut - cut_objective(&sim, &r.labeling).unwrap()).abs() < 1e-15);
            assert_eq!(r.partitions, 31);
        }
    }

    #[test]
    fn two_points_have_one_partition() {
        let sim = SimilarityMatrix::from_values(array![[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let r = exhaustive_min_cut(&sim, 2, 1).unwrap();
        assert_eq!(r.partitions, 1);
        assert_eq!(r.labeling.as_slice(), &[0, 1]);
        assert_eq!(r.cut, 0.5);
        assert_eq!(r.ncut, 0.5 / 1.5 * 2.0);
    }

    #[test]
    fn duplicates_are_never_separated() {
        let data = Dataset::from_values_1d(&[0.0, 0.0, 0.4, 2.0, 2.3, 2.3, 1.1]).unwrap();
        let sim = similarity(&data, 0.5, KernelKind::HALF).unwrap();
        for min_size in 1..=3 {
            let r = exhaustive_min_cut(&sim, 2, min_size).unwrap();
            assert_eq!(r.labeling.label(0), r.labeling.label(1));
            assert_eq!(r.labeling.label(4), r.labeling.label(5));
        }
    }

    #[test]
    fn limits_are_enforced() {
        let sim = SimilarityMatrix::from_values(ndarray::Array2::ones((15, 15))).unwrap();
        assert!(matches!(exhaustive_min_cut(&sim, 2, 1), Err(Error::TooLarge { .. })));
        let sim = SimilarityMatrix::from_values(ndarray::Array2::ones((4, 4))).unwrap();
        assert!(exhaustive_min_cut(&sim, 2, 3).is_err());
        assert!(exhaustive_min_cut(&sim, 3, 1).is_err());
    }

    #[test]
    fn normalized_cut_matches_enumeration() {
        let data = Dataset::from_values_1d(&[0.0, 0.2, 0.5, 1.7, 2.0, 2.6]).unwrap();
        let sim = similarity(&data, 0.6, KernelKind::V).unwrap();
        let r = exhaustive_min_cut(&sim, 2, 2).unwrap();
        assert!((normalized_cut(&sim, &r.ncut_labeling).unwrap() - r.ncut).abs() < 1e-12);
    }
}
