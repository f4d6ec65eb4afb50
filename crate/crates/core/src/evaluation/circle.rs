//! Diffusion coordinates of a non-uniformly sampled circle, compared with the
//! first Laplace–Beltrami eigenfunctions cos θ and sin θ.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::convergence::{ConvergenceRecord, ConvergenceReport};
use crate::bounds::{similarity, KernelKind};
use crate::data::{derive_seed, Dataset, Domain};
use crate::density::BandwidthSpec;
use crate::error::{Error, Result};
use crate::spectral::{diffusion_coordinates, subspace_alignment};

/// Angles on the unit circle with density ∝ 1 + a·cos θ, with `a` in [0, 1).
pub fn sample_circle(n: usize, amplitude: f64, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::InvalidParameter(format!(
            "amplitude must lie in [0, 1), got {amplitude}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angles = Vec::with_capacity(n);
    while angles.len() < n {
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        if rng.random::<f64>() * (1.0 + amplitude) < 1.0 + amplitude * t.cos() {
            angles.push(t);
        }
    }
    let rows: Vec<Vec<f64>> = angles.iter().map(|t| vec![t.cos(), t.sin()]).collect();
    Ok((Dataset::from_rows(Domain::new(2, 1.0)?, &rows)?, angles))
}

/// Alignment of the first two nontrivial diffusion coordinates with
/// span{cos θ, sin θ}, one record per α with `reference` holding α. The
/// affinity for α is K/(f̂^α f̂^α).
pub fn circle_diffusion(
    amplitude: f64,
    alphas: &[f64],
    bandwidth: &BandwidthSpec,
    n_list: &[usize],
    seeds: &[u64],
) -> Result<ConvergenceReport> {
    bandwidth.validate(2)?;
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("at least one alpha is required".into()));
    }
    let mut records = Vec::new();
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() || ns[0] < 4 || seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "need sample sizes of at least 4 and one seed".into(),
        ));
    }
    for &n in &ns {
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();
        for &seed in &seeds {
            let (data, angles) = sample_circle(n, amplitude, derive_seed(seed, n as u64))?;
            let h = bandwidth.resolve(&data)?.bandwidth_at(n);
            let truth = Array2::from_shape_fn((n, 2), |(l, j)| if j == 0 { angles[l].cos() } else { angles[l].sin() });
            let mut alphas = alphas.to_vec();
            alphas.sort_by(f64::total_cmp);
            for alpha in alphas {
                let sim = similarity(&data, h, KernelKind::plugin(alpha, alpha)?)?;
                let map = diffusion_coordinates(&sim, 2)?;
                records.push(ConvergenceRecord {
                    n,
                    h,
                    seed,
                    value: subspace_alignment(&map.coordinates, &truth)?,
                    reference: alpha,
                });
            }
        }
    }
    Ok(ConvergenceReport {
        experiment: "diffusion".into(),
        records,
        fitted_constant: None,
        convention: None,
        conventions: Vec::new(),
    })
}
