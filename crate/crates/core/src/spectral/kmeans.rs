//! k-means with k-means++ seeding and Lloyd iterations, best of several
//! seeded restarts.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::derive_seed;
use crate::density::dist_sq;
use crate::error::{Error, Result};

pub const RESTARTS: usize = 10;
pub const MAX_ITERATIONS: usize = 300;
pub const RELATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster index of every row, in `0..k`.
    pub labels: Vec<usize>,
    /// k×d centers.
    pub centers: Array2<f64>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub history: Vec<f64>,
}

/// Number of distinct rows.
pub fn distinct_rows(points: &Array2<f64>) -> usize {
    let mut rows: Vec<Vec<u64>> = points
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect())
        .collect();
    rows.sort_unstable();
    rows.dedup();
    rows.len()
}

pub fn kmeans(points: &Array2<f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("k-means input has non-finite entries".into()));
    }
    let distinct = distinct_rows(points);
    if k > distinct || n == 0 {
        return Err(Error::TooFewDistinct { k, distinct });
    }
    let points = points.as_standard_layout();
    let flat = points.as_slice().expect("standard layout");
    let d = points.ncols();
    let row = |i: usize| &flat[i * d..(i + 1) * d];

    let mut best: Option<KMeansResult> = None;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, restart as u64));
        let mut centers = plus_plus(n, d, k, &row, &mut rng);
        let mut labels = vec![0; n];
        let mut history = Vec::new();
        let mut prev = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let inertia = assign(n, k, d, &row, &centers, &mut labels);
            history.push(inertia);
            let done = inertia == 0.0 || (prev - inertia) <= RELATIVE_TOL * prev;
            prev = inertia;
            update(n, k, d, &row, &mut centers, &labels);
            if done {
                break;
            }
        }
        let inertia = assign(n, k, d, &row, &centers, &mut labels);
        if inertia < *history.last().unwrap() {
            history.push(inertia);
        }
        let better = best.as_ref().is_none_or(|b| inertia < b.inertia);
        if better {
            best = Some(KMeansResult {
                labels,
                centers: Array2::from_shape_vec((k, d), centers).expect("shape"),
                inertia,
                history,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus<'a, R: Rng>(n: usize, d: usize, k: usize, row: &impl Fn(usize) -> &'a [f64], rng: &mut R) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k * d);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| dist_sq(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if target < acc {
                break;
            }
        }
        let c = pick.expect("k does not exceed distinct points");
        centers.extend_from_slice(row(c));
        let new = row(c);
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(dist_sq(row(i), new));
        }
    }
    centers
}

fn assign<'a>(
    n: usize,
    k: usize,
    d: usize,
    row: &impl Fn(usize) -> &'a [f64],
    centers: &[f64],
    labels: &mut [usize],
) -> f64 {
    let mut inertia = 0.0;
    for i in 0..n {
        let x = row(i);
        let mut best = (f64::INFINITY, 0);
        for c in 0..k {
            let dd = dist_sq(x, &centers[c * d..(c + 1) * d]);
            if dd < best.0 {
                best = (dd, c);
            }
        }
        labels[i] = best.1;
        inertia += best.0;
    }
    inertia
}

/// Moves centers to cluster means; an empty cluster takes the point farthest
/// from its current center.
fn update<'a>(n: usize, k: usize, d: usize, row: &impl Fn(usize) -> &'a [f64], centers: &mut [f64], labels: &[usize]) {
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for i in 0..n {
        let c = labels[i];
        counts[c] += 1;
        for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(row(i)) {
            *s += v;
        }
    }
    let mut taken = vec![false; n];
    for c in 0..k {
        if counts[c] > 0 {
            for j in 0..d {
                centers[c * d + j] = sums[c * d + j] / counts[c] as f64;
            }
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            let mut far = (-1.0, 0);
            for i in 0..n {
                if taken[i] {
                    continue;
                }
                let l = labels[i];
                let dd = dist_sq(row(i), &centers[l * d..(l + 1) * d]);
                if dd > far.0 {
                    far = (dd, i);
                }
            }
            taken[far.1] = true;
            let p = row(far.1).to_vec();
            centers[c * d..(c + 1) * d].copy_from_slice(&p);
        }
    }
}
