//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! implicit QL. When only a few eigenvectors of a large matrix are wanted
//! they come from inverse iteration on the tridiagonal form instead of
//! accumulating every rotation.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`symmetric_eigensolve`].
pub const SYMMETRY_TOL: f64 = 1e-10;

const MAX_QL_SWEEPS: usize = 60;
const MAX_INVERSE_STEPS: usize = 8;

/// The k smallest eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    /// Largest `‖M v - λ v‖` over the stored pairs.
    pub fn max_residual(&self, m: &Array2<f64>) -> f64 {
        let mv = m.dot(&self.eigenvectors);
        let mut worst = 0.0_f64;
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let r: f64 = mv
                .column(j)
                .iter()
                .zip(self.eigenvectors.column(j))
                .map(|(a, v)| (a - lambda * v).powi(2))
                .sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }
}

pub fn check_symmetric(m: &Array2<f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "matrix is {}x{}, not square",
            n,
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    for r in 0..n {
        for c in r + 1..n {
            let diff = (m[[r, c]] - m[[c, r]]).abs();
            if diff > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric { row: r, col: c, diff });
            }
        }
    }
    Ok(())
}

/// The `k` smallest eigenpairs of the symmetric matrix `m`, eigenvalues
/// ascending. Each eigenvector's largest-magnitude component is positive.
pub fn symmetric_eigensolve(m: &Array2<f64>, k: usize) -> Result<SpectralDecomposition> {
    check_symmetric(m)?;
    let n = m.nrows();
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    if n == 0 || k == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: Array2::zeros((n, 0)),
        });
    }
    let few = n > 64 && 8 * k <= n;
    solve(m, k, few)
}

fn solve(m: &Array2<f64>, k: usize, inverse_iteration: bool) -> Result<SpectralDecomposition> {
    let n = m.nrows();
    let tri = Tridiagonal::reduce(m);
    let norm = tri.norm();

    let (values, small): (Vec<f64>, Vec<Vec<f64>>) = if inverse_iteration {
        let mut d = tri.d.clone();
        let mut e = tri.e.clone();
        ql_implicit(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        d.truncate(k);
        let vecs = tri.inverse_vectors(&d, norm);
        (d, vecs)
    } else {
        let mut d = tri.d.clone();
        let mut e = tri.e.clone();
        let mut zt = vec![0.0; n * n];
        for i in 0..n {
            zt[i * n + i] = 1.0;
        }
        ql_implicit(&mut d, &mut e, Some(&mut zt))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        order.truncate(k);
        let vals = order.iter().map(|&i| d[i]).collect();
        let vecs = order.iter().map(|&i| zt[i * n..(i + 1) * n].to_vec()).collect();
        (vals, vecs)
    };

    let mut eigenvectors = Array2::<f64>::zeros((n, k));
    let columns: Vec<Vec<f64>> = small
        .into_par_iter()
        .map(|mut y| {
            tri.apply_q(&mut y);
            normalize_sign(&mut y);
            y
        })
        .collect();
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            eigenvectors[[i, j]] = *v;
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues: values,
        eigenvectors,
    })
}

fn normalize_sign(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut big = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[big].abs() {
            big = i;
        }
    }
    let s = if v[big] < 0.0 { -1.0 / norm } else { 1.0 / norm };
    for x in v.iter_mut() {
        *x *= s;
    }
}

/// `Qᵀ M Q = T` with T tridiagonal and Q a product of reflectors.
struct Tridiagonal {
    n: usize,
    d: Vec<f64>,
    /// e[i] = T[i][i+1]; e[n-1] = 0.
    e: Vec<f64>,
    /// Unit reflector for step k acting on components k+1.., if any.
    reflectors: Vec<Option<Vec<f64>>>,
}

impl Tridiagonal {
    fn reduce(m: &Array2<f64>) -> Self {
        let n = m.nrows();
        let mut a: Vec<f64> = m.iter().copied().collect();
        // symmetrize exactly so both triangles evolve identically
        for r in 0..n {
            for c in r + 1..n {
                let s = 0.5 * (a[r * n + c] + a[c * n + r]);
                a[r * n + c] = s;
                a[c * n + r] = s;
            }
        }
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n.saturating_sub(1) {
            d[k] = a[k * n + k];
            let x: Vec<f64> = (k + 1..n).map(|i| a[i * n + k]).collect();
            let tail: f64 = x[1..].iter().map(|v| v * v).sum();
            if tail == 0.0 {
                e[k] = x[0];
                reflectors.push(None);
                continue;
            }
            let norm = (x[0] * x[0] + tail).sqrt();
            let alpha = if x[0] > 0.0 { -norm } else { norm };
            let mut v = x;
            v[0] -= alpha;
            let vn = (v[0] * v[0] + tail).sqrt();
            for vi in &mut v {
                *vi /= vn;
            }
            e[k] = alpha;

            // trailing block A22 <- H A22 H with H = I - 2 v vᵀ
            let m_sz = n - k - 1;
            let off = k + 1;
            let p: Vec<f64> = (0..m_sz)
                .into_par_iter()
                .map(|i| {
                    let row = &a[(off + i) * n + off..(off + i) * n + n];
                    row.iter().zip(&v).map(|(x, y)| x * y).sum()
                })
                .collect();
            let kk: f64 = p.iter().zip(&v).map(|(x, y)| x * y).sum();
            let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kk * vi).collect();
            a[off * n..].par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let (vi, wi) = (v[i], w[i]);
                for (j, x) in row[off..].iter_mut().enumerate() {
                    *x -= 2.0 * (vi * w[j] + wi * v[j]);
                }
            });
            reflectors.push(Some(v));
        }
        if n > 0 {
            d[n - 1] = a[(n - 1) * n + (n - 1)];
        }
        Self { n, d, e, reflectors }
    }

    fn norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.d[i].abs() + self.e[i].abs() + if i > 0 { self.e[i - 1].abs() } else { 0.0 })
            .fold(0.0, f64::max)
    }

    /// y <- Q y.
    fn apply_q(&self, y: &mut [f64]) {
        for (k, r) in self.reflectors.iter().enumerate().rev() {
            if let Some(v) = r {
                let seg = &mut y[k + 1..];
                let dot: f64 = seg.iter().zip(v).map(|(a, b)| a * b).sum();
                for (s, vi) in seg.iter_mut().zip(v) {
                    *s -= 2.0 * dot * vi;
                }
            }
        }
    }

    /// Eigenvectors of T for the ascending `values`, by inverse iteration
    /// with reorthogonalization inside clusters of close eigenvalues.
    fn inverse_vectors(&self, values: &[f64], norm: f64) -> Vec<Vec<f64>> {
        let n = self.n;
        let scale = norm.max(f64::MIN_POSITIVE);
        let pivmin = f64::EPSILON * scale;
        let cluster_gap = 1e-3 * scale;
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;
        for (j, &lambda) in values.iter().enumerate() {
            if j > 0 && lambda - values[j - 1] > cluster_gap {
                cluster_start = j;
            }
            // distinct shifts keep the iteration from collapsing onto one
            // vector of a degenerate eigenspace
            let shift = lambda + (j - cluster_start) as f64 * 4.0 * pivmin;
            let mut x = start_vector(n, j);
            for step in 0..MAX_INVERSE_STEPS {
                self.solve_shifted(shift, &mut x, pivmin);
                for prev in &out[cluster_start..j] {
                    orthogonalize(&mut x, prev);
                    orthogonalize(&mut x, prev);
                }
                let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(nrm > 0.0 && nrm.is_finite()) {
                    x = start_vector(n, j + 7 * (step + 1));
                    continue;
                }
                for v in &mut x {
                    *v /= nrm;
                }
                if step >= 1 && self.residual(lambda, &x) <= 1e-13 * scale * (n as f64).sqrt() {
                    break;
                }
            }
            out.push(x);
        }
        out
    }

    fn residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            let mut t = (self.d[i] - lambda) * x[i];
            if i > 0 {
                t += self.e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                t += self.e[i] * x[i + 1];
            }
            s += t * t;
        }
        s.sqrt()
    }

    /// Solves (T - σI) y = b in place by LU with partial pivoting; tiny
    /// pivots are replaced by `pivmin`.
    fn solve_shifted(&self, sigma: f64, b: &mut [f64], pivmin: f64) {
        let n = self.n;
        if n == 1 {
            let a = self.d[0] - sigma;
            b[0] /= if a.abs() < pivmin { pivmin } else { a };
            return;
        }
        let mut a: Vec<f64> = self.d.iter().map(|v| v - sigma).collect();
        let mut dl: Vec<f64> = self.e[..n - 1].to_vec();
        let mut du: Vec<f64> = self.e[..n - 1].to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n - 1];
        for i in 0..n - 1 {
            if a[i].abs() >= dl[i].abs() {
                if a[i].abs() < pivmin {
                    a[i] = if a[i] < 0.0 { -pivmin } else { pivmin };
                }
                let fact = dl[i] / a[i];
                dl[i] = fact;
                a[i + 1] -= fact * du[i];
            } else {
                let fact = a[i] / dl[i];
                a[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = a[i + 1];
                a[i + 1] = temp - fact * a[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swap[i] = true;
            }
        }
        if a[n - 1].abs() < pivmin {
            a[n - 1] = if a[n - 1] < 0.0 { -pivmin } else { pivmin };
        }
        for i in 0..n - 1 {
            if swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= dl[i] * b[i];
        }
        b[n - 1] /= a[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / a[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / a[i];
        }
        // keep magnitudes bounded between steps
        let big = b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if big > 1e150 {
            for v in b.iter_mut() {
                *v /= big;
            }
        }
    }
}

fn orthogonalize(x: &mut [f64], against: &[f64]) {
    let dot: f64 = x.iter().zip(against).map(|(a, b)| a * b).sum();
    for (xi, ai) in x.iter_mut().zip(against) {
        *xi -= dot * ai;
    }
}

/// Deterministic pseudo-random start vector in (-1, 1)^n.
fn start_vector(n: usize, j: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let z = crate::data::derive_seed(j as u64 + 0x51_7CC1, i as u64);
            (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

/// Implicit QL with Wilkinson shifts on (d, e). Rotations are applied to the
/// rows of `zt` (the transposed eigenvector matrix) when given.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut Vec<f64>>) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        m
    }

    fn frob(m: &Array2<f64>) -> f64 {
        m.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn assert_orthonormal(v: &Array2<f64>, tol: f64) {
        let g = v.t().dot(v);
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[[i, j]] - want).abs() < tol, "gram[{i},{j}] = {}", g[[i, j]]);
            }
        }
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let s = symmetric_eigensolve(&Array2::eye(3), 3).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert_orthonormal(&s.eigenvectors, 1e-14);
    }

    #[test]
    fn two_by_two() {
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let s = symmetric_eigensolve(&m, 2).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 3.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.eigenvectors[[0, 1]] - r).abs() < 1e-14);
        assert!((s.eigenvectors[[1, 1]] - r).abs() < 1e-14);
    }

    #[test]
    fn random_residuals_are_small() {
        for seed in 0..3 {
            let m = random_symmetric(50, seed);
            let s = symmetric_eigensolve(&m, 50).unwrap();
            assert!(s.max_residual(&m) <= 1e-8 * frob(&m));
            assert_orthonormal(&s.eigenvectors, 1e-12);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let trace: f64 = (0..50).map(|i| m[[i, i]]).sum();
            assert!((s.eigenvalues.iter().sum::<f64>() - trace).abs() < 1e-10);
        }
    }

    #[test]
    fn both_paths_agree() {
        let m = random_symmetric(200, 9);
        let full = solve(&m, 10, false).unwrap();
        let few = solve(&m, 10, true).unwrap();
        for j in 0..10 {
            assert!((full.eigenvalues[j] - few.eigenvalues[j]).abs() < 1e-12);
        }
        assert!(few.max_residual(&m) <= 1e-10 * frob(&m));
        assert_orthonormal(&few.eigenvectors, 1e-10);
        let diff = (&full.eigenvectors - &few.eigenvectors)
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()));
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn degenerate_spectrum_by_inverse_iteration() {
        // block diagonal: three copies of the same 100x100 block
        let b = random_symmetric(100, 4);
        let mut m = Array2::zeros((300, 300));
        for k in 0..3 {
            m.slice_mut(ndarray::s![k * 100..(k + 1) * 100, k * 100..(k + 1) * 100])
                .assign(&b);
        }
        let few = solve(&m, 9, true).unwrap();
        let full = solve(&m, 9, false).unwrap();
        for j in 0..9 {
            assert!((full.eigenvalues[j] - few.eigenvalues[j]).abs() < 1e-12);
        }
        assert!(few.max_residual(&m) <= 1e-10 * frob(&m));
        assert_orthonormal(&few.eigenvectors, 1e-10);
    }

    #[test]
    fn output_is_deterministic() {
        let m = random_symmetric(120, 2);
        let a = symmetric_eigensolve(&m, 5).unwrap();
        let b = symmetric_eigensolve(&m, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = array![[1.0, 2.0], [2.1, 1.0]];
        assert!(matches!(symmetric_eigensolve(&m, 1), Err(Error::NotSymmetric { .. })));
        assert!(symmetric_eigensolve(&Array2::eye(2), 3).is_err());
    }

    #[test]
    fn diagonal_and_tiny_matrices() {
        let m = array![[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        let s = symmetric_eigensolve(&m, 2).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 2.0]);
        assert_eq!(s.eigenvectors[[1, 0]], 1.0);
        let one = symmetric_eigensolve(&array![[5.0]], 1).unwrap();
        assert_eq!(one.eigenvalues, vec![5.0]);
    }
}
