//! Independent reference computations used by the integration tests.
//!
//! Everything here is written straight from the math on plain `Vec`s and
//! shares no code with the library beyond its public data types.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod cases;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues and eigenvectors (as columns of the second result).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Normalize, concatenate, standardize (population sd), then project onto
/// the top `target` eigenvectors of the sample covariance, each signed so
/// its largest-magnitude coordinate is positive.
pub fn append_reference(words: &[Vec<f64>], affect: &[Vec<f64>], target: usize) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = words
        .iter()
        .zip(affect)
        .map(|(w, a)| {
            let mut r = unit(w);
            r.extend(unit(a));
            r
        })
        .collect();
    let std = standardize_reference(&rows);
    pca_project_reference(&std, target)
}

pub fn standardize_reference(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let w = rows[0].len();
    let mut out = rows.to_vec();
    for j in 0..w {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for (o, r) in out.iter_mut().zip(rows) {
            o[j] = if sd <= 1e-12 * mean.abs().max(1.0) {
                0.0
            } else {
                (r[j] - mean) / sd
            };
        }
    }
    out
}

/// Sorted (descending) eigenpairs of the sample covariance of `rows`.
pub fn covariance_eigen(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let w = rows[0].len();
    let means: Vec<f64> = (0..w)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; w]; w];
    for a in 0..w {
        for b in 0..w {
            cov[a][b] = rows
                .iter()
                .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
                .sum::<f64>()
                / (n - 1) as f64;
        }
    }
    let (vals, vecs) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..w).collect();
    order.sort_by(|&x, &y| vals[y].partial_cmp(&vals[x]).unwrap());
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let axes = order
        .iter()
        .map(|&i| {
            let mut axis: Vec<f64> = (0..w).map(|r| vecs[r][i]).collect();
            let big = (0..w).fold(0, |b, k| if axis[k].abs() > axis[b].abs() { k } else { b });
            if axis[big] < 0.0 {
                axis.iter_mut().for_each(|x| *x = -*x);
            }
            axis
        })
        .collect();
    (sorted_vals, means, axes)
}

pub fn pca_project_reference(rows: &[Vec<f64>], target: usize) -> Vec<Vec<f64>> {
    let (_, means, axes) = covariance_eigen(rows);
    rows.iter()
        .map(|r| {
            axes[..target]
                .iter()
                .map(|ax| {
                    r.iter()
                        .zip(&means)
                        .zip(ax)
                        .map(|((x, m), a)| (x - m) * a)
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Fixed point of the retrofit update, solved directly:
/// `(sum_j b_ij + alpha) q_i - sum_j b_ij q_j = alpha q̂_i` for words with
/// neighbors, `q_i = q̂_i` otherwise.
pub fn retrofit_fixed_point(
    q_hat: &[Vec<f64>],
    weights: &[Vec<(usize, f64)>],
    alpha: f64,
) -> Vec<Vec<f64>> {
    let n = q_hat.len();
    let d = q_hat[0].len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        if weights[i].is_empty() {
            a[i][i] = 1.0;
            continue;
        }
        a[i][i] = alpha + weights[i].iter().map(|w| w.1).sum::<f64>();
        for &(j, b) in &weights[i] {
            a[i][j] -= b;
        }
    }
    let mut out = vec![vec![0.0; d]; n];
    for k in 0..d {
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                if weights[i].is_empty() {
                    q_hat[i][k]
                } else {
                    alpha * q_hat[i][k]
                }
            })
            .collect();
        let x = solve_linear(a.clone(), rhs);
        for i in 0..n {
            out[i][k] = x[i];
        }
    }
    out
}

pub fn cosine_reference(u: &[f64], v: &[f64]) -> f64 {
    let uv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let uu: f64 = u.iter().map(|a| a * a).sum();
    let vv: f64 = v.iter().map(|a| a * a).sum();
    uv / (uu * vv).sqrt()
}

/// Every candidate scored and fully sorted by (cosine desc, index asc).
pub fn knn_reference(
    rows: &[Vec<f64>],
    query: usize,
    k: usize,
    candidates: &[usize],
) -> Vec<usize> {
    let mut scored: Vec<(usize, f64)> = candidates
        .iter()
        .filter(|&&c| c != query)
        .map(|&c| (c, cosine_reference(&rows[query], &rows[c])))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|p| p.0).collect()
}

/// Ranks by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn ranks_reference(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| {
            let less = xs.iter().filter(|y| *y < x).count() as f64;
            let equal = xs.iter().filter(|y| *y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_reference(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks_reference(xs), ranks_reference(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

/// Exhaustive PN@k / GN@k for dimension `f`: `(pn, gn, evaluated)`.
/// `affect[i]` is `None` for words outside the lexicon.
pub fn noise_reference(
    rows: &[Vec<f64>],
    affect: &[Option<Vec<f64>>],
    k: usize,
    f: usize,
    neutral: f64,
) -> (f64, f64, usize) {
    let pool: Vec<usize> = (0..rows.len()).filter(|&i| affect[i].is_some()).collect();
    let sign = |v: f64| {
        if v > neutral {
            1
        } else if v < neutral {
            -1
        } else {
            0
        }
    };
    let (mut pn, mut gn, mut evaluated) = (0.0, 0.0, 0);
    for &q in &pool {
        let nbrs = knn_reference(rows, q, k, &pool);
        if nbrs.is_empty() {
            continue;
        }
        evaluated += 1;
        let aq = affect[q].as_ref().unwrap()[f];
        let flips = nbrs
            .iter()
            .filter(|&&j| sign(aq) * sign(affect[j].as_ref().unwrap()[f]) == -1)
            .count();
        let diff: f64 = nbrs
            .iter()
            .map(|&j| (aq - affect[j].as_ref().unwrap()[f]).abs())
            .sum();
        pn += flips as f64 / nbrs.len() as f64;
        gn += diff / nbrs.len() as f64;
    }
    (pn / evaluated as f64, gn / evaluated as f64, evaluated)
}

pub fn random_rows(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

pub fn random_vad(rng: &mut impl Rng) -> Vec<f64> {
    (0..3).map(|_| rng.gen_range(1.0..=9.0)).collect()
}
