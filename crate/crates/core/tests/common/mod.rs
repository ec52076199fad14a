//! Oracles shared by the integration tests and the acceptance harness.

#![allow(dead_code)]

/// Cyclic Jacobi rotations on a symmetric matrix; returns (eigenvalues,
/// eigenvectors as columns of a row-major n x n matrix).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
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

/// Top-`k` covariance eigenvectors, by brute force.
pub fn oracle_subspace(xs: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let (n, d) = (xs.len(), xs[0].len());
    let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| xs.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (n - 1) as f64).collect())
        .collect();
    let (vals, vecs) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    order.iter().take(k).map(|&c| (0..d).map(|r| vecs[r][c]).collect()).collect()
}

pub fn projector(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut p = vec![0.0; d * d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                p[i * d + j] += r[i] * r[j];
            }
        }
    }
    p
}

/// `||P1 - P2||_F / sqrt(2)`, the norm of the sines of the principal angles.
pub fn subspace_distance(a: &[Vec<f64>], b: &[Vec<f64>], d: usize) -> f64 {
    let (pa, pb) = (projector(a, d), projector(b, d));
    (pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / 2.0).sqrt()
}
