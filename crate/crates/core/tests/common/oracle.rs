//! Independent reference computations: plain Gaussian elimination, linear
//! least squares and finite differences. None of these call into the
//! library's linear algebra.

use bearing_formation::control::stacked_control;
use bearing_formation::{Configuration, TargetFormation};
use nalgebra::DMatrix;

/// Row-reduces a dense row-major matrix with partial pivoting. Returns the
/// rank and a basis of the kernel (one vector per free column).
pub fn rref_kernel(rows: &[Vec<f64>], tol: f64) -> (usize, Vec<Vec<f64>>) {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let (best, val) =
            (r..m).map(|i| (i, a[i][c].abs())).fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        a.swap(r, best);
        let p = a[r][c];
        for x in a[r].iter_mut() {
            *x /= p;
        }
        for i in 0..m {
            if i != r && a[i][c] != 0.0 {
                let f = a[i][c];
                let pivot_row = a[r].clone();
                for (x, p) in a[i].iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let basis = free
        .iter()
        .map(|&f| {
            let mut v = vec![0.0; n];
            v[f] = 1.0;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][f];
            }
            v
        })
        .collect();
    (pivots.len(), basis)
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn mat_vec(rows: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Ordinary least-squares line `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (a, b, 1.0 - ss_res / syy)
}

/// Central-difference Jacobian of the stacked control at `at`.
pub fn control_jacobian(target: &TargetFormation, at: &Configuration, h: f64) -> DMatrix<f64> {
    let n = at.stacked().len();
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut xp = at.stacked().clone();
        let mut xm = at.stacked().clone();
        xp[c] += h;
        xm[c] -= h;
        let up = stacked_control(&Configuration::from_stacked(at.d(), xp).unwrap(), target).unwrap();
        let um = stacked_control(&Configuration::from_stacked(at.d(), xm).unwrap(), target).unwrap();
        j.set_column(c, &((up.stacked() - um.stacked()) / (2.0 * h)));
    }
    j
}

/// Largest real part among the Jacobian eigenvalues.
pub fn max_real_eigenvalue(j: &DMatrix<f64>) -> f64 {
    j.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max)
}

/// The `d x d` projector `I - x x^T / |x|^2` built entry by entry.
pub fn naive_projection(x: &[f64]) -> Vec<Vec<f64>> {
    let nn: f64 = x.iter().map(|v| v * v).sum();
    (0..x.len())
        .map(|i| (0..x.len()).map(|j| if i == j { 1.0 } else { 0.0 } - x[i] * x[j] / nn).collect())
        .collect()
}

/// Per-agent control `-sum_j P_{g_ij} g*_ij` written out directly.
pub fn naive_agent_control(follower: &[f64], neighbors: &[Vec<f64>], targets: &[Vec<f64>]) -> Vec<f64> {
    let d = follower.len();
    let mut u = vec![0.0; d];
    for (q, t) in neighbors.iter().zip(targets) {
        let diff: Vec<f64> = q.iter().zip(follower).map(|(a, b)| a - b).collect();
        let p = naive_projection(&diff);
        for i in 0..d {
            for k in 0..d {
                u[i] -= p[i][k] * t[k];
            }
        }
    }
    u
}
