//! Reference computations for tests.
//!
//! Everything here is written against plain `Vec<f64>` and shares no code with
//! `regem-core`, so it can serve as an independent check of the production
//! solver, SVD and gradient paths.

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
///
/// Panics if `a` is numerically singular.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), n);
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        assert!(m[pivot][col].abs() > 1e-300, "singular system");
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = m[i][n];
        for k in i + 1..n {
            acc -= m[i][k] * x[k];
        }
        x[i] = acc / m[i][i];
    }
    x
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for `min ½ vᵀAv − bᵀv + λ‖v‖₁` with `A` symmetric
/// and a strictly positive diagonal.
///
/// Stops when a full sweep moves no coordinate by more than `tol`.
pub fn lasso_cd(a: &[Vec<f64>], b: &[f64], lambda: f64, tol: f64, max_sweeps: usize) -> Vec<f64> {
    let p = b.len();
    let mut v = vec![0.0; p];
    // running A·v
    let mut av = vec![0.0; p];
    for _ in 0..max_sweeps {
        let mut max_move: f64 = 0.0;
        for j in 0..p {
            let ajj = a[j][j];
            assert!(ajj > 0.0, "coordinate descent needs a positive diagonal");
            let partial = b[j] - (av[j] - ajj * v[j]);
            let new = soft(partial, lambda) / ajj;
            let d = new - v[j];
            if d != 0.0 {
                for (k, avk) in av.iter_mut().enumerate() {
                    *avk += a[k][j] * d;
                }
                v[j] = new;
                max_move = max_move.max(d.abs());
            }
        }
        if max_move <= tol {
            break;
        }
    }
    v
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi rotation method,
/// sorted in decreasing order.
pub fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values of a row-major `rows × cols` matrix via the eigenvalues of
/// its smaller Gram matrix, sorted decreasing. Length is `min(rows, cols)`.
pub fn singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    let at = |r: usize, c: usize| data[r * cols + c];
    let gram: Vec<Vec<f64>> = if cols <= rows {
        (0..cols)
            .map(|i| {
                (0..cols)
                    .map(|j| (0..rows).map(|r| at(r, i) * at(r, j)).sum())
                    .collect()
            })
            .collect()
    } else {
        (0..rows)
            .map(|i| {
                (0..rows)
                    .map(|j| (0..cols).map(|c| at(i, c) * at(j, c)).sum())
                    .collect()
            })
            .collect()
    };
    sym_eigenvalues(&gram).into_iter().map(|e| e.max(0.0).sqrt()).collect()
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Mean and standard error of a sample.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
