//! Small in-crate linear solvers: dense Gaussian elimination with partial
//! pivoting (cross-checks) and a sparse BiCGSTAB for the absorbing-chain
//! systems of the exact fixation oracle.

/// Solves the dense system in place; `mat` is row-major `n x n`.
pub(crate) fn dense_solve(mat: &mut [f64], rhs: &mut [f64], n: usize) -> Vec<f64> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| {
                mat[a * n + col]
                    .abs()
                    .partial_cmp(&mat[b * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if pivot != col {
            for c in 0..n {
                mat.swap(col * n + c, pivot * n + c);
            }
            rhs.swap(col, pivot);
        }
        let diag = mat[col * n + col];
        for row in (col + 1)..n {
            let factor = mat[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                mat[row * n + c] -= factor * mat[col * n + c];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in (row + 1)..n {
            acc -= mat[row * n + c] * x[c];
        }
        x[row] = acc / mat[row * n + row];
    }
    x
}

/// Compressed sparse row matrix.
pub(crate) struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for row in 0..self.n {
            let mut acc = 0.0;
            for idx in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            out[row] = acc;
        }
    }
}

pub(crate) enum SparseOutcome {
    Converged(Vec<f64>),
    Stalled { residual: f64 },
}

/// BiCGSTAB with a given initial guess; converges on relative residual.
pub(crate) fn bicgstab(a: &Csr, b: &[f64], x0: Vec<f64>, tol: f64, max_iter: usize) -> SparseOutcome {
    let n = a.n;
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut x = x0;
    let mut r = vec![0.0; n];
    a.mul(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut res = dot(&r, &r).sqrt();
    if res / norm_b <= tol {
        return SparseOutcome::Converged(x);
    }
    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            return SparseOutcome::Stalled { residual: res / norm_b };
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        a.mul(&p, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        a.mul(&s, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        res = dot(&r, &r).sqrt();
        if res / norm_b <= tol {
            return SparseOutcome::Converged(x);
        }
        if omega.abs() < 1e-300 {
            return SparseOutcome::Stalled { residual: res / norm_b };
        }
    }
    SparseOutcome::Stalled { residual: res / norm_b }
}
