//! Compressed sparse rows, ILU(0) and Krylov solvers for the non-symmetric
//! Newton and Poisson systems.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearSolveError {
    #[error("zero pivot in ILU(0) at row {0}")]
    ZeroPivot(usize),
    #[error("Krylov solve stalled at relative residual {rel_residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, rel_residual: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row entry lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }
}

/// Incomplete LU factorisation with the sparsity pattern of the matrix.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self, LinearSolveError> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.cols[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(LinearSolveError::ZeroPivot(i));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            for k in start..end {
                let col = lu.cols[k];
                if col >= i {
                    break;
                }
                let pivot = lu.vals[diag[col]];
                if pivot == 0.0 {
                    return Err(LinearSolveError::ZeroPivot(col));
                }
                let factor = lu.vals[k] / pivot;
                lu.vals[k] = factor;
                for kk in diag[col] + 1..lu.row_ptr[col + 1] {
                    let p = pos[lu.cols[kk]];
                    if p != usize::MAX {
                        lu.vals[p] -= factor * lu.vals[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
            if lu.vals[diag[i]] == 0.0 {
                return Err(LinearSolveError::ZeroPivot(i));
            }
        }
        Ok(Self { lu, diag })
    }

    /// Solve `L U z = r` in place.
    pub fn apply(&self, z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut acc = z[i];
            for k in lu.row_ptr[i]..self.diag[i] {
                acc -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = acc;
        }
        for i in (0..lu.n).rev() {
            let mut acc = z[i];
            for k in self.diag[i] + 1..lu.row_ptr[i + 1] {
                acc -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = acc / lu.vals[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn true_rel_residual(a: &CsrMatrix, b: &[f64], x: &[f64], bnorm: f64) -> f64 {
    let ax = a.mul(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    norm(&r) / bnorm
}

/// Right-preconditioned BiCGSTAB from a zero initial guess.
pub fn bicgstab(a: &CsrMatrix, m: &Ilu0, b: &[f64], tol: f64, max_iters: usize) -> (Vec<f64>, LinearSolveStats) {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return (x, LinearSolveStats { iterations: 0, rel_residual: 0.0 });
    }
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iters {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return (x, LinearSolveStats { iterations: it, rel_residual: rel });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let mut p_hat = p.clone();
        m.apply(&mut p_hat);
        a.matvec(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            return (x, LinearSolveStats { iterations: it, rel_residual: rel });
        }
        alpha = rho_new / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bnorm < tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            let rel = true_rel_residual(a, b, &x, bnorm);
            return (x, LinearSolveStats { iterations: it, rel_residual: rel });
        }
        let mut s_hat = s.clone();
        m.apply(&mut s_hat);
        a.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        rel = norm(&r) / bnorm;
        if rel < tol {
            let rel = true_rel_residual(a, b, &x, bnorm);
            if rel < tol {
                return (x, LinearSolveStats { iterations: it, rel_residual: rel });
            }
            r = b.iter().zip(a.mul(&x)).map(|(bi, ai)| bi - ai).collect();
        }
        if omega == 0.0 {
            break;
        }
    }
    let rel = true_rel_residual(a, b, &x, bnorm);
    (x, LinearSolveStats { iterations: max_iters, rel_residual: rel })
}

/// Right-preconditioned restarted GMRES, warm-started from `x`.
pub fn gmres(
    a: &CsrMatrix,
    m: &Ilu0,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iters: usize,
) -> LinearSolveStats {
    let n = a.dim();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return LinearSolveStats { iterations: 0, rel_residual: 0.0 };
    }
    let mut total = 0;
    loop {
        let ax = a.mul(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta / bnorm < tol || total >= max_iters {
            return LinearSolveStats { iterations: total, rel_residual: beta / bnorm };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            total += 1;
            let mut z = basis[k].clone();
            m.apply(&mut z);
            let mut w = a.mul(&z);
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(&w, vj);
                hess[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * vj[i];
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = wn;
            for j in 0..k {
                let tmp = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = tmp;
            }
            let den = hess[k][k].hypot(hess[k + 1][k]);
            cs[k] = hess[k][k] / den;
            sn[k] = hess[k + 1][k] / den;
            hess[k][k] = den;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if wn == 0.0 || g[k + 1].abs() / bnorm < tol || total >= max_iters {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= hess[i][j] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        let mut upd = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                upd[i] += yj * basis[j][i];
            }
        }
        m.apply(&mut upd);
        for i in 0..n {
            x[i] += upd[i];
        }
    }
}

/// ILU(0)-preconditioned BiCGSTAB, falling back to GMRES(60) when it stalls.
pub fn solve(a: &CsrMatrix, b: &[f64], tol: f64, max_iters: usize) -> Result<(Vec<f64>, LinearSolveStats), LinearSolveError> {
    let m = Ilu0::new(a)?;
    let (mut x, stats) = bicgstab(a, &m, b, tol, max_iters);
    if stats.rel_residual < tol {
        return Ok((x, stats));
    }
    if !x.iter().all(|v| v.is_finite()) {
        x.fill(0.0);
    }
    let g = gmres(a, &m, b, &mut x, tol, 60, max_iters);
    let total = LinearSolveStats { iterations: stats.iterations + g.iterations, rel_residual: g.rel_residual };
    if g.rel_residual < tol {
        Ok((x, total))
    } else {
        Err(LinearSolveError::NotConverged { iterations: total.iterations, rel_residual: total.rel_residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn convection_diffusion(n: usize) -> CsrMatrix {
        // 1D -u'' + c u' on n points, non-symmetric
        let h = 1.0 / (n + 1) as f64;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0 / (h * h))];
                if i > 0 {
                    r.push((i - 1, -1.0 / (h * h) - 5.0 / (2.0 * h)));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0 / (h * h) + 5.0 / (2.0 * h)));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_rows(vec![vec![(1, 1.0), (0, 2.0), (1, 3.0)], vec![(1, 1.0)]]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.mul(&[1.0, 1.0]), vec![6.0, 1.0]);
    }

    #[test]
    fn ilu_of_tridiagonal_is_exact() {
        let a = convection_diffusion(50);
        let m = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut z = a.mul(&x);
        m.apply(&mut z);
        for (zi, xi) in z.iter().zip(&x) {
            assert!((zi - xi).abs() < 1e-9);
        }
    }

    #[test]
    fn krylov_solvers_agree() {
        let a = convection_diffusion(200);
        let x_true: Vec<f64> = (0..200).map(|i| (i as f64 * 0.05).cos()).collect();
        let b = a.mul(&x_true);
        let (x, st) = solve(&a, &b, 1e-12, 500).unwrap();
        assert!(st.rel_residual < 1e-12);
        let err = x.iter().zip(&x_true).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        // GMRES with a diagonal-only pattern preconditioner
        let diag = CsrMatrix::from_rows((0..200).map(|i| vec![(i, a.row(i).find(|e| e.0 == i).unwrap().1)]).collect());
        let m = Ilu0::new(&diag).unwrap();
        let mut xg = vec![0.0; 200];
        let st = gmres(&a, &m, &b, &mut xg, 1e-11, 60, 5000);
        assert!(st.rel_residual < 1e-11, "{st:?}");
    }
}
