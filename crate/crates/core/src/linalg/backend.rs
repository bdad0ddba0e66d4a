//! Raw-array compute backends.
//!
//! All arrays are row-major. Backends are pure functions of their inputs;
//! the AD layer only ever hands them fully constant data.

use crate::real::Real;

pub trait Backend<R: Real>: Send + Sync {
    fn add(&self, a: &[R], b: &[R]) -> Vec<R>;
    fn sub(&self, a: &[R], b: &[R]) -> Vec<R>;
    fn scale(&self, alpha: R, a: &[R]) -> Vec<R>;
    fn mul_elementwise(&self, a: &[R], b: &[R]) -> Vec<R>;
    fn dot(&self, a: &[R], b: &[R]) -> R;
    fn sum(&self, a: &[R]) -> R;
    fn l2norm(&self, a: &[R]) -> R;
    fn map(&self, a: &[R], f: &dyn Fn(R) -> R) -> Vec<R>;
    /// `a` is `rows x cols`.
    fn matvec(&self, a: &[R], rows: usize, cols: usize, x: &[R]) -> Vec<R>;
    /// `a` is `m x k`, `b` is `k x n`.
    fn matmul(&self, a: &[R], m: usize, k: usize, b: &[R], n: usize) -> Vec<R>;
    fn transpose(&self, a: &[R], rows: usize, cols: usize) -> Vec<R>;
    fn outer(&self, u: &[R], v: &[R]) -> Vec<R>;
    /// Lower Cholesky factor of an `n x n` matrix, `None` unless positive definite.
    fn cholesky(&self, a: &[R], n: usize) -> Option<Vec<R>>;
    /// Solves `a x = b` for symmetric `a`; `None` when `a` is singular.
    fn solve_symmetric(&self, a: &[R], n: usize, b: &[R]) -> Option<Vec<R>>;
}

/// Dependency-free reference implementation: naive loops, Cholesky with an
/// LU (partial pivoting) fallback for indefinite systems.
#[derive(Debug, Default, Clone, Copy)]
pub struct NativeBackend;

impl<R: Real> Backend<R> for NativeBackend {
    fn add(&self, a: &[R], b: &[R]) -> Vec<R> {
        a.iter().zip(b).map(|(&x, &y)| x + y).collect()
    }

    fn sub(&self, a: &[R], b: &[R]) -> Vec<R> {
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    fn scale(&self, alpha: R, a: &[R]) -> Vec<R> {
        a.iter().map(|&x| alpha * x).collect()
    }

    fn mul_elementwise(&self, a: &[R], b: &[R]) -> Vec<R> {
        a.iter().zip(b).map(|(&x, &y)| x * y).collect()
    }

    fn dot(&self, a: &[R], b: &[R]) -> R {
        a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
    }

    fn sum(&self, a: &[R]) -> R {
        a.iter().fold(R::zero(), |acc, &x| acc + x)
    }

    fn l2norm(&self, a: &[R]) -> R {
        // scaled to avoid overflow for large entries
        let scale = a.iter().fold(R::zero(), |m, &x| m.max(x.abs()));
        if scale.is_zero() || !scale.is_finite() {
            return if scale.is_zero() { R::zero() } else { scale };
        }
        let s = a.iter().fold(R::zero(), |acc, &x| {
            let y = x / scale;
            acc + y * y
        });
        scale * s.sqrt()
    }

    fn map(&self, a: &[R], f: &dyn Fn(R) -> R) -> Vec<R> {
        a.iter().map(|&x| f(x)).collect()
    }

    fn matvec(&self, a: &[R], rows: usize, cols: usize, x: &[R]) -> Vec<R> {
        (0..rows)
            .map(|i| self.dot(&a[i * cols..(i + 1) * cols], x))
            .collect()
    }

    fn matmul(&self, a: &[R], m: usize, k: usize, b: &[R], n: usize) -> Vec<R> {
        let mut c = vec![R::zero(); m * n];
        for i in 0..m {
            for p in 0..k {
                let aip = a[i * k + p];
                if aip.is_zero() {
                    continue;
                }
                let row = &b[p * n..(p + 1) * n];
                for (cij, &bpj) in c[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *cij = *cij + aip * bpj;
                }
            }
        }
        c
    }

    fn transpose(&self, a: &[R], rows: usize, cols: usize) -> Vec<R> {
        let mut t = vec![R::zero(); rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                t[j * rows + i] = a[i * cols + j];
            }
        }
        t
    }

    fn outer(&self, u: &[R], v: &[R]) -> Vec<R> {
        u.iter().flat_map(|&x| v.iter().map(move |&y| x * y)).collect()
    }

    fn cholesky(&self, a: &[R], n: usize) -> Option<Vec<R>> {
        let mut l = vec![R::zero(); n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d = d - l[j * n + k] * l[j * n + k];
            }
            if !(d > R::zero()) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(l)
    }

    fn solve_symmetric(&self, a: &[R], n: usize, b: &[R]) -> Option<Vec<R>> {
        match <Self as Backend<R>>::cholesky(self, a, n) {
            Some(l) => Some(cholesky_solve(&l, n, b)),
            None => lu_solve(a, n, b),
        }
    }
}

fn cholesky_solve<R: Real>(l: &[R], n: usize, b: &[R]) -> Vec<R> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

fn lu_solve<R: Real>(a: &[R], n: usize, b: &[R]) -> Option<Vec<R>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let norm = m.iter().fold(R::zero(), |acc, &v| acc.max(v.abs()));
    let tiny = norm * R::epsilon() * R::lit(n.max(1) as f64);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i * n + col]
                .abs()
                .partial_cmp(&m[j * n + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        let p = m[pivot * n + col];
        if !(p.abs() > tiny) {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            x.swap(pivot, col);
        }
        for i in col + 1..n {
            let f = m[i * n + col] / p;
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                m[i * n + k] = m[i * n + k] - f * m[col * n + k];
            }
            x[i] = x[i] - f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s = s - m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// The backend installed for `R`, or [`NativeBackend`] if none was installed.
pub fn backend<R: Real>() -> &'static dyn Backend<R> {
    match R::backend_slot().get() {
        Some(b) => b.as_ref(),
        None => &NativeBackend,
    }
}

/// Installs a process-wide backend for `R`. Only the first call succeeds,
/// and it must happen before the native backend is relied upon for results
/// that need to be reproducible across backends.
pub fn install_backend<R: Real>(b: Box<dyn Backend<R>>) -> Result<(), Box<dyn Backend<R>>> {
    R::backend_slot().set(b)
}
