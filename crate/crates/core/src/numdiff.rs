//! Finite-difference twins of the differentiation operators.
//!
//! Same operator set and argument shapes as [`crate::diffapi`], over plain
//! reals. Everything uses central differences. Operators with no numerical
//! counterpart (`diffn`, `jacobian_tv`, `pullback`) are deliberately absent.
//!
//! Step sizes follow [`FdConfig`]: `sqrt(eps) * max(1, |x|)` for first
//! derivatives and `cbrt(eps) * max(1, |x|)` for second derivatives, where
//! `eps` is the machine epsilon of the precision in use. Second-derivative
//! operators built by differencing a numerical gradient use the larger step
//! for both levels so that rounding error does not dominate.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::real::Real;

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig<R> {
    pub eps: R,
}

impl<R: Real> Default for FdConfig<R> {
    fn default() -> Self {
        FdConfig { eps: R::epsilon() }
    }
}

impl<R: Real> FdConfig<R> {
    pub fn first_step(&self, x: R) -> R {
        self.eps.sqrt() * R::one().max(x.abs())
    }

    pub fn second_step(&self, x: R) -> R {
        self.eps.cbrt() * R::one().max(x.abs())
    }
}

fn cfg<R: Real>() -> FdConfig<R> {
    FdConfig::default()
}

fn inf_norm<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |m, &x| m.max(x.abs()))
}

fn check_len(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::shape(op, expected, got))
    }
}

/// `(f(x + h) - f(x - h)) / 2h` with a caller-chosen step.
pub fn central_diff_with_step<R: Real>(f: impl Fn(R) -> R, x: R, h: R) -> R {
    let (xp, xm) = (x + h, x - h);
    // divide by the representable step actually taken
    (f(xp) - f(xm)) / (xp - xm)
}

// ---------------------------------------------------------------- R -> R

pub fn n_diff<R: Real>(f: impl Fn(R) -> R, x: R) -> R {
    central_diff_with_step(f, x, cfg::<R>().first_step(x))
}

pub fn n_diff_val<R: Real>(f: impl Fn(R) -> R, x: R) -> (R, R) {
    (f(x), n_diff(&f, x))
}

pub fn n_diff2<R: Real>(f: impl Fn(R) -> R, x: R) -> R {
    n_diff2_all(f, x).2
}

pub fn n_diff2_val<R: Real>(f: impl Fn(R) -> R, x: R) -> (R, R) {
    let (v, _, d2) = n_diff2_all(f, x);
    (v, d2)
}

/// `(f(x), f'(x), f''(x))` from the same three evaluations.
pub fn n_diff2_all<R: Real>(f: impl Fn(R) -> R, x: R) -> (R, R, R) {
    let h = cfg::<R>().second_step(x);
    let (xp, xm) = (x + h, x - h);
    let (fp, f0, fm) = (f(xp), f(x), f(xm));
    let two = R::lit(2.0);
    let hh = (xp - xm) / two;
    (f0, (fp - fm) / (xp - xm), (fp - two * f0 + fm) / (hh * hh))
}

// ---------------------------------------------------------------- R^n -> R

fn grad_with<R: Real>(f: &dyn Fn(&[R]) -> R, x: &[R], step: fn(&FdConfig<R>, R) -> R) -> Vec<R> {
    let c = cfg::<R>();
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step(&c, x[i]);
            xp[i] = x[i] + h;
            let fp = f(&xp);
            let hp = xp[i];
            xp[i] = x[i] - h;
            let fm = f(&xp);
            let hm = xp[i];
            xp[i] = x[i];
            (fp - fm) / (hp - hm)
        })
        .collect()
}

pub fn n_grad<R: Real>(f: impl Fn(&[R]) -> R, x: &[R]) -> Vec<R> {
    grad_with(&f, x, FdConfig::first_step)
}

pub fn n_grad_val<R: Real>(f: impl Fn(&[R]) -> R, x: &[R]) -> (R, Vec<R>) {
    (f(x), n_grad(&f, x))
}

fn along<R: Real>(x: &[R], v: &[R], t: R) -> Vec<R> {
    x.iter().zip(v).map(|(&a, &b)| a + t * b).collect()
}

/// Step for a difference along direction `v`, scaled so the point moves by
/// roughly the per-coordinate step.
fn directional_step<R: Real>(x: &[R], v: &[R], step: fn(&FdConfig<R>, R) -> R) -> Option<R> {
    let nv = inf_norm(v);
    (nv > R::zero()).then(|| step(&cfg::<R>(), inf_norm(x)) / nv)
}

pub fn n_gradv<R: Real>(f: impl Fn(&[R]) -> R, x: &[R], v: &[R]) -> Result<R> {
    check_len("n_gradv", x.len(), v.len())?;
    let Some(h) = directional_step(x, v, FdConfig::first_step) else {
        return Ok(R::zero());
    };
    Ok((f(&along(x, v, h)) - f(&along(x, v, -h))) / (h + h))
}

pub fn n_gradv_val<R: Real>(f: impl Fn(&[R]) -> R, x: &[R], v: &[R]) -> Result<(R, R)> {
    Ok((f(x), n_gradv(&f, x, v)?))
}

/// Hessian by central differences of the numerical gradient, symmetrized.
pub fn n_hessian<R: Real>(f: impl Fn(&[R]) -> R, x: &[R]) -> Matrix<R> {
    let n = x.len();
    let c = cfg::<R>();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = c.second_step(x[j]);
        xp[j] = x[j] + h;
        let gp = grad_with(&f, &xp, FdConfig::second_step);
        let hp = xp[j];
        xp[j] = x[j] - h;
        let gm = grad_with(&f, &xp, FdConfig::second_step);
        let hm = xp[j];
        xp[j] = x[j];
        cols.push(gp.iter().zip(&gm).map(|(&a, &b)| (a - b) / (hp - hm)).collect::<Vec<R>>());
    }
    let half = R::lit(0.5);
    Matrix::from_fn(n, n, |i, j| half * (cols[j][i] + cols[i][j]))
}

pub fn n_hessian_val<R: Real>(f: impl Fn(&[R]) -> R, x: &[R]) -> (R, Matrix<R>) {
    (f(x), n_hessian(&f, x))
}

pub fn n_gradhessian<R: Real>(f: impl Fn(&[R]) -> R, x: &[R]) -> (Vec<R>, Matrix<R>) {
    (n_grad(&f, x), n_hessian(&f, x))
}

pub fn n_gradhessian_val<R: Real>(f: impl Fn(&[R]) -> R, x: &[R]) -> (R, Vec<R>, Matrix<R>) {
    (f(x), n_grad(&f, x), n_hessian(&f, x))
}

pub fn n_hessianv<R: Real>(f: impl Fn(&[R]) -> R, x: &[R], v: &[R]) -> Result<Vec<R>> {
    check_len("n_hessianv", x.len(), v.len())?;
    let Some(h) = directional_step(x, v, FdConfig::second_step) else {
        return Ok(vec![R::zero(); x.len()]);
    };
    let gp = grad_with(&f, &along(x, v, h), FdConfig::second_step);
    let gm = grad_with(&f, &along(x, v, -h), FdConfig::second_step);
    Ok(gp.iter().zip(&gm).map(|(&a, &b)| (a - b) / (h + h)).collect())
}

pub fn n_hessianv_val<R: Real>(f: impl Fn(&[R]) -> R, x: &[R], v: &[R]) -> Result<(R, Vec<R>)> {
    Ok((f(x), n_hessianv(&f, x, v)?))
}

pub fn n_gradhessianv<R: Real>(f: impl Fn(&[R]) -> R, x: &[R], v: &[R]) -> Result<(R, Vec<R>)> {
    Ok((n_gradv(&f, x, v)?, n_hessianv(&f, x, v)?))
}

pub fn n_gradhessianv_val<R: Real>(f: impl Fn(&[R]) -> R, x: &[R], v: &[R]) -> Result<(R, R, Vec<R>)> {
    Ok((f(x), n_gradv(&f, x, v)?, n_hessianv(&f, x, v)?))
}

/// Sum of second central differences along each axis.
pub fn n_laplacian<R: Real>(f: impl Fn(&[R]) -> R, x: &[R]) -> R {
    n_laplacian_val(f, x).1
}

pub fn n_laplacian_val<R: Real>(f: impl Fn(&[R]) -> R, x: &[R]) -> (R, R) {
    let c = cfg::<R>();
    let f0 = f(x);
    let two = R::lit(2.0);
    let mut xp = x.to_vec();
    let mut total = R::zero();
    for i in 0..x.len() {
        let h = c.second_step(x[i]);
        xp[i] = x[i] + h;
        let (fp, hp) = (f(&xp), xp[i]);
        xp[i] = x[i] - h;
        let (fm, hm) = (f(&xp), xp[i]);
        xp[i] = x[i];
        let hh = (hp - hm) / two;
        total = total + (fp - two * f0 + fm) / (hh * hh);
    }
    (f0, total)
}

// ---------------------------------------------------------------- R^n -> R^m

pub fn n_jacobian_val<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<(Vec<R>, Matrix<R>)> {
    let y = f(x);
    let (n, m) = (x.len(), y.len());
    let c = cfg::<R>();
    let mut xp = x.to_vec();
    let mut j = Matrix::zeros(m, n);
    for col in 0..n {
        let h = c.first_step(x[col]);
        xp[col] = x[col] + h;
        let (yp, hp) = (f(&xp), xp[col]);
        xp[col] = x[col] - h;
        let (ym, hm) = (f(&xp), xp[col]);
        xp[col] = x[col];
        check_len("n_jacobian (output length changed between evaluations)", m, yp.len())?;
        check_len("n_jacobian (output length changed between evaluations)", m, ym.len())?;
        for row in 0..m {
            j.set(row, col, (yp[row] - ym[row]) / (hp - hm));
        }
    }
    Ok((y, j))
}

pub fn n_jacobian<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<Matrix<R>> {
    Ok(n_jacobian_val(f, x)?.1)
}

pub fn n_jacobian_t_val<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<(Vec<R>, Matrix<R>)> {
    let (y, j) = n_jacobian_val(f, x)?;
    Ok((y, j.transpose()))
}

pub fn n_jacobian_t<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<Matrix<R>> {
    Ok(n_jacobian_t_val(f, x)?.1)
}

pub fn n_jacobianv_val<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R], v: &[R]) -> Result<(Vec<R>, Vec<R>)> {
    check_len("n_jacobianv", x.len(), v.len())?;
    let y = f(x);
    let Some(h) = directional_step(x, v, FdConfig::first_step) else {
        let m = y.len();
        return Ok((y, vec![R::zero(); m]));
    };
    let yp = f(&along(x, v, h));
    let ym = f(&along(x, v, -h));
    check_len("n_jacobianv", y.len(), yp.len())?;
    check_len("n_jacobianv", y.len(), ym.len())?;
    let jv = yp.iter().zip(&ym).map(|(&a, &b)| (a - b) / (h + h)).collect();
    Ok((y, jv))
}

pub fn n_jacobianv<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R], v: &[R]) -> Result<Vec<R>> {
    Ok(n_jacobianv_val(f, x, v)?.1)
}

fn require_3d(op: &'static str, n: usize, m: usize) -> Result<()> {
    if n == 3 && m == 3 {
        Ok(())
    } else {
        Err(Error::Dimension {
            op,
            requirement: "a field R^3 -> R^3",
            got: format!("R^{n} -> R^{m}"),
        })
    }
}

pub fn n_curldiv_val<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<(Vec<R>, Vec<R>, R)> {
    require_3d("n_curldiv", x.len(), 3)?;
    let (y, j) = n_jacobian_val(f, x)?;
    require_3d("n_curldiv", x.len(), y.len())?;
    let curl = vec![
        j.get(2, 1) - j.get(1, 2),
        j.get(0, 2) - j.get(2, 0),
        j.get(1, 0) - j.get(0, 1),
    ];
    Ok((y, curl, j.trace()))
}

pub fn n_curldiv<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<(Vec<R>, R)> {
    let (_, c, d) = n_curldiv_val(f, x)?;
    Ok((c, d))
}

pub fn n_curl_val<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<(Vec<R>, Vec<R>)> {
    let (y, c, _) = n_curldiv_val(f, x)?;
    Ok((y, c))
}

pub fn n_curl<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<Vec<R>> {
    Ok(n_curldiv_val(f, x)?.1)
}

pub fn n_div_val<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<(Vec<R>, R)> {
    let (y, j) = n_jacobian_val(f, x)?;
    if y.len() != x.len() {
        return Err(Error::Dimension {
            op: "n_div",
            requirement: "a field R^n -> R^n",
            got: format!("R^{} -> R^{}", x.len(), y.len()),
        });
    }
    Ok((y, j.trace()))
}

pub fn n_div<R: Real>(f: impl Fn(&[R]) -> Vec<R>, x: &[R]) -> Result<R> {
    Ok(n_div_val(f, x)?.1)
}
