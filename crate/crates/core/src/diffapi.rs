//! Differentiation operators.
//!
//! Every operator takes the function to differentiate as its first argument
//! and draws a fresh tag, so any operator may be called from inside a
//! function being differentiated by any other. Forms with a `_val` suffix
//! additionally return the value of the function at the point.
//!
//! | operator | mode |
//! |----------|------|
//! | `diff`, `diff2`, `diffn`, `gradv`, `jacobianv`, `curl`, `div` | forward |
//! | `grad`, `jacobian_tv`, `pullback` | reverse |
//! | `hessian`, `gradhessian`, `laplacian` | forward-on-reverse |
//! | `hessianv`, `gradhessianv` | reverse-on-forward |
//! | `jacobian`, `jacobian_t` | forward if `n <= m`, reverse otherwise |

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{reverse_sweep_v, DM, DV};
use crate::real::Real;
use crate::scalar::D;
use crate::tag::Tag;
use crate::tape::{Layer, Mode, Tape};

fn is_rev_at<R: Real, L: Layer<R>>(y: &L, t: Tag) -> bool {
    matches!(y.top(), Some((tt, Mode::Reverse)) if tt == t)
}

fn check_len(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::shape(op, expected, got))
    }
}

// ---------------------------------------------------------------- R -> R

pub fn diff_val<R: Real>(f: impl Fn(&D<R>) -> D<R>, x: &D<R>) -> (D<R>, D<R>) {
    let t = Tag::fresh();
    let y = f(&D::dual(x.clone(), D::one(), t));
    (y.split_fwd(t).0, y.tangent(t))
}

/// First derivative, forward mode.
pub fn diff<R: Real>(f: impl Fn(&D<R>) -> D<R>, x: &D<R>) -> D<R> {
    diff_val(f, x).1
}

/// `(f(x), f'(x), f''(x))`.
pub fn diff2_all<R: Real>(f: impl Fn(&D<R>) -> D<R>, x: &D<R>) -> (D<R>, D<R>, D<R>) {
    let t = Tag::fresh();
    let xd = D::dual(x.clone(), D::one(), t);
    let (v, d1) = diff_val(&f, &xd);
    (v.split_fwd(t).0, d1.split_fwd(t).0, d1.tangent(t))
}

pub fn diff2_val<R: Real>(f: impl Fn(&D<R>) -> D<R>, x: &D<R>) -> (D<R>, D<R>) {
    let (v, _, d2) = diff2_all(f, x);
    (v, d2)
}

pub fn diff2<R: Real>(f: impl Fn(&D<R>) -> D<R>, x: &D<R>) -> D<R> {
    diff2_all(f, x).2
}

fn diffn_dyn<R: Real>(n: usize, f: &dyn Fn(&D<R>) -> D<R>, x: &D<R>) -> D<R> {
    match n {
        0 => f(x),
        _ => diff(|y: &D<R>| diffn_dyn(n - 1, f, y), x),
    }
}

/// `n`-th derivative by `n` nested forward invocations; `diffn(0, f, x) = f(x)`.
pub fn diffn<R: Real>(n: usize, f: impl Fn(&D<R>) -> D<R>, x: &D<R>) -> D<R> {
    diffn_dyn(n, &f, x)
}

pub fn diffn_val<R: Real>(n: usize, f: impl Fn(&D<R>) -> D<R>, x: &D<R>) -> (D<R>, D<R>) {
    (f(x), diffn_dyn(n, &f, x))
}

/// Curried [`diff`]: returns the derivative function.
pub fn diff_fn<R: Real>(f: impl Fn(&D<R>) -> D<R>) -> impl Fn(&D<R>) -> D<R> {
    move |x| diff(&f, x)
}

// ---------------------------------------------------------------- R^n -> R

/// Value and gradient from one reverse sweep.
pub fn grad_val<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<(D<R>, DV<R>)> {
    let tape = Tape::new();
    let t = tape.tag();
    let xr = DV::rev_leaf(x.clone(), &tape);
    let y = f(&xr)?;
    let g = if is_rev_at(&y, t) {
        y.sweep_from(&D::one(), t)?;
        xr.adjoint()
    } else {
        DV::zeros(x.len())
    };
    Ok((y.split_rev(t).0, g))
}

pub fn grad<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<DV<R>> {
    Ok(grad_val(f, x)?.1)
}

/// Gradient assembled from `n` forward passes. Same result as [`grad`];
/// exposed for mode cross-checks.
pub fn grad_forward<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<DV<R>> {
    let n = x.len();
    let parts = (0..n)
        .map(|i| gradv(&f, x, &DV::basis(n, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DV::from_ds(&parts))
}

/// Curried [`grad`].
pub fn grad_fn<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>) -> impl Fn(&DV<R>) -> Result<DV<R>> {
    move |x| grad(&f, x)
}

/// Value and directional derivative `∇f(x)·v` from one forward pass.
pub fn gradv_val<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>, v: &DV<R>) -> Result<(D<R>, D<R>)> {
    check_len("gradv", x.len(), v.len())?;
    let t = Tag::fresh();
    let y = f(&DV::dual(x.clone(), v.clone(), t)?)?;
    Ok((y.split_fwd(t).0, y.tangent(t)))
}

pub fn gradv<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>, v: &DV<R>) -> Result<D<R>> {
    Ok(gradv_val(f, x, v)?.1)
}

/// Hessian as the forward-mode Jacobian of the reverse-mode gradient.
pub fn hessian<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<DM<R>> {
    jacobian(grad_fn(f), x)
}

pub fn hessian_val<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<(D<R>, DM<R>)> {
    let value = f(x)?;
    Ok((value, hessian(f, x)?))
}

/// Curried [`hessian`].
pub fn hessian_fn<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>) -> impl Fn(&DV<R>) -> Result<DM<R>> {
    move |x| hessian(&f, x)
}

/// `(∇f, H)` from one Jacobian-of-gradient evaluation.
pub fn gradhessian<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<(DV<R>, DM<R>)> {
    jacobian_val(grad_fn(f), x)
}

pub fn gradhessian_val<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<(D<R>, DV<R>, DM<R>)> {
    let value = f(x)?;
    let (g, h) = gradhessian(f, x)?;
    Ok((value, g, h))
}

/// `(f(x), ∇f(x)·v, H(x) v)`: one reverse sweep over a forward evaluation.
pub fn gradhessianv_val<R: Real>(
    f: impl Fn(&DV<R>) -> Result<D<R>>,
    x: &DV<R>,
    v: &DV<R>,
) -> Result<(D<R>, D<R>, DV<R>)> {
    check_len("hessianv", x.len(), v.len())?;
    let tape = Tape::new();
    let t = tape.tag();
    let xr = DV::rev_leaf(x.clone(), &tape);
    let (fx, gv) = gradv_val(&f, &xr, v)?;
    let hv = if is_rev_at(&gv, t) {
        gv.sweep_from(&D::one(), t)?;
        xr.adjoint()
    } else {
        DV::zeros(x.len())
    };
    Ok((fx.split_rev(t).0, gv.split_rev(t).0, hv))
}

pub fn gradhessianv<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>, v: &DV<R>) -> Result<(D<R>, DV<R>)> {
    let (_, gv, hv) = gradhessianv_val(f, x, v)?;
    Ok((gv, hv))
}

pub fn hessianv_val<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>, v: &DV<R>) -> Result<(D<R>, DV<R>)> {
    let (fx, _, hv) = gradhessianv_val(f, x, v)?;
    Ok((fx, hv))
}

pub fn hessianv<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>, v: &DV<R>) -> Result<DV<R>> {
    Ok(gradhessianv_val(f, x, v)?.2)
}

/// Trace of the Hessian from `n` Hessian-vector products.
pub fn laplacian_val<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<(D<R>, D<R>)> {
    let n = x.len();
    if n == 0 {
        return Ok((f(x)?, D::zero()));
    }
    let mut value = None;
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let (fx, hv) = hessianv_val(&f, x, &DV::basis(n, i))?;
        value.get_or_insert(fx);
        terms.push(hv.get(i));
    }
    Ok((value.expect("n > 0"), terms.into_iter().sum()))
}

pub fn laplacian<R: Real>(f: impl Fn(&DV<R>) -> Result<D<R>>, x: &DV<R>) -> Result<D<R>> {
    Ok(laplacian_val(f, x)?.1)
}

// ---------------------------------------------------------------- R^n -> R^m

/// Value and `J v` from one forward pass.
pub fn jacobianv_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>, v: &DV<R>) -> Result<(DV<R>, DV<R>)> {
    check_len("jacobianv", x.len(), v.len())?;
    let t = Tag::fresh();
    let y = f(&DV::dual(x.clone(), v.clone(), t)?)?;
    Ok((y.split_fwd(t).0, y.tangent(t)))
}

pub fn jacobianv<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>, v: &DV<R>) -> Result<DV<R>> {
    Ok(jacobianv_val(f, x, v)?.1)
}

/// Reverse-mode linearization of `f` at one point, reusable for any number
/// of output covectors without re-evaluating `f`.
pub struct Pullback<R: Real> {
    input: DV<R>,
    output: DV<R>,
    tag: Tag,
}

impl<R: Real> Pullback<R> {
    /// `J^T w`.
    pub fn apply(&self, w: &DV<R>) -> Result<DV<R>> {
        check_len("pullback", self.output.len(), w.len())?;
        if !is_rev_at(&self.output, self.tag) {
            return Ok(DV::zeros(self.input.len()));
        }
        reverse_sweep_v(&self.output, w, self.tag)?;
        Ok(self.input.adjoint())
    }

    pub fn input_len(&self) -> usize {
        self.input.len()
    }

    pub fn output_len(&self) -> usize {
        self.output.len()
    }
}

impl<R: Real> fmt::Debug for Pullback<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pullback")
            .field("n", &self.input_len())
            .field("m", &self.output_len())
            .field("tag", &self.tag)
            .finish()
    }
}

/// Evaluates `f` once on a fresh tape and returns `(f(x), w ↦ J^T w)`.
pub fn pullback<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, Pullback<R>)> {
    let tape = Tape::new();
    let tag = tape.tag();
    let input = DV::rev_leaf(x.clone(), &tape);
    let output = f(&input)?;
    let value = output.split_rev(tag).0;
    Ok((value, Pullback { input, output, tag }))
}

pub fn jacobian_tv_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>, w: &DV<R>) -> Result<(DV<R>, DV<R>)> {
    let (y, pb) = pullback(f, x)?;
    let jtw = pb.apply(w)?;
    Ok((y, jtw))
}

pub fn jacobian_tv<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>, w: &DV<R>) -> Result<DV<R>> {
    Ok(jacobian_tv_val(f, x, w)?.1)
}

fn forward_columns<R: Real>(
    f: &dyn Fn(&DV<R>) -> Result<DV<R>>,
    x: &DV<R>,
    m: usize,
    from: usize,
) -> Result<Vec<DV<R>>> {
    let n = x.len();
    (from..n)
        .map(|j| {
            let col = jacobianv(f, x, &DV::basis(n, j))?;
            check_len("jacobian (output length changed between evaluations)", m, col.len())?;
            Ok(col)
        })
        .collect()
}

fn columns_to_matrix<R: Real>(cols: &[DV<R>], m: usize) -> Result<DM<R>> {
    if cols.is_empty() {
        Ok(DM::zeros(m, 0))
    } else {
        DM::from_cols(cols)
    }
}

/// Jacobian from `n` forward passes (column by column).
pub fn jacobian_forward_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, DM<R>)> {
    let n = x.len();
    if n == 0 {
        let y = f(x)?;
        let m = y.len();
        return Ok((y, DM::zeros(m, 0)));
    }
    let (y, first) = jacobianv_val(&f, x, &DV::basis(n, 0))?;
    let m = y.len();
    let mut cols = vec![first];
    cols.extend(forward_columns(&f, x, m, 1)?);
    Ok((y, columns_to_matrix(&cols, m)?))
}

/// Jacobian from one recording and `m` reverse sweeps (row by row).
pub fn jacobian_reverse_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, DM<R>)> {
    let (y, pb) = pullback(f, x)?;
    let m = y.len();
    let rows = (0..m)
        .map(|i| pb.apply(&DV::basis(m, i)))
        .collect::<Result<Vec<_>>>()?;
    let j = if rows.is_empty() {
        DM::zeros(0, x.len())
    } else {
        DM::from_rows(&rows)?
    };
    Ok((y, j))
}

pub fn jacobian_forward<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<DM<R>> {
    Ok(jacobian_forward_val(f, x)?.1)
}

pub fn jacobian_reverse<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<DM<R>> {
    Ok(jacobian_reverse_val(f, x)?.1)
}

/// `(f(x), J)`; forward mode when `n <= m`, reverse mode otherwise.
///
/// The first forward pass doubles as the probe that reveals `m`.
pub fn jacobian_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, DM<R>)> {
    let n = x.len();
    if n == 0 {
        return jacobian_forward_val(f, x);
    }
    let (y, first) = jacobianv_val(&f, x, &DV::basis(n, 0))?;
    let m = y.len();
    if n <= m {
        let mut cols = vec![first];
        cols.extend(forward_columns(&f, x, m, 1)?);
        Ok((y, columns_to_matrix(&cols, m)?))
    } else {
        jacobian_reverse_val(f, x)
    }
}

pub fn jacobian<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<DM<R>> {
    Ok(jacobian_val(f, x)?.1)
}

/// Curried [`jacobian`].
pub fn jacobian_fn<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>) -> impl Fn(&DV<R>) -> Result<DM<R>> {
    move |x| jacobian(&f, x)
}

pub fn jacobian_t_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, DM<R>)> {
    let (y, j) = jacobian_val(f, x)?;
    Ok((y, j.transpose()))
}

pub fn jacobian_t<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<DM<R>> {
    Ok(jacobian_t_val(f, x)?.1)
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

fn curl_of<R: Real>(j: &DM<R>) -> DV<R> {
    DV::from_ds(&[
        j.get(2, 1) - j.get(1, 2),
        j.get(0, 2) - j.get(2, 0),
        j.get(1, 0) - j.get(0, 1),
    ])
}

/// `(f(x), ∇×f, ∇·f)` from one forward-mode Jacobian.
pub fn curldiv_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, DV<R>, D<R>)> {
    require_3d("curldiv", x.len(), 3)?;
    let (y, j) = jacobian_forward_val(f, x)?;
    require_3d("curldiv", x.len(), y.len())?;
    let div = j.trace()?;
    Ok((y, curl_of(&j), div))
}

pub fn curldiv<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, D<R>)> {
    let (_, c, d) = curldiv_val(f, x)?;
    Ok((c, d))
}

pub fn curl_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, DV<R>)> {
    require_3d("curl", x.len(), 3)?;
    let (y, j) = jacobian_forward_val(f, x)?;
    require_3d("curl", x.len(), y.len())?;
    Ok((y, curl_of(&j)))
}

pub fn curl<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<DV<R>> {
    Ok(curl_val(f, x)?.1)
}

/// `(f(x), ∇·f)` for `f: R^n -> R^n`.
pub fn div_val<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<(DV<R>, D<R>)> {
    let (y, j) = jacobian_forward_val(f, x)?;
    if y.len() != x.len() {
        return Err(Error::Dimension {
            op: "div",
            requirement: "a field R^n -> R^n",
            got: format!("R^{} -> R^{}", x.len(), y.len()),
        });
    }
    Ok((y, j.trace()?))
}

pub fn div<R: Real>(f: impl Fn(&DV<R>) -> Result<DV<R>>, x: &DV<R>) -> Result<D<R>> {
    Ok(div_val(f, x)?.1)
}
