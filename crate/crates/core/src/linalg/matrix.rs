use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::backend::backend;
use super::dense::Matrix;
use super::infallible;
use super::vector::{add_v, get_v, neg_v, stack, DV};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::scalar::D;
use crate::tag::Tag;
use crate::tape::{lift1, lift2, max_top, sum_tangents, Adj, Backward, Layer, Mode, Node, Tape, TapePos};

/// Differentiable row-major matrix.
#[derive(Clone)]
pub enum DM<R: Real> {
    Const(Arc<Matrix<R>>),
    Dual(Arc<DualMatrix<R>>),
    Rev(Arc<RevMatrix<R>>),
}

pub struct DualMatrix<R: Real> {
    primal: DM<R>,
    tangent: DM<R>,
    tag: Tag,
}

pub struct RevMatrix<R: Real> {
    primal: DM<R>,
    tape: Arc<Tape<R>>,
    index: usize,
}

fn konst<R: Real>(rows: usize, cols: usize, data: Vec<R>) -> DM<R> {
    DM::Const(Arc::new(infallible(Matrix::new(rows, cols, data))))
}

fn shape_str((r, c): (usize, usize)) -> String {
    format!("{r}x{c}")
}

impl<R: Real> DM<R> {
    pub fn from_matrix(m: Matrix<R>) -> Self {
        DM::Const(Arc::new(m))
    }

    pub fn from_rows_vec(rows: &[Vec<R>]) -> Result<Self> {
        Ok(DM::from_matrix(Matrix::from_rows(rows)?))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DM::from_matrix(Matrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        DM::from_matrix(Matrix::identity(n))
    }

    /// Stacks differentiable rows into a matrix (an intrinsic).
    pub fn from_rows(rows: &[DV<R>]) -> Result<Self> {
        let cols = rows.first().map_or(0, DV::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::shape("DM::from_rows", cols, bad.len()));
        }
        Ok(from_rows_m(rows, cols))
    }

    pub fn from_cols(cols: &[DV<R>]) -> Result<Self> {
        Ok(transpose_m(&DM::from_rows(cols)?))
    }

    /// Builds an `rows x cols` matrix from scalars in row-major order.
    pub fn from_ds(rows: usize, cols: usize, ds: &[D<R>]) -> Result<Self> {
        if ds.len() != rows * cols {
            return Err(Error::shape("DM::from_ds", shape_str((rows, cols)), ds.len()));
        }
        if cols == 0 {
            return Ok(DM::zeros(rows, 0));
        }
        let rs: Vec<DV<R>> = ds.chunks(cols).map(stack).collect();
        Ok(from_rows_m(&rs, cols))
    }

    pub fn values(&self) -> &Matrix<R> {
        match self {
            DM::Const(m) => m,
            DM::Dual(d) => d.primal.values(),
            DM::Rev(r) => r.primal.values(),
        }
    }

    pub(crate) fn consts(&self) -> &Matrix<R> {
        match self {
            DM::Const(m) => m,
            _ => panic!("constant kernel called on a differentiable matrix"),
        }
    }

    pub fn rows(&self) -> usize {
        self.values().rows()
    }

    pub fn cols(&self) -> usize {
        self.values().cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values().shape()
    }

    pub fn dual(primal: DM<R>, tangent: DM<R>, tag: Tag) -> Result<Self> {
        if primal.shape() != tangent.shape() {
            return Err(Error::shape("DM::dual", shape_str(primal.shape()), shape_str(tangent.shape())));
        }
        Ok(DM::make_dual(primal, tangent, tag))
    }

    pub fn rev_leaf(primal: DM<R>, tape: &Arc<Tape<R>>) -> Self {
        let index = tape.push(Node::Leaf);
        DM::make_rev(primal, tape.clone(), index)
    }

    pub fn tag(&self) -> Option<Tag> {
        self.top().map(|(t, _)| t)
    }

    pub fn primal(&self) -> DM<R> {
        match self {
            DM::Const(_) => self.clone(),
            DM::Dual(d) => d.primal.clone(),
            DM::Rev(r) => r.primal.clone(),
        }
    }

    pub fn tangent(&self, tag: Tag) -> DM<R> {
        match self {
            DM::Dual(d) if d.tag == tag => d.tangent.clone(),
            _ => DM::zeros(self.rows(), self.cols()),
        }
    }

    pub fn adjoint(&self) -> DM<R> {
        self.read_adjoint().unwrap_or_else(|| DM::zeros(self.rows(), self.cols()))
    }

    pub fn try_adjoint(&self) -> Option<DM<R>> {
        self.read_adjoint()
    }

    /// # Panics
    /// If `(i, j)` is out of bounds.
    pub fn get(&self, i: usize, j: usize) -> D<R> {
        let (r, c) = self.shape();
        assert!(i < r && j < c, "index ({i},{j}) out of bounds for {r}x{c}");
        get_m(self, i, j)
    }

    /// # Panics
    /// If `i` is out of bounds.
    pub fn row(&self, i: usize) -> DV<R> {
        assert!(i < self.rows(), "row {i} out of bounds for {} rows", self.rows());
        row_m(self, i)
    }

    pub fn col(&self, j: usize) -> DV<R> {
        assert!(j < self.cols(), "column {j} out of bounds for {} columns", self.cols());
        row_m(&transpose_m(self), j)
    }

    fn check_same(&self, other: &DM<R>, op: &'static str) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::shape(op, shape_str(self.shape()), shape_str(other.shape())))
        }
    }

    pub fn add(&self, other: &DM<R>) -> Result<DM<R>> {
        self.check_same(other, "add")?;
        Ok(add_m(self, other))
    }

    pub fn sub(&self, other: &DM<R>) -> Result<DM<R>> {
        self.check_same(other, "sub")?;
        Ok(sub_m(self, other))
    }

    pub fn neg(&self) -> DM<R> {
        neg_m(self)
    }

    pub fn scale(&self, s: &D<R>) -> DM<R> {
        scale_m(s, self)
    }

    /// `self + alpha * x`.
    pub fn axpy(&self, alpha: &D<R>, x: &DM<R>) -> Result<DM<R>> {
        self.check_same(x, "axpy")?;
        Ok(add_m(self, &scale_m(alpha, x)))
    }

    pub fn transpose(&self) -> DM<R> {
        transpose_m(self)
    }

    pub fn trace(&self) -> Result<D<R>> {
        let (r, c) = self.shape();
        if r != c {
            return Err(Error::Dimension {
                op: "trace",
                requirement: "a square matrix",
                got: shape_str((r, c)),
            });
        }
        Ok(trace_m(self))
    }

    pub fn matmul(&self, other: &DM<R>) -> Result<DM<R>> {
        if self.cols() != other.rows() {
            return Err(Error::shape("matmul", shape_str(self.shape()), shape_str(other.shape())));
        }
        Ok(matmul_m(self, other))
    }

    pub fn matvec(&self, x: &DV<R>) -> Result<DV<R>> {
        if self.cols() != x.len() {
            return Err(Error::shape("matvec", shape_str(self.shape()), x.len()));
        }
        Ok(matvec_m(self, x))
    }

    /// `u v^T`.
    pub fn outer(u: &DV<R>, v: &DV<R>) -> DM<R> {
        outer_m(u, v)
    }

    /// Solves `self * x = b` for symmetric `self`.
    ///
    /// The matrix is rejected when its relative Frobenius asymmetry exceeds
    /// `1e-10` (or `100 * epsilon` for low precisions); it is never silently
    /// symmetrized.
    pub fn solve_symmetric(&self, b: &DV<R>) -> Result<DV<R>> {
        let (r, c) = self.shape();
        if r != c {
            return Err(Error::Dimension {
                op: "solve_symmetric",
                requirement: "a square matrix",
                got: shape_str((r, c)),
            });
        }
        if b.len() != r {
            return Err(Error::shape("solve_symmetric", shape_str((r, c)), b.len()));
        }
        let asym = self.values().asymmetry();
        if !(asym <= symmetry_tolerance::<R>()) {
            return Err(Error::NotSymmetric {
                asymmetry: asym.to_f64_lossy(),
            });
        }
        solve_m(self, b)
    }

    pub fn map(&self, f: impl Fn(&D<R>) -> D<R>) -> DM<R> {
        let (r, c) = self.shape();
        let ds: Vec<D<R>> = (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| f(&get_m(self, i, j))).collect();
        infallible(DM::from_ds(r, c, &ds))
    }
}

pub(crate) fn symmetry_tolerance<R: Real>() -> R {
    R::lit(1e-10).max(R::epsilon() * R::lit(100.0))
}

/// Matrix counterpart of [`reverse_sweep`](crate::reverse_sweep).
pub fn reverse_sweep_m<R: Real>(output: &DM<R>, seed: &DM<R>, tag: Tag) -> Result<()> {
    output.check_same(seed, "reverse_sweep")?;
    output.sweep_from(seed, tag)
}

fn zeros_like<R: Real>(a: &DM<R>) -> DM<R> {
    DM::zeros(a.rows(), a.cols())
}

pub(crate) fn add_m<R: Real>(a: &DM<R>, b: &DM<R>) -> DM<R> {
    infallible(lift2(
        a,
        b,
        "add",
        |a: &DM<R>, b: &DM<R>| {
            let (r, c) = a.shape();
            Ok(konst(r, c, backend::<R>().add(a.consts().data(), b.consts().data())))
        },
        |a, b| Ok(add_m(a, b)),
        |a, _, _, da, db| Ok(sum_tangents(vec![da.cloned(), db.cloned()], add_m, || zeros_like(a))),
        |ybar: &DM<R>, _, _, _| Ok(ybar.clone().into_adj()),
        |ybar: &DM<R>, _, _, _| Ok(ybar.clone().into_adj()),
    ))
}

pub(crate) fn sub_m<R: Real>(a: &DM<R>, b: &DM<R>) -> DM<R> {
    infallible(lift2(
        a,
        b,
        "sub",
        |a: &DM<R>, b: &DM<R>| {
            let (r, c) = a.shape();
            Ok(konst(r, c, backend::<R>().sub(a.consts().data(), b.consts().data())))
        },
        |a, b| Ok(sub_m(a, b)),
        |a, _, _, da, db| Ok(sum_tangents(vec![da.cloned(), db.map(neg_m)], add_m, || zeros_like(a))),
        |ybar: &DM<R>, _, _, _| Ok(ybar.clone().into_adj()),
        |ybar: &DM<R>, _, _, _| Ok(neg_m(ybar).into_adj()),
    ))
}

pub(crate) fn neg_m<R: Real>(a: &DM<R>) -> DM<R> {
    infallible(lift1(
        a,
        "neg",
        |a: &DM<R>| {
            let (r, c) = a.shape();
            Ok(konst(r, c, backend::<R>().scale(-R::one(), a.consts().data())))
        },
        |a| Ok(neg_m(a)),
        |_, da, _| Ok(neg_m(da)),
        |ybar: &DM<R>, _, _| Ok(neg_m(ybar).into_adj()),
    ))
}

pub(crate) fn scale_m<R: Real>(s: &D<R>, a: &DM<R>) -> DM<R> {
    infallible(lift2(
        s,
        a,
        "scale",
        |s: &D<R>, a: &DM<R>| {
            let (r, c) = a.shape();
            Ok(konst(r, c, backend::<R>().scale(s.value(), a.consts().data())))
        },
        |s, a| Ok(scale_m(s, a)),
        |s, a, _, ds, da| {
            let x = ds.map(|ds| scale_m(ds, a));
            let y = da.map(|da| scale_m(s, da));
            Ok(sum_tangents(vec![x, y], add_m, || zeros_like(a)))
        },
        |ybar: &DM<R>, _, a, _| Ok(frobenius_m(ybar, a).into_adj()),
        |ybar: &DM<R>, s, _, _| Ok(scale_m(s, ybar).into_adj()),
    ))
}

/// Frobenius inner product, expressed through intrinsics so it stays
/// differentiable.
fn frobenius_m<R: Real>(a: &DM<R>, b: &DM<R>) -> D<R> {
    trace_m(&matmul_m(&transpose_m(a), b))
}

pub(crate) fn transpose_m<R: Real>(a: &DM<R>) -> DM<R> {
    infallible(lift1(
        a,
        "transpose",
        |a: &DM<R>| {
            let (r, c) = a.shape();
            Ok(konst(c, r, backend::<R>().transpose(a.consts().data(), r, c)))
        },
        |a| Ok(transpose_m(a)),
        |_, da, _| Ok(transpose_m(da)),
        |ybar: &DM<R>, _, _| Ok(transpose_m(ybar).into_adj()),
    ))
}

pub(crate) fn trace_m<R: Real>(a: &DM<R>) -> D<R> {
    let (rows, cols) = a.shape();
    infallible(lift1(
        a,
        "trace",
        |a: &DM<R>| Ok(D::Const(a.consts().trace())),
        |a| Ok(trace_m(a)),
        |_, da, _| Ok(trace_m(da)),
        move |ybar: &D<R>, _, _| {
            Ok(Adj::M {
                rows,
                cols,
                dense: None,
                sparse: (0..rows.min(cols)).map(|i| (i * cols + i, ybar.clone())).collect(),
            })
        },
    ))
}

pub(crate) fn get_m<R: Real>(a: &DM<R>, i: usize, j: usize) -> D<R> {
    let (rows, cols) = a.shape();
    infallible(lift1(
        a,
        "index",
        move |a: &DM<R>| Ok(D::Const(a.consts().get(i, j))),
        move |a| Ok(get_m(a, i, j)),
        move |_, da, _| Ok(get_m(da, i, j)),
        move |ybar: &D<R>, _, _| {
            Ok(Adj::M {
                rows,
                cols,
                dense: None,
                sparse: vec![(i * cols + j, ybar.clone())],
            })
        },
    ))
}

pub(crate) fn row_m<R: Real>(a: &DM<R>, i: usize) -> DV<R> {
    let (rows, cols) = a.shape();
    infallible(lift1(
        a,
        "row",
        move |a: &DM<R>| Ok(DV::from_slice(a.consts().row(i))),
        move |a| Ok(row_m(a, i)),
        move |_, da, _| Ok(row_m(da, i)),
        move |ybar: &DV<R>, _, _| {
            Ok(Adj::M {
                rows,
                cols,
                dense: None,
                sparse: (0..cols).map(|j| (i * cols + j, get_v(ybar, j))).collect(),
            })
        },
    ))
}

fn from_rows_m<R: Real>(rs: &[DV<R>], cols: usize) -> DM<R> {
    let top = rs.iter().fold(None, |acc, r| max_top(acc, r.top()));
    match top {
        None => {
            let data: Vec<R> = rs.iter().flat_map(|r| r.consts().iter().copied()).collect();
            konst(rs.len(), cols, data)
        }
        Some((t, Mode::Forward)) => {
            let (ps, ts): (Vec<DV<R>>, Vec<DV<R>>) = rs
                .iter()
                .map(|r| {
                    let (p, dt) = r.split_fwd(t);
                    (p, dt.unwrap_or_else(|| DV::zeros(cols)))
                })
                .unzip();
            DM::make_dual(from_rows_m(&ps, cols), from_rows_m(&ts, cols), t)
        }
        Some((t, Mode::Reverse)) => {
            let mut ps = Vec::with_capacity(rs.len());
            let mut parents = Vec::new();
            let mut positions = Vec::new();
            let mut tape = None;
            for (i, r) in rs.iter().enumerate() {
                let (p, node) = r.split_rev(t);
                ps.push(p);
                if let Some((tp, idx)) = node {
                    tape.get_or_insert(tp);
                    parents.push(idx);
                    positions.push(i);
                }
            }
            let tape = tape.expect("reverse top without a node");
            let y = from_rows_m(&ps, cols);
            let backward: Backward<R> = Box::new(move |adj| {
                let ybar = DM::from_adj(adj);
                Ok(positions.iter().map(|&i| row_m(&ybar, i).into_adj()).collect())
            });
            let index = tape.push(Node::Custom {
                kind: "from_rows",
                parents,
                backward,
            });
            DM::make_rev(y, tape, index)
        }
    }
}

pub(crate) fn matmul_m<R: Real>(a: &DM<R>, b: &DM<R>) -> DM<R> {
    infallible(lift2(
        a,
        b,
        "matmul",
        |a: &DM<R>, b: &DM<R>| {
            let ((m, k), n) = (a.shape(), b.cols());
            Ok(konst(m, n, backend::<R>().matmul(a.consts().data(), m, k, b.consts().data(), n)))
        },
        |a, b| Ok(matmul_m(a, b)),
        |a, b, y: &DM<R>, da, db| {
            let x = da.map(|da| matmul_m(da, b));
            let z = db.map(|db| matmul_m(a, db));
            Ok(sum_tangents(vec![x, z], add_m, || zeros_like(y)))
        },
        |ybar: &DM<R>, _, b, _| Ok(matmul_m(ybar, &transpose_m(b)).into_adj()),
        |ybar: &DM<R>, a, _, _| Ok(matmul_m(&transpose_m(a), ybar).into_adj()),
    ))
}

pub(crate) fn matvec_m<R: Real>(a: &DM<R>, x: &DV<R>) -> DV<R> {
    infallible(lift2(
        a,
        x,
        "matvec",
        |a: &DM<R>, x: &DV<R>| {
            let (r, c) = a.shape();
            Ok(DV::from_vec(backend::<R>().matvec(a.consts().data(), r, c, x.consts())))
        },
        |a, x| Ok(matvec_m(a, x)),
        |a, x, _, da, dx| {
            let p = da.map(|da| matvec_m(da, x));
            let q = dx.map(|dx| matvec_m(a, dx));
            Ok(sum_tangents(vec![p, q], add_v, || DV::zeros(a.rows())))
        },
        |ybar: &DV<R>, _, x, _| Ok(outer_m(ybar, x).into_adj()),
        |ybar: &DV<R>, a, _, _| Ok(matvec_m(&transpose_m(a), ybar).into_adj()),
    ))
}

pub(crate) fn outer_m<R: Real>(u: &DV<R>, v: &DV<R>) -> DM<R> {
    infallible(lift2(
        u,
        v,
        "outer",
        |u: &DV<R>, v: &DV<R>| Ok(konst(u.len(), v.len(), backend::<R>().outer(u.consts(), v.consts()))),
        |u, v| Ok(outer_m(u, v)),
        |u, v, _, du, dv| {
            let p = du.map(|du| outer_m(du, v));
            let q = dv.map(|dv| outer_m(u, dv));
            Ok(sum_tangents(vec![p, q], add_m, || DM::zeros(u.len(), v.len())))
        },
        |ybar: &DM<R>, _, v, _| Ok(matvec_m(ybar, v).into_adj()),
        |ybar: &DM<R>, u, _, _| Ok(matvec_m(&transpose_m(ybar), u).into_adj()),
    ))
}

/// Forward: `x' = A^{-1}(b' - A' x)`. Reverse: `bbar = A^{-1} xbar`,
/// `Abar = -(bbar x^T + x bbar^T) / 2`, the symmetric part of the
/// unconstrained rule since `A` is constrained to be symmetric.
pub(crate) fn solve_m<R: Real>(a: &DM<R>, b: &DV<R>) -> Result<DV<R>> {
    lift2(
        a,
        b,
        "solve_symmetric",
        |a: &DM<R>, b: &DV<R>| {
            let m = a.consts();
            backend::<R>()
                .solve_symmetric(m.data(), m.rows(), b.consts())
                .map(DV::from_vec)
                .ok_or(Error::Singular)
        },
        solve_m,
        |a, _, x: &DV<R>, da, db| {
            let rhs = match (db, da) {
                (Some(db), Some(da)) => add_v(db, &neg_v(&matvec_m(da, x))),
                (Some(db), None) => db.clone(),
                (None, Some(da)) => neg_v(&matvec_m(da, x)),
                (None, None) => return Ok(DV::zeros(x.len())),
            };
            solve_m(a, &rhs)
        },
        |xbar: &DV<R>, a, _, x| {
            let bbar = solve_m(a, xbar)?;
            let sym = add_m(&outer_m(&bbar, x), &outer_m(x, &bbar));
            Ok(scale_m(&D::Const(-R::lit(0.5)), &sym).into_adj())
        },
        |xbar: &DV<R>, a, _, _| Ok(solve_m(a, xbar)?.into_adj()),
    )
}

impl<R: Real> Layer<R> for DM<R> {
    fn top(&self) -> Option<(Tag, Mode)> {
        match self {
            DM::Const(_) => None,
            DM::Dual(d) => Some((d.tag, Mode::Forward)),
            DM::Rev(r) => Some((r.tape.tag(), Mode::Reverse)),
        }
    }

    fn split_fwd(&self, t: Tag) -> (Self, Option<Self>) {
        match self {
            DM::Dual(d) if d.tag == t => (d.primal.clone(), Some(d.tangent.clone())),
            _ => (self.clone(), None),
        }
    }

    fn split_rev(&self, t: Tag) -> (Self, Option<TapePos<R>>) {
        match self {
            DM::Rev(r) if r.tape.tag() == t => (r.primal.clone(), Some((r.tape.clone(), r.index))),
            _ => (self.clone(), None),
        }
    }

    fn make_dual(primal: Self, tangent: Self, tag: Tag) -> Self {
        DM::Dual(Arc::new(DualMatrix { primal, tangent, tag }))
    }

    fn make_rev(primal: Self, tape: Arc<Tape<R>>, index: usize) -> Self {
        DM::Rev(Arc::new(RevMatrix { primal, tape, index }))
    }

    fn add_same(&self, other: &Self) -> Self {
        add_m(self, other)
    }

    fn into_adj(self) -> Adj<R> {
        let (rows, cols) = self.shape();
        Adj::M {
            rows,
            cols,
            dense: Some(self),
            sparse: Vec::new(),
        }
    }

    fn from_adj(adj: &Adj<R>) -> Self {
        match adj {
            Adj::M {
                rows,
                cols,
                dense,
                sparse,
            } => {
                let scattered = (!sparse.is_empty())
                    .then(|| infallible(DM::from_ds(*rows, *cols, &Adj::scatter(rows * cols, sparse))));
                match (dense, scattered) {
                    (Some(d), Some(s)) => add_m(d, &s),
                    (Some(d), None) => d.clone(),
                    (None, Some(s)) => s,
                    (None, None) => DM::zeros(*rows, *cols),
                }
            }
            _ => panic!("expected a matrix adjoint"),
        }
    }

}

impl<R: Real> fmt::Debug for DM<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DM::Const(m) => write!(f, "DM({m:?})"),
            DM::Dual(d) => write!(f, "DualM({:?}, {:?}, {})", d.primal, d.tangent, d.tag),
            DM::Rev(r) => write!(f, "RevM({:?}, {}@{})", r.primal, r.tape.tag(), r.index),
        }
    }
}

impl<R: Real> From<Matrix<R>> for DM<R> {
    fn from(m: Matrix<R>) -> Self {
        DM::from_matrix(m)
    }
}

impl<R: Real> Add<&DM<R>> for &DM<R> {
    type Output = DM<R>;
    fn add(self, rhs: &DM<R>) -> DM<R> {
        DM::add(self, rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<R: Real> Sub<&DM<R>> for &DM<R> {
    type Output = DM<R>;
    fn sub(self, rhs: &DM<R>) -> DM<R> {
        DM::sub(self, rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<R: Real> Neg for &DM<R> {
    type Output = DM<R>;
    fn neg(self) -> DM<R> {
        neg_m(self)
    }
}

impl<R: Real> Mul<&DM<R>> for &DM<R> {
    type Output = DM<R>;
    /// # Panics
    /// On inner-dimension mismatch; use [`DM::matmul`] for a `Result`.
    fn mul(self, rhs: &DM<R>) -> DM<R> {
        self.matmul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<R: Real> Mul<&DV<R>> for &DM<R> {
    type Output = DV<R>;
    fn mul(self, rhs: &DV<R>) -> DV<R> {
        self.matvec(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<R: Real> Mul<&D<R>> for &DM<R> {
    type Output = DM<R>;
    fn mul(self, rhs: &D<R>) -> DM<R> {
        scale_m(rhs, self)
    }
}
