use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::backend::backend;
use super::infallible;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::scalar::D;
use crate::tag::Tag;
use crate::tape::{lift1, lift2, max_top, sum_tangents, Adj, Backward, Layer, Mode, Node, Tape, TapePos};

/// Differentiable vector.
#[derive(Clone)]
pub enum DV<R: Real> {
    Const(Arc<Vec<R>>),
    Dual(Arc<DualVector<R>>),
    Rev(Arc<RevVector<R>>),
}

pub struct DualVector<R: Real> {
    primal: DV<R>,
    tangent: DV<R>,
    tag: Tag,
}

pub struct RevVector<R: Real> {
    primal: DV<R>,
    tape: Arc<Tape<R>>,
    index: usize,
}

impl<R: Real> DV<R> {
    pub fn from_vec(v: Vec<R>) -> Self {
        DV::Const(Arc::new(v))
    }

    pub fn from_slice(v: &[R]) -> Self {
        DV::from_vec(v.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        DV::from_vec(vec![R::zero(); n])
    }

    /// Unit vector `e_i` of length `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![R::zero(); n];
        v[i] = R::one();
        DV::from_vec(v)
    }

    /// Builds a vector from scalars. This is itself an intrinsic, so the
    /// result carries every derivative layer present in `ds`.
    pub fn from_ds(ds: &[D<R>]) -> Self {
        stack(ds)
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Underlying reals with every derivative layer stripped.
    pub fn values(&self) -> &[R] {
        match self {
            DV::Const(v) => v,
            DV::Dual(d) => d.primal.values(),
            DV::Rev(r) => r.primal.values(),
        }
    }

    pub fn to_vec(&self) -> Vec<R> {
        self.values().to_vec()
    }

    pub(crate) fn consts(&self) -> &[R] {
        match self {
            DV::Const(v) => v,
            _ => panic!("constant kernel called on a differentiable vector"),
        }
    }

    pub fn dual(primal: DV<R>, tangent: DV<R>, tag: Tag) -> Result<Self> {
        if primal.len() != tangent.len() {
            return Err(Error::shape("DV::dual", primal.len(), tangent.len()));
        }
        Ok(DV::make_dual(primal, tangent, tag))
    }

    pub fn rev_leaf(primal: DV<R>, tape: &Arc<Tape<R>>) -> Self {
        let index = tape.push(Node::Leaf);
        DV::make_rev(primal, tape.clone(), index)
    }

    pub fn tag(&self) -> Option<Tag> {
        self.top().map(|(t, _)| t)
    }

    pub fn primal(&self) -> DV<R> {
        match self {
            DV::Const(_) => self.clone(),
            DV::Dual(d) => d.primal.clone(),
            DV::Rev(r) => r.primal.clone(),
        }
    }

    pub fn tangent(&self, tag: Tag) -> DV<R> {
        match self {
            DV::Dual(d) if d.tag == tag => d.tangent.clone(),
            _ => DV::zeros(self.len()),
        }
    }

    pub fn adjoint(&self) -> DV<R> {
        self.read_adjoint().unwrap_or_else(|| DV::zeros(self.len()))
    }

    pub fn try_adjoint(&self) -> Option<DV<R>> {
        self.read_adjoint()
    }

    /// Scalar view of element `i`.
    ///
    /// # Panics
    /// If `i` is out of bounds.
    pub fn get(&self, i: usize) -> D<R> {
        assert!(i < self.len(), "index {i} out of bounds for length {}", self.len());
        get_v(self, i)
    }

    pub fn to_ds(&self) -> Vec<D<R>> {
        (0..self.len()).map(|i| get_v(self, i)).collect()
    }

    fn check_len(&self, other: &DV<R>, op: &'static str) -> Result<()> {
        if self.len() == other.len() {
            Ok(())
        } else {
            Err(Error::shape(op, self.len(), other.len()))
        }
    }

    pub fn add(&self, other: &DV<R>) -> Result<DV<R>> {
        self.check_len(other, "add")?;
        Ok(add_v(self, other))
    }

    pub fn sub(&self, other: &DV<R>) -> Result<DV<R>> {
        self.check_len(other, "sub")?;
        Ok(sub_v(self, other))
    }

    pub fn neg(&self) -> DV<R> {
        neg_v(self)
    }

    pub fn scale(&self, s: &D<R>) -> DV<R> {
        scale_v(s, self)
    }

    /// `self + alpha * x`.
    pub fn axpy(&self, alpha: &D<R>, x: &DV<R>) -> Result<DV<R>> {
        self.check_len(x, "axpy")?;
        Ok(add_v(self, &scale_v(alpha, x)))
    }

    pub fn mul_elementwise(&self, other: &DV<R>) -> Result<DV<R>> {
        self.check_len(other, "mul_elementwise")?;
        Ok(mul_v(self, other))
    }

    pub fn dot(&self, other: &DV<R>) -> Result<D<R>> {
        self.check_len(other, "dot")?;
        Ok(dot_v(self, other))
    }

    pub fn sum(&self) -> D<R> {
        sum_v(self)
    }

    /// Euclidean norm. The derivative at the zero vector is taken as zero.
    pub fn l2norm(&self) -> D<R> {
        norm_v(self)
    }

    /// Applies `f` element by element.
    ///
    /// A closure is opaque to the AD layer, so this is the slow path: each
    /// element goes through scalar `D` arithmetic and the results are
    /// stacked back into a vector.
    pub fn map(&self, f: impl Fn(&D<R>) -> D<R>) -> DV<R> {
        let ds: Vec<D<R>> = self.to_ds().iter().map(f).collect();
        stack(&ds)
    }

    pub fn map2(&self, other: &DV<R>, f: impl Fn(&D<R>, &D<R>) -> D<R>) -> Result<DV<R>> {
        self.check_len(other, "map2")?;
        let ds: Vec<D<R>> = self
            .to_ds()
            .iter()
            .zip(other.to_ds().iter())
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(stack(&ds))
    }
}

/// Vector counterpart of [`reverse_sweep`](crate::reverse_sweep).
pub fn reverse_sweep_v<R: Real>(output: &DV<R>, seed: &DV<R>, tag: Tag) -> Result<()> {
    output.check_len(seed, "reverse_sweep")?;
    output.sweep_from(seed, tag)
}

pub(crate) fn add_v<R: Real>(a: &DV<R>, b: &DV<R>) -> DV<R> {
    infallible(lift2(
        a,
        b,
        "add",
        |a: &DV<R>, b: &DV<R>| Ok(DV::from_vec(backend::<R>().add(a.consts(), b.consts()))),
        |a, b| Ok(add_v(a, b)),
        |a, _, _, da, db| Ok(sum_tangents(vec![da.cloned(), db.cloned()], add_v, || DV::zeros(a.len()))),
        |ybar: &DV<R>, _, _, _| Ok(ybar.clone().into_adj()),
        |ybar: &DV<R>, _, _, _| Ok(ybar.clone().into_adj()),
    ))
}

pub(crate) fn sub_v<R: Real>(a: &DV<R>, b: &DV<R>) -> DV<R> {
    infallible(lift2(
        a,
        b,
        "sub",
        |a: &DV<R>, b: &DV<R>| Ok(DV::from_vec(backend::<R>().sub(a.consts(), b.consts()))),
        |a, b| Ok(sub_v(a, b)),
        |a, _, _, da, db| {
            let db = db.map(neg_v);
            Ok(sum_tangents(vec![da.cloned(), db], add_v, || DV::zeros(a.len())))
        },
        |ybar: &DV<R>, _, _, _| Ok(ybar.clone().into_adj()),
        |ybar: &DV<R>, _, _, _| Ok(neg_v(ybar).into_adj()),
    ))
}

pub(crate) fn neg_v<R: Real>(a: &DV<R>) -> DV<R> {
    infallible(lift1(
        a,
        "neg",
        |a: &DV<R>| Ok(DV::from_vec(backend::<R>().scale(-R::one(), a.consts()))),
        |a| Ok(neg_v(a)),
        |_, da, _| Ok(neg_v(da)),
        |ybar: &DV<R>, _, _| Ok(neg_v(ybar).into_adj()),
    ))
}

pub(crate) fn scale_v<R: Real>(s: &D<R>, v: &DV<R>) -> DV<R> {
    infallible(lift2(
        s,
        v,
        "scale",
        |s: &D<R>, v: &DV<R>| Ok(DV::from_vec(backend::<R>().scale(s.value(), v.consts()))),
        |s, v| Ok(scale_v(s, v)),
        |s, v, _, ds, dv| {
            let a = ds.map(|ds| scale_v(ds, v));
            let b = dv.map(|dv| scale_v(s, dv));
            Ok(sum_tangents(vec![a, b], add_v, || DV::zeros(v.len())))
        },
        |ybar: &DV<R>, _, v, _| Ok(dot_v(ybar, v).into_adj()),
        |ybar: &DV<R>, s, _, _| Ok(scale_v(s, ybar).into_adj()),
    ))
}

pub(crate) fn mul_v<R: Real>(a: &DV<R>, b: &DV<R>) -> DV<R> {
    infallible(lift2(
        a,
        b,
        "mul_elementwise",
        |a: &DV<R>, b: &DV<R>| Ok(DV::from_vec(backend::<R>().mul_elementwise(a.consts(), b.consts()))),
        |a, b| Ok(mul_v(a, b)),
        |a, b, _, da, db| {
            let x = da.map(|da| mul_v(da, b));
            let y = db.map(|db| mul_v(a, db));
            Ok(sum_tangents(vec![x, y], add_v, || DV::zeros(a.len())))
        },
        |ybar: &DV<R>, _, b, _| Ok(mul_v(ybar, b).into_adj()),
        |ybar: &DV<R>, a, _, _| Ok(mul_v(ybar, a).into_adj()),
    ))
}

pub(crate) fn dot_v<R: Real>(a: &DV<R>, b: &DV<R>) -> D<R> {
    infallible(lift2(
        a,
        b,
        "dot",
        |a: &DV<R>, b: &DV<R>| Ok(D::Const(backend::<R>().dot(a.consts(), b.consts()))),
        |a, b| Ok(dot_v(a, b)),
        |a, b, _, da, db| {
            let x = da.map(|da| dot_v(da, b));
            let y = db.map(|db| dot_v(a, db));
            Ok(sum_tangents(vec![x, y], |p, q| p + q, D::zero))
        },
        |ybar: &D<R>, _, b, _| Ok(scale_v(ybar, b).into_adj()),
        |ybar: &D<R>, a, _, _| Ok(scale_v(ybar, a).into_adj()),
    ))
}

pub(crate) fn sum_v<R: Real>(a: &DV<R>) -> D<R> {
    infallible(lift1(
        a,
        "sum",
        |a: &DV<R>| Ok(D::Const(backend::<R>().sum(a.consts()))),
        |a| Ok(sum_v(a)),
        |_, da, _| Ok(sum_v(da)),
        |ybar: &D<R>, a: &DV<R>, _| Ok(scale_v(ybar, &DV::from_vec(vec![R::one(); a.len()])).into_adj()),
    ))
}

pub(crate) fn norm_v<R: Real>(a: &DV<R>) -> D<R> {
    infallible(lift1(
        a,
        "l2norm",
        |a: &DV<R>| Ok(D::Const(backend::<R>().l2norm(a.consts()))),
        |a| Ok(norm_v(a)),
        |a, da, y: &D<R>| {
            if y.value().is_zero() {
                Ok(D::zero())
            } else {
                Ok(dot_v(a, da) / y)
            }
        },
        |ybar: &D<R>, a: &DV<R>, y: &D<R>| {
            if y.value().is_zero() {
                Ok(DV::zeros(a.len()).into_adj())
            } else {
                Ok(scale_v(&(ybar / y), a).into_adj())
            }
        },
    ))
}

pub(crate) fn get_v<R: Real>(a: &DV<R>, i: usize) -> D<R> {
    let len = a.len();
    infallible(lift1(
        a,
        "index",
        move |a: &DV<R>| Ok(D::Const(a.consts()[i])),
        move |a| Ok(get_v(a, i)),
        move |_, da, _| Ok(get_v(da, i)),
        move |ybar: &D<R>, _, _| {
            Ok(Adj::V {
                len,
                dense: None,
                sparse: vec![(i, ybar.clone())],
            })
        },
    ))
}

pub(crate) fn stack<R: Real>(ds: &[D<R>]) -> DV<R> {
    let top = ds.iter().fold(None, |acc, d| max_top(acc, d.top()));
    match top {
        None => DV::from_vec(ds.iter().map(D::value).collect()),
        Some((t, Mode::Forward)) => {
            let (ps, ts): (Vec<D<R>>, Vec<D<R>>) = ds
                .iter()
                .map(|d| {
                    let (p, dt) = d.split_fwd(t);
                    (p, dt.unwrap_or_else(D::zero))
                })
                .unzip();
            DV::make_dual(stack(&ps), stack(&ts), t)
        }
        Some((t, Mode::Reverse)) => {
            let mut ps = Vec::with_capacity(ds.len());
            let mut parents = Vec::new();
            let mut positions = Vec::new();
            let mut tape = None;
            for (i, d) in ds.iter().enumerate() {
                let (p, node) = d.split_rev(t);
                ps.push(p);
                if let Some((tp, idx)) = node {
                    tape.get_or_insert(tp);
                    parents.push(idx);
                    positions.push(i);
                }
            }
            let tape = tape.expect("reverse top without a node");
            let y = stack(&ps);
            let backward: Backward<R> = Box::new(move |adj| {
                let ybar = DV::from_adj(adj);
                Ok(positions.iter().map(|&i| Adj::S(get_v(&ybar, i))).collect())
            });
            let index = tape.push(Node::Custom {
                kind: "stack",
                parents,
                backward,
            });
            DV::make_rev(y, tape, index)
        }
    }
}

impl<R: Real> Layer<R> for DV<R> {
    fn top(&self) -> Option<(Tag, Mode)> {
        match self {
            DV::Const(_) => None,
            DV::Dual(d) => Some((d.tag, Mode::Forward)),
            DV::Rev(r) => Some((r.tape.tag(), Mode::Reverse)),
        }
    }

    fn split_fwd(&self, t: Tag) -> (Self, Option<Self>) {
        match self {
            DV::Dual(d) if d.tag == t => (d.primal.clone(), Some(d.tangent.clone())),
            _ => (self.clone(), None),
        }
    }

    fn split_rev(&self, t: Tag) -> (Self, Option<TapePos<R>>) {
        match self {
            DV::Rev(r) if r.tape.tag() == t => (r.primal.clone(), Some((r.tape.clone(), r.index))),
            _ => (self.clone(), None),
        }
    }

    fn make_dual(primal: Self, tangent: Self, tag: Tag) -> Self {
        DV::Dual(Arc::new(DualVector { primal, tangent, tag }))
    }

    fn make_rev(primal: Self, tape: Arc<Tape<R>>, index: usize) -> Self {
        DV::Rev(Arc::new(RevVector { primal, tape, index }))
    }

    fn add_same(&self, other: &Self) -> Self {
        add_v(self, other)
    }

    fn into_adj(self) -> Adj<R> {
        Adj::V {
            len: self.len(),
            dense: Some(self),
            sparse: Vec::new(),
        }
    }

    fn from_adj(adj: &Adj<R>) -> Self {
        match adj {
            Adj::V { len, dense, sparse } => {
                let scattered = (!sparse.is_empty()).then(|| stack(&Adj::scatter(*len, sparse)));
                match (dense, scattered) {
                    (Some(d), Some(s)) => add_v(d, &s),
                    (Some(d), None) => d.clone(),
                    (None, Some(s)) => s,
                    (None, None) => DV::zeros(*len),
                }
            }
            _ => panic!("expected a vector adjoint"),
        }
    }

}

impl<R: Real> fmt::Debug for DV<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DV::Const(v) => write!(f, "DV({v:?})"),
            DV::Dual(d) => write!(f, "DualV({:?}, {:?}, {})", d.primal, d.tangent, d.tag),
            DV::Rev(r) => write!(f, "RevV({:?}, {}@{})", r.primal, r.tape.tag(), r.index),
        }
    }
}

impl<R: Real> From<Vec<R>> for DV<R> {
    fn from(v: Vec<R>) -> Self {
        DV::from_vec(v)
    }
}

impl<R: Real> From<&[R]> for DV<R> {
    fn from(v: &[R]) -> Self {
        DV::from_slice(v)
    }
}

macro_rules! vector_binop {
    ($trait:ident, $method:ident) => {
        impl<R: Real> $trait<&DV<R>> for &DV<R> {
            type Output = DV<R>;
            /// # Panics
            /// On length mismatch; use the named method for a `Result`.
            fn $method(self, rhs: &DV<R>) -> DV<R> {
                DV::$method(self, rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl<R: Real> $trait<DV<R>> for DV<R> {
            type Output = DV<R>;
            fn $method(self, rhs: DV<R>) -> DV<R> {
                DV::$method(&self, &rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}

vector_binop!(Add, add);
vector_binop!(Sub, sub);

impl<R: Real> Neg for &DV<R> {
    type Output = DV<R>;
    fn neg(self) -> DV<R> {
        neg_v(self)
    }
}

impl<R: Real> Neg for DV<R> {
    type Output = DV<R>;
    fn neg(self) -> DV<R> {
        neg_v(&self)
    }
}

impl<R: Real> Mul<&D<R>> for &DV<R> {
    type Output = DV<R>;
    fn mul(self, rhs: &D<R>) -> DV<R> {
        scale_v(rhs, self)
    }
}

impl<R: Real> Mul<R> for &DV<R> {
    type Output = DV<R>;
    fn mul(self, rhs: R) -> DV<R> {
        scale_v(&D::Const(rhs), self)
    }
}
