//! The differentiable scalar [`D`].
//!
//! A `D` is a plain constant, a tagged forward dual (primal + tangent) or a
//! tagged reverse node (primal + position on the tape of its tag). Primals
//! and tangents are themselves `D`s, so a value nested `k` operator
//! invocations deep is a tree of depth `k` whose leaves are constants.
//!
//! Binary operations pick the operand carrying the larger tag as the active
//! one and treat the other as a constant with respect to that tag. Because
//! inner invocations always hold larger tags than the invocations enclosing
//! them, a perturbation can never leak into the wrong derivative.
//!
//! Non-smooth points use fixed subgradients: `abs'(0) = sign'(x) = 0`, and
//! `min2`/`max2` send the derivative to the first argument on ties.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Arc;

use crate::error::Result;
use crate::real::Real;
use crate::tag::Tag;
use crate::tape::{Adj, Layer, Mode, Node, Tape, TapePos};

#[derive(Clone)]
pub enum D<R: Real> {
    Const(R),
    Dual(Arc<DualScalar<R>>),
    Rev(Arc<RevScalar<R>>),
}

pub struct DualScalar<R: Real> {
    primal: D<R>,
    tangent: D<R>,
    tag: Tag,
}

pub struct RevScalar<R: Real> {
    primal: D<R>,
    tape: Arc<Tape<R>>,
    index: usize,
}

impl<R: Real> D<R> {
    pub fn constant(x: R) -> Self {
        D::Const(x)
    }

    pub fn zero() -> Self {
        D::Const(R::zero())
    }

    pub fn one() -> Self {
        D::Const(R::one())
    }

    /// A forward dual under `tag`. `primal` and `tangent` must only carry
    /// tags smaller than `tag`.
    pub fn dual(primal: D<R>, tangent: D<R>, tag: Tag) -> Self {
        D::Dual(Arc::new(DualScalar {
            primal,
            tangent,
            tag,
        }))
    }

    /// Registers `primal` as an independent variable on `tape`.
    pub fn rev_leaf(primal: D<R>, tape: &Arc<Tape<R>>) -> Self {
        let index = tape.push(Node::Leaf);
        D::Rev(Arc::new(RevScalar {
            primal,
            tape: tape.clone(),
            index,
        }))
    }

    /// The underlying real, with every derivative layer stripped.
    pub fn value(&self) -> R {
        match self {
            D::Const(x) => *x,
            D::Dual(d) => d.primal.value(),
            D::Rev(r) => r.primal.value(),
        }
    }

    /// Tag of the outermost derivative layer, if any.
    pub fn tag(&self) -> Option<Tag> {
        self.top().map(|(t, _)| t)
    }

    pub fn is_const(&self) -> bool {
        matches!(self, D::Const(_))
    }

    pub(crate) fn is_zero_const(&self) -> bool {
        matches!(self, D::Const(x) if x.is_zero())
    }

    /// Strips exactly one derivative layer.
    pub fn primal(&self) -> D<R> {
        match self {
            D::Const(_) => self.clone(),
            D::Dual(d) => d.primal.clone(),
            D::Rev(r) => r.primal.clone(),
        }
    }

    /// Tangent under `tag`; zero unless this is a dual carrying that tag.
    pub fn tangent(&self, tag: Tag) -> D<R> {
        match self {
            D::Dual(d) if d.tag == tag => d.tangent.clone(),
            _ => D::zero(),
        }
    }

    /// Adjoint from the last sweep over this value's tape, or zero when the
    /// value is not recorded or no sweep has run. Use [`D::try_adjoint`] to
    /// tell those cases apart.
    pub fn adjoint(&self) -> D<R> {
        self.try_adjoint().unwrap_or_else(D::zero)
    }

    pub fn try_adjoint(&self) -> Option<D<R>> {
        self.read_adjoint()
    }

    fn unary(&self, f: fn(R) -> R, op: fn(&D<R>) -> D<R>, df: fn(&D<R>, &D<R>) -> D<R>) -> D<R> {
        match self {
            D::Const(x) => D::Const(f(*x)),
            D::Dual(d) => {
                let y = op(&d.primal);
                let dy = df(&d.primal, &y);
                D::dual(y, &d.tangent * &dy, d.tag)
            }
            D::Rev(r) => {
                let y = op(&r.primal);
                let dy = df(&r.primal, &y);
                let index = r.tape.push(Node::Unary(r.index, dy));
                D::Rev(Arc::new(RevScalar {
                    primal: y,
                    tape: r.tape.clone(),
                    index,
                }))
            }
        }
    }

    /// `df(a, b, y, need_a, need_b)` returns the requested partials.
    fn binary(a: &D<R>, b: &D<R>, f: fn(R, R) -> R, op: fn(&D<R>, &D<R>) -> D<R>, df: Partials<R>) -> D<R> {
        if let (D::Const(x), D::Const(y)) = (a, b) {
            return D::Const(f(*x, *y));
        }
        match crate::tape::max_top(a.top(), b.top()).expect("non-constant operand") {
            (t, Mode::Forward) => {
                let (ap, da) = a.split_fwd(t);
                let (bp, db) = b.split_fwd(t);
                let y = op(&ap, &bp);
                let (pa, pb) = df(&ap, &bp, &y, da.is_some(), db.is_some());
                let ta = da.zip(pa).map(|(d, p)| &d * &p);
                let tb = db.zip(pb).map(|(d, p)| &d * &p);
                let tangent = match (ta, tb) {
                    (Some(x), Some(y)) => &x + &y,
                    (Some(x), None) | (None, Some(x)) => x,
                    (None, None) => D::zero(),
                };
                D::dual(y, tangent, t)
            }
            (t, Mode::Reverse) => {
                let (ap, na) = a.split_rev(t);
                let (bp, nb) = b.split_rev(t);
                let y = op(&ap, &bp);
                let (pa, pb) = df(&ap, &bp, &y, na.is_some(), nb.is_some());
                let (tape, node) = match (na, nb) {
                    (Some((tape, i)), Some((_, j))) => (tape, Node::Binary(i, pa.unwrap(), j, pb.unwrap())),
                    (Some((tape, i)), None) => (tape, Node::Unary(i, pa.unwrap())),
                    (None, Some((tape, j))) => (tape, Node::Unary(j, pb.unwrap())),
                    (None, None) => unreachable!("reverse top without a node"),
                };
                let index = tape.push(node);
                D::Rev(Arc::new(RevScalar { primal: y, tape, index }))
            }
        }
    }

    pub fn exp(&self) -> D<R> {
        self.unary(R::exp, D::exp, |_, y| y.clone())
    }

    pub fn ln(&self) -> D<R> {
        self.unary(R::ln, D::ln, |x, _| x.recip())
    }

    /// Natural logarithm; alias of [`D::ln`].
    pub fn log(&self) -> D<R> {
        self.ln()
    }

    pub fn sqrt(&self) -> D<R> {
        self.unary(R::sqrt, D::sqrt, |_, y| (y * R::lit(2.0)).recip())
    }

    pub fn recip(&self) -> D<R> {
        self.unary(R::recip, D::recip, |_, y| -(y * y))
    }

    pub fn sin(&self) -> D<R> {
        self.unary(R::sin, D::sin, |x, _| x.cos())
    }

    pub fn cos(&self) -> D<R> {
        self.unary(R::cos, D::cos, |x, _| -x.sin())
    }

    pub fn tan(&self) -> D<R> {
        self.unary(R::tan, D::tan, |_, y| y * y + R::one())
    }

    pub fn asin(&self) -> D<R> {
        self.unary(R::asin, D::asin, |x, _| (-(x * x) + R::one()).sqrt().recip())
    }

    pub fn acos(&self) -> D<R> {
        self.unary(R::acos, D::acos, |x, _| -(-(x * x) + R::one()).sqrt().recip())
    }

    pub fn atan(&self) -> D<R> {
        self.unary(R::atan, D::atan, |x, _| (x * x + R::one()).recip())
    }

    pub fn sinh(&self) -> D<R> {
        self.unary(R::sinh, D::sinh, |x, _| x.cosh())
    }

    pub fn cosh(&self) -> D<R> {
        self.unary(R::cosh, D::cosh, |x, _| x.sinh())
    }

    pub fn tanh(&self) -> D<R> {
        self.unary(R::tanh, D::tanh, |_, y| -(y * y) + R::one())
    }

    pub fn abs(&self) -> D<R> {
        self.unary(R::abs, D::abs, |x, _| D::Const(sign_of(x.value())))
    }

    /// `-1`, `0` or `1`; the derivative is zero everywhere.
    pub fn sign(&self) -> D<R> {
        self.unary(sign_of, D::sign, |_, _| D::zero())
    }

    pub fn floor(&self) -> D<R> {
        self.unary(R::floor, D::floor, |_, _| D::zero())
    }

    pub fn ceil(&self) -> D<R> {
        self.unary(R::ceil, D::ceil, |_, _| D::zero())
    }

    pub fn powi(&self, n: i32) -> D<R> {
        match self {
            D::Const(x) => D::Const(x.powi(n)),
            D::Dual(d) => {
                let y = d.primal.powi(n);
                let dy = d.primal.powi(n - 1) * R::lit(n as f64);
                D::dual(y, &d.tangent * &dy, d.tag)
            }
            D::Rev(r) => {
                let y = r.primal.powi(n);
                let dy = r.primal.powi(n - 1) * R::lit(n as f64);
                let index = r.tape.push(Node::Unary(r.index, dy));
                D::Rev(Arc::new(RevScalar {
                    primal: y,
                    tape: r.tape.clone(),
                    index,
                }))
            }
        }
    }

    /// Power with a constant real exponent.
    pub fn powf(&self, c: R) -> D<R> {
        self.pow(&D::Const(c))
    }

    pub fn pow(&self, other: &D<R>) -> D<R> {
        D::binary(self, other, R::powf, |a, b| a.pow(b), |a, b, y, na, nb| {
            let pa = na.then(|| b * &a.pow(&(b - R::one())));
            let pb = nb.then(|| y * &a.ln());
            (pa, pb)
        })
    }

    pub fn atan2(&self, other: &D<R>) -> D<R> {
        D::binary(self, other, R::atan2, |a, b| a.atan2(b), |a, b, _, na, nb| {
            let r = (a * a + b * b).recip();
            (na.then(|| b * &r), nb.then(|| -(a * &r)))
        })
    }

    pub fn min2(&self, other: &D<R>) -> D<R> {
        D::binary(self, other, R::min, |a, b| a.min2(b), |a, b, _, na, nb| {
            let first = a.value() <= b.value();
            (na.then(|| indicator(first)), nb.then(|| indicator(!first)))
        })
    }

    pub fn max2(&self, other: &D<R>) -> D<R> {
        D::binary(self, other, R::max, |a, b| a.max2(b), |a, b, _, na, nb| {
            let first = a.value() >= b.value();
            (na.then(|| indicator(first)), nb.then(|| indicator(!first)))
        })
    }

    fn add_d(a: &D<R>, b: &D<R>) -> D<R> {
        D::binary(a, b, |x, y| x + y, D::add_d, |_, _, _, na, nb| (na.then(D::one), nb.then(D::one)))
    }

    fn sub_d(a: &D<R>, b: &D<R>) -> D<R> {
        D::binary(a, b, |x, y| x - y, D::sub_d, |_, _, _, na, nb| {
            (na.then(D::one), nb.then(|| D::Const(-R::one())))
        })
    }

    fn mul_d(a: &D<R>, b: &D<R>) -> D<R> {
        match (a, b) {
            (D::Const(x), other) | (other, D::Const(x)) if x.is_one() => other.clone(),
            _ => D::binary(a, b, |x, y| x * y, D::mul_d, |a, b, _, na, nb| (na.then(|| b.clone()), nb.then(|| a.clone()))),
        }
    }

    fn div_d(a: &D<R>, b: &D<R>) -> D<R> {
        D::binary(a, b, |x, y| x / y, D::div_d, |_, b, y, na, nb| {
            let inv = b.recip();
            let pb = nb.then(|| -(y * &inv));
            (na.then_some(inv), pb)
        })
    }

    fn neg_d(a: &D<R>) -> D<R> {
        a.unary(|x| -x, D::neg_d, |_, _| D::Const(-R::one()))
    }
}

type Partials<R> = fn(&D<R>, &D<R>, &D<R>, bool, bool) -> (Option<D<R>>, Option<D<R>>);

fn indicator<R: Real>(on: bool) -> D<R> {
    if on {
        D::one()
    } else {
        D::zero()
    }
}

fn sign_of<R: Real>(x: R) -> R {
    if x > R::zero() {
        R::one()
    } else if x < R::zero() {
        -R::one()
    } else {
        // 0 for +-0, NaN stays NaN
        x
    }
}

impl<R: Real> Layer<R> for D<R> {
    fn top(&self) -> Option<(Tag, Mode)> {
        match self {
            D::Const(_) => None,
            D::Dual(d) => Some((d.tag, Mode::Forward)),
            D::Rev(r) => Some((r.tape.tag(), Mode::Reverse)),
        }
    }

    fn split_fwd(&self, t: Tag) -> (Self, Option<Self>) {
        match self {
            D::Dual(d) if d.tag == t => (d.primal.clone(), Some(d.tangent.clone())),
            _ => (self.clone(), None),
        }
    }

    fn split_rev(&self, t: Tag) -> (Self, Option<TapePos<R>>) {
        match self {
            D::Rev(r) if r.tape.tag() == t => (r.primal.clone(), Some((r.tape.clone(), r.index))),
            _ => (self.clone(), None),
        }
    }

    fn make_dual(primal: Self, tangent: Self, t: Tag) -> Self {
        D::dual(primal, tangent, t)
    }

    fn make_rev(primal: Self, tape: Arc<Tape<R>>, index: usize) -> Self {
        D::Rev(Arc::new(RevScalar { primal, tape, index }))
    }

    fn add_same(&self, other: &Self) -> Self {
        self + other
    }

    fn into_adj(self) -> Adj<R> {
        Adj::S(self)
    }

    fn from_adj(adj: &Adj<R>) -> Self {
        match adj {
            Adj::S(d) => d.clone(),
            _ => panic!("expected a scalar adjoint"),
        }
    }

}

/// Sweeps the tape of `tag` backwards from `output`, seeding its adjoint
/// with `seed`. Afterwards [`D::adjoint`] on any value recorded on that tape
/// returns the derivative of `output` with respect to it, times `seed`.
pub fn reverse_sweep<R: Real>(output: &D<R>, seed: &D<R>, tag: Tag) -> Result<()> {
    output.sweep_from(seed, tag)
}

impl<R: Real> Default for D<R> {
    fn default() -> Self {
        D::zero()
    }
}

impl<R: Real> From<R> for D<R> {
    fn from(x: R) -> Self {
        D::Const(x)
    }
}

impl<R: Real> fmt::Debug for D<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            D::Const(x) => write!(f, "D({x:?})"),
            D::Dual(d) => write!(f, "Dual({:?}, {:?}, {})", d.primal, d.tangent, d.tag),
            D::Rev(r) => write!(f, "Rev({:?}, {}@{})", r.primal, r.tape.tag(), r.index),
        }
    }
}

impl<R: Real> fmt::Display for D<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $imp:ident) => {
        impl<R: Real> $trait<&D<R>> for &D<R> {
            type Output = D<R>;
            fn $method(self, rhs: &D<R>) -> D<R> {
                D::$imp(self, rhs)
            }
        }
        impl<R: Real> $trait<D<R>> for D<R> {
            type Output = D<R>;
            fn $method(self, rhs: D<R>) -> D<R> {
                D::$imp(&self, &rhs)
            }
        }
        impl<R: Real> $trait<&D<R>> for D<R> {
            type Output = D<R>;
            fn $method(self, rhs: &D<R>) -> D<R> {
                D::$imp(&self, rhs)
            }
        }
        impl<R: Real> $trait<D<R>> for &D<R> {
            type Output = D<R>;
            fn $method(self, rhs: D<R>) -> D<R> {
                D::$imp(self, &rhs)
            }
        }
        impl<R: Real> $trait<R> for &D<R> {
            type Output = D<R>;
            fn $method(self, rhs: R) -> D<R> {
                D::$imp(self, &D::Const(rhs))
            }
        }
        impl<R: Real> $trait<R> for D<R> {
            type Output = D<R>;
            fn $method(self, rhs: R) -> D<R> {
                D::$imp(&self, &D::Const(rhs))
            }
        }
        impl_binop!(@lhs f64, $trait, $method, $imp);
        impl_binop!(@lhs f32, $trait, $method, $imp);
    };
    (@lhs $t:ty, $trait:ident, $method:ident, $imp:ident) => {
        impl $trait<D<$t>> for $t {
            type Output = D<$t>;
            fn $method(self, rhs: D<$t>) -> D<$t> {
                D::$imp(&D::Const(self), &rhs)
            }
        }
        impl $trait<&D<$t>> for $t {
            type Output = D<$t>;
            fn $method(self, rhs: &D<$t>) -> D<$t> {
                D::$imp(&D::Const(self), rhs)
            }
        }
    };
}

impl_binop!(Add, add, add_d);
impl_binop!(Sub, sub, sub_d);
impl_binop!(Mul, mul, mul_d);
impl_binop!(Div, div, div_d);

impl<R: Real> Neg for D<R> {
    type Output = D<R>;
    fn neg(self) -> D<R> {
        D::neg_d(&self)
    }
}

impl<R: Real> Neg for &D<R> {
    type Output = D<R>;
    fn neg(self) -> D<R> {
        D::neg_d(self)
    }
}

impl<R: Real> AddAssign<&D<R>> for D<R> {
    fn add_assign(&mut self, rhs: &D<R>) {
        *self = D::add_d(self, rhs);
    }
}

impl<R: Real> AddAssign for D<R> {
    fn add_assign(&mut self, rhs: D<R>) {
        *self = D::add_d(self, &rhs);
    }
}

impl<R: Real> SubAssign for D<R> {
    fn sub_assign(&mut self, rhs: D<R>) {
        *self = D::sub_d(self, &rhs);
    }
}

impl<R: Real> MulAssign for D<R> {
    fn mul_assign(&mut self, rhs: D<R>) {
        *self = D::mul_d(self, &rhs);
    }
}

impl<R: Real> Sum for D<R> {
    fn sum<I: Iterator<Item = D<R>>>(iter: I) -> D<R> {
        let mut acc: Option<D<R>> = None;
        for x in iter {
            acc = Some(match acc {
                None => x,
                Some(a) => a + x,
            });
        }
        acc.unwrap_or_else(D::zero)
    }
}

impl<'a, R: Real> Sum<&'a D<R>> for D<R> {
    fn sum<I: Iterator<Item = &'a D<R>>>(iter: I) -> D<R> {
        iter.cloned().sum()
    }
}
