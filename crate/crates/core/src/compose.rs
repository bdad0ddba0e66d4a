//! Seeded random compositions of elementary operations.
//!
//! Used as test functions by the oracle suite and the benchmark tool. Each
//! operation is wrapped so that its argument stays inside the domain where it
//! is smooth and finite (`log` sees `1 + a^2`, `asin` sees `0.9 tanh a`, and
//! so on), which keeps every generated function defined on all of `R^n`.
//! The piecewise operations (`abs`, `sign`, `floor`, `ceil`, `min`, `max`)
//! are included unguarded; [`Composition::kink_margin`] reports how close a
//! point is to one of their non-differentiable points.

use std::fmt;

use rand::Rng;

use crate::linalg::DV;
use crate::real::Real;
use crate::scalar::D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Sign,
    Floor,
    Ceil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Atan2,
    Min,
    Max,
}

const SMOOTH_UNARY: [UnaryOp; 13] = [
    UnaryOp::Neg,
    UnaryOp::Exp,
    UnaryOp::Log,
    UnaryOp::Sqrt,
    UnaryOp::Sin,
    UnaryOp::Cos,
    UnaryOp::Tan,
    UnaryOp::Asin,
    UnaryOp::Acos,
    UnaryOp::Atan,
    UnaryOp::Sinh,
    UnaryOp::Cosh,
    UnaryOp::Tanh,
];
const PIECEWISE_UNARY: [UnaryOp; 4] = [UnaryOp::Abs, UnaryOp::Sign, UnaryOp::Floor, UnaryOp::Ceil];
const SMOOTH_BINARY: [BinaryOp; 6] = [
    BinaryOp::Add,
    BinaryOp::Sub,
    BinaryOp::Mul,
    BinaryOp::Div,
    BinaryOp::Pow,
    BinaryOp::Atan2,
];
const PIECEWISE_BINARY: [BinaryOp; 2] = [BinaryOp::Min, BinaryOp::Max];

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Arithmetic needed to evaluate an [`Expr`]; implemented for plain reals and
/// for [`D`].
pub trait Scalar: Clone {
    fn konst(c: f64) -> Self;
    fn unary(&self, op: UnaryOp) -> Self;
    fn binary(&self, op: BinaryOp, other: &Self) -> Self;
}

impl<R: Real> Scalar for R {
    fn konst(c: f64) -> Self {
        R::lit(c)
    }

    fn unary(&self, op: UnaryOp) -> Self {
        let a = *self;
        let one = R::one();
        let squash = |x: R| R::lit(0.9) * x.tanh();
        match op {
            UnaryOp::Neg => -a,
            UnaryOp::Exp => a.tanh().exp(),
            UnaryOp::Log => (one + a * a).ln(),
            UnaryOp::Sqrt => (one + a * a).sqrt(),
            UnaryOp::Sin => a.sin(),
            UnaryOp::Cos => a.cos(),
            UnaryOp::Tan => a.tanh().tan(),
            UnaryOp::Asin => squash(a).asin(),
            UnaryOp::Acos => squash(a).acos(),
            UnaryOp::Atan => a.atan(),
            UnaryOp::Sinh => a.tanh().sinh(),
            UnaryOp::Cosh => a.tanh().cosh(),
            UnaryOp::Tanh => a.tanh(),
            UnaryOp::Abs => a.abs(),
            UnaryOp::Sign => {
                if a.is_zero() {
                    R::zero()
                } else {
                    a.signum()
                }
            }
            UnaryOp::Floor => a.floor(),
            UnaryOp::Ceil => a.ceil(),
        }
    }

    fn binary(&self, op: BinaryOp, other: &Self) -> Self {
        let (a, b) = (*self, *other);
        let one = R::one();
        match op {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / (one + b * b),
            BinaryOp::Pow => (one + a * a).powf(b.tanh()),
            BinaryOp::Atan2 => a.atan2(one + b * b),
            BinaryOp::Min => {
                if b < a {
                    b
                } else {
                    a
                }
            }
            BinaryOp::Max => {
                if b > a {
                    b
                } else {
                    a
                }
            }
        }
    }
}

impl<R: Real> Scalar for D<R> {
    fn konst(c: f64) -> Self {
        D::constant(R::lit(c))
    }

    fn unary(&self, op: UnaryOp) -> Self {
        let a = self;
        let squash = |x: &D<R>| x.tanh() * R::lit(0.9);
        match op {
            UnaryOp::Neg => -a,
            UnaryOp::Exp => a.tanh().exp(),
            UnaryOp::Log => (a * a + R::one()).ln(),
            UnaryOp::Sqrt => (a * a + R::one()).sqrt(),
            UnaryOp::Sin => a.sin(),
            UnaryOp::Cos => a.cos(),
            UnaryOp::Tan => a.tanh().tan(),
            UnaryOp::Asin => squash(a).asin(),
            UnaryOp::Acos => squash(a).acos(),
            UnaryOp::Atan => a.atan(),
            UnaryOp::Sinh => a.tanh().sinh(),
            UnaryOp::Cosh => a.tanh().cosh(),
            UnaryOp::Tanh => a.tanh(),
            UnaryOp::Abs => a.abs(),
            UnaryOp::Sign => a.sign(),
            UnaryOp::Floor => a.floor(),
            UnaryOp::Ceil => a.ceil(),
        }
    }

    fn binary(&self, op: BinaryOp, b: &Self) -> Self {
        let a = self;
        match op {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / (b * b + R::one()),
            BinaryOp::Pow => (a * a + R::one()).pow(&b.tanh()),
            BinaryOp::Atan2 => a.atan2(&(b * b + R::one())),
            BinaryOp::Min => a.min2(b),
            BinaryOp::Max => a.max2(b),
        }
    }
}

impl Expr {
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            Expr::Var(i) => x[*i].clone(),
            Expr::Const(c) => T::konst(*c),
            Expr::Unary(op, a) => a.eval(x).unary(*op),
            Expr::Binary(op, a, b) => a.eval(x).binary(*op, &b.eval(x)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Const(_) => 0,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Number of operation nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Const(_) => 0,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Smallest distance, over the piecewise operations evaluated at `x`,
    /// between an argument and the nearest point where the operation is not
    /// differentiable. Operations whose argument does not depend on `x` are
    /// ignored. Infinite when there are none.
    pub fn kink_margin(&self, x: &[f64]) -> f64 {
        self.margin(x).1
    }

    /// (value, margin, whether the value depends on any input)
    fn margin(&self, x: &[f64]) -> (f64, f64, bool) {
        match self {
            Expr::Var(i) => (x[*i], f64::INFINITY, true),
            Expr::Const(c) => (*c, f64::INFINITY, false),
            Expr::Unary(op, a) => {
                let (v, m, live) = a.margin(x);
                let here = match op {
                    _ if !live => f64::INFINITY,
                    UnaryOp::Abs | UnaryOp::Sign => v.abs(),
                    UnaryOp::Floor | UnaryOp::Ceil => (v - v.round()).abs(),
                    _ => f64::INFINITY,
                };
                (v.unary(*op), m.min(here), live)
            }
            Expr::Binary(op, a, b) => {
                let (va, ma, la) = a.margin(x);
                let (vb, mb, lb) = b.margin(x);
                let here = match op {
                    BinaryOp::Min | BinaryOp::Max if la || lb => (va - vb).abs(),
                    _ => f64::INFINITY,
                };
                (va.binary(*op, &vb), ma.min(mb).min(here), la || lb)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Const(c) => write!(f, "{c:.3}"),
            Expr::Unary(op, a) => write!(f, "{}({a})", format!("{op:?}").to_lowercase()),
            Expr::Binary(op, a, b) => write!(f, "{}({a}, {b})", format!("{op:?}").to_lowercase()),
        }
    }
}

/// Shape of generated functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposeConfig {
    pub max_depth: usize,
    /// Each output is a sum of this many independent trees.
    pub terms: usize,
    /// Chance that a non-root node below the depth limit becomes a leaf.
    pub leaf_prob: f64,
    /// Include `abs`, `sign`, `floor`, `ceil`, `min` and `max`.
    pub piecewise: bool,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig {
            max_depth: 6,
            terms: 1,
            leaf_prob: 0.3,
            piecewise: true,
        }
    }
}

/// A function `R^n -> R^m` built from random expression trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub n: usize,
    pub outputs: Vec<Expr>,
}

impl Composition {
    pub fn random(n: usize, m: usize, cfg: &ComposeConfig, rng: &mut impl Rng) -> Self {
        assert!(n >= 1 && m >= 1 && cfg.terms >= 1, "empty composition");
        let outputs = (0..m)
            .map(|_| {
                (0..cfg.terms)
                    .map(|_| tree(n, cfg.max_depth, cfg, rng, true))
                    .reduce(|a, b| Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b)))
                    .expect("at least one term")
            })
            .collect();
        Composition { n, outputs }
    }

    pub fn m(&self) -> usize {
        self.outputs.len()
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n, "composition arity");
        self.outputs.iter().map(|e| e.eval(x)).collect()
    }

    /// First output over plain reals.
    pub fn eval_first<T: Scalar>(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.n, "composition arity");
        self.outputs[0].eval(x)
    }

    pub fn eval_dv<R: Real>(&self, x: &DV<R>) -> DV<R> {
        DV::from_ds(&self.eval(&x.to_ds()))
    }

    /// First output as a differentiable scalar.
    pub fn eval_d<R: Real>(&self, x: &DV<R>) -> D<R> {
        self.eval_first(&x.to_ds())
    }

    pub fn kink_margin(&self, x: &[f64]) -> f64 {
        self.outputs.iter().map(|e| e.kink_margin(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn depth(&self) -> usize {
        self.outputs.iter().map(Expr::depth).max().unwrap_or(0)
    }
}

fn tree(n: usize, depth: usize, cfg: &ComposeConfig, rng: &mut impl Rng, root: bool) -> Expr {
    if depth == 0 || (!root && rng.gen_bool(cfg.leaf_prob)) {
        return if rng.gen_bool(0.8) {
            Expr::Var(rng.gen_range(0..n))
        } else {
            Expr::Const(rng.gen_range(-1.0..1.0))
        };
    }
    let piecewise = cfg.piecewise && rng.gen_bool(0.15);
    if rng.gen_bool(0.5) {
        let op = if piecewise {
            PIECEWISE_UNARY[rng.gen_range(0..PIECEWISE_UNARY.len())]
        } else {
            SMOOTH_UNARY[rng.gen_range(0..SMOOTH_UNARY.len())]
        };
        Expr::Unary(op, Box::new(tree(n, depth - 1, cfg, rng, false)))
    } else {
        let op = if piecewise {
            PIECEWISE_BINARY[rng.gen_range(0..PIECEWISE_BINARY.len())]
        } else {
            SMOOTH_BINARY[rng.gen_range(0..SMOOTH_BINARY.len())]
        };
        let a = tree(n, depth - 1, cfg, rng, false);
        let b = tree(n, depth - 1, cfg, rng, false);
        Expr::Binary(op, Box::new(a), Box::new(b))
    }
}
