//! Reverse-mode trace and the machinery shared by every differentiable type.
//!
//! A [`Tape`] belongs to exactly one reverse-mode operator invocation and
//! carries that invocation's [`Tag`]. Nodes are appended in evaluation order,
//! so parents always precede children and a reverse sweep is a single pass
//! from the output index down to zero.
//!
//! Local partials and adjoints are stored as differentiable values rather
//! than raw reals. This is what lets an enclosing forward invocation see
//! through a reverse sweep (forward-on-reverse Hessians) and an enclosing
//! reverse invocation record the sweep itself.

use std::fmt;
use std::sync::Arc;

use parking_lot::Mutex;

use crate::error::{Error, Result};
use crate::linalg::{DM, DV};
use crate::real::Real;
use crate::scalar::D;
use crate::tag::Tag;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Forward,
    Reverse,
}

/// Adjoint accumulator for one node.
///
/// Vector and matrix adjoints keep a sparse list next to the dense part so
/// that element reads (`v.get(i)`) contribute in O(1) during the sweep.
#[derive(Clone)]
pub(crate) enum Adj<R: Real> {
    S(D<R>),
    V {
        len: usize,
        dense: Option<DV<R>>,
        sparse: Vec<(usize, D<R>)>,
    },
    M {
        rows: usize,
        cols: usize,
        dense: Option<DM<R>>,
        sparse: Vec<(usize, D<R>)>,
    },
}

impl<R: Real> Adj<R> {
    pub(crate) fn add(self, other: Adj<R>) -> Adj<R> {
        match (self, other) {
            (Adj::S(a), Adj::S(b)) => Adj::S(&a + &b),
            (
                Adj::V {
                    len,
                    dense: d1,
                    sparse: mut s1,
                },
                Adj::V {
                    dense: d2,
                    sparse: s2,
                    ..
                },
            ) => {
                s1.extend(s2);
                Adj::V {
                    len,
                    dense: add_dense(d1, d2, DV::add_same),
                    sparse: s1,
                }
            }
            (
                Adj::M {
                    rows,
                    cols,
                    dense: d1,
                    sparse: mut s1,
                },
                Adj::M {
                    dense: d2,
                    sparse: s2,
                    ..
                },
            ) => {
                s1.extend(s2);
                Adj::M {
                    rows,
                    cols,
                    dense: add_dense(d1, d2, DM::add_same),
                    sparse: s1,
                }
            }
            _ => panic!("adjoint kind mismatch on tape"),
        }
    }

    /// Sums sparse entries into a flat buffer of `n` scalars.
    pub(crate) fn scatter(n: usize, sparse: &[(usize, D<R>)]) -> Vec<D<R>> {
        let mut out: Vec<D<R>> = vec![D::zero(); n];
        for (i, d) in sparse {
            out[*i] = if out[*i].is_zero_const() {
                d.clone()
            } else {
                &out[*i] + d
            };
        }
        out
    }
}

fn add_dense<T>(a: Option<T>, b: Option<T>, add: fn(&T, &T) -> T) -> Option<T> {
    match (a, b) {
        (Some(a), Some(b)) => Some(add(&a, &b)),
        (a, None) => a,
        (None, b) => b,
    }
}

pub(crate) type Backward<R> = Box<dyn Fn(&Adj<R>) -> Result<Vec<Adj<R>>> + Send + Sync>;

pub(crate) enum Node<R: Real> {
    Leaf,
    Unary(usize, D<R>),
    Binary(usize, D<R>, usize, D<R>),
    Custom {
        kind: &'static str,
        parents: Vec<usize>,
        backward: Backward<R>,
    },
}

impl<R: Real> Node<R> {
    fn parents(&self) -> Vec<usize> {
        match self {
            Node::Leaf => vec![],
            Node::Unary(p, _) => vec![*p],
            Node::Binary(p, _, q, _) => vec![*p, *q],
            Node::Custom { parents, .. } => parents.clone(),
        }
    }

    pub(crate) fn kind(&self) -> &'static str {
        match self {
            Node::Leaf => "leaf",
            Node::Unary(..) => "unary",
            Node::Binary(..) => "binary",
            Node::Custom { kind, .. } => kind,
        }
    }
}

/// Append-only trace of one reverse-mode invocation.
pub struct Tape<R: Real> {
    tag: Tag,
    nodes: Mutex<Vec<Node<R>>>,
    adjoints: Mutex<Option<Vec<Option<Adj<R>>>>>,
}

impl<R: Real> fmt::Debug for Tape<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("tag", &self.tag)
            .field("len", &self.len())
            .finish()
    }
}

impl<R: Real> Tape<R> {
    /// Creates an empty tape under a freshly issued tag.
    pub fn new() -> Arc<Tape<R>> {
        Arc::new(Tape {
            tag: Tag::fresh(),
            nodes: Mutex::new(Vec::new()),
            adjoints: Mutex::new(None),
        })
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.nodes.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True once at least one reverse sweep has completed.
    pub fn has_swept(&self) -> bool {
        self.adjoints.lock().is_some()
    }

    /// Checks that every node references only earlier nodes.
    pub fn is_topological(&self) -> bool {
        self.nodes
            .lock()
            .iter()
            .enumerate()
            .all(|(i, n)| n.parents().iter().all(|&p| p < i))
    }

    /// Operation kinds in recording order.
    pub fn kinds(&self) -> Vec<&'static str> {
        self.nodes.lock().iter().map(Node::kind).collect()
    }

    pub(crate) fn push(&self, node: Node<R>) -> usize {
        let mut nodes = self.nodes.lock();
        nodes.push(node);
        nodes.len() - 1
    }

    /// Propagates `seed` from node `out` to every ancestor.
    ///
    /// Accumulators are rebuilt from zero on every call, so one tape can be
    /// swept repeatedly with different seeds.
    pub(crate) fn sweep(&self, out: usize, seed: Adj<R>) -> Result<()> {
        let nodes = self.nodes.lock();
        let mut adj: Vec<Option<Adj<R>>> = (0..=out).map(|_| None).collect();
        adj[out] = Some(seed);
        for i in (0..=out).rev() {
            let Some(a) = adj[i].take() else {
                continue;
            };
            match &nodes[i] {
                Node::Leaf => {}
                Node::Unary(p, dp) => {
                    let c = scalar_adj(&a);
                    accumulate(&mut adj[*p], Adj::S(&c * dp));
                }
                Node::Binary(p, dp, q, dq) => {
                    let c = scalar_adj(&a);
                    accumulate(&mut adj[*p], Adj::S(&c * dp));
                    accumulate(&mut adj[*q], Adj::S(&c * dq));
                }
                Node::Custom {
                    parents, backward, ..
                } => {
                    let contributions = backward(&a)?;
                    debug_assert_eq!(contributions.len(), parents.len());
                    for (p, c) in parents.iter().zip(contributions) {
                        accumulate(&mut adj[*p], c);
                    }
                }
            }
            adj[i] = Some(a);
        }
        *self.adjoints.lock() = Some(adj);
        Ok(())
    }

    pub(crate) fn adjoint(&self, index: usize) -> Option<Adj<R>> {
        self.adjoints
            .lock()
            .as_ref()
            .and_then(|a| a.get(index).cloned().flatten())
    }
}

fn scalar_adj<R: Real>(a: &Adj<R>) -> D<R> {
    match a {
        Adj::S(d) => d.clone(),
        _ => panic!("scalar node received a non-scalar adjoint"),
    }
}

fn accumulate<R: Real>(slot: &mut Option<Adj<R>>, c: Adj<R>) {
    *slot = Some(match slot.take() {
        None => c,
        Some(prev) => prev.add(c),
    });
}

/// A tape and a node index on it.
pub(crate) type TapePos<R> = (Arc<Tape<R>>, usize);

/// Common structure of `D`, `DV` and `DM`: a constant, a tagged dual pair, or
/// a tagged tape reference.
pub(crate) trait Layer<R: Real>: Clone + Send + Sync + 'static {
    fn top(&self) -> Option<(Tag, Mode)>;
    /// Primal and (if dual under `t`) tangent.
    fn split_fwd(&self, t: Tag) -> (Self, Option<Self>);
    /// Primal and (if recorded under `t`) tape position.
    fn split_rev(&self, t: Tag) -> (Self, Option<TapePos<R>>);
    fn make_dual(primal: Self, tangent: Self, t: Tag) -> Self;
    fn make_rev(primal: Self, tape: Arc<Tape<R>>, index: usize) -> Self;
    fn add_same(&self, other: &Self) -> Self;
    fn into_adj(self) -> Adj<R>;
    fn from_adj(adj: &Adj<R>) -> Self;

    fn tape_ref(&self) -> Option<(Arc<Tape<R>>, usize)> {
        match self.top() {
            Some((t, Mode::Reverse)) => self.split_rev(t).1,
            _ => None,
        }
    }

    /// Adjoint accumulated at this value's tape node by the last sweep.
    fn read_adjoint(&self) -> Option<Self> {
        let (tape, i) = self.tape_ref()?;
        tape.adjoint(i).map(|a| Self::from_adj(&a))
    }

    /// Runs a reverse sweep from this value with the given seed.
    fn sweep_from(&self, seed: &Self, tag: Tag) -> Result<()> {
        match self.top() {
            Some((t, Mode::Reverse)) if t == tag => {
                let (tape, i) = self.tape_ref().expect("reverse value has a tape");
                tape.sweep(i, seed.clone().into_adj())
            }
            _ => Err(Error::TagMismatch {
                expected: tag.to_string(),
            }),
        }
    }
}

pub(crate) fn max_top(a: Option<(Tag, Mode)>, b: Option<(Tag, Mode)>) -> Option<(Tag, Mode)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(if y.0 > x.0 { y } else { x }),
    }
}

/// Lifts a unary intrinsic through one derivative layer.
///
/// `konst` handles fully constant input, `op` recurses on the primal,
/// `tangent(p, dp, y)` is the forward rule and `adjoint(ybar, p, y)` the
/// reverse rule.
pub(crate) fn lift1<R, A, C>(
    a: &A,
    kind: &'static str,
    konst: impl FnOnce(&A) -> Result<C>,
    op: impl FnOnce(&A) -> Result<C>,
    tangent: impl FnOnce(&A, &A, &C) -> Result<C>,
    adjoint: impl Fn(&C, &A, &C) -> Result<Adj<R>> + Send + Sync + 'static,
) -> Result<C>
where
    R: Real,
    A: Layer<R>,
    C: Layer<R>,
{
    match a.top() {
        None => konst(a),
        Some((t, Mode::Forward)) => {
            let (p, dp) = a.split_fwd(t);
            let y = op(&p)?;
            let dy = tangent(&p, &dp.expect("dual at its own tag"), &y)?;
            Ok(C::make_dual(y, dy, t))
        }
        Some((t, Mode::Reverse)) => {
            let (p, node) = a.split_rev(t);
            let (tape, parent) = node.expect("reverse at its own tag");
            let y = op(&p)?;
            let (pc, yc) = (p, y.clone());
            let backward: Backward<R> = Box::new(move |adj| {
                let ybar = C::from_adj(adj);
                Ok(vec![adjoint(&ybar, &pc, &yc)?])
            });
            let index = tape.push(Node::Custom {
                kind,
                parents: vec![parent],
                backward,
            });
            Ok(C::make_rev(y, tape, index))
        }
    }
}

/// Binary counterpart of [`lift1`]. The operand that does not carry the
/// active tag is a constant with respect to it.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lift2<R, A, B, C>(
    a: &A,
    b: &B,
    kind: &'static str,
    konst: impl FnOnce(&A, &B) -> Result<C>,
    op: impl FnOnce(&A, &B) -> Result<C>,
    tangent: impl FnOnce(&A, &B, &C, Option<&A>, Option<&B>) -> Result<C>,
    adjoint_a: impl Fn(&C, &A, &B, &C) -> Result<Adj<R>> + Send + Sync + 'static,
    adjoint_b: impl Fn(&C, &A, &B, &C) -> Result<Adj<R>> + Send + Sync + 'static,
) -> Result<C>
where
    R: Real,
    A: Layer<R>,
    B: Layer<R>,
    C: Layer<R>,
{
    match max_top(a.top(), b.top()) {
        None => konst(a, b),
        Some((t, Mode::Forward)) => {
            let (ap, da) = a.split_fwd(t);
            let (bp, db) = b.split_fwd(t);
            let y = op(&ap, &bp)?;
            let dy = tangent(&ap, &bp, &y, da.as_ref(), db.as_ref())?;
            Ok(C::make_dual(y, dy, t))
        }
        Some((t, Mode::Reverse)) => {
            let (ap, na) = a.split_rev(t);
            let (bp, nb) = b.split_rev(t);
            let y = op(&ap, &bp)?;
            let tape = na
                .as_ref()
                .or(nb.as_ref())
                .map(|(tape, _)| tape.clone())
                .expect("one operand is recorded at the active tag");
            let mut parents = Vec::with_capacity(2);
            parents.extend(na.as_ref().map(|n| n.1));
            parents.extend(nb.as_ref().map(|n| n.1));
            let (use_a, use_b) = (na.is_some(), nb.is_some());
            let yc = y.clone();
            let backward: Backward<R> = Box::new(move |adj| {
                let ybar = C::from_adj(adj);
                let mut out = Vec::with_capacity(2);
                if use_a {
                    out.push(adjoint_a(&ybar, &ap, &bp, &yc)?);
                }
                if use_b {
                    out.push(adjoint_b(&ybar, &ap, &bp, &yc)?);
                }
                Ok(out)
            });
            let index = tape.push(Node::Custom {
                kind,
                parents,
                backward,
            });
            Ok(C::make_rev(y, tape, index))
        }
    }
}

/// Sums the tangents that are present; `zero` is used when none are.
pub(crate) fn sum_tangents<C: Clone>(parts: Vec<Option<C>>, add: impl Fn(&C, &C) -> C, zero: impl FnOnce() -> C) -> C {
    let mut acc: Option<C> = None;
    for p in parts.into_iter().flatten() {
        acc = Some(match acc {
            None => p,
            Some(a) => add(&a, &p),
        });
    }
    acc.unwrap_or_else(zero)
}
