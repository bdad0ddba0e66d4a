//! Differentiable fixed-point iteration.
//!
//! [`fixed_point`] solves `x = g(x, b)` by plain iteration and differentiates
//! the solution with respect to `b`, not through the iteration history:
//!
//! - forward: primal and tangent are iterated jointly until both settle;
//! - reverse: the primal is converged first, then the adjoint equation
//!   `w = xbar + (dg/dx)^T w` is iterated to convergence on a tape recorded
//!   once at the solution, and `bbar = (dg/db)^T w`.
//!
//! Every quantity `g` depends on and that should be differentiated must be
//! passed through `b`. Values captured by the closure are treated as
//! constants by the reverse rule.

use std::sync::Arc;

use crate::error::{Error, Phase, Result};
use crate::linalg::DV;
use crate::real::Real;
use crate::tag::Tag;
use crate::tape::{Adj, Backward, Layer, Mode, Node, Tape};

/// Stopping rule shared by all three phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpConfig<R> {
    /// Threshold on the infinity-norm distance between successive iterates.
    pub tol: R,
    pub max_iter: usize,
}

impl<R: Real> Default for FpConfig<R> {
    fn default() -> Self {
        FpConfig {
            tol: R::lit(1e-10).max(R::epsilon() * R::lit(100.0)),
            max_iter: 10_000,
        }
    }
}

impl<R: Real> FpConfig<R> {
    fn validate(&self) -> Result<()> {
        if !(self.tol > R::zero()) {
            return Err(Error::InvalidArgument("fixed_point: tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("fixed_point: max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

type G<'a, R> = &'a dyn Fn(&DV<R>, &DV<R>) -> Result<DV<R>>;

/// Fixed point `x*` of `x -> g(x, b)` starting from `x0`.
///
/// `x0` only seeds the iteration; its derivative layers are discarded.
pub fn fixed_point<R: Real>(
    g: impl Fn(&DV<R>, &DV<R>) -> Result<DV<R>>,
    x0: &DV<R>,
    b: &DV<R>,
    cfg: &FpConfig<R>,
) -> Result<DV<R>> {
    cfg.validate()?;
    solve(&g, &DV::from_slice(x0.values()), b, cfg)
}

fn solve<R: Real>(g: G<'_, R>, x0: &DV<R>, b: &DV<R>, cfg: &FpConfig<R>) -> Result<DV<R>> {
    match b.top() {
        Some((t, Mode::Reverse)) => reverse(g, x0, b, t, cfg),
        Some((t, Mode::Forward)) => iterate(g, x0, b, Some(t), cfg),
        None => iterate(g, x0, b, None, cfg),
    }
}

fn distance<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter()
        .zip(b)
        .fold(R::zero(), |m, (&x, &y)| {
            let d = (x - y).abs();
            // propagate NaN instead of letting max() swallow it
            if d.is_nan() || m.is_nan() { R::nan() } else { m.max(d) }
        })
}

fn step<R: Real>(g: G<'_, R>, x: &DV<R>, b: &DV<R>) -> Result<DV<R>> {
    let y = g(x, b)?;
    if y.len() != x.len() {
        return Err(Error::shape("fixed_point (g must preserve length)", x.len(), y.len()));
    }
    Ok(y)
}

fn fail<R: Real>(phase: Phase, iterations: usize, residual: R) -> Error {
    Error::NonConvergence {
        phase,
        iterations,
        residual: residual.to_f64_lossy(),
    }
}

/// Plain iteration. When `t` is a forward tag the tangent under `t` must
/// settle as well.
fn iterate<R: Real>(g: G<'_, R>, x0: &DV<R>, b: &DV<R>, t: Option<Tag>, cfg: &FpConfig<R>) -> Result<DV<R>> {
    let mut x = x0.clone();
    let (mut rp, mut rt) = (R::infinity(), R::zero());
    for k in 1..=cfg.max_iter {
        let next = step(g, &x, b)?;
        rp = distance(next.values(), x.values());
        rt = match t {
            Some(t) => distance(next.tangent(t).values(), x.tangent(t).values()),
            None => R::zero(),
        };
        if !rp.is_finite() {
            return Err(fail(Phase::Primal, k, rp));
        }
        if !rt.is_finite() {
            return Err(fail(Phase::Tangent, k, rt));
        }
        x = next;
        if rp <= cfg.tol && rt <= cfg.tol {
            return Ok(x);
        }
    }
    if rp > cfg.tol {
        Err(fail(Phase::Primal, cfg.max_iter, rp))
    } else {
        Err(fail(Phase::Tangent, cfg.max_iter, rt))
    }
}

fn reverse<R: Real>(g: G<'_, R>, x0: &DV<R>, b: &DV<R>, t: Tag, cfg: &FpConfig<R>) -> Result<DV<R>> {
    let (bp, node) = b.split_rev(t);
    let (tape, parent) = node.expect("reverse value at its own tag");
    let xstar = solve(g, x0, &bp, cfg)?;

    // one recording of g at the solution, reused by every adjoint iteration
    let local = Tape::new();
    let xs = DV::rev_leaf(xstar.clone(), &local);
    let bs = DV::rev_leaf(bp, &local);
    let y = step(g, &xs, &bs)?;
    let cfg = *cfg;

    let backward: Backward<R> = Box::new(move |adj: &Adj<R>| {
        let xbar = DV::from_adj(adj);
        let mut w = xbar.clone();
        let mut r = R::infinity();
        for k in 1..=cfg.max_iter {
            y.sweep_from(&w, local.tag())?;
            let next = xbar.add(&xs.adjoint())?;
            r = distance(next.values(), w.values());
            if !r.is_finite() {
                return Err(fail(Phase::Adjoint, k, r));
            }
            w = next;
            if r <= cfg.tol {
                y.sweep_from(&w, local.tag())?;
                return Ok(vec![bs.adjoint().into_adj()]);
            }
        }
        Err(fail(Phase::Adjoint, cfg.max_iter, r))
    });
    let index = tape.push(Node::Custom {
        kind: "fixed_point",
        parents: vec![parent],
        backward,
    });
    Ok(DV::make_rev(xstar, Arc::clone(&tape), index))
}
