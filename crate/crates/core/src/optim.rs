//! Optimizers written against the differentiation API.
//!
//! The objective is an ordinary `Fn(&DV) -> Result<D>`; nothing in its
//! signature says which derivatives will be taken.

use crate::diffapi::{grad, gradhessian};
use crate::error::{Error, Phase, Result};
use crate::linalg::{backend, DV};
use crate::real::Real;
use crate::scalar::D;

/// Newton iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig<R> {
    /// Stop once the gradient's Euclidean norm drops below this.
    pub eps: R,
    pub max_iter: usize,
}

impl<R: Real> NewtonConfig<R> {
    pub fn new(eps: R) -> Self {
        NewtonConfig { eps, max_iter: 1000 }
    }
}

/// Terminal state of a Newton run.
#[derive(Debug, Clone)]
pub struct NewtonReport<R: Real> {
    pub x: DV<R>,
    /// Number of updates `x <- x - H^-1 g` performed.
    pub updates: usize,
    pub grad_norm: R,
}

/// Minimizes `f` with Newton's method: `x <- x - H^-1 g` until `|g| < eps`.
///
/// Fails with [`Error::NotPositiveDefinite`] when the Hessian at an iterate
/// is not positive definite, and with [`Error::NonConvergence`] after 1000
/// updates.
pub fn argmin_newton<R: Real>(eps: R, f: impl Fn(&DV<R>) -> Result<D<R>>, x0: &DV<R>) -> Result<DV<R>> {
    Ok(argmin_newton_with(&NewtonConfig::new(eps), f, x0)?.x)
}

pub fn argmin_newton_with<R: Real>(
    cfg: &NewtonConfig<R>,
    f: impl Fn(&DV<R>) -> Result<D<R>>,
    x0: &DV<R>,
) -> Result<NewtonReport<R>> {
    if !(cfg.eps > R::zero()) {
        return Err(Error::InvalidArgument("argmin_newton: eps must be positive".into()));
    }
    let mut x = x0.clone();
    for updates in 0..=cfg.max_iter {
        let (g, h) = gradhessian(&f, &x)?;
        let grad_norm = g.l2norm().value();
        if grad_norm < cfg.eps {
            return Ok(NewtonReport { x, updates, grad_norm });
        }
        if updates == cfg.max_iter {
            return Err(Error::NonConvergence {
                phase: Phase::Newton,
                iterations: updates,
                residual: grad_norm.to_f64_lossy(),
            });
        }
        let iterate = || x.values().iter().map(|v| v.to_f64_lossy()).collect::<Vec<f64>>();
        if backend::<R>().cholesky(h.values().data(), h.rows()).is_none() {
            return Err(Error::NotPositiveDefinite { iterate: iterate() });
        }
        let step = h.solve_symmetric(&g).map_err(|e| Error::NewtonStep {
            iterate: iterate(),
            source: Box::new(e),
        })?;
        x = x.sub(&step)?;
    }
    unreachable!("loop returns on its last iteration")
}

/// `steps` iterations of `x <- x - lr * grad f(x)`.
pub fn gradient_descent<R: Real>(
    lr: R,
    steps: usize,
    f: impl Fn(&DV<R>) -> Result<D<R>>,
    x0: &DV<R>,
) -> Result<DV<R>> {
    let lr = D::constant(lr);
    let mut x = x0.clone();
    for _ in 0..steps {
        let g = grad(&f, &x)?;
        x = x.sub(&g.scale(&lr))?;
    }
    Ok(x)
}
