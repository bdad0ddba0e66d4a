//! Helpers shared by the integration tests.

#![allow(dead_code)]

use nestad::{Matrix, DM, DV};
use rand::Rng;

/// Tracks agreement between computed values and an oracle under
/// `|got - want| <= max(abs, rel * |want|)`.
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub checked: usize,
    pub worst: f64,
    pub failures: Vec<String>,
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tol { abs, rel, checked: 0, worst: 0.0, failures: Vec::new() }
    }

    pub fn scalar(&mut self, what: &str, got: f64, want: f64) {
        self.checked += 1;
        let allowed = self.abs.max(self.rel * want.abs());
        let err = (got - want).abs();
        let ratio = if err.is_nan() { f64::INFINITY } else { err / allowed };
        self.worst = self.worst.max(ratio);
        if !(err <= allowed) && self.failures.len() < 10 {
            self.failures.push(format!("{what}: got {got:e}, want {want:e}"));
        }
    }

    pub fn slice(&mut self, what: &str, got: &[f64], want: &[f64]) {
        if got.len() != want.len() {
            self.checked += 1;
            self.worst = f64::INFINITY;
            self.failures.push(format!("{what}: length {} vs {}", got.len(), want.len()));
            return;
        }
        for (i, (g, w)) in got.iter().zip(want).enumerate() {
            self.scalar(&format!("{what}[{i}]"), *g, *w);
        }
    }

    pub fn matrix(&mut self, what: &str, got: &Matrix<f64>, want: &Matrix<f64>) {
        if got.shape() != want.shape() {
            self.checked += 1;
            self.worst = f64::INFINITY;
            self.failures.push(format!("{what}: shape {:?} vs {:?}", got.shape(), want.shape()));
            return;
        }
        self.slice(what, got.data(), want.data());
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.worst <= 1.0
    }

    pub fn summary(&self) -> String {
        format!("{} comparisons, worst error/allowed {:.2e}", self.checked, self.worst)
    }

    pub fn into_result(self) -> Result<String, String> {
        if self.ok() {
            Ok(self.summary())
        } else {
            Err(format!("{}; {}", self.summary(), self.failures.join("; ")))
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> Matrix<f64> {
    Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random symmetric positive definite matrix `B B^T + n I`.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> Matrix<f64> {
    let b = random_matrix(rng, n, n);
    Matrix::from_fn(n, n, |i, j| {
        let s: f64 = (0..n).map(|k| b.get(i, k) * b.get(j, k)).sum();
        s + if i == j { n as f64 } else { 0.0 }
    })
}

pub fn dv(v: &[f64]) -> DV<f64> {
    DV::from_slice(v)
}

pub fn dm(m: &Matrix<f64>) -> DM<f64> {
    DM::from_matrix(m.clone())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub mod intrinsics;
