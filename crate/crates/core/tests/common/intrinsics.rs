//! Every linear-algebra intrinsic as (structure-of-arrays call, independent
//! scalar-by-scalar reference), over a uniform value wrapper.

use std::sync::Arc;

use nestad::linalg::{reverse_sweep_m, reverse_sweep_v};
use nestad::{reverse_sweep, Matrix, Tag, Tape, D, DM, DV};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    S,
    V(usize),
    M(usize, usize),
}

impl Shape {
    pub fn len(self) -> usize {
        match self {
            Shape::S => 1,
            Shape::V(n) => n,
            Shape::M(r, c) => r * c,
        }
    }
}

#[derive(Clone)]
pub enum Val {
    S(D<f64>),
    V(DV<f64>),
    M(DM<f64>),
}

fn cm(shape: Shape, data: &[f64]) -> DM<f64> {
    let Shape::M(r, c) = shape else { unreachable!() };
    DM::from_matrix(Matrix::new(r, c, data.to_vec()).unwrap())
}

impl Val {
    pub fn constant(shape: Shape, data: &[f64]) -> Val {
        match shape {
            Shape::S => Val::S(D::from(data[0])),
            Shape::V(_) => Val::V(DV::from_slice(data)),
            Shape::M(..) => Val::M(cm(shape, data)),
        }
    }

    pub fn dual(shape: Shape, p: &[f64], u: &[f64], t: Tag) -> Val {
        match shape {
            Shape::S => Val::S(D::dual(D::from(p[0]), D::from(u[0]), t)),
            Shape::V(_) => Val::V(DV::dual(DV::from_slice(p), DV::from_slice(u), t).unwrap()),
            Shape::M(..) => Val::M(DM::dual(cm(shape, p), cm(shape, u), t).unwrap()),
        }
    }

    pub fn rev(shape: Shape, p: &[f64], tape: &Arc<Tape<f64>>) -> Val {
        match shape {
            Shape::S => Val::S(D::rev_leaf(D::from(p[0]), tape)),
            Shape::V(_) => Val::V(DV::rev_leaf(DV::from_slice(p), tape)),
            Shape::M(..) => Val::M(DM::rev_leaf(cm(shape, p), tape)),
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            Val::S(_) => Shape::S,
            Val::V(v) => Shape::V(v.len()),
            Val::M(m) => Shape::M(m.rows(), m.cols()),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Val::S(d) => vec![d.value()],
            Val::V(v) => v.to_vec(),
            Val::M(m) => m.values().data().to_vec(),
        }
    }

    pub fn tangent(&self, t: Tag) -> Vec<f64> {
        match self {
            Val::S(d) => vec![d.tangent(t).value()],
            Val::V(v) => v.tangent(t).to_vec(),
            Val::M(m) => m.tangent(t).values().data().to_vec(),
        }
    }

    pub fn adjoint(&self) -> Vec<f64> {
        match self {
            Val::S(d) => vec![d.adjoint().value()],
            Val::V(v) => v.adjoint().to_vec(),
            Val::M(m) => m.adjoint().values().data().to_vec(),
        }
    }

    pub fn sweep(&self, seed: &[f64], t: Tag) {
        let shape = self.shape();
        match self {
            Val::S(d) => reverse_sweep(d, &D::from(seed[0]), t).unwrap(),
            Val::V(v) => reverse_sweep_v(v, &DV::from_slice(seed), t).unwrap(),
            Val::M(m) => reverse_sweep_m(m, &cm(shape, seed), t).unwrap(),
        }
    }

    fn s(&self) -> &D<f64> {
        match self {
            Val::S(d) => d,
            _ => panic!("expected scalar"),
        }
    }

    fn v(&self) -> &DV<f64> {
        match self {
            Val::V(v) => v,
            _ => panic!("expected vector"),
        }
    }

    fn m(&self) -> &DM<f64> {
        match self {
            Val::M(m) => m,
            _ => panic!("expected matrix"),
        }
    }
}

type Ds = Vec<D<f64>>;

pub struct Intrinsic {
    pub name: &'static str,
    /// Input shapes for dimensions (r, c, k).
    pub shapes: fn(usize, usize, usize) -> Vec<Shape>,
    pub soa: fn(&[Val]) -> Val,
    /// Reference on flattened row-major scalars.
    pub scalar: fn(&[Ds], &[Shape]) -> Ds,
    /// First input must be symmetric positive definite, with symmetric tangent.
    pub spd: bool,
}

fn dims(s: Shape) -> (usize, usize) {
    match s {
        Shape::M(r, c) => (r, c),
        Shape::V(n) => (n, 1),
        Shape::S => (1, 1),
    }
}

fn zip(a: &Ds, b: &Ds, f: impl Fn(&D<f64>, &D<f64>) -> D<f64>) -> Ds {
    a.iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn sum(ds: impl IntoIterator<Item = D<f64>>) -> D<f64> {
    ds.into_iter().reduce(|a, b| a + b).unwrap_or_else(D::zero)
}

fn matmul_ref(a: &Ds, b: &Ds, r: usize, c: usize, k: usize) -> Ds {
    let mut out = Vec::with_capacity(r * k);
    for i in 0..r {
        for j in 0..k {
            out.push(sum((0..c).map(|l| &a[i * c + l] * &b[l * k + j])));
        }
    }
    out
}

/// Scalar Cholesky solve, written independently of the library. It reads
/// the symmetric part of `a`, so its adjoint is the symmetric one.
fn solve_ref(a: &Ds, b: &Ds, n: usize) -> Ds {
    let a: Ds = (0..n * n).map(|k| (&a[k] + &a[(k % n) * n + k / n]) * 0.5).collect();
    let mut l: Ds = vec![D::zero(); n * n];
    for j in 0..n {
        let d = &a[j * n + j] - sum((0..j).map(|k| &l[j * n + k] * &l[j * n + k]));
        l[j * n + j] = d.sqrt();
        for i in j + 1..n {
            let s = &a[i * n + j] - sum((0..j).map(|k| &l[i * n + k] * &l[j * n + k]));
            l[i * n + j] = s / &l[j * n + j];
        }
    }
    let mut y: Ds = vec![D::zero(); n];
    for i in 0..n {
        y[i] = (&b[i] - sum((0..i).map(|k| &l[i * n + k] * &y[k]))) / &l[i * n + i];
    }
    let mut x: Ds = vec![D::zero(); n];
    for i in (0..n).rev() {
        x[i] = (&y[i] - sum((i + 1..n).map(|k| &l[k * n + i] * &x[k]))) / &l[i * n + i];
    }
    x
}

fn transpose_ref(a: &Ds, r: usize, c: usize) -> Ds {
    (0..c).flat_map(|j| (0..r).map(move |i| a[i * c + j].clone())).collect()
}

pub fn all() -> Vec<Intrinsic> {
    use Shape::*;
    vec![
        Intrinsic {
            name: "vector add",
            shapes: |r, _, _| vec![V(r), V(r)],
            soa: |x| Val::V(x[0].v().add(x[1].v()).unwrap()),
            scalar: |x, _| zip(&x[0], &x[1], |a, b| a + b),
            spd: false,
        },
        Intrinsic {
            name: "vector sub",
            shapes: |r, _, _| vec![V(r), V(r)],
            soa: |x| Val::V(x[0].v().sub(x[1].v()).unwrap()),
            scalar: |x, _| zip(&x[0], &x[1], |a, b| a - b),
            spd: false,
        },
        Intrinsic {
            name: "vector neg",
            shapes: |r, _, _| vec![V(r)],
            soa: |x| Val::V(x[0].v().neg()),
            scalar: |x, _| x[0].iter().map(|a| -a).collect(),
            spd: false,
        },
        Intrinsic {
            name: "vector scale",
            shapes: |r, _, _| vec![S, V(r)],
            soa: |x| Val::V(x[1].v().scale(x[0].s())),
            scalar: |x, _| x[1].iter().map(|a| &x[0][0] * a).collect(),
            spd: false,
        },
        Intrinsic {
            name: "vector axpy",
            shapes: |r, _, _| vec![V(r), S, V(r)],
            soa: |x| Val::V(x[0].v().axpy(x[1].s(), x[2].v()).unwrap()),
            scalar: |x, _| zip(&x[0], &x[2], |y, v| y + &x[1][0] * v),
            spd: false,
        },
        Intrinsic {
            name: "vector mul_elementwise",
            shapes: |r, _, _| vec![V(r), V(r)],
            soa: |x| Val::V(x[0].v().mul_elementwise(x[1].v()).unwrap()),
            scalar: |x, _| zip(&x[0], &x[1], |a, b| a * b),
            spd: false,
        },
        Intrinsic {
            name: "dot",
            shapes: |r, _, _| vec![V(r), V(r)],
            soa: |x| Val::S(x[0].v().dot(x[1].v()).unwrap()),
            scalar: |x, _| vec![sum(zip(&x[0], &x[1], |a, b| a * b))],
            spd: false,
        },
        Intrinsic {
            name: "sum",
            shapes: |r, _, _| vec![V(r)],
            soa: |x| Val::S(x[0].v().sum()),
            scalar: |x, _| vec![sum(x[0].iter().cloned())],
            spd: false,
        },
        Intrinsic {
            name: "l2norm",
            shapes: |r, _, _| vec![V(r)],
            soa: |x| Val::S(x[0].v().l2norm()),
            scalar: |x, _| vec![sum(x[0].iter().map(|a| a * a)).sqrt()],
            spd: false,
        },
        Intrinsic {
            name: "vector get",
            shapes: |r, _, _| vec![V(r)],
            soa: |x| Val::S(x[0].v().get(x[0].v().len() - 1)),
            scalar: |x, _| vec![x[0].last().unwrap().clone()],
            spd: false,
        },
        Intrinsic {
            name: "vector from_ds",
            shapes: |r, _, _| vec![V(r)],
            soa: |x| Val::V(DV::from_ds(&x[0].v().to_ds())),
            scalar: |x, _| x[0].clone(),
            spd: false,
        },
        Intrinsic {
            name: "vector map",
            shapes: |r, _, _| vec![V(r)],
            soa: |x| Val::V(x[0].v().map(|a| a.sin())),
            scalar: |x, _| x[0].iter().map(|a| a.sin()).collect(),
            spd: false,
        },
        Intrinsic {
            name: "vector map2",
            shapes: |r, _, _| vec![V(r), V(r)],
            soa: |x| Val::V(x[0].v().map2(x[1].v(), |a, b| a * b.sin()).unwrap()),
            scalar: |x, _| zip(&x[0], &x[1], |a, b| a * b.sin()),
            spd: false,
        },
        Intrinsic {
            name: "matrix add",
            shapes: |r, c, _| vec![M(r, c), M(r, c)],
            soa: |x| Val::M(x[0].m().add(x[1].m()).unwrap()),
            scalar: |x, _| zip(&x[0], &x[1], |a, b| a + b),
            spd: false,
        },
        Intrinsic {
            name: "matrix sub",
            shapes: |r, c, _| vec![M(r, c), M(r, c)],
            soa: |x| Val::M(x[0].m().sub(x[1].m()).unwrap()),
            scalar: |x, _| zip(&x[0], &x[1], |a, b| a - b),
            spd: false,
        },
        Intrinsic {
            name: "matrix neg",
            shapes: |r, c, _| vec![M(r, c)],
            soa: |x| Val::M(x[0].m().neg()),
            scalar: |x, _| x[0].iter().map(|a| -a).collect(),
            spd: false,
        },
        Intrinsic {
            name: "matrix scale",
            shapes: |r, c, _| vec![S, M(r, c)],
            soa: |x| Val::M(x[1].m().scale(x[0].s())),
            scalar: |x, _| x[1].iter().map(|a| &x[0][0] * a).collect(),
            spd: false,
        },
        Intrinsic {
            name: "matrix axpy",
            shapes: |r, c, _| vec![M(r, c), S, M(r, c)],
            soa: |x| Val::M(x[0].m().axpy(x[1].s(), x[2].m()).unwrap()),
            scalar: |x, _| zip(&x[0], &x[2], |y, v| y + &x[1][0] * v),
            spd: false,
        },
        Intrinsic {
            name: "transpose",
            shapes: |r, c, _| vec![M(r, c)],
            soa: |x| Val::M(x[0].m().transpose()),
            scalar: |x, s| {
                let (r, c) = dims(s[0]);
                transpose_ref(&x[0], r, c)
            },
            spd: false,
        },
        Intrinsic {
            name: "trace",
            shapes: |r, _, _| vec![M(r, r)],
            soa: |x| Val::S(x[0].m().trace().unwrap()),
            scalar: |x, s| {
                let (r, _) = dims(s[0]);
                vec![sum((0..r).map(|i| x[0][i * r + i].clone()))]
            },
            spd: false,
        },
        Intrinsic {
            name: "matmul",
            shapes: |r, c, k| vec![M(r, c), M(c, k)],
            soa: |x| Val::M(x[0].m().matmul(x[1].m()).unwrap()),
            scalar: |x, s| {
                let ((r, c), (_, k)) = (dims(s[0]), dims(s[1]));
                matmul_ref(&x[0], &x[1], r, c, k)
            },
            spd: false,
        },
        Intrinsic {
            name: "matvec",
            shapes: |r, c, _| vec![M(r, c), V(c)],
            soa: |x| Val::V(x[0].m().matvec(x[1].v()).unwrap()),
            scalar: |x, s| {
                let (r, c) = dims(s[0]);
                matmul_ref(&x[0], &x[1], r, c, 1)
            },
            spd: false,
        },
        Intrinsic {
            name: "outer",
            shapes: |r, c, _| vec![V(r), V(c)],
            soa: |x| Val::M(DM::outer(x[0].v(), x[1].v())),
            scalar: |x, _| x[0].iter().flat_map(|a| x[1].iter().map(move |b| a * b)).collect(),
            spd: false,
        },
        Intrinsic {
            name: "matrix get",
            shapes: |r, c, _| vec![M(r, c)],
            soa: |x| {
                let m = x[0].m();
                Val::S(m.get(m.rows() - 1, m.cols() - 1))
            },
            scalar: |x, _| vec![x[0].last().unwrap().clone()],
            spd: false,
        },
        Intrinsic {
            name: "matrix row",
            shapes: |r, c, _| vec![M(r, c)],
            soa: |x| Val::V(x[0].m().row(0)),
            scalar: |x, s| x[0][..dims(s[0]).1].to_vec(),
            spd: false,
        },
        Intrinsic {
            name: "matrix col",
            shapes: |r, c, _| vec![M(r, c)],
            soa: |x| {
                let m = x[0].m();
                Val::V(m.col(m.cols() - 1))
            },
            scalar: |x, s| {
                let (r, c) = dims(s[0]);
                (0..r).map(|i| x[0][i * c + c - 1].clone()).collect()
            },
            spd: false,
        },
        Intrinsic {
            name: "matrix from_rows",
            shapes: |r, c, _| vec![M(r, c)],
            soa: |x| {
                let m = x[0].m();
                let rows: Vec<DV<f64>> = (0..m.rows()).map(|i| m.row(i)).collect();
                Val::M(DM::from_rows(&rows).unwrap())
            },
            scalar: |x, _| x[0].clone(),
            spd: false,
        },
        Intrinsic {
            name: "matrix from_cols",
            shapes: |r, c, _| vec![M(r, c)],
            soa: |x| {
                let m = x[0].m();
                let cols: Vec<DV<f64>> = (0..m.cols()).map(|j| m.col(j)).collect();
                Val::M(DM::from_cols(&cols).unwrap())
            },
            scalar: |x, _| x[0].clone(),
            spd: false,
        },
        Intrinsic {
            name: "matrix from_ds",
            shapes: |r, c, _| vec![V(r * c)],
            soa: |x| {
                let v = x[0].v();
                Val::M(DM::from_ds(1, v.len(), &v.to_ds()).unwrap())
            },
            scalar: |x, _| x[0].clone(),
            spd: false,
        },
        Intrinsic {
            name: "matrix map",
            shapes: |r, c, _| vec![M(r, c)],
            soa: |x| Val::M(x[0].m().map(|a| a.exp())),
            scalar: |x, _| x[0].iter().map(|a| a.exp()).collect(),
            spd: false,
        },
        Intrinsic {
            name: "solve_symmetric",
            shapes: |r, _, _| vec![M(r, r), V(r)],
            soa: |x| Val::V(x[0].m().solve_symmetric(x[1].v()).unwrap()),
            scalar: |x, s| solve_ref(&x[0], &x[1], dims(s[0]).0),
            spd: true,
        },
    ]
}

/// Random primal and tangent data for the inputs of `op`.
pub fn random_inputs(op: &Intrinsic, shapes: &[Shape], rng: &mut impl Rng) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut primals = Vec::new();
    let mut tangents = Vec::new();
    for (i, &s) in shapes.iter().enumerate() {
        let mut p: Vec<f64> = (0..s.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut u: Vec<f64> = (0..s.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if op.spd && i == 0 {
            let (n, _) = dims(s);
            let b = p.clone();
            for r in 0..n {
                for c in 0..n {
                    p[r * n + c] = (0..n).map(|k| b[r * n + k] * b[c * n + k]).sum::<f64>()
                        + if r == c { n as f64 } else { 0.0 };
                }
            }
            let v = u.clone();
            for r in 0..n {
                for c in 0..n {
                    u[r * n + c] = 0.5 * (v[r * n + c] + v[c * n + r]);
                }
            }
        }
        primals.push(p);
        tangents.push(u);
    }
    (primals, tangents)
}
