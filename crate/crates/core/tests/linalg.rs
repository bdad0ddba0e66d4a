mod common;

use common::intrinsics::{all, random_inputs, Val};
use common::{dm, dot, dv, random_matrix, random_spd, random_vec, Tol};
use nestad::linalg::io::{read_array, write_matrix, write_vector, Array};
use nestad::linalg::{reverse_sweep_m, reverse_sweep_v};
use nestad::{grad, jacobian, jacobianv, reverse_sweep, Error, Matrix, Tag, Tape, D, DM, DV};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn m(rows: &[&[f64]]) -> DM<f64> {
    DM::from_rows_vec(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn identity_times_b() {
    let b = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
    assert_eq!(DM::identity(2).matmul(&b).unwrap().values(), b.values());
}

#[test]
fn matmul_reverse_rule() {
    // C = A B with B a swap; A-bar = C-bar B^T
    let tape = Tape::new();
    let a = DM::rev_leaf(m(&[&[1.0, 2.0], &[3.0, 4.0]]), &tape);
    let b = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let c = a.matmul(&b).unwrap();
    assert_eq!(c.values(), m(&[&[2.0, 1.0], &[4.0, 3.0]]).values());
    let cbar = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
    reverse_sweep_m(&c, &cbar, tape.tag()).unwrap();
    assert_eq!(a.adjoint().values(), cbar.matmul(&b.transpose()).unwrap().values());
}

#[test]
fn matmul_tangent_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (a, b, da) = (random_matrix(&mut rng, 3, 4), random_matrix(&mut rng, 4, 2), random_matrix(&mut rng, 3, 4));
    let t = Tag::fresh();
    let c = DM::dual(dm(&a), dm(&da), t).unwrap().matmul(&dm(&b)).unwrap();
    let h = 1e-6;
    let shift = |s: f64| {
        let data: Vec<f64> = a.data().iter().zip(da.data()).map(|(x, d)| x + s * d).collect();
        DM::from_matrix(Matrix::new(3, 4, data).unwrap()).matmul(&dm(&b)).unwrap()
    };
    let (cp, cm) = (shift(h), shift(-h));
    let fd: Vec<f64> = cp.values().data().iter().zip(cm.values().data()).map(|(p, q)| (p - q) / (2.0 * h)).collect();
    let mut tol = Tol::new(0.0, 1e-6);
    tol.slice("dC", c.tangent(t).values().data(), &fd);
    tol.into_result().unwrap();
}

#[test]
fn dot_and_norm_gradients() {
    let x = dv(&[1.0, 2.0, 3.0]);
    assert_eq!(x.dot(&x).unwrap().value(), 14.0);
    assert_eq!(grad(|v: &DV<f64>| v.dot(v), &x).unwrap().values(), &[2.0, 4.0, 6.0]);

    let y = dv(&[3.0, 4.0]);
    assert_eq!(y.l2norm().value(), 5.0);
    let g = grad(|v: &DV<f64>| Ok(v.l2norm()), &y).unwrap();
    assert!((g.values()[0] - 0.6).abs() < 1e-15 && (g.values()[1] - 0.8).abs() < 1e-15);
    // zero vector: derivative taken as zero rather than NaN
    assert_eq!(grad(|v: &DV<f64>| Ok(v.l2norm()), &DV::zeros(3)).unwrap().values(), &[0.0; 3]);
}

#[test]
fn map_sin_matches_differences() {
    let x = dv(&[-1.0, 0.2, 2.5]);
    let u = [0.3, -0.7, 1.1];
    let got = jacobianv(|v: &DV<f64>| Ok(v.map(|d| d.sin())), &x, &dv(&u)).unwrap();
    let h = 1e-6;
    let fd: Vec<f64> = x.values().iter().zip(&u).map(|(x, u)| ((x + h * u).sin() - (x - h * u).sin()) / (2.0 * h)).collect();
    let mut tol = Tol::new(0.0, 1e-6);
    tol.slice("map sin", got.values(), &fd);
    tol.into_result().unwrap();
}

#[test]
fn solve_examples() {
    let b = dv(&[1.0, -2.0, 3.0]);
    assert_eq!(DM::identity(3).solve_symmetric(&b).unwrap().values(), b.values());
    let x = m(&[&[2.0, 0.0], &[0.0, 4.0]]).solve_symmetric(&dv(&[2.0, 8.0])).unwrap();
    assert!((x.values()[0] - 1.0).abs() < 1e-15 && (x.values()[1] - 2.0).abs() < 1e-15);
}

#[test]
fn solve_derivative_in_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = dm(&random_spd(&mut rng, 4));
    let b = random_vec(&mut rng, 4, -1.0, 1.0);
    let j = jacobian(|v: &DV<f64>| a.solve_symmetric(v), &dv(&b)).unwrap();
    let h = 1e-6;
    let mut tol = Tol::new(0.0, 1e-5);
    for k in 0..4 {
        let mut bp = b.clone();
        let mut bm = b.clone();
        bp[k] += h;
        bm[k] -= h;
        let (xp, xm) = (a.solve_symmetric(&dv(&bp)).unwrap(), a.solve_symmetric(&dv(&bm)).unwrap());
        let fd: Vec<f64> = xp.values().iter().zip(xm.values()).map(|(p, q)| (p - q) / (2.0 * h)).collect();
        let col: Vec<f64> = (0..4).map(|i| j.get(i, k).value()).collect();
        tol.slice(&format!("column {k}"), &col, &fd);
    }
    tol.into_result().unwrap();
}

#[test]
fn solve_errors() {
    let b = dv(&[1.0, 1.0]);
    assert!(matches!(m(&[&[1.0, 2.0], &[0.0, 1.0]]).solve_symmetric(&b), Err(Error::NotSymmetric { .. })));
    assert!(matches!(m(&[&[1.0, 1.0], &[1.0, 1.0]]).solve_symmetric(&b), Err(Error::Singular)));
    assert!(matches!(DM::<f64>::zeros(2, 3).solve_symmetric(&b), Err(Error::Dimension { .. })));
    assert!(matches!(DM::<f64>::identity(3).solve_symmetric(&b), Err(Error::Shape { .. })));
}

#[test]
fn shape_errors() {
    let (a, b) = (DM::<f64>::zeros(2, 3), DM::<f64>::zeros(2, 3));
    assert!(matches!(a.matmul(&b), Err(Error::Shape { .. })));
    assert!(matches!(a.matvec(&dv(&[1.0, 2.0])), Err(Error::Shape { .. })));
    assert!(matches!(a.trace(), Err(Error::Dimension { .. })));
    assert!(matches!(dv(&[1.0]).add(&dv(&[1.0, 2.0])), Err(Error::Shape { .. })));
    assert!(matches!(dv(&[1.0]).dot(&dv(&[1.0, 2.0])), Err(Error::Shape { .. })));
    assert!(DV::dual(dv(&[1.0]), dv(&[1.0, 2.0]), Tag::fresh()).is_err());
    assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
}

#[test]
fn mixed_scalar_and_vector_sweeps() {
    let tape = Tape::new();
    let x = DV::rev_leaf(dv(&[1.0, 2.0]), &tape);
    let s = x.get(0) * x.get(1);
    reverse_sweep(&s, &D::one(), tape.tag()).unwrap();
    assert_eq!(x.adjoint().values(), &[2.0, 1.0]);
    let y = x.scale(&D::from(3.0));
    reverse_sweep_v(&y, &dv(&[1.0, 1.0]), tape.tag()).unwrap();
    assert_eq!(x.adjoint().values(), &[3.0, 3.0]);
}

#[test]
fn binary_files_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = random_vec(&mut rng, 5, -10.0, 10.0);
    let mut buf = Vec::new();
    write_vector(&mut buf, &v).unwrap();
    assert_eq!(&buf[..4], b"NAD8");
    assert_eq!(read_array::<f64, _>(&buf[..]).unwrap(), Array::Vector(v));

    let a = random_matrix(&mut rng, 3, 2);
    let mut buf = Vec::new();
    write_matrix(&mut buf, &a).unwrap();
    assert_eq!(read_array::<f64, _>(&buf[..]).unwrap(), Array::Matrix(a));
    assert!(matches!(read_array::<f32, _>(&buf[..]), Err(Error::Format(_))));
    assert!(matches!(read_array::<f64, _>(&buf[..20]), Err(Error::Format(_))));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    let mut buf = Vec::new();
    write_vector(&mut buf, &[1.5f32, -2.0]).unwrap();
    std::fs::write(&path, &buf).unwrap();
    let back = read_array::<f32, _>(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back, Array::Vector(vec![1.5, -2.0]));
}

#[test]
fn single_precision_solve() {
    let a = DM::from_rows_vec(&[vec![4.0f32, 1.0], vec![1.0, 3.0]]).unwrap();
    let g = grad(|b: &DV<f32>| a.solve_symmetric(b).map(|x| x.sum()), &DV::from_slice(&[1.0, 2.0])).unwrap();
    // d/db sum(A^{-1} b) = A^{-1} 1 = (2, 3) / 11
    assert!((g.values()[0] - 2.0 / 11.0).abs() < 1e-3 && (g.values()[1] - 3.0 / 11.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solve_round_trip(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = dm(&random_spd(&mut rng, n));
        let x = random_vec(&mut rng, n, -1.0, 1.0);
        let back = a.solve_symmetric(&a.matvec(&dv(&x)).unwrap()).unwrap();
        for (p, q) in back.values().iter().zip(&x) {
            prop_assert!((p - q).abs() <= 1e-8);
        }
    }

    #[test]
    fn reverse_is_adjoint_of_forward(seed in any::<u64>(), r in 1usize..6, c in 1usize..6, k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for op in all() {
            let shapes = (op.shapes)(r, c, k);
            let (p, u) = random_inputs(&op, &shapes, &mut rng);
            let t = Tag::fresh();
            let duals: Vec<Val> = shapes.iter().zip(&p).zip(&u).map(|((&s, p), u)| Val::dual(s, p, u, t)).collect();
            let out = (op.soa)(&duals);
            let w = random_vec(&mut rng, out.shape().len(), -1.0, 1.0);
            let lhs = dot(&out.tangent(t), &w);

            let tape = Tape::new();
            let revs: Vec<Val> = shapes.iter().zip(&p).map(|(&s, p)| Val::rev(s, p, &tape)).collect();
            (op.soa)(&revs).sweep(&w, tape.tag());
            let rhs: f64 = revs.iter().zip(&u).map(|(r, u)| dot(&r.adjoint(), u)).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1e-300), "{}: {} vs {}", op.name, lhs, rhs);
        }
    }
}
