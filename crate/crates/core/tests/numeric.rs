//! Dense, sparse and softmax kernels against naive reference loops, and one
//! Adam step against the textbook update written out by hand.

use fedgraph_core::numcore::{AdamState, Matrix, SparseAdj};
use proptest::prelude::*;

fn naive_matmul(a: &Matrix, b: &Matrix) -> Vec<f64> {
    let (n, k) = a.shape();
    let m = b.cols();
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a.row(i)[t] * b.row(t)[j];
            }
            out[i * m + j] = s;
        }
    }
    out
}

fn close(got: &[f64], want: &[f64], tol: f64) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|(g, w)| (g - w).abs() <= tol * w.abs().max(1.0))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn matmul_case() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..7, 1usize..7, 1usize..7).prop_flat_map(|(n, k, m)| (matrix(n, k), matrix(k, m)))
}

/// Random symmetric weighted adjacency without self-loops.
fn sparse_case() -> impl Strategy<Value = (SparseAdj, Matrix)> {
    (2usize..12, 1usize..5).prop_flat_map(|(n, d)| {
        let pairs = n * (n - 1) / 2;
        (
            prop::collection::vec(prop::option::weighted(0.3, 0.1f64..2.0), pairs),
            matrix(n, d),
        )
            .prop_map(move |(ws, x)| {
                let mut triplets = Vec::new();
                let mut idx = 0;
                for u in 0..n {
                    for v in u + 1..n {
                        if let Some(w) = ws[idx] {
                            triplets.push((u, v, w));
                            triplets.push((v, u, w));
                        }
                        idx += 1;
                    }
                }
                (SparseAdj::from_triplets(n, &triplets).unwrap(), x)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn matmul_matches_triple_loop((a, b) in matmul_case()) {
        let got = a.matmul(&b).unwrap();
        prop_assert!(close(got.as_slice(), &naive_matmul(&a, &b), 1e-12));
    }

    #[test]
    fn transposed_products_match((a, b) in matmul_case()) {
        let at = a.transpose();
        let bt = b.transpose();
        let want = naive_matmul(&a, &b);
        prop_assert!(close(at.t_matmul(&b).unwrap().as_slice(), &want, 1e-12));
        prop_assert!(close(a.matmul_t(&bt).unwrap().as_slice(), &want, 1e-12));
    }

    #[test]
    fn spmm_matches_densified((adj, x) in sparse_case()) {
        let dense = adj.to_dense();
        let want = naive_matmul(&dense, &x);
        prop_assert!(close(adj.spmm(&x).unwrap().as_slice(), &want, 1e-12));
        let want_t = naive_matmul(&dense.transpose(), &x);
        prop_assert!(close(adj.spmm_t(&x).unwrap().as_slice(), &want_t, 1e-12));
    }

    #[test]
    fn softmax_matches_reference(a in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c)), shift in -50.0f64..50.0) {
        let got = a.row_softmax().unwrap();
        let shifted = a.map(|v| v + shift).row_softmax().unwrap();
        for i in 0..a.rows() {
            let row = a.row(i);
            let z: f64 = row.iter().map(|v| v.exp()).sum();
            let want: Vec<f64> = row.iter().map(|v| v.exp() / z).collect();
            prop_assert!(close(got.row(i), &want, 1e-12));
            prop_assert!((got.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(close(shifted.row(i), &want, 1e-12));
        }
    }
}

#[test]
fn softmax_survives_huge_logits() {
    let a = Matrix::from_rows(&[[1000.0, 999.0, -1000.0]]).unwrap();
    let p = a.row_softmax().unwrap();
    assert!(p.is_finite());
    let e = (-1.0f64).exp();
    assert!((p.row(0)[0] - 1.0 / (1.0 + e)).abs() <= 1e-12);
    assert!((p.row(0)[1] - e / (1.0 + e)).abs() <= 1e-12);
}

#[test]
fn adam_two_steps_by_hand() {
    let mut w = Matrix::from_rows(&[[0.5, -1.0]]).unwrap();
    let mut adam = AdamState::new([&w]);
    let grads = [[0.2, -3.0], [-0.4, 1.0]];
    let lr = 0.1;
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut want = [0.5f64, -1.0];
    let mut m = [0.0f64; 2];
    let mut v = [0.0f64; 2];
    for (t, g) in grads.iter().enumerate() {
        let t = (t + 1) as i32;
        for c in 0..2 {
            m[c] = b1 * m[c] + (1.0 - b1) * g[c];
            v[c] = b2 * v[c] + (1.0 - b2) * g[c] * g[c];
            let m_hat = m[c] / (1.0 - b1.powi(t));
            let v_hat = v[c] / (1.0 - b2.powi(t));
            want[c] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        let gm = Matrix::from_rows(&[*g]).unwrap();
        adam.step(&mut [&mut w], &[gm], lr).unwrap();
    }
    assert_eq!(adam.step_count(), 2);
    assert!(close(w.as_slice(), &want, 1e-14), "{:?} vs {want:?}", w.as_slice());
}

#[test]
fn adam_zero_rate_leaves_params() {
    let mut w = Matrix::from_rows(&[[0.5, -1.0], [2.0, 3.0]]).unwrap();
    let before = w.clone();
    let mut adam = AdamState::new([&w]);
    let g = Matrix::filled(2, 2, 0.7);
    adam.step(&mut [&mut w], &[g], 0.0).unwrap();
    assert_eq!(w, before);
}
