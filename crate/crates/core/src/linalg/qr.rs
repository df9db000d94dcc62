use crate::error::{Error, Result};
use crate::linalg::dense::dot;
use crate::linalg::DenseMatrix;

/// Thin Householder QR of a tall matrix.
///
/// Returns `Q` (m×n, orthonormal columns) and upper-triangular `R` (n×n)
/// with a non-negative diagonal. Rank-deficient input is accepted; the
/// corresponding diagonal entries of `R` are zero and `Q` stays orthonormal.
pub fn qr_thin(x: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = x.shape();
    if m < n {
        return Err(Error::mismatch("qr_thin (needs rows >= cols)", x.shape(), (n, n)));
    }

    // Column-major working copy; reflections act on columns.
    let mut cols = x.to_columns();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    let mut r = DenseMatrix::zeros(n, n);

    for k in 0..n {
        let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            for j in k + 1..n {
                r[(k, j)] = cols[j][k];
            }
            continue;
        }
        let x0 = cols[k][k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let v_norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if v_norm == 0.0 {
            reflectors.push(None);
        } else {
            for a in &mut v {
                *a /= v_norm;
            }
            for col in cols.iter_mut().skip(k + 1) {
                let tail = &mut col[k..];
                let proj = 2.0 * dot(&v, tail);
                for (t, &vi) in tail.iter_mut().zip(&v) {
                    *t -= proj * vi;
                }
            }
            reflectors.push(Some(v));
        }
        r[(k, k)] = if v_norm == 0.0 { x0 } else { alpha };
        for j in k + 1..n {
            r[(k, j)] = cols[j][k];
        }
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the leading n columns of I.
    let mut q_cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, refl) in reflectors.iter().enumerate().rev() {
        let Some(v) = refl else { continue };
        for col in q_cols.iter_mut() {
            let tail = &mut col[k..];
            let proj = 2.0 * dot(v, tail);
            if proj != 0.0 {
                for (t, &vi) in tail.iter_mut().zip(v) {
                    *t -= proj * vi;
                }
            }
        }
    }
    let mut q = DenseMatrix::from_columns(m, &q_cols);

    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.negate_column(k);
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
        }
    }
    Ok((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: Tolerances = Tolerances::DEFAULT;

    fn random(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn check(x: &DenseMatrix) {
        let (q, r) = qr_thin(x).unwrap();
        assert!(q.orthonormality_error() <= TOL.qr_orthonormality);
        let residual = q.matmul(&r).unwrap().sub(x).unwrap().frobenius_norm();
        assert!(residual <= TOL.qr_residual * (1.0 + x.frobenius_norm()), "{residual}");
        for i in 0..r.n_rows() {
            assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn single_column_hand_case() {
        let x = DenseMatrix::from_row_major(2, 1, vec![3.0, 4.0]).unwrap();
        let (q, r) = qr_thin(&x).unwrap();
        assert!((q[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((q[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_input_gives_identity_r() {
        let (q0, _) = qr_thin(&random(12, 4, 3)).unwrap();
        let (q, r) = qr_thin(&q0).unwrap();
        assert!(r.max_abs_diff(&DenseMatrix::identity(4)) < 1e-12);
        assert!(q.max_abs_diff(&q0) < 1e-12);
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..10 {
            check(&random(20, 5, seed));
        }
        check(&random(7, 7, 99));
    }

    #[test]
    fn rank_deficient_does_not_error() {
        let mut x = random(10, 4, 5);
        for i in 0..10 {
            x[(i, 2)] = 2.0 * x[(i, 0)] - x[(i, 1)];
        }
        check(&x);
        let (_, r) = qr_thin(&x).unwrap();
        assert!(r[(2, 2)].abs() < 1e-12);

        let zero = DenseMatrix::zeros(6, 3);
        let (q, r) = qr_thin(&zero).unwrap();
        assert!(q.orthonormality_error() < 1e-15);
        assert_eq!(r, DenseMatrix::zeros(3, 3));
    }

    #[test]
    fn wide_input_rejected() {
        assert!(qr_thin(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
