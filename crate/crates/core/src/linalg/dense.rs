//! Dense kernels used by the reference solver and by Rayleigh–Ritz steps.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::band::{Inertia, BK_ALPHA};
use crate::{Error, Result};

/// Eigenvalues (ascending) and `M`-orthonormal eigenvectors of `K x = λ M x`
/// for symmetric `K` and symmetric positive definite `M`.
pub fn generalized_eigen(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    let chol = m.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        row: 0,
        pivot: f64::NAN,
        context: "dense Cholesky of the mass matrix".into(),
    })?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let y = l
        .solve_lower_triangular(k)
        .expect("Cholesky factor has a positive diagonal");
    let c = l
        .solve_lower_triangular(&y.transpose())
        .expect("Cholesky factor has a positive diagonal");
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let z = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let x = l
        .transpose()
        .solve_upper_triangular(&z)
        .expect("Cholesky factor has a positive diagonal");
    Ok((values, x))
}

/// Symmetric eigen-decomposition with ascending eigenvalues.
pub fn symmetric_eigen_sorted(a: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Inertia of a dense symmetric matrix by Bunch–Kaufman `P A Pᵀ = L D Lᵀ`
/// with symmetric interchanges.
pub fn bunch_kaufman_inertia(mut a: DMatrix<f64>) -> Inertia {
    let n = a.nrows();
    let mut inertia = Inertia::default();
    let mut k = 0;
    let swap = |a: &mut DMatrix<f64>, p: usize, q: usize| {
        if p != q {
            a.swap_rows(p, q);
            a.swap_columns(p, q);
        }
    };
    while k < n {
        let akk = a[(k, k)].abs();
        let (r, omega1) = (k + 1..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold((k, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if akk.max(omega1) == 0.0 {
            inertia.zero += 1;
            k += 1;
            continue;
        }
        let mut two = false;
        if akk < BK_ALPHA * omega1 {
            let omega_r = (k..n)
                .filter(|&j| j != r)
                .map(|j| a[(r, j)].abs())
                .fold(0.0, f64::max);
            if akk * omega_r >= BK_ALPHA * omega1 * omega1 {
                // 1×1, no interchange
            } else if a[(r, r)].abs() >= BK_ALPHA * omega_r {
                swap(&mut a, k, r);
            } else {
                swap(&mut a, k + 1, r);
                two = true;
            }
        }
        if !two {
            let d = a[(k, k)];
            inertia.add_scalar(d);
            for j in k + 1..n {
                let l = a[(j, k)] / d;
                for i in j..n {
                    let v = a[(i, k)] * l;
                    a[(i, j)] -= v;
                    a[(j, i)] = a[(i, j)];
                }
            }
            k += 1;
        } else {
            let (p, c, e) = (a[(k, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
            inertia.add_block(p, c, e);
            let det = p * e - c * c;
            for j in k + 2..n {
                let (xj, yj) = (a[(j, k)], a[(j, k + 1)]);
                let pj = (e * xj - c * yj) / det;
                let qj = (p * yj - c * xj) / det;
                for i in j..n {
                    let v = a[(i, k)] * pj + a[(i, k + 1)] * qj;
                    a[(i, j)] -= v;
                    a[(j, i)] = a[(i, j)];
                }
            }
            k += 2;
        }
    }
    inertia
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_pencil() {
        let k = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]));
        let m = DMatrix::identity(2, 2);
        let (vals, _) = generalized_eigen(&k, &m).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-15 && (vals[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn generalized_vectors_are_m_orthonormal() {
        let n = 6;
        let k = DMatrix::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.1 });
        let (vals, x) = generalized_eigen(&k, &m).unwrap();
        let g = x.transpose() * &m * &x;
        let kx = &k * &x;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-12);
            }
            let r = kx.column(i) - (&m * x.column(i)) * vals[i];
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn bunch_kaufman_on_permutation_like_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -2.0]);
        let i = bunch_kaufman_inertia(a);
        assert_eq!(i, Inertia { negative: 2, zero: 0, positive: 1 });
    }
}
