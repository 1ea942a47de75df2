//! Dense kernels on `ndarray` matrices. Factorizations use `faer`; the
//! matrix exponential uses `nalgebra`.

use faer::Mat;
use nalgebra::DMatrix;
use ndarray::Array2;

use crate::C64;

pub fn to_nalgebra(a: &Array2<C64>) -> DMatrix<C64> {
    let (m, n) = a.dim();
    DMatrix::from_fn(m, n, |i, j| a[[i, j]])
}

pub fn from_nalgebra(a: &DMatrix<C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

fn to_faer(a: &Array2<C64>) -> Mat<C64> {
    let (m, n) = a.dim();
    Mat::from_fn(m, n, |i, j| a[[i, j]])
}

/// Thin SVD of a faer matrix. faer's bidiagonal solver occasionally
/// reports non-convergence on well-conditioned input; a QR reduction to a
/// square factor avoids it.
fn faer_thin_svd(a: &Mat<C64>) -> (Mat<C64>, Vec<f64>, Mat<C64>) {
    if let Ok(svd) = a.thin_svd() {
        let s = (0..svd.S().dim()).map(|i| svd.S()[i].re).collect();
        return (svd.U().to_owned(), s, svd.V().to_owned());
    }
    if a.nrows() >= a.ncols() {
        // a = q r, r = ur s v^dag
        let qr = a.qr();
        let (q, r) = (qr.compute_thin_Q(), qr.thin_R().to_owned());
        let svd = r.thin_svd().expect("svd of the triangular factor converges");
        let s = (0..svd.S().dim()).map(|i| svd.S()[i].re).collect();
        (&q * svd.U(), s, svd.V().to_owned())
    } else {
        let (v, s, u) = faer_thin_svd(&a.adjoint().to_owned());
        (u, s, v)
    }
}

/// Thin SVD with singular values sorted descending: `a = u * diag(s) * vt`.
pub fn svd(a: &Array2<C64>) -> (Array2<C64>, Vec<f64>, Array2<C64>) {
    let (m, n) = a.dim();
    let k = m.min(n);
    if k == 0 {
        return (Array2::zeros((m, 0)), Vec::new(), Array2::zeros((0, n)));
    }
    let (fu, fs, fv) = faer_thin_svd(&to_faer(a));
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| fs[j].total_cmp(&fs[i]));
    let s = order.iter().map(|&i| fs[i]).collect();
    let u = Array2::from_shape_fn((m, k), |(i, c)| fu[(i, order[c])]);
    let vt = Array2::from_shape_fn((k, n), |(r, j)| fv[(j, order[r])].conj());
    (u, s, vt)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), Array2::zeros((0, 0)));
    }
    let eig = to_faer(a).self_adjoint_eigen(faer::Side::Lower).expect("eigh converges");
    let (fs, fu) = (eig.S().column_vector(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| fs[i].re.total_cmp(&fs[j].re));
    let vals = order.iter().map(|&i| fs[i].re).collect();
    let vecs = Array2::from_shape_fn((n, n), |(r, c)| fu[(r, order[c])]);
    (vals, vecs)
}

/// Matrix exponential by Padé scaling-and-squaring.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    from_nalgebra(&to_nalgebra(a).exp())
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let x = a[[i, j]];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = x * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn frobenius(a: &Array2<C64>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|x| x.conj())
}


#[cfg(test)]
mod stress {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn svd_reconstructs_random_low_rank() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..3000 {
            let m = rng.random_range(1..9);
            let n = rng.random_range(1..9);
            let r = rng.random_range(1..=m.min(n));
            let mut g = |a: usize, b: usize| {
                Array2::from_shape_fn((a, b), |_| C64::new(rng.random::<f64>() - 0.5, if trial % 2 == 0 { 0.0 } else { rng.random::<f64>() - 0.5 }))
            };
            let a = g(m, r).dot(&g(r, n));
            let (u, s, vt) = svd(&a);
            let k = s.len();
            let sd = Array2::from_shape_fn((k, k), |(i, j)| if i == j { C64::new(s[i], 0.0) } else { C64::new(0.0, 0.0) });
            let err = frobenius(&(u.dot(&sd).dot(&vt) - &a));
            assert!(err <= 1e-12 * frobenius(&a).max(1.0), "trial {trial} {m}x{n} rank {r}: {err}");
            let uu = dagger(&u).dot(&u);
            assert!(frobenius(&(uu - identity(k))) < 1e-10, "trial {trial}: u not isometric");
        }
    }
}
