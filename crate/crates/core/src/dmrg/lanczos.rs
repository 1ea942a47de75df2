use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{linalg, C64};

/// Lowest eigenpair found by [`lowest_eigenpair`].
#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], c: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Lowest eigenpair of the Hermitian map `apply` by Lanczos with full
/// reorthogonalization, started from `start` (a deterministic random vector
/// if `start` is zero). Stops when the residual norm drops below `tol`, the
/// Krylov space becomes invariant, or after `max_iter` steps.
pub fn lowest_eigenpair(apply: impl Fn(&[C64]) -> Vec<C64>, start: &[C64], max_iter: usize, tol: f64) -> LanczosResult {
    let n = start.len();
    assert!(n > 0, "empty Krylov space");
    let mut v0 = start.to_vec();
    let mut nv = norm(&v0);
    if nv == 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        v0 = (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, 0.0)).collect();
        nv = norm(&v0);
    }
    v0.iter_mut().for_each(|x| *x /= nv);

    let kmax = max_iter.max(1).min(n);
    let mut basis: Vec<Vec<C64>> = vec![v0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j]);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(&mut w, -c, v);
            }
        }
        let b = norm(&w);

        let k = alpha.len();
        let mut t = Array2::<C64>::zeros((k, k));
        for i in 0..k {
            t[[i, i]] = C64::new(alpha[i], 0.0);
            if i + 1 < k {
                t[[i, i + 1]] = C64::new(beta[i], 0.0);
                t[[i + 1, i]] = C64::new(beta[i], 0.0);
            }
        }
        let (vals, vecs) = linalg::eigh(&t);
        let residual = b * vecs[[k - 1, 0]].norm();
        let invariant = b <= 1e-14 * (1.0 + a.abs());
        if residual < tol || invariant || k >= kmax {
            let mut x = vec![C64::new(0.0, 0.0); n];
            for (i, v) in basis.iter().enumerate() {
                axpy(&mut x, vecs[[i, 0]], v);
            }
            let nx = norm(&x);
            x.iter_mut().for_each(|e| *e /= nx);
            return LanczosResult {
                value: vals[0],
                vector: x,
                iterations: k,
                residual,
                converged: residual < tol || invariant,
            };
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
}
