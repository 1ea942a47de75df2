use ndarray::{Array1, Array2};

use super::{check_cap, embed, ops, VECTORIZED_CAP};
use crate::error::Result;
use crate::linalg::{dagger, frobenius, identity};
use crate::C64;

/// `d rho/dt = -i[H, rho] + sum_k r_k (2 L_k rho L_k^dag - {L_k^dag L_k, rho})`
/// on explicit density matrices.
#[derive(Clone, Debug)]
pub struct DenseLindblad {
    pub dims: Vec<usize>,
    pub h: Array2<C64>,
    pub jumps: Vec<(f64, Array2<C64>)>,
}

impl DenseLindblad {
    /// Bose-Hubbard chain with thermal baths on the first and last site.
    /// A single-site chain only feels the first bath.
    #[allow(clippy::too_many_arguments)]
    pub fn bose_hubbard(l: usize, d: usize, j: f64, u: f64, lambda1: f64, lambda_l: f64, nbar1: f64, nbar_l: f64) -> DenseLindblad {
        let dims = vec![d; l];
        let h = super::bose_hubbard_hamiltonian(l, d, j, u);
        let a = ops::boson_a(d);
        let ad = dagger(&a);
        let mut baths = vec![(0, lambda1, nbar1)];
        if l > 1 {
            baths.push((l - 1, lambda_l, nbar_l));
        }
        let mut jumps = Vec::new();
        for (s, lam, nbar) in baths {
            jumps.push((lam * (nbar + 1.0), embed(&dims, &[(s, &a)])));
            jumps.push((lam * nbar, embed(&dims, &[(s, &ad)])));
        }
        DenseLindblad { dims, h, jumps }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn rhs(&self, rho: &Array2<C64>) -> Array2<C64> {
        let mi = C64::new(0.0, -1.0);
        let mut out = (self.h.dot(rho) - rho.dot(&self.h)).mapv(|x| x * mi);
        for (rate, l) in &self.jumps {
            if *rate == 0.0 {
                continue;
            }
            let ld = dagger(l);
            let ldl = ld.dot(l);
            let term = l.dot(rho).dot(&ld).mapv(|x| x * 2.0) - ldl.dot(rho) - rho.dot(&ldl);
            out = out + term.mapv(|x| x * *rate);
        }
        out
    }

    /// Propagate by `t` with a convergent Taylor series on substeps of at most `h_max`.
    pub fn evolve(&self, rho: &Array2<C64>, t: f64, h_max: f64) -> Array2<C64> {
        let n = (t.abs() / h_max).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let mut r = rho.clone();
        for _ in 0..n {
            r = self.taylor_step(&r, h);
        }
        r
    }

    fn taylor_step(&self, rho: &Array2<C64>, h: f64) -> Array2<C64> {
        let scale = frobenius(rho).max(1e-300);
        let mut acc = rho.clone();
        let mut term = rho.clone();
        for k in 1..200 {
            term = self.rhs(&term).mapv(|x| x * (h / k as f64));
            acc += &term;
            if frobenius(&term) < 1e-17 * scale {
                break;
            }
        }
        acc
    }

    /// Index of `|n><m|` in the site-major vectorized basis, where site `l`
    /// contributes the local index `n_l + d_l * m_l`.
    fn vec_index(&self, n: usize, m: usize) -> usize {
        let mut idx = 0;
        let mut nn = n;
        let mut mm = m;
        let mut digits = Vec::with_capacity(self.dims.len());
        for &d in self.dims.iter().rev() {
            digits.push((nn % d) + d * (mm % d));
            nn /= d;
            mm /= d;
        }
        for (&d, k) in self.dims.iter().zip(digits.iter().rev()) {
            idx = idx * d * d + k;
        }
        idx
    }

    pub fn vectorize(&self, rho: &Array2<C64>) -> Array1<C64> {
        let dim = self.dim();
        let mut v = Array1::zeros(dim * dim);
        for n in 0..dim {
            for m in 0..dim {
                v[self.vec_index(n, m)] = rho[[n, m]];
            }
        }
        v
    }

    pub fn devectorize(&self, v: &Array1<C64>) -> Array2<C64> {
        let dim = self.dim();
        Array2::from_shape_fn((dim, dim), |(n, m)| v[self.vec_index(n, m)])
    }

    /// The Lindbladian as a matrix on the site-major vectorized basis, built column by column.
    pub fn vectorized_matrix(&self) -> Result<Array2<C64>> {
        let dim = self.dim();
        check_cap(dim * dim, VECTORIZED_CAP)?;
        let mut out = Array2::zeros((dim * dim, dim * dim));
        for n in 0..dim {
            for m in 0..dim {
                let mut rho = Array2::zeros((dim, dim));
                rho[[n, m]] = C64::new(1.0, 0.0);
                let col = self.vectorize(&self.rhs(&rho));
                out.column_mut(self.vec_index(n, m)).assign(&col);
            }
        }
        Ok(out)
    }

    pub fn trace(rho: &Array2<C64>) -> C64 {
        rho.diag().sum()
    }

    /// `tr(n_l rho)` for every site.
    pub fn occupations(&self, rho: &Array2<C64>) -> Vec<f64> {
        (0..self.dims.len())
            .map(|l| {
                let n = embed(&self.dims, &[(l, &ops::boson_n(self.dims[l]))]);
                Self::trace(&n.dot(rho)).re
            })
            .collect()
    }

    pub fn identity(&self) -> Array2<C64> {
        identity(self.dim())
    }
}
