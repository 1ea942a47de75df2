//! Dense reference implementations used to validate the tensor-network code.
//!
//! Everything here works on explicit state vectors and matrices in the
//! natural product basis (site 0 most significant). The model matrices are
//! assembled from Pauli and boson matrices by Kronecker products, without
//! touching the MPO builders.

pub mod fixtures;
mod lindblad;
pub mod ops;

pub use lindblad::DenseLindblad;

use ndarray::{Array1, Array2, Array3, Array4};

use crate::error::{Error, Result};
use crate::linalg;
use crate::netops::{AsMpo, AsMps};
use crate::space::LocalSpace;
use crate::symtensor::{Charge, SymTensor};
use crate::C64;

/// Largest Hilbert-space dimension handled densely.
pub const DEFAULT_CAP: usize = 4096;
/// Largest vectorized (density-operator) dimension handled densely.
pub const VECTORIZED_CAP: usize = 16384;

fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(())
}

/// A dense operator on a chain together with the charge of each basis state.
#[derive(Clone, Debug)]
pub struct DenseSystem {
    pub dims: Vec<usize>,
    pub charges: Vec<Charge>,
    pub matrix: Array2<C64>,
}

impl DenseSystem {
    pub fn new(spaces: &[LocalSpace], matrix: Array2<C64>, cap: usize) -> Result<DenseSystem> {
        let charges = basis_charges(spaces);
        check_cap(charges.len(), cap)?;
        if matrix.dim() != (charges.len(), charges.len()) {
            return Err(Error::ShapeMismatch {
                key: vec![],
                expected: vec![charges.len(), charges.len()],
                got: matrix.shape().to_vec(),
            });
        }
        Ok(DenseSystem { dims: spaces.iter().map(LocalSpace::dim).collect(), charges, matrix })
    }

    pub fn dim(&self) -> usize {
        self.charges.len()
    }

    /// Lowest eigenpair, optionally restricted to basis states of total charge `sector`.
    pub fn ground(&self, sector: Option<Charge>) -> Result<(f64, Array1<C64>)> {
        match sector {
            Some(q) => self.ground_in(&[q]),
            None => self.ground_in(&self.charges.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect::<Vec<_>>()),
        }
    }

    /// Lowest eigenpair of the operator projected onto the span of all basis
    /// states whose charge is listed. Couplings between the listed sectors
    /// are kept.
    pub fn ground_in(&self, sectors: &[Charge]) -> Result<(f64, Array1<C64>)> {
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| sectors.contains(&self.charges[i])).collect();
        if idx.is_empty() {
            return Err(Error::InvalidParams(format!("sectors {sectors:?} are empty")));
        }
        let sub = Array2::from_shape_fn((idx.len(), idx.len()), |(r, c)| self.matrix[[idx[r], idx[c]]]);
        let (vals, vecs) = linalg::eigh(&sub);
        let mut v = Array1::zeros(self.dim());
        for (r, &i) in idx.iter().enumerate() {
            v[i] = vecs[[r, 0]];
        }
        Ok((vals[0], v))
    }

    /// Lowest eigenvalue on the span of the listed sectors.
    pub fn ground_over(&self, sectors: &[Charge]) -> Result<f64> {
        Ok(self.ground_in(sectors)?.0)
    }

    /// `exp(-i H t) v` through the eigendecomposition of the Hermitian matrix.
    pub fn evolve_eig(&self, v: &Array1<C64>, t: f64) -> Array1<C64> {
        let (vals, vecs) = linalg::eigh(&self.matrix);
        let coeff = vecs.t().mapv(|x| x.conj()).dot(v);
        let phased = Array1::from_shape_fn(coeff.len(), |k| coeff[k] * C64::new(0.0, -vals[k] * t).exp());
        vecs.dot(&phased)
    }

    /// `exp(-i H t) v` through a dense matrix exponential.
    pub fn evolve_expm(&self, v: &Array1<C64>, t: f64) -> Array1<C64> {
        let g = self.matrix.mapv(|x| x * C64::new(0.0, -t));
        linalg::expm(&g).dot(v)
    }

    /// `<v|A|v>` for a dense operator `a`.
    pub fn expect(v: &Array1<C64>, a: &Array2<C64>) -> C64 {
        v.mapv(|x| x.conj()).dot(&a.dot(v))
    }
}

/// Total charge of every natural basis state.
pub fn basis_charges(spaces: &[LocalSpace]) -> Vec<Charge> {
    let mut out = vec![Charge::ZERO];
    for sp in spaces {
        out = out.iter().flat_map(|&q| sp.charges().iter().map(move |&c| q + c)).collect();
    }
    out
}

/// `ops` placed on their sites with identities elsewhere.
pub fn embed(dims: &[usize], ops: &[(usize, &Array2<C64>)]) -> Array2<C64> {
    let mut out = linalg::identity(1);
    for (l, &d) in dims.iter().enumerate() {
        let factor = ops.iter().find(|(s, _)| *s == l).map(|(_, o)| (*o).clone()).unwrap_or_else(|| linalg::identity(d));
        out = linalg::kron(&out, &factor);
    }
    out
}

/// Open-chain XYZ Hamiltonian with a longitudinal field.
pub fn xyz_hamiltonian(l: usize, gamma: f64, delta: f64, h: f64) -> Array2<C64> {
    let dims = vec![2; l];
    let (x, y, z) = (ops::sigma_x(), ops::sigma_y(), ops::sigma_z());
    let mut m = Array2::zeros((1 << l, 1 << l));
    for j in 0..l.saturating_sub(1) {
        m = m + embed(&dims, &[(j, &x), (j + 1, &x)]).mapv(|v| v * (1.0 + gamma))
            + embed(&dims, &[(j, &y), (j + 1, &y)]).mapv(|v| v * (1.0 - gamma))
            + embed(&dims, &[(j, &z), (j + 1, &z)]).mapv(|v| v * delta);
    }
    for j in 0..l {
        m = m + embed(&dims, &[(j, &z)]).mapv(|v| v * h);
    }
    m
}

/// `exp(i pi sum_l sigma^z_l)` as a dense matrix.
pub fn parity(l: usize) -> Array2<C64> {
    let dims = vec![2; l];
    let z = ops::sigma_z();
    let mut total: Array2<C64> = Array2::zeros((1 << l, 1 << l));
    for j in 0..l {
        total = total + embed(&dims, &[(j, &z)]);
    }
    linalg::expm(&total.mapv(|v| v * C64::new(0.0, std::f64::consts::PI)))
}

/// Bose-Hubbard chain `-J sum (a_l a^dag_{l+1} + h.c.) + U/2 sum n(n-1)` with cutoff `d`.
pub fn bose_hubbard_hamiltonian(l: usize, d: usize, j: f64, u: f64) -> Array2<C64> {
    let dims = vec![d; l];
    let a = ops::boson_a(d);
    let ad = linalg::dagger(&a);
    let n = ops::boson_n(d);
    let int = n.dot(&(&n - &linalg::identity(d)));
    let dim = d.pow(l as u32);
    let mut m = Array2::zeros((dim, dim));
    for s in 0..l.saturating_sub(1) {
        let hop = embed(&dims, &[(s, &a), (s + 1, &ad)]);
        m = m - (&hop + &linalg::dagger(&hop)).mapv(|v| v * j);
    }
    for s in 0..l {
        m = m + embed(&dims, &[(s, &int)]).mapv(|v| v * (u / 2.0));
    }
    m
}

fn site_dense(t: &SymTensor, space: &LocalSpace, phys: usize) -> Vec<usize> {
    let leg = t.leg(phys);
    (0..space.dim())
        .map(|i| {
            let (q, off) = space.locate(i);
            leg.offset_of(q).expect("physical sector present") + off
        })
        .collect()
}

/// Amplitudes of an as-MPS in the natural basis; the first-bond charges are summed.
pub fn mps_to_dense(psi: &AsMps) -> Result<Array1<C64>> {
    let dim: usize = psi.spaces().iter().map(LocalSpace::dim).product();
    check_cap(dim, DEFAULT_CAP.max(VECTORIZED_CAP))?;
    let first = psi.site(0).leg(1).total_dim();
    let mut v = Array2::from_elem((1, first), C64::new(1.0, 0.0));
    for (l, sp) in psi.spaces().iter().enumerate() {
        let t = psi.site(l);
        let dense: Array3<C64> = t.to_dense().into_dimensionality().expect("rank 3");
        let map = site_dense(t, sp, 0);
        let (p, dl) = v.dim();
        let dr = dense.shape()[2];
        if dl != dense.shape()[1] {
            return Err(Error::LegMismatch(format!("bond {l} dims {dl} vs {}", dense.shape()[1])));
        }
        let mut next = Array2::zeros((p * sp.dim(), dr));
        for s in 0..sp.dim() {
            let slab = dense.index_axis(ndarray::Axis(0), map[s]);
            let prod = v.dot(&slab);
            for r in 0..p {
                next.row_mut(r * sp.dim() + s).assign(&prod.row(r));
            }
        }
        v = next;
    }
    Ok(v.column(0).to_owned())
}

/// Matrix of an as-MPO in the natural basis (rows = output); first-bond charges are summed.
pub fn mpo_to_dense(op: &AsMpo) -> Result<Array2<C64>> {
    let dim: usize = op.spaces().iter().map(LocalSpace::dim).product();
    check_cap(dim, DEFAULT_CAP)?;
    let first = op.site(0).leg(2).total_dim();
    let mut m = Array3::from_elem((1, 1, first), C64::new(1.0, 0.0));
    for (l, sp) in op.spaces().iter().enumerate() {
        let t = op.site(l);
        let dense: Array4<C64> = t.to_dense().into_dimensionality().expect("rank 4");
        let map_in = site_dense(t, sp, 0);
        let map_out = site_dense(t, sp, 1);
        let (r0, c0, bl) = m.dim();
        let br = dense.shape()[3];
        let d = sp.dim();
        let mut next = Array3::zeros((r0 * d, c0 * d, br));
        for s in 0..d {
            for tt in 0..d {
                let w = dense.slice(ndarray::s![map_in[s], map_out[tt], .., ..]);
                if w.iter().all(|x| *x == C64::new(0.0, 0.0)) {
                    continue;
                }
                for r in 0..r0 {
                    for c in 0..c0 {
                        let row = m.slice(ndarray::s![r, c, ..]);
                        if row.iter().all(|x| *x == C64::new(0.0, 0.0)) {
                            continue;
                        }
                        let prod = row.dot(&w);
                        next.slice_mut(ndarray::s![r * d + tt, c * d + s, ..]).assign(&prod);
                    }
                }
            }
        }
        debug_assert_eq!(bl, dense.shape()[2]);
        m = next;
    }
    Ok(m.index_axis(ndarray::Axis(2), 0).to_owned())
}

/// The three-site XYZ operator displayed as a non-symmetric MPO: the row
/// `[(1+g)x, (1-g)y, D z, 1]`, the 4x4 bulk matrix and the column
/// `[1, x, y, z]`, multiplied out literally.
pub fn appendix_xyz_mpo(gamma: f64, delta: f64) -> Array2<C64> {
    let (x, y, z, id) = (ops::sigma_x(), ops::sigma_y(), ops::sigma_z(), linalg::identity(2));
    let zero = Array2::<C64>::zeros((2, 2));
    let s = |a: &Array2<C64>, c: f64| a.mapv(|v| v * c);
    let first = [s(&x, 1.0 + gamma), s(&y, 1.0 - gamma), s(&z, delta), id.clone()];
    let bulk = [
        [x.clone(), zero.clone(), zero.clone(), zero.clone()],
        [y.clone(), zero.clone(), zero.clone(), zero.clone()],
        [z.clone(), zero.clone(), zero.clone(), zero.clone()],
        [id.clone(), s(&x, 1.0 + gamma), s(&y, 1.0 - gamma), s(&z, delta)],
    ];
    let last = [id, x, y, z];
    let mut out = Array2::zeros((8, 8));
    for i in 0..4 {
        for j in 0..4 {
            out = out + linalg::kron(&linalg::kron(&first[i], &bulk[i][j]), &last[j]);
        }
    }
    out
}
