//! Fixed test vectors and randomized block-sparse cases checked against
//! dense tensor arithmetic.

use ndarray::{Array1, Array2, ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg;
use crate::netops::AsMps;
use crate::space::LocalSpace;
use crate::symtensor::{BlockLayout, Charge, Dir, Leg, SymTensor, TruncationPolicy};
use crate::C64;

fn leg(dir: Dir, sectors: &[(i32, usize)]) -> Leg {
    Leg::new(dir, sectors.iter().map(|&(c, d)| (Charge(c), d)).collect()).expect("fixture leg")
}

fn scalar(v: f64) -> ArrayD<C64> {
    ArrayD::from_elem(IxDyn(&[1, 1, 1]), C64::new(v, 0.0))
}

/// Legs `(sigma Out, a_1 In, a_2 Out)` of the example's first tensor.
pub fn m1_legs() -> Vec<Leg> {
    vec![leg(Dir::Out, &[(1, 1)]), leg(Dir::In, &[(1, 1), (2, 1)]), leg(Dir::Out, &[(0, 1), (1, 1)])]
}

/// The three tensors of the example state `(|110> + |100>)/sqrt(2)`.
pub fn appendix_tensors() -> [SymTensor; 3] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q = |v: [i32; 3]| v.iter().map(|&c| Charge(c)).collect::<Vec<_>>();
    let m1 = SymTensor::new(m1_legs(), vec![(q([1, 1, 0]), scalar(h)), (q([1, 2, 1]), scalar(h))]);
    let m2 = SymTensor::new(
        vec![leg(Dir::Out, &[(0, 1), (1, 1)]), leg(Dir::In, &[(0, 1), (1, 1)]), leg(Dir::Out, &[(0, 1)])],
        vec![(q([0, 0, 0]), scalar(1.0)), (q([1, 1, 0]), scalar(1.0))],
    );
    let m3 = SymTensor::new(
        vec![leg(Dir::Out, &[(0, 1)]), leg(Dir::In, &[(0, 1)]), leg(Dir::Out, &[(0, 1)])],
        vec![(q([0, 0, 0]), scalar(1.0))],
    );
    [m1.expect("M1"), m2.expect("M2"), m3.expect("M3")]
}

/// The example as-MPS built directly from its tensors, with each physical
/// leg widened to the full spin-1/2 space.
pub fn appendix_state() -> Result<AsMps> {
    let space = LocalSpace::spin_half();
    let sites = appendix_tensors().iter().map(|t| t.with_leg(0, space.leg(Dir::Out))).collect::<Result<Vec<_>>>()?;
    AsMps::new(sites, vec![space; 3])
}

/// Dense form of the example state.
pub fn appendix_vector() -> Array1<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = Array1::zeros(8);
    v[0b110] = C64::new(h, 0.0);
    v[0b100] = C64::new(h, 0.0);
    v
}

/// Random legs with charges in `-2..=2`, sector dimensions 1 or 2 and total
/// size at most `max_dim`.
pub fn random_legs(rng: &mut impl Rng, rank: usize, max_dim: usize) -> Vec<Leg> {
    loop {
        let legs: Vec<Leg> = (0..rank).map(|_| random_leg(rng)).collect();
        if legs.iter().map(Leg::total_dim).product::<usize>() <= max_dim {
            return legs;
        }
    }
}

fn random_leg(rng: &mut impl Rng) -> Leg {
    let dir = if rng.random_bool(0.5) { Dir::In } else { Dir::Out };
    let n = rng.random_range(1..=3);
    let mut charges: Vec<i32> = (-2..=2).collect();
    let mut sectors = Vec::new();
    for _ in 0..n {
        let q = charges.swap_remove(rng.random_range(0..charges.len()));
        sectors.push((Charge(q), rng.random_range(1..=2)));
    }
    Leg::new(dir, sectors).expect("distinct charges")
}

/// A tensor with every fusion-allowed block filled with uniform entries in
/// `[-0.5, 0.5)` (real and imaginary parts).
pub fn random_tensor(rng: &mut impl Rng, legs: Vec<Leg>) -> SymTensor {
    let layout = BlockLayout::new(legs);
    let v: Vec<C64> = (0..layout.dim()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    layout.unflatten(&v)
}

fn random_nonempty(rng: &mut impl Rng, rank: usize, max_dim: usize) -> SymTensor {
    loop {
        let legs = random_legs(rng, rank, max_dim);
        let t = random_tensor(rng, legs);
        if !t.is_empty() {
            return t;
        }
    }
}

/// Dense `a . b` over the paired axes; free axes of `a` then of `b`.
pub fn dense_contract(a: &ArrayD<C64>, b: &ArrayD<C64>, pairs: &[(usize, usize)]) -> ArrayD<C64> {
    let free_a: Vec<usize> = (0..a.ndim()).filter(|i| pairs.iter().all(|p| p.0 != *i)).collect();
    let free_b: Vec<usize> = (0..b.ndim()).filter(|i| pairs.iter().all(|p| p.1 != *i)).collect();
    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let rows: usize = free_a.iter().map(|&i| a.shape()[i]).product();
    let inner: usize = pairs.iter().map(|p| a.shape()[p.0]).product();
    let cols: usize = free_b.iter().map(|&i| b.shape()[i]).product();
    let am = matrix(a, &perm_a, rows, inner);
    let bm = matrix(b, &perm_b, inner, cols);
    let shape: Vec<usize> = free_a.iter().map(|&i| a.shape()[i]).chain(free_b.iter().map(|&i| b.shape()[i])).collect();
    am.dot(&bm).into_shape_with_order(IxDyn(&shape)).expect("contraction shape")
}

fn matrix(t: &ArrayD<C64>, perm: &[usize], rows: usize, cols: usize) -> Array2<C64> {
    let p = t.view().permuted_axes(IxDyn(perm));
    let flat: Vec<C64> = p.iter().copied().collect();
    Array2::from_shape_vec((rows, cols), flat).expect("matrix shape")
}

fn rel_error(got: &ArrayD<C64>, want: &ArrayD<C64>) -> f64 {
    let diff: f64 = got.iter().zip(want).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let scale: f64 = want.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Outcome of [`dense_equivalence`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseEquivalence {
    pub cases: usize,
    pub contractions: usize,
    pub additions: usize,
    pub decompositions: usize,
    pub max_rel_error: f64,
    /// Results holding a block that breaks the fusion rule.
    pub fusion_violations: usize,
}

/// Run `n` random contract / add / SVD cases cycling through the three
/// kinds, each operand at most `max_dim` entries in dense form.
pub fn dense_equivalence(n: usize, seed: u64, max_dim: usize) -> Result<DenseEquivalence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DenseEquivalence::default();
    for i in 0..n {
        let (err, results) = match i % 3 {
            0 => {
                out.contractions += 1;
                contract_case(&mut rng, max_dim)?
            }
            1 => {
                out.additions += 1;
                add_case(&mut rng, max_dim)?
            }
            _ => {
                out.decompositions += 1;
                svd_case(&mut rng, max_dim)?
            }
        };
        out.max_rel_error = out.max_rel_error.max(err);
        out.fusion_violations += results.iter().filter(|t| t.validate().is_err()).count();
        out.cases += 1;
    }
    Ok(out)
}

fn contract_case(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, Vec<SymTensor>)> {
    let n_pairs = rng.random_range(1..=2);
    let free_a = rng.random_range(0..=2);
    let free_b = rng.random_range(0..=2);
    let (a, b) = loop {
        let a = random_nonempty(rng, free_a + n_pairs, max_dim);
        // b carries the flipped shared legs first, then fresh free legs
        let shared: Vec<Leg> = a.legs()[free_a..].iter().map(Leg::flipped).collect();
        let shared_dim: usize = shared.iter().map(Leg::total_dim).product();
        let extra = random_legs(rng, free_b, max_dim / shared_dim);
        let b = random_tensor(rng, shared.into_iter().chain(extra).collect());
        if !b.is_empty() {
            break (a, b);
        }
    };
    let pairs: Vec<(usize, usize)> = (0..n_pairs).map(|k| (free_a + k, k)).collect();
    let c = SymTensor::contract(&a, &b, &pairs)?;
    let want = dense_contract(&a.to_dense(), &b.to_dense(), &pairs);
    Ok((rel_error(&c.to_dense(), &want), vec![a, b, c]))
}

fn add_case(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, Vec<SymTensor>)> {
    let rank = rng.random_range(1..=4);
    let a = random_nonempty(rng, rank, max_dim);
    let b = random_tensor(rng, a.legs().to_vec());
    let z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let c = a.add(&b.scale(z))?;
    let want = a.to_dense() + b.to_dense().mapv(|x| x * z);
    Ok((rel_error(&c.to_dense(), &want), vec![a, b, c]))
}

fn svd_case(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<(f64, Vec<SymTensor>)> {
    let rank = rng.random_range(2..=4);
    let t = random_nonempty(rng, rank, max_dim);
    let k = rng.random_range(1..rank);
    let rows: Vec<usize> = (0..k).collect();
    let cols: Vec<usize> = (k..rank).collect();
    let svd = t.block_svd(&rows, &cols, &TruncationPolicy::exact())?;
    let back = SymTensor::contract(&svd.us(), &svd.v, &[(k, 0)])?;
    let dense = t.to_dense();
    let mut err = rel_error(&back.to_dense(), &dense);

    let m: usize = rows.iter().map(|&i| dense.shape()[i]).product();
    let n: usize = cols.iter().map(|&i| dense.shape()[i]).product();
    let mat = matrix(&dense, &(0..rank).collect::<Vec<_>>(), m, n);
    let (_, s_dense, _) = linalg::svd(&mat);
    let smax = s_dense.first().copied().unwrap_or(0.0);
    let s_dense: Vec<f64> = s_dense.into_iter().filter(|&s| s > 1e-14 * smax).collect();
    let s_sym: Vec<f64> = svd.singular_values.iter().map(|p| p.1).collect();
    if s_sym.len() != s_dense.len() {
        err = f64::INFINITY;
    } else {
        let gap = s_sym.iter().zip(&s_dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        err = err.max(gap / smax);
    }
    Ok((err, vec![t, svd.u, svd.s, svd.v, back]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appendix_state_matches_vector() {
        let psi = appendix_state().unwrap();
        let v = super::super::mps_to_dense(&psi).unwrap();
        assert!((&v - &appendix_vector()).iter().all(|x| x.norm() < 1e-15));
        assert_eq!(psi.a1_charges(), vec![Charge(1), Charge(2)]);
    }

    #[test]
    fn dense_contract_is_matmul() {
        let a = ArrayD::from_shape_fn(IxDyn(&[2, 3]), |i| C64::new((i[0] * 3 + i[1]) as f64, 0.0));
        let b = ArrayD::from_shape_fn(IxDyn(&[3, 2]), |i| C64::new(i[0] as f64 - i[1] as f64, 1.0));
        let c = dense_contract(&a, &b, &[(1, 0)]);
        let a2 = a.clone().into_shape_with_order((2, 3)).unwrap();
        let b2 = b.clone().into_shape_with_order((3, 2)).unwrap();
        let want = a2.dot(&b2).into_dyn();
        assert_eq!(c, want);
    }

    #[test]
    fn random_cases_agree() {
        let r = dense_equivalence(60, 3, 64).unwrap();
        assert_eq!(r.cases, 60);
        assert_eq!(r.fusion_violations, 0);
        assert!(r.max_rel_error < 1e-12, "{}", r.max_rel_error);
    }
}
