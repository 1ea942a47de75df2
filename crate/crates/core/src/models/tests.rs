use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};

use super::*;
use crate::netops::expectation;
use crate::oracle::{self, DenseLindblad, DenseSystem};
use crate::AsMps;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    linalg::frobenius(&(a - b))
}

fn xyz(l: usize, gamma: f64, delta: f64, h: f64) -> ModelParams {
    ModelParams { l, gamma, delta, h, ..Default::default() }
}

fn charges(v: &[i32]) -> Vec<Charge> {
    v.iter().map(|&q| Charge(q)).collect()
}

#[test]
fn xyz_first_bond_charges() {
    let m = mpo_xyz(&xyz(3, 0.5, 1.5, 0.0)).unwrap();
    assert_eq!(m.b1_charges(), charges(&[-2, 0, 2]));
    let m = mpo_xyz(&xyz(3, 0.0, 1.5, 0.3)).unwrap();
    assert_eq!(m.b1_charges(), charges(&[0]));
    assert_eq!(xyz_terms(&xyz(3, 0.5, 1.5, 0.0)).len(), 10);
}

#[test]
fn xyz_matches_dense() {
    for (l, g, dl, h) in [(2, 0.0, 1.5, 0.0), (3, 0.5, 1.5, 0.0), (4, 0.3, -0.7, 0.5), (4, 1.0, 1.5, 0.5)] {
        let m = oracle::mpo_to_dense(&mpo_xyz(&xyz(l, g, dl, h)).unwrap()).unwrap();
        let want = oracle::xyz_hamiltonian(l, g, dl, h);
        assert!(diff(&m, &want) < 1e-12, "l={l} gamma={g}");
        assert!(diff(&m, &linalg::dagger(&m)) < 1e-12);
    }
}

#[test]
fn xyz_two_site_sector_energy() {
    let m = oracle::mpo_to_dense(&mpo_xyz(&xyz(2, 0.0, 1.5, 0.0)).unwrap()).unwrap();
    let sys = DenseSystem::new(&spin_spaces(2), m, oracle::DEFAULT_CAP).unwrap();
    let (e, _) = sys.ground(Some(Charge(1))).unwrap();
    assert!((e + 3.5).abs() < 1e-12);
}

#[test]
fn appendix_display_is_hamiltonian_plus_identity() {
    let h = oracle::mpo_to_dense(&mpo_xyz(&xyz(3, 0.5, 1.5, 0.0)).unwrap()).unwrap();
    let display = oracle::appendix_xyz_mpo(0.5, 1.5);
    assert!((diff(&h, &display) - 8f64.sqrt()).abs() < 1e-12);
    assert!(diff(&(h + linalg::identity(8)), &display) < 1e-12);
}

#[test]
fn xyz_commutes_with_parity() {
    let p = oracle::mpo_to_dense(&mpo_parity(4).unwrap()).unwrap();
    assert!(diff(&p, &oracle::parity(4)) < 1e-12);
    for g in [0.0, 0.4, 1.0] {
        let h = oracle::mpo_to_dense(&mpo_xyz(&xyz(4, g, 1.5, 0.5)).unwrap()).unwrap();
        assert!(diff(&h.dot(&p), &p.dot(&h)) < 1e-12);
    }
}

#[test]
fn parity_expectations() {
    let p = mpo_parity(3).unwrap();
    assert_eq!(p.b1_charges(), charges(&[0]));
    assert_eq!(p.max_bond(), 1);
    for idx in [[1, 1, 0], [0, 0, 0]] {
        let psi = AsMps::basis_state(spin_spaces(3), &idx).unwrap();
        assert!((expectation(&psi, &p).unwrap() - c(-1.0)).norm() < 1e-12);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = vec![vec![c(0.0), c(1.0)], vec![c(h), c(h)], vec![c(1.0), c(0.0)]];
    let psi = AsMps::product_state(spin_spaces(3), &amps).unwrap();
    assert!((expectation(&psi, &p).unwrap() - c(-1.0)).norm() < 1e-12);
}

fn random_op(rng: &mut impl Rng, shift: i32) -> Array2<C64> {
    let mut a = Array2::zeros((2, 2));
    for r in 0..2 {
        for col in 0..2 {
            if r as i32 - col as i32 == shift {
                a[[r, col]] = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
        }
    }
    a
}

#[test]
fn terms_match_kronecker_sums() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let spaces = spin_spaces(4);
    for _ in 0..20 {
        let mut terms = Vec::new();
        let mut want = Array2::zeros((16, 16));
        for _ in 0..rng.random_range(1..8) {
            let s1 = rng.random_range(0..3);
            let s2 = rng.random_range(s1 + 1..4);
            let coef = C64::new(rng.random::<f64>(), rng.random::<f64>());
            let (k1, k2) = (rng.random_range(-1..2), rng.random_range(-1..2));
            let t = LocalTerm::pair(coef, s1, random_op(&mut rng, k1), s2, random_op(&mut rng, k2));
            want = want + t.dense(&spaces);
            terms.push(t);
        }
        let m = mpo_from_terms(&spaces, &terms, &TruncationPolicy::exact()).unwrap();
        assert!(diff(&oracle::mpo_to_dense(&m).unwrap(), &want) < 1e-12 * linalg::frobenius(&want).max(1.0));
    }
}

#[test]
fn term_errors() {
    let t = LocalTerm::single(c(1.0), 5, ops::sigma_z());
    assert!(matches!(mpo_from_terms(&spin_spaces(3), &[t], &TruncationPolicy::exact()), Err(Error::SiteOutOfRange { site: 5, len: 3 })));
    let t = LocalTerm::single(c(1.0), 0, ops::sigma_x());
    assert!(matches!(t.check(&spin_spaces(3)), Err(Error::IndefiniteShift(0))));
    let (a, b) = (ops::sigma_z(), ops::sigma_z());
    let t = LocalTerm::pair(c(1.0), 1, a, 0, b);
    assert!(t.check(&spin_spaces(3)).is_err());
}

#[test]
fn bose_hubbard_examples() {
    let p = ModelParams { l: 2, d: 2, j: 1.0, u: 4.0, ..Default::default() };
    let m = mpo_bose_hubbard(&p).unwrap();
    assert_eq!(m.b1_charges(), charges(&[0]));
    let h = oracle::mpo_to_dense(&m).unwrap();
    // N = 1 sector: |01> (index 1) and |10> (index 2).
    assert!((h[[1, 1]]).norm() < 1e-14 && (h[[2, 2]]).norm() < 1e-14);
    assert!((h[[1, 2]] - c(-1.0)).norm() < 1e-14 && (h[[2, 1]] - c(-1.0)).norm() < 1e-14);

    let p = ModelParams { l: 3, d: 3, j: 0.7, u: 4.0, ..Default::default() };
    let h = oracle::mpo_to_dense(&mpo_bose_hubbard(&p).unwrap()).unwrap();
    assert!(diff(&h, &oracle::bose_hubbard_hamiltonian(3, 3, 0.7, 4.0)) < 1e-12);
    assert!(diff(&h, &linalg::dagger(&h)) < 1e-12);
    let dims = [3, 3, 3];
    let n = ops::boson_n(3);
    let total = (0..3).fold(Array2::zeros((27, 27)), |acc, s| acc + oracle::embed(&dims, &[(s, &n)]));
    assert!(diff(&h.dot(&total), &total.dot(&h)) < 1e-12);
    let psi = AsMps::basis_state(boson_spaces(3, 3), &[2, 0, 0]).unwrap();
    let p0 = ModelParams { j: 0.0, ..p };
    assert!((expectation(&psi, &mpo_bose_hubbard(&p0).unwrap()).unwrap() - c(4.0)).norm() < 1e-12);
}

fn lindblad_params(l: usize, d: usize) -> ModelParams {
    ModelParams { l, d, j: 1.0, u: 4.0, lambda1: 1.0, lambda_l: 0.6, nbar1: 0.75, nbar_l: 0.25, ..Default::default() }
}

#[test]
fn lindblad_split_is_exact() {
    for (l, d) in [(1, 3), (2, 3), (3, 2)] {
        let p = lindblad_params(l, d);
        let (sym, asym) = lindblad_mpo(&p).unwrap();
        assert_eq!(asym.b1_charges(), charges(&[-2, 2]));
        assert_eq!(sym.b1_charges(), charges(&[0]));
        let total = oracle::mpo_to_dense(&sym).unwrap() + oracle::mpo_to_dense(&asym).unwrap();
        let dense = DenseLindblad::bose_hubbard(l, d, p.j, p.u, p.lambda1, p.lambda_l, p.nbar1, p.nbar_l);
        let want = dense.vectorized_matrix().unwrap();
        assert!(diff(&total, &want) < 1e-12, "l={l} d={d}");
        // trace preservation: the vectorized identity is a left null vector.
        let id = dense.vectorize(&dense.identity());
        let row = id.mapv(|x| x.conj()).dot(&total);
        assert!(row.iter().all(|x| x.norm() < 1e-12));
    }
}

#[test]
fn hybrid_parts_are_trace_preserving() {
    let p = lindblad_params(3, 2);
    let m = LindbladModel::bose_hubbard(&p).unwrap();
    let (sym, local) = m.hybrid_parts().unwrap();
    assert!(local.iter().all(|t| t.sites().len() == 1));
    let dense = DenseLindblad::bose_hubbard(3, 2, p.j, p.u, p.lambda1, p.lambda_l, p.nbar1, p.nbar_l);
    let id = dense.vectorize(&dense.identity()).mapv(|x| x.conj());
    let sum = |ts: &[LocalTerm]| ts.iter().map(|t| t.dense(&m.spaces)).fold(Array2::zeros((64, 64)), |a, b| a + b);
    let (gs, gl) = (sum(&sym), sum(&local));
    assert!(diff(&(&gs + &gl), &dense.vectorized_matrix().unwrap()) < 1e-12);
    assert!(id.dot(&gs).iter().all(|x| x.norm() < 1e-12));
    assert!(id.dot(&gl).iter().all(|x| x.norm() < 1e-12));
}

#[test]
fn single_site_steady_state_is_thermal() {
    let d = 30;
    let nbar = 0.75;
    let p = ModelParams { l: 1, d, j: 0.0, u: 4.0, lambda1: 1.0, nbar1: nbar, ..Default::default() };
    let dense = DenseLindblad::bose_hubbard(1, d, 0.0, 4.0, 1.0, 0.0, nbar, 0.0);
    let m = LindbladModel::bose_hubbard(&p).unwrap().generator_mpo(&TruncationPolicy::exact()).unwrap();
    let lm = oracle::mpo_to_dense(&m).unwrap();
    // Null vector of the generator from its Hermitian square.
    let (vals, vecs) = linalg::eigh(&linalg::dagger(&lm).dot(&lm));
    assert!(vals[0].abs() < 1e-10 && vals[1] > 1e-6, "{} {}", vals[0], vals[1]);
    let rho = dense.devectorize(&vecs.column(0).to_owned());
    let rho = rho.mapv(|x| x / DenseLindblad::trace(&rho));
    assert!((dense.occupations(&rho)[0] - nbar).abs() < 1e-6);
}

#[test]
fn density_from_pure_matches_outer_product() {
    let psi = AsMps::random(boson_spaces(3, 3), &[Charge(2), Charge(3)], 3, 4, true).unwrap();
    let v = oracle::mps_to_dense(&psi).unwrap();
    let rho = density_from_pure(&psi).unwrap();
    let dense = DenseLindblad::bose_hubbard(3, 3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let outer = Array2::from_shape_fn((27, 27), |(n, m)| v[n] * v[m].conj());
    let got = dense.devectorize(&oracle::mps_to_dense(&rho).unwrap());
    assert!(diff(&got, &outer) < 1e-12);
    let tr = crate::netops::overlap(&trace_state(psi.spaces()).unwrap(), &rho).unwrap();
    assert!((tr - c(psi.norm_sqr())).norm() < 1e-12);
}

fn dense_gates(s: &GateSchedule, spaces: &[LocalSpace]) -> Array2<C64> {
    let dims: Vec<usize> = spaces.iter().map(LocalSpace::dim).collect();
    let dim: usize = dims.iter().product();
    let mut u = linalg::identity(dim);
    for layer in &s.layers {
        for g in layer {
            let t = g.tensor.to_dense();
            let (a, b) = (&spaces[g.site], &spaces[g.site + 1]);
            let db = b.dim();
            let pos = |sp: &LocalSpace, i: usize| {
                let (q, o) = sp.locate(i);
                sp.leg(crate::Dir::In).offset_of(q).unwrap() + o
            };
            let m = Array2::from_shape_fn((a.dim() * db, a.dim() * db), |(r, col)| {
                t[[pos(a, col / db), pos(b, col % db), pos(a, r / db), pos(b, r % db)]]
            });
            let mut full = linalg::identity(1);
            let mut s = 0;
            while s < spaces.len() {
                if s == g.site {
                    full = linalg::kron(&full, &m);
                    s += 2;
                } else {
                    full = linalg::kron(&full, &linalg::identity(dims[s]));
                    s += 1;
                }
            }
            u = full.dot(&u);
        }
    }
    u
}

#[test]
fn trotter_gate_examples() {
    let spaces = spin_spaces(4);
    let gen = unitary_generator(&xyz_terms(&xyz(4, 0.0, 1.5, 0.5)));
    let s = trotter_gates(&spaces, &gen, 0.0, 2).unwrap();
    assert!(diff(&dense_gates(&s, &spaces), &linalg::identity(16)) < 1e-14);

    let spaces2 = spin_spaces(2);
    let gen2 = unitary_generator(&xyz_terms(&xyz(2, 0.0, 1.5, 0.5)));
    let s = trotter_gates(&spaces2, &gen2, 0.3, 2).unwrap();
    let h = oracle::xyz_hamiltonian(2, 0.0, 1.5, 0.5);
    let want = linalg::expm(&h.mapv(|x| x * C64::new(0.0, -0.3)));
    assert!(diff(&dense_gates(&s, &spaces2), &want) < 1e-12);

    let gen = unitary_generator(&xyz_terms(&xyz(4, 0.5, 1.5, 0.5)));
    assert!(matches!(trotter_gates(&spaces, &gen, 0.1, 2), Err(Error::NonConservingTerm(_))));
}

#[test]
fn trotter_converges_to_exact() {
    let spaces = spin_spaces(4);
    let p = xyz(4, 0.0, 1.5, 0.5);
    let gen = unitary_generator(&xyz_terms(&p));
    let dt = 0.01;
    let u = dense_gates(&trotter_gates(&spaces, &gen, dt, 2).unwrap(), &spaces);
    let h = oracle::xyz_hamiltonian(4, 0.0, 1.5, 0.5);
    let mut v = Array1::from_shape_fn(16, |i| c(((i * 7 + 3) % 5) as f64 - 2.0));
    v /= c(v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt());
    let exact = DenseSystem::new(&spaces, h, oracle::DEFAULT_CAP).unwrap().evolve_expm(&v, 1.0);
    let mut w = v.clone();
    for _ in 0..100 {
        w = u.dot(&w);
    }
    let fid = exact.mapv(|x| x.conj()).dot(&w).norm_sqr();
    assert!(1.0 - fid < 1e-4);
}

#[test]
fn asymmetric_exponential() {
    let spaces = spin_spaces(3);
    let id = exp_asymmetric_mpo(&spaces, &[], 0.1).unwrap();
    assert!(diff(&oracle::mpo_to_dense(&id).unwrap(), &linalg::identity(8)) < 1e-14);

    let g = 0.7;
    let dt = 0.05;
    let t = LocalTerm::single(c(g), 0, ops::sigma_x());
    let m = exp_asymmetric_mpo(&spaces, &[t], dt).unwrap();
    let local = linalg::expm(&ops::sigma_x().mapv(|x| x * (g * dt)));
    let want = oracle::embed(&[2, 2, 2], &[(0, &local)]);
    assert!(diff(&oracle::mpo_to_dense(&m).unwrap(), &want) < 1e-12);

    let pair = LocalTerm::pair(c(1.0), 0, ops::sigma_plus(), 1, ops::sigma_plus());
    assert!(matches!(exp_asymmetric_mpo(&spaces, &[pair], dt), Err(Error::NonLocalAsymmetricTerm(0))));

    let lm = LindbladModel::bose_hubbard(&lindblad_params(3, 3)).unwrap();
    let e = exp_asymmetric_mpo(&lm.spaces, &lm.asymmetric, 0.01).unwrap();
    let b1 = e.b1_charges();
    for q in [-2, 0, 2] {
        assert!(b1.contains(&Charge(q)));
    }
    let want = linalg::expm(&oracle::mpo_to_dense(&lm.asymmetric_mpo(&TruncationPolicy::exact()).unwrap()).unwrap().mapv(|x| x * 0.01));
    assert!(diff(&oracle::mpo_to_dense(&e).unwrap(), &want) < 1e-12);
}

#[test]
fn params_validation() {
    assert!(ModelParams::default().validate().is_ok());
    assert!(ModelParams { d: 1, ..Default::default() }.validate().is_err());
    assert!(ModelParams { gamma: -0.1, ..Default::default() }.validate().is_err());
    assert!(ModelParams { l: 0, ..Default::default() }.validate().is_err());
    let p: ModelParams = serde_json::from_str(r#"{"l": 4, "gamma": 0.5, "lambdaL": 1.0}"#).unwrap();
    assert_eq!(p.l, 4);
    assert_eq!(p.lambda_l, 1.0);
}
