use ndarray::{array, ArrayD, IxDyn};

use super::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn scalar_block(v: C64, rank: usize) -> ArrayD<C64> {
    ArrayD::from_elem(IxDyn(&vec![1; rank]), v)
}

fn q(v: i32) -> Charge {
    Charge(v)
}

fn leg(dir: Dir, sectors: &[(i32, usize)]) -> Leg {
    Leg::new(dir, sectors.iter().map(|&(c, d)| (Charge(c), d)).collect()).unwrap()
}

pub(crate) fn m1() -> SymTensor {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    SymTensor::new(
        vec![leg(Dir::Out, &[(1, 1)]), leg(Dir::In, &[(1, 1), (2, 1)]), leg(Dir::Out, &[(0, 1), (1, 1)])],
        vec![(vec![q(1), q(1), q(0)], scalar_block(c(h), 3)), (vec![q(1), q(2), q(1)], scalar_block(c(h), 3))],
    )
    .unwrap()
}

fn m2() -> SymTensor {
    SymTensor::new(
        vec![leg(Dir::Out, &[(0, 1), (1, 1)]), leg(Dir::In, &[(0, 1), (1, 1)]), leg(Dir::Out, &[(0, 1)])],
        vec![(vec![q(0), q(0), q(0)], scalar_block(c(1.0), 3)), (vec![q(1), q(1), q(0)], scalar_block(c(1.0), 3))],
    )
    .unwrap()
}

fn m3() -> SymTensor {
    SymTensor::new(
        vec![leg(Dir::Out, &[(0, 1)]), leg(Dir::In, &[(0, 1)]), leg(Dir::Out, &[(0, 1)])],
        vec![(vec![q(0), q(0), q(0)], scalar_block(c(1.0), 3))],
    )
    .unwrap()
}

#[test]
fn appendix_m1_is_valid() {
    let t = m1();
    assert_eq!(t.num_blocks(), 2);
    assert!(t.validate().is_ok());
}

#[test]
fn trivial_rank_three_tensor() {
    let t = SymTensor::new(
        vec![Leg::trivial(Dir::Out), Leg::trivial(Dir::In), Leg::trivial(Dir::Out)],
        vec![(vec![q(0); 3], scalar_block(c(1.0), 3))],
    );
    assert!(t.is_ok());
}

#[test]
fn fusion_violation_is_rejected() {
    let legs = m1().legs().to_vec();
    let err = SymTensor::new(legs, vec![(vec![q(1), q(1), q(1)], scalar_block(c(1.0), 3))]).unwrap_err();
    assert!(matches!(err, Error::FusionViolation { flux: -1, .. }));
}

#[test]
fn shape_and_charge_errors() {
    let legs = m1().legs().to_vec();
    let err = SymTensor::new(legs.clone(), vec![(vec![q(1), q(1), q(0)], ArrayD::zeros(IxDyn(&[1, 2, 1])))]).unwrap_err();
    assert!(matches!(err, Error::ShapeMismatch { .. }));
    let err = SymTensor::new(legs, vec![(vec![q(3), q(3), q(0)], scalar_block(c(1.0), 3))]).unwrap_err();
    assert!(matches!(err, Error::UnknownCharge { leg: 0, .. }));
}

#[test]
fn contract_m2_m3() {
    let t = SymTensor::contract(&m2(), &m3(), &[(2, 1)]).unwrap();
    assert_eq!(t.rank(), 4);
    let keys: Vec<_> = t.blocks().keys().cloned().collect();
    assert_eq!(keys, vec![vec![q(0), q(0), q(0), q(0)], vec![q(1), q(1), q(0), q(0)]]);
    for b in t.blocks().values() {
        assert_eq!(b.iter().next().copied(), Some(c(1.0)));
    }
}

#[test]
fn contract_with_identity() {
    let a = m2();
    let l = a.leg(0).clone();
    let id = SymTensor::new(
        vec![l.flipped(), l.clone()],
        l.sectors().iter().map(|&(ch, d)| (vec![ch, ch], ArrayD::from_shape_fn(IxDyn(&[d, d]), |ix| c(if ix[0] == ix[1] { 1.0 } else { 0.0 })))),
    )
    .unwrap();
    let t = SymTensor::contract(&a, &id, &[(0, 0)]).unwrap().permute(&[2, 0, 1]);
    assert_eq!(t, a);
}

#[test]
fn appendix_state_norm() {
    let psi = SymTensor::contract(&SymTensor::contract(&m1(), &m2(), &[(2, 1)]).unwrap(), &m3(), &[(3, 1)]).unwrap();
    // (s1, a1, s2, s3, a4)
    let nrm = SymTensor::contract(&psi.conj(), &psi, &[(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)]).unwrap();
    let v = nrm.block(&[]).unwrap().iter().next().copied().unwrap();
    assert!((v - c(1.0)).norm() < 1e-14);
}

#[test]
fn conj_examples() {
    let t = SymTensor::new(m1().legs().to_vec(), vec![(vec![q(1), q(1), q(0)], scalar_block(C64::new(0.0, 1.0), 3))]).unwrap();
    let tc = t.conj();
    assert_eq!(tc.block(&[q(1), q(1), q(0)]).unwrap()[[0, 0, 0]], C64::new(0.0, -1.0));
    assert_eq!(tc.leg(0).dir(), Dir::In);
    assert_eq!(tc.leg(1).dir(), Dir::Out);
    assert_eq!(tc.conj(), t);

    let g = SymTensor::contract(&m1().conj(), &m1(), &[(0, 0), (2, 2)]).unwrap();
    assert_eq!(g.num_blocks(), 2);
    for ch in [1, 2] {
        assert!((g.block(&[q(ch), q(ch)]).unwrap()[[0, 0]] - c(0.5)).norm() < 1e-15);
    }
}

#[test]
fn fuse_two_out_legs() {
    let l = leg(Dir::Out, &[(0, 1), (1, 1)]);
    let t = SymTensor::zeros(vec![l.clone(), l, leg(Dir::In, &[(0, 1), (1, 2), (2, 1)])]);
    let (f, _) = t.fuse_legs(&[vec![0, 1], vec![2]]).unwrap();
    assert_eq!(f.leg(0).sectors(), &[(q(0), 1), (q(1), 2), (q(2), 1)]);
}

#[test]
fn fuse_round_trip() {
    let t = m1();
    let (f, map) = t.fuse_legs(&[vec![0], vec![1], vec![2]]).unwrap();
    assert_eq!(f, t);
    assert_eq!(f.split_legs(&map).unwrap(), t);
    let (f, map) = t.fuse_legs(&[vec![2, 0], vec![1]]).unwrap();
    assert_eq!(f.split_legs(&map).unwrap(), t);
}

#[test]
fn fuse_mixed_directions_rejected() {
    assert!(matches!(m1().fuse_legs(&[vec![0, 1], vec![2]]), Err(Error::MixedDirectionGroup(0))));
}

#[test]
fn add_and_scale() {
    let a = m1();
    let z = a.add(&a.scale(c(-1.0))).unwrap();
    assert!(z.is_empty());
    let b1 = SymTensor::new(a.legs().to_vec(), vec![(vec![q(1), q(1), q(0)], scalar_block(c(1.0), 3))]).unwrap();
    let b2 = SymTensor::new(a.legs().to_vec(), vec![(vec![q(1), q(2), q(1)], scalar_block(c(1.0), 3))]).unwrap();
    assert_eq!(b1.add(&b2).unwrap().num_blocks(), 2);
    assert!((a.scale(c(2f64.sqrt())).norm_sqr() - 2.0).abs() < 1e-14);
    assert!(matches!(a.add(&m2()), Err(Error::LegMismatch(_))));
}

fn diag34() -> SymTensor {
    SymTensor::new(
        vec![leg(Dir::In, &[(0, 1), (1, 1)]), leg(Dir::Out, &[(0, 1), (1, 1)])],
        vec![(vec![q(0), q(0)], array![[c(3.0)]].into_dyn()), (vec![q(1), q(1)], array![[c(4.0)]].into_dyn())],
    )
    .unwrap()
}

#[test]
fn svd_block_diagonal() {
    let r = diag34().block_svd(&[0], &[1], &TruncationPolicy::new(2, 0.0)).unwrap();
    assert_eq!(r.singular_values, vec![(q(1), 4.0), (q(0), 3.0)]);
    assert_eq!(r.discarded_weight, 0.0);
}

#[test]
fn svd_truncates_to_one() {
    let r = diag34().block_svd(&[0], &[1], &TruncationPolicy::new(1, 0.0)).unwrap();
    assert_eq!(r.singular_values, vec![(q(1), 4.0)]);
    assert!((r.discarded_weight - 9.0 / 25.0).abs() < 1e-15);
}

#[test]
fn svd_tie_prefers_smaller_charge() {
    let t = SymTensor::new(
        vec![leg(Dir::In, &[(0, 1), (1, 1)]), leg(Dir::Out, &[(0, 1), (1, 1)])],
        vec![(vec![q(0), q(0)], array![[c(2.0)]].into_dyn()), (vec![q(1), q(1)], array![[c(2.0)]].into_dyn())],
    )
    .unwrap();
    let r = t.block_svd(&[0], &[1], &TruncationPolicy::new(1, 0.0)).unwrap();
    assert_eq!(r.singular_values, vec![(q(0), 2.0)]);
}

#[test]
fn svd_of_appendix_two_site() {
    // (s1, a1, s2, a3)
    let t = SymTensor::contract(&m1(), &m2(), &[(2, 1)]).unwrap();
    let r = t.block_svd(&[0, 1], &[2, 3], &TruncationPolicy::exact()).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut sv = r.singular_values.clone();
    sv.sort_by_key(|p| p.0);
    assert_eq!(sv.len(), 2);
    assert_eq!(sv[0].0, q(0));
    assert_eq!(sv[1].0, q(1));
    for (_, s) in sv {
        assert!((s - h).abs() < 1e-14);
    }
    let back = SymTensor::contract(&r.u, &r.sv(), &[(2, 0)]).unwrap();
    let diff = back.add(&t.scale(c(-1.0))).unwrap();
    assert!(diff.norm() < 1e-14);
}

#[test]
fn svd_of_empty_tensor() {
    let t = SymTensor::zeros(diag34().legs().to_vec());
    assert!(matches!(t.block_svd(&[0], &[1], &TruncationPolicy::exact()), Err(Error::EmptyTensor)));
}

#[test]
fn dense_round_trip_and_violation() {
    let t = m1();
    let d = t.to_dense();
    assert_eq!(SymTensor::from_dense(t.legs().to_vec(), &d, 0.0).unwrap(), t);
    let mut bad = d.clone();
    bad[[0, 0, 1]] = c(1.0);
    assert!(matches!(SymTensor::from_dense(t.legs().to_vec(), &bad, 1e-12), Err(Error::FusionViolation { .. })));
}

#[test]
fn json_round_trip() {
    let t = m1().scale(C64::new(0.3, -0.7));
    let s = t.to_json().unwrap();
    assert_eq!(SymTensor::from_json(&s).unwrap(), t);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["legs"][0]["sectors"][0][0], 1);
    assert!(v["blocks"][0]["re"].is_array());
}

#[test]
fn layout_round_trip() {
    let t = m1();
    let lay = BlockLayout::new(t.legs().to_vec());
    assert_eq!(lay.dim(), 2);
    assert_eq!(lay.unflatten(&lay.flatten(&t)), t);
}

#[test]
fn leg_rejects_bad_sectors() {
    assert!(Leg::new(Dir::In, vec![(q(0), 1), (q(0), 2)]).is_err());
    assert!(Leg::new(Dir::In, vec![(q(0), 0)]).is_err());
    let l = Leg::new(Dir::In, vec![(q(2), 1), (q(-1), 3)]).unwrap();
    assert_eq!(l.sectors()[0], (q(-1), 3));
    assert_eq!(l.total_dim(), 4);
}
