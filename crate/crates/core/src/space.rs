//! Local (single-site) Hilbert spaces and the map between the natural basis
//! order and the charge-sector order used by symmetric tensors.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::symtensor::{Charge, Dir, Leg};
use crate::C64;

/// A site basis `0..dim` where basis state `i` carries charge `charges[i]`.
///
/// Symmetric tensors index a physical leg sector by sector (ascending
/// charge, natural order within a sector); dense oracles use the natural
/// order. [`LocalSpace::locate`] translates between the two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalSpace {
    charges: Vec<Charge>,
    // natural index -> (charge, offset inside its sector)
    position: Vec<(Charge, usize)>,
    leg_sectors: Vec<(Charge, usize)>,
}

impl LocalSpace {
    pub fn new(charges: Vec<Charge>) -> LocalSpace {
        assert!(!charges.is_empty(), "local space must be nonempty");
        let mut count = std::collections::BTreeMap::<Charge, usize>::new();
        let mut position = Vec::with_capacity(charges.len());
        for &q in &charges {
            let c = count.entry(q).or_insert(0);
            position.push((q, *c));
            *c += 1;
        }
        LocalSpace { charges, position, leg_sectors: count.into_iter().collect() }
    }

    /// Spin-1/2 site: `|0>` has charge 0, `|1>` has charge 1.
    pub fn spin_half() -> LocalSpace {
        LocalSpace::new(vec![Charge(0), Charge(1)])
    }

    /// Boson site truncated to occupations `0..d`; `|n>` has charge `n`.
    pub fn boson(d: usize) -> LocalSpace {
        LocalSpace::new((0..d as i32).map(Charge).collect())
    }

    /// Vectorized density-matrix site: index `n + d*m` stands for `|n><m|`
    /// and carries charge `q(n) + q(m)`.
    pub fn vectorized(base: &LocalSpace) -> LocalSpace {
        let d = base.dim();
        let mut charges = Vec::with_capacity(d * d);
        for m in 0..d {
            for n in 0..d {
                charges.push(base.charges[n] + base.charges[m]);
            }
        }
        LocalSpace::new(charges)
    }

    pub fn dim(&self) -> usize {
        self.charges.len()
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    pub fn charge(&self, i: usize) -> Charge {
        self.charges[i]
    }

    /// Sector and in-sector offset of natural basis index `i`.
    pub fn locate(&self, i: usize) -> (Charge, usize) {
        self.position[i]
    }

    pub fn leg(&self, dir: Dir) -> Leg {
        Leg::new(dir, self.leg_sectors.clone()).expect("sectors are valid")
    }

    /// Charge shift `q(row) - q(col)` shared by every nonzero entry of `op`,
    /// or `None` if the entries disagree. An all-zero operator has shift 0.
    pub fn shift_of(&self, op: &Array2<C64>, tol: f64) -> Option<Charge> {
        let mut shift = None;
        for ((r, c), v) in op.indexed_iter() {
            if v.norm() > tol {
                let s = self.charges[r] - self.charges[c];
                match shift {
                    None => shift = Some(s),
                    Some(s0) if s0 != s => return None,
                    _ => {}
                }
            }
        }
        Some(shift.unwrap_or(Charge::ZERO))
    }

    /// Split `op` (rows = output state, columns = input state) into pieces of
    /// definite charge shift, in ascending shift order.
    pub fn shift_components(&self, op: &Array2<C64>, tol: f64) -> Vec<(Charge, Array2<C64>)> {
        let mut parts = std::collections::BTreeMap::<Charge, Array2<C64>>::new();
        for ((r, c), v) in op.indexed_iter() {
            if v.norm() > tol {
                let s = self.charges[r] - self.charges[c];
                parts.entry(s).or_insert_with(|| Array2::zeros(op.raw_dim()))[[r, c]] = *v;
            }
        }
        parts.into_iter().collect()
    }

    pub fn check_operator(&self, op: &Array2<C64>) -> Result<()> {
        if op.shape() != [self.dim(), self.dim()] {
            return Err(Error::ShapeMismatch {
                key: vec![],
                expected: vec![self.dim(), self.dim()],
                got: op.shape().to_vec(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectorized_charges() {
        let v = LocalSpace::vectorized(&LocalSpace::boson(3));
        assert_eq!(v.dim(), 9);
        assert_eq!(v.charge(1 + 3 * 2), Charge(3));
        let leg = v.leg(Dir::Out);
        assert_eq!(leg.sectors(), &[(Charge(0), 1), (Charge(1), 2), (Charge(2), 3), (Charge(3), 2), (Charge(4), 1)]);
        assert_eq!(v.locate(3), (Charge(1), 1));
    }

    #[test]
    fn shift_detection() {
        let s = LocalSpace::spin_half();
        let mut raise = Array2::zeros((2, 2));
        raise[[1, 0]] = C64::new(1.0, 0.0);
        assert_eq!(s.shift_of(&raise, 0.0), Some(Charge(1)));
        let mut x = raise.clone();
        x[[0, 1]] = C64::new(1.0, 0.0);
        assert_eq!(s.shift_of(&x, 0.0), None);
        let parts = s.shift_components(&x, 0.0);
        assert_eq!(parts.iter().map(|p| p.0).collect::<Vec<_>>(), vec![Charge(-1), Charge(1)]);
    }
}
