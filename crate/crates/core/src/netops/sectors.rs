use super::mps::overlap;
use super::AsMps;
use crate::error::Result;
use crate::symtensor::Charge;
use crate::C64;

/// One total-charge component of a state.
#[derive(Clone, Debug)]
pub struct SectorEntry {
    pub charge: Charge,
    /// Squared norm of the component.
    pub weight: f64,
    pub component: AsMps,
}

/// A state split by the charges of its first bond.
#[derive(Clone, Debug, Default)]
pub struct SectorDecomposition {
    pub entries: Vec<SectorEntry>,
}

impl SectorDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    pub fn weights(&self) -> Vec<(Charge, f64)> {
        self.entries.iter().map(|e| (e.charge, e.weight)).collect()
    }

    /// Charges whose weight exceeds `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<Charge> {
        self.entries.iter().filter(|e| e.weight > threshold).map(|e| e.charge).collect()
    }
}

impl AsMps {
    /// One entry per first-bond charge, in ascending charge order.
    pub fn sector_split(&self) -> Result<SectorDecomposition> {
        let mut entries = Vec::new();
        for q in self.a1_charges() {
            let component = self.restrict_a1(|c| c == q);
            let weight = component.norm_sqr();
            entries.push(SectorEntry { charge: q, weight, component });
        }
        Ok(SectorDecomposition { entries })
    }

    /// `<bra|component_q>` for every first-bond charge `q` of `self`. With
    /// `bra` the vectorized identity this is the trace of each sector of a
    /// vectorized density operator.
    pub fn sector_overlaps(&self, bra: &AsMps) -> Result<Vec<(Charge, C64)>> {
        self.a1_charges()
            .into_iter()
            .map(|q| Ok((q, overlap(bra, &self.restrict_a1(|c| c == q))?)))
            .collect()
    }
}
