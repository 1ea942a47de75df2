use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AsMpo, AsMps};
use crate::error::{Error, Result};
use crate::space::LocalSpace;
use crate::symtensor::{Charge, SymTensor, TensorRecord, TruncationPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    AsMps,
    AsMpo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: CheckpointKind,
    pub length: usize,
    /// Charge of every natural basis state, per site.
    pub local_charges: Vec<Vec<Charge>>,
    pub center: Option<usize>,
    pub policy: Option<TruncationPolicy>,
}

/// Self-describing JSON checkpoint of an as-MPS or as-MPO.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub manifest: Manifest,
    pub sites: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn from_mps(mps: &AsMps, policy: Option<TruncationPolicy>) -> Checkpoint {
        Checkpoint {
            manifest: Manifest {
                kind: CheckpointKind::AsMps,
                length: mps.len(),
                local_charges: mps.spaces().iter().map(|s| s.charges().to_vec()).collect(),
                center: mps.center(),
                policy,
            },
            sites: mps.sites().iter().map(TensorRecord::from).collect(),
        }
    }

    pub fn from_mpo(mpo: &AsMpo, policy: Option<TruncationPolicy>) -> Checkpoint {
        Checkpoint {
            manifest: Manifest {
                kind: CheckpointKind::AsMpo,
                length: mpo.len(),
                local_charges: mpo.spaces().iter().map(|s| s.charges().to_vec()).collect(),
                center: None,
                policy,
            },
            sites: mpo.sites().iter().map(TensorRecord::from).collect(),
        }
    }

    fn parts(self, kind: CheckpointKind) -> Result<(Vec<SymTensor>, Vec<LocalSpace>, Option<usize>)> {
        let m = self.manifest;
        if m.kind != kind {
            return Err(Error::Checkpoint(format!("expected {kind:?}, found {:?}", m.kind)));
        }
        if m.length != self.sites.len() || m.length != m.local_charges.len() {
            return Err(Error::Checkpoint("length disagrees with the site records".into()));
        }
        let sites = self.sites.into_iter().map(SymTensor::try_from).collect::<Result<Vec<_>>>()?;
        let spaces = m.local_charges.into_iter().map(LocalSpace::new).collect();
        Ok((sites, spaces, m.center))
    }

    /// Rebuild the state, validating every invariant (and the recorded gauge).
    pub fn into_mps(self) -> Result<AsMps> {
        let (sites, spaces, center) = self.parts(CheckpointKind::AsMps)?;
        let mps = AsMps::new(sites, spaces)?;
        match center {
            Some(c) if c < mps.len() => {
                if !mps.is_canonical_at(c, 1e-10) {
                    return Err(Error::Checkpoint(format!("state is not canonical at recorded center {c}")));
                }
                Ok(mps.with_center(c))
            }
            Some(c) => Err(Error::Checkpoint(format!("center {c} out of range"))),
            None => Ok(mps),
        }
    }

    pub fn into_mpo(self) -> Result<AsMpo> {
        let (sites, spaces, _) = self.parts(CheckpointKind::AsMpo)?;
        AsMpo::new(sites, spaces)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
