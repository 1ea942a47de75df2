use ndarray::{ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use super::{Charge, Dir, Leg, SymTensor};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LegRecord {
    pub dir: Dir,
    pub sectors: Vec<(i32, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockRecord {
    pub key: Vec<i32>,
    pub shape: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// JSON form of a [`SymTensor`]; block data is row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorRecord {
    pub legs: Vec<LegRecord>,
    pub blocks: Vec<BlockRecord>,
}

impl From<&SymTensor> for TensorRecord {
    fn from(t: &SymTensor) -> Self {
        TensorRecord {
            legs: t
                .legs()
                .iter()
                .map(|l| LegRecord { dir: l.dir(), sectors: l.sectors().iter().map(|&(q, d)| (q.0, d)).collect() })
                .collect(),
            blocks: t
                .blocks()
                .iter()
                .map(|(k, b)| {
                    let std = b.as_standard_layout();
                    BlockRecord {
                        key: k.iter().map(|q| q.0).collect(),
                        shape: b.shape().to_vec(),
                        re: std.iter().map(|x| x.re).collect(),
                        im: std.iter().map(|x| x.im).collect(),
                    }
                })
                .collect(),
        }
    }
}

impl TryFrom<TensorRecord> for SymTensor {
    type Error = Error;

    fn try_from(r: TensorRecord) -> Result<SymTensor> {
        let legs = r
            .legs
            .into_iter()
            .map(|l| Leg::new(l.dir, l.sectors.into_iter().map(|(q, d)| (Charge(q), d)).collect()))
            .collect::<Result<Vec<_>>>()?;
        let mut blocks = Vec::with_capacity(r.blocks.len());
        for b in r.blocks {
            let n: usize = b.shape.iter().product();
            if b.re.len() != n || b.im.len() != n {
                return Err(Error::Checkpoint(format!("block {:?} has {} values, shape needs {n}", b.key, b.re.len())));
            }
            let data: Vec<C64> = b.re.iter().zip(&b.im).map(|(&re, &im)| C64::new(re, im)).collect();
            let arr = ArrayD::from_shape_vec(IxDyn(&b.shape), data).map_err(|e| Error::Checkpoint(e.to_string()))?;
            blocks.push((b.key.into_iter().map(Charge).collect(), arr));
        }
        SymTensor::new(legs, blocks)
    }
}

impl SymTensor {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&TensorRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<SymTensor> {
        let rec: TensorRecord = serde_json::from_str(s)?;
        SymTensor::try_from(rec)
    }
}
