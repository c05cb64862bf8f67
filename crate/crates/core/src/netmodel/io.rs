//! JSON interchange for plants, weights and patterns.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "plant": {
//!     "a": {"rows": 2, "cols": 2, "data": [[0.5, 0.1], [0.0, 0.7]]},
//!     "b": {"rows": 2, "cols": 1, "data": [[1.0], [0.0]]},
//!     "partition": {"n": [1, 1], "m": [1, 0]}
//!   },
//!   "weights": {"q": {...}, "r": {...}},
//!   "localization": {"role": "localization", "entries": [[1, 1], [1, 1]]},
//!   "communication": {"role": "communication", "entries": [[1, 1], [1, 1]]}
//! }
//! ```
//!
//! `weights`, `localization` and `communication` are optional.

use serde::{Deserialize, Serialize};

use super::{CostWeights, NetModelError, Pattern, PatternRole, Plant, SubsystemPartition};
use crate::json::MatrixJson;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantJson {
    pub a: MatrixJson,
    pub b: MatrixJson,
    pub partition: PartitionJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsJson {
    pub q: MatrixJson,
    pub r: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternJson {
    pub role: PatternRole,
    pub entries: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantFile {
    pub schema_version: u32,
    pub plant: PlantJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization: Option<PatternJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub communication: Option<PatternJson>,
}

impl From<&Plant> for PlantJson {
    fn from(p: &Plant) -> Self {
        PlantJson {
            a: MatrixJson::from_matrix(p.a()),
            b: MatrixJson::from_matrix(p.b()),
            partition: PartitionJson {
                n: p.partition().state_dims().to_vec(),
                m: p.partition().input_dims().to_vec(),
            },
        }
    }
}

impl TryFrom<&PlantJson> for Plant {
    type Error = NetModelError;

    fn try_from(j: &PlantJson) -> Result<Self, Self::Error> {
        let part = SubsystemPartition::new(j.partition.n.clone(), j.partition.m.clone())?;
        Plant::new(
            j.a.to_matrix().map_err(NetModelError::Shape)?,
            j.b.to_matrix().map_err(NetModelError::Shape)?,
            part,
        )
    }
}

impl From<&CostWeights> for WeightsJson {
    fn from(w: &CostWeights) -> Self {
        WeightsJson {
            q: MatrixJson::from_matrix(w.q()),
            r: MatrixJson::from_matrix(w.r()),
        }
    }
}

impl TryFrom<&WeightsJson> for CostWeights {
    type Error = NetModelError;

    fn try_from(j: &WeightsJson) -> Result<Self, Self::Error> {
        CostWeights::new(
            j.q.to_matrix().map_err(NetModelError::Shape)?,
            j.r.to_matrix().map_err(NetModelError::Shape)?,
        )
    }
}

impl From<&Pattern> for PatternJson {
    fn from(p: &Pattern) -> Self {
        PatternJson {
            role: p.role(),
            entries: p.entries().to_rows(),
        }
    }
}

impl TryFrom<&PatternJson> for Pattern {
    type Error = NetModelError;

    fn try_from(j: &PatternJson) -> Result<Self, Self::Error> {
        Pattern::from_rows(&j.entries, j.role)
    }
}

impl PlantFile {
    pub fn parse(text: &str) -> Result<Self, NetModelError> {
        let file: PlantFile =
            serde_json::from_str(text).map_err(|e| NetModelError::Parameter(format!("plant file: {}", e)))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(NetModelError::Parameter(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        Ok(file)
    }
}
