use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::Network;
use crate::numerics::SeedSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: SeedSpec,
    pub epoch: usize,
}

/// Self-describing JSON document for a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub has_output_bias: bool,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
    pub beta: f64,
    pub provenance: Provenance,
}

impl Checkpoint {
    pub fn from_network(net: &Network, provenance: Provenance) -> Self {
        Self {
            d: net.dim(),
            k: net.width(),
            has_output_bias: net.has_output_bias,
            w: net.w.rows().into_iter().map(|r| r.to_vec()).collect(),
            b: net.b.to_vec(),
            v: net.v.to_vec(),
            beta: net.beta,
            provenance,
        }
    }

    pub fn to_network(&self) -> Result<Network> {
        if self.w.len() != self.k || self.w.iter().any(|r| r.len() != self.d) {
            return Err(Error::Model(format!("checkpoint W is not {}x{}", self.k, self.d)));
        }
        let w = Array2::from_shape_vec((self.k, self.d), self.w.concat()).expect("shape checked");
        Network::new(
            w,
            Array1::from(self.b.clone()),
            Array1::from(self.v.clone()),
            self.beta,
            self.has_output_bias,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| crate::Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
