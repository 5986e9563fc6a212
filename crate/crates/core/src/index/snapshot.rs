//! Versioned binary export of a [`DriftIndex`].
//!
//! Layout: 8-byte magic, little-endian `u32` format version, then the
//! bincode encoding of the index state. Floats are stored as raw IEEE-754
//! bits, so an export/import round trip is bit-exact.

use std::fs;
use std::path::Path;

use super::DriftIndex;
use crate::error::{DriftError, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"DRIFTIDX";
pub const SNAPSHOT_VERSION: u32 = 1;

impl DriftIndex {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(1024);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        bincode::serialize_into(&mut out, self)
            .map_err(|e| DriftError::Snapshot(format!("encode failed: {e}")))?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = SNAPSHOT_MAGIC.len() + 4;
        if bytes.len() < header || &bytes[..SNAPSHOT_MAGIC.len()] != SNAPSHOT_MAGIC {
            return Err(DriftError::Snapshot("not a drift index file".into()));
        }
        let version = u32::from_le_bytes(
            bytes[SNAPSHOT_MAGIC.len()..header]
                .try_into()
                .expect("four header bytes"),
        );
        if version != SNAPSHOT_VERSION {
            return Err(DriftError::Snapshot(format!(
                "unsupported format version {version} (expected {SNAPSHOT_VERSION})"
            )));
        }
        let index: DriftIndex = bincode::deserialize(&bytes[header..])
            .map_err(|e| DriftError::Snapshot(format!("decode failed: {e}")))?;
        let materialized = index
            .config
            .validate()
            .map_err(|e| DriftError::Snapshot(format!("inconsistent configuration: {e}")))?;
        if materialized != index.materialized
            || index.levels.len() != materialized.len()
            || index.detectors.len() != materialized.len()
        {
            return Err(DriftError::Snapshot(
                "level layout does not match policy".into(),
            ));
        }
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(|e| DriftError::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            fs::read(path).map_err(|e| DriftError::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&bytes)
    }
}
