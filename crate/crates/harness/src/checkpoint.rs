//! Binary network checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! | field        | bytes                         |
//! |--------------|-------------------------------|
//! | magic        | `MGDF1`                       |
//! | version      | u32                           |
//! | role         | u8 (0 noise predictor, 1 classifier) |
//! | activation   | u8                            |
//! | data dim     | u32                           |
//! | total steps  | u32                           |
//! | layer count  | u32, then one u32 per width   |
//! | fingerprint  | 32 bytes, SHA-256 of the betas as LE f64 |
//! | param count  | u64, then LE f64 parameters   |

use std::path::Path;

use minority_core::diffusion::NoiseSchedule;
use minority_core::guidance::ClassifierModel;
use minority_core::nn::{Activation, Mlp};
use minority_core::score::EpsilonNet;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAGIC: &[u8; 5] = b"MGDF1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    NoisePredictor,
    Classifier,
}

impl Role {
    fn id(self) -> u8 {
        match self {
            Role::NoisePredictor => 0,
            Role::Classifier => 1,
        }
    }

    fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Role::NoisePredictor),
            1 => Some(Role::Classifier),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("unsupported checkpoint format (expected {MAGIC:?} version {FORMAT_VERSION})")]
    VersionMismatch,
    #[error("checkpoint was written under a different noise schedule")]
    FingerprintMismatch,
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint holds a {found:?}, expected a {expected:?}")]
    RoleMismatch { expected: Role, found: Role },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, CheckpointError>;

/// SHA-256 of the betas in little-endian f64 form.
pub fn schedule_fingerprint(schedule: &NoiseSchedule) -> [u8; 32] {
    let mut h = Sha256::new();
    for b in schedule.betas() {
        h.update(b.to_le_bytes());
    }
    h.finalize().into()
}

/// A decoded checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub role: Role,
    pub data_dim: usize,
    pub total_steps: usize,
    pub net: Mlp,
}

impl Checkpoint {
    pub fn encode(&self, schedule: &NoiseSchedule) -> Vec<u8> {
        let widths = self.net.widths();
        let params = self.net.params();
        let mut out = Vec::with_capacity(64 + 4 * widths.len() + 8 * params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.role.id());
        out.push(self.net.activation().id());
        out.extend_from_slice(&(self.data_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.total_steps as u32).to_le_bytes());
        out.extend_from_slice(&(widths.len() as u32).to_le_bytes());
        for w in widths {
            out.extend_from_slice(&(*w as u32).to_le_bytes());
        }
        out.extend_from_slice(&schedule_fingerprint(schedule));
        out.extend_from_slice(&(params.len() as u64).to_le_bytes());
        for p in params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], schedule: &NoiseSchedule) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len()).map_err(|_| CheckpointError::VersionMismatch)? != MAGIC {
            return Err(CheckpointError::VersionMismatch);
        }
        if r.u32().map_err(|_| CheckpointError::VersionMismatch)? != FORMAT_VERSION {
            return Err(CheckpointError::VersionMismatch);
        }
        let role = Role::from_id(r.u8()?).ok_or_else(|| CheckpointError::Malformed("unknown role".into()))?;
        let activation =
            Activation::from_id(r.u8()?).ok_or_else(|| CheckpointError::Malformed("unknown activation".into()))?;
        let data_dim = r.u32()? as usize;
        let total_steps = r.u32()? as usize;
        let layers = r.u32()? as usize;
        let mut widths = Vec::with_capacity(layers.min(1024));
        for _ in 0..layers {
            widths.push(r.u32()? as usize);
        }
        if r.take(32)? != schedule_fingerprint(schedule) {
            return Err(CheckpointError::FingerprintMismatch);
        }
        let count = r.u64()? as usize;
        if r.remaining() < count.saturating_mul(8) {
            return Err(CheckpointError::Truncated);
        }
        let params: Vec<f64> = (0..count).map(|_| r.f64()).collect::<Result<_>>()?;
        if r.remaining() != 0 {
            return Err(CheckpointError::Malformed("trailing bytes".into()));
        }
        let net = Mlp::from_params(&widths, activation, params).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        Ok(Self { role, data_dim, total_steps, net })
    }

    pub fn save(&self, path: &Path, schedule: &NoiseSchedule) -> Result<()> {
        std::fs::write(path, self.encode(schedule))?;
        Ok(())
    }

    pub fn load(path: &Path, schedule: &NoiseSchedule) -> Result<Self> {
        Self::decode(&std::fs::read(path)?, schedule)
    }

    fn expect(self, role: Role) -> Result<Self> {
        if self.role != role {
            return Err(CheckpointError::RoleMismatch { expected: role, found: self.role });
        }
        Ok(self)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or(CheckpointError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn save_noise_predictor(path: &Path, net: &EpsilonNet, schedule: &NoiseSchedule) -> Result<()> {
    Checkpoint {
        role: Role::NoisePredictor,
        data_dim: net.data_dim(),
        total_steps: schedule.total_steps(),
        net: net.net().clone(),
    }
    .save(path, schedule)
}

pub fn load_noise_predictor(path: &Path, schedule: &NoiseSchedule) -> Result<EpsilonNet> {
    let c = Checkpoint::load(path, schedule)?.expect(Role::NoisePredictor)?;
    EpsilonNet::from_net(c.net, c.data_dim).map_err(|e| CheckpointError::Malformed(e.to_string()))
}

pub fn save_classifier(path: &Path, clf: &ClassifierModel, schedule: &NoiseSchedule) -> Result<()> {
    Checkpoint {
        role: Role::Classifier,
        data_dim: clf.data_dim(),
        total_steps: clf.total_steps(),
        net: clf.net().clone(),
    }
    .save(path, schedule)
}

pub fn load_classifier(path: &Path, schedule: &NoiseSchedule) -> Result<ClassifierModel> {
    let c = Checkpoint::load(path, schedule)?.expect(Role::Classifier)?;
    ClassifierModel::from_net(c.net, c.data_dim, c.total_steps).map_err(|e| CheckpointError::Malformed(e.to_string()))
}
