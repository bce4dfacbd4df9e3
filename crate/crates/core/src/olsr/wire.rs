//! TC wire format.
//!
//! Big-endian layout:
//!
//! ```text
//!  0               16              32
//! +---------------+---------------+
//! |     ANSN      |   reserved=0  |
//! +---------------+---------------+
//! |      weight (u32 fixed point) |
//! +-------------------------------+
//! |        originator (u32)       |
//! +---------------+---------------+
//! |     count     | count x u32 advertised ids ...
//! +---------------+----------------
//! ```
//!
//! The weight is stored as `round(w * (2^32 - 1))`, so `0` encodes as
//! `00000000` and `1` as `FFFFFFFF`.

use thiserror::Error;

use super::{HelloMessage, TcMessage};
use crate::model::{NodeId, NodeWeight};

const WEIGHT_SCALE: f64 = u32::MAX as f64;
pub const TC_HEADER_LEN: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated TC: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("reserved field is {0:#06x}, expected zero")]
    Reserved(u16),
    #[error("{0} trailing bytes after TC body")]
    Trailing(usize),
    #[error("too many advertised neighbors ({0})")]
    TooMany(usize),
}

pub fn encode_weight(w: NodeWeight) -> u32 {
    (w.value() * WEIGHT_SCALE).round() as u32
}

pub fn decode_weight(raw: u32) -> NodeWeight {
    NodeWeight::new(f64::from(raw) / WEIGHT_SCALE)
}

/// Encoded length of a TC advertising `count` neighbors.
pub fn tc_len(count: usize) -> usize {
    TC_HEADER_LEN + 4 * count
}

pub fn serialize_tc(msg: &TcMessage) -> Result<Vec<u8>, WireError> {
    let count = u16::try_from(msg.advertised.len()).map_err(|_| WireError::TooMany(msg.advertised.len()))?;
    let mut out = Vec::with_capacity(tc_len(msg.advertised.len()));
    out.extend_from_slice(&msg.ansn.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&encode_weight(msg.weight).to_be_bytes());
    out.extend_from_slice(&msg.originator.0.to_be_bytes());
    out.extend_from_slice(&count.to_be_bytes());
    for id in &msg.advertised {
        out.extend_from_slice(&id.0.to_be_bytes());
    }
    Ok(out)
}

pub fn deserialize_tc(bytes: &[u8]) -> Result<TcMessage, WireError> {
    if bytes.len() < TC_HEADER_LEN {
        return Err(WireError::Truncated {
            needed: TC_HEADER_LEN,
            have: bytes.len(),
        });
    }
    let u16_at = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_be_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let reserved = u16_at(2);
    if reserved != 0 {
        return Err(WireError::Reserved(reserved));
    }
    let count = usize::from(u16_at(12));
    let needed = tc_len(count);
    if bytes.len() < needed {
        return Err(WireError::Truncated {
            needed,
            have: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(WireError::Trailing(bytes.len() - needed));
    }
    Ok(TcMessage {
        ansn: u16_at(0),
        weight: decode_weight(u32_at(4)),
        originator: NodeId(u32_at(8)),
        advertised: (0..count)
            .map(|i| NodeId(u32_at(TC_HEADER_LEN + 4 * i)))
            .collect(),
    })
}

/// Size of a HELLO on the simulated air: originator, count, then one id and
/// one status byte per listed neighbor.
pub fn hello_len(msg: &HelloMessage) -> usize {
    6 + 5 * msg.heard_neighbors.len()
}
