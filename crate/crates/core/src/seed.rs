//! Hierarchically labelled, counter-based random streams.
//!
//! A stream is named by a root seed and a path of labels. The path is folded
//! into a 256-bit ChaCha key, so the stream for `(root, path)` never depends on
//! which other streams were consumed first or on which thread asks for it.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

pub type StreamRng = ChaCha12Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StreamLabel {
    Index(u64),
    Name(String),
}

impl From<u64> for StreamLabel {
    fn from(v: u64) -> Self {
        StreamLabel::Index(v)
    }
}

impl From<usize> for StreamLabel {
    fn from(v: usize) -> Self {
        StreamLabel::Index(v as u64)
    }
}

impl From<u32> for StreamLabel {
    fn from(v: u32) -> Self {
        StreamLabel::Index(v as u64)
    }
}

impl From<&str> for StreamLabel {
    fn from(v: &str) -> Self {
        StreamLabel::Name(v.to_owned())
    }
}

impl fmt::Display for StreamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamLabel::Index(i) => write!(f, "{i}"),
            StreamLabel::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub root: u64,
    #[serde(default)]
    pub path: Vec<StreamLabel>,
}

const INDEX_TAG: u64 = 0x6a09_e667_f3bc_c908;
const NAME_TAG: u64 = 0xbb67_ae85_84ca_a73b;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl SeedSpec {
    pub fn new(root: u64) -> Self {
        SeedSpec {
            root,
            path: Vec::new(),
        }
    }

    pub fn child(&self, label: impl Into<StreamLabel>) -> Self {
        let mut path = self.path.clone();
        path.push(label.into());
        SeedSpec {
            root: self.root,
            path,
        }
    }

    fn fold(&self) -> u64 {
        let mut state = splitmix64(self.root);
        for label in &self.path {
            let word = match label {
                StreamLabel::Index(i) => splitmix64(*i ^ INDEX_TAG),
                StreamLabel::Name(s) => splitmix64(fnv1a(s.as_bytes()) ^ NAME_TAG),
            };
            state = splitmix64(state.rotate_left(17) ^ word);
        }
        state
    }

    pub fn key(&self) -> [u8; 32] {
        let mut state = self.fold();
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha12Rng::from_seed(self.key())
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for l in &self.path {
            write!(f, "/{l}")?;
        }
        Ok(())
    }
}
