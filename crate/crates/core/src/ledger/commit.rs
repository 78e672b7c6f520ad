//! Nonce-based hash commitments.

use rand::RngCore;

use super::canonical::Canonical;
use crate::error::{Error, Result};
use crate::hashing::{sha256, sha256_concat, Hash32};

pub const NONCE_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Nonce(pub [u8; NONCE_LEN]);

impl Nonce {
    /// Fresh nonce from the thread-local CSPRNG.
    pub fn random() -> Self {
        let mut bytes = [0u8; NONCE_LEN];
        rand::rng().fill_bytes(&mut bytes);
        Nonce(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::invalid(format!("bad nonce hex: {e}")))?;
        let arr: [u8; NONCE_LEN] = bytes
            .try_into()
            .map_err(|_| Error::invalid("nonce must be 16 bytes"))?;
        Ok(Nonce(arr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commitment {
    pub digest: Hash32,
    pub nonce: Nonce,
}

impl Commitment {
    pub fn hex(&self) -> String {
        hex::encode(self.digest)
    }
}

/// `SHA-256(message ‖ nonce)`.
pub fn commit_message(message: &[u8], nonce: Nonce) -> Commitment {
    Commitment {
        digest: sha256_concat(&[message, &nonce.0]),
        nonce,
    }
}

/// Canonical opening text of a parameter commitment: `{"b":…,"nonce":…,"w":[…]}`
/// with weights rendered to 8 decimals.
pub fn params_preimage(w: &[f64], b: f64, nonce: Nonce) -> Result<String> {
    if !b.is_finite() || w.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("cannot commit to non-finite parameters"));
    }
    Canonical::object([
        ("b", Canonical::Float(b)),
        ("nonce", Canonical::Bytes(nonce.0.to_vec())),
        ("w", Canonical::Array(w.iter().map(|&x| Canonical::Float(x)).collect())),
    ])
    .to_string()
}

/// Commitment to model parameters `(w, b)`.
pub fn commit_params(w: &[f64], b: f64, nonce: Nonce) -> Result<Commitment> {
    Ok(Commitment {
        digest: sha256(params_preimage(w, b, nonce)?.as_bytes()),
        nonce,
    })
}
