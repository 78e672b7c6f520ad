//! SHA-256 helpers shared by featurization and the ledger.

use sha2::{Digest, Sha256};

/// A raw SHA-256 digest.
pub type Hash32 = [u8; 32];

pub fn sha256(data: &[u8]) -> Hash32 {
    Sha256::digest(data).into()
}

/// SHA-256 over the concatenation of `parts`.
pub fn sha256_concat(parts: &[&[u8]]) -> Hash32 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

/// Bucket index of `token`: the SHA-256 digest read as a big-endian
/// integer, reduced modulo `dim`.
pub fn bucket_index(token: &str, dim: usize) -> usize {
    debug_assert!(dim > 0);
    let digest = sha256(token.as_bytes());
    let dim = dim as u128;
    let mut rem: u128 = 0;
    for byte in digest {
        rem = (rem * 256 + byte as u128) % dim;
    }
    rem as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_of_two_modulus_uses_low_bytes() {
        let digest = sha256(b"alpha");
        let low = u16::from_be_bytes([digest[30], digest[31]]) as usize;
        assert_eq!(bucket_index("alpha", 128), low % 128);
        assert_eq!(bucket_index("alpha", 1024), low % 1024);
    }

    #[test]
    fn odd_modulus_matches_wide_arithmetic() {
        // Reduce the top 16 bytes and low 16 bytes separately and recombine.
        let digest = sha256(b"beta");
        let hi = u128::from_be_bytes(digest[..16].try_into().unwrap());
        let lo = u128::from_be_bytes(digest[16..].try_into().unwrap());
        let m = 97u128;
        // 2^128 mod 97 computed by repeated doubling.
        let mut two128 = 1u128;
        for _ in 0..128 {
            two128 = (two128 * 2) % m;
        }
        let expected = ((hi % m) * two128 + lo % m) % m;
        assert_eq!(bucket_index("beta", 97) as u128, expected);
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            hex::encode(sha256(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
