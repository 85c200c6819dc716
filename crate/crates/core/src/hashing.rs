//! SHA-256 helpers for content addressing.

use sha2::{Digest, Sha256};

/// Hex SHA-256 over the parts, each part terminated by a 0x1f unit separator
/// so that `["ab", "c"]` and `["a", "bc"]` hash differently.
pub fn content_hash<I, P>(parts: I) -> String
where
    I: IntoIterator<Item = P>,
    P: AsRef<[u8]>,
{
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_ref());
        hasher.update([0x1f]);
    }
    hex::encode(hasher.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// First eight bytes of the SHA-256 of `text`, as an integer seed.
pub fn seed_from_str(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
