//! Symmetric layer: transaction payloads are sealed under a random key with
//! XChaCha20-Poly1305, and that key is what the threshold layer protects.
//!
//! The envelope format is `version(1) || nonce(24) || ciphertext+tag`, a
//! constant 41 bytes of overhead over the plaintext. Keys are either drawn
//! fresh or derived from a group element produced by share combination.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{XChaCha20Poly1305, XNonce};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::group::GroupElement;

pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 24;
pub const TAG_LEN: usize = 16;
pub const ENVELOPE_VERSION: u8 = 1;
/// version byte + nonce + authentication tag.
pub const ENVELOPE_OVERHEAD: usize = 1 + NONCE_LEN + TAG_LEN;

const DOMAIN_KEY_FROM_ELEMENT: &[u8] = b"f3b/v1/key-from-element";
const DOMAIN_KEY_COMMITMENT: &[u8] = b"f3b/v1/key-commitment";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AeadError {
    #[error("envelope shorter than header and tag")]
    Truncated,
    #[error("unknown envelope version {0}")]
    UnknownVersion(u8),
    #[error("authentication failed")]
    Unauthentic,
}

/// 256-bit symmetric key for payload encryption.
#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey(pub [u8; KEY_LEN]);

impl std::fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

impl SymmetricKey {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut k = [0u8; KEY_LEN];
        rng.fill_bytes(&mut k);
        SymmetricKey(k)
    }

    /// Derives the payload key from a group element (the value the threshold
    /// layer encrypts or reconstructs), via a domain-separated hash of its
    /// canonical encoding.
    pub fn from_element(element: &GroupElement) -> Self {
        let mut h = Sha256::new();
        h.update(DOMAIN_KEY_FROM_ELEMENT);
        h.update(element.to_bytes());
        SymmetricKey(h.finalize().into())
    }

    /// Public commitment `H(k)`: posted on chain so anyone can check a
    /// released key against what the sender committed to.
    pub fn commitment(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(DOMAIN_KEY_COMMITMENT);
        h.update(self.0);
        h.finalize().into()
    }
}

/// Derives the payload key from the group element the threshold layer
/// protects. Free-function form of [`SymmetricKey::from_element`].
pub fn derive_key(point: &GroupElement) -> SymmetricKey {
    SymmetricKey::from_element(point)
}

/// Seals `plaintext` with a fresh random nonce; `associated_data` is bound
/// but not transported.
pub fn seal<R: RngCore + CryptoRng>(
    key: &SymmetricKey,
    plaintext: &[u8],
    associated_data: &[u8],
    rng: &mut R,
) -> Vec<u8> {
    let cipher = XChaCha20Poly1305::new((&key.0).into());
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let ct = cipher
        .encrypt(
            XNonce::from_slice(&nonce),
            Payload { msg: plaintext, aad: associated_data },
        )
        .expect("XChaCha20-Poly1305 encryption is infallible for in-memory buffers");
    let mut out = Vec::with_capacity(ENVELOPE_OVERHEAD + plaintext.len());
    out.push(ENVELOPE_VERSION);
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&ct);
    out
}

/// Opens an envelope produced by [`seal`] under the same key and associated
/// data.
pub fn open(
    key: &SymmetricKey,
    envelope: &[u8],
    associated_data: &[u8],
) -> Result<Vec<u8>, AeadError> {
    if envelope.len() < ENVELOPE_OVERHEAD {
        return Err(AeadError::Truncated);
    }
    if envelope[0] != ENVELOPE_VERSION {
        return Err(AeadError::UnknownVersion(envelope[0]));
    }
    let (nonce, ct) = envelope[1..].split_at(NONCE_LEN);
    let cipher = XChaCha20Poly1305::new((&key.0).into());
    cipher
        .decrypt(XNonce::from_slice(nonce), Payload { msg: ct, aad: associated_data })
        .map_err(|_| AeadError::Unauthentic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn rng() -> StdRng {
        StdRng::seed_from_u64(11)
    }

    #[test]
    fn roundtrip_and_overhead() {
        let mut r = rng();
        let key = SymmetricKey::random(&mut r);
        let msg = b"pay 5 to carol";
        let env = seal(&key, msg, b"tx:1", &mut r);
        assert_eq!(env.len(), msg.len() + ENVELOPE_OVERHEAD);
        assert_eq!(open(&key, &env, b"tx:1").unwrap(), msg);
    }

    #[test]
    fn empty_plaintext_roundtrip() {
        let mut r = rng();
        let key = SymmetricKey::random(&mut r);
        let env = seal(&key, b"", b"", &mut r);
        assert_eq!(env.len(), ENVELOPE_OVERHEAD);
        assert_eq!(open(&key, &env, b"").unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn wrong_key_nonce_aad_or_bitflip_fails() {
        let mut r = rng();
        let key = SymmetricKey::random(&mut r);
        let other = SymmetricKey::random(&mut r);
        let env = seal(&key, b"secret order", b"aad", &mut r);

        assert_eq!(open(&other, &env, b"aad"), Err(AeadError::Unauthentic));
        assert_eq!(open(&key, &env, b"tampered"), Err(AeadError::Unauthentic));
        for i in 0..env.len() {
            let mut bad = env.clone();
            bad[i] ^= 0x40;
            let got = open(&key, &bad, b"aad");
            assert!(got.is_err(), "bit flip at byte {i} must not authenticate");
        }
        assert_eq!(open(&key, &env[..ENVELOPE_OVERHEAD - 1], b"aad"), Err(AeadError::Truncated));
    }

    #[test]
    fn nonces_are_fresh_per_seal() {
        let mut r = rng();
        let key = SymmetricKey::random(&mut r);
        let a = seal(&key, b"same message", b"", &mut r);
        let b = seal(&key, b"same message", b"", &mut r);
        assert_ne!(a, b);
        assert_ne!(a[1..1 + NONCE_LEN], b[1..1 + NONCE_LEN]);
    }

    #[test]
    fn key_from_element_is_deterministic_and_spread() {
        let mut r = rng();
        let p = GroupElement::random(&mut r);
        let q = GroupElement::random(&mut r);
        assert_eq!(SymmetricKey::from_element(&p), SymmetricKey::from_element(&p));
        assert_ne!(SymmetricKey::from_element(&p).0, SymmetricKey::from_element(&q).0);
        // Derivation and commitment are separate domains.
        let k = SymmetricKey::from_element(&p);
        assert_ne!(k.commitment(), SymmetricKey::from_element(&p).0);
    }

    #[test]
    fn commitment_matches_only_its_key() {
        let mut r = rng();
        let k1 = SymmetricKey::random(&mut r);
        let k2 = SymmetricKey::random(&mut r);
        assert_eq!(k1.commitment(), k1.commitment());
        assert_ne!(k1.commitment(), k2.commitment());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn roundtrip_arbitrary_payloads(
            msg in proptest::collection::vec(any::<u8>(), 0..65536),
            aad in proptest::collection::vec(any::<u8>(), 0..128),
            seed in any::<u64>(),
        ) {
            let mut r = StdRng::seed_from_u64(seed);
            let key = SymmetricKey::random(&mut r);
            let env = seal(&key, &msg, &aad, &mut r);
            prop_assert_eq!(env.len(), msg.len() + ENVELOPE_OVERHEAD);
            prop_assert_eq!(open(&key, &env, &aad).unwrap(), msg);
        }
    }
}
