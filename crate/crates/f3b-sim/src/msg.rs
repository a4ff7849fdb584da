//! Actor identity keys and the signed, versioned bus record format.
//!
//! Every actor in the simulator (trustee, client, aggregator) owns a Schnorr
//! identity key over the same group the protocols use. Bus messages are
//! length-prefixed binary records signed by their sender, so byzantine
//! scripts can forge content but not authorship.

use f3b::group::{GroupElement, Scalar, ScalarHash};

const DOMAIN_SCHNORR_NONCE: &[u8] = b"f3b-sim/v1/schnorr-nonce";
const DOMAIN_SCHNORR_CHALLENGE: &[u8] = b"f3b-sim/v1/schnorr-challenge";

pub const RECORD_VERSION: u8 = 1;
pub const SIGNATURE_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MsgError {
    #[error("record shorter than its fixed header")]
    Truncated,
    #[error("unknown record version {0}")]
    UnknownVersion(u8),
    #[error("unknown record kind {0}")]
    UnknownKind(u8),
    #[error("record length field disagrees with the buffer")]
    LengthMismatch,
    #[error("signature check failed")]
    BadSignature,
    #[error("malformed field encoding")]
    BadEncoding,
}

/// Schnorr keypair identifying one simulator actor.
#[derive(Clone)]
pub struct IdentityKey {
    sk: Scalar,
    pk: GroupElement,
}

/// Schnorr signature `(R, s)` with `g^s = R + pk·c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub commitment: GroupElement,
    pub response: Scalar,
}

impl IdentityKey {
    pub fn generate<R: rand::RngCore + rand::CryptoRng>(rng: &mut R) -> Self {
        let sk = Scalar::random(rng);
        IdentityKey { pk: GroupElement::mul_base(&sk), sk }
    }

    pub fn public(&self) -> GroupElement {
        self.pk
    }

    /// Signs with a nonce derived from the key and message, so signing is
    /// deterministic and never reuses a nonce across distinct messages.
    pub fn sign(&self, msg: &[u8]) -> Signature {
        let nonce = ScalarHash::new(DOMAIN_SCHNORR_NONCE)
            .bytes(&self.sk.to_bytes())
            .bytes(msg)
            .finalize();
        let commitment = GroupElement::mul_base(&nonce);
        let challenge = challenge(&commitment, &self.pk, msg);
        Signature { commitment, response: nonce + challenge * self.sk }
    }
}

fn challenge(commitment: &GroupElement, pk: &GroupElement, msg: &[u8]) -> Scalar {
    ScalarHash::new(DOMAIN_SCHNORR_CHALLENGE)
        .point(commitment)
        .point(pk)
        .bytes(msg)
        .finalize()
}

pub fn verify(pk: &GroupElement, msg: &[u8], sig: &Signature) -> bool {
    let c = challenge(&sig.commitment, pk, msg);
    GroupElement::mul_base(&sig.response) == sig.commitment + *pk * c
}

impl Signature {
    pub fn to_bytes(&self) -> [u8; SIGNATURE_LEN] {
        let mut out = [0u8; SIGNATURE_LEN];
        out[..32].copy_from_slice(&self.commitment.to_bytes());
        out[32..].copy_from_slice(&self.response.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MsgError> {
        if bytes.len() != SIGNATURE_LEN {
            return Err(MsgError::Truncated);
        }
        Ok(Signature {
            commitment: GroupElement::from_bytes(&bytes[..32]).map_err(|_| MsgError::BadEncoding)?,
            response: Scalar::from_bytes(&bytes[32..]).map_err(|_| MsgError::BadEncoding)?,
        })
    }
}

/// What a bus record carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    /// A trustee's decryption share for a finalized tx.
    ShareRelease,
    /// A trustee's signed statement that it holds no share for a tx.
    Refusal,
    /// A resharing sub-share during an epoch handover.
    ReshareSubShare,
    /// The aggregator's reconstructed key announcement.
    KeyAnnounce,
}

impl RecordKind {
    fn to_u8(self) -> u8 {
        match self {
            RecordKind::ShareRelease => 1,
            RecordKind::Refusal => 2,
            RecordKind::ReshareSubShare => 3,
            RecordKind::KeyAnnounce => 4,
        }
    }

    fn from_u8(v: u8) -> Result<Self, MsgError> {
        match v {
            1 => Ok(RecordKind::ShareRelease),
            2 => Ok(RecordKind::Refusal),
            3 => Ok(RecordKind::ReshareSubShare),
            4 => Ok(RecordKind::KeyAnnounce),
            other => Err(MsgError::UnknownKind(other)),
        }
    }
}

/// A signed bus record: `version ‖ kind ‖ signer ‖ len ‖ payload ‖ signature`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedRecord {
    pub kind: RecordKind,
    pub signer: GroupElement,
    pub payload: Vec<u8>,
    pub signature: Signature,
}

/// Fixed part: version(1) + kind(1) + signer(32) + payload length(4).
const RECORD_HEADER_LEN: usize = 38;

impl SignedRecord {
    /// The bytes the signature covers: everything except the signature.
    fn signed_bytes(kind: RecordKind, signer: &GroupElement, payload: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(RECORD_HEADER_LEN + payload.len());
        out.push(RECORD_VERSION);
        out.push(kind.to_u8());
        out.extend_from_slice(&signer.to_bytes());
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.extend_from_slice(payload);
        out
    }

    pub fn new(key: &IdentityKey, kind: RecordKind, payload: Vec<u8>) -> Self {
        let body = Self::signed_bytes(kind, &key.public(), &payload);
        SignedRecord { kind, signer: key.public(), signature: key.sign(&body), payload }
    }

    pub fn verify(&self) -> bool {
        let body = Self::signed_bytes(self.kind, &self.signer, &self.payload);
        verify(&self.signer, &body, &self.signature)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Self::signed_bytes(self.kind, &self.signer, &self.payload);
        out.extend_from_slice(&self.signature.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MsgError> {
        if bytes.len() < RECORD_HEADER_LEN + SIGNATURE_LEN {
            return Err(MsgError::Truncated);
        }
        if bytes[0] != RECORD_VERSION {
            return Err(MsgError::UnknownVersion(bytes[0]));
        }
        let kind = RecordKind::from_u8(bytes[1])?;
        let signer = GroupElement::from_bytes(&bytes[2..34]).map_err(|_| MsgError::BadEncoding)?;
        let len = u32::from_be_bytes(bytes[34..38].try_into().expect("length checked")) as usize;
        if bytes.len() != RECORD_HEADER_LEN + len + SIGNATURE_LEN {
            return Err(MsgError::LengthMismatch);
        }
        let payload = bytes[38..38 + len].to_vec();
        let signature = Signature::from_bytes(&bytes[38 + len..])?;
        let record = SignedRecord { kind, signer, payload, signature };
        if !record.verify() {
            return Err(MsgError::BadSignature);
        }
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn rng() -> StdRng {
        StdRng::seed_from_u64(53)
    }

    #[test]
    fn sign_verify_roundtrip() {
        let mut r = rng();
        let key = IdentityKey::generate(&mut r);
        let sig = key.sign(b"release share for tx 7");
        assert!(verify(&key.public(), b"release share for tx 7", &sig));
        assert!(!verify(&key.public(), b"release share for tx 8", &sig));
        let other = IdentityKey::generate(&mut r);
        assert!(!verify(&other.public(), b"release share for tx 7", &sig));
    }

    #[test]
    fn signing_is_deterministic_per_message() {
        let mut r = rng();
        let key = IdentityKey::generate(&mut r);
        assert_eq!(key.sign(b"a"), key.sign(b"a"));
        assert_ne!(key.sign(b"a"), key.sign(b"b"));
    }

    #[test]
    fn record_roundtrip_and_tamper_rejection() {
        let mut r = rng();
        let key = IdentityKey::generate(&mut r);
        let rec = SignedRecord::new(&key, RecordKind::ShareRelease, b"payload".to_vec());
        assert!(rec.verify());
        let bytes = rec.to_bytes();
        assert_eq!(SignedRecord::from_bytes(&bytes).unwrap(), rec);

        // Any flipped payload byte fails signature verification.
        let mut bad = bytes.clone();
        bad[RECORD_HEADER_LEN] ^= 1;
        assert_eq!(SignedRecord::from_bytes(&bad), Err(MsgError::BadSignature));

        // Truncation and version/kind garbage are caught before crypto.
        assert_eq!(SignedRecord::from_bytes(&bytes[..10]), Err(MsgError::Truncated));
        let mut wrong_version = bytes.clone();
        wrong_version[0] = 99;
        assert_eq!(SignedRecord::from_bytes(&wrong_version), Err(MsgError::UnknownVersion(99)));
        let mut wrong_kind = bytes.clone();
        wrong_kind[1] = 99;
        assert_eq!(SignedRecord::from_bytes(&wrong_kind), Err(MsgError::UnknownKind(99)));
        let mut wrong_len = bytes;
        wrong_len[37] = 200;
        assert_eq!(SignedRecord::from_bytes(&wrong_len), Err(MsgError::LengthMismatch));
    }

    #[test]
    fn forged_signer_fails() {
        let mut r = rng();
        let key = IdentityKey::generate(&mut r);
        let imposter = IdentityKey::generate(&mut r);
        let mut rec = SignedRecord::new(&key, RecordKind::Refusal, b"not mine".to_vec());
        rec.signer = imposter.public();
        assert!(!rec.verify());
    }
}
