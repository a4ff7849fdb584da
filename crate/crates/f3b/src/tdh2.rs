//! TDH2 threshold cryptosystem: label-bound, chosen-ciphertext-secure
//! encryption of a key-encapsulation point, with publicly verifiable
//! decryption shares and Lagrange combination.
//!
//! Encryption binds a label into the ciphertext proof so an envelope made
//! for one chain verifies nowhere else; the label itself is supplied at
//! verification time and never serialized.

use rand::{CryptoRng, RngCore};

use crate::group::{
    lagrange_coefficients, GroupElement, GroupError, Label, Scalar, ScalarHash, ENCODED_LEN,
};
use crate::sss::Polynomial;

const DOMAIN_H1: &[u8] = b"f3b/v1/tdh2-ciphertext";
const DOMAIN_H2: &[u8] = b"f3b/v1/tdh2-share";

/// Serialized ciphertext: three points and two scalars.
pub const CIPHERTEXT_LEN: usize = 5 * ENCODED_LEN;
/// Serialized share: 4-byte big-endian index, one point, two scalars.
pub const SHARE_LEN: usize = 4 + 3 * ENCODED_LEN;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Tdh2Error {
    #[error("ciphertext proof does not verify; refusing to decrypt")]
    InvalidCiphertext,
    #[error("need at least {needed} shares, got {got}")]
    NotEnoughShares { needed: usize, got: usize },
    #[error("expected {expected} bytes, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("threshold {t} out of range for {n} trustees")]
    BadThreshold { t: usize, n: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Committee public key: `pk = g^sk` plus per-trustee verification keys
/// `h_i = g^{sk_i}`, indexed 1..=n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tdh2PublicKey {
    pub pk: GroupElement,
    verification_keys: Vec<GroupElement>,
}

impl Tdh2PublicKey {
    pub fn new(pk: GroupElement, verification_keys: Vec<GroupElement>) -> Self {
        Tdh2PublicKey { pk, verification_keys }
    }

    pub fn n(&self) -> usize {
        self.verification_keys.len()
    }

    /// Verification key for trustee `index` (1-based).
    pub fn verification_key(&self, index: u32) -> Option<&GroupElement> {
        if index == 0 {
            return None;
        }
        self.verification_keys.get(index as usize - 1)
    }

    pub fn verification_keys(&self) -> &[GroupElement] {
        &self.verification_keys
    }
}

/// Ciphertext `(c, u, ū, e, f)`; the label it was created under is an input
/// to verification, not a field, so the size is constant in both n and the
/// label length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tdh2Ciphertext {
    pub c: GroupElement,
    pub u: GroupElement,
    pub u_bar: GroupElement,
    pub e: Scalar,
    pub f: Scalar,
}

/// Decryption share `u_i = u^{sk_i}` with a proof of correct exponentiation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tdh2Share {
    pub index: u32,
    pub u_i: GroupElement,
    pub e_i: Scalar,
    pub f_i: Scalar,
}

/// Dealer-based (t, n) keygen: returns the committee key and the trustee
/// shares `(i, sk_i)`. Test and bench convenience — the distributed path
/// lives in [`crate::dkg`].
pub fn trusted_keygen<R: RngCore + CryptoRng>(
    n: usize,
    t: usize,
    rng: &mut R,
) -> Result<(Tdh2PublicKey, Vec<(u32, Scalar)>), Tdh2Error> {
    if t < 1 || t > n || n > u32::MAX as usize {
        return Err(Tdh2Error::BadThreshold { t, n });
    }
    let poly = Polynomial::sample(t, None, rng).expect("t >= 1 checked above");
    let mut shares = Vec::with_capacity(n);
    let mut vks = Vec::with_capacity(n);
    for i in 1..=n as u32 {
        let share = poly.eval(i).expect("index >= 1");
        vks.push(GroupElement::mul_base(&share.value));
        shares.push((i, share.value));
    }
    let pk = GroupElement::mul_base(&poly.secret());
    Ok((Tdh2PublicKey::new(pk, vks), shares))
}

fn challenge_h1(
    c: &GroupElement,
    u: &GroupElement,
    u_bar: &GroupElement,
    w: &GroupElement,
    w_bar: &GroupElement,
    label: &Label,
) -> Scalar {
    ScalarHash::new(DOMAIN_H1)
        .point(c)
        .point(u)
        .point(u_bar)
        .point(w)
        .point(w_bar)
        .bytes(label.as_bytes())
        .finalize()
}

fn challenge_h2(u_i: &GroupElement, u_hat: &GroupElement, h_hat: &GroupElement) -> Scalar {
    ScalarHash::new(DOMAIN_H2).point(u_i).point(u_hat).point(h_hat).finalize()
}

fn encrypt_with(
    pk: &Tdh2PublicKey,
    payload_point: &GroupElement,
    label: &Label,
    r: Scalar,
    s: Scalar,
) -> Tdh2Ciphertext {
    let g = GroupElement::generator();
    let gbar = GroupElement::gbar();
    let c = pk.pk * r + *payload_point;
    let u = g * r;
    let u_bar = gbar * r;
    let w = g * s;
    let w_bar = gbar * s;
    let e = challenge_h1(&c, &u, &u_bar, &w, &w_bar, label);
    let f = s + r * e;
    Tdh2Ciphertext { c, u, u_bar, e, f }
}

/// Encrypts a key-encapsulation point under the committee key, bound to
/// `label`. The proof demonstrates `log_g u = log_ḡ ū` so decryption shares
/// can be publicly checked later.
pub fn encrypt<R: RngCore + CryptoRng>(
    pk: &Tdh2PublicKey,
    payload_point: &GroupElement,
    label: &Label,
    rng: &mut R,
) -> Tdh2Ciphertext {
    encrypt_with(pk, payload_point, label, Scalar::random(rng), Scalar::random(rng))
}

/// Publicly checks the ciphertext proof under `label`.
pub fn verify_ciphertext(ct: &Tdh2Ciphertext, label: &Label) -> bool {
    let g = GroupElement::generator();
    let gbar = GroupElement::gbar();
    let neg_e = -ct.e;
    let w = GroupElement::msm(&[ct.f, neg_e], &[g, ct.u]);
    let w_bar = GroupElement::msm(&[ct.f, neg_e], &[gbar, ct.u_bar]);
    challenge_h1(&ct.c, &ct.u, &ct.u_bar, &w, &w_bar, label) == ct.e
}

/// Trustee decryption share `u_i = u^{sk_i}` with a Chaum-Pedersen proof of
/// the exponent. Refuses ciphertexts whose proof does not verify.
pub fn create_share<R: RngCore + CryptoRng>(
    sk_i: &Scalar,
    index: u32,
    ct: &Tdh2Ciphertext,
    label: &Label,
    rng: &mut R,
) -> Result<Tdh2Share, Tdh2Error> {
    if !verify_ciphertext(ct, label) {
        return Err(Tdh2Error::InvalidCiphertext);
    }
    let s_i = Scalar::random(rng);
    let u_i = ct.u * *sk_i;
    let u_hat = ct.u * s_i;
    let h_hat = GroupElement::mul_base(&s_i);
    let e_i = challenge_h2(&u_i, &u_hat, &h_hat);
    let f_i = s_i + *sk_i * e_i;
    Ok(Tdh2Share { index, u_i, e_i, f_i })
}

/// Publicly checks a share against the ciphertext and the trustee's
/// verification key `h_i`.
pub fn verify_share(ct: &Tdh2Ciphertext, share: &Tdh2Share, h_i: &GroupElement) -> bool {
    let neg_e = -share.e_i;
    let u_hat = GroupElement::msm(&[share.f_i, neg_e], &[ct.u, share.u_i]);
    let h_hat = GroupElement::msm(&[share.f_i, neg_e], &[GroupElement::generator(), *h_i]);
    challenge_h2(&share.u_i, &u_hat, &h_hat) == share.e_i
}

/// Recovers the payload point `k′ = c · (∏ u_i^{λ_i})⁻¹` from at least `t`
/// pre-verified shares. Verification is the caller's responsibility (the
/// batching fast path must not pay for it twice).
pub fn combine(
    ct: &Tdh2Ciphertext,
    shares: &[Tdh2Share],
    t: usize,
) -> Result<GroupElement, Tdh2Error> {
    if shares.len() < t || t == 0 {
        return Err(Tdh2Error::NotEnoughShares { needed: t.max(1), got: shares.len() });
    }
    let indices: Vec<u32> = shares.iter().map(|s| s.index).collect();
    let lambdas = lagrange_coefficients(&indices)?;
    let points: Vec<GroupElement> = shares.iter().map(|s| s.u_i).collect();
    let pk_r = GroupElement::msm(&lambdas, &points);
    Ok(ct.c - pk_r)
}

impl Tdh2Ciphertext {
    pub fn to_bytes(&self) -> [u8; CIPHERTEXT_LEN] {
        let mut out = [0u8; CIPHERTEXT_LEN];
        out[..32].copy_from_slice(&self.c.to_bytes());
        out[32..64].copy_from_slice(&self.u.to_bytes());
        out[64..96].copy_from_slice(&self.u_bar.to_bytes());
        out[96..128].copy_from_slice(&self.e.to_bytes());
        out[128..160].copy_from_slice(&self.f.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, Tdh2Error> {
        if bytes.len() != CIPHERTEXT_LEN {
            return Err(Tdh2Error::WrongLength { expected: CIPHERTEXT_LEN, got: bytes.len() });
        }
        Ok(Tdh2Ciphertext {
            c: GroupElement::from_bytes(&bytes[..32])?,
            u: GroupElement::from_bytes(&bytes[32..64])?,
            u_bar: GroupElement::from_bytes(&bytes[64..96])?,
            e: Scalar::from_bytes(&bytes[96..128])?,
            f: Scalar::from_bytes(&bytes[128..160])?,
        })
    }
}

impl Tdh2Share {
    pub fn to_bytes(&self) -> [u8; SHARE_LEN] {
        let mut out = [0u8; SHARE_LEN];
        out[..4].copy_from_slice(&self.index.to_be_bytes());
        out[4..36].copy_from_slice(&self.u_i.to_bytes());
        out[36..68].copy_from_slice(&self.e_i.to_bytes());
        out[68..100].copy_from_slice(&self.f_i.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, Tdh2Error> {
        if bytes.len() != SHARE_LEN {
            return Err(Tdh2Error::WrongLength { expected: SHARE_LEN, got: bytes.len() });
        }
        Ok(Tdh2Share {
            index: u32::from_be_bytes(bytes[..4].try_into().expect("length checked")),
            u_i: GroupElement::from_bytes(&bytes[4..36])?,
            e_i: Scalar::from_bytes(&bytes[36..68])?,
            f_i: Scalar::from_bytes(&bytes[68..100])?,
        })
    }
}
