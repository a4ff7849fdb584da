//! Schoenmakers-style publicly verifiable secret sharing.
//!
//! The dealer encrypts each share to a trustee's public key and proves, with
//! a Chaum-Pedersen DLEQ against polynomial commitments over a label-derived
//! generator, that every encrypted share is consistent. Anyone holding the
//! deal, the roster, and the label can audit it without secrets. Trustees
//! later publish decrypted shares with their own DLEQ proofs, and the
//! group-element secret is rebuilt by Lagrange interpolation in the exponent.

use rand::{CryptoRng, RngCore};

use crate::group::{
    derive_generator, eval_committed_polynomial, lagrange_coefficients, GroupElement, GroupError,
    Label, Scalar, ScalarHash, ENCODED_LEN,
};
use crate::sss::Polynomial;

const DOMAIN_DEAL_PROOF: &[u8] = b"f3b/v1/pvss-deal-share";
const DOMAIN_DEC_PROOF: &[u8] = b"f3b/v1/pvss-dec-share";

pub const DEAL_VERSION: u8 = 1;
/// Header: version byte + n + t (both u32, big-endian).
pub const DEAL_HEADER_LEN: usize = 9;
/// Per-trustee entry: index + encrypted share + proof.
pub const DEAL_SHARE_ENTRY_LEN: usize = 4 + ENCODED_LEN + 2 * ENCODED_LEN;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PvssError {
    #[error("threshold {t} out of range for {n} trustees")]
    BadThreshold { t: usize, n: usize },
    #[error("need at least {needed} decrypted shares, got {got}")]
    NotEnoughShares { needed: usize, got: usize },
    #[error("secret key must be nonzero")]
    ZeroSecretKey,
    #[error("deal encoding malformed: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Chaum-Pedersen proof that two images share one discrete log:
/// `image1 = base1^x` and `image2 = base2^x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DleqProof {
    pub challenge: Scalar,
    pub response: Scalar,
}

impl DleqProof {
    fn transcript(
        domain: &'static [u8],
        statement: [&GroupElement; 4],
        a_1: &GroupElement,
        a_2: &GroupElement,
    ) -> Scalar {
        let [base1, image1, base2, image2] = statement;
        ScalarHash::new(domain)
            .point(base1)
            .point(image1)
            .point(base2)
            .point(image2)
            .point(a_1)
            .point(a_2)
            .finalize()
    }

    /// Proves knowledge of `x` with `image1 = base1^x`, `image2 = base2^x`.
    pub fn prove<R: RngCore + CryptoRng>(
        domain: &'static [u8],
        base1: &GroupElement,
        base2: &GroupElement,
        x: &Scalar,
        rng: &mut R,
    ) -> (DleqProof, GroupElement, GroupElement) {
        let image1 = *base1 * *x;
        let image2 = *base2 * *x;
        let w = Scalar::random(rng);
        let a_1 = *base1 * w;
        let a_2 = *base2 * w;
        let challenge =
            Self::transcript(domain, [base1, &image1, base2, &image2], &a_1, &a_2);
        let response = w - *x * challenge;
        (DleqProof { challenge, response }, image1, image2)
    }

    pub fn verify(
        &self,
        domain: &'static [u8],
        base1: &GroupElement,
        image1: &GroupElement,
        base2: &GroupElement,
        image2: &GroupElement,
    ) -> bool {
        let a_1 = GroupElement::msm(&[self.response, self.challenge], &[*base1, *image1]);
        let a_2 = GroupElement::msm(&[self.response, self.challenge], &[*base2, *image2]);
        Self::transcript(domain, [base1, image1, base2, image2], &a_1, &a_2) == self.challenge
    }
}

/// One trustee's slice of a deal: `ŝ_i = pk_i^{s(i)}` plus the dealer's
/// consistency proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PvssEncryptedShare {
    pub index: u32,
    pub encrypted: GroupElement,
    pub proof: DleqProof,
}

/// A complete dealing: encrypted per-trustee shares and the polynomial
/// commitments `b_j = h^{a_j}` they are checked against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PvssDeal {
    pub shares: Vec<PvssEncryptedShare>,
    pub commitments: Vec<GroupElement>,
    pub threshold: u32,
}

/// A trustee's published decryption `s_i = ŝ_i^{sk_i⁻¹} = g^{s(i)}` with a
/// proof it used the key matching its roster entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PvssDecShare {
    pub index: u32,
    pub decrypted: GroupElement,
    pub proof: DleqProof,
}

/// Deals a fresh secret to the roster: returns the public deal and the
/// secret point `s = g^{s(0)}` (from which the payload key is derived).
pub fn deal<R: RngCore + CryptoRng>(
    trustee_pks: &[GroupElement],
    t: usize,
    label: &Label,
    rng: &mut R,
) -> Result<(PvssDeal, GroupElement), PvssError> {
    let n = trustee_pks.len();
    if t < 1 || t > n || n > u32::MAX as usize {
        return Err(PvssError::BadThreshold { t, n });
    }
    let h = derive_generator(label);
    let poly = Polynomial::sample(t, None, rng).expect("t >= 1 checked above");
    let commitments: Vec<GroupElement> =
        poly.coefficients().iter().map(|a_j| h * *a_j).collect();
    let mut shares = Vec::with_capacity(n);
    for (slot, pk_i) in trustee_pks.iter().enumerate() {
        let index = slot as u32 + 1;
        let s_i = poly.eval(index).expect("index >= 1").value;
        // image1 = h^{s(i)} = X_i, image2 = pk_i^{s(i)} = ŝ_i.
        let (proof, _x_i, encrypted) = DleqProof::prove(DOMAIN_DEAL_PROOF, &h, pk_i, &s_i, rng);
        shares.push(PvssEncryptedShare { index, encrypted, proof });
    }
    let secret_point = GroupElement::mul_base(&poly.secret());
    Ok((PvssDeal { shares, commitments, threshold: t as u32 }, secret_point))
}

impl PvssDeal {
    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn share(&self, index: u32) -> Option<&PvssEncryptedShare> {
        self.shares.iter().find(|s| s.index == index)
    }
}

/// Publicly audits one encrypted share of a deal against the trustee's
/// roster key and the deal's commitments, under the given label.
pub fn verify_deal_share(
    deal: &PvssDeal,
    index: u32,
    pk_i: &GroupElement,
    label: &Label,
) -> bool {
    let Some(entry) = deal.share(index) else { return false };
    if deal.commitments.len() != deal.threshold as usize {
        return false;
    }
    let h = derive_generator(label);
    let x_i = eval_committed_polynomial(&deal.commitments, index);
    entry.proof.verify(DOMAIN_DEAL_PROOF, &h, &x_i, pk_i, &entry.encrypted)
}

/// Trustee-side decryption `s_i = ŝ_i^{sk_i⁻¹}` with a proof that the same
/// key links the roster entry `pk_i = g^{sk_i}` and the pair `(s_i, ŝ_i)`.
pub fn decrypt_share<R: RngCore + CryptoRng>(
    sk_i: &Scalar,
    index: u32,
    encrypted: &GroupElement,
    rng: &mut R,
) -> Result<PvssDecShare, PvssError> {
    let inv = sk_i.invert().ok_or(PvssError::ZeroSecretKey)?;
    let decrypted = *encrypted * inv;
    // image1 = g^{sk_i} = pk_i, image2 = s_i^{sk_i} = ŝ_i.
    let (proof, _pk_i, _s_hat) =
        DleqProof::prove(DOMAIN_DEC_PROOF, &GroupElement::generator(), &decrypted, sk_i, rng);
    Ok(PvssDecShare { index, decrypted, proof })
}

/// Checks a published decryption against the trustee's roster key and the
/// encrypted share it claims to open.
pub fn verify_dec_share(
    pk_i: &GroupElement,
    encrypted: &GroupElement,
    dec: &PvssDecShare,
) -> bool {
    dec.proof.verify(
        DOMAIN_DEC_PROOF,
        &GroupElement::generator(),
        pk_i,
        &dec.decrypted,
        encrypted,
    )
}

/// Rebuilds the dealer's secret point `s = ∏ s_i^{λ_i}` from at least `t`
/// verified decryptions with distinct indices.
pub fn reconstruct(dec_shares: &[PvssDecShare], t: usize) -> Result<GroupElement, PvssError> {
    if dec_shares.len() < t || t == 0 {
        return Err(PvssError::NotEnoughShares { needed: t.max(1), got: dec_shares.len() });
    }
    let indices: Vec<u32> = dec_shares.iter().map(|s| s.index).collect();
    let lambdas = lagrange_coefficients(&indices)?;
    let points: Vec<GroupElement> = dec_shares.iter().map(|s| s.decrypted).collect();
    Ok(GroupElement::msm(&lambdas, &points))
}

impl PvssDeal {
    /// `9 + 100·n + 32·t` bytes: header, per-trustee entries, commitments.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.push(DEAL_VERSION);
        out.extend_from_slice(&(self.shares.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.threshold.to_be_bytes());
        for s in &self.shares {
            out.extend_from_slice(&s.index.to_be_bytes());
            out.extend_from_slice(&s.encrypted.to_bytes());
            out.extend_from_slice(&s.proof.challenge.to_bytes());
            out.extend_from_slice(&s.proof.response.to_bytes());
        }
        for b in &self.commitments {
            out.extend_from_slice(&b.to_bytes());
        }
        out
    }

    pub fn serialized_len(&self) -> usize {
        DEAL_HEADER_LEN
            + DEAL_SHARE_ENTRY_LEN * self.shares.len()
            + ENCODED_LEN * self.commitments.len()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PvssError> {
        if bytes.len() < DEAL_HEADER_LEN {
            return Err(PvssError::Malformed("shorter than header"));
        }
        if bytes[0] != DEAL_VERSION {
            return Err(PvssError::Malformed("unknown version"));
        }
        let n = u32::from_be_bytes(bytes[1..5].try_into().expect("header length checked"));
        let t = u32::from_be_bytes(bytes[5..9].try_into().expect("header length checked"));
        if t < 1 || t > n {
            return Err(PvssError::Malformed("threshold out of range"));
        }
        let expect =
            DEAL_HEADER_LEN + DEAL_SHARE_ENTRY_LEN * n as usize + ENCODED_LEN * t as usize;
        if bytes.len() != expect {
            return Err(PvssError::Malformed("length does not match header"));
        }
        let mut shares = Vec::with_capacity(n as usize);
        let mut at = DEAL_HEADER_LEN;
        let mut prev_index = 0u32;
        for _ in 0..n {
            let index =
                u32::from_be_bytes(bytes[at..at + 4].try_into().expect("length checked"));
            if index <= prev_index {
                return Err(PvssError::Malformed("indices must be strictly increasing"));
            }
            prev_index = index;
            let encrypted = GroupElement::from_bytes(&bytes[at + 4..at + 36])?;
            let challenge = Scalar::from_bytes(&bytes[at + 36..at + 68])?;
            let response = Scalar::from_bytes(&bytes[at + 68..at + 100])?;
            shares.push(PvssEncryptedShare {
                index,
                encrypted,
                proof: DleqProof { challenge, response },
            });
            at += DEAL_SHARE_ENTRY_LEN;
        }
        let mut commitments = Vec::with_capacity(t as usize);
        for _ in 0..t {
            commitments.push(GroupElement::from_bytes(&bytes[at..at + ENCODED_LEN])?);
            at += ENCODED_LEN;
        }
        Ok(PvssDeal { shares, commitments, threshold: t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn rng() -> StdRng {
        StdRng::seed_from_u64(31)
    }

    fn label() -> Label {
        Label::new(b"chain-A".to_vec()).unwrap()
    }

    struct Roster {
        sks: Vec<Scalar>,
        pks: Vec<GroupElement>,
    }

    fn roster(n: usize, r: &mut StdRng) -> Roster {
        let sks: Vec<Scalar> = (0..n).map(|_| Scalar::random(r)).collect();
        let pks = sks.iter().map(GroupElement::mul_base).collect();
        Roster { sks, pks }
    }

    #[test]
    fn honest_deal_verifies_for_every_trustee() {
        let mut r = rng();
        let ros = roster(4, &mut r);
        let (deal, _secret) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        for i in 1..=4u32 {
            assert!(verify_deal_share(&deal, i, &ros.pks[i as usize - 1], &label()));
        }
        // Unknown index fails cleanly.
        assert!(!verify_deal_share(&deal, 5, &ros.pks[0], &label()));
    }

    #[test]
    fn degenerate_threshold_one_commitment_is_constant() {
        let mut r = rng();
        let ros = roster(3, &mut r);
        let (d, _) = deal(&ros.pks, 1, &label(), &mut r).unwrap();
        assert_eq!(d.commitments.len(), 1);
        for i in 1..=3u32 {
            // With a constant polynomial, X_i = b_0 for every index.
            assert_eq!(eval_committed_polynomial(&d.commitments, i), d.commitments[0]);
        }
    }

    #[test]
    fn full_pipeline_every_t_subset_recovers_the_secret() {
        let mut r = rng();
        let ros = roster(5, &mut r);
        let (d, secret) = deal(&ros.pks, 3, &label(), &mut r).unwrap();
        let mut decs = Vec::new();
        for i in 1..=5u32 {
            let entry = d.share(i).unwrap();
            assert!(verify_deal_share(&d, i, &ros.pks[i as usize - 1], &label()));
            let dec =
                decrypt_share(&ros.sks[i as usize - 1], i, &entry.encrypted, &mut r).unwrap();
            assert!(verify_dec_share(&ros.pks[i as usize - 1], &entry.encrypted, &dec));
            decs.push(dec);
        }
        for a in 0..5 {
            for b in a + 1..5 {
                for c in b + 1..5 {
                    let subset = vec![decs[a].clone(), decs[b].clone(), decs[c].clone()];
                    assert_eq!(reconstruct(&subset, 3).unwrap(), secret);
                }
            }
        }
    }

    #[test]
    fn decryption_inverts_encryption() {
        let mut r = rng();
        let ros = roster(3, &mut r);
        let (d, _) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        let entry = d.share(2).unwrap();
        let dec = decrypt_share(&ros.sks[1], 2, &entry.encrypted, &mut r).unwrap();
        // Re-encrypting the decrypted share gives back ŝ_i.
        assert_eq!(dec.decrypted * ros.sks[1], entry.encrypted);
        assert!(matches!(
            decrypt_share(&Scalar::ZERO, 1, &entry.encrypted, &mut r),
            Err(PvssError::ZeroSecretKey)
        ));
    }

    #[test]
    fn tampered_encrypted_share_rejected() {
        let mut r = rng();
        let ros = roster(4, &mut r);
        let (mut d, _) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        // ŝ_2 · pk_2 is what a dealer lying by one about s(2) would send.
        d.shares[1].encrypted = d.shares[1].encrypted + ros.pks[1];
        assert!(!verify_deal_share(&d, 2, &ros.pks[1], &label()));
        assert!(verify_deal_share(&d, 1, &ros.pks[0], &label()));
    }

    #[test]
    fn commitments_from_another_deal_rejected() {
        let mut r = rng();
        let ros = roster(4, &mut r);
        let (d1, _) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        let (d2, _) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        let frankendeal = PvssDeal { commitments: d2.commitments, ..d1 };
        for i in 1..=4u32 {
            assert!(!verify_deal_share(&frankendeal, i, &ros.pks[i as usize - 1], &label()));
        }
    }

    #[test]
    fn deal_binds_to_its_label() {
        let mut r = rng();
        let ros = roster(3, &mut r);
        let (d, _) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        let other = Label::new(b"chain-B".to_vec()).unwrap();
        for i in 1..=3u32 {
            assert!(verify_deal_share(&d, i, &ros.pks[i as usize - 1], &label()));
            assert!(!verify_deal_share(&d, i, &ros.pks[i as usize - 1], &other));
        }
    }

    #[test]
    fn forged_decryptions_rejected() {
        let mut r = rng();
        let ros = roster(3, &mut r);
        let (d, _) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        let entry = d.share(1).unwrap();

        // Wrong key (sk+1) produces a proof that does not verify.
        let wrong_sk = ros.sks[0] + Scalar::ONE;
        let forged = decrypt_share(&wrong_sk, 1, &entry.encrypted, &mut r).unwrap();
        assert!(!verify_dec_share(&ros.pks[0], &entry.encrypted, &forged));

        // Honest proof, substituted point.
        let honest = decrypt_share(&ros.sks[0], 1, &entry.encrypted, &mut r).unwrap();
        let shifted = PvssDecShare {
            decrypted: honest.decrypted + GroupElement::generator(),
            ..honest.clone()
        };
        assert!(!verify_dec_share(&ros.pks[0], &entry.encrypted, &shifted));

        // Proof transplanted from another trustee.
        let entry2 = d.share(2).unwrap();
        let other = decrypt_share(&ros.sks[1], 2, &entry2.encrypted, &mut r).unwrap();
        let transplanted = PvssDecShare { proof: other.proof, ..honest };
        assert!(!verify_dec_share(&ros.pks[0], &entry.encrypted, &transplanted));
    }

    #[test]
    fn reconstruct_threshold_rules() {
        let mut r = rng();
        let ros = roster(3, &mut r);
        let (d, secret) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        let decs: Vec<PvssDecShare> = (0..3)
            .map(|i| {
                decrypt_share(
                    &ros.sks[i],
                    i as u32 + 1,
                    &d.shares[i].encrypted,
                    &mut r,
                )
                .unwrap()
            })
            .collect();
        assert!(matches!(
            reconstruct(&decs[..1], 2),
            Err(PvssError::NotEnoughShares { needed: 2, got: 1 })
        ));
        assert_eq!(reconstruct(&decs[..2], 2).unwrap(), secret);

        // n = t = 1: the single decrypted share is the secret (λ = 1).
        let solo = roster(1, &mut r);
        let (d1, s1) = deal(&solo.pks, 1, &label(), &mut r).unwrap();
        let dec = decrypt_share(&solo.sks[0], 1, &d1.shares[0].encrypted, &mut r).unwrap();
        assert_eq!(dec.decrypted, s1);
        assert_eq!(reconstruct(&[dec], 1).unwrap(), s1);
    }

    #[test]
    fn deal_rejects_bad_thresholds() {
        let mut r = rng();
        let ros = roster(3, &mut r);
        assert!(deal(&ros.pks, 0, &label(), &mut r).is_err());
        assert!(deal(&ros.pks, 4, &label(), &mut r).is_err());
    }

    #[test]
    fn serialization_roundtrip_and_size_formula() {
        let mut r = rng();
        for (n, t) in [(4usize, 2usize), (8, 5), (16, 9)] {
            let ros = roster(n, &mut r);
            let (d, _) = deal(&ros.pks, t, &label(), &mut r).unwrap();
            let bytes = d.to_bytes();
            assert_eq!(bytes.len(), DEAL_HEADER_LEN + 100 * n + 32 * t);
            assert_eq!(bytes.len(), d.serialized_len());
            let back = PvssDeal::from_bytes(&bytes).unwrap();
            assert_eq!(back, d);
            for i in 1..=n as u32 {
                assert!(verify_deal_share(&back, i, &ros.pks[i as usize - 1], &label()));
            }
        }
    }

    #[test]
    fn from_bytes_rejects_malformed_encodings() {
        let mut r = rng();
        let ros = roster(4, &mut r);
        let (d, _) = deal(&ros.pks, 2, &label(), &mut r).unwrap();
        let good = d.to_bytes();

        assert!(PvssDeal::from_bytes(&good[..5]).is_err());
        assert!(PvssDeal::from_bytes(&good[..good.len() - 1]).is_err());

        let mut bad_version = good.clone();
        bad_version[0] = 9;
        assert!(PvssDeal::from_bytes(&bad_version).is_err());

        let mut bad_threshold = good.clone();
        bad_threshold[5..9].copy_from_slice(&9u32.to_be_bytes());
        assert!(PvssDeal::from_bytes(&bad_threshold).is_err());

        let mut bad_index = good.clone();
        bad_index[DEAL_HEADER_LEN..DEAL_HEADER_LEN + 4].copy_from_slice(&3u32.to_be_bytes());
        assert!(PvssDeal::from_bytes(&bad_index).is_err());

        let mut bad_point = good;
        bad_point[DEAL_HEADER_LEN + 4..DEAL_HEADER_LEN + 36].copy_from_slice(&[0xff; 32]);
        assert!(PvssDeal::from_bytes(&bad_point).is_err());
    }
}
