//! Distributed key generation and verifiable resharing for the committee key.
//!
//! Key generation is joint-Feldman: every trustee deals a random polynomial
//! with commitments `A_j = g^{a_j}`, each received sub-share is checked
//! against the dealer's commitments, and dealers caught sending inconsistent
//! sub-shares are excluded in a single deterministic complaint round. The
//! final share is the sum of qualified dealers' sub-shares, and the public
//! key is the product of their constant-term commitments.
//!
//! Resharing hands the same secret to a (possibly different) roster: each
//! live old trustee deals its share `sk_i` with a degree `t_new - 1`
//! polynomial whose constant-term commitment must match the old verification
//! key `h_i`, and new trustees Lagrange-combine sub-shares from a fixed
//! qualified set. The committee public key is unchanged by construction, and
//! the check is enforced, not assumed.

use std::collections::BTreeMap;

use rand::{CryptoRng, RngCore};

use crate::group::{
    eval_committed_polynomial, lagrange_coefficients, GroupElement, GroupError, Scalar,
};
use crate::sss::{Polynomial, Share};
use crate::tdh2::Tdh2PublicKey;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DkgError {
    #[error("threshold {t} out of range for {n} participants")]
    BadThreshold { t: usize, n: usize },
    #[error("only {qualified} qualified dealers remain, need {needed}")]
    TooFewQualified { qualified: usize, needed: usize },
    #[error("only {live} live trustees, resharing needs {needed}")]
    TooFewLive { live: usize, needed: usize },
    #[error("dealer {0} appears more than once")]
    DuplicateDealer(u32),
    #[error("dealer {dealer}: constant-term commitment does not match its verification key")]
    WrongConstantTerm { dealer: u32 },
    #[error("dealer {dealer}: sub-share for recipient {recipient} fails the commitment check")]
    InconsistentSubShare { dealer: u32, recipient: u32 },
    #[error("dealer {dealer} is not a member of the old committee")]
    UnknownDealer { dealer: u32 },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// One dealer's contribution: polynomial commitments plus the sub-share for
/// every recipient. Fields are public so tests and fault scripts can corrupt
/// them in flight, exactly like a byzantine dealer would.
#[derive(Debug, Clone)]
pub struct Dealing {
    pub dealer: u32,
    /// `A_j = g^{a_j}` for the dealer's polynomial coefficients.
    pub commitments: Vec<GroupElement>,
    /// Sub-share `(recipient, p(recipient))` for recipients 1..=n.
    pub sub_shares: Vec<Share>,
}

/// Everything a completed ceremony yields: the committee public key,
/// per-trustee secret shares (held together only inside the simulator), the
/// reconstruction threshold, and the epoch counter.
#[derive(Debug, Clone)]
pub struct DkgOutput {
    pub public_key: Tdh2PublicKey,
    pub secret_shares: BTreeMap<u32, Scalar>,
    pub threshold: u32,
    pub epoch: u64,
}

/// Produces one dealer's dealing for recipients 1..=n with threshold `t`.
/// `secret` is `None` for key generation (fresh randomness) and
/// `Some(sk_i)` when resharing an existing share.
pub fn deal<R: RngCore + CryptoRng>(
    dealer: u32,
    n: usize,
    t: usize,
    secret: Option<Scalar>,
    rng: &mut R,
) -> Result<Dealing, DkgError> {
    if t < 1 || t > n || n > u32::MAX as usize {
        return Err(DkgError::BadThreshold { t, n });
    }
    let poly = Polynomial::sample(t, secret, rng).expect("t >= 1 checked above");
    let commitments = poly.coefficients().iter().map(GroupElement::mul_base).collect();
    let sub_shares = (1..=n as u32)
        .map(|i| poly.eval(i).expect("index >= 1"))
        .collect();
    Ok(Dealing { dealer, commitments, sub_shares })
}

/// Recipient-side check of one sub-share against the dealer's commitments:
/// `g^{value} = prod_j A_j^{index^j}`.
pub fn verify_sub_share(commitments: &[GroupElement], sub_share: &Share) -> bool {
    GroupElement::mul_base(&sub_share.value)
        == eval_committed_polynomial(commitments, sub_share.index)
}

/// The deterministic complaint round: a dealing is disqualified if it is
/// malformed or any recipient's sub-share fails the commitment check.
fn dealing_is_valid(dealing: &Dealing, n: usize, t: usize) -> bool {
    if dealing.commitments.len() != t || dealing.sub_shares.len() != n {
        return false;
    }
    for (slot, sub) in dealing.sub_shares.iter().enumerate() {
        if sub.index != slot as u32 + 1 || !verify_sub_share(&dealing.commitments, sub) {
            return false;
        }
    }
    true
}

/// Combines dealings into the committee key material, excluding dealers that
/// failed the complaint round. Returns the output and the excluded dealers.
pub fn finalize(
    n: usize,
    t: usize,
    dealings: &[Dealing],
) -> Result<(DkgOutput, Vec<u32>), DkgError> {
    if t < 1 || t > n {
        return Err(DkgError::BadThreshold { t, n });
    }
    let mut seen = std::collections::BTreeSet::new();
    for d in dealings {
        if !seen.insert(d.dealer) {
            return Err(DkgError::DuplicateDealer(d.dealer));
        }
    }
    let mut qualified = Vec::new();
    let mut excluded = Vec::new();
    for d in dealings {
        if dealing_is_valid(d, n, t) {
            qualified.push(d);
        } else {
            excluded.push(d.dealer);
        }
    }
    if qualified.len() < t {
        return Err(DkgError::TooFewQualified { qualified: qualified.len(), needed: t });
    }

    let mut secret_shares = BTreeMap::new();
    for slot in 0..n {
        let i = slot as u32 + 1;
        let sk_i: Scalar = qualified.iter().map(|d| d.sub_shares[slot].value).sum();
        secret_shares.insert(i, sk_i);
    }
    // Coefficient-wise sum of qualified commitments commits to the joint
    // polynomial; verification keys fall out of it publicly.
    let joint: Vec<GroupElement> = (0..t)
        .map(|j| qualified.iter().map(|d| d.commitments[j]).sum())
        .collect();
    let pk = joint[0];
    let verification_keys: Vec<GroupElement> =
        (1..=n as u32).map(|i| eval_committed_polynomial(&joint, i)).collect();
    let output = DkgOutput {
        public_key: Tdh2PublicKey::new(pk, verification_keys),
        secret_shares,
        threshold: t as u32,
        epoch: 0,
    };
    Ok((output, excluded))
}

/// Runs the full ceremony with all-honest dealers.
pub fn run_dkg<R: RngCore + CryptoRng>(
    n: usize,
    t: usize,
    rng: &mut R,
) -> Result<DkgOutput, DkgError> {
    let dealings = (1..=n as u32)
        .map(|d| deal(d, n, t, None, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let (output, excluded) = finalize(n, t, &dealings)?;
    debug_assert!(excluded.is_empty(), "honest dealings were excluded");
    Ok(output)
}

/// Scripted dealer misbehaviour for fault-injection runs: the dealer's
/// sub-share for `recipient` is corrupted before distribution.
#[derive(Debug, Clone, Copy)]
pub struct DealerFault {
    pub dealer: u32,
    pub recipient: u32,
}

/// Runs the ceremony with the given faults injected; returns the output and
/// the dealers excluded by the complaint round.
pub fn run_dkg_with_faults<R: RngCore + CryptoRng>(
    n: usize,
    t: usize,
    faults: &[DealerFault],
    rng: &mut R,
) -> Result<(DkgOutput, Vec<u32>), DkgError> {
    let mut dealings = (1..=n as u32)
        .map(|d| deal(d, n, t, None, rng))
        .collect::<Result<Vec<_>, _>>()?;
    for fault in faults {
        let dealing = dealings
            .iter_mut()
            .find(|d| d.dealer == fault.dealer)
            .ok_or(DkgError::UnknownDealer { dealer: fault.dealer })?;
        let sub = dealing
            .sub_shares
            .iter_mut()
            .find(|s| s.index == fault.recipient)
            .ok_or(DkgError::UnknownDealer { dealer: fault.recipient })?;
        sub.value += Scalar::ONE;
    }
    finalize(n, t, &dealings)
}

/// One old trustee's resharing contribution for the new roster.
pub fn reshare_deal<R: RngCore + CryptoRng>(
    old_index: u32,
    old_share: Scalar,
    n_new: usize,
    t_new: usize,
    rng: &mut R,
) -> Result<Dealing, DkgError> {
    deal(old_index, n_new, t_new, Some(old_share), rng)
}

/// Combines resharing dealings from the qualified old trustees into new
/// shares. Every dealing is verified: its constant-term commitment must equal
/// the dealer's old verification key, and every sub-share must match its
/// commitments. The resulting public key is checked to be the old one.
pub fn reshare_finalize(
    old: &DkgOutput,
    dealings: &[Dealing],
    n_new: usize,
    t_new: usize,
) -> Result<DkgOutput, DkgError> {
    if t_new < 1 || t_new > n_new {
        return Err(DkgError::BadThreshold { t: t_new, n: n_new });
    }
    let t_old = old.threshold as usize;
    if dealings.len() < t_old {
        return Err(DkgError::TooFewLive { live: dealings.len(), needed: t_old });
    }
    // Fixed qualified set: the lowest t_old contributing old indices.
    let mut sorted: Vec<&Dealing> = dealings.iter().collect();
    sorted.sort_by_key(|d| d.dealer);
    let qualified = &sorted[..t_old];

    for d in qualified {
        let h_i = old
            .public_key
            .verification_key(d.dealer)
            .ok_or(DkgError::UnknownDealer { dealer: d.dealer })?;
        if d.commitments.len() != t_new || d.sub_shares.len() != n_new {
            return Err(DkgError::InconsistentSubShare { dealer: d.dealer, recipient: 0 });
        }
        if d.commitments[0] != *h_i {
            return Err(DkgError::WrongConstantTerm { dealer: d.dealer });
        }
        for sub in &d.sub_shares {
            if !verify_sub_share(&d.commitments, sub) {
                return Err(DkgError::InconsistentSubShare {
                    dealer: d.dealer,
                    recipient: sub.index,
                });
            }
        }
    }

    let indices: Vec<u32> = qualified.iter().map(|d| d.dealer).collect();
    let lambdas = lagrange_coefficients(&indices)?;

    // sk'_j = sum_i lambda_i * subshare_{i -> j}; the combined commitment
    // polynomial D_l = sum_i lambda_i * B_{i,l} yields the new verification
    // keys and must have the old public key as its constant term.
    let mut secret_shares = BTreeMap::new();
    for slot in 0..n_new {
        let j = slot as u32 + 1;
        let sk_j: Scalar = qualified
            .iter()
            .zip(&lambdas)
            .map(|(d, lambda)| *lambda * d.sub_shares[slot].value)
            .sum();
        secret_shares.insert(j, sk_j);
    }
    let joint: Vec<GroupElement> = (0..t_new)
        .map(|l| {
            let coeffs: Vec<GroupElement> = qualified.iter().map(|d| d.commitments[l]).collect();
            GroupElement::msm(&lambdas, &coeffs)
        })
        .collect();
    if joint[0] != old.public_key.pk {
        return Err(DkgError::WrongConstantTerm { dealer: 0 });
    }
    let verification_keys: Vec<GroupElement> =
        (1..=n_new as u32).map(|j| eval_committed_polynomial(&joint, j)).collect();
    Ok(DkgOutput {
        public_key: Tdh2PublicKey::new(old.public_key.pk, verification_keys),
        secret_shares,
        threshold: t_new as u32,
        epoch: old.epoch + 1,
    })
}

/// Full resharing pass: the listed live old trustees re-deal their shares to
/// a fresh roster of `n_new` trustees with threshold `t_new`.
pub fn reshare<R: RngCore + CryptoRng>(
    old: &DkgOutput,
    live_old: &[u32],
    n_new: usize,
    t_new: usize,
    rng: &mut R,
) -> Result<DkgOutput, DkgError> {
    let t_old = old.threshold as usize;
    if live_old.len() < t_old {
        return Err(DkgError::TooFewLive { live: live_old.len(), needed: t_old });
    }
    let mut dealings = Vec::with_capacity(live_old.len());
    for &i in live_old {
        let sk_i = *old
            .secret_shares
            .get(&i)
            .ok_or(DkgError::UnknownDealer { dealer: i })?;
        dealings.push(reshare_deal(i, sk_i, n_new, t_new, rng)?);
    }
    reshare_finalize(old, &dealings, n_new, t_new)
}
