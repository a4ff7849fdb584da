//! The secret-management committee: trustees that watch the chain, cache
//! decryption shares for included transactions, release them at finality,
//! and reshare their committee key at epoch boundaries.
//!
//! A designated consensus-side aggregator collects released shares and
//! reconstructs symmetric keys in one bus round-trip per batch. When a
//! transaction carries a key commitment `h_k`, the aggregator combines the
//! first `t` shares without verifying them and accepts if the reconstructed
//! key matches the commitment, falling back to per-share verification only
//! on mismatch.
//!
//! Byzantine behaviour is scripted per trustee: staying silent, releasing a
//! corrupted share, or leaking the share before finality (the offence the
//! dispute contract slashes).

use std::collections::{BTreeMap, BTreeSet};

use f3b::aead::SymmetricKey;
use f3b::dkg::{self, DkgError, DkgOutput};
use f3b::group::{GroupElement, Label, Scalar};
use f3b::pvss::{self, DleqProof, PvssDeal, PvssDecShare};
use f3b::tdh2::{self, Tdh2Ciphertext, Tdh2PublicKey, Tdh2Share, SHARE_LEN};
use rand::{CryptoRng, RngCore};

use crate::chain::{EpochKeys, ProtocolTag};
use crate::msg::{IdentityKey, RecordKind, SignedRecord};

/// Scripted per-trustee behaviour for fault-injection runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrusteeBehavior {
    #[default]
    Honest,
    /// Never releases a share.
    Silent,
    /// Releases a share whose point is shifted; the proof no longer checks.
    CorruptShare,
    /// Releases its share the moment the transaction is included (the
    /// slashable offence).
    LeakEarly,
}

/// What a trustee holds for one included-but-not-yet-revealed transaction.
#[derive(Debug, Clone)]
enum Cached {
    /// Key material failed verification: nothing to release.
    Refused,
    /// A threshold-ciphertext share, tagged with the committee epoch whose
    /// secret share produced it (mixing epochs breaks interpolation).
    Tdh2 { epoch: u64, share: Tdh2Share },
    /// A per-transaction secret-sharing decryption share, tagged with the
    /// roster epoch the deal was encrypted to.
    Pvss { epoch: u64, share: PvssDecShare },
}

/// One committee member.
pub struct Trustee {
    pub index: u32,
    identity: IdentityKey,
    /// Per-transaction-sharing encryption keypair (long-lived).
    enc_sk: Scalar,
    enc_pk: GroupElement,
    /// Share of the committee's threshold decryption key.
    committee_share: Scalar,
    pending: BTreeMap<u64, Cached>,
    pub behavior: TrusteeBehavior,
}

/// What the committee observed about one included transaction.
pub struct InclusionOutcome {
    /// Trustees that found the key material invalid and cached a refusal.
    pub refusals: Vec<u32>,
    /// Early share releases from byzantine trustees, with the heights at
    /// which an adversary now holds them.
    pub leaks: Vec<SignedRecord>,
}

/// Chain-side fields a trustee needs to process an included transaction.
#[derive(Debug, Clone)]
pub struct TxView<'a> {
    pub tx_id: u64,
    pub protocol: ProtocolTag,
    /// The epoch whose key material the sender targeted.
    pub epoch: u64,
    pub c_k: &'a [u8],
}

const SHARE_PAYLOAD_HEADER: usize = 8 + 8 + 1;

fn encode_share_payload(tx_id: u64, epoch: u64, protocol: ProtocolTag, share: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(SHARE_PAYLOAD_HEADER + share.len());
    out.extend_from_slice(&tx_id.to_be_bytes());
    out.extend_from_slice(&epoch.to_be_bytes());
    out.push(match protocol {
        ProtocolTag::Tdh2 => 0,
        ProtocolTag::Pvss => 1,
    });
    out.extend_from_slice(share);
    out
}

pub(crate) fn encode_dec_share(share: &PvssDecShare) -> [u8; SHARE_LEN] {
    let mut out = [0u8; SHARE_LEN];
    out[..4].copy_from_slice(&share.index.to_be_bytes());
    out[4..36].copy_from_slice(&share.decrypted.to_bytes());
    out[36..68].copy_from_slice(&share.proof.challenge.to_bytes());
    out[68..100].copy_from_slice(&share.proof.response.to_bytes());
    out
}

fn decode_dec_share(bytes: &[u8]) -> Option<PvssDecShare> {
    if bytes.len() != SHARE_LEN {
        return None;
    }
    Some(PvssDecShare {
        index: u32::from_be_bytes(bytes[..4].try_into().ok()?),
        decrypted: GroupElement::from_bytes(&bytes[4..36]).ok()?,
        proof: DleqProof {
            challenge: Scalar::from_bytes(&bytes[36..68]).ok()?,
            response: Scalar::from_bytes(&bytes[68..100]).ok()?,
        },
    })
}

/// A parsed share-release record.
struct ReleasePayload {
    tx_id: u64,
    epoch: u64,
    protocol: ProtocolTag,
    share: Vec<u8>,
}

fn decode_share_payload(payload: &[u8]) -> Option<ReleasePayload> {
    if payload.len() != SHARE_PAYLOAD_HEADER + SHARE_LEN {
        return None;
    }
    let tx_id = u64::from_be_bytes(payload[..8].try_into().ok()?);
    let epoch = u64::from_be_bytes(payload[8..16].try_into().ok()?);
    let protocol = match payload[16] {
        0 => ProtocolTag::Tdh2,
        1 => ProtocolTag::Pvss,
        _ => return None,
    };
    Some(ReleasePayload { tx_id, epoch, protocol, share: payload[17..].to_vec() })
}

impl Trustee {
    pub fn identity_pk(&self) -> GroupElement {
        self.identity.public()
    }

    pub fn enc_pk(&self) -> GroupElement {
        self.enc_pk
    }

    /// Verifies the key material of an included transaction and caches the
    /// decryption share (or a refusal). Returns an early release if this
    /// trustee is scripted to leak.
    fn on_tx_included<R: RngCore + CryptoRng>(
        &mut self,
        view: &TxView<'_>,
        label: &Label,
        committee_epoch: u64,
        rng: &mut R,
    ) -> (bool, Option<SignedRecord>) {
        let cached = match view.protocol {
            ProtocolTag::Tdh2 => match Tdh2Ciphertext::from_bytes(view.c_k) {
                Ok(ct) => {
                    match tdh2::create_share(&self.committee_share, self.index, &ct, label, rng) {
                        Ok(share) => Cached::Tdh2 { epoch: committee_epoch, share },
                        Err(_) => Cached::Refused,
                    }
                }
                Err(_) => Cached::Refused,
            },
            ProtocolTag::Pvss => match PvssDeal::from_bytes(view.c_k) {
                Ok(deal) => {
                    if pvss::verify_deal_share(&deal, self.index, &self.enc_pk, label) {
                        let encrypted = deal.share(self.index).expect("verified above").encrypted;
                        match pvss::decrypt_share(&self.enc_sk, self.index, &encrypted, rng) {
                            Ok(share) => Cached::Pvss { epoch: view.epoch, share },
                            Err(_) => Cached::Refused,
                        }
                    } else {
                        Cached::Refused
                    }
                }
                Err(_) => Cached::Refused,
            },
        };
        let refused = matches!(cached, Cached::Refused);
        let leak = if self.behavior == TrusteeBehavior::LeakEarly && !refused {
            self.release_record(view.tx_id, &cached)
        } else {
            None
        };
        self.pending.insert(view.tx_id, cached);
        (refused, leak)
    }

    fn release_record(&self, tx_id: u64, cached: &Cached) -> Option<SignedRecord> {
        let (epoch, protocol, mut share_bytes) = match cached {
            Cached::Refused => return None,
            Cached::Tdh2 { epoch, share } => {
                (*epoch, ProtocolTag::Tdh2, share.to_bytes().to_vec())
            }
            Cached::Pvss { epoch, share } => {
                (*epoch, ProtocolTag::Pvss, encode_dec_share(share).to_vec())
            }
        };
        if self.behavior == TrusteeBehavior::CorruptShare {
            // Shift the share point: authorship stays genuine, the proof dies.
            let point = GroupElement::from_bytes(&share_bytes[4..36]).expect("own encoding");
            let shifted = point + GroupElement::generator();
            share_bytes[4..36].copy_from_slice(&shifted.to_bytes());
        }
        let payload = encode_share_payload(tx_id, epoch, protocol, &share_bytes);
        Some(SignedRecord::new(&self.identity, RecordKind::ShareRelease, payload))
    }

    /// Releases the cached share for a finalized transaction, or a signed
    /// refusal if verification failed at inclusion. Silent trustees return
    /// nothing.
    fn on_tx_finalized(&mut self, tx_id: u64) -> Option<SignedRecord> {
        if self.behavior == TrusteeBehavior::Silent {
            self.pending.remove(&tx_id);
            return None;
        }
        let cached = self.pending.remove(&tx_id)?;
        match self.release_record(tx_id, &cached) {
            Some(record) => Some(record),
            None => {
                let payload = tx_id.to_be_bytes().to_vec();
                Some(SignedRecord::new(&self.identity, RecordKind::Refusal, payload))
            }
        }
    }
}

/// The trustee committee plus the bookkeeping needed to reshare it.
pub struct Committee {
    pub protocol_label: Label,
    pub threshold: usize,
    pub epoch: u64,
    trustees: Vec<Trustee>,
    dkg_output: DkgOutput,
    /// Committee-wide registry of included-not-yet-finalized transactions,
    /// kept so that a reshare can re-derive every pending share under the
    /// new secret shares (and hand them to joining trustees).
    pending: BTreeMap<u64, PendingTx>,
    /// Trustees scripted as offline for resharing purposes.
    down: BTreeSet<u32>,
}

#[derive(Debug, Clone)]
struct PendingTx {
    protocol: ProtocolTag,
    tdh2_ct: Option<Tdh2Ciphertext>,
}

impl Committee {
    /// Boots a committee from a dealer-generated key (fast; for benchmarks
    /// and large rosters).
    pub fn bootstrap<R: RngCore + CryptoRng>(
        n: usize,
        t: usize,
        label: Label,
        rng: &mut R,
    ) -> Result<Self, DkgError> {
        let (public_key, shares) =
            tdh2::trusted_keygen(n, t, rng).map_err(|_| DkgError::BadThreshold { t, n })?;
        let output = DkgOutput {
            public_key,
            secret_shares: shares.into_iter().collect(),
            threshold: t as u32,
            epoch: 0,
        };
        Ok(Self::from_dkg_output(output, label, rng))
    }

    /// Boots a committee through the full distributed key generation
    /// ceremony (no dealer ever holds the key).
    pub fn bootstrap_dkg<R: RngCore + CryptoRng>(
        n: usize,
        t: usize,
        label: Label,
        rng: &mut R,
    ) -> Result<Self, DkgError> {
        let output = dkg::run_dkg(n, t, rng)?;
        Ok(Self::from_dkg_output(output, label, rng))
    }

    fn from_dkg_output<R: RngCore + CryptoRng>(
        output: DkgOutput,
        label: Label,
        rng: &mut R,
    ) -> Self {
        let trustees = output
            .secret_shares
            .iter()
            .map(|(&index, &committee_share)| {
                let enc_sk = Scalar::random(rng);
                Trustee {
                    index,
                    identity: IdentityKey::generate(rng),
                    enc_sk,
                    enc_pk: GroupElement::mul_base(&enc_sk),
                    committee_share,
                    pending: BTreeMap::new(),
                    behavior: TrusteeBehavior::Honest,
                }
            })
            .collect();
        Committee {
            protocol_label: label,
            threshold: output.threshold as usize,
            epoch: output.epoch,
            trustees,
            dkg_output: output,
            pending: BTreeMap::new(),
            down: BTreeSet::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.trustees.len()
    }

    pub fn committee_key(&self) -> &Tdh2PublicKey {
        &self.dkg_output.public_key
    }

    /// Trustee encryption keys, index order (the roster senders deal to).
    pub fn roster(&self) -> Vec<GroupElement> {
        self.trustees.iter().map(|t| t.enc_pk).collect()
    }

    /// Trustee bus identities, for record-authorship checks.
    pub fn identity_roster(&self) -> BTreeMap<u32, GroupElement> {
        self.trustees.iter().map(|t| (t.index, t.identity.public())).collect()
    }

    /// Key material to publish on chain for the current epoch.
    pub fn epoch_keys(&self) -> EpochKeys {
        EpochKeys {
            epoch: self.epoch,
            threshold: self.threshold as u32,
            committee_key: Some(self.dkg_output.public_key.clone()),
            roster: self.roster(),
        }
    }

    pub fn set_behavior(&mut self, index: u32, behavior: TrusteeBehavior) {
        if let Some(t) = self.trustees.iter_mut().find(|t| t.index == index) {
            t.behavior = behavior;
        }
    }

    /// Marks a trustee offline for future resharing rounds.
    pub fn set_down(&mut self, index: u32, down: bool) {
        if down {
            self.down.insert(index);
        } else {
            self.down.remove(&index);
        }
    }

    /// Every trustee verifies the key material of a freshly included
    /// transaction and caches its share.
    pub fn on_tx_included<R: RngCore + CryptoRng>(
        &mut self,
        view: &TxView<'_>,
        rng: &mut R,
    ) -> InclusionOutcome {
        let tdh2_ct = match view.protocol {
            ProtocolTag::Tdh2 => Tdh2Ciphertext::from_bytes(view.c_k).ok(),
            ProtocolTag::Pvss => None,
        };
        self.pending.insert(view.tx_id, PendingTx { protocol: view.protocol, tdh2_ct });
        let label = self.protocol_label.clone();
        let epoch = self.epoch;
        let mut refusals = Vec::new();
        let mut leaks = Vec::new();
        for trustee in &mut self.trustees {
            let (refused, leak) = trustee.on_tx_included(view, &label, epoch, rng);
            if refused {
                refusals.push(trustee.index);
            }
            leaks.extend(leak);
        }
        InclusionOutcome { refusals, leaks }
    }

    /// Every trustee releases (or refuses) its share for a finalized
    /// transaction; the records go onto the bus.
    pub fn on_tx_finalized(&mut self, tx_id: u64) -> Vec<SignedRecord> {
        self.pending.remove(&tx_id);
        self.trustees.iter_mut().filter_map(|t| t.on_tx_finalized(tx_id)).collect()
    }

    /// Hands the committee key to a (possibly different) roster. The public
    /// key is preserved; surviving trustees keep their identities and
    /// per-transaction caches; joiners start fresh. Every pending
    /// threshold-ciphertext share is re-derived under the new secret shares,
    /// because shares from different epochs cannot be interpolated together.
    pub fn reshare<R: RngCore + CryptoRng>(
        &mut self,
        live_old: &[u32],
        n_new: usize,
        t_new: usize,
        rng: &mut R,
    ) -> Result<EpochKeys, DkgError> {
        let new_output = dkg::reshare(&self.dkg_output, live_old, n_new, t_new, rng)?;
        let live: BTreeSet<u32> = live_old.iter().copied().collect();
        let mut old: BTreeMap<u32, Trustee> =
            std::mem::take(&mut self.trustees).into_iter().map(|t| (t.index, t)).collect();

        let mut trustees = Vec::with_capacity(n_new);
        for j in 1..=n_new as u32 {
            let committee_share = new_output.secret_shares[&j];
            let trustee = match old.remove(&j) {
                Some(mut survivor) if live.contains(&j) => {
                    survivor.committee_share = committee_share;
                    survivor
                }
                _ => {
                    let enc_sk = Scalar::random(rng);
                    Trustee {
                        index: j,
                        identity: IdentityKey::generate(rng),
                        enc_sk,
                        enc_pk: GroupElement::mul_base(&enc_sk),
                        committee_share,
                        pending: BTreeMap::new(),
                        behavior: TrusteeBehavior::Honest,
                    }
                }
            };
            trustees.push(trustee);
        }
        self.trustees = trustees;
        self.threshold = t_new;
        self.epoch = new_output.epoch;
        self.dkg_output = new_output;

        // Re-derive pending threshold-ciphertext shares under the new epoch.
        let label = self.protocol_label.clone();
        let epoch = self.epoch;
        for (&tx_id, pending) in &self.pending {
            let Some(ct) = &pending.tdh2_ct else { continue };
            if pending.protocol != ProtocolTag::Tdh2 {
                continue;
            }
            for trustee in &mut self.trustees {
                match tdh2::create_share(&trustee.committee_share, trustee.index, ct, &label, rng)
                {
                    Ok(share) => {
                        trustee.pending.insert(tx_id, Cached::Tdh2 { epoch, share });
                    }
                    Err(_) => {
                        trustee.pending.insert(tx_id, Cached::Refused);
                    }
                }
            }
        }
        Ok(self.epoch_keys())
    }

    /// Runs the scheduled reshare if `height` is an epoch boundary: every
    /// `epoch_length_blocks` the committee re-deals to the same roster,
    /// minus trustees currently marked down. Returns `None` off-schedule.
    pub fn epoch_tick<R: RngCore + CryptoRng>(
        &mut self,
        height: u64,
        epoch_length_blocks: u64,
        rng: &mut R,
    ) -> Option<Result<EpochKeys, DkgError>> {
        if epoch_length_blocks == 0 || height == 0 || height % epoch_length_blocks != 0 {
            return None;
        }
        let live: Vec<u32> =
            self.trustees.iter().map(|t| t.index).filter(|i| !self.down.contains(i)).collect();
        let n = self.n();
        let t = self.threshold;
        Some(self.reshare(&live, n, t, rng))
    }

    /// Test access to a trustee's current committee share (for mixed-epoch
    /// interpolation checks).
    pub fn committee_share_of(&self, index: u32) -> Option<Scalar> {
        self.trustees.iter().find(|t| t.index == index).map(|t| t.committee_share)
    }
}

/// Per-epoch key material the aggregator verifies against.
#[derive(Debug, Clone)]
pub struct EpochMaterial {
    pub committee_key: Option<Tdh2PublicKey>,
    pub roster: Vec<GroupElement>,
    pub identities: BTreeMap<u32, GroupElement>,
}

/// Counters describing how the aggregator earned its keys.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AggregatorStats {
    /// Batches accepted by combining unverified shares and matching the
    /// on-chain key commitment.
    pub fast_path_hits: u64,
    /// Fast-path attempts that mismatched and forced full verification.
    pub fallbacks: u64,
    /// Individual share proofs verified on the full path.
    pub shares_verified: u64,
    /// Bus records dropped without use: garbled payloads, claimed signers
    /// outside the roster, or signatures failing the deferred check on the
    /// full path.
    pub records_rejected: u64,
}

/// One transaction the aggregator should reconstruct a key for.
#[derive(Debug, Clone)]
pub struct AggregationTask {
    pub tx_id: u64,
    pub protocol: ProtocolTag,
    pub c_k: Vec<u8>,
    pub h_k: Option<[u8; 32]>,
}

/// Result per transaction in a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskOutcome {
    Key(SymmetricKey),
    /// Not enough same-epoch valid shares; carries the best count seen.
    UnderThreshold { valid: usize },
}

/// The designated consensus-side aggregator.
pub struct Aggregator {
    pub threshold: usize,
    epochs: BTreeMap<u64, EpochMaterial>,
    pub stats: AggregatorStats,
}

impl Aggregator {
    pub fn new(threshold: usize) -> Self {
        Aggregator { threshold, epochs: BTreeMap::new(), stats: AggregatorStats::default() }
    }

    pub fn install_epoch(&mut self, epoch: u64, material: EpochMaterial) {
        self.epochs.insert(epoch, material);
    }

    /// Reconstructs keys for a batch of finalized transactions from the
    /// records of one bus round-trip. Under-threshold transactions are
    /// reported; the rest of the batch is unaffected.
    ///
    /// With a key commitment on chain the aggregator is optimistic: it
    /// combines the claimed shares and lets the commitment judge the result,
    /// verifying nothing per record. Signatures and share proofs are checked
    /// only when the optimistic combine misses (or no commitment exists), so
    /// the happy path costs one interpolation per transaction.
    pub fn reconstruct_keys(
        &mut self,
        tasks: &[AggregationTask],
        records: &[SignedRecord],
    ) -> BTreeMap<u64, TaskOutcome> {
        // Bucket share releases by (tx, epoch) and index. Only the cheap
        // checks run here: the claimed signer must be the roster identity for
        // the claimed index. Several records may claim one index (a forger
        // racing the real trustee); all candidates are kept and the fallback
        // sorts them out.
        let mut buckets: BTreeMap<(u64, u64), BTreeMap<u32, Vec<Candidate<'_>>>> = BTreeMap::new();
        for record in records {
            if record.kind != RecordKind::ShareRelease {
                continue;
            }
            let Some(payload) = decode_share_payload(&record.payload) else {
                self.stats.records_rejected += 1;
                continue;
            };
            let index = match payload.protocol {
                ProtocolTag::Tdh2 | ProtocolTag::Pvss => {
                    u32::from_be_bytes(payload.share[..4].try_into().expect("length checked"))
                }
            };
            let authentic = self
                .epochs
                .get(&payload.epoch)
                .and_then(|m| m.identities.get(&index))
                .is_some_and(|pk| *pk == record.signer);
            if !authentic {
                self.stats.records_rejected += 1;
                continue;
            }
            buckets
                .entry((payload.tx_id, payload.epoch))
                .or_default()
                .entry(index)
                .or_default()
                .push(Candidate { record, share: payload.share });
        }

        let mut outcomes = BTreeMap::new();
        for task in tasks {
            let epochs: Vec<u64> = buckets
                .range((task.tx_id, 0)..=(task.tx_id, u64::MAX))
                .map(|((_, e), _)| *e)
                .collect();
            let mut best_valid = 0usize;
            let mut result = None;
            for epoch in epochs {
                let shares = &buckets[&(task.tx_id, epoch)];
                match self.try_reconstruct(task, epoch, shares) {
                    Ok(key) => {
                        result = Some(TaskOutcome::Key(key));
                        break;
                    }
                    Err(valid) => best_valid = best_valid.max(valid),
                }
            }
            outcomes.insert(
                task.tx_id,
                result.unwrap_or(TaskOutcome::UnderThreshold { valid: best_valid }),
            );
        }
        outcomes
    }

    /// Attempts reconstruction from one epoch's share group; on failure
    /// returns the number of individually valid shares found.
    fn try_reconstruct(
        &mut self,
        task: &AggregationTask,
        epoch: u64,
        shares: &BTreeMap<u32, Vec<Candidate<'_>>>,
    ) -> Result<SymmetricKey, usize> {
        let t = self.threshold;
        let Some(material) = self.epochs.get(&epoch) else { return Err(0) };
        match task.protocol {
            ProtocolTag::Tdh2 => {
                let Ok(ct) = Tdh2Ciphertext::from_bytes(&task.c_k) else { return Err(0) };
                let parsed: Vec<Tdh2Share> = shares
                    .values()
                    .filter_map(|c| Tdh2Share::from_bytes(&c.first()?.share).ok())
                    .collect();
                if parsed.len() >= t {
                    if let Some(h_k) = task.h_k {
                        // Fast path: combine unverified, check the commitment.
                        if let Ok(point) = tdh2::combine(&ct, &parsed[..t], t) {
                            let key = SymmetricKey::from_element(&point);
                            if key.commitment() == h_k {
                                self.stats.fast_path_hits += 1;
                                return Ok(key);
                            }
                        }
                        self.stats.fallbacks += 1;
                    }
                }
                let Some(pk) = &material.committee_key else { return Err(0) };
                let mut valid: Vec<Tdh2Share> = Vec::new();
                for candidates in shares.values() {
                    for candidate in candidates {
                        if !candidate.record.verify() {
                            self.stats.records_rejected += 1;
                            continue;
                        }
                        let Ok(share) = Tdh2Share::from_bytes(&candidate.share) else { continue };
                        self.stats.shares_verified += 1;
                        let good = pk
                            .verification_key(share.index)
                            .is_some_and(|h_i| tdh2::verify_share(&ct, &share, h_i));
                        if good {
                            valid.push(share);
                            break;
                        }
                    }
                }
                if valid.len() < t {
                    return Err(valid.len());
                }
                let point = tdh2::combine(&ct, &valid[..t], t).map_err(|_| valid.len())?;
                Ok(SymmetricKey::from_element(&point))
            }
            ProtocolTag::Pvss => {
                let Ok(deal) = PvssDeal::from_bytes(&task.c_k) else { return Err(0) };
                let parsed: Vec<PvssDecShare> = shares
                    .values()
                    .filter_map(|c| decode_dec_share(&c.first()?.share))
                    .collect();
                if parsed.len() >= t {
                    if let Some(h_k) = task.h_k {
                        if let Ok(point) = pvss::reconstruct(&parsed[..t], t) {
                            let key = SymmetricKey::from_element(&point);
                            if key.commitment() == h_k {
                                self.stats.fast_path_hits += 1;
                                return Ok(key);
                            }
                        }
                        self.stats.fallbacks += 1;
                    }
                }
                let mut valid: Vec<PvssDecShare> = Vec::new();
                for candidates in shares.values() {
                    for candidate in candidates {
                        if !candidate.record.verify() {
                            self.stats.records_rejected += 1;
                            continue;
                        }
                        let Some(share) = decode_dec_share(&candidate.share) else { continue };
                        self.stats.shares_verified += 1;
                        let pk_i = material.roster.get(share.index as usize - 1);
                        let entry = deal.share(share.index);
                        let good = match (pk_i, entry) {
                            (Some(pk_i), Some(entry)) => {
                                pvss::verify_dec_share(pk_i, &entry.encrypted, &share)
                            }
                            _ => false,
                        };
                        if good {
                            valid.push(share);
                            break;
                        }
                    }
                }
                if valid.len() < t {
                    return Err(valid.len());
                }
                let point = pvss::reconstruct(&valid[..t], t).map_err(|_| valid.len())?;
                Ok(SymmetricKey::from_element(&point))
            }
        }
    }
}

/// One claimed share release, held unverified until the optimistic path
/// fails.
struct Candidate<'r> {
    record: &'r SignedRecord,
    share: Vec<u8>,
}

/// Builds the aggregator's per-epoch material from a committee.
pub fn epoch_material(committee: &Committee) -> EpochMaterial {
    EpochMaterial {
        committee_key: Some(committee.committee_key().clone()),
        roster: committee.roster(),
        identities: committee.identity_roster(),
    }
}
