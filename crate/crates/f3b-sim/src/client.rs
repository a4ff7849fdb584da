//! Sender-side envelope construction.
//!
//! A sender seals its inner transaction under a fresh symmetric key and
//! encrypts that key to the committee: either directly under the committee's
//! threshold key, or as a publicly verifiable per-transaction deal to the
//! trustee roster (precomputable ahead of time, single use).
//!
//! The envelope signer and the inner-transaction signer are independent
//! keys, so a sender can submit through a decoy account: the mempool then
//! reveals nothing linking the envelope to the real initiator.

use f3b::aead::{self, derive_key, SymmetricKey};
use f3b::group::GroupElement;
use f3b::pvss;
use f3b::tdh2;
use rand::{CryptoRng, RngCore};

use crate::chain::{Address, address_of, Chain, InnerTx, ProtocolTag, WriteTx};
use crate::msg::IdentityKey;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    /// The cached epoch key is no longer accepted; fetch the current epoch
    /// and rebuild. Retriable.
    #[error("epoch {have} key is stale (chain is at epoch {current}); refresh and retry")]
    StaleEpochKey { have: u64, current: u64 },
    #[error("epoch {0} was never published on this chain")]
    UnknownEpoch(u64),
    #[error("epoch {0} has no committee encryption key")]
    MissingCommitteeKey(u64),
    #[error("epoch {0} has an empty trustee roster")]
    EmptyRoster(u64),
    #[error("key material construction failed: {0}")]
    Deal(String),
}

/// A sender's signing identity; the account address is the hash of the
/// public key.
pub struct SenderKeypair {
    identity: IdentityKey,
}

impl SenderKeypair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        SenderKeypair { identity: IdentityKey::generate(rng) }
    }

    pub fn public(&self) -> GroupElement {
        self.identity.public()
    }

    pub fn address(&self) -> Address {
        address_of(&self.identity.public())
    }

    /// Signs a transfer as this sender's inner transaction.
    pub fn transfer(&self, to: Address, amount: u64, call: Vec<u8>, nonce: u64) -> InnerTx {
        InnerTx::new_signed(&self.identity, to, amount, call, nonce)
    }
}

fn check_epoch(chain: &Chain, epoch: u64) -> Result<(), ClientError> {
    if chain.epoch_keys(epoch).is_none() {
        return Err(ClientError::UnknownEpoch(epoch));
    }
    if !chain.epoch_accepted(epoch) {
        return Err(ClientError::StaleEpochKey { have: epoch, current: chain.current_epoch() });
    }
    Ok(())
}

/// Builds a threshold-encrypted envelope: the inner transaction is sealed
/// under a fresh key, and the key is encrypted to the committee key of
/// `epoch` under the chain's label. `with_commitment` additionally publishes
/// `h_k = H(k)`, enabling the aggregator's cheap verification path.
///
/// The inner transaction carries its own signature and may be signed by a
/// different key than the envelope.
pub fn build_tdh2_tx<R: RngCore + CryptoRng>(
    sender: &SenderKeypair,
    chain: &Chain,
    epoch: u64,
    inner: &InnerTx,
    tx_id: u64,
    with_commitment: bool,
    rng: &mut R,
) -> Result<WriteTx, ClientError> {
    check_epoch(chain, epoch)?;
    let keys = chain.epoch_keys(epoch).expect("checked above");
    let pk = keys.committee_key.as_ref().ok_or(ClientError::MissingCommitteeKey(epoch))?;

    let payload_point = GroupElement::random(rng);
    let key = derive_key(&payload_point);
    let c_tx = aead::seal(&key, &inner.to_bytes(), &[], rng);
    let ct = tdh2::encrypt(pk, &payload_point, chain.label(), rng);
    Ok(WriteTx::new_signed(
        &sender.identity,
        tx_id,
        ProtocolTag::Tdh2,
        epoch,
        c_tx,
        ct.to_bytes().to_vec(),
        with_commitment.then(|| key.commitment()),
    ))
}

/// Key material prepared ahead of submission: a verifiable deal of a fresh
/// secret to the trustee roster, plus the symmetric key it hides.
///
/// Deliberately neither `Clone` nor `Copy`: [`build_pvss_tx`] consumes it,
/// so one deal can never back two envelopes.
#[derive(Debug)]
pub struct PreparedDeal {
    c_k: Vec<u8>,
    key: SymmetricKey,
    epoch: u64,
}

impl PreparedDeal {
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// The symmetric key this deal shares (e.g. to pre-seal payloads).
    pub fn key(&self) -> &SymmetricKey {
        &self.key
    }

    /// Serialized size of the key material as it will sit on chain.
    pub fn key_material_len(&self) -> usize {
        self.c_k.len()
    }
}

/// Deals a fresh secret to `epoch`'s trustee roster. This is the expensive
/// part of a per-transaction-sharing submission and can run long before the
/// transaction exists.
pub fn precompute_pvss<R: RngCore + CryptoRng>(
    chain: &Chain,
    epoch: u64,
    rng: &mut R,
) -> Result<PreparedDeal, ClientError> {
    check_epoch(chain, epoch)?;
    let keys = chain.epoch_keys(epoch).expect("checked above");
    if keys.roster.is_empty() {
        return Err(ClientError::EmptyRoster(epoch));
    }
    let (deal, secret) = pvss::deal(&keys.roster, keys.threshold as usize, chain.label(), rng)
        .map_err(|e| ClientError::Deal(e.to_string()))?;
    Ok(PreparedDeal { c_k: deal.to_bytes(), key: derive_key(&secret), epoch })
}

/// Builds an envelope from a precomputed deal, consuming it. If the deal's
/// epoch went stale while it sat in the drawer, this fails retriably and the
/// caller must precompute against the new roster.
pub fn build_pvss_tx<R: RngCore + CryptoRng>(
    sender: &SenderKeypair,
    chain: &Chain,
    prepared: PreparedDeal,
    inner: &InnerTx,
    tx_id: u64,
    with_commitment: bool,
    rng: &mut R,
) -> Result<WriteTx, ClientError> {
    check_epoch(chain, prepared.epoch)?;
    let c_tx = aead::seal(&prepared.key, &inner.to_bytes(), &[], rng);
    Ok(WriteTx::new_signed(
        &sender.identity,
        tx_id,
        ProtocolTag::Pvss,
        prepared.epoch,
        c_tx,
        prepared.c_k,
        with_commitment.then(|| prepared.key.commitment()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainConfig, EpochKeys, TxState};
    use crate::smc::{epoch_material, AggregationTask, Aggregator, Committee, TaskOutcome, TxView};
    use f3b::group::Label;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn rng() -> StdRng {
        StdRng::seed_from_u64(83)
    }

    struct World {
        chain: Chain,
        committee: Committee,
        aggregator: Aggregator,
    }

    fn world(n: usize, t: usize, r: &mut StdRng) -> World {
        let config = ChainConfig {
            block_time_ms: 1000,
            confirmations: 2,
            ..ChainConfig::default()
        };
        let mut chain = Chain::new(config).unwrap();
        let committee = Committee::bootstrap(n, t, chain.label().clone(), r).unwrap();
        let mut aggregator = Aggregator::new(t);
        aggregator.install_epoch(committee.epoch, epoch_material(&committee));
        chain.install_epoch(committee.epoch_keys());
        World { chain, committee, aggregator }
    }

    /// Drives a submitted tx through inclusion, finality, committee release,
    /// aggregation, and reveal; returns the reveal outcome state.
    fn run_to_reveal(w: &mut World, tx_id: u64, r: &mut StdRng) -> TxState {
        let mut revealed_state = None;
        for _ in 0..10 {
            let (block, finalized) = w.chain.advance_block();
            for id in &block.tx_ids {
                let rec = w.chain.tx(*id).unwrap();
                let view = TxView {
                    tx_id: *id,
                    protocol: rec.tx.protocol,
                    epoch: rec.tx.epoch,
                    c_k: &rec.tx.c_k.clone(),
                };
                w.committee.on_tx_included(&view, r);
            }
            let mut records = Vec::new();
            let mut tasks = Vec::new();
            for id in &finalized {
                records.extend(w.committee.on_tx_finalized(*id));
                let rec = w.chain.tx(*id).unwrap();
                tasks.push(AggregationTask {
                    tx_id: *id,
                    protocol: rec.tx.protocol,
                    c_k: rec.tx.c_k.clone(),
                    h_k: rec.tx.h_k,
                });
            }
            if !tasks.is_empty() {
                for (id, outcome) in w.aggregator.reconstruct_keys(&tasks, &records) {
                    if let TaskOutcome::Key(key) = outcome {
                        let result = w.chain.reveal_and_execute(id, &key).unwrap();
                        if id == tx_id {
                            revealed_state = Some(result.state);
                        }
                    }
                }
            }
            if revealed_state.is_some() {
                break;
            }
        }
        revealed_state.expect("tx should reveal within the horizon")
    }

    #[test]
    fn tdh2_envelope_executes_end_to_end() {
        let mut r = rng();
        let mut w = world(4, 2, &mut r);
        let alice = SenderKeypair::generate(&mut r);
        let bob = SenderKeypair::generate(&mut r);
        w.chain.fund(alice.address(), 100_000);

        let inner = alice.transfer(bob.address(), 1234, vec![], 0);
        let tx = build_tdh2_tx(&alice, &w.chain, 0, &inner, 1, true, &mut r).unwrap();
        assert!(tx.h_k.is_some());
        w.chain.submit_tx(tx).unwrap();

        let state = run_to_reveal(&mut w, 1, &mut r);
        assert_eq!(state, TxState::Executed);
        assert_eq!(w.chain.balance(&bob.address()), 1234);
        // Commitment present: the aggregator took the cheap path.
        assert_eq!(w.aggregator.stats.fast_path_hits, 1);
        assert_eq!(w.chain.total_units(), w.chain.minted());
    }

    #[test]
    fn pvss_envelope_executes_end_to_end() {
        let mut r = rng();
        let mut w = world(5, 3, &mut r);
        let alice = SenderKeypair::generate(&mut r);
        let bob = SenderKeypair::generate(&mut r);
        w.chain.fund(alice.address(), 100_000);

        let prepared = precompute_pvss(&w.chain, 0, &mut r).unwrap();
        assert_eq!(prepared.key_material_len(), 9 + 100 * 5 + 32 * 3);
        let inner = alice.transfer(bob.address(), 77, vec![], 0);
        let tx = build_pvss_tx(&alice, &w.chain, prepared, &inner, 1, false, &mut r).unwrap();
        w.chain.submit_tx(tx).unwrap();

        let state = run_to_reveal(&mut w, 1, &mut r);
        assert_eq!(state, TxState::Executed);
        assert_eq!(w.chain.balance(&bob.address()), 77);
        // Single use is enforced by the type system: `prepared` moved into
        // `build_pvss_tx`, so a second envelope needs a fresh precompute.
        let prepared2 = precompute_pvss(&w.chain, 0, &mut r).unwrap();
        let inner2 = alice.transfer(bob.address(), 1, vec![], 1);
        assert!(build_pvss_tx(&alice, &w.chain, prepared2, &inner2, 2, false, &mut r).is_ok());
    }

    #[test]
    fn decoy_envelope_signer_executes_the_real_senders_intent() {
        let mut r = rng();
        let mut w = world(4, 2, &mut r);
        let victim = SenderKeypair::generate(&mut r);
        let decoy = SenderKeypair::generate(&mut r);
        let merchant = SenderKeypair::generate(&mut r);
        w.chain.fund(victim.address(), 50_000);
        w.chain.fund(decoy.address(), 50_000);

        // The inner transfer is signed by the victim; the envelope by the
        // decoy, who also fronts the deposit.
        let inner = victim.transfer(merchant.address(), 999, vec![], 0);
        let tx = build_tdh2_tx(&decoy, &w.chain, 0, &inner, 1, true, &mut r).unwrap();
        assert_eq!(tx.sender_address(), decoy.address());
        let deposit = w.chain.required_deposit(&tx);
        w.chain.submit_tx(tx).unwrap();
        assert_eq!(w.chain.balance(&decoy.address()), 50_000 - deposit);

        let state = run_to_reveal(&mut w, 1, &mut r);
        assert_eq!(state, TxState::Executed);
        assert_eq!(w.chain.balance(&merchant.address()), 999);
        assert_eq!(w.chain.balance(&victim.address()), 50_000 - 999);
    }

    #[test]
    fn stale_epoch_is_a_distinct_retriable_error() {
        let mut r = rng();
        let mut w = world(4, 2, &mut r);
        let alice = SenderKeypair::generate(&mut r);
        w.chain.fund(alice.address(), 100_000);

        // Precompute against epoch 0, then the chain rolls to epoch 1 and
        // the grace window expires.
        let prepared = precompute_pvss(&w.chain, 0, &mut r).unwrap();
        w.committee.reshare(&[1, 2, 3, 4], 4, 2, &mut r).unwrap();
        w.chain.install_epoch(w.committee.epoch_keys());
        for _ in 0..=w.chain.config().epoch_grace_blocks {
            w.chain.advance_block();
        }

        let inner = alice.transfer(alice.address(), 0, vec![], 0);
        let err =
            build_pvss_tx(&alice, &w.chain, prepared, &inner, 1, false, &mut r).unwrap_err();
        assert_eq!(err, ClientError::StaleEpochKey { have: 0, current: 1 });
        let err = build_tdh2_tx(&alice, &w.chain, 0, &inner, 1, false, &mut r).unwrap_err();
        assert_eq!(err, ClientError::StaleEpochKey { have: 0, current: 1 });

        // Rebuilding against the current epoch succeeds.
        let tx = build_tdh2_tx(&alice, &w.chain, 1, &inner, 1, false, &mut r).unwrap();
        assert!(w.chain.submit_tx(tx).is_ok());

        // Unknown epoch is a different, non-retriable error.
        let err = build_tdh2_tx(&alice, &w.chain, 9, &inner, 2, false, &mut r).unwrap_err();
        assert_eq!(err, ClientError::UnknownEpoch(9));
    }

    #[test]
    fn committee_key_is_required_for_threshold_envelopes() {
        let mut r = rng();
        let config = ChainConfig::default();
        let mut chain = Chain::new(config).unwrap();
        chain.install_epoch(EpochKeys {
            epoch: 0,
            threshold: 1,
            committee_key: None,
            roster: vec![],
        });
        let alice = SenderKeypair::generate(&mut r);
        let inner = alice.transfer(alice.address(), 0, vec![], 0);
        assert_eq!(
            build_tdh2_tx(&alice, &chain, 0, &inner, 1, false, &mut r).unwrap_err(),
            ClientError::MissingCommitteeKey(0)
        );
        assert_eq!(
            precompute_pvss(&chain, 0, &mut r).unwrap_err(),
            ClientError::EmptyRoster(0)
        );
    }
}
