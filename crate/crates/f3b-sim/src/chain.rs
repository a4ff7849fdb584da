//! Discrete-event simulated blockchain.
//!
//! Blocks are produced at a fixed cadence; a transaction included at height
//! `n` is final after `m` confirmations, i.e. when block `n + m` is produced.
//! Write transactions carry an encrypted payload (`c_tx`) and encrypted key
//! material (`c_k`); execution is deferred until the committee releases the
//! key after finality. The chain escrows a per-byte storage deposit at
//! submission, refunds a configured fraction on reveal, and burns the rest.
//! A dispute contract slashes trustees proven to have leaked a decryption
//! share before the reveal.
//!
//! All state transitions happen in simulated time (the block clock); the
//! chain never consults a wall clock, so runs are reproducible bit-for-bit.

use std::collections::{BTreeMap, VecDeque};

use f3b::aead::{self, SymmetricKey};
use f3b::group::{GroupElement, Label};
use f3b::pvss::{self, PvssDeal, PvssDecShare};
use f3b::tdh2::{self, Tdh2Ciphertext, Tdh2PublicKey, Tdh2Share};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::msg::{verify as verify_sig, IdentityKey, Signature};

/// Simulated account address: hash of an identity public key.
pub type Address = [u8; 32];

pub fn address_of(pk: &GroupElement) -> Address {
    let mut h = Sha256::new();
    h.update(b"f3b-sim/v1/address");
    h.update(pk.to_bytes());
    h.finalize().into()
}

/// Exact rational in fee-unit arithmetic; avoids floating point in anything
/// that must conserve units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u32,
    pub den: u32,
}

impl Fraction {
    pub fn new(num: u32, den: u32) -> Option<Self> {
        if den == 0 {
            None
        } else {
            Some(Fraction { num, den })
        }
    }

    pub fn is_proper(&self) -> bool {
        self.num <= self.den
    }

    /// `floor(x * num / den)` in wide arithmetic.
    pub fn apply(&self, x: u64) -> u64 {
        (u128::from(x) * u128::from(self.num) / u128::from(self.den)) as u64
    }
}

/// Which protocol the envelope's key material uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolTag {
    Tdh2,
    Pvss,
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    /// Block time `L_b` in milliseconds.
    pub block_time_ms: u64,
    /// Confirmations `m` required for finality.
    pub confirmations: u64,
    /// Chain identity bound into all ciphertexts (genesis hash stand-in).
    pub label: Label,
    /// Storage deposit charged per serialized envelope byte.
    pub storage_deposit_per_byte: u64,
    /// Flat execution fee added to the deposit.
    pub flat_execution_fee: u64,
    /// Fraction of the deposit returned on reveal; the rest is burned.
    pub refund_fraction: Fraction,
    /// Blocks after finality within which the released key must be recorded.
    pub key_write_deadline_blocks: u64,
    /// Max transactions included per block.
    pub block_capacity: usize,
    /// Blocks after an epoch rollover during which the previous epoch's
    /// key is still accepted for new submissions.
    pub epoch_grace_blocks: u64,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), ChainError> {
        if self.block_time_ms == 0
            || self.confirmations == 0
            || self.key_write_deadline_blocks == 0
            || self.block_capacity == 0
            || !self.refund_fraction.is_proper()
        {
            return Err(ChainError::BadConfig);
        }
        Ok(())
    }
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            block_time_ms: 12_000,
            confirmations: 64,
            label: Label::new(b"f3b-sim-devnet".to_vec()).expect("non-empty"),
            storage_deposit_per_byte: 1,
            flat_execution_fee: 10,
            refund_fraction: Fraction { num: 9, den: 10 },
            key_write_deadline_blocks: 2,
            block_capacity: 4096,
            epoch_grace_blocks: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("configuration violates a chain invariant")]
    BadConfig,
    #[error("envelope signature invalid or malformed")]
    MalformedEnvelope,
    #[error("duplicate transaction id {0}")]
    DuplicateTxId(u64),
    #[error("balance too low: need {needed}, have {available}")]
    InsufficientBalance { needed: u64, available: u64 },
    #[error("epoch {submitted} not accepted at height {height} (current epoch {current}); refresh the key and retry")]
    StaleEpoch { submitted: u64, current: u64, height: u64 },
    #[error("unknown transaction {0}")]
    UnknownTx(u64),
    #[error("transaction {0} is not finalized")]
    NotFinalized(u64),
    #[error("transaction {0} already revealed")]
    AlreadyRevealed(u64),
    #[error("key write deadline passed for transaction {0}")]
    KeyDeadlineExceeded(u64),
    #[error("released key does not match the sender's commitment")]
    KeyRejected,
    #[error("plaintiff balance too low for the dispute stake")]
    StakeUnfunded,
    #[error("trustee {0} has no posted collateral")]
    NoCollateral(u32),
}

/// The signed inner transaction hidden inside `c_tx`: a balance transfer
/// plus an opaque call payload with deterministic success.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerTx {
    pub from_pk: GroupElement,
    pub to: Address,
    pub amount: u64,
    /// Opaque call data; a leading [`CALL_REVERT_MARKER`] byte makes the
    /// call revert deterministically.
    pub call: Vec<u8>,
    pub nonce: u64,
    pub signature: Signature,
}

/// Leading call byte that makes execution revert (deterministic failure knob
/// for adversarial scenarios).
pub const CALL_REVERT_MARKER: u8 = 0xff;

impl InnerTx {
    fn signed_bytes(
        from_pk: &GroupElement,
        to: &Address,
        amount: u64,
        call: &[u8],
        nonce: u64,
    ) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 32 + 8 + 8 + 4 + call.len());
        out.extend_from_slice(&from_pk.to_bytes());
        out.extend_from_slice(to);
        out.extend_from_slice(&amount.to_be_bytes());
        out.extend_from_slice(&nonce.to_be_bytes());
        out.extend_from_slice(&(call.len() as u32).to_be_bytes());
        out.extend_from_slice(call);
        out
    }

    pub fn new_signed(
        key: &IdentityKey,
        to: Address,
        amount: u64,
        call: Vec<u8>,
        nonce: u64,
    ) -> Self {
        let from_pk = key.public();
        let body = Self::signed_bytes(&from_pk, &to, amount, &call, nonce);
        InnerTx { from_pk, to, amount, call, nonce, signature: key.sign(&body) }
    }

    pub fn verify_signature(&self) -> bool {
        let body = Self::signed_bytes(&self.from_pk, &self.to, self.amount, &self.call, self.nonce);
        verify_sig(&self.from_pk, &body, &self.signature)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Self::signed_bytes(&self.from_pk, &self.to, self.amount, &self.call, self.nonce);
        out.extend_from_slice(&self.signature.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() < 32 + 32 + 8 + 8 + 4 + 64 {
            return None;
        }
        let from_pk = GroupElement::from_bytes(&bytes[..32]).ok()?;
        let to: Address = bytes[32..64].try_into().ok()?;
        let amount = u64::from_be_bytes(bytes[64..72].try_into().ok()?);
        let nonce = u64::from_be_bytes(bytes[72..80].try_into().ok()?);
        let call_len = u32::from_be_bytes(bytes[80..84].try_into().ok()?) as usize;
        if bytes.len() != 84 + call_len + 64 {
            return None;
        }
        let call = bytes[84..84 + call_len].to_vec();
        let signature = Signature::from_bytes(&bytes[84 + call_len..]).ok()?;
        Some(InnerTx { from_pk, to, amount, call, nonce, signature })
    }
}

/// The on-chain envelope: encrypted payload, encrypted key material, and an
/// optional commitment `h_k = H(k)` enabling the fast reveal path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WriteTx {
    pub tx_id: u64,
    pub sender_pk: GroupElement,
    pub protocol: ProtocolTag,
    /// Committee epoch whose key material `c_k` targets.
    pub epoch: u64,
    pub c_tx: Vec<u8>,
    pub c_k: Vec<u8>,
    pub h_k: Option<[u8; 32]>,
    pub signature: Signature,
}

impl WriteTx {
    fn signed_bytes(
        tx_id: u64,
        sender_pk: &GroupElement,
        protocol: ProtocolTag,
        epoch: u64,
        c_tx: &[u8],
        c_k: &[u8],
        h_k: &Option<[u8; 32]>,
    ) -> Vec<u8> {
        let mut out = Vec::with_capacity(58 + c_tx.len() + c_k.len() + 33);
        out.extend_from_slice(&tx_id.to_be_bytes());
        out.extend_from_slice(&sender_pk.to_bytes());
        out.push(match protocol {
            ProtocolTag::Tdh2 => 0,
            ProtocolTag::Pvss => 1,
        });
        out.extend_from_slice(&epoch.to_be_bytes());
        match h_k {
            Some(h) => {
                out.push(1);
                out.extend_from_slice(h);
            }
            None => out.push(0),
        }
        out.extend_from_slice(&(c_tx.len() as u32).to_be_bytes());
        out.extend_from_slice(c_tx);
        out.extend_from_slice(&(c_k.len() as u32).to_be_bytes());
        out.extend_from_slice(c_k);
        out
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new_signed(
        key: &IdentityKey,
        tx_id: u64,
        protocol: ProtocolTag,
        epoch: u64,
        c_tx: Vec<u8>,
        c_k: Vec<u8>,
        h_k: Option<[u8; 32]>,
    ) -> Self {
        let sender_pk = key.public();
        let body = Self::signed_bytes(tx_id, &sender_pk, protocol, epoch, &c_tx, &c_k, &h_k);
        WriteTx {
            tx_id,
            sender_pk,
            protocol,
            epoch,
            c_tx,
            c_k,
            h_k,
            signature: key.sign(&body),
        }
    }

    pub fn verify_signature(&self) -> bool {
        let body = Self::signed_bytes(
            self.tx_id,
            &self.sender_pk,
            self.protocol,
            self.epoch,
            &self.c_tx,
            &self.c_k,
            &self.h_k,
        );
        verify_sig(&self.sender_pk, &body, &self.signature)
    }

    /// Serialized envelope size, the base of the storage deposit.
    pub fn serialized_len(&self) -> usize {
        let h = if self.h_k.is_some() { 33 } else { 1 };
        8 + 32 + 1 + 8 + h + 4 + self.c_tx.len() + 4 + self.c_k.len() + 64
    }

    pub fn sender_address(&self) -> Address {
        address_of(&self.sender_pk)
    }
}

/// Lifecycle of a write transaction. States only ever move forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TxState {
    Pending,
    Included,
    Finalized,
    Revealed,
    Executed,
    Failed,
}

/// Full per-transaction record: the envelope, its lifecycle position, and
/// the simulated timestamps of each transition.
#[derive(Debug, Clone)]
pub struct TxRecord {
    pub tx: WriteTx,
    pub state: TxState,
    pub deposit_escrowed: u64,
    pub submitted_at_ms: u64,
    pub included_at: Option<u64>,
    pub included_at_ms: Option<u64>,
    pub finalized_at: Option<u64>,
    pub finalized_at_ms: Option<u64>,
    pub revealed_at_ms: Option<u64>,
    pub revealed_key: Option<SymmetricKey>,
    pub plaintext: Option<Vec<u8>>,
    pub fail_reason: Option<String>,
    pub refund_paid: u64,
    pub key_recorded_at: Option<u64>,
}

impl TxRecord {
    fn new(tx: WriteTx, deposit: u64, now_ms: u64) -> Self {
        TxRecord {
            tx,
            state: TxState::Pending,
            deposit_escrowed: deposit,
            submitted_at_ms: now_ms,
            included_at: None,
            included_at_ms: None,
            finalized_at: None,
            finalized_at_ms: None,
            revealed_at_ms: None,
            revealed_key: None,
            plaintext: None,
            fail_reason: None,
            refund_paid: 0,
            key_recorded_at: None,
        }
    }
}

/// One produced block.
#[derive(Debug, Clone)]
pub struct Block {
    pub height: u64,
    pub timestamp_ms: u64,
    pub tx_ids: Vec<u64>,
    /// Keys recorded on chain this block (tx id, released key).
    pub key_records: Vec<(u64, SymmetricKey)>,
}

/// Committee key material published for one epoch.
#[derive(Debug, Clone)]
pub struct EpochKeys {
    pub epoch: u64,
    /// Committee decryption threshold `t`.
    pub threshold: u32,
    /// Long-lived committee key (threshold-encryption mode).
    pub committee_key: Option<Tdh2PublicKey>,
    /// Trustee encryption keys (per-transaction secret-sharing mode).
    pub roster: Vec<GroupElement>,
}

/// Trace record: one line of the newline-delimited event log. Contains only
/// simulated time, never wall-clock, so traces are seed-reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tx_id: Option<u64>,
    pub event: String,
    pub sim_time_ms: u64,
    pub block_height: u64,
}

/// Event names used in traces.
pub mod events {
    pub const BLOCK: &str = "block";
    pub const SUBMITTED: &str = "submitted";
    pub const INCLUDED: &str = "included";
    pub const FINALIZED: &str = "finalized";
    pub const REVEALED: &str = "revealed";
    pub const EXECUTED: &str = "executed";
    pub const FAILED: &str = "failed";
    pub const KEY_RECORDED: &str = "key_recorded";
    pub const EPOCH_INSTALLED: &str = "epoch_installed";
    pub const DISPUTE_SLASH: &str = "dispute_slash";
    pub const DISPUTE_DISMISSED: &str = "dispute_dismissed";
    pub const SHARE_RELEASED: &str = "share_released";
    pub const SHARE_REFUSED: &str = "share_refused";
    pub const SHARE_LEAKED: &str = "share_leaked";
    pub const RESHARE_DONE: &str = "reshare_done";
    pub const RESHARE_ABORTED: &str = "reshare_aborted";
}

/// Receipt returned by a successful submission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    pub tx_id: u64,
    pub deposit: u64,
}

/// What a reveal did: final state plus the refund actually paid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionOutcome {
    pub state: TxState,
    pub reason: Option<String>,
    pub refund_paid: u64,
}

/// Evidence attached to a premature-share-release dispute.
#[derive(Debug, Clone)]
pub enum DisputeEvidence {
    Tdh2(Tdh2Share),
    Pvss(PvssDecShare),
}

impl DisputeEvidence {
    pub fn trustee_index(&self) -> u32 {
        match self {
            DisputeEvidence::Tdh2(s) => s.index,
            DisputeEvidence::Pvss(s) => s.index,
        }
    }
}

/// Dispute outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Evidence verified and arrived pre-reveal: the trustee's collateral
    /// moves to the plaintiff.
    Slash { trustee: u32, collateral: u64 },
    /// No slash; the plaintiff's stake is burned.
    Dismissed { reason: String },
}

/// Everything observable about a mempool entry: ciphertext only.
#[derive(Debug, Clone)]
pub struct MempoolEntry {
    pub tx_id: u64,
    pub sender: Address,
    pub c_tx: Vec<u8>,
    pub c_k: Vec<u8>,
    pub h_k: Option<[u8; 32]>,
}

pub struct Chain {
    config: ChainConfig,
    height: u64,
    sim_time_ms: u64,
    balances: BTreeMap<Address, u64>,
    collateral: BTreeMap<u32, u64>,
    burned: u64,
    minted: u128,
    mempool: VecDeque<u64>,
    txs: BTreeMap<u64, TxRecord>,
    blocks: Vec<Block>,
    pending_key_writes: Vec<(u64, SymmetricKey)>,
    epochs: BTreeMap<u64, (EpochKeys, u64)>,
    current_epoch: u64,
    trace: Vec<TraceEvent>,
}

impl Chain {
    pub fn new(config: ChainConfig) -> Result<Self, ChainError> {
        config.validate()?;
        Ok(Chain {
            config,
            height: 0,
            sim_time_ms: 0,
            balances: BTreeMap::new(),
            collateral: BTreeMap::new(),
            burned: 0,
            minted: 0,
            mempool: VecDeque::new(),
            txs: BTreeMap::new(),
            blocks: Vec::new(),
            pending_key_writes: Vec::new(),
            epochs: BTreeMap::new(),
            current_epoch: 0,
            trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn sim_time_ms(&self) -> u64 {
        self.sim_time_ms
    }

    pub fn label(&self) -> &Label {
        &self.config.label
    }

    pub fn balance(&self, addr: &Address) -> u64 {
        self.balances.get(addr).copied().unwrap_or(0)
    }

    pub fn burned(&self) -> u64 {
        self.burned
    }

    pub fn trustee_collateral(&self, index: u32) -> u64 {
        self.collateral.get(&index).copied().unwrap_or(0)
    }

    pub fn tx(&self, tx_id: u64) -> Option<&TxRecord> {
        self.txs.get(&tx_id)
    }

    /// Transactions still awaiting inclusion, finality, or reveal.
    pub fn open_tx_count(&self) -> usize {
        self.txs
            .values()
            .filter(|r| {
                matches!(r.state, TxState::Pending | TxState::Included | TxState::Finalized)
            })
            .count()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn current_epoch(&self) -> u64 {
        self.current_epoch
    }

    pub fn epoch_keys(&self, epoch: u64) -> Option<&EpochKeys> {
        self.epochs.get(&epoch).map(|(k, _)| k)
    }

    /// Sum of every fee-unit pool the chain tracks. Constant across all
    /// operations except explicit minting.
    pub fn total_units(&self) -> u128 {
        let balances: u128 = self.balances.values().map(|&v| u128::from(v)).sum();
        let escrow: u128 = self
            .txs
            .values()
            .map(|r| u128::from(r.deposit_escrowed))
            .sum();
        let collateral: u128 = self.collateral.values().map(|&v| u128::from(v)).sum();
        balances + escrow + collateral + u128::from(self.burned)
    }

    /// Total units ever minted via [`Chain::fund`] and
    /// [`Chain::post_collateral`]; conservation means
    /// `total_units() == minted()` at all times.
    pub fn minted(&self) -> u128 {
        self.minted
    }

    /// Setup-phase minting of spendable balance.
    pub fn fund(&mut self, addr: Address, amount: u64) {
        *self.balances.entry(addr).or_insert(0) += amount;
        self.minted += u128::from(amount);
    }

    /// Setup-phase posting of trustee collateral.
    pub fn post_collateral(&mut self, trustee: u32, amount: u64) {
        *self.collateral.entry(trustee).or_insert(0) += amount;
        self.minted += u128::from(amount);
    }

    /// Publishes an epoch's committee key material. The newest epoch becomes
    /// current; the previous one stays valid for `epoch_grace_blocks`.
    pub fn install_epoch(&mut self, keys: EpochKeys) {
        let epoch = keys.epoch;
        self.epochs.insert(epoch, (keys, self.height));
        if epoch >= self.current_epoch {
            self.current_epoch = epoch;
        }
        self.push_event(None, events::EPOCH_INSTALLED);
    }

    /// Whether a submission targeting `epoch` would currently be accepted:
    /// either the current epoch, or its predecessor inside the grace window.
    pub fn epoch_accepted(&self, epoch: u64) -> bool {
        if epoch == self.current_epoch {
            return self.epochs.contains_key(&epoch);
        }
        // Previous epoch inside the grace window, measured from the moment
        // the succeeding epoch was installed.
        if epoch + 1 == self.current_epoch {
            if let Some((_, installed_at)) = self.epochs.get(&self.current_epoch) {
                return self.height <= installed_at + self.config.epoch_grace_blocks
                    && self.epochs.contains_key(&epoch);
            }
        }
        false
    }

    fn push_event(&mut self, tx_id: Option<u64>, event: &str) {
        self.trace.push(TraceEvent {
            tx_id,
            event: event.to_string(),
            sim_time_ms: self.sim_time_ms,
            block_height: self.height,
        });
    }

    /// Record an event originating outside the chain (trustees, aggregator)
    /// at the current simulated instant.
    pub fn observe_event(&mut self, tx_id: Option<u64>, event: &str) {
        self.push_event(tx_id, event);
    }

    /// The deposit a given envelope would owe.
    pub fn required_deposit(&self, tx: &WriteTx) -> u64 {
        self.config.storage_deposit_per_byte * tx.serialized_len() as u64
            + self.config.flat_execution_fee
    }

    pub fn submit_tx(&mut self, tx: WriteTx) -> Result<Receipt, ChainError> {
        if !tx.verify_signature() {
            return Err(ChainError::MalformedEnvelope);
        }
        if self.txs.contains_key(&tx.tx_id) {
            return Err(ChainError::DuplicateTxId(tx.tx_id));
        }
        if !self.epoch_accepted(tx.epoch) {
            return Err(ChainError::StaleEpoch {
                submitted: tx.epoch,
                current: self.current_epoch,
                height: self.height,
            });
        }
        let deposit = self.required_deposit(&tx);
        let sender = tx.sender_address();
        let available = self.balance(&sender);
        if available < deposit {
            return Err(ChainError::InsufficientBalance { needed: deposit, available });
        }
        *self.balances.get_mut(&sender).expect("funded above") -= deposit;
        let tx_id = tx.tx_id;
        self.txs.insert(tx_id, TxRecord::new(tx, deposit, self.sim_time_ms));
        self.mempool.push_back(tx_id);
        self.push_event(Some(tx_id), events::SUBMITTED);
        Ok(Receipt { tx_id, deposit })
    }

    /// Ciphertext-only view of the mempool (what a front-runner sees).
    pub fn mempool_view(&self) -> Vec<MempoolEntry> {
        self.mempool
            .iter()
            .map(|id| {
                let r = &self.txs[id];
                MempoolEntry {
                    tx_id: r.tx.tx_id,
                    sender: r.tx.sender_address(),
                    c_tx: r.tx.c_tx.clone(),
                    c_k: r.tx.c_k.clone(),
                    h_k: r.tx.h_k,
                }
            })
            .collect()
    }

    /// Produces the next block: advances the clock by one block time,
    /// includes pending transactions FIFO up to capacity, drains queued key
    /// records, and reports which transactions just crossed finality.
    pub fn advance_block(&mut self) -> (Block, Vec<u64>) {
        self.height += 1;
        self.sim_time_ms = self.height * self.config.block_time_ms;
        self.push_event(None, events::BLOCK);

        let mut tx_ids = Vec::new();
        while tx_ids.len() < self.config.block_capacity {
            let Some(tx_id) = self.mempool.pop_front() else { break };
            let record = self.txs.get_mut(&tx_id).expect("mempool entries exist");
            record.state = TxState::Included;
            record.included_at = Some(self.height);
            record.included_at_ms = Some(self.sim_time_ms);
            tx_ids.push(tx_id);
        }
        for tx_id in &tx_ids {
            self.push_event(Some(*tx_id), events::INCLUDED);
        }

        let key_records = std::mem::take(&mut self.pending_key_writes);
        for (tx_id, _) in &key_records {
            let record = self.txs.get_mut(tx_id).expect("revealed txs exist");
            record.key_recorded_at = Some(self.height);
            self.push_event(Some(*tx_id), events::KEY_RECORDED);
        }

        let mut finalized = Vec::new();
        for (tx_id, record) in self.txs.iter_mut() {
            if record.state == TxState::Included {
                let n = record.included_at.expect("included txs have a height");
                if self.height >= n + self.config.confirmations {
                    record.state = TxState::Finalized;
                    record.finalized_at = Some(self.height);
                    record.finalized_at_ms = Some(self.sim_time_ms);
                    finalized.push(*tx_id);
                }
            }
        }
        for tx_id in &finalized {
            self.push_event(Some(*tx_id), events::FINALIZED);
        }

        let block = Block {
            height: self.height,
            timestamp_ms: self.sim_time_ms,
            tx_ids,
            key_records,
        };
        self.blocks.push(block.clone());
        (block, finalized)
    }

    fn fail_tx(&mut self, tx_id: u64, reason: &str, forfeit: bool) -> ExecutionOutcome {
        let record = self.txs.get_mut(&tx_id).expect("caller checked existence");
        record.state = TxState::Failed;
        record.fail_reason = Some(reason.to_string());
        if forfeit {
            self.burned += record.deposit_escrowed;
            record.deposit_escrowed = 0;
        }
        self.push_event(Some(tx_id), events::FAILED);
        ExecutionOutcome { state: TxState::Failed, reason: Some(reason.to_string()), refund_paid: 0 }
    }

    /// Reveals a finalized transaction with the committee-released key and
    /// executes the decrypted inner transaction.
    ///
    /// On success the sender gets `refund_fraction` of the deposit back and
    /// the key is queued for on-chain recording in the next block (which must
    /// fall inside the post-finality deadline window). Decryption or
    /// commitment failures forfeit the deposit.
    pub fn reveal_and_execute(
        &mut self,
        tx_id: u64,
        key: &SymmetricKey,
    ) -> Result<ExecutionOutcome, ChainError> {
        let record = self.txs.get(&tx_id).ok_or(ChainError::UnknownTx(tx_id))?;
        match record.state {
            TxState::Finalized => {}
            TxState::Revealed | TxState::Executed | TxState::Failed => {
                return Err(ChainError::AlreadyRevealed(tx_id))
            }
            _ => return Err(ChainError::NotFinalized(tx_id)),
        }
        let finalized_at = record.finalized_at.expect("finalized txs have a height");
        if self.height + 1 > finalized_at + self.config.key_write_deadline_blocks {
            return Err(ChainError::KeyDeadlineExceeded(tx_id));
        }

        // Sender's key commitment, if present, gates everything else.
        if let Some(h_k) = record.tx.h_k {
            if key.commitment() != h_k {
                self.fail_tx(tx_id, "key commitment mismatch", true);
                return Err(ChainError::KeyRejected);
            }
        }

        let c_tx = record.tx.c_tx.clone();
        let plaintext = match aead::open(key, &c_tx, &[]) {
            Ok(p) => p,
            Err(_) => return Ok(self.fail_tx(tx_id, "payload authentication failed", true)),
        };
        let Some(inner) = InnerTx::from_bytes(&plaintext) else {
            return Ok(self.fail_tx(tx_id, "inner transaction malformed", true));
        };
        if !inner.verify_signature() {
            return Ok(self.fail_tx(tx_id, "inner signature invalid", true));
        }

        // The transaction is now revealed; execution happens at the same
        // simulated instant.
        {
            let record = self.txs.get_mut(&tx_id).expect("existence checked");
            record.state = TxState::Revealed;
            record.revealed_at_ms = Some(self.sim_time_ms);
            record.revealed_key = Some(key.clone());
            record.plaintext = Some(plaintext);
        }
        self.push_event(Some(tx_id), events::REVEALED);
        self.pending_key_writes.push((tx_id, key.clone()));

        // Decryptable and well-formed: the storage deposit refund applies
        // whether or not the inner transaction reverts.
        let refund = {
            let record = self.txs.get_mut(&tx_id).expect("existence checked");
            let refund = self.config.refund_fraction.apply(record.deposit_escrowed);
            let burn = record.deposit_escrowed - refund;
            record.deposit_escrowed = 0;
            record.refund_paid = refund;
            self.burned += burn;
            refund
        };
        let sender = self.txs[&tx_id].tx.sender_address();
        *self.balances.entry(sender).or_insert(0) += refund;

        // Execute: transfer then call, atomically.
        let from = address_of(&inner.from_pk);
        let from_balance = self.balance(&from);
        let outcome = if from_balance < inner.amount {
            let record = self.txs.get_mut(&tx_id).expect("existence checked");
            record.state = TxState::Failed;
            record.fail_reason = Some("transfer reverted: insufficient funds".to_string());
            self.push_event(Some(tx_id), events::FAILED);
            ExecutionOutcome {
                state: TxState::Failed,
                reason: Some("transfer reverted: insufficient funds".to_string()),
                refund_paid: refund,
            }
        } else if inner.call.first() == Some(&CALL_REVERT_MARKER) {
            let record = self.txs.get_mut(&tx_id).expect("existence checked");
            record.state = TxState::Failed;
            record.fail_reason = Some("call reverted".to_string());
            self.push_event(Some(tx_id), events::FAILED);
            ExecutionOutcome {
                state: TxState::Failed,
                reason: Some("call reverted".to_string()),
                refund_paid: refund,
            }
        } else {
            *self.balances.get_mut(&from).expect("balance read above") -= inner.amount;
            *self.balances.entry(inner.to).or_insert(0) += inner.amount;
            let record = self.txs.get_mut(&tx_id).expect("existence checked");
            record.state = TxState::Executed;
            self.push_event(Some(tx_id), events::EXECUTED);
            ExecutionOutcome { state: TxState::Executed, reason: None, refund_paid: refund }
        };
        Ok(outcome)
    }

    /// Adjudicates a premature-share-release dispute.
    ///
    /// The verdict is Slash iff the evidence share verifies against the
    /// transaction's on-chain key material and the dispute arrives strictly
    /// before the transaction's reveal. The loser pays: a slashed trustee's
    /// collateral goes to the plaintiff; a dismissed plaintiff's stake burns.
    pub fn file_dispute(
        &mut self,
        plaintiff: Address,
        tx_id: u64,
        evidence: DisputeEvidence,
        stake: u64,
    ) -> Result<Verdict, ChainError> {
        if !self.txs.contains_key(&tx_id) {
            // Unknown tx: rejected outright, stake never moves.
            return Err(ChainError::UnknownTx(tx_id));
        }
        if self.balance(&plaintiff) < stake {
            return Err(ChainError::StakeUnfunded);
        }
        let trustee = evidence.trustee_index();
        let pre_reveal = {
            let record = &self.txs[&tx_id];
            record.revealed_at_ms.is_none()
                && !matches!(record.state, TxState::Revealed | TxState::Executed)
        };
        let valid = pre_reveal && self.evidence_verifies(tx_id, &evidence);

        if valid {
            let collateral = self.collateral.get(&trustee).copied().unwrap_or(0);
            if collateral == 0 {
                return Err(ChainError::NoCollateral(trustee));
            }
            self.collateral.insert(trustee, 0);
            *self.balances.entry(plaintiff).or_insert(0) += collateral;
            self.push_event(Some(tx_id), events::DISPUTE_SLASH);
            Ok(Verdict::Slash { trustee, collateral })
        } else {
            *self.balances.get_mut(&plaintiff).expect("stake checked") -= stake;
            self.burned += stake;
            self.push_event(Some(tx_id), events::DISPUTE_DISMISSED);
            let reason = if pre_reveal {
                "evidence does not verify".to_string()
            } else {
                "dispute filed after reveal".to_string()
            };
            Ok(Verdict::Dismissed { reason })
        }
    }

    fn evidence_verifies(&self, tx_id: u64, evidence: &DisputeEvidence) -> bool {
        let record = &self.txs[&tx_id];
        let Some((epoch_keys, _)) = self.epochs.get(&record.tx.epoch) else {
            return false;
        };
        match (record.tx.protocol, evidence) {
            (ProtocolTag::Tdh2, DisputeEvidence::Tdh2(share)) => {
                let Ok(ct) = Tdh2Ciphertext::from_bytes(&record.tx.c_k) else { return false };
                let Some(pk) = &epoch_keys.committee_key else { return false };
                let Some(h_i) = pk.verification_key(share.index) else { return false };
                tdh2::verify_share(&ct, share, h_i)
            }
            (ProtocolTag::Pvss, DisputeEvidence::Pvss(dec)) => {
                let Ok(deal) = PvssDeal::from_bytes(&record.tx.c_k) else { return false };
                let Some(entry) = deal.share(dec.index) else { return false };
                let Some(pk_i) = epoch_keys.roster.get(dec.index as usize - 1) else {
                    return false;
                };
                pvss::verify_dec_share(pk_i, &entry.encrypted, dec)
            }
            _ => false,
        }
    }

    /// Serializes the trace as newline-delimited records.
    pub fn trace_ndjson(&self) -> String {
        let mut out = String::new();
        for event in &self.trace {
            out.push_str(&serde_json::to_string(event).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }
}

/// Epoch-parameter sanity rule: the value extractable by a colluding
/// coalition must stay strictly below the collateral they would lose,
/// `(1 + a) · c · t`, where `c` is per-trustee collateral and `a` the reward
/// rate. Exact rational arithmetic.
pub fn collateral_check(c: u64, a: Fraction, t: u64, max_extractable: u64) -> bool {
    // max < (1+a)·c·t  <=>  max·den < c·t·(den+num)
    let lhs = u128::from(max_extractable) * u128::from(a.den);
    let rhs = u128::from(c) * u128::from(t) * (u128::from(a.den) + u128::from(a.num));
    lhs < rhs
}
