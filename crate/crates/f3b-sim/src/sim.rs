//! The discrete-event driver: one deterministic loop advancing the chain
//! block by block and running the committee against it.
//!
//! Two clocks exist and never mix inside a trace:
//!
//! * **Simulated time** moves only with block production. Shares are
//!   released, aggregated, and revealed in the same simulated instant as the
//!   finality event, because the whole release path (two bus hops plus some
//!   crypto) completes well inside one block time.
//! * **Wall-clock time** is measured around the release path and reported to
//!   benchmarks as the release latency, together with the fixed simulated
//!   bus delay. It never enters a trace, so traces are reproducible from the
//!   seed alone.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::chain::{events, Chain, ChainConfig, ChainError, Receipt, WriteTx};
use crate::msg::{RecordKind, SignedRecord};
use crate::smc::{epoch_material, AggregationTask, Aggregator, Committee, TaskOutcome, TxView};

/// Fixed one-way bus delay between any two actors, in simulated
/// milliseconds. A release round-trip (trustees to aggregator, aggregator to
/// chain) costs two hops.
pub const BUS_HOP_MS: u64 = 100;

#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub chain: ChainConfig,
    pub n: usize,
    pub t: usize,
    pub seed: u64,
    /// Blocks between scheduled reshares; 0 disables them.
    pub epoch_length_blocks: u64,
    /// Bootstrap through the full distributed ceremony instead of the
    /// dealer-based helper.
    pub full_dkg: bool,
}

impl DriverConfig {
    pub fn new(n: usize, t: usize, seed: u64) -> Self {
        DriverConfig {
            chain: ChainConfig::default(),
            n,
            t,
            seed,
            epoch_length_blocks: 0,
            full_dkg: false,
        }
    }
}

/// What one block step did.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub height: u64,
    pub included: Vec<u64>,
    pub finalized: Vec<u64>,
    pub revealed: Vec<u64>,
    pub under_threshold: Vec<(u64, usize)>,
    /// Wall-clock cost of the committee's reaction to this block's inclusions
    /// (key-material verification, share precomputation). Zero when nothing
    /// was included.
    pub inclusion_wall_ms: f64,
    /// Wall-clock cost of this block's release path (share records,
    /// aggregation, reveal execution). Zero when nothing finalized.
    pub reveal_wall_ms: f64,
}

pub struct Driver {
    pub chain: Chain,
    pub committee: Committee,
    pub aggregator: Aggregator,
    pub epoch_length_blocks: u64,
    /// Shares held by the adversary before finality (byzantine leaks).
    pub leaked_records: Vec<SignedRecord>,
    /// Completed release round-trips (one per finalized batch).
    pub round_trips: u64,
    /// Per-batch wall-clock release costs, for benchmarks.
    pub reveal_wall_ms: Vec<f64>,
    rng: StdRng,
}

impl Driver {
    pub fn new(config: DriverConfig) -> Result<Self, ChainError> {
        let mut chain = Chain::new(config.chain)?;
        let mut rng = StdRng::seed_from_u64(config.seed);
        let committee = if config.full_dkg {
            Committee::bootstrap_dkg(config.n, config.t, chain.label().clone(), &mut rng)
        } else {
            Committee::bootstrap(config.n, config.t, chain.label().clone(), &mut rng)
        }
        .map_err(|_| ChainError::BadConfig)?;
        let mut aggregator = Aggregator::new(config.t);
        aggregator.install_epoch(committee.epoch, epoch_material(&committee));
        chain.install_epoch(committee.epoch_keys());
        Ok(Driver {
            chain,
            committee,
            aggregator,
            epoch_length_blocks: config.epoch_length_blocks,
            leaked_records: Vec::new(),
            round_trips: 0,
            reveal_wall_ms: Vec::new(),
            rng,
        })
    }

    /// The deterministic random stream shared by every actor in this run.
    pub fn rng(&mut self) -> &mut StdRng {
        &mut self.rng
    }

    /// Split borrow for clients that read the chain while drawing from the
    /// shared random stream.
    pub fn chain_and_rng(&mut self) -> (&Chain, &mut StdRng) {
        (&self.chain, &mut self.rng)
    }

    pub fn submit(&mut self, tx: WriteTx) -> Result<Receipt, ChainError> {
        self.chain.submit_tx(tx)
    }

    /// Simulated network cost of one release round-trip.
    pub fn bus_round_trip_ms(&self) -> u64 {
        2 * BUS_HOP_MS
    }

    /// Produces the next block and runs the committee's reaction to it:
    /// caching shares for included transactions, resharing on epoch
    /// boundaries, and releasing-aggregating-revealing finalized ones.
    pub fn step(&mut self) -> StepReport {
        let (block, finalized) = self.chain.advance_block();
        let mut report = StepReport { height: block.height, ..StepReport::default() };
        report.included = block.tx_ids.clone();
        report.finalized = finalized.clone();

        // Committee watches inclusions and caches shares.
        let inclusion_start = Instant::now();
        for tx_id in &block.tx_ids {
            let record = self.chain.tx(*tx_id).expect("included txs exist");
            let view = TxView {
                tx_id: *tx_id,
                protocol: record.tx.protocol,
                epoch: record.tx.epoch,
                c_k: &record.tx.c_k.clone(),
            };
            let outcome = self.committee.on_tx_included(&view, &mut self.rng);
            for index in outcome.refusals {
                self.chain
                    .observe_event(Some(*tx_id), &format!("{}:{index}", events::SHARE_REFUSED));
            }
            for leak in outcome.leaks {
                self.chain.observe_event(Some(*tx_id), events::SHARE_LEAKED);
                self.leaked_records.push(leak);
            }
        }
        if !block.tx_ids.is_empty() {
            report.inclusion_wall_ms = inclusion_start.elapsed().as_secs_f64() * 1e3;
        }

        // Scheduled epoch handover.
        if self.epoch_length_blocks > 0 {
            if let Some(result) =
                self.committee.epoch_tick(block.height, self.epoch_length_blocks, &mut self.rng)
            {
                match result {
                    Ok(keys) => {
                        self.aggregator
                            .install_epoch(keys.epoch, epoch_material(&self.committee));
                        self.chain.install_epoch(keys);
                        self.chain.observe_event(None, events::RESHARE_DONE);
                    }
                    Err(_) => {
                        // Epoch extends silently; the alarm is the trace line.
                        self.chain.observe_event(None, events::RESHARE_ABORTED);
                    }
                }
            }
        }

        // Release path: shares out, one bus round-trip, keys back, reveal.
        if !finalized.is_empty() {
            let wall_start = Instant::now();
            let mut records = Vec::new();
            for tx_id in &finalized {
                for record in self.committee.on_tx_finalized(*tx_id) {
                    let event = match record.kind {
                        RecordKind::ShareRelease => events::SHARE_RELEASED,
                        _ => events::SHARE_REFUSED,
                    };
                    self.chain.observe_event(Some(*tx_id), event);
                    records.push(record);
                }
            }
            let tasks: Vec<AggregationTask> = finalized
                .iter()
                .map(|tx_id| {
                    let record = self.chain.tx(*tx_id).expect("finalized txs exist");
                    AggregationTask {
                        tx_id: *tx_id,
                        protocol: record.tx.protocol,
                        c_k: record.tx.c_k.clone(),
                        h_k: record.tx.h_k,
                    }
                })
                .collect();
            self.round_trips += 1;
            let outcomes = self.aggregator.reconstruct_keys(&tasks, &records);
            for (tx_id, outcome) in outcomes {
                match outcome {
                    TaskOutcome::Key(key) => {
                        if self.chain.reveal_and_execute(tx_id, &key).is_ok() {
                            report.revealed.push(tx_id);
                        }
                    }
                    TaskOutcome::UnderThreshold { valid } => {
                        self.chain.observe_event(
                            Some(tx_id),
                            &format!("under_threshold:{valid}"),
                        );
                        report.under_threshold.push((tx_id, valid));
                    }
                }
            }
            let wall = wall_start.elapsed().as_secs_f64() * 1e3;
            report.reveal_wall_ms = wall;
            self.reveal_wall_ms.push(wall);
        }
        report
    }

    /// Steps until no transaction is awaiting inclusion, finality, or reveal,
    /// or `max_blocks` have been produced. Returns the reports.
    pub fn run_until_quiescent(&mut self, max_blocks: u64) -> Vec<StepReport> {
        let mut reports = Vec::new();
        for _ in 0..max_blocks {
            reports.push(self.step());
            if self.chain.open_tx_count() == 0 {
                break;
            }
        }
        reports
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TxState;
    use crate::client::{build_tdh2_tx, SenderKeypair};
    use crate::smc::TrusteeBehavior;
    use rand::rngs::StdRng;

    fn driver(n: usize, t: usize, m: u64, seed: u64) -> Driver {
        let mut config = DriverConfig::new(n, t, seed);
        config.chain.confirmations = m;
        config.chain.block_time_ms = 1000;
        Driver::new(config).unwrap()
    }

    fn submit_transfer(d: &mut Driver, tx_id: u64, seed: u64) -> SenderKeypair {
        let mut client_rng = StdRng::seed_from_u64(seed);
        let sender = SenderKeypair::generate(&mut client_rng);
        d.chain.fund(sender.address(), 1_000_000);
        let inner = sender.transfer(sender.address(), 5, vec![], tx_id);
        let tx = build_tdh2_tx(&sender, &d.chain, 0, &inner, tx_id, true, &mut client_rng).unwrap();
        d.submit(tx).unwrap();
        sender
    }

    #[test]
    fn reveal_lands_exactly_at_finality_time() {
        let mut d = driver(4, 2, 3, 11);
        submit_transfer(&mut d, 1, 100);
        let reports = d.run_until_quiescent(10);
        let record = d.chain.tx(1).unwrap();
        assert_eq!(record.state, TxState::Executed);
        let n = record.included_at.unwrap();
        assert_eq!(record.finalized_at, Some(n + 3));
        assert_eq!(record.revealed_at_ms, Some((n + 3) * 1000));
        assert_eq!(record.revealed_at_ms, record.finalized_at_ms);
        assert_eq!(d.round_trips, 1);
        assert!(reports.iter().any(|r| r.revealed.contains(&1)));
    }

    #[test]
    fn same_seed_same_trace() {
        let run = || {
            let mut d = driver(5, 3, 4, 23);
            submit_transfer(&mut d, 1, 200);
            submit_transfer(&mut d, 2, 201);
            d.run_until_quiescent(12);
            d.chain.trace_ndjson()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn under_threshold_is_reported_and_isolated() {
        let mut d = driver(4, 3, 2, 31);
        // Two silent trustees leave only 2 < t shares for every tx.
        d.committee.set_behavior(1, TrusteeBehavior::Silent);
        d.committee.set_behavior(2, TrusteeBehavior::Silent);
        submit_transfer(&mut d, 1, 300);
        let reports = d.run_until_quiescent(10);
        let under: Vec<_> = reports.iter().flat_map(|r| r.under_threshold.clone()).collect();
        assert_eq!(under, vec![(1, 2)]);
        assert_eq!(d.chain.tx(1).unwrap().state, TxState::Finalized);
        assert!(d
            .chain
            .trace()
            .iter()
            .any(|e| e.event == "under_threshold:2" && e.tx_id == Some(1)));
    }

    #[test]
    fn leaks_are_stashed_and_traced_before_finality() {
        let mut d = driver(4, 2, 5, 41);
        d.committee.set_behavior(2, TrusteeBehavior::LeakEarly);
        submit_transfer(&mut d, 1, 400);
        d.run_until_quiescent(12);
        assert_eq!(d.leaked_records.len(), 1);
        let leak_time = d
            .chain
            .trace()
            .iter()
            .find(|e| e.event == "share_leaked")
            .map(|e| e.sim_time_ms)
            .unwrap();
        let finalized_ms = d.chain.tx(1).unwrap().finalized_at_ms.unwrap();
        assert!(leak_time < finalized_ms);
        // The tx still reveals fine at finality.
        assert_eq!(d.chain.tx(1).unwrap().state, TxState::Executed);
    }

    #[test]
    fn scheduled_reshare_rolls_the_epoch_and_keeps_pipeline_alive() {
        let mut config = DriverConfig::new(5, 3, 59);
        config.chain.confirmations = 6;
        config.chain.block_time_ms = 1000;
        config.epoch_length_blocks = 3;
        let mut d = Driver::new(config).unwrap();
        let pk_before = d.committee.committee_key().pk.to_bytes();
        submit_transfer(&mut d, 1, 500);
        d.run_until_quiescent(20);
        // Two reshares happened while the tx was pending; it still executed.
        assert!(d.chain.current_epoch() >= 2);
        assert_eq!(d.committee.committee_key().pk.to_bytes(), pk_before);
        assert_eq!(d.chain.tx(1).unwrap().state, TxState::Executed);
        assert!(d.chain.trace().iter().any(|e| e.event == "reshare_done"));
    }
}
